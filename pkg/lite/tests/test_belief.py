from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from lite.belief import (
    BeliefSet,
    belief_update,
    branch_images,
    expected_payoff,
    joint_obs_prob,
)
from lite.exceptions import ImpossibleObservation
from posg.exceptions import DimensionMismatch
from posg.fixtures import random_model
from posg.tables import PosgModel, StrategyTable


def sensing_model(transition, observation, n_other=2) -> PosgModel:
    n_states = transition.shape[0]
    return PosgModel(
        transition=transition,
        observation=observation,
        reward=np.zeros((n_states, transition.shape[1], n_other)),
        discount=0.9,
        initial_belief=np.full(n_states, 1.0 / n_states),
    )


def identity_model(n_states=3, n_actions=2) -> PosgModel:
    """T keeps the state, Z reports it."""
    transition = np.zeros((n_states, n_actions, n_actions, n_states))
    for s in range(n_states):
        transition[s, :, :, s] = 1.0
    observation = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        observation[s, :, s] = 1.0
    return sensing_model(transition, observation, n_other=n_actions)


class ExpectedPayoffTests(SimpleTestCase):
    def test_constant_reward(self):
        base = random_model(seed=1, n_states=3)
        model = PosgModel(
            transition=base.transition,
            observation=base.observation,
            reward=np.full((3, 2, 2), 4.25),
            discount=0.9,
            initial_belief=base.initial_belief,
        )
        strategy = np.random.default_rng(0).dirichlet(np.ones(2), size=3)
        for u in range(2):
            self.assertAlmostEqual(
                expected_payoff([0.2, 0.3, 0.5], u, strategy, model), 4.25, places=12
            )

    def test_degenerate_expectation_picks_one_entry(self):
        model = random_model(seed=2, n_states=3)
        strategy = StrategyTable.one_hot([1, 0, 1], 2)
        self.assertEqual(
            expected_payoff([0.0, 0.0, 1.0], 0, strategy, model), model.reward[2, 0, 1]
        )

    def test_matches_naive_double_sum(self):
        model = random_model(seed=3, n_states=3)
        rng = np.random.default_rng(7)
        strategy = rng.dirichlet(np.ones(2), size=3)
        b = rng.dirichlet(np.ones(3))
        for u in range(2):
            naive = sum(
                model.reward[s, u, v] * strategy[s, v] * b[s]
                for s in range(3)
                for v in range(2)
            )
            self.assertAlmostEqual(
                expected_payoff(b, u, strategy, model), naive, places=12
            )


class JointObservationTests(SimpleTestCase):
    def test_deterministic_dynamics_force_one_branch(self):
        transition = np.zeros((3, 2, 2, 3))
        for s in range(3):
            for u in range(2):
                for v in range(2):
                    transition[s, u, v, (s + u + 2 * v) % 3] = 1.0
        observation = np.zeros((3, 2, 3))
        for s in range(3):
            observation[s, :, s] = 1.0
        model = sensing_model(transition, observation)
        strategy = StrategyTable.one_hot([1, 1, 1], 2)

        # From state 1 with u = 1 and v = 1 the game moves to state 1.
        for v in range(2):
            for o in range(3):
                expected = 1.0 if (v, o) == (1, 1) else 0.0
                self.assertEqual(
                    joint_obs_prob([0, 1, 0], 1, v, o, strategy, model), expected
                )

    def test_branch_probabilities_sum_to_one(self):
        rng = np.random.default_rng(11)
        for seed in range(30):
            model = random_model(seed=seed, n_states=4, n_observations=3)
            strategy = rng.dirichlet(np.ones(2), size=4)
            b = rng.dirichlet(np.ones(4))
            for u in range(2):
                total = sum(
                    joint_obs_prob(b, u, v, o, strategy, model)
                    for v in range(2)
                    for o in range(3)
                )
                self.assertAlmostEqual(total, 1.0, delta=1e-9)

    def test_matches_enumeration_over_state_pairs(self):
        model = random_model(seed=4, n_states=4)
        rng = np.random.default_rng(5)
        strategy = rng.dirichlet(np.ones(2), size=4)
        b = rng.dirichlet(np.ones(4))
        for u, v, o in np.ndindex(2, 2, 2):
            expected = 0.0
            for s in range(4):
                for t in range(4):
                    expected += (
                        model.observation[t, u, o]
                        * model.transition[s, u, v, t]
                        * strategy[s, v]
                        * b[s]
                    )
            self.assertAlmostEqual(
                joint_obs_prob(b, u, v, o, strategy, model), expected, delta=1e-12
            )


class BeliefUpdateTests(SimpleTestCase):
    def test_perfect_sensing_collapses_the_belief(self):
        model = identity_model()
        strategy = StrategyTable.uniform(3, 2)
        updated = belief_update([0.2, 0.5, 0.3], 0, 1, 2, strategy, model)
        np.testing.assert_array_equal(updated.probs, [0.0, 0.0, 1.0])

    def test_uninformative_observation_keeps_the_prediction(self):
        base = random_model(seed=6, n_states=4)
        model = sensing_model(
            np.array(base.transition), np.full((4, 2, 3), 1.0 / 3.0)
        )
        strategy = np.random.default_rng(1).dirichlet(np.ones(2), size=4)
        b = np.array([0.1, 0.2, 0.3, 0.4])
        predicted = np.einsum("s,s,st->t", b, strategy[:, 1], base.transition[:, 0, 1])
        updated = belief_update(b, 0, 1, 2, strategy, model)
        np.testing.assert_allclose(updated.probs, predicted / predicted.sum())

    def test_matches_rational_bayes_rule(self):
        rng = np.random.default_rng(9)
        n = 5
        t_weights = rng.integers(1, 6, size=(n, 2, 2, n))
        z_weights = rng.integers(1, 6, size=(n, 2, 3))
        pi_weights = rng.integers(1, 6, size=(n, 2))
        b_weights = rng.integers(1, 6, size=n)
        model = sensing_model(
            t_weights / t_weights.sum(axis=3, keepdims=True),
            z_weights / z_weights.sum(axis=2, keepdims=True),
        )
        strategy = pi_weights / pi_weights.sum(axis=1, keepdims=True)
        b = b_weights / b_weights.sum()

        def frac(weights, index, axis_total):
            return Fraction(int(weights[index]), int(axis_total))

        u, v, o = 1, 0, 2
        image = []
        for t in range(n):
            inflow = sum(
                frac(t_weights, (s, u, v, t), t_weights[s, u, v].sum())
                * frac(pi_weights, (s, v), pi_weights[s].sum())
                * frac(b_weights, (s,), b_weights.sum())
                for s in range(n)
            )
            image.append(frac(z_weights, (t, u, o), z_weights[t, u].sum()) * inflow)
        total = sum(image)
        exact = [float(x / total) for x in image]

        updated = belief_update(b, u, v, o, strategy, model)
        np.testing.assert_allclose(updated.probs, exact, rtol=0, atol=1e-12)

    def test_updates_stay_normalized(self):
        rng = np.random.default_rng(2024)
        checked = 0
        for seed in range(200):
            model = random_model(seed=seed, n_states=4, n_observations=3)
            strategy = rng.dirichlet(np.ones(2), size=4)
            for _ in range(50):
                b = rng.dirichlet(np.ones(4))
                u = int(rng.integers(2))
                images = branch_images(b, u, strategy, model)
                v, o = (int(x) for x in divmod(int(rng.integers(6)), 3))
                if images[v, o].sum() <= 0:
                    continue
                updated = belief_update(b, u, v, o, strategy, model)
                self.assertAlmostEqual(updated.probs.sum(), 1.0, delta=1e-9)
                checked += 1
        self.assertEqual(checked, 10_000)

    def test_impossible_branch_is_reported(self):
        model = identity_model()
        with self.assertRaises(ImpossibleObservation):
            belief_update([1.0, 0.0, 0.0], 0, 0, 2, StrategyTable.uniform(3, 2), model)

    def test_mismatched_strategy_is_rejected(self):
        with self.assertRaises(DimensionMismatch):
            belief_update(
                [1.0, 0.0, 0.0], 0, 0, 0, StrategyTable.uniform(2, 2), identity_model()
            )


class BeliefSetTests(SimpleTestCase):
    def test_empty_set_is_rejected(self):
        with self.assertRaises(DimensionMismatch):
            BeliefSet(points=np.zeros((0, 3)))

    def test_iterates_beliefs(self):
        points = BeliefSet(points=[[1.0, 0.0], [0.5, 0.5]])
        self.assertEqual([b.probs.tolist() for b in points], [[1.0, 0.0], [0.5, 0.5]])
