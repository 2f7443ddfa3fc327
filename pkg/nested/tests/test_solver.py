import itertools

import numpy as np
from django.test import SimpleTestCase, tag
from scipy import stats

from environments.intersection import build_intersection
from nested.solver import (
    NestedPolicyStack,
    QTable,
    horizon_for_tolerance,
    mdp_backup,
    predict_mixed_strategy,
    reasoning_model_from_q,
    solve_mdp,
    solve_nested,
)
from posg.exceptions import MissingLevel, StrategyError
from posg.fixtures import (
    CYCLE_LEVEL0_OTHER,
    CYCLE_LEVEL1_Q,
    cycle_model,
    random_model,
    single_state_model,
    two_state_model,
)
from posg.tables import Agent, PosgModel, StrategyTable


def expectimax_values(model: PosgModel, strategy: np.ndarray, depth: int) -> np.ndarray:
    """Walks every (u, v, s') branch of the depth-limited game tree."""

    def value(state: int, remaining: int) -> float:
        if remaining == 0:
            return 0.0
        best = -np.inf
        for u in range(model.n_self):
            total = 0.0
            for v in range(model.n_other):
                future = sum(
                    model.transition[state, u, v, nxt] * value(nxt, remaining - 1)
                    for nxt in range(model.n_states)
                )
                total += strategy[state, v] * (
                    model.reward[state, u, v] + model.discount * future
                )
            best = max(best, total)
        return best

    return np.array([value(s, depth) for s in range(model.n_states)])


class MdpBackupTests(SimpleTestCase):
    def test_zero_values_give_immediate_reward(self):
        model = two_state_model()
        q, _ = mdp_backup(
            model.view(), StrategyTable.uniform(2, 2), np.zeros(model.n_states)
        )
        np.testing.assert_array_equal(q, model.reward)

    def test_single_state_closed_form(self):
        model = single_state_model(reward=1.0, discount=0.5)
        q, values = mdp_backup(model.view(), StrategyTable.uniform(1, 1), [2.0])
        self.assertEqual(q[0, 0, 0], 2.0)
        self.assertEqual(values[0], 2.0)

    def test_matches_brute_force_expectimax(self):
        model = random_model(seed=11, n_states=4)
        strategy = np.random.default_rng(3).dirichlet(np.ones(2), size=4)
        values = np.zeros(4)
        for _ in range(3):
            _, values = mdp_backup(model.view(), strategy, values)
        np.testing.assert_allclose(
            values, expectimax_values(model, strategy, 3), atol=1e-12
        )

    def test_unnormalized_strategy_is_rejected(self):
        model = two_state_model()
        with self.assertRaises(StrategyError):
            mdp_backup(model.view(), np.array([[0.5, 0.4], [0.5, 0.5]]), np.zeros(2))


class ReasoningModelTests(SimpleTestCase):
    def _q(self, weighted_rows):
        # One opponent action, so the weighted value is the q entry itself.
        q = np.asarray(weighted_rows, dtype=float)[:, :, None]
        return QTable(q=q, horizon=1, level=0, agent=Agent.OTHER)

    def test_unique_maximizer_gives_one_hot_rows(self):
        table = reasoning_model_from_q(
            self._q([[1.0, 2.0, 0.0], [5.0, 1.0, 1.0]]), StrategyTable.uniform(2, 1)
        )
        np.testing.assert_array_equal(table.probs, [[0, 1, 0], [1, 0, 0]])

    def test_full_tie_gives_uniform_rows(self):
        table = reasoning_model_from_q(
            self._q([[3.0, 3.0, 3.0]]), StrategyTable.uniform(1, 1)
        )
        np.testing.assert_allclose(table.probs, [[1 / 3, 1 / 3, 1 / 3]])

    def test_near_tie_within_tolerance_is_shared(self):
        table = reasoning_model_from_q(
            self._q([[1.0, 1.0 - 5e-10, 0.0]]), StrategyTable.uniform(1, 1), tol=1e-9
        )
        np.testing.assert_array_equal(table.probs, [[0.5, 0.5, 0.0]])

    def test_illegal_actions_are_never_chosen(self):
        table = reasoning_model_from_q(
            self._q([[9.0, 1.0]]),
            StrategyTable.uniform(1, 1),
            legal=np.array([[False, True]]),
        )
        np.testing.assert_array_equal(table.probs, [[0.0, 1.0]])


class PredictMixedStrategyTests(SimpleTestCase):
    def _stack(self, models, weights):
        return NestedPolicyStack(
            agent=Agent.SELF,
            level=len(weights),
            horizon=1,
            level_weights=np.asarray(weights, dtype=float),
            reasoning_models={(Agent.OTHER, i): m for i, m in enumerate(models)},
            uniform_prediction=StrategyTable.uniform(1, models[0].n_actions),
        )

    def test_level_zero_is_uniform(self):
        stack = solve_nested(single_state_model(n_self=2, n_other=5), k=0, h=1)
        np.testing.assert_allclose(predict_mixed_strategy(stack, 0).probs, 0.2)

    def test_level_one_equals_level_zero_model(self):
        stack = solve_nested(cycle_model(), k=1, h=2)
        np.testing.assert_array_equal(
            predict_mixed_strategy(stack, 1).probs,
            stack.reasoning_models[(Agent.OTHER, 0)].probs,
        )

    def test_level_two_mixes_uniform_and_one_hot(self):
        stack = self._stack(
            [StrategyTable.uniform(1, 2), StrategyTable.one_hot([0], 2)], [0.5, 0.5]
        )
        np.testing.assert_allclose(
            predict_mixed_strategy(stack, 2).probs, [[0.75, 0.25]]
        )

    def test_missing_level_raises(self):
        stack = self._stack([StrategyTable.uniform(1, 2)], [1.0])
        with self.assertRaises(MissingLevel):
            predict_mixed_strategy(stack, 2)


class SolveNestedTests(SimpleTestCase):
    def test_cycle_fixture_matches_hand_unrolled_values(self):
        stack = solve_nested(cycle_model(), k=1, h=2)

        np.testing.assert_array_equal(
            stack.reasoning_models[(Agent.OTHER, 0)].probs, CYCLE_LEVEL0_OTHER
        )
        np.testing.assert_allclose(stack.top.q, CYCLE_LEVEL1_Q, atol=1e-12)
        np.testing.assert_array_equal(stack.level_weights, [1.0])

    def test_level_zero_is_plain_value_iteration(self):
        model = two_state_model()
        uniform = np.full((2, 2), 0.5)
        values = np.zeros(2)
        for _ in range(6):
            q = model.reward + model.discount * model.transition @ values
            values = np.einsum("suv,sv->su", q, uniform).max(axis=1)

        stack = solve_mdp(model, h=6)
        np.testing.assert_allclose(stack.top.q, q, atol=1e-12)
        np.testing.assert_allclose(stack.top.values, values, atol=1e-12)

    def test_values_contract_across_horizons(self):
        model = random_model(seed=5, n_states=6, n_self=3, n_other=3)
        values = [solve_mdp(model, h=h).top.values for h in range(1, 12)]
        for h in range(2, len(values)):
            later = np.abs(values[h] - values[h - 1]).max()
            earlier = np.abs(values[h - 1] - values[h - 2]).max()
            self.assertLessEqual(later, model.discount * earlier + 1e-12)

    def test_greedy_actions_ignore_reward_shift(self):
        model = random_model(seed=8, n_states=5, n_self=3, n_other=3)
        shifted = PosgModel(
            transition=model.transition,
            observation=model.observation,
            reward=model.reward + 7.5,
            discount=model.discount,
            initial_belief=model.initial_belief,
        )
        for k in range(3):
            base = solve_nested(model, k=k, h=15).policy()
            moved = solve_nested(shifted, k=k, h=15).policy()
            np.testing.assert_array_equal(base.probs > 0, moved.probs > 0)

    def test_higher_level_reuses_lower_levels_bit_identically(self):
        model = random_model(seed=21, n_states=5)
        level3 = solve_nested(model, agent=Agent.SELF, k=3, h=8)
        level2 = solve_nested(model, agent=Agent.OTHER, k=2, h=8)
        level1 = solve_nested(model, agent=Agent.SELF, k=1, h=8)

        np.testing.assert_array_equal(
            level3.q_tables[(Agent.OTHER, 2)].q, level2.top.q
        )
        np.testing.assert_array_equal(
            level3.reasoning_models[(Agent.SELF, 1)].probs, level1.policy().probs
        )
        self.assertEqual(
            set(level3.reasoning_models),
            {(Agent.OTHER, 0), (Agent.OTHER, 1), (Agent.OTHER, 2), (Agent.SELF, 0),
             (Agent.SELF, 1)},
        )

    def test_strategy_rows_stay_normalized_at_every_level(self):
        stack = solve_nested(random_model(seed=2, n_states=6), k=4, h=10)
        for table in stack.reasoning_models.values():
            np.testing.assert_allclose(table.probs.sum(axis=1), 1.0, atol=1e-9)

    def test_q_entries_respect_the_horizon_bound(self):
        model = random_model(seed=13, n_states=5, discount=0.8)
        for h in (1, 4, 12):
            stack = solve_nested(model, k=2, h=h)
            bound = model.r_abs_max * (1 - model.discount**h) / (1 - model.discount)
            for table in stack.q_tables.values():
                self.assertLessEqual(np.abs(table.q).max(), bound + 1e-6)

    def test_custom_level_weights_are_normalized(self):
        stack = solve_nested(cycle_model(), k=2, h=3, level_weights=[1.0, 3.0])
        np.testing.assert_allclose(stack.level_weights, [0.25, 0.75])

    def test_invalid_arguments(self):
        with self.assertRaises(ValueError):
            solve_nested(cycle_model(), k=-1, h=2)
        with self.assertRaises(ValueError):
            solve_nested(cycle_model(), k=1, h=0)
        with self.assertRaises(ValueError):
            solve_nested(cycle_model(), k=2, h=2, level_weights=[1.0])

    def test_stack_policy_uses_the_top_prediction(self):
        stack = solve_nested(cycle_model(), k=1, h=2)
        weighted = np.einsum("suv,sv->su", CYCLE_LEVEL1_Q, CYCLE_LEVEL0_OTHER)
        expected = (weighted == weighted.max(axis=1, keepdims=True)).astype(float)
        np.testing.assert_array_equal(stack.policy().probs, expected)


class HorizonForToleranceTests(SimpleTestCase):
    def test_known_value(self):
        self.assertEqual(horizon_for_tolerance(0.01, 0.9, 1.0), 66)

    def test_result_meets_the_tolerance(self):
        for eps, discount, r_max in itertools.product(
            (1e-3, 0.1), (0.5, 0.95, 0.99), (1.0, 100.0)
        ):
            h = horizon_for_tolerance(eps, discount, r_max)
            self.assertLessEqual(discount**h * r_max / (1 - discount), eps)
            if h > 1:
                self.assertGreater(discount ** (h - 1) * r_max / (1 - discount), eps)


@tag("slow")
class IntersectionTimingTests(SimpleTestCase):
    def test_solve_time_grows_linearly_with_horizon(self):
        model = build_intersection()
        horizons = list(range(10, 101, 10))
        seconds = []
        for h in horizons:
            seconds.append(solve_nested(model, k=1, h=h).solve_seconds)
        fit = stats.linregress(horizons, seconds)
        self.assertGreaterEqual(fit.rvalue**2, 0.98)
