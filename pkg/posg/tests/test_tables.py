import numpy as np
from django.test import SimpleTestCase
from scipy import sparse

from posg.exceptions import DimensionMismatch, ModelError, StrategyError
from posg.fixtures import cycle_model, two_state_model
from posg.tables import Agent, Belief, PosgModel, StrategyTable


class PosgModelTests(SimpleTestCase):
    def test_tables_are_read_only(self):
        model = two_state_model()
        with self.assertRaises(ValueError):
            model.reward[0, 0, 0] = 5.0

    def test_shape_mismatch_is_rejected(self):
        model = two_state_model()
        with self.assertRaises(DimensionMismatch):
            PosgModel(
                transition=model.transition,
                observation=model.observation,
                reward=model.reward,
                discount=0.9,
                initial_belief=np.ones(3) / 3,
            )

    def test_reward_extremes(self):
        model = two_state_model()
        self.assertEqual(model.r_max, 3.0)
        self.assertEqual(model.r_min, -2.0)
        self.assertEqual(model.r_abs_max, 3.0)

    def test_swapped_model_exchanges_roles(self):
        model = two_state_model()
        other = model.swapped()

        np.testing.assert_array_equal(
            other.transition, np.array(model.transition).transpose(0, 2, 1, 3)
        )
        np.testing.assert_array_equal(other.reward, -model.reward.transpose(0, 2, 1))
        np.testing.assert_array_equal(other.observation, model.opponent_observation)
        np.testing.assert_array_equal(other.swapped().reward, model.reward)

    def test_sparse_swap_matches_dense_swap(self):
        model = cycle_model()
        flat = np.array(model.transition).reshape(12, 3)
        sparse_model = PosgModel(
            transition=sparse.csr_matrix(flat),
            observation=model.observation,
            reward=model.reward,
            discount=model.discount,
            initial_belief=model.initial_belief,
        )
        dense_other = model.swapped()
        sparse_other = sparse_model.swapped()

        np.testing.assert_array_equal(
            sparse_other.transition.toarray().reshape(3, 2, 2, 3),
            dense_other.transition,
        )
        values = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(
            sparse_model.expected_next(values), model.expected_next(values)
        )

    def test_sparse_model_refuses_dense_access(self):
        model = cycle_model()
        sparse_model = PosgModel(
            transition=sparse.csr_matrix(np.array(model.transition).reshape(12, 3)),
            observation=model.observation,
            reward=model.reward,
            discount=model.discount,
            initial_belief=model.initial_belief,
        )
        with self.assertRaises(ModelError):
            sparse_model.transition_tensor()

    def test_view_of_other_agent_flips_zero_sum_reward(self):
        model = cycle_model()
        view = model.view(Agent.OTHER)

        np.testing.assert_array_equal(view.reward, -model.reward.transpose(0, 2, 1))

    def test_transition_row_lists_support(self):
        model = two_state_model()
        states, probs = model.transition_row(0, 1, 1)

        np.testing.assert_array_equal(states, [1])
        np.testing.assert_array_equal(probs, [1.0])


class StrategyTableTests(SimpleTestCase):
    def test_unnormalized_row_is_rejected(self):
        with self.assertRaisesMessage(StrategyError, "row 1"):
            StrategyTable(np.array([[0.5, 0.5], [0.5, 0.4]]))

    def test_uniform_respects_legal_mask(self):
        legal = [[True, True, True], [True, False, True]]
        table = StrategyTable.uniform(2, 3, legal=legal)

        np.testing.assert_allclose(table.row(0), [1 / 3, 1 / 3, 1 / 3])
        np.testing.assert_allclose(table.row(1), [0.5, 0.0, 0.5])

    def test_belief_requires_normalization(self):
        with self.assertRaises(ModelError):
            Belief(np.array([0.5, 0.6]))
        self.assertEqual(len(Belief.point_mass(4, 2)), 4)
