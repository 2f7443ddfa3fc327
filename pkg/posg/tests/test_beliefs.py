import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from posg.beliefs import belief_l1_distance, sample_index
from posg.exceptions import DimensionMismatch
from posg.tables import Belief


def _simplex(weights):
    weights = np.asarray(weights, dtype=float) + 1e-3
    return weights / weights.sum()


beliefs = st.lists(st.floats(0.0, 1.0), min_size=4, max_size=4).map(_simplex)


class BeliefDistanceTests(SimpleTestCase):
    def test_identical_beliefs_are_at_zero(self):
        belief = Belief(np.array([0.2, 0.3, 0.5]))
        self.assertEqual(belief_l1_distance(belief, belief), 0.0)

    def test_distinct_point_masses_are_at_two(self):
        self.assertEqual(
            belief_l1_distance(Belief.point_mass(3, 0), Belief.point_mass(3, 2)), 2.0
        )

    def test_worked_example(self):
        self.assertAlmostEqual(belief_l1_distance([0.7, 0.3], [0.5, 0.5]), 0.4)

    def test_dimension_mismatch_raises(self):
        with self.assertRaises(DimensionMismatch):
            belief_l1_distance([1.0, 0.0], [1.0, 0.0, 0.0])

    @settings(max_examples=1000, deadline=None)
    @given(beliefs, beliefs, beliefs)
    def test_triangle_inequality(self, a, b, c):
        self.assertLessEqual(
            belief_l1_distance(a, c),
            belief_l1_distance(a, b) + belief_l1_distance(b, c) + 1e-12,
        )

    @settings(max_examples=200, deadline=None)
    @given(beliefs, beliefs)
    def test_symmetry(self, a, b):
        self.assertEqual(belief_l1_distance(a, b), belief_l1_distance(b, a))


class SampleIndexTests(SimpleTestCase):
    def test_never_picks_zero_probability_entries(self):
        rng = np.random.default_rng(7)
        picks = {sample_index([0.0, 0.3, 0.0, 0.7, 0.0], rng) for _ in range(500)}
        self.assertEqual(picks, {1, 3})

    def test_frequencies_follow_probabilities(self):
        rng = np.random.default_rng(11)
        draws = [sample_index([0.25, 0.75], rng) for _ in range(20000)]
        self.assertAlmostEqual(np.mean(draws), 0.75, delta=0.02)
