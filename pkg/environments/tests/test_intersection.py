from collections import deque

import numpy as np
from django.test import SimpleTestCase

from environments.intersection import (
    BLOCKED,
    CLEARED,
    FAST,
    FORWARD,
    FORWARD_RIGHT,
    SLOW,
    SPEEDS,
    IntersectionSpec,
    IntersectionState,
    build_intersection,
    hv_accident_risk,
    intersection_layout,
    on_road,
    segments_cross,
)
from posg.validation import validate_model


class IntersectionModelTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.layout = intersection_layout()
        cls.model = build_intersection()

    def test_model_is_valid(self):
        report = validate_model(self.model)
        self.assertTrue(report.is_valid, report.text())

    def test_state_count(self):
        self.assertEqual(self.layout.n_cells, 45)
        self.assertEqual(self.model.n_states, 45 * 45 * 9 + 2)
        self.assertGreater(self.model.n_states, 18000)

    def test_defaults(self):
        self.assertEqual(self.model.discount, 0.99)
        start = self.layout.start
        self.assertEqual(self.model.reward[start, SLOW, SLOW], -1.0)
        self.assertEqual(self.model.initial_belief[start], 1.0)
        self.assertFalse(self.model.zero_sum)
        self.assertTrue(self.model.fully_observable)

    def test_start_state(self):
        state = self.layout.decode(self.layout.start)
        self.assertEqual(state, IntersectionState((6, 3), (3, 0), 1, 1))
        self.assertIsNone(self.layout.decode(self.layout.cleared))

    def test_slow_cars_never_collide(self):
        table = self.layout.accident_table
        for a in range(self.layout.n_cells):
            for h in range(self.layout.n_cells):
                if a != h:
                    self.assertFalse(table[a, SLOW, h, SLOW])

    def test_crossing_diagonals_collide(self):
        index = self.layout.cell_index
        self.assertTrue(segments_cross((4, 3), (3, 4), (3, 3), (4, 4)))
        table = self.layout.accident_table
        self.assertTrue(table[index[4, 3], FORWARD_RIGHT, index[3, 3], FORWARD_RIGHT])

    def test_entering_the_same_cell_collides(self):
        index = self.layout.cell_index
        # AV (4, 3) forward reaches (3, 3); HV (3, 2) forward reaches (3, 3).
        table = self.layout.accident_table
        self.assertTrue(table[index[4, 3], FORWARD, index[3, 2], FORWARD])
        state = IntersectionState((4, 3), (3, 2), 1, 1)
        s = self.layout.index(state)
        targets, _ = self.model.transition_row(s, FORWARD, FORWARD)
        np.testing.assert_array_equal(targets, [self.layout.accident])
        self.assertEqual(self.model.reward[s, FORWARD, FORWARD], -101.0)

    def test_minimum_actions_to_clear_is_three(self):
        layout = self.layout
        start = (layout.cell_index[6, 3], 1)
        depth = {start: 0}
        queue = deque([start])
        cleared_at = None
        while queue and cleared_at is None:
            cell, speed = queue.popleft()
            for action in np.flatnonzero(layout.legal_av[cell, speed]):
                target = layout.av_target[cell, action]
                if target == CLEARED:
                    cleared_at = depth[cell, speed] + 1
                    break
                following = (int(target), int(SPEEDS[action]))
                if following not in depth:
                    depth[following] = depth[cell, speed] + 1
                    queue.append(following)
        self.assertEqual(cleared_at, 3)

    def test_speed_changes_are_limited(self):
        a = self.layout.cell_index[6, 3]
        self.assertFalse(self.layout.legal_av[a, 0, FAST])
        self.assertFalse(self.layout.legal_av[a, 2, SLOW])
        self.assertTrue(self.layout.legal_av[a, 1].all())
        self.assertEqual(self.layout.executed_av[a, 0, FAST], FORWARD)

    def test_legal_moves_stay_on_the_road(self):
        for a, cell in enumerate(self.layout.cells):
            for action in range(5):
                target = self.layout.hv_target[a, action]
                if target != BLOCKED:
                    self.assertTrue(on_road(*self.layout.cells[target]))
        self.assertTrue(self.layout.legal_av.any(axis=2).all())
        self.assertTrue(self.layout.legal_hv.any(axis=2).all())

    def test_hv_reward_ignores_the_av_action(self):
        reward = self.model.other_reward
        np.testing.assert_array_equal(reward, np.repeat(reward[:, :1], 5, axis=1))
        self.assertEqual(set(np.unique(reward)), {-100.0, 0.0})

    def test_hv_pays_only_for_reckless_actions(self):
        # Against a uniform AV at (4, 3): slow 1/5, forward-right 1, forward-left
        # 2/5, forward 3/5, fast-forward 4/5.
        s = self.layout.index(IntersectionState((4, 3), (3, 2), 1, 1))
        np.testing.assert_array_equal(
            self.model.other_reward[s, FORWARD], [0.0, -100.0, 0.0, 0.0, -100.0]
        )
        cautious = build_intersection(IntersectionSpec(hv_risk_margin=0.1))
        np.testing.assert_array_equal(
            cautious.other_reward[s, SLOW], [0.0, -100.0, -100.0, -100.0, -100.0]
        )
        np.testing.assert_array_equal(
            hv_accident_risk([[[True, False], [False, True]]], [[True, True]]),
            [[0.5, 0.5]],
        )

    def test_terminal_states_absorb_without_reward(self):
        for terminal in (self.layout.cleared, self.layout.accident):
            targets, probs = self.model.transition_row(terminal, FAST, SLOW)
            np.testing.assert_array_equal(targets, [terminal])
            self.assertEqual(np.abs(self.model.reward[terminal]).max(), 0.0)
