import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from nested.serializer import dump_stack, load_stack, read_stack, save_stack
from nested.solver import solve_nested
from posg.exceptions import ModelFormatError
from posg.fixtures import cycle_model, random_model
from posg.tables import Agent


class StackSerializerTests(SimpleTestCase):
    def test_reloaded_stack_predicts_and_acts_like_the_original(self):
        stack = solve_nested(random_model(seed=4, n_states=5), k=3, h=6)
        loaded = load_stack(dump_stack(stack))

        self.assertEqual(loaded.agent, Agent.SELF)
        self.assertEqual((loaded.level, loaded.horizon), (3, 6))
        np.testing.assert_array_equal(loaded.top.q, stack.top.q)
        np.testing.assert_array_equal(loaded.prediction.probs, stack.prediction.probs)
        np.testing.assert_array_equal(loaded.policy().probs, stack.policy().probs)
        self.assertEqual(set(loaded.reasoning_models), set(stack.reasoning_models))

    def test_file_round_trip(self):
        stack = solve_nested(cycle_model(), agent=Agent.OTHER, k=1, h=2)
        with tempfile.TemporaryDirectory() as tmp:
            path = save_stack(stack, Path(tmp) / "stacks" / "other.txt")
            loaded = read_stack(path)
        self.assertEqual(loaded.agent, Agent.OTHER)
        np.testing.assert_array_equal(loaded.top.q, stack.top.q)

    def test_missing_header_is_rejected(self):
        with self.assertRaises(ModelFormatError):
            load_stack("agent self\n")

    def test_short_section_reports_its_line(self):
        text = dump_stack(solve_nested(cycle_model(), k=1, h=2))
        lines = text.splitlines()
        uniform_at = lines.index("[uniform]")
        del lines[uniform_at + 1]
        with self.assertRaises(ModelFormatError) as caught:
            load_stack("\n".join(lines))
        self.assertEqual(caught.exception.line, uniform_at + 1)
