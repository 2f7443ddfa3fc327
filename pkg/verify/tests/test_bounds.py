import csv
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag

from posg.exceptions import DimensionMismatch
from posg.fixtures import random_model
from posg.tables import StrategyTable
from verify.bounds import (
    check_alpha_growth,
    check_belief_gap,
    check_contraction,
    check_oracle_equivalence,
    check_policy_loss_bound,
    evaluate_prediction_policy,
    policy_loss_bound,
    prediction_error,
)
from verify.families import (
    NearDeterministicSpec,
    near_deterministic_model,
    perfectly_observed_model,
)
from verify.oracle import expectimax_oracle
from verify.reports import COLUMNS, make_report, write_bound_reports


class PredictionErrorTests(SimpleTestCase):
    def test_identical_tables(self):
        table = StrategyTable.uniform(3, 2)
        self.assertEqual(prediction_error(table, table), 0.0)

    def test_uniform_against_one_hot(self):
        self.assertEqual(
            prediction_error(StrategyTable.uniform(2, 2), [[1.0, 0.0], [0.0, 1.0]]),
            0.5,
        )

    def test_single_perturbed_entry_matches_a_scan(self):
        rng = np.random.default_rng(3)
        true_probs = rng.dirichlet(np.ones(3), size=4)
        perturbed = true_probs.copy()
        perturbed[2, 1] += 0.3
        perturbed[2] /= perturbed[2].sum()
        scanned = max(
            abs(true_probs[s, v] - perturbed[s, v]) for s in range(4) for v in range(3)
        )
        self.assertEqual(prediction_error(true_probs, perturbed), scanned)

    def test_shapes_must_agree(self):
        with self.assertRaises(DimensionMismatch):
            prediction_error(StrategyTable.uniform(2, 2), StrategyTable.uniform(3, 2))


class PolicyLossTests(SimpleTestCase):
    def test_bound_constants(self):
        model = random_model(seed=0, discount=0.5)
        self.assertAlmostEqual(
            policy_loss_bound(0.1, model, 60), 5.6 * model.r_abs_max, places=9
        )
        self.assertEqual(policy_loss_bound(0.0, model, 3), 0.0)

    def test_exact_prediction_reaches_the_oracle(self):
        model = random_model(seed=2, n_states=3)
        strategy = StrategyTable(np.random.default_rng(0).dirichlet([1, 1], size=3))
        value = evaluate_prediction_policy(model, strategy, strategy, 3)
        exact = expectimax_oracle(model, strategy, model.initial_belief, 3)
        self.assertAlmostEqual(value, exact, delta=1e-9)

    def test_perturbed_predictions_stay_within_the_bound(self):
        model = random_model(seed=5, n_states=3)
        report = check_policy_loss_bound(model, h=3, trials=10, seed=1)
        self.assertTrue(report.passed, report.failures)
        self.assertEqual(report.rows[0].param, 0.0)
        self.assertAlmostEqual(report.rows[0].measured, 0.0, delta=1e-12)
        for row in report.rows:
            self.assertGreaterEqual(row.measured, -1e-9)

    @tag("slow")
    def test_hundred_trials_on_three_state_models(self):
        for seed in range(3):
            model = random_model(seed=seed, n_states=3)
            report = check_policy_loss_bound(model, h=3, trials=100, seed=seed)
            self.assertTrue(report.passed, report.failures)


class BeliefGapTests(SimpleTestCase):
    def test_family_premise(self):
        model = near_deterministic_model(0.1, seed=0)
        self.assertGreaterEqual(model.transition.max(axis=3).min(), 0.95)
        self.assertGreaterEqual(model.observation.max(axis=2).min(), 0.95)
        self.assertAlmostEqual(model.initial_belief[0], 0.9)

    def test_gap_vanishes_without_noise(self):
        report = check_belief_gap(eps_grid=(0.0,), h=3)
        self.assertLessEqual(report.rows[0].measured, 1e-6)
        self.assertTrue(report.passed)

    @tag("slow")
    def test_gap_grows_with_noise(self):
        report = check_belief_gap()
        self.assertLessEqual(report.rows[0].measured, 1e-6)
        self.assertTrue(report.notes["monotone"])
        self.assertTrue(report.passed, report.failures)
        self.assertIsNotNone(report.fitted_constant)

    def test_gap_that_drops_along_the_grid_fails(self):
        with self.assertLogs("verify", "WARNING") as logs:
            report = check_belief_gap(eps_grid=(0.0, 0.2, 0.05), h=3)
        self.assertTrue(all(row.passed for row in report.rows))
        self.assertFalse(report.notes["monotone"])
        self.assertGreater(report.notes["largest_drop"], 1e-6)
        self.assertFalse(report.passed)
        self.assertIn("failed: monotone", report.summary())
        self.assertTrue(any("not monotone" in line for line in logs.output))

    def test_base_spec_sets_the_family_shape(self):
        spec = NearDeterministicSpec(n_states=4, n_actions=3, discount=0.8)
        model = spec.build(0.1, seed=2)
        self.assertEqual(model.n_states, 4)
        self.assertEqual(model.discount, 0.8)
        report = check_belief_gap(eps_grid=(0.0,), base_spec=spec, seed=2, h=2)
        self.assertTrue(report.passed)


class ContractionTests(SimpleTestCase):
    def test_perfectly_observed_model_contracts(self):
        model = perfectly_observed_model(seed=1)
        report = check_contraction(model, n_sweeps=30, seed=1)
        self.assertTrue(report.notes["closed"])
        self.assertEqual(len(report.rows), 30)
        self.assertTrue(report.passed, report.failures)

    def test_error_halves_at_discount_one_half(self):
        model = perfectly_observed_model(seed=2, discount=0.5)
        report = check_contraction(model, n_sweeps=10, proxy_sweeps=200)
        for row in report.rows:
            self.assertLessEqual(row.measured, row.bound + report.tolerance)

    @tag("slow")
    def test_ten_random_models(self):
        """
        Narrower than a sup-norm check over random beliefs on generic models:
        the models are perfectly observed, so the sampled belief set is closed
        and the contraction is measured on that set only.
        """
        for seed in range(10):
            report = check_contraction(perfectly_observed_model(seed=seed), seed=seed)
            self.assertTrue(report.passed, (seed, report.failures))


class OracleEquivalenceTests(SimpleTestCase):
    def test_small_batch(self):
        report = check_oracle_equivalence(n_models=5, seed=3, max_horizon=3)
        self.assertEqual(len(report.rows), 5)
        self.assertTrue(report.passed, report.failures)

    @tag("slow")
    def test_fifty_models(self):
        report = check_oracle_equivalence()
        self.assertTrue(report.passed, report.failures)


class AlphaGrowthTests(SimpleTestCase):
    def test_two_backups(self):
        report = check_alpha_growth()
        self.assertEqual(report.notes["counts"], [2, 32])
        self.assertTrue(report.passed)


class WriteBoundReportsTests(SimpleTestCase):
    def test_one_csv_per_report(self):
        reports = [
            make_report("first", [(0, 0.1, 0.5, 1.0)], 1e-6),
            make_report("second", [(0, 0.0, 2.0, 1.0), (1, 0.2, 0.0, 0.0)], 0.0),
        ]
        with tempfile.TemporaryDirectory() as directory:
            paths = write_bound_reports(reports, Path(directory) / "bounds")
            self.assertEqual([p.name for p in paths], ["first.csv", "second.csv"])
            with open(paths[1], newline="") as handle:
                rows = list(csv.reader(handle))
        self.assertEqual(rows[0], COLUMNS)
        self.assertEqual(rows[1][-1], "false")
        self.assertEqual(float(rows[1][4]), -1.0)
        self.assertEqual(rows[2][-1], "true")
        self.assertFalse(reports[1].passed)
