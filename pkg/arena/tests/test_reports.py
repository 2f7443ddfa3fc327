import csv
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from arena.metrics import running_metrics
from arena.reports import (
    COMPETITION_COLUMNS,
    METRICS_COLUMNS,
    SOCCER_COLUMNS,
    write_competition_csv,
    write_metrics_csv,
    write_soccer_csv,
)
from arena.services import SoccerMatchResult, run_tournament
from baselines.agents import RandomAgent
from posg.fixtures import random_model


class ReportTests(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.root = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def read(self, path):
        with open(path, newline="") as handle:
            return list(csv.reader(handle))

    def test_competition_csv(self):
        model = random_model(seed=1)
        summary = run_tournament(
            model,
            RandomAgent(model),
            RandomAgent(model.swapped()),
            n_competitions=3,
            seed=5,
        )
        path = write_competition_csv(self.root / "nested" / "runs.csv", summary)
        rows = self.read(path)
        self.assertEqual(rows[0], COMPETITION_COLUMNS)
        self.assertEqual(len(rows), 1 + 3 + 2)
        self.assertEqual([row[1] for row in rows[1:4]], ["0", "1", "2"])
        self.assertEqual(float(rows[1][2]), summary.results[0].returns[0])
        self.assertEqual(rows[4][0], "mean")
        self.assertEqual(float(rows[4][2]), summary.mean[0])
        self.assertEqual(rows[5][0], "halfwidth")

    def test_metrics_csv(self):
        metrics = running_metrics(
            [("cleared", 4), ("accident", 2), ("timeout", 9), ("cleared", 3)]
        )
        rows = self.read(write_metrics_csv(self.root / "metrics.csv", metrics))
        self.assertEqual(rows[0], METRICS_COLUMNS)
        self.assertEqual(len(rows), 5)
        t, travel, accidents, r_d, r_c, m = (float(x) for x in rows[4])
        self.assertEqual(t, 4)
        self.assertEqual(travel, 3.5)
        self.assertEqual(accidents, 1)
        self.assertAlmostEqual(m, 100 * r_c + r_d, places=12)
        self.assertAlmostEqual(r_c, 0.25)
        self.assertEqual(metrics.timeouts, 1)

    def test_soccer_csv(self):
        match = SoccerMatchResult(goals=(7, 3), draws=2, moves=140, games=12)
        rows = self.read(write_soccer_csv(self.root / "soccer.csv", match))
        self.assertEqual(rows, [SOCCER_COLUMNS, ["7", "3", "2", "12", "140"]])
