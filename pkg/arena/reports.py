import csv
import logging
from pathlib import Path

from arena.metrics import IntersectionMetrics
from arena.services import SoccerMatchResult, TournamentSummary

logger = logging.getLogger(__name__)

COMPETITION_COLUMNS = [
    "seed",
    "competition",
    "return_a",
    "return_b",
    "stages",
    "planning_ms_a",
    "planning_ms_b",
    "acting_ms_a",
    "acting_ms_b",
]
METRICS_COLUMNS = ["t", "T_t", "I_t", "R_d", "R_c", "M_t"]
SOCCER_COLUMNS = ["goals_a", "goals_b", "draws", "games", "moves"]


def _open(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_competition_csv(path, summary: TournamentSummary) -> Path:
    """
    One row per competition, then a ``mean`` and a ``halfwidth`` summary row
    whose return columns hold the tournament statistics.
    """
    path = _open(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(COMPETITION_COLUMNS)
        for result in summary.results:
            writer.writerow(
                [
                    result.seed,
                    "" if result.index is None else result.index,
                    repr(result.returns[0]),
                    repr(result.returns[1]),
                    result.stages,
                    f"{result.planning_ms[0]:.3f}",
                    f"{result.planning_ms[1]:.3f}",
                    f"{result.acting_ms[0]:.3f}",
                    f"{result.acting_ms[1]:.3f}",
                ]
            )
        stages = summary.results[0].stages if summary.results else 0
        for label, values in (
            ("mean", summary.mean),
            ("halfwidth", summary.halfwidth),
        ):
            writer.writerow(
                [label, "", repr(values[0]), repr(values[1]), stages, "", "", "", ""]
            )
    logger.info("Wrote %d competitions to %s", summary.n_competitions, path)
    return path


def write_metrics_csv(path, metrics: IntersectionMetrics) -> Path:
    path = _open(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_COLUMNS)
        writer.writerows(metrics.rows())
    logger.info("Wrote %d episodes of metrics to %s", metrics.n_episodes, path)
    return path


def write_soccer_csv(path, match: SoccerMatchResult) -> Path:
    path = _open(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SOCCER_COLUMNS)
        writer.writerow([*match.goals, match.draws, match.games, match.moves])
    logger.info("Wrote soccer match of %d games to %s", match.games, path)
    return path
