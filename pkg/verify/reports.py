import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

COLUMNS = ["trial", "param", "measured", "bound", "slack", "pass"]


@dataclass(frozen=True)
class BoundRow:
    trial: int
    param: float
    measured: float
    bound: float
    tolerance: float = 0.0

    @property
    def slack(self) -> float:
        return self.bound - self.measured

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound + self.tolerance


@dataclass(frozen=True)
class BoundReport:
    """Measured quantity against its bound, one row per trial."""

    name: str
    rows: tuple[BoundRow, ...]
    tolerance: float
    fitted_constant: float | None = None
    notes: dict = field(default_factory=dict)
    # Named conditions on the whole series, e.g. monotonicity.
    conditions: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows) and all(self.conditions.values())

    @property
    def failed_conditions(self) -> list[str]:
        return [name for name, held in self.conditions.items() if not held]

    @property
    def failures(self) -> list[BoundRow]:
        return [row for row in self.rows if not row.passed]

    @property
    def worst_slack(self) -> float:
        return min((row.slack for row in self.rows), default=float("inf"))

    def summary(self) -> str:
        text = (
            f"{self.name}: {len(self.rows) - len(self.failures)}/{len(self.rows)} "
            f"rows within tolerance {self.tolerance:g}"
        )
        if self.fitted_constant is not None:
            text += f", fitted constant {self.fitted_constant:.4g}"
        if self.failed_conditions:
            text += f"; failed: {', '.join(self.failed_conditions)}"
        return text


def make_report(
    name, rows, tolerance, fitted_constant=None, conditions=None, **notes
) -> BoundReport:
    rows = tuple(
        BoundRow(int(trial), float(param), float(measured), float(bound), tolerance)
        for trial, param, measured, bound in rows
    )
    report = BoundReport(
        name, rows, tolerance, fitted_constant, notes, conditions or {}
    )
    log = logger.info if report.passed else logger.warning
    log(report.summary())
    return report


def write_bound_reports(reports, directory) -> list[Path]:
    """Writes ``<name>.csv`` per report into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for report in reports:
        path = directory / f"{report.name}.csv"
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(COLUMNS)
            for row in report.rows:
                writer.writerow(
                    [
                        row.trial,
                        repr(row.param),
                        repr(row.measured),
                        repr(row.bound),
                        repr(row.slack),
                        "true" if row.passed else "false",
                    ]
                )
        paths.append(path)
    return paths
