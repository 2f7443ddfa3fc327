import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from posg.exceptions import ModelError
from posg.tables import PosgModel

logger = logging.getLogger(__name__)

# Cap per check so a badly broken 18k-state model does not produce a huge report.
MAX_VIOLATIONS_PER_CHECK = 50


@dataclass(frozen=True)
class Violation:
    table: str
    index: tuple
    message: str
    deficit: float = 0.0

    def __str__(self) -> str:
        return f"{self.table}{list(self.index)}: {self.message}"


@dataclass
class ValidationReport:
    model_name: str = ""
    violations: list[Violation] = field(default_factory=list)
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def text(self) -> str:
        if self.is_valid:
            return "model is valid"
        lines = [str(violation) for violation in self.violations]
        if self.truncated:
            lines.append("... further violations omitted")
        return "\n".join(lines)


def _row_checks(report, table_name, rows, tolerance, index_names):
    """rows is an (..., n) array of distributions over its last axis."""
    flat = rows.reshape(-1, rows.shape[-1])
    shape = rows.shape[:-1]
    negative = np.flatnonzero((flat < 0).any(axis=1) | (flat > 1).any(axis=1))
    deficits = 1.0 - flat.sum(axis=1)
    bad_sums = np.flatnonzero(np.abs(deficits) > tolerance)
    nonfinite = np.flatnonzero(~np.isfinite(flat).all(axis=1))
    found = 0
    for position in np.union1d(np.union1d(negative, bad_sums), nonfinite):
        if found >= MAX_VIOLATIONS_PER_CHECK:
            report.truncated = True
            break
        index = tuple(int(i) for i in np.unravel_index(position, shape))
        labelled = ", ".join(f"{n}={i}" for n, i in zip(index_names, index))
        if position in nonfinite:
            message = f"non-finite probability at ({labelled})"
        elif position in negative:
            message = f"probability outside [0, 1] at ({labelled})"
        else:
            message = (
                f"row ({labelled}) sums to {flat[position].sum()!r}, "
                f"deficit {deficits[position]!r}"
            )
        report.violations.append(
            Violation(table_name, index, message, float(deficits[position]))
        )
        found += 1


def validate_model(
    model: PosgModel, tolerance: float | None = None
) -> ValidationReport:
    """
    Lists every violated invariant of ``model``; an empty report means valid.
    Never raises and never mutates the model.
    """
    if tolerance is None:
        tolerance = getattr(settings, "PROBABILITY_TOLERANCE", 1e-9)
    report = ValidationReport(model_name=model.name)

    if not 0.0 < model.discount < 1.0:
        report.violations.append(
            Violation("discount", (), f"discount {model.discount!r} not in (0, 1)")
        )

    if model.is_sparse:
        data = model.transition.data
        if (data < 0).any() or (data > 1).any() or not np.isfinite(data).all():
            report.violations.append(
                Violation("T", (), "sparse transition entries outside [0, 1]")
            )
        sums = model.transition_row_sums()
        deficits = 1.0 - sums
        for position in np.argwhere(np.abs(deficits) > tolerance)[
            :MAX_VIOLATIONS_PER_CHECK
        ]:
            index = tuple(int(i) for i in position)
            report.violations.append(
                Violation(
                    "T",
                    index,
                    f"row (s={index[0]}, u={index[1]}, v={index[2]}) sums to "
                    f"{sums[index]!r}, deficit {deficits[index]!r}",
                    float(deficits[index]),
                )
            )
    else:
        _row_checks(report, "T", model.transition, tolerance, ("s", "u", "v"))

    _row_checks(report, "Z", model.observation, tolerance, ("s'", "u"))
    if model.opponent_observation is not None:
        _row_checks(
            report, "Z_other", model.opponent_observation, tolerance, ("s'", "v")
        )
    _row_checks(report, "b0", model.initial_belief[None, :], tolerance, ("row",))

    if not np.isfinite(model.reward).all():
        report.violations.append(Violation("R", (), "reward has non-finite entries"))
    if model.opponent_reward is not None and not np.isfinite(
        model.opponent_reward
    ).all():
        report.violations.append(
            Violation("R_other", (), "opponent reward has non-finite entries")
        )
    if not model.zero_sum and model.opponent_reward is None:
        report.violations.append(
            Violation("R_other", (), "general-sum model without an opponent reward")
        )

    for table_name, mask in (
        ("legal_self", model.legal_self),
        ("legal_other", model.legal_other),
    ):
        if mask is None:
            continue
        for state in np.flatnonzero(~mask.any(axis=1))[:MAX_VIOLATIONS_PER_CHECK]:
            report.violations.append(
                Violation(table_name, (int(state),), "no legal action")
            )

    if report.violations:
        logger.debug(
            "Model %s failed validation with %d violations",
            model.name or "<unnamed>",
            len(report.violations),
        )
    return report


def ensure_valid(model: PosgModel) -> PosgModel:
    report = validate_model(model)
    if not report.is_valid:
        raise ModelError(report.text())
    return model
