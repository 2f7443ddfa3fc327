"""
Maximin play for zero-sum games.

Each state's stage game q[s][u][v] is solved for our agent's security
strategy by fictitious play, batched over states. Stage games that still
have a duality gap above ``MAXIMIN_DUALITY_GAP`` after
``MAXIMIN_MAX_ITERATIONS`` rounds are handed to scipy's linprog.
"""

import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from scipy.optimize import linprog

from baselines.exceptions import NotZeroSum
from posg.tables import PosgModel, StrategyTable, readonly
from posg.validation import ensure_valid

logger = logging.getLogger(__name__)

FICTITIOUS = "fictitious"
LINPROG = "linprog"
_CHECK_EVERY = 50


@dataclass(frozen=True, eq=False)
class StageSolution:
    row: np.ndarray
    column: np.ndarray
    value: float
    gap: float
    method: str


@dataclass(frozen=True, eq=False)
class MaximinPolicy:
    strategy: StrategyTable
    opponent: StrategyTable
    values: np.ndarray
    horizon: int


def _linprog_row(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    """max z s.t. p^T A >= z, sum p = 1, p >= 0."""
    n_rows, n_cols = matrix.shape
    cost = np.zeros(n_rows + 1)
    cost[-1] = -1.0
    result = linprog(
        cost,
        A_ub=np.hstack([-matrix.T, np.ones((n_cols, 1))]),
        b_ub=np.zeros(n_cols),
        A_eq=np.hstack([np.ones((1, n_rows)), np.zeros((1, 1))]),
        b_eq=np.ones(1),
        bounds=[(0, None)] * n_rows + [(None, None)],
        method="highs",
    )
    if not result.success:
        raise ArithmeticError(f"linprog failed on a stage game: {result.message}")
    row = np.clip(result.x[:n_rows], 0.0, None)
    return row / row.sum(), float(result.x[-1])


def _solve_linprog(matrix: np.ndarray) -> StageSolution:
    row, value = _linprog_row(matrix)
    column, _ = _linprog_row(-matrix.T)
    lower = float((row @ matrix).min())
    upper = float((matrix @ column).max())
    return StageSolution(row, column, value, max(upper - lower, 0.0), LINPROG)


def _fictitious_play(matrices: np.ndarray, gap: float, max_iterations: int):
    """
    Batched fictitious play over stage games of shape (n, rows, cols).
    Returns row counts, column counts, lower and upper value bounds.
    """
    n, n_rows, n_cols = matrices.shape
    index = np.arange(n)
    row_counts = np.zeros((n, n_rows))
    col_counts = np.zeros((n, n_cols))
    row_payoff = np.zeros((n, n_rows))
    col_payoff = np.zeros((n, n_cols))
    lower = np.full(n, -np.inf)
    upper = np.full(n, np.inf)
    active = index
    for step in range(1, max_iterations + 1):
        i = row_payoff[active].argmax(axis=1)
        row_counts[active, i] += 1
        col_payoff[active] += matrices[active, i, :]
        j = col_payoff[active].argmin(axis=1)
        col_counts[active, j] += 1
        row_payoff[active] += matrices[active, :, j]
        if step % _CHECK_EVERY == 0 or step == max_iterations:
            lower[active] = col_payoff[active].min(axis=1) / step
            upper[active] = row_payoff[active].max(axis=1) / step
            active = active[upper[active] - lower[active] > gap]
            if not len(active):
                break
    return row_counts, col_counts, lower, upper


def _pure_saddles(matrices: np.ndarray):
    row_floor = matrices.min(axis=2)
    col_ceiling = matrices.max(axis=1)
    rows = row_floor.argmax(axis=1)
    cols = col_ceiling.argmin(axis=1)
    index = np.arange(len(matrices))
    found = row_floor[index, rows] == col_ceiling[index, cols]
    return found, rows, cols


def solve_stage_games(
    matrices,
    method: str | None = None,
    gap: float | None = None,
    max_iterations: int | None = None,
) -> list[StageSolution]:
    """Security strategies of the row player for a batch of zero-sum matrices."""
    matrices = np.asarray(matrices, dtype=float)
    if matrices.ndim != 3:
        raise ValueError(f"expected a batch of matrices, got shape {matrices.shape}")
    if method is None:
        method = getattr(settings, "MAXIMIN_METHOD", FICTITIOUS)
    if gap is None:
        gap = getattr(settings, "MAXIMIN_DUALITY_GAP", 1e-4)
    if max_iterations is None:
        max_iterations = getattr(settings, "MAXIMIN_MAX_ITERATIONS", 20_000)
    if method not in (FICTITIOUS, LINPROG):
        raise ValueError(f"unknown stage game method {method!r}")

    n, n_rows, n_cols = matrices.shape
    solutions: list[StageSolution | None] = [None] * n
    found, rows, cols = _pure_saddles(matrices)
    for s in np.flatnonzero(found):
        solutions[s] = StageSolution(
            np.eye(n_rows)[rows[s]],
            np.eye(n_cols)[cols[s]],
            float(matrices[s, rows[s], cols[s]]),
            0.0,
            "saddle",
        )
    mixed = np.flatnonzero(~found)
    if method == FICTITIOUS and len(mixed):
        row_counts, col_counts, lower, upper = _fictitious_play(
            matrices[mixed], gap, max_iterations
        )
        unconverged = []
        for position, s in enumerate(mixed):
            if upper[position] - lower[position] > gap:
                unconverged.append(s)
                continue
            solutions[s] = StageSolution(
                row_counts[position] / row_counts[position].sum(),
                col_counts[position] / col_counts[position].sum(),
                float((lower[position] + upper[position]) / 2),
                float(upper[position] - lower[position]),
                FICTITIOUS,
            )
        if unconverged:
            logger.warning(
                "Fictitious play left %d of %d stage games above gap %g; "
                "falling back to linprog",
                len(unconverged),
                n,
                gap,
            )
        mixed = unconverged
    for s in mixed:
        solutions[s] = _solve_linprog(matrices[s])
    return solutions


def solve_stage_game(matrix, method: str | None = None, **options) -> StageSolution:
    matrix = np.asarray(matrix, dtype=float)
    return solve_stage_games(matrix[None], method, **options)[0]


def _masked(q: np.ndarray, legal_self, legal_other) -> np.ndarray:
    if legal_self is None and legal_other is None:
        return q
    spread = float(q.max() - q.min()) + 1.0
    masked = q.copy()
    if legal_self is not None:
        masked = np.where(legal_self[:, :, None], masked, q.min() - spread)
    if legal_other is not None:
        masked = np.where(legal_other[:, None, :], masked, q.max() + spread)
    return masked


def _restricted(probs: np.ndarray, legal) -> np.ndarray:
    if legal is None:
        return probs
    probs = np.where(legal, probs, 0.0)
    return probs / probs.sum(axis=1, keepdims=True)


def maximin_policy(
    model: PosgModel, h: int, method: str | None = None
) -> MaximinPolicy:
    """
    Value iteration over ``h`` steps in which every state's stage game is
    solved for its maximin mixed strategy.
    """
    if not model.zero_sum:
        raise NotZeroSum(f"maximin play needs a zero-sum game, {model.name!r} is not")
    if h < 1:
        raise ValueError("horizon h must be at least 1")
    ensure_valid(model)
    values = np.zeros(model.n_states)
    for _ in range(h):
        q = model.reward + model.discount * model.expected_next(values)
        solutions = solve_stage_games(
            _masked(q, model.legal_self, model.legal_other), method
        )
        values = np.array([solution.value for solution in solutions])
    rows = _restricted(np.array([sol.row for sol in solutions]), model.legal_self)
    cols = _restricted(np.array([sol.column for sol in solutions]), model.legal_other)
    logger.info(
        "Maximin policy for %s over %d steps (%d stage games per sweep)",
        model.name or "model",
        h,
        model.n_states,
    )
    return MaximinPolicy(
        strategy=StrategyTable(rows),
        opponent=StrategyTable(cols),
        values=readonly(values),
        horizon=h,
    )
