import logging
import math
import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from django.conf import settings

from posg.exceptions import DimensionMismatch, MissingLevel, ModelError
from posg.tables import Agent, MdpView, PosgModel, StrategyTable, as_strategy, readonly
from posg.validation import ensure_valid

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class QTable:
    """q[s][u][v]: h-step action values of ``agent`` at ``level``."""

    q: np.ndarray
    horizon: int
    level: int
    agent: Agent
    values: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "q", readonly(self.q))
        if self.values is not None:
            object.__setattr__(self, "values", readonly(self.values))

    def weighted(self, strategy) -> np.ndarray:
        """Per-(s, u) value against the opponent mixture ``strategy``."""
        return np.einsum("suv,sv->su", self.q, np.asarray(strategy))


@dataclass(frozen=True, eq=False)
class NestedPolicyStack:
    """
    Everything solve_nested produced for ``agent`` at ``level``:
    reasoning models keyed by (agent, level), level weights p(0..k-1), the
    level-0 (uniform) prediction of the opponent and the top Q-table.
    """

    agent: Agent
    level: int
    horizon: int
    level_weights: np.ndarray
    reasoning_models: Mapping[tuple[Agent, int], StrategyTable]
    uniform_prediction: StrategyTable
    top: QTable | None = None
    q_tables: Mapping[tuple[Agent, int], QTable] = field(default_factory=dict)
    legal_actions: np.ndarray | None = None
    solve_seconds: float = 0.0

    @property
    def prediction(self) -> StrategyTable:
        return predict_mixed_strategy(self, self.level)

    def policy(self, tol: float | None = None) -> StrategyTable:
        """Reasoning model of the top level: uniform over its optimal actions."""
        if self.top is None:
            raise MissingLevel("stack has no top-level Q-table")
        return reasoning_model_from_q(
            self.top, self.prediction, tol, legal=self.legal_actions
        )


def _legal_weights(legal, n_states: int, n_actions: int) -> np.ndarray | None:
    if legal is None:
        return None
    return np.asarray(legal, dtype=bool).reshape(n_states, n_actions)


def mdp_backup(
    view: MdpView, strategy, prev_values
) -> tuple[np.ndarray, np.ndarray]:
    """
    One strategy-weighted Bellman backup.

    Returns (q, values) with q[s][u][v] = R + discount * E[prev(s')] and
    values[s] = max over legal u of sum_v strategy[s][v] * q[s][u][v].
    """
    strategy = as_strategy(strategy)
    if strategy.probs.shape != (view.n_states, view.n_other):
        raise DimensionMismatch(
            f"strategy shape {strategy.probs.shape} != "
            f"({view.n_states}, {view.n_other})"
        )
    prev_values = np.asarray(prev_values, dtype=float)
    if not np.isfinite(prev_values).all():
        raise ModelError("previous values must be finite")
    q = view.reward + view.discount * view.expected_next(prev_values)
    weighted = np.einsum("suv,sv->su", q, strategy.probs)
    legal = _legal_weights(view.legal_self, view.n_states, view.n_self)
    if legal is not None:
        weighted = np.where(legal, weighted, -np.inf)
    return q, weighted.max(axis=1)


def reasoning_model_from_q(
    q: QTable, strategy_below, tol: float | None = None, legal=None
) -> StrategyTable:
    """
    Uniform distribution over the actions whose strategy-weighted value is
    within ``tol`` of the best one in each state.
    """
    if tol is None:
        tol = getattr(settings, "STRATEGY_TIE_TOLERANCE", 1e-9)
    weighted = q.weighted(as_strategy(strategy_below).probs)
    if legal is not None:
        weighted = np.where(np.asarray(legal, dtype=bool), weighted, -np.inf)
    best = weighted.max(axis=1, keepdims=True)
    optimal = (weighted >= best - tol).astype(float)
    return StrategyTable(optimal / optimal.sum(axis=1, keepdims=True))


def _mixture(models: Sequence[StrategyTable], weights: np.ndarray) -> StrategyTable:
    weights = np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    mixed = np.zeros_like(models[0].probs)
    for weight, model in zip(weights, models):
        mixed = mixed + weight * model.probs
    return StrategyTable(mixed)


def predict_mixed_strategy(stack: NestedPolicyStack, k: int) -> StrategyTable:
    """
    Mixed-strategy prediction of the opponent at level ``k``: uniform at
    level 0, otherwise the p(i)-weighted mixture of reasoning models 0..k-1.
    """
    if k < 0:
        raise ValueError("level must be non-negative")
    if k == 0:
        return stack.uniform_prediction
    opponent = stack.agent.opponent
    missing = [i for i in range(k) if (opponent, i) not in stack.reasoning_models]
    if missing or k > len(stack.level_weights):
        raise MissingLevel(
            f"stack for {stack.agent.value} lacks opponent reasoning models for "
            f"levels {missing or list(range(len(stack.level_weights), k))}"
        )
    models = [stack.reasoning_models[(opponent, i)] for i in range(k)]
    return _mixture(models, stack.level_weights[:k])


class _NestedSolver:
    """Memoized level-k recursion over (agent, level) pairs."""

    def __init__(self, model: PosgModel, horizon: int, weights: np.ndarray, tol):
        self.model = model
        self.horizon = horizon
        self.weights = weights
        self.tol = tol
        self.views = {Agent.SELF: model.view(Agent.SELF)}
        self.q_tables: dict[tuple[Agent, int], QTable] = {}
        self.reasoning: dict[tuple[Agent, int], StrategyTable] = {}
        self.sweeps = 0

    def view(self, agent: Agent) -> MdpView:
        if agent not in self.views:
            self.views[agent] = self.model.view(agent)
        return self.views[agent]

    def uniform(self, agent: Agent) -> StrategyTable:
        """Level-0 prediction of agent's opponent."""
        view = self.view(agent)
        return StrategyTable.uniform(view.n_states, view.n_other, view.legal_other)

    def prediction(self, agent: Agent, level: int) -> StrategyTable:
        if level == 0:
            return self.uniform(agent)
        models = [self.reasoning_model(agent.opponent, i) for i in range(level)]
        return _mixture(models, self.weights[:level])

    def q_table(self, agent: Agent, level: int) -> QTable:
        key = (agent, level)
        if key not in self.q_tables:
            strategy = self.prediction(agent, level)
            view = self.view(agent)
            values = np.zeros(view.n_states)
            q = view.reward
            for _ in range(self.horizon):
                q, values = mdp_backup(view, strategy, values)
                self.sweeps += 1
            self.q_tables[key] = QTable(
                q=q, horizon=self.horizon, level=level, agent=agent, values=values
            )
            logger.debug(
                "Solved %s level %d over %d steps", agent.value, level, self.horizon
            )
        return self.q_tables[key]

    def reasoning_model(self, agent: Agent, level: int) -> StrategyTable:
        key = (agent, level)
        if key not in self.reasoning:
            view = self.view(agent)
            self.reasoning[key] = reasoning_model_from_q(
                self.q_table(agent, level),
                self.prediction(agent, level),
                self.tol,
                legal=view.legal_self,
            )
        return self.reasoning[key]


def solve_nested(
    model: PosgModel,
    agent: Agent = Agent.SELF,
    k: int = 1,
    h: int = 10,
    level_weights: Sequence[float] | None = None,
    tol: float | None = None,
) -> NestedPolicyStack:
    """
    Solves agent's nested MDP at level ``k`` for ``h`` backups, together with
    every lower-level nested MDP it depends on (each solved exactly once).
    """
    if k < 0:
        raise ValueError("level k must be non-negative")
    if h < 1:
        raise ValueError("horizon h must be at least 1")
    ensure_valid(model)
    agent = Agent(agent)
    if level_weights is None:
        weights = np.ones(k)
    else:
        weights = np.asarray(level_weights, dtype=float)
        if weights.shape != (k,) or (weights < 0).any() or (k and weights.sum() <= 0):
            raise ValueError(f"level weights must be {k} non-negative numbers")

    started = time.perf_counter()
    solver = _NestedSolver(model, h, weights, tol)
    top = solver.q_table(agent, k)
    elapsed = time.perf_counter() - started

    # Every opponent level below k is needed for predict_mixed_strategy.
    for i in range(k):
        solver.reasoning_model(agent.opponent, i)
    logger.info(
        "Nested MDP for %s at level %d, horizon %d: %d sweeps in %.3fs",
        agent.value,
        k,
        h,
        solver.sweeps,
        elapsed,
    )
    return NestedPolicyStack(
        agent=agent,
        level=k,
        horizon=h,
        level_weights=readonly(weights / weights.sum() if k else weights),
        reasoning_models=dict(solver.reasoning),
        uniform_prediction=solver.uniform(agent),
        top=top,
        q_tables=dict(solver.q_tables),
        legal_actions=solver.view(agent).legal_self,
        solve_seconds=elapsed,
    )


def solve_mdp(model: PosgModel, h: int, agent: Agent = Agent.SELF) -> NestedPolicyStack:
    """Level 0: plain value iteration against a uniformly random opponent."""
    return solve_nested(model, agent=agent, k=0, h=h)


def horizon_for_tolerance(eps: float, discount: float, r_max: float) -> int:
    """Smallest h with discount**h * r_max / (1 - discount) <= eps."""
    if eps <= 0 or not 0 < discount < 1:
        raise ValueError("eps must be positive and discount in (0, 1)")
    if r_max <= 0:
        return 1
    steps = math.log(eps * (1 - discount) / r_max) / math.log(discount)
    return max(1, math.ceil(steps))
