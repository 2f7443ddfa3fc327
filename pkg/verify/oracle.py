"""
Brute-force references for the planners. Everything here is written with
plain loops over states so it shares no arithmetic with the vectorized code
it checks.
"""

import numpy as np
from django.conf import settings

from posg.exceptions import DimensionMismatch
from posg.tables import PosgModel, as_strategy
from verify.exceptions import OracleTooLarge


def _leaf_count(model: PosgModel, h: int) -> int:
    return (model.n_self * model.n_other * model.n_observations) ** h


def guard_tree_size(model: PosgModel, h: int, limit: int | None = None):
    """Raises OracleTooLarge when the h-step (u, v, o) tree is too big to enumerate."""
    if limit is None:
        limit = getattr(settings, "ORACLE_LEAF_LIMIT", 1_000_000)
    leaves = _leaf_count(model, h)
    if leaves > limit:
        raise OracleTooLarge(leaves, limit)


def _payoff(model, pi, b, u) -> float:
    total = 0.0
    for s in range(model.n_states):
        for v in range(model.n_other):
            total += b[s] * pi[s][v] * model.reward[s][u][v]
    return total


def _successor(model, pi, b, u, v, o) -> tuple[float, list[float]]:
    transition = model.transition_tensor()
    image = []
    for t in range(model.n_states):
        inflow = 0.0
        for s in range(model.n_states):
            inflow += transition[s][u][v][t] * pi[s][v] * b[s]
        image.append(model.observation[t][u][o] * inflow)
    prob = sum(image)
    if prob <= 0:
        return 0.0, image
    return prob, [x / prob for x in image]


def _q_values(model, pi, b, h) -> list[float]:
    q = []
    for u in range(model.n_self):
        total = _payoff(model, pi, b, u)
        if h > 1:
            for v in range(model.n_other):
                for o in range(model.n_observations):
                    prob, following = _successor(model, pi, b, u, v, o)
                    if prob > 0:
                        total += (
                            model.discount
                            * prob
                            * max(_q_values(model, pi, following, h - 1))
                        )
        q.append(total)
    return q


def _inputs(model: PosgModel, strategy, b):
    pi = as_strategy(strategy).probs
    if pi.shape != (model.n_states, model.n_other):
        raise DimensionMismatch(f"strategy shape {pi.shape} does not fit the model")
    b = np.asarray(b, dtype=float)
    if b.shape != (model.n_states,):
        raise DimensionMismatch(f"belief shape {b.shape} does not fit the model")
    return pi.tolist(), b.tolist()


def expectimax_action_values(
    model: PosgModel, strategy, b, h: int, limit: int | None = None
) -> np.ndarray:
    """h-step values of each first action at belief ``b``."""
    if h < 1:
        raise ValueError("action values need a horizon of at least 1")
    guard_tree_size(model, h, limit)
    pi, b = _inputs(model, strategy, b)
    return np.array(_q_values(model, pi, b, h))


def expectimax_oracle(
    model: PosgModel, strategy, b, h: int, limit: int | None = None
) -> float:
    """Exact h-step value at ``b`` against a fixed opponent strategy."""
    if h < 0:
        raise ValueError("horizon must be non-negative")
    if h == 0:
        return 0.0
    return float(expectimax_action_values(model, strategy, b, h, limit).max())
