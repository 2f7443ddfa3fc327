"""
Belief operators of the factored planner. The opponent's action is never part
of the belief: it is predicted from the strategy table, so b(s, v) is
b(s) * strategy[s][v].
"""

from dataclasses import dataclass

import numpy as np

from lite.exceptions import ImpossibleObservation
from posg.exceptions import DimensionMismatch
from posg.tables import Belief, PosgModel, StrategyTable, as_strategy, readonly


def checked_strategy(strategy, model: PosgModel) -> StrategyTable:
    strategy = as_strategy(strategy)
    if strategy.probs.shape != (model.n_states, model.n_other):
        raise DimensionMismatch(
            f"strategy shape {strategy.probs.shape} != "
            f"({model.n_states}, {model.n_other})"
        )
    return strategy


def _belief_vector(b, model: PosgModel) -> np.ndarray:
    probs = np.asarray(b, dtype=float)
    if probs.shape != (model.n_states,):
        raise DimensionMismatch(
            f"belief over {probs.shape} does not match {model.n_states} states"
        )
    return probs


def expected_payoffs(b, strategy, model: PosgModel) -> np.ndarray:
    """expected_payoff for every action u at once."""
    probs = _belief_vector(b, model)
    pi = checked_strategy(strategy, model).probs
    return np.einsum("s,sv,suv->u", probs, pi, model.reward)


def expected_payoff(b, u: int, strategy, model: PosgModel) -> float:
    """Sum over (s, v) of R(s, u, v) * strategy(s, v) * b(s)."""
    return float(expected_payoffs(b, strategy, model)[u])


def branch_images(b, u: int, strategy, model: PosgModel) -> np.ndarray:
    """
    Unnormalized successor beliefs F[v][o][s'] after our action ``u``:
    Z(s', u, o) * sum_s T(s, u, v, s') * strategy(s, v) * b(s).
    F[v][o].sum() is the joint probability of (v, o).
    """
    probs = _belief_vector(b, model)
    pi = checked_strategy(strategy, model).probs
    transition = model.transition_tensor()
    predicted = np.einsum("s,sv,svt->vt", probs, pi, transition[:, u])
    return predicted[:, None, :] * model.observation[:, u, :].T[None, :, :]


def joint_obs_prob(b, u: int, v: int, o: int, strategy, model: PosgModel) -> float:
    return float(branch_images(b, u, strategy, model)[v, o].sum())


def belief_update(b, u: int, v: int, o: int, strategy, model: PosgModel) -> Belief:
    image = branch_images(b, u, strategy, model)[v, o]
    total = image.sum()
    if total <= 0:
        raise ImpossibleObservation(
            f"opponent action {v} with observation {o} cannot follow action {u}"
        )
    return Belief(image / total)


@dataclass(frozen=True, eq=False)
class BeliefSet:
    """Sampled planning points; ``points`` rows are beliefs, row 0 is b0."""

    points: np.ndarray
    seed: int | None = None
    depth: int = 0
    saturated: bool = False

    def __post_init__(self):
        points = readonly(self.points)
        if points.ndim != 2 or len(points) == 0:
            raise DimensionMismatch("a belief set needs at least one belief row")
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return (Belief(row) for row in self.points)
