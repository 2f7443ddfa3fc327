import logging

import numpy as np
from django.conf import settings

from lite.alpha import ValueFunction
from lite.belief import BeliefSet, checked_strategy
from lite.exceptions import BackupTooLarge
from posg.tables import PosgModel

logger = logging.getLogger(__name__)


def reward_vectors(strategy, model: PosgModel) -> np.ndarray:
    """Gamma[u][s] = sum_v strategy(s, v) * R(s, u, v)."""
    pi = checked_strategy(strategy, model).probs
    return np.einsum("sv,suv->us", pi, model.reward)


def projection_kernel(strategy, model: PosgModel) -> np.ndarray:
    """
    M[u][v][o][s][s'] = discount * strategy(s, v) * T(s, u, v, s') * Z(s', u, o).
    Projecting an alpha-vector through the (u, v, o) branch is M[u, v, o] @ alpha.
    """
    pi = checked_strategy(strategy, model).probs
    transition = model.transition_tensor()
    return model.discount * np.einsum(
        "sv,suvt,tuo->uvost", pi, transition, model.observation
    )


def project(vf: ValueFunction, kernel: np.ndarray) -> np.ndarray:
    """G[u][v][o][k][s]: every vector of ``vf`` pulled back through every branch."""
    return np.einsum("uvost,kt->uvoks", kernel, vf.vectors)


def _dedupe(vectors: np.ndarray, actions: np.ndarray, tol: float):
    kept: list[int] = []
    for index, vector in enumerate(vectors):
        if kept and (np.abs(vectors[kept] - vector).max(axis=1) <= tol).any():
            continue
        kept.append(index)
    return vectors[kept], actions[kept]


def pbvi_backup(
    vf: ValueFunction,
    beliefs: BeliefSet,
    strategy,
    model: PosgModel,
    kernel: np.ndarray | None = None,
    dedupe_tol: float | None = None,
) -> ValueFunction:
    """
    Point-based backup: one maximizing alpha-vector per belief point, built
    from the best projected vector of every (u, v, o) branch. Ties between
    vectors and between actions go to the lowest index.
    """
    if dedupe_tol is None:
        dedupe_tol = getattr(settings, "ALPHA_DEDUP_TOLERANCE", 1e-12)
    if kernel is None:
        kernel = projection_kernel(strategy, model)
    points = beliefs.points
    gamma_star = reward_vectors(strategy, model)
    projected = project(vf, kernel)

    scores = np.einsum("uvoks,ns->uvonk", projected, points)
    best = scores.argmax(axis=4)
    chosen = np.take_along_axis(projected, best[..., None], axis=3)
    candidates = gamma_star[:, None, :] + chosen.sum(axis=(1, 2))

    candidate_values = np.einsum("uns,ns->un", candidates, points)
    best_action = candidate_values.argmax(axis=0)
    vectors = candidates[best_action, np.arange(len(points))]
    vectors, actions = _dedupe(vectors, best_action, dedupe_tol)
    logger.debug(
        "Point-based backup to horizon %d: %d points, %d vectors",
        vf.horizon + 1,
        len(points),
        len(vectors),
    )
    return ValueFunction(
        vectors=vectors, actions=actions, horizon=vf.horizon + 1, belief_set=beliefs
    )


def exact_backup_count(vf: ValueFunction, model: PosgModel) -> int:
    return model.n_self * len(vf) ** (model.n_other * model.n_observations)


def exact_backup(
    vf: ValueFunction, strategy, model: PosgModel, cap: int | None = None
) -> ValueFunction:
    """
    Unpruned cross-sum backup: for every u, every way of assigning one vector
    of ``vf`` to each (v, o) branch. Produces exactly |U| * |vf| ** (|V||O|)
    vectors, ordered by u then lexicographically by branch choice.
    """
    if cap is None:
        cap = getattr(settings, "EXACT_BACKUP_CAP", 200_000)
    count = exact_backup_count(vf, model)
    if count > cap:
        raise BackupTooLarge(count, cap)

    gamma_star = reward_vectors(strategy, model)
    projected = project(vf, projection_kernel(strategy, model))
    blocks = []
    for u in range(model.n_self):
        cross = gamma_star[u][None, :]
        for v in range(model.n_other):
            for o in range(model.n_observations):
                cross = (cross[:, None, :] + projected[u, v, o][None, :, :]).reshape(
                    -1, model.n_states
                )
        blocks.append(cross)
    vectors = np.concatenate(blocks)
    actions = np.repeat(np.arange(model.n_self), len(vectors) // model.n_self)
    logger.debug("Exact backup to horizon %d: %d vectors", vf.horizon + 1, count)
    return ValueFunction(vectors=vectors, actions=actions, horizon=vf.horizon + 1)
