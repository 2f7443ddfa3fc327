import numpy as np

from posg.exceptions import DimensionMismatch


def belief_l1_distance(a, b) -> float:
    """Sum over states of |a(s) - b(s)|; accepts Belief objects or arrays."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"beliefs over {a.shape} and {b.shape} differ")
    return float(np.abs(a - b).sum())


def min_l1_distance(point, points) -> float:
    """Smallest L1 distance from ``point`` to the rows of ``points``."""
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return float("inf")
    return float(np.abs(points - np.asarray(point, dtype=float)).sum(axis=1).min())


def sample_index(probs, rng: np.random.Generator) -> int:
    """
    Draws one index from an unnormalized probability vector.
    Consumes exactly one uniform draw from ``rng``.
    """
    cumulative = np.cumsum(probs)
    draw = rng.random() * cumulative[-1]
    index = int(np.searchsorted(cumulative, draw, side="right"))
    return min(index, len(cumulative) - 1)
