from dataclasses import dataclass

import numpy as np

from lite.belief import BeliefSet
from posg.exceptions import DimensionMismatch, ModelError
from posg.tables import readonly

# Action tag of the horizon-0 zero vector, which prescribes nothing.
NO_ACTION = -1


@dataclass(frozen=True, eq=False)
class AlphaVector:
    weights: np.ndarray
    action: int

    def value(self, b) -> float:
        return float(self.weights @ np.asarray(b, dtype=float))


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """
    Piecewise-linear convex value function: the pointwise max over the rows
    of ``vectors``. ``actions[i]`` is the action tag of row i.
    """

    vectors: np.ndarray
    actions: np.ndarray
    horizon: int
    belief_set: BeliefSet | None = None
    sweep_seconds: tuple[float, ...] = ()

    def __post_init__(self):
        vectors = readonly(self.vectors)
        actions = readonly(self.actions, dtype=int)
        if vectors.ndim != 2 or len(vectors) == 0:
            raise ModelError("a value function needs at least one alpha-vector")
        if actions.shape != (len(vectors),):
            raise DimensionMismatch(
                f"{len(actions)} action tags for {len(vectors)} vectors"
            )
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "sweep_seconds", tuple(self.sweep_seconds))

    def __len__(self) -> int:
        return len(self.vectors)

    def __iter__(self):
        for weights, action in zip(self.vectors, self.actions):
            yield AlphaVector(weights=weights, action=int(action))

    @property
    def n_states(self) -> int:
        return self.vectors.shape[1]

    def values(self, beliefs) -> np.ndarray:
        """value_of for each row of a (N, S) belief array."""
        return (np.asarray(beliefs, dtype=float) @ self.vectors.T).max(axis=1)

    def value_of(self, b) -> float:
        return float((self.vectors @ np.asarray(b, dtype=float)).max())

    def best_vector(self, b) -> AlphaVector:
        index = int(np.argmax(self.vectors @ np.asarray(b, dtype=float)))
        return AlphaVector(weights=self.vectors[index], action=int(self.actions[index]))


def initial_value_function(n_states: int) -> ValueFunction:
    return ValueFunction(
        vectors=np.zeros((1, n_states)), actions=np.array([NO_ACTION]), horizon=0
    )
