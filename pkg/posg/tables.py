import enum
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from scipy import sparse

from posg.exceptions import DimensionMismatch, ModelError, StrategyError


class Agent(str, enum.Enum):
    SELF = "self"
    OTHER = "other"

    @property
    def opponent(self) -> "Agent":
        return Agent.OTHER if self is Agent.SELF else Agent.SELF


def _tolerance() -> float:
    return getattr(settings, "PROBABILITY_TOLERANCE", 1e-9)


def readonly(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def _freeze_transition(transition):
    if sparse.issparse(transition):
        matrix = sparse.csr_matrix(transition, dtype=float, copy=True)
        matrix.sort_indices()
        matrix.data.setflags(write=False)
        return matrix
    return readonly(transition)


@dataclass(frozen=True, eq=False)
class PosgModel:
    """
    Tabular two-agent game seen from our agent ("self").

    transition is either a dense (S, U, V, S') tensor or a CSR matrix of
    shape (S*U*V, S') whose row (s*U + u)*V + v holds T[s][u][v][:].
    observation is Z[s'][u][o]; reward is R[s][u][v] for our agent.
    """

    transition: object
    observation: np.ndarray
    reward: np.ndarray
    discount: float
    initial_belief: np.ndarray
    zero_sum: bool = True
    opponent_observation: np.ndarray | None = None
    opponent_reward: np.ndarray | None = None
    legal_self: np.ndarray | None = None
    legal_other: np.ndarray | None = None
    fully_observable: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "transition", _freeze_transition(self.transition))
        for field_name in (
            "observation",
            "reward",
            "initial_belief",
            "opponent_observation",
            "opponent_reward",
        ):
            value = getattr(self, field_name)
            if value is not None:
                object.__setattr__(self, field_name, readonly(value))
        for field_name in ("legal_self", "legal_other"):
            value = getattr(self, field_name)
            if value is not None:
                object.__setattr__(self, field_name, readonly(value, dtype=bool))
        object.__setattr__(self, "discount", float(self.discount))
        object.__setattr__(self, "zero_sum", bool(self.zero_sum))
        self._check_shapes()

    def _check_shapes(self):
        if self.reward.ndim != 3:
            raise DimensionMismatch(
                f"reward must be indexed (s, u, v), got shape {self.reward.shape}"
            )
        n_states, n_self, n_other = self.reward.shape
        if self.is_sparse:
            expected = (n_states * n_self * n_other, n_states)
        else:
            expected = (n_states, n_self, n_other, n_states)
        if tuple(self.transition.shape) != expected:
            raise DimensionMismatch(
                f"transition shape {tuple(self.transition.shape)} != {expected}"
            )
        if self.observation.ndim != 3 or self.observation.shape[:2] != (
            n_states,
            n_self,
        ):
            raise DimensionMismatch(
                f"observation shape {self.observation.shape} does not match "
                f"({n_states}, {n_self}, |O|)"
            )
        if self.initial_belief.shape != (n_states,):
            raise DimensionMismatch(
                f"initial belief has {self.initial_belief.shape}, expected "
                f"({n_states},)"
            )
        if self.opponent_observation is not None and (
            self.opponent_observation.ndim != 3
            or self.opponent_observation.shape[:2] != (n_states, n_other)
        ):
            raise DimensionMismatch(
                f"opponent observation shape {self.opponent_observation.shape} "
                f"does not match ({n_states}, {n_other}, |O|)"
            )
        if (
            self.opponent_reward is not None
            and self.opponent_reward.shape != self.reward.shape
        ):
            raise DimensionMismatch("opponent reward must match the reward shape")
        for mask, width in ((self.legal_self, n_self), (self.legal_other, n_other)):
            if mask is not None and mask.shape != (n_states, width):
                raise DimensionMismatch(
                    f"legal action mask shape {mask.shape} != ({n_states}, {width})"
                )

    # ---------- dimensions ---------- #

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]

    @property
    def n_self(self) -> int:
        return self.reward.shape[1]

    @property
    def n_other(self) -> int:
        return self.reward.shape[2]

    @property
    def n_observations(self) -> int:
        return self.observation.shape[2]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.transition)

    @property
    def r_max(self) -> float:
        return float(self.reward.max())

    @property
    def r_min(self) -> float:
        return float(self.reward.min())

    @property
    def r_abs_max(self) -> float:
        return float(np.abs(self.reward).max())

    # ---------- table access ---------- #

    def transition_tensor(self) -> np.ndarray:
        if self.is_sparse:
            raise ModelError(
                f"model {self.name or '<unnamed>'} stores a sparse transition "
                "table; belief-space operators need a dense one"
            )
        return self.transition

    def transition_row(self, s: int, u: int, v: int) -> tuple[np.ndarray, np.ndarray]:
        """Successor states with positive probability and their probabilities."""
        if self.is_sparse:
            row = (s * self.n_self + u) * self.n_other + v
            start, stop = self.transition.indptr[row], self.transition.indptr[row + 1]
            return (
                self.transition.indices[start:stop],
                self.transition.data[start:stop],
            )
        probs = self.transition[s, u, v]
        support = np.flatnonzero(probs)
        return support, probs[support]

    def transition_row_sums(self) -> np.ndarray:
        if self.is_sparse:
            sums = np.asarray(self.transition.sum(axis=1)).ravel()
            return sums.reshape(self.n_states, self.n_self, self.n_other)
        return self.transition.sum(axis=3)

    def expected_next(self, values) -> np.ndarray:
        """E[values(s') | s, u, v] as an (S, U, V) array."""
        return _expected_next(self.transition, values, self.reward.shape)

    @property
    def other_reward(self) -> np.ndarray:
        if self.opponent_reward is not None:
            return self.opponent_reward
        if self.zero_sum:
            return -self.reward
        raise ModelError(
            f"model {self.name or '<unnamed>'} is general-sum but has no "
            "opponent reward table"
        )

    def other_observation(self) -> np.ndarray:
        if self.opponent_observation is not None:
            return self.opponent_observation
        return np.ones((self.n_states, self.n_other, 1))

    def legal_actions(self, agent: Agent, s: int) -> np.ndarray:
        mask = self.legal_self if agent is Agent.SELF else self.legal_other
        width = self.n_self if agent is Agent.SELF else self.n_other
        if mask is None:
            return np.arange(width)
        return np.flatnonzero(mask[s])

    # ---------- perspectives ---------- #

    def swapped(self) -> "PosgModel":
        """The same game seen by the other agent."""
        if self.is_sparse:
            order = (
                np.arange(self.n_states * self.n_self * self.n_other)
                .reshape(self.n_states, self.n_self, self.n_other)
                .transpose(0, 2, 1)
                .ravel()
            )
            transition = self.transition[order]
        else:
            transition = self.transition.transpose(0, 2, 1, 3)
        return PosgModel(
            transition=transition,
            observation=self.other_observation(),
            reward=self.other_reward.transpose(0, 2, 1),
            discount=self.discount,
            initial_belief=self.initial_belief,
            zero_sum=self.zero_sum,
            opponent_observation=self.observation,
            opponent_reward=None if self.zero_sum else self.reward.transpose(0, 2, 1),
            legal_self=self.legal_other,
            legal_other=self.legal_self,
            fully_observable=self.fully_observable,
            name=self.name,
        )

    def view(self, agent: Agent = Agent.SELF) -> "MdpView":
        model = self if agent is Agent.SELF else self.swapped()
        return MdpView(
            transition=model.transition,
            reward=model.reward,
            discount=model.discount,
            legal_self=model.legal_self,
            legal_other=model.legal_other,
        )


def _expected_next(transition, values, shape) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (shape[0],):
        raise DimensionMismatch(
            f"expected one value per state ({shape[0]}), got {values.shape}"
        )
    if sparse.issparse(transition):
        return (transition @ values).reshape(shape)
    return transition @ values


@dataclass(frozen=True, eq=False)
class MdpView:
    """Fully observable projection of a PosgModel for one agent."""

    transition: object
    reward: np.ndarray
    discount: float
    legal_self: np.ndarray | None = None
    legal_other: np.ndarray | None = None

    @property
    def n_states(self) -> int:
        return self.reward.shape[0]

    @property
    def n_self(self) -> int:
        return self.reward.shape[1]

    @property
    def n_other(self) -> int:
        return self.reward.shape[2]

    def expected_next(self, values) -> np.ndarray:
        return _expected_next(self.transition, values, self.reward.shape)


@dataclass(frozen=True, eq=False)
class Belief:
    probs: np.ndarray

    def __post_init__(self):
        probs = readonly(self.probs)
        if probs.ndim != 1:
            raise DimensionMismatch(f"belief must be a vector, got {probs.shape}")
        if (probs < 0).any():
            raise ModelError("belief has negative entries")
        if abs(probs.sum() - 1.0) > _tolerance():
            raise ModelError(f"belief sums to {probs.sum()!r}, not 1")
        object.__setattr__(self, "probs", probs)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.probs, dtype=dtype)

    def __len__(self) -> int:
        return len(self.probs)

    @classmethod
    def normalized(cls, weights) -> "Belief":
        weights = np.asarray(weights, dtype=float)
        return cls(weights / weights.sum())

    @classmethod
    def point_mass(cls, n_states: int, state: int) -> "Belief":
        probs = np.zeros(n_states)
        probs[state] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, n_states: int) -> "Belief":
        return cls(np.full(n_states, 1.0 / n_states))


@dataclass(frozen=True, eq=False)
class StrategyTable:
    """probs[s][a]: probability that an agent plays a in state s."""

    probs: np.ndarray

    def __post_init__(self):
        probs = readonly(self.probs)
        if probs.ndim != 2:
            raise DimensionMismatch(
                f"strategy must be indexed (s, action), got {probs.shape}"
            )
        if (probs < 0).any():
            state = int(np.argwhere(probs < 0)[0][0])
            raise StrategyError(f"strategy row {state} has negative entries")
        deficits = np.abs(probs.sum(axis=1) - 1.0)
        if (deficits > _tolerance()).any():
            state = int(np.argmax(deficits))
            raise StrategyError(
                f"strategy row {state} sums to {probs[state].sum()!r}, not 1"
            )
        object.__setattr__(self, "probs", probs)

    def __array__(self, dtype=None, copy=None):
        return np.array(self.probs, dtype=dtype)

    @property
    def n_states(self) -> int:
        return self.probs.shape[0]

    @property
    def n_actions(self) -> int:
        return self.probs.shape[1]

    def row(self, state: int) -> np.ndarray:
        return self.probs[state]

    @classmethod
    def uniform(cls, n_states: int, n_actions: int, legal=None) -> "StrategyTable":
        if legal is None:
            return cls(np.full((n_states, n_actions), 1.0 / n_actions))
        legal = np.asarray(legal, dtype=float)
        return cls(legal / legal.sum(axis=1, keepdims=True))

    @classmethod
    def one_hot(cls, actions, n_actions: int) -> "StrategyTable":
        actions = np.asarray(actions, dtype=int)
        probs = np.zeros((len(actions), n_actions))
        probs[np.arange(len(actions)), actions] = 1.0
        return cls(probs)


def as_strategy(value) -> StrategyTable:
    if isinstance(value, StrategyTable):
        return value
    return StrategyTable(value)


def as_belief(value) -> Belief:
    if isinstance(value, Belief):
        return value
    return Belief(value)
