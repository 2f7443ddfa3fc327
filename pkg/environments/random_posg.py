import logging
from dataclasses import dataclass

import numpy as np

from posg.exceptions import ModelError
from posg.tables import PosgModel

logger = logging.getLogger(__name__)

SIX_UNIQUE_PLUS_PAIRS = "six-unique-plus-pairs"
ALL_UNIQUE = "all-unique"
BLOCKS = "blocks"
MAPPINGS = (SIX_UNIQUE_PLUS_PAIRS, ALL_UNIQUE, BLOCKS)


@dataclass(frozen=True)
class RandomPosgSpec:
    """
    Seeded zero-sum POSG. Each state has a designated observation that it
    emits with probability ``peak``; the rest of the mass is spread evenly
    over the other observations.

    six-unique-plus-pairs: states 0-5 get observations 0-5, each further
    disjoint pair of states shares one observation.
    all-unique: state i gets observation i.
    blocks: consecutive runs of states share an observation (|O| <= |S|).
    """

    n_states: int = 10
    n_actions: int = 3
    n_observations: int = 8
    peak: float = 0.8
    mapping: str = SIX_UNIQUE_PLUS_PAIRS
    concentration: float = 1.0
    reward_range: float = 10.0
    discount: float = 0.95
    seed: int = 0

    def designated_observations(self) -> np.ndarray:
        if self.mapping == ALL_UNIQUE:
            if self.n_observations != self.n_states:
                raise ModelError(
                    f"all-unique needs one observation per state, got "
                    f"{self.n_observations} for {self.n_states} states"
                )
            if self.peak < 0.8:
                raise ModelError(f"all-unique needs peak >= 0.8, got {self.peak}")
            return np.arange(self.n_states)
        if self.mapping == SIX_UNIQUE_PLUS_PAIRS:
            paired = self.n_states - 6
            if paired < 0 or paired % 2 or self.n_observations != 6 + paired // 2:
                raise ModelError(
                    f"six-unique-plus-pairs cannot map {self.n_states} states onto "
                    f"{self.n_observations} observations"
                )
            return np.concatenate([np.arange(6), 6 + np.arange(paired) // 2])
        if self.mapping == BLOCKS:
            if self.n_observations > self.n_states:
                raise ModelError("blocks needs no more observations than states")
            return np.arange(self.n_states) * self.n_observations // self.n_states
        raise ModelError(f"unknown observation mapping '{self.mapping}'")

    def check(self):
        if self.n_states < 1 or self.n_actions < 1 or self.n_observations < 2:
            raise ModelError("a random POSG needs states, actions and 2+ observations")
        if not 0 < self.peak <= 1:
            raise ModelError(f"peak must lie in (0, 1], got {self.peak}")
        if self.concentration <= 0:
            raise ModelError("Dirichlet concentration must be positive")
        self.designated_observations()


def observation_table(spec: RandomPosgSpec) -> np.ndarray:
    designated = spec.designated_observations()
    residual = (1.0 - spec.peak) / (spec.n_observations - 1)
    rows = np.full((spec.n_states, spec.n_observations), residual)
    rows[np.arange(spec.n_states), designated] = spec.peak
    return np.repeat(rows[:, None, :], spec.n_actions, axis=1)


def generate_random_posg(spec: RandomPosgSpec = RandomPosgSpec()) -> PosgModel:
    spec.check()
    rng = np.random.default_rng(spec.seed)
    shape = (spec.n_states, spec.n_actions, spec.n_actions)
    transition = rng.dirichlet(np.full(spec.n_states, spec.concentration), size=shape)
    reward = rng.uniform(-spec.reward_range, spec.reward_range, size=shape)
    observation = observation_table(spec)
    logger.debug(
        "Generated %d-state POSG (%s, peak %.2f, seed %d)",
        spec.n_states,
        spec.mapping,
        spec.peak,
        spec.seed,
    )
    return PosgModel(
        transition=transition,
        observation=observation,
        reward=reward,
        discount=spec.discount,
        initial_belief=np.full(spec.n_states, 1.0 / spec.n_states),
        zero_sum=True,
        opponent_observation=observation,
        name=f"random-posg-{spec.mapping}-{spec.seed}",
    )
