"""Parameterized model families the bound checks run on."""

from dataclasses import dataclass

import numpy as np

from posg.fixtures import random_model
from posg.tables import PosgModel


@dataclass(frozen=True)
class NearDeterministicSpec:
    """Shape of a near-deterministic family; ``eps`` and the seed vary per model."""

    n_states: int = 3
    n_actions: int = 2
    discount: float = 0.9

    def build(self, eps: float, seed: int = 0) -> PosgModel:
        return near_deterministic_model(
            eps, seed, self.n_states, self.n_actions, self.discount
        )


def near_deterministic_model(
    eps: float,
    seed: int = 0,
    n_states: int = 3,
    n_actions: int = 2,
    discount: float = 0.9,
) -> PosgModel:
    """
    Every (s, u, v) moves to one seeded target state with probability
    1 - eps/2, and every state is observed as itself with probability
    1 - eps/2; the rest is spread evenly. The seed fixes targets and rewards,
    so models for different ``eps`` share their structure.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    shape = (n_states, n_actions, n_actions)
    targets = rng.integers(n_states, size=shape)
    reward = rng.uniform(-1.0, 1.0, size=shape)

    spread = eps / 2 / (n_states - 1)
    transition = np.full((*shape, n_states), spread)
    np.put_along_axis(transition, targets[..., None], 1.0 - eps / 2, axis=3)
    sensing = np.full((n_states, n_states), spread)
    np.fill_diagonal(sensing, 1.0 - eps / 2)
    observation = np.repeat(sensing[:, None, :], n_actions, axis=1)
    return PosgModel(
        transition=transition,
        observation=observation,
        reward=reward,
        discount=discount,
        initial_belief=near_point_mass(eps, 0, n_states),
        zero_sum=True,
        name=f"near-deterministic-{eps:g}",
    )


def near_point_mass(eps: float, state: int, n_states: int) -> np.ndarray:
    """Belief with mass 1 - eps on ``state``, the rest spread evenly."""
    b = np.full(n_states, eps / (n_states - 1))
    b[state] = 1.0 - eps
    return b


def perfectly_observed_model(seed: int, n_states: int = 3, **options) -> PosgModel:
    """
    A seeded random game whose observation reveals the next state, so the
    beliefs reachable from b0 are b0 and the point masses.
    """
    base = random_model(seed=seed, n_states=n_states, **options)
    observation = np.zeros((n_states, base.n_self, n_states))
    observation[np.arange(n_states), :, np.arange(n_states)] = 1.0
    return PosgModel(
        transition=base.transition,
        observation=observation,
        reward=base.reward,
        discount=base.discount,
        initial_belief=base.initial_belief,
        zero_sum=True,
        name=f"perfectly-observed-{seed}",
    )
