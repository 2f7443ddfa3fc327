"""Small hand-checkable games shared by the test suites."""

import numpy as np

from posg.tables import PosgModel

# Three-state cyclic game: s' = (s + u + v) mod 3, zero-sum, discount 0.5.
CYCLE_REWARD = np.array(
    [
        [[1.0, 0.0], [0.0, 2.0]],
        [[0.0, 1.0], [3.0, 0.0]],
        [[2.0, 2.0], [0.0, 1.0]],
    ]
)

# Level-0 reasoning model of the other agent at horizon 2 (one-hot per state).
CYCLE_LEVEL0_OTHER = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])

# Level-1 top Q-table of our agent at horizon 2, unrolled by hand.
CYCLE_LEVEL1_Q = np.array(
    [
        [[1.5, 0.5], [0.5, 3.0]],
        [[0.5, 2.0], [4.0, 0.5]],
        [[3.0, 2.5], [0.5, 1.5]],
    ]
)


def cycle_model() -> PosgModel:
    transition = np.zeros((3, 2, 2, 3))
    for s in range(3):
        for u in range(2):
            for v in range(2):
                transition[s, u, v, (s + u + v) % 3] = 1.0
    return PosgModel(
        transition=transition,
        observation=np.ones((3, 2, 1)),
        reward=CYCLE_REWARD,
        discount=0.5,
        initial_belief=np.full(3, 1.0 / 3.0),
        zero_sum=True,
        name="cycle",
    )


def single_state_model(
    reward: float = 1.0,
    discount: float = 0.5,
    n_self: int = 1,
    n_other: int = 1,
    n_observations: int = 1,
) -> PosgModel:
    return PosgModel(
        transition=np.ones((1, n_self, n_other, 1)),
        observation=np.full((1, n_self, n_observations), 1.0 / n_observations),
        reward=np.full((1, n_self, n_other), float(reward)),
        discount=discount,
        initial_belief=np.ones(1),
        zero_sum=True,
        name="single-state",
    )


def matching_pennies(discount: float = 0.9) -> PosgModel:
    return PosgModel(
        transition=np.ones((1, 2, 2, 1)),
        observation=np.ones((1, 2, 1)),
        reward=np.array([[[1.0, -1.0], [-1.0, 1.0]]]),
        discount=discount,
        initial_belief=np.ones(1),
        zero_sum=True,
        name="matching-pennies",
    )


def two_state_model() -> PosgModel:
    """A well-formed 2-state, 2-action, 2-observation game."""
    transition = np.array(
        [
            [[[0.9, 0.1], [0.5, 0.5]], [[0.2, 0.8], [0.0, 1.0]]],
            [[[0.3, 0.7], [1.0, 0.0]], [[0.6, 0.4], [0.25, 0.75]]],
        ]
    )
    observation = np.array([[[0.85, 0.15], [0.7, 0.3]], [[0.1, 0.9], [0.4, 0.6]]])
    reward = np.array([[[1.0, -1.0], [0.5, 0.0]], [[-2.0, 1.5], [0.0, 3.0]]])
    return PosgModel(
        transition=transition,
        observation=observation,
        reward=reward,
        discount=0.9,
        initial_belief=np.array([0.5, 0.5]),
        zero_sum=True,
        opponent_observation=observation[:, ::-1, :],
        name="two-state",
    )


def random_model(
    seed: int,
    n_states: int = 4,
    n_self: int = 2,
    n_other: int = 2,
    n_observations: int = 2,
    discount: float = 0.9,
) -> PosgModel:
    """Dense zero-sum game with Dirichlet rows and rewards in [-1, 1]."""
    rng = np.random.default_rng(seed)
    transition = rng.dirichlet(np.ones(n_states), size=(n_states, n_self, n_other))
    observation = rng.dirichlet(np.ones(n_observations), size=(n_states, n_self))
    reward = rng.uniform(-1.0, 1.0, size=(n_states, n_self, n_other))
    initial_belief = rng.dirichlet(np.ones(n_states))
    return PosgModel(
        transition=transition,
        observation=observation,
        reward=reward,
        discount=discount,
        initial_belief=initial_belief,
        zero_sum=True,
        name=f"random-{seed}",
    )
