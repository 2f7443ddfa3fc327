"""
Two-player grid soccer on a 4x5 field.

Player A (our agent) attacks the left goal, player B the right one; both
goals sit off the field next to rows 1 and 2. A state is (A cell, B cell,
ball owner); three absorbing states follow a goal by A, a goal by B, or a
draw. Each step is declared a draw with probability ``draw_probability``;
otherwise the two moves are executed in a random order.
"""

import functools
import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from posg.tables import PosgModel

logger = logging.getLogger(__name__)

ROWS = 4
COLS = 5
GOAL_ROWS = (1, 2)

TOP, DOWN, LEFT, RIGHT, STAND = range(5)
ACTION_NAMES = ("top", "down", "left", "right", "stand")
MOVES = {TOP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1), STAND: (0, 0)}

PLAYER_A = 0
PLAYER_B = 1
# Column step towards each player's goal.
GOAL_DIRECTION = {PLAYER_A: -1, PLAYER_B: 1}

A_START = (1, 3)
B_START = (2, 1)


@dataclass(frozen=True)
class SoccerSpec:
    draw_probability: float = 0.1
    discount: float = 0.9


@dataclass(frozen=True)
class SoccerState:
    a: tuple[int, int]
    b: tuple[int, int]
    owner: int

    def position(self, player: int) -> tuple[int, int]:
        return self.a if player == PLAYER_A else self.b


class SoccerLayout:
    """State numbering of the soccer model."""

    def __init__(self):
        cells = [(r, c) for r in range(ROWS) for c in range(COLS)]
        self.states: list[SoccerState] = [
            SoccerState(a, b, owner)
            for a in cells
            for b in cells
            if a != b
            for owner in (PLAYER_A, PLAYER_B)
        ]
        self._index = {state: i for i, state in enumerate(self.states)}
        self.a_goal = len(self.states)
        self.b_goal = self.a_goal + 1
        self.draw = self.a_goal + 2
        self.n_states = self.draw + 1

    def index(self, state: SoccerState) -> int:
        return self._index[state]

    def decode(self, s: int) -> SoccerState | None:
        """The field configuration of ``s``, or None for the absorbing states."""
        if s >= len(self.states):
            return None
        return self.states[s]

    def is_terminal(self, s: int) -> bool:
        return s >= self.a_goal

    def initial_states(self) -> list[int]:
        return [
            self.index(SoccerState(A_START, B_START, owner))
            for owner in (PLAYER_A, PLAYER_B)
        ]


@functools.lru_cache(maxsize=1)
def soccer_layout() -> SoccerLayout:
    return SoccerLayout()


def _clamp(row: int, col: int) -> tuple[int, int]:
    return min(max(row, 0), ROWS - 1), min(max(col, 0), COLS - 1)


def _move(state: SoccerState, player: int, action: int) -> SoccerState | int:
    """
    One player's move. Returns the new field state, or the scoring player
    when the ball carrier steps into its goal.
    """
    here = state.position(player)
    there = state.position(1 - player)
    d_row, d_col = MOVES[action]
    if (
        state.owner == player
        and d_col == GOAL_DIRECTION[player]
        and here[0] in GOAL_ROWS
        and not 0 <= here[1] + d_col < COLS
    ):
        return player
    target = _clamp(here[0] + d_row, here[1] + d_col)
    if target == there:
        # Bumping hands the ball to the player standing still.
        return SoccerState(state.a, state.b, 1 - player)
    if player == PLAYER_A:
        return SoccerState(target, state.b, state.owner)
    return SoccerState(state.a, target, state.owner)


def play_order(state: SoccerState, u: int, v: int, first: int) -> SoccerState | int:
    """Outcome of executing A's ``u`` and B's ``v`` with ``first`` moving first."""
    actions = {PLAYER_A: u, PLAYER_B: v}
    outcome = _move(state, first, actions[first])
    if isinstance(outcome, int):
        return outcome
    return _move(outcome, 1 - first, actions[1 - first])


def build_soccer(spec: SoccerSpec = SoccerSpec()) -> PosgModel:
    layout = soccer_layout()
    n = layout.n_states
    rows: list[int] = []
    cols: list[int] = []
    probs: list[float] = []
    reward = np.zeros((n, 5, 5))
    goal_state = {PLAYER_A: layout.a_goal, PLAYER_B: layout.b_goal}
    goal_reward = {PLAYER_A: 1.0, PLAYER_B: -1.0}
    play = 1.0 - spec.draw_probability

    def add(s: int, u: int, v: int, following: int, prob: float):
        rows.append((s * 5 + u) * 5 + v)
        cols.append(following)
        probs.append(prob)

    for s, state in enumerate(layout.states):
        for u in range(5):
            for v in range(5):
                add(s, u, v, layout.draw, spec.draw_probability)
                for first in (PLAYER_A, PLAYER_B):
                    outcome = play_order(state, u, v, first)
                    if isinstance(outcome, int):
                        add(s, u, v, goal_state[outcome], 0.5 * play)
                        reward[s, u, v] += 0.5 * play * goal_reward[outcome]
                    else:
                        add(s, u, v, layout.index(outcome), 0.5 * play)
    for s in (layout.a_goal, layout.b_goal, layout.draw):
        for u in range(5):
            for v in range(5):
                add(s, u, v, s, 1.0)
    # Duplicate (row, col) entries are summed.
    transition = sparse.coo_matrix((probs, (rows, cols)), shape=(n * 25, n)).tocsr()
    transition.eliminate_zeros()

    initial_belief = np.zeros(n)
    initial_belief[layout.initial_states()] = 0.5
    logger.debug("Built soccer model with %d states", n)
    return PosgModel(
        transition=transition,
        observation=np.ones((n, 5, 1)),
        reward=reward,
        discount=spec.discount,
        initial_belief=initial_belief,
        zero_sum=True,
        fully_observable=True,
        name="soccer",
    )
