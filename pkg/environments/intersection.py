"""
Unsignalized intersection on a 7x7 grid whose four corner cells are walls.

The autonomous vehicle (AV, our agent) drives north up column 3 from (6, 3)
and clears the intersection when it reaches row 0. The human-driven vehicle
(HV) drives east along row 3 from (3, 0) and parks at column 6. A state is
(AV cell, HV cell, AV speed, HV speed) plus the absorbing ``cleared`` and
``accident`` states. Moves are simultaneous and deterministic.

Actions, with the displacement for each heading (row, col):

    action          speed   AV (north)   HV (east)
    slow              0      (0, 0)       (0, 0)
    forward-right     1     (-1, +1)     (+1, +1)
    forward-left      1     (-1, -1)     (-1, +1)
    forward           1     (-1, 0)      (0, +1)
    fast-forward      2     (-2, 0)      (0, +2)

An action is legal when its speed differs from the current speed by at most
one and every cell it passes through is on the road. An illegal choice is
executed as forward when that is legal, otherwise as the lowest legal action.

The AV pays the delay cost every step and the accident cost on a crash. The
HV's reward models a driver who only looks one step ahead: it pays the
accident cost for picking an action that is markedly riskier than its safest
one, risk being measured against an AV that acts uniformly.
"""

import functools
import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from posg.tables import PosgModel

logger = logging.getLogger(__name__)

SIZE = 7
WALLS = frozenset({(0, 0), (0, SIZE - 1), (SIZE - 1, 0), (SIZE - 1, SIZE - 1)})

SLOW, FORWARD_RIGHT, FORWARD_LEFT, FORWARD, FAST = range(5)
ACTION_NAMES = ("slow", "forward-right", "forward-left", "forward", "fast-forward")
SPEEDS = np.array([0, 1, 1, 1, 2])
N_SPEEDS = 3

AV_MOVES = ((0, 0), (-1, 1), (-1, -1), (-1, 0), (-2, 0))
HV_MOVES = ((0, 0), (1, 1), (-1, 1), (0, 1), (0, 2))

AV_START = (6, 3)
HV_START = (3, 0)
START_SPEED = 1
HV_PARKED_COLUMN = SIZE - 1

CLEARED = -1
BLOCKED = -2


@dataclass(frozen=True)
class IntersectionSpec:
    """
    ``hv_risk_margin`` shapes the HV model the AV reasons over: an HV action
    whose accident risk exceeds that of the safest legal action by more than
    the margin costs the HV ``accident_cost``; every other action is free.
    """

    delay_cost: float = 1.0
    accident_cost: float = 100.0
    discount: float = 0.99
    hv_risk_margin: float = 0.5


@dataclass(frozen=True)
class IntersectionState:
    av: tuple[int, int]
    hv: tuple[int, int]
    av_speed: int
    hv_speed: int


def on_road(row: int, col: int) -> bool:
    return 0 <= row < SIZE and 0 <= col < SIZE and (row, col) not in WALLS


def _path(start, move):
    """Cells visited by a move, start included, in continuous order."""
    d_row, d_col = move
    steps = max(abs(d_row), abs(d_col))
    if steps == 0:
        return [start]
    return [
        (start[0] + d_row * i // steps, start[1] + d_col * i // steps)
        for i in range(steps + 1)
    ]


def _orientation(p, q, r) -> int:
    cross = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    return (cross > 0) - (cross < 0)


def segments_cross(p1, p2, q1, q2) -> bool:
    """Proper crossing of segments p1-p2 and q1-q2 (shared endpoints excluded)."""
    if p1 == p2 or q1 == q2:
        return False
    return (
        _orientation(p1, p2, q1) * _orientation(p1, p2, q2) < 0
        and _orientation(q1, q2, p1) * _orientation(q1, q2, p2) < 0
    )


class IntersectionLayout:
    """Cell numbering, move tables and the accident predicate."""

    def __init__(self):
        self.cells = [(r, c) for r in range(SIZE) for c in range(SIZE) if on_road(r, c)]
        self.cell_index = {cell: i for i, cell in enumerate(self.cells)}
        n_cells = len(self.cells)
        self.n_cells = n_cells
        self.n_regular = n_cells * n_cells * N_SPEEDS * N_SPEEDS
        self.cleared = self.n_regular
        self.accident = self.n_regular + 1
        self.n_states = self.n_regular + 2

        self.av_target = np.full((n_cells, 5), BLOCKED)
        self.hv_target = np.full((n_cells, 5), BLOCKED)
        self.av_segment: dict[tuple[int, int], tuple] = {}
        self.hv_segment: dict[tuple[int, int], tuple] = {}
        self.av_cells: dict[tuple[int, int], frozenset] = {}
        self.hv_cells: dict[tuple[int, int], frozenset] = {}
        for i, cell in enumerate(self.cells):
            for action in range(5):
                self._add_av_move(i, cell, action)
                self._add_hv_move(i, cell, action)

        self.legal_av = self._legality(self.av_target)
        self.legal_hv = self._legality(self.hv_target)
        self.executed_av = self._executed(self.legal_av)
        self.executed_hv = self._executed(self.legal_hv)
        self.accident_table = self._accidents()

    # ---------- moves ---------- #

    def _add_av_move(self, i, cell, action):
        path = _path(cell, AV_MOVES[action])
        if any(
            not (on_road(r, c) if r >= 0 else 0 <= c < SIZE) for r, c in path
        ):
            return
        end = path[-1]
        self.av_target[i, action] = CLEARED if end[0] <= 0 else self.cell_index[end]
        self.av_cells[i, action] = frozenset(
            self.cell_index[p] for p in path if p[0] >= 0
        )
        self.av_segment[i, action] = (cell, end)

    def _add_hv_move(self, i, cell, action):
        path = [(r, min(c, HV_PARKED_COLUMN)) for r, c in _path(cell, HV_MOVES[action])]
        if any(not on_road(r, c) for r, c in path):
            return
        self.hv_target[i, action] = self.cell_index[path[-1]]
        self.hv_cells[i, action] = frozenset(self.cell_index[p] for p in path)
        self.hv_segment[i, action] = (cell, path[-1])

    def _legality(self, targets: np.ndarray) -> np.ndarray:
        """legal[cell][speed][action]."""
        speed_ok = np.abs(SPEEDS[None, :] - np.arange(N_SPEEDS)[:, None]) <= 1
        legal = (targets != BLOCKED)[:, None, :] & speed_ok[None, :, :]
        stuck = ~legal.any(axis=2)
        legal[stuck, SLOW] = True
        return legal

    @staticmethod
    def _executed(legal: np.ndarray) -> np.ndarray:
        fallback = np.where(legal[..., FORWARD], FORWARD, legal.argmax(axis=2))
        return np.where(legal, np.arange(5), fallback[..., None])

    def _accidents(self) -> np.ndarray:
        """accident[av cell][av action][hv cell][hv action] for feasible moves."""
        n = self.n_cells
        table = np.zeros((n, 5, n, 5), dtype=bool)
        for (a, u), av_cells in self.av_cells.items():
            av_segment = self.av_segment[a, u]
            for (h, v), hv_cells in self.hv_cells.items():
                table[a, u, h, v] = bool(av_cells & hv_cells) or segments_cross(
                    *av_segment, *self.hv_segment[h, v]
                )
        return table

    # ---------- states ---------- #

    def index(self, state: IntersectionState) -> int:
        a = self.cell_index[state.av]
        h = self.cell_index[state.hv]
        return ((a * self.n_cells + h) * N_SPEEDS + state.av_speed) * N_SPEEDS + (
            state.hv_speed
        )

    def components(self, s):
        """(av cell, hv cell, av speed, hv speed) indices of regular state(s)."""
        s = np.asarray(s)
        hv_speed = s % N_SPEEDS
        av_speed = (s // N_SPEEDS) % N_SPEEDS
        h = (s // (N_SPEEDS * N_SPEEDS)) % self.n_cells
        a = s // (N_SPEEDS * N_SPEEDS * self.n_cells)
        return a, h, av_speed, hv_speed

    def decode(self, s: int) -> IntersectionState | None:
        if s >= self.n_regular:
            return None
        a, h, av_speed, hv_speed = (int(x) for x in self.components(s))
        return IntersectionState(self.cells[a], self.cells[h], av_speed, hv_speed)

    def is_terminal(self, s: int) -> bool:
        return s >= self.n_regular

    @property
    def start(self) -> int:
        return self.index(
            IntersectionState(AV_START, HV_START, START_SPEED, START_SPEED)
        )


@functools.lru_cache(maxsize=1)
def intersection_layout() -> IntersectionLayout:
    return IntersectionLayout()


def hv_accident_risk(accidents: np.ndarray, legal_av: np.ndarray) -> np.ndarray:
    """
    risk[s][v]: probability that HV action v ends in an accident when the AV
    picks uniformly among its legal actions in s.
    """
    legal_av = np.asarray(legal_av, dtype=float)
    hits = np.einsum("suv,su->sv", np.asarray(accidents, dtype=float), legal_av)
    return hits / legal_av.sum(axis=1, keepdims=True)


def reckless_hv_actions(risk: np.ndarray, legal_hv: np.ndarray, margin: float):
    """HV actions riskier than the safest legal one by more than ``margin``."""
    safest = np.where(legal_hv, risk, np.inf).min(axis=1, keepdims=True)
    return risk > safest + margin + 1e-9


def build_intersection(spec: IntersectionSpec = IntersectionSpec()) -> PosgModel:
    layout = intersection_layout()
    regular = np.arange(layout.n_regular)
    a, h, av_speed, hv_speed = layout.components(regular)

    following = np.empty((layout.n_states, 5, 5), dtype=np.int64)
    accidents = np.zeros((layout.n_states, 5, 5), dtype=bool)
    for u in range(5):
        for v in range(5):
            eu = layout.executed_av[a, av_speed, u]
            ev = layout.executed_hv[h, hv_speed, v]
            crash = layout.accident_table[a, eu, h, ev]
            av_end = layout.av_target[a, eu]
            hv_end = layout.hv_target[h, ev]
            moved = (
                (np.maximum(av_end, 0) * layout.n_cells + hv_end) * N_SPEEDS
                + SPEEDS[eu]
            ) * N_SPEEDS + SPEEDS[ev]
            following[regular, u, v] = np.where(
                crash,
                layout.accident,
                np.where(av_end == CLEARED, layout.cleared, moved),
            )
            accidents[regular, u, v] = crash
    following[layout.cleared] = layout.cleared
    following[layout.accident] = layout.accident

    n_rows = layout.n_states * 25
    transition = sparse.csr_matrix(
        (np.ones(n_rows), following.ravel(), np.arange(n_rows + 1)),
        shape=(n_rows, layout.n_states),
    )

    legal_self = np.ones((layout.n_states, 5), dtype=bool)
    legal_other = np.ones((layout.n_states, 5), dtype=bool)
    legal_self[regular] = layout.legal_av[a, av_speed]
    legal_other[regular] = layout.legal_hv[h, hv_speed]

    reward = np.zeros((layout.n_states, 5, 5))
    reward[regular] = -spec.delay_cost
    reward -= spec.accident_cost * accidents
    reckless = reckless_hv_actions(
        hv_accident_risk(accidents, legal_self), legal_other, spec.hv_risk_margin
    )
    hv_reward = -spec.accident_cost * np.repeat(reckless[:, None, :], 5, axis=1)

    initial_belief = np.zeros(layout.n_states)
    initial_belief[layout.start] = 1.0
    logger.info(
        "Built intersection model: %d states, %d accident transitions",
        layout.n_states,
        int(accidents.sum()),
    )
    return PosgModel(
        transition=transition,
        observation=np.ones((layout.n_states, 5, 1)),
        reward=reward,
        discount=spec.discount,
        initial_belief=initial_belief,
        zero_sum=False,
        opponent_reward=hv_reward,
        legal_self=legal_self,
        legal_other=legal_other,
        fully_observable=True,
        name="intersection",
    )
