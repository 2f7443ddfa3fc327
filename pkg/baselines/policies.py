"""Stateless opponent policies: each returns an action distribution."""

import numpy as np
from django.conf import settings

from environments.intersection import (
    IntersectionLayout,
    IntersectionState,
    intersection_layout,
)
from environments.soccer import (
    COLS,
    DOWN,
    GOAL_DIRECTION,
    GOAL_ROWS,
    LEFT,
    RIGHT,
    STAND,
    TOP,
    SoccerState,
)
from posg.tables import Agent, PosgModel


def random_policy(
    model: PosgModel, state: int, agent: Agent = Agent.SELF
) -> np.ndarray:
    """Uniform over the agent's legal actions in ``state``."""
    width = model.n_self if agent is Agent.SELF else model.n_other
    legal = model.legal_actions(agent, state)
    probs = np.zeros(width)
    probs[legal] = 1.0 / len(legal)
    return probs


def _one_hot(action: int) -> np.ndarray:
    probs = np.zeros(5)
    probs[action] = 1.0
    return probs


def _toward_track(row: int) -> int:
    return DOWN if row < GOAL_ROWS[0] else TOP


def _scoring(state: SoccerState, player: int, stay: float, d_max: int) -> np.ndarray:
    here = state.position(player)
    there = state.position(1 - player)
    direction = GOAL_DIRECTION[player]
    forward = LEFT if direction < 0 else RIGHT
    # Columns the defender stands ahead of the attacker, towards the goal.
    ahead = (there[1] - here[1]) * direction
    probs = np.zeros(5)

    if here[0] in GOAL_ROWS:
        if there[0] != here[0] or ahead <= 0:
            return _one_hot(forward)
        probs[forward] = min(ahead / d_max, 1.0)
        rest = 1.0 - probs[forward]
        probs[STAND] = stay * rest
        # Sidestep up or down with equal probability.
        probs[TOP] = probs[DOWN] = (rest - probs[STAND]) / 2
        return probs

    if ahead <= 0 or ahead > 2:
        return _one_hot(_toward_track(here[0]))
    probs[forward] = min(ahead / d_max, 1.0)
    rest = 1.0 - probs[forward]
    probs[STAND] = stay * rest
    probs[_toward_track(here[0])] = rest - probs[STAND]
    return probs


def _blocking(state: SoccerState, player: int) -> np.ndarray:
    here = state.position(player)
    attacker = state.position(1 - player)
    direction = GOAL_DIRECTION[1 - player]
    ahead = (here[1] - attacker[1]) * direction
    if ahead <= 0:
        return _one_hot(LEFT if direction < 0 else RIGHT)
    if here[0] == attacker[0]:
        return _one_hot(STAND)
    return _one_hot(TOP if attacker[0] < here[0] else DOWN)


def handbuilt_soccer_policy(
    state: SoccerState | None,
    player: int,
    stay_probability: float | None = None,
    d_max: int = COLS,
) -> np.ndarray:
    """
    Scripted soccer tactics. The ball carrier runs along a goal track,
    pressing forward with probability proportional to the defender's distance
    when blocked and sidestepping up or down otherwise. The defender chases an
    attacker that got past it, then lines up on the attacker's row and waits.
    """
    if state is None:
        return _one_hot(STAND)
    if stay_probability is None:
        stay_probability = getattr(settings, "SOCCER_STAY_PROBABILITY", 0.1)
    if state.owner == player:
        return _scoring(state, player, stay_probability, d_max)
    return _blocking(state, player)


def accident_risk(
    state: IntersectionState, layout: IntersectionLayout | None = None
) -> np.ndarray:
    """
    Probability of an accident for each HV action when the AV picks one of
    its legal actions uniformly; nan for illegal HV actions.
    """
    layout = layout or intersection_layout()
    a = layout.cell_index[state.av]
    h = layout.cell_index[state.hv]
    av_legal = np.flatnonzero(layout.legal_av[a, state.av_speed])
    hv_legal = layout.legal_hv[h, state.hv_speed]
    executed_hv = layout.executed_hv[h, state.hv_speed]
    table = layout.accident_table[a][av_legal][:, h, executed_hv]
    return np.where(hv_legal, table.mean(axis=0), np.nan)


def scripted_driver_policy(
    state: IntersectionState,
    layout: IntersectionLayout | None = None,
    temperature: float | None = None,
) -> np.ndarray:
    """Softmax over legal HV actions of -risk / temperature."""
    if temperature is None:
        temperature = getattr(settings, "DRIVER_TEMPERATURE", 0.1)
    risk = accident_risk(state, layout)
    legal = ~np.isnan(risk)
    logits = np.where(legal, -np.nan_to_num(risk) / temperature, -np.inf)
    weights = np.exp(logits - logits[legal].max())
    return weights / weights.sum()
