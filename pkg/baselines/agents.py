"""
Agents the arena can seat. Every agent plays from its own perspective: it
holds the game as seen from its seat and picks actions of that game's "self"
side. Planning artifacts are built once and shared by ``fresh()`` copies;
per-episode state (random stream, belief) belongs to each copy.
"""

import copy
import logging
from dataclasses import dataclass

import numpy as np

from baselines.policies import (
    handbuilt_soccer_policy,
    random_policy,
    scripted_driver_policy,
)
from environments.intersection import IntersectionLayout, intersection_layout
from environments.soccer import SoccerLayout, soccer_layout
from lite.alpha import ValueFunction
from lite.belief import belief_update
from lite.exceptions import ImpossibleObservation
from lite.services import act as lite_act
from posg.beliefs import sample_index
from posg.tables import Belief, PosgModel, StrategyTable, as_strategy

logger = logging.getLogger(__name__)

# Spawn key of the hybrid coin stream, away from the arena's child keys.
_COIN_KEY = 2**31 - 1


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


class BaseAgent:
    kind = "agent"
    # Agents that act on the true state rather than on observations.
    observes_state = True

    def __init__(self, model: PosgModel, label: str = ""):
        self.model = model
        self.label = label or self.kind
        self.planning_seconds = 0.0
        self.rng = np.random.default_rng(0)

    @property
    def n_actions(self) -> int:
        return self.model.n_self

    def reset(self, seed) -> None:
        self.rng = np.random.default_rng(_seed_sequence(seed))

    def distribution(self, state: int | None) -> np.ndarray:
        raise NotImplementedError

    def act(self, state: int | None) -> int:
        return sample_index(self.distribution(state), self.rng)

    def observe(self, own_action: int, other_action: int, observation: int, state):
        pass

    def fresh(self) -> "BaseAgent":
        return copy.copy(self)

    def __repr__(self):
        return f"<{type(self).__name__} {self.label}>"


class RandomAgent(BaseAgent):
    kind = "random"

    def distribution(self, state):
        return random_policy(self.model, 0 if state is None else state)


class StrategyAgent(BaseAgent):
    """Samples from a fixed per-state strategy (MDP, nested MDP, maximin)."""

    kind = "strategy"

    def __init__(self, model: PosgModel, strategy, label: str = ""):
        super().__init__(model, label)
        self.strategy = as_strategy(strategy)

    def distribution(self, state):
        return self.strategy.row(state)


class BeliefAgent(BaseAgent):
    """
    Plays greedily against a value function while tracking its belief under
    the strategy it predicts for the opponent.
    """

    kind = "belief"
    observes_state = False

    def __init__(
        self, model: PosgModel, value_function: ValueFunction, strategy, label=""
    ):
        super().__init__(model, label)
        self.value_function = value_function
        self.strategy = as_strategy(strategy)
        self.belief = Belief(model.initial_belief)

    def reset(self, seed) -> None:
        super().reset(seed)
        self.belief = Belief(self.model.initial_belief)

    def set_belief(self, belief) -> None:
        self.belief = belief if isinstance(belief, Belief) else Belief(belief)

    def act(self, state=None) -> int:
        # Fully observable games hand the true state over.
        if state is not None:
            self.belief = Belief.point_mass(self.model.n_states, state)
        return lite_act(self.value_function, self.belief, self.strategy, self.model)

    def distribution(self, state=None):
        probs = np.zeros(self.n_actions)
        probs[self.act(state)] = 1.0
        return probs

    def observe(self, own_action, other_action, observation, state=None):
        try:
            self.belief = belief_update(
                self.belief,
                own_action,
                other_action,
                observation,
                self.strategy,
                self.model,
            )
            return
        except ImpossibleObservation:
            logger.debug(
                "%s: opponent action %d was not predicted, retrying with a uniform "
                "opponent",
                self.label,
                other_action,
            )
        uniform = StrategyTable.uniform(self.model.n_states, self.model.n_other)
        try:
            self.belief = belief_update(
                self.belief, own_action, other_action, observation, uniform, self.model
            )
            return
        except ImpossibleObservation:
            pass
        weights = self.model.observation[:, own_action, observation]
        if weights.sum() > 0:
            self.belief = Belief.normalized(weights)
        else:
            self.belief = Belief(self.model.initial_belief)


@dataclass(frozen=True)
class HybridStep:
    action: int
    informed: bool


def hybrid_step(
    p: float,
    mdp_policy,
    pomdp_agent: BeliefAgent,
    true_state: int,
    rng: np.random.Generator,
    coin_rng: np.random.Generator | None = None,
) -> HybridStep:
    """
    With probability ``p`` the opponent learns the true state: its belief is
    reset to a point mass there and it plays the MDP policy. Otherwise it
    plays the POMDP agent's action from its tracked belief.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"hybrid probability {p} is outside [0, 1]")
    coin = rng if coin_rng is None else coin_rng
    if coin.random() < p:
        pomdp_agent.set_belief(
            Belief.point_mass(pomdp_agent.model.n_states, true_state)
        )
        action = sample_index(as_strategy(mdp_policy).row(true_state), rng)
        return HybridStep(action, True)
    return HybridStep(pomdp_agent.act(None), False)


class HybridAgent(BaseAgent):
    kind = "hybrid"

    def __init__(
        self,
        model: PosgModel,
        mdp_strategy,
        pomdp_agent: BeliefAgent,
        p: float,
        label: str = "",
    ):
        super().__init__(model, label)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"hybrid probability {p} is outside [0, 1]")
        self.mdp_strategy = as_strategy(mdp_strategy)
        self.pomdp_agent = pomdp_agent
        self.p = p
        self.coin_rng = np.random.default_rng(1)
        self.informed_steps = 0
        self.steps = 0

    def reset(self, seed) -> None:
        seed = _seed_sequence(seed)
        super().reset(seed)
        self.pomdp_agent.reset(seed)
        coin_key = (*seed.spawn_key, _COIN_KEY)
        self.coin_rng = np.random.default_rng(
            np.random.SeedSequence(seed.entropy, spawn_key=coin_key)
        )
        self.informed_steps = 0
        self.steps = 0

    def act(self, state) -> int:
        step = hybrid_step(
            self.p, self.mdp_strategy, self.pomdp_agent, state, self.rng, self.coin_rng
        )
        self.steps += 1
        self.informed_steps += step.informed
        return step.action

    def observe(self, own_action, other_action, observation, state=None):
        self.pomdp_agent.observe(own_action, other_action, observation, state)

    def fresh(self) -> "HybridAgent":
        clone = copy.copy(self)
        clone.pomdp_agent = self.pomdp_agent.fresh()
        return clone


class HandbuiltSoccerAgent(BaseAgent):
    kind = "handbuilt"

    def __init__(
        self,
        model: PosgModel,
        player: int,
        layout: SoccerLayout | None = None,
        stay_probability: float | None = None,
        label: str = "",
    ):
        super().__init__(model, label)
        self.player = player
        self.layout = layout or soccer_layout()
        self.stay_probability = stay_probability

    def distribution(self, state):
        return handbuilt_soccer_policy(
            self.layout.decode(state), self.player, self.stay_probability
        )


class DriverAgent(BaseAgent):
    kind = "driver"

    def __init__(
        self,
        model: PosgModel,
        layout: IntersectionLayout | None = None,
        temperature: float | None = None,
        label: str = "",
    ):
        super().__init__(model, label)
        self.layout = layout or intersection_layout()
        self.temperature = temperature

    def distribution(self, state):
        decoded = self.layout.decode(state)
        if decoded is None:
            return random_policy(self.model, state)
        return scripted_driver_policy(decoded, self.layout, self.temperature)
