"""
Agent specification strings, e.g. ``random``, ``mdp:h=50``,
``ipomdp-lite:k=1,h=10,B=100`` or positionally ``hybrid:0.5,10,100``.
"""

import logging
import time
from dataclasses import dataclass, field

from django.conf import settings

from baselines.agents import (
    BaseAgent,
    BeliefAgent,
    DriverAgent,
    HandbuiltSoccerAgent,
    HybridAgent,
    RandomAgent,
    StrategyAgent,
)
from baselines.exceptions import AgentSpecError
from baselines.maximin import maximin_policy
from environments.intersection import intersection_layout
from environments.soccer import PLAYER_A, PLAYER_B, soccer_layout
from lite.services import plan, predicted_strategy
from nested.solver import solve_mdp, solve_nested
from posg.tables import PosgModel, StrategyTable

logger = logging.getLogger(__name__)

SEAT_A = "a"
SEAT_B = "b"

# Kinds that plan over beliefs and need dense transition tables.
BELIEF_KINDS = frozenset({"pomdp", "ipomdp-lite", "hybrid"})

# Parameter names and types of each kind, in positional order.
GRAMMAR: dict[str, tuple[tuple[str, type], ...]] = {
    "random": (),
    "mdp": (("h", int),),
    "pomdp": (("h", int), ("B", int)),
    "ipomdp-lite": (("k", int), ("h", int), ("B", int)),
    "nested-mdp": (("k", int), ("h", int)),
    "maximin": (("h", int),),
    "hybrid": (("p", float), ("h", int), ("B", int)),
    "handbuilt": (("stay", float),),
    "driver": (("temp", float),),
}


@dataclass(frozen=True)
class AgentSpec:
    kind: str
    params: dict = field(default_factory=dict)
    text: str = ""

    def get(self, name: str, default=None):
        return self.params.get(name, default)


def _defaults() -> dict:
    return {
        "h": getattr(settings, "DEFAULT_HORIZON", 50),
        "B": getattr(settings, "DEFAULT_BELIEF_COUNT", 100),
        "k": 1,
    }


def _check_ranges(spec: AgentSpec):
    params = spec.params
    for name in ("h", "B"):
        if name in params and params[name] < 1:
            raise AgentSpecError(f"{spec.text}: {name} must be at least 1")
    if params.get("k", 0) < 0:
        raise AgentSpecError(f"{spec.text}: k must be non-negative")
    if "p" in params and not 0.0 <= params["p"] <= 1.0:
        raise AgentSpecError(f"{spec.text}: p must lie in [0, 1]")
    if "stay" in params and not 0.0 <= params["stay"] <= 1.0:
        raise AgentSpecError(f"{spec.text}: stay must lie in [0, 1]")
    if "temp" in params and params["temp"] <= 0:
        raise AgentSpecError(f"{spec.text}: temp must be positive")


def parse_agent_spec(text: str) -> AgentSpec:
    text = text.strip()
    kind, _, arguments = text.partition(":")
    kind = kind.strip().lower()
    if kind not in GRAMMAR:
        raise AgentSpecError(
            f"unknown agent kind {kind!r}; expected one of {', '.join(GRAMMAR)}"
        )
    names = dict(GRAMMAR[kind])
    order = [name for name, _ in GRAMMAR[kind]]
    raw: dict[str, str] = {}
    keyword_seen = False
    for position, item in enumerate(filter(None, arguments.split(","))):
        item = item.strip()
        if "=" in item:
            name, value = (part.strip() for part in item.split("=", 1))
            keyword_seen = True
        elif keyword_seen:
            raise AgentSpecError(f"{text}: positional value after a keyword")
        elif position < len(order):
            name, value = order[position], item
        else:
            raise AgentSpecError(f"{text}: too many values for {kind}")
        if name not in names:
            raise AgentSpecError(f"{text}: {kind} takes no parameter {name!r}")
        if name in raw:
            raise AgentSpecError(f"{text}: {name} given twice")
        raw[name] = value

    params = {}
    for name, value in raw.items():
        try:
            params[name] = names[name](value)
        except ValueError:
            raise AgentSpecError(
                f"{text}: {name}={value!r} is not a valid {names[name].__name__}"
            ) from None
    if kind == "hybrid" and "p" not in params:
        raise AgentSpecError(f"{text}: hybrid needs its mixing probability p")
    defaults = _defaults()
    for name in order:
        if name not in params and name in defaults:
            params[name] = defaults[name]
    spec = AgentSpec(kind=kind, params=params, text=text)
    _check_ranges(spec)
    return spec


def _uniform_opponent(model: PosgModel) -> StrategyTable:
    return StrategyTable.uniform(model.n_states, model.n_other, model.legal_other)


def _belief_agent(model, strategy, h, belief_count, seed, label) -> BeliefAgent:
    vf = plan(model, strategy, h, belief_count=belief_count, seed=seed)
    return BeliefAgent(model, vf, strategy, label=label)


def build_agent(
    spec: AgentSpec | str,
    model: PosgModel,
    seat: str = SEAT_A,
    seed: int = 0,
) -> BaseAgent:
    """
    Builds (and plans) the agent for ``seat`` of ``model``. Seat B plays the
    swapped game, so every agent maximizes its own reward as "self".
    """
    if isinstance(spec, str):
        spec = parse_agent_spec(spec)
    if seat not in (SEAT_A, SEAT_B):
        raise AgentSpecError(f"unknown seat {seat!r}")
    seat_model = model if seat == SEAT_A else model.swapped()
    label = spec.text or spec.kind
    started = time.perf_counter()
    agent = _build(spec, seat_model, seat, seed, label)
    agent.planning_seconds = time.perf_counter() - started
    logger.info(
        "Built %s for seat %s in %.3fs", label, seat.upper(), agent.planning_seconds
    )
    return agent


def _build(spec: AgentSpec, model: PosgModel, seat, seed, label) -> BaseAgent:
    kind = spec.kind
    h = spec.get("h")
    if kind in BELIEF_KINDS and model.is_sparse:
        raise AgentSpecError(
            f"{label} plans over beliefs and needs a dense model; "
            f"{model.name} has sparse transitions"
        )
    if kind == "random":
        return RandomAgent(model, label=label)
    if kind == "mdp":
        return StrategyAgent(model, solve_mdp(model, h).policy(), label=label)
    if kind == "nested-mdp":
        stack = solve_nested(model, k=spec.get("k"), h=h)
        return StrategyAgent(model, stack.policy(), label=label)
    if kind == "maximin":
        return StrategyAgent(model, maximin_policy(model, h).strategy, label=label)
    if kind == "pomdp":
        return _belief_agent(
            model, _uniform_opponent(model), h, spec.get("B"), seed, label
        )
    if kind == "ipomdp-lite":
        strategy = predicted_strategy(model, spec.get("k"), h)
        return _belief_agent(model, strategy, h, spec.get("B"), seed, label)
    if kind == "hybrid":
        pomdp = _belief_agent(
            model, _uniform_opponent(model), h, spec.get("B"), seed, label
        )
        mdp = solve_mdp(model, h).policy()
        return HybridAgent(model, mdp, pomdp, spec.get("p"), label=label)
    if kind == "handbuilt":
        layout = soccer_layout()
        if model.n_states != layout.n_states:
            raise AgentSpecError(f"{label} plays soccer only")
        player = PLAYER_A if seat == SEAT_A else PLAYER_B
        return HandbuiltSoccerAgent(
            model, player, layout, spec.get("stay"), label=label
        )
    if kind == "driver":
        layout = intersection_layout()
        if model.n_states != layout.n_states or seat != SEAT_B:
            raise AgentSpecError(f"{label} drives the HV of the intersection only")
        return DriverAgent(model, layout, spec.get("temp"), label=label)
    raise AgentSpecError(f"no builder for agent kind {kind!r}")

