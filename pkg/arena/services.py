"""
Seeded simulations. Every entry point derives all of its random streams from
one master seed: competition (or episode, or game) ``i`` uses the spawn key
``(i,)`` and splits it into an environment stream and one stream per seat, so
adding competitions never perturbs earlier ones.
"""

import logging
import math
import multiprocessing
import time
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from arena.metrics import ACCIDENT_COST, DELAY_COST, T_MIN, running_metrics
from baselines.agents import BaseAgent
from environments.intersection import intersection_layout
from environments.soccer import soccer_layout
from posg.beliefs import sample_index
from posg.exceptions import DimensionMismatch, ModelError
from posg.tables import PosgModel

logger = logging.getLogger(__name__)

ENVIRONMENT, SEAT_A, SEAT_B = range(3)
STAGES = 40
STAGE_DISCOUNT = 0.95
COMPETITIONS = 1000
EPISODES = 800
Z_95 = 1.96


def _seed_sequence(seed, *key) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=(*seed.spawn_key, *key))
    return np.random.SeedSequence(seed, spawn_key=key)


def _streams(seed):
    """Environment generator plus the seed sequences of both seats."""
    environment = np.random.default_rng(_seed_sequence(seed, ENVIRONMENT))
    return environment, _seed_sequence(seed, SEAT_A), _seed_sequence(seed, SEAT_B)


def _check_seats(model: PosgModel, agent_a: BaseAgent, agent_b: BaseAgent):
    if agent_a.n_actions != model.n_self:
        raise DimensionMismatch(
            f"{agent_a.label} plays {agent_a.n_actions} actions, "
            f"seat A has {model.n_self}"
        )
    if agent_b.n_actions != model.n_other:
        raise DimensionMismatch(
            f"{agent_b.label} plays {agent_b.n_actions} actions, "
            f"seat B has {model.n_other}"
        )


class _Table:
    """One seated pair of agents and the simulator state."""

    def __init__(self, model, agent_a, agent_b, seed):
        _check_seats(model, agent_a, agent_b)
        self.model = model
        self.rng, seed_a, seed_b = _streams(seed)
        self.agents = (agent_a.fresh(), agent_b.fresh())
        self.agents[0].reset(seed_a)
        self.agents[1].reset(seed_b)
        self.acting_seconds = [0.0, 0.0]
        self.other_observation = model.other_observation()

    def initial_state(self) -> int:
        return sample_index(self.model.initial_belief, self.rng)

    def _visible(self, agent: BaseAgent, state: int) -> int | None:
        if agent.observes_state or self.model.fully_observable:
            return state
        return None

    def _act(self, seat: int, state: int) -> int:
        agent = self.agents[seat]
        started = time.perf_counter()
        action = agent.act(self._visible(agent, state))
        self.acting_seconds[seat] += time.perf_counter() - started
        return action

    def step(self, state: int) -> tuple[int, int, int, float, float]:
        """Plays one stage from ``state``; returns (u, v, s', r_a, r_b)."""
        model = self.model
        u = self._act(0, state)
        v = self._act(1, state)
        targets, probs = model.transition_row(state, u, v)
        following = int(targets[sample_index(probs, self.rng)])
        o_a = sample_index(model.observation[following, u], self.rng)
        o_b = sample_index(self.other_observation[following, v], self.rng)
        reward_a = float(model.reward[state, u, v])
        reward_b = float(model.other_reward[state, u, v])
        if model.zero_sum and reward_a + reward_b != 0.0:
            raise ModelError(
                f"stage rewards {reward_a} and {reward_b} of a zero-sum game "
                "do not cancel"
            )
        agent_a, agent_b = self.agents
        agent_a.observe(u, v, o_a, self._visible(agent_a, following))
        agent_b.observe(v, u, o_b, self._visible(agent_b, following))
        return u, v, following, reward_a, reward_b


@dataclass(frozen=True)
class CompetitionResult:
    seed: int
    index: int | None
    returns: tuple[float, float]
    stages: int
    # Timings vary between runs and are left out of equality.
    planning_ms: tuple[float, float] = field(compare=False)
    acting_ms: tuple[float, float] = field(compare=False)


def run_competition(
    model: PosgModel,
    agent_a: BaseAgent,
    agent_b: BaseAgent,
    stages: int = STAGES,
    stage_discount: float = STAGE_DISCOUNT,
    seed=0,
    index: int | None = None,
) -> CompetitionResult:
    """
    Plays ``stages`` stages between the two seats and sums each agent's
    stage-discounted reward. ``agent_b`` must have been built for the swapped
    game. The agents given are not mutated: the table seats fresh copies.
    """
    if stages < 0:
        raise ValueError("stages must be non-negative")
    table = _Table(model, agent_a, agent_b, seed)
    totals = [0.0, 0.0]
    weight = 1.0
    state = table.initial_state()
    for _ in range(stages):
        _, _, state, reward_a, reward_b = table.step(state)
        totals[0] += weight * reward_a
        totals[1] += weight * reward_b
        weight *= stage_discount
    if isinstance(seed, np.random.SeedSequence):
        master = int(seed.entropy)
    else:
        master = int(seed)
    return CompetitionResult(
        seed=master,
        index=index,
        returns=(totals[0], totals[1]),
        stages=stages,
        planning_ms=(agent_a.planning_seconds * 1e3, agent_b.planning_seconds * 1e3),
        acting_ms=(table.acting_seconds[0] * 1e3, table.acting_seconds[1] * 1e3),
    )


@dataclass(frozen=True)
class TournamentSummary:
    results: tuple[CompetitionResult, ...]
    mean: tuple[float, float]
    halfwidth: tuple[float, float]

    @property
    def n_competitions(self) -> int:
        return len(self.results)

    def interval(self, seat: int = 0) -> tuple[float, float]:
        return (
            self.mean[seat] - self.halfwidth[seat],
            self.mean[seat] + self.halfwidth[seat],
        )


def mean_and_halfwidth(values) -> tuple[float, float]:
    """Mean and normal-approximation 95% halfwidth, order independent."""
    values = [float(x) for x in values]
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, math.inf
    variance = math.fsum((x - mean) ** 2 for x in values) / (n - 1)
    return mean, Z_95 * math.sqrt(variance / n)


def summarize(results) -> TournamentSummary:
    results = tuple(results)
    a_mean, a_half = mean_and_halfwidth(r.returns[0] for r in results)
    b_mean, b_half = mean_and_halfwidth(r.returns[1] for r in results)
    return TournamentSummary(results, (a_mean, b_mean), (a_half, b_half))


def _play(arguments) -> CompetitionResult:
    model, agent_a, agent_b, stages, stage_discount, seed, index = arguments
    return run_competition(
        model,
        agent_a,
        agent_b,
        stages,
        stage_discount,
        np.random.SeedSequence(seed, spawn_key=(index,)),
        index,
    )


def run_tournament(
    model: PosgModel,
    agent_a: BaseAgent,
    agent_b: BaseAgent,
    n_competitions: int = COMPETITIONS,
    seed: int = 0,
    stages: int = STAGES,
    stage_discount: float = STAGE_DISCOUNT,
    workers: int | None = None,
    first_index: int = 0,
) -> TournamentSummary:
    """
    Runs competitions ``first_index .. first_index + n - 1``; competition
    ``i`` is seeded from ``(seed, i)`` alone, so splitting a tournament into
    index ranges and pooling the results reproduces it exactly.
    """
    if n_competitions < 2:
        raise ValueError("a tournament needs at least two competitions")
    if workers is None:
        workers = getattr(settings, "DEFAULT_WORKERS", 1)
    _check_seats(model, agent_a, agent_b)
    jobs = [
        (model, agent_a, agent_b, stages, stage_discount, seed, i)
        for i in range(first_index, first_index + n_competitions)
    ]
    started = time.perf_counter()
    if workers > 1:
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_play, jobs)
    else:
        results = [_play(job) for job in jobs]
    summary = summarize(results)
    logger.info(
        "%s vs %s: %d competitions in %.1fs, A %.4f ± %.4f, B %.4f ± %.4f",
        agent_a.label,
        agent_b.label,
        n_competitions,
        time.perf_counter() - started,
        summary.mean[0],
        summary.halfwidth[0],
        summary.mean[1],
        summary.halfwidth[1],
    )
    return summary


def run_intersection_episodes(
    model: PosgModel,
    av_agent: BaseAgent,
    driver: BaseAgent,
    n_episodes: int = EPISODES,
    seed: int = 0,
    max_steps: int = 200,
    accident_cost: float = ACCIDENT_COST,
    delay_cost: float = DELAY_COST,
    t_min: int = T_MIN,
):
    """
    Drives the AV through ``n_episodes`` intersections against ``driver``
    (built for the HV seat). An episode ends when the AV clears the
    intersection, on an accident, or after ``max_steps`` actions.
    """
    if n_episodes < 1:
        raise ValueError("at least one episode is needed")
    layout = intersection_layout()
    outcomes = []
    for episode in range(n_episodes):
        table = _Table(model, av_agent, driver, _seed_sequence(seed, episode))
        state = table.initial_state()
        status = "timeout"
        steps = 0
        while steps < max_steps:
            _, _, state, _, _ = table.step(state)
            steps += 1
            if state == layout.cleared:
                status = "cleared"
                break
            if state == layout.accident:
                status = "accident"
                break
        outcomes.append((status, steps))
        logger.debug("Episode %d: %s after %d actions", episode, status, steps)
    metrics = running_metrics(outcomes, accident_cost, delay_cost, t_min)
    if metrics.timeouts:
        logger.warning(
            "%d of %d episodes hit the %d-step limit",
            metrics.timeouts,
            n_episodes,
            max_steps,
        )
    logger.info(
        "%s over %d episodes: T=%.3f, accidents=%d, M=%.4f",
        av_agent.label,
        n_episodes,
        metrics.travel[-1],
        metrics.accidents[-1],
        metrics.final_cost,
    )
    return metrics


@dataclass(frozen=True)
class SoccerMatchResult:
    goals: tuple[int, int]
    draws: int
    moves: int
    games: int

    @property
    def decided(self) -> int:
        return self.goals[0] + self.goals[1]


def run_soccer_match(
    model: PosgModel,
    agent_a: BaseAgent,
    agent_b: BaseAgent,
    n_games: int = 1000,
    seed: int = 0,
    max_games: int | None = None,
) -> SoccerMatchResult:
    """
    Plays soccer games until ``n_games`` of them end in a goal. Each game
    restarts from the initial configuration with random possession; a game
    declared a draw does not count towards ``n_games``.
    """
    if n_games < 1:
        raise ValueError("at least one game is needed")
    if max_games is None:
        max_games = 100 * n_games
    layout = soccer_layout()
    goals = [0, 0]
    draws = moves = games = 0
    while goals[0] + goals[1] < n_games and games < max_games:
        table = _Table(model, agent_a, agent_b, _seed_sequence(seed, games))
        state = table.initial_state()
        games += 1
        while not layout.is_terminal(state):
            _, _, state, _, _ = table.step(state)
            moves += 1
        if state == layout.a_goal:
            goals[0] += 1
        elif state == layout.b_goal:
            goals[1] += 1
        else:
            draws += 1
    if goals[0] + goals[1] < n_games:
        logger.warning(
            "Stopped after %d games with only %d goals", games, goals[0] + goals[1]
        )
    logger.info(
        "%s vs %s: %d-%d with %d draws over %d moves",
        agent_a.label,
        agent_b.label,
        goals[0],
        goals[1],
        draws,
        moves,
    )
    return SoccerMatchResult(tuple(goals), draws, moves, games)
