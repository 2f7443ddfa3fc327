import logging
import time

import numpy as np
from django.conf import settings

from lite.alpha import ValueFunction, initial_value_function
from lite.backup import pbvi_backup, projection_kernel
from lite.belief import BeliefSet, branch_images, checked_strategy, expected_payoffs
from nested.solver import predict_mixed_strategy, solve_nested
from posg.beliefs import min_l1_distance, sample_index
from posg.tables import Agent, PosgModel, StrategyTable
from posg.validation import ensure_valid

logger = logging.getLogger(__name__)


def sample_beliefs(
    model: PosgModel,
    strategy,
    target_count: int,
    seed: int,
    threshold: float | None = None,
    max_attempts: int | None = None,
) -> BeliefSet:
    """
    Stochastic forward expansion from b0: pick a stored belief and a uniform
    action, sample (v, o) from its branch probabilities, and keep the updated
    belief if it is farther than ``threshold`` (L1) from every stored one.
    Stops early, flagging the set as saturated, when ``max_attempts``
    expansions in a row add nothing.
    """
    if target_count < 1:
        raise ValueError("target_count must be at least 1")
    if threshold is None:
        threshold = getattr(settings, "BELIEF_DEDUP_THRESHOLD", 1e-6)
    if max_attempts is None:
        max_attempts = 50 * target_count
    strategy = checked_strategy(strategy, model)
    rng = np.random.default_rng(seed)

    points = [np.asarray(model.initial_belief, dtype=float)]
    depths = [0]
    misses = 0
    while len(points) < target_count and misses < max_attempts:
        parent = int(rng.integers(len(points)))
        u = int(rng.integers(model.n_self))
        images = branch_images(points[parent], u, strategy, model)
        branch_probs = images.sum(axis=2).ravel()
        branch = sample_index(branch_probs, rng)
        v, o = divmod(branch, model.n_observations)
        candidate = images[v, o] / branch_probs[branch]
        if min_l1_distance(candidate, points) > threshold:
            points.append(candidate)
            depths.append(depths[parent] + 1)
            misses = 0
        else:
            misses += 1

    saturated = len(points) < target_count
    if saturated:
        logger.warning(
            "Belief sampling saturated at %d of %d points (seed %s)",
            len(points),
            target_count,
            seed,
        )
    return BeliefSet(
        points=np.array(points), seed=seed, depth=max(depths), saturated=saturated
    )


def reachable_beliefs(
    model: PosgModel, strategy, depth: int, threshold: float = 1e-12
) -> BeliefSet:
    """Every belief reachable from b0 within ``depth`` positive-probability steps."""
    strategy = checked_strategy(strategy, model)
    points = [np.asarray(model.initial_belief, dtype=float)]
    frontier = list(points)
    for _ in range(depth):
        following = []
        for b in frontier:
            for u in range(model.n_self):
                images = branch_images(b, u, strategy, model)
                totals = images.sum(axis=2)
                for v, o in zip(*np.nonzero(totals > 0)):
                    candidate = images[v, o] / totals[v, o]
                    if min_l1_distance(candidate, points) > threshold:
                        points.append(candidate)
                        following.append(candidate)
        frontier = following
        if not frontier:
            break
    return BeliefSet(points=np.array(points), depth=depth)


def plan(
    model: PosgModel,
    strategy,
    h: int,
    belief_count: int | None = None,
    seed: int = 0,
    beliefs: BeliefSet | None = None,
) -> ValueFunction:
    """
    Runs ``h`` point-based backups over a belief set sampled from b0 (or the
    one given), recording each sweep's wall time.
    """
    ensure_valid(model)
    strategy = checked_strategy(strategy, model)
    if beliefs is None:
        if belief_count is None:
            belief_count = getattr(settings, "DEFAULT_BELIEF_COUNT", 100)
        beliefs = sample_beliefs(model, strategy, belief_count, seed)

    kernel = projection_kernel(strategy, model)
    vf = initial_value_function(model.n_states)
    seconds = []
    for _ in range(h):
        started = time.perf_counter()
        vf = pbvi_backup(vf, beliefs, strategy, model, kernel=kernel)
        seconds.append(time.perf_counter() - started)
    logger.info(
        "Planned %s to horizon %d over %d beliefs in %.3fs (%d vectors)",
        model.name or "model",
        h,
        len(beliefs),
        sum(seconds),
        len(vf),
    )
    return ValueFunction(
        vectors=vf.vectors,
        actions=vf.actions,
        horizon=vf.horizon,
        belief_set=beliefs,
        sweep_seconds=seconds,
    )


def action_values(vf: ValueFunction, b, strategy, model: PosgModel) -> np.ndarray:
    """
    One-step lookahead over ``vf`` for every action u. Pr(v, o) * value_of(b')
    equals the best vector's dot product with the unnormalized image, so
    zero-probability branches drop out.
    """
    values = expected_payoffs(b, strategy, model)
    for u in range(model.n_self):
        images = branch_images(b, u, strategy, model)
        future = np.einsum("vot,kt->vok", images, vf.vectors).max(axis=2)
        values[u] += model.discount * future[images.sum(axis=2) > 0].sum()
    return values


def act(vf: ValueFunction, b, strategy, model: PosgModel, legal=None) -> int:
    """Greedy action of the lookahead; ties go to the lowest action index."""
    values = action_values(vf, b, strategy, model)
    if legal is not None:
        values = np.where(np.asarray(legal, dtype=bool), values, -np.inf)
    return int(np.argmax(values))


def predicted_strategy(
    model: PosgModel, k: int, h: int, agent: Agent = Agent.SELF
) -> StrategyTable:
    """The level-k mixed-strategy prediction of ``agent``'s opponent."""
    stack = solve_nested(model, agent=agent, k=k, h=h)
    return predict_mixed_strategy(stack, k)
