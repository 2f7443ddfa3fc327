"""
Empirical checks of the planners' guarantees. Each check returns a
BoundReport; none of them raises on a violated bound.
"""

import logging

import numpy as np

from lite.alpha import initial_value_function
from lite.backup import exact_backup, pbvi_backup, projection_kernel
from lite.belief import belief_update, branch_images, expected_payoff
from lite.exceptions import ImpossibleObservation
from lite.services import action_values, plan, reachable_beliefs
from nested.solver import solve_mdp
from posg.exceptions import DimensionMismatch
from posg.fixtures import random_model
from posg.tables import Belief, PosgModel, StrategyTable, as_strategy
from verify.families import NearDeterministicSpec, near_point_mass
from verify.oracle import expectimax_action_values, expectimax_oracle, guard_tree_size
from verify.reports import BoundReport, make_report

logger = logging.getLogger(__name__)

TOLERANCE = 1e-6
BELIEF_GAP_GRID = (0.0, 0.05, 0.1, 0.2)
BELIEF_GAP_CAP = 10.0


def prediction_error(true_strategy, predicted) -> float:
    """Largest absolute gap between the two tables over (s, v)."""
    true_probs = as_strategy(true_strategy).probs
    predicted_probs = as_strategy(predicted).probs
    if true_probs.shape != predicted_probs.shape:
        raise DimensionMismatch(
            f"strategy shapes {true_probs.shape} and {predicted_probs.shape} differ"
        )
    return float(np.abs(true_probs - predicted_probs).max())


def policy_loss_bound(eps_p: float, model: PosgModel, n: int) -> float:
    """Largest loss the prediction error ``eps_p`` allows at horizon ``n``."""
    discount = model.discount
    tail = (1 + 3 * discount * model.n_observations / (1 - discount)) / (1 - discount)
    return 2 * eps_p * model.n_other * model.r_abs_max * (discount ** (n - 1) + tail)


def _value_chain(model: PosgModel, strategy, h: int) -> list:
    """
    Point-based value functions of horizons 0 .. h-1 over the beliefs
    reachable within h-1 steps, exact at every belief the greedy policy
    visits from b0.
    """
    beliefs = reachable_beliefs(model, strategy, max(h - 1, 0))
    kernel = projection_kernel(strategy, model)
    chain = [initial_value_function(model.n_states)]
    for _ in range(h - 1):
        chain.append(pbvi_backup(chain[-1], beliefs, strategy, model, kernel=kernel))
    return chain


def _track(b, u, v, o, predicted, model) -> np.ndarray:
    try:
        return np.asarray(belief_update(b, u, v, o, predicted, model))
    except ImpossibleObservation:
        pass
    uniform = StrategyTable.uniform(model.n_states, model.n_other)
    try:
        return np.asarray(belief_update(b, u, v, o, uniform, model))
    except ImpossibleObservation:
        return np.asarray(model.initial_belief, dtype=float)


def evaluate_prediction_policy(
    model: PosgModel, true_strategy, predicted, h: int, b=None
) -> float:
    """
    Expected h-step total reward, under the opponent's ``true_strategy``, of
    the agent that plans and tracks its belief under ``predicted``. Both the
    agent's belief and the true state distribution are followed through the
    exact tree of (v, o) branches.
    """
    guard_tree_size(model, h)
    true_strategy = as_strategy(true_strategy)
    predicted = as_strategy(predicted)
    chain = _value_chain(model, predicted, h)
    if b is None:
        b = model.initial_belief
    b = np.asarray(b, dtype=float)

    def evaluate(agent_belief, true_belief, n) -> float:
        values = action_values(chain[n - 1], agent_belief, predicted, model)
        u = int(np.argmax(values))
        total = expected_payoff(true_belief, u, true_strategy, model)
        if n == 1:
            return total
        images = branch_images(true_belief, u, true_strategy, model)
        probs = images.sum(axis=2)
        for v, o in zip(*np.nonzero(probs > 0)):
            following = _track(agent_belief, u, int(v), int(o), predicted, model)
            total += (
                model.discount
                * probs[v, o]
                * evaluate(following, images[v, o] / probs[v, o], n - 1)
            )
        return total

    return evaluate(b, b, h) if h > 0 else 0.0


def check_policy_loss_bound(
    model: PosgModel,
    h: int = 3,
    trials: int = 100,
    seed: int = 0,
    max_mix: float = 0.5,
) -> BoundReport:
    """
    Per trial, draws a true opponent strategy and a prediction mixed towards
    random noise, and compares the optimal return with the return of the
    policy planned against the prediction. Trial 0 predicts exactly.
    """
    guard_tree_size(model, h)
    rng = np.random.default_rng(seed)
    rows = []
    for trial in range(trials):
        size = (model.n_states,)
        true_probs = rng.dirichlet(np.ones(model.n_other), size=size)
        noise = rng.dirichlet(np.ones(model.n_other), size=size)
        mix = 0.0 if trial == 0 else rng.uniform(0.0, max_mix)
        true_strategy = StrategyTable(true_probs)
        predicted = StrategyTable((1 - mix) * true_probs + mix * noise)
        eps_p = prediction_error(true_strategy, predicted)
        optimal = evaluate_prediction_policy(model, true_strategy, true_strategy, h)
        achieved = evaluate_prediction_policy(model, true_strategy, predicted, h)
        bound = policy_loss_bound(eps_p, model, h)
        rows.append((trial, eps_p, optimal - achieved, bound))
        logger.debug("Trial %d: eps_p=%.4f loss=%.3g", trial, eps_p, optimal - achieved)
    return make_report("policy_loss", rows, TOLERANCE, horizon=h)


def check_belief_gap(
    eps_grid=BELIEF_GAP_GRID,
    base_spec: NearDeterministicSpec | None = None,
    seed: int = 0,
    h: int = 4,
) -> BoundReport:
    """
    On near-deterministic, near-perfectly observed models, compares the MDP
    action values averaged over a uniform opponent with the belief-space
    action values at beliefs concentrated on each state. The gap should grow
    linearly from zero with eps.

    ``base_spec`` fixes the family shape; each grid point builds its model
    from it with the same seed. A gap that drops by more than the tolerance
    along the grid fails the report.
    """
    base_spec = base_spec or NearDeterministicSpec()
    n_states, n_actions = base_spec.n_states, base_spec.n_actions
    gaps = []
    scale = None
    for eps in eps_grid:
        model = base_spec.build(eps, seed)
        uniform = StrategyTable.uniform(n_states, n_actions)
        mdp_values = solve_mdp(model, h).top.weighted(uniform)
        gap = 0.0
        for s in range(n_states):
            b = near_point_mass(eps, s, n_states)
            belief_values = expectimax_action_values(model, uniform, b, h)
            gap = max(gap, float(np.abs(mdp_values[s] - belief_values).max()))
        gaps.append(gap)
        scale = (model.r_max - model.r_min) / (1 - model.discount)

    eps = np.asarray(eps_grid, dtype=float)
    gaps = np.asarray(gaps)
    rows = [
        (i, e, gap, BELIEF_GAP_CAP * e * scale)
        for i, (e, gap) in enumerate(zip(eps, gaps))
    ]
    squares = float(eps @ eps)
    slope = float(eps @ gaps) / squares if squares > 0 else 0.0
    largest_drop = float(np.max(-np.diff(gaps), initial=0.0))
    monotone = largest_drop <= TOLERANCE
    if not monotone:
        logger.warning("Belief/MDP gap is not monotone over eps: %s", gaps.tolist())
    return make_report(
        "belief_gap",
        rows,
        TOLERANCE,
        fitted_constant=slope / scale if scale else None,
        conditions={"monotone": monotone},
        monotone=monotone,
        largest_drop=largest_drop,
        slope=slope,
    )


def closed_beliefs(model: PosgModel, strategy, max_points: int = 200):
    """
    Grows the reachable belief set until it stops changing, so that every
    successor of a member is a member. Returns (beliefs, closed).
    """
    size = 0
    depth = 1
    while True:
        beliefs = reachable_beliefs(model, strategy, depth)
        if len(beliefs) == size:
            return beliefs, True
        if len(beliefs) > max_points:
            return beliefs, False
        size = len(beliefs)
        depth += 1


def check_contraction(
    model: PosgModel,
    strategy=None,
    n_sweeps: int = 30,
    seed: int = 0,
    proxy_sweeps: int = 500,
) -> BoundReport:
    """
    Row n compares the error of the n-sweep value function against that of
    the (n-1)-sweep one, scaled by the discount. The long-run value is
    approximated by ``proxy_sweeps`` sweeps; its residual joins the tolerance.
    """
    if strategy is None:
        rng = np.random.default_rng(seed)
        strategy = rng.dirichlet(np.ones(model.n_other), size=model.n_states)
    strategy = as_strategy(strategy)
    beliefs, closed = closed_beliefs(model, strategy)
    if not closed:
        logger.warning(
            "Belief set of %s is not closed under successors after %d points; "
            "the contraction only holds on closed sets",
            model.name or "model",
            len(beliefs),
        )
    kernel = projection_kernel(strategy, model)
    vf = initial_value_function(model.n_states)
    history = [vf.values(beliefs.points)]
    for sweep in range(1, max(proxy_sweeps, n_sweeps) + 1):
        vf = pbvi_backup(vf, beliefs, strategy, model, kernel=kernel)
        if sweep <= n_sweeps:
            history.append(vf.values(beliefs.points))
    proxy = vf.values(beliefs.points)
    errors = [float(np.abs(values - proxy).max()) for values in history]

    discount = model.discount
    tolerance = TOLERANCE + (
        2 * discount**proxy_sweeps * model.r_abs_max / (1 - discount)
    )
    rows = [
        (n, n, errors[n], discount * errors[n - 1]) for n in range(1, n_sweeps + 1)
    ]
    return make_report(
        "contraction", rows, tolerance, closed=closed, n_beliefs=len(beliefs)
    )


def check_oracle_equivalence(
    n_models: int = 50,
    seed: int = 0,
    max_states: int = 4,
    max_horizon: int = 4,
) -> BoundReport:
    """
    Plans over every belief reachable before the horizon and compares the
    value at b0 with the expectimax oracle, on seeded random games with
    two actions and two observations per agent.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for trial in range(n_models):
        n_states = int(rng.integers(2, max_states + 1))
        h = int(rng.integers(1, max_horizon + 1))
        model = random_model(seed=int(rng.integers(2**31)), n_states=n_states)
        strategy = StrategyTable(rng.dirichlet(np.ones(2), size=n_states))
        beliefs = reachable_beliefs(model, strategy, h - 1)
        vf = plan(model, strategy, h, beliefs=beliefs)
        b0 = Belief(model.initial_belief)
        exact = expectimax_oracle(model, strategy, b0, h)
        rows.append((trial, h, abs(vf.value_of(b0) - exact), 0.0))
    return make_report("oracle_equivalence", rows, TOLERANCE)


def check_alpha_growth(
    model: PosgModel | None = None, strategy=None, sweeps: int = 2, seed: int = 0
) -> BoundReport:
    """
    Unpruned exact backups must produce exactly |U| * n ** (|V||O|) vectors
    from n; row i holds the miscount after backup i.
    """
    if model is None:
        model = random_model(seed=seed, n_states=2)
    if strategy is None:
        strategy = StrategyTable.uniform(model.n_states, model.n_other)
    vf = initial_value_function(model.n_states)
    expected = 1
    rows = []
    counts = []
    for sweep in range(1, sweeps + 1):
        vf = exact_backup(vf, strategy, model)
        expected = model.n_self * expected ** (model.n_other * model.n_observations)
        counts.append(len(vf))
        rows.append((sweep, sweep, abs(len(vf) - expected), 0.0))
    return make_report("alpha_growth", rows, 0.0, counts=counts)
