"""
What the management commands run: each takes a validated config, writes its
artifacts, a manifest and a ledger row, and returns an Outcome.
"""

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from django.conf import settings
from django.db import DatabaseError
from django.utils import timezone
from scipy import stats

from arena.reports import write_competition_csv, write_metrics_csv, write_soccer_csv
from arena.services import run_intersection_episodes, run_soccer_match, run_tournament
from baselines.specs import (
    GRAMMAR,
    SEAT_A,
    SEAT_B,
    build_agent,
    parse_agent_spec,
)
from experiments.manifest import write_manifest
from experiments.models import ExperimentRun
from lite.serializer import save_value_function
from lite.services import plan, predicted_strategy
from nested.serializer import save_stack
from nested.solver import solve_nested
from posg.fixtures import random_model
from posg.tables import StrategyTable
from verify.bounds import (
    check_alpha_growth,
    check_belief_gap,
    check_contraction,
    check_oracle_equivalence,
    check_policy_loss_bound,
)
from verify.families import NearDeterministicSpec, perfectly_observed_model
from verify.reports import write_bound_reports

logger = logging.getLogger(__name__)

BENCH_COLUMNS = [
    "param",
    "value",
    "prediction_seconds",
    "planning_seconds",
    "total_seconds",
    "vectors",
]


@dataclass
class Outcome:
    directory: Path
    artifacts: list[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    passed: bool = True
    seeds: list[int] = field(default_factory=list)
    manifest: Path | None = None
    run: ExperimentRun | None = None


def record_run(
    command: str,
    config,
    outcome: Outcome,
    started_at=None,
    manifest: dict | None = None,
) -> ExperimentRun | None:
    """
    Adds the run to the ledger. The manifest on disk is the reproducibility
    record, so a missing or broken database only costs the ledger row.
    """
    status = ExperimentRun.STATUS_SUCCEEDED
    if not outcome.passed:
        status = ExperimentRun.STATUS_FAILED
    seed = config.seed if config is not None else None
    if seed is None and outcome.seeds:
        seed = outcome.seeds[0]
    summary = "\n".join(f"{key}: {value}" for key, value in outcome.summary.items())
    try:
        run = ExperimentRun.objects.create(
            command=command,
            name=config.label if config is not None else "",
            config_hash=config.hash if config is not None else "",
            seed=seed,
            status=status,
            artifact_dir=str(outcome.directory),
            manifest=manifest or {},
            summary=summary,
            started_at=started_at,
            finished_at=timezone.now(),
        )
    except DatabaseError:
        logger.warning("Could not record %s run in the ledger", command, exc_info=True)
        return None
    outcome.run = run
    return run


def finish(command: str, config, outcome: Outcome, started_at, argv=None) -> Outcome:
    seeds = outcome.seeds or (config.seeds if config is not None else [])
    outcome.manifest = write_manifest(
        outcome.directory,
        command,
        config=config,
        seeds=seeds,
        artifacts=outcome.artifacts,
        summary=outcome.summary,
        argv=argv,
    )
    manifest = {
        "path": str(outcome.manifest),
        "config_hash": config.hash if config is not None else None,
        "seeds": seeds,
    }
    record_run(command, config, outcome, started_at=started_at, manifest=manifest)
    return outcome


def solve_experiment(config, seat: str | None = None) -> Outcome:
    """Solves the seat's agent and writes its policy file."""
    seat = seat or config.solve.get("seat", SEAT_A)
    spec = parse_agent_spec(config.agent(seat))
    model = config.build_model()
    seat_model = model if seat == SEAT_A else model.swapped()
    directory = config.output_dir("solve")
    h = spec.get("h")
    if spec.kind in ("mdp", "nested-mdp"):
        stack = solve_nested(seat_model, k=spec.get("k", 0), h=h)
        path = save_stack(stack, directory / f"policy-{seat}.stack")
        summary = {"kind": spec.kind, "seconds": round(stack.solve_seconds, 6)}
    elif spec.kind in ("pomdp", "ipomdp-lite"):
        if spec.kind == "pomdp":
            strategy = StrategyTable.uniform(
                seat_model.n_states, seat_model.n_other, seat_model.legal_other
            )
        else:
            strategy = predicted_strategy(seat_model, spec.get("k"), h)
        vf = plan(
            seat_model, strategy, h, belief_count=spec.get("B"), seed=config.seed
        )
        path = save_value_function(vf, directory / f"value-function-{seat}.txt")
        summary = {"kind": spec.kind, "vectors": len(vf)}
    else:
        raise ValueError(f"{spec.kind} agents have no policy file to solve for")
    return Outcome(directory=directory, artifacts=[path], summary=summary)


def simulate_experiment(config, workers: int | None = None) -> Outcome:
    """Runs the configured tournament, episode batch or soccer match per seed."""
    run = config.run
    mode = run.get("mode", "tournament")
    model = config.build_model()
    workers = workers or config.workers
    directory = config.output_dir("simulate")
    agent_a = build_agent(config.agent(SEAT_A), model, SEAT_A, seed=config.seed)
    agent_b = build_agent(config.agent(SEAT_B), model, SEAT_B, seed=config.seed)
    outcome = Outcome(directory=directory)
    for seed in config.seeds:
        if mode == "tournament":
            options = {
                key: run[key] for key in ("n", "stages", "stage_discount") if key in run
            }
            if "n" in options:
                options["n_competitions"] = options.pop("n")
            summary = run_tournament(
                model, agent_a, agent_b, seed=seed, workers=workers, **options
            )
            path = write_competition_csv(
                directory / f"competitions-{seed}.csv", summary
            )
            low, high = summary.interval(0)
            outcome.summary[f"seed {seed}"] = (
                f"mean {summary.mean[0]:.4f} [{low:.4f}, {high:.4f}]"
            )
        elif mode == "intersection":
            metrics = run_intersection_episodes(
                model,
                agent_a,
                agent_b,
                n_episodes=run.get("n", 800),
                seed=seed,
                max_steps=run.get("max_steps", 200),
            )
            path = write_metrics_csv(directory / f"metrics-{seed}.csv", metrics)
            outcome.summary[f"seed {seed}"] = f"M={metrics.final_cost:.4f}"
        else:
            match = run_soccer_match(model, agent_a, agent_b, run.get("n", 1000), seed)
            path = write_soccer_csv(directory / f"soccer-{seed}.csv", match)
            outcome.summary[f"seed {seed}"] = (
                f"goals {match.goals[0]}:{match.goals[1]}, draws {match.draws}"
            )
        outcome.artifacts.append(path)
    return outcome


def _check_reports(check: str, config, seed: int, options: dict) -> list:
    model = None
    if config is not None and check in ("policy-loss", "contraction", "alpha-growth"):
        model = config.build_model()
    if check == "policy-loss":
        if model is None:
            model = random_model(seed=seed, n_states=3)
        return [
            check_policy_loss_bound(
                model,
                h=options.get("h", 3),
                trials=options.get("trials", 100),
                seed=seed,
            )
        ]
    if check == "belief-gap":
        shape = {
            key: options[key]
            for key in ("n_states", "n_actions", "discount")
            if key in options
        }
        return [
            check_belief_gap(
                base_spec=NearDeterministicSpec(**shape),
                seed=seed,
                h=options.get("h", 4),
            )
        ]
    if check == "contraction":
        sweeps = options.get("sweeps", 30)
        if model is not None:
            return [check_contraction(model, n_sweeps=sweeps, seed=seed)]
        reports = []
        for i in range(options.get("models", 10)):
            report = check_contraction(
                perfectly_observed_model(seed=seed + i), n_sweeps=sweeps, seed=seed + i
            )
            reports.append(replace(report, name=f"contraction-{seed + i}"))
        return reports
    if check == "oracle":
        return [
            check_oracle_equivalence(
                n_models=options.get("models", 50),
                seed=seed,
                max_horizon=options.get("h", 4),
            )
        ]
    if check == "alpha-growth":
        return [check_alpha_growth(model=model, seed=seed)]
    raise ValueError(f"unknown check {check!r}")


def run_check(check: str, config=None, seed: int | None = None, **options) -> Outcome:
    """
    Runs one named bound check and writes a CSV per report. The outcome fails
    when any row exceeds its bound or a report condition does not hold.
    """
    if config is not None:
        seed = config.seed if seed is None else seed
        options = {**config.verify.get("options", {}), **options}
        directory = config.output_dir("verify")
    else:
        seed = 0 if seed is None else seed
        results = Path(getattr(settings, "RESULTS_DIR", "results"))
        directory = results / "verify" / check
    reports = _check_reports(check, config, seed, options)
    outcome = Outcome(directory=directory, seeds=[seed])
    outcome.artifacts = write_bound_reports(reports, directory)
    outcome.passed = all(report.passed for report in reports)
    for report in reports:
        outcome.summary[report.name] = report.summary()
    return outcome


def _time_planner(spec_kind: str, model, params: dict, seed: int) -> tuple:
    """(prediction seconds, planning seconds, vector count) for one build."""
    started = time.perf_counter()
    if spec_kind in ("mdp", "nested-mdp"):
        solve_nested(model, k=params.get("k", 0), h=params["h"])
        return 0.0, time.perf_counter() - started, 0
    if spec_kind == "ipomdp-lite":
        strategy = predicted_strategy(model, params["k"], params["h"])
    else:
        strategy = StrategyTable.uniform(
            model.n_states, model.n_other, model.legal_other
        )
    predicted = time.perf_counter()
    vf = plan(model, strategy, params["h"], belief_count=params["B"], seed=seed)
    return predicted - started, time.perf_counter() - predicted, len(vf)


def fit_line(xs, ys) -> tuple[float, float, float]:
    """Least-squares slope, intercept and coefficient of determination."""
    ys = np.asarray(ys, dtype=float)
    if np.ptp(ys) == 0:
        return 0.0, float(ys[0]), 1.0
    fit = stats.linregress(np.asarray(xs, dtype=float), ys)
    return float(fit.slope), float(fit.intercept), float(fit.rvalue**2)


def bench_experiment(config) -> Outcome:
    """
    Times the seat-A planner over the configured sweep of h or k; each point
    keeps the fastest of ``repeats`` builds.
    """
    bench = config.bench
    if not bench:
        raise ValueError(f"{config.label} has no bench section")
    spec = parse_agent_spec(config.agent(SEAT_A))
    parameter = bench["parameter"]
    if spec.kind not in ("mdp", "nested-mdp", "pomdp", "ipomdp-lite"):
        raise ValueError(f"cannot bench {spec.kind} agents")
    if parameter not in dict(GRAMMAR[spec.kind]):
        raise ValueError(f"{spec.kind} has no parameter {parameter}")
    model = config.build_model()
    directory = config.output_dir("bench")
    rows = []
    for value in bench["values"]:
        params = {**spec.params, parameter: value}
        timings = [
            _time_planner(spec.kind, model, params, config.seed)
            for _ in range(bench.get("repeats", 1))
        ]
        prediction, planning, vectors = min(timings, key=lambda t: t[0] + t[1])
        rows.append(
            [parameter, value, prediction, planning, prediction + planning, vectors]
        )
        logger.info(
            "Bench %s=%d: %.3fs total", parameter, value, prediction + planning
        )

    path = directory / f"bench-{parameter}.csv"
    directory.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(BENCH_COLUMNS)
        for row in rows:
            writer.writerow([*row[:2], *(f"{t:.6f}" for t in row[2:5]), row[5]])

    totals = [row[4] for row in rows]
    summary = {
        "parameter": parameter,
        "spread": (max(totals) - min(totals)) / min(totals) if min(totals) else 0.0,
    }
    if len(rows) > 1:
        slope, _, r_squared = fit_line([row[1] for row in rows], totals)
        summary.update(slope=slope, r_squared=r_squared)
    return Outcome(directory=directory, artifacts=[path], summary=summary)
