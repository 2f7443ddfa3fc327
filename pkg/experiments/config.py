"""
Experiment configs: one YAML document fully determines one experiment.

    name: table1-h10
    seed: 1234
    model:
      builder: random-posg
      options: {n_states: 10, n_actions: 3, n_observations: 8}
    agents:
      a: "ipomdp-lite:k=1,h=10,B=100"
      b: "mdp:h=10"
    run:
      mode: tournament
      n: 1000
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import yaml
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

from environments.intersection import IntersectionSpec, build_intersection
from environments.random_posg import RandomPosgSpec, generate_random_posg
from environments.soccer import SoccerSpec, build_soccer
from posg.serializer import load_model
from posg.tables import PosgModel

logger = logging.getLogger(__name__)

BUILDERS = ("random-posg", "intersection", "soccer", "file")
RUN_MODES = ("tournament", "intersection", "soccer")
CHECKS = ("policy-loss", "belief-gap", "contraction", "oracle", "alpha-growth")

_COUNT = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["seed", "model"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "seed": {"type": "integer", "minimum": 0},
        "model": {
            "type": "object",
            "required": ["builder"],
            "additionalProperties": False,
            "properties": {
                "builder": {"enum": list(BUILDERS)},
                "options": {"type": "object"},
                "path": {"type": "string"},
            },
        },
        "agents": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"a": {"type": "string"}, "b": {"type": "string"}},
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": list(RUN_MODES)},
                "n": _COUNT,
                "stages": {"type": "integer", "minimum": 0},
                "stage_discount": {
                    "type": "number",
                    "exclusiveMinimum": 0,
                    "maximum": 1,
                },
                "seeds": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0},
                    "minItems": 1,
                },
                "max_steps": _COUNT,
                "workers": _COUNT,
            },
        },
        "solve": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"seat": {"enum": ["a", "b"]}},
        },
        "bench": {
            "type": "object",
            "additionalProperties": False,
            "required": ["parameter", "values"],
            "properties": {
                "parameter": {"enum": ["h", "k"]},
                "values": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": 0},
                    "minItems": 1,
                },
                "repeats": _COUNT,
            },
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "required": ["check"],
            "properties": {
                "check": {"enum": list(CHECKS)},
                "options": {"type": "object"},
            },
        },
        "output": {"type": "string"},
    },
}


def config_hash(raw: dict) -> str:
    """sha256 of the canonical JSON form, so key order and comments do not count."""
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    model: dict
    name: str = ""
    agents: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    solve: dict = field(default_factory=dict)
    bench: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    output: str | None = None
    source: Path | None = None
    raw: dict = field(default_factory=dict, compare=False)
    hash: str = ""

    @property
    def label(self) -> str:
        return self.name or f"experiment-{self.hash[:8]}"

    @property
    def seeds(self) -> list[int]:
        return list(self.run.get("seeds", [self.seed]))

    @property
    def workers(self) -> int:
        return self.run.get("workers", getattr(settings, "DEFAULT_WORKERS", 1))

    @property
    def model_path(self) -> Path | None:
        if self.model["builder"] != "file":
            return None
        return _resolve(self.model["path"], self.source)

    def agent(self, seat: str) -> str:
        try:
            return self.agents[seat]
        except KeyError:
            raise ImproperlyConfigured(
                f"{self.label}: no agent configured for seat {seat}"
            ) from None

    def output_dir(self, command: str) -> Path:
        results = Path(getattr(settings, "RESULTS_DIR", "results"))
        if self.output:
            base = Path(self.output)
            return base if base.is_absolute() else results / base
        return results / self.label / command

    def build_model(self) -> PosgModel:
        builder = self.model["builder"]
        options = dict(self.model.get("options", {}))
        try:
            if builder == "file":
                return load_model(self.model_path)
            if builder == "intersection":
                return build_intersection(IntersectionSpec(**options))
            if builder == "soccer":
                return build_soccer(SoccerSpec(**options))
            options.setdefault("seed", self.seed)
            return generate_random_posg(RandomPosgSpec(**options))
        except TypeError as exc:
            raise ImproperlyConfigured(
                f"{self.label}: bad options for builder {builder}: {exc}"
            ) from exc


def _resolve(path: str, source: Path | None) -> Path:
    path = Path(path)
    if path.is_absolute() or source is None:
        return path
    return source.parent / path


def _parse_yaml(text: str, where: str) -> dict:
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or "syntax error"
        if mark is not None:
            problem = f"line {mark.line + 1}, column {mark.column + 1}: {problem}"
        raise ImproperlyConfigured(f"{where}: {problem}") from exc
    if not isinstance(raw, dict):
        raise ImproperlyConfigured(f"{where}: an experiment config must be a mapping")
    return raw


def load_experiment_config(source) -> ExperimentConfig:
    """
    Reads and validates a config from a YAML path or an already parsed mapping.
    """
    if isinstance(source, dict):
        raw, path, where = source, None, "config"
    else:
        path = Path(source)
        where = str(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ImproperlyConfigured(f"cannot read config {path}: {exc}") from exc
        raw = _parse_yaml(text, where)

    if "seed" not in raw:
        raise ImproperlyConfigured(
            f"{where}: no master seed; every experiment needs an explicit 'seed'"
        )
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        location = "/".join(str(part) for part in exc.absolute_path) or "config"
        raise ImproperlyConfigured(f"{where}: {location}: {exc.message}") from exc

    model = raw["model"]
    if (model["builder"] == "file") != ("path" in model):
        raise ImproperlyConfigured(
            f"{where}: model/path is required for, and only for, builder 'file'"
        )
    config = ExperimentConfig(
        seed=raw["seed"],
        model=model,
        name=raw.get("name", ""),
        agents=raw.get("agents", {}),
        run=raw.get("run", {}),
        solve=raw.get("solve", {}),
        bench=raw.get("bench", {}),
        verify=raw.get("verify", {}),
        output=raw.get("output"),
        source=path,
        raw=raw,
        hash=config_hash(raw),
    )
    model_path = config.model_path
    if model_path is not None and not model_path.is_file():
        raise ImproperlyConfigured(f"{where}: model file {model_path} does not exist")
    logger.info("Loaded experiment %s (%s)", config.label, config.hash[:12])
    return config
