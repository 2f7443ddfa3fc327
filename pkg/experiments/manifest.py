import hashlib
import json
import logging
import platform
from importlib import metadata
from pathlib import Path

from django.utils import timezone

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
PACKAGES = ("numpy", "scipy", "Django", "PyYAML", "jsonschema")


def package_versions() -> dict[str, str]:
    versions = {"python": platform.python_version()}
    for package in PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "missing"
    return versions


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(
    directory,
    command: str,
    config=None,
    seeds=(),
    artifacts=(),
    summary=None,
    argv=None,
) -> Path:
    """
    Writes ``manifest.json`` into ``directory``: the config with its hash,
    every seed used, package versions and the sha256 of each artifact.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "argv": list(argv or []),
        "created_at": timezone.now().isoformat(),
        "seeds": [int(seed) for seed in seeds],
        "versions": package_versions(),
        "artifacts": {
            Path(path).name: file_digest(path) for path in artifacts
        },
        "summary": summary or {},
    }
    if config is not None:
        manifest["config_hash"] = config.hash
        manifest["config"] = config.raw
        if config.model_path is not None:
            manifest["model_sha256"] = file_digest(config.model_path)
    path = directory / MANIFEST_NAME
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    logger.info("Wrote manifest for %s to %s", command, path)
    return path
