"""
Text codec for ValueFunction:

    format value-function 1
    horizon 10
    states 4
    vectors 2
    0 1.5 -0.25 0 3       # action tag, then one weight per state
    2 0.5 0.5 0.5 0.5

Weights are written with 17 significant digits so a reload is exact.
"""

import logging
from pathlib import Path

import numpy as np

from lite.alpha import ValueFunction
from posg.exceptions import ModelFormatError

logger = logging.getLogger(__name__)

FORMAT_TAG = "format value-function 1"


def dump_value_function(vf: ValueFunction) -> str:
    lines = [
        FORMAT_TAG,
        f"horizon {vf.horizon}",
        f"states {vf.n_states}",
        f"vectors {len(vf)}",
    ]
    for weights, action in zip(vf.vectors, vf.actions):
        lines.append(
            " ".join([str(int(action))] + [format(float(w), ".17g") for w in weights])
        )
    return "\n".join(lines) + "\n"


def load_value_function(text: str) -> ValueFunction:
    header: dict[str, int] = {}
    actions: list[int] = []
    rows: list[list[float]] = []
    last = 0
    for number, raw in enumerate(text.splitlines(), start=1):
        last = number
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        if key == "format":
            if value.strip() != "value-function 1":
                raise ModelFormatError(f"unsupported format '{value.strip()}'", number)
            header["format"] = 1
            continue
        if key in ("horizon", "states", "vectors"):
            try:
                header[key] = int(value)
            except ValueError:
                raise ModelFormatError(f"{key} must be an integer", number)
            continue
        if "format" not in header:
            raise ModelFormatError("missing 'format value-function 1' header", number)
        try:
            action = int(key)
            weights = [float(x) for x in value.split()]
        except ValueError:
            raise ModelFormatError("expected an action index and weights", number)
        if "states" in header and len(weights) != header["states"]:
            raise ModelFormatError(
                f"expected {header['states']} weights, found {len(weights)}", number
            )
        actions.append(action)
        rows.append(weights)

    for key in ("horizon", "states", "vectors"):
        if key not in header:
            raise ModelFormatError(f"missing header '{key}'", last)
    if len(rows) != header["vectors"]:
        raise ModelFormatError(
            f"header announces {header['vectors']} vectors, found {len(rows)}", last
        )
    return ValueFunction(
        vectors=np.array(rows, dtype=float).reshape(len(rows), header["states"]),
        actions=np.array(actions, dtype=int),
        horizon=header["horizon"],
    )


def save_value_function(vf: ValueFunction, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_value_function(vf), encoding="utf-8")
    logger.info("Saved %d alpha-vectors to %s", len(vf), path)
    return path


def read_value_function(path) -> ValueFunction:
    return load_value_function(Path(path).read_text(encoding="utf-8"))
