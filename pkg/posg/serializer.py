"""
Text codec for PosgModel.

    # comments run to end of line
    format posg-model 1
    name tiny
    states 2
    actions_self 2
    actions_other 2
    observations 2
    discount 0.95
    zero_sum true
    [T]         one row per (s, u, v), |S| numbers
    [Z]         one row per (s', u), |O| numbers
    [R]         one row per (s, u), |V| numbers
    [b0]        one row, |S| numbers

Optional sections: [T sparse] (rows "s u v s' p" replacing [T]),
[Z_other] (needs an observations_other header), [R_other], [legal_self],
[legal_other] (rows of 0/1 flags per state).

Numbers are written with repr(), so save(load(text)) reproduces text
produced by save exactly.
"""

import logging
from pathlib import Path

import numpy as np
from django.conf import settings
from scipy import sparse

from posg.exceptions import ModelFormatError
from posg.tables import PosgModel

logger = logging.getLogger(__name__)

FORMAT_TAG = ("posg-model", "1")

HEADER_KEYS = (
    "name",
    "states",
    "actions_self",
    "actions_other",
    "observations",
    "observations_other",
    "discount",
    "zero_sum",
    "fully_observable",
)
REQUIRED_KEYS = (
    "states",
    "actions_self",
    "actions_other",
    "observations",
    "discount",
)
SECTIONS = (
    "T",
    "T sparse",
    "Z",
    "R",
    "b0",
    "Z_other",
    "R_other",
    "legal_self",
    "legal_other",
)


def _number(value) -> str:
    return repr(float(value))


def _rows(array: np.ndarray) -> list[str]:
    flat = array.reshape(-1, array.shape[-1])
    return [" ".join(_number(x) for x in row) for row in flat]


def _flag_rows(mask: np.ndarray) -> list[str]:
    return [" ".join("1" if x else "0" for x in row) for row in mask]


def dumps_model(model: PosgModel) -> str:
    lines = [f"format {' '.join(FORMAT_TAG)}"]
    if model.name:
        lines.append(f"name {model.name}")
    lines += [
        f"states {model.n_states}",
        f"actions_self {model.n_self}",
        f"actions_other {model.n_other}",
        f"observations {model.n_observations}",
    ]
    if model.opponent_observation is not None:
        lines.append(f"observations_other {model.opponent_observation.shape[2]}")
    lines += [
        f"discount {_number(model.discount)}",
        f"zero_sum {'true' if model.zero_sum else 'false'}",
        f"fully_observable {'true' if model.fully_observable else 'false'}",
    ]
    if model.is_sparse:
        lines.append("[T sparse]")
        matrix = model.transition.tocoo()
        shape = (model.n_states, model.n_self, model.n_other)
        order = np.lexsort((matrix.col, matrix.row))
        for row, col, prob in zip(
            matrix.row[order], matrix.col[order], matrix.data[order]
        ):
            s, u, v = np.unravel_index(row, shape)
            lines.append(f"{s} {u} {v} {col} {_number(prob)}")
    else:
        lines.append("[T]")
        lines += _rows(model.transition)
    lines.append("[Z]")
    lines += _rows(model.observation)
    lines.append("[R]")
    lines += _rows(model.reward)
    lines.append("[b0]")
    lines += _rows(model.initial_belief[None, :])
    if model.opponent_observation is not None:
        lines.append("[Z_other]")
        lines += _rows(model.opponent_observation)
    if model.opponent_reward is not None:
        lines.append("[R_other]")
        lines += _rows(model.opponent_reward)
    if model.legal_self is not None:
        lines.append("[legal_self]")
        lines += _flag_rows(model.legal_self)
    if model.legal_other is not None:
        lines.append("[legal_other]")
        lines += _flag_rows(model.legal_other)
    return "\n".join(lines) + "\n"


class _ModelParser:
    def __init__(self, text: str, renormalize_tolerance: float | None):
        self.text = text
        self.tolerance = getattr(settings, "PROBABILITY_TOLERANCE", 1e-9)
        if renormalize_tolerance is None:
            renormalize_tolerance = getattr(settings, "RENORMALIZE_TOLERANCE", 1e-6)
        self.renormalize_tolerance = renormalize_tolerance
        self.header: dict[str, tuple[int, str]] = {}
        self.sections: dict[str, tuple[int, list[tuple[int, list[str]]]]] = {}
        self.last_line = 0

    def parse(self) -> PosgModel:
        self._scan()
        if "format" not in self.header:
            raise ModelFormatError("missing 'format posg-model 1' header", 1)
        line, value = self.header["format"]
        if tuple(value.split()) != FORMAT_TAG:
            raise ModelFormatError(f"unsupported format {value!r}", line)
        for key in REQUIRED_KEYS:
            if key not in self.header:
                raise ModelFormatError(f"missing header '{key}'", self.last_line)

        n_states = self._count("states")
        n_self = self._count("actions_self")
        n_other = self._count("actions_other")
        n_obs = self._count("observations")
        discount = self._float_header("discount")
        zero_sum = self._flag_header("zero_sum", default=True)
        fully_observable = self._flag_header("fully_observable", default=False)

        if "T" in self.sections and "T sparse" in self.sections:
            raise ModelFormatError(
                "both [T] and [T sparse] given", self.sections["T sparse"][0]
            )
        if "T sparse" in self.sections:
            transition = self._sparse_transition(n_states, n_self, n_other)
        else:
            transition = self._distribution(
                "T", (n_states, n_self, n_other), n_states
            )
        observation = self._distribution("Z", (n_states, n_self), n_obs)
        reward = self._matrix("R", (n_states, n_self), n_other)
        initial_belief = self._distribution("b0", (), n_states)

        opponent_observation = None
        if "Z_other" in self.sections:
            if "observations_other" not in self.header:
                raise ModelFormatError(
                    "[Z_other] needs an 'observations_other' header",
                    self.sections["Z_other"][0],
                )
            opponent_observation = self._distribution(
                "Z_other", (n_states, n_other), self._count("observations_other")
            )
        opponent_reward = None
        if "R_other" in self.sections:
            opponent_reward = self._matrix("R_other", (n_states, n_self), n_other)
        legal_self = self._mask("legal_self", n_states, n_self)
        legal_other = self._mask("legal_other", n_states, n_other)

        return PosgModel(
            transition=transition,
            observation=observation,
            reward=reward,
            discount=discount,
            initial_belief=initial_belief,
            zero_sum=zero_sum,
            opponent_observation=opponent_observation,
            opponent_reward=opponent_reward,
            legal_self=legal_self,
            legal_other=legal_other,
            fully_observable=fully_observable,
            name=self.header.get("name", (0, ""))[1],
        )

    # ---------- scanning ---------- #

    def _scan(self):
        current = None
        for number, raw in enumerate(self.text.splitlines(), start=1):
            self.last_line = number
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                if not line.endswith("]"):
                    raise ModelFormatError(f"malformed section header {line!r}", number)
                current = line[1:-1].strip()
                if current not in SECTIONS:
                    raise ModelFormatError(f"unknown section [{current}]", number)
                if current in self.sections:
                    raise ModelFormatError(f"duplicate section [{current}]", number)
                self.sections[current] = (number, [])
                continue
            if current is None:
                key, _, value = line.partition(" ")
                if key != "format" and key not in HEADER_KEYS:
                    raise ModelFormatError(f"unknown header key {key!r}", number)
                if key in self.header:
                    raise ModelFormatError(f"duplicate header key {key!r}", number)
                self.header[key] = (number, value.strip())
            else:
                self.sections[current][1].append((number, line.split()))

    # ---------- header helpers ---------- #

    def _count(self, key: str) -> int:
        line, value = self.header[key]
        try:
            count = int(value)
        except ValueError:
            raise ModelFormatError(f"{key} must be an integer, got {value!r}", line)
        if count < 1:
            raise ModelFormatError(f"{key} must be positive", line)
        return count

    def _float_header(self, key: str) -> float:
        line, value = self.header[key]
        try:
            return float(value)
        except ValueError:
            raise ModelFormatError(f"{key} must be a number, got {value!r}", line)

    def _flag_header(self, key: str, default: bool) -> bool:
        if key not in self.header:
            return default
        line, value = self.header[key]
        if value.lower() not in ("true", "false"):
            raise ModelFormatError(f"{key} must be true or false", line)
        return value.lower() == "true"

    # ---------- section helpers ---------- #

    def _section_rows(self, name: str, n_rows: int, width: int):
        if name not in self.sections:
            raise ModelFormatError(f"missing section [{name}]", self.last_line)
        header_line, rows = self.sections[name]
        if len(rows) != n_rows:
            line = rows[n_rows][0] if len(rows) > n_rows else self.last_line
            raise ModelFormatError(
                f"section [{name}] needs {n_rows} rows, found {len(rows)}", line
            )
        parsed = []
        for line, tokens in rows:
            if len(tokens) != width:
                raise ModelFormatError(
                    f"expected {width} numbers in [{name}], found {len(tokens)}", line
                )
            try:
                parsed.append([float(token) for token in tokens])
            except ValueError:
                raise ModelFormatError(f"non-numeric entry in [{name}]", line)
        return [line for line, _ in rows], np.array(parsed, dtype=float)

    def _matrix(self, name: str, leading: tuple, width: int) -> np.ndarray:
        _, values = self._section_rows(name, int(np.prod(leading)), width)
        if not np.isfinite(values).all():
            raise ModelFormatError(
                f"non-finite entry in [{name}]", self.sections[name][0]
            )
        return values.reshape(*leading, width)

    def _distribution(self, name: str, leading: tuple, width: int) -> np.ndarray:
        lines, values = self._section_rows(name, int(np.prod(leading)), width)
        for line, row in zip(lines, values):
            self._check_row(name, line, row)
        return values.reshape(*leading, width)

    def _check_row(self, name: str, line: int, row: np.ndarray):
        """Re-normalizes small deviations in place; rejects larger ones."""
        if not np.isfinite(row).all() or (row < 0).any():
            raise ModelFormatError(
                f"[{name}] row has negative or non-finite probabilities", line
            )
        deviation = abs(row.sum() - 1.0)
        if deviation > self.renormalize_tolerance:
            raise ModelFormatError(
                f"[{name}] row sums to {row.sum()!r}; deviation {deviation:.3g} "
                f"exceeds {self.renormalize_tolerance:g}",
                line,
            )
        if deviation > self.tolerance:
            logger.debug("Re-normalizing [%s] row on line %d", name, line)
            row /= row.sum()

    def _sparse_transition(self, n_states: int, n_self: int, n_other: int):
        _, rows = self.sections["T sparse"]
        shape = (n_states, n_self, n_other)
        row_index, col_index, data, first_line = [], [], [], {}
        for line, tokens in rows:
            if len(tokens) != 5:
                raise ModelFormatError("expected 's u v s' p' in [T sparse]", line)
            try:
                s, u, v, target = (int(token) for token in tokens[:4])
                prob = float(tokens[4])
            except ValueError:
                raise ModelFormatError("malformed [T sparse] entry", line)
            if not (
                0 <= s < n_states
                and 0 <= u < n_self
                and 0 <= v < n_other
                and 0 <= target < n_states
            ):
                raise ModelFormatError("[T sparse] index out of range", line)
            flat = int(np.ravel_multi_index((s, u, v), shape))
            first_line.setdefault(flat, line)
            row_index.append(flat)
            col_index.append(target)
            data.append(prob)
        matrix = sparse.csr_matrix(
            (data, (row_index, col_index)),
            shape=(n_states * n_self * n_other, n_states),
        )
        missing = set(range(matrix.shape[0])) - set(first_line)
        if missing:
            s, u, v = np.unravel_index(min(missing), shape)
            raise ModelFormatError(
                f"[T sparse] has no entries for (s={s}, u={u}, v={v})", self.last_line
            )
        for flat, line in first_line.items():
            start, stop = matrix.indptr[flat], matrix.indptr[flat + 1]
            self._check_row("T sparse", line, matrix.data[start:stop])
        return matrix

    def _mask(self, name: str, n_states: int, width: int):
        if name not in self.sections:
            return None
        lines, values = self._section_rows(name, n_states, width)
        for line, row in zip(lines, values):
            if not np.isin(row, (0.0, 1.0)).all():
                raise ModelFormatError(f"[{name}] entries must be 0 or 1", line)
        return values.astype(bool)


def loads_model(text: str, renormalize_tolerance: float | None = None) -> PosgModel:
    return _ModelParser(text, renormalize_tolerance).parse()


def load_model(path, renormalize_tolerance: float | None = None) -> PosgModel:
    text = Path(path).read_text(encoding="utf-8")
    model = loads_model(text, renormalize_tolerance)
    logger.info("Loaded model %s from %s", model.name or "<unnamed>", path)
    return model


def save_model(model: PosgModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_model(model), encoding="utf-8")
    logger.info("Saved model %s to %s", model.name or "<unnamed>", path)
    return path
