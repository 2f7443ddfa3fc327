"""
Text codec for NestedPolicyStack.

    format nested-stack 1
    agent self
    level 2
    horizon 10
    states 3
    actions_self 2
    actions_other 2
    weights 0.5 0.5
    [uniform]              |S| rows over the opponent's actions
    [model other 0]        one section per stored reasoning model
    [Q]                    |S|*|U| rows of |V| numbers (top level)
    [legal]                optional 0/1 rows of the top agent's actions

Only the top Q-table is kept; lower-level Q-tables are not needed to act.
"""

import logging
from pathlib import Path

import numpy as np

from nested.solver import NestedPolicyStack, QTable
from posg.exceptions import ModelFormatError
from posg.tables import Agent, StrategyTable

logger = logging.getLogger(__name__)

FORMAT_TAG = "format nested-stack 1"


def _row(values) -> str:
    return " ".join(format(float(x), ".17g") for x in values)


def dump_stack(stack: NestedPolicyStack) -> str:
    uniform = stack.uniform_prediction.probs
    n_states, n_other = uniform.shape
    n_self = stack.top.q.shape[1] if stack.top is not None else 0
    lines = [
        FORMAT_TAG,
        f"agent {stack.agent.value}",
        f"level {stack.level}",
        f"horizon {stack.horizon}",
        f"states {n_states}",
        f"actions_self {n_self}",
        f"actions_other {n_other}",
        f"weights {_row(stack.level_weights)}".rstrip(),
        "[uniform]",
    ]
    lines += [_row(row) for row in uniform]
    for (agent, level), model in sorted(
        stack.reasoning_models.items(), key=lambda item: (item[0][0].value, item[0][1])
    ):
        lines.append(f"[model {agent.value} {level}]")
        lines += [_row(row) for row in model.probs]
    if stack.top is not None:
        lines.append("[Q]")
        lines += [_row(row) for row in stack.top.q.reshape(-1, n_other)]
    if stack.legal_actions is not None:
        lines.append("[legal]")
        lines += [
            " ".join("1" if x else "0" for x in row) for row in stack.legal_actions
        ]
    return "\n".join(lines) + "\n"


def load_stack(text: str) -> NestedPolicyStack:
    header: dict[str, tuple[int, str]] = {}
    sections: dict[str, tuple[int, list[tuple[int, list[float]]]]] = {}
    current = None
    last = 0
    for number, raw in enumerate(text.splitlines(), start=1):
        last = number
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            sections[current] = (number, [])
            continue
        if current is None:
            key, _, value = line.partition(" ")
            header[key] = (number, value.strip())
            continue
        try:
            sections[current][1].append((number, [float(x) for x in line.split()]))
        except ValueError:
            raise ModelFormatError(f"non-numeric entry in [{current}]", number)

    if header.get("format", (0, ""))[1] != "nested-stack 1":
        raise ModelFormatError("missing 'format nested-stack 1' header", 1)
    try:
        agent = Agent(header["agent"][1])
        level = int(header["level"][1])
        horizon = int(header["horizon"][1])
        n_states = int(header["states"][1])
        n_self = int(header["actions_self"][1])
        n_other = int(header["actions_other"][1])
        weight_text = header.get("weights", (0, ""))[1]
        weights = np.array([float(x) for x in weight_text.split()])
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"bad or missing header: {exc}", last)

    def table(name: str, n_rows: int, width: int) -> np.ndarray:
        if name not in sections:
            raise ModelFormatError(f"missing section [{name}]", last)
        start, rows = sections[name]
        if len(rows) != n_rows:
            raise ModelFormatError(
                f"section [{name}] needs {n_rows} rows, found {len(rows)}", start
            )
        for number, row in rows:
            if len(row) != width:
                raise ModelFormatError(f"expected {width} numbers", number)
        return np.array([row for _, row in rows])

    reasoning = {}
    for name in sections:
        if not name.startswith("model "):
            continue
        _, agent_name, model_level = name.split()
        owner = Agent(agent_name)
        width = n_self if owner is agent else n_other
        reasoning[(owner, int(model_level))] = StrategyTable(
            table(name, n_states, width)
        )
    top = None
    if "Q" in sections:
        top = QTable(
            q=table("Q", n_states * n_self, n_other).reshape(n_states, n_self, n_other),
            horizon=horizon,
            level=level,
            agent=agent,
        )
    legal = None
    if "legal" in sections:
        legal = table("legal", n_states, n_self).astype(bool)
    return NestedPolicyStack(
        agent=agent,
        level=level,
        horizon=horizon,
        level_weights=weights,
        reasoning_models=reasoning,
        uniform_prediction=StrategyTable(table("uniform", n_states, n_other)),
        top=top,
        legal_actions=legal,
    )


def save_stack(stack: NestedPolicyStack, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_stack(stack), encoding="utf-8")
    logger.info("Saved level-%d stack to %s", stack.level, path)
    return path


def read_stack(path) -> NestedPolicyStack:
    return load_stack(Path(path).read_text(encoding="utf-8"))
