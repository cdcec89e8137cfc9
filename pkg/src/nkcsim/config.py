"""Experiment files.

An experiment file is a YAML mapping::

    master_seed: 42          # required, unsigned 64-bit
    n_runs: 1000             # default 1000
    workers: 1               # default 1
    task:
      kind: h_to_ai          # modular | ai_to_h | h_to_ai
      c: 4                   # sequenced tasks only
      perpetuation: rule     # h_to_ai only: rule | hallucinatory
    human:
      n: 10
      k: 2
      mode: probabilistic    # probabilistic | threshold
      tie_maps_to_one: false # threshold mode only
    ai:
      n: 50
      k: 4
      rule: uniform          # uniform | hallucinatory (modular only)
      mode: probabilistic
    sweep:                   # optional; required by the ``sweep`` command
      axis1: {name: n_ratio, values: [1, 2, 3]}
      axis2: {name: k_ratio, values: [0.5, 1, 2]}
    output:
      path: results.csv
      format: csv            # csv | json

Unknown keys are errors. Every problem is reported as a
:class:`~nkcsim.errors.ConfigError` naming the key and its line.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import yaml

from .adaptation import AgentSpec, Perpetuation, Probabilistic, Role, Rule, Threshold
from .errors import ConfigError, ModelError
from .harness import AXES, Axis, SweepSpec
from .rng import RngPolicy
from .tasks import DEFAULT_RUNS, AiToH, HToAi, Modular, TaskConfig

_SCHEMA: dict[str, Any] = {
    "master_seed": int,
    "n_runs": int,
    "workers": int,
    "task": {"kind": str, "c": int, "perpetuation": str},
    "human": {"n": int, "k": int, "rule": str, "mode": str, "tie_maps_to_one": bool},
    "ai": {"n": int, "k": int, "rule": str, "mode": str, "tie_maps_to_one": bool},
    "sweep": {
        "axis1": {"name": str, "values": list},
        "axis2": {"name": str, "values": list},
    },
    "output": {"path": str, "format": str},
}


@dataclass(frozen=True)
class ExperimentFile:
    task: TaskConfig
    master_seed: int
    n_runs: int = DEFAULT_RUNS
    workers: int = 1
    axis1: Axis | None = None
    axis2: Axis | None = None
    output_path: str | None = None
    output_format: str = "csv"

    def sweep_spec(self) -> SweepSpec:
        if self.axis1 is None or self.axis2 is None:
            raise ConfigError("missing-field", "experiment has no sweep block", key="sweep")
        return SweepSpec(self.task, self.axis1, self.axis2, self.n_runs, RngPolicy(self.master_seed))


class _Tree:
    """YAML mapping with the line number of every key."""

    def __init__(self, node: yaml.Node, path: str = "") -> None:
        self.values: dict[str, Any] = {}
        self.lines: dict[str, int] = {}
        self._walk(node, path)

    def _walk(self, node: yaml.Node, path: str) -> None:
        if not isinstance(node, yaml.MappingNode):
            raise ConfigError("type-mismatch", "expected a mapping", key=path or "<root>",
                              line=node.start_mark.line + 1)
        for knode, vnode in node.value:
            key = f"{path}.{knode.value}" if path else str(knode.value)
            line = knode.start_mark.line + 1
            if key in self.lines:
                raise ConfigError("syntax", "duplicate key", key=key, line=line)
            self.lines[key] = line
            if isinstance(vnode, yaml.MappingNode):
                self._walk(vnode, key)
                self.values[key] = {}
            else:
                self.values[key] = yaml.safe_load(yaml.serialize(vnode))

    def line(self, key: str) -> int | None:
        return self.lines.get(key)


def _schema_for(path: str):
    node: Any = _SCHEMA
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            return None
        node = node[part]
    return node


def _check_types(tree: _Tree) -> None:
    for key, value in tree.values.items():
        expected = _schema_for(key)
        line = tree.line(key)
        if expected is None:
            raise ConfigError("unknown-key", "unknown key", key=key, line=line)
        if isinstance(expected, dict):
            if value != {}:
                raise ConfigError("type-mismatch", "expected a mapping", key=key, line=line)
            continue
        ok = isinstance(value, expected) and not (expected is int and isinstance(value, bool))
        if not ok:
            raise ConfigError(
                "type-mismatch", f"expected {expected.__name__}, got {type(value).__name__}",
                key=key, line=line)


def _choice(tree: _Tree, key: str, options: dict, default: str | None = None):
    raw = tree.values.get(key, default)
    if raw is None:
        raise ConfigError("missing-field", "required", key=key)
    if raw not in options:
        raise ConfigError(
            "type-mismatch", f"expected one of {sorted(options)}, got {raw!r}", key=key, line=tree.line(key))
    return options[raw]


def _required(tree: _Tree, key: str):
    if key not in tree.values:
        raise ConfigError("missing-field", "required", key=key)
    return tree.values[key]


def _agent(tree: _Tree, tag: str, role: Role) -> AgentSpec:
    if role is Role.HUMAN:
        rule = _choice(tree, f"{tag}.rule", {"heuristic": Rule.HEURISTIC_LINEAR}, "heuristic")
    else:
        rule = _choice(tree, f"{tag}.rule",
                       {"uniform": Rule.RULE_UNIFORM, "hallucinatory": Rule.HALLUCINATORY}, "uniform")
    mode_name = _choice(tree, f"{tag}.mode", {"probabilistic": "p", "threshold": "t"}, "probabilistic")
    tie = tree.values.get(f"{tag}.tie_maps_to_one", False)
    if mode_name == "p" and f"{tag}.tie_maps_to_one" in tree.values:
        raise ConfigError("constraint-violation", "tie rule only applies to threshold mode",
                          key=f"{tag}.tie_maps_to_one", line=tree.line(f"{tag}.tie_maps_to_one"))
    mode = Probabilistic() if mode_name == "p" else Threshold(tie)
    n, k = _required(tree, f"{tag}.n"), _required(tree, f"{tag}.k")
    try:
        return AgentSpec(role, n, k, rule, mode)
    except ModelError as exc:
        raise ConfigError("constraint-violation", str(exc), key=f"{tag}.k", line=tree.line(f"{tag}.k")) from exc


def _axis(tree: _Tree, tag: str) -> Axis:
    name = _required(tree, f"sweep.{tag}.name")
    values = _required(tree, f"sweep.{tag}.values")
    line = tree.line(f"sweep.{tag}.values")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ConfigError("type-mismatch", "axis values must be numbers", key=f"sweep.{tag}.values", line=line)
    if name not in AXES:
        raise ConfigError("unknown-key", f"unknown axis, expected one of {sorted(AXES)}",
                          key=f"sweep.{tag}.name", line=tree.line(f"sweep.{tag}.name"))
    try:
        return Axis(name, tuple(float(v) for v in values))
    except ConfigError as exc:
        raise ConfigError(exc.code, str(exc), key=f"sweep.{tag}.values", line=line) from exc


def parse_experiment(text: str) -> ExperimentFile:
    """Parse and fully validate an experiment file."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("syntax", str(exc).splitlines()[0], key="<document>",
                          line=mark.line + 1 if mark else None) from exc
    if root is None:
        raise ConfigError("missing-field", "empty experiment file", key="master_seed")
    tree = _Tree(root)
    _check_types(tree)

    seed = _required(tree, "master_seed")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("constraint-violation", "master_seed must be an unsigned 64-bit integer",
                          key="master_seed", line=tree.line("master_seed"))
    n_runs = tree.values.get("n_runs", DEFAULT_RUNS)
    if n_runs < 1:
        raise ConfigError("constraint-violation", "n_runs must be positive", key="n_runs", line=tree.line("n_runs"))
    workers = tree.values.get("workers", 1)
    if workers < 1:
        raise ConfigError("constraint-violation", "workers must be positive", key="workers", line=tree.line("workers"))

    kind = _choice(tree, "task.kind", {"modular": "modular", "ai_to_h": "ai_to_h", "h_to_ai": "h_to_ai"})
    human = _agent(tree, "human", Role.HUMAN)
    ai = _agent(tree, "ai", Role.AI)
    if kind == "modular":
        for extra in ("task.c", "task.perpetuation"):
            if extra in tree.values:
                raise ConfigError("constraint-violation", "modular tasks have no coevolution parameters",
                                  key=extra, line=tree.line(extra))
        structure: Any = Modular()
    else:
        c = _required(tree, "task.c")
        if kind == "ai_to_h":
            if "task.perpetuation" in tree.values:
                raise ConfigError("constraint-violation", "perpetuation only applies to h_to_ai",
                                  key="task.perpetuation", line=tree.line("task.perpetuation"))
            structure = AiToH(c)
        else:
            perp = _choice(tree, "task.perpetuation",
                           {"rule": Perpetuation.RULE_BASED, "hallucinatory": Perpetuation.HALLUCINATORY}, "rule")
            structure = HToAi(c, perp)
    try:
        task = TaskConfig(structure, human, ai)
    except ConfigError as exc:
        key = "ai.n" if "|N_AI|" in str(exc) else ("task.c" if "c=" in str(exc) else "ai.rule")
        raise ConfigError(exc.code, str(exc).split(": ", 1)[-1], key=key, line=tree.line(key)) from exc

    axis1 = axis2 = None
    if "sweep" in tree.values:
        axis1, axis2 = _axis(tree, "axis1"), _axis(tree, "axis2")
        try:
            SweepSpec(task, axis1, axis2, n_runs, RngPolicy(seed))
        except ConfigError as exc:
            raise ConfigError(exc.code, str(exc), key="sweep", line=tree.line("sweep")) from exc

    fmt = _choice(tree, "output.format", {"csv": "csv", "json": "json"}, "csv")
    return ExperimentFile(
        task=task, master_seed=seed, n_runs=n_runs, workers=workers, axis1=axis1, axis2=axis2,
        output_path=tree.values.get("output.path"), output_format=fmt,
    )
