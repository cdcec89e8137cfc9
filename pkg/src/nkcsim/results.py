"""Result envelopes and their CSV / JSON serialisation.

CSV column order is fixed; new columns are only ever appended.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Union

from . import __version__
from .harness import SweepResult, SweepSpec, sweep
from .rng import GENERATOR_ID, RngPolicy
from .tasks import AiToH, HToAi, MonteCarloResult, TaskConfig, monte_carlo

CSV_COLUMNS = (
    "axis1", "axis2", "realized_n_ai", "realized_k_h_or_c", "mean_po_h", "mean_po_ai",
    "mean_apo", "std_error_apo", "mean_peaks_step1", "mean_peaks_step2",
)
FORMAT_TAG = "nkcsim-result/1"

Payload = Union[SweepResult, MonteCarloResult]


class SerializationError(RuntimeError):
    """Internal error: a result held a value that cannot be serialised."""


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass(frozen=True)
class ResultEnvelope:
    payload: Payload
    rerun: dict  # everything needed to recompute the payload
    tool_version: str = __version__
    generator: str = GENERATOR_ID

    @property
    def master_seed(self) -> int:
        return self.rerun["master_seed"]

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(_canonical(self.rerun).encode()).hexdigest()

    def to_dict(self) -> dict:
        kind = "sweep" if isinstance(self.payload, SweepResult) else "monte_carlo"
        return {
            "format": FORMAT_TAG,
            "provenance": {
                "config_hash": self.config_hash,
                "tool_version": self.tool_version,
                "generator": self.generator,
                "master_seed": self.master_seed,
                "rerun": self.rerun,
            },
            "payload": {"type": kind, "data": self.payload.to_dict()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResultEnvelope":
        if d.get("format") != FORMAT_TAG:
            raise ValueError(f"not an {FORMAT_TAG} document")
        prov, body = d["provenance"], d["payload"]
        if body["type"] == "sweep":
            payload: Payload = SweepResult.from_dict(body["data"])
        else:
            payload = MonteCarloResult.from_dict(body["data"])
        env = cls(payload, prov["rerun"], prov["tool_version"], prov["generator"])
        if env.config_hash != prov["config_hash"]:
            raise ValueError("config hash does not match the rerun block")
        return env


def envelope_for_monte_carlo(task: TaskConfig, n_runs: int, policy: RngPolicy, result: MonteCarloResult) -> ResultEnvelope:
    rerun = {
        "kind": "monte_carlo", "task": task.to_dict(), "n_runs": n_runs,
        "master_seed": policy.master_seed, "cell_id": result.cell_id,
    }
    return ResultEnvelope(result, rerun)


def envelope_for_sweep(spec: SweepSpec, result: SweepResult) -> ResultEnvelope:
    rerun = {"kind": "sweep", "master_seed": spec.policy.master_seed, "spec": spec.to_dict()}
    return ResultEnvelope(result, rerun)


def rerun(env: ResultEnvelope, workers: int = 1) -> ResultEnvelope:
    """Recompute an envelope's payload from its provenance block."""
    r = env.rerun
    if r["kind"] == "monte_carlo":
        task = TaskConfig.from_dict(r["task"])
        policy = RngPolicy(r["master_seed"], r["cell_id"])
        return envelope_for_monte_carlo(task, r["n_runs"], policy, monte_carlo(task, r["n_runs"], policy, workers))
    from .harness import Axis

    s = r["spec"]
    spec = SweepSpec(
        TaskConfig.from_dict(s["task"]),
        Axis(s["axis1"]["name"], tuple(s["axis1"]["values"])),
        Axis(s["axis2"]["name"], tuple(s["axis2"]["values"])),
        s["n_runs"], RngPolicy(s["master_seed"]),
    )
    return envelope_for_sweep(spec, sweep(spec, workers=workers, timestamp=env.payload.metadata.get("timestamp")))


def to_json(env: ResultEnvelope) -> str:
    try:
        return json.dumps(env.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"
    except ValueError as exc:
        raise SerializationError(f"non-finite value in result: {exc}") from exc


def parse_json(text: str) -> ResultEnvelope:
    return ResultEnvelope.from_dict(json.loads(text))


def _num(x: float) -> str:
    if not math.isfinite(x):
        raise SerializationError(f"non-finite value {x!r} in result")
    return repr(float(x))


def _row(a1, a2, n_ai, k_or_c, r: MonteCarloResult) -> list[str]:
    return [
        "" if a1 is None else _num(a1), "" if a2 is None else _num(a2), str(n_ai), str(k_or_c),
        _num(r.mean_po_h), _num(r.mean_po_ai), _num(r.mean_apo), _num(r.std_error_apo),
        _num(r.mean_peaks_step1), _num(r.mean_peaks_step2),
    ]


def to_csv(env: ResultEnvelope) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    p = env.payload
    if isinstance(p, SweepResult):
        axis2 = p.metadata["spec"]["axis2"]["name"]
        use_c = axis2 in ("c_ratio", "c")
        for cell in p.cells:
            k_or_c = cell.realized["c"] if use_c else cell.realized["k_h"]
            w.writerow(_row(cell.coords[0], cell.coords[1], cell.realized["n_ai"], k_or_c, cell.result))
    else:
        task = TaskConfig.from_dict(env.rerun["task"])
        s = task.structure
        k_or_c = s.c if isinstance(s, (AiToH, HToAi)) else task.human.k
        w.writerow(_row(None, None, task.ai.n, k_or_c, p))
    return buf.getvalue()


def atomic_write(destination: str, text: str) -> int:
    """Write ``text`` via a temporary file and rename; returns bytes written."""
    data = text.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(destination))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(destination))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, destination)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(data)


def emit_results(env: ResultEnvelope, fmt: str, destination: str) -> int:
    if fmt == "csv":
        text = to_csv(env)
    elif fmt == "json":
        text = to_json(env)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return atomic_write(destination, text)
