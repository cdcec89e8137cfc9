"""Parameter sweeps, trajectory diagnostics and curve fitting."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, InvalidInputError, RankDeficiencyError
from .peaks import count_local_peaks
from .rng import GENERATOR_ID, RngPolicy
from .tasks import (
    DEFAULT_RUNS,
    MonteCarloResult,
    RunOutcome,
    TaskConfig,
    aggregate,
    collect_outcomes,
)

__all__ = [
    "AXES", "Axis", "PolyFit", "SweepCell", "SweepResult", "SweepSpec", "argmax_on_interval",
    "capability_partition", "conditional_summary", "count_local_peaks", "fit_polynomial",
    "resolve_cell", "round_half_away", "sweep",
]

# axis name -> (TaskConfig field, ratio base field or None for direct values)
AXES = {
    "n_ratio": ("n_ai", "n_h"),
    "k_ratio": ("k_h", "k_ai"),
    "c_ratio": ("c", "k_ai"),
    "n_ai": ("n_ai", None),
    "k_h": ("k_h", None),
    "c": ("c", None),
}


def round_half_away(x: float) -> int:
    return int(Decimal(repr(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.name not in AXES:
            raise ConfigError("unknown-key", f"unknown sweep axis {self.name!r}, expected one of {sorted(AXES)}")
        values = tuple(self.values)
        if not values:
            raise ConfigError("constraint-violation", f"axis {self.name!r} has no values")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("constraint-violation", f"axis {self.name!r} values must be strictly increasing")
        object.__setattr__(self, "values", values)


@dataclass(frozen=True)
class SweepSpec:
    task: TaskConfig
    axis1: Axis
    axis2: Axis
    n_runs: int = DEFAULT_RUNS
    policy: RngPolicy = RngPolicy(0)

    def __post_init__(self) -> None:
        if AXES[self.axis1.name][0] == AXES[self.axis2.name][0]:
            raise ConfigError("constraint-violation", "both axes set the same parameter")
        if not isinstance(self.n_runs, int) or self.n_runs < 1:
            raise ConfigError("constraint-violation", "n_runs must be a positive integer")

    def to_dict(self) -> dict:
        return {
            "task": self.task.to_dict(),
            "axis1": {"name": self.axis1.name, "values": list(self.axis1.values)},
            "axis2": {"name": self.axis2.name, "values": list(self.axis2.values)},
            "n_runs": self.n_runs,
            "master_seed": self.policy.master_seed,
        }


def _realize(cfg: TaskConfig, name: str, value: float, current: dict) -> int:
    target, base = AXES[name]
    if base is None:
        if value != int(value):
            raise ConfigError("type-mismatch", f"axis {name!r} needs integer values, got {value}")
        return int(value)
    size = round_half_away(value * current[base])
    if name == "n_ratio":
        # |N_AI| > |N_H| must hold even at ratio 1
        size = max(size, current["n_h"] + 1)
    return size


def resolve_cell(template: TaskConfig, axis1: Axis, v1: float, axis2: Axis, v2: float) -> tuple[TaskConfig, dict]:
    """TaskConfig for one grid point, plus the integer sizes it realised."""
    s = template.structure
    current = {
        "n_h": template.human.n, "k_h": template.human.k,
        "n_ai": template.ai.n, "k_ai": template.ai.k, "c": getattr(s, "c", None),
    }
    changes = {}
    for axis, v in ((axis1, v1), (axis2, v2)):
        target = AXES[axis.name][0]
        if target == "c" and current["c"] is None:
            raise ConfigError("constraint-violation", f"axis {axis.name!r} needs a sequenced task")
        changes[target] = _realize(template, axis.name, v, current)
    current.update(changes)
    try:
        cfg = template.replace(**changes)
    except ConfigError as exc:
        raise ConfigError(
            exc.code, f"grid cell ({axis1.name}={v1}, {axis2.name}={v2}) is invalid: {exc}") from exc
    realized = {k: current[k] for k in ("n_ai", "k_h", "c") if current[k] is not None}
    return cfg, realized


@dataclass(frozen=True)
class SweepCell:
    coords: tuple[float, float]
    realized: dict
    result: MonteCarloResult

    def to_dict(self) -> dict:
        return {"coords": list(self.coords), "realized": dict(self.realized), "result": self.result.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "SweepCell":
        return cls(tuple(d["coords"]), dict(d["realized"]), MonteCarloResult.from_dict(d["result"]))


@dataclass(frozen=True)
class SweepResult:
    cells: tuple[SweepCell, ...]
    metadata: dict = field(default_factory=dict)

    def cell(self, v1: float, v2: float) -> SweepCell:
        for c in self.cells:
            if c.coords == (v1, v2):
                return c
        raise KeyError((v1, v2))

    def series(self, v2: float) -> list[SweepCell]:
        """Cells along axis 1 for a fixed axis-2 value."""
        return [c for c in self.cells if c.coords[1] == v2]

    def to_dict(self) -> dict:
        return {"cells": [c.to_dict() for c in self.cells], "metadata": self.metadata}

    @classmethod
    def from_dict(cls, d: dict) -> "SweepResult":
        return cls(tuple(SweepCell.from_dict(c) for c in d["cells"]), dict(d["metadata"]))


def _run_cell(args) -> MonteCarloResult:
    cfg, n_runs, seed, workers, keep_runs = args
    cell_id = cfg.cell_key()
    return aggregate(collect_outcomes(cfg, n_runs, seed, cell_id, workers), seed, cell_id, keep_runs)


def sweep(spec: SweepSpec, workers: int = 1, keep_runs: bool = False, timestamp: str | None = None) -> SweepResult:
    """Monte Carlo estimate at every grid point, in row-major (axis1, axis2) order.

    Cells draw streams from ``spec.policy.master_seed`` and their own
    configuration key, so a cell's result equals a direct ``monte_carlo``
    call with the same seed.
    """
    grid = [(v1, v2) for v1 in spec.axis1.values for v2 in spec.axis2.values]
    resolved = [resolve_cell(spec.task, spec.axis1, v1, spec.axis2, v2) for v1, v2 in grid]
    seed = spec.policy.master_seed
    if workers > 1 and len(grid) > 1:
        jobs = [(cfg, spec.n_runs, seed, 1, keep_runs) for cfg, _ in resolved]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell((cfg, spec.n_runs, seed, workers, keep_runs)) for cfg, _ in resolved]
    cells = tuple(
        SweepCell((float(v1), float(v2)), realized, res)
        for (v1, v2), (_, realized), res in zip(grid, resolved, results)
    )
    metadata = {
        "spec": spec.to_dict(),
        "master_seed": seed,
        "generator": GENERATOR_ID,
        "rounding": "ratio sizes rounded half away from zero; n_ai raised to n_h+1 when needed",
        "timestamp": timestamp,
    }
    return SweepResult(cells, metadata)


def capability_partition(
    results: Sequence[RunOutcome], hi: float = 0.6, lo: float = 0.4,
) -> tuple[list[RunOutcome], list[RunOutcome], list[RunOutcome]]:
    """Split runs into (high, low, mid) by the leading agent's Step-1 payoff."""
    if not 0 <= lo < hi <= 1:
        raise InvalidInputError(f"need 0 <= lo < hi <= 1, got lo={lo}, hi={hi}")
    hi_f, lo_f = Fraction(hi), Fraction(lo)
    high, low, mid = [], [], []
    for r in results:
        if r.h_capability_payoff >= hi_f:
            high.append(r)
        elif r.h_capability_payoff <= lo_f:
            low.append(r)
        else:
            mid.append(r)
    return high, low, mid


def conditional_summary(result: MonteCarloResult, hi: float = 0.6, lo: float = 0.4) -> dict:
    """Aggregates over the high- and low-capability subsets of a cell's runs."""
    if result.runs is None:
        raise InvalidInputError("conditional summaries need a result computed with keep_runs=True")
    high, low, _ = capability_partition(result.runs, hi, lo)
    return {"high": aggregate(high) if high else None, "low": aggregate(low) if low else None}


@dataclass(frozen=True)
class PolyFit:
    coeffs: tuple[float, ...]  # ascending powers
    residual_norm: float

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)


def fit_polynomial(points: Iterable[tuple[float, float]], degree: int) -> PolyFit:
    """Least-squares polynomial of ``degree`` <= 3 through ``points``.

    Solved with an SVD-based least-squares solve of the Vandermonde system
    (``numpy.linalg.lstsq``) rather than forming the normal equations.
    """
    pts = list(points)
    if not 0 <= degree <= 3:
        raise InvalidInputError(f"degree must be between 0 and 3, got {degree}")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if len(np.unique(x)) < degree + 1:
        raise RankDeficiencyError(f"degree {degree} needs {degree + 1} distinct x values, got {len(np.unique(x))}")
    vander = np.vander(x, degree + 1, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(vander, y, rcond=None)
    if rank < degree + 1:
        raise RankDeficiencyError(f"design matrix has rank {rank} < {degree + 1}")
    residual = float(np.linalg.norm(vander @ coeffs - y))
    return PolyFit(tuple(float(c) for c in coeffs), residual)


def _polyval(coeffs: Sequence[float], x: float) -> float:
    return float(sum(c * x ** i for i, c in enumerate(coeffs)))


def argmax_on_interval(coeffs: Sequence[float], lo: float, hi: float) -> tuple[float, float]:
    """Maximiser of a polynomial of degree <= 3 over ``[lo, hi]``.

    Candidates are the endpoints and the real roots of the derivative inside
    the interval; ties go to the smallest x.
    """
    if not lo < hi:
        raise InvalidInputError(f"need lo < hi, got [{lo}, {hi}]")
    c = list(coeffs) + [0.0] * (4 - len(coeffs))
    if len(c) > 4:
        raise InvalidInputError("degree must be at most 3")
    # derivative: 3 c3 x^2 + 2 c2 x + c1
    a, b, d = 3 * c[3], 2 * c[2], c[1]
    candidates = [lo, hi]
    if a != 0:
        disc = b * b - 4 * a * d
        if disc >= 0:
            sq = math.sqrt(disc)
            # numerically stable pair of roots
            q = -0.5 * (b + math.copysign(sq, b)) if b != 0 else -0.5 * sq
            roots = [q / a] + ([d / q] if q != 0 else [-q / a])
            candidates += roots
    elif b != 0:
        candidates.append(-d / b)
    best_x, best_y = None, -math.inf
    for x in sorted(x for x in candidates if lo <= x <= hi):
        y = _polyval(c, x)
        if y > best_y:
            best_x, best_y = x, y
    return float(best_x), float(best_y)


def raw_argmax(cells: Sequence[SweepCell]) -> SweepCell:
    """Cell with the largest mean APO (first on ties)."""
    return max(cells, key=lambda c: c.result.mean_apo)
