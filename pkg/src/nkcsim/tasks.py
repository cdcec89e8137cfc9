"""Task structures (modular, AI-to-H, H-to-AI) and Monte Carlo averaging.

Two execution paths produce the same per-run outcomes:

* ``run_modular`` / ``run_ai_to_h`` / ``run_h_to_ai`` drive the exact
  primitives in :mod:`nkcsim.adaptation` one state at a time;
* ``simulate_runs`` vectorises a block of runs with numpy. Every run still
  owns its derived stream and the engine takes uniforms from it in the same
  order as the scalar path, so both paths agree bit for bit.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .adaptation import (
    AgentSpec,
    BitSequence,
    Perpetuation,
    Probabilistic,
    Role,
    Rule,
    Step,
    Threshold,
    UpdateMode,
    generate_from_seed_window,
    generate_self_seeded,
    payoff,
    weights,
)
from .errors import ConfigError
from .peaks import count_local_peaks, count_local_peaks_rows
from .rng import GENERATOR_ID, RngPolicy, run_stream

DEFAULT_RUNS = 1000


@dataclass(frozen=True)
class Modular:
    pass


@dataclass(frozen=True)
class AiToH:
    c: int


@dataclass(frozen=True)
class HToAi:
    c: int
    perpetuation: Perpetuation = Perpetuation.RULE_BASED


Structure = Union[Modular, AiToH, HToAi]


def mode_label(mode: UpdateMode) -> str:
    if isinstance(mode, Probabilistic):
        return "probabilistic"
    return "threshold-tie1" if mode.tie_maps_to_one else "threshold-tie0"


def parse_mode(label: str) -> UpdateMode:
    modes = {
        "probabilistic": Probabilistic(),
        "threshold-tie0": Threshold(False),
        "threshold-tie1": Threshold(True),
    }
    try:
        return modes[label]
    except KeyError:
        raise ConfigError("type-mismatch", f"unknown update mode {label!r}, expected one of {sorted(modes)}") from None


@dataclass(frozen=True)
class TaskConfig:
    structure: Structure
    human: AgentSpec
    ai: AgentSpec

    def __post_init__(self) -> None:
        if self.human.role is not Role.HUMAN or self.ai.role is not Role.AI:
            raise ConfigError("constraint-violation", "agent roles must be (human, ai)")
        if self.ai.n <= self.human.n:
            raise ConfigError(
                "constraint-violation",
                f"|N_AI| > |N_H| is required, got n_ai={self.ai.n}, n_h={self.human.n}",
            )
        s = self.structure
        if isinstance(s, Modular):
            return
        if self.ai.rule is not Rule.RULE_UNIFORM:
            raise ConfigError(
                "constraint-violation",
                "sequenced tasks need a uniform-rule AI (use hallucinatory perpetuation instead)",
            )
        if isinstance(s, AiToH):
            if not 1 <= s.c <= self.ai.n - 1:
                raise ConfigError("constraint-violation", f"AI-to-H needs 1 <= c <= n_ai-1, got c={s.c}")
        elif isinstance(s, HToAi):
            if not 1 <= s.c <= self.human.n:
                raise ConfigError("constraint-violation", f"H-to-AI needs 1 <= c <= n_h, got c={s.c}")
        else:
            raise ConfigError("constraint-violation", f"unknown task structure {s!r}")

    @property
    def kind(self) -> str:
        return {Modular: "modular", AiToH: "ai_to_h", HToAi: "h_to_ai"}[type(self.structure)]

    def cell_key(self) -> str:
        """Canonical text identifying this configuration; used to derive streams."""
        s = self.structure
        parts = [self.kind]
        if isinstance(s, AiToH):
            parts.append(f"c={s.c}")
        elif isinstance(s, HToAi):
            parts.append(f"c={s.c},{s.perpetuation.value}")
        for tag, a in (("h", self.human), ("ai", self.ai)):
            parts.append(f"{tag}=n{a.n},k{a.k},{a.rule.value},{mode_label(a.mode)}")
        return ";".join(parts)

    def to_dict(self) -> dict:
        s = self.structure
        d: dict = {"kind": self.kind}
        if isinstance(s, (AiToH, HToAi)):
            d["c"] = s.c
        if isinstance(s, HToAi):
            d["perpetuation"] = s.perpetuation.value
        for tag, a in (("human", self.human), ("ai", self.ai)):
            d[tag] = {"n": a.n, "k": a.k, "rule": a.rule.value, "mode": mode_label(a.mode)}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TaskConfig":
        return make_config(
            d["kind"], d["human"]["n"], d["human"]["k"], d["ai"]["n"], d["ai"]["k"],
            c=d.get("c"), perpetuation=Perpetuation(d.get("perpetuation", "rule")),
            mode=parse_mode(d["human"]["mode"]), ai_mode=parse_mode(d["ai"]["mode"]),
            ai_rule=Rule(d["ai"]["rule"]),
        )

    def replace(self, **changes) -> "TaskConfig":
        """Copy with some of n_h, k_h, n_ai, k_ai, c, perpetuation changed."""
        s = self.structure
        fields = {
            "n_h": self.human.n, "k_h": self.human.k, "n_ai": self.ai.n, "k_ai": self.ai.k,
            "c": getattr(s, "c", None),
            "perpetuation": getattr(s, "perpetuation", Perpetuation.RULE_BASED),
        }
        unknown = set(changes) - set(fields)
        if unknown:
            raise ConfigError("unknown-key", f"cannot replace {sorted(unknown)}")
        fields.update(changes)
        return make_config(
            self.kind, fields["n_h"], fields["k_h"], fields["n_ai"], fields["k_ai"],
            c=fields["c"], perpetuation=fields["perpetuation"], mode=self.human.mode,
            ai_mode=self.ai.mode, ai_rule=self.ai.rule,
        )


@dataclass(frozen=True)
class RunOutcome:
    po_h: Fraction
    po_ai: Fraction
    peaks_step1: int
    peaks_step2: int
    h_capability_payoff: Fraction

    @property
    def apo(self) -> Fraction:
        return (self.po_h + self.po_ai) / 2


def _peaks(trace: list[Step]) -> int:
    values = [s.value for s in trace if s.value is not None]
    return count_local_peaks(values) if values else 0


# Step order for peaks: modular and AI-to-H report (AI, H); H-to-AI reports (H, AI).

def run_modular(cfg: TaskConfig, rng: np.random.Generator) -> RunOutcome:
    if not isinstance(cfg.structure, Modular):
        raise ConfigError("constraint-violation", "run_modular needs a modular task")
    h_trace: list[Step] = []
    ai_trace: list[Step] = []
    h = generate_self_seeded(cfg.human, rng, h_trace)
    ai = generate_self_seeded(cfg.ai, rng, ai_trace)
    po_h = payoff(h)
    return RunOutcome(po_h, payoff(ai), _peaks(ai_trace), _peaks(h_trace), po_h)


def run_ai_to_h(cfg: TaskConfig, rng: np.random.Generator) -> RunOutcome:
    s = cfg.structure
    if not isinstance(s, AiToH):
        raise ConfigError("constraint-violation", "run_ai_to_h needs an AI-to-H task")
    ai_trace: list[Step] = []
    h_trace: list[Step] = []
    ai = generate_self_seeded(cfg.ai, rng, ai_trace)
    h = generate_from_seed_window(
        ai.states[:s.c], s.c, cfg.human.n, Rule.HEURISTIC_LINEAR, cfg.human.mode,
        Perpetuation.RULE_BASED, rng, h_trace,
    )
    po_ai = payoff(ai)
    return RunOutcome(payoff(h), po_ai, _peaks(ai_trace), _peaks(h_trace), po_ai)


def run_h_to_ai(cfg: TaskConfig, rng: np.random.Generator) -> RunOutcome:
    s = cfg.structure
    if not isinstance(s, HToAi):
        raise ConfigError("constraint-violation", "run_h_to_ai needs an H-to-AI task")
    h_trace: list[Step] = []
    ai_trace: list[Step] = []
    h = generate_self_seeded(cfg.human, rng, h_trace)
    ai = generate_from_seed_window(
        h, s.c, cfg.ai.n, Rule.RULE_UNIFORM, cfg.ai.mode, s.perpetuation, rng, ai_trace,
    )
    po_h = payoff(h)
    return RunOutcome(po_h, payoff(ai), _peaks(h_trace), _peaks(ai_trace), po_h)


def run_task(cfg: TaskConfig, rng: np.random.Generator) -> RunOutcome:
    runner = {Modular: run_modular, AiToH: run_ai_to_h, HToAi: run_h_to_ai}[type(cfg.structure)]
    return runner(cfg, rng)


# --- batch engine -----------------------------------------------------------

def _self_seeded_draws(spec: AgentSpec) -> int:
    if spec.k == 0 or spec.rule is Rule.HALLUCINATORY:
        return spec.n
    return spec.k + (spec.n - spec.k if isinstance(spec.mode, Probabilistic) else 0)


def _seed_window_draws(n_base: int, target: int, mode: UpdateMode, perp: Perpetuation) -> int:
    if isinstance(mode, Probabilistic):
        return target
    if perp is Perpetuation.HALLUCINATORY:
        return max(0, target - n_base)
    return 0


def draws_needed(cfg: TaskConfig) -> int:
    """Number of uniforms one run takes from its stream."""
    s = cfg.structure
    if isinstance(s, Modular):
        return _self_seeded_draws(cfg.human) + _self_seeded_draws(cfg.ai)
    if isinstance(s, AiToH):
        return _self_seeded_draws(cfg.ai) + _seed_window_draws(
            s.c, cfg.human.n, cfg.human.mode, Perpetuation.RULE_BASED)
    return _self_seeded_draws(cfg.human) + _seed_window_draws(
        cfg.human.n, cfg.ai.n, cfg.ai.mode, s.perpetuation)


class _Columns:
    def __init__(self, uniforms: np.ndarray) -> None:
        self.u = uniforms
        self.col = 0

    def take(self) -> np.ndarray:
        out = self.u[:, self.col]
        self.col += 1
        return out


def _bits(num: np.ndarray, den: int, mode: UpdateMode, cols: _Columns) -> np.ndarray:
    if isinstance(mode, Threshold):
        bit = 2 * num > den
        if mode.tie_maps_to_one:
            bit |= 2 * num == den
        return bit.astype(np.int64)
    # reduce like Fraction does so the float comparison matches the scalar path
    g = np.gcd(num, den)
    return (cols.take() * (den // g) < num // g).astype(np.int64)


def _batch_self_seeded(spec: AgentSpec, cols: _Columns, n_runs: int) -> tuple[np.ndarray, np.ndarray]:
    n, k = spec.n, spec.k
    x = np.zeros((n_runs, n), dtype=np.int64)
    memoryless = k == 0 or spec.rule is Rule.HALLUCINATORY
    n_initial = n if memoryless else k
    for i in range(n_initial):
        x[:, i] = cols.take() < 0.5
    traj = np.zeros((n_runs, n - n_initial), dtype=np.int64)
    if memoryless:
        return x, traj
    w = np.asarray(weights(spec.rule, k), dtype=np.int64)
    den = int(w.sum())
    for i in range(n_initial, n):
        num = x[:, i - k:i] @ w
        traj[:, i - n_initial] = num
        x[:, i] = _bits(num, den, spec.mode, cols)
    return x, traj


def _batch_seed_window(
    base: np.ndarray, width: int, target: int, rule: Rule, mode: UpdateMode,
    perp: Perpetuation, cols: _Columns,
) -> tuple[np.ndarray, np.ndarray]:
    n_runs, n_base = base.shape
    tape = np.concatenate([base, np.zeros((n_runs, target), dtype=np.int64)], axis=1)
    w = np.asarray(weights(rule, width), dtype=np.int64)
    den = int(w.sum())
    traj = []
    for i in range(1, target + 1):
        pos = n_base + i - 1
        if perp is Perpetuation.HALLUCINATORY and i > n_base:
            tape[:, pos] = cols.take() < 0.5
            continue
        if i <= n_base:
            window = tape[:, i - 1:i - 1 + width]
        else:
            window = tape[:, pos - width:pos]
        num = window @ w
        traj.append(num)
        tape[:, pos] = _bits(num, den, mode, cols)
    traj_arr = np.stack(traj, axis=1) if traj else np.zeros((n_runs, 0), dtype=np.int64)
    return tape[:, n_base:], traj_arr


@dataclass
class RunBlock:
    """Integer per-run results for a contiguous block of run indices."""

    ones_h: np.ndarray
    ones_ai: np.ndarray
    peaks_step1: np.ndarray
    peaks_step2: np.ndarray
    capability_ones: np.ndarray
    capability_len: int

    def outcomes(self, n_h: int, n_ai: int) -> list[RunOutcome]:
        return [
            RunOutcome(
                Fraction(int(oh), n_h), Fraction(int(oa), n_ai), int(p1), int(p2),
                Fraction(int(c), self.capability_len),
            )
            for oh, oa, p1, p2, c in zip(
                self.ones_h, self.ones_ai, self.peaks_step1, self.peaks_step2, self.capability_ones)
        ]


def _uniform_block(cfg: TaskConfig, master_seed: int, cell_id: str, start: int, stop: int) -> np.ndarray:
    d = draws_needed(cfg)
    u = np.empty((stop - start, d))
    for row, r in enumerate(range(start, stop)):
        u[row] = run_stream(master_seed, cell_id, r).random(d)
    return u


def simulate_runs(cfg: TaskConfig, master_seed: int, cell_id: str, start: int, stop: int) -> RunBlock:
    """Run indices ``start..stop-1`` of a cell with the vectorised engine."""
    n_runs = stop - start
    cols = _Columns(_uniform_block(cfg, master_seed, cell_id, start, stop))
    s = cfg.structure
    if isinstance(s, Modular):
        h, h_traj = _batch_self_seeded(cfg.human, cols, n_runs)
        ai, ai_traj = _batch_self_seeded(cfg.ai, cols, n_runs)
        step1, step2, cap, cap_len = ai_traj, h_traj, h, cfg.human.n
    elif isinstance(s, AiToH):
        ai, ai_traj = _batch_self_seeded(cfg.ai, cols, n_runs)
        h, h_traj = _batch_seed_window(
            ai[:, :s.c], s.c, cfg.human.n, Rule.HEURISTIC_LINEAR, cfg.human.mode,
            Perpetuation.RULE_BASED, cols)
        step1, step2, cap, cap_len = ai_traj, h_traj, ai, cfg.ai.n
    else:
        h, h_traj = _batch_self_seeded(cfg.human, cols, n_runs)
        ai, ai_traj = _batch_seed_window(
            h, s.c, cfg.ai.n, Rule.RULE_UNIFORM, cfg.ai.mode, s.perpetuation, cols)
        step1, step2, cap, cap_len = h_traj, ai_traj, h, cfg.human.n
    assert cols.col == cols.u.shape[1], "engine consumed an unexpected number of draws"
    return RunBlock(
        h.sum(axis=1), ai.sum(axis=1), count_local_peaks_rows(step1),
        count_local_peaks_rows(step2), cap.sum(axis=1), cap_len,
    )


# --- aggregation ------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloResult:
    n_runs: int
    mean_po_h: float
    mean_po_ai: float
    mean_apo: float
    std_error_apo: float
    mean_peaks_step1: float
    mean_peaks_step2: float
    master_seed: int | None = None
    cell_id: str | None = None
    generator: str = GENERATOR_ID
    runs: tuple[RunOutcome, ...] | None = field(default=None, compare=False, repr=False)

    @property
    def ai_wastage(self) -> float:
        return self.mean_peaks_step1 - self.mean_peaks_step2

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "mean_po_h": self.mean_po_h,
            "mean_po_ai": self.mean_po_ai,
            "mean_apo": self.mean_apo,
            "std_error_apo": self.std_error_apo,
            "mean_peaks_step1": self.mean_peaks_step1,
            "mean_peaks_step2": self.mean_peaks_step2,
            "master_seed": self.master_seed,
            "cell_id": self.cell_id,
            "generator": self.generator,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MonteCarloResult":
        return cls(**d)


def aggregate(
    outcomes: Sequence[RunOutcome],
    master_seed: int | None = None,
    cell_id: str | None = None,
    keep_runs: bool = False,
) -> MonteCarloResult:
    """Exact-rational means and standard error over run outcomes.

    The standard error uses the sample standard deviation (``n - 1``) and is
    0.0 for a single run. All sums are exact, so the result does not depend
    on run order.
    """
    n = len(outcomes)
    if n == 0:
        raise ValueError("cannot aggregate zero runs")
    po_h = sum((o.po_h for o in outcomes), Fraction(0)) / n
    po_ai = sum((o.po_ai for o in outcomes), Fraction(0)) / n
    apo = (po_h + po_ai) / 2
    if n > 1:
        ss = sum(((o.apo - apo) ** 2 for o in outcomes), Fraction(0))
        se = math.sqrt(float(ss / (n - 1)) / n)
    else:
        se = 0.0
    return MonteCarloResult(
        n_runs=n,
        mean_po_h=float(po_h),
        mean_po_ai=float(po_ai),
        mean_apo=float(apo),
        std_error_apo=se,
        mean_peaks_step1=float(Fraction(sum(o.peaks_step1 for o in outcomes), n)),
        mean_peaks_step2=float(Fraction(sum(o.peaks_step2 for o in outcomes), n)),
        master_seed=master_seed,
        cell_id=cell_id,
        runs=tuple(outcomes) if keep_runs else None,
    )


def _chunk_outcomes(args) -> list[RunOutcome]:
    cfg, seed, cell_id, start, stop = args
    return simulate_runs(cfg, seed, cell_id, start, stop).outcomes(cfg.human.n, cfg.ai.n)


def _chunks(n_runs: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n_runs))
    edges = [n_runs * p // parts for p in range(parts + 1)]
    return [(edges[p], edges[p + 1]) for p in range(parts)]


def collect_outcomes(
    cfg: TaskConfig, n_runs: int, master_seed: int, cell_id: str, workers: int = 1,
) -> list[RunOutcome]:
    jobs = [(cfg, master_seed, cell_id, a, b) for a, b in _chunks(n_runs, workers)]
    if workers <= 1 or len(jobs) == 1:
        parts = [_chunk_outcomes(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_outcomes, jobs))
    return [o for part in parts for o in part]


def monte_carlo(
    cfg: TaskConfig,
    n_runs: int = DEFAULT_RUNS,
    policy: RngPolicy = RngPolicy(0),
    workers: int = 1,
    keep_runs: bool = False,
) -> MonteCarloResult:
    """Average ``n_runs`` independent runs of ``cfg``.

    Run ``r`` uses the stream derived from ``(policy.master_seed, cell_id, r)``
    where ``cell_id`` defaults to ``cfg.cell_key()``.
    """
    if not isinstance(n_runs, int) or n_runs < 1:
        raise ConfigError("constraint-violation", f"n_runs must be a positive integer, got {n_runs!r}")
    cell_id = policy.cell_id if policy.cell_id is not None else cfg.cell_key()
    outcomes = collect_outcomes(cfg, n_runs, policy.master_seed, cell_id, workers)
    return aggregate(outcomes, policy.master_seed, cell_id, keep_runs)


def scalar_outcomes(cfg: TaskConfig, n_runs: int, master_seed: int, cell_id: str | None = None) -> list[RunOutcome]:
    """Reference per-run outcomes from the one-state-at-a-time path."""
    cell_id = cell_id if cell_id is not None else cfg.cell_key()
    return [run_task(cfg, run_stream(master_seed, cell_id, r)) for r in range(n_runs)]


def make_config(
    kind: str,
    n_h: int,
    k_h: int,
    n_ai: int,
    k_ai: int,
    c: int | None = None,
    perpetuation: Perpetuation = Perpetuation.RULE_BASED,
    mode: UpdateMode = Probabilistic(),
    ai_mode: UpdateMode | None = None,
    ai_rule: Rule = Rule.RULE_UNIFORM,
) -> TaskConfig:
    """Convenience constructor used by the harness and CLI."""
    human = AgentSpec(Role.HUMAN, n_h, k_h, Rule.HEURISTIC_LINEAR, mode)
    ai = AgentSpec(Role.AI, n_ai, k_ai, ai_rule, ai_mode if ai_mode is not None else mode)
    if kind == "modular":
        structure: Structure = Modular()
    elif kind == "ai_to_h":
        structure = AiToH(_need_c(c))
    elif kind == "h_to_ai":
        structure = HToAi(_need_c(c), perpetuation)
    else:
        raise ConfigError("constraint-violation", f"unknown task kind {kind!r}")
    return TaskConfig(structure, human, ai)


def _need_c(c: int | None) -> int:
    if c is None:
        raise ConfigError("missing-field", "sequenced tasks need c")
    return c


__all__ = [
    "AiToH", "BitSequence", "HToAi", "Modular", "MonteCarloResult", "RunBlock", "RunOutcome",
    "TaskConfig", "aggregate", "collect_outcomes", "draws_needed", "make_config", "monte_carlo", "run_ai_to_h",
    "run_h_to_ai", "run_modular", "run_task", "scalar_outcomes", "simulate_runs",
]
