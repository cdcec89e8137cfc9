"""Recompute the stylised worked examples and compare with pinned values."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .adaptation import (
    Perpetuation,
    Rule,
    Step,
    Threshold,
    decision_ratio,
    decision_value,
    generate_from_seed_window,
    next_state,
)

H_SEQUENCE = (1, 0, 1, 1, 0, 1)
WINDOW = 4
AI_LENGTH = 8
FIG2_WINDOW = (0, 0, 0, 1, 1)

# (window, source, value, state) for x_1..x_8 of the AI sequence
MEMORY_FADING_ROWS = [
    ((1, 0, 1, 1), "S_AI", Fraction(3, 4), 1),
    ((0, 1, 1, 0), "S_AI", Fraction(1, 2), 0),
    ((1, 1, 0, 1), "S_AI", Fraction(3, 4), 1),
    ((1, 0, 1, 1), "S_AI + AI-generating sequence", Fraction(3, 4), 1),
    ((0, 1, 1, 0), "S_AI + AI-generating sequence", Fraction(1, 2), 0),
    ((1, 1, 0, 1), "S_AI + AI-generating sequence", Fraction(3, 4), 1),
]
RULE_PERPETUATION_ROWS = [
    ((1, 1, 0, 1), "AI-generating sequence", Fraction(3, 4), 1),
    ((1, 0, 1, 1), "AI-generating sequence", Fraction(3, 4), 1),
]
FINAL_RULE_SEQUENCE = (1, 0, 1, 1, 0, 1, 1, 1)


@dataclass(frozen=True)
class Check:
    label: str
    computed: str
    expected: str

    @property
    def ok(self) -> bool:
        return self.computed == self.expected


def _source(step: Step, width: int) -> str:
    if step.base_count == width:
        return "S_AI"
    if step.base_count == 0:
        return "AI-generating sequence"
    return "S_AI + AI-generating sequence"


def _fmt_row(window, source, value, state) -> str:
    return f"f({list(window)}) | {source} | {value} | {state}"


def worked_checks(seed: int = 0) -> list[Check]:
    checks: list[Check] = []

    for label, rule, expected in (
        ("Figure 2 heuristic (H) value", Rule.HEURISTIC_LINEAR, "9/15 = 0.6"),
        ("Figure 2 rule-based (AI) value", Rule.RULE_UNIFORM, "2/5 = 0.4"),
    ):
        num, den = decision_ratio(FIG2_WINDOW, rule)
        checks.append(Check(label, f"{num}/{den} = {float(decision_value(FIG2_WINDOW, rule))}", expected))
    checks.append(Check(
        "Figure 2 heuristic N_6, threshold (>= 0.5)",
        str(next_state(FIG2_WINDOW, Rule.HEURISTIC_LINEAR, Threshold(tie_maps_to_one=True))), "1"))

    trace: list[Step] = []
    seq = generate_from_seed_window(
        H_SEQUENCE, WINDOW, AI_LENGTH, Rule.RULE_UNIFORM, Threshold(False),
        Perpetuation.RULE_BASED, None, trace)
    for i, (step, row) in enumerate(zip(trace, MEMORY_FADING_ROWS + RULE_PERPETUATION_ROWS), start=1):
        computed = _fmt_row(step.window, _source(step, WINDOW), step.value, step.state)
        checks.append(Check(f"x_{i}^AI (rule-based)", computed, _fmt_row(*row)))
    checks.append(Check("rule-based AI sequence", str(list(seq)), str(list(FINAL_RULE_SEQUENCE))))

    h_trace: list[Step] = []
    rng = np.random.Generator(np.random.PCG64(seed))
    halluc = generate_from_seed_window(
        H_SEQUENCE, WINDOW, AI_LENGTH, Rule.RULE_UNIFORM, Threshold(False),
        Perpetuation.HALLUCINATORY, rng, h_trace)
    replay = np.random.Generator(np.random.PCG64(seed))
    fair = [1 if replay.random() < 0.5 else 0 for _ in range(AI_LENGTH - len(H_SEQUENCE))]
    checks.append(Check(
        "hallucinatory x_1..x_6 match rule-based", str(list(halluc[:6])), str(list(FINAL_RULE_SEQUENCE[:6]))))
    checks.append(Check(
        "hallucinatory x_7..x_8 are fair draws",
        str([(s.value, s.state) for s in h_trace[6:]]), str([(None, b) for b in fair])))
    return checks


def show_worked_examples(seed: int = 0) -> tuple[str, bool]:
    """Formatted side-by-side report and whether every row matched."""
    checks = worked_checks(seed)
    width = max(len(c.label) for c in checks)
    lines = []
    for c in checks:
        mark = "ok  " if c.ok else "FAIL"
        lines.append(f"[{mark}] {c.label:<{width}}  computed: {c.computed}")
        if not c.ok:
            lines.append(f"       {'':<{width}}  expected: {c.expected}")
    ok = all(c.ok for c in checks)
    lines.append(f"{sum(c.ok for c in checks)}/{len(checks)} worked-example checks match")
    return "\n".join(lines), ok
