"""Acceptance criteria, one test per criterion.

Each test prints ``criterion N: PASS|FAIL ...`` and the lines are repeated in
the pytest terminal summary. Statistical criteria use n_runs = 1000 per cell,
the default probabilistic update mode and the figure defaults in
:mod:`nkcsim.figures` (n_h = 20, k_ai = 4).
"""
from __future__ import annotations

import dataclasses
import math
import random
from fractions import Fraction

import oracles
from conftest import CRITERIA_LINES
from nkcsim.adaptation import Perpetuation, Rule, Threshold, generate_from_seed_window
from nkcsim.figures import figure_sweeps
from nkcsim.harness import (
    Axis,
    argmax_on_interval,
    conditional_summary,
    fit_polynomial,
    raw_argmax,
    resolve_cell,
    sweep,
)
from nkcsim.results import envelope_for_monte_carlo, envelope_for_sweep, to_json
from nkcsim.rng import RngPolicy
from nkcsim.tasks import aggregate, make_config, monte_carlo, scalar_outcomes
from nkcsim.worked import worked_checks

RUNS = 1000
SEEDS = (0, 1, 2, 3, 4)


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    CRITERIA_LINES.append(line)
    assert ok, line


def pooled(se1: float, se2: float) -> float:
    return math.hypot(se1, se2)


def _with_ratios(spec, ratios, seed):
    return dataclasses.replace(spec, axis1=Axis("n_ratio", tuple(float(r) for r in ratios)),
                               policy=RngPolicy(seed))


def test_criterion_01_golden_worked_example():
    trace = []
    seq = generate_from_seed_window([1, 0, 1, 1, 0, 1], 4, 8, Rule.RULE_UNIFORM, Threshold(False), trace=trace)
    table = [c for c in worked_checks() if c.label.startswith("x_") or c.label == "rule-based AI sequence"]
    ok = seq.states == (1, 0, 1, 1, 0, 1, 1, 1) and len(table) == 9 and all(c.ok for c in table)
    ok = ok and [s.value for s in trace] == [Fraction(v, 4) for v in (3, 2, 3, 3, 2, 3, 3, 3)]
    report(1, ok, f"sequence {list(seq)}, {sum(c.ok for c in table)}/9 table rows match")


def test_criterion_02_figure2_values():
    checks = [c for c in worked_checks() if c.label.startswith("Figure 2")]
    ok = all(c.ok for c in checks) and len(checks) == 3
    report(2, ok, "; ".join(f"{c.label}: {c.computed}" for c in checks))


def test_criterion_03_modular_curvilinearity():
    # k_h / k_ai < 0.5: the 0.25 series (k_h = 1)
    base = figure_sweeps(3)["modular"]
    verdicts = []
    for seed in SEEDS:
        spec = dataclasses.replace(base, axis2=Axis("k_ratio", (0.25,)), policy=RngPolicy(seed))
        cells = sweep(spec).cells
        pts = [(c.coords[0], c.result.mean_apo) for c in cells]
        fit = fit_polynomial(pts, 3)
        x_star, _ = argmax_on_interval(fit.coeffs, 1, 20)
        raw = raw_argmax(cells).coords[0]
        interior = 1 < x_star < 20
        verdicts.append((interior and 3 <= raw <= 8, x_star, raw))
    agree = sum(v[0] for v in verdicts)
    detail = ", ".join(f"seed {s}: fit argmax {x:.2f}, raw argmax {r:g}" for s, (_, x, r) in zip(SEEDS, verdicts))
    report(3, agree >= 4, f"{agree}/5 seeds agree ({detail})")


def test_criterion_04_ai_to_h_over_refinement():
    spec = dataclasses.replace(figure_sweeps(4)["ai_to_h"], axis2=Axis("c_ratio", (0.5, 2.0)))
    spec = _with_ratios(spec, range(6, 21), 0)
    result = sweep(spec)
    fails = []
    for r in spec.axis1.values:
        lo, hi = result.cell(r, 0.5).result, result.cell(r, 2.0).result
        margin = lo.mean_apo - hi.mean_apo
        if not margin > 2 * pooled(lo.std_error_apo, hi.std_error_apo):
            fails.append(f"ratio {r:g}: c/k 0.5 {lo.mean_apo:.4f} vs 2 {hi.mean_apo:.4f}")
    report(4, not fails, f"{15 - len(fails)}/15 cells with ratio > 5 show the penalty; "
           f"failing: {'; '.join(fails[:4])}{' ...' if len(fails) > 4 else ''}")


def _fig5(seed, ratios):
    out = {}
    for name, spec in figure_sweeps(5).items():
        spec = dataclasses.replace(_with_ratios(spec, ratios, seed), axis2=Axis("k_ratio", (0.5,)))
        out[name] = sweep(spec, keep_runs=True)
    return out


def test_criterion_05_rule_beats_hallucinatory_for_capable_h():
    res = _fig5(0, (5, 10, 15, 20))
    lines, ok = [], True
    for r in (5, 10, 15):
        rule = conditional_summary(res["rule"].cell(r, 0.5).result)["high"]
        hal = conditional_summary(res["hallucinatory"].cell(r, 0.5).result)["high"]
        z = (rule.mean_apo - hal.mean_apo) / pooled(rule.std_error_apo, hal.std_error_apo)
        ok &= z > 2
        lines.append(f"ratio {r}: rule {rule.mean_apo:.4f} vs halluc {hal.mean_apo:.4f} (z={z:.1f})")
    h10 = conditional_summary(res["hallucinatory"].cell(10, 0.5).result)["high"].mean_apo
    h20 = conditional_summary(res["hallucinatory"].cell(20, 0.5).result)["high"].mean_apo
    ok &= h20 < h10
    lines.append(f"halluc ratio 20 {h20:.4f} < ratio 10 {h10:.4f}")
    report(5, bool(ok), "; ".join(lines))


def test_criterion_06_hallucinatory_reversal_for_weak_h():
    agree = 0
    lines = []
    for seed in SEEDS:
        res = _fig5(seed, (5, 10, 15))
        signs = []
        for r in (5, 10, 15):
            rule = conditional_summary(res["rule"].cell(r, 0.5).result)["low"]
            hal = conditional_summary(res["hallucinatory"].cell(r, 0.5).result)["low"]
            signs.append(hal.mean_apo >= rule.mean_apo)
        agree += all(signs)
        lines.append(f"seed {seed}: {sum(signs)}/3")
    report(6, agree >= 4, f"{agree}/5 seeds with halluc >= rule at every ratio ({', '.join(lines)})")


def test_criterion_07_sequencing_comparison():
    specs = figure_sweeps(6, master_seed=0)
    ai_to_h = sweep(specs["ai_to_h"])
    expert = sweep(specs["h_to_ai_rule"], keep_runs=True)
    highs = [conditional_summary(c.result)["high"] for c in expert.cells]
    mean_expert = sum(h.mean_apo for h in highs) / len(highs)
    se_expert = math.sqrt(sum(h.std_error_apo ** 2 for h in highs)) / len(highs)
    best = raw_argmax(ai_to_h.cells)
    margin = mean_expert - best.result.mean_apo
    se = pooled(se_expert, best.result.std_error_apo)
    report(7, margin > 2 * se,
           f"mean APO H-to-AI (expert H) {mean_expert:.4f} vs max AI-to-H {best.result.mean_apo:.4f} "
           f"at ratio {best.coords[0]:g} (z={margin / se:.1f})")


def test_criterion_08_ai_wastage():
    spec = _with_ratios(figure_sweeps(8)["ai_to_h"], (5,), 0)
    cell = sweep(spec).cells[0].result
    ratio = cell.mean_peaks_step1 / cell.mean_peaks_step2
    report(8, ratio > 1, f"ratio 5: AI step-1 peaks {cell.mean_peaks_step1:.4f}, "
           f"H step-2 peaks {cell.mean_peaks_step2:.4f}, ratio {ratio:.2f} (3.5x reported, not gated)")


def _random_config(rnd: random.Random):
    kind = rnd.choice(("modular", "ai_to_h", "h_to_ai"))
    n_h = rnd.randint(2, 11)
    n_ai = rnd.randint(n_h + 1, 12)
    k_h = rnd.randint(0, min(4, n_h - 1))
    k_ai = rnd.randint(0, min(4, n_ai - 1))
    tie = rnd.random() < 0.5
    if kind == "modular":
        return make_config(kind, n_h, k_h, n_ai, k_ai, mode=Threshold(tie))
    if kind == "ai_to_h":
        return make_config(kind, n_h, k_h, n_ai, k_ai, c=rnd.randint(1, min(4, n_ai - 1)), mode=Threshold(tie))
    perp = rnd.choice(list(Perpetuation))
    return make_config(kind, n_h, k_h, n_ai, k_ai, c=rnd.randint(1, min(4, n_h)), perpetuation=perp,
                       mode=Threshold(tie))


def test_criterion_09_oracle_equivalence():
    rnd = random.Random(20240901)
    bad = []
    for i in range(20):
        cfg = _random_config(rnd)
        s = cfg.structure
        expected = oracles.expected_apo(
            cfg.kind, cfg.human.n, cfg.human.k, cfg.ai.n, cfg.ai.k, c=getattr(s, "c", None),
            halluc=getattr(s, "perpetuation", None) is Perpetuation.HALLUCINATORY,
            tie_one=cfg.human.mode.tie_maps_to_one)
        res = monte_carlo(cfg, RUNS, RngPolicy(i))
        tol = 3 * res.std_error_apo if res.std_error_apo > 0 else 1e-12
        if abs(res.mean_apo - float(expected)) > tol:
            bad.append(f"{cfg.cell_key()}: mc {res.mean_apo:.4f} vs exact {float(expected):.4f}")
    report(9, not bad, f"{20 - len(bad)}/20 threshold configurations within 3 SE of enumeration"
           + (f"; mismatches: {bad}" if bad else ""))


def test_criterion_10_determinism_across_workers():
    spec = _with_ratios(dataclasses.replace(figure_sweeps(5)["rule"], n_runs=300), (1, 2, 3), 12)
    cfg = make_config("h_to_ai", 10, 2, 40, 4, c=6, perpetuation=Perpetuation.HALLUCINATORY)
    blobs = {}
    for w in (1, 4, 8):
        mc = monte_carlo(cfg, RUNS, RngPolicy(12), workers=w)
        blobs[w] = (to_json(envelope_for_sweep(spec, sweep(spec, workers=w))),
                    to_json(envelope_for_monte_carlo(cfg, RUNS, RngPolicy(12), mc)))
    ok = blobs[1] == blobs[4] == blobs[8]
    report(10, ok, f"sweep and single-cell envelopes byte-identical at 1, 4, 8 workers "
           f"({len(blobs[1][0])} + {len(blobs[1][1])} bytes)")


def test_criterion_11_bounds_and_identities():
    result = sweep(figure_sweeps(3)["modular"])
    in_bounds = all(0 < c.result.mean_apo < 1 for c in result.cells)
    identity = True
    for spec in list(figure_sweeps(5).values()) + [figure_sweeps(4)["ai_to_h"]]:
        for cell in sweep(_with_ratios(dataclasses.replace(spec, n_runs=50), (1, 7, 20), 1)).cells:
            cfg, _ = resolve_cell(spec.task, spec.axis1, cell.coords[0], spec.axis2, cell.coords[1])
            outs = scalar_outcomes(cfg, 50, 1)
            identity &= all(o.apo == (o.po_h + o.po_ai) / 2 for o in outs)
            identity &= aggregate(outs, 1, cfg.cell_key()) == cell.result
    report(11, in_bounds and bool(identity),
           f"{len(result.cells)} figure-3 cells with mean_apo in (0,1): {in_bounds}; "
           f"per-run apo identity and batch/scalar agreement: {bool(identity)}")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
