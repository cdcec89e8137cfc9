"""Canonical sweeps, cubic smoothing and plots for the replicated figures.

Absolute parameter values are not reported for the original figures, so the
defaults below are declared choices: ``n_h = 20`` and ``k_ai = 4`` keep every
grid cell valid (``k_h`` up to ``4 * k_ai = 16 <= n_h - 1``).
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .adaptation import Perpetuation
from .errors import ConfigError
from .harness import (
    Axis,
    PolyFit,
    SweepResult,
    SweepSpec,
    argmax_on_interval,
    conditional_summary,
    fit_polynomial,
    raw_argmax,
    sweep,
)
from .results import ResultEnvelope, atomic_write, emit_results, envelope_for_sweep
from .rng import RngPolicy
from .tasks import make_config, parse_mode

SUPPORTED = (3, 4, 5, 6, 8)
CONCEPTUAL = {
    1: "Figure 1 is a conceptual schematic of task structures; it has no data to replicate.",
    2: "Figure 2 is a stylised worked example; run the `examples` command to check it.",
    7: "Figure 7 is a conceptual illustration of payoff distributions; it has no data to replicate.",
}

DEFAULTS = {
    "n_h": 20,
    "k_h": 2,
    "k_ai": 4,
    "n_runs": 1000,
    "ratio_min": 1,
    "ratio_max": 20,
    "c_ratio": 0.5,  # AI-to-H series in figures 6 and 8
    "c": None,  # H-to-AI window; None means the whole human sequence (c = n_h)
    "hi": 0.6,
    "lo": 0.4,
    "mode": "probabilistic",
}
K_RATIOS = (0.25, 0.5, 1.0, 2.0, 3.0, 4.0)
C_RATIOS = (0.25, 0.5, 1.0, 2.0, 3.0, 4.0)
FIG5_K_RATIOS = (0.5, 1.0, 2.0)


def parameters(overrides: dict | None = None) -> dict:
    params = dict(DEFAULTS)
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError("unknown-key", f"unknown figure parameter, expected one of {sorted(DEFAULTS)}", key=key)
        params[key] = value
    for key, value in params.items():
        if key == "mode":
            ok = isinstance(value, str)
        elif key in ("hi", "lo", "c_ratio"):
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        else:
            ok = isinstance(value, int) and not isinstance(value, bool) or (key == "c" and value is None)
        if not ok:
            raise ConfigError("type-mismatch", f"unexpected value {value!r}", key=key)
    try:
        parse_mode(params["mode"])
    except ConfigError as exc:
        raise ConfigError(exc.code, str(exc).split(": ", 1)[-1], key="mode") from exc
    return params


def figure_sweeps(fig_id: int, overrides: dict | None = None, master_seed: int = 0) -> dict[str, SweepSpec]:
    """Named sweep specifications that make up a figure."""
    if fig_id in CONCEPTUAL:
        raise ConfigError("constraint-violation", CONCEPTUAL[fig_id], key="fig_id")
    if fig_id not in SUPPORTED:
        raise ConfigError("constraint-violation", f"figure {fig_id} does not exist; supported: {SUPPORTED}", key="fig_id")
    p = parameters(overrides)
    n_h, k_h, k_ai = int(p["n_h"]), int(p["k_h"]), int(p["k_ai"])
    mode = parse_mode(p["mode"])
    ratios = Axis("n_ratio", tuple(float(r) for r in range(int(p["ratio_min"]), int(p["ratio_max"]) + 1)))
    policy = RngPolicy(master_seed)
    n_runs = int(p["n_runs"])
    c_h_to_ai = int(p["c"]) if p["c"] is not None else n_h

    def spec(task, axis2):
        return SweepSpec(task, ratios, axis2, n_runs, policy)

    if fig_id == 3:
        task = make_config("modular", n_h, k_h, n_h + 1, k_ai, mode=mode)
        return {"modular": spec(task, Axis("k_ratio", K_RATIOS))}
    if fig_id == 4:
        task = make_config("ai_to_h", n_h, k_h, n_h + 1, k_ai, c=1, mode=mode)
        return {"ai_to_h": spec(task, Axis("c_ratio", C_RATIOS))}
    if fig_id == 5:
        return {
            perp.value: spec(
                make_config("h_to_ai", n_h, k_h, n_h + 1, k_ai, c=c_h_to_ai, perpetuation=perp, mode=mode),
                Axis("k_ratio", FIG5_K_RATIOS))
            for perp in (Perpetuation.RULE_BASED, Perpetuation.HALLUCINATORY)
        }
    ai_to_h = spec(make_config("ai_to_h", n_h, k_h, n_h + 1, k_ai, c=1, mode=mode),
                   Axis("c_ratio", (float(p["c_ratio"]),)))
    if fig_id == 8:
        return {"ai_to_h": ai_to_h}
    h_to_ai = spec(make_config("h_to_ai", n_h, k_h, n_h + 1, k_ai, c=c_h_to_ai, mode=mode),
                   Axis("k_ratio", (k_h / k_ai,)))
    return {"ai_to_h": ai_to_h, "h_to_ai_rule": h_to_ai}


def _fit_series(x, y) -> dict:
    fit = fit_polynomial(list(zip(x, y)), min(3, len(set(x)) - 1))
    x_star, y_star = argmax_on_interval(fit.coeffs, min(x), max(x)) if min(x) < max(x) else (x[0], y[0])
    return {"coeffs": list(fit.coeffs), "residual_norm": fit.residual_norm, "argmax": [x_star, y_star]}


def summarize_series(result: SweepResult, hi: float, lo: float, conditional: bool) -> list[dict]:
    """Per axis-2 value: raw means, cubic fits, and optional capability splits."""
    out = []
    axis2_values = sorted({c.coords[1] for c in result.cells})
    for v2 in axis2_values:
        cells = result.series(v2)
        x = [c.coords[0] for c in cells]
        y = [c.result.mean_apo for c in cells]
        best = raw_argmax(cells)
        entry = {
            "axis2": v2,
            "x": x,
            "mean_apo": y,
            "std_error_apo": [c.result.std_error_apo for c in cells],
            "mean_peaks_step1": [c.result.mean_peaks_step1 for c in cells],
            "mean_peaks_step2": [c.result.mean_peaks_step2 for c in cells],
            "ai_wastage": [c.result.ai_wastage for c in cells],
            "raw_argmax": [best.coords[0], best.result.mean_apo],
            "fit": _fit_series(x, y) if len(set(x)) > 1 else None,
        }
        if conditional:
            for tag in ("high", "low"):
                stats = [conditional_summary(c.result, hi, lo)[tag] for c in cells]
                entry[f"{tag}_n_runs"] = [s.n_runs if s else 0 for s in stats]
                entry[f"{tag}_mean_apo"] = [s.mean_apo if s else None for s in stats]
                entry[f"{tag}_std_error_apo"] = [s.std_error_apo if s else None for s in stats]
                pts = [(xi, s.mean_apo) for xi, s in zip(x, stats) if s]
                entry[f"{tag}_fit"] = _fit_series(*zip(*pts)) if len({q[0] for q in pts}) > 1 else None
        out.append(entry)
    return out


@dataclass
class FigureOutput:
    fig_id: int
    envelopes: dict[str, ResultEnvelope]
    summary: dict
    files: list[str] = field(default_factory=list)


def _plot(fig_id: int, summary: dict, path: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    plt.rcParams["svg.hashsalt"] = "nkcsim"
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.set_prop_cycle(color=plt.cm.tab20.colors)
    ylabel = "mean APO"
    for style, (name, series) in zip(("-", "--", ":"), summary["series"].items()):
        for entry in series:
            x = np.array(entry["x"])
            grid = np.linspace(x.min(), x.max(), 200) if len(x) > 1 else x
            if fig_id == 8:
                ylabel = "mean local peaks per run"
                for key, label in (("mean_peaks_step1", "AI step 1"), ("mean_peaks_step2", "H step 2")):
                    ys = np.array(entry[key])
                    pts = ax.plot(x, ys, "o", ms=3, label=f"{label} (raw)")[0]
                    if len(x) > 3:
                        f = fit_polynomial(list(zip(x, ys)), 3)
                        ax.plot(grid, f(grid), style, color=pts.get_color(), label=f"{label} (cubic)")
                continue
            keys = [("mean_apo", "")]
            if "high_mean_apo" in entry:
                keys = [("high_mean_apo", " high-capability H"), ("low_mean_apo", " low-capability H")]
                if name == "ai_to_h":
                    keys = [("mean_apo", "")]
            for key, suffix in keys:
                pts_xy = [(xi, yi) for xi, yi in zip(x, entry[key]) if yi is not None]
                if not pts_xy:
                    continue
                px, py = map(np.array, zip(*pts_xy))
                label = f"{name} {summary['axis2'][name]}={entry['axis2']:g}{suffix}"
                line = ax.plot(px, py, "o", ms=3)[0]
                if len(set(px)) > 3:
                    f = fit_polynomial(pts_xy, 3)
                    ax.plot(grid, f(grid), style, color=line.get_color(), label=label)
                else:
                    line.set_label(label)
    ax.set_xlabel("N_AI / N_H")
    ax.set_ylabel(ylabel)
    ax.set_title(f"Figure {fig_id} replication (points: raw cell means; curves: cubic fits)")
    ax.legend(fontsize=6, ncol=2)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def replicate_figure(
    fig_id: int,
    overrides: dict | None = None,
    policy: RngPolicy = RngPolicy(0),
    out_dir: str | None = None,
    workers: int = 1,
) -> FigureOutput:
    """Run a figure's canonical sweeps, fit cubic curves and optionally write files.

    Files written to ``out_dir``: one JSON envelope and one CSV per sweep,
    ``fig<N>_summary.json`` and the ``fig<N>.svg`` plot.
    """
    specs = figure_sweeps(fig_id, overrides, policy.master_seed)
    p = parameters(overrides)
    conditional = fig_id in (5, 6)
    envelopes, series = {}, {}
    for name, spec in specs.items():
        result = sweep(spec, workers=workers, keep_runs=conditional)
        envelopes[name] = envelope_for_sweep(spec, result)
        series[name] = summarize_series(result, float(p["hi"]), float(p["lo"]), conditional)
    summary = {
        "fig_id": fig_id,
        "parameters": p,
        "master_seed": policy.master_seed,
        "axis2": {name: spec.axis2.name for name, spec in specs.items()},
        "series": series,
        "peak_metric": "strict interior local maxima of the per-step decision-value trajectory",
    }
    out = FigureOutput(fig_id, envelopes, summary)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for name, env in envelopes.items():
            for fmt in ("json", "csv"):
                path = os.path.join(out_dir, f"fig{fig_id}_{name}.{fmt}")
                emit_results(env, fmt, path)
                out.files.append(path)
        path = os.path.join(out_dir, f"fig{fig_id}_summary.json")
        atomic_write(path, json.dumps(summary, indent=2, sort_keys=True, allow_nan=False) + "\n")
        out.files.append(path)
        plot = os.path.join(out_dir, f"fig{fig_id}.svg")
        tmp = plot + ".partial.svg"
        _plot(fig_id, summary, tmp)
        os.replace(tmp, plot)
        out.files.append(plot)
    return out


__all__ = ["CONCEPTUAL", "DEFAULTS", "FigureOutput", "PolyFit", "SUPPORTED", "figure_sweeps",
           "parameters", "replicate_figure", "summarize_series"]
