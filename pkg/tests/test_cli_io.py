from __future__ import annotations

import json
import os

import pytest

from nkcsim.cli import main
from nkcsim.config import parse_experiment
from nkcsim.errors import ConfigError
from nkcsim.figures import figure_sweeps, replicate_figure
from nkcsim.harness import Axis, SweepSpec, sweep
from nkcsim.results import (
    CSV_COLUMNS,
    emit_results,
    envelope_for_monte_carlo,
    envelope_for_sweep,
    parse_json,
    rerun,
    to_csv,
    to_json,
)
from nkcsim.rng import RngPolicy
from nkcsim.tasks import make_config, monte_carlo
from nkcsim.worked import show_worked_examples

MINIMAL = """\
master_seed: 42
n_runs: 1000
task:
  kind: modular
human:
  n: 10
  k: 2
ai:
  n: 50
  k: 4
"""


def _error(text):
    with pytest.raises(ConfigError) as info:
        parse_experiment(text)
    return info.value


def test_minimal_config():
    exp = parse_experiment(MINIMAL)
    assert exp.master_seed == 42 and exp.n_runs == 1000
    assert (exp.task.human.n, exp.task.human.k, exp.task.ai.n, exp.task.ai.k) == (10, 2, 50, 4)


def test_config_n_ai_equal_n_h():
    err = _error(MINIMAL.replace("n: 50", "n: 10"))
    assert err.code == "constraint-violation" and "|N_AI| > |N_H|" in str(err)
    assert err.key == "ai.n" and err.line == 9


def test_config_missing_seed():
    err = _error(MINIMAL.replace("master_seed: 42\n", ""))
    assert err.code == "missing-field" and err.key == "master_seed"


def test_config_unknown_key_and_line():
    err = _error(MINIMAL + "  rule_x: 3\n")
    assert err.code == "unknown-key" and err.key == "ai.rule_x" and err.line == 11


def test_config_type_mismatch():
    err = _error(MINIMAL.replace("k: 2", "k: two"))
    assert err.code == "type-mismatch" and err.key == "human.k" and err.line == 7


def test_config_syntax_error():
    assert _error("master_seed: [1, 2\n").code == "syntax"


def test_config_sequenced_and_sweep():
    text = MINIMAL.replace("kind: modular", "kind: h_to_ai\n  c: 10\n  perpetuation: hallucinatory") + (
        "sweep:\n  axis1: {name: n_ratio, values: [2, 5]}\n  axis2: {name: k_ratio, values: [0.5, 1]}\n")
    spec = parse_experiment(text).sweep_spec()
    assert spec.axis1.values == (2.0, 5.0) and spec.task.structure.c == 10
    assert _error(text.replace("c: 10", "c: 11")).key == "task.c"
    assert _error(text.replace("[2, 5]", "[5, 2]")).code == "constraint-violation"


def _sweep_env(n1, n2, runs=20):
    template = make_config("modular", 20, 2, 21, 4)
    spec = SweepSpec(template, Axis("n_ratio", tuple(float(v) for v in range(1, n1 + 1))),
                     Axis("k_ratio", (0.25, 0.5, 1.0, 2.0, 3.0, 4.0)[:n2]), runs, RngPolicy(3))
    return envelope_for_sweep(spec, sweep(spec))


def test_csv_single_cell(tmp_path):
    cfg = make_config("ai_to_h", 10, 2, 30, 4, c=3)
    env = envelope_for_monte_carlo(cfg, 50, RngPolicy(1), monte_carlo(cfg, 50, RngPolicy(1)))
    path = tmp_path / "one.csv"
    n = emit_results(env, "csv", str(path))
    lines = path.read_text().splitlines()
    assert n == path.stat().st_size and len(lines) == 2
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].split(",")[2:4] == ["30", "3"]


def test_csv_figure3_grid_line_count():
    # 1 header + 20 x 6 cells
    assert len(to_csv(_sweep_env(20, 6, runs=5)).splitlines()) == 121


def test_json_round_trip_bytes():
    env = _sweep_env(2, 2)
    text = to_json(env)
    assert to_json(parse_json(text)) == text


def test_rerun_reproduces_payload():
    for env in (_sweep_env(2, 3),):
        assert to_json(rerun(parse_json(to_json(env)))) == to_json(env)
    cfg = make_config("h_to_ai", 10, 2, 30, 4, c=5)
    env = envelope_for_monte_carlo(cfg, 40, RngPolicy(2), monte_carlo(cfg, 40, RngPolicy(2)))
    assert to_json(rerun(env, workers=3)) == to_json(env)


def test_tampered_provenance_rejected():
    doc = json.loads(to_json(_sweep_env(1, 1)))
    doc["provenance"]["rerun"]["master_seed"] = 4
    with pytest.raises(ValueError):
        parse_json(json.dumps(doc))


def test_emit_overwrite_is_idempotent(tmp_path):
    env = _sweep_env(1, 2)
    path = str(tmp_path / "r.json")
    emit_results(env, "json", path)
    first = open(path, "rb").read()
    emit_results(env, "json", path)
    assert open(path, "rb").read() == first
    assert os.listdir(tmp_path) == ["r.json"]


def test_emit_unwritable(tmp_path):
    with pytest.raises(OSError):
        emit_results(_sweep_env(1, 1), "csv", str(tmp_path / "missing" / "r.csv"))


def test_worked_examples_report():
    report, ok = show_worked_examples()
    assert ok
    assert "9/15 = 0.6" in report and "2/5 = 0.4" in report
    assert "[1, 0, 1, 1, 0, 1, 1, 1]" in report


@pytest.mark.parametrize("fig_id", [1, 2, 7, 9])
def test_conceptual_figures_rejected(fig_id):
    with pytest.raises(ConfigError) as info:
        figure_sweeps(fig_id)
    if fig_id == 7:
        assert "conceptual illustration" in str(info.value)


def test_figure_overrides_validated():
    with pytest.raises(ConfigError) as info:
        figure_sweeps(3, {"n_hh": 4})
    assert info.value.code == "unknown-key"


def test_figure3_series_have_cubic_fits():
    out = replicate_figure(3, {"n_runs": 20, "ratio_max": 6})
    series = out.summary["series"]["modular"]
    assert [s["axis2"] for s in series] == [0.25, 0.5, 1.0, 2.0, 3.0, 4.0]
    assert all(len(s["fit"]["coeffs"]) == 4 for s in series)


def test_figure6_plot_bytes_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    replicate_figure(6, {"n_runs": 30, "ratio_max": 5}, RngPolicy(9), str(a))
    replicate_figure(6, {"n_runs": 30, "ratio_max": 5}, RngPolicy(9), str(b))
    svg = (a / "fig6.svg").read_bytes()
    assert svg.startswith(b"<?xml") and svg == (b / "fig6.svg").read_bytes()
    assert (a / "fig6_summary.json").read_bytes() == (b / "fig6_summary.json").read_bytes()


def test_cli_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "m.yaml"
    cfg.write_text(MINIMAL)
    out = tmp_path / "r.csv"
    assert main(["run", str(cfg), "--runs", "30", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 2
    assert main(["run", str(cfg), "--runs", "30", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["provenance"]["rerun"]["n_runs"] == 30
    bad = tmp_path / "bad.yaml"
    bad.write_text(MINIMAL.replace("n: 50", "n: 10"))
    assert main(["run", str(bad)]) == 1
    assert main(["sweep", str(cfg)]) == 1  # no sweep block
    assert main(["run", str(cfg), "--runs", "5", "--out", str(tmp_path / "no" / "r.csv")]) == 3
    assert main(["run", str(tmp_path / "absent.yaml")]) == 3
    assert main(["figure", "7"]) == 1
    assert main(["examples"]) == 0


def test_cli_seed_override(tmp_path, capsys):
    cfg = tmp_path / "m.yaml"
    cfg.write_text(MINIMAL)
    main(["run", str(cfg), "--runs", "20", "--seed", "7", "--format", "json"])
    assert json.loads(capsys.readouterr().out)["provenance"]["master_seed"] == 7


def test_cli_figure(tmp_path, capsys):
    code = main(["figure", "8", "--set", "n_runs=20", "--set", "ratio_max=4", "--out-dir", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "fig8.svg").exists() and (tmp_path / "fig8_ai_to_h.csv").exists()
