from __future__ import annotations

import csv
import math
import os
import re
from pathlib import Path

import pytest

from cavitysense import cli
from cavitysense.config import load

SLOW = os.environ.get("CAVITYSENSE_SLOW") == "1"
FAST_FIGURES = ("fig1", "fig2", "fig6", "fig7", "fig8", "fig9", "fig10")
SLOW_FIGURES = ("fig3", "fig4", "fig5")

KAPPA_POINT = """\
command = sensitivity
freq_convention = hz2pi
N = 1e6
alpha = 1e4
g = 11e3
kappa = 150e3
regime = kappa
sensitivity.form = assembled
sweep.axis = time
sweep.start = 1e-8
sweep.stop = 1e-6
sweep.num = 9
sweep.scale = log
"""


def run(argv, capsys, environ=None):
    rc = cli.main(argv, environ=environ or {})
    out, err = capsys.readouterr()
    return rc, out, err


def read_table(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write(tmp_path, text, name="s.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_header_and_columns(tmp_path, capsys):
    rc, out, _ = run(["sensitivity", "--config", write(tmp_path, KAPPA_POINT)], capsys)
    assert rc == 0
    first, cols = out.splitlines()[:2]
    assert re.fullmatch(r"# cavity-sense v0\.1\.0, scenario [0-9a-f]{64}", first)
    assert cols == "sweep_value,delta_beta_sq,gain_db,qfi_bound_db,validity_flags"


def test_output_identical_across_thread_counts(tmp_path, capsys):
    cfg = write(tmp_path, KAPPA_POINT)
    outs = [run(["sensitivity", "--config", cfg, "--threads", k], capsys)[1] for k in ("1", "4")]
    assert outs[0] == outs[1]


def test_plot_script_written_next_to_table(tmp_path, capsys):
    out = tmp_path / "k.csv"
    rc, _, _ = run(["sensitivity", "--config", write(tmp_path, KAPPA_POINT), "--out", str(out)], capsys)
    assert rc == 0
    script = tmp_path / "k.plot.py"
    assert script.exists()
    compile(script.read_text(), str(script), "exec")


def test_set_overrides_file(tmp_path, capsys):
    cfg = write(tmp_path, KAPPA_POINT)
    a = run(["sensitivity", "--config", cfg], capsys)[1]
    b = run(["sensitivity", "--config", cfg, "--set", "kappa=15e3"], capsys)[1]
    assert a.splitlines()[0] != b.splitlines()[0]
    assert a.splitlines()[2] != b.splitlines()[2]


def test_environment_below_file(tmp_path, capsys):
    cfg = write(tmp_path, KAPPA_POINT)
    base = run(["sensitivity", "--config", cfg], capsys)[1]
    env = run(["sensitivity", "--config", cfg], capsys, {"CAVITYSENSE_KAPPA": "1"})[1]
    assert base == env


@pytest.mark.parametrize("edit,where", [
    (("sweep.num = 9", "sweep.num = 1"), ":12:"),
    (("sweep.num = 9", "sweep.num = 0"), ":12:"),
    (("regime = kappa", "regime = lossy"), ":7:"),
    (("N = 1e6", "N = 1e6\nbogus = 3"), ":4:9:"),
    (("sweep.stop = 1e-6", "sweep.stop = 1e-6 +"), ":11:"),
])
def test_config_errors_exit_2_with_location(tmp_path, capsys, edit, where):
    cfg = write(tmp_path, KAPPA_POINT.replace(*edit))
    rc, out, err = run(["sensitivity", "--config", cfg], capsys)
    assert rc == cli.EXIT_CONFIG
    assert out == ""
    assert where in err and "config error" in err


def test_empty_values_grid_is_config_error(tmp_path, capsys):
    text = KAPPA_POINT.replace("sweep.start = 1e-8\nsweep.stop = 1e-6\nsweep.num = 9\n", "sweep.values = 1e-8\n")
    rc, _, err = run(["sensitivity", "--config", write(tmp_path, text)], capsys)
    assert rc == cli.EXIT_CONFIG and "at least 2 points" in err


def test_command_mismatch_is_config_error(tmp_path, capsys):
    rc, _, err = run(["qfi", "--config", write(tmp_path, KAPPA_POINT)], capsys)
    assert rc == cli.EXIT_CONFIG and "command" in err


def test_numeric_failure_exit_3(tmp_path, capsys):
    cfg = write(tmp_path, "tc.N = 2000\ntc.alpha = 300\n")
    rc, _, err = run(["tc", "--config", cfg], capsys)
    assert rc == cli.EXIT_NUMERIC and "numeric failure" in err


def test_validate_selection_and_failure_exit(capsys):
    rc, out, _ = run(["validate", "--fast", "--set", "validate.only=acc01,prop_core", "--set",
                      "validate.n_cases=5"], capsys)
    assert rc == 0
    body = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert body and all(ln.endswith("PASS") for ln in body)
    assert any(ln.startswith("prop_core") for ln in body)
    rc, out, _ = run(["validate", "--set", "validate.only=acc09"], capsys)
    assert rc == cli.EXIT_VALIDATION and "FAIL" in out
    rc, _, err = run(["validate", "--set", "validate.only=nothing_matches"], capsys)
    assert rc == cli.EXIT_CONFIG and "empty" in err


def report(out):
    return dict(ln.split(" = ", 1) for ln in out.splitlines() if " = " in ln and not ln.startswith("#"))


def test_optimize_gamma_reports_one_third_gamma(tmp_path, capsys):
    text = ("freq_convention = hz2pi\nN = 1e4\nalpha = 1e4\ng = 11e3\ngamma = 7.5e3\n"
            "regime = gamma\nsensitivity.form = closed\n")
    rc, out, _ = run(["optimize", "--config", write(tmp_path, text)], capsys)
    assert rc == 0
    r = report(out)
    assert float(r["three_gamma_t_opt"]) == pytest.approx(1.0, abs=0.02)
    assert r["bracketed"] == "true"


def test_optimize_kappa_close_to_closed_form(tmp_path, capsys):
    text = KAPPA_POINT.split("sweep.axis")[0].replace("command = sensitivity\n", "command = optimize\n")
    rc, out, _ = run(["optimize", "--config", write(tmp_path, text)], capsys)
    assert rc == 0
    r = report(out)
    assert float(r["ratio_t_opt"]) == pytest.approx(1.0, abs=0.05)
    assert float(r["t_opt_s"]) > 0


def test_wigner_writes_panels(tmp_path, capsys):
    text = ("wigner.N = 4\nwigner.alpha = 2\nwigner.chi_sqrtN_t = 0, 0.5\nwigner.re_min = -4\n"
            "wigner.re_max = 4\nwigner.im_min = -4\nwigner.im_max = 4\nwigner.step = 0.1\nwigner.oracle = true\n")
    out = tmp_path / "w.dat"
    rc, _, _ = run(["wigner", "--config", write(tmp_path, text), "--out", str(out)], capsys)
    assert rc == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    assert any(f.endswith(".plot.py") for f in files)
    assert any(f.endswith("_oracle.csv") for f in files)


@pytest.mark.parametrize("fig", FAST_FIGURES + SLOW_FIGURES)
def test_presets_parse(fig):
    files = cli.preset_files(fig)
    assert files
    for f in files:
        values, _ = load(f, environ={})
        assert values["command"] in cli.COMMANDS
        cli.Values(values, {})


@pytest.mark.parametrize("fig", FAST_FIGURES)
def test_fast_presets_replay(tmp_path, capsys, fig):
    rc, _, err = run(["figure", fig, "--out", str(tmp_path)], capsys)
    assert rc == 0, err
    outputs = [p for p in tmp_path.iterdir() if not p.name.endswith(".plot.py")]
    assert len(outputs) >= len(cli.preset_files(fig))


def test_fig6_peak_gain(tmp_path, capsys):
    assert run(["figure", "fig6", "--out", str(tmp_path)], capsys)[0] == 0
    for name in ("kappa15.csv", "kappa150.csv"):
        peak = max(float(r["gain_db"]) for r in read_table(tmp_path / name))
        assert 10 <= peak <= 20
    assert max(float(r["gain_db"]) for r in read_table(tmp_path / "kappa15.csv")) > \
        max(float(r["gain_db"]) for r in read_table(tmp_path / "kappa150.csv"))


def test_fig9_best_reversal_longer_than_forward(tmp_path, capsys):
    assert run(["figure", "fig9", "--out", str(tmp_path)], capsys)[0] == 0
    rows = read_table(tmp_path / "tau2.csv")
    best = max(rows, key=lambda r: float(r["gain_db"]))
    assert float(best["sweep_value"]) > 85e-9


def test_fig10_optimum_at_quarter_turn(tmp_path, capsys):
    assert run(["figure", "fig10", "--out", str(tmp_path)], capsys)[0] == 0
    for name in ("kappa_phi_noise.csv", "gamma_phi_noise.csv"):
        rows = read_table(tmp_path / name)
        best = max(rows, key=lambda r: float(r["gain_db"]))
        assert float(best["sweep_value"]) == pytest.approx(math.pi / 2, abs=0.03)


@pytest.mark.slow
@pytest.mark.parametrize("fig", SLOW_FIGURES)
def test_slow_presets_replay(tmp_path, capsys, fig):
    rc, _, err = run(["figure", fig, "--out", str(tmp_path)], capsys)
    assert rc == 0, err
