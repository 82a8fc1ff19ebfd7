from __future__ import annotations

import math

import pytest

from cavitysense.config import ConfigError, cli_entries, env_entries, load, merge, parse_text, resolve


def values(text, env=None, cli=None):
    return resolve(merge(env_entries(env or {}), parse_text(text, "t.cfg"), cli_entries(cli)))


def test_scalars_expressions_and_references():
    v = values("N = 100\nalpha = 10*sqrt(N)\nx = 2**3 - 1/4\ny = pi/2\nz = inf\n")
    assert v["N"] == 100 and v["alpha"] == pytest.approx(100.0)
    assert v["x"] == 7.75 and v["y"] == math.pi / 2 and v["z"] == math.inf


def test_words_and_lists():
    v = values("regime = kappa\nkappa = 3\nmethods = eigendecomposition, short\nts = 1, 2*kappa, 4\n")
    assert v["regime"] == "kappa"
    assert v["methods"] == ["eigendecomposition", "short"]
    assert v["ts"] == [1, 6, 4]


def test_comments_and_blank_lines():
    v = values("# header\n\nN = 3  # trailing\n")
    assert v == {"N": 3}


def test_dotted_keys_are_not_referenceable():
    with pytest.raises(ConfigError, match=r"t.cfg:2:5: .*unsupported"):
        values("sweep.num = 3\nx = sweep.num\n")


@pytest.mark.parametrize("text,line,col", [
    ("N = 3\nalpha 4\n", 2, 1),
    ("N = 3\n  9x = 4\n", 2, 3),
    ("N = 3\nalpha =\n", 2, 8),
    ("N = 3\nN = 4\n", 2, 1),
    ("N = 3\nalpha = 2 * bogus\n", 2, 13),
    ("x = (1 +\n", 1, 5),
    ("x = 1/0\n", 1, 5),
    ("x = __import__(1)\n", 1, 5),
])
def test_errors_carry_line_and_column(text, line, col):
    with pytest.raises(ConfigError) as err:
        values(text)
    assert (err.value.line, err.value.column) == (line, col)
    assert str(err.value).startswith(f"t.cfg:{line}:{col}: ")


def test_cycles_rejected():
    with pytest.raises(ConfigError, match="circular"):
        values("a = b + 1\nb = a * 2\n")


def test_precedence_cli_over_file_over_env():
    env = {"CAVITYSENSE_N": "5", "CAVITYSENSE_ALPHA": "2", "CAVITYSENSE_SWEEP__NUM": "7", "OTHER": "x"}
    v = values("N = 10\nalpha = 3\n", env=env, cli=["alpha=4"])
    assert v == {"N": 10, "alpha": 4, "sweep.num": 7}


def test_env_reference_resolved_with_file_values():
    v = values("N = 4\n", env={"CAVITYSENSE_ALPHA": "sqrt(N)"})
    assert v["alpha"] == 2.0


def test_bad_cli_override():
    with pytest.raises(ConfigError):
        cli_entries(["novalue"])


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load(tmp_path / "missing.cfg")
    p = tmp_path / "ok.cfg"
    p.write_text("N = 2\n")
    vals, entries = load(p, ["alpha=1"], environ={})
    assert vals == {"N": 2, "alpha": 1}
    assert entries["N"].line == 1
