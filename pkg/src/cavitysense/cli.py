"""cavity-sense: scenario runner for sweeps, optimizations, figures and validation.

Exit codes: 0 ok, 2 config error, 3 numeric failure, 4 validation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, validation
from .analytic import detection, gamma, ideal, kappa, loss, wigner
from .config import ConfigError, RawEntry, load
from .core import InsensitiveWorkingPoint, NumericFailure, ProtocolVariant, SystemParams
from .optimize import POINTS_PER_DECADE, minimize_log
from .simulator import MemoryCapExceeded, TruncationLeakage

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 2, 3, 4
TWO_PI = 2 * math.pi
PROG = "cavity-sense"

RATE_KEYS = ("g", "chi", "delta_c", "kappa", "gamma")
REGIMES = ("ideal", "kappa", "gamma")
AXES = ("time", "ratio", "phi", "tau2", "sigma_det")
FORMS = ("closed", "exact", "short", "assembled", "detection")
QFI_METHODS = ("auto", "eigendecomposition", "gaussian_analytic", "short", "closed_form")
TIME_UNITS = ("s", "chi", "chi_sqrtN")
AUTO_EIGEN_MAX_N = 1000
MAX_SWEEP_POINTS = 10 ** 6

KNOWN_KEYS = {
    "command", "title", "freq_convention",
    "N", "g", "chi", "delta_c", "kappa", "gamma", "alpha", "ratio", "variant", "regime",
    "tau1", "tau2", "phi", "sigma_det", "time_unit",
    "sweep.axis", "sweep.start", "sweep.stop", "sweep.num", "sweep.scale", "sweep.values",
    "sweep.optimize_time",
    "sensitivity.form", "qfi.method",
    "optimize.objective", "optimize.t_min", "optimize.t_max", "optimize.per_decade",
    "optimize.rtol",
    "wigner.N", "wigner.alpha", "wigner.chi_sqrtN_t", "wigner.re", "wigner.im",
    "wigner.weights_re", "wigner.weights_im", "wigner.re_min", "wigner.re_max",
    "wigner.im_min", "wigner.im_max", "wigner.step", "wigner.oracle",
    "tc.N", "tc.alpha", "tc.g", "tc.g_t_max", "tc.num", "tc.qfi",
    "validate.level", "validate.only", "validate.n_cases", "validate.long",
}


# ---------------------------------------------------------------------------
# Config access


class Values:
    """Resolved config values with diagnostics pointing back at the source entry."""

    def __init__(self, values: dict, entries: dict[str, RawEntry]):
        self.values, self.entries = values, entries
        for key in sorted(values):
            if key not in KNOWN_KEYS:
                self.error(key, f"unknown key {key!r}")

    def error(self, key, msg):
        e = self.entries.get(key)
        if e is None:
            raise ConfigError(msg)
        raise ConfigError(msg, e.line, e.column, e.source)

    def has(self, key):
        return key in self.values

    def num(self, key, default=None, positive=False, nonneg=False):
        if key not in self.values:
            if default is None:
                raise ConfigError(f"missing required key {key!r}")
            return default
        v = self.values[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.error(key, f"{key} must be a number")
        if positive and not v > 0:
            self.error(key, f"{key} must be > 0")
        if nonneg and not v >= 0:
            self.error(key, f"{key} must be >= 0")
        return float(v)

    def int(self, key, default=None, minimum=None):
        v = self.num(key, None if default is None else float(default))
        if v != int(v):
            self.error(key, f"{key} must be an integer")
        if minimum is not None and v < minimum:
            self.error(key, f"{key} must be >= {minimum}")
        return int(v)

    def word(self, key, choices, default=None):
        v = self.values.get(key, default)
        if v is None:
            raise ConfigError(f"missing required key {key!r}")
        if v not in choices:
            self.error(key, f"{key} must be one of {', '.join(choices)}; got {v!r}")
        return v

    def flag(self, key, default=False):
        v = self.values.get(key)
        if v is None:
            return default
        if v in ("true", "yes", "on", 1):
            return True
        if v in ("false", "no", "off", 0):
            return False
        self.error(key, f"{key} must be true or false")

    def numbers(self, key):
        v = self.values[key]
        v = v if isinstance(v, list) else [v]
        if any(isinstance(x, str) for x in v):
            self.error(key, f"{key} must be a list of numbers")
        return [float(x) for x in v]

    def words(self, key, choices, default):
        v = self.values.get(key, default)
        v = v if isinstance(v, list) else [v]
        for x in v:
            if x not in choices:
                self.error(key, f"{key} entries must be among {', '.join(choices)}; got {x!r}")
        return list(v)


def scenario_hash(command: str, values: dict) -> str:
    canon = json.dumps({"command": command, "values": values}, sort_keys=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def header(h: str) -> str:
    return f"# {PROG} v{__version__}, scenario {h}\n"


def fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


# ---------------------------------------------------------------------------
# Scenario


@dataclass(frozen=True)
class Scenario:
    params: SystemParams
    variant: ProtocolVariant
    regime: str
    tau1: float | None  # seconds
    tau2: float | None
    phi: float | str
    sigma_det: float
    axis: str | None
    grid: np.ndarray | None
    log_axis: bool
    time_factor: float  # seconds per configured time unit
    form: str
    qfi_methods: tuple[str, ...]
    optimize_time: bool
    t_range: tuple[float, float] | None  # seconds
    per_decade: int
    rtol: float


def build_params(cfg: Values) -> tuple[SystemParams, ProtocolVariant]:
    conv = cfg.word("freq_convention", ("rad", "hz2pi"), "rad")
    scale = TWO_PI if conv == "hz2pi" else 1.0
    variant = ProtocolVariant(cfg.word("variant", ("resonant", "dispersive"), "resonant"))
    N = cfg.int("N", minimum=1)
    alpha = cfg.num("alpha", nonneg=True)
    rates = {k: cfg.num(k, 0.0) * scale for k in RATE_KEYS if cfg.has(k)}
    for k in ("kappa", "gamma"):
        if rates.get(k, 0.0) < 0:
            cfg.error(k, f"{k} must be >= 0")
    if cfg.has("chi") and cfg.has("g"):
        cfg.error("chi", "give either chi or g, not both")
    if cfg.has("ratio") and cfg.has("kappa"):
        cfg.error("ratio", "give either ratio or kappa, not both")
    try:
        if cfg.has("chi"):
            p = SystemParams.from_chi(N, rates["chi"], alpha, rates.get("kappa", 0.0),
                                      rates.get("gamma", 0.0), variant, rates.get("delta_c"))
        elif cfg.has("g"):
            p = SystemParams(N=N, g=rates["g"], delta_c=rates.get("delta_c", 0.0),
                             kappa=rates.get("kappa", 0.0), gamma=rates.get("gamma", 0.0), alpha=alpha)
        else:
            raise ConfigError("one of chi or g is required")
        p.chi(variant)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if cfg.has("ratio"):
        p = with_ratio(p, cfg.num("ratio", positive=True), variant)
    return p, variant


def with_ratio(p: SystemParams, ratio: float, variant) -> SystemParams:
    """Set kappa so that chi alpha sqrt(N) / kappa = ratio."""
    return replace(p, kappa=p.chi(variant) * p.alpha * math.sqrt(p.N) / ratio)


def build_grid(cfg: Values):
    if cfg.has("sweep.values"):
        for k in ("sweep.start", "sweep.stop", "sweep.num"):
            if cfg.has(k):
                cfg.error(k, "give either sweep.values or sweep.start/stop/num")
        grid = np.array(cfg.numbers("sweep.values"))
        log_axis = cfg.word("sweep.scale", ("lin", "log"), "lin") == "log"
    else:
        for k in ("sweep.start", "sweep.stop", "sweep.num"):
            if not cfg.has(k):
                raise ConfigError(f"sweep needs sweep.values or sweep.start, sweep.stop, sweep.num (missing {k})")
        num = cfg.int("sweep.num")
        if num < 2:
            cfg.error("sweep.num", "a sweep needs at least 2 points")
        if num > MAX_SWEEP_POINTS:
            cfg.error("sweep.num", f"a sweep is limited to {MAX_SWEEP_POINTS} points")
        a, b = cfg.num("sweep.start"), cfg.num("sweep.stop")
        log_axis = cfg.word("sweep.scale", ("lin", "log"), "lin") == "log"
        if log_axis:
            if not (a > 0 and b > 0):
                cfg.error("sweep.start", "log sweeps need positive endpoints")
            grid = np.logspace(math.log10(a), math.log10(b), num)
        else:
            grid = np.linspace(a, b, num)
    key = "sweep.values" if cfg.has("sweep.values") else "sweep.start"
    if len(grid) < 2:
        cfg.error(key, "a sweep needs at least 2 points")
    if len(grid) > MAX_SWEEP_POINTS:
        cfg.error("sweep.num", f"a sweep is limited to {MAX_SWEEP_POINTS} points")
    d = np.diff(grid)
    if not (np.all(d > 0) or np.all(d < 0)):
        cfg.error(key, "sweep grid must be strictly monotone")
    if not np.all(np.isfinite(grid)):
        cfg.error(key, "sweep grid must be finite")
    return grid, log_axis


def build_scenario(cfg: Values, need_sweep=True) -> Scenario:
    p, variant = build_params(cfg)
    regime = cfg.word("regime", REGIMES, "ideal")
    unit = cfg.word("time_unit", TIME_UNITS, "s")
    chi = p.chi(variant)
    tf = {"s": 1.0, "chi": 1 / chi, "chi_sqrtN": 1 / (chi * math.sqrt(p.N))}[unit]
    axis = cfg.word("sweep.axis", AXES) if (need_sweep or cfg.has("sweep.axis")) else None
    grid, log_axis = build_grid(cfg) if axis else (None, False)
    optimize_time = cfg.flag("sweep.optimize_time")
    if optimize_time and axis in ("time", "tau2"):
        cfg.error("sweep.optimize_time", "time cannot be both swept and optimized")
    tau1 = cfg.num("tau1", positive=True) * tf if cfg.has("tau1") else None
    tau2 = cfg.num("tau2", positive=True) * tf if cfg.has("tau2") else None
    if axis == "time":
        for k in ("tau1", "tau2"):
            if cfg.has(k):
                cfg.error(k, f"{k} is set by the time sweep")
    elif axis and not optimize_time and tau1 is None:
        raise ConfigError("tau1 is required unless time is swept or optimized")
    if axis == "tau2" and cfg.has("tau2"):
        cfg.error("tau2", "tau2 is set by the tau2 sweep")
    if axis == "ratio" and (cfg.has("ratio") or cfg.has("kappa")):
        cfg.error("ratio" if cfg.has("ratio") else "kappa", "kappa is set by the ratio sweep")
    if axis == "ratio" and regime != "kappa":
        cfg.error("sweep.axis", "the ratio axis needs regime = kappa")
    phi = cfg.values.get("phi", "auto")
    if isinstance(phi, str) and phi != "auto":
        cfg.error("phi", "phi must be a number in (0, pi] or auto")
    if not isinstance(phi, str) and not (0 < phi <= math.pi):
        cfg.error("phi", "phi must lie in (0, pi]")
    sigma = cfg.num("sigma_det", 0.0, nonneg=True)
    form = cfg.word("sensitivity.form", FORMS, "closed")
    if form == "exact":
        form = "closed"
    if form in ("closed", "short") and regime != "gamma":
        if axis in ("phi", "sigma_det") or sigma > 0 or not (phi == "auto" or phi == math.pi / 2):
            cfg.error("sensitivity.form", "closed and short forms assume phi = pi/2 and no detection "
                      "noise; use form = assembled or detection")
    if form in ("closed", "short") and regime != "kappa":
        if axis == "tau2" or (tau2 is not None and tau2 != tau1):
            cfg.error("sensitivity.form", "unequal evolution times need form = assembled (kappa regime)")
    if axis == "sigma_det" and form not in ("assembled", "detection"):
        cfg.error("sweep.axis", "a sigma_det sweep needs form = assembled or detection")
    methods = tuple(cfg.words("qfi.method", QFI_METHODS, "auto"))
    if "closed_form" in methods and not optimize_time:
        cfg.error("qfi.method", "closed_form is an optimum; it needs sweep.optimize_time = true")
    if optimize_time or cfg.has("optimize.t_min") or cfg.has("optimize.t_max"):
        t_range = (cfg.num("optimize.t_min", positive=True) * tf if cfg.has("optimize.t_min") else None,
                   cfg.num("optimize.t_max", positive=True) * tf if cfg.has("optimize.t_max") else None)
        if None not in t_range and not t_range[0] < t_range[1]:
            cfg.error("optimize.t_max", "optimize.t_max must exceed optimize.t_min")
    else:
        t_range = None
    return Scenario(p, variant, regime, tau1, tau2, phi, sigma, axis, grid, log_axis, tf, form,
                    methods, optimize_time, t_range,
                    cfg.int("optimize.per_decade", POINTS_PER_DECADE, minimum=2),
                    cfg.num("optimize.rtol", 1e-4, positive=True))


def point(scn: Scenario, value):
    """(params, tau1, tau2, phi, sigma) at one sweep value."""
    p, t1, t2, phi, sigma = scn.params, scn.tau1, scn.tau2, scn.phi, scn.sigma_det
    if scn.axis == "time":
        t1 = t2 = value * scn.time_factor
    elif scn.axis == "tau2":
        t2 = value * scn.time_factor
    elif scn.axis == "ratio":
        p = with_ratio(p, value, scn.variant)
    elif scn.axis == "phi":
        phi = value
    elif scn.axis == "sigma_det":
        sigma = value
    if t2 is None:
        t2 = t1
    return p, t1, t2, phi, sigma


def scenario_flags(p: SystemParams, variant) -> list[str]:
    if variant is ProtocolVariant.RESONANT and p.g > 0 and not p.resonant_valid():
        return ["resonant_alpha2_below_10N"]
    if variant is ProtocolVariant.DISPERSIVE and not p.dispersive_valid():
        return ["dispersive_detuning_not_large"]
    return []


# ---------------------------------------------------------------------------
# Evaluators


def sensitivity_at(scn: Scenario, p, t1, t2, phi, sigma) -> tuple[float, list[str]]:
    v, regime, form = scn.variant, scn.regime, scn.form
    phi_num = math.pi / 2 if phi == "auto" else phi
    if form == "detection":
        return detection.detection_noise_sensitivity(p, t1, phi_num, sigma, regime, v), []
    if regime == "ideal":
        if form == "assembled":
            if t1 != t2:
                raise ValueError("ideal assembly needs tau2 == tau1")
            from .core import sensitivity_from_moments
            return sensitivity_from_moments(ideal.ideal_moments(p, t1, 0.0, v), phi, sigma), []
        r = ideal.ideal_sensitivity(p, t1, variant=v)
        return (r.value if form == "closed" else r.approx), list(r.flags)
    if regime == "kappa":
        if form == "assembled":
            return kappa.kappa_sensitivity_assembled(p, t1, t2, phi, sigma, v), []
        r = kappa.kappa_sensitivity(p, t1, t2, variant=v)
        if form == "short":
            return kappa.kappa_sensitivity_short(p, 0.5 * (t1 + t2), v), list(r.flags)
        return r.value, list(r.flags)
    flags = list(gamma.gamma_flags(p, t1, v))
    if form == "assembled":
        return gamma.gamma_sensitivity_assembled(p, t1, phi, v, sigma_det=sigma), flags
    r = gamma.gamma_sensitivity(p, t1, phi_num, v)
    return (r.value if form == "closed" else r.approx), list(r.flags)


def resolve_method(method: str, p: SystemParams) -> str:
    if method == "auto":
        # the dense spin state costs 16 (N+1)^2 bytes; keep auto well below the 1e4 cap
        return "eigendecomposition" if p.N <= AUTO_EIGEN_MAX_N else "gaussian_analytic"
    return method


def qfi_at(scn: Scenario, p, t, method) -> tuple[float | None, str, list[str]]:
    """(F_Q, method used, flags); F_Q is None where no QFI is available."""
    if scn.regime == "gamma":
        return None, "none", ["qfi_unavailable_gamma"]
    if scn.regime == "ideal" or p.kappa == 0:
        r = ideal.ideal_qfi(p, t, scn.variant)
        return r.value, "closed", list(r.flags)
    method = resolve_method(method, p)
    if method == "short":
        return loss.qfi_gaussian_short(p, t, scn.variant), "short", []
    r = loss.qfi_with_loss(None, p, t, method, scn.variant)
    return r.value, r.extras.get("method", method), list(r.flags)


def qfi_db(f):
    return None if f is None else 10 * math.log10(f / 4)


def gain_db(d):
    if d == math.inf:
        return -math.inf
    return -10 * math.log10(4 * d)


def default_t_range(scn: Scenario, p: SystemParams) -> tuple[float, float]:
    lo, hi = scn.t_range if scn.t_range else (None, None)
    chi = p.chi(scn.variant)
    if scn.regime == "kappa" and p.kappa > 0:
        c = kappa.kappa_optimum(p, scn.variant)[0]
        dlo, dhi = c / 30, c * 30
    elif scn.regime == "gamma" and p.gamma > 0:
        c = gamma.gamma_optimal_time(p)
        dlo, dhi = c / 30, c * 30
    else:
        s = chi * math.sqrt(p.N)
        dlo, dhi = 1e-3 / s, 3.0 / s
    return (lo or dlo, hi or dhi)


def _safe_sens(scn, p, t1, t2, phi, sigma):
    try:
        return sensitivity_at(scn, p, t1, t2, phi, sigma)
    except InsensitiveWorkingPoint:
        return math.inf, ["insensitive"]


def parallel_map(fn, items, threads):
    items = list(items)
    if threads <= 1:
        return [fn(x) for x in items]
    # map() yields in submission order, so rows stay in grid order
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _flags(*groups) -> str:
    seen = []
    for g in groups:
        for f in g:
            if f not in seen:
                seen.append(f)
    return ";".join(seen)


# ---------------------------------------------------------------------------
# Commands producing tables


def sensitivity_rows(scn: Scenario, threads: int):
    qmethod = scn.qfi_methods[0] if scn.qfi_methods[0] != "closed_form" else "auto"

    def row(value):
        p, t1, t2, phi, sigma = point(scn, value)
        base = scenario_flags(p, scn.variant)
        if scn.optimize_time:
            lo, hi = default_t_range(scn, p)
            o = minimize_log(lambda t: _safe_sens(scn, p, t, t, phi, sigma)[0], lo, hi,
                             scn.rtol, scn.per_decade)
            t1 = t2 = o.x
            d, fl = _safe_sens(scn, p, t1, t2, phi, sigma)
            fl = fl + ([f"optimum_{o.note.split()[0]}_range"] if o.note else [])
        else:
            d, fl = _safe_sens(scn, p, t1, t2, phi, sigma)
        f, _, qfl = qfi_at(scn, p, t1, qmethod)
        cells = [value]
        if scn.optimize_time:
            cells.append(t1 / scn.time_factor)
        return [fmt(c) for c in cells] + [fmt(d), fmt(gain_db(d)), fmt(qfi_db(f)), _flags(base, fl, qfl)]

    cols = ["sweep_value"] + (["t_opt"] if scn.optimize_time else []) + [
        "delta_beta_sq", "gain_db", "qfi_bound_db", "validity_flags"]
    return cols, parallel_map(row, scn.grid, threads)


def qfi_rows(scn: Scenario, threads: int):
    if scn.regime == "gamma":
        raise ConfigError("no QFI is available in the gamma regime")

    def one(value, method):
        p, t1, _, _, _ = point(scn, value)
        base = scenario_flags(p, scn.variant)
        extra = []
        if method == "closed_form":
            o = loss.qfi_loss_optimum(p, scn.variant)
            t, f, used, fl = o.t_opt, o.qfi_opt, "closed_form", list(o.flags)
        elif scn.optimize_time:
            lo, hi = default_qfi_range(scn, p)
            o = minimize_log(lambda t: -qfi_at(scn, p, t, method)[0], lo, hi, scn.rtol, scn.per_decade)
            t = o.x
            f, used, fl = qfi_at(scn, p, t, method)
            if o.note:
                extra.append(f"optimum_{o.note.split()[0]}_range")
        else:
            t = t1
            f, used, fl = qfi_at(scn, p, t, method)
        cells = [fmt(value), used]
        if scn.optimize_time:
            cells.append(fmt(t / scn.time_factor))
        return cells + [fmt(f), fmt(1 / f), fmt(qfi_db(f)), fmt(qfi_db(f)), _flags(base, fl, extra)]

    tasks = [(v, m) for v in scn.grid for m in scn.qfi_methods]
    cols = ["sweep_value", "method"] + (["t_opt"] if scn.optimize_time else []) + [
        "qfi", "delta_beta_sq", "gain_db", "qfi_bound_db", "validity_flags"]
    return cols, parallel_map(lambda vm: one(*vm), tasks, threads)


def default_qfi_range(scn: Scenario, p: SystemParams):
    if scn.t_range and None not in scn.t_range:
        return scn.t_range
    if scn.regime == "kappa" and p.kappa > 0:
        c = loss.qfi_loss_optimum(p, scn.variant).t_opt
        lo, hi = c / 10, c * 10
    else:
        s = p.chi(scn.variant) * math.sqrt(p.N)
        lo, hi = 1e-3 / s, 3.0 / s
    if scn.t_range:
        lo = scn.t_range[0] or lo
        hi = scn.t_range[1] or hi
    return lo, hi


def write_table(out, head: str, cols, rows, notes=()):
    text = head + "".join(f"# {n}\n" for n in notes) + ",".join(cols) + "\n"
    text += "".join(",".join(r) + "\n" for r in rows)
    emit(out, text)


def emit(out, text: str):
    if out is None or str(out) == "-":
        sys.stdout.write(text)
        return
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")


def plot_script_path(out) -> Path | None:
    if out is None or str(out) == "-":
        return None
    out = Path(out)
    return out.with_name(out.stem + ".plot.py")


_TABLE_PLOT = '''"""Generated by {prog} v{version}; plots {data}."""
import csv
import pathlib

import matplotlib.pyplot as plt

here = pathlib.Path(__file__).resolve().parent
with open(here / "{data}", encoding="utf-8") as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))


def num(s):
    return float(s) if s else float("nan")


fig, ax = plt.subplots()
groups = {{}}
for r in rows:
    groups.setdefault(r.get("method", "{label}"), []).append(r)
for name, rs in groups.items():
    x = [num(r["sweep_value"]) for r in rs]
    ax.plot(x, [num(r["gain_db"]) for r in rs], label=name)
    if "method" not in rs[0]:
        ax.plot(x, [num(r["qfi_bound_db"]) for r in rs], "--", label="QFI bound")
ax.set_xlabel("{xlabel}")
ax.set_ylabel("gain over SQL [dB]")
ax.set_xscale("{xscale}")
{extra}ax.legend()
fig.savefig(here / "{stem}.pdf")
'''


def write_table_plot(out, scn: Scenario, label: str, extra: str = ""):
    path = plot_script_path(out)
    if path is None:
        return
    out = Path(out)
    xl = {"time": "time", "tau2": "tau2", "ratio": "chi alpha sqrt(N) / kappa", "phi": "phi",
          "sigma_det": "sigma_det"}[scn.axis]
    path.write_text(_TABLE_PLOT.format(prog=PROG, version=__version__, data=out.name, label=label,
                                       xlabel=xl, xscale="log" if scn.log_axis else "linear",
                                       stem=out.stem, extra=extra), encoding="utf-8")


def cmd_sensitivity(cfg: Values, h: str, out, threads: int) -> int:
    scn = build_scenario(cfg)
    cols, rows = sensitivity_rows(scn, threads)
    write_table(out, header(h), cols, rows)
    write_table_plot(out, scn, scn.form)
    return EXIT_OK


def cmd_qfi(cfg: Values, h: str, out, threads: int) -> int:
    scn = build_scenario(cfg)
    cols, rows = qfi_rows(scn, threads)
    notes, extra = [], ""
    if scn.axis == "ratio":
        a = scn.params.alpha
        notes.append(f"validity window: 1 < ratio < alpha^3 = {fmt(a ** 3)}")
        notes.append(f"kappa = 0 optimum: qfi = {fmt(4 + 8 * a ** 2)}, gain_db = {fmt(qfi_db(4 + 8 * a ** 2))}")
        extra = (f"ax.axvline(1.0, color='gray')\nax.axvline({fmt(a ** 3)}, color='gray')\n"
                 f"ax.axhline({fmt(qfi_db(4 + 8 * a ** 2))}, color='gray')\n")
    write_table(out, header(h), cols, rows, notes)
    write_table_plot(out, scn, "qfi", extra)
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize


def cmd_optimize(cfg: Values, h: str, out, threads: int) -> int:
    scn = build_scenario(cfg, need_sweep=False)
    if scn.axis:
        cfg.error("sweep.axis", "optimize runs at a single scenario point; use sweep.optimize_time for sweeps")
    objective = cfg.word("optimize.objective", ("gain", "qfi"), "gain")
    p, phi, sigma = scn.params, scn.phi, scn.sigma_det
    lines = [("objective", objective), ("regime", scn.regime)]
    if objective == "gain":
        lo, hi = default_t_range(scn, p)
        o = minimize_log(lambda t: _safe_sens(scn, p, t, t, phi, sigma)[0], lo, hi, scn.rtol, scn.per_decade)
        value = o.value
        lines += [("t_opt", fmt(o.x / scn.time_factor)), ("t_opt_s", fmt(o.x)),
                  ("delta_beta_sq", fmt(value)), ("gain_db", fmt(gain_db(value)))]
        closed = None
        if scn.regime == "kappa" and p.kappa > 0:
            closed = kappa.kappa_optimum(p, scn.variant)
        elif scn.regime == "gamma" and p.gamma > 0:
            tc = gamma.gamma_optimal_time(p)
            closed = (tc, gamma.gamma_sensitivity(p, tc, math.pi / 2, scn.variant).approx)
            lines.append(("three_gamma_t_opt", fmt(3 * p.gamma * o.x)))
    else:
        method = scn.qfi_methods[0]
        if method == "closed_form":
            cfg.error("qfi.method", "closed_form is reported automatically; choose a numeric method")
        lo, hi = default_qfi_range(scn, p)
        o = minimize_log(lambda t: -qfi_at(scn, p, t, method)[0], lo, hi, scn.rtol, scn.per_decade)
        f, used, _ = qfi_at(scn, p, o.x, method)
        value = f
        lines += [("method", used), ("t_opt", fmt(o.x / scn.time_factor)), ("t_opt_s", fmt(o.x)),
                  ("qfi", fmt(f)), ("qfi_bound_db", fmt(qfi_db(f)))]
        closed = None
        if scn.regime == "kappa" and p.kappa > 0:
            lo_ = loss.qfi_loss_optimum(p, scn.variant)
            closed = (lo_.t_opt, lo_.qfi_opt)
            lines.append(("window", ", ".join(fmt(w) for w in lo_.window)))
            if lo_.flags:
                lines.append(("closed_form_flags", ";".join(lo_.flags)))
    lines += [("bracketed", "true" if o.bracketed else "false"), ("evaluations", str(o.evaluations))]
    if o.note:
        lines.append(("note", o.note.replace(" ", "_")))
    if closed is not None:
        lines += [("closed_form_t_opt", fmt(closed[0] / scn.time_factor)),
                  ("closed_form_value", fmt(closed[1])),
                  ("ratio_t_opt", fmt(o.x / closed[0])),
                  ("ratio_value", fmt(value / closed[1]))]
    else:
        lines.append(("closed_form", "none"))
    emit(out, header(h) + "".join(f"{k} = {v}\n" for k, v in lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# wigner


_WIGNER_PLOT = '''"""Generated by {prog} v{version}; plots the Wigner panels {files}."""
import pathlib

import matplotlib.pyplot as plt
import numpy as np

here = pathlib.Path(__file__).resolve().parent
files = {files}
fig, axes = plt.subplots(1, len(files), figsize=(4 * len(files), 4), squeeze=False)
for ax, name in zip(axes[0], files):
    meta = {{}}
    with open(here / name, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("# ") and " = " in line:
                k, v = line[2:].split(" = ", 1)
                meta[k] = v.strip()
    W = np.loadtxt(here / name, comments="#", ndmin=2)
    r0, rs = (float(x) for x in meta["re"].split(",")[:2])
    i0, st = (float(x) for x in meta["im"].split(",")[:2])
    ext = (r0, r0 + rs * (W.shape[1] - 1), i0, i0 + st * (W.shape[0] - 1))
    m = np.abs(W).max()
    ax.imshow(W, origin="lower", extent=ext, cmap="RdBu_r", vmin=-m, vmax=m)
    ax.set_title(meta.get("panel", name))
    ax.set_xlabel("Re zeta")
    ax.set_ylabel("Im zeta")
fig.savefig(here / "{stem}.pdf")
'''


def wigner_panels(cfg: Values):
    step = cfg.num("wigner.step", 0.05, positive=True)
    if cfg.has("wigner.re"):
        re_ = cfg.numbers("wigner.re")
        im_ = cfg.numbers("wigner.im") if cfg.has("wigner.im") else [0.0] * len(re_)
        wr = cfg.numbers("wigner.weights_re") if cfg.has("wigner.weights_re") else [1.0] * len(re_)
        wi = cfg.numbers("wigner.weights_im") if cfg.has("wigner.weights_im") else [0.0] * len(re_)
        if not (len(re_) == len(im_) == len(wr) == len(wi)):
            cfg.error("wigner.re", "amplitude and weight lists must have equal length")
        comps = [(complex(a, b), complex(c, d)) for a, b, c, d in zip(wr, wi, re_, im_)]
        panels = [("amplitudes", comps)]
    else:
        N = cfg.int("wigner.N", minimum=1)
        alpha = cfg.num("wigner.alpha", nonneg=True)
        ts = cfg.numbers("wigner.chi_sqrtN_t")
        panels = [(f"N={N}, alpha={fmt(alpha)}, chi sqrt(N) t = {fmt(t)}",
                   wigner.spin_boson_cat_components(N, alpha, t / math.sqrt(N))) for t in ts]
    ranges = []
    for _, comps in panels:
        a = np.array([c[1] for c in comps])
        pad = 3.0
        ranges.append((
            (cfg.num("wigner.re_min", float(a.real.min()) - pad), cfg.num("wigner.re_max", float(a.real.max()) + pad)),
            (cfg.num("wigner.im_min", float(a.imag.min()) - pad), cfg.num("wigner.im_max", float(a.imag.max()) + pad)),
        ))
    return panels, ranges, step


def cmd_wigner(cfg: Values, h: str, out, threads: int) -> int:
    panels, ranges, step = wigner_panels(cfg)
    out = Path(out) if out not in (None, "-") else Path("wigner.dat")
    names = [out.name] if len(panels) == 1 else [f"{out.stem}_{i}{out.suffix or '.dat'}" for i in range(len(panels))]

    def compute(i):
        (label, comps), (rr, ir) = panels[i], ranges[i]
        return wigner.wigner_cat(comps, rr, ir, step)

    grids = parallel_map(compute, range(len(panels)), threads)
    report = []
    for (label, comps), grid, name in zip(panels, grids, names):
        text = header(h)
        text += f"# panel = {label}\n"
        text += f"# re = {fmt(grid.re[0])}, {fmt(step)}, {len(grid.re)}\n"
        text += f"# im = {fmt(grid.im[0])}, {fmt(step)}, {len(grid.im)}\n"
        text += f"# integral = {fmt(grid.integral())}\n# min = {fmt(grid.min_value())}\n"
        text += f"# flags = {';'.join(grid.flags)}\n"
        text += "".join(" ".join(fmt(x) for x in row) + "\n" for row in grid.W)
        emit(out.with_name(name), text)
        if cfg.flag("wigner.oracle"):
            report.append((name, oracle_diff(comps, grid)))
    out.with_name(out.stem + ".plot.py").write_text(
        _WIGNER_PLOT.format(prog=PROG, version=__version__, files=repr(names), stem=out.stem), encoding="utf-8")
    if report:
        text = header(h) + "panel,quadrature_max_abs_diff,parity_max_abs_diff,points\n"
        text += "".join(f"{n},{fmt(dq)},{fmt(dp)},{k}\n" for n, (dq, dp, k) in report)
        emit(out.with_name(out.stem + "_oracle.csv"), text)
    return EXIT_OK


# the quadrature route multiplies by e^{2|z|^2}; beyond this radius cancellation dominates
QUADRATURE_MAX_RADIUS = 2.5


def oracle_diff(comps, grid, points=9) -> tuple[float, float, int]:
    """Largest |W - W_oracle| at fixed grid nodes: (quadrature, displaced parity, node count)."""
    ii = np.linspace(0, len(grid.im) - 1, points).astype(int)
    jj = np.linspace(0, len(grid.re) - 1, points).astype(int)
    idx = sorted({(int(i), int(j)) for i in ii[1:-1] for j in jj[1:-1]})
    z = np.array([grid.re[j] + 1j * grid.im[i] for i, j in idx])
    ours = np.array([grid.W[i, j] for i, j in idx])
    par = validation.wigner_parity(comps, z)
    near = np.abs(z) <= QUADRATURE_MAX_RADIUS
    quad = validation.wigner_quadrature(comps, z[near]) if np.any(near) else np.array([])
    dq = float(np.max(np.abs(quad - ours[near]))) if quad.size else math.nan
    return dq, float(np.max(np.abs(par - ours))), len(idx)


# ---------------------------------------------------------------------------
# Tavis-Cummings comparison


def cmd_tc(cfg: Values, h: str, out, threads: int) -> int:
    N = cfg.int("tc.N", minimum=1)
    alpha = cfg.num("tc.alpha", positive=True)
    g = cfg.num("tc.g", 1.0, positive=True)
    g_t_max = cfg.num("tc.g_t_max", 2.0, positive=True)
    num = cfg.int("tc.num", 0, minimum=0) or None
    with_qfi = cfg.flag("tc.qfi")
    tr = validation.tc_traces(N, alpha, g, t_end=g_t_max / g, num=num, with_qfi=with_qfi)
    models = ("tavis_cummings", "effective")
    cols = ["g_t"] + [f"sz_{m}" for m in models]
    if with_qfi:
        cols += [f"qfi_bound_db_{m}" for m in models]
    rows = []
    for k, t in enumerate(tr.times):
        r = [fmt(g * t)] + [fmt(tr.sz[m][k]) for m in models]
        if with_qfi:
            r += [fmt(qfi_db(tr.qfi[m][k])) for m in models]
        rows.append(r)
    write_table(out, header(h), cols, rows, [f"N = {N}, alpha = {fmt(alpha)}, N/alpha^2 = {fmt(N / alpha ** 2)}"])
    path = plot_script_path(out)
    if path is not None:
        ycol = "qfi_bound_db" if with_qfi else "sz"
        path.write_text(_TC_PLOT.format(prog=PROG, version=__version__, data=Path(out).name,
                                        ycol=ycol, stem=Path(out).stem), encoding="utf-8")
    return EXIT_OK


_TC_PLOT = '''"""Generated by {prog} v{version}; plots {data}."""
import csv
import pathlib

import matplotlib.pyplot as plt

here = pathlib.Path(__file__).resolve().parent
with open(here / "{data}", encoding="utf-8") as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
x = [float(r["g_t"]) for r in rows]
fig, ax = plt.subplots()
ax.plot(x, [float(r["{ycol}_tavis_cummings"]) for r in rows], label="Tavis-Cummings")
ax.plot(x, [float(r["{ycol}_effective"]) for r in rows], "k--", label="effective")
ax.set_xlabel("g t")
ax.set_ylabel("{ycol}")
ax.legend()
fig.savefig(here / "{stem}.pdf")
'''


# ---------------------------------------------------------------------------
# validate


def select_checks(level: str, only, include_long=False):
    oracles = list(validation.FULL_ORACLES if level == "full" else validation.FAST_ORACLES)
    if include_long:
        oracles.append(validation.acc12_full_point)
    suites = [name for name, _, _ in validation.PROPERTY_SUITES]
    if only:
        oracles = [f for f in oracles if any(f.__name__.startswith(o) for o in only)]
        # suites print as prop_<name>; accept either spelling
        bare = [o[len("prop_"):] if o.startswith("prop_") else o for o in only]
        suites = [s for s in suites if any(s.startswith(o) for o in bare)]
    return oracles, suites


def cmd_validate(cfg: Values, h: str, out, threads: int, level: str) -> int:
    only = None
    if cfg.has("validate.only"):
        v = cfg.values["validate.only"]
        only = [str(x) for x in (v if isinstance(v, list) else [v])]
    n_cases = cfg.int("validate.n_cases", 100, minimum=1)
    oracles, suites = select_checks(level, only, cfg.flag("validate.long"))
    if not oracles and not suites:
        cfg.error("validate.only", "validation selection is empty")
    results = []
    for fn in oracles:
        r = fn()
        results.extend([r] if isinstance(r, validation.CheckResult) else r)
    if suites:
        results.extend(validation.property_suites(n_cases, only=suites))
    text = header(h) + "".join(r.line() + "\n" for r in results)
    n_fail = sum(not r.passed for r in results)
    text += f"# {len(results) - n_fail} passed, {n_fail} failed\n"
    emit(out, text)
    return EXIT_OK if n_fail == 0 else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# figure presets


PRESET_PACKAGE = "cavitysense.presets"
FIGURES = tuple(f"fig{i}" for i in range(1, 11))
COMMANDS = {"sensitivity": cmd_sensitivity, "qfi": cmd_qfi, "wigner": cmd_wigner,
            "optimize": cmd_optimize, "tc": cmd_tc}
SUFFIX = {"sensitivity": ".csv", "qfi": ".csv", "wigner": ".dat", "optimize": ".txt", "tc": ".csv"}


def preset_files(fig: str) -> list:
    root = resources.files(PRESET_PACKAGE) / fig
    if not root.is_dir():
        raise ConfigError(f"unknown figure preset {fig!r}")
    return sorted((f for f in root.iterdir() if f.name.endswith(".cfg")), key=lambda f: f.name)


def run_config(command: str, path, overrides, environ, out, threads) -> int:
    values, entries = load(path, overrides, environ)
    cfg = Values(values, entries)
    declared = values.get("command")
    if declared is not None and declared != command:
        cfg.error("command", f"config declares command {declared!r}, not {command!r}")
    h = scenario_hash(command, values)
    if command == "validate":
        level = cfg.word("validate.level", ("fast", "full"), "fast")
        return cmd_validate(cfg, h, out, threads, level)
    return COMMANDS[command](cfg, h, out, threads)


def cmd_figure(fig: str, overrides, environ, out, threads) -> int:
    outdir = Path(out) if out not in (None, "-") else Path(fig)
    outdir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for f in preset_files(fig):
        with resources.as_file(f) as path:
            values, _ = load(path, overrides, environ)
            command = values.get("command")
            if command not in COMMANDS:
                raise ConfigError(f"preset {f.name} lacks a valid command key", source=str(path))
            stem = f.name[:-len(".cfg")]
            status = max(status, run_config(command, path, overrides, environ,
                                             outdir / (stem + SUFFIX[command]), threads))
    return status


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario file (key = value lines)")
    common.add_argument("--out", metavar="PATH", help="output file (directory for figure); default stdout")
    common.add_argument("--threads", type=int, default=1, metavar="K", help="worker threads for sweeps")
    common.add_argument("--freq-convention", choices=("rad", "hz2pi"),
                        help="rad: rates are angular; hz2pi: rates are in Hz and multiplied by 2 pi")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (repeatable; wins over file and environment)")
    ap = argparse.ArgumentParser(prog=PROG, description="Cat-state displacement sensing in cavity QED.")
    ap.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("sensitivity", parents=[common], help="sensitivity and gain along a sweep")
    sub.add_parser("qfi", parents=[common], help="quantum Fisher information along a sweep")
    sub.add_parser("wigner", parents=[common], help="Wigner function grids of cat states")
    sub.add_parser("optimize", parents=[common], help="optimal interaction time")
    sub.add_parser("tc", parents=[common], help="Tavis-Cummings versus effective model traces")
    v = sub.add_parser("validate", parents=[common], help="run the cross-validation checks")
    g = v.add_mutually_exclusive_group()
    g.add_argument("--level", choices=("fast", "full"))
    g.add_argument("--fast", dest="level", action="store_const", const="fast")
    g.add_argument("--full", dest="level", action="store_const", const="full")
    f = sub.add_parser("figure", parents=[common], help="regenerate a figure from its preset")
    f.add_argument("figure", choices=FIGURES)
    return ap


def main(argv=None, environ=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print(f"{PROG}: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    overrides = list(args.set)
    if args.freq_convention:
        overrides.append(f"freq_convention={args.freq_convention}")
    if args.command == "validate" and args.level:
        overrides.append(f"validate.level={args.level}")
    try:
        if args.command == "figure":
            return cmd_figure(args.figure, overrides, environ, args.out, args.threads)
        return run_config(args.command, args.config, overrides, environ, args.out, args.threads)
    except ConfigError as exc:
        print(f"{PROG}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, TruncationLeakage, MemoryCapExceeded, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"{PROG}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"{PROG}: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
