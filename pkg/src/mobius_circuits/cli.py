"""Command-line front end: sweeps, slope and exponent studies, ED cross-checks.

Every command reads defaults, then an optional JSON ``--config``, then flag
overrides.  CSV outputs carry a ``# schema=1`` line and shortest round-trip
floats; JSON reports hold ``inputs``, ``results`` and ``diagnostics``.
Exit codes: 0 success, 1 threshold violation, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .ed import FiniteLatticeSpec, finite_lattice_entropies, reduced_entropies, run_circuit
from .entanglement import (
    asymptotic_slope,
    block_entropies,
    entropy_density_integral,
    fit_exponent,
    fit_slope,
    gamma_coefficient,
)
from .mobius import classify_momentum, Critical
from .models import (
    LogLawParams,
    VolumeParams,
    critical_window,
    lambda_c_loglaw,
    lambda_c_volume,
    volume_round,
)
from .steady_state import (
    MomentumGrid,
    averaged_symbols,
    classify_phase,
    correlation_coefficients,
    evolve_amplitude,
    transfer_matrices,
)

PI = math.pi

DEFAULTS = {
    "phase-diagram": {
        "model": "volume",
        "x_values": [PI / 16, PI / 12, PI / 8, 3 * PI / 16, PI / 4],
        "th_values": [[0.3, 0.2]],
        "lambda_min": 0.0,
        "lambda_max": 1.0,
        "lambda_steps": 101,
        "k_grid": 1024,
    },
    "slope": {
        "x_values": [PI / 8, PI / 6],
        "lambda_fractions": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.1, 1.5],
        "ms": [1],
        "n": 500,
        "ell_min": 20,
        "ell_max": 100,
        "ell_step": 5,
        "k_grid": 4096,
        "tolerance": 0.02,
    },
    "exponents": {
        "x": PI / 8,
        "delta_min": 1e-4,
        "delta_max": 1e-2,
        "delta_steps": 9,
        "ms": [0, 1, 2, 3],
        "n_nodes": 400,
    },
    "crosscheck": {
        "L_values": [4, 6, 8],
        "x_values": [PI / 8, PI / 6],
        "lambda_values": [0.0, 0.1, 0.5],
        "n_values": [0, 1, 5, 20, 50],
        "ms": [1, 2, 3],
        "tolerance": 1e-6,
    },
    "mobius": {
        "model": "volume",
        "x": PI / 8,
        "t": 0.3,
        "h": 0.2,
        "lambda": 0.1,
        "k_grid": 64,
    },
}
COMMON = {"threads": 1, "u_grid": 2048}


class ConfigError(ValueError):
    pass


# -- output helpers -------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".partial-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def csv_text(header, rows) -> str:
    lines = ["# schema=1", ",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _emit(cfg, text: str) -> None:
    if cfg.get("out"):
        _atomic_write(cfg["out"], text)
    else:
        sys.stdout.write(text)


def _pmap(cfg, fn, items):
    items = list(items)
    threads = cfg["threads"]
    if threads <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))  # map preserves input order


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def json_text(inputs, results, diagnostics) -> str:
    doc = {"inputs": inputs, "results": results, "diagnostics": diagnostics}
    return json.dumps(_json_safe(doc), indent=2, sort_keys=False) + "\n"


# -- commands -----------------------------------------------------------------

def _lambda_grid(cfg):
    steps = int(cfg["lambda_steps"])
    if steps < 1:
        raise ConfigError("lambda_steps must be >= 1")
    if steps == 1:
        return [float(cfg["lambda_min"])]
    return [float(v) for v in np.linspace(cfg["lambda_min"], cfg["lambda_max"], steps)]


def cmd_phase_diagram(cfg):
    grid = MomentumGrid(int(cfg["k_grid"]))
    lams = _lambda_grid(cfg)
    step = lams[1] - lams[0] if len(lams) > 1 else 0.0
    if cfg["model"] == "volume":
        points = [(x, lam) for x in cfg["x_values"] for lam in lams]

        def row(pt):
            x, lam = pt
            p = VolumeParams(x, lam)
            phase = classify_phase(p, grid)
            lc = lambda_c_volume(x) if x > 0 else math.inf
            k_c = phase.window.k_lo if phase.kind == "VolumeLaw" else None
            return [x, lam, phase.kind, k_c, lc, entropy_density_integral(p, 1)]

        header = ["x", "lambda", "phase", "k_c", "lambda_c_closed_form", "s_1_integral"]
    elif cfg["model"] == "loglaw":
        points = [(t, h, lam) for t, h in cfg["th_values"] for lam in lams]

        def row(pt):
            t, h, lam = pt
            p = LogLawParams(t, h, lam)
            phase = classify_phase(p, grid)
            lc = lambda_c_loglaw(t, h)
            k_c = None
            if phase.kind == "LogLaw":
                k_c = min(k for k in phase.critical_momenta if k > 0) if any(
                    k > 0 for k in phase.critical_momenta) else None
            elif phase.kind == "VolumeLaw":
                k_c = phase.window.k_lo
            s1 = entropy_density_integral(averaged_symbols(p, grid, n_u=cfg["u_grid"]), 1)
            return [t, h, lam, phase.kind, k_c, lc, s1]

        header = ["t", "h", "lambda", "phase", "k_c", "lambda_c_closed_form", "s_1_integral"]
    else:
        raise ConfigError(f"unknown model {cfg['model']!r}")
    rows = _pmap(cfg, row, points)
    violations = 0
    for r in rows:
        lam, phase, lc = r[-5], r[-4], r[-2]
        if lc is not None and math.isfinite(lc) and lam > lc + step and phase != "AreaLaw":
            violations += 1
    _emit(cfg, csv_text(header, rows))
    if cfg.get("plot_script") and cfg.get("out"):
        _atomic_write(cfg["plot_script"], _gnuplot_phase(cfg["out"], cfg["model"]))
    return 1 if violations else 0


def _slope_row(cfg, grid, x, frac):
    lc = lambda_c_volume(x)
    lam = frac * lc
    p = VolumeParams(x, lam)
    ells = np.arange(cfg["ell_min"], cfg["ell_max"] + 1, cfg["ell_step"])
    f = evolve_amplitude(transfer_matrices(p, grid.k), cfg["n"])
    coeffs = correlation_coefficients(f, grid, int(ells.max()) - 1)
    reports = block_entropies(coeffs, ells, cfg["ms"])
    out = []
    for m in cfg["ms"]:
        fit = fit_slope(ells, [r[m] for r in reports], m=m)
        integral = entropy_density_integral(p, m)
        rel = (fit.slope - integral) / integral if integral > 0 else None
        out.append([x, lam, m, fit.slope, integral, fit.intercept, fit.residual, rel])
    return out


def cmd_slope(cfg):
    if cfg["ell_max"] > 200:
        raise ConfigError("ell_max must not exceed 200")
    grid = MomentumGrid(int(cfg["k_grid"]))
    points = [(x, fr) for x in cfg["x_values"] for fr in cfg["lambda_fractions"]]
    chunks = _pmap(cfg, lambda pt: _slope_row(cfg, grid, *pt), points)
    rows = [r for chunk in chunks for r in chunk]
    header = ["x", "lambda", "m", "slope_fit", "slope_integral", "intercept", "residual", "rel_diff"]
    bad = 0
    for (x, fr), chunk in zip(points, chunks):
        for r in chunk:
            if fr <= 0.8 and (r[7] is None or abs(r[7]) > cfg["tolerance"]):
                bad += 1
            if fr > 1 and r[3] >= 1e-3:
                bad += 1
    _emit(cfg, csv_text(header, rows))
    if cfg.get("plot_script") and cfg.get("out"):
        _atomic_write(cfg["plot_script"], _gnuplot_slope(cfg["out"]))
    return 1 if bad else 0


def cmd_exponents(cfg):
    x = float(cfg["x"])
    if not 0 < x < PI / 4:
        raise ConfigError("x must lie in (0, pi/4)")
    lc = lambda_c_volume(x)
    deltas = np.logspace(math.log10(cfg["delta_min"]), math.log10(cfg["delta_max"]), int(cfg["delta_steps"]))
    gam = gamma_coefficient(x)
    amp = gam * math.sin(2 * x) ** 2 * math.cosh(2 * lc)

    def study(m):
        s = [entropy_density_integral(VolumeParams(x, lc - d), m, cfg["n_nodes"]) for d in deltas]
        fit = fit_exponent(list(zip(lc - deltas, s)), lc)
        d0, s0 = float(deltas[0]), s[0]
        entry = {"m": m, "nu": fit.nu, "amplitude": fit.amplitude, "window": list(fit.window),
                 "residual": fit.residual, "deltas": list(deltas), "s": s}
        entry["asymptotic_ratio"] = s0 / asymptotic_slope(m, x, lc - d0)
        if m == 0:
            entry["pass"] = 0.45 <= fit.nu <= 0.55
        elif m == 1:
            entry["marginal_coefficient"] = s0 / (d0 * math.log(d0))
            entry["pass"] = abs(entry["asymptotic_ratio"] - 1) <= 0.05
        else:
            entry["pass"] = 0.9 <= fit.nu <= 1.1
        return entry

    results = _pmap(cfg, study, cfg["ms"])
    diagnostics = {"lambda_c": lc, "gamma": gam, "amplitude_prefactor": amp}
    inputs = {k: cfg[k] for k in ("x", "delta_min", "delta_max", "delta_steps", "ms", "n_nodes")}
    _emit(cfg, json_text(inputs, results, diagnostics))
    return 0 if all(r["pass"] for r in results) else 1


def cmd_crosscheck(cfg):
    for L in cfg["L_values"]:
        if L > 14 or L < 4 or L % 2:
            raise ConfigError("L must be even with 4 <= L <= 14")
    cases = [(L, x, lam, n) for L in cfg["L_values"] for x in cfg["x_values"]
             for lam in cfg["lambda_values"] for n in cfg["n_values"]]

    def rows_for(case):
        L, x, lam, n = case
        rnd = volume_round(x, lam)
        ell = L // 2
        ed = reduced_entropies(run_circuit(L, rnd, n), ell, cfg["ms"])
        ga = finite_lattice_entropies(FiniteLatticeSpec(L), rnd, n, ell, cfg["ms"])
        return [[L, x, lam, n, ell, m, ed[m], ga[m], abs(ed[m] - ga[m])] for m in cfg["ms"]]

    rows = [r for chunk in _pmap(cfg, rows_for, cases) for r in chunk]
    header = ["L", "x", "lambda", "n", "ell", "m", "S_ed", "S_gaussian", "abs_diff"]
    _emit(cfg, csv_text(header, rows))
    return 1 if any(r[-1] > cfg["tolerance"] for r in rows) else 0


def cmd_mobius(cfg):
    grid = MomentumGrid(int(cfg["k_grid"]))
    if cfg["model"] == "volume":
        params = VolumeParams(cfg["x"], cfg["lambda"])
    elif cfg["model"] == "loglaw":
        params = LogLawParams(cfg["t"], cfg["h"], cfg["lambda"])
    else:
        raise ConfigError(f"unknown model {cfg['model']!r}")
    mats = transfer_matrices(params, grid.k)
    records = []
    for k, m in zip(grid.k, mats):
        cls = classify_momentum(m)
        rec = {"k": float(k), "matrix": [[complex(v) for v in row] for row in m],
               "trace": complex(m[0, 0] + m[1, 1]), "critical": isinstance(cls, Critical)}
        if isinstance(cls, Critical):
            rec["theta"] = cls.theta
        else:
            rec["f_stable"] = [complex(v) for v in cls.f_stable]
            rec["f_unstable"] = [complex(v) for v in cls.f_unstable]
            rec["contraction"] = cls.contraction
        records.append(rec)
    phase = classify_phase(params, grid)
    diagnostics = {"n_critical": sum(r["critical"] for r in records), "phase": phase.kind,
                   "critical_momenta": list(phase.critical_momenta)}
    if cfg["model"] == "volume" and cfg["x"] > 0:
        diagnostics["lambda_c"] = lambda_c_volume(cfg["x"])
        win = critical_window(params)
        diagnostics["window"] = {"kind": win.kind, "k_lo": win.k_lo, "k_hi": win.k_hi}
    inputs = {k: cfg[k] for k in ("model", "x", "t", "h", "lambda", "k_grid")}
    _emit(cfg, json_text(inputs, records, diagnostics))
    return 0


COMMANDS = {
    "phase-diagram": cmd_phase_diagram,
    "slope": cmd_slope,
    "exponents": cmd_exponents,
    "crosscheck": cmd_crosscheck,
    "mobius": cmd_mobius,
}


# -- plot scripts -----------------------------------------------------------

def _gnuplot_phase(csv_path, model):
    lcol = 2 if model == "volume" else 3
    return (
        "set datafile separator ','\n"
        "set xlabel 'lambda'\nset ylabel 's_1'\n"
        f"plot '{csv_path}' every ::1 using {lcol}:{lcol + 4} with points title 'entropy density'\n"
    )


def _gnuplot_slope(csv_path):
    return (
        "set datafile separator ','\n"
        "set xlabel 'lambda'\nset ylabel 'slope'\n"
        f"plot '{csv_path}' every ::1 using 2:4 with points title 'fit', \\\n"
        f"     '{csv_path}' every ::1 using 2:5 with lines title 'integral'\n"
    )


# -- argument handling --------------------------------------------------------

def _float_list(text):
    try:
        return [float(eval_const(v)) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def eval_const(text: str) -> float:
    """Parse a float or a simple multiple of pi such as ``pi/8`` or ``3*pi/16``."""
    s = text.strip().replace(" ", "")
    if "pi" not in s:
        return float(s)
    num, _, den = s.partition("/")
    coef = num.replace("pi", "").rstrip("*") or "1"
    value = float(coef) * PI
    return value / float(den) if den else value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mobius-circuits", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON file with parameters")
        sp.add_argument("--out", help="output path (stdout if omitted)")
        sp.add_argument("--threads", type=int)
        sp.add_argument("--k-grid", dest="k_grid", type=int)
        sp.add_argument("--u-grid", dest="u_grid", type=int)
        sp.add_argument("--plot-script", dest="plot_script", help="write a gnuplot script here")
        if name in ("phase-diagram", "slope", "crosscheck"):
            sp.add_argument("--x", dest="x_values", type=_float_list, help="comma list, e.g. pi/8,pi/6")
        if name == "phase-diagram":
            sp.add_argument("--model", choices=["volume", "loglaw"])
            sp.add_argument("--lambda-max", dest="lambda_max", type=float)
            sp.add_argument("--lambda-steps", dest="lambda_steps", type=int)
        if name in ("slope", "exponents", "crosscheck"):
            sp.add_argument("--ms", type=_int_list)
        if name == "slope":
            sp.add_argument("--n", type=int)
            sp.add_argument("--ell-max", dest="ell_max", type=int)
            sp.add_argument("--fractions", dest="lambda_fractions", type=_float_list)
        if name in ("exponents", "mobius"):
            sp.add_argument("--x-value", dest="x", type=eval_const)
        if name == "crosscheck":
            sp.add_argument("--L", dest="L_values", type=_int_list)
            sp.add_argument("--n-values", dest="n_values", type=_int_list)
        if name == "mobius":
            sp.add_argument("--model", choices=["volume", "loglaw"])
            sp.add_argument("--lambda", dest="lambda", type=float)
    return parser


def resolve_config(args) -> dict:
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a JSON object")
        allowed = set(cfg) | {"out", "plot_script", "command"}
        unknown = set(loaded) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update({k: v for k, v in loaded.items() if k != "command"})
    for key, value in vars(args).items():
        if key not in ("command", "config") and value is not None:
            cfg[key] = value
    if int(cfg["threads"]) < 1:
        raise ConfigError("threads must be >= 1")
    for key in ("k_grid", "u_grid"):
        if key in cfg and (int(cfg[key]) < 2 or int(cfg[key]) % 2):
            raise ConfigError(f"{key} must be an even integer >= 2")
    for key, value in cfg.items():
        if isinstance(value, list) and not value:
            raise ConfigError(f"{key} must be non-empty")
    if cfg.get("out"):
        directory = os.path.dirname(os.path.abspath(cfg["out"]))
        if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
            raise ConfigError(f"output directory not writable: {directory}")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
