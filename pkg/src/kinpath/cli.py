"""Command-line front end.

Every subcommand resolves its parameters as defaults < ``--config`` file <
flags, runs one analytic operation and writes JSON (canonical) or CSV.

Exit codes: 0 success, 1 numerical or verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import morse, normal_modes as nm, oracles, propagator as prop
from .errors import InvalidParameters, KinpathError
from .params import SystemParams

__all__ = ["RunConfig", "UsageError", "parse_args", "run", "main", "SCHEMA_VERSION"]

SCHEMA_VERSION = "1.0"

SUBCOMMANDS = ("morse-spectrum", "morse-wavefunction", "morse-green", "pendulum-modes",
               "pendulum-kernel", "pendulum-spectrum", "verify")

# name -> (default, type, help)
_MORSE_OPTS = {
    "m1": (1.0, float, "mass of particle 1 [mass]"),
    "m2": (1.0, float, "mass of particle 2 [mass]"),
    "kappa": (0.0, float, "kinetic coupling of p1*p2 [1/mass]"),
    "lam": (25.0, float, "Morse depth lambda [energy]"),
    "alpha": (1.0, float, "Morse shape parameter alpha [dimensionless]"),
    "beta": (1.0, float, "Morse inverse range beta [1/length]"),
    "r0": (0.0, float, "equilibrium offset r0 [length]"),
    "K": (0.0, float, "centre-of-mass wavenumber K [1/length]"),
}
_PENDULUM_OPTS = {
    "m1": (3.0, float, "upper bob mass [mass]"),
    "m2": (1.0, float, "lower bob mass [mass]"),
    "l": (1.0, float, "string length [length]"),
    "g": (1.0, float, "gravitational acceleration [length/time^2]"),
}
_COMMON_OPTS = {
    "hbar": (1.0, float, "reduced Planck constant [action]"),
}
_EXTRA_OPTS = {
    "morse-spectrum": {},
    "morse-wavefunction": {
        "n": (0, int, "bound state index [dimensionless]"),
        "x_min": (None, float, "left end of the x_r sample range [length] (default: x_min - 3/beta)"),
        "x_max": (None, float, "right end of the x_r sample range [length] (default: x_min + 12/beta)"),
        "points": (301, int, "number of sample points"),
    },
    "morse-green": {
        "energy": (None, float, "energy E below threshold [energy] (default: midway between levels 0 and 1)"),
        "source": (0.0, float, "source point x' of G(x, x') [length]"),
        "x_min": (None, float, "left end of the x sample range [length] (default: x_min - 3/beta)"),
        "x_max": (None, float, "right end of the x sample range [length] (default: x_min + 12/beta)"),
        "points": (301, int, "number of sample points"),
    },
    "pendulum-modes": {},
    "pendulum-kernel": {
        "T": (0.5, float, "duration T (real) or tau (imaginary) [time]"),
        "regime": ("imaginary", str, "real or imaginary time"),
        "phi1": ("0,0", str, "initial angles phi' as 'a,b' [rad]"),
        "phi2": ("0,0", str, "final angles phi'' as 'a,b' [rad]"),
    },
    "pendulum-spectrum": {
        "n_max": (4, int, "highest quantum number per mode"),
    },
    "verify": {
        "system": ("all", str, "morse, pendulum or all"),
        "seed": (0, int, "seed of the randomized mode sweep"),
    },
}

_CSV_COLUMNS = {
    "morse-spectrum": "n, E_rel, E_total",
    "morse-wavefunction": "x, psi, V(x)",
    "morse-green": "x, G",
    "pendulum-modes": "mode, omega2, omega",
    "pendulum-kernel": "re, im",
    "pendulum-spectrum": "n1, n2, E",
    "verify": "check, value, tolerance, passed",
}


class UsageError(Exception):
    """Bad command line or configuration; maps to exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    subcommand: str
    options: dict
    output: str = "-"
    fmt: str = "json"
    sources: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return int(self.options.get("seed", 0))


def _options_for(sub: str) -> dict:
    base = dict(_PENDULUM_OPTS) if sub.startswith("pendulum") else dict(_MORSE_OPTS)
    if sub == "verify":
        base = {f"morse_{k}": v for k, v in _MORSE_OPTS.items()}
        base.update({f"pend_{k}": v for k, v in _PENDULUM_OPTS.items()})
    base.update(_COMMON_OPTS)
    base.update(_EXTRA_OPTS[sub])
    return base


def _flag(name: str) -> str:
    if name == "lam":
        return "--lambda"
    if name.startswith("morse_"):
        return "--" + _flag(name[6:])[2:]
    if name.startswith("pend_"):
        return "--pendulum-" + name[5:].replace("_", "-")
    return "--" + name.replace("_", "-")


def _build_parser() -> _Parser:
    parser = _Parser(prog="kinpath", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    subs = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for sub in SUBCOMMANDS:
        sp = subs.add_parser(sub, help=f"CSV columns: {_CSV_COLUMNS[sub]}",
                             description=f"CSV columns: {_CSV_COLUMNS[sub]}. All quantities in natural units.")
        sp.add_argument("--config", default=None, help="flat key=value file; flags override it")
        sp.add_argument("--output", default=argparse.SUPPRESS, help="output path, '-' for stdout (default -)")
        sp.add_argument("--format", dest="fmt", choices=("json", "csv"), default=argparse.SUPPRESS,
                        help="output format (default json)")
        for name, (default, typ, text) in _options_for(sub).items():
            shown = "" if default is None else f" (default {default})"
            sp.add_argument(_flag(name), dest=name, type=typ, default=argparse.SUPPRESS,
                            help=text + shown)
    return parser


def _read_config(path: str, allowed: dict) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc.strerror}") from exc
    alias = {"lambda": "lam"}
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        key = alias.get(key, key)
        if key not in allowed and "morse_" + key in allowed:
            key = "morse_" + key
        if key in ("output", "format"):
            out["fmt" if key == "format" else key] = value
            continue
        if key not in allowed:
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        typ = allowed[key][1]
        try:
            out[key] = typ(value)
        except ValueError as exc:
            raise UsageError(f"{path}:{no}: bad value for {key}: {value!r}") from exc
    return out


def parse_args(argv) -> RunConfig:
    """Resolve ``argv`` into a :class:`RunConfig`.

    Raises
    ------
    UsageError
        Unknown flag, malformed config file or bad value.
    """
    ns = vars(_build_parser().parse_args(list(argv)))
    sub = ns.pop("subcommand")
    cfg_path = ns.pop("config", None)
    allowed = _options_for(sub)
    merged = {k: v[0] for k, v in allowed.items()}
    merged.update(output="-", fmt="json")
    sources = {k: "default" for k in merged}
    if cfg_path:
        for k, v in _read_config(cfg_path, allowed).items():
            merged[k] = v
            sources[k] = "config"
    for k, v in ns.items():
        merged[k] = v
        sources[k] = "flag"
    if merged["fmt"] not in ("json", "csv"):
        raise UsageError(f"format must be json or csv, got {merged['fmt']!r}")
    output = merged.pop("output")
    fmt = merged.pop("fmt")
    sources.pop("output")
    sources.pop("fmt")
    return RunConfig(subcommand=sub, options=merged, output=output, fmt=fmt, sources=sources)


# ---------------------------------------------------------------------------
# parameter objects


def _system_params(o: dict, prefix: str = "") -> tuple[SystemParams, float]:
    g = lambda k: o[prefix + k]  # noqa: E731
    p = SystemParams(m1=g("m1"), m2=g("m2"), kappa=g("kappa"), lam=g("lam"), alpha=g("alpha"),
                     beta=g("beta"), r0=g("r0"), hbar=o["hbar"])
    return p, g("K")


def _pendulum(o: dict, prefix: str = ""):
    vals = {k: o[prefix + k] for k in ("m1", "m2", "l", "g")}
    return vals, nm.generalized_modes(nm.pendulum_matrices(**vals))


def _vec(text: str, name: str) -> np.ndarray:
    try:
        v = np.array([float(s) for s in text.split(",")])
    except ValueError as exc:
        raise UsageError(f"{name} must be comma-separated numbers, got {text!r}") from exc
    if v.size != 2:
        raise UsageError(f"{name} needs two components, got {text!r}")
    return v


def _x_range(sol: morse.MorseSolution, o: dict) -> np.ndarray:
    beta = sol.params.beta
    lo = o["x_min"] if o["x_min"] is not None else sol.x_min - 3.0 / beta
    hi = o["x_max"] if o["x_max"] is not None else sol.x_min + 12.0 / beta
    if not (hi > lo and o["points"] >= 2):
        raise UsageError("need x-max > x-min and points >= 2")
    return np.linspace(lo, hi, o["points"])


# ---------------------------------------------------------------------------
# subcommands; each returns (json results, csv header, csv rows)


def _morse_spectrum(o):
    p, K = _system_params(o)
    sol = morse.build(p, K)
    levels = [{"n": n, "E_rel": morse.relative_bound_energy(sol, n), "E_total": morse.bound_energy(sol, n)}
              for n in range(sol.n_bound)]
    res = {"levels": levels, "xi": sol.xi, "n_bound": sol.n_bound, "com_energy": morse.com_energy(sol),
           "threshold": morse.threshold_energy(sol), "mass_eff": sol.mass_eff}
    rows = [[lv["n"], lv["E_rel"], lv["E_total"]] for lv in levels]
    return res, ["n", "E_rel", "E_total"], rows


def _morse_wavefunction(o):
    p, K = _system_params(o)
    sol = morse.build(p, K)
    psi = morse.bound_wavefunction(sol, o["n"])
    x = _x_range(sol, o)
    y = np.asarray(psi(x))
    V = morse.potential(sol, x)
    res = {"n": o["n"], "energy": psi.energy, "relative_energy": psi.relative_energy,
           "samples": {"x": x.tolist(), "psi": y.tolist(), "V": V.tolist()}}
    return res, ["x", "psi", "V(x)"], [[a, b, c] for a, b, c in zip(x, y, V)]


def _morse_green(o):
    p, K = _system_params(o)
    sol = morse.build(p, K)
    E = o["energy"]
    if E is None:
        if sol.n_bound >= 2:
            E = 0.5 * (morse.bound_energy(sol, 0) + morse.bound_energy(sol, 1))
        else:
            E = morse.com_energy(sol) + 0.5 * p.lam
    x = _x_range(sol, o)
    G = np.asarray(morse.green_function(sol, E, x, np.full_like(x, o["source"])))
    res = {"energy": E, "source": o["source"], "poles": morse.green_poles(sol).tolist(),
           "samples": {"x": x.tolist(), "G": G.tolist()}}
    return res, ["x", "G"], [[a, b] for a, b in zip(x, G)]


def _pendulum_modes(o):
    vals, basis = _pendulum(o)
    plus, minus = nm.pendulum_omega2_closed_form(**vals)
    res = {"omega2": basis.omega2.tolist(), "omega": basis.omega.tolist(), "C": basis.C.tolist(),
           "det_C": basis.det_C, "closed_form_omega2": sorted([minus, plus])}
    rows = [[k, w2, w] for k, (w2, w) in enumerate(zip(basis.omega2, basis.omega))]
    return res, ["mode", "omega2", "omega"], rows


def _pendulum_kernel(o):
    _, basis = _pendulum(o)
    phi1, phi2 = _vec(o["phi1"], "phi1"), _vec(o["phi2"], "phi2")
    regime = o["regime"]
    if regime not in prop.REGIMES:
        raise UsageError(f"regime must be real or imaginary, got {regime!r}")
    kv = prop.coupled_kernel(basis, phi1, phi2, o["T"], o["hbar"], regime)
    res = {"amplitude": {"re": kv.amplitude.real, "im": kv.amplitude.imag}, "T": o["T"], "regime": regime,
           "phi1": phi1.tolist(), "phi2": phi2.tolist(),
           "classical_action": float(prop.classical_action(basis, phi1, phi2, o["T"], regime)),
           "mvh_determinant": prop.mvh_determinant(basis, o["T"], regime)}
    return res, ["re", "im"], [[kv.amplitude.real, kv.amplitude.imag]]


def _pendulum_spectrum(o):
    _, basis = _pendulum(o)
    if o["n_max"] < 0:
        raise UsageError("n-max must be >= 0")
    levels = [{"n1": a, "n2": b, "E": prop.energy_level(basis, (a, b), o["hbar"])}
              for a in range(o["n_max"] + 1) for b in range(o["n_max"] + 1)]
    levels.sort(key=lambda lv: (lv["E"], lv["n1"], lv["n2"]))
    res = {"levels": levels, "omega": basis.omega.tolist()}
    return res, ["n1", "n2", "E"], [[lv["n1"], lv["n2"], lv["E"]] for lv in levels]


# ---------------------------------------------------------------------------
# verify


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tolerance)


def morse_fd_grid(sol: morse.MorseSolution, h: float = 0.01) -> oracles.Grid:
    """Box for the FD check: 3/beta left of the minimum to the normalization edge."""
    beta = sol.params.beta
    lo = sol.x_min - 3.0 / beta
    hi = sol.domain()[1]
    n = int(math.ceil((hi - lo) / (h / beta))) + 1
    return oracles.Grid1D(lo, hi, n)


def _morse_checks(o) -> list[tuple[str, float, Callable[[], float]]]:
    p, K = _system_params(o, "morse_")
    sol = morse.build(p, K)
    if sol.n_bound == 0:
        return []
    exact = morse.bound_energies(sol, relative=True)

    def fd():
        prob = morse.effective_problem(sol)
        E, _, _ = oracles.fd_spectrum(prob.mass_eff, prob.potential, morse_fd_grid(sol), sol.n_bound,
                                      hbar=p.hbar, extrapolate=True)
        return float(np.max(np.abs(E / exact - 1.0)))

    def poles():
        return float(np.max(np.abs(morse.green_poles(sol) - morse.bound_energies(sol)))
                     / max(1.0, p.lam))

    def norms():
        lo, hi = sol.domain()
        worst = 0.0
        for n in range(sol.n_bound):
            psi = morse.bound_wavefunction(sol, n)
            worst = max(worst, abs(oracles.quadrature(lambda x: psi(x) ** 2, lo, hi, abs_tol=1e-12) - 1.0))
        return worst

    return [("morse energies vs FD (rel)", 1e-6, fd),
            ("green pole scan vs energies", 1e-8, poles),
            ("morse bound-state norms", 1e-8, norms)]


def _pendulum_checks(o) -> list[tuple[str, float, Callable[[], float]]]:
    vals, basis = _pendulum(o, "pend_")
    sys_ = basis.system
    hbar = o["hbar"]
    rng = np.random.default_rng(o["seed"])

    def modes():
        bound = oracles.modes_upper_bound(sys_.A, sys_.K)
        roots, _ = oracles.brute_modes(sys_.A, sys_.K, bound)
        if roots.size != basis.n:
            return math.inf
        return float(np.max(np.abs(roots - basis.omega2)) / max(1.0, basis.omega2.max()))

    def random_modes():
        worst = 0.0
        for _ in range(5):
            n = int(rng.integers(2, 5))
            B = rng.normal(size=(n, n))
            A = B @ B.T + n * np.eye(n)
            R = rng.normal(size=(n, n))
            Kr = R @ R.T + 0.1 * np.eye(n)
            b = nm.generalized_modes(nm.QuadraticSystem(A, Kr))
            roots, _ = oracles.brute_modes(A, Kr, oracles.modes_upper_bound(A, Kr))
            if roots.size != n:
                return math.inf
            worst = max(worst, float(np.max(np.abs(roots - b.omega2)) / max(1.0, b.omega2.max())))
        return worst

    def lattice():
        tau, slices = 0.5, 64
        var = hbar * np.diag(np.linalg.inv(sys_.A))
        half = 6.0 * np.sqrt(tau * var) + 1.0
        # the grid has to resolve the single-slice Gaussian, not just the kernel
        h = 0.8 * math.sqrt(var.min() * tau / slices)
        npts = [int(math.ceil(2 * s / h)) + 1 for s in half]
        grid = oracles.Grid2D(-half, half, npts)
        worst = 0.0
        for phi1, phi2 in (([0.0, 0.0], [0.0, 0.0]), ([0.2, -0.1], [-0.1, 0.3])):
            ref = prop.coupled_kernel(basis, phi1, phi2, tau, hbar, "imaginary").amplitude.real
            lat = oracles.lattice_kernel(sys_.A, sys_.K, oracles.LatticeSpec(slices, tau), grid,
                                         np.array(phi2), np.array(phi1), hbar=hbar)
            worst = max(worst, abs(lat / ref - 1.0))
        return worst

    def spectral():
        tau = 2.0 / max(1e-12, float(np.sqrt(basis.omega2.min())))
        worst = 0.0
        for phi1, phi2 in (([0.0, 0.0], [0.0, 0.0]), ([0.3, -0.2], [0.1, 0.4])):
            ref = prop.coupled_kernel(basis, phi1, phi2, tau, hbar, "imaginary").amplitude.real
            s = prop.spectral_kernel(basis, prop.SpectralTruncation(30), phi1, phi2, tau, hbar)
            worst = max(worst, abs(s.real / ref - 1.0))
        return worst

    return [("pendulum modes vs brute_modes", 1e-9, modes),
            ("random (A, K) modes vs brute_modes", 1e-9, random_modes),
            ("kernel vs lattice (rel)", 1e-3, lattice),
            ("spectral vs closed-form kernel (rel)", 1e-8, spectral)]


def _verify(o):
    system = o["system"]
    if system not in ("morse", "pendulum", "all"):
        raise UsageError(f"system must be morse, pendulum or all, got {system!r}")
    plan = []
    if system in ("morse", "all"):
        plan += _morse_checks(o)
    if system in ("pendulum", "all"):
        plan += _pendulum_checks(o)
    checks = []
    for name, tol, fn in plan:
        t0 = time.perf_counter()
        try:
            value = fn()
        except KinpathError as exc:
            print(f"{name}: {type(exc).__name__}: {exc}", file=sys.stderr)
            value = math.inf
        checks.append(Check(name, value, tol, time.perf_counter() - t0))
    width = max([len(c.name) for c in checks] + [5])
    print(f"{'check':<{width}}  {'value':>10}  {'tol':>8}  result", file=sys.stderr)
    for c in checks:
        print(f"{c.name:<{width}}  {c.value:>10.3e}  {c.tolerance:>8.0e}  {'PASS' if c.passed else 'FAIL'}",
              file=sys.stderr)
    res = {"checks": [{"name": c.name, "value": c.value, "tolerance": c.tolerance, "passed": c.passed}
                      for c in checks],
           "all_passed": all(c.passed for c in checks)}
    rows = [[c.name, c.value, c.tolerance, c.passed] for c in checks]
    return res, ["check", "value", "tolerance", "passed"], rows


_HANDLERS = {
    "morse-spectrum": _morse_spectrum,
    "morse-wavefunction": _morse_wavefunction,
    "morse-green": _morse_green,
    "pendulum-modes": _pendulum_modes,
    "pendulum-kernel": _pendulum_kernel,
    "pendulum-spectrum": _pendulum_spectrum,
    "verify": _verify,
}


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    return x


def _render(config: RunConfig, results, header, rows) -> str:
    if config.fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
        return buf.getvalue()
    doc = {"schema_version": SCHEMA_VERSION, "subcommand": config.subcommand,
           "config": config.options, "results": results,
           "units": f"natural, hbar={config.options['hbar']}"}
    return json.dumps(_jsonable(doc), indent=2) + "\n"


def run(config: RunConfig) -> int:
    """Execute ``config`` and emit its artifact; returns the exit code."""
    try:
        results, header, rows = _HANDLERS[config.subcommand](config.options)
    except UsageError as exc:
        print(f"kinpath: error: {exc}", file=sys.stderr)
        return 2
    except InvalidParameters as exc:
        print(f"kinpath: error: {exc}", file=sys.stderr)
        return 2
    except KinpathError as exc:
        print(f"kinpath: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    text = _render(config, results, header, rows)
    if config.output == "-":
        sys.stdout.write(text)
    else:
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    if config.subcommand == "verify" and not results["all_passed"]:
        return 1
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        config = parse_args(argv)
    except UsageError as exc:
        print(f"kinpath: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
