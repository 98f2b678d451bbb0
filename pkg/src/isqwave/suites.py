"""Verification suites shared by the command line driver and the acceptance tests.

Each suite returns a :class:`SuiteResult` holding CSV rows (deterministic for
a given configuration and seed), a pass flag and a one-line summary.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import itertools
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import norms_estimates as ne
from .hankel import almost_orthogonality_norm, diagonalization_defect, hankel_apply, l2_norm, radial_grid, RadialProfile
from .harmonics import (
    HARMONIC_CONSTANTS,
    AngularSpectrum,
    addition_theorem_defect,
    analyze,
    bernstein_ratio,
    lp_stein_ratio,
    sphere_quadrature,
    synthesize,
)
from .semilinear import SemilinearConfig, _data_norm, exponent_table, gaussian_data, picard_solve, write_trace_csv
from .special_functions import (
    ENVELOPE_CONSTANTS,
    Regime,
    bessel_jv,
    bessel_jv_prime,
    classify_regime,
    envelope,
    schlafli_split,
    small_argument_bounds,
)
from .wave_solver import (
    ModeData,
    ProblemParams,
    dalembert_radial,
    duhamel,
    mode_energy,
    mode_to_spectrum,
    propagate_mode,
    synthesize_field,
)

CHECK_COLUMNS = ["suite", "check", "params", "value", "bound", "pass"]


@dataclass
class SuiteResult:
    id: str
    command: str
    columns: list
    rows: list
    passed: bool
    summary: str
    violation: bool = False  # a frozen constant or growth criterion failed
    compute_failure: bool = False
    fingerprints: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(self.columns)
        w.writerows(self.rows)
        return buf.getvalue()


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


class _Checks:
    """Row collector for threshold checks."""

    def __init__(self, suite: str):
        self.suite = suite
        self.rows = []
        self.failed = []

    def add(self, check: str, params: dict, value: float, bound: float, ok: bool | None = None, advisory: bool = False):
        ok = bool(value <= bound) if ok is None else bool(ok)
        self.rows.append([self.suite, check, json.dumps(params, sort_keys=True), _num(value), _num(bound), str(ok or advisory)])
        if not ok and not advisory:
            self.failed.append((check, params, value, bound))
        return ok

    def result(self, command: str, t0: float, details=None) -> SuiteResult:
        passed = not self.failed
        checks = sorted({r[1] for r in self.rows})
        if passed:
            summary = f"{self.suite}: PASS ({len(self.rows)} checks: {', '.join(checks)})"
        else:
            c, p, v, b = self.failed[0]
            summary = f"{self.suite}: FAIL ({len(self.failed)} of {len(self.rows)} checks; first {c} {p} value {v:.3e} > {b:.3e})"
        return SuiteResult(self.suite, command, CHECK_COLUMNS, self.rows, passed, summary, violation=not passed, details=details or {}, seconds=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Bessel functions

BESSEL_TRAINING_K = np.unique(np.round(np.geomspace(1, 200, 25), 1))
BESSEL_TRAINING_R = np.geomspace(0.05, 1e4, 90)
BESSEL_VALIDATION_K = np.round(np.geomspace(1.37, 193.0, 22), 2)
BESSEL_VALIDATION_R = np.geomspace(0.063, 9.4e3, 77)

BESSEL_DEFAULTS = {
    "recurrence_orders": [1.0, 1.5, 2.7, 5.0, 10.0, 25.5, 50.0, 100.0, 150.0],
    "schlafli_orders": [0.5, 1.0, 2.5, 3.0, 7.0, 12.5, 20.0, 33.3, 50.0],
    "schlafli_radii": [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0],
}


def bessel_suite(options: dict | None = None, seed: int = 0) -> SuiteResult:
    """Recurrence, Schlafli split and the frozen envelopes on a validation lattice."""
    opt = dict(BESSEL_DEFAULTS, **(options or {}))
    t0 = time.perf_counter()
    ck = _Checks("bessel")
    r = np.geomspace(0.1, 1e3, 60)
    for nu in opt["recurrence_orders"]:
        jm, j0, jp = bessel_jv(nu - 1.0, r), bessel_jv(nu, r), bessel_jv(nu + 1.0, r)
        d = np.abs(jm + jp - 2.0 * nu / r * j0) / (1.0 + np.abs(j0))
        ck.add("recurrence", {"nu": nu}, float(d.max()), 1e-8)
    for k in opt["schlafli_orders"]:
        worst = 0.0
        for rr in opt["schlafli_radii"]:
            pr, er = schlafli_split(k, rr)
            worst = max(worst, abs(pr - er - float(bessel_jv(k, rr))))
        ck.add("schlafli", {"k": k}, worst, 1e-8)
    # disjoint validation lattice for the frozen constants
    if set(BESSEL_VALIDATION_K) & set(BESSEL_TRAINING_K) or set(BESSEL_VALIDATION_R) & set(BESSEL_TRAINING_R):
        raise RuntimeError("validation lattice overlaps the training lattice")
    C = ENVELOPE_CONSTANTS
    rs = BESSEL_VALIDATION_R
    worst = {"third": 0.0, "deriv": 0.0, "small": 0.0}
    margins = {}
    for k in BESSEL_VALIDATION_K:
        k = float(k)
        v = bessel_jv(k, rs)
        d = bessel_jv_prime(k, rs)
        sel = rs >= 1.0
        worst["third"] = max(worst["third"], float(np.max(np.abs(v[sel]) * rs[sel] ** (1.0 / 3.0))))
        sel = rs >= 10.0
        worst["deriv"] = max(worst["deriv"], float(np.max(np.abs(d[sel]) * np.sqrt(rs[sel]))))
        if k <= 50.0:
            for x, vv, dd in zip(rs[rs <= 1.0], v[rs <= 1.0], d[rs <= 1.0]):
                bj, bd = small_argument_bounds(k, x)
                worst["small"] = max(worst["small"], abs(vv) / bj, abs(dd) / bd)
        for x, vv in zip(rs, v):
            reg = classify_regime(k, x)
            m = abs(vv) / envelope(k, x, reg)
            key = (reg.value, k >= 5)
            margins[key] = max(margins.get(key, 0.0), m)
    for k in (0.5, 0.73):
        for x in rs[rs <= 1.0]:
            bj, bd = small_argument_bounds(k, x)
            worst["small"] = max(worst["small"], abs(float(bessel_jv(k, x))) / bj, abs(float(bessel_jv_prime(k, x))) / bd)
    ck.add("one_third_decay", {"k": [1, 200], "r": [1, 1e4]}, worst["third"], C["C_third"])
    ck.add("derivative_decay", {"r_min": 10}, worst["deriv"], C["C_deriv"])
    ck.add("small_argument", {"k": [0.5, 50], "r_max": 1}, worst["small"], C["C_small"])
    bound = {Regime.BELOW_TURNING.value: C["C_below"], Regime.TRANSITION_ZONE.value: C["C_transition"], Regime.OSCILLATORY.value: C["C_osc"]}
    for (reg, certified), m in sorted(margins.items()):
        ck.add("envelope_margin", {"regime": reg, "certified": certified}, m, bound[reg], advisory=not certified)
    return ck.result("bessel-verify", t0)


# ---------------------------------------------------------------------------
# spherical harmonics

HARMONICS_DEFAULTS = {"k_max": 64, "bernstein_blocks": [0, 1, 2, 3, 4, 5], "bernstein_q": [2, 4, 8, 64], "ensemble_size": 3, "lp_p": [1.5, 2.0, 4.0]}


def harmonics_suite(options: dict | None = None, seed: int = 0) -> SuiteResult:
    opt = dict(HARMONICS_DEFAULTS, **(options or {}))
    t0 = time.perf_counter()
    ck = _Checks("harmonics")
    rng = ne.member_rng(seed, "harmonics", 0)
    dirs = rng.standard_normal((8, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    worst = max(addition_theorem_defect(3, k, d) for k in range(opt["k_max"] + 1) for d in dirs)
    ck.add("addition_theorem", {"n": 3, "k_max": opt["k_max"]}, worst, 1e-10)
    kq = 24
    quad = sphere_quadrature(3, kq, zonal=False)
    coeffs = rng.standard_normal((kq + 1) ** 2)
    spec = AngularSpectrum(3, kq, coeffs, False)
    f = synthesize(spec, quad.directions)
    back = analyze(f, quad)
    ck.add("round_trip", {"k_max": kq}, float(np.linalg.norm(back.coeffs - coeffs) / np.linalg.norm(coeffs)), 1e-9)
    pars = abs(float(np.sum(quad.weights * f * f)) - spec.energy()) / spec.energy()
    ck.add("parseval", {"k_max": kq}, pars, 1e-9)
    Cb = HARMONIC_CONSTANTS["C_bern"]
    for j in opt["bernstein_blocks"]:
        lo, hi = 2**j, 2 ** (j + 1)
        for q in opt["bernstein_q"]:
            worst = 0.0
            for i in range(opt["ensemble_size"]):
                g = ne.member_rng(seed, f"bernstein-{j}", i)
                c = np.zeros((hi + 1) ** 2)
                c[lo * lo :] = g.standard_normal((hi + 1) ** 2 - lo * lo)
                worst = max(worst, bernstein_ratio(AngularSpectrum(3, hi, c, False), j, float(q)))
            ck.add("bernstein", {"j": j, "q": q}, worst, Cb)
    Cl = HARMONIC_CONSTANTS["C_lp_stein"]
    quad = sphere_quadrature(3, 3 * 16, zonal=False)
    for p in opt["lp_p"]:
        worst = 0.0
        for i in range(opt["ensemble_size"]):
            g = ne.member_rng(seed, "lp-stein", i)
            c = g.standard_normal(17 * 17) / (1.0 + np.repeat(np.arange(17), 2 * np.arange(17) + 1))
            f = synthesize(AngularSpectrum(3, 16, c, False), quad.directions)
            worst = max(worst, *lp_stein_ratio(f, quad, p))
        ck.add("lp_stein", {"p": p}, worst, Cl)
    return ck.result("harmonics-verify", t0)


# ---------------------------------------------------------------------------
# Hankel transform

HANKEL_DEFAULTS = {
    "orders": [0.5, 1.0, 1.5, 2.5, 4.0, 8.0],
    "N_r": 2048,
    "ensemble_size": 5,
    "almost_orth": {"n": 3, "a": 0.75, "k": [0, 1, 2], "j": 0, "distances": [1, 2, 3, 4, 5, 6]},
}


def bump_ensemble(grid, seed: int, size: int, suite: str = "hankel"):
    """Gaussian bumps centred in [2.5, 4] with widths in [0.3, 0.6].

    The ranges keep every member below 3e-8 at r = 0, so the data lies in the
    operator domain to working accuracy (a bump with f'(0) != 0 leaves an
    O(f(0)) diagonalization defect that no refinement removes).
    """
    out = []
    for i in range(size):
        g = ne.member_rng(seed, suite, i)
        c, w = g.uniform(2.5, 4.0), g.uniform(0.3, 0.6)
        out.append(np.exp(-(((grid.r - c) / w) ** 2)))
    return out


def decay_slope(distances, norms) -> float:
    """Least-squares slope of log2(norm) against the distance |j - j'|."""
    d = np.asarray(distances, dtype=float)
    v = np.log2(np.maximum(np.asarray(norms, dtype=float), 1e-300))
    return float(np.polyfit(d, v, 1)[0])


def almost_orthogonality_scan(n: int, a: float, k: int, j: int, distances, grid=None, seed: int = 0):
    """max over j' = j +- d of ||P_j Pt_j'|| for each distance d."""
    p = ProblemParams(n, a)
    grid = radial_grid(n, 2048) if grid is None else grid
    out = []
    for d in distances:
        out.append(max(almost_orthogonality_norm(p.mu(k), p.nu(k), j, j + s * d, grid, "M", seed=seed) for s in (1, -1)))
    return out


def hankel_suite(options: dict | None = None, seed: int = 0) -> SuiteResult:
    opt = copy.deepcopy(HANKEL_DEFAULTS)
    opt.update(options or {})
    t0 = time.perf_counter()
    ck = _Checks("hankel")
    grid = radial_grid(3, int(opt["N_r"]))
    dual = grid.dual()
    ens = bump_ensemble(grid, seed, int(opt["ensemble_size"]))
    for nu in opt["orders"]:
        inv = iso = adj = 0.0
        for i, f in enumerate(ens):
            F = hankel_apply(nu, grid, f)
            nf = l2_norm(grid, f)
            inv = max(inv, l2_norm(grid, hankel_apply(nu, dual, F, grid) - f) / nf)
            iso = max(iso, abs(l2_norm(dual, F) - nf) / nf)
            g = np.exp(-(((dual.r - 1.5) / 0.4) ** 2))
            lhs = float(np.sum(dual.weights * F * g))
            rhs = float(np.sum(grid.weights * f * hankel_apply(nu, dual, g, grid)))
            adj = max(adj, abs(lhs - rhs) / (nf * l2_norm(dual, g)))
        ck.add("self_inverse", {"nu": nu}, inv, 1e-3)
        ck.add("isometry", {"nu": nu}, iso, 1e-3)
        ck.add("self_adjoint", {"nu": nu}, adj, 1e-8)
    for nu in (0.5, 1.0, 1.5):
        f = RadialProfile(grid, ens[0])
        d1 = diagonalization_defect(nu, f)
        fine = grid.refined()
        d2 = diagonalization_defect(nu, RadialProfile(fine, bump_ensemble(fine, seed, 1)[0]))
        ck.add("diagonalization", {"nu": nu}, d1, 1e-2)
        ck.add("diagonalization_refinement", {"nu": nu}, d1 / max(d2, 1e-300), 2.0, ok=d1 >= 2.0 * d2)
    ao = opt["almost_orth"]
    slopes = {}
    for k in ao["k"]:
        norms = almost_orthogonality_scan(ao["n"], ao["a"], k, ao["j"], ao["distances"], grid, seed)
        s = decay_slope(ao["distances"], norms)
        slopes[k] = (norms, s)
        ck.add("almost_orthogonality_slope", {"n": ao["n"], "a": ao["a"], "k": k}, s, -1.0)
    return ck.result("hankel-verify", t0, {"almost_orthogonality": slopes})


# ---------------------------------------------------------------------------
# linear solver

SOLVER_DEFAULTS = {"T": 32.0, "N_r": 2048, "dalembert_times": [0.5, 1.0, 2.0, 3.0, 4.0, 5.0], "duhamel_nodes": 129}


def manufactured_duhamel_error(nodes: int, t: float = 1.0, N_r: int = 1024) -> float:
    """Relative error of the Duhamel increment for v = s e^{-rho^2} (zero data)."""
    params = ProblemParams(3, 0.75)
    grid = radial_grid(3, N_r, r_min=1e-3, r_max=1e3)
    rho = grid.dual().r
    times = np.linspace(0.0, t, nodes)
    G = [rho**2 * s * np.exp(-(rho**2)) for s in times]
    inc = duhamel(params, 0, G, times, t, grid, spectral=True)
    exact = (t - np.sin(t * rho) / rho) * np.exp(-(rho**2))
    return l2_norm(grid.dual(), inc.b0 - exact) / l2_norm(grid.dual(), exact)


def solver_suite(options: dict | None = None, seed: int = 0) -> SuiteResult:
    opt = dict(SOLVER_DEFAULTS, **(options or {}))
    t0 = time.perf_counter()
    ck = _Checks("solver")
    grid = radial_grid(3, int(opt["N_r"]))
    ens = bump_ensemble(grid, seed, 3, "solver")
    for a in (0.0, 0.75):
        params = ProblemParams(3, a)
        for k in (0, 1, 5):
            worst = 0.0
            for i, f in enumerate(ens):
                spec = mode_to_spectrum(params, ModeData(k, 1, grid, f, 0.5 * ens[(i + 1) % len(ens)]))
                e0 = mode_energy(spec)
                for t in np.linspace(0.0, opt["T"], 65):
                    worst = max(worst, abs(mode_energy(propagate_mode(spec, float(t))) - e0) / e0)
            ck.add("energy_drift", {"a": a, "k": k}, worst, 1e-12)
    # free radial wave, n = 3, a = 0, against d'Alembert
    params = ProblemParams(3, 0.0)

    def g(r):
        return np.exp(-((r - 3.0) ** 2)) + np.exp(-((r + 3.0) ** 2))

    spec = mode_to_spectrum(params, ModeData(0, 1, grid, g(grid.r)))
    worst = 0.0
    for t in opt["dalembert_times"]:
        snap, _ = synthesize_field(params, [propagate_mode(spec, t)])
        ex = dalembert_radial(g, grid.r, t)
        worst = max(worst, l2_norm(grid, snap.modes[(0, 1)] - ex) / l2_norm(grid, ex))
    ck.add("dalembert", {"t_max": max(opt["dalembert_times"])}, worst, 1e-3)
    m = int(opt["duhamel_nodes"])
    e_fine = manufactured_duhamel_error(m)
    e_coarse = manufactured_duhamel_error((m + 1) // 2)
    ck.add("duhamel_manufactured", {"nodes": m}, e_fine, 1e-6)
    ck.add("duhamel_order", {"nodes": [(m + 1) // 2, m]}, e_coarse / e_fine, 8.0, ok=e_coarse >= 8.0 * e_fine)
    return ck.result("solve", t0)


# ---------------------------------------------------------------------------
# semilinear reference run

SEMILINEAR_DEFAULTS = {"n": 3, "a": 1.0, "p": "11/4", "sign": -1, "eps": 1e-3, "amplitude_fraction": 0.5, "width": 3.0, "T": 32.0, "dt": 1.0 / 256.0, "N_r": 1024, "tol": 1e-12, "max_iter": 30}


def semilinear_suite(options: dict | None = None, seed: int = 0) -> SuiteResult:
    """Reference Picard run: contraction, residual and sign symmetry."""
    opt = dict(SEMILINEAR_DEFAULTS, **(options or {}))
    t0 = time.perf_counter()
    ck = _Checks("semilinear")
    params = ProblemParams(int(opt["n"]), float(opt["a"]))
    spec = exponent_table(params.n, opt["p"], int(opt["sign"]))
    cfg = SemilinearConfig(T=float(opt["T"]), dt=float(opt["dt"]), N_r=int(opt["N_r"]), tol=float(opt["tol"]), max_iter=int(opt["max_iter"]), eps=float(opt["eps"]))
    grid = cfg.grid(params.n)
    b0, b1 = gaussian_data(params, grid, 1.0, float(opt["width"]))
    unit = _data_norm(params, grid, hankel_apply(params.nu(0), grid.dual(), b0, grid), 0.0 * b0, float(spec.s_c))
    amp = float(opt["amplitude_fraction"]) * cfg.eps / unit
    sol, trace = picard_solve(params, spec, amp * b0, amp * b1, cfg, grid, spectral=True)
    neg, _ = picard_solve(params, spec, -amp * b0, -amp * b1, cfg, grid, spectral=True)
    late = [r for i, r in enumerate(trace.ratio) if i >= 1]
    ck.add("contraction_ratio", {"from_iter": 2}, max(late) if late else 0.0, 0.5)
    ck.add("residual", {"dt": cfg.dt}, trace.residual[-1], 1e-3)
    sym = float(np.max(np.abs(sol.u + neg.u)) / np.max(np.abs(sol.u)))
    ck.add("sign_symmetry", {}, sym, 1e-10)
    res = ck.result("semilinear-run", t0, {"trace_csv": write_trace_csv(trace), "iterations": len(trace.q0_norm), "data_norm": amp * unit})
    res.details["manifest"] = {
        "n": params.n,
        "a": params.a,
        "nonlinearity": spec.describe(),
        "config": cfg.describe(),
        "grid": grid.describe(),
        "amplitude": amp,
        "data_norm": amp * unit,
    }
    return res


# ---------------------------------------------------------------------------
# estimate campaigns

GRID_KEYS = ("n", "a", "pairs", "q", "r", "eps", "s_bar_shift", "gamma", "k", "p", "j", "jp", "which", "eps1", "M", "N", "R")
SUITE_KEYS = {"id", "spec", "axis", "group_by", "expect", "ensemble", "ensemble_size", "constant", "grid"}
ESTIMATE_KEYS = {"ensemble_size", "T0", "nodes_per_unit", "growth", "slope_max", "suites"}


def _parse_number(x):
    if isinstance(x, str):
        return Fraction(x) if "/" in x else (int(x) if x.lstrip("-").isdigit() else float(x))
    return x


def expand_grid(grid: dict) -> list:
    """Cartesian product in the fixed key order GRID_KEYS ("pairs" expands to q, r)."""
    keys = [k for k in GRID_KEYS if k in grid]
    values = []
    for k in keys:
        v = grid[k]
        values.append(v if isinstance(v, list) else [v])
    points = []
    for combo in itertools.product(*values):
        pt = {}
        for k, v in zip(keys, combo):
            if k == "pairs":
                pt["q"], pt["r"] = _parse_number(v[0]), _parse_number(v[1])
            elif k in ("q", "r", "p"):
                pt[k] = str(v) if k == "p" else _parse_number(v)
            else:
                pt[k] = v
        points.append(pt)
    return points


def _series_exponents(suites) -> dict:
    """Spatial and profile exponents of all Strichartz-type suites, per dimension."""
    out = {}
    for s in suites:
        if s["spec"] not in ("THM11", "THM11-BC", "COR12", "LEM-UNIT", "PROP41"):
            continue
        for pt in expand_grid(s["grid"]):
            xs, gs = out.setdefault(int(pt["n"]), (set(), set()))
            if s["spec"] == "PROP41":
                n = int(pt["n"])
                gs.add(float(pt.get("gamma", 2.0 * (n - 1) / (n - 2) + 0.1)))
            else:
                xs.add(ne._as_float(pt["r"]))
    return out


def estimate_campaign(config: dict, seed: int, only: str | None = None) -> list:
    """Run every estimate suite of a campaign; returns one SuiteResult per suite."""
    est = config
    suites = [s for s in est["suites"] if only is None or s["id"] == only]
    ctx_base = {"T0": float(est.get("T0", 32.0)), "nodes_per_unit": int(est.get("nodes_per_unit", 8)), "growth": float(est.get("growth", 4.0))}
    ctx = dict(ctx_base)
    ctx["series_exps"] = _series_exponents(suites)
    slope_max = float(est.get("slope_max", 0.05))
    results = []
    for s in suites:
        t0 = time.perf_counter()
        points = expand_grid(s["grid"])
        ens_key = s.get("ensemble", s["id"])
        for pt in points:
            pt["suite"] = ens_key
        size = int(s.get("ensemble_size", est.get("ensemble_size", 4)))
        group_by = tuple(s["group_by"]) if s.get("group_by") else None
        scan = ne.scan_estimate(s["spec"], points, size, seed, s.get("constant"), s.get("axis"), group_by, ctx)
        expect = s.get("expect", "bounded")
        slopes = list(scan.slopes.values())
        worst_slope = max(slopes) if slopes else 0.0
        max_ratio = max((r.ratio for r in scan.reports), default=0.0)
        flagged = len(scan.violations)
        if expect == "growth":
            ok = bool(slopes) and all(v > slope_max for v in slopes) and not scan.failures
            verdict = f"growth detected as expected (min slope {min(slopes):.3f} > {slope_max})" if ok else f"growth NOT detected (slopes {', '.join(f'{v:.3f}' for v in slopes)})"
        else:
            ok = flagged == 0 and worst_slope <= slope_max and not scan.failures
            verdict = f"max ratio {max_ratio:.4g}, {flagged} flagged, max slope {worst_slope:.3f}"
        summary = f"{s['id']}: {'PASS' if ok else 'FAIL'} ({s['spec']}, {len(scan.reports)} points, {verdict}"
        if scan.failures:
            summary += f", {len(scan.failures)} point failures: {scan.failures[0][1]}"
        summary += ")"
        rows = [ne.report_row(r) for r in scan.reports]
        res = SuiteResult(
            s["id"],
            "estimate-scan",
            ne.CSV_COLUMNS,
            rows,
            ok,
            summary,
            violation=not ok and not scan.failures,
            compute_failure=bool(scan.failures),
            fingerprints=sorted({r.grid_fingerprint for r in scan.reports}),
            details={"slopes": {json.dumps(k): v for k, v in scan.slopes.items()}, "max_ratio": max_ratio, "flagged": flagged, "failures": scan.failures, "expect": expect},
            seconds=time.perf_counter() - t0,
        )
        results.append(res)
    return results


def _pairs(n: int):
    if n == 3:
        return [["4", "4"], ["3", "6"], ["3", "4"], ["5/2", "5"], ["6", "3"], ["8", "8/3"]]
    return [["2", "4"], ["2", "6"], ["4", "3"], ["3", "10/3"], ["2", "5"], ["5/2", "7/2"]]


_A_VALUES = {3: [0.75, 1.0], 4: [-0.3, 1.0]}
_UNIT_LINE = {3: ["4", "4"], 4: ["2", "6"]}
_N_SCAN = [1, 2, 4, 8, 16]
_M_SCAN = [1, 2, 4, 8, 16, 32, 64]


def strichartz_suites(dims=(3, 4), eps_values=(0.01, 0.1, 0.5)) -> list:
    """Frequency and angular scans of the Strichartz family plus the q = 2 counter-probe."""
    out = []
    for n in dims:
        a = _A_VALUES[n]
        pairs = _pairs(n)
        out.append({"id": f"thm11-n{n}-N", "spec": "THM11", "axis": "N", "ensemble": "strichartz", "group_by": ["n", "a", "q", "r", "eps"], "grid": {"n": n, "a": a, "pairs": pairs, "eps": 0.1, "M": 1, "N": _N_SCAN}})
        out.append({"id": f"thm11-n{n}-M", "spec": "THM11", "axis": "M", "ensemble": "strichartz", "grid": {"n": n, "a": a, "pairs": pairs, "eps": list(eps_values), "M": _M_SCAN}})
        out.append({"id": f"cor12-n{n}-M", "spec": "COR12", "axis": "M", "ensemble": "strichartz", "grid": {"n": n, "a": a, "pairs": pairs, "M": _M_SCAN}})
        out.append({"id": f"lem-unit-n{n}-N", "spec": "LEM-UNIT", "axis": "N", "ensemble": "strichartz", "grid": {"n": n, "a": a, "pairs": [_UNIT_LINE[n]], "N": _N_SCAN}})
        out.append({"id": f"prop41-n{n}-N", "spec": "PROP41", "axis": "N", "ensemble": "strichartz", "grid": {"n": n, "a": a, "N": _N_SCAN}})
        if n == 3:
            out.append({"id": "thm11-bc-n3-N", "spec": "THM11-BC", "axis": "N", "ensemble": "strichartz", "grid": {"n": 3, "a": a, "pairs": [["2", "9/2"]], "M": 1, "N": _N_SCAN}})
            out.append({"id": "thm11-bc-counterprobe", "spec": "THM11-BC", "axis": "N", "ensemble": "strichartz", "expect": "growth", "constant": 1e9, "grid": {"n": 3, "a": a, "pairs": [["2", "9/2"]], "s_bar_shift": -0.3, "M": 1, "N": _N_SCAN}})
    return out


def annulus_suites() -> list:
    grid = {"n": 3, "a": [-0.2, 0.0, 0.75], "k": list(range(51)), "R": [2.0**j for j in range(-8, 9)]}
    return [
        {"id": "prop31-R", "spec": "PROP31", "axis": "R", "group_by": ["n", "a"], "ensemble_size": 4, "grid": dict(grid)},
        {"id": "prop32-R", "spec": "PROP32", "axis": "R", "group_by": ["n", "a"], "ensemble_size": 2, "grid": dict(grid, gamma=4.1)},
    ]


def auxiliary_suites() -> list:
    return [
        {"id": "prop51-M", "spec": "PROP51", "axis": "M", "ensemble_size": 3, "grid": {"n": 3, "a": 1.0, "p": "11/4", "M": [1, 2, 4, 8]}},
        {"id": "lem-stri-M", "spec": "LEM-STRI", "axis": "M", "ensemble_size": 3, "grid": {"n": 3, "a": [0.75, 1.0], "pairs": [["4", "4"], ["3", "6"], ["6", "3"]], "gamma": 0.5, "M": [1, 2, 4, 8]}},
        {"id": "bern", "spec": "BERN", "ensemble_size": 3, "grid": {"n": 3, "j": [0, 1, 2, 3, 4, 5], "q": ["2", "4", "8", "64"]}},
        {"id": "lp-hankel", "spec": "LP-HANKEL", "ensemble_size": 3, "grid": {"n": 3, "a": 0.75, "k": [0, 1, 2], "p": ["3/2", "2", "4"]}},
        {"id": "almost-orth", "spec": "ALMOST-ORTH", "ensemble_size": 1, "grid": {"n": 3, "a": 0.75, "k": [0, 1, 2], "j": 0, "jp": [-3, -2, -1, 0, 1, 2, 3]}},
    ]


def _campaign(suites) -> dict:
    return {"version": 1, "command": "estimate-scan", "seed": 1, "estimate": {"ensemble_size": 4, "T0": 32.0, "nodes_per_unit": 8, "growth": 4.0, "slope_max": 0.05, "suites": suites}}


BUILTIN_CAMPAIGNS = {
    "thm11-n3": _campaign(strichartz_suites(dims=(3,))),
    "strichartz": _campaign(strichartz_suites()),
    "annulus": _campaign(annulus_suites()),
    "auxiliary": _campaign(auxiliary_suites()),
}
BUILTIN_CAMPAIGNS["bessel"] = {"version": 1, "command": "bessel-verify", "seed": 1, "bessel": {}}
BUILTIN_CAMPAIGNS["harmonics"] = {"version": 1, "command": "harmonics-verify", "seed": 1, "harmonics": {}}
BUILTIN_CAMPAIGNS["hankel"] = {"version": 1, "command": "hankel-verify", "seed": 1, "hankel": {}}
BUILTIN_CAMPAIGNS["solve"] = {"version": 1, "command": "solve", "seed": 1, "solve": {}}
BUILTIN_CAMPAIGNS["semilinear"] = {"version": 1, "command": "semilinear-run", "seed": 1, "semilinear": {}}


def fingerprint(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]
