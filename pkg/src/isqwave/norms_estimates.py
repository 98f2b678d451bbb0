"""Mixed space-time norms, data-side Sobolev norms and an estimate registry.

Every inequality of the theory is evaluated as a ratio lhs / rhs over seeded
data ensembles. Scans over a dyadic frequency M, an angular degree block N or
an annulus radius R then test that the worst ratio stays bounded without
growth (log-log slope of the upper half of the scan <= 0.05).

Linear solutions are built mode by mode from frequency-side spectra supported
in a band [lo, hi]. Ensemble data are axisymmetric (zonal harmonics), so the
sphere integral reduces to a one-dimensional Gauss-Jacobi rule. Space-time
samples are taken on windowed uniform meshes, following the outgoing shell
r ~ |t|, and time integrals are composite Simpson sums on [-T, T] plus a
measured dispersive tail.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson

from .hankel import (
    RadialGrid,
    almost_orthogonality_norm,
    dyadic_beta,
    hankel_apply,
    radial_grid,
    RadialProfile,
    square_function,
)
from .harmonics import (
    AngularSpectrum,
    bernstein_ratio,
    dim_harmonic,
    sphere_area,
    sphere_quadrature,
    zonal_harmonics,
)
from .special_functions import bessel_jv, gamma
from .wave_solver import ModeData, ProblemParams, simpson_weights

__all__ = [
    "NotInLambdaError",
    "EstimateDomainError",
    "SurrogateWarning",
    "AdmissiblePair",
    "in_Lambda",
    "excluded_endpoint",
    "thm_exponents",
    "mixed_norm",
    "sobolev_norm",
    "angular_weight",
    "japanese_bracket",
    "SpectralProfile",
    "ZonalData",
    "field_norm_series",
    "time_window",
    "windowed_lhs",
    "SeriesCache",
    "unit_profile",
    "data_l2_norm",
    "growth_slope",
    "EstimateSpec",
    "EstimateReport",
    "REGISTRY",
    "FROZEN_CONSTANTS",
    "frozen_constant",
    "member_seed",
    "make_ensemble",
    "evaluate_estimate",
    "scan_estimate",
    "ScanResult",
    "write_reports_csv",
    "CSV_COLUMNS",
]


class NotInLambdaError(ValueError):
    pass


class EstimateDomainError(ValueError):
    pass


class SurrogateWarning(UserWarning):
    pass


SURROGATE_LIMIT = 64.0


# ---------------------------------------------------------------------------
# exponent calculus (exact for rational input)


def _rational(x):
    """Fraction for finite input, None for infinity (1/x = 0)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity", "oo"):
            return None
        return Fraction(x.strip())
    xf = float(x)
    if math.isinf(xf):
        return None
    return Fraction(xf).limit_denominator(10**9)


def _inv(x) -> Fraction:
    f = _rational(x)
    return Fraction(0) if f is None else 1 / f


def in_Lambda(n: int, q, r) -> bool:
    """(q, r) in Lambda: q, r >= 2, 1/q >= (n-1)/2 (1/2 - 1/r) and 1/q < (n-1)(1/2 - 1/r)."""
    iq, ir = _inv(q), _inv(r)
    if iq > Fraction(1, 2) or ir > Fraction(1, 2):
        return False
    gap = Fraction(1, 2) - ir
    return iq >= Fraction(n - 1, 2) * gap and iq < (n - 1) * gap


def excluded_endpoint(n: int, q, r) -> bool:
    """The endpoint (q, r, n) = (2, inf, 3) is excluded from every estimate."""
    return n == 3 and _inv(q) == Fraction(1, 2) and _inv(r) == 0


@dataclass(frozen=True)
class AdmissiblePair:
    n: int
    q: object
    r: object
    eps: object = Fraction(1, 10)

    @property
    def member(self) -> bool:
        return in_Lambda(self.n, self.q, self.r)

    def exponents(self):
        return thm_exponents(self.n, self.q, self.r, self.eps)


def thm_exponents(n: int, q, r, eps=Fraction(1, 10), bc_line: bool | None = None):
    """(s, s_bar) for the angular-regularity Strichartz estimate.

    s = n(1/2 - 1/r) - 1/q. For n >= 4, s_bar = (1+eps)(2/q - (n-1)(1/2-1/r));
    for n = 3, s_bar = (2+eps)(1/q - (1/2-1/r)) off the line q = 2, and
    s_bar = 1 - 2/r on it (r > 4, r finite). Exact Fractions when the inputs
    are rational, floats otherwise.
    """
    if not in_Lambda(n, q, r):
        raise NotInLambdaError(f"(q, r) = ({q}, {r}) is not in Lambda for n = {n}")
    if excluded_endpoint(n, q, r):
        raise NotInLambdaError("the endpoint (2, inf, 3) is excluded")
    iq, ir = _inv(q), _inv(r)
    exact = not isinstance(eps, float)
    e = _rational(eps) if exact else None
    gap = Fraction(1, 2) - ir
    s = n * gap - iq
    on_bc = n == 3 and iq == Fraction(1, 2)
    if bc_line is None:
        bc_line = on_bc
    if bc_line and not on_bc:
        raise NotInLambdaError("the q = 2 line value only applies for n = 3, q = 2")
    if bc_line:
        sbar = 1 - 2 * ir
        return (s, sbar) if exact else (float(s), float(sbar))
    if n >= 4:
        base = 2 * iq - (n - 1) * gap
        if exact:
            return s, (1 + e) * base
        return float(s), (1.0 + eps) * float(base)
    base = iq - gap
    if exact:
        return s, (2 + e) * base
    return float(s), (2.0 + eps) * float(base)


# ---------------------------------------------------------------------------
# norms


def _lp(values, weights, p: float) -> float:
    a = np.abs(values)
    if p > SURROGATE_LIMIT:
        return float(a.max()) if a.size else 0.0
    if p == 2.0:
        return float(math.sqrt(np.sum(weights * a * a)))
    return float(np.sum(weights * a**p) ** (1.0 / p))


def mixed_norm(field, q: float, r: float, t_weights, x_weights) -> float:
    """(sum_t w_t (sum_x w_x |u|^r)^(q/r))^(1/q).

    ``field`` is an array (n_t, n_x) of samples or a callable i -> samples at
    the i-th time node. x-weights carry the full product (sphere x radial)
    quadrature. Exponents above 64 are replaced by a max over nodes.
    """
    q, r = float(q), float(r)
    if q > SURROGATE_LIMIT or r > SURROGATE_LIMIT:
        warnings.warn(f"exponent above {SURROGATE_LIMIT:g}: using the max over nodes", SurrogateWarning, stacklevel=2)
    t_weights = np.asarray(t_weights, dtype=float)
    x_weights = np.asarray(x_weights, dtype=float)
    get = field if callable(field) else (lambda i: np.asarray(field)[i])
    inner = np.array([_lp(np.ravel(get(i)), x_weights.ravel(), r) for i in range(t_weights.size)])
    if q > SURROGATE_LIMIT:
        return float(inner.max()) if inner.size else 0.0
    return float(np.sum(t_weights * inner**q) ** (1.0 / q))


def sobolev_norm(params: ProblemParams, modes, s: float) -> float:
    """Homogeneous H^s norm of sum a_{k,l}(r) Y_{k,l} via the order-mu(k) transform.

    (sum_{k,l} int rho^(2s) |H_mu(k) a_{k,l}|^2 rho^(n-1) drho)^(1/2); each
    mode's profile ``a0`` lives on its RadialGrid.
    """
    total = 0.0
    for m in modes:
        grid = m.grid
        F = hankel_apply(params.mu(m.k), grid, np.asarray(m.a0, dtype=float))
        dual = grid.dual()
        total += float(np.sum(dual.weights * dual.r ** (2.0 * s) * F * F))
    return math.sqrt(total)


def japanese_bracket(n: int, k, sbar: float):
    """<Omega>^sbar on degree k: (1 + k(k+n-2))^(sbar/2)."""
    k = np.asarray(k, dtype=float)
    return (1.0 + k * (k + n - 2.0)) ** (0.5 * sbar)


def angular_weight(data, sbar: float, n: int | None = None):
    """Apply <Omega>^sbar to a list of ModeData or to an AngularSpectrum."""
    if sbar < 0:
        raise ValueError("angular weight exponent must be >= 0")
    if isinstance(data, AngularSpectrum):
        fac = japanese_bracket(data.n, data.degrees(), sbar)
        return AngularSpectrum(data.n, data.k_max, data.coeffs * fac, data.zonal)
    if n is None:
        raise ValueError("n is required for mode lists")
    out = []
    for m in data:
        f = float(japanese_bracket(n, m.k, sbar))
        a1 = None if m.a1 is None else np.asarray(m.a1) * f
        out.append(ModeData(m.k, m.ell, m.grid, np.asarray(m.a0) * f, a1))
    return out


# ---------------------------------------------------------------------------
# band-limited axisymmetric data


@dataclass(frozen=True)
class SpectralProfile:
    """phi(rho) = sum_i w_i exp(-((rho - c_i)/s_i)^2) on [lo, hi], zero outside."""

    lo: float
    hi: float
    centers: tuple = (1.5,)
    widths: tuple = (0.1,)
    weights: tuple = (1.0,)

    def __call__(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        for c, s, w in zip(self.centers, self.widths, self.weights):
            out += w * np.exp(-(((rho - c) / s) ** 2))
        return np.where((rho >= self.lo) & (rho <= self.hi), out, 0.0)

    def scaled(self, M: float) -> "SpectralProfile":
        return SpectralProfile(
            self.lo * M,
            self.hi * M,
            tuple(c * M for c in self.centers),
            tuple(s * M for s in self.widths),
            self.weights,
        )

    def describe(self) -> dict:
        return {"band": [self.lo, self.hi], "centers": list(self.centers), "widths": list(self.widths), "weights": list(self.weights)}


def unit_profile(lo: float = 1.0, hi: float = 2.0) -> SpectralProfile:
    """One Gaussian at the band centre, width a tenth of the band (edge value ~1e-11)."""
    return SpectralProfile(lo, hi, (0.5 * (lo + hi),), (0.1 * (hi - lo),), (1.0,))


@dataclass(frozen=True)
class ZonalData:
    """Cauchy data u_j = sum_k Y_k(theta) H_nu(k)[c_jk phi_j](r), axisymmetric.

    ``Y_k`` are the L^2-normalised zonal harmonics; the velocity spectrum is
    c1_k * lo * phi (lo = band floor), so both data share the frequency scale.
    """

    n: int
    a: float
    degrees: tuple
    c0: tuple
    c1: tuple
    profile: SpectralProfile

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(self.n, self.a)

    @property
    def has_velocity(self) -> bool:
        return any(c != 0.0 for c in self.c1)

    def spectra(self, rho):
        """(b0, b1) arrays of shape (n_modes, len(rho)) on the nu side."""
        phi = self.profile(rho)
        c0 = np.asarray(self.c0, dtype=float)[:, None]
        c1 = np.asarray(self.c1, dtype=float)[:, None] * self.profile.lo
        return c0 * phi, c1 * phi

    def is_zero(self) -> bool:
        return not any(self.c0) and not any(self.c1)

    def describe(self) -> dict:
        return {
            "n": self.n,
            "a": self.a,
            "degrees": [int(k) for k in self.degrees],
            "c0": [float(c) for c in self.c0],
            "c1": [float(c) for c in self.c1],
            "profile": self.profile.describe(),
        }


def data_grid(n: int, M: float = 1.0, N: int = 2048) -> RadialGrid:
    """Log grid for data-side norms at frequency scale M."""
    return radial_grid(n, N, scale=1.0 / M)


def data_modes(data: ZonalData, grid: RadialGrid | None = None, velocity: bool = False):
    """r-side profiles H_nu(k)[b_k] of the data on a log grid (one ModeData per degree)."""
    grid = data_grid(data.n, data.profile.lo) if grid is None else grid
    dual = grid.dual()
    b0, b1 = data.spectra(dual.r)
    B = b1 if velocity else b0
    p = data.params
    return [ModeData(int(k), 1, grid, hankel_apply(p.nu(int(k)), dual, B[i], grid)) for i, k in enumerate(data.degrees)]


def data_l2_norm(data: ZonalData, velocity: bool = False) -> float:
    """||u_0||_{L^2(R^n)} computed on the frequency side (H_nu is an isometry)."""
    lo, hi = data.profile.lo, data.profile.hi
    x, w = np.polynomial.legendre.leggauss(256)
    rho = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * w
    b0, b1 = data.spectra(rho)
    B = b1 if velocity else b0
    return float(math.sqrt(np.sum(B * B * (w * rho ** (data.n - 1))[None, :])))


# ---------------------------------------------------------------------------
# space-time evaluation engine


_HALO = 45.0  # shell half-width in units of 1/lo (Gaussian profile tails < 1e-8)
_PANEL = 1.0  # radial Gauss-Legendre panel width in units of 1/lo
_PANEL_NODES = 8
_TABLE_DX = 0.01


@functools.lru_cache(maxsize=256)
def _bessel_table(nu: float, lam: float, x_max: float):
    """Tables for x^-lam J_nu(x): the entire factor x^-nu J_nu on [0, x_sw], direct above."""
    x_sw = max(2.0, nu)
    xs_small = np.arange(0.0, x_sw + 2 * _TABLE_DX, _TABLE_DX)
    safe = np.where(xs_small > 0, xs_small, 1.0)
    h = bessel_jv(nu, safe) * safe ** (-nu)
    h[0] = 1.0 / (2.0**nu * gamma(nu + 1.0))
    xs_big = np.arange(x_sw - _TABLE_DX, max(x_max, x_sw) + 2 * _TABLE_DX, _TABLE_DX)
    g = bessel_jv(nu, xs_big) * xs_big ** (-lam)
    return x_sw, xs_small, h, xs_big, g


def _radial_kernel(nu: float, lam: float, X: np.ndarray, x_max: float) -> np.ndarray:
    x_sw, xs_small, h, xs_big, g = _bessel_table(round(nu, 12), lam, float(math.ceil(x_max)))
    out = np.empty_like(X)
    small = X < x_sw
    if np.any(small):
        Xs = X[small]
        out[small] = np.interp(Xs, xs_small, h) * Xs ** (nu - lam)
    if not np.all(small):
        out[~small] = np.interp(X[~small], xs_big, g)
    return out


def _panels(a: float, b: float, width: float, nodes: int = _PANEL_NODES):
    if b <= a:
        return np.zeros(0), np.zeros(0)
    m = max(1, int(math.ceil((b - a) / width)))
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, m + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + half[:, None] * x[None, :]).ravel(), (half[:, None] * w[None, :]).ravel()


def _angular_rule(n: int, k_max: int):
    quad = sphere_quadrature(n, 2 * k_max + 16, zonal=True)
    return quad.weights, zonal_harmonics(n, k_max, quad.x)


def field_norm_series(
    data: ZonalData,
    times,
    exps=(),
    profile_exps=(),
    r_range: tuple | None = None,
    chunk: float = 16.0,
) -> dict:
    """Per-time norms of the linear solution with Cauchy data ``data``.

    Returns ``{("x", p): ||u(t)||_{L^p(R^n)}, ("prof", g): ||(sum_k |u_k(t)|^2)^(1/2)||_{L^g(r^(n-1)dr)}}``
    as arrays over ``times``; u_k is the radial part of degree k, so the second
    family is the L^g_r L^2(S^(n-1)) norm. ``r_range`` restricts the radial
    integrals to an annulus. Samples follow the shell r ~ |t|: radii outside
    [|t| - halo, hypot(|t|, nu_max/lo) + halo] are not evaluated.
    """
    times = np.asarray(times, dtype=float)
    n, lam = data.n, 0.5 * (data.n - 2)
    prof = data.profile
    lo, hi = prof.lo, prof.hi
    p = data.params
    ks = [int(k) for k in data.degrees]
    nus = [p.nu(k) for k in ks]
    out = {("x", float(e)): np.zeros(times.size) for e in exps}
    out.update({("prof", float(g)): np.zeros(times.size) for g in profile_exps})
    if data.is_zero() or not ks:
        return out
    halo = _HALO / lo
    R0 = 1.05 * max(nus) / lo + 1.0 / lo
    r_cap = math.hypot(float(np.max(np.abs(times))), R0) + halo
    if r_range is not None:
        r_cap = min(r_cap, r_range[1])
    x_max = r_cap * hi * 1.001 + 1.0
    if exps:
        k_max = max(ks)
        w_ang, Z = _angular_rule(n, k_max)
        Z = Z[ks]  # (n_modes, n_theta)
    c0 = np.asarray(data.c0, dtype=float)
    c1 = np.asarray(data.c1, dtype=float) * lo
    order = np.argsort(np.abs(times), kind="stable")
    at = np.abs(times[order])
    i = 0
    step = chunk / lo
    while i < order.size:
        j = int(np.searchsorted(at, at[i] + step, side="left"))
        j = max(j, i + 1)
        idx = order[i:j]
        tt = times[idx]
        ta, tb = at[i], at[j - 1]
        r_lo, r_hi = max(0.0, ta - halo), math.hypot(tb, R0) + halo
        if r_range is not None:
            r_lo, r_hi = max(r_lo, r_range[0]), min(r_hi, r_range[1])
        i = j
        if r_hi <= r_lo:
            continue
        width = _PANEL / lo if r_range is None else min(_PANEL / lo, (r_range[1] - r_range[0]) / 4.0)
        r, wr = _panels(r_lo, r_hi, width)
        wr = wr * r ** (n - 1)
        # trapezoid in rho, resolving the phase (|t| + r) rho plus the profile bandwidth
        freq = tb + r_hi + 40.0 / (hi - lo)
        n_rho = int(math.ceil((hi - lo) * freq / (2.0 * math.pi) * 1.5)) + 32
        rho = np.linspace(lo, hi, n_rho + 1)
        w_rho = np.full(rho.size, (hi - lo) / n_rho)
        w_rho[[0, -1]] *= 0.5
        phi = prof(rho) * w_rho * rho ** (n - 1)
        C = np.cos(np.outer(tt, rho)) * phi
        S = None
        if np.any(c1):
            S = np.sin(np.outer(tt, rho)) / rho * phi
        X = np.outer(r, rho)
        W = np.empty((len(ks), tt.size, r.size))
        for m, (k, nu) in enumerate(zip(ks, nus)):
            K = _radial_kernel(nu, lam, X, x_max)
            A = c0[m] * C if S is None else c0[m] * C + c1[m] * S
            W[m] = A @ K.T
        if profile_exps:
            P = np.sqrt(np.sum(W * W, axis=0))
            for g in profile_exps:
                out[("prof", float(g))][idx] = [_lp(row, wr, float(g)) for row in P]
        if exps:
            U = np.tensordot(W, Z, axes=([0], [0]))  # (nt, nr, n_theta)
            A2 = U * U
            wx = wr[:, None] * w_ang[None, :]
            for e in exps:
                e = float(e)
                if e == 2.0:
                    vals = np.einsum("tij,ij->t", A2, wx)
                elif e == 4.0:
                    vals = np.einsum("tij,ij->t", A2 * A2, wx)
                else:
                    vals = np.einsum("tij,ij->t", A2 ** (0.5 * e), wx)
                out[("x", e)][idx] = vals ** (1.0 / e)
    return out


def time_window(M: float = 1.0, N: int = 0, T0: float = 32.0, growth: float = 4.0, nodes_per_unit: int = 8):
    """Symmetric window [-T, T] for frequency scale M and angular block N.

    T = max(T0, growth * N^2) / M in physical time: a packet of angular width
    1/N stays coherent for times ~ N^2 wavelengths. Returns (T, n_half) with
    n_half Simpson intervals on [0, T] (even).
    """
    T_units = max(T0, growth * N * N)
    n_half = int(math.ceil(T_units * nodes_per_unit))
    n_half += n_half % 2
    return T_units / M, n_half


def windowed_lhs(series_pos, series_neg, q: float, T: float, sigma_disp: float, tail: bool = True):
    """L^q_t norm of a sampled series on [-T, T] plus the dispersive tails.

    ``series_pos`` samples [0, T] on a uniform odd mesh, ``series_neg`` the mirror
    [0, -T] (or None for an even series). Each tail is L(T)^q T/(q sigma - 1),
    the integral of L(T)(t/T)^(-sigma) over [T, inf), with sigma the asymptotic
    dispersive rate. The decay rate measured on [T/2, T] is only reported: it
    can be far steeper than sigma while a wide packet is still leaving the
    origin. Returns (lhs, tail_share, measured_rate).
    """
    rates = []

    def side(L):
        m = L.size
        dt = T / (m - 1)
        core = float(np.sum(simpson_weights(m, dt) * L**q))
        tt = np.linspace(0.0, T, m)
        sel = (tt >= 0.5 * T) & (L > 0)
        if np.count_nonzero(sel) >= 3:
            rates.append(-float(np.polyfit(np.log(tt[sel]), np.log(L[sel]), 1)[0]))
        if not tail or L[-1] <= 0.0:
            return core, 0.0
        if q * sigma_disp <= 1.0:
            return core, math.inf
        return core, float(L[-1] ** q * T / (q * sigma_disp - 1.0))

    c1, t1 = side(np.asarray(series_pos, dtype=float))
    if series_neg is None:
        c2, t2 = c1, t1
    else:
        c2, t2 = side(np.asarray(series_neg, dtype=float))
    rate = min(rates) if rates else math.nan
    total = c1 + c2 + t1 + t2
    if total == 0.0:
        return 0.0, 0.0, rate
    return total ** (1.0 / q), (t1 + t2) / total, rate


def growth_slope(xs, ys) -> float:
    """Least-squares slope of log y against log x over the upper half of the scan.

    Bounded two-sided estimates may rise at the small end of a scan (e.g. like
    R^nu for R < 1); growth means increase toward the large end, so the fit
    uses the points with x >= median(x). Zero ratios are ignored.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = (ys > 0) & np.isfinite(ys)
    xs, ys = xs[keep], ys[keep]
    if xs.size < 2:
        return 0.0
    sel = xs >= np.median(xs)
    if np.count_nonzero(sel) < 2:
        sel = np.ones_like(xs, dtype=bool)
    return float(np.polyfit(np.log(xs[sel]), np.log(ys[sel]), 1)[0])


# ---------------------------------------------------------------------------
# ensembles


def _suite_key(suite: str) -> int:
    return int.from_bytes(hashlib.sha256(suite.encode()).digest()[:8], "little")


def member_rng(seed: int, suite: str, member: int) -> np.random.Generator:
    """Counter-based stream keyed by (campaign seed, suite id, member index)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), _suite_key(suite), int(member)]))


def member_seed(seed: int, suite: str, member: int) -> int:
    ss = np.random.SeedSequence([int(seed) & (2**64 - 1), _suite_key(suite), int(member)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def block_degrees(N: int) -> np.ndarray:
    """Degrees k with beta(k/N) > 0, i.e. N/2 < k < 2N."""
    ks = np.arange(0, 2 * N + 1)
    return ks[dyadic_beta(ks / N) > 0]


def _random_profile(rng, lo: float, hi: float) -> SpectralProfile:
    w = hi - lo
    m = 3
    centers = tuple(float(c) for c in lo + w * rng.uniform(0.3, 0.7, m))
    weights = tuple(float(c) for c in rng.standard_normal(m))
    return SpectralProfile(lo, hi, centers, (0.1 * w,) * m, weights)


def make_ensemble(kind: str, n: int, a: float, size: int, seed: int, suite: str, M: float = 1.0, N: int = 1):
    """Seeded data members, returned as a list of (member index, ZonalData).

    kind = "block": angular block N at unit band [M, 2M], velocity zero.
      Member 0 is the even coherent packet c_k = beta(k/N) sqrt(2k+1) cos(k pi/2),
      member 1 the odd one (sin), both concentrating at the poles (Knapp type);
      members >= 2 draw c_k = beta(k/N) g_k with Gaussian g_k.
    kind = "freq": low degrees {0, 1, 2} at band [M, 2M] with velocity. Members
      0 and 1 are the single modes k = 0 and k = 1; the rest are random.
    kind = "radial": k = 0 only at band [M, 2M]; member 0 is the fixed centred
      profile, the rest random profiles with random velocity.
    Members without any active mode are skipped.
    """
    out = []
    lo, hi = M, 2.0 * M
    for i in range(size):
        rng = member_rng(seed, suite, i)
        if kind == "block":
            ks = block_degrees(N)
            beta = dyadic_beta(ks / N)
            if i == 0:
                c = beta * np.sqrt(2 * ks + 1.0) * np.cos(0.5 * np.pi * ks)
            elif i == 1:
                c = beta * np.sqrt(2 * ks + 1.0) * np.sin(0.5 * np.pi * ks)
            else:
                c = beta * rng.standard_normal(ks.size)
            c = np.where(np.abs(c) < 1e-12, 0.0, c)
            keep = c != 0.0
            if not np.any(keep):
                continue
            prof = unit_profile(lo, hi)
            out.append((i, ZonalData(n, a, tuple(int(k) for k in ks[keep]), tuple(float(x) for x in c[keep]), (0.0,) * int(keep.sum()), prof)))
        elif kind == "freq":
            if i < 2:
                out.append((i, ZonalData(n, a, (i,), (1.0,), (0.0,), unit_profile(lo, hi))))
            else:
                prof = _random_profile(rng, lo, hi)
                c0 = tuple(float(x) for x in rng.standard_normal(3))
                c1 = tuple(float(x) for x in rng.standard_normal(3))
                out.append((i, ZonalData(n, a, (0, 1, 2), c0, c1, prof)))
        elif kind == "radial":
            if i == 0:
                out.append((i, ZonalData(n, a, (0,), (1.0,), (0.0,), unit_profile(lo, hi))))
            else:
                prof = _random_profile(rng, lo, hi)
                out.append((i, ZonalData(n, a, (0,), (1.0,), (float(rng.standard_normal()),), prof)))
        else:
            raise ValueError(f"unknown ensemble kind {kind!r}")
    return out


# ---------------------------------------------------------------------------
# registry


@dataclass
class EstimateReport:
    spec_id: str
    point: dict
    lhs: float
    rhs: float
    ratio: float
    ensemble_size: int
    grid_fingerprint: str
    witness_seed: int
    extra: dict = field(default_factory=dict)
    flagged: bool = False

    def __post_init__(self):
        if not self.rhs >= 0.0:
            raise ValueError("rhs must be nonnegative")


@dataclass(frozen=True)
class EstimateSpec:
    id: str
    description: str
    params: tuple  # names of the parameter-point keys
    domain: Callable  # point -> None or raise EstimateDomainError
    evaluate: Callable  # (point, members, ctx) -> list of (member index, lhs, rhs, extra)
    ensemble: Callable  # (point, size, seed) -> members
    scan_axis: str | None = None


def _fingerprint(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _ratio(lhs: float, rhs: float) -> float:
    if lhs == 0.0:
        return 0.0
    if rhs <= 0.0:
        return math.inf
    return lhs / rhs


def _as_float(x) -> float:
    f = _rational(x)
    return math.inf if f is None else float(f)


class SeriesCache:
    """Memoises field_norm_series per (data, window, annulus) for all exponents at once."""

    def __init__(self, exps=(), profile_exps=()):
        self.exps = tuple(sorted({float(e) for e in exps}))
        self.profile_exps = tuple(sorted({float(g) for g in profile_exps}))
        self._store = {}

    def get(self, data: ZonalData, T: float, n_half: int, r_range=None, exps=(), profile_exps=()):
        key = (json.dumps(data.describe(), sort_keys=True), T, n_half, r_range)
        want_x = tuple(sorted(set(self.exps) | {float(e) for e in exps}))
        want_p = tuple(sorted(set(self.profile_exps) | {float(g) for g in profile_exps}))
        hit = self._store.get(key)
        if hit is not None and set(want_x) <= hit[0] and set(want_p) <= hit[1]:
            return hit[2]
        tpos = np.linspace(0.0, T, n_half + 1)
        res = {"pos": field_norm_series(data, tpos, want_x, want_p, r_range)}
        res["neg"] = field_norm_series(data, -tpos, want_x, want_p, r_range) if data.has_velocity else None
        self._store[key] = (set(want_x), set(want_p), res)
        return res


def _series_cache(ctx: dict, n: int) -> SeriesCache:
    # one cache per dimension; ctx["series_exps"][n] = (exps, profile_exps) prefetches a campaign
    caches = ctx.setdefault("cache", {})
    if n not in caches:
        caches[n] = SeriesCache(*ctx.get("series_exps", {}).get(n, ((), ())))
    return caches[n]


def _series_lhs(res, key, q, T, sigma):
    neg = None if res["neg"] is None else res["neg"][key]
    lhs, share, rate = windowed_lhs(res["pos"][key], neg, q, T, sigma)
    return lhs, {"tail_share": share, "decay_rate": rate, "T": T}


def _dispersive_rate(n: int, p: float) -> float:
    return (n - 1) * (0.5 - 1.0 / p)


# -- Strichartz family ------------------------------------------------------


def _strichartz_domain(point):
    sid = point["spec_id"]
    n, a = int(point["n"]), float(point["a"])
    q, r = point.get("q"), point.get("r")
    a_min = 1.0 / (n - 1) ** 2 - (n - 2) ** 2 / 4.0
    if sid in ("THM11", "THM11-BC", "COR12", "LEM-UNIT", "PROP41") and not a > a_min:
        raise EstimateDomainError(f"{sid} needs a > {a_min:g}, got {a}")
    if sid in ("THM11", "THM11-BC"):
        if not in_Lambda(n, q, r) or excluded_endpoint(n, q, r):
            raise EstimateDomainError(f"({q}, {r}) not admissible for n = {n}")
        if sid == "THM11" and n == 3 and _inv(q) == Fraction(1, 2):
            raise EstimateDomainError("THM11 excludes q = 2 for n = 3 (use THM11-BC)")
        if sid == "THM11-BC" and not (n == 3 and _inv(q) == Fraction(1, 2) and 0 < _inv(r) < Fraction(1, 4)):
            raise EstimateDomainError("THM11-BC needs n = 3, q = 2, 4 < r < inf")
    elif sid == "COR12":
        iq, ir = _inv(q), _inv(r)
        if iq > Fraction(1, 2) or ir > Fraction(1, 2) or not iq < (n - 1) * (Fraction(1, 2) - ir):
            raise EstimateDomainError(f"COR12 needs q, r >= 2 and 1/q < (n-1)(1/2-1/r), got ({q}, {r})")
        s = n * (Fraction(1, 2) - ir) - iq
        if not s < Fraction(n, 2):
            raise EstimateDomainError("COR12 needs s < n/2")
    elif sid == "LEM-UNIT":
        iq, ir = _inv(q), _inv(r)
        if iq > Fraction(1, 2) or iq != Fraction(n - 1, 2) * (Fraction(1, 2) - ir) or excluded_endpoint(n, q, r):
            raise EstimateDomainError("LEM-UNIT needs q >= 2 on the line 1/q = (n-1)/2 (1/2 - 1/r)")


def _strichartz_ensemble(point, size, seed):
    sid = point["spec_id"]
    M, N = float(point.get("M", 1)), int(point.get("N", 0))
    suite = point.get("suite", sid)
    if sid == "COR12":
        return make_ensemble("radial", int(point["n"]), float(point["a"]), size, seed, suite, M=M)
    if N > 0:
        return make_ensemble("block", int(point["n"]), float(point["a"]), size, seed, suite, M=M, N=N)
    return make_ensemble("freq", int(point["n"]), float(point["a"]), size, seed, suite, M=M)


def _strichartz_eval(point, members, ctx):
    sid = point["spec_id"]
    n = int(point["n"])
    M, N = float(point.get("M", 1)), int(point.get("N", 0))
    T, n_half = time_window(M, N, ctx.get("T0", 32.0), ctx.get("growth", 4.0), ctx.get("nodes_per_unit", 8))
    cache = _series_cache(ctx, n)
    rows = []
    if sid == "PROP41":
        g = float(point.get("gamma", 2.0 * (n - 1) / (n - 2) + 0.1))
        for idx, d in members:
            res = cache.get(d, T, n_half, profile_exps=(g,))
            lhs, diag = _series_lhs(res, ("prof", g), 2.0, T, _dispersive_rate(n, g))
            rows.append((idx, lhs, data_l2_norm(d), diag))
        return rows
    q, r = _as_float(point["q"]), _as_float(point["r"])
    for idx, d in members:
        res = cache.get(d, T, n_half, exps=(r,))
        lhs, diag = _series_lhs(res, ("x", r), q, T, _dispersive_rate(n, r))
        if sid == "LEM-UNIT":
            rhs = data_l2_norm(d)
        else:
            s = float(point["s"])
            sbar = float(point.get("s_bar", 0.0)) if sid in ("THM11", "THM11-BC") else 0.0
            grid = data_grid(n, M)
            m0 = angular_weight(data_modes(d, grid), sbar, n)
            rhs = sobolev_norm(d.params, m0, s)
            if d.has_velocity:
                m1 = angular_weight(data_modes(d, grid, velocity=True), sbar, n)
                rhs += sobolev_norm(d.params, m1, s - 1.0)
        rows.append((idx, lhs, rhs, diag))
    return rows


# -- annulus estimates ------------------------------------------------------


def _annulus_ensemble(point, size, seed):
    """b on I (PROP31: [1/2, 2]; PROP32: [1, 2]); member 0 the fixed centred bump."""
    sid = point["spec_id"]
    lo, hi = (0.5, 2.0) if sid == "PROP31" else (1.0, 2.0)
    out = []
    for i in range(size):
        if i == 0:
            out.append((i, unit_profile(lo, hi)))
        else:
            out.append((i, _random_profile(member_rng(seed, point.get("suite", sid), i), lo, hi)))
    return out


def _annulus_domain(point):
    if int(point["k"]) < 0:
        raise EstimateDomainError("k must be >= 0")
    n, a = int(point["n"]), float(point["a"])
    if not a > -((n - 2) ** 2) / 4.0:
        raise EstimateDomainError("a must exceed -(n-2)^2/4")
    if point["spec_id"] == "PROP32" and float(point.get("gamma", 2.0)) < 2.0:
        raise EstimateDomainError("PROP32 needs gamma >= 2")


def _cutoff_31(rho):
    """Smooth phi on [1/2, 2] (C-infinity bump, 1 at the centre)."""
    y = (np.asarray(rho, dtype=float) - 1.25) / 0.75
    out = np.zeros_like(y)
    m = np.abs(y) < 1
    out[m] = np.exp(1.0 - 1.0 / (1.0 - y[m] ** 2))
    return out


def _prop31_eval(point, members, ctx):
    """Plancherel in t: lhs^2 = 2 pi int_R^2R int |J_nu(r rho) b(rho) phi(rho)|^2 drho dr."""
    n, a, k, R = int(point["n"]), float(point["a"]), int(point["k"]), float(point["R"])
    nu = ProblemParams(n, a).nu(k)
    nr = max(24, int(math.ceil(8 * R)))
    r, wr = _panels(R, 2 * R, max(R / 3, 0.5), 8) if R > 1.5 else _panels(R, 2 * R, R, nr)
    rho, wrho = _panels(0.5, 2.0, min(0.25, 1.5 / max(1.0, R)), 10)
    X = np.outer(r, rho)
    x_max = float(X.max()) + 1.0
    J = _radial_kernel(nu, 0.0, X, x_max)
    rows = []
    for idx, prof in members:
        b = prof(rho)
        lhs = math.sqrt(2 * math.pi * float(np.sum(wr[:, None] * (J * (b * _cutoff_31(rho))[None, :]) ** 2 * wrho[None, :])))
        bn = math.sqrt(float(np.sum(wrho * b * b)))
        rhs = min(math.sqrt(R), 1.0) * bn
        rows.append((idx, lhs, rhs, {"nu": nu}))
    return rows


def _prop32_eval(point, members, ctx):
    n, a, k, R = int(point["n"]), float(point["a"]), int(point["k"]), float(point["R"])
    g = float(point.get("gamma", 2.0 * (n - 1) / (n - 2) + 0.1))
    nu = ProblemParams(n, a).nu(k)
    T_units = max(ctx.get("T0", 32.0), 2.0 * R + nu + 2 * _HALO)
    n_half = int(math.ceil(T_units * ctx.get("nodes_per_unit", 8)))
    n_half += n_half % 2
    t = np.linspace(0.0, T_units, n_half + 1)
    e1 = ((n + 1) + (g - 2.0) * nu) / g - 0.5 * (n - 1)
    e2 = (n - 1) / g - 0.5 * (n - 2)
    scale = min(R**e1, R**e2)
    rows = []
    for idx, prof in members:
        d = ZonalData(n, a, (k,), (1.0,), (0.0,), prof)
        L = field_norm_series(d, t, (), (g,), r_range=(R, 2 * R))[("prof", g)]
        lhs, share, rate = windowed_lhs(L, None, 2.0, T_units, _dispersive_rate(n, g))
        rho, w = _panels(1.0, 2.0, 0.25, 10)
        bn = math.sqrt(float(np.sum(w * prof(rho) ** 2)))
        # ZonalData carries the unit harmonic; the L^2(S) factor of a single mode is 1
        rows.append((idx, lhs, scale * bn, {"nu": nu, "gamma": g, "tail_share": share, "T": T_units}))
    return rows


# -- delegated and inhomogeneous estimates ----------------------------------


def _prop51_domain(point):
    n, p = int(point["n"]), Fraction(str(point["p"]))
    ph = 1 + Fraction(4 * n, (n + 1) * (n - 1))
    pc = 1 + Fraction(4, n - 1)
    if not ph < p < pc:
        raise EstimateDomainError("PROP51 needs p_h < p < p_conf")
    q0 = (p - 1) * (n + 1) / 2
    r0 = (n + 1) * (p - 1) / (2 * p)
    nu = ProblemParams(n, float(point["a"])).nu(0)
    if not nu > max(0.5 * (n - 2) - n / float(q0), n / float(r0) - 0.5 * (n - 2) - 2.0):
        raise EstimateDomainError("PROP51 order condition on nu(0) fails")


def _prop51_ensemble(point, size, seed):
    out = []
    for i in range(size):
        if i == 0:
            out.append((i, (unit_profile(1.0, 2.0), 1.0)))
        else:
            rng = member_rng(seed, point.get("suite", "PROP51"), i)
            out.append((i, (_random_profile(rng, 1.0, 2.0), float(rng.uniform(0.5, 2.0)))))
    return out


def _prop51_eval(point, members, ctx):
    """Radial forcing h(t, r) = chi(t/tau) H_nu[phi](r) at frequency M, zero data.

    v solves the mode equation on the frequency side exactly:
    v(t) = int_0^t sin((t-s) rho)/rho h(s) ds, evaluated with cumulative Simpson sums.
    """
    n, a, M = int(point["n"]), float(point["a"]), float(point.get("M", 1.0))
    p = Fraction(str(point["p"]))
    q0 = float((p - 1) * (n + 1) / 2)
    r0 = float((n + 1) * (p - 1) / (2 * p))
    params = ProblemParams(n, a)
    nu = params.nu(0)
    grid = data_grid(n, M, 2048)
    dual = grid.dual()
    ppu = ctx.get("nodes_per_unit", 8)
    rows = []
    for idx, (prof0, tau) in members:
        prof = prof0.scaled(M)
        tau_p = tau / M
        T = (ctx.get("T0", 32.0)) / M
        m = int(math.ceil(T * M * ppu * 2))
        m += m % 2
        t = np.linspace(0.0, T, m + 1)
        chi = np.where(t < 2 * tau_p, np.sin(np.pi * np.clip(t / (2 * tau_p), 0, 1)) ** 2, 0.0)
        G = prof(dual.r)
        h_r = hankel_apply(nu, dual, G, grid)
        rho = dual.r
        Cc = cumulative_simpson(chi[:, None] * np.cos(np.outer(t, rho)), x=t, axis=0, initial=0.0)
        Cs = cumulative_simpson(chi[:, None] * np.sin(np.outer(t, rho)), x=t, axis=0, initial=0.0)
        vhat = (np.sin(np.outer(t, rho)) * Cc - np.cos(np.outer(t, rho)) * Cs) / rho * G
        v = hankel_apply(nu, dual, vhat, grid)
        area = sphere_area(n)
        wt = simpson_weights(t.size, t[1] - t[0])
        # radial field: integrate |.|^p r^(n-1) dr over the sphere area, Y_0 = area^(-1/2)
        fac = area ** (1.0 - 0.5 * q0)
        Lv = (np.sum(grid.weights[None, :] * np.abs(v) ** q0, axis=1) * fac) ** (1.0 / q0)
        lhs, share, _ = windowed_lhs(Lv, np.zeros_like(Lv), q0, T, _dispersive_rate(n, q0))
        fac_h = area ** (1.0 - 0.5 * r0)
        Lh = np.sum(grid.weights * np.abs(h_r) ** r0) * fac_h * np.sum(wt * chi**r0)
        rhs = float(Lh) ** (1.0 / r0)
        rows.append((idx, lhs, rhs, {"q0": q0, "r0": r0, "tau": tau_p, "T": T, "tail_share": share}))
    return rows


def _bern_domain(point):
    if int(point["n"]) != 3:
        raise EstimateDomainError("BERN is evaluated on S^2")


def _bern_ensemble(point, size, seed):
    j = int(point["j"])
    lo, hi = 2**j, 2 ** (j + 1)
    out = []
    for i in range(size):
        rng = member_rng(seed, point.get("suite", "BERN"), i)
        coeffs = np.zeros((hi + 1) ** 2)
        if i == 0:
            coeffs[hi * hi] = 1.0  # a single harmonic of the top degree
        else:
            coeffs[lo * lo :] = rng.standard_normal((hi + 1) ** 2 - lo * lo)
        out.append((i, AngularSpectrum(3, hi, coeffs, False)))
    return out


def _bern_eval(point, members, ctx):
    j, q = int(point["j"]), _as_float(point["q"])
    rows = []
    for idx, spec in members:
        if not np.any(spec.coeffs):
            rows.append((idx, 0.0, 0.0, {}))
            continue
        ratio = bernstein_ratio(spec, j, q)
        rows.append((idx, ratio, 1.0, {}))
    return rows


def _lp_hankel_domain(point):
    if not 1.0 < _as_float(point["p"]) < math.inf:
        raise EstimateDomainError("LP-HANKEL needs 1 < p < inf")


def _lp_hankel_ensemble(point, size, seed):
    n = int(point["n"])
    grid = radial_grid(n, 1024, r_min=1e-3, r_max=1e3)
    out = []
    for i in range(size):
        rng = member_rng(seed, point.get("suite", "LP-HANKEL"), i)
        c = 1.0 if i == 0 else float(rng.uniform(0.5, 4.0))
        w = 0.5 if i == 0 else float(rng.uniform(0.3, 1.0))
        out.append((i, RadialProfile(grid, np.exp(-(((grid.r - c) / w) ** 2)))))
    return out


def _lp_hankel_eval(point, members, ctx):
    n, a, k, p = int(point["n"]), float(point["a"]), int(point.get("k", 0)), _as_float(point["p"])
    nu = ProblemParams(n, a).nu(k)
    rows = []
    for idx, f in members:
        if not np.any(f.values):
            rows.append((idx, 0.0, 0.0, {"nu": nu}))
            continue
        ratio = square_function(nu, f, p, js=range(-6, 7))
        # two-sided equivalence: report the larger of the two directions
        rows.append((idx, max(ratio, 1.0 / ratio), 1.0, {"nu": nu, "forward": ratio}))
    return rows


def _almost_domain(point):
    if int(point["n"]) < 3:
        raise EstimateDomainError("n >= 3")


def _almost_ensemble(point, size, seed):
    return [(i, member_seed(seed, point.get("suite", "ALMOST-ORTH"), i)) for i in range(max(1, size))]


def _almost_eval(point, members, ctx):
    n, a, k = int(point["n"]), float(point["a"]), int(point["k"])
    j, jp = int(point["j"]), int(point["jp"])
    eps1 = float(point.get("eps1", 1.0))
    p = ProblemParams(n, a)
    grid = radial_grid(n, int(point.get("N_r", 2048)))
    rows = []
    for idx, s in members:
        norm = almost_orthogonality_norm(p.mu(k), p.nu(k), j, jp, grid, which=point.get("which", "M"), seed=int(s) % (2**31))
        rows.append((idx, norm, 2.0 ** (-eps1 * abs(j - jp)), {"eps1": eps1}))
    return rows


def _lem_stri_domain(point):
    n, q, r = int(point["n"]), point["q"], point["r"]
    iq, ir = _inv(q), _inv(r)
    if ir == 0 or iq > min(Fraction(1, 2), Fraction(n - 1, 2) * (Fraction(1, 2) - ir)):
        raise EstimateDomainError("LEM-STRI needs r < inf and 1/q <= min{1/2, (n-1)/2 (1/2 - 1/r)}")


def _lem_stri_eval(point, members, ctx):
    """||(-Delta)^(sigma/2) u||_{L^q L^r} against ||u_0||_{H^gamma} for radial data."""
    n, M = int(point["n"]), float(point.get("M", 1.0))
    q, r, gam = _as_float(point["q"]), _as_float(point["r"]), float(point["gamma"])
    sigma = gam + 1.0 / q - n * (0.5 - 1.0 / r)
    grid = data_grid(n, M, 2048)
    dual = grid.dual()
    T, n_half = time_window(M, 0, ctx.get("T0", 32.0), 0.0, ctx.get("nodes_per_unit", 8))
    t = np.linspace(0.0, T, n_half + 1)
    area = sphere_area(n)
    rows = []
    for idx, d in members:
        p = d.params
        lam, nu = p.mu(0), p.nu(0)
        b0, _ = d.spectra(dual.r)
        spec = np.cos(np.outer(t, dual.r)) * b0[0]
        u = hankel_apply(nu, dual, spec, grid)
        F = hankel_apply(lam, grid, u)
        Ds = hankel_apply(lam, dual, F * dual.r**sigma, grid)
        L = (np.sum(grid.weights[None, :] * np.abs(Ds) ** r, axis=1) * area ** (1 - 0.5 * r)) ** (1.0 / r)
        lhs, share, rate = windowed_lhs(L, None, q, T, _dispersive_rate(n, r))
        rhs = sobolev_norm(p, data_modes(d, grid), gam)
        rows.append((idx, lhs, rhs, {"sigma": sigma, "tail_share": share}))
    return rows


def _lem_stri_ensemble(point, size, seed):
    pt = dict(point)
    pt["spec_id"] = "COR12"
    return _strichartz_ensemble(pt, size, seed)


REGISTRY: dict[str, EstimateSpec] = {
    "THM11": EstimateSpec("THM11", "angular-regularity Strichartz estimate, (q, r) in Lambda", ("n", "a", "q", "r", "eps", "M", "N"), _strichartz_domain, _strichartz_eval, _strichartz_ensemble),
    "THM11-BC": EstimateSpec("THM11-BC", "q = 2 line for n = 3 with s_bar(r) = 1 - 2/r", ("n", "a", "q", "r", "M", "N"), _strichartz_domain, _strichartz_eval, _strichartz_ensemble),
    "COR12": EstimateSpec("COR12", "radial Strichartz estimate without angular weight", ("n", "a", "q", "r", "M"), _strichartz_domain, _strichartz_eval, _strichartz_ensemble),
    "LEM-STRI": EstimateSpec("LEM-STRI", "Strichartz estimate with derivative gain sigma, radial data", ("n", "a", "q", "r", "gamma", "M"), _lem_stri_domain, _lem_stri_eval, _lem_stri_ensemble),
    "LEM-UNIT": EstimateSpec("LEM-UNIT", "unit-frequency Strichartz estimate on the sharp line", ("n", "a", "q", "r", "N"), _strichartz_domain, _strichartz_eval, _strichartz_ensemble),
    "PROP31": EstimateSpec("PROP31", "L^2_t L^2_r([R, 2R]) bound for the Bessel oscillatory integral", ("n", "a", "k", "R"), _annulus_domain, _prop31_eval, _annulus_ensemble),
    "PROP32": EstimateSpec("PROP32", "L^2_t L^gamma([R, 2R]) bound for the Hankel wave", ("n", "a", "k", "R", "gamma"), _annulus_domain, _prop32_eval, _annulus_ensemble),
    "PROP41": EstimateSpec("PROP41", "L^2_t L^gamma_r L^2(S) bound at unit frequency", ("n", "a", "gamma", "N"), _strichartz_domain, _strichartz_eval, _strichartz_ensemble),
    "PROP51": EstimateSpec("PROP51", "inhomogeneous L^q0 <- L^r0 estimate for radial forcing", ("n", "a", "p", "M"), _prop51_domain, _prop51_eval, _prop51_ensemble),
    "BERN": EstimateSpec("BERN", "Bernstein inequality for a dyadic harmonic block", ("n", "j", "q"), _bern_domain, _bern_eval, _bern_ensemble),
    "LP-HANKEL": EstimateSpec("LP-HANKEL", "Littlewood-Paley square function equivalence for H_nu", ("n", "a", "k", "p"), _lp_hankel_domain, _lp_hankel_eval, _lp_hankel_ensemble),
    "ALMOST-ORTH": EstimateSpec("ALMOST-ORTH", "almost orthogonality of the two dyadic calculi", ("n", "a", "k", "j", "jp"), _almost_domain, _almost_eval, _almost_ensemble),
}


# Fitted on the seed-1 builtin campaigns (observed maximum in brackets) with
# roughly 30-60% headroom; the acceptance runs re-check them on seed 2.
# THM11 is keyed by eps since the exponent shift changes the constant.
FROZEN_CONSTANTS = {
    ("THM11", 0.01): 0.8,  # [0.519]
    ("THM11", 0.1): 0.8,  # [0.519]
    ("THM11", 0.5): 0.8,  # [0.519]
    "THM11-BC": 0.9,  # [0.593]
    "COR12": 0.8,  # [0.519]
    "LEM-STRI": 0.5,  # [0.331]
    "LEM-UNIT": 0.6,  # [0.383]
    "PROP31": 2.5,  # [1.879]
    "PROP32": 3.2,  # [2.390]
    "PROP41": 4.0,  # [3.105]
    "PROP51": 0.02,  # [0.0129]
    "BERN": 1.1,  # [1.000, exact at q = 2]
    "LP-HANKEL": 2.0,  # [1.527, two-sided]
    "ALMOST-ORTH": 1.1,  # [0.997, an operator norm of a product of contractions]
}


def frozen_constant(spec_id: str, eps: float | None = None) -> float:
    if spec_id == "THM11":
        e = 0.1 if eps is None else float(eps)
        key = min((k for k in FROZEN_CONSTANTS if isinstance(k, tuple)), key=lambda k: abs(k[1] - e))
        return FROZEN_CONSTANTS[key]
    return FROZEN_CONSTANTS[spec_id]


def _complete_point(spec: EstimateSpec, point: dict) -> dict:
    pt = dict(point)
    pt["spec_id"] = spec.id
    if spec.id in ("THM11", "THM11-BC", "COR12", "LEM-UNIT"):
        n = int(pt["n"])
        iq, ir = _inv(pt["q"]), _inv(pt["r"])
        pt["s"] = float(n * (Fraction(1, 2) - ir) - iq)
        if spec.id == "THM11":
            eps = pt.get("eps", 0.1)
            pt["eps"] = float(eps)
            pt["s_bar"] = float(thm_exponents(n, pt["q"], pt["r"], _rational(eps))[1]) + float(pt.get("s_bar_shift", 0.0))
        elif spec.id == "THM11-BC":
            pt["s_bar"] = float(1 - 2 * ir) + float(pt.get("s_bar_shift", 0.0))
        else:
            pt["s_bar"] = 0.0
    return pt


def evaluate_estimate(spec, point: dict, seed: int = 0, ensemble_size: int = 4, ctx: dict | None = None) -> EstimateReport:
    """Worst ratio over a seeded ensemble at one parameter point."""
    spec = REGISTRY[spec] if isinstance(spec, str) else spec
    pt = _complete_point(spec, point)
    spec.domain(pt)
    ctx = {} if ctx is None else ctx
    members = pt.pop("members", None)
    if members is None:
        members = spec.ensemble(pt, ensemble_size, seed)
    rows = spec.evaluate(pt, members, ctx)
    worst = None
    for idx, lhs, rhs, extra in rows:
        ratio = _ratio(lhs, rhs)
        if worst is None or ratio > worst[3]:
            worst = (idx, lhs, rhs, ratio, extra)
    if worst is None:
        worst = (0, 0.0, 0.0, 0.0, {})
    idx, lhs, rhs, ratio, extra = worst
    suite = pt.get("suite", spec.id)
    fp = _fingerprint({k: v for k, v in pt.items() if k not in ("members",)} | {"ctx": {k: v for k, v in ctx.items() if k not in ("cache", "series_exps")}})
    extra = dict(extra)
    extra["member"] = idx
    return EstimateReport(spec.id, pt, lhs, rhs, ratio, len(rows), fp, member_seed(seed, suite, idx), extra)


@dataclass
class ScanResult:
    reports: list
    failures: list
    slopes: dict

    @property
    def violations(self) -> list:
        return [r for r in self.reports if r.flagged]


def scan_estimate(
    spec,
    points,
    ensemble_size: int = 4,
    seed: int = 0,
    constant: float | None = None,
    axis: str | None = None,
    group_by: tuple | None = None,
    ctx: dict | None = None,
) -> ScanResult:
    """Evaluate a list of parameter points; flag ratios above 1.1 x the frozen constant.

    Failures at single points are collected and the scan continues. With
    ``axis`` set (e.g. "M", "N", "R"), growth slopes are fitted to the envelope
    max ratio(axis value) of each group. Groups are keyed by ``group_by`` (all
    other coordinates when None); grouping by a subset takes the worst case
    over the remaining coordinates, as needed for constants uniform in them.
    """
    spec = REGISTRY[spec] if isinstance(spec, str) else spec
    ctx = {} if ctx is None else ctx
    reports, failures = [], []
    for pt in points:
        try:
            rep = evaluate_estimate(spec, pt, seed, ensemble_size, ctx)
        except Exception as exc:  # noqa: BLE001 - aggregated per point
            failures.append((dict(pt), f"{type(exc).__name__}: {exc}"))
            continue
        C = constant if constant is not None else frozen_constant(spec.id, rep.point.get("eps"))
        rep.flagged = rep.ratio > 1.1 * C
        reports.append(rep)
    slopes = {}
    if axis is not None:
        skip = {axis, "s", "s_bar", "suite", "spec_id"}
        groups = {}
        for rep in reports:
            if group_by is None:
                key = tuple(sorted((k, str(v)) for k, v in rep.point.items() if k not in skip))
            else:
                key = tuple((k, str(rep.point.get(k))) for k in group_by)
            env = groups.setdefault(key, {})
            x = float(rep.point[axis])
            env[x] = max(env.get(x, 0.0), rep.ratio)
        for key, env in groups.items():
            xs = sorted(env)
            slopes[key] = growth_slope(xs, [env[x] for x in xs])
    return ScanResult(reports, failures, slopes)


CSV_COLUMNS = ["spec_id", "n", "a", "q", "r", "s", "s_bar", "extra_params", "ensemble_size", "seed", "lhs", "rhs", "ratio", "grid_fingerprint"]

_CORE_KEYS = {"spec_id", "n", "a", "q", "r", "s", "s_bar", "suite"}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, Fraction):
        return str(v)
    return v


def report_row(rep: EstimateReport) -> list:
    pt = rep.point
    extra = {k: _jsonable(v) for k, v in sorted(pt.items()) if k not in _CORE_KEYS}
    extra.update({f"x_{k}": _jsonable(v) for k, v in sorted(rep.extra.items())})
    return [
        rep.spec_id,
        _fmt(pt.get("n")),
        _fmt(pt.get("a")),
        _fmt(pt.get("q")),
        _fmt(pt.get("r")),
        _fmt(pt.get("s")),
        _fmt(pt.get("s_bar")),
        json.dumps(extra, sort_keys=True),
        str(rep.ensemble_size),
        str(rep.witness_seed),
        _fmt(rep.lhs),
        _fmt(rep.rhs),
        _fmt(rep.ratio),
        rep.grid_fingerprint,
    ]


def write_reports_csv(reports, path=None) -> str:
    """RFC-4180 CSV (CRLF line ends) in the fixed column order; returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        w.writerow(report_row(rep))
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
