"""Discrete Hankel transforms of real order on log-spaced radial grids.

Convention: for a radial function in R^n with lam = (n-2)/2,

    (H_nu f)(rho) = int_0^inf (r rho)^(-lam) J_nu(r rho) f(r) r^(n-1) dr,

which is an involutive isometry of L^2(r^(n-1) dr). Grids are geometric,
r_i = exp(c + (i - (N-1)/2) h), and integrals are sums in the log variable,
int g(r) r^(n-1) dr = sum_i g(r_i) r_i^n h. The frequency grid is the
reciprocal grid (centre -c), so r_i rho_j = exp((i + j - N + 1) h) and the
dense kernel only needs 2N-1 Bessel evaluations.

A log grid resolves the oscillation of J_nu(r rho) only while the phase step
r*rho*h stays below pi. The kernel is therefore band-limited: it is rolled off
with a smooth (C-infinity) taper between r*rho*h = 0.5 pi and 0.9 pi. Profiles whose
(r, rho) content lies below the taper are transformed to quadrature accuracy,
and the sampled aliasing noise (amplified by rho^(n-1) in L^2) is removed.
"""

from __future__ import annotations

import functools
import math
import threading
import warnings
from dataclasses import dataclass

import numpy as np

from .special_functions import bessel_jv

__all__ = [
    "AliasingWarning",
    "SlowDecayWarning",
    "GridTooCoarseError",
    "DyadicRangeError",
    "PowerIterationError",
    "RadialGrid",
    "radial_grid",
    "RadialProfile",
    "hankel_kernel",
    "hankel_transform",
    "hankel_apply",
    "l2_norm",
    "apply_A_nu",
    "diagonalization_defect",
    "conjugate_K",
    "kernel_window",
    "k_norm_probe",
    "smooth_step",
    "dyadic_beta",
    "project_dyadic",
    "almost_orthogonality_norm",
    "multiplier_L_j",
    "square_function",
    "hankel_convolution_kernel",
    "hankel_convolution",
]


class AliasingWarning(UserWarning):
    pass


class SlowDecayWarning(UserWarning):
    pass


class GridTooCoarseError(ValueError):
    pass


class DyadicRangeError(ValueError):
    pass


class PowerIterationError(RuntimeError):
    pass


@dataclass(frozen=True)
class RadialGrid:
    n: int
    N: int
    center: float  # log of the geometric mid node
    h: float  # log step

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.center + (np.arange(self.N) - 0.5 * (self.N - 1)) * self.h)

    @property
    def weights(self) -> np.ndarray:
        return self.r**self.n * self.h

    @property
    def r_min(self) -> float:
        return float(self.r[0])

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    def dual(self) -> "RadialGrid":
        return RadialGrid(self.n, self.N, -self.center, self.h)

    def refined(self) -> "RadialGrid":
        """Same span, twice the nodes (N -> 2N, step roughly halved)."""
        span = (self.N - 1) * self.h
        return RadialGrid(self.n, 2 * self.N, self.center, span / (2 * self.N - 1))

    def describe(self) -> dict:
        return {"n": self.n, "N_r": self.N, "r_min": self.r_min, "r_max": self.r_max}


def radial_grid(n: int, N: int = 2048, scale: float = 1.0, r_min: float = 1e-4, r_max: float = 1e3) -> RadialGrid:
    if n < 2 or N < 8:
        raise ValueError("radial_grid needs n >= 2 and N >= 8")
    lo, hi = math.log(r_min * scale), math.log(r_max * scale)
    return RadialGrid(int(n), int(N), 0.5 * (lo + hi), (hi - lo) / (N - 1))


@dataclass
class RadialProfile:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape[-1] != self.grid.N:
            raise ValueError("profile length does not match its grid")

    def norm(self) -> float:
        return l2_norm(self.grid, self.values)


def l2_norm(grid: RadialGrid, values) -> float:
    return float(np.sqrt(np.sum(grid.weights * np.abs(values) ** 2)))


# ---------------------------------------------------------------------------
# dense kernels

_LOCK = threading.Lock()


@functools.lru_cache(maxsize=8)
def _index_matrix(N: int) -> np.ndarray:
    i = np.arange(N)
    return i[:, None] + i[None, :]


TAPER_START, TAPER_END = 0.5 * math.pi, 0.9 * math.pi


def _phase_taper(phase):
    # C-infinity roll-off so the taper itself adds no algebraic spectral tail
    return 1.0 - smooth_step(1.0 + (phase - TAPER_START) / (TAPER_END - TAPER_START))


@functools.lru_cache(maxsize=48)
def _kernel_cached(nu: float, n: int, N: int, h: float, shift: float) -> np.ndarray:
    lam = 0.5 * (n - 2)
    x = np.exp(shift + (np.arange(2 * N - 1) - (N - 1)) * h)
    g = x ** (-lam) * bessel_jv(nu, x) * _phase_taper(x * h)
    K = g[_index_matrix(N)]
    K.flags.writeable = False
    return K


def hankel_kernel(nu: float, grid: RadialGrid, target: RadialGrid | None = None) -> np.ndarray:
    """Symmetric kernel K[i, j] = (r_i rho_j)^(-lam) J_nu(r_i rho_j)."""
    target = grid.dual() if target is None else target
    if target.N != grid.N or not math.isclose(target.h, grid.h, rel_tol=1e-14) or target.n != grid.n:
        raise ValueError("target grid must share N, step and dimension with the source grid")
    shift = round(grid.center + target.center, 12)
    with _LOCK:
        return _kernel_cached(float(nu), grid.n, grid.N, grid.h, shift)


def hankel_apply(nu: float, grid: RadialGrid, values, target: RadialGrid | None = None) -> np.ndarray:
    """Transform samples on ``grid`` (last axis) to samples on ``target``."""
    K = hankel_kernel(nu, grid, target)
    return (np.asarray(values) * grid.weights) @ K


def _content_edge(grid: RadialGrid, values, keep: float = 1.0 - 1e-8) -> float:
    # radius holding all but 1e-8 of the weighted L^2 energy
    e = np.cumsum(grid.weights * np.abs(values) ** 2)
    if e[-1] == 0.0:
        return 0.0
    return float(grid.r[min(np.searchsorted(e, keep * e[-1]), grid.N - 1)])


def _check_aliasing(grid: RadialGrid, f, target: RadialGrid, F) -> None:
    phase = _content_edge(grid, f) * _content_edge(target, F) * grid.h
    if phase > TAPER_START:
        warnings.warn(
            f"spectral content beyond phase resolution (r*rho*h = {phase:.2f} > pi/2)",
            AliasingWarning,
            stacklevel=3,
        )


def hankel_transform(nu: float, f: RadialProfile, target: RadialGrid | None = None) -> RadialProfile:
    target = f.grid.dual() if target is None else target
    F = hankel_apply(nu, f.grid, f.values, target)
    _check_aliasing(f.grid, f.values, target, F)
    return RadialProfile(target, F)


# ---------------------------------------------------------------------------
# A_nu by finite differences in log r

_D1_4 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2_4 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D1_6 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D2_6 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0


def _stencil(f, coeffs):
    m = len(coeffs) // 2
    out = np.zeros_like(f)
    N = f.shape[-1]
    for s, c in enumerate(coeffs):
        if c != 0.0:
            out[..., m : N - m] += c * f[..., s : N - 2 * m + s]
    return out


def _A_from(f, grid: RadialGrid, nu: float, d1, d2):
    lam = 0.5 * (grid.n - 2)
    h = grid.h
    fu = _stencil(f, d1) / h
    fuu = _stencil(f, d2) / h**2
    r = grid.r
    # -f'' - (n-1)/r f' = -(f_uu + (n-2) f_u)/r^2 in u = log r
    return -(fuu + (grid.n - 2) * fu - (nu * nu - lam * lam) * f) / r**2


def apply_A_nu(nu: float, f: RadialProfile, check: bool = True, tol: float = 1e-2) -> RadialProfile:
    """-f'' - (n-1)/r f' + (nu^2 - lam^2)/r^2 f, fourth order; two end nodes each side are zero."""
    grid = f.grid
    vals = np.asarray(f.values, dtype=float)
    out = _A_from(vals, grid, nu, _D1_4, _D2_4)
    out[..., :2] = 0.0
    out[..., -2:] = 0.0
    if check:
        ref = _A_from(vals, grid, nu, _D1_6, _D2_6)
        ref[..., :3] = 0.0
        ref[..., -3:] = 0.0
        inner = out.copy()
        inner[..., :3] = 0.0
        inner[..., -3:] = 0.0
        scale = l2_norm(grid, ref)
        if scale > 0.0:
            est = l2_norm(grid, inner - ref) / scale
            if est > tol:
                raise GridTooCoarseError(f"finite-difference truncation estimate {est:.2e} exceeds {tol:g}")
    return RadialProfile(grid, out)


def diagonalization_defect(nu: float, f: RadialProfile) -> float:
    """||H(A f) - rho^2 H f|| / ||rho^2 H f||."""
    Af = apply_A_nu(nu, f, check=False)
    lhs = hankel_apply(nu, f.grid, Af.values)
    rho = f.grid.dual().r
    rhs = rho**2 * hankel_apply(nu, f.grid, f.values)
    den = l2_norm(f.grid.dual(), rhs)
    if den == 0.0:
        return 0.0
    return l2_norm(f.grid.dual(), lhs - rhs) / den


def conjugate_K(mu: float, nu: float, f: RadialProfile) -> RadialProfile:
    """K_{mu,nu} f = H_mu H_nu f, returned on the original grid."""
    g = hankel_apply(nu, f.grid, f.values)
    return RadialProfile(f.grid, hankel_apply(mu, f.grid.dual(), g, f.grid))


# ---------------------------------------------------------------------------
# K^0 boundedness probe


def kernel_window(n: int, nu: float, p: float, beta: float) -> bool:
    """Admissible (p, beta) window for K_{lam,nu} on the homogeneous Sobolev space."""
    lam = 0.5 * (n - 2)
    ip = 1.0 / p
    lo = max(0.0, (lam - nu) / n, beta / n)
    hi = min((lam + nu + 2.0) / n, (lam + nu + 2.0 + beta) / n, 1.0)
    return lo < ip < hi


def _sobolev_lp(grid: RadialGrid, values, p: float, beta: float) -> float:
    lam = 0.5 * (grid.n - 2)
    if beta != 0.0:
        F = hankel_apply(lam, grid, values)
        values = hankel_apply(lam, grid.dual(), grid.dual().r ** beta * F, grid)
    return float(np.sum(grid.weights * np.abs(values) ** p) ** (1.0 / p))


def k_norm_probe(nu: float, p: float, beta: float, ensemble, grid: RadialGrid):
    """Largest ||K_{lam,nu} f|| / ||f|| over an ensemble in a discrete homogeneous Sobolev norm.

    The norm is ||H_lam[rho^beta H_lam f]||_{L^p(r^(n-1)dr)} with lam = (n-2)/2
    (radial Fourier transform). Returns (ratio, inside_window).
    """
    lam = 0.5 * (grid.n - 2)
    inside = kernel_window(grid.n, nu, p, beta)
    worst = 0.0
    for f in ensemble:
        f = np.asarray(f, dtype=float)
        Kf = hankel_apply(lam, grid.dual(), hankel_apply(nu, grid, f), grid)
        worst = max(worst, _sobolev_lp(grid, Kf, p, beta) / _sobolev_lp(grid, f, p, beta))
    return worst, inside


# ---------------------------------------------------------------------------
# dyadic cutoffs and projectors


def smooth_step(x):
    """0 for x <= 1, 1 for x >= 2, built from exp(-1/t) mollifiers."""
    t = np.asarray(x, dtype=float) - 1.0
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def dyadic_beta(rho, j: int = 0):
    """beta_j(rho) = beta(2^-j rho), beta(x) = psi(2x) - psi(x), support [1/2, 2]."""
    x = np.asarray(rho, dtype=float) * 2.0 ** (-j)
    return smooth_step(2.0 * x) - smooth_step(x)


def _dyadic_range(grid: RadialGrid) -> tuple[int, int]:
    rho = grid.dual()
    return math.ceil(math.log2(rho.r_min) + 1), math.floor(math.log2(rho.r_max) - 1)


def project_dyadic(nu: float, j: int, f: RadialProfile) -> RadialProfile:
    """H_nu (beta_j H_nu f)."""
    lo, hi = _dyadic_range(f.grid)
    if not lo <= j <= hi:
        raise DyadicRangeError(f"j={j} outside resolvable range [{lo}, {hi}]")
    rho = f.grid.dual()
    F = hankel_apply(nu, f.grid, f.values)
    return RadialProfile(f.grid, hankel_apply(nu, rho, dyadic_beta(rho.r, j) * F, f.grid))


def multiplier_L_j(nu: float, j: int, f: RadialProfile) -> RadialProfile:
    """L_j f with H_nu[L_j f] = beta_j H_nu f."""
    return project_dyadic(nu, j, f)


def square_function(nu: float, f: RadialProfile, p: float = 2.0, js=None) -> float:
    """||(sum_j |L_j f|^2)^(1/2)||_{L^p} / ||f||_{L^p}."""
    lo, hi = _dyadic_range(f.grid)
    js = range(lo, hi + 1) if js is None else js
    rho = f.grid.dual()
    F = hankel_apply(nu, f.grid, f.values)
    B = np.stack([dyadic_beta(rho.r, j) for j in js])
    pieces = hankel_apply(nu, rho, B * F, f.grid)
    sq = np.sqrt(np.sum(np.abs(pieces) ** 2, axis=0))
    w = f.grid.weights
    lp = lambda v: float(np.sum(w * np.abs(v) ** p) ** (1.0 / p))  # noqa: E731
    return lp(sq) / lp(f.values)


def _unitary(nu: float, grid: RadialGrid) -> np.ndarray:
    # matrix of H_nu in orthonormal coordinates sqrt(w) f (r side) -> sqrt(v) F (rho side)
    K = hankel_kernel(nu, grid)
    sw = np.sqrt(grid.weights)
    sv = np.sqrt(grid.dual().weights)
    return (sw[:, None] * K * sv[None, :]).T


def _resolved_filter(N: int):
    """Symmetric low-pass in node index (DCT-II, orthonormal), norm <= 1.

    On a geometric grid a vector oscillating at omega radians per node carries
    transform content at phase step r*rho*h ~ omega, so keeping omega well below
    the kernel taper restricts an operator to the subspace the grid resolves.
    """
    from scipy.fft import dct, idct

    omega = np.pi * np.arange(N) / N
    sigma = 1.0 - smooth_step(1.0 + (omega - 0.25 * math.pi) / (0.15 * math.pi))

    def apply(x):
        return idct(sigma * dct(x, norm="ortho"), norm="ortho")

    return apply


def almost_orthogonality_norm(
    mu: float,
    nu: float,
    j: int,
    jp: int,
    grid: RadialGrid,
    which: str = "M",
    iterations: int = 30,
    stagnation: float = 1e-6,
    seed: int = 0,
) -> float:
    """Operator norm of M = P_j Pt_j' (or N = Pt_j P_j') by power iteration.

    P uses order ``mu``, Pt uses order ``nu``; both act on L^2(r^(n-1)dr).
    The iteration runs on the grid-resolved subspace, since vectors at the
    node-scale Nyquist limit are not faithful samples of any profile.
    """
    for jj in (j, jp):
        lo, hi = _dyadic_range(grid)
        if not lo <= jj <= hi:
            raise DyadicRangeError(f"j={jj} outside resolvable range [{lo}, {hi}]")
    rho = grid.dual().r
    Um, Un = _unitary(mu, grid), _unitary(nu, grid)
    if which == "M":
        first, second = (Um, dyadic_beta(rho, j)), (Un, dyadic_beta(rho, jp))
    elif which == "N":
        first, second = (Un, dyadic_beta(rho, j)), (Um, dyadic_beta(rho, jp))
    else:
        raise ValueError("which must be 'M' or 'N'")
    # op = U1^T B1 U1 U2^T B2 U2 ; only the frequency-side core B1 C B2 matters,
    # restricted to the resolved subspace (see _resolved_filter)
    U1, B1 = first
    U2, B2 = second
    C = U1 @ U2.T
    S = _resolved_filter(grid.N)

    def op(x):
        return S(B1 * (C @ (B2 * S(x))))

    def op_t(y):
        return S(B2 * (C.T @ (B1 * S(y))))

    x = np.random.default_rng(seed).standard_normal(grid.N)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iterations):
        y = op_t(op(x))
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        new = math.sqrt(nrm)
        x = y / nrm
        if est > 0.0 and abs(new - est) <= stagnation * est:
            est = new
            break
        est = new
    if not math.isfinite(est):
        raise PowerIterationError("power iteration produced a non-finite norm")
    return est


# ---------------------------------------------------------------------------
# triple-Bessel kernel and Hankel convolution


def _triple_integral(nu, n, x, y, z, T, points_per_unit):
    lam = 0.5 * (n - 2)
    span = (x + y + z) / math.pi + 1.0
    panels = max(16, int(math.ceil(T * span * points_per_unit / 16.0)))
    gx, gw = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, T, panels + 1)
    half = 0.5 * np.diff(edges)
    t = ((edges[:-1] + half)[:, None] + half[:, None] * gx[None, :]).ravel()
    w = (half[:, None] * gw[None, :]).ravel()
    taper = np.ones_like(t)
    start = 0.1 * T
    ramp = t > start
    taper[ramp] = 0.5 * (1.0 + np.cos(math.pi * (t[ramp] - start) / (T - start)))
    vals = np.ones_like(t)
    for s in (x, y, z):
        u = s * t
        vals *= u ** (-lam) * bessel_jv(nu, u)
    return float(np.sum(w * taper * vals * t ** (n - 1)))


def hankel_convolution_kernel(nu: float, x: float, y: float, z: float, n: int = 3, points_per_unit: float = 4.0) -> float:
    """K_nu(x,y,z) = int phi_t(x) phi_t(y) phi_t(z) t^(n-1) dt, phi_t(s) = (st)^-lam J_nu(st).

    Truncated at T_max = 40/min(x,y,z) with a cosine taper over the last decade.
    Warns when doubling T_max moves the value by more than 10%.
    """
    if min(x, y, z) <= 0.0:
        raise ValueError("kernel arguments must be positive")
    T = 40.0 / min(x, y, z)
    val = _triple_integral(nu, n, x, y, z, T, points_per_unit)
    alt = _triple_integral(nu, n, x, y, z, 2.0 * T, points_per_unit)
    if abs(alt - val) > 0.1 * max(abs(val), 1e-12):
        warnings.warn(f"taper sensitivity {abs(alt - val):.2e} above 10% at ({x}, {y}, {z})", SlowDecayWarning, stacklevel=2)
    return val


def hankel_convolution(nu: float, f, g, s, n: int = 3, points_per_unit: float = 4.0) -> np.ndarray:
    """(f # g)(x) = int int f(y) g(z) K_nu(x,y,z) dw(y) dw(z) on a common node set ``s``.

    ``s`` is geometric; the sum uses the same log-variable weights as RadialGrid.
    """
    s = np.asarray(s, dtype=float)
    h = math.log(s[1] / s[0])
    w = s**n * h
    fw, gw = np.asarray(f) * w, np.asarray(g) * w
    out = np.zeros(s.size)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SlowDecayWarning)
        K = np.empty((s.size, s.size, s.size))
        for a in range(s.size):
            for b in range(a, s.size):
                for c in range(b, s.size):
                    v = _triple_integral(nu, n, s[a], s[b], s[c], 40.0 / s[a], points_per_unit)
                    for p in {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}:
                        K[p] = v
    out = np.einsum("xyz,y,z->x", K, fw, gw)
    return out
