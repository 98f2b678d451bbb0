"""Small-data radial solver for u_tt - Delta u + a|x|^-2 u = sign |u|^(p-1) u.

The solution is the fixed point of
    Phi(u)(t) = cos(t sqrt(P_a)) u0 + sin(t sqrt(P_a))/sqrt(P_a) u1
                + int_0^t sin((t-s) sqrt(P_a))/sqrt(P_a) F(u(s)) ds,
computed by Picard iteration with the L^q0_{t,x} distance as stopping metric.
Radial fields are carried as frequency-side profiles U(t, rho) of order
nu(0); u(t, r) = H_nu[U(t)] and F is applied pointwise on the r side.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import cumulative_simpson

from .hankel import RadialGrid, hankel_apply, radial_grid
from .harmonics import sphere_area
from .norms_estimates import sobolev_norm, windowed_lhs
from .wave_solver import ModeData, ProblemParams, simpson_weights

__all__ = [
    "NonlinearitySpec",
    "exponent_table",
    "coupling_threshold",
    "coupling_admissible",
    "SemilinearConfig",
    "IterationTrace",
    "SolutionTrace",
    "NonContractionError",
    "DataTooLargeError",
    "ConvergenceError",
    "gaussian_data",
    "power_nonlinearity",
    "picard_solve",
    "linear_solution",
    "equation_residual",
    "write_trace_csv",
    "run_manifest",
]


class NonContractionError(RuntimeError):
    pass


class DataTooLargeError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    return Fraction(x)


@dataclass(frozen=True)
class NonlinearitySpec:
    n: int
    p: Fraction
    sign: int = -1

    @property
    def p_h(self) -> Fraction:
        return 1 + Fraction(4 * self.n, (self.n + 1) * (self.n - 1))

    @property
    def p_conf(self) -> Fraction:
        return 1 + Fraction(4, self.n - 1)

    @property
    def s_c(self) -> Fraction:
        return Fraction(self.n, 2) - 2 / (self.p - 1)

    @property
    def q0(self) -> Fraction:
        return (self.p - 1) * (self.n + 1) / 2

    @property
    def r0(self) -> Fraction:
        return (self.n + 1) * (self.p - 1) / (2 * self.p)

    @property
    def in_range(self) -> bool:
        return self.p_h < self.p < self.p_conf

    def describe(self) -> dict:
        return {k: str(getattr(self, k)) for k in ("n", "p", "sign", "p_h", "p_conf", "s_c", "q0", "r0")}


def exponent_table(n: int, p, sign: int = -1) -> NonlinearitySpec:
    """Derived exponents in exact arithmetic (p given as Fraction, int, str or float)."""
    if n < 3:
        raise ValueError("n must be >= 3")
    p = _frac(p)
    if not p > 1:
        raise ValueError("p must exceed 1")
    if sign not in (-1, 1):
        raise ValueError("sign must be +1 or -1")
    return NonlinearitySpec(int(n), p, int(sign))


def coupling_threshold(n: int, p) -> Fraction:
    """max{1/(n-1)^2 - (n-2)^2/4, n/q0 (n/q0 - n + 2), (n/r0 - n)(n/r0 - 2)}."""
    s = exponent_table(n, p)
    t1 = Fraction(1, (n - 1) ** 2) - Fraction((n - 2) ** 2, 4)
    x = n / s.q0
    y = n / s.r0
    return max(t1, x * (x - n + 2), (y - n) * (y - 2))


def coupling_admissible(n: int, p, a) -> bool:
    """Strict comparison a > threshold in rational arithmetic (floats converted exactly)."""
    return _frac(a) > coupling_threshold(n, p)


def power_nonlinearity(u, p: float, sign: int):
    """sign |u|^(p-1) u, with 0 at u = 0."""
    a = np.abs(u)
    return sign * np.where(a > 0, a ** (p - 1.0), 0.0) * u


@dataclass
class SemilinearConfig:
    """Discretisation of the Picard run (window [0, T], uniform time step)."""

    T: float = 32.0
    dt: float = 1.0 / 256.0
    N_r: int = 1024
    r_min: float = 1e-2
    r_max: float = 75.0
    tol: float = 1e-12
    max_iter: int = 30
    eps: float = 1e-3
    tail: bool = True

    def grid(self, n: int, scale: float = 1.0) -> RadialGrid:
        return radial_grid(n, self.N_r, scale=scale, r_min=self.r_min, r_max=self.r_max)

    def times(self) -> np.ndarray:
        m = int(round(self.T / self.dt))
        m += m % 2
        return np.linspace(0.0, self.T, m + 1)

    def describe(self) -> dict:
        return {k: getattr(self, k) for k in ("T", "dt", "N_r", "r_min", "r_max", "tol", "max_iter", "eps", "tail")}


@dataclass
class IterationTrace:
    q0_norm: list = field(default_factory=list)
    diff_norm: list = field(default_factory=list)
    ratio: list = field(default_factory=list)
    residual: list = field(default_factory=list)

    def __post_init__(self):
        self.check()

    def check(self):
        m = len(self.q0_norm)
        if not (len(self.diff_norm) == len(self.ratio) == len(self.residual) == m):
            raise ValueError("iteration trace columns differ in length")
        if any(r < 0 for r in self.ratio if not math.isnan(r)):
            raise ValueError("contraction ratios must be nonnegative")

    def rows(self):
        return [(i + 1, self.q0_norm[i], self.diff_norm[i], self.ratio[i], self.residual[i]) for i in range(len(self.q0_norm))]


@dataclass
class SolutionTrace:
    """Solution samples: U (nt, N) on grid.dual() and u (nt, N) on grid."""

    params: ProblemParams
    spec: NonlinearitySpec
    grid: RadialGrid
    times: np.ndarray
    U: np.ndarray
    u: np.ndarray
    forcing: bool = True

    @property
    def nu(self) -> float:
        return self.params.nu(0)


def gaussian_data(params: ProblemParams, grid: RadialGrid, amplitude: float, width: float = 3.0, velocity: float = 0.0, spectral: bool = True):
    """Radial data with frequency profiles amplitude * exp(-(width rho)^2 / 2), velocity * same.

    Returned as frequency-side profiles on grid.dual() (``spectral=True``) or
    as r-side profiles on ``grid``.
    """
    dual = grid.dual()
    b = np.exp(-0.5 * (width * dual.r) ** 2)
    b0, b1 = amplitude * b, velocity * b
    if spectral:
        return b0, b1
    nu = params.nu(0)
    return hankel_apply(nu, dual, b0, grid), hankel_apply(nu, dual, b1, grid)


def _data_norm(params, grid, u0, u1, s_c: float) -> float:
    area = math.sqrt(sphere_area(params.n))
    n0 = sobolev_norm(params, [ModeData(0, 1, grid, np.asarray(u0))], s_c)
    n1 = sobolev_norm(params, [ModeData(0, 1, grid, np.asarray(u1))], s_c - 1.0)
    return area * (n0 + n1)


def _spacetime_norm(u, times, grid: RadialGrid, q: float, n: int, tail: bool) -> float:
    """L^q_{t,x}([0, T] x R^n) of a radial field, with its dispersive tail."""
    L = (sphere_area(n) * np.sum(grid.weights[None, :] * np.abs(u) ** q, axis=1)) ** (1.0 / q)
    if not tail:
        return float(np.sum(simpson_weights(times.size, times[1] - times[0]) * L**q) ** (1.0 / q))
    # forward window only: the mirrored half is empty
    lhs, _, _ = windowed_lhs(L, np.zeros_like(L), q, float(times[-1]), (n - 1) * (0.5 - 1.0 / q))
    return lhs


def linear_solution(params: ProblemParams, grid: RadialGrid, u0, u1, times, spectral: bool = False):
    """Frequency-side U(t) and r-side u(t) of the free evolution."""
    nu = params.nu(0)
    dual = grid.dual()
    if spectral:
        b0, b1 = np.asarray(u0, dtype=float), np.asarray(u1, dtype=float)
    else:
        b0 = hankel_apply(nu, grid, np.asarray(u0, dtype=float))
        b1 = hankel_apply(nu, grid, np.asarray(u1, dtype=float))
    rho = dual.r
    tr = np.outer(times, rho)
    U = np.cos(tr) * b0 + np.sin(tr) / rho * b1
    return U, hankel_apply(nu, dual, U, grid)


def _duhamel_all(G, times, rho):
    """V(t_i) = int_0^{t_i} sin((t_i - s) rho)/rho G(s) ds for every mesh time (cumulative Simpson)."""
    tr = np.outer(times, rho)
    c, s = np.cos(tr), np.sin(tr)
    Ic = cumulative_simpson(c * G, x=times, axis=0, initial=0.0)
    Is = cumulative_simpson(s * G, x=times, axis=0, initial=0.0)
    return (s * Ic - c * Is) / rho


def picard_solve(
    params: ProblemParams,
    spec: NonlinearitySpec,
    u0,
    u1=None,
    config: SemilinearConfig | None = None,
    grid: RadialGrid | None = None,
    check_small: bool = True,
    forcing: bool = True,
    spectral: bool = False,
):
    """Iterate u_{m+1} = Phi(u_m) from u = 0 until the L^q0 step is below tol * ||u||.

    ``u0``, ``u1`` are radial r-side profiles on ``grid``, or frequency-side
    profiles on grid.dual() with ``spectral=True`` (preferred: an r-side
    profile cut off at the grid ends acquires a spurious high-frequency tail
    that the second difference in time amplifies like rho^4). Returns
    (SolutionTrace, IterationTrace). With ``forcing=False`` the nonlinearity
    is switched off (the fixed point is the free solution).
    """
    config = SemilinearConfig() if config is None else config
    grid = config.grid(params.n) if grid is None else grid
    if spec.n != params.n:
        raise ValueError("dimension mismatch between problem and nonlinearity")
    u0 = np.asarray(u0, dtype=float)
    u1 = np.zeros_like(u0) if u1 is None else np.asarray(u1, dtype=float)
    if check_small:
        if spectral:
            r0, r1 = (hankel_apply(params.nu(0), grid.dual(), x, grid) for x in (u0, u1))
        else:
            r0, r1 = u0, u1
        size = _data_norm(params, grid, r0, r1, float(spec.s_c))
        if size >= config.eps:
            raise DataTooLargeError(f"data norm {size:.3e} is not below eps = {config.eps:g}")
    times = config.times()
    nu = params.nu(0)
    dual = grid.dual()
    rho = dual.r
    p, q0 = float(spec.p), float(spec.q0)
    U_lin, u_lin = linear_solution(params, grid, u0, u1, times, spectral)
    trace = IterationTrace()
    U = np.zeros_like(U_lin)
    u = np.zeros_like(u_lin)
    prev_diff = None
    streak = 0
    for it in range(config.max_iter):
        if forcing:
            G = hankel_apply(nu, grid, power_nonlinearity(u, p, spec.sign))
            U_new = U_lin + _duhamel_all(G, times, rho)
            u_new = hankel_apply(nu, dual, U_new, grid)
        else:
            U_new, u_new = U_lin, u_lin
        diff = _spacetime_norm(u_new - u, times, grid, q0, params.n, config.tail)
        size = _spacetime_norm(u_new, times, grid, q0, params.n, config.tail)
        ratio = math.nan if prev_diff is None else (0.0 if prev_diff == 0.0 else diff / prev_diff)
        U, u = U_new, u_new
        sol = SolutionTrace(params, spec, grid, times, U, u, forcing)
        trace.q0_norm.append(size)
        trace.diff_norm.append(diff)
        trace.ratio.append(ratio)
        trace.residual.append(equation_residual(sol))
        if diff <= config.tol * size or diff == 0.0:
            trace.check()
            return sol, trace
        streak = streak + 1 if (not math.isnan(ratio) and ratio > 0.9) else 0
        if streak >= 3:
            raise NonContractionError(f"contraction ratio above 0.9 for 3 iterations (last {ratio:.3f})")
        prev_diff = diff
    raise ConvergenceError(f"no convergence in {config.max_iter} iterations (last step {trace.diff_norm[-1]:.3e})")


def equation_residual(sol: SolutionTrace) -> float:
    """Relative residual of u_tt + A_nu u - F(u) over interior mesh times.

    u_tt is the centred second difference; A_nu u = H_nu[rho^2 U] is exact.
    Normalised by the L^2_{t,r} size of A_nu u, so the free solution shows
    only the O(dt^2) differencing error.
    """
    t = sol.times
    if t.size < 3:
        return 0.0
    dt = t[1] - t[0]
    u = sol.u
    utt = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (dt * dt)
    dual = sol.grid.dual()
    Au = hankel_apply(sol.nu, dual, sol.U[1:-1] * dual.r**2, sol.grid)
    R = utt + Au
    if sol.forcing:
        R = R - power_nonlinearity(u[1:-1], float(sol.spec.p), sol.spec.sign)
    w = sol.grid.weights
    num = float(np.sum(w * R * R))
    den = float(np.sum(w * Au * Au))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return math.sqrt(num / den)


def write_trace_csv(trace: IterationTrace, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["iter", "q0_norm", "diff_norm", "ratio", "residual"])
    for row in trace.rows():
        w.writerow([str(row[0])] + [repr(float(x)) for x in row[1:]])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def run_manifest(params: ProblemParams, spec: NonlinearitySpec, config: SemilinearConfig, grid: RadialGrid, extra=None) -> dict:
    out = {
        "n": params.n,
        "a": params.a,
        "nonlinearity": spec.describe(),
        "config": config.describe(),
        "grid": grid.describe(),
        "window": [0.0, config.T],
    }
    if extra:
        out.update(extra)
    return json.loads(json.dumps(out, default=str))
