"""Spectral propagation of the wave equation with an inverse-square potential.

Each spherical-harmonic mode (k, ell) of (d_t^2 - Delta + a/|x|^2) u = F is
diagonalised by the Hankel transform of order nu(k) = sqrt(mu(k)^2 + a),
mu(k) = (n-2)/2 + k. On the frequency side the mode obeys
v'' + rho^2 v = G, so the homogeneous evolution is exact in time:

    v(t)   = cos(t rho) b0 + sin(t rho)/rho b1
    v_t(t) = -rho sin(t rho) b0 + cos(t rho) b1.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .harmonics import AngularSpectrum, SphereQuadrature, analyze, basis_matrix, dim_harmonic
from .hankel import RadialGrid, apply_A_nu, hankel_apply, l2_norm
from .special_functions import bessel_jv

__all__ = [
    "MeshTooCoarseError",
    "ProblemParams",
    "ModeData",
    "ModeSpectrum",
    "FieldSnapshot",
    "pairwise_sum",
    "mode_to_spectrum",
    "spectrum_to_mode",
    "propagate_mode",
    "sin_over",
    "synthesize_field",
    "eigenfunction_residual",
    "mode_energy",
    "simpson_weights",
    "duhamel",
    "decompose_cauchy_data",
    "dalembert_radial",
    "export_snapshots",
]


class MeshTooCoarseError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemParams:
    n: int
    a: float

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("dimension n must be >= 3")
        if not self.a > -((self.n - 2) ** 2) / 4.0:
            raise ValueError(f"coupling a={self.a} must exceed -(n-2)^2/4 = {-((self.n - 2) ** 2) / 4.0}")

    def mu(self, k: int) -> float:
        return 0.5 * (self.n - 2) + k

    def nu(self, k: int) -> float:
        m = self.mu(k)
        return math.sqrt(m * m + self.a)


@dataclass
class ModeData:
    k: int
    ell: int
    grid: RadialGrid
    a0: np.ndarray
    a1: np.ndarray | None = None

    def velocity(self) -> np.ndarray:
        return np.zeros(self.grid.N) if self.a1 is None else np.asarray(self.a1, dtype=float)


@dataclass
class ModeSpectrum:
    """Frequency-side state (v, v_t) of one mode at time ``t``; ``grid`` is the rho grid."""

    k: int
    ell: int
    grid: RadialGrid
    b0: np.ndarray
    b1: np.ndarray
    t: float = 0.0


@dataclass
class FieldSnapshot:
    t: float
    grid: RadialGrid
    modes: dict = field(default_factory=dict)  # (k, ell) -> radial profile

    def mode_keys(self):
        return sorted(self.modes)


def pairwise_sum(items):
    """Deterministic pairwise-tree reduction of a list of arrays."""
    items = list(items)
    if not items:
        raise ValueError("nothing to sum")
    while len(items) > 1:
        nxt = [items[i] + items[i + 1] for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def mode_to_spectrum(params: ProblemParams, mode: ModeData) -> ModeSpectrum:
    nu = params.nu(mode.k)
    b0 = hankel_apply(nu, mode.grid, np.asarray(mode.a0, dtype=float))
    b1 = hankel_apply(nu, mode.grid, mode.velocity())
    return ModeSpectrum(mode.k, mode.ell, mode.grid.dual(), b0, b1, 0.0)


def spectrum_to_mode(params: ProblemParams, spec: ModeSpectrum) -> ModeData:
    nu = params.nu(spec.k)
    rgrid = spec.grid.dual()
    return ModeData(
        spec.k,
        spec.ell,
        rgrid,
        hankel_apply(nu, spec.grid, spec.b0, rgrid),
        hankel_apply(nu, spec.grid, spec.b1, rgrid),
    )


def sin_over(t: float, rho: np.ndarray) -> np.ndarray:
    """sin(t rho)/rho with its series used for |t rho| < 1e-4."""
    rho = np.asarray(rho, dtype=float)
    x = t * rho
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, rho)
    return np.where(small, t * (1.0 - x * x / 6.0), np.sin(x) / safe)


def propagate_mode(spec: ModeSpectrum, t: float) -> ModeSpectrum:
    """Advance the frequency-side state by time ``t`` (exact)."""
    rho = spec.grid.r
    c, s = np.cos(t * rho), np.sin(t * rho)
    v = c * spec.b0 + sin_over(t, rho) * spec.b1
    vt = -rho * s * spec.b0 + c * spec.b1
    return ModeSpectrum(spec.k, spec.ell, spec.grid, v, vt, spec.t + t)


def mode_energy(spec: ModeSpectrum) -> float:
    rho = spec.grid.r
    dens = np.abs(spec.b1) ** 2 + rho**2 * np.abs(spec.b0) ** 2
    return float(np.sum(spec.grid.weights * dens))


def synthesize_field(params: ProblemParams, spectra, directions=None):
    """Inverse-transform each mode and sum against the harmonics.

    Returns ``(snapshot, values)`` where ``values[i, m]`` is u(r_i, theta_m) when
    directions are given, else ``None``.
    """
    spectra = list(spectra)
    if not spectra:
        raise ValueError("no modes to synthesize")
    t = spectra[0].t
    rgrid = spectra[0].grid.dual()
    snap = FieldSnapshot(t, rgrid)
    for sp in spectra:
        snap.modes[(sp.k, sp.ell)] = hankel_apply(params.nu(sp.k), sp.grid, sp.b0, rgrid)
    values = None
    if directions is not None:
        kmax = max(sp.k for sp in spectra)
        zonal = params.n != 3
        B = basis_matrix(params.n, kmax, directions, zonal=zonal)
        terms = []
        for (k, ell), prof in sorted(snap.modes.items()):
            col = k if zonal else k * k + ell - 1
            terms.append(np.outer(prof, B[:, col]))
        values = pairwise_sum(terms)
    return snap, values


def eigenfunction_residual(params: ProblemParams, k: int, rho: float, grid: RadialGrid, window=(0.05, 8.0)) -> float:
    """Relative residual of A_nu phi - rho^2 phi for phi = (rho r)^-lam J_nu(rho r).

    Measured in L^2(r^(n-1) dr) on the nodes with rho*r inside ``window``.
    """
    nu = params.nu(k)
    lam = 0.5 * (params.n - 2)
    x = rho * grid.r
    phi = x ** (-lam) * bessel_jv(nu, x)
    from .hankel import RadialProfile

    Aphi = apply_A_nu(nu, RadialProfile(grid, phi), check=False).values
    sel = (x >= window[0]) & (x <= window[1])
    sel[:3] = False
    sel[-3:] = False
    w = grid.weights[sel]
    diff = Aphi[sel] - rho**2 * phi[sel]
    return float(np.sqrt(np.sum(w * diff**2) / np.sum(w * (rho**2 * phi[sel]) ** 2)))


def simpson_weights(m: int, dt: float) -> np.ndarray:
    """Composite Simpson weights for m (odd) equally spaced nodes."""
    if m < 3 or m % 2 == 0:
        raise ValueError("composite Simpson needs an odd number (>= 3) of nodes")
    w = np.ones(m)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * dt / 3.0


def _duhamel_sum(rho, t, times, G, weights):
    # sum_i w_i sin((t - s_i) rho)/rho G_i  and  sum_i w_i cos((t - s_i) rho) G_i
    v = np.zeros(rho.size)
    vt = np.zeros(rho.size)
    for s, g, w in zip(times, G, weights):
        v += w * sin_over(t - s, rho) * g
        vt += w * np.cos((t - s) * rho) * g
    return v, vt


def duhamel(
    params: ProblemParams,
    k: int,
    forcing,
    times,
    t: float,
    grid: RadialGrid,
    spectral: bool = False,
    ell: int = 1,
    tol: float | None = None,
) -> ModeSpectrum:
    """Duhamel increment int_0^t sin((t-s)rho)/rho H_nu[F(s)] ds for one mode.

    ``forcing[i]`` is the r-side profile F(times[i]) on ``grid`` (or, with
    ``spectral=True``, already the frequency-side G(times[i]) on grid.dual()).
    The mesh must be uniform, odd-sized, starting at 0 and ending at t.
    When ``tol`` is given, a Richardson estimate against the every-other-node
    rule (needs (m-1) divisible by 4) must stay below tol * ||result||.
    """
    times = np.asarray(times, dtype=float)
    m = times.size
    if m < 3 or abs(times[0]) > 1e-14 or abs(times[-1] - t) > 1e-12 * max(1.0, abs(t)):
        raise ValueError("time mesh must cover [0, t]")
    dt = (times[-1] - times[0]) / (m - 1)
    if np.max(np.abs(np.diff(times) - dt)) > 1e-9 * max(dt, 1e-300):
        raise ValueError("time mesh must be uniform")
    rgrid = grid
    fgrid = grid.dual()
    if spectral:
        G = np.asarray(forcing, dtype=float)
    else:
        G = hankel_apply(params.nu(k), rgrid, np.asarray(forcing, dtype=float))
    rho = fgrid.r
    v, vt = _duhamel_sum(rho, t, times, G, simpson_weights(m, dt))
    if tol is not None:
        if (m - 1) % 4:
            raise ValueError("Richardson check needs (nodes - 1) divisible by 4")
        vc, _ = _duhamel_sum(rho, t, times[::2], G[::2], simpson_weights((m + 1) // 2, 2.0 * dt))
        est = l2_norm(fgrid, v - vc) / 15.0
        scale = max(l2_norm(fgrid, v), 1e-300)
        if est > tol * scale:
            raise MeshTooCoarseError(f"Richardson estimate {est / scale:.2e} exceeds tolerance {tol:g}")
    return ModeSpectrum(k, ell, fgrid, v, vt, t)


def decompose_cauchy_data(params: ProblemParams, grid: RadialGrid, samples, quad: SphereQuadrature, k_max: int):
    """Split samples u(r_i, theta_m) into modes of degree <= k_max.

    Returns ``(modes, tail)`` with tail = sum over k > k_max of ||a_{k,ell}||^2,
    measured with the full exactness of ``quad``.
    """
    samples = np.asarray(samples, dtype=float)
    if k_max > quad.k_max:
        raise ValueError("k_max exceeds quadrature exactness")
    specs = [analyze(row, quad) for row in samples]
    C = np.stack([s.coeffs for s in specs])  # (N_r, n_coeffs)
    proto: AngularSpectrum = specs[0]
    deg = proto.degrees()
    modes = []
    for k in range(k_max + 1):
        for ell in range(1, (1 if quad.zonal else dim_harmonic(3, k)) + 1):
            col = k if quad.zonal else k * k + ell - 1
            modes.append(ModeData(k, ell, grid, C[:, col]))
    tail_cols = deg > k_max
    tail = float(np.sum(grid.weights[:, None] * C[:, tail_cols] ** 2))
    return modes, tail


def dalembert_radial(g, r, t):
    """Free radial wave in R^3 with u(0) = g, u_t(0) = 0 (g even, vectorised)."""
    r = np.asarray(r, dtype=float)
    p, m = r + t, np.abs(r - t)
    # (r - t) g(r - t) with g even equals sign(r - t) |r - t| g(|r - t|)
    return (p * g(p) + np.sign(r - t) * m * g(m)) / (2.0 * r)


def export_snapshots(out_dir, params: ProblemParams, snapshots, k_max: int, seed: int | None = None, extra=None):
    """Write one CSV per mode with columns (t, r, value) and a JSON manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    snapshots = list(snapshots)
    files = []
    keys = sorted({key for s in snapshots for key in s.modes})
    for k, ell in keys:
        name = f"mode_k{k}_l{ell}.csv"
        with open(out / name, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["t", "r", "value"])
            for snap in snapshots:
                prof = snap.modes.get((k, ell))
                if prof is None:
                    continue
                for r, v in zip(snap.grid.r, prof):
                    wr.writerow([repr(float(snap.t)), repr(float(r)), repr(float(v))])
        files.append(name)
    manifest = {
        "params": {"n": params.n, "a": params.a},
        "grid": snapshots[0].grid.describe() if snapshots else None,
        "K_max": k_max,
        "seed": seed,
        "times": [float(s.t) for s in snapshots],
        "files": files,
    }
    if extra:
        manifest.update(extra)
    (out / "snapshot_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return files
