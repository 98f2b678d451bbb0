import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from isqwave.hankel import l2_norm, radial_grid
from isqwave.harmonics import sphere_quadrature
from isqwave.wave_solver import (
    MeshTooCoarseError,
    ModeData,
    ModeSpectrum,
    ProblemParams,
    dalembert_radial,
    decompose_cauchy_data,
    duhamel,
    eigenfunction_residual,
    export_snapshots,
    mode_energy,
    mode_to_spectrum,
    propagate_mode,
    simpson_weights,
    spectrum_to_mode,
    synthesize_field,
)


@pytest.fixture(scope="module")
def grid():
    return radial_grid(3, 2048)


def bump(r, c=2.0, w=0.5):
    return np.exp(-(((r - c) / w) ** 2))


def test_params_validation():
    with pytest.raises(ValueError):
        ProblemParams(2, 0.0)
    with pytest.raises(ValueError):
        ProblemParams(3, -0.25)
    p = ProblemParams(3, 0.75)
    assert p.mu(0) == 0.5 and p.nu(0) == 1.0


def test_windowed_eigenfunction_concentrates(grid):
    params = ProblemParams(3, 0.75)
    rho0 = 3.0
    x = rho0 * grid.r
    from isqwave.special_functions import bessel_jv

    a0 = x**-0.5 * bessel_jv(1.0, x) * np.exp(-((grid.r / 30.0) ** 2))
    spec = mode_to_spectrum(params, ModeData(0, 1, grid, a0))
    rho = spec.grid.r
    near = np.abs(rho - rho0) < 0.5
    mass = spec.grid.weights * spec.b0**2
    assert mass[near].sum() > 0.95 * mass.sum()


def test_zero_data(grid):
    spec = mode_to_spectrum(ProblemParams(3, 0.0), ModeData(0, 1, grid, np.zeros(grid.N)))
    assert np.all(spec.b0 == 0) and np.all(spec.b1 == 0)
    assert mode_energy(spec) == 0.0


def test_round_trip(grid):
    params = ProblemParams(3, 0.75)
    mode = ModeData(2, 1, grid, bump(grid.r), 0.3 * bump(grid.r, 3.0))
    back = spectrum_to_mode(params, mode_to_spectrum(params, mode))
    assert l2_norm(grid, back.a0 - mode.a0) / l2_norm(grid, mode.a0) < 1e-3
    assert l2_norm(grid, back.a1 - mode.a1) / l2_norm(grid, mode.a1) < 1e-3


def test_propagate_zero_time(grid):
    spec = mode_to_spectrum(ProblemParams(3, 1.0), ModeData(1, 2, grid, bump(grid.r)))
    same = propagate_mode(spec, 0.0)
    assert np.array_equal(same.b0, spec.b0) and np.array_equal(same.b1, spec.b1)


def test_half_period_sign_flip(grid):
    dual = grid.dual()
    rho_star = 2.0
    b0 = np.exp(-(((dual.r - rho_star) / 0.01) ** 2))
    spec = ModeSpectrum(0, 1, dual, b0, np.zeros_like(b0))
    out = propagate_mode(spec, math.pi / rho_star)
    near = np.abs(dual.r - rho_star) < 0.02
    assert np.allclose(out.b0[near], -b0[near], atol=2e-3)


def test_energy_conservation(grid):
    params = ProblemParams(3, 0.75)
    spec = mode_to_spectrum(params, ModeData(3, 1, grid, bump(grid.r), bump(grid.r, 1.0, 0.3)))
    e0 = mode_energy(spec)
    for t in (0.5, 7.0, 32.0):
        assert abs(mode_energy(propagate_mode(spec, t)) - e0) <= 1e-12 * e0


def test_time_reversal(grid):
    spec = mode_to_spectrum(ProblemParams(3, 0.75), ModeData(0, 1, grid, bump(grid.r), bump(grid.r, 1.0)))
    back = propagate_mode(propagate_mode(spec, 5.0), -5.0)
    scale = np.max(np.abs(spec.b0))
    assert np.max(np.abs(back.b0 - spec.b0)) <= 1e-12 * scale * 10


def test_even_in_time_without_velocity(grid):
    spec = mode_to_spectrum(ProblemParams(3, 0.75), ModeData(0, 1, grid, bump(grid.r)))
    a, b = propagate_mode(spec, 3.3), propagate_mode(spec, -3.3)
    assert np.max(np.abs(a.b0 - b.b0)) <= 1e-12 * np.max(np.abs(spec.b0))


def test_synthesize_at_zero_reproduces_data(grid):
    params = ProblemParams(3, 0.75)
    quad = sphere_quadrature(3, 4, zonal=False)
    modes = [ModeData(0, 1, grid, bump(grid.r)), ModeData(1, 2, grid, bump(grid.r, 3.0))]
    specs = [mode_to_spectrum(params, m) for m in modes]
    snap, vals = synthesize_field(params, specs, quad.directions)
    from isqwave.harmonics import basis_matrix

    B = basis_matrix(3, 1, quad.directions)
    expect = np.outer(modes[0].a0, B[:, 0]) + np.outer(modes[1].a0, B[:, 2])
    assert np.max(np.abs(vals - expect)) < 1e-3 * np.max(np.abs(expect))


def test_dalembert_agreement(grid):
    params = ProblemParams(3, 0.0)

    def g(r):
        return np.exp(-((r - 3.0) ** 2)) + np.exp(-((r + 3.0) ** 2))

    spec = mode_to_spectrum(params, ModeData(0, 1, grid, g(grid.r)))
    for t in (1.0, 2.5, 5.0):
        snap, _ = synthesize_field(params, [propagate_mode(spec, t)])
        ex = dalembert_radial(g, grid.r, t)
        assert l2_norm(grid, snap.modes[(0, 1)] - ex) / l2_norm(grid, ex) < 1e-3


def test_dalembert_oracle_solves_wave_equation():
    def g(r):
        return np.exp(-(r**2))

    r = np.linspace(0.5, 3.0, 11)
    t, h = 0.7, 1e-3
    u = lambda rr, tt: dalembert_radial(g, rr, tt)
    utt = (u(r, t + h) - 2 * u(r, t) + u(r, t - h)) / h**2
    urr = (u(r + h, t) - 2 * u(r, t) + u(r - h, t)) / h**2
    ur = (u(r + h, t) - u(r - h, t)) / (2 * h)
    assert np.max(np.abs(utt - urr - 2 / r * ur)) < 1e-4


@pytest.mark.parametrize("n,a,k,rho,tol", [(3, 0.0, 0, 1.0, 1e-6), (3, 0.75, 0, 2.0, 1e-2), (4, -0.5, 1, 1.0, 1e-2)])
def test_eigenfunction_residual(n, a, k, rho, tol):
    g = radial_grid(n, 4096, r_min=1e-3, r_max=100)
    assert eigenfunction_residual(ProblemParams(n, a), k, rho, g) <= tol


def test_simpson_weights():
    w = simpson_weights(5, 0.25)
    assert np.allclose(w, np.array([1, 4, 2, 4, 1]) * 0.25 / 3)
    with pytest.raises(ValueError):
        simpson_weights(4, 0.1)


def test_duhamel_zero_forcing(grid):
    times = np.linspace(0, 1, 9)
    inc = duhamel(ProblemParams(3, 0.75), 0, np.zeros((9, grid.N)), times, 1.0, grid)
    assert np.all(inc.b0 == 0) and np.all(inc.b1 == 0)


def manufactured(nodes, t=1.0):
    params = ProblemParams(3, 0.75)
    g = radial_grid(3, 1024, r_min=1e-3, r_max=1e3)
    rho = g.dual().r
    times = np.linspace(0, t, nodes)
    G = np.array([rho**2 * s * np.exp(-(rho**2)) for s in times])
    inc = duhamel(params, 0, G, times, t, g, spectral=True)
    exact = (t - np.sin(t * rho) / rho) * np.exp(-(rho**2))
    return l2_norm(g.dual(), inc.b0 - exact) / l2_norm(g.dual(), exact)


def test_duhamel_manufactured_and_order():
    fine, coarse = manufactured(129), manufactured(65)
    assert fine < 1e-6
    assert coarse >= 8 * fine


def test_duhamel_linear(grid):
    params = ProblemParams(3, 0.75)
    times = np.linspace(0, 2, 33)
    F1 = np.array([np.cos(s) * bump(grid.r) for s in times])
    F2 = np.array([s * bump(grid.r, 1.0) for s in times])
    a = duhamel(params, 1, F1, times, 2.0, grid)
    b = duhamel(params, 1, F2, times, 2.0, grid)
    c = duhamel(params, 1, 2 * F1 - 3 * F2, times, 2.0, grid)
    assert np.max(np.abs(c.b0 - (2 * a.b0 - 3 * b.b0))) <= 1e-12 * np.max(np.abs(c.b0))


def test_duhamel_richardson_flags_coarse_mesh(grid):
    params = ProblemParams(3, 0.75)
    times = np.linspace(0, 8, 9)
    F = np.array([np.cos(5 * s) * bump(grid.r) for s in times])
    with pytest.raises(MeshTooCoarseError):
        duhamel(params, 0, F, times, 8.0, grid, tol=1e-8)


def test_duhamel_mesh_validation(grid):
    with pytest.raises(ValueError):
        duhamel(ProblemParams(3, 0.0), 0, np.zeros((3, grid.N)), np.array([0.0, 0.3, 1.0]), 1.0, grid)


def test_decompose_cauchy_data(grid):
    quad = sphere_quadrature(3, 8, zonal=False)
    from isqwave.harmonics import basis_matrix

    B = basis_matrix(3, 8, quad.directions)
    samples = np.outer(bump(grid.r), B[:, 0]) + np.outer(bump(grid.r, 3.0), B[:, 6 * 6 + 2])
    modes, tail = decompose_cauchy_data(ProblemParams(3, 0.0), grid, samples, quad, 4)
    m0 = [m for m in modes if m.k == 0][0]
    assert np.allclose(m0.a0, bump(grid.r), atol=1e-12)
    expected_tail = l2_norm(grid, bump(grid.r, 3.0)) ** 2
    assert abs(tail - expected_tail) < 1e-10 * expected_tail


def test_export_snapshots(tmp_path, grid):
    params = ProblemParams(3, 0.75)
    spec = mode_to_spectrum(params, ModeData(0, 1, grid, bump(grid.r)))
    snaps = [synthesize_field(params, [propagate_mode(spec, t)])[0] for t in (0.0, 1.0)]
    files = export_snapshots(tmp_path, params, snaps, 0, seed=3)
    assert files == ["mode_k0_l1.csv"]
    lines = (tmp_path / files[0]).read_text().splitlines()
    assert lines[0] == "t,r,value" and len(lines) == 1 + 2 * grid.N
    man = json.loads((tmp_path / "snapshot_manifest.json").read_text())
    assert man["seed"] == 3 and man["times"] == [0.0, 1.0]
