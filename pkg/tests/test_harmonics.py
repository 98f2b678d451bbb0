import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isqwave.harmonics import (
    HARMONIC_CONSTANTS,
    AngularSpectrum,
    DegreeOverflowError,
    addition_theorem_defect,
    analyze,
    basis_matrix,
    bernstein_ratio,
    dim_harmonic,
    lp_stein_ratio,
    lq_norm,
    sphere_area,
    sphere_quadrature,
    synthesize,
    zonal_harmonics,
)


def real_harmonic_oracle(k, m, x, psi):
    """Real orthonormal Y_k^m from library associated Legendre functions (no phase)."""
    am = abs(m)
    norm = mp.sqrt((2 * k + 1) / (4 * mp.pi) * mp.factorial(k - am) / mp.factorial(k + am))
    p = (-1) ** am * mp.legenp(k, am, x)
    if m == 0:
        return float(norm * p)
    trig = mp.cos(am * psi) if m > 0 else mp.sin(am * psi)
    return float(mp.sqrt(2) * norm * p * trig)


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def test_dim_harmonic():
    assert dim_harmonic(3, 0) == 1
    assert dim_harmonic(3, 2) == 5
    assert dim_harmonic(4, 3) == math.comb(6, 3) - math.comb(4, 1)


def test_sphere_area():
    assert abs(sphere_area(3) - 4 * math.pi) < 1e-14
    assert abs(sphere_area(4) - 2 * math.pi**2) < 1e-13


@pytest.mark.parametrize("k,m", [(0, 0), (1, 1), (2, -1), (5, 3), (7, -7), (12, 4)])
def test_basis_against_oracle(k, m):
    rng = np.random.default_rng(k * 31 + m)
    dirs = rng.standard_normal((5, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    B = basis_matrix(3, k, dirs)
    for i, d in enumerate(dirs):
        x, psi = d[2], math.atan2(d[1], d[0])
        assert abs(B[i, k * k + k + m] - real_harmonic_oracle(k, m, x, psi)) < 1e-12


def test_analyze_single_harmonic():
    quad = sphere_quadrature(3, 6, zonal=False)
    f = basis_matrix(3, 6, quad.directions)[:, 2 * 2 + 0]  # Y_{2,1}
    spec = analyze(f, quad)
    e = np.zeros_like(spec.coeffs)
    e[4] = 1.0
    assert np.max(np.abs(spec.coeffs - e)) < 1e-12


@pytest.mark.parametrize("n", [3, 4, 5])
def test_analyze_constant(n):
    quad = sphere_quadrature(n, 4)
    spec = analyze(np.ones(len(quad.weights)), quad)
    assert abs(spec.coeffs[0] - math.sqrt(sphere_area(n))) < 1e-12
    assert np.max(np.abs(spec.coeffs[1:])) < 1e-12


@pytest.mark.parametrize("n", [3, 4])
def test_synthesize_unit_constant(n):
    k_max = 3
    size = (k_max + 1) ** 2 if n == 3 else k_max + 1
    c = np.zeros(size)
    c[0] = 1.0
    spec = AngularSpectrum(n, k_max, c, n != 3)
    dirs = sphere_quadrature(n, 3).directions
    assert np.allclose(synthesize(spec, dirs), sphere_area(n) ** -0.5, atol=1e-14)


def test_parseval_and_round_trip(rng):
    quad = sphere_quadrature(3, 20, zonal=False)
    c = rng.standard_normal(21 * 21)
    spec = AngularSpectrum(3, 20, c, False)
    f = synthesize(spec, quad.directions)
    assert abs(np.sum(quad.weights * f**2) - spec.energy()) <= 1e-9 * spec.energy()
    back = analyze(f, quad)
    assert np.max(np.abs(back.coeffs - c)) < 1e-9


def test_linearity(rng):
    a, b = np.zeros(16), np.zeros(16)
    a[5], b[11] = 0.7, -1.3
    dirs = rng.standard_normal((9, 3))
    both = synthesize(AngularSpectrum(3, 3, a + b, False), dirs)
    parts = synthesize(AngularSpectrum(3, 3, a, False), dirs) + synthesize(AngularSpectrum(3, 3, b, False), dirs)
    assert np.allclose(both, parts, atol=1e-14)


def test_zonal_orthonormal():
    for n in (4, 5, 7):
        quad = sphere_quadrature(n, 12)
        Y = zonal_harmonics(n, 12, quad.x)
        G = (Y * quad.weights) @ Y.T
        assert np.max(np.abs(G - np.eye(13))) < 1e-10


def test_degree_overflow():
    quad = sphere_quadrature(3, 4, zonal=False)
    with pytest.raises(DegreeOverflowError):
        analyze(np.ones(len(quad.weights)), quad, k_max=5)


def test_addition_theorem():
    assert addition_theorem_defect(3, 0, _unit([0.3, 0.1, 0.9])) < 1e-12
    assert addition_theorem_defect(3, 5, np.array([0.0, 0.0, 1.0])) < 1e-10


@settings(max_examples=25, deadline=None)
@given(k=st.integers(0, 40), v=st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: sum(x * x for x in v) > 1e-2))
def test_addition_theorem_random(k, v):
    assert addition_theorem_defect(3, k, _unit(v)) < 1e-10


def test_addition_theorem_oracle_sum():
    d = _unit([0.2, -0.5, 0.4])
    x, psi = d[2], math.atan2(d[1], d[0])
    total = sum(real_harmonic_oracle(5, m, x, psi) ** 2 for m in range(-5, 6))
    assert abs(total - 11 / (4 * math.pi)) < 1e-12


@pytest.mark.parametrize("j", [0, 2, 4])
def test_bernstein_q2_is_one(rng, j):
    lo, hi = 2**j, 2 ** (j + 1)
    c = np.zeros((hi + 1) ** 2)
    c[lo * lo :] = rng.standard_normal((hi + 1) ** 2 - lo * lo)
    assert abs(bernstein_ratio(AngularSpectrum(3, hi, c, False), j, 2.0) - 1.0) < 1e-9


def test_bernstein_q64_bounded(rng):
    c = np.zeros(17 * 17)
    c[64:] = rng.standard_normal(17 * 17 - 64)
    assert bernstein_ratio(AngularSpectrum(3, 16, c, False), 3, 64.0) <= HARMONIC_CONSTANTS["C_bern"]


def test_bernstein_single_coefficient():
    j, k = 2, 4
    c = np.zeros(9 * 9)
    c[k * k] = 1.0  # Y_{4,1}
    quad = sphere_quadrature(3, 40, zonal=False)
    vals = basis_matrix(3, 8, quad.directions)[:, k * k]
    direct = lq_norm(vals, quad, 6.0) / 2.0 ** (j * 2 * (0.5 - 1 / 6))
    assert abs(bernstein_ratio(AngularSpectrum(3, 8, c, False), j, 6.0) - direct) < 1e-10


def test_lp_stein_p2_near_parseval(rng):
    quad = sphere_quadrature(3, 48, zonal=False)
    c = rng.standard_normal(17 * 17)
    f = synthesize(AngularSpectrum(3, 16, c, False), quad.directions)
    lo, hi = lp_stein_ratio(f, quad, 2.0)
    assert 0.5 <= lo <= 2.0 and 0.5 <= hi <= 2.0


def test_lp_stein_ensemble_p4(rng):
    quad = sphere_quadrature(3, 48, zonal=False)
    for _ in range(3):
        c = rng.standard_normal(17 * 17)
        f = synthesize(AngularSpectrum(3, 16, c, False), quad.directions)
        assert max(lp_stein_ratio(f, quad, 4.0)) <= HARMONIC_CONSTANTS["C_lp_stein"]


def test_lp_stein_rejects_p():
    quad = sphere_quadrature(3, 4, zonal=False)
    with pytest.raises(ValueError):
        lp_stein_ratio(np.ones(len(quad.weights)), quad, 10.0)
