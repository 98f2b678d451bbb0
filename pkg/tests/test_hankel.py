import math

import numpy as np
import pytest
from scipy.integrate import quad

from isqwave.hankel import (
    DyadicRangeError,
    RadialProfile,
    almost_orthogonality_norm,
    apply_A_nu,
    conjugate_K,
    diagonalization_defect,
    dyadic_beta,
    hankel_apply,
    hankel_convolution_kernel,
    hankel_transform,
    k_norm_probe,
    l2_norm,
    multiplier_L_j,
    project_dyadic,
    radial_grid,
    square_function,
)
from isqwave.special_functions import bessel_jv


@pytest.fixture(scope="module")
def grid():
    return radial_grid(3, 2048)


def bump(grid, c=2.0, w=0.5):
    return np.exp(-(((grid.r - c) / w) ** 2))


def test_sine_transform_closed_form(grid):
    # n = 3, nu = 1/2: H f(rho) = sqrt(2/pi) int sin(r rho)/(r rho) f(r) r^2 dr
    f = np.exp(-grid.r**2 / 2)
    F = hankel_apply(0.5, grid, f)
    for rho in (0.3, 1.0, 2.5, 4.0):
        i = np.searchsorted(grid.dual().r, rho)
        rr = grid.dual().r[i]
        ref = math.sqrt(2 / math.pi) * quad(lambda r: math.sin(r * rr) / (r * rr) * math.exp(-r * r / 2) * r * r, 0, 40, limit=400, epsabs=1e-14)[0]
        assert abs(F[i] - ref) < 1e-8


def test_fine_trapezoid_oracle(grid):
    f = np.exp(-grid.r**2 / 2)
    F = hankel_apply(0.5, grid, f)
    r = np.linspace(1e-6, 40, 400001)
    for i in (900, 1024, 1200):
        rho = grid.dual().r[i]
        ref = math.sqrt(2 / math.pi) * np.trapezoid(np.sinc(r * rho / math.pi) * np.exp(-r * r / 2) * r * r, r)
        assert abs(F[i] - ref) < 1e-8


def test_zero_maps_to_zero(grid):
    assert np.all(hankel_apply(1.3, grid, np.zeros(grid.N)) == 0)
    assert np.all(apply_A_nu(1.3, RadialProfile(grid, np.zeros(grid.N))).values == 0)
    assert diagonalization_defect(1.3, RadialProfile(grid, np.zeros(grid.N))) == 0.0


@pytest.mark.parametrize("nu", [0.5, 1.0, 2.5, 7.0])
def test_self_inverse_and_isometry(grid, nu):
    f = bump(grid)
    F = hankel_apply(nu, grid, f)
    back = hankel_apply(nu, grid.dual(), F, grid)
    nf = l2_norm(grid, f)
    assert l2_norm(grid, back - f) / nf < 1e-3
    assert abs(l2_norm(grid.dual(), F) - nf) / nf < 1e-3


def test_self_adjoint(grid):
    f, g = bump(grid), bump(grid.dual(), 1.0, 0.3)
    lhs = np.sum(grid.dual().weights * hankel_apply(1.5, grid, f) * g)
    rhs = np.sum(grid.weights * f * hankel_apply(1.5, grid.dual(), g, grid))
    assert abs(lhs - rhs) < 1e-8 * l2_norm(grid, f) * l2_norm(grid.dual(), g)


def test_transform_profile(grid):
    P = hankel_transform(0.5, RadialProfile(grid, bump(grid)))
    assert P.grid == grid.dual()


def test_A_nu_on_eigenfunction(grid):
    # n = 3, nu = 1/2: sin(r)/r has eigenvalue 1
    g = radial_grid(3, 2048, r_min=1e-2, r_max=30)
    f = np.sin(g.r) / g.r
    Af = apply_A_nu(0.5, RadialProfile(g, f), check=False).values
    inner = slice(2, -2)
    assert np.max(np.abs(Af[inner] - f[inner])) < 1e-6


def test_A_nu_phi_rho():
    g = radial_grid(3, 4096, r_min=0.05, r_max=20)
    nu, rho = 1.0, 2.0
    phi = (rho * g.r) ** -0.5 * bessel_jv(nu, rho * g.r)
    Af = apply_A_nu(nu, RadialProfile(g, phi), check=False).values
    inner = slice(2, -2)
    assert np.linalg.norm(Af[inner] - rho**2 * phi[inner]) / np.linalg.norm(rho**2 * phi[inner]) < 1e-2


def test_diagonalization_and_refinement(grid):
    d1 = diagonalization_defect(0.5, RadialProfile(grid, bump(grid)))
    fine = grid.refined()
    d2 = diagonalization_defect(0.5, RadialProfile(fine, bump(fine)))
    assert d1 <= 1e-2
    assert d1 >= 2 * d2


def test_conjugate_identity(grid):
    f = bump(grid)
    Kf = conjugate_K(1.5, 1.5, RadialProfile(grid, f)).values
    assert l2_norm(grid, Kf - f) / l2_norm(grid, f) < 1e-3


def test_conjugate_is_composition(grid):
    f = bump(grid)
    Kf = conjugate_K(0.5, 1.5, RadialProfile(grid, f)).values
    seq = hankel_apply(0.5, grid.dual(), hankel_apply(1.5, grid, f), grid)
    assert np.allclose(Kf, seq, atol=1e-14)


def test_k_norm_probe(grid):
    ens = [bump(grid, c, w) for c, w in ((1.0, 0.3), (2.0, 0.5), (3.5, 0.8))]
    ratio, inside = k_norm_probe(0.5, 2.0, 0.0, ens, grid)
    assert abs(ratio - 1.0) < 1e-3 and inside
    ratio, inside = k_norm_probe(1.0, 2.0, 0.0, ens, grid)
    assert ratio < 2.0 and inside


def test_dyadic_partition_of_unity():
    rho = np.geomspace(1e-2, 1e2, 500)
    total = sum(dyadic_beta(rho, j) for j in range(-12, 14))
    assert np.allclose(total, 1.0, atol=1e-14)
    assert np.all(dyadic_beta(np.array([0.49, 2.01]), 0) == 0)


def test_projectors_sum(grid):
    f = bump(grid)
    pf = RadialProfile(grid, f)
    lo, hi = -8, 12
    total = sum(project_dyadic(1.0, j, pf).values for j in range(lo, hi + 1))
    assert l2_norm(grid, total - f) / l2_norm(grid, f) < 1e-3


def test_projector_disjoint_support(grid):
    dual = grid.dual()
    F = np.exp(-(((dual.r - 1.5) / 0.1) ** 2)) * ((dual.r > 1.05) & (dual.r < 1.95))
    f = hankel_apply(1.0, dual, F, grid)
    p5 = project_dyadic(1.0, 5, RadialProfile(grid, f)).values
    assert l2_norm(grid, p5) / l2_norm(grid, f) < 1e-6


def test_projector_range(grid):
    with pytest.raises(DyadicRangeError):
        project_dyadic(1.0, 30, RadialProfile(grid, bump(grid)))


def test_multiplier_symbol(grid):
    f = bump(grid)
    L = multiplier_L_j(1.5, 1, RadialProfile(grid, f)).values
    lhs = hankel_apply(1.5, grid, L)
    rhs = dyadic_beta(grid.dual().r, 1) * hankel_apply(1.5, grid, f)
    assert l2_norm(grid.dual(), lhs - rhs) < 1e-6 * l2_norm(grid.dual(), rhs)


def test_square_function_l2(grid):
    assert square_function(1.5, RadialProfile(grid, bump(grid)), 2.0) <= 1.1


def test_square_function_p4(grid):
    for c, w in ((1.0, 0.3), (2.0, 0.5), (3.5, 0.8)):
        assert square_function(1.5, RadialProfile(grid, bump(grid, c, w)), 4.0) < 3.0


def test_almost_orthogonality_a0():
    g = radial_grid(3, 2048)
    for jp in (2, 3, -2):
        assert almost_orthogonality_norm(0.5, 0.5, 0, jp, g) <= 1e-6


def test_almost_orthogonality_diagonal():
    g = radial_grid(3, 1024)
    v = almost_orthogonality_norm(0.5, 1.0, 0, 0, g)
    assert 0.5 < v <= 1.1


def test_kernel_symmetry():
    a = hankel_convolution_kernel(0.5, 1.0, 1.3, 0.8)
    b = hankel_convolution_kernel(0.5, 1.3, 1.0, 0.8)
    c = hankel_convolution_kernel(0.5, 1.0, 0.8, 1.3)
    assert abs(a - b) < 1e-10 * abs(a) and abs(a - c) < 1e-10 * abs(a)


@pytest.mark.filterwarnings("ignore::isqwave.hankel.SlowDecayWarning")
def test_kernel_support_half_order():
    inside = abs(hankel_convolution_kernel(0.5, 1.0, 1.0, 1.0))
    outside = abs(hankel_convolution_kernel(0.5, 1.0, 1.0, 3.0))
    assert outside < 0.05 * inside
