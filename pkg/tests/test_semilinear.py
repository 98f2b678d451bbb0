import math
import random
from fractions import Fraction

import numpy as np
import pytest

from isqwave.hankel import hankel_apply
from isqwave.semilinear import (
    ConvergenceError,
    DataTooLargeError,
    IterationTrace,
    NonContractionError,
    SemilinearConfig,
    _data_norm,
    _spacetime_norm,
    coupling_admissible,
    coupling_threshold,
    equation_residual,
    exponent_table,
    gaussian_data,
    linear_solution,
    picard_solve,
    power_nonlinearity,
    run_manifest,
    write_trace_csv,
)
from isqwave.wave_solver import ProblemParams

SMALL = SemilinearConfig(T=8.0, dt=1.0 / 64.0, N_r=512)
P = ProblemParams(3, 1.0)
SPEC = exponent_table(3, "11/4")


def test_exponents_n3():
    s = exponent_table(3, "11/4")
    assert s.p_h == Fraction(5, 2) and s.p_conf == 3
    assert s.q0 == Fraction(7, 2) and s.r0 == Fraction(14, 11) and s.s_c == Fraction(5, 14)
    assert s.in_range


def test_exponent_identity_random():
    rnd = random.Random(4)
    for _ in range(20):
        n = rnd.randint(3, 9)
        p = 1 + Fraction(rnd.randint(1, 200), rnd.randint(1, 50))
        s = exponent_table(n, p)
        assert 1 / s.r0 - 1 / s.q0 == Fraction(2, n + 1)


def test_exponent_validation():
    with pytest.raises(ValueError):
        exponent_table(2, 3)
    with pytest.raises(ValueError):
        exponent_table(3, 1)
    with pytest.raises(ValueError):
        exponent_table(3, 2.5, sign=0)


def test_coupling_reference():
    # independent re-derivation for n = 3, p = 11/4: q0 = 7/2, r0 = 14/11
    x, y = Fraction(3) / Fraction(7, 2), Fraction(3) / Fraction(14, 11)
    terms = [Fraction(1, 4) - Fraction(1, 4), x * (x - 1), (y - 3) * (y - 2)]
    assert coupling_threshold(3, "11/4") == max(terms) == 0
    assert coupling_admissible(3, "11/4", 1)
    assert not coupling_admissible(3, "11/4", 0)
    assert coupling_admissible(3, "11/4", 10**9)


def test_coupling_strict_at_threshold():
    for n, p in ((3, "13/5"), (4, "2"), (5, "17/10")):
        t = coupling_threshold(n, p)
        assert not coupling_admissible(n, p, t)
        assert coupling_admissible(n, p, t + Fraction(1, 10**12))


def test_power_nonlinearity():
    u = np.array([-2.0, 0.0, 0.5])
    out = power_nonlinearity(u, 2.75, -1)
    assert out[1] == 0.0
    assert out[0] == pytest.approx(2.0**2.75) and out[2] == pytest.approx(-(0.5**2.75))


def test_trace_invariants():
    with pytest.raises(ValueError):
        IterationTrace([1.0], [0.5, 0.1], [0.2], [0.0])
    with pytest.raises(ValueError):
        IterationTrace([1.0], [0.5], [-0.2], [0.0])


def _data(amp, cfg=SMALL, velocity=0.0):
    g = cfg.grid(3)
    b0, b1 = gaussian_data(P, g, amp, 3.0, velocity)
    return g, b0, b1


def _unit_norm(g):
    b0, _ = gaussian_data(P, g, 1.0, 3.0)
    return _data_norm(P, g, hankel_apply(P.nu(0), g.dual(), b0, g), 0 * b0, float(SPEC.s_c))


def test_zero_data_fixed_point():
    g, b0, b1 = _data(0.0)
    sol, trace = picard_solve(P, SPEC, b0, b1, SMALL, g, spectral=True)
    assert len(trace.q0_norm) == 1 and np.all(sol.u == 0)


def test_data_too_large():
    g, b0, b1 = _data(1.0)
    with pytest.raises(DataTooLargeError):
        picard_solve(P, SPEC, b0, b1, SMALL, g, spectral=True)


def test_non_contraction_for_large_data():
    g, b0, b1 = _data(3e3)
    with np.errstate(all="ignore"), pytest.raises((NonContractionError, ConvergenceError)):
        picard_solve(P, exponent_table(3, "11/4", sign=1), b0, b1, SMALL, g, check_small=False, spectral=True)


def test_free_solution_residual_and_refinement():
    res = []
    for dt in (1 / 128, 1 / 256):
        cfg = SemilinearConfig(T=8.0, dt=dt, N_r=1024)
        g, b0, b1 = _data(1e-4, cfg)
        sol, _ = picard_solve(P, SPEC, b0, b1, cfg, g, forcing=False, spectral=True)
        res.append(equation_residual(sol))
    assert res[1] <= 1e-6
    assert 3.5 <= res[0] / res[1] <= 4.5


def test_linearization_rate():
    g = SMALL.grid(3)
    unit = _unit_norm(g)
    diffs = []
    for amp in (2e-4 / unit, 1e-4 / unit):
        _, b0, b1 = _data(amp)
        sol, _ = picard_solve(P, SPEC, b0, b1, SMALL, g, spectral=True)
        _, u_lin = linear_solution(P, g, b0, b1, SMALL.times(), spectral=True)
        diffs.append(_spacetime_norm(sol.u - u_lin, SMALL.times(), g, float(SPEC.q0), 3, True))
    assert abs(math.log2(diffs[0] / diffs[1]) - 2.75) < 0.05


def test_sign_symmetry():
    g = SMALL.grid(3)
    amp = 2e-4 / _unit_norm(g)
    _, b0, b1 = _data(amp, velocity=0.1 * amp)
    a, _ = picard_solve(P, SPEC, b0, b1, SMALL, g, spectral=True)
    b, _ = picard_solve(P, SPEC, -b0, -b1, SMALL, g, spectral=True)
    assert np.max(np.abs(a.u + b.u)) <= 1e-10 * np.max(np.abs(a.u))


def test_scaling_consistency():
    lam = 2.0
    n, p = 3, 2.75
    g = SMALL.grid(n)
    amp = 5e-4 / _unit_norm(g)
    _, b0, b1 = _data(amp)
    sol, _ = picard_solve(P, SPEC, b0, b1, SMALL, g, spectral=True)
    # u_lam(t, x) = lam^(2/(p-1)) u(lam t, lam x): grids shrink by lam, spectra rescale
    cfg = SemilinearConfig(T=SMALL.T / lam, dt=SMALL.dt / lam, N_r=SMALL.N_r)
    g2 = cfg.grid(n, scale=1.0 / lam)
    f = lam ** (2.0 / (p - 1.0) - n)
    sol2, _ = picard_solve(P, SPEC, f * b0, f * b1, cfg, g2, spectral=True)
    expect = lam ** (2.0 / (p - 1.0)) * sol.u
    assert np.max(np.abs(sol2.u - expect)) <= 1e-2 * np.max(np.abs(expect))


def test_trace_csv_and_manifest(tmp_path):
    g = SMALL.grid(3)
    amp = 5e-4 / _unit_norm(g)
    _, b0, b1 = _data(amp)
    _, trace = picard_solve(P, SPEC, b0, b1, SMALL, g, spectral=True)
    text = write_trace_csv(trace, tmp_path / "trace.csv")
    lines = text.splitlines()
    assert lines[0] == "iter,q0_norm,diff_norm,ratio,residual"
    assert len(lines) == 1 + len(trace.q0_norm)
    assert (tmp_path / "trace.csv").read_bytes() == text.encode()
    man = run_manifest(P, SPEC, SMALL, g)
    assert man["nonlinearity"]["q0"] == "7/2" and man["window"] == [0.0, 8.0]
