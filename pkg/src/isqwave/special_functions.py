r"""Bessel functions of real order and their envelope bounds.

J_nu(r) is evaluated for real nu > -1 and r >= 0 by a regime split:

* power series  sum_m (-1)^m (r/2)^(nu+2m) / (m! Gamma(nu+m+1))  for small r,
  where the alternating sum loses few digits;
* the Hankel large-argument expansion

  .. math::
      J_\nu(r) = \sqrt{2/(\pi r)}\,(P\cos\omega - Q\sin\omega),\quad
      \omega = r - \nu\pi/2 - \pi/4,

  summed adaptively and only accepted once converged to ~1e-15;
* Miller backward recurrence normalised by the Gegenbauer sum
  (r/2)^nu0 = sum_k (nu0+2k) Gamma(nu0+k)/k! J_{nu0+2k}(r) everywhere else.

The Schlafli integral split is available separately (:func:`schlafli_split`)
and acts as an independent cross-check of the main evaluator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "BesselDomainError",
    "BesselOverflowError",
    "QuadratureError",
    "Regime",
    "BoundReport",
    "gamma",
    "log_gamma",
    "bessel_jv",
    "bessel_j",
    "bessel_jv_prime",
    "bessel_j_prime",
    "schlafli_split",
    "classify_regime",
    "envelope",
    "envelope_margin",
    "small_argument_bounds",
    "ENVELOPE_CONSTANTS",
    "fit_envelope_constants",
]


class BesselDomainError(ValueError):
    pass


class BesselOverflowError(OverflowError):
    pass


class QuadratureError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Gamma function

# Lanczos approximation, g = 607/128, 15 terms (P. Godfrey's coefficient set,
# the one used by Numerical Recipes 3rd ed. `gammln`). Relative error of
# Gamma(x) is below 1e-15 for x in (0, 171); log_gamma stays below 1e-13
# relative on (0, 400) away from its zeros at x = 1, 2.
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_sum(z: float) -> float:
    s = _LANCZOS_C[0]
    for i in range(1, len(_LANCZOS_C)):
        s += _LANCZOS_C[i] / (z + i)
    return s


def gamma(x: float) -> float:
    """Gamma(x) for real x > 0."""
    x = float(x)
    if not x > 0.0:
        raise BesselDomainError(f"gamma requires x > 0, got {x}")
    if x < 0.5:
        return gamma(x + 1.0) / x
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    half = 0.5 * (z + 0.5)
    # split the power so that the intermediate does not overflow near x = 171
    p = math.pow(t, half)
    val = _SQRT_2PI * _lanczos_sum(z) * p * (math.exp(-t) * p)
    if math.isinf(val):
        raise BesselOverflowError(f"gamma({x}) overflows")
    return val


def log_gamma(x: float) -> float:
    """log Gamma(x) for real x > 0."""
    x = float(x)
    if not x > 0.0:
        raise BesselDomainError(f"log_gamma requires x > 0, got {x}")
    if x < 0.5:
        return log_gamma(x + 1.0) - math.log(x)
    if x < 3.0:
        # direct product keeps relative accuracy near the zeros at 1 and 2
        return math.log(gamma(x))
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return _LOG_SQRT_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


# ---------------------------------------------------------------------------
# Bessel J, vectorised over r for a fixed order


def _check_order(nu: float) -> float:
    nu = float(nu)
    if not math.isfinite(nu) or nu <= -1.0:
        raise BesselDomainError(f"Bessel order must be finite and > -1, got {nu}")
    return nu


def _series(nu: float, r: np.ndarray) -> np.ndarray:
    half = 0.5 * r
    with np.errstate(divide="ignore"):
        log_lead = nu * np.log(half) - log_gamma(nu + 1.0)
    if np.any(log_lead > 709.0):
        raise BesselOverflowError(f"series leading term overflows for nu={nu}")
    lead = np.exp(log_lead)  # underflows cleanly to 0 for tiny r / huge nu
    x2 = -(half * half)
    term = np.ones_like(r)
    total = np.ones_like(r)
    m = 0
    while True:
        m += 1
        term = term * x2 / (m * (nu + m))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)) or m > 400:
            break
    out = lead * total
    if not np.all(np.isfinite(out)):
        raise BesselOverflowError(f"non-finite series value for nu={nu}")
    return out


def _asymptotic(nu: float, r: np.ndarray, max_terms: int = 60):
    """Hankel expansion; returns (values, converged mask)."""
    mu = 4.0 * nu * nu
    P = np.ones_like(r)
    Q = np.zeros_like(r)
    term = np.ones_like(r)
    biggest = np.ones_like(r)
    last = np.full_like(r, np.inf)
    done = np.zeros(r.shape, dtype=bool)
    for k in range(1, max_terms + 1):
        term = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * r)
        a = np.abs(term)
        grows = a > last
        done = done | grows
        contrib = np.where(done, 0.0, term)
        if k % 2 == 1:
            Q = Q + ((-1) ** ((k - 1) // 2)) * contrib
        else:
            P = P + ((-1) ** (k // 2)) * contrib
        biggest = np.maximum(biggest, np.where(done, 0.0, a))
        last = np.where(done, last, a)
        if np.all(done | (a < 1e-17)):
            break
    converged = (last < 1e-15) & (biggest < 1e3)
    # phase: omega = r - (2nu+1)pi/4, reduce the constant part exactly first
    frac = math.fmod((2.0 * nu + 1.0) / 4.0, 2.0) * math.pi
    c, s = math.cos(frac), math.sin(frac)
    cos_w = np.cos(r) * c + np.sin(r) * s
    sin_w = np.sin(r) * c - np.cos(r) * s
    val = np.sqrt(2.0 / (math.pi * r)) * (P * cos_w - Q * sin_w)
    return val, converged


def _miller(nu: float, r: np.ndarray) -> np.ndarray:
    """Backward recurrence from a high order, normalised by the Gegenbauer sum."""
    if nu >= 0.0:
        base = math.floor(nu)
        nu0 = nu - base
        m = int(base)
    else:
        nu0, m = nu, 0
    rmax = float(r.max())
    top = int(max(m, rmax) + 40 + 10.0 * max(rmax, 1.0) ** (1.0 / 3.0))
    top += top % 2  # start on an even index so weights line up
    # weights w_i for even indices i = 2k
    g = gamma(nu0 + 1.0)  # Gamma(nu0 + k)/k! at k = 1
    weights = np.zeros(top + 2)
    weights[0] = g
    for k in range(1, top // 2 + 1):
        weights[2 * k] = (nu0 + 2 * k) * g
        g *= (nu0 + k) / (k + 1)
    f_next = np.zeros_like(r)
    f_cur = np.full_like(r, 1e-300)
    norm = weights[top] * f_cur
    target = np.zeros_like(r) if m != top else f_cur.copy()
    inv_r = 1.0 / r
    for i in range(top, 0, -1):
        f_prev = 2.0 * (nu0 + i) * inv_r * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        if i - 1 == m:
            target = f_cur.copy()
        if weights[i - 1] != 0.0:
            norm = norm + weights[i - 1] * f_cur
        big = np.abs(f_cur) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            f_cur = f_cur * scale
            f_next = f_next * scale
            norm = norm * scale
            target = target * scale
    return target / norm * np.power(0.5 * r, nu0)


def _series_limit(nu: float) -> float:
    return max(8.0, min(0.5 * nu, math.sqrt(14.0 * (nu + 1.0))))


def bessel_jv(nu: float, r) -> np.ndarray:
    """J_nu evaluated at an array of arguments r >= 0 (vectorised).

    Parameters
    ----------
    nu : float
        Order, nu > -1.
    r : array_like
        Arguments, all >= 0.

    Returns
    -------
    ndarray
        J_nu(r) with the shape of ``r``.
    """
    nu = _check_order(nu)
    r = np.asarray(r, dtype=float)
    shape = r.shape
    r = r.ravel()
    if np.any(~np.isfinite(r)) or np.any(r < 0.0):
        raise BesselDomainError("Bessel argument must be finite and >= 0")
    out = np.empty_like(r)
    zero = r == 0.0
    if np.any(zero):
        if nu < 0.0:
            raise BesselOverflowError(f"J_{nu}(0) is unbounded for negative order")
        out[zero] = 1.0 if nu == 0.0 else 0.0
    lim = _series_limit(nu)
    ser = (~zero) & (r <= lim)
    if np.any(ser):
        out[ser] = _series(nu, r[ser])
    rest = (~zero) & (~ser)
    asy = rest & (r >= max(2.0 * nu, 20.0))
    if np.any(asy):
        vals, ok = _asymptotic(nu, r[asy])
        idx = np.flatnonzero(asy)
        out[idx[ok]] = vals[ok]
        rest[idx[ok]] = False
    if np.any(rest):
        idx = np.flatnonzero(rest)
        # bucket by argument size so the starting order stays modest
        bucket = np.floor(np.log2(r[idx])).astype(int)
        for b in np.unique(bucket):
            sel = idx[bucket == b]
            out[sel] = _miller(nu, r[sel])
    return out.reshape(shape)


def bessel_j(nu: float, r: float) -> float:
    """J_nu(r) for a scalar argument."""
    return float(bessel_jv(nu, np.array([r]))[0])


def bessel_jv_prime(nu: float, r) -> np.ndarray:
    """J'_nu(r) = (J_{nu-1}(r) - J_{nu+1}(r))/2, for nu > 0 and r > 0."""
    nu = _check_order(nu)
    if nu <= 0.0:
        raise BesselDomainError(f"derivative needs nu > 0 so that nu-1 > -1, got {nu}")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise BesselDomainError("derivative needs r > 0")
    return 0.5 * (bessel_jv(nu - 1.0, r) - bessel_jv(nu + 1.0, r))


def bessel_j_prime(nu: float, r: float) -> float:
    return float(bessel_jv_prime(nu, np.array([r]))[0])


# ---------------------------------------------------------------------------
# Schlafli split

_GL16 = np.polynomial.legendre.leggauss(16)


def _composite_gl(fun, a: float, b: float, panels: int) -> float:
    x, w = _GL16
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    return float(np.sum(fun(pts).reshape(panels, -1) * w[None, :] * half[:, None]))


def schlafli_split(k: float, r: float, tol: float = 1e-11, max_levels: int = 8):
    """Split J_k(r) into the oscillatory principal integral and the error term.

    Returns ``(principal, error_term)`` with J_k(r) = principal - error_term, where
    principal = (1/2pi) int_{-pi}^{pi} cos(r sin t - k t) dt and
    error_term = (sin k pi / pi) int_0^inf exp(-(r sinh s + k s)) ds.
    """
    k = float(k)
    r = float(r)
    if not r > 0.0:
        raise BesselDomainError("schlafli_split needs r > 0")
    if not k > -0.5:
        raise BesselDomainError("schlafli_split needs k > -1/2")

    # integrand is even in t, so integrate over [0, pi] and divide by pi
    def osc(t):
        return np.cos(r * np.sin(t) - k * t)

    panels = int(math.ceil(math.pi / (math.pi / (4.0 * (1.0 + r)))))
    prev = _composite_gl(osc, 0.0, math.pi, panels)
    for _ in range(max_levels):
        panels *= 2
        cur = _composite_gl(osc, 0.0, math.pi, panels)
        if abs(cur - prev) / math.pi <= tol:
            break
        prev = cur
    else:
        raise QuadratureError(f"oscillatory Schlafli integral did not converge (k={k}, r={r})")
    principal = cur / math.pi

    sk = math.sin(math.pi * k)
    if abs(sk) < 1e-15 or k == round(k):
        return principal, 0.0

    # exponent r sinh s + k s passes 40 well before s_max
    s_max = 1.0
    while r * math.sinh(s_max) + k * s_max < 45.0:
        s_max *= 2.0

    def decay(s):
        return np.exp(-(r * np.sinh(s) + k * s))

    panels = 16
    prev = _composite_gl(decay, 0.0, s_max, panels)
    for _ in range(max_levels + 4):
        panels *= 2
        cur = _composite_gl(decay, 0.0, s_max, panels)
        if abs(cur - prev) <= tol:
            break
        prev = cur
    else:
        raise QuadratureError(f"Schlafli error-term integral did not converge (k={k}, r={r})")
    return principal, sk / math.pi * cur


# ---------------------------------------------------------------------------
# Regimes and envelopes


class Regime(str, Enum):
    BELOW_TURNING = "BelowTurning"
    TRANSITION_ZONE = "TransitionZone"
    OSCILLATORY = "Oscillatory"


def classify_regime(k: float, r: float) -> Regime:
    if k < 0 or not r > 0:
        raise BesselDomainError("classify_regime needs k >= 0 and r > 0")
    if k == 0 or r >= 2.0 * k:
        return Regime.OSCILLATORY
    if r <= 0.5 * k:
        return Regime.BELOW_TURNING
    return Regime.TRANSITION_ZONE


@dataclass(frozen=True)
class BoundReport:
    k: float
    r: float
    value: float
    envelope: float
    margin: float
    regime: Regime
    advisory: bool


# Frozen constants, produced by fit_envelope_constants() on the training
# lattice (see tests/test_special_functions.py for the disjoint validation).
#   c_below     decay rate of the below-turning envelope
#   C_below     margin bound, below turning point
#   C_transition margin bound, transition zone
#   A_osc       amplitude of the r^(-1/2) oscillatory envelope
#   C_osc       margin bound, oscillatory regime
#   C_third     |J_k(r)| <= C r^(-1/3), k in [1,200], r in [1,1e4]
#   C_deriv     |J'_k(r)| <= C r^(-1/2), r >= 10
#   C_small     small-argument bounds for J and J', r <= 1
ENVELOPE_CONSTANTS = {
    "c_below": 0.1,
    "C_below": 0.28,
    "C_transition": 0.84,
    "A_osc": 0.87,
    "C_osc": 1.0,
    "C_third": 0.81,
    "C_deriv": 0.88,
    "C_small": 1.04,
}


def envelope(k: float, r: float, regime: Regime | None = None, constants=None) -> float:
    cst = ENVELOPE_CONSTANTS if constants is None else constants
    regime = classify_regime(k, r) if regime is None else regime
    if regime is Regime.BELOW_TURNING:
        return math.exp(-cst["c_below"] * (k + r))
    if regime is Regime.TRANSITION_ZONE:
        k3 = k ** (-1.0 / 3.0)
        return k3 * (k3 * abs(r - k) + 1.0) ** (-0.25)
    return cst["A_osc"] * r ** -0.5 + 1.0 / r


def envelope_margin(k: float, r: float, constants=None) -> BoundReport:
    """|J_k(r)| divided by the regime envelope; k < 5 is flagged advisory."""
    if k < 1:
        raise BesselDomainError("envelope_margin needs k >= 1")
    regime = classify_regime(k, r)
    env = envelope(k, r, regime, constants)
    val = bessel_j(k, r)
    return BoundReport(k, r, val, env, abs(val) / env, regime, k < 5)


def small_argument_bounds(k: float, r: float) -> tuple[float, float]:
    """Gamma-prefactor envelopes for |J_k(r)| and |J'_k(r)| at small r (C = 1)."""
    denom = 2.0**k * gamma(k + 0.5) * math.sqrt(math.pi)
    fac = 1.0 + 1.0 / (k + 0.5)
    return r**k / denom * fac, (k * r ** (k - 1.0) + r**k) / denom * fac


def fit_envelope_constants(ks=None, rs=None, headroom: float = 1.1) -> dict:
    """Fit the envelope constants as headroom x (worst margin) on a lattice."""
    if ks is None:
        ks = np.unique(np.round(np.geomspace(1, 200, 25), 1))
    if rs is None:
        rs = np.geomspace(0.05, 1e4, 90)
    out = dict(ENVELOPE_CONSTANTS)
    worst = {"below": 0.0, "transition": 0.0, "osc_amp": 0.0, "third": 0.0, "deriv": 0.0, "small": 0.0}
    for k in ks:
        k = float(k)
        vals = bessel_jv(k, rs)
        der = bessel_jv_prime(k, rs)
        for r, v, d in zip(rs, vals, der):
            reg = classify_regime(k, r)
            if reg is Regime.BELOW_TURNING:
                worst["below"] = max(worst["below"], abs(v) / math.exp(-out["c_below"] * (k + r)))
            elif reg is Regime.TRANSITION_ZONE:
                worst["transition"] = max(worst["transition"], abs(v) / envelope(k, r, reg))
            else:
                worst["osc_amp"] = max(worst["osc_amp"], (abs(v) - 1.0 / r) * math.sqrt(r))
            if r >= 1.0:
                worst["third"] = max(worst["third"], abs(v) * r ** (1.0 / 3.0))
            if r >= 10.0:
                worst["deriv"] = max(worst["deriv"], abs(d) * math.sqrt(r))
            if r <= 1.0 and k <= 50:
                bj, bd = small_argument_bounds(k, r)
                worst["small"] = max(worst["small"], abs(v) / bj, abs(d) / bd)
    out["C_below"] = headroom * worst["below"]
    out["C_transition"] = headroom * worst["transition"]
    out["A_osc"] = headroom * worst["osc_amp"]
    out["C_osc"] = 1.0
    out["C_third"] = headroom * worst["third"]
    out["C_deriv"] = headroom * worst["deriv"]
    out["C_small"] = headroom * worst["small"]
    return out
