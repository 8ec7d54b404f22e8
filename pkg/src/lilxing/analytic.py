"""Exact and asymptotic formulas for small-time boundary crossings.

Everything here is deterministic closed-form math plus one numerical
quadrature. The working objects:

* ``lil_scale``: h(u) = sqrt(2 u loglog(1/u)), the iterated-logarithm scaling
  of Brownian suprema near time zero.
* ``Boundary``: the moving barrier psi_a(u) = q(1/a) sqrt(a) h(u/a) hit by a
  Brownian path, with its derivative and the tangent-intercept functional
  Lambda_a(u) = psi_a(u) - u psi_a'(u).
* ``lerche_density``: the leading-order hitting-time density
  Lambda_a(u) u^{-3/2} n(psi_a(u)/sqrt(u)), valid as a grows (the relative
  error term is not modeled; every consumer treats this as asymptotic).
* ``crossing_prob_quadrature``: integrates that density over the unit
  horizon after the substitution x = log(a/u), which turns a 1/u-singular
  integrand into a smooth, log-polynomially decaying one on [log a, inf).
* ``rate_function`` / ``rate_inf``: the large-deviations rate
  J(x) = (x/sigma0)^2 - 1 on [sigma0, inf), +inf below, with interval infima.
* reflection-principle oracles used to calibrate Monte Carlo discretization.

Domain conventions: h requires u < 1/e; "scaled" times additionally require
t < e^-e so that L = loglog(1/t) > 1. The onset of the asymptotic regime is
not pinned by theory, so these cutoffs are the library's fixed, documented
choice.

All functions accept floats or NumPy arrays and are pure; they are safe to
call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "DomainError",
    "QuadratureError",
    "DeviationLevel",
    "ScaledTime",
    "Boundary",
    "RateFunctionValue",
    "LercheConditionReport",
    "lil_scale",
    "lil_scale_deriv",
    "gaussian_density",
    "gaussian_cdf",
    "rate_function",
    "rate_inf",
    "boundary_psi",
    "boundary_psi_prime",
    "boundary_lambda",
    "lerche_density",
    "strassen_density",
    "invert_boundary",
    "crossing_prob_quadrature",
    "lerche_mass",
    "tail_integral_closed_form",
    "crossing_prob_asymptotic",
    "reflection_sup_tail",
    "reflection_lower_bound",
    "lerche_condition_check",
    "E_INV",
    "E_E_INV",
]

E_INV = math.exp(-1.0)     # upper end of the h domain
E_E_INV = math.exp(-math.e)  # upper end of the "scaled time" domain (L > 1)


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved relative error ~{achieved:.3e})")
        self.achieved = achieved


# ---------------------------------------------------------------------------
# scaling function h and friends
# ---------------------------------------------------------------------------

def lil_scale(u):
    """h(u) = sqrt(2 u loglog(1/u)) for 0 < u < 1/e."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= E_INV):
        raise DomainError("lil_scale requires 0 < u < 1/e")
    out = np.sqrt(2.0 * u * np.log(np.log(1.0 / u)))
    return float(out) if np.ndim(out) == 0 else out


def lil_scale_deriv(u):
    """Exact derivative h'(u) = (loglog(1/u) - 1/log(1/u)) / h(u)."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= E_INV):
        raise DomainError("lil_scale_deriv requires 0 < u < 1/e")
    ell = np.log(1.0 / u)
    out = (np.log(ell) - 1.0 / ell) / np.sqrt(2.0 * u * np.log(ell))
    return float(out) if np.ndim(out) == 0 else out


def gaussian_density(x):
    """Standard normal density n(x) = exp(-x^2/2) / sqrt(2 pi)."""
    x = np.asarray(x, dtype=float)
    out = np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    return float(out) if np.ndim(out) == 0 else out


# Rational approximations for erf/erfc (Cody's three-interval scheme, max
# relative error below 1e-15 in double precision). Kept in-house so the
# normal CDF has an implementation independent of the quadrature oracle the
# tests integrate against.
_ERF_A = (3.16112374387056560e0, 1.13864154151050156e2, 3.77485237685302021e2,
          3.20937758913846947e3, 1.85777706184603153e-1)
_ERF_B = (2.36012909523441209e1, 2.44024637934444173e2, 1.28261652607737228e3,
          2.84423683343917062e3)
_ERF_C = (5.64188496988670089e-1, 8.88314979438837594e0, 6.61191906371416295e1,
          2.98635138197400131e2, 8.81952221241769090e2, 1.71204761263407058e3,
          2.05107837782607147e3, 1.23033935479799725e3, 2.15311535474403846e-8)
_ERF_D = (1.57449261107098347e1, 1.17693950891312499e2, 5.37181101862009858e2,
          1.62138957456669019e3, 3.29079923573345963e3, 4.36261909014324716e3,
          3.43936767414372164e3, 1.23033935480374942e3)
_ERF_P = (3.05326634961232344e-1, 3.60344899949804439e-1, 1.25781726111229246e-1,
          1.60837851487422766e-2, 6.58749161529837803e-4, 1.63153871373020978e-2)
_ERF_Q = (2.56852019228982242e0, 1.87295284992346047e0, 5.27905102951428412e-1,
          6.05183413124413191e-2, 2.33520497626869185e-3)


def _erfc(x):
    """Complementary error function via Cody's rational approximations."""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    out = np.empty_like(ax)

    small = ax <= 0.46875
    if np.any(small):
        z = x[small] * x[small]
        num = _ERF_A[4] * z
        den = z
        for i in range(3):
            num = (num + _ERF_A[i]) * z
            den = (den + _ERF_B[i]) * z
        erf = x[small] * (num + _ERF_A[3]) / (den + _ERF_B[3])
        out[small] = 1.0 - erf

    mid = (ax > 0.46875) & (ax <= 4.0)
    if np.any(mid):
        y = ax[mid]
        num = _ERF_C[8] * y
        den = y
        for i in range(7):
            num = (num + _ERF_C[i]) * y
            den = (den + _ERF_D[i]) * y
        r = (num + _ERF_C[7]) / (den + _ERF_D[7])
        ysq = np.floor(y * 16.0) / 16.0
        out[mid] = np.exp(-ysq * ysq) * np.exp(-(y - ysq) * (y + ysq)) * r

    large = ax > 4.0
    if np.any(large):
        y = ax[large]
        z = 1.0 / (y * y)
        num = _ERF_P[5] * z
        den = z
        for i in range(4):
            num = (num + _ERF_P[i]) * z
            den = (den + _ERF_Q[i]) * z
        r = z * (num + _ERF_P[4]) / (den + _ERF_Q[4])
        r = (1.0 / math.sqrt(math.pi) - r) / y
        ysq = np.floor(y * 16.0) / 16.0
        with np.errstate(under="ignore"):
            out[large] = np.exp(-ysq * ysq) * np.exp(-(y - ysq) * (y + ysq)) * r

    neg = x < -0.46875
    out[neg] = 2.0 - out[neg]
    return out


def gaussian_cdf(x):
    """Standard normal CDF, absolute error below 1e-12 on |x| <= 8.

    Implemented as erfc(-x/sqrt(2))/2 with an in-house rational erfc; the
    test suite validates it against direct quadrature of gaussian_density.
    """
    x = np.asarray(x, dtype=float)
    out = 0.5 * _erfc(-x / math.sqrt(2.0))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

def _zero(t: float) -> float:
    return 0.0


@dataclass(frozen=True)
class DeviationLevel:
    """Deviation parameters: epsilon, sigma0, and the vanishing perturbation d.

    ``q(t) = sqrt(1 + epsilon + d(t))`` is the boundary level actually used;
    d defaults to the zero function and must keep 1 + epsilon + d(t) > 0.
    """

    epsilon: float
    sigma0: float = 1.0
    d: Callable[[float], float] = field(default=_zero)

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise DomainError("epsilon must be > 0")
        if not self.sigma0 > 0.0:
            raise DomainError("sigma0 must be > 0")

    def q(self, t: float) -> float:
        """sqrt(1 + epsilon + d(t))."""
        val = 1.0 + self.epsilon + self.d(t)
        if not val > 0.0:
            raise DomainError(f"1 + epsilon + d(t) = {val} <= 0 at t={t}")
        return math.sqrt(val)

    def q_squared(self, t: float) -> float:
        val = 1.0 + self.epsilon + self.d(t)
        if not val > 0.0:
            raise DomainError(f"1 + epsilon + d(t) = {val} <= 0 at t={t}")
        return val


@dataclass(frozen=True)
class ScaledTime:
    """A small time t together with a = 1/t and L = loglog(1/t).

    The strict constructor requires t < e^-e (so L > 1); pass strict=False
    to allow e^-e <= t < 1/e when only loglog-definedness is needed.
    """

    t: float
    a: float = field(init=False)
    loglog: float = field(init=False)
    strict: bool = True

    def __post_init__(self):
        limit = E_E_INV if self.strict else E_INV
        if not 0.0 < self.t < limit:
            raise DomainError(
                f"t={self.t} outside (0, {limit:.6g}) "
                f"({'e^-e' if self.strict else '1/e'} cutoff)"
            )
        object.__setattr__(self, "a", 1.0 / self.t)
        object.__setattr__(self, "loglog", math.log(math.log(self.a)))


def _as_scaled_time(t) -> ScaledTime:
    return t if isinstance(t, ScaledTime) else ScaledTime(float(t))


@dataclass(frozen=True)
class Boundary:
    """The moving barrier psi_a(u) = q(1/a) sqrt(a) h(u/a) on (0, t1).

    ``alpha`` is the exponent used by the monotonicity condition check and
    must lie in (1/2, 1); ``t1`` is the hitting horizon (fixed to 1 in all
    shipped experiments).
    """

    level: DeviationLevel
    a: float
    alpha: float = 0.75
    t1: float = 1.0

    def __post_init__(self):
        if not self.a > 0.0:
            raise DomainError("a must be > 0")
        if not 0.0 < self.t1:
            raise DomainError("t1 must be > 0")

    @property
    def q(self) -> float:
        """q evaluated at t = 1/a (fixed along the boundary)."""
        return self.level.q(1.0 / self.a)

    def admissible(self, u) -> None:
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0.0) or np.any(u / self.a >= E_INV):
            raise DomainError("boundary requires 0 < u/a < 1/e")


@dataclass(frozen=True)
class RateFunctionValue:
    """Value of the rate function; +inf encodes 'impossible deviation'."""

    value: float

    def __float__(self) -> float:
        return self.value

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


# ---------------------------------------------------------------------------
# rate function
# ---------------------------------------------------------------------------

def rate_function(x: float, sigma0: float) -> RateFunctionValue:
    """J(x) = (x/sigma0)^2 - 1 for x >= sigma0, +inf below sigma0."""
    if not sigma0 > 0.0:
        raise DomainError("sigma0 must be > 0")
    if x < sigma0:
        return RateFunctionValue(math.inf)
    return RateFunctionValue((x / sigma0) ** 2 - 1.0)


def rate_inf(intervals, sigma0: float) -> float:
    """Infimum of the rate function over an interval or union of intervals.

    Each interval is an (lo, hi) pair with lo <= hi (closed; +-inf allowed).
    Uses monotonicity: on [sigma0, inf) the rate increases, so the infimum
    over [lo, hi] sits at max(lo, sigma0) unless hi < sigma0 (then +inf).
    """
    if not sigma0 > 0.0:
        raise DomainError("sigma0 must be > 0")
    if isinstance(intervals, tuple) and len(intervals) == 2 and np.isscalar(intervals[0]):
        intervals = [intervals]
    intervals = list(intervals)
    if not intervals:
        raise DomainError("rate_inf over an empty set")
    best = math.inf
    for lo, hi in intervals:
        if lo > hi:
            raise DomainError(f"interval [{lo}, {hi}] is empty")
        if hi < sigma0:
            continue
        best = min(best, rate_function(max(lo, sigma0), sigma0).value)
    return best


# ---------------------------------------------------------------------------
# boundary, hitting density, time inversion
# ---------------------------------------------------------------------------

def boundary_psi(b: Boundary, u):
    """psi_a(u) = q(1/a) sqrt(a) h(u/a)."""
    b.admissible(u)
    u = np.asarray(u, dtype=float)
    out = b.q * math.sqrt(b.a) * lil_scale(u / b.a)
    return float(out) if np.ndim(out) == 0 else out


def boundary_psi_prime(b: Boundary, u):
    """psi_a'(u) = q(1/a) h'(u/a) / sqrt(a)."""
    b.admissible(u)
    u = np.asarray(u, dtype=float)
    out = b.q * lil_scale_deriv(u / b.a) / math.sqrt(b.a)
    return float(out) if np.ndim(out) == 0 else out


def boundary_lambda(b: Boundary, u):
    """Lambda_a(u) = psi_a(u) - u psi_a'(u), the tangent intercept at u.

    Computed as the literal difference; ``_boundary_lambda_closed_form``
    (q sqrt(u) (loglog(a/u) + 1/log(a/u)) / sqrt(2 loglog(a/u))) is the
    independent algebraic route used as an internal consistency check.
    """
    b.admissible(u)
    u = np.asarray(u, dtype=float)
    out = boundary_psi(b, u) - u * boundary_psi_prime(b, u)
    return float(out) if np.ndim(out) == 0 else out


def _boundary_lambda_closed_form(b: Boundary, u):
    u = np.asarray(u, dtype=float)
    ell = np.log(b.a / u)
    big_l = np.log(ell)
    out = b.q * np.sqrt(u) * (big_l + 1.0 / ell) / np.sqrt(2.0 * big_l)
    return float(out) if np.ndim(out) == 0 else out


def lerche_density(b: Boundary, u):
    """Leading-order hitting-time density Lambda_a(u) u^{-3/2} n(psi_a/sqrt u).

    The neglected relative error vanishes as a grows, uniformly on (0, t1);
    callers must treat values as asymptotic approximations, and the total
    mass over (0, t1) is less than one (the hitting time is defective).
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u >= b.t1):
        raise DomainError("lerche_density requires 0 < u < t1")
    out = boundary_lambda(b, u) * u ** (-1.5) * gaussian_density(boundary_psi(b, u) / np.sqrt(u))
    return float(out) if np.ndim(out) == 0 else out


def invert_boundary(t: float, level: DeviationLevel):
    """Large-time boundary phi(v) = sqrt(1+eps) v h(1/v) from time inversion.

    Returns (phi, meta): phi is a callable on v > e, and meta records the
    event identity it encodes -- the LIL-scaled supremum before time t
    exceeding sqrt(1+eps) is the same event as the last crossing time of phi
    lying beyond 1/t.
    """
    root = math.sqrt(1.0 + level.epsilon)

    def phi(v):
        v = np.asarray(v, dtype=float)
        if np.any(v <= math.e):
            raise DomainError("inverted boundary requires v > e")
        out = root * v * lil_scale(1.0 / v)
        return float(out) if np.ndim(out) == 0 else out

    meta = {
        "threshold": root,
        "inverse_horizon": 1.0 / t,
        "event": "sup_{0<u<t} W_u/h(u) >= sqrt(1+eps)  <=>  "
                 "sup{v : W_v >= phi(v)} >= 1/t",
    }
    return phi, meta


def strassen_density(s, level: DeviationLevel):
    """Asymptotic density phi'(s) (2 pi s)^{-1/2} exp(-phi(s)^2 / 2s).

    This is the large-s density of the last crossing time of the inverted
    boundary phi(v) = sqrt(1+eps) v h(1/v); note phi(s)^2/(2s) equals
    (1+eps) loglog(s) exactly, so the density decays like (log s)^{-(1+eps)}
    up to slowly varying factors. The possible atom at zero of the crossing
    time is irrelevant at this order and is not modeled.
    """
    s = np.asarray(s, dtype=float)
    if np.any(1.0 / s >= E_INV):
        raise DomainError("strassen_density requires 1/s < 1/e")
    root = math.sqrt(1.0 + level.epsilon)
    # phi'(s) = sqrt(1+eps) [h(1/s) - h'(1/s)/s], by the product/chain rule
    phi_prime = root * (lil_scale(1.0 / s) - lil_scale_deriv(1.0 / s) / s)
    exponent = (1.0 + level.epsilon) * np.log(np.log(s))
    out = phi_prime / np.sqrt(2.0 * math.pi * s) * np.exp(-exponent)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# crossing probability: quadrature and closed forms
# ---------------------------------------------------------------------------

def _lerche_integrand_x(x, q_sq: float):
    """Transformed integrand after u = a e^{-x}.

    With ell = log(a/u) = x and L = log x, the hitting density in x is
    q/(2 sqrt(pi)) (L + 1/x) L^{-1/2} x^{-q^2}, smooth on [log a, inf).
    """
    x = np.asarray(x, dtype=float)
    big_l = np.log(x)
    q = math.sqrt(q_sq)
    return q / (2.0 * math.sqrt(math.pi)) * (big_l + 1.0 / x) / np.sqrt(big_l) * x ** (-q_sq)


def _transformed_tail_bound(x_from: float, q_sq: float) -> float:
    """Closed-form majorant of the transformed integrand's tail.

    For x >= x_from > e^{1/(q^2-1)} the integrand is bounded by
    m(x_from) x^{-(1+beta)} with beta = (q^2-1)/2, whose tail integral is
    the same antiderivative as tail_integral_closed_form evaluated in the
    substituted variable: m(x_from) x_from^{-beta} / beta.
    """
    beta = 0.5 * (q_sq - 1.0)
    if beta <= 0.0:
        return math.inf
    if x_from <= math.exp(1.0 / (2.0 * beta)):
        return math.inf
    big_l = math.log(x_from)
    q = math.sqrt(q_sq)
    m = q / (2.0 * math.sqrt(math.pi)) * (big_l + 1.0 / x_from) / math.sqrt(big_l) \
        * x_from ** (-q_sq + 1.0 + beta)
    return m * x_from ** (-beta) / beta


def _integrate_transformed(x_lo: float, x_hi: float, q_sq: float,
                           rel_tol: float = 1e-8) -> float:
    """Adaptive quadrature of the transformed integrand over [x_lo, x_hi].

    Splits into geometric panels (the integrand lives on multiplicative
    scales) and runs adaptive Gauss-Kronrod on each. x_hi = inf truncates
    where the analytic tail majorant contributes < rel_tol of the total.
    """
    if not x_lo > 1.0:
        raise DomainError("transformed integral requires log(a/u_hi) > 1")
    total = 0.0
    err = 0.0
    lo = x_lo
    if math.isfinite(x_hi):
        panels_done = lo >= x_hi
    else:
        panels_done = False
    while not panels_done:
        hi = min(2.0 * lo, x_hi) if math.isfinite(x_hi) else 2.0 * lo
        val, abserr = integrate.quad(
            _lerche_integrand_x, lo, hi, args=(q_sq,), epsabs=0.0, epsrel=rel_tol, limit=200
        )
        total += val
        err += abserr
        lo = hi
        if math.isfinite(x_hi):
            panels_done = lo >= x_hi
        else:
            tail = _transformed_tail_bound(lo, q_sq)
            panels_done = tail < rel_tol * total
            if lo > 1e300:
                raise QuadratureError(
                    "tail bound failed to close the improper integral", tail / max(total, 1e-300)
                )
    if total > 0.0 and err / total > 100.0 * rel_tol:
        raise QuadratureError("panel quadrature above requested tolerance", err / total)
    return total


def lerche_mass(b: Boundary, u_lo: float, u_hi: float, rel_tol: float = 1e-8) -> float:
    """Integral of the leading-order hitting density over [u_lo, u_hi].

    Evaluated in the x = log(a/u) variable so arbitrarily small u_lo is
    representable (u_lo = 0 gives the full defective mass on (0, u_hi]).
    """
    if not 0.0 <= u_lo < u_hi <= b.t1:
        raise DomainError("need 0 <= u_lo < u_hi <= t1")
    x_lo = math.log(b.a / u_hi)
    x_hi = math.inf if u_lo == 0.0 else math.log(b.a / u_lo)
    return _integrate_transformed(x_lo, x_hi, b.level.q_squared(1.0 / b.a), rel_tol)


def crossing_prob_quadrature(t, level: DeviationLevel, rel_tol: float = 1e-8,
                             rescaled_u_min: float = 0.0) -> float:
    """Crossing probability by quadrature of the hitting-time density.

    Integrates Lambda_a(u) u^{-3/2} n(psi_a(u)/sqrt u) over rescaled time
    u in (rescaled_u_min, 1) with a = 1/t, via the substitution
    x = log(a/u). The default rescaled_u_min = 0 is the full (defective)
    mass; a positive value restricts to first hits in [rescaled_u_min, 1],
    which is what a simulation truncated at real time t*rescaled_u_min can
    observe.

    Raises QuadratureError (CLI exit code 2) if the panel scheme cannot
    certify the requested relative tolerance.
    """
    st = _as_scaled_time(t)
    b = Boundary(level, st.a)
    return lerche_mass(b, rescaled_u_min, 1.0, rel_tol)


def tail_integral_closed_form(a: float, epsilon: float) -> float:
    """Exact value of the tail integral of x^{-1} (log x)^{-(1+eps)}: (log a)^{-eps}/eps."""
    if not a > math.e:
        raise DomainError("tail integral requires a > e")
    if not epsilon > 0.0:
        raise DomainError("epsilon must be > 0")
    return math.log(a) ** (-epsilon) / epsilon


def crossing_prob_asymptotic(t, epsilon: float) -> float:
    """Leading-order crossing probability (log 1/t)^{-eps}.

    Only the dominant factor of the tail asymptotics; the o(1) in the
    exponent is not modeled, so use for slopes/ratios rather than values.
    """
    st = _as_scaled_time(t)
    return math.exp(-epsilon * st.loglog)


def reflection_sup_tail(t: float, level: float):
    """Exact P(sup_{0<u<=t} W_u >= L) = 2 (1 - Phi(L / sqrt t)).

    The module's ground truth for constant boundaries; used to calibrate
    Monte Carlo discretization bias.
    """
    if not t > 0.0:
        raise DomainError("t must be > 0")
    level = np.asarray(level, dtype=float)
    if np.any(level < 0.0):
        raise DomainError("level must be >= 0")
    out = 2.0 * (1.0 - gaussian_cdf(level / math.sqrt(t)))
    return float(out) if np.ndim(out) == 0 else out


def reflection_lower_bound(t, epsilon: float) -> float:
    """Explicit lower bound 2 (1 - Phi(sqrt(2 (1+eps) loglog(1/t)))).

    The probability that the path exceeds sqrt(1+eps) h(t) before t; it
    decays like (log 1/t)^{-(1+eps)} up to slowly varying factors and
    bounds the LIL-scaled crossing probability from below.
    """
    st = _as_scaled_time(t)
    if not epsilon > 0.0:
        raise DomainError("epsilon must be > 0")
    return 2.0 * (1.0 - gaussian_cdf(math.sqrt(2.0 * (1.0 + epsilon) * st.loglog)))


# ---------------------------------------------------------------------------
# hypothesis checks for the hitting-time density theorem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LercheConditionReport:
    """Numerical rendering of the density theorem's hypotheses.

    monotone (condition ii): psi_a(u)/u^alpha nonincreasing on a log grid.
    derivative_continuity (condition iii): psi_a'(s)/psi_a'(u) within 1e-2
    of 1 for s/u within 1e-3 of 1, uniformly over the sampled grid.
    Condition (i), the vanishing of the hitting probability as a grows, is
    a distributional statement delegated to the Monte Carlo hitting-time
    estimator and recorded here as a cross-reference only.
    """

    a: float
    alpha: float
    monotone: bool
    derivative_continuity: bool
    condition_i: str = "delegated to estimators.ta_prob (hitting probability decay in a)"
    first_violation: tuple | None = None

    @property
    def passed(self) -> bool:
        return self.monotone and self.derivative_continuity


def lerche_condition_check(b: Boundary, n_grid: int = 200,
                           ratio_delta: float = 1e-3,
                           ratio_tol: float = 1e-2) -> LercheConditionReport:
    """Grid verification of the density theorem's conditions (ii) and (iii).

    Exponents alpha in (1/2, 1) are expected to pass; any alpha in (0, 1)
    is accepted so that failing exponents can be probed and reported.
    """
    if not 0.0 < b.alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    u_hi = min(b.t1, b.a * E_INV) * (1.0 - 1e-9)
    u = np.geomspace(u_hi * 1e-12, u_hi, n_grid)

    ratio_vals = boundary_psi(b, u) / u ** b.alpha
    increases = np.nonzero(np.diff(ratio_vals) > 1e-12 * ratio_vals[:-1])[0]
    monotone = increases.size == 0
    first_violation = None
    if not monotone:
        i = int(increases[0])
        first_violation = ("monotone", float(u[i]), float(u[i + 1]))

    deriv_ok = True
    offsets = np.linspace(-ratio_delta, ratio_delta, 9)
    base = boundary_psi_prime(b, u)
    for off in offsets:
        s = u * (1.0 + off)
        dev = np.abs(boundary_psi_prime(b, s) / base - 1.0)
        if np.any(dev >= ratio_tol):
            deriv_ok = False
            if first_violation is None:
                i = int(np.argmax(dev >= ratio_tol))
                first_violation = ("derivative_continuity", float(u[i]), float(s[i]))
            break

    return LercheConditionReport(
        a=b.a, alpha=b.alpha, monotone=monotone,
        derivative_continuity=deriv_ok, first_violation=first_violation,
    )
