"""Monte Carlo crossing/hitting estimators and large-deviations rate fits.

Every estimator is deterministic given (seed, grid, worker count): paths are
generated in fixed chunks with per-chunk PCG64 streams (see _driver), so the
worker count never changes a result, and two runs with one seed agree byte
for byte. Running the same seed at two deviation levels reuses the same
noise, which makes the crossing indicator pathwise monotone in epsilon --
the comparison is exact, not statistical.

Estimates carry their own error bars (binomial standard error), the grid
truncation point, and the analytic estimate of the crossing mass hiding
below it. That below-window mass decays only like an iterated logarithm, so
ignore it at your peril: comparisons against the density quadrature should
use the window-restricted integral (``crossing_prob_quadrature`` with
``rescaled_u_min``) unless the level is high enough to make the head mass
negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _driver, analytic
from .analytic import Boundary, DeviationLevel, DomainError, ScaledTime
from .paths import GridParams, below_window_mass
from .sde import DiffusionSpec

__all__ = [
    "CrossingEstimate",
    "RateFit",
    "HittingHistogram",
    "DEFAULT_HITTING_LEVEL",
    "mc_crossing_prob",
    "mc_constant_crossing_prob",
    "interval_probability",
    "ta_prob",
    "hitting_time_histogram",
    "ldp_rate_fit",
]

# Hitting-time experiments default to epsilon = 2: the first-hit law's head
# (below any feasible grid truncation) carries only a few percent of the
# mass there, against ~30% at epsilon = 1.
DEFAULT_HITTING_LEVEL = DeviationLevel(epsilon=2.0)


@dataclass(frozen=True)
class CrossingEstimate:
    """A Monte Carlo probability with its provenance.

    std_err is the binomial standard error sqrt(p(1-p)/n) with n the usable
    replication count (diverged diffusion paths are excluded and counted in
    n_excluded). truncation_bound is the analytic leading-order estimate of
    the event mass below the grid's first knot u_min.
    """

    p_hat: float
    std_err: float
    n: int
    t: float
    epsilon: float
    sigma0: float
    u_min: float
    truncation_bound: float
    model_tag: str
    n_excluded: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_hat <= 1.0:
            raise DomainError("p_hat outside [0, 1]")


def _estimate(crossed: np.ndarray, excluded: np.ndarray | None = None) -> tuple[float, float, int, int]:
    if excluded is not None:
        usable = excluded == 0
        n_exc = int(np.sum(~usable))
        crossed = crossed[usable]
    else:
        n_exc = 0
    n = crossed.size
    if n == 0:
        raise DomainError("no usable paths (all diverged)")
    p = float(np.mean(crossed != 0))
    se = math.sqrt(p * (1.0 - p) / n)
    return p, se, n, n_exc


def _resolve_model(model) -> tuple[str, DiffusionSpec | None]:
    if isinstance(model, DiffusionSpec):
        return model.family_tag, model
    if isinstance(model, str):
        if model == "bm":
            return "bm", None
        raise DomainError(f"unknown model {model!r}; pass 'bm' or a DiffusionSpec")
    raise DomainError(f"unknown model {model!r}; pass 'bm' or a DiffusionSpec")


def mc_crossing_prob(model, t: float, level: DeviationLevel, n: int,
                     grid_params: GridParams | None = None, seed: int = 0, *,
                     bridge_correction: bool = True,
                     workers: int | None = None) -> CrossingEstimate:
    """P(sup_{u <= t} X_u / h(u) >= sigma0 q(t)) by simulation.

    model is "bm" or a DiffusionSpec (built-in family). The threshold is
    sigma0 sqrt(1 + eps + d(t)); for Brownian motion use sigma0 = 1 to get
    the unscaled statistic. Bridge correction is on by default; diverged
    diffusion paths are excluded with a count.
    """
    st = ScaledTime(float(t))
    if n < 1:
        raise DomainError("n must be >= 1")
    tag, spec = _resolve_model(model)
    gp = grid_params or GridParams()
    grid = gp.build(st.t)
    knots = grid.knots
    h = analytic.lil_scale(knots)
    inv_h = 1.0 / h
    threshold = level.sigma0 * level.q(st.t)
    boundary = threshold * h

    if spec is None:
        _, crossed = _driver.bm_crossing_mc(
            knots, inv_h, boundary, threshold, n, seed,
            use_bridge=bridge_correction, workers=workers)
        p, se, n_used, n_exc = _estimate(crossed)
    else:
        if spec.family_code is None:
            raise DomainError("Monte Carlo crossing supports built-in families only")
        if not math.isclose(spec.sigma0, level.sigma0):
            raise DomainError("spec.sigma0 and level.sigma0 disagree")
        _, crossed, _, div = _driver.diffusion_crossing_mc(
            spec.family_code, spec.param, spec.sigma0, knots, inv_h, boundary,
            n, seed, use_bridge=bridge_correction, workers=workers)
        p, se, n_used, n_exc = _estimate(crossed, div)

    return CrossingEstimate(
        p_hat=p, std_err=se, n=n_used, t=st.t, epsilon=level.epsilon,
        sigma0=level.sigma0, u_min=grid.u_min,
        truncation_bound=below_window_mass(st.t, grid.u_min, level),
        model_tag=tag, n_excluded=n_exc)


def mc_constant_crossing_prob(t: float, level_value: float, n: int,
                              grid_params: GridParams | None = None,
                              seed: int = 0, *, bridge_correction: bool = True,
                              workers: int | None = None) -> CrossingEstimate:
    """P(sup_{u <= t} W_u >= L) for a constant boundary L.

    The calibration experiment: the exact answer is reflection_sup_tail(t, L),
    so this isolates pure discretization/bridge bias. Here truncation_bound
    is the exact reflection bound on sub-u_min crossings (negligible for
    constant boundaries).
    """
    if not t > 0.0 or not level_value >= 0.0 or n < 1:
        raise DomainError("need t > 0, level >= 0, n >= 1")
    gp = grid_params or GridParams(octaves=20, points_per_octave=8)
    grid = gp.build(t, lil_domain=False)
    knots = grid.knots
    ones = np.ones(knots.size)
    boundary = np.full(knots.size, float(level_value))
    _, crossed = _driver.bm_crossing_mc(
        knots, ones, boundary, float(level_value), n, seed,
        use_bridge=bridge_correction, workers=workers)
    p, se, n_used, n_exc = _estimate(crossed)
    return CrossingEstimate(
        p_hat=p, std_err=se, n=n_used, t=t, epsilon=math.nan, sigma0=1.0,
        u_min=grid.u_min,
        truncation_bound=analytic.reflection_sup_tail(grid.u_min, level_value),
        model_tag=f"bm-constant(L={level_value:g})", n_excluded=n_exc)


def interval_probability(model, t: float, interval, n: int, seed: int = 0,
                         grid_params: GridParams | None = None,
                         level: DeviationLevel | None = None,
                         workers: int | None = None) -> CrossingEstimate:
    """Fraction of paths whose scaled supremum lands in [lo, hi).

    The interval is in statistic units (values of sup X/h, i.e. the
    sigma0 sqrt(1+.) axis); infinite endpoints are allowed. Uses the
    discrete supremum without bridge correction (the correction repairs
    crossing indicators, not the supremum's value), so under one seed the
    identity p[lo,hi) = p[lo,inf) - p[hi,inf) holds exactly.
    """
    lo, hi = (float(interval[0]), float(interval[1]))
    if lo > hi:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    st = ScaledTime(float(t))
    level = level or DeviationLevel(epsilon=1.0)
    tag, spec = _resolve_model(model)
    gp = grid_params or GridParams()
    grid = gp.build(st.t)
    knots = grid.knots
    inv_h = 1.0 / analytic.lil_scale(knots)
    no_barrier = np.full(knots.size, np.inf)

    if spec is None:
        sup, _ = _driver.bm_crossing_mc(knots, inv_h, no_barrier, math.inf, n,
                                        seed, use_bridge=False, workers=workers)
        div = None
    else:
        if spec.family_code is None:
            raise DomainError("Monte Carlo crossing supports built-in families only")
        sup, _, _, div = _driver.diffusion_crossing_mc(
            spec.family_code, spec.param, spec.sigma0, knots, inv_h, no_barrier,
            n, seed, use_bridge=False, workers=workers)
    in_interval = (sup >= lo) & (sup < hi)
    p, se, n_used, n_exc = _estimate(in_interval.astype(np.uint8), div)
    return CrossingEstimate(
        p_hat=p, std_err=se, n=n_used, t=st.t, epsilon=level.epsilon,
        sigma0=level.sigma0, u_min=grid.u_min,
        truncation_bound=below_window_mass(st.t, grid.u_min, level),
        model_tag=f"{tag}-interval[{lo:g},{hi:g})", n_excluded=n_exc)


def _hitting_boundary(a: float, level: DeviationLevel,
                      gp: GridParams) -> tuple[Boundary, np.ndarray, np.ndarray]:
    if not a >= 1e2:
        raise DomainError("hitting experiments require a >= 100")
    b = Boundary(level, float(a))
    grid = gp.build_hitting()
    knots = grid.knots
    return b, knots, analytic.boundary_psi(b, knots)


def ta_prob(a: float, n: int, grid_params: GridParams | None = None,
            seed: int = 0, *, level: DeviationLevel | None = None,
            bridge_correction: bool = True,
            workers: int | None = None) -> CrossingEstimate:
    """Monte Carlo estimate of the hitting probability P(T_a < 1).

    T_a is the first time a Brownian path reaches psi_a(u); the estimate
    counts first hits on the geometric-then-uniform grid over (0, 1].
    """
    level = level or DEFAULT_HITTING_LEVEL
    gp = grid_params or GridParams()
    b, knots, psi = _hitting_boundary(a, level, gp)
    idx = _driver.bm_first_hit_mc(knots, psi, n, seed,
                                  use_bridge=bridge_correction, workers=workers)
    p, se, n_used, n_exc = _estimate((idx >= 0).astype(np.uint8))
    return CrossingEstimate(
        p_hat=p, std_err=se, n=n_used, t=b.t1, epsilon=level.epsilon,
        sigma0=level.sigma0, u_min=float(knots[0]),
        truncation_bound=analytic.lerche_mass(b, 0.0, float(knots[0])),
        model_tag=f"hitting(a={a:g})", n_excluded=n_exc)


@dataclass(frozen=True)
class HittingHistogram:
    """Histogram of hitting times conditioned on T_a < 1.

    conditional_density integrates to one over the bins; bins with fewer
    than 50 hits are too noisy for shape comparisons, and the whole
    histogram is flagged unreliable below 100 total hits.
    """

    a: float
    epsilon: float
    edges: np.ndarray
    counts: np.ndarray
    n: int
    hits: int
    conditional_density: np.ndarray
    p_hat: float
    std_err: float
    u_min: float
    unreliable: bool

    def bin_widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def reliable_bins(self, min_hits: int = 50) -> np.ndarray:
        return self.counts >= min_hits


def hitting_time_histogram(b: Boundary, n: int,
                           grid_params: GridParams | None = None,
                           seed: int = 0, *, n_bins: int = 24,
                           bridge_correction: bool = True,
                           workers: int | None = None) -> HittingHistogram:
    """Simulate first hits of psi_a and histogram T_a | T_a < 1.

    Bins are log-spaced over (u_min, 1]. A bridge-fired cell records the
    hit at the cell's right knot, the same convention as a direct knot
    crossing (first knot by which the path has hit).
    """
    gp = grid_params or GridParams()
    b2, knots, psi = _hitting_boundary(b.a, b.level, gp)
    idx = _driver.bm_first_hit_mc(knots, psi, n, seed,
                                  use_bridge=bridge_correction, workers=workers)
    hit_times = knots[idx[idx >= 0]]
    hits = hit_times.size
    edges = np.geomspace(knots[0], 1.0, n_bins + 1)
    edges[-1] = 1.0 + 1e-12  # right-closed final bin
    counts, _ = np.histogram(hit_times, bins=edges)
    edges[-1] = 1.0
    widths = np.diff(edges)
    with np.errstate(invalid="ignore", divide="ignore"):
        density = np.where(hits > 0, counts / (max(hits, 1) * widths), 0.0)
    p, se, _, _ = _estimate((idx >= 0).astype(np.uint8))
    return HittingHistogram(
        a=b.a, epsilon=b.level.epsilon, edges=edges, counts=counts, n=n,
        hits=hits, conditional_density=density, p_hat=p, std_err=se,
        u_min=float(knots[0]), unreliable=bool(hits < 100))


@dataclass(frozen=True)
class RateFit:
    """OLS fit of log p_hat against L = loglog(1/t).

    slope_stderr propagates the per-point binomial variance
    (std_err / p_hat)^2 through the OLS slope weights; excluded_ts lists
    zero-hit points left out of the fit.
    """

    points: tuple
    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float
    excluded_ts: tuple = ()


def ldp_rate_fit(estimates) -> RateFit:
    """Fit the decay rate of crossing estimates sharing one epsilon.

    Needs at least 3 usable points (p_hat > 0) at distinct t. The slope
    estimates -epsilon for threshold experiments; zero-hit estimates are
    excluded and reported rather than extrapolated through log 0.
    """
    estimates = list(estimates)
    if not estimates:
        raise DomainError("no estimates given")
    eps = estimates[0].epsilon
    if any(not math.isclose(e.epsilon, eps) for e in estimates):
        raise DomainError("estimates mix different epsilon values")
    usable = [e for e in estimates if e.p_hat > 0.0]
    excluded = tuple(e.t for e in estimates if e.p_hat == 0.0)
    ts = [e.t for e in usable]
    if len(set(ts)) != len(ts):
        raise DomainError("estimates contain duplicate t values")
    if len(usable) < 3:
        raise DomainError(f"need >= 3 usable points, have {len(usable)} "
                          f"({len(excluded)} zero-hit)")

    big_l = np.array([ScaledTime(e.t).loglog for e in usable])
    y = np.log([e.p_hat for e in usable])
    lm = big_l.mean()
    s_ll = float(np.sum((big_l - lm) ** 2))
    w = (big_l - lm) / s_ll
    slope = float(np.sum(w * y))
    intercept = float(y.mean() - slope * lm)
    resid = y - (intercept + slope * big_l)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_sq = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    var_y = np.array([(e.std_err / e.p_hat) ** 2 for e in usable])
    slope_stderr = float(math.sqrt(np.sum(w ** 2 * var_y)))
    return RateFit(points=tuple(zip(big_l.tolist(), y.tolist())), slope=slope,
                   intercept=intercept, r_squared=r_sq,
                   slope_stderr=slope_stderr, excluded_ts=excluded)
