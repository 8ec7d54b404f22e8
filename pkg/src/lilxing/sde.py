"""Ito diffusion simulation and the Brownian-reduction diagnostics.

The diffusion dX = b(X,u) du + sigma(X,u) dW starts at X_0 = 0 with
sigma0 = sigma(0,0) > 0. Simulation is left-point Euler-Maruyama on a
geometric grid, initialized at X(u_min) ~ sigma0 N(0, u_min) (the Gaussian
small-time approximation of the head; u_min is small enough that this is
dominated by scheme error).

The diagnostics quantify, path by path, why such a diffusion inherits the
Brownian small-time crossing behavior:

* ``drift_functional`` / ``drift_bound_check``: the running drift integral
  scaled by h is bounded by c sqrt(t / (2 loglog(1/t))) whenever the path
  stays in the box |X| < c1 where |b| <= c.
* ``qv_modulus`` / ``qv_deviation_check``: the quadratic variation stays
  within u g(u) of sigma0^2 u, with g the modulus of sigma^2 on the box.
* ``r_bound``: the resulting uniform time-change discrepancy
  sup sqrt(u) sqrt(3 g(u) log(1/g(u))) / h(u), which vanishes as t -> 0.
* ``dds_equivalence_check``: two-sample KS comparison of the scaled-sup
  statistic against sigma0 x Brownian, the time-change equivalence made
  testable.
* ``weak_ld_check``: empirical power fit of P(sup|X| >= c1) = O(t^c2).

Built-in coefficient families: constant (b=0, sigma=sigma0), ou(theta)
(b=-theta x), state_vol(beta) (sigma = sigma0 (1+beta x^2)); these are the
ones the compiled kernels accelerate. Custom coefficient callables must be
vectorized over x and are reentrant pure functions of (x, u).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import _driver, analytic
from ._kernels import _pyref
from .analytic import DeviationLevel, DomainError
from .paths import GridParams, TimeGrid, make_geometric_grid

__all__ = [
    "DiffusionSpec",
    "DiffusionPath",
    "QvDeviationReport",
    "KsReport",
    "WeakLdReport",
    "DriftQvScan",
    "euler_maruyama",
    "drift_functional",
    "drift_bound_check",
    "qv_modulus",
    "qv_deviation_check",
    "r_bound",
    "dds_equivalence_check",
    "weak_ld_check",
    "drift_qv_scan",
    "X_CAP",
]

X_CAP = 1e6

_FAMILY_CODES = {
    "constant": _pyref.FAMILY_CONSTANT,
    "ou": _pyref.FAMILY_OU,
    "state_vol": _pyref.FAMILY_STATE_VOL,
}


@dataclass(frozen=True)
class DiffusionSpec:
    """Coefficients of the diffusion plus the box constants (c1, c2).

    c1 is the box radius on which the drift/volatility moduli are taken;
    c2 is the claimed power of the weak small-time tail assumption
    P(sup|X| >= c1) = O(t^c2). Neither is derivable from the coefficients
    in general; ``weak_ld_check`` estimates the power empirically.
    """

    drift: Callable[[np.ndarray, float], np.ndarray]
    diffusion: Callable[[np.ndarray, float], np.ndarray]
    sigma0: float
    c1: float = 1.0
    c2: float = 1.0
    family_tag: str = "custom"
    param: float = field(default=0.0)

    def __post_init__(self):
        if not self.sigma0 > 0.0:
            raise DomainError("sigma0 must be > 0 (nondegenerate start)")
        if not self.c1 > 0.0 or not self.c2 > 0.0:
            raise DomainError("c1 and c2 must be > 0")

    @classmethod
    def constant(cls, sigma0: float = 1.0, c1: float = 1.0, c2: float = 1.0):
        return cls(drift=lambda x, u: np.zeros_like(x),
                   diffusion=lambda x, u, s=sigma0: np.full_like(x, s),
                   sigma0=sigma0, c1=c1, c2=c2, family_tag="constant")

    @classmethod
    def ou(cls, theta: float, sigma0: float = 1.0, c1: float = 1.0, c2: float = 1.0):
        return cls(drift=lambda x, u, th=theta: -th * x,
                   diffusion=lambda x, u, s=sigma0: np.full_like(x, s),
                   sigma0=sigma0, c1=c1, c2=c2, family_tag="ou", param=theta)

    @classmethod
    def state_vol(cls, beta: float, sigma0: float = 1.0, c1: float = 1.0, c2: float = 1.0):
        if beta < 0.0:
            raise DomainError("beta must be >= 0")
        return cls(drift=lambda x, u: np.zeros_like(x),
                   diffusion=lambda x, u, s=sigma0, b=beta: s * (1.0 + b * (x * x)),
                   sigma0=sigma0, c1=c1, c2=c2, family_tag="state_vol", param=beta)

    @classmethod
    def custom(cls, drift, diffusion, sigma0: float, c1: float = 1.0, c2: float = 1.0):
        return cls(drift=drift, diffusion=diffusion, sigma0=sigma0, c1=c1, c2=c2)

    @property
    def family_code(self) -> int | None:
        """Kernel family code, or None for custom coefficient specs."""
        return _FAMILY_CODES.get(self.family_tag)

    @property
    def driftless(self) -> bool:
        return self.family_tag in ("constant", "state_vol")


@dataclass(frozen=True)
class DiffusionPath:
    """One simulated path with its quadratic variation and drift integral.

    qv uses the composite left-point rule over sigma^2 (qv[0] = sigma0^2
    u_min from the Gaussian head); drift_int likewise (drift_int[0] = 0).
    driving_noise holds the Brownian increments dW, so coupled comparisons
    against sigma0 x W can be made knot by knot.
    """

    grid: TimeGrid
    spec: DiffusionSpec
    x: np.ndarray
    qv: np.ndarray
    drift_int: np.ndarray
    driving_noise: np.ndarray
    seed: int | None = None
    diverged: bool = False


def euler_maruyama(spec: DiffusionSpec, grid: TimeGrid, rng) -> DiffusionPath:
    """Simulate one path (rng: seed int or Generator).

    Consumes exactly one standard normal per knot, in knot order, so a path
    generated from seed s is driven by the same noise as
    paths.sample_brownian(grid, s). Paths exceeding |X| = X_CAP freeze and
    are flagged diverged.
    """
    if isinstance(rng, np.random.Generator):
        gen, seed = rng, None
    else:
        gen, seed = np.random.default_rng(rng), rng
    knots = grid.knots
    k = knots.size
    sqdt, dts, _ = _driver.grid_arrays(knots)
    z = gen.standard_normal(k)
    dw = z * sqdt

    x = np.empty(k)
    qv = np.empty(k)
    drift_int = np.empty(k)
    x[0] = (spec.sigma0 * sqdt[0]) * z[0]
    qv[0] = spec.sigma0 ** 2 * knots[0]
    drift_int[0] = 0.0
    diverged = abs(x[0]) > X_CAP
    xi = np.array([x[0]])
    for j in range(1, k):
        if diverged:
            x[j] = x[j - 1]
            qv[j] = qv[j - 1]
            drift_int[j] = drift_int[j - 1]
            continue
        u = knots[j - 1]
        dt = dts[j - 1]
        bv = float(spec.drift(xi, u)[0])
        sv = float(spec.diffusion(xi, u)[0])
        qv[j] = qv[j - 1] + (sv * sv) * dt
        drift_int[j] = drift_int[j - 1] + bv * dt
        x[j] = (x[j - 1] + bv * dt) + sv * dw[j]
        if abs(x[j]) > X_CAP:
            diverged = True
        xi[0] = x[j]
    return DiffusionPath(grid=grid, spec=spec, x=x, qv=qv, drift_int=drift_int,
                         driving_noise=dw, seed=seed, diverged=diverged)


def drift_functional(path: DiffusionPath) -> float:
    """Discrete sup over knots of |integral of b| / h(u)."""
    knots = path.grid.knots
    if knots[-1] >= analytic.E_INV:
        raise DomainError("drift functional needs all knots < 1/e")
    h = analytic.lil_scale(knots)
    return float(np.max(np.abs(path.drift_int) / h))


def _drift_sup_bound(t: float, c: float) -> float:
    # sup_{u<t} c u / h(u) = c sqrt(t / (2 loglog(1/t)))
    return c * math.sqrt(t / (2.0 * math.log(math.log(1.0 / t))))


def drift_bound_check(path: DiffusionPath, c: float) -> bool:
    """Pathwise: sup|X| < c1 implies D_t <= c sqrt(t / (2 loglog(1/t))).

    Vacuously true when the path leaves the box |X| < c1 (c then no longer
    bounds the drift along the path).
    """
    if float(np.max(np.abs(path.x))) >= path.spec.c1:
        return True
    return drift_functional(path) <= _drift_sup_bound(path.grid.t_max, c)


def qv_modulus(spec: DiffusionSpec, u: float, c1: float,
               n_grid: int = 1000) -> float:
    """g(u) = sup over |x| <= c1, s < u of |sigma^2(x,s) - sigma0^2|.

    Exact closed forms for the built-in families (0 for constant/ou;
    sigma0^2 ((1+beta c1^2)^2 - 1) for state_vol); custom specs fall back
    to maximization on an n_grid x n_grid sample of the box.
    """
    if not u > 0.0:
        raise DomainError("u must be > 0")
    if spec.family_tag in ("constant", "ou"):
        return 0.0
    if spec.family_tag == "state_vol":
        return spec.sigma0 ** 2 * ((1.0 + spec.param * c1 ** 2) ** 2 - 1.0)
    xs = np.linspace(-c1, c1, n_grid)
    best = 0.0
    s0_sq = spec.sigma0 ** 2
    for s in np.linspace(0.0, u, n_grid):
        best = max(best, float(np.max(np.abs(spec.diffusion(xs, s) ** 2 - s0_sq))))
    return best


@dataclass(frozen=True)
class QvDeviationReport:
    """Outcome of the quadratic-variation sandwich check; truthy iff passed.

    slack is the per-path cumulative rectangle-rule error allowance
    (sum over steps of |d sigma^2| dt); max_excess is the largest violation
    of |qv - sigma0^2 u| <= u g(u) + slack over the checked knots (<= 0
    when the check passes).
    """

    passed: bool
    slack: float
    max_excess: float

    def __bool__(self) -> bool:
        return self.passed


def qv_deviation_check(path: DiffusionPath, spec: DiffusionSpec | None = None,
                       c1: float | None = None) -> QvDeviationReport:
    """|qv(u) - sigma0^2 u| <= u g(u) + slack at every in-box knot.

    A knot is checked while the running sup of |X| up to it stays below c1
    (the modulus g only controls sigma^2 inside that box).
    """
    spec = spec or path.spec
    c1 = c1 if c1 is not None else spec.c1
    knots = path.grid.knots
    sig_sq = np.array([float(spec.diffusion(np.array([xj]), uj)[0]) ** 2
                       for xj, uj in zip(path.x, knots)])
    dts = np.diff(knots)
    slack_steps = np.concatenate([[0.0], np.abs(np.diff(sig_sq)) * dts])
    slack = np.cumsum(slack_steps)
    g = qv_modulus(spec, float(knots[-1]), c1)
    in_box = np.maximum.accumulate(np.abs(path.x)) < c1
    dev = np.abs(path.qv - spec.sigma0 ** 2 * knots)
    allowance = knots * g + slack + 1e-12 * spec.sigma0 ** 2 * knots
    excess = dev - allowance
    checked = excess[in_box]
    max_excess = float(np.max(checked)) if checked.size else -math.inf
    return QvDeviationReport(passed=bool(max_excess <= 0.0),
                             slack=float(slack[-1]), max_excess=max_excess)


def r_bound(t: float, spec: DiffusionSpec, c1: float, n_grid: int = 400) -> float:
    """Discrete sup of sqrt(u) sqrt(3 g(u) log(1/g(u))) / h(u) over (0, t).

    The uniform modulus-of-continuity bound on the time-change discrepancy;
    g identically zero returns 0 by convention. Raises if g(u) >= 1/e,
    where the log factor (and the bound itself) stops being meaningful.
    """
    if not 0.0 < t < analytic.E_INV:
        raise DomainError("t must lie in (0, 1/e)")
    us = np.geomspace(t * 1e-12, t * (1.0 - 1e-12), n_grid)
    gs = np.array([qv_modulus(spec, float(u), c1) for u in us])
    if np.all(gs == 0.0):
        return 0.0
    if np.any(gs >= analytic.E_INV):
        raise DomainError("qv modulus g(u) >= 1/e: bound not meaningful at this c1")
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(
            gs > 0.0,
            np.sqrt(us) * np.sqrt(3.0 * gs * np.log(1.0 / gs)) / analytic.lil_scale(us),
            0.0,
        )
    return float(np.max(vals))


# ---------------------------------------------------------------------------
# distribution-level checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KsReport:
    """Two-sample Kolmogorov-Smirnov comparison at a fixed level."""

    statistic: float
    threshold: float
    pvalue: float
    level: float
    n: int
    passed: bool


def dds_equivalence_check(spec: DiffusionSpec, t: float, n: int,
                          grid_params: GridParams | None = None,
                          seed: int = 0, level: float = 0.01,
                          workers: int | None = None) -> KsReport:
    """KS test of sup X/h against sup sigma0 W/h over n paths each.

    Only meaningful for driftless specs (the time-change equivalence is a
    statement about the martingale part). For the constant family the two
    statistics are equal in law, so the test passes at its nominal level;
    for state-dependent volatility the statistic shrinks with the modulus.
    """
    if not spec.driftless:
        raise DomainError("dds_equivalence_check needs a driftless spec (b == 0)")
    if n < 1:
        raise DomainError("n must be >= 1")
    code = spec.family_code
    if code is None:
        raise DomainError("dds_equivalence_check supports built-in families only")
    gp = grid_params or GridParams()
    grid = gp.build(t)
    knots = grid.knots
    inv_h = 1.0 / analytic.lil_scale(knots)
    no_barrier = np.full(knots.size, np.inf)

    sup_x, _, _, div = _driver.diffusion_crossing_mc(
        code, spec.param, spec.sigma0, knots, inv_h, no_barrier, n, seed,
        use_bridge=False, workers=workers, domain=_driver.DOMAIN_DIFFUSION)
    sup_w, _ = _driver.bm_crossing_mc(
        knots, inv_h, no_barrier, math.inf, n, seed,
        use_bridge=False, workers=workers, domain=_driver.DOMAIN_BM)
    sample_x = sup_x[div == 0]
    sample_w = spec.sigma0 * sup_w

    res = stats.ks_2samp(sample_x, sample_w, method="asymp")
    m1, m2 = sample_x.size, sample_w.size
    c_alpha = math.sqrt(-0.5 * math.log(level / 2.0))
    threshold = c_alpha * math.sqrt((m1 + m2) / (m1 * m2))
    return KsReport(statistic=float(res.statistic), threshold=threshold,
                    pvalue=float(res.pvalue), level=level, n=n,
                    passed=bool(res.statistic < threshold))


@dataclass(frozen=True)
class WeakLdReport:
    """Fitted power of P(sup |X| >= c1) against t (zero-hit points reported)."""

    points: tuple  # (t, p_hat) pairs with p_hat > 0
    fitted_power: float | None
    zero_hit_ts: tuple
    note: str


def weak_ld_check(spec: DiffusionSpec, c1: float, t_list, n: int,
                  grid_params: GridParams | None = None, seed: int = 0,
                  workers: int | None = None) -> WeakLdReport:
    """Estimate the escape-probability power: fit log p(t) ~ c2 log t.

    p(t) = P(sup over knots of |X| >= c1) by Monte Carlo at each t (t_list
    must be decreasing). Points with zero hits are excluded from the fit
    and reported; with no usable points the data is consistent with any
    power at the resolution 1/n.
    """
    t_list = [float(t) for t in t_list]
    if len(t_list) < 2 or any(b >= a for a, b in zip(t_list, t_list[1:])):
        raise DomainError("t_list must be strictly decreasing with >= 2 entries")
    code = spec.family_code
    if code is None:
        raise DomainError("weak_ld_check supports built-in families only")
    gp = grid_params or GridParams(octaves=20, points_per_octave=8)
    points = []
    zero_hits = []
    for i, t in enumerate(t_list):
        grid = gp.build(t, lil_domain=False)
        knots = grid.knots
        ones = np.ones(knots.size)
        no_barrier = np.full(knots.size, np.inf)
        _, _, sup_absx, div = _driver.diffusion_crossing_mc(
            code, spec.param, spec.sigma0, knots, ones, no_barrier, n, seed + i,
            use_bridge=False, workers=workers)
        usable = div == 0
        p_hat = float(np.mean(sup_absx[usable] >= c1)) if usable.any() else 0.0
        if p_hat > 0.0:
            points.append((t, p_hat))
        else:
            zero_hits.append(t)
    if len(points) < 2:
        return WeakLdReport(points=tuple(points), fitted_power=None,
                            zero_hit_ts=tuple(zero_hits),
                            note=f"consistent with any c2 >= observed resolution 1/n={1.0/n:g}")
    lx = np.log([p[0] for p in points])
    ly = np.log([p[1] for p in points])
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / np.sum((lx - lx.mean()) ** 2))
    note = "" if not zero_hits else f"{len(zero_hits)} t values had zero hits"
    return WeakLdReport(points=tuple(points), fitted_power=slope,
                        zero_hit_ts=tuple(zero_hits), note=note)


# ---------------------------------------------------------------------------
# bulk scan used by the acceptance checks and the CLI sde-check command
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DriftQvScan:
    """Vectorized drift/qv diagnostics over n paths (one experiment)."""

    n: int
    n_diverged: int
    n_in_box: int
    drift_violations: int
    d_gt_sqrt_t: int
    qv_violations: int
    max_qv_excess: float
    max_slack: float
    d_max: float
    drift_bound: float


def drift_qv_scan(spec: DiffusionSpec, t: float, n: int,
                  grid_params: GridParams | None = None, seed: int = 0,
                  c: float | None = None) -> DriftQvScan:
    """Run n paths and tally the pathwise drift and qv checks.

    ``c`` is the drift bound on the c1-box (defaults to theta*c1 for the
    ou family, 0 for driftless families). Matches drift_bound_check /
    qv_deviation_check semantics exactly, chunked for throughput.
    """
    code = spec.family_code
    if code is None:
        raise DomainError("drift_qv_scan supports built-in families only")
    if c is None:
        c = spec.param * spec.c1 if spec.family_tag == "ou" else 0.0
    gp = grid_params or GridParams()
    grid = gp.build(t)
    knots = grid.knots
    k = knots.size
    sqdt, dts, _ = _driver.grid_arrays(knots)
    h = analytic.lil_scale(knots)
    inv_h = 1.0 / h
    g = qv_modulus(spec, float(knots[-1]), spec.c1)
    s0_sq = spec.sigma0 ** 2
    d_bound = _drift_sup_bound(t, c)
    sqrt_t = math.sqrt(t)

    n_div = n_in_box = n_drift_bad = n_d_big = n_qv_bad = 0
    max_excess = -math.inf
    max_slack = 0.0
    d_max = 0.0

    for ci, lo, hi in _driver._chunks(n):
        m = hi - lo
        rng = _driver.chunk_rng(seed, _driver.DOMAIN_DIFFUSION, ci)
        z = rng.standard_normal((m, k))
        x = (spec.sigma0 * sqdt[0]) * z[:, 0]
        alive = np.abs(x) <= X_CAP
        qv = np.full(m, s0_sq * knots[0])
        drift = np.zeros(m)
        slack = np.zeros(m)
        runsup = np.abs(x)
        sup_absx = np.abs(x)
        d_stat = np.zeros(m)
        qv_excess = np.full(m, -math.inf)
        sig_prev = spec.diffusion(x, knots[0]) ** 2

        for j in range(1, k):
            u = knots[j - 1]
            dt = dts[j - 1]
            bv = spec.drift(x, u)
            sv = spec.diffusion(x, u)
            qv = np.where(alive, qv + (sv * sv) * dt, qv)
            drift = np.where(alive, drift + bv * dt, drift)
            x_new = (x + bv * dt) + sv * (sqdt[j] * z[:, j])
            x = np.where(alive, x_new, x)
            newly = alive & (np.abs(x) > X_CAP)
            alive &= ~newly

            ax = np.abs(x)
            sup_absx = np.where(alive & (ax > sup_absx), ax, sup_absx)
            runsup = np.where(alive & (ax > runsup), ax, runsup)
            d_here = np.abs(drift) * inv_h[j]
            d_stat = np.where(alive & (d_here > d_stat), d_here, d_stat)
            sig_cur = spec.diffusion(x, knots[j]) ** 2
            slack = np.where(alive, slack + np.abs(sig_cur - sig_prev) * dt, slack)
            sig_prev = sig_cur
            allowance = knots[j] * g + slack + 1e-12 * s0_sq * knots[j]
            excess = np.abs(qv - s0_sq * knots[j]) - allowance
            mask = alive & (runsup < spec.c1) & (excess > qv_excess)
            qv_excess = np.where(mask, excess, qv_excess)

        dead = ~alive
        n_div += int(dead.sum())
        ok = alive
        in_box = ok & (sup_absx < spec.c1)
        n_in_box += int(in_box.sum())
        n_drift_bad += int(np.sum(in_box & (d_stat > d_bound)))
        n_d_big += int(np.sum(ok & (d_stat > sqrt_t)))
        n_qv_bad += int(np.sum(ok & (qv_excess > 0.0)))
        if ok.any():
            max_excess = max(max_excess, float(np.max(qv_excess[ok])))
            max_slack = max(max_slack, float(np.max(slack[ok])))
            d_max = max(d_max, float(np.max(d_stat[ok])))

    return DriftQvScan(n=n, n_diverged=n_div, n_in_box=n_in_box,
                       drift_violations=n_drift_bad, d_gt_sqrt_t=n_d_big,
                       qv_violations=n_qv_bad, max_qv_excess=max_excess,
                       max_slack=max_slack, d_max=d_max, drift_bound=d_bound)
