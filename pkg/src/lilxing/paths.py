"""Brownian paths on geometric time grids and discrete LIL-scaled suprema.

A crossing experiment near time zero needs knots spanning many orders of
magnitude, so grids are geometric: the barrier sqrt(1+eps) h(u) is slowly
varying in log u, and constant-ratio spacing equidistributes the
discretization error. Grids truncate at u_min = t 2^{-octaves}; the event
mass below the truncation is reported (see ``below_window_mass``), never
silently dropped.

Discrete suprema undercount crossings; ``sup_scaled`` optionally repairs
this with a Bernoulli bridge correction per grid cell, using the exact
crossing probability exp(-2 (b0-w0)(b1-w1)/dt) of a Brownian bridge against
the chord of the barrier. The barrier's relative variation per geometric
cell is O(1/log(1/u)), which keeps the linearization controlled.

The endpoint convention: grids include t itself; whether the supremum over
the open interval (0,t) includes the endpoint is an almost-sure tie.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _driver, analytic
from .analytic import Boundary, DeviationLevel, DomainError

__all__ = [
    "GridParams",
    "TimeGrid",
    "BrownianPath",
    "SupResult",
    "make_geometric_grid",
    "make_uniform_grid",
    "make_hitting_grid",
    "below_window_mass",
    "sample_brownian",
    "sample_brownian_bulk",
    "sup_scaled",
    "refine_path",
    "levy_modulus_stat",
    "levy_scale",
]


@dataclass(frozen=True)
class GridParams:
    """Grid density knobs shared by all Monte Carlo experiments."""

    octaves: int = 40
    points_per_octave: int = 32

    def build(self, t: float, lil_domain: bool = True) -> "TimeGrid":
        return make_geometric_grid(t, self.octaves, self.points_per_octave, lil_domain)

    def build_hitting(self) -> "TimeGrid":
        return make_hitting_grid(self.octaves, self.points_per_octave)

    def describe(self) -> str:
        return f"octaves:{self.octaves},ppo:{self.points_per_octave}"


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing knots on [u_min, t_max] with ratio control.

    For geometric layouts, consecutive knot ratios never exceed
    2^(1/points_per_octave) (up to rounding).
    """

    knots: np.ndarray
    t_max: float
    u_min: float
    layout: str
    points_per_octave: int | None = None
    octaves: int | None = None

    def __post_init__(self):
        kn = np.asarray(self.knots, dtype=float)
        if kn.ndim != 1 or kn.size < 2:
            raise DomainError("grid needs at least two knots")
        if np.any(np.diff(kn) <= 0.0):
            raise DomainError("knots must be strictly increasing")
        if not (math.isclose(kn[0], self.u_min) and math.isclose(kn[-1], self.t_max)):
            raise DomainError("knots must span [u_min, t_max]")
        object.__setattr__(self, "knots", kn)

    @property
    def n_knots(self) -> int:
        return self.knots.size

    def max_ratio(self) -> float:
        return float(np.max(self.knots[1:] / self.knots[:-1]))


def make_geometric_grid(t: float, octaves: int, points_per_octave: int,
                        lil_domain: bool = True) -> TimeGrid:
    """Geometric grid on [t 2^-octaves, t] with the given knot density.

    lil_domain=True (the default) restricts to t < e^-e, the domain on which
    the LIL scaling h is safely defined at every knot; pass False for
    experiments that never divide by h (e.g. plain supremum statistics).
    """
    upper = analytic.E_E_INV if lil_domain else math.inf
    if not 0.0 < t < upper:
        raise DomainError(f"t={t} outside (0, {upper:.6g})")
    if octaves < 1 or points_per_octave < 1:
        raise DomainError("octaves and points_per_octave must be >= 1")
    n = octaves * points_per_octave
    knots = t * 2.0 ** (np.arange(n + 1) / points_per_octave - octaves)
    knots[-1] = t
    return TimeGrid(knots=knots, t_max=t, u_min=knots[0], layout="geometric",
                    points_per_octave=points_per_octave, octaves=octaves)


def make_uniform_grid(t: float, n_knots: int) -> TimeGrid:
    """Uniform grid t/n, 2t/n, ..., t (used by modulus-of-continuity checks)."""
    if not t > 0.0 or n_knots < 2:
        raise DomainError("need t > 0 and at least two knots")
    knots = t * np.arange(1, n_knots + 1) / n_knots
    knots[-1] = t
    return TimeGrid(knots=knots, t_max=t, u_min=knots[0], layout="uniform")


def make_hitting_grid(octaves: int, points_per_octave: int,
                      switch: float = 0.0625) -> TimeGrid:
    """Geometric-then-uniform grid on (0, 1] for hitting-time experiments.

    Geometric from 2^-octaves up to ``switch``, then uniform to 1 with the
    step matched at the junction, so the bulk of the horizon (where most
    hits land) keeps absolute resolution while the head still reaches deep
    into small times.
    """
    if not 0.0 < switch < 1.0:
        raise DomainError("switch must lie in (0, 1)")
    geo_octaves = octaves + math.log2(switch)
    if geo_octaves < 1:
        raise DomainError("octaves too small for the requested switch point")
    n_geo = int(round(geo_octaves * points_per_octave))
    geo = switch * 2.0 ** (np.arange(n_geo + 1) / points_per_octave - geo_octaves)
    step = switch * (2.0 ** (1.0 / points_per_octave) - 1.0)
    n_uni = int(math.ceil((1.0 - switch) / step))
    uni = np.linspace(switch, 1.0, n_uni + 1)
    knots = np.concatenate([geo[:-1], uni])
    knots[-1] = 1.0
    return TimeGrid(knots=knots, t_max=1.0, u_min=knots[0],
                    layout="geometric+uniform", points_per_octave=points_per_octave,
                    octaves=octaves)


def below_window_mass(t: float, u_min: float, level: DeviationLevel) -> float:
    """Leading-order crossing mass unobservable below the grid truncation.

    The probability of a first boundary crossing before u_min, from the
    hitting-density quadrature. Crossing events at the LIL scale keep real
    mass at every decade of small time (the decay is only iterated-log), so
    this is typically *not* negligible; it is attached to every estimate as
    ``truncation_bound``.
    """
    if not 0.0 < u_min < t:
        raise DomainError("need 0 < u_min < t")
    b = Boundary(level, 1.0 / t)
    return analytic.lerche_mass(b, 0.0, u_min / t)


@dataclass(frozen=True)
class BrownianPath:
    """Brownian values at the grid knots; W(u_min) ~ N(0, u_min)."""

    grid: TimeGrid
    values: np.ndarray
    seed: int | None = None


def _as_rng(rng) -> tuple[np.random.Generator, int | None]:
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), rng


def sample_brownian(grid: TimeGrid, rng) -> BrownianPath:
    """Sample one Brownian path on the grid (rng: seed int or Generator)."""
    gen, seed = _as_rng(rng)
    sqdt, _, _ = _driver.grid_arrays(grid.knots)
    values = np.cumsum(gen.standard_normal(grid.n_knots) * sqdt)
    return BrownianPath(grid=grid, values=values, seed=seed)


def sample_brownian_bulk(grid: TimeGrid, n: int, rng) -> np.ndarray:
    """(n, n_knots) matrix of independent Brownian paths."""
    gen, _ = _as_rng(rng)
    sqdt, _, _ = _driver.grid_arrays(grid.knots)
    return np.cumsum(gen.standard_normal((n, grid.n_knots)) * sqdt, axis=1)


@dataclass(frozen=True)
class SupResult:
    sup_stat: float
    crossed: bool


def sup_scaled(path: BrownianPath, level: DeviationLevel,
               bridge_correction: bool = True, rng=None) -> SupResult:
    """Discrete supremum of W/h and the boundary-crossing indicator.

    The threshold is q(t) = sqrt(1 + eps + d(t)) at t = t_max. With the
    bridge correction, a cell whose endpoints sit below the (linearized)
    barrier still crosses with probability exp(-2 (b0-w0)(b1-w1)/dt); the
    Bernoulli draws come from ``rng``, or deterministically from the path's
    own seed record when omitted.
    """
    knots = path.grid.knots
    if knots[-1] >= analytic.E_INV:
        raise DomainError("all knots must be < 1/e for the LIL scaling")
    h = analytic.lil_scale(knots)
    w = path.values
    q = level.q(path.grid.t_max)
    sup_stat = float(np.max(w / h))
    if not bridge_correction:
        return SupResult(sup_stat=sup_stat, crossed=bool(sup_stat >= q))

    if rng is None:
        if path.seed is None:
            raise ValueError("bridge correction needs an rng or a seeded path")
        rng = np.random.default_rng([path.seed, 0xB51D6E])
    gen, _ = _as_rng(rng)
    b = q * h
    r = b - w
    dt = np.diff(knots)
    u = gen.random(knots.size - 1)
    with np.errstate(under="ignore"):
        p_cells = np.where(
            (r[:-1] <= 0.0) | (r[1:] <= 0.0), 1.0,
            np.exp(np.clip(-2.0 * r[:-1] * r[1:] / dt, -745.0, 0.0)),
        )
    crossed = bool((r[0] <= 0.0) or np.any(u < p_cells))
    return SupResult(sup_stat=sup_stat, crossed=crossed)


def bridge_crossing_prob(w0: float, w1: float, b0: float, b1: float, dt: float) -> float:
    """Probability that a Brownian bridge crosses the chord of the barrier.

    exp(-2 (b0-w0)(b1-w1)/dt), clipped to [0,1]; equals 1 when either
    endpoint is on or above the barrier.
    """
    r0, r1 = b0 - w0, b1 - w1
    if r0 <= 0.0 or r1 <= 0.0:
        return 1.0
    return math.exp(max(-2.0 * r0 * r1 / dt, -745.0))


def refine_path(path: BrownianPath, rng) -> BrownianPath:
    """Insert bridge-sampled values at the geometric midpoints of all cells.

    Conditionally on the existing knots, the new values follow the Brownian
    bridge law, so the refined path is a valid Brownian skeleton extending
    the old one; its discrete supremum can only grow.
    """
    gen, seed = _as_rng(rng)
    knots = path.grid.knots
    w = path.values
    mids = np.sqrt(knots[:-1] * knots[1:])
    span = knots[1:] - knots[:-1]
    frac = (mids - knots[:-1]) / span
    mean = w[:-1] + frac * (w[1:] - w[:-1])
    var = (knots[1:] - mids) * (mids - knots[:-1]) / span
    w_mid = mean + np.sqrt(var) * gen.standard_normal(mids.size)

    new_knots = np.empty(knots.size + mids.size)
    new_knots[0::2] = knots
    new_knots[1::2] = mids
    new_vals = np.empty_like(new_knots)
    new_vals[0::2] = w
    new_vals[1::2] = w_mid
    ppo = path.grid.points_per_octave
    grid = TimeGrid(knots=new_knots, t_max=path.grid.t_max, u_min=path.grid.u_min,
                    layout=path.grid.layout,
                    points_per_octave=2 * ppo if ppo else None,
                    octaves=path.grid.octaves)
    return BrownianPath(grid=grid, values=new_vals, seed=seed)


def levy_scale(delta: float) -> float:
    """Modulus-of-continuity scale f(delta) = sqrt(2 delta log(1/delta))."""
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    return math.sqrt(2.0 * delta * math.log(1.0 / delta))


def levy_modulus_stat(path: BrownianPath, delta: float) -> float:
    """max |W_t - W_s| over pairs with |t-s| <= delta, divided by f(delta).

    The path is rescaled to the unit horizon internally (Brownian scaling),
    with the origin W_0 = 0 included. Almost surely the continuum statistic
    tends to 1 as delta shrinks. Requires a uniform grid: the sliding-window
    range trick (max-min over windows of width delta) is what makes the
    statistic computable at 1e5-knot resolution.
    """
    from scipy.ndimage import maximum_filter1d, minimum_filter1d

    grid = path.grid
    if grid.layout != "uniform":
        raise DomainError("levy_modulus_stat requires a uniform grid")
    t = grid.t_max
    w = np.concatenate([[0.0], path.values]) / math.sqrt(t)
    step = 1.0 / grid.n_knots
    window = int(math.floor(delta / step))
    if window < 1:
        raise DomainError(f"delta={delta} below grid resolution {step}")
    size = window + 1
    hi = maximum_filter1d(w, size=size, mode="nearest")
    lo = minimum_filter1d(w, size=size, mode="nearest")
    return float(np.max(hi - lo) / levy_scale(delta))
