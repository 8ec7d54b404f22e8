"""NumPy reference implementation of the path kernels.

Contract shared with the compiled backend (see _core.pyx):

* All randomness is pre-drawn by the caller. ``dwn`` holds standard normals
  (one per knot, row per path); ``log_unif`` holds log(U) for the Bernoulli
  bridge-crossing draws, one per grid cell. Pre-drawn inputs make early
  exit, masking, and thread parallelism reproducible by construction.
* Bridge-crossing decisions are made in log space (log U < -2 r0 r1 / var dt),
  so neither backend evaluates a transcendental function on the hot path and
  the two produce bit-identical outputs.
* A grid cell "fires" when either endpoint sits on or above the barrier
  (crossing certain) or the linear-boundary bridge probability exceeds the
  pre-drawn uniform. Knot 0 is checked directly; cells cover every later knot.
"""

from __future__ import annotations

import numpy as np

FAMILY_CONSTANT = 0
FAMILY_OU = 1
FAMILY_STATE_VOL = 2


def bm_crossing(dwn, log_unif, sqdt, inv_h, boundary, inv_dt, threshold, use_bridge):
    """Scaled supremum and crossing indicator for Brownian paths.

    Returns (sup_stat, crossed): the discrete supremum of W * inv_h over the
    knots, and a uint8 flag. With the bridge correction the flag is the union
    of knot crossings (W >= boundary) and within-cell bridge crossings;
    without it, the flag is sup_stat >= threshold.
    """
    w = np.cumsum(dwn * sqdt, axis=1)
    sup_stat = np.max(w * inv_h, axis=1)
    if use_bridge:
        r = boundary - w
        r0 = r[:, :-1]
        r1 = r[:, 1:]
        fire = (r0 <= 0.0) | (r1 <= 0.0) | (log_unif < -2.0 * r0 * r1 * inv_dt)
        crossed = (r[:, 0] <= 0.0) | np.any(fire, axis=1)
    else:
        crossed = sup_stat >= threshold
    return sup_stat, crossed.astype(np.uint8)


def bm_first_hit(dwn, log_unif, sqdt, psi, inv_dt, use_bridge):
    """Index of the first knot at which a Brownian path has hit psi.

    A hit at knot j means W_j >= psi_j, or (with the correction) the bridge
    fired inside the cell ending at knot j. Returns -1 for paths that never
    hit within the grid horizon.
    """
    w = np.cumsum(dwn * sqdt, axis=1)
    r = psi - w
    if use_bridge:
        fire = (r[:, :-1] <= 0.0) | (r[:, 1:] <= 0.0) | (log_unif < -2.0 * r[:, :-1] * r[:, 1:] * inv_dt)
    else:
        fire = r[:, 1:] <= 0.0
    events = np.concatenate([r[:, :1] <= 0.0, fire], axis=1)
    hit = events.any(axis=1)
    return np.where(hit, events.argmax(axis=1), -1).astype(np.int64)


def diffusion_crossing(family, param, sigma0, dwn, log_unif, sqdt, dts,
                       inv_h, boundary, inv_dt, x_cap, use_bridge):
    """Euler-Maruyama diffusion with crossing detection and divergence guard.

    Left-point scheme started from X(u_min) = sigma0 * sqrt(u_min) * Z. The
    bridge correction treats each cell as Brownian with the left-point local
    variance sigma(x, u)^2; without it a crossing means some knot value
    reached the barrier. Paths whose |X| exceeds x_cap freeze (state and
    accumulators stop updating) and are flagged diverged for the caller to
    exclude. Returns (sup_stat, crossed, sup_absx, diverged).
    """
    m, k = dwn.shape
    x = (sigma0 * sqdt[0]) * dwn[:, 0]
    alive = np.abs(x) <= x_cap
    diverged = ~alive
    sup_stat = x * inv_h[0]
    sup_absx = np.abs(x)
    r_prev = boundary[0] - x
    crossed = alive & (r_prev <= 0.0)

    for j in range(1, k):
        dt = dts[j - 1]
        if family == FAMILY_CONSTANT:
            sv = sigma0
            x_new = x + sigma0 * (sqdt[j] * dwn[:, j])
        elif family == FAMILY_OU:
            sv = sigma0
            x_new = (x + (-param * x) * dt) + sigma0 * (sqdt[j] * dwn[:, j])
        elif family == FAMILY_STATE_VOL:
            sv = sigma0 * (1.0 + param * (x * x))
            x_new = x + sv * (sqdt[j] * dwn[:, j])
        else:
            raise ValueError(f"unknown family code {family}")
        x = np.where(alive, x_new, x)
        newly = alive & (np.abs(x) > x_cap)
        diverged |= newly
        alive &= ~newly

        s = x * inv_h[j]
        sup_stat = np.where(alive & (s > sup_stat), s, sup_stat)
        ax = np.abs(x)
        sup_absx = np.where(alive & (ax > sup_absx), ax, sup_absx)
        r_cur = boundary[j] - x
        if use_bridge:
            local = inv_dt[j - 1] / (sv * sv)
            fire = (r_prev <= 0.0) | (r_cur <= 0.0) | (log_unif[:, j - 1] < -2.0 * r_prev * r_cur * local)
            crossed |= alive & fire
        else:
            crossed |= alive & (r_cur <= 0.0)
        r_prev = r_cur

    return sup_stat, crossed.astype(np.uint8), sup_absx, diverged.astype(np.uint8)
