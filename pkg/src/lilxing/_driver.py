"""Chunked, reproducible Monte Carlo driving for the path kernels.

Reproducibility contract: replications are processed in fixed chunks of
CHUNK_SIZE paths. Chunk c draws from the PCG64 stream seeded by
SeedSequence(entropy=seed, spawn_key=(domain, c)); within a chunk the draw
order is the normals matrix first (row-major, one normal per knot), then the
bridge log-uniforms (one per cell). Chunk results land in preallocated
output slices, so estimates are bit-identical for any worker count and any
scheduling order. CHUNK_SIZE is part of the contract and not configurable.

The ``domain`` tag separates streams of different draw purposes within one
experiment seed (e.g. the two samples of a two-sample test).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels

CHUNK_SIZE = 4096

DOMAIN_BM = 0
DOMAIN_DIFFUSION = 1
DOMAIN_HIT = 2
DOMAIN_META = 3


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("LILXING_WORKERS")
        workers = int(env) if env else 1
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def chunk_rng(seed: int, domain: int, chunk_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(domain, chunk_index))
    return np.random.Generator(np.random.PCG64(ss))


def _chunks(n: int):
    n_chunks = (n + CHUNK_SIZE - 1) // CHUNK_SIZE
    for c in range(n_chunks):
        lo = c * CHUNK_SIZE
        yield c, lo, min(lo + CHUNK_SIZE, n)


def _draw(rng: np.random.Generator, m: int, k: int, use_bridge: bool):
    dwn = rng.standard_normal((m, k))
    if use_bridge:
        with np.errstate(divide="ignore"):  # U == 0.0 -> log-uniform -inf, fires
            log_unif = np.log(rng.random((m, k - 1)))
    else:
        log_unif = None
    return dwn, log_unif


def _run(n: int, seed: int, domain: int, workers: int | None, use_bridge: bool,
         k: int, kernel_call, outputs):
    """Execute kernel_call over all chunks, writing into output slices."""
    backend = _kernels.get()

    def one(args):
        c, lo, hi = args
        rng = chunk_rng(seed, domain, c)
        dwn, log_unif = _draw(rng, hi - lo, k, use_bridge)
        res = kernel_call(backend, dwn, log_unif)
        for out, val in zip(outputs, res):
            out[lo:hi] = val

    workers = resolve_workers(workers)
    jobs = list(_chunks(n))
    if workers == 1:
        for job in jobs:
            one(job)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(one, jobs))


def grid_arrays(knots: np.ndarray):
    """(sqdt, dts, inv_dt) for a strictly increasing knot vector."""
    dts = np.diff(knots)
    sqdt = np.concatenate([[math.sqrt(knots[0])], np.sqrt(dts)])
    inv_dt = 1.0 / dts
    return sqdt, dts, inv_dt


def bm_crossing_mc(knots, inv_h, boundary, threshold, n, seed, *,
                   use_bridge=True, workers=None, domain=DOMAIN_BM):
    """All-path (sup_stat, crossed) for Brownian crossing experiments."""
    sqdt, _, inv_dt = grid_arrays(knots)
    k = knots.size
    sup = np.empty(n, dtype=np.float64)
    crossed = np.empty(n, dtype=np.uint8)

    def call(backend, dwn, log_unif):
        return backend.bm_crossing(dwn, log_unif, sqdt, inv_h, boundary,
                                   inv_dt, threshold, use_bridge)

    _run(n, seed, domain, workers, use_bridge, k, call, (sup, crossed))
    return sup, crossed


def bm_first_hit_mc(knots, psi, n, seed, *, use_bridge=True, workers=None,
                    domain=DOMAIN_HIT):
    """First-hit knot index (-1 if none) for each of n Brownian paths."""
    sqdt, _, inv_dt = grid_arrays(knots)
    k = knots.size
    idx = np.empty(n, dtype=np.int64)

    def call(backend, dwn, log_unif):
        return (backend.bm_first_hit(dwn, log_unif, sqdt, psi, inv_dt, use_bridge),)

    _run(n, seed, domain, workers, use_bridge, k, call, (idx,))
    return idx


def diffusion_crossing_mc(family, param, sigma0, knots, inv_h, boundary, n,
                          seed, *, x_cap=1e6, use_bridge=True, workers=None,
                          domain=DOMAIN_DIFFUSION):
    """All-path (sup_stat, crossed, sup_absx, diverged) for a built-in family."""
    sqdt, dts, inv_dt = grid_arrays(knots)
    k = knots.size
    sup = np.empty(n, dtype=np.float64)
    crossed = np.empty(n, dtype=np.uint8)
    sup_absx = np.empty(n, dtype=np.float64)
    diverged = np.empty(n, dtype=np.uint8)

    def call(backend, dwn, log_unif):
        return backend.diffusion_crossing(family, param, sigma0, dwn, log_unif,
                                          sqdt, dts, inv_h, boundary, inv_dt,
                                          x_cap, use_bridge)

    _run(n, seed, domain, workers, use_bridge, k, call, (sup, crossed, sup_absx, diverged))
    return sup, crossed, sup_absx, diverged
