"""Monte Carlo path kernels: compiled core with a NumPy fallback.

The three hot loops (Brownian sup/crossing, first hit of a moving barrier,
Euler-Maruyama diffusion crossing) exist twice: ``_core`` is a Cython
extension, ``_pyref`` is vectorized NumPy. Both consume pre-drawn random
arrays and perform the same arithmetic in the same order, so they produce
bit-identical results; which one runs is chosen at import (compiled if
available) and can be forced with the LILXING_BACKEND environment variable
or swapped at runtime for benchmarking.
"""

from __future__ import annotations

import os
import warnings
from contextlib import contextmanager

from . import _pyref

_BACKENDS = {"python": _pyref}
try:
    from . import _core

    _BACKENDS["cython"] = _core
except ImportError:
    _core = None

_env = os.environ.get("LILXING_BACKEND")
if _env is not None and _env not in _BACKENDS:
    warnings.warn(
        f"LILXING_BACKEND={_env!r} not available (have {sorted(_BACKENDS)}); "
        "falling back to default"
    )
    _env = None
_active = _BACKENDS[_env] if _env else _BACKENDS.get("cython", _pyref)


def available() -> list[str]:
    return sorted(_BACKENDS)


def active_name() -> str:
    for name, mod in _BACKENDS.items():
        if mod is _active:
            return name
    raise RuntimeError("active backend not registered")


def use(name: str) -> None:
    """Switch the active backend ('cython' or 'python')."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available()}")
    _active = _BACKENDS[name]


@contextmanager
def forced(name: str):
    previous = active_name()
    use(name)
    try:
        yield
    finally:
        use(previous)


def get(name: str | None = None):
    """Return a backend module (the active one by default)."""
    if name is None:
        return _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available()}")
    return _BACKENDS[name]


def bm_crossing(*args, **kwargs):
    return _active.bm_crossing(*args, **kwargs)


def bm_first_hit(*args, **kwargs):
    return _active.bm_first_hit(*args, **kwargs)


def diffusion_crossing(*args, **kwargs):
    return _active.diffusion_crossing(*args, **kwargs)
