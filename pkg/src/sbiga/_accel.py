"""Backend selection for the numeric kernels.

Hot loops are compiled with numba when it is importable and the environment
variable ``SBIGA_USE_NUMBA`` is not set to a false value (``0``, ``false``,
``no``, ``off``). Every jitted kernel has a vectorized numpy twin that is used
otherwise; :func:`set_backend` switches at runtime (tests and benchmarks).
"""
from __future__ import annotations

import os
import warnings

_FALSE = {"0", "false", "no", "off"}

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_use_numba = HAVE_NUMBA and os.environ.get("SBIGA_USE_NUMBA", "1").strip().lower() not in _FALSE


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def decorator(func):
        return func

    return decorator


if HAVE_NUMBA:
    prange = numba.prange
else:  # pragma: no cover
    prange = range

_threads = 1


def use_numba() -> bool:
    return _use_numba


def backend() -> str:
    return "numba" if _use_numba else "numpy"


def set_backend(name: str) -> None:
    """Select ``"numba"`` or ``"numpy"`` kernels for subsequent calls."""
    global _use_numba
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        warnings.warn("numba is not installed; staying on the numpy backend")
        _use_numba = False
        return
    _use_numba = name == "numba"


def set_threads(n: int) -> None:
    """Thread count for the parallel element loop (1 keeps the serial kernel)."""
    global _threads
    previous, _threads = _threads, max(1, int(n))
    if HAVE_NUMBA and (_threads > 1 or previous > 1):
        with warnings.catch_warnings():
            # the TBB layer complains about old TBB builds even when it is not picked
            warnings.simplefilter("ignore", numba.core.errors.NumbaWarning)
            numba.set_num_threads(min(_threads, numba.config.NUMBA_NUM_THREADS))


def threads() -> int:
    return _threads
