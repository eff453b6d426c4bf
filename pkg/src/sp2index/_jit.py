"""Numba switch for the hot kernels.

Set ``SP2INDEX_NUMBA=0`` in the environment before import to run every kernel
as plain Python (the numpy fallback path).  The kernels are written so that the
same source runs under both.
"""

import os

NUMBA_ENABLED = os.environ.get("SP2INDEX_NUMBA", "1").strip().lower() not in {
    "0",
    "false",
    "no",
    "off",
}

if NUMBA_ENABLED:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False


def jit(fn):
    """Compile ``fn`` with numba when enabled, otherwise return it untouched."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def python_version(fn):
    """The interpreted source of a (possibly) jitted kernel."""
    return getattr(fn, "py_func", fn)
