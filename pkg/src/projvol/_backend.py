"""Kernel backend selection: numba-jitted hot loops with a pure-numpy fallback.

The hot numeric kernels in :mod:`projvol.kernels` are written in a
numba-compatible numpy subset.  By default they are compiled with
``numba.njit``; setting the environment variable ``PROJVOL_BACKEND=numpy``
runs the exact same functions uncompiled (useful for debugging, for
environments without numba, and as the reference path in the backend
benchmark).

Valid values for ``PROJVOL_BACKEND``:

* ``auto`` (or unset): use numba if importable, else fall back to numpy.
* ``numba``: require numba, fail loudly if missing.
* ``numpy``: never JIT.
"""

import os

_choice = os.environ.get("PROJVOL_BACKEND", "auto").strip().lower()

if _choice in ("", "auto"):
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dep normally
        _njit = None
        NUMBA_ENABLED = False
elif _choice in ("numba", "jit"):
    from numba import njit as _njit

    NUMBA_ENABLED = True
elif _choice in ("numpy", "python", "nojit"):
    _njit = None
    NUMBA_ENABLED = False
else:
    raise ValueError(
        f"PROJVOL_BACKEND={_choice!r} not understood; use 'auto', 'numba' or 'numpy'"
    )


def backend_name():
    return "numba" if NUMBA_ENABLED else "numpy"


def jit_kernel(fn):
    """Compile ``fn`` with njit when the numba backend is active, else return it as-is."""
    if NUMBA_ENABLED:
        return _njit(cache=True)(fn)
    return fn
