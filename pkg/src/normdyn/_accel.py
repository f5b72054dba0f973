"""JIT switch for the hot kernels.

Kernels are written once as plain numpy/Python loops. When numba is importable
and ``NORMDYN_DISABLE_JIT`` is unset (or ``0``), they are compiled with
``numba.njit``; otherwise the very same functions run interpreted. Both paths
consume the random stream identically, so traces are bit-identical.
"""

from __future__ import annotations

import os

_flag = os.environ.get("NORMDYN_DISABLE_JIT", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "python"


def jit(fn):
    """Compile ``fn`` in nopython mode when the numba backend is active."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn
