"""Backend selection for the hot raster kernels.

Kernels in :mod:`fishparts.kernels` come in pairs: a vectorized pure-NumPy
implementation and a loop implementation compiled with numba. The compiled
path is used by default; setting the environment variable ``FISHPARTS_NUMBA``
to ``0`` (or ``false``/``off``/``no``) before import selects the NumPy path.
The flag is read once at import time.
"""

import os

_flag = os.environ.get("FISHPARTS_NUMBA", "1").strip().lower()
NUMBA_REQUESTED = _flag not in ("0", "false", "off", "no")

if NUMBA_REQUESTED:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dependency
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):  # noqa: D103 - decorator stub, keeps sources importable
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


def backend_name() -> str:
    """Name of the active kernel backend, ``numba`` or ``numpy``."""
    return "numba" if NUMBA_ENABLED else "numpy"
