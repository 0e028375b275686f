"""Select the kernel backend for the hot loops.

The env var ``EEGATTN_BACKEND`` picks the implementation:

* ``auto`` (default) — numba if it imports, numpy otherwise
* ``numba``          — require the compiled kernels, fail if unavailable
* ``numpy``          — force the pure-numpy fallback

The choice is made once at import time; mixed use inside one process is
possible through :func:`load_kernels` (the benchmark and the equivalence
tests do exactly that).
"""

import os

ENV_VAR = "EEGATTN_BACKEND"


def load_kernels(name):
    """Import and return the kernel module for ``name`` ('numba' or 'numpy')."""
    if name == "numpy":
        from . import kernels_numpy
        return kernels_numpy
    if name == "numba":
        from . import kernels_numba
        return kernels_numba
    raise ValueError(f"unknown kernel backend {name!r}")


def _select():
    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice in ("numpy", "numba"):
        return load_kernels(choice)
    if choice != "auto":
        raise ValueError(
            f"{ENV_VAR} must be 'auto', 'numba' or 'numpy', got {choice!r}")
    try:
        return load_kernels("numba")
    except ImportError:
        return load_kernels("numpy")


kernels = _select()
BACKEND_NAME = kernels.NAME
