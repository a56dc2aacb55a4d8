"""Backward-DP inner loops: compiled core with a NumPy fallback.

The compiled extension is preferred when it built; `BACKEND` names the
default selected at import time. Both implementations share one contract
(see _dp_numpy.solve_backward) and produce bit-identical tables.
"""

from __future__ import annotations

from . import _dp_numpy

try:
    from . import _dp_cython
except ImportError:  # extension not built; NumPy path carries the load
    _dp_cython = None

BACKEND = "cython" if _dp_cython is not None else "numpy"


def available_backends() -> tuple[str, ...]:
    return ("cython", "numpy") if _dp_cython is not None else ("numpy",)


def get_solver(backend: str | None = None):
    """Resolve a backend name ("cython", "numpy" or None for the default)."""
    name = backend or BACKEND
    if name == "numpy":
        return _dp_numpy.solve_backward
    if name == "cython":
        if _dp_cython is None:
            raise RuntimeError("compiled kernel not built; rebuild or use backend='numpy'")
        return _dp_cython.solve_backward
    raise ValueError(f"unknown backend {name!r}")
