"""Backend selection for the hot kernels.

``PATTERNCLT_BACKEND=numpy`` forces the numpy implementations; the default is
numba, falling back to numpy when numba cannot be imported.
"""
import os

from . import _numpy

BACKEND_ENV = "PATTERNCLT_BACKEND"


def _load_numba():
    try:
        from . import _numba
    except ImportError:  # pragma: no cover - numba is a hard dependency here
        return None
    return _numba


def get_backend(name=None):
    """Return the kernel module for ``name`` ('numba' or 'numpy')."""
    name = (name or os.environ.get(BACKEND_ENV) or "numba").lower()
    if name == "numpy":
        return _numpy
    if name != "numba":
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    mod = _load_numba()
    return mod if mod is not None else _numpy


backend = get_backend()
BACKEND_NAME = "numpy" if backend is _numpy else "numba"

window_codes = backend.window_codes
lps2 = backend.lps2
lps2_lengths = backend.lps2_lengths
lps_states = backend.lps_states
lps_states_lengths = backend.lps_states_lengths
lps_bruteforce = backend.lps_bruteforce

__all__ = [
    "BACKEND_NAME",
    "get_backend",
    "window_codes",
    "lps2",
    "lps2_lengths",
    "lps_states",
    "lps_states_lengths",
    "lps_bruteforce",
]
