"""Kernel backend selection.

Hot loops (split scanning, tree prediction, Shapley walks, k-NN) exist twice:
a numba-jitted version and a pure-numpy/python fallback.  The environment
variable CROSSPHISH_BACKEND picks one:

    auto   use numba when importable, fallback otherwise (default)
    numba  require numba, raise if missing
    numpy  force the fallback even when numba is installed

Both paths are required to produce bitwise-identical results; tests enforce
this.  The flag is read once at import time of crossphish.kernels, so set it
before importing the package (or reload crossphish.kernels afterwards).
"""

import os

_VALID = ("auto", "numba", "numpy")


def requested_backend():
    value = os.environ.get("CROSSPHISH_BACKEND", "auto").strip().lower()
    if value not in _VALID:
        raise ValueError(f"CROSSPHISH_BACKEND must be one of {_VALID}, got {value!r}")
    return value


def numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def active_backend():
    """Resolve the backend actually used: 'numba' or 'numpy'."""
    req = requested_backend()
    if req == "numpy":
        return "numpy"
    if req == "numba":
        if not numba_available():
            raise ImportError("CROSSPHISH_BACKEND=numba but numba is not importable")
        return "numba"
    return "numba" if numba_available() else "numpy"
