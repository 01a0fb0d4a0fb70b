"""Kernel backend selection.

The sequential time-stepping kernels (path simulation, Riccati triple,
1-D grid solvers) exist twice: a Cython extension (``_core``) and a pure
NumPy fallback (``pure``) with identical call signatures and semantics.
The compiled backend is preferred when the extension imported cleanly;
``KALZAK_BACKEND=pure`` or ``KALZAK_BACKEND=compiled`` forces the choice.

Results are bit-identical when replayed on the same backend.  Across
backends the summation orders differ, so agreement is at the 1e-12
relative level rather than bitwise.
"""

import os

from . import pure

try:
    from . import _core

    HAVE_COMPILED = True
except ImportError:  # extension not built on this interpreter
    _core = None
    HAVE_COMPILED = False

_ENV_VAR = "KALZAK_BACKEND"


def active_name() -> str:
    """Name of the backend that active() will return: 'compiled' or 'pure'."""
    forced = os.environ.get(_ENV_VAR, "auto").lower()
    if forced not in ("auto", "compiled", "pure"):
        raise ValueError(
            f"{_ENV_VAR} must be 'auto', 'compiled' or 'pure', got {forced!r}"
        )
    if forced == "pure":
        return "pure"
    if forced == "compiled":
        if not HAVE_COMPILED:
            raise ImportError(
                "KALZAK_BACKEND=compiled but the extension module is not built; "
                "reinstall the package or unset the variable"
            )
        return "compiled"
    return "compiled" if HAVE_COMPILED else "pure"


def active():
    """The kernel module currently selected."""
    return _core if active_name() == "compiled" else pure


def available() -> tuple:
    """Names of the backends importable in this interpreter."""
    return ("compiled", "pure") if HAVE_COMPILED else ("pure",)


def by_name(name: str):
    """Fetch a backend module by name, for benchmarks and equivalence tests."""
    if name == "pure":
        return pure
    if name == "compiled":
        if not HAVE_COMPILED:
            raise ImportError("compiled backend not available")
        return _core
    raise ValueError(f"unknown backend {name!r}")
