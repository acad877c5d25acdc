"""Kernel backend selection.

The compiled extension is used when importable; set DPDCOUNT_BACKEND to
``python`` or ``cython`` to force a choice.  ``select`` switches at
runtime (used by the benchmark and the equivalence tests).
"""

import os
import warnings

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None

_BACKENDS = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_active = None


def available():
    """Names of importable backends."""
    return sorted(_BACKENDS)


def select(name):
    """Make ``name`` the active backend; returns the kernel module."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available()}")
    _active = _BACKENDS[name]
    return _active


def kernels():
    """The active kernel module."""
    return _active


def _init():
    choice = os.environ.get("DPDCOUNT_BACKEND", "auto").lower()
    if choice in ("auto", ""):
        select("cython" if "cython" in _BACKENDS else "python")
        if "cython" not in _BACKENDS:
            warnings.warn(
                "dpdcount compiled kernels unavailable; using the slower "
                "pure-Python backend",
                RuntimeWarning,
                stacklevel=2,
            )
    else:
        select(choice)


_init()
