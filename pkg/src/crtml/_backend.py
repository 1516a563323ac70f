"""Kernel backend selection.

The compiled module is used when importable; ``CRTML_BACKEND=python`` forces
the numpy fallback.
"""

import importlib
import os

from . import _pykernels


def load(name=None):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("crtml._ckernels")
    raise ValueError(f"unknown kernel backend {name!r}")


def _select():
    wanted = os.environ.get("CRTML_BACKEND", "").strip().lower()
    if wanted == "python":
        return "python", _pykernels
    try:
        return "cython", load("cython")
    except ImportError:
        if wanted == "cython":
            raise
        return "python", _pykernels


BACKEND, kernels = _select()
