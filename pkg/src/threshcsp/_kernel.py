"""Kernel backend selection: compiled extension when available, numpy otherwise.

Set THRESHCSP_BACKEND=python (or =cython) to force a backend; the default
"auto" prefers the compiled extension.
"""

from __future__ import annotations

import os

from . import _core_py

_requested = os.environ.get("THRESHCSP_BACKEND", "auto").lower()

if _requested == "python":
    _impl = _core_py
    _name = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        _name = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _core_py
        _name = "python"

admm_solve = _impl.admm_solve

STATUS_SOLVED = _core_py.STATUS_SOLVED
STATUS_INFEASIBLE = _core_py.STATUS_INFEASIBLE
STATUS_MAXITER = _core_py.STATUS_MAXITER


def backend_name() -> str:
    return _name


def get_backend(name: str):
    """Return a kernel module by name ('python' or 'cython'); for benchmarks."""
    if name == "python":
        return _core_py
    if name == "cython":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")
