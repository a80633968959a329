"""Backend selection for the hot kernels.

The compiled extension ``_ckernels`` is used when it was built and imports
cleanly; otherwise the numpy versions in ``_pykernels`` are used. Setting
``ZOSADDLE_PURE_PYTHON=1`` forces the fallback. Callers should go through
this module's attributes (``kernels.entropy_prox(...)``) so that
:func:`set_backend` takes effect everywhere.
"""
from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

__all__ = ["BACKEND", "available_backends", "set_backend", "entropy_prox",
           "project_simplex", "kl_divergence"]

BACKEND = "python"
entropy_prox = _pykernels.entropy_prox
project_simplex = _pykernels.project_simplex
kl_divergence = _pykernels.kl_divergence


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _ckernels is not None else [])


def set_backend(name: str) -> None:
    """Rebind the kernel functions to ``"python"`` or ``"cython"``."""
    global BACKEND, entropy_prox, project_simplex, kl_divergence
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        mod = _ckernels
    elif name == "python":
        mod = _pykernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    entropy_prox = mod.entropy_prox
    project_simplex = mod.project_simplex
    kl_divergence = mod.kl_divergence
    BACKEND = name


if _ckernels is not None and os.environ.get("ZOSADDLE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    set_backend("cython")
