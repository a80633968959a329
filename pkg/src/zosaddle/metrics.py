"""Convergence measures: exact duality gap for matrix games, operator
residuals and distances to a known solution."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import CapabilityError
from .geometry import GeometrySetup, SaddleIterate, Simplex, bregman
from .problems import ProblemSpec

__all__ = ["TraceRecord", "eps_sad_bilinear", "residual_F", "distance_metrics"]

_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class TraceRecord:
    """Metrics recorded after iteration ``k``; absent metrics are None.

    ``eps_sad`` is evaluated at the averaged iterate, the other metrics at the
    current iterate.
    """

    k: int
    oracle_calls: int
    eps_sad: float | None = None
    residual_F: float | None = None
    bregman_to_solution: float | None = None
    euclid_sq_to_solution: float | None = None
    wall_ms: float = 0.0


def eps_sad_bilinear(C, x, y) -> float:
    """``max_j (C x)_j - min_i (C^T y)_i`` for ``x`` in the n-simplex and ``y`` in the k-simplex.

    A linear function on a simplex is extremal at a vertex, so this equals
    ``max_{y'} f(x, y') - min_{x'} f(x', y)`` for ``f = y^T C x``.
    """
    C = np.atleast_2d(np.asarray(C, dtype=np.float64))
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    k, n = C.shape
    if x.shape != (n,) or y.shape != (k,):
        raise ValueError(f"shapes {x.shape}, {y.shape} do not match payoff {C.shape}")
    if not (Simplex(n).contains(x, _FEAS_TOL) and Simplex(k).contains(y, _FEAS_TOL)):
        raise ValueError("eps_sad_bilinear needs points on the simplices")
    return max(float(np.max(C @ x) - np.min(y @ C)), 0.0)


def residual_F(problem: ProblemSpec, z) -> float:
    """``||F(z) - F(z*)||_2^2``."""
    if problem.operator is None or problem.solution is None:
        raise CapabilityError(f"{problem.name} needs an analytic operator and a known solution")
    z = z.z if isinstance(z, SaddleIterate) else np.asarray(z, dtype=np.float64)
    d = problem.F(z) - problem.F(problem.solution)
    return float(d @ d)


def distance_metrics(setup: GeometrySetup, z, z_star) -> tuple[float, float]:
    """``(V_z(z*), ||z - z*||_2^2)`` under the active geometry (boundary points are clamped)."""
    z = z.z if isinstance(z, SaddleIterate) else np.asarray(z, dtype=np.float64)
    z_star = z_star.z if isinstance(z_star, SaddleIterate) else np.asarray(z_star, dtype=np.float64)
    d = z - z_star
    return bregman(setup, z, z_star, clamp=True), float(d @ d)
