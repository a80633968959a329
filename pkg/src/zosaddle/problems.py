"""Built-in saddle-point instances with analytic ground truth.

Every ``f`` here is vectorized over leading axes: it accepts an array of
shape ``(..., n_x + n_y)`` and returns shape ``(...)``. Evaluators are
defined on all of ``R^n`` so finite-difference probes may leave the feasible
set; the constraint is enforced only by the prox step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .exceptions import CapabilityError
from .geometry import Box, Ball2, FeasibleSet, GeometrySetup, Simplex

__all__ = [
    "ProblemSpec", "make_matrix_game", "generate_paper_matrix", "make_sc_quadratic",
    "make_lagrangian", "lagrangian_toy", "spectral_norm", "save_matrix_csv", "load_matrix_csv",
]

SMOOTHNESS_CLASSES = ("smooth", "firmly_smooth", "both")


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """A saddle-point problem ``min_x max_y f(x, y)`` and what is known about it.

    ``operator`` is the analytic ``F(z) = (grad_x f, -grad_y f)``; ``grad_y``
    returns ``grad_y f(z)`` for the mixed oracle. Both are optional, as is the
    ``solution``. ``payoff`` is set for matrix games and enables the exact
    duality gap.
    """

    n_x: int
    n_y: int
    f: Callable[[np.ndarray], np.ndarray]
    feasible_set: FeasibleSet
    default_setup: GeometrySetup
    operator: Callable[[np.ndarray], np.ndarray] | None = None
    grad_y: Callable[[np.ndarray], np.ndarray] | None = None
    solution: np.ndarray | None = None
    L: float | None = None
    L2: float | None = None
    mu: float = 0.0
    smoothness: str = "smooth"
    payoff: np.ndarray | None = None
    name: str = "problem"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.feasible_set.n_x != self.n_x or self.feasible_set.n_y != self.n_y:
            raise ValueError("feasible set dimensions do not match the problem")
        if self.smoothness not in SMOOTHNESS_CLASSES:
            raise ValueError(f"unknown smoothness class {self.smoothness!r}")
        if self.mu < 0 or (self.L is not None and self.L < self.mu):
            raise ValueError("constants must satisfy L >= mu >= 0")
        if self.L2 is None and self.L is not None:
            object.__setattr__(self, "L2", self.L)

    @property
    def n(self) -> int:
        return self.n_x + self.n_y

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return z[..., : self.n_x], z[..., self.n_x:]

    def F(self, z: np.ndarray) -> np.ndarray:
        if self.operator is None:
            raise CapabilityError(f"{self.name} has no analytic operator")
        return self.operator(np.asarray(z, dtype=np.float64))

    def require_solution(self) -> np.ndarray:
        if self.solution is None:
            raise CapabilityError(f"{self.name} has no known solution")
        return self.solution


def spectral_norm(A: np.ndarray, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0) -> float:
    """Largest singular value of ``A`` by power iteration on ``A^T A``."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if not np.any(A):
        return 0.0
    v = np.random.default_rng(seed).standard_normal(A.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = A.T @ (A @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new_sigma = math.sqrt(nw)
        if abs(new_sigma - sigma) <= tol * max(new_sigma, 1.0):
            return new_sigma
        sigma = new_sigma
    return sigma


# -- matrix game ---------------------------------------------------------------

def make_matrix_game(C, solution=None, name: str = "matrix_game") -> ProblemSpec:
    """Bilinear game ``min_{x in simplex_n} max_{y in simplex_k} y^T C x`` for ``C`` of shape (k, n)."""
    C = np.atleast_2d(np.asarray(C, dtype=np.float64))
    if C.size == 0:
        raise ValueError("payoff matrix is empty")
    if not np.all(np.isfinite(C)):
        raise ValueError("payoff matrix has non-finite entries")
    k, n = C.shape
    CT = np.ascontiguousarray(C.T)

    def f(z):
        x, y = z[..., :n], z[..., n:]
        return np.sum((y @ C) * x, axis=-1)

    def operator(z):
        x, y = z[:n], z[n:]
        return np.concatenate([CT @ y, -(C @ x)])

    def grad_y(z):
        return z[..., :n] @ CT

    fs = FeasibleSet(Simplex(n), Simplex(k))
    return ProblemSpec(
        n_x=n, n_y=k, f=f, feasible_set=fs, default_setup=GeometrySetup.entropy(fs),
        operator=operator, grad_y=grad_y,
        solution=None if solution is None else np.asarray(solution, dtype=np.float64),
        L=spectral_norm(C), mu=0.0, smoothness="smooth", payoff=C, name=name,
        info={"L_max_entry": float(np.max(np.abs(C)))},
    )


def generate_paper_matrix(n: int = 200, seed: int = 0) -> np.ndarray:
    """Random ``n x n`` payoff: U[0,1] entries, one row redrawn from U[5,10],
    then one entry of that row redrawn from U[1,5]."""
    if n < 2:
        raise ValueError("matrix size must be >= 2")
    rng = np.random.default_rng(seed)
    C = rng.uniform(0.0, 1.0, size=(n, n))
    row = rng.integers(n)
    C[row] = rng.uniform(5.0, 10.0, size=n)
    col = rng.integers(n)
    C[row, col] = rng.uniform(1.0, 5.0)
    return C


def save_matrix_csv(path, C: np.ndarray) -> None:
    """Row-major CSV with a ``# shape,rows,cols`` header; values round-trip exactly."""
    C = np.atleast_2d(np.asarray(C, dtype=np.float64))
    np.savetxt(path, C, delimiter=",", fmt="%.17g", header=f"shape,{C.shape[0]},{C.shape[1]}")


def load_matrix_csv(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().lstrip("#").strip().split(",")
    if len(header) != 3 or header[0] != "shape":
        raise ValueError(f"{path}: missing '# shape,rows,cols' header")
    rows, cols = int(header[1]), int(header[2])
    C = np.loadtxt(Path(path), delimiter=",", ndmin=2)
    if C.shape != (rows, cols):
        raise ValueError(f"{path}: header says {rows}x{cols}, data is {C.shape[0]}x{C.shape[1]}")
    return C


# -- strongly-convex-strongly-concave quadratic ---------------------------------

def make_sc_quadratic(n_x: int, n_y: int, mu: float, A=None, radius: float = 10.0,
                      seed: int = 0) -> ProblemSpec:
    """``f = mu/2 ||x||^2 + x^T A y - mu/2 ||y||^2`` on Euclidean balls of ``radius``.

    ``A`` defaults to a random ``n_x x n_y`` Gaussian matrix scaled to unit
    spectral norm, so ``L = mu + 1``. The saddle point is ``z* = 0``.
    """
    if not mu > 0:
        raise ValueError("mu must be positive")
    if A is None:
        A = np.random.default_rng(seed).standard_normal((n_x, n_y))
        A /= spectral_norm(A)
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.shape != (n_x, n_y):
        raise ValueError(f"A must have shape ({n_x}, {n_y}), got {A.shape}")
    AT = np.ascontiguousarray(A.T)

    def f(z):
        x, y = z[..., :n_x], z[..., n_x:]
        return 0.5 * mu * np.sum(x * x, axis=-1) + np.sum((x @ A) * y, axis=-1) - 0.5 * mu * np.sum(y * y, axis=-1)

    def operator(z):
        x, y = z[:n_x], z[n_x:]
        return np.concatenate([mu * x + A @ y, -(AT @ x) + mu * y])

    def grad_y(z):
        x, y = z[..., :n_x], z[..., n_x:]
        return x @ A - mu * y

    fs = FeasibleSet(Ball2(np.zeros(n_x), radius), Ball2(np.zeros(n_y), radius))
    L = mu + spectral_norm(A)
    return ProblemSpec(
        n_x=n_x, n_y=n_y, f=f, feasible_set=fs, default_setup=GeometrySetup.euclidean(fs),
        operator=operator, grad_y=grad_y, solution=np.zeros(n_x + n_y),
        L=L, mu=mu, smoothness="both", name="sc_quadratic", info={"A": A},
    )


# -- Lagrangian ---------------------------------------------------------------------

def make_lagrangian(objective: Callable, constraints: Callable | Sequence[Callable],
                    x_box: tuple, lambda_upper, m: int | None = None,
                    operator: Callable | None = None, solution=None,
                    L: float | None = None, name: str = "lagrangian") -> ProblemSpec:
    """Saddle problem ``min_x max_{lambda >= 0} f(x) + <lambda, g(x)>``.

    ``objective`` maps ``(..., n_x) -> (...)``. ``constraints`` is either one
    callable returning ``(..., m)`` or a sequence of scalar callables. The
    multiplier set is the box ``[0, lambda_upper]^m``. The y-gradient is
    ``g(x)`` itself, obtained alongside the function value.
    """
    if callable(constraints):
        g_vec = constraints
        if m is None:
            raise ValueError("pass m when constraints is a single vector-valued callable")
    else:
        cons = list(constraints)
        if not cons:
            raise ValueError("at least one constraint is required")
        m = len(cons)

        def g_vec(x):
            return np.stack([np.asarray(c(x), dtype=np.float64) for c in cons], axis=-1)
    if m < 1:
        raise ValueError("at least one constraint is required")
    lo, hi = x_box
    xset = Box(lo, hi)
    n_x = xset.dim
    lam_set = Box(np.zeros(m), np.broadcast_to(np.asarray(lambda_upper, dtype=np.float64), (m,)))

    def f(z):
        x, lam = z[..., :n_x], z[..., n_x:]
        return objective(x) + np.sum(lam * g_vec(x), axis=-1)

    def grad_y(z):
        return g_vec(z[..., :n_x])

    fs = FeasibleSet(xset, lam_set)
    return ProblemSpec(
        n_x=n_x, n_y=m, f=f, feasible_set=fs, default_setup=GeometrySetup.euclidean(fs),
        operator=operator, grad_y=grad_y,
        solution=None if solution is None else np.asarray(solution, dtype=np.float64),
        L=L, mu=0.0, smoothness="smooth", name=name,
    )


def lagrangian_toy(lambda_upper: float = 10.0) -> ProblemSpec:
    """``min x^2 s.t. 1 - x <= 0`` on ``x in [0, 2]``; saddle point ``(x, lambda) = (1, 2)``."""

    def operator(z):
        x, lam = z[0], z[1]
        return np.array([2.0 * x - lam, x - 1.0])

    jac = np.array([[2.0, -1.0], [1.0, 0.0]])
    return make_lagrangian(
        objective=lambda x: x[..., 0] ** 2,
        constraints=[lambda x: 1.0 - x[..., 0]],
        x_box=([0.0], [2.0]), lambda_upper=lambda_upper,
        operator=operator, solution=[1.0, 2.0], L=spectral_norm(jac), name="lagrangian_toy",
    )
