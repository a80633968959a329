"""Norms, Bregman divergences, prox-operators and sphere sampling.

Points of the joint space are flat float arrays ``z = (x, y)``; the block
structure lives in :class:`FeasibleSet`. :class:`SaddleIterate` is the
structured view returned to users.

Two prox setups are supported:

* ``entropy_simplex`` -- negative entropy on a product of probability
  simplices, ``p = 1`` and ``q = inf``. The prox is a multiplicative-weights
  step followed by per-block normalization.
* ``squared_euclidean`` -- ``d(z) = ||z||^2 / 2``, ``p = q = 2``. The prox is
  the Euclidean projection of ``z - g`` onto the feasible set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import kernels
from .exceptions import ConfigError, DomainError

__all__ = [
    "INF", "Simplex", "Box", "Ball2", "Unconstrained", "FeasibleSet", "SaddleIterate",
    "GeometrySetup", "ENTROPY", "EUCLIDEAN", "bregman", "prox", "sample_sphere",
    "lp_norm", "dual_norm", "primal_norm", "rho_n", "conjugate_exponent",
]

#: Tag for the limit exponent q = infinity (max-norm); math.inf gives exact semantics.
INF = math.inf

ENTROPY = "entropy_simplex"
EUCLIDEAN = "squared_euclidean"

CLAMP = 1e-15
SIMPLEX_TOL = 1e-12


# -- feasible-set blocks ---------------------------------------------------

@dataclass(frozen=True)
class Simplex:
    """Probability simplex in ``R^dim``."""

    dim: int

    def project(self, v: np.ndarray) -> np.ndarray:
        return kernels.project_simplex(np.ascontiguousarray(v, dtype=np.float64))

    def contains(self, v: np.ndarray, tol: float = SIMPLEX_TOL) -> bool:
        return bool(np.all(v >= -tol) and abs(v.sum() - 1.0) <= tol)

    @property
    def diameter(self) -> float:
        return math.sqrt(2.0) if self.dim > 1 else 0.0

    def center(self) -> np.ndarray:
        return np.full(self.dim, 1.0 / self.dim)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        return rng.dirichlet(np.ones(self.dim), size=size)


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``lower <= v <= upper``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        lo, hi = np.broadcast_arrays(lo, hi)
        if np.any(lo > hi):
            raise ValueError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo.copy())
        object.__setattr__(self, "upper", hi.copy())

    @classmethod
    def uniform(cls, dim: int, lower: float, upper: float) -> "Box":
        return cls(np.full(dim, float(lower)), np.full(dim, float(upper)))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def project(self, v: np.ndarray) -> np.ndarray:
        return np.clip(v, self.lower, self.upper)

    def contains(self, v: np.ndarray, tol: float = SIMPLEX_TOL) -> bool:
        return bool(np.all(v >= self.lower - tol) and np.all(v <= self.upper + tol))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        return rng.uniform(self.lower, self.upper, size=shape)


@dataclass(frozen=True, eq=False)
class Ball2:
    """Euclidean ball of the given radius."""

    center_point: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center_point", np.atleast_1d(np.asarray(self.center_point, dtype=np.float64)).copy())
        if self.radius < 0:
            raise ValueError("ball radius must be nonnegative")

    @property
    def dim(self) -> int:
        return self.center_point.shape[0]

    def project(self, v: np.ndarray) -> np.ndarray:
        d = v - self.center_point
        r = np.linalg.norm(d)
        if r <= self.radius:
            return np.array(v, dtype=np.float64)
        return self.center_point + d * (self.radius / r)

    def contains(self, v: np.ndarray, tol: float = SIMPLEX_TOL) -> bool:
        return bool(np.linalg.norm(v - self.center_point) <= self.radius * (1 + tol) + tol)

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def center(self) -> np.ndarray:
        return self.center_point.copy()

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        m = 1 if size is None else size
        e = sample_sphere(self.dim, rng, size=m)
        r = self.radius * rng.uniform(size=(m, 1)) ** (1.0 / self.dim)
        out = self.center_point + r * e
        return out[0] if size is None else out


@dataclass(frozen=True)
class Unconstrained:
    """All of ``R^dim``."""

    dim: int

    def project(self, v: np.ndarray) -> np.ndarray:
        return np.array(v, dtype=np.float64)

    def contains(self, v: np.ndarray, tol: float = SIMPLEX_TOL) -> bool:
        return bool(np.all(np.isfinite(v)))

    @property
    def diameter(self) -> float:
        return math.inf

    def center(self) -> np.ndarray:
        return np.zeros(self.dim)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        shape = (self.dim,) if size is None else (size, self.dim)
        return rng.standard_normal(shape)


Block = Union[Simplex, Box, Ball2, Unconstrained]


@dataclass(frozen=True, eq=False)
class FeasibleSet:
    """Product ``X x Y`` of two blocks."""

    x: Block
    y: Block

    def __post_init__(self):
        if self.x.dim < 1 or self.y.dim < 1:
            raise ValueError("both blocks need dimension >= 1")
        object.__setattr__(self, "bounds", np.array([0, self.x.dim, self.x.dim + self.y.dim], dtype=np.intp))

    @property
    def n_x(self) -> int:
        return self.x.dim

    @property
    def n_y(self) -> int:
        return self.y.dim

    @property
    def n(self) -> int:
        return self.x.dim + self.y.dim

    @property
    def blocks(self) -> tuple[Block, Block]:
        return (self.x, self.y)

    @property
    def is_simplex_product(self) -> bool:
        return isinstance(self.x, Simplex) and isinstance(self.y, Simplex)

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return z[..., : self.n_x], z[..., self.n_x:]

    def project(self, z: np.ndarray) -> np.ndarray:
        x, y = self.split(z)
        return np.concatenate([self.x.project(x), self.y.project(y)])

    def contains(self, z: np.ndarray, tol: float = SIMPLEX_TOL) -> bool:
        if z.shape != (self.n,):
            return False
        x, y = self.split(z)
        return self.x.contains(x, tol) and self.y.contains(y, tol)

    def center(self) -> np.ndarray:
        return np.concatenate([self.x.center(), self.y.center()])

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        return np.concatenate([self.x.sample(rng, size), self.y.sample(rng, size)], axis=-1)


@dataclass(frozen=True, eq=False)
class SaddleIterate:
    """A point ``z = (x, y)`` of the joint space."""

    x: np.ndarray
    y: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @classmethod
    def from_vector(cls, z: np.ndarray, n_x: int) -> "SaddleIterate":
        z = np.asarray(z, dtype=np.float64)
        return cls(z[:n_x].copy(), z[n_x:].copy())


def _vec(z) -> np.ndarray:
    if isinstance(z, SaddleIterate):
        return z.z
    return np.asarray(z, dtype=np.float64)


# -- geometry setup ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GeometrySetup:
    """Norm exponents, prox-function kind, feasible set and its diameter ``D_p``.

    ``diameter_p`` bounds ``sqrt(V_{z1}(z2))`` over the set. For the entropy
    setup the customary value ``sqrt(log n_x + log n_y)`` (divergence from
    the barycenter) is used, since the divergence itself is unbounded near
    the simplex boundary.
    """

    feasible_set: FeasibleSet
    prox_kind: str
    p: float
    q: float
    diameter_p: float

    def __post_init__(self):
        if self.prox_kind not in (ENTROPY, EUCLIDEAN):
            raise ConfigError(f"unknown prox kind {self.prox_kind!r}")
        if not (1.0 <= self.p <= 2.0):
            raise ConfigError(f"p must lie in [1, 2], got {self.p}")
        if self.q == INF:
            if self.p != 1.0:
                raise ConfigError("q = inf pairs only with p = 1")
        elif self.q < 2.0 or abs(1.0 / self.p + 1.0 / self.q - 1.0) > 1e-12:
            raise ConfigError(f"exponents p={self.p}, q={self.q} are not conjugate")
        if self.prox_kind == ENTROPY and not self.feasible_set.is_simplex_product:
            raise ConfigError("entropy prox requires a product of simplices")
        if not self.diameter_p >= 0:
            raise ConfigError("diameter must be nonnegative")

    @classmethod
    def entropy(cls, feasible_set: FeasibleSet) -> "GeometrySetup":
        d2 = math.log(feasible_set.n_x) + math.log(feasible_set.n_y)
        return cls(feasible_set, ENTROPY, 1.0, INF, math.sqrt(d2))

    @classmethod
    def euclidean(cls, feasible_set: FeasibleSet) -> "GeometrySetup":
        d2 = 0.5 * sum(b.diameter ** 2 for b in feasible_set.blocks)
        return cls(feasible_set, EUCLIDEAN, 2.0, 2.0, math.sqrt(d2))

    @property
    def n_x(self) -> int:
        return self.feasible_set.n_x

    @property
    def n(self) -> int:
        return self.feasible_set.n


# -- norms --------------------------------------------------------------------

def conjugate_exponent(p: float) -> float:
    if p == 1.0:
        return INF
    return p / (p - 1.0)


def lp_norm(p: float, v: np.ndarray, axis: int = -1) -> np.ndarray | float:
    v = np.asarray(v, dtype=np.float64)
    if p == INF:
        return np.max(np.abs(v), axis=axis)
    if p == 2.0:
        return np.sqrt(np.sum(v * v, axis=axis))
    return np.sum(np.abs(v) ** p, axis=axis) ** (1.0 / p)


def dual_norm(q: float, v) -> float:
    """``||v||_q``; ``q = INF`` gives the max-norm."""
    return float(lp_norm(q, _vec(v)))


def primal_norm(setup: GeometrySetup, v) -> float:
    """Block norm ``sqrt(||v_x||_p^2 + ||v_y||_p^2)`` for which ``d`` is 1-strongly convex."""
    vx, vy = setup.feasible_set.split(_vec(v))
    return math.sqrt(float(lp_norm(setup.p, vx)) ** 2 + float(lp_norm(setup.p, vy)) ** 2)


def rho_n(q: float, n: int) -> float:
    """Geometry factor ``min{q - 1, 16 ln n - 8}``."""
    if n < 2:
        raise ValueError(f"rho_n needs n >= 2, got {n}")
    log_term = 16.0 * math.log(n) - 8.0
    if q == INF:
        return log_term
    return min(q - 1.0, log_term)


# -- divergence and prox -----------------------------------------------------

def _check_simplex_input(v: np.ndarray, what: str) -> None:
    if np.any(v < -SIMPLEX_TOL) or not np.all(np.isfinite(v)):
        raise DomainError(f"{what} has negative or non-finite components")


def _clamp_blocks(v: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    out = np.maximum(v, CLAMP)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        out[lo:hi] /= out[lo:hi].sum()
    return out


def bregman(setup: GeometrySetup, z, w, clamp: bool = False) -> float:
    """Bregman divergence ``V_z(w) = d(z) - d(w) - <grad d(w), z - w>``.

    Entropy case: ``sum_i z_i log(z_i / w_i)`` summed over blocks. Components
    of ``z`` below 1e-15 are clamped (then renormalized); ``w`` must be
    strictly positive unless ``clamp=True``, in which case it gets the same
    treatment.
    """
    z, w = _vec(z), _vec(w)
    if setup.prox_kind == EUCLIDEAN:
        d = z - w
        return 0.5 * float(d @ d)
    bounds = setup.feasible_set.bounds
    _check_simplex_input(z, "z")
    _check_simplex_input(w, "w")
    if np.any(w <= 0.0) and not clamp:
        raise DomainError("entropy divergence needs w strictly positive")
    z = _clamp_blocks(z, bounds)
    if np.any(w < CLAMP):
        w = _clamp_blocks(w, bounds)
    total = 0.0
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        total += kernels.kl_divergence(np.ascontiguousarray(z[lo:hi]), np.ascontiguousarray(w[lo:hi]))
    return max(total, 0.0)


def prox(setup: GeometrySetup, z, g) -> np.ndarray:
    """``argmin_u { D(u, z) + <g, u> }`` over the feasible set.

    ``D(u, z) = d(u) - d(z) - <grad d(z), u - z>`` is the divergence anchored
    at the prox center ``z``. Entropy: ``u ∝ z * exp(-g)`` per simplex block,
    computed in log-space. Euclidean: projection of ``z - g``.
    """
    z = np.ascontiguousarray(_vec(z))
    g = np.ascontiguousarray(np.asarray(g, dtype=np.float64))
    if g.shape != z.shape:
        raise ValueError(f"step shape {g.shape} does not match point shape {z.shape}")
    if not np.all(np.isfinite(g)):
        raise ValueError("prox step has non-finite components")
    if setup.prox_kind == ENTROPY:
        if np.any(z < -SIMPLEX_TOL) or not np.all(np.isfinite(z)):
            raise DomainError("prox center has negative or non-finite components")
        return kernels.entropy_prox(z, g, setup.feasible_set.bounds)
    return setup.feasible_set.project(z - g)


def sample_sphere(dim: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) from the unit Euclidean sphere in ``R^dim`` (normalized Gaussians)."""
    if dim < 1:
        raise ValueError(f"sphere dimension must be >= 1, got {dim}")
    shape = (dim,) if size is None else (size, dim)
    e = rng.standard_normal(shape)
    norms = np.linalg.norm(e, axis=-1, keepdims=True)
    # exact zero has probability zero; guard anyway
    while np.any(norms == 0.0):  # pragma: no cover
        bad = (norms == 0.0)[..., 0]
        e[bad] = rng.standard_normal(e[bad].shape)
        norms = np.linalg.norm(e, axis=-1, keepdims=True)
    return e / norms
