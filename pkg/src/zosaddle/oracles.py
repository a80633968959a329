"""Noisy zeroth-order evaluation and the gradient estimators built on it.

Noise model
-----------
The oracle returns ``f(z) + <xi, z> + delta(z)``. The stochastic part
``xi ~ N(0, sigma^2 / n * I)`` is a linear perturbation, so the induced
operator noise ``F(z, xi) - F(z) = (xi_x, -xi_y)`` has second moment exactly
``sigma^2`` and mean zero. ``delta`` is a deterministic bounded term with
``|delta(z)| <= delta_cap``. One estimator call reuses a single ``xi`` for all
of its evaluations.

All estimators share batched cores: an array of ``M`` draws is processed in
one pass, and a single call is the ``M = 1`` case. The Monte-Carlo
diagnostics use the same cores.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import CapabilityError, ConfigError, EvaluationError
from .geometry import dual_norm, lp_norm, rho_n, sample_sphere
from .problems import ProblemSpec

__all__ = [
    "RANDOM_DIRECTION", "FULL_COORDINATE", "MIXED", "NoiseModel", "EstimatorConfig",
    "GradientSample", "OracleDraw", "draw_randomness", "noisy_eval", "g_random_direction",
    "g_full_coordinate", "g_mixed", "estimate", "calls_per_estimate", "BiasEstimate",
    "MomentEstimate", "estimator_bias_mc", "estimator_second_moment_mc", "EstimatorBounds",
    "estimator_bounds",
]

RANDOM_DIRECTION = "random_direction"
FULL_COORDINATE = "full_coordinate"
MIXED = "mixed"
ESTIMATOR_KINDS = (RANDOM_DIRECTION, FULL_COORDINATE, MIXED)
DIRECTION_MODES = ("joint_split", "independent_blocks")
DELTA_KINDS = ("zero", "sine_adversarial", "custom")


@dataclass(eq=False)
class NoiseModel:
    """Stochastic scale ``sigma`` and adversarial bound ``delta_cap``.

    ``delta_kind="sine_adversarial"`` uses ``delta(z) = delta_cap *
    sin(1e3 <w, z>)`` with ``w`` a fixed standard-normal vector drawn from
    ``delta_seed``. ``"custom"`` calls ``delta_fn`` (vectorized over leading
    axes); its output is checked against ``delta_cap``.
    """

    sigma: float = 0.0
    delta_cap: float = 0.0
    delta_kind: str = "zero"
    delta_fn: Callable[[np.ndarray], np.ndarray] | None = None
    delta_seed: int = 0
    _w_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.sigma < 0 or self.delta_cap < 0:
            raise ConfigError("sigma and delta_cap must be nonnegative")
        if self.delta_kind not in DELTA_KINDS:
            raise ConfigError(f"unknown delta kind {self.delta_kind!r}")
        if self.delta_kind == "custom" and self.delta_fn is None:
            raise ConfigError("custom delta needs delta_fn")

    def draw_xi(self, rng: np.random.Generator, n: int, size: int | None = None) -> np.ndarray | None:
        if self.sigma == 0.0:
            return None
        shape = (n,) if size is None else (size, n)
        return rng.standard_normal(shape) * (self.sigma / np.sqrt(n))

    def delta(self, Z: np.ndarray) -> np.ndarray | None:
        if self.delta_kind == "zero" or (self.delta_cap == 0.0 and self.delta_kind != "custom"):
            return None
        if self.delta_kind == "sine_adversarial":
            n = Z.shape[-1]
            w = self._w_cache.get(n)
            if w is None:
                w = self._w_cache[n] = np.random.default_rng(self.delta_seed).standard_normal(n)
            return self.delta_cap * np.sin(1e3 * (Z @ w))
        d = np.asarray(self.delta_fn(Z), dtype=np.float64)
        if np.any(np.abs(d) > self.delta_cap * (1 + 1e-12)):
            raise EvaluationError(f"custom delta exceeds its declared bound {self.delta_cap}")
        return d


@dataclass(frozen=True)
class EstimatorConfig:
    """Estimator kind, smoothing step ``tau`` and direction sampling mode.

    ``joint_split`` draws one direction on the ``(n_x + n_y)``-sphere and splits
    it into blocks; with the total-dimension prefactor ``n / tau`` this makes
    the estimator unbiased on bilinear functions. ``independent_blocks`` draws
    ``e_x`` and ``e_y`` on their own spheres; its mean is then scaled by
    ``n / n_x`` and ``n / n_y`` per block.
    """

    kind: str = FULL_COORDINATE
    tau: float = 1e-4
    direction_mode: str = "joint_split"

    def __post_init__(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise ConfigError(f"unknown estimator kind {self.kind!r}")
        if not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.direction_mode not in DIRECTION_MODES:
            raise ConfigError(f"unknown direction mode {self.direction_mode!r}")


@dataclass(frozen=True, eq=False)
class GradientSample:
    """Estimated operator value plus the oracle calls spent on it."""

    g: np.ndarray
    n_x: int
    oracle_calls: int
    gradient_calls: int = 0

    @property
    def x(self) -> np.ndarray:
        return self.g[: self.n_x]

    @property
    def y(self) -> np.ndarray:
        return self.g[self.n_x:]


@dataclass(frozen=True, eq=False)
class OracleDraw:
    """Randomness consumed by one estimator call: direction (random-direction only) and ``xi``."""

    direction: np.ndarray | None
    xi: np.ndarray | None


def calls_per_estimate(kind: str, n_x: int, n_y: int) -> tuple[int, int]:
    """``(function evaluations, gradient calls)`` of one estimator call."""
    if kind == RANDOM_DIRECTION:
        return 3, 0
    if kind == FULL_COORDINATE:
        return n_x + n_y + 1, 0
    if kind == MIXED:
        return n_x + 1, 1
    raise ConfigError(f"unknown estimator kind {kind!r}")


def _directions(n_x: int, n_y: int, mode: str, rng: np.random.Generator, size: int | None) -> np.ndarray:
    if mode == "joint_split":
        return sample_sphere(n_x + n_y, rng, size)
    ex = sample_sphere(n_x, rng, size)
    ey = sample_sphere(n_y, rng, size)
    return np.concatenate([ex, ey], axis=-1)


def draw_randomness(problem: ProblemSpec, config: EstimatorConfig, noise: NoiseModel,
                    rng: np.random.Generator, size: int | None = None) -> OracleDraw:
    """Draw the direction (if any) and then ``xi`` for one call, or ``size`` calls."""
    direction = None
    if config.kind == RANDOM_DIRECTION:
        direction = _directions(problem.n_x, problem.n_y, config.direction_mode, rng, size)
    return OracleDraw(direction, noise.draw_xi(rng, problem.n, size))


# -- evaluation -------------------------------------------------------------------

def _noisy_values(problem: ProblemSpec, Z: np.ndarray, xi: np.ndarray | None, noise: NoiseModel) -> np.ndarray:
    """``f~(Z, xi)`` for a stack of points; ``xi`` must broadcast against ``Z``."""
    vals = np.asarray(problem.f(Z), dtype=np.float64)
    if xi is not None:
        vals = vals + np.sum(Z * xi, axis=-1)
    d = noise.delta(Z)
    if d is not None:
        vals = vals + d
    if not np.all(np.isfinite(vals)):
        raise EvaluationError(f"{problem.name}: non-finite function value")
    return vals


def noisy_eval(problem: ProblemSpec, z, noise: NoiseModel, rng: np.random.Generator | None = None,
               xi: np.ndarray | None = None) -> float:
    """One value of ``f~(z, xi)``; ``xi`` is drawn from ``rng`` unless given."""
    z = np.asarray(z, dtype=np.float64)
    if xi is None and rng is not None:
        xi = noise.draw_xi(rng, problem.n)
    elif xi is None and noise.sigma > 0:
        raise ValueError("stochastic noise needs an rng or an explicit xi")
    return float(_noisy_values(problem, z, xi, noise))


def _random_direction_batch(problem, z, E, Xi, noise, tau) -> np.ndarray:
    """Rows of ``E`` (M, n) are joint directions ``(e_x, e_y)``; returns (M, n)."""
    n_x, n = problem.n_x, problem.n
    Ex = E.copy()
    Ex[:, n_x:] = 0.0
    Ey = E.copy()
    Ey[:, :n_x] = 0.0
    pts = np.stack([z + tau * Ex, np.broadcast_to(z, E.shape), z + tau * Ey], axis=1)
    xi = None if Xi is None else Xi[:, None, :]
    vals = _noisy_values(problem, pts, xi, noise)
    scale = n / tau
    return scale * ((vals[:, 0] - vals[:, 1])[:, None] * Ex + (vals[:, 1] - vals[:, 2])[:, None] * Ey)


def _coordinate_points(z: np.ndarray, tau: float, m: int) -> np.ndarray:
    """``z`` followed by ``z + tau h_i`` for the first ``m`` basis vectors; shape (m + 1, n)."""
    pts = np.tile(z, (m + 1, 1))
    idx = np.arange(m)
    pts[idx + 1, idx] += tau
    return pts


def _full_coordinate_batch(problem, z, Xi, noise, tau, m, M) -> np.ndarray:
    """Forward differences on the first ``m`` coordinates for ``M`` draws of ``xi``; (M, m)."""
    pts = _coordinate_points(z, tau, m)
    if Xi is None:
        vals = _noisy_values(problem, pts, None, noise)[None, :]
        vals = np.broadcast_to(vals, (M, m + 1))
    else:
        vals = _noisy_values(problem, pts[None, :, :], Xi[:, None, :], noise)
    diffs = (vals[:, 1:] - vals[:, :1]) / tau
    diffs[:, problem.n_x:] *= -1.0
    return diffs


# -- estimators -------------------------------------------------------------------

def _check_point(problem: ProblemSpec, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (problem.n,):
        raise ValueError(f"point has shape {z.shape}, expected ({problem.n},)")
    return z


def g_random_direction(problem: ProblemSpec, z, config: EstimatorConfig, noise: NoiseModel,
                       rng: np.random.Generator | None = None, draw: OracleDraw | None = None) -> GradientSample:
    """Two-point estimator along a random sphere direction.

    ``x``-block: ``n/tau (f~(x + tau e_x, y) - f~(x, y)) e_x``; ``y``-block:
    ``n/tau (f~(x, y) - f~(x, y + tau e_y)) e_y`` with ``n = n_x + n_y``.
    Three function evaluations.
    """
    z = _check_point(problem, z)
    if draw is None:
        draw = draw_randomness(problem, config, noise, rng)
    if draw.direction is None:
        raise ValueError("random-direction estimator needs a direction")
    E = np.asarray(draw.direction, dtype=np.float64)[None, :]
    Xi = None if draw.xi is None else np.asarray(draw.xi)[None, :]
    g = _random_direction_batch(problem, z, E, Xi, noise, config.tau)[0]
    return GradientSample(g, problem.n_x, 3)


def g_full_coordinate(problem: ProblemSpec, z, config: EstimatorConfig, noise: NoiseModel,
                      rng: np.random.Generator | None = None, draw: OracleDraw | None = None) -> GradientSample:
    """Forward differences along every basis vector, ``y``-block negated; ``n + 1`` evaluations."""
    z = _check_point(problem, z)
    if draw is None:
        draw = OracleDraw(None, noise.draw_xi(rng, problem.n) if rng is not None else None)
        if draw.xi is None and noise.sigma > 0:
            raise ValueError("stochastic noise needs an rng or an explicit draw")
    Xi = None if draw.xi is None else np.asarray(draw.xi)[None, :]
    g = _full_coordinate_batch(problem, z, Xi, noise, config.tau, problem.n, 1)[0]
    return GradientSample(np.ascontiguousarray(g), problem.n_x, problem.n + 1)


def g_mixed(problem: ProblemSpec, z, config: EstimatorConfig, noise: NoiseModel,
            rng: np.random.Generator | None = None, draw: OracleDraw | None = None) -> GradientSample:
    """Forward differences on ``x`` (``n_x + 1`` evaluations) and the exact ``-grad_y f`` on ``y``."""
    if problem.grad_y is None:
        raise CapabilityError(f"{problem.name} does not expose a y-gradient")
    z = _check_point(problem, z)
    if draw is None:
        draw = OracleDraw(None, noise.draw_xi(rng, problem.n) if rng is not None else None)
        if draw.xi is None and noise.sigma > 0:
            raise ValueError("stochastic noise needs an rng or an explicit draw")
    Xi = None if draw.xi is None else np.asarray(draw.xi)[None, :]
    gx = _full_coordinate_batch(problem, z, Xi, noise, config.tau, problem.n_x, 1)[0]
    gy = -np.asarray(problem.grad_y(z), dtype=np.float64)
    if draw.xi is not None:
        gy = gy - draw.xi[problem.n_x:]
    return GradientSample(np.concatenate([gx, gy]), problem.n_x, problem.n_x + 1, 1)


_ESTIMATORS = {
    RANDOM_DIRECTION: g_random_direction,
    FULL_COORDINATE: g_full_coordinate,
    MIXED: g_mixed,
}


def estimate(problem: ProblemSpec, z, config: EstimatorConfig, noise: NoiseModel,
             rng: np.random.Generator | None = None, draw: OracleDraw | None = None) -> GradientSample:
    """Dispatch on ``config.kind``. Pass ``draw`` to reuse randomness across calls."""
    if draw is None:
        draw = draw_randomness(problem, config, noise, rng)
    return _ESTIMATORS[config.kind](problem, z, config, noise, draw=draw)


# -- Monte-Carlo diagnostics --------------------------------------------------

def _sample_estimates(problem, z, config, noise, M, rng) -> np.ndarray:
    draws = draw_randomness(problem, config, noise, rng, size=M)
    if config.kind == RANDOM_DIRECTION:
        return _random_direction_batch(problem, z, draws.direction, draws.xi, noise, config.tau)
    if config.kind == FULL_COORDINATE:
        return _full_coordinate_batch(problem, z, draws.xi, noise, config.tau, problem.n, M)
    if problem.grad_y is None:
        raise CapabilityError(f"{problem.name} does not expose a y-gradient")
    gx = _full_coordinate_batch(problem, z, draws.xi, noise, config.tau, problem.n_x, M)
    gy = np.broadcast_to(-np.asarray(problem.grad_y(z), dtype=np.float64), (M, problem.n_y))
    if draws.xi is not None:
        gy = gy - draws.xi[:, problem.n_x:]
    return np.concatenate([gx, gy], axis=1)


@dataclass(frozen=True, eq=False)
class BiasEstimate:
    bias: np.ndarray
    bias_norm: float
    stderr: np.ndarray
    samples: int

    @property
    def usable(self) -> bool:
        """Standard errors are meaningful only for reasonably large samples."""
        return self.samples >= 1000


@dataclass(frozen=True, eq=False)
class MomentEstimate:
    mean: float
    stderr: float
    samples: int


def estimator_bias_mc(problem: ProblemSpec, z, config: EstimatorConfig, noise: NoiseModel,
                      samples: int, q: float = 2.0, seed: int = 0,
                      rng: np.random.Generator | None = None, chunk: int = 20_000) -> BiasEstimate:
    """Monte-Carlo ``E[g] - F(z)``, its ``q``-norm and componentwise standard errors.

    With a single sample the standard errors are NaN and :attr:`BiasEstimate.usable` is False.
    """
    if problem.operator is None:
        raise CapabilityError(f"{problem.name} has no analytic operator")
    if samples < 1:
        raise ValueError("need at least one sample")
    z = _check_point(problem, z)
    rng = np.random.default_rng(seed) if rng is None else rng
    total = np.zeros(problem.n)
    total_sq = np.zeros(problem.n)
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        G = _sample_estimates(problem, z, config, noise, m, rng)
        total += G.sum(axis=0)
        total_sq += np.sum(G * G, axis=0)
        done += m
    mean = total / samples
    if samples > 1:
        var = np.maximum(total_sq / samples - mean * mean, 0.0) * samples / (samples - 1)
        stderr = np.sqrt(var / samples)
    else:
        stderr = np.full(problem.n, np.nan)
    bias = mean - problem.F(z)
    return BiasEstimate(bias, dual_norm(q, bias), stderr, samples)


def estimator_second_moment_mc(problem: ProblemSpec, z, config: EstimatorConfig, noise: NoiseModel,
                               samples: int, q: float = 2.0, centered: bool | None = None,
                               seed: int = 0, rng: np.random.Generator | None = None,
                               chunk: int = 20_000) -> MomentEstimate:
    """Monte-Carlo ``E||g||_q^2`` (random-direction) or ``E||g - F(z)||_q^2`` (otherwise).

    ``centered`` overrides the default choice of raw vs centered moment.
    """
    if centered is None:
        centered = config.kind != RANDOM_DIRECTION
    if centered and problem.operator is None:
        raise CapabilityError(f"{problem.name} has no analytic operator")
    if samples < 1:
        raise ValueError("need at least one sample")
    z = _check_point(problem, z)
    rng = np.random.default_rng(seed) if rng is None else rng
    Fz = problem.F(z) if centered else None
    s = s2 = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        G = _sample_estimates(problem, z, config, noise, m, rng)
        if centered:
            G = G - Fz
        v = lp_norm(q, G, axis=1) ** 2
        s += float(v.sum())
        s2 += float(np.sum(v * v))
        done += m
    mean = s / samples
    if samples > 1:
        var = max(s2 / samples - mean * mean, 0.0) * samples / (samples - 1)
        stderr = float(np.sqrt(var / samples))
    else:
        stderr = float("nan")
    return MomentEstimate(mean, stderr, samples)


@dataclass(frozen=True)
class EstimatorBounds:
    """Theoretical ceilings on ``||E g - F(z)||_q`` and on the second moment.

    For the random-direction estimator ``second_moment`` bounds the raw
    ``E||g||_q^2``; for full-coordinate it bounds ``E||g - F(z)||_q^2``.
    """

    bias: float
    second_moment: float


def estimator_bounds(kind: str, n: int, q: float, L: float, sigma: float, delta: float, tau: float,
                     L2: float | None = None, residual_sq: float = 0.0,
                     F_star_sq: float = 0.0) -> EstimatorBounds:
    """Bias and second-moment bounds for ``g_d`` or ``g_f`` at a point.

    ``residual_sq`` is ``||F(z) - F(z*)||_2^2`` and ``F_star_sq`` is
    ``||F(z*)||_2^2``; only the random-direction moment bound uses them.
    """
    L2 = L if L2 is None else L2
    if kind == RANDOM_DIRECTION:
        rho = rho_n(q, n)
        a = n ** (2.0 / q) * rho
        b = n ** (1.0 / q + 0.5) * np.sqrt(rho)
        bias = 2 * b * L * tau + 4 * b * delta / tau
        moment = (48 * a * (residual_sq + F_star_sq + sigma**2) + 8 * a * n * L**2 * tau**2
                  + 16 * a * n * delta**2 / tau**2)
        return EstimatorBounds(float(bias), float(moment))
    if kind == FULL_COORDINATE:
        bias = np.sqrt(n) * L * tau + 2 * np.sqrt(n) * delta / tau
        moment = 3 * sigma**2 + 3 * n * L2**2 * tau**2 + 6 * n * delta**2 / tau**2
        return EstimatorBounds(float(bias), float(moment))
    raise ConfigError(f"no closed-form bounds for estimator {kind!r}")
