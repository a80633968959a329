"""Zeroth-order mirror-descent and extra-step solvers.

=========================  =====================================================
``zovia``                  mirror descent: ``z+ = prox_z(gamma * grad(z))``
``zoesvia``                extra step with fresh randomness for both estimates
``zosc_esvia``             single-call extra step reusing the previous estimate
``zoesvia_same_direction`` extra step sharing one ``(e, xi)`` draw per iteration
=========================  =====================================================

Each loop runs ``k = 0, ..., N`` (``N + 1`` iterations). The averaged output
is the mean of the points where the operator was estimated: ``z_k`` for
``zovia`` and the half-steps ``z_{k+1/2}`` for the extra-step methods.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import CapabilityError, ConfigError, DomainError
from .geometry import EUCLIDEAN, INF, GeometrySetup, SaddleIterate, prox, rho_n
from .metrics import TraceRecord, distance_metrics, eps_sad_bilinear, residual_F
from .oracles import (MIXED, RANDOM_DIRECTION, EstimatorConfig, NoiseModel, draw_randomness,
                      estimate)
from .problems import ProblemSpec

__all__ = [
    "ALGORITHMS", "RunConfig", "RunResult", "ScheduleParams", "Schedule", "run",
    "run_zovia", "run_zoesvia", "run_zosc_esvia", "run_zoesvia_same_direction",
    "schedule", "average_iterates",
]

ALGORITHMS = ("zovia", "zoesvia", "zosc_esvia", "zoesvia_same_direction")
OUTPUT_MODES = ("last_iterate", "averaged")
COROLLARIES = ("c1_convex", "c1_strongly_convex", "c2_convex", "c2_strongly_convex", "c3_mixed")


@dataclass(eq=False)
class RunConfig:
    """Everything one solver run needs besides the problem and geometry.

    ``iterations`` is ``N``; the loop performs ``N + 1`` steps unless
    ``oracle_budget`` stops it first (after the step that reaches the
    budget). ``gamma_bound`` only triggers a warning when exceeded.
    """

    algorithm: str
    estimator: EstimatorConfig
    gamma: float
    iterations: int
    seed: int = 0
    output_mode: str | None = None
    noise: NoiseModel = field(default_factory=NoiseModel)
    trace_every: int = 1
    oracle_budget: int | None = None
    z0: np.ndarray | None = None
    gamma_bound: float | None = None
    check_feasibility: bool = False
    keep_iterates: bool = False

    def validate(self, problem: ProblemSpec, setup: GeometrySetup) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma}")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.trace_every < 1:
            raise ConfigError("trace_every must be >= 1")
        if self.oracle_budget is not None and self.oracle_budget < 1:
            raise ConfigError("oracle budget must be positive")
        if self.output_mode is not None and self.output_mode not in OUTPUT_MODES:
            raise ConfigError(f"unknown output mode {self.output_mode!r}")
        if self.algorithm == "zosc_esvia" and setup.prox_kind != EUCLIDEAN:
            raise ConfigError("zosc_esvia requires the squared-Euclidean prox (p = 2)")
        if self.algorithm == "zovia" and self.estimator.kind == MIXED:
            raise ConfigError("zovia takes the random-direction or full-coordinate estimator")
        if self.estimator.kind == MIXED and problem.grad_y is None:
            raise CapabilityError(f"{problem.name} does not expose a y-gradient")
        if setup.n != problem.n or setup.n_x != problem.n_x:
            raise ConfigError("geometry dimensions do not match the problem")
        if self.gamma_bound is not None and self.gamma > self.gamma_bound:
            warnings.warn(f"gamma={self.gamma:g} exceeds the schedule bound {self.gamma_bound:g}",
                          RuntimeWarning, stacklevel=3)


@dataclass(eq=False)
class RunResult:
    final: SaddleIterate
    averaged: SaddleIterate
    trace: list[TraceRecord]
    total_oracle_calls: int
    total_gradient_calls: int
    iterations_run: int
    output_mode: str
    iterates: list[np.ndarray] | None = None

    @property
    def output(self) -> SaddleIterate:
        return self.averaged if self.output_mode == "averaged" else self.final


class _Run:
    """Shared bookkeeping: randomness, oracle counters, averaging and tracing."""

    def __init__(self, problem: ProblemSpec, setup: GeometrySetup | None, config: RunConfig):
        setup = problem.default_setup if setup is None else setup
        config.validate(problem, setup)
        self.problem, self.setup, self.config = problem, setup, config
        self.rng = np.random.default_rng(config.seed)
        if config.z0 is None:
            z0 = setup.feasible_set.center()
        else:
            z0 = np.array(config.z0, dtype=np.float64)
            if not setup.feasible_set.contains(z0, 1e-9):
                raise DomainError("starting point is not feasible")
        self.z0 = z0
        self.oracle_calls = 0
        self.gradient_calls = 0
        self.avg_sum = np.zeros(problem.n)
        self.avg_count = 0
        self.iterates: list[np.ndarray] | None = [] if config.keep_iterates else None
        self.trace: list[TraceRecord] = []
        self.t0 = time.perf_counter()
        self.output_mode = config.output_mode or ("averaged" if problem.mu == 0 else "last_iterate")

    def grad(self, z: np.ndarray, draw=None) -> np.ndarray:
        c = self.config
        sample = estimate(self.problem, z, c.estimator, c.noise, rng=self.rng, draw=draw)
        self.oracle_calls += sample.oracle_calls
        self.gradient_calls += sample.gradient_calls
        return sample.g

    def draw(self):
        c = self.config
        return draw_randomness(self.problem, c.estimator, c.noise, self.rng)

    def prox(self, z: np.ndarray, d: np.ndarray, k: int) -> np.ndarray:
        try:
            out = prox(self.setup, z, self.config.gamma * d)
        except DomainError as exc:
            raise DomainError(str(exc), iteration=k) from exc
        except ValueError as exc:
            raise DomainError(f"prox failed: {exc}", iteration=k) from exc
        if self.config.check_feasibility and not self.setup.feasible_set.contains(out):
            raise DomainError("prox output left the feasible set", iteration=k)
        return out

    def accumulate(self, point: np.ndarray) -> None:
        self.avg_sum += point
        self.avg_count += 1
        if self.iterates is not None:
            self.iterates.append(point.copy())

    def averaged(self) -> np.ndarray:
        return self.avg_sum / self.avg_count

    def budget_hit(self) -> bool:
        b = self.config.oracle_budget
        return b is not None and self.oracle_calls + self.gradient_calls >= b

    def record(self, k: int, z: np.ndarray, last: bool) -> None:
        if not (last or k % self.config.trace_every == 0):
            return
        p = self.problem
        eps = res = breg = eu = None
        if p.payoff is not None:
            zbar = self.averaged()
            eps = eps_sad_bilinear(p.payoff, zbar[: p.n_x], zbar[p.n_x:])
        if p.solution is not None:
            if p.operator is not None:
                res = residual_F(p, z)
            breg, eu = distance_metrics(self.setup, z, p.solution)
        self.trace.append(TraceRecord(
            k=k, oracle_calls=self.oracle_calls + self.gradient_calls, eps_sad=eps, residual_F=res,
            bregman_to_solution=breg, euclid_sq_to_solution=eu,
            wall_ms=(time.perf_counter() - self.t0) * 1e3,
        ))

    def result(self, z: np.ndarray, iterations_run: int) -> RunResult:
        n_x = self.problem.n_x
        return RunResult(
            final=SaddleIterate.from_vector(z, n_x),
            averaged=SaddleIterate.from_vector(self.averaged(), n_x),
            trace=self.trace,
            total_oracle_calls=self.oracle_calls,
            total_gradient_calls=self.gradient_calls,
            iterations_run=iterations_run,
            output_mode=self.output_mode,
            iterates=self.iterates,
        )


def run_zovia(problem: ProblemSpec, setup: GeometrySetup, config: RunConfig) -> RunResult:
    """Mirror descent with a zeroth-order operator estimate."""
    r = _Run(problem, setup, config)
    z = r.z0
    N = config.iterations
    k = 0
    for k in range(N + 1):
        d = r.grad(z)
        r.accumulate(z)
        z = r.prox(z, d, k)
        last = k == N or r.budget_hit()
        r.record(k, z, last)
        if last:
            break
    return r.result(z, k + 1)


def _extra_step(problem, setup, config, same_direction: bool) -> RunResult:
    r = _Run(problem, setup, config)
    z = r.z0
    N = config.iterations
    k = 0
    for k in range(N + 1):
        draw = r.draw() if same_direction else None
        d = r.grad(z, draw)
        z_half = r.prox(z, d, k)
        d_half = r.grad(z_half, draw)
        z = r.prox(z, d_half, k)
        r.accumulate(z_half)
        last = k == N or r.budget_hit()
        r.record(k, z, last)
        if last:
            break
    return r.result(z, k + 1)


def run_zoesvia(problem: ProblemSpec, setup: GeometrySetup, config: RunConfig) -> RunResult:
    """Extra-step method; both estimates per iteration use independent randomness."""
    return _extra_step(problem, setup, config, same_direction=False)


def run_zoesvia_same_direction(problem: ProblemSpec, setup: GeometrySetup, config: RunConfig) -> RunResult:
    """Extra-step method reusing the iteration's direction and noise draw for both estimates."""
    return _extra_step(problem, setup, config, same_direction=True)


def run_zosc_esvia(problem: ProblemSpec, setup: GeometrySetup, config: RunConfig) -> RunResult:
    """Single-call extra step: the half-step uses the previous iteration's estimate.

    The estimate used at ``k = 0`` comes from one extra call at ``z_0``.
    """
    r = _Run(problem, setup, config)
    z = r.z0
    d_prev = r.grad(z)
    N = config.iterations
    k = 0
    for k in range(N + 1):
        z_half = r.prox(z, d_prev, k)
        d_prev = r.grad(z_half)
        z = r.prox(z, d_prev, k)
        r.accumulate(z_half)
        last = k == N or r.budget_hit()
        r.record(k, z, last)
        if last:
            break
    return r.result(z, k + 1)


_RUNNERS: dict[str, Callable[[ProblemSpec, GeometrySetup, RunConfig], RunResult]] = {
    "zovia": run_zovia,
    "zoesvia": run_zoesvia,
    "zosc_esvia": run_zosc_esvia,
    "zoesvia_same_direction": run_zoesvia_same_direction,
}


def run(problem: ProblemSpec, setup: GeometrySetup | None, config: RunConfig) -> RunResult:
    """Dispatch on ``config.algorithm``; ``setup=None`` uses the problem's default geometry."""
    if config.algorithm not in _RUNNERS:
        raise ConfigError(f"unknown algorithm {config.algorithm!r}")
    return _RUNNERS[config.algorithm](problem, setup, config)


def average_iterates(iterates: Sequence[np.ndarray]) -> np.ndarray:
    """Arithmetic mean of a non-empty sequence of points."""
    pts = [it.z if isinstance(it, SaddleIterate) else np.asarray(it, dtype=np.float64) for it in iterates]
    if not pts:
        raise ValueError("cannot average an empty sequence of iterates")
    return np.mean(np.stack(pts), axis=0)


# -- step-size and smoothing schedules -------------------------------------------

@dataclass(frozen=True)
class ScheduleParams:
    """Problem constants for one of the corollary schedules.

    ``constant_factor`` multiplies the smoothing step, whose formula is only
    fixed up to a constant.
    """

    corollary: str
    L: float | None = None
    L2: float | None = None
    mu: float = 0.0
    sigma: float = 0.0
    delta_cap: float = 0.0
    D_p: float | None = None
    target_eps: float | None = None
    constant_factor: float = 1.0

    def __post_init__(self):
        if self.corollary not in COROLLARIES:
            raise ConfigError(f"unknown corollary {self.corollary!r}")
        for name in ("mu", "sigma", "delta_cap", "constant_factor"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")
        if self.corollary.endswith("strongly_convex") and not self.mu > 0:
            raise ConfigError("strongly-convex schedules need mu > 0")


@dataclass(frozen=True)
class Schedule:
    gamma: float
    tau: float
    delta_budget: float
    iterations: int


def _npow(n: int, e: float) -> float:
    return 1.0 if e == 0.0 else float(n) ** e


def schedule(params: ScheduleParams, setup: GeometrySetup, n: int, N: int | None = None,
             target_eps: float | None = None) -> Schedule:
    """Step size, smoothing step, tolerated adversarial noise and iteration count.

    ``c1_*`` follow the mirror-descent schedule (random-direction estimator,
    exponent ``q`` from ``setup``), ``c2_*`` the extra-step schedules
    (full-coordinate estimator) and ``c3_mixed`` the mixed-oracle one, for
    which ``n`` should be the dimension of the zeroth-order block. When ``N``
    is not given it is taken from the complexity bound for ``target_eps``.
    Big-O constants are set to one.

    ``c2_strongly_convex`` with ``sigma > 0`` and a fixed ``N`` uses the
    horizon-dependent step ``min{1/(6L), ln(max{2, mu^2 r0 N^2 / c}) / (mu N)}``
    with ``r0 = 2 D^2`` and ``c = 12 sigma^2``; a constant step would leave a
    noise floor that does not shrink with ``N``.
    """
    eps = target_eps if target_eps is not None else params.target_eps
    if eps is None or not eps > 0:
        raise ConfigError("schedule needs a positive target accuracy")
    if params.L is None or not params.L > 0:
        raise ConfigError("schedule needs the Lipschitz constant L")
    L = params.L
    L2 = params.L2 if params.L2 is not None else L
    D = params.D_p if params.D_p is not None else setup.diameter_p
    if not math.isfinite(D) or D <= 0:
        raise ConfigError("schedule needs a finite positive diameter D_p")
    mu, sigma, cf = params.mu, params.sigma, params.constant_factor
    sq_n = math.sqrt(n)
    cor = params.corollary

    if cor.startswith("c1"):
        q = setup.q
        rho = rho_n(q, n)
        inv_q = 0.0 if q == INF else 1.0 / q
        n2q = _npow(n, 2 * inv_q)
        n_half = _npow(n, inv_q + 0.5)
        if cor == "c1_convex":
            N_req = max(n2q * rho * L ** 2 * D ** 2 / eps, n2q * rho * sigma ** 2 * D ** 2 / eps ** 2)
            N_use = N if N is not None else math.ceil(N_req)
            g_noise = D / (_npow(n, inv_q) * math.sqrt(rho) * sigma * math.sqrt(N_use)) if sigma > 0 else math.inf
            gamma = min(1.0 / (48 * n2q * rho * L), g_noise)
            tau = cf * min(eps / (n_half * math.sqrt(rho) * L ** 2 * D),
                           max(math.sqrt(eps / (n * L2 ** 2)), sigma / (sq_n * L2)))
        else:
            N_req = max(n2q * rho * L ** 2 / mu ** 2 * math.log(1.0 / eps), n2q * rho * sigma ** 2 / (mu ** 2 * eps))
            N_use = N if N is not None else math.ceil(N_req)
            gamma = mu / (96 * n2q * rho * L ** 2)
            tau = cf * min(max(math.sqrt(eps) * L / L2, sigma / (sq_n * L2)),
                           max(eps * mu / (n_half * math.sqrt(rho) * L * D),
                               sigma ** 2 * mu / (n_half * math.sqrt(rho) * L ** 3 * D)))
    elif cor in ("c2_convex", "c3_mixed"):
        N_req = max(L * D ** 2 / eps, sigma ** 2 * D ** 2 / eps ** 2)
        N_use = N if N is not None else math.ceil(N_req)
        gamma = min(1.0 / (2 * L), D / (sigma * math.sqrt(N_use)) if sigma > 0 else math.inf)
        tau = cf * min(eps / (sq_n * L * D), max(math.sqrt(eps * L / (n * L2 ** 2)), sigma / (sq_n * L2)))
    else:  # c2_strongly_convex
        N_req = max(L / mu * math.log(1.0 / eps), sigma ** 2 / (mu ** 2 * eps))
        N_use = N if N is not None else math.ceil(N_req)
        gamma = 1.0 / (6 * L)
        if sigma > 0:
            r0, c = 2 * D ** 2, 12 * sigma ** 2
            gamma = min(gamma, math.log(max(2.0, mu ** 2 * r0 * N_use ** 2 / c)) / (mu * N_use))
        tau = cf * min(max(math.sqrt(eps * mu * L / L2 ** 2), sigma / (sq_n * L2)),
                       max(mu * eps / (sq_n * L * D), sigma ** 2 / (sq_n * L ** 2 * D)))
    return Schedule(gamma=gamma, tau=tau, delta_budget=L2 * tau ** 2, iterations=int(N_use))
