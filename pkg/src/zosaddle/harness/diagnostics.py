"""Monte-Carlo checks of the estimator bias and second-moment bounds."""
from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass

import numpy as np

from ..geometry import INF
from ..oracles import (FULL_COORDINATE, RANDOM_DIRECTION, EstimatorConfig, NoiseModel,
                       estimator_bias_mc, estimator_bounds, estimator_second_moment_mc)
from ..problems import make_sc_quadratic

__all__ = ["BoundCheck", "GRIDS", "verify_estimator_bounds"]

# (n, q, tau, Delta) combinations; n is the total dimension n_x + n_y
GRIDS = {
    "small": dict(n=(4,), q=(2.0, INF), tau=(1e-2,), delta=(0.0, 1e-4), points=2, samples=20_000),
    "full": dict(n=(4, 20), q=(2.0, INF), tau=(1e-1, 1e-2), delta=(0.0, 1e-4), points=3, samples=100_000),
}


@dataclass(frozen=True)
class BoundCheck:
    estimator: str
    quantity: str
    n: int
    q: float
    tau: float
    delta: float
    point: int
    measured: float
    stderr: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound + 3.0 * self.stderr

    def as_dict(self) -> dict:
        d = asdict(self)
        d["q"] = "inf" if self.q == INF else self.q
        d["passed"] = self.passed
        return d


def verify_estimator_bounds(grid: str = "small", sigma: float = 0.1, seed: int = 0) -> list[BoundCheck]:
    """Evaluate both estimators on the strongly-monotone quadratic over a parameter grid.

    For each setting and random point this measures the bias norm and the
    second moment and compares them with :func:`estimator_bounds`. Bias
    checks use ``sigma = 0``; moment checks use the given ``sigma``.
    """
    spec = GRIDS[grid]
    rng = np.random.default_rng(seed)
    out: list[BoundCheck] = []
    for n, q, tau, delta in itertools.product(spec["n"], spec["q"], spec["tau"], spec["delta"]):
        problem = make_sc_quadratic(n // 2, n - n // 2, 1.0, seed=seed)
        L = problem.L
        F_star = problem.F(problem.solution)
        F_star_sq = float(F_star @ F_star)
        kind_delta = "sine_adversarial" if delta > 0 else "zero"
        for point in range(spec["points"]):
            z = problem.feasible_set.sample(rng)
            d = problem.F(z) - F_star
            residual_sq = float(d @ d)
            for kind in (RANDOM_DIRECTION, FULL_COORDINATE):
                cfg = EstimatorConfig(kind=kind, tau=tau)
                quiet = NoiseModel(sigma=0.0, delta_cap=delta, delta_kind=kind_delta, delta_seed=seed)
                noisy = NoiseModel(sigma=sigma, delta_cap=delta, delta_kind=kind_delta, delta_seed=seed)
                samples = spec["samples"] if kind == RANDOM_DIRECTION else max(1000, spec["samples"] // 10)
                run_seed = int(rng.integers(2**31))
                b = estimator_bias_mc(problem, z, cfg, quiet, samples, q=q, seed=run_seed)
                m = estimator_second_moment_mc(problem, z, cfg, noisy, samples, q=q, seed=run_seed + 1)
                bias_bound = estimator_bounds(kind, n, q, L, 0.0, delta, tau, residual_sq=residual_sq,
                                              F_star_sq=F_star_sq).bias
                moment_bound = estimator_bounds(kind, n, q, L, sigma, delta, tau, residual_sq=residual_sq,
                                                F_star_sq=F_star_sq).second_moment
                # stderr of a norm of the mean is bounded by the norm of the componentwise stderrs
                bias_se = float(np.linalg.norm(b.stderr))
                out.append(BoundCheck(kind, "bias", n, q, tau, delta, point, b.bias_norm, bias_se, bias_bound))
                out.append(BoundCheck(kind, "second_moment", n, q, tau, delta, point, m.mean, m.stderr,
                                      moment_bound))
    return out
