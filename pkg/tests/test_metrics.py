import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zosaddle.exceptions import CapabilityError
from zosaddle.geometry import FeasibleSet, GeometrySetup, Simplex, Unconstrained
from zosaddle.metrics import TraceRecord, distance_metrics, eps_sad_bilinear, residual_F
from zosaddle.problems import make_matrix_game, make_sc_quadratic

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_eps_sad_at_equilibrium():
    assert eps_sad_bilinear(SWAP, [0.5, 0.5], [0.5, 0.5]) == pytest.approx(0.0, abs=1e-15)


def test_eps_sad_vertex_example():
    assert eps_sad_bilinear(SWAP, [1.0, 0.0], [1.0, 0.0]) == pytest.approx(1.0)


def test_eps_sad_rejects_infeasible():
    with pytest.raises(ValueError):
        eps_sad_bilinear(SWAP, [0.7, 0.7], [0.5, 0.5])
    with pytest.raises(ValueError):
        eps_sad_bilinear(SWAP, [1.0], [0.5, 0.5])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_eps_sad_nonnegative(k, n, seed):
    rng = np.random.default_rng(seed)
    C = rng.normal(size=(k, n))
    x, y = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(k))
    assert eps_sad_bilinear(C, x, y) >= 0


def _simplex_grid(dim, step):
    ticks = np.arange(0, 1 + step / 2, step)
    if dim == 1:
        return np.ones((1, 1))
    if dim == 2:
        return np.stack([ticks, 1 - ticks], axis=1)
    A, B = np.meshgrid(ticks, ticks, indexing="ij")
    keep = A + B <= 1 + 1e-12
    return np.stack([A[keep], B[keep], np.clip(1 - A[keep] - B[keep], 0, None)], axis=1)


@pytest.mark.parametrize("k,n", [(2, 2), (3, 2), (2, 3), (3, 3)])
def test_eps_sad_matches_grid_search(k, n):
    rng = np.random.default_rng(k * 10 + n)
    C = rng.uniform(-1, 1, size=(k, n))
    x, y = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(k))
    step = 1e-3 if max(k, n) <= 2 else 2e-3
    Y, X = _simplex_grid(k, step), _simplex_grid(n, step)
    brute = np.max(Y @ (C @ x)) - np.min((y @ C) @ X.T)
    assert eps_sad_bilinear(C, x, y) == pytest.approx(brute, abs=1e-6)


def test_eps_sad_permutation_invariant():
    rng = np.random.default_rng(5)
    C = rng.normal(size=(4, 5))
    x, y = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(4))
    pr, pc = rng.permutation(4), rng.permutation(5)
    assert eps_sad_bilinear(C[pr][:, pc], x[pc], y[pr]) == pytest.approx(eps_sad_bilinear(C, x, y), abs=1e-14)


def test_residual_examples():
    p = make_sc_quadratic(1, 1, 1.0, A=[[1.0]])
    assert residual_F(p, p.solution) == 0.0
    assert residual_F(p, [1.0, 1.0]) == pytest.approx(4.0)


def test_residual_at_interior_equilibrium():
    p = make_matrix_game(SWAP, solution=[0.5, 0.5, 0.5, 0.5])
    F = p.F(p.solution)
    assert F[0] == F[1] and F[2] == F[3]
    assert residual_F(p, p.solution) == 0.0


def test_residual_needs_solution():
    with pytest.raises(CapabilityError):
        residual_F(make_matrix_game(SWAP), [0.5, 0.5, 0.5, 0.5])


def test_distance_examples():
    e = GeometrySetup.euclidean(FeasibleSet(Unconstrained(1), Unconstrained(1)))
    assert distance_metrics(e, [1.0, 0.0], [0.0, 0.0]) == (0.5, 1.0)
    assert distance_metrics(e, [0.3, 0.3], [0.3, 0.3]) == (0.0, 0.0)
    s = GeometrySetup.entropy(FeasibleSet(Simplex(2), Simplex(1)))
    b, eu = distance_metrics(s, [0.5, 0.5, 1.0], [0.25, 0.75, 1.0])
    assert b == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(2 / 3), abs=1e-12)
    assert b == pytest.approx(0.1438, abs=1e-4)
    assert eu == pytest.approx(0.125)


def test_distance_at_boundary_solution_is_finite():
    s = GeometrySetup.entropy(FeasibleSet(Simplex(2), Simplex(2)))
    b, _ = distance_metrics(s, [0.5, 0.5, 0.5, 0.5], [1.0, 0.0, 0.0, 1.0])
    assert np.isfinite(b) and b > 0


def test_trace_record_optional_fields():
    r = TraceRecord(k=0, oracle_calls=3)
    assert r.eps_sad is None and r.wall_ms == 0.0


def test_metrics_do_not_mutate_inputs():
    C = SWAP.copy()
    x, y = np.array([0.3, 0.7]), np.array([0.6, 0.4])
    snapshot = [a.copy() for a in (C, x, y)]
    for _ in itertools.repeat(None, 2):
        eps_sad_bilinear(C, x, y)
    for a, b in zip((C, x, y), snapshot):
        assert np.array_equal(a, b)
