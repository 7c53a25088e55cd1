import itertools

import numpy as np
import pytest

from qlcs.core import best_k_approx, phase_aligned_distance, support
from qlcs.greedy import (GreedyConfig, GreedyTrace, SubsolverConfig, greedy_recover,
                         recovery_error_bound, subproblem)
from qlcs.operators import LinearOperator, lipschitz_perturbed, make_gaussian, rank1_phase
from qlcs.ripprobe import decay_threshold_kappa, probe_linear_rip, sample_sparse_sphere
from qlcs.rng import make_rng

LSQ = SubsolverConfig(kind="linear_least_squares")


def test_config_validation():
    with pytest.raises(ValueError):
        SubsolverConfig(kind="magic")
    with pytest.raises(ValueError):
        SubsolverConfig(starts=0)
    with pytest.raises(ValueError):
        GreedyConfig(p=0.5)
    with pytest.raises(ValueError):
        GreedyConfig(k_max=0)
    with pytest.raises(ValueError):
        greedy_recover(LinearOperator(np.eye(3)), np.zeros(3), GreedyConfig(k_max=4))
    assert GreedyConfig(subsolver={"starts": 3}).subsolver.starts == 3


def test_subproblem_identity_and_empty(rng):
    b = rng.standard_normal(6)
    op = LinearOperator(np.eye(6))
    res = subproblem(op, b, [1, 4], cfg=LSQ)
    expect = np.zeros(6)
    expect[[1, 4]] = b[[1, 4]]
    assert np.allclose(res.x, expect)
    res = subproblem(op, b, [])
    assert np.all(res.x == 0) and res.residual == pytest.approx(np.linalg.norm(b))


def test_subproblem_matches_pseudoinverse(rng):
    A = make_gaussian(12, 20, 4, "by_sqrt_n")
    op = LinearOperator(A)
    for _ in range(20):
        S = sorted(rng.choice(20, 3, replace=False))
        b = rng.standard_normal(12)
        oracle = np.linalg.pinv(A[:, S]) @ b
        assert np.allclose(subproblem(op, b, S, cfg=LSQ).x[S], oracle, atol=1e-8)
        # the local search reaches the same minimizer of the convex problem
        assert np.allclose(subproblem(op, b, S, cfg=SubsolverConfig(starts=2)).x[S], oracle, atol=1e-6)


def test_subproblem_rank1_one_dimensional():
    op = rank1_phase(7, 3, 21)
    xhat = np.array([2.0, 0, 0])
    b = op.evaluate(xhat)
    res = subproblem(op, b, [0], cfg=SubsolverConfig(starts=3), rng=make_rng(0))
    # grid oracle for min_t sum_i (a_i1^2 t^2 - b_i)^2
    t = np.linspace(-4, 4, 80001)
    a2 = op.vectors[:, 0] ** 2
    obj = ((a2[:, None] * t[None, :] ** 2 - b[:, None]) ** 2).sum(axis=0)
    assert abs(abs(res.x[0]) - abs(t[np.argmin(obj)])) <= 1e-4
    assert abs(abs(res.x[0]) - 2.0) <= 1e-8 and res.residual <= 1e-8


def test_subproblem_p1_and_singular(rng):
    A = make_gaussian(10, 6, 2)
    A[:, 1] = A[:, 0]  # duplicate column: singular restricted system
    op = LinearOperator(A)
    b = A[:, 0] * 1.5
    res = subproblem(op, b, [0, 1], cfg=LSQ)
    assert np.allclose(res.x[[0, 1]], [0.75, 0.75])  # minimum-norm solution
    res = subproblem(op, b, [0, 2], p=1.0, cfg=SubsolverConfig(starts=2))
    assert res.residual <= 1e-6


def test_greedy_linear_exact_recovery():
    A = make_gaussian(15, 20, 8, "by_sqrt_n")
    op = LinearOperator(A)
    for s in range(10):
        xhat = sample_sparse_sphere(20, 3, make_rng(s))
        tr = greedy_recover(op, A @ xhat, GreedyConfig(k_max=3, subsolver=LSQ))
        tr.check_invariants()
        assert tr.supports[-1] == sorted(support(xhat).tolist())
        assert np.linalg.norm(tr.final - xhat) <= 1e-6


def test_greedy_exhaustive_support_oracle():
    # at small scale the k-step greedy residual is never below the best support's residual
    A = make_gaussian(6, 8, 3)
    op = LinearOperator(A)
    xhat = np.zeros(8)
    xhat[[1, 5]] = [1.0, -0.7]
    b = A @ xhat
    tr = greedy_recover(op, b, GreedyConfig(k_max=2, subsolver=LSQ))
    best = min(np.linalg.norm(A[:, S] @ np.linalg.lstsq(A[:, S], b, rcond=None)[0] - b)
               for S in itertools.combinations(range(8), 2))
    assert tr.residual_lp[-1] == pytest.approx(best, abs=1e-10)


def test_greedy_zero_data_and_tie_break():
    op = LinearOperator(np.eye(4))
    tr = greedy_recover(op, np.zeros(4), GreedyConfig(k_max=2, subsolver=LSQ))
    assert tr.supports == [[0]] and tr.residual_lp == [0.0]
    assert np.all(tr.final == 0)


def test_greedy_residual_tol_stops_early():
    op = LinearOperator(np.eye(5))
    b = np.array([0, 3.0, 0, 0, 0.001])
    tr = greedy_recover(op, b, GreedyConfig(k_max=3, residual_tol=0.01, subsolver=LSQ))
    assert tr.supports == [[1]]


def test_greedy_phase_retrieval_majority():
    ok = 0
    cfg = GreedyConfig(p=2.0, k_max=2, subsolver=SubsolverConfig(starts=5, max_iters=60, init_scale=0.5))
    for s in range(10):
        op = rank1_phase(11, 20, 100 + s)
        xhat = sample_sparse_sphere(20, 2, make_rng(s))
        tr = greedy_recover(op, op.evaluate(xhat), cfg)
        tr.check_invariants()
        ok += phase_aligned_distance(tr.final, xhat) <= 1e-3
    assert ok >= 6


def test_greedy_nonlinear_operator_runs():
    op = lipschitz_perturbed(12, 10, 1, epsilon=0.5, normalize="by_sqrt_n")
    xhat = np.zeros(10)
    xhat[[2, 7]] = [1.0, -0.5]
    tr = greedy_recover(op, op.evaluate(xhat), GreedyConfig(k_max=2, subsolver=SubsolverConfig(starts=3)))
    tr.check_invariants()
    assert tr.supports[-1] == [2, 7]
    assert np.linalg.norm(tr.final - xhat) <= 1e-6


def test_check_invariants_detects_violations():
    bad = GreedyTrace(supports=[[0], [1, 2]], iterates=[np.zeros(3)] * 2, residual_lp=[1.0, 0.5])
    with pytest.raises(AssertionError):
        bad.check_invariants()
    bad = GreedyTrace(supports=[[0], [0, 1]], iterates=[np.zeros(3)] * 2, residual_lp=[1.0, 2.0])
    with pytest.raises(AssertionError):
        bad.check_invariants()


def test_recovery_error_bound():
    v = recovery_error_bound([2], 0.5, 1.5, 0.0, 0.3, 0.0, 1.0)
    assert v[0] == pytest.approx(0.09 * np.sqrt(2) * 4)
    vals = recovery_error_bound(np.arange(1, 8), 0.5, 1.5, 0.2, 0.3, 0.0, 1.0)
    assert np.all(np.diff(vals) < 0)
    hs = recovery_error_bound([2], 0.5, 1.5, 0.0, 0.3, 0.0, 1.0, "hs")
    assert hs[0] == pytest.approx(0.09 * np.sqrt(3) * 4)
    assert recovery_error_bound([3], 0.5, 1.5, 0, 0.3, 0.2, 1.0)[0] >= 0.4
    with pytest.raises(ValueError):
        recovery_error_bound([1], 0.5, 1.0, 0, 1.2, 0, 1)


def test_decay_ordering_when_constants_certify():
    # near-isometric A: probe alpha, beta; L_k <= beta bounds the tail ratio for linear maps
    d, n = 20, 400
    A = make_gaussian(n, d, 5, "by_sqrt_n")
    probe = probe_linear_rip(A, 2 * d // 2, 4000, 1)
    svals = np.linalg.svd(A, compute_uv=False)
    alpha, beta = min(probe.alpha_hat, svals[-1]), max(probe.beta_hat, svals[0])
    kappa_max = decay_threshold_kappa(alpha, beta, beta, 0.0, 1.0)
    kappa = 0.9 * kappa_max
    op = LinearOperator(A)
    for s in range(5):
        rng = make_rng(s)
        x = rng.permutation(kappa ** np.arange(d) * rng.choice([-1, 1], d))
        tr = greedy_recover(op, A @ x, GreedyConfig(k_max=4, subsolver=LSQ))
        for j, S in enumerate(tr.supports, start=1):
            assert S == sorted(support(best_k_approx(x, j)).tolist())
