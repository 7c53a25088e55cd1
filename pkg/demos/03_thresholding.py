"""Soft and hard thresholding for a Lipschitz-perturbed map.

Soft thresholding minimizes ||A(x) - b||^2 + alpha ||x||_1 through surrogate
iterations. We run it along a decreasing alpha path, check that each limit is a
fixed point, then contrast with iterative hard thresholding and finally probe
how strongly the regularized solution map contracts for small data.

Run:  python demos/03_thresholding.py
"""
import numpy as np

from qlcs.operators import ScaledOperator, lipschitz_perturbed
from qlcs.ripprobe import sample_sparse_sphere
from qlcs.rng import make_rng
from qlcs.thresholding import (IHTConfig, ISTConfig, alpha_continuation, default_alpha, fixed_point_map, iht,
                               objective_J, probe_contraction)

n, d = 20, 80
op = lipschitz_perturbed(n, d, seed=2, epsilon=1.0)
scale = op.factor_bound()
sop = ScaledOperator(op, scale)  # unit step bound for the surrogate iteration

for k, norm in ((1, 0.01), (3, 0.01), (1, 0.5)):
    xhat = norm * sample_sparse_sphere(d, k, make_rng(k))
    b = sop.evaluate(xhat)
    a0 = default_alpha(sop, b)
    reps = alpha_continuation(sop, b, a0 * np.logspace(0, -4, 5), ISTConfig(alpha=a0, max_iters=4000), xhat=xhat)
    last = reps[-1]
    fp = np.linalg.norm(fixed_point_map(sop, b, a0 * 1e-4, last.final) - last.final)
    hard = iht(sop, b, IHTConfig(k=k))
    print(f"k={k} ||xhat||={norm:<5}  soft err {np.linalg.norm(last.final - xhat) / norm:8.2e} (rel), "
          f"J={objective_J(sop, b, a0 * 1e-4, last.final):.2e}, fixed-point gap {fp:.1e} | "
          f"hard err {np.linalg.norm(hard.final - xhat) / norm:8.2e} (rel)")

print("\ncontraction of the regularized solution map, shrinking the data:")
direction = op.evaluate(sample_sparse_sphere(d, 2, make_rng(9)))
direction /= np.linalg.norm(direction)
for bn in (0.003, 0.01, 0.03, 0.1):
    b = bn * direction
    res = probe_contraction(op, b, default_alpha(op, b), trials=60, seed=1)
    print(f"  ||b||={bn:<6} max Lipschitz ratio {res.ratio:.2e} over {res.samples} pairs")
