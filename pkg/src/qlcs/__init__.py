"""Sparse recovery from quasi-linear measurements ``A(x) = F(x) x``.

Modules
    core          sparsity utilities, decay classes, norms
    operators     measurement operators and seeded ensembles
    greedy        l_p-greedy (generalized orthogonal least squares)
    thresholding  quasi-linear iterative hard / soft thresholding
    ripprobe      Monte Carlo probes of isometry-type conditions
    experiments   configs, runners and the ``qlcs`` command line tool
"""
from .core import (best_k_approx, decay_tail_bound_check, hs_outer_distance, in_decay_class,
                   lp_norm, phase_aligned_distance, rearrange, support)
from .greedy import GreedyConfig, GreedyTrace, SubsolverConfig, greedy_recover, subproblem
from .operators import EnsembleSpec, QuasiLinearOperator, spectral_norm
from .thresholding import (IHTConfig, ISTConfig, ThresholdingReport, alpha_continuation, iht, ist,
                           objective_J, soft_threshold, surrogate_J)

__version__ = "0.1.0"

__all__ = [
    "best_k_approx", "decay_tail_bound_check", "hs_outer_distance", "in_decay_class", "lp_norm",
    "phase_aligned_distance", "rearrange", "support",
    "GreedyConfig", "GreedyTrace", "SubsolverConfig", "greedy_recover", "subproblem",
    "EnsembleSpec", "QuasiLinearOperator", "spectral_norm",
    "IHTConfig", "ISTConfig", "ThresholdingReport", "alpha_continuation", "iht", "ist",
    "objective_J", "soft_threshold", "surrogate_J",
]
