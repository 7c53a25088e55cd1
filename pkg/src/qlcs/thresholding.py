"""Iterative hard and soft thresholding for quasi-linear measurements.

Hard thresholding linearizes with ``F(x^(j))`` and keeps the k largest
entries after a gradient step. Soft thresholding minimizes the surrogate
functional ``J^S(x, a)`` in ``x`` with ``a`` frozen at the last iterate, which
amounts to one soft-thresholding step per iteration.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import as_signal, best_k_approx
from .rng import gaussian, make_rng

THIN_AFTER = 1000
THIN_EVERY = 10


@dataclass
class IHTConfig:
    k: int
    # None: mu = ||F(x)||_2^2, refreshed every `mu_refresh` iterations
    mu: Optional[float] = None
    max_iters: int = 2000
    x0: Optional[np.ndarray] = None
    stop_tol: float = 1e-10
    mu_refresh: int = 10

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.mu is not None and self.mu <= 0:
            raise ValueError("mu must be positive")


@dataclass
class ISTConfig:
    alpha: float
    max_iters: int = 5000
    x0: Optional[np.ndarray] = None
    stop_tol: float = 1e-10

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


@dataclass
class ThresholdingReport:
    final: np.ndarray
    iterates: list = field(default_factory=list)
    objective_history: list = field(default_factory=list)
    contraction_estimates: list = field(default_factory=list)
    fixed_point_residual: float = np.nan
    converged: bool = False
    diverged: bool = False
    iterations: int = 0
    # iterations at which the objective went up (recorded, not an error)
    objective_increases: list = field(default_factory=list)


def soft_threshold(x, alpha):
    """Shrink every entry toward zero by ``alpha/2`` (the prox of ``alpha|.|``
    under the squared distance); complex entries keep their phase."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    x = np.asarray(x)
    if not np.iscomplexobj(x):
        return np.sign(x) * np.maximum(np.abs(x) - 0.5 * alpha, 0.0)
    mag = np.abs(x)
    shrunk = np.maximum(mag - 0.5 * alpha, 0.0)
    return np.where(mag > 0, x / np.where(mag > 0, mag, 1) * shrunk, 0)


def _adj(F):
    return F.conj().T


def _sq(v):
    return float(np.vdot(v, v).real)


def _norm(v):
    return np.sqrt(_sq(v))


def _record(report, j, x):
    if j <= THIN_AFTER or j % THIN_EVERY == 0:
        report.iterates.append(x.copy())


def _contraction(report, prev_step, step):
    if prev_step > 0:
        report.contraction_estimates.append(step / prev_step)


def iht(op, b, cfg):
    """Quasi-linear iterative hard thresholding.

    ``x <- H_k(x + F(x)* (b - F(x) x) / mu)``; stops when consecutive iterates
    differ by at most ``stop_tol``.
    """
    if not op.supports_factor:
        raise ValueError("iterative hard thresholding needs the factor F(x)")
    b = as_signal(b, "b")
    x = np.zeros(op.d, dtype=np.result_type(b, float)) if cfg.x0 is None else as_signal(cfg.x0).copy()
    report = ThresholdingReport(final=x)
    report.iterates.append(x.copy())
    mu = cfg.mu
    prev_step = 0.0
    for j in range(1, cfg.max_iters + 1):
        F = op.factor(x)
        if cfg.mu is None and (j - 1) % cfg.mu_refresh == 0:
            s = np.linalg.norm(F, 2)
            mu = s * s if s > 0 else 1.0
        resid = b - F @ x
        report.objective_history.append(float(np.vdot(resid, resid).real))
        x_new = best_k_approx(x + _adj(F) @ resid / mu, cfg.k)
        step = float(np.linalg.norm(x_new - x))
        _contraction(report, prev_step, step)
        prev_step = step
        x = x_new
        _record(report, j, x)
        report.iterations = j
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1e6 * (1 + np.linalg.norm(b)):
            report.diverged = True
            break
        if step <= cfg.stop_tol:
            report.converged = True
            break
    report.final = x
    if np.all(np.isfinite(x)):
        F = op.factor(x)
        report.fixed_point_residual = float(np.linalg.norm(
            best_k_approx(x + _adj(F) @ (b - F @ x) / mu, cfg.k) - x))
    return report


def objective_J(op, b, alpha, x):
    """``||F(x) x - b||^2 + alpha ||x||_1``."""
    r = op.evaluate(x) - np.asarray(b)
    return float(np.vdot(r, r).real + alpha * np.sum(np.abs(x)))


def surrogate_J(op, b, alpha, x, a):
    """``||F(a)x - b||^2 + alpha||x||_1 + ||x - a||^2 - ||F(a)x - F(a)a||^2``."""
    x, a = np.asarray(x), np.asarray(a)
    F = op.factor(a)
    Fx = F @ x
    r = Fx - b
    dx = x - a
    dF = Fx - F @ a
    return float(np.vdot(r, r).real + alpha * np.sum(np.abs(x))
                 + np.vdot(dx, dx).real - np.vdot(dF, dF).real)


def fixed_point_map(op, b, alpha, x):
    """One soft-thresholding step ``S_alpha((I - F*F) x + F* b)`` with ``F = F(x)``."""
    x = np.asarray(x)
    F = op.factor(x)
    return soft_threshold(x + _adj(F) @ (np.asarray(b) - F @ x), alpha)


def ist(op, b, cfg):
    """Quasi-linear iterative soft thresholding (surrogate minimization).

    Stops when consecutive iterates differ by at most ``stop_tol``; aborts with
    ``diverged=True`` once ``||x|| > 1e6 (1 + ||b||)``.
    """
    if not op.supports_factor:
        raise ValueError("iterative soft thresholding needs the factor F(x)")
    b = as_signal(b, "b")
    x = np.zeros(op.d, dtype=np.result_type(b, float)) if cfg.x0 is None else as_signal(cfg.x0).copy()
    report = ThresholdingReport(final=x)
    report.iterates.append(x.copy())
    limit = 1e6 * (1.0 + _norm(b))
    alpha = cfg.alpha
    history = report.objective_history
    prev_step = 0.0
    F = op.factor(x)
    r = F @ x - b
    for j in range(1, cfg.max_iters + 1):
        obj = _sq(r) + alpha * float(np.abs(x).sum())
        if history and obj > history[-1] * (1 + 1e-12):
            report.objective_increases.append(j - 1)
        history.append(obj)
        x_new = soft_threshold(x - _adj(F) @ r, alpha)
        step = _norm(x_new - x)
        _contraction(report, prev_step, step)
        prev_step = step
        x = x_new
        _record(report, j, x)
        report.iterations = j
        # the negated test also catches NaN
        if not _norm(x) <= limit:
            report.diverged = True
            break
        F = op.factor(x)
        r = F @ x - b
        if step <= cfg.stop_tol:
            report.converged = True
            break
    report.final = x
    if not report.diverged:
        history.append(_sq(r) + alpha * float(np.abs(x).sum()))
        report.fixed_point_residual = _norm(soft_threshold(x - _adj(F) @ r, alpha) - x)
    return report


def alpha_continuation(op, b, alphas, cfg=None, xhat=None):
    """Run ``ist`` along a decreasing path of ``alphas``, warm-starting each
    stage at the previous limit.

    Returns the list of stage reports. When a feasible ``xhat`` is given, each
    report gets an ``l1_excess`` attribute ``||x_alpha||_1 - ||xhat||_1``.
    """
    alphas = [float(a) for a in alphas]
    if not alphas or any(a <= 0 for a in alphas):
        raise ValueError("alphas must be positive")
    if any(a2 >= a1 for a1, a2 in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be strictly decreasing")
    base = cfg or ISTConfig(alpha=alphas[0])
    x0 = base.x0
    reports = []
    for a in alphas:
        rep = ist(op, b, ISTConfig(alpha=a, max_iters=base.max_iters, x0=x0, stop_tol=base.stop_tol))
        if xhat is not None:
            rep.l1_excess = float(np.sum(np.abs(rep.final)) - np.sum(np.abs(xhat)))
        reports.append(rep)
        if rep.diverged:
            break
        x0 = rep.final
    return reports


def default_alpha(op, b, factor=0.1):
    """Regularization anchor ``factor * ||F(0)* b||_inf``."""
    F0 = op.factor(np.zeros(op.d))
    return factor * float(np.max(np.abs(_adj(F0) @ np.asarray(b))))


# --------------------------------------------------------------------------
# exact l1-regularized least squares on a frozen matrix, and contraction probe
# --------------------------------------------------------------------------

def l1_least_squares(F, b, alpha, tol=1e-10, max_iters=100_000, x0=None):
    """argmin_y ||F y - b||^2 + alpha ||y||_1 by classical soft thresholding.

    Uses step ``1/||F||_2^2``. Returns ``(y, converged)``.
    """
    F = np.asarray(F)
    L = np.linalg.norm(F, 2) ** 2
    y = np.zeros(F.shape[1], dtype=np.result_type(F, b, float)) if x0 is None else np.array(x0)
    if L == 0:
        return y, True
    Fh = _adj(F)
    for _ in range(max_iters):
        y_new = soft_threshold(y - Fh @ (F @ y - b) / L, alpha / L)
        if np.linalg.norm(y_new - y) <= tol:
            return y_new, True
        y = y_new
    return y, False


def regularized_solution_map(op, b, alpha, x, **kw):
    """``S_alpha(x) = argmin_y ||F(x) y - b||^2 + alpha ||y||_1``."""
    return l1_least_squares(op.factor(x), b, alpha, **kw)


@dataclass
class ContractionProbe:
    ratio: float
    samples: int
    skipped: int
    ratios: np.ndarray


def probe_contraction(op, b, alpha, trials, seed, scale=1.0, tol=1e-10, max_iters=100_000):
    """Largest observed ``||S_alpha(x) - S_alpha(y)|| / ||x - y||`` over random pairs.

    Half of the pairs are radial (``y = c x``), half independent Gaussian
    vectors of norm around ``scale``. Pairs whose inner solve fails to reach
    ``tol`` are skipped and counted.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    b = np.asarray(b, dtype=float)
    ratios, skipped = [], 0
    for t in range(trials):
        rng = make_rng(seed, t)
        x = scale * gaussian(rng, op.d) / np.sqrt(op.d)
        if t % 2 == 0:
            y = x * (1.0 + 0.5 * (2.0 * rng.random() - 1.0))
        else:
            y = scale * gaussian(rng, op.d) / np.sqrt(op.d)
        sx, okx = regularized_solution_map(op, b, alpha, x, tol=tol, max_iters=max_iters)
        sy, oky = regularized_solution_map(op, b, alpha, y, tol=tol, max_iters=max_iters)
        dist = np.linalg.norm(x - y)
        if not (okx and oky) or dist < 1e-12:
            skipped += 1
            continue
        ratios.append(np.linalg.norm(sx - sy) / dist)
    ratios = np.asarray(ratios)
    return ContractionProbe(float(ratios.max()) if ratios.size else np.nan, ratios.size, skipped, ratios)


def regularized_distance_bound(alpha, b_norm, c1, c2, c3, gamma_tilde, xhat_norm, dist_xhat_alpha):
    """Diagnostic bound on ``||x_alpha - xhat_alpha||`` from probed constants.

    ``sqrt(alpha c2 ||b||)/a + (c1 + c3 ||xhat||)/a * ||xhat_alpha - xhat||``
    with ``a = sqrt(1 - gamma_tilde) - c2 c3 ||b||``; ``inf`` when ``a <= 0``.
    """
    a = np.sqrt(1.0 - gamma_tilde) - c2 * c3 * b_norm
    if a <= 0:
        return np.inf
    return np.sqrt(alpha * c2 * b_norm) / a + (c1 + c3 * xhat_norm) / a * dist_xhat_alpha


def fixed_point_distance_bound(alpha, b_norm, c2, c3, gamma_tilde):
    """Diagnostic bound on ``||x_alpha - xhat||`` for a feasible sparse ``xhat``."""
    a = np.sqrt(1.0 - gamma_tilde) - c2 * c3 * b_norm
    return np.inf if a <= 0 else np.sqrt(alpha * c2 * b_norm) / a


def sparsity_bound(alpha, b_norm, c1, c2):
    """``ceil(4/alpha^2 (c1 + c2 + c1^2 c2)^2 ||b||^2)``, the support-size bound
    for iterates of the soft-thresholding scheme under probed constants."""
    return int(np.ceil(4.0 / alpha**2 * (c1 + c2 + c1 * c1 * c2) ** 2 * b_norm**2))
