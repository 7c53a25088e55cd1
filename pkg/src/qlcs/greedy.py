"""l_p-greedy recovery (generalized orthogonal least squares).

At step j every candidate index l outside the current support is tried: the
data misfit ``||A(x) - b||_p`` is minimized over vectors supported on the
enlarged support, and the candidate with the smallest misfit is kept.
"""
from dataclasses import dataclass, field

import numpy as np

from .core import as_signal, lp_norm
from .rng import gaussian, make_rng

SMOOTHING = 1e-9


@dataclass
class SubsolverConfig:
    kind: str = "multistart_local"  # or "linear_least_squares"
    starts: int = 10
    max_iters: int = 500
    step_tol: float = 1e-10
    init_scale: float = 1.0
    # optional grid scan of the newly added coordinate over [-scan_radius, scan_radius]
    scan_points: int = 0
    scan_radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear_least_squares", "multistart_local"):
            raise ValueError(f"unknown subsolver kind {self.kind!r}")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.scan_points < 0 or self.scan_radius <= 0:
            raise ValueError("scan_points must be >= 0 and scan_radius > 0")


@dataclass
class GreedyConfig:
    p: float = 2.0
    k_max: int = 1
    residual_tol: float = 0.0
    subsolver: SubsolverConfig = field(default_factory=SubsolverConfig)
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.subsolver, dict):
            self.subsolver = SubsolverConfig(**self.subsolver)
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.residual_tol < 0:
            raise ValueError("residual_tol must be >= 0")


@dataclass
class SubproblemResult:
    x: np.ndarray
    residual: float
    converged: bool


@dataclass
class GreedyTrace:
    supports: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    residual_lp: list = field(default_factory=list)
    # step -> list of candidate indices whose local searches all hit max_iters
    nonconverged: dict = field(default_factory=dict)
    candidate_residuals: list = field(default_factory=list)

    @property
    def final(self):
        return self.iterates[-1]

    def check_invariants(self, rtol=1e-12):
        """Assert support nesting and residual monotonicity."""
        prev = set()
        for j, S in enumerate(self.supports, start=1):
            assert len(S) == j and prev < set(S), f"support at step {j} is not nested"
            prev = set(S)
        r = np.asarray(self.residual_lp)
        assert np.all(r[1:] <= r[:-1] * (1 + rtol) + 1e-300), "residual increased"


# --------------------------------------------------------------------------
# support-restricted subproblem
# --------------------------------------------------------------------------

def _objective(op, b, idx, z, p):
    return lp_norm(op.evaluate_restricted(z, idx) - b, p)


def _local_search(op, b, idx, z0, p, cfg, floor, ftol=1e-10):
    """Damped Gauss-Newton (Levenberg-Marquardt) on ``||A(z) - b||_p``.

    For ``p != 2`` the normal equations are reweighted by the smoothed
    ``|r_i|^(p-2)`` (iteratively reweighted least squares). A step is only
    accepted when it lowers the unsmoothed objective, so the returned value is
    never worse than the start. Stops when the step falls below ``step_tol``
    or an accepted step improves the objective by less than ``ftol`` relative.
    """
    z = np.array(z0, dtype=float)
    r = op.evaluate_restricted(z, idx) - b
    obj = lp_norm(r, p)
    lam = 1e-3
    for _ in range(cfg.max_iters):
        if obj <= floor:
            return z, obj, True
        J = op.jacobian_restricted(z, idx)
        if p != 2:
            w = (r * r + SMOOTHING**2) ** ((p - 2) / 2)
            JtW = J.T * w
        else:
            JtW = J.T
        H = JtW @ J
        g = JtW @ r
        diag = np.diag(H).copy() + 1e-300
        tol_step = cfg.step_tol * (1.0 + np.sqrt(z @ z))
        while True:
            try:
                step = -np.linalg.solve(H + lam * np.diag(diag), g)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(H + lam * np.diag(diag), g, rcond=None)[0]
            cand = z + step
            r_c = op.evaluate_restricted(cand, idx) - b
            obj_c = lp_norm(r_c, p)
            small = np.sqrt(step @ step) <= tol_step
            if obj_c < obj:
                gain = obj - obj_c
                z, r, obj = cand, r_c, obj_c
                lam = max(lam / 3.0, 1e-12)
                break
            if small or lam > 1e12:
                return z, obj, True
            lam *= 10.0
        if small or gain <= ftol * obj:
            return z, obj, True
    return z, obj, False


def subproblem(op, b, support, p=2.0, cfg=None, x_prev=None, rng=None, linearization=None):
    """Minimize ``||A(x) - b||_p`` over x supported on ``support``.

    Linear operators with ``p = 2`` and the ``linear_least_squares`` subsolver
    get the exact (minimum-norm) restricted least-squares solution. Otherwise
    the best of ``cfg.starts`` local searches is returned: the first start is
    ``x_prev`` with new coordinates filled in by least squares on the
    linearization ``F(x_prev)``, the rest are Gaussian with scale
    ``init_scale * sqrt(||b||)``. With ``scan_points > 0`` one more start comes
    from a grid scan of the new coordinates (the others held at the first
    start), which helps when the objective is multimodal along the new
    direction. ``linearization`` may pass a precomputed ``(F(x_prev), b - A(x_prev))``.
    """
    cfg = cfg or SubsolverConfig()
    b = np.asarray(b, dtype=float)
    idx = np.array(sorted(support), dtype=int)
    x = np.zeros(op.d)
    if idx.size == 0:
        return SubproblemResult(x, lp_norm(op.evaluate(x) - b, p), True)
    if op.field != "real":
        raise NotImplementedError("greedy subproblems support real operators only")

    if cfg.kind == "linear_least_squares" and op.is_linear and p == 2:
        M = op.factor(x)[:, idx]
        x[idx] = np.linalg.lstsq(M, b, rcond=None)[0]
        return SubproblemResult(x, lp_norm(op.evaluate(x) - b, p), True)

    rng = rng if rng is not None else make_rng(0)
    floor = 1e-13 * (1.0 + lp_norm(b, p))
    starts = [_warm_start(op, b, idx, x_prev, p, linearization)]
    if cfg.scan_points:
        starts.append(_scan_start(op, b, idx, x_prev, starts[0], p, cfg))
    scale = cfg.init_scale * np.sqrt(np.linalg.norm(b))
    for _ in range(cfg.starts - 1):
        starts.append(scale * gaussian(rng, idx.size))

    best_z, best_obj, any_conv = None, np.inf, False
    for z0 in starts:
        z, obj, conv = _local_search(op, b, idx, z0, p, cfg, floor)
        any_conv |= conv
        if obj < best_obj:
            best_z, best_obj = z, obj
        if best_obj <= floor:
            break
    x[idx] = best_z
    return SubproblemResult(x, best_obj, any_conv)


def _scan_start(op, b, idx, x_prev, z0, p, cfg):
    new = np.arange(idx.size) if x_prev is None else np.flatnonzero(np.asarray(x_prev)[idx] == 0)
    grid = np.linspace(-cfg.scan_radius, cfg.scan_radius, cfg.scan_points)
    best, best_obj = z0, np.inf
    for t in grid:
        z = z0.copy()
        z[new] = t
        obj = _objective(op, b, idx, z, p)
        if obj < best_obj:
            best, best_obj = z, obj
    return best


def _linearize(op, b, x_prev):
    F = op.factor(x_prev)
    return F, b - F @ x_prev


def _warm_start(op, b, idx, x_prev, p, linearization=None):
    if x_prev is None:
        return np.zeros(idx.size)
    x_prev = np.asarray(x_prev, dtype=float)
    z = x_prev[idx].copy()
    new = np.flatnonzero(x_prev[idx] == 0)
    if new.size and op.supports_factor:
        F, r = linearization or _linearize(op, b, x_prev)
        cols = F[:, idx[new]]
        t = np.linalg.lstsq(cols, r, rcond=None)[0]
        filled = z.copy()
        filled[new] = t
        if _objective(op, b, idx, filled, p) < _objective(op, b, idx, z, p):
            z = filled
    return z


# --------------------------------------------------------------------------
# greedy driver
# --------------------------------------------------------------------------

def greedy_recover(op, b, cfg=None):
    """Run the l_p-greedy algorithm and return its trace.

    Stops after ``cfg.k_max`` steps or once the residual drops to
    ``cfg.residual_tol``. Ties between candidates go to the smallest index.
    """
    cfg = cfg or GreedyConfig()
    b = as_signal(b, "b")
    if b.size != op.n:
        raise ValueError(f"b has length {b.size}, operator expects {op.n}")
    if cfg.k_max > op.d:
        raise ValueError(f"k_max={cfg.k_max} exceeds d={op.d}")
    rng = make_rng(cfg.seed)
    trace = GreedyTrace()
    support, x = [], np.zeros(op.d)
    for j in range(1, cfg.k_max + 1):
        best = None
        residuals = {}
        failed = []
        lin = _linearize(op, b, x) if op.supports_factor else None
        for l in range(op.d):
            if l in support:
                continue
            res = subproblem(op, b, support + [l], cfg.p, cfg.subsolver, x_prev=x, rng=rng, linearization=lin)
            residuals[l] = res.residual
            if not res.converged:
                failed.append(l)
            # strict '<' keeps the smallest index on ties
            if best is None or res.residual < best[1].residual:
                best = (l, res)
        l_j, res = best
        support = support + [l_j]
        x = res.x
        trace.supports.append(sorted(support))
        trace.iterates.append(x.copy())
        trace.residual_lp.append(res.residual)
        trace.candidate_residuals.append(residuals)
        if failed:
            trace.nonconverged[j] = failed
        if res.residual <= cfg.residual_tol:
            break
    return trace


def recovery_error_bound(js, alpha, beta, L, kappa, e_norm, r1, variant="euclidean"):
    """Right-hand side of the greedy error estimate at steps ``js``.

    ``e/alpha + kappa^j r1 c (1 + (beta + 2L)/alpha)`` with ``c = sqrt(2)``
    (Euclidean error) or ``sqrt(3)`` (Hilbert-Schmidt error of ``xx*``).
    """
    if min(alpha, beta) <= 0 or L < 0 or not 0 < kappa < 1:
        raise ValueError("need alpha, beta > 0, L >= 0 and 0 < kappa < 1")
    c = {"euclidean": np.sqrt(2.0), "hs": np.sqrt(3.0)}[variant]
    js = np.asarray(js, dtype=float)
    return e_norm / alpha + kappa**js * r1 * c * (1.0 + (beta + 2.0 * L) / alpha)
