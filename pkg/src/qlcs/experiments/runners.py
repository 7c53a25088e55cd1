"""Experiment runners: recovery-rate grids, rate maps, probe suite and the
asteroseismology demo.

Seeds: a grid cell ``(i, j)`` (indices into the two axes) gets
``cell_seed = derive_seed(base, i, j)`` and its trial ``t`` uses
``derive_seed(cell_seed, t)``. The operator of a trial is built from
``derive_seed(trial_seed, 0)`` and the signal from ``make_rng(trial_seed, 1)``.
A cell can therefore be re-run on its own with ``run_*_trial``.
"""
import dataclasses
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import best_k_approx, phase_aligned_distance, support
from ..greedy import greedy_recover
from ..operators import (LinearOperator, ScaledOperator, make_gaussian, lipschitz_perturbed,
                         rank1_phase, rankm_projector_phase, spectral_norm)
from ..ripprobe import (RateMapSpec, build_rate_map, decay_threshold_kappa, probe_eq1, probe_eq1b,
                        probe_f_rip, probe_linear_rip, probe_lipschitz_F, sample_sparse_sphere)
from ..rng import derive_seed, make_rng
from ..thresholding import (IHTConfig, ISTConfig, ThresholdingReport, alpha_continuation,
                            default_alpha, iht)


@dataclass
class RateGrid:
    """Success counts on a (k, second axis) grid."""

    name: str
    k: list
    axis_name: str
    axis: list
    trials: int
    successes: np.ndarray
    errors: np.ndarray
    cell_seeds: np.ndarray
    wall_time: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def rates(self):
        return self.successes / self.trials

    def rows(self):
        for i, k in enumerate(self.k):
            for j, v in enumerate(self.axis):
                yield (k, v, self.trials, int(self.successes[i, j]), int(self.errors[i, j]),
                       float(self.rates[i, j]), int(self.cell_seeds[i, j]))

    columns = ("k", "axis_value", "trials", "successes", "errors", "rate", "cell_seed")


def trial_seeds(cell_seed, trials):
    return [derive_seed(cell_seed, t) for t in range(trials)]


def _map(fn, jobs, workers):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=1))


def _grid(name, cfg, axis_name, axis, cell_fn):
    """Evaluate ``cell_fn(k, value, trial_seed) -> (success, error, extra)`` on
    every trial of every cell."""
    K = list(cfg.grid.k)
    shape = (len(K), len(axis))
    succ = np.zeros(shape, dtype=int)
    err = np.zeros(shape, dtype=int)
    seeds = np.zeros(shape, dtype=np.int64)
    wall = np.zeros(shape)
    extras = {}
    jobs = []
    for i, k in enumerate(K):
        for j, v in enumerate(axis):
            seeds[i, j] = derive_seed(cfg.seed, i, j)
            jobs.append((i, j, k, v, int(seeds[i, j])))
    results = _map(_CellJob(cell_fn, cfg), jobs, cfg.workers)
    for (i, j, *_), (s, e, extra, dt) in zip(jobs, results):
        succ[i, j], err[i, j], wall[i, j] = s, e, dt
        extras[(i, j)] = extra
    return RateGrid(name, K, axis_name, list(axis), cfg.trials, succ, err, seeds, wall,
                    {"cells": extras})


class _CellJob:
    """Picklable closure running every trial of one cell."""

    def __init__(self, fn, cfg):
        self.fn, self.cfg = fn, cfg

    def __call__(self, job):
        i, j, k, v, cell_seed = job
        t0 = time.perf_counter()
        s = e = 0
        extra = []
        for ts in trial_seeds(cell_seed, self.cfg.trials):
            try:
                ok, info = self.fn(self.cfg, k, v, ts)
            except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
                e += 1
                extra.append({"error": repr(exc)})
                continue
            s += bool(ok)
            extra.append(info)
        return s, e, extra, time.perf_counter() - t0


# --------------------------------------------------------------------------
# phase retrieval with the greedy algorithm
# --------------------------------------------------------------------------

def run_fig4_trial(cfg, k, n, trial_seed):
    """One greedy phase-retrieval trial; returns ``(success, info)``."""
    spec = dataclasses.replace(cfg.ensemble, n=int(n))
    op = spec.build(seed=derive_seed(trial_seed, 0))
    xhat = sample_sparse_sphere(spec.d, k, make_rng(trial_seed, 1))
    b = op.evaluate(xhat)
    gcfg = dataclasses.replace(cfg.greedy, k_max=int(k), seed=int(trial_seed))
    trace = greedy_recover(op, b, gcfg)
    trace.check_invariants()
    dist = phase_aligned_distance(trace.final, xhat)
    return dist <= cfg.success_tol * np.linalg.norm(xhat), {"distance": dist}


def run_fig4(cfg):
    """Success rate of greedy phase retrieval over sparsity ``k`` and
    measurement count ``n`` (``grid.n``; defaults to the ensemble's n)."""
    ns = list(cfg.grid.n) or [cfg.ensemble.n]
    return _grid("fig4", cfg, "n", ns, run_fig4_trial)


# --------------------------------------------------------------------------
# thresholding grids
# --------------------------------------------------------------------------

def fig6_instance(cfg, k, norm, trial_seed):
    op = cfg.ensemble.build(seed=derive_seed(trial_seed, 0))
    rng = make_rng(trial_seed, 1)
    xhat = float(norm) * sample_sparse_sphere(op.d, int(k), rng)
    return op, xhat, op.evaluate(xhat)


def soft_solve(cfg, op, b):
    """Soft thresholding with the configured alpha path; returns the stage reports."""
    sec = cfg.ist
    run_op, run_b = op, b
    if sec.rescale:
        s = op.factor_bound() if hasattr(op, "factor_bound") else spectral_norm(op.factor(np.zeros(op.d))).value
        run_op, run_b = ScaledOperator(op, s), b / s
    a0 = default_alpha(run_op, run_b, sec.alpha_factor)
    if a0 == 0:
        return [ThresholdingReport(final=np.zeros(op.d), converged=True, fixed_point_residual=0.0)]
    alphas = a0 * np.logspace(0.0, -sec.path_decades, sec.stages) if sec.stages > 1 else [a0]
    return alpha_continuation(run_op, run_b, alphas,
                              ISTConfig(alpha=a0, max_iters=sec.max_iters, stop_tol=sec.stop_tol))


def hard_solve(cfg, op, b, k):
    sec = cfg.iht
    return iht(op, b, IHTConfig(k=int(k), mu=sec.mu or None, max_iters=sec.max_iters,
                                stop_tol=sec.stop_tol, mu_refresh=sec.mu_refresh))


def _fig6_tol(cfg, norm):
    return cfg.success_tol * max(float(norm), 0.01)


def run_fig6_soft_trial(cfg, k, norm, trial_seed):
    op, xhat, b = fig6_instance(cfg, k, norm, trial_seed)
    reps = soft_solve(cfg, op, b)
    last = reps[-1]
    info = {"diverged": last.diverged, "converged": last.converged,
            "fp_ratio": last.fixed_point_residual / cfg.ist.stop_tol if last.converged else np.nan}
    if last.diverged:
        return False, info
    return np.linalg.norm(last.final - xhat) <= _fig6_tol(cfg, norm), info


def run_fig6_hard_trial(cfg, k, norm, trial_seed):
    op, xhat, b = fig6_instance(cfg, k, norm, trial_seed)
    rep = hard_solve(cfg, op, b, k)
    if rep.diverged:
        return False, {"diverged": True}
    return np.linalg.norm(rep.final - xhat) <= _fig6_tol(cfg, norm), {"diverged": False}


def norm_axis(cfg):
    return list(cfg.grid.norms) or np.logspace(-2, 0, 10).tolist()


def run_fig6(cfg):
    """Soft- and hard-thresholding success grids over ``k`` and signal norm."""
    norms = norm_axis(cfg)
    soft = _grid("fig6_soft", cfg, "norm", norms, run_fig6_soft_trial)
    hard = _grid("fig6_hard", cfg, "norm", norms, run_fig6_hard_trial)
    fp = [t.get("fp_ratio", np.nan) for cell in soft.diagnostics["cells"].values() for t in cell]
    fp = np.array([v for v in fp if np.isfinite(v)])
    soft.diagnostics["max_fp_ratio"] = float(fp.max()) if fp.size else np.nan
    soft.diagnostics["converged_runs"] = int(fp.size)
    return soft, hard


# --------------------------------------------------------------------------
# rate maps and probes
# --------------------------------------------------------------------------

def run_fig1(cfg):
    """Rate maps of the lower bound for every k in ``ratemap.k``."""
    maps = {}
    sec = cfg.ratemap
    for k in sec.k:
        spec = RateMapSpec(d=cfg.ensemble.d, n=cfg.ensemble.n, k=int(k), p=sec.p,
                           thresholds=tuple(sec.thresholds),
                           resolution=sec.resolution if int(k) == 2 else sec.resolution_k3,
                           draws=sec.draws, seed=derive_seed(cfg.seed, int(k)))
        ens = cfg.ensemble
        maps[int(k)] = build_rate_map(lambda s: ens.build(seed=s), spec)
    return maps


def run_probe_suite(cfg):
    """Empirical constants for every probed condition plus the rate maps.

    Returns ``(probes, maps)`` where ``probes`` is a list of
    ``(label, ProbeResult or dict)``. A failing probe is recorded as an error
    entry instead of aborting the suite.
    """
    T, k, seed = cfg.probe.trials, cfg.probe.k, cfg.seed
    probes = []

    def guarded(label, fn):
        try:
            probes.append((label, fn()))
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            probes.append((label, {"error": repr(exc)}))

    d, n = cfg.ensemble.d, cfg.ensemble.n
    A = make_gaussian(n, d, derive_seed(seed, 1), "by_sqrt_n")
    lin = LinearOperator(A)
    x_lin = sample_sparse_sphere(d, k, make_rng(seed, 2))
    guarded("linear_rip_2k", lambda: probe_linear_rip(A, 2 * k, T, derive_seed(seed, 3)))
    guarded("eq1_linear", lambda: probe_eq1(lin, x_lin, k, 2.0, T, 0.0, derive_seed(seed, 4)))

    ph = rank1_phase(n, d, derive_seed(seed, 5))
    x_ph = sample_sparse_sphere(d, k, make_rng(seed, 6))
    guarded("eq1_rank1", lambda: probe_eq1(ph, x_ph, k, 2.0, T, 0.0, derive_seed(seed, 7)))

    def calibrated(op, x, kk, p, s):
        pilot = probe_eq1b(op, x, kk, p, T, 0.0, s)
        return probe_eq1b(op, x, kk, p, T, 0.5 * float(np.median(pilot.ratios)), s)

    guarded("eq1b_rank1_p1", lambda: calibrated(ph, x_ph, k, 1.0, derive_seed(seed, 8)))
    pm = rankm_projector_phase(4 * n, d, 2, derive_seed(seed, 9))
    guarded("eq1b_rankm", lambda: calibrated(pm, x_ph, k, 1.0, derive_seed(seed, 10)))

    qop = lipschitz_perturbed(n, d, derive_seed(seed, 11), epsilon=0.1, normalize="by_sqrt_n")
    guarded("f_rip_perturbed", lambda: probe_f_rip(qop, k, T, derive_seed(seed, 12)))
    x_dec = 0.5 ** np.arange(d) * np.where(make_rng(seed, 13).random(d) < 0.5, -1.0, 1.0)
    guarded("lipschitz_F_perturbed", lambda: probe_lipschitz_F(qop, x_dec, k, T, derive_seed(seed, 14)))

    def kappa_entry():
        rip = probe_eq1(lin, x_lin, k, 2.0, T, 0.0, derive_seed(seed, 4))
        return {"alpha": rip.alpha_hat, "beta": rip.beta_hat,
                "kappa_euclidean": decay_threshold_kappa(rip.alpha_hat, rip.beta_hat, 0.0, 0.0, 1.0),
                "kappa_hs": decay_threshold_kappa(rip.alpha_hat, rip.beta_hat, 0.0, 0.0, 1.0, "hs")}
    guarded("decay_threshold_linear", kappa_entry)
    maps = run_fig1(cfg) if cfg.ratemap.k else {}
    return probes, maps


# --------------------------------------------------------------------------
# asteroseismology
# --------------------------------------------------------------------------

def astero_signal(case, d, rng):
    """Low-frequency test signal for an asteroseismology case."""
    x = np.zeros(d)
    if case.signal == "decaying":
        signs = np.where(rng.random(d) < 0.5, -1.0, 1.0)
        return signs * case.kappa ** np.arange(d)
    if case.signal != "sparse":
        raise ValueError(f"unknown signal kind {case.signal!r}")
    S = np.sort(rng.choice(case.band, size=case.k, replace=False))
    amps = case.kappa ** rng.permutation(case.k).astype(float)
    signs = np.where(rng.random(case.k) < 0.5, -1.0, 1.0)
    x[S] = signs * amps
    return x


@dataclass
class AsteroRun:
    case: str
    seed: int
    truth: np.ndarray
    trace: object
    success: bool
    target_support: list
    seconds: float


def run_astero_trial(cfg, case, seed):
    op = cfg.ensemble.build()
    xhat = astero_signal(case, op.d, make_rng(cfg.seed, int(seed)))
    steps = case.steps or case.k
    b = op.evaluate(xhat)
    t0 = time.perf_counter()
    gcfg = dataclasses.replace(cfg.greedy, k_max=steps, seed=derive_seed(cfg.seed, int(seed)))
    trace = greedy_recover(op, b, gcfg)
    trace.check_invariants()
    target = sorted(support(best_k_approx(xhat, steps)).tolist())
    return AsteroRun(case.name, int(seed), xhat, trace, trace.supports[-1] == target, target,
                     time.perf_counter() - t0)


def run_astero(cfg):
    """Greedy recovery of low-frequency pulsation patterns; one run per
    (case, seed). Success means the support after ``steps`` greedy steps
    equals the support of the best ``steps``-term approximation."""
    return [run_astero_trial(cfg, case, s) for case in cfg.astero.cases for s in cfg.astero.seeds]
