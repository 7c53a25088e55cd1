"""Monte Carlo probes of restricted-isometry-type conditions.

Every probe samples sparse vectors from seeded per-trial streams
``make_rng(seed, t)``, so the first T trials of a longer run coincide with a
run of T trials. Probes report empirical extremal ratios; they never certify a
constant.
"""
from dataclasses import dataclass, field

import numpy as np

from .core import best_k_approx, hs_outer_distance, lp_norm
from .rng import derive_seed, gaussian, make_rng

DEGENERATE = 1e-12
CONDITIONS = ("linear_rip", "eq1", "eq1b", "f_rip", "lipschitz_F", "tail_L")


@dataclass
class ProbeResult:
    condition: str
    alpha_hat: float
    beta_hat: float
    success_rate: float
    samples: int
    seed: int
    threshold: float = np.nan
    skipped: int = 0
    ratios: np.ndarray = field(default=None, repr=False)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition {self.condition!r}")


def _rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return make_rng(seed_or_rng)


def sample_sparse_sphere(d, k, seed, support=None):
    """Unit vector with a uniformly random k-element support (or the given
    ``support``) and Gaussian entries. ``seed`` may be a Generator."""
    if not 1 <= k <= d:
        raise ValueError(f"need 1 <= k <= d, got k={k}, d={d}")
    rng = _rng(seed)
    S = np.sort(rng.choice(d, size=k, replace=False)) if support is None else np.asarray(support)
    v = gaussian(rng, len(S))
    while not np.any(v):
        v = gaussian(rng, len(S))
    x = np.zeros(d)
    x[S] = v / np.linalg.norm(v)
    return x


def _finish(condition, ratios, skipped, seed, threshold, extra=None):
    ratios = np.asarray(ratios, dtype=float)
    if ratios.size == 0:
        raise ValueError("all sampled pairs were degenerate")
    rate = float(np.mean(ratios > threshold)) if np.isfinite(threshold) else 1.0
    return ProbeResult(condition, float(ratios.min()), float(ratios.max()), rate, int(ratios.size),
                       int(seed), float(threshold), int(skipped), ratios, extra or {})


def probe_linear_rip(A, k, trials, seed, threshold=np.nan):
    """Extremal ``||Ax||`` over sampled k-sparse unit vectors.

    ``extra['delta_hat'] = max(1 - alpha_hat, beta_hat - 1)`` in the
    ``(1 - delta)||x|| <= ||Ax|| <= (1 + delta)||x||`` convention.
    """
    A = np.asarray(A)
    d = A.shape[1]
    ratios = [np.linalg.norm(A @ sample_sparse_sphere(d, k, make_rng(seed, t))) for t in range(trials)]
    res = _finish("linear_rip", ratios, 0, seed, threshold)
    res.extra["delta_hat"] = max(1.0 - res.alpha_hat, res.beta_hat - 1.0)
    return res


def _sample_partner(d, k, rng, scale, support):
    return scale * sample_sparse_sphere(d, k, rng, support=support)


def _pair_probe(condition, op, xhat, k, p, trials, threshold, seed, denominator, same_support):
    xk = best_k_approx(xhat, k)
    Axk = op.evaluate(xk)
    scale = np.linalg.norm(xk) or 1.0
    S = np.flatnonzero(xk) if same_support else None
    if same_support and S.size != k:
        raise ValueError("same_support needs best_k_approx(xhat, k) to have k nonzeros")
    ratios, skipped, sandwich = [], 0, 0
    for t in range(trials):
        y = _sample_partner(op.d, k, make_rng(seed, t), scale, S)
        den = denominator(xk, y)
        if den < DEGENERATE:
            skipped += 1
            continue
        if condition == "eq1b" and np.isrealobj(y) and np.isrealobj(xk):
            prod = np.linalg.norm(xk - y) * np.linalg.norm(xk + y)
            if not (den <= prod * (1 + 1e-10) and prod <= np.sqrt(2) * den * (1 + 1e-10)):
                sandwich += 1
        ratios.append(lp_norm(Axk - op.evaluate(y), p) / den)
    extra = {"sandwich_violations": sandwich} if condition == "eq1b" else {}
    return _finish(condition, ratios, skipped, seed, threshold, extra)


def probe_eq1(op, xhat, k, p=2.0, trials=1000, alpha_threshold=0.0, seed=0, same_support=False):
    """Ratios ``||A(x_k) - A(y)||_p / ||x_k - y||`` for sampled k-sparse ``y``.

    ``y`` has the norm of ``x_k = best_k_approx(xhat, k)`` and a random (or, with
    ``same_support``, the same) support. ``success_rate`` is the fraction of
    ratios strictly above ``alpha_threshold``.
    """
    return _pair_probe("eq1", op, xhat, k, p, trials, alpha_threshold, seed,
                       lambda x, y: np.linalg.norm(x - y), same_support)


def probe_eq1b(op, xhat, k, p=2.0, trials=1000, alpha_threshold=0.0, seed=0, same_support=False):
    """As ``probe_eq1`` with the denominator ``||x_k x_k* - yy*||_HS``.

    Every real pair is also checked against
    ``||xx*-yy*|| <= ||x-y|| ||x+y|| <= sqrt(2) ||xx*-yy*||``; failures are
    counted in ``extra['sandwich_violations']``.
    """
    return _pair_probe("eq1b", op, xhat, k, p, trials, alpha_threshold, seed, hs_outer_distance,
                       same_support)


def probe_f_rip(op, k, trials, seed, z_scale=1.0, threshold=np.nan):
    """Extremal ``||F(z)(x - y)|| / ||x - y||`` over k-sparse triples.

    ``x`` and ``y`` are unit k-sparse, ``z`` k-sparse with norm ``z_scale``.
    """
    if not op.supports_factor:
        raise ValueError("operator has no quasi-linear factor")
    ratios, skipped = [], 0
    for t in range(trials):
        rng = make_rng(seed, t)
        x = sample_sparse_sphere(op.d, k, rng)
        y = sample_sparse_sphere(op.d, k, rng)
        z = z_scale * sample_sparse_sphere(op.d, k, rng)
        v = x - y
        nv = np.linalg.norm(v)
        if nv < DEGENERATE:
            skipped += 1
            continue
        ratios.append(np.linalg.norm(op.factor(z) @ v) / nv)
    return _finish("f_rip", ratios, skipped, seed, threshold)


def probe_tail_L(op, xhat, k, p=2.0):
    """``||A(xhat) - A(x_k)||_p`` over ``||xhat - x_k||`` and over
    ``||xhat xhat* - x_k x_k*||_HS``.

    Returns ``(L, L_hs, undefined)``; for exactly k-sparse ``xhat`` both ratios
    are reported as 0 with ``undefined=True``.
    """
    xk = best_k_approx(xhat, k)
    den = np.linalg.norm(xhat - xk)
    if den < DEGENERATE:
        return 0.0, 0.0, True
    num = lp_norm(op.evaluate(xhat) - op.evaluate(xk), p)
    den_hs = hs_outer_distance(xhat, xk)
    return float(num / den), float(num / den_hs) if den_hs >= DEGENERATE else 0.0, False


def probe_lipschitz_F(op, xhat, k, trials, seed, p=2.0, radius=None):
    """Largest sampled ``||F(x_k) - F(y)||_2 / ||x_k - y||`` (the constant C_k).

    ``y`` is k-sparse with norm uniform in ``[0, radius]`` (default
    ``2 ||x_k|| + 1``). The tail constants of ``probe_tail_L`` are attached as
    ``extra['tail_L']``, ``extra['tail_L_hs']`` and ``extra['tail_undefined']``.
    """
    if not op.supports_factor:
        raise ValueError("operator has no quasi-linear factor")
    xk = best_k_approx(xhat, k)
    Fx = op.factor(xk)
    radius = 2.0 * np.linalg.norm(xk) + 1.0 if radius is None else radius
    ratios, skipped = [], 0
    for t in range(trials):
        rng = make_rng(seed, t)
        y = radius * rng.random() * sample_sparse_sphere(op.d, k, rng)
        den = np.linalg.norm(xk - y)
        if den < DEGENERATE:
            skipped += 1
            continue
        ratios.append(np.linalg.norm(Fx - op.factor(y), 2) / den)
    L, L_hs, undefined = probe_tail_L(op, xhat, k, p)
    return _finish("lipschitz_F", ratios, skipped, seed, np.nan,
                   {"tail_L": L, "tail_L_hs": L_hs, "tail_undefined": undefined})


def decay_threshold_kappa(alpha, beta, L, e_lp, r_k, variant="euclidean"):
    """Largest admissible decay rate: ``a/sqrt(a^2 + c (beta + 2L)^2)`` with
    ``a = alpha - 2 e/r_k`` and ``c = 1`` (euclidean) or ``2`` (hs)."""
    c = {"euclidean": 1.0, "hs": 2.0}[variant]
    a = alpha - (2.0 * e_lp / r_k if e_lp else 0.0)
    if a <= 0:
        raise ValueError("noise too large for this k: alpha - 2 e / r_k <= 0")
    return float(a / np.sqrt(a * a + c * (beta + 2.0 * L) ** 2))


# --------------------------------------------------------------------------
# success-rate maps over the same-support sphere
# --------------------------------------------------------------------------

@dataclass
class RateMapSpec:
    d: int = 80
    n: int = 30
    k: int = 2
    p: float = 2.0
    thresholds: tuple = (0.5, 2.0, 5.0)
    # k=2: number of angles on the circle; k=3: polar steps (azimuth gets twice as many)
    resolution: int = 72
    draws: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.k not in (2, 3):
            raise ValueError("rate maps are drawn for k = 2 or 3")
        if self.draws < 1 or self.resolution < 2:
            raise ValueError("draws >= 1 and resolution >= 2 required")
        self.thresholds = tuple(float(t) for t in self.thresholds)


@dataclass
class RateMap:
    """Success rates of the lower bound on an angular grid.

    ``rates[t]`` is the grid for ``thresholds[t]``; ``antipode_angle`` holds
    the angle (degrees) between each grid direction and ``-xhat``.
    """

    axes: tuple
    thresholds: tuple
    rates: np.ndarray
    antipode_angle: np.ndarray
    xhat: np.ndarray
    metadata: dict = field(default_factory=dict)


def _support_frame(xhat, k, rng):
    """Orthonormal k x k frame whose first column is the support part of xhat."""
    S = np.flatnonzero(xhat)
    v = xhat[S]
    M = np.column_stack([v, gaussian(rng, (k, k - 1))])
    Q, R = np.linalg.qr(M)
    Q *= np.sign(np.diag(R))
    return S, Q


def _grid_directions(k, res):
    if k == 2:
        psi = (np.arange(res) + 0.5) * 360.0 / res
        rad = np.radians(psi)
        coords = np.stack([np.cos(rad), np.sin(rad)], axis=-1)
        return (psi,), coords, np.abs(psi - 180.0)
    polar = (np.arange(res) + 0.5) * 180.0 / res
    azim = (np.arange(2 * res) + 0.5) * 180.0 / res
    P, Z = np.meshgrid(np.radians(polar), np.radians(azim), indexing="ij")
    coords = np.stack([np.cos(P), np.sin(P) * np.cos(Z), np.sin(P) * np.sin(Z)], axis=-1)
    return (polar, azim), coords, np.broadcast_to(180.0 - polar[:, None], P.shape).copy()


def build_rate_map(op_factory, spec):
    """Average the indicator ``||A(xhat) - A(y)||_p > t ||xhat - y||`` over
    ``spec.draws`` operators ``op_factory(seed_i)`` for y sweeping the unit
    sphere of the support of a fixed k-sparse unit ``xhat``.

    The grid is offset by half a step so neither ``y = xhat`` nor ``y = -xhat``
    is sampled.
    """
    rng = make_rng(spec.seed)
    xhat = sample_sparse_sphere(spec.d, spec.k, rng)
    S, Q = _support_frame(xhat, spec.k, rng)
    axes, coords, anti = _grid_directions(spec.k, spec.resolution)
    flat = coords.reshape(-1, spec.k) @ Q.T  # support coordinates of every y
    Y = np.zeros((flat.shape[0], spec.d))
    Y[:, S] = flat
    dist = np.linalg.norm(Y - xhat, axis=1)
    thresholds = np.asarray(spec.thresholds)
    counts = np.zeros((thresholds.size, flat.shape[0]))
    draw_seeds = [derive_seed(spec.seed, i) for i in range(spec.draws)]
    for s in draw_seeds:
        op = op_factory(s)
        Ax = op.evaluate(xhat)
        ratio = np.array([lp_norm(Ax - op.evaluate(y), spec.p) for y in Y]) / dist
        counts += ratio[None, :] > thresholds[:, None]
    rates = (counts / spec.draws).reshape((thresholds.size,) + coords.shape[:-1])
    meta = {"d": spec.d, "n": spec.n, "k": spec.k, "p": spec.p, "draws": spec.draws,
            "seed": spec.seed, "draw_seeds": draw_seeds}
    return RateMap(axes, tuple(thresholds.tolist()), rates, anti, xhat, meta)
