"""Quasi-linear measurement operators ``A(x) = F(x) x``.

Every operator exposes ``evaluate`` (the measurement map) and, when the
quasi-linear factorization is available, ``factor`` (the matrix ``F(x)``).
Solvers additionally use ``jacobian_restricted`` for local searches; the base
class provides a central-difference fallback so concrete operators only need
``evaluate``.
"""
from dataclasses import asdict, dataclass
from typing import Callable, NamedTuple

import numpy as np

from .core import as_signal
from .rng import complex_gaussian, gaussian, make_rng


# --------------------------------------------------------------------------
# dense matrix helpers
# --------------------------------------------------------------------------

class SpectralNorm(NamedTuple):
    value: float
    converged: bool
    iterations: int


def spectral_norm(M, tol=1e-6, max_iter=10_000, seed=0):
    """Largest singular value of ``M`` by power iteration on ``M* M``.

    Returns ``SpectralNorm(value, converged, iterations)``; on hitting
    ``max_iter`` the best estimate so far is returned with ``converged=False``.
    """
    M = np.asarray(M)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    if M.size == 0 or not np.any(M):
        return SpectralNorm(0.0, True, 0)
    rng = make_rng(seed)
    v = gaussian(rng, M.shape[1])
    if np.iscomplexobj(M):
        v = v + 1j * gaussian(rng, M.shape[1])
    v /= np.linalg.norm(v)
    est = 0.0
    for it in range(1, max_iter + 1):
        w = M @ v
        new = float(np.linalg.norm(w))
        v = M.conj().T @ w
        nv = np.linalg.norm(v)
        if nv == 0:
            return SpectralNorm(new, True, it)
        v /= nv
        # ||Mv|| converges at twice the rate of v, so a tight step test is cheap
        if it > 1 and abs(new - est) <= 1e-3 * tol * new:
            return SpectralNorm(new, True, it)
        est = new
    return SpectralNorm(est, False, max_iter)


def make_gaussian(n, d, seed, normalize="none"):
    """n x d matrix of i.i.d. standard normals; ``normalize="by_sqrt_n"`` scales
    by ``1/sqrt(n)`` so that ``E||Ax||^2 = ||x||^2``."""
    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    A = gaussian(make_rng(seed), (n, d))
    if normalize == "by_sqrt_n":
        A /= np.sqrt(n)
    elif normalize != "none":
        raise ValueError(f"unknown normalization {normalize!r}")
    return A


def embedding_identity(n, d):
    """The n x d matrix with ones on the main diagonal (identity when n == d)."""
    return np.eye(n, d)


# --------------------------------------------------------------------------
# operator interface
# --------------------------------------------------------------------------

class QuasiLinearOperator:
    """Base class: ``A: R^d -> R^n`` (or C^d) with ``A(x) = F(x) x``."""

    field = "real"
    supports_factor = True
    is_linear = False

    def __init__(self, n, d):
        self.n = int(n)
        self.d = int(d)

    @property
    def shape(self):
        return (self.n, self.d)

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        return self.factor(x) @ np.asarray(x)

    def factor(self, x):
        raise NotImplementedError(f"{type(self).__name__} has no quasi-linear factor")

    def evaluate_restricted(self, z, idx):
        """``A`` applied to the vector supported on ``idx`` with values ``z``."""
        x = np.zeros(self.d, dtype=np.result_type(z, float))
        x[idx] = z
        return self.evaluate(x)

    def jacobian_restricted(self, z, idx):
        """n x |idx| Jacobian of ``z -> evaluate_restricted(z, idx)``.

        Central differences with step ``1e-6 (1 + ||z||)``; subclasses with a
        closed form override this.
        """
        z = np.asarray(z, dtype=float)
        h = 1e-6 * (1.0 + np.linalg.norm(z))
        J = np.empty((self.n, z.size))
        for c in range(z.size):
            e = np.zeros_like(z)
            e[c] = h
            J[:, c] = (self.evaluate_restricted(z + e, idx) - self.evaluate_restricted(z - e, idx)) / (2 * h)
        return J

    def _check(self, x):
        x = np.asarray(x)
        # fast path for the hot loops of the iterative solvers
        if x.shape == (self.d,) and x.dtype in (np.float64, np.complex128) and np.isfinite(x.sum()):
            return x
        x = as_signal(x)
        if x.size != self.d:
            raise ValueError(f"expected a signal of length {self.d}, got {x.size}")
        return x


class LinearOperator(QuasiLinearOperator):
    """``A(x) = M x`` with constant factor ``M``."""

    is_linear = True

    def __init__(self, M):
        M = np.asarray(M)
        super().__init__(*M.shape)
        self.M = M
        self.field = "complex" if np.iscomplexobj(M) else "real"

    def evaluate(self, x):
        return self.M @ self._check(x)

    def factor(self, x):
        return self.M

    def evaluate_restricted(self, z, idx):
        return self.M[:, idx] @ z

    def jacobian_restricted(self, z, idx):
        return self.M[:, idx]


class ScaledOperator(QuasiLinearOperator):
    """``x -> A(x) / scale``; the factor is scaled alike.

    Rescaling operator and data by the same constant leaves the set of
    solutions of ``A(x) = b`` unchanged, so this is used to bring ``||F(x)||``
    below one before running unit-step thresholding schemes.
    """

    def __init__(self, op, scale):
        super().__init__(op.n, op.d)
        if scale <= 0:
            raise ValueError("scale must be positive")
        self.op = op
        self.scale = float(scale)
        self.field = op.field
        self.supports_factor = op.supports_factor
        self.is_linear = op.is_linear

    def evaluate(self, x):
        return self.op.evaluate(x) / self.scale

    def factor(self, x):
        return self.op.factor(x) / self.scale

    def evaluate_restricted(self, z, idx):
        return self.op.evaluate_restricted(z, idx) / self.scale

    def jacobian_restricted(self, z, idx):
        return self.op.jacobian_restricted(z, idx) / self.scale


def default_profile(t):
    """Bounded Lipschitz perturbation profile ``1 / (1 + t^2)``."""
    return 1.0 / (1.0 + t * t)


# sup |f| and sup |f'| of default_profile; f'(t) = -2t/(1+t^2)^2 peaks at t = 1/sqrt(3)
DEFAULT_PROFILE_BOUND = 1.0
DEFAULT_PROFILE_LIPSCHITZ = 3.0 * np.sqrt(3.0) / 8.0


class LipschitzPerturbed(QuasiLinearOperator):
    """``A(x) = A1 x + eps f(||x - x0||) A2 x``, factor ``A1 + eps f(.) A2``."""

    def __init__(self, A1, A2=None, epsilon=1.0, x0=None, profile: Callable = default_profile,
                 profile_bound=DEFAULT_PROFILE_BOUND, profile_lipschitz=DEFAULT_PROFILE_LIPSCHITZ):
        A1 = np.asarray(A1, dtype=float)
        n, d = A1.shape
        super().__init__(n, d)
        A2 = embedding_identity(n, d) if A2 is None else np.asarray(A2, dtype=float)
        x0 = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float)
        if A2.shape != A1.shape:
            raise ValueError(f"A2 has shape {A2.shape}, expected {A1.shape}")
        if x0.shape != (d,):
            raise ValueError(f"x0 has shape {x0.shape}, expected ({d},)")
        if epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        self.A1, self.A2, self.x0 = A1, A2, x0
        self.epsilon = float(epsilon)
        self.profile = profile
        self.profile_bound = profile_bound
        self.profile_lipschitz = profile_lipschitz

    def weight(self, x):
        dx = x - self.x0
        return self.epsilon * self.profile(float(np.sqrt(dx @ dx)))

    def factor(self, x):
        x = self._check(x)
        return self.A1 + self.weight(x) * self.A2

    def evaluate(self, x):
        x = self._check(x)
        if self.epsilon == 0.0:
            return self.A1 @ x
        return self.A1 @ x + self.weight(x) * (self.A2 @ x)

    def evaluate_restricted(self, z, idx):
        x = np.zeros(self.d)
        x[idx] = z
        return self.A1[:, idx] @ z + self.weight(x) * (self.A2[:, idx] @ z)

    def factor_bound(self):
        """Upper bound on ``sup_x ||F(x)||_2``."""
        return (spectral_norm(self.A1).value
                + self.epsilon * self.profile_bound * spectral_norm(self.A2).value)


class Rank1Phase(QuasiLinearOperator):
    """Phaseless measurements ``A(x)_i = |<a_i, x>|^2``.

    ``vectors`` holds the measurement vectors ``a_i`` as rows. The factor has
    rows ``x* a_i a_i*``.
    """

    def __init__(self, vectors):
        V = np.asarray(vectors)
        super().__init__(*V.shape)
        self.vectors = V
        self.field = "complex" if np.iscomplexobj(V) else "real"
        self._rows = V.conj()  # (rows @ x)_i = <a_i, x> = a_i* x

    def evaluate(self, x):
        x = self._check(x)
        return np.abs(self._rows @ x) ** 2

    def factor(self, x):
        x = self._check(x)
        return (self._rows @ x).conj()[:, None] * self._rows

    def evaluate_restricted(self, z, idx):
        return np.abs(self._rows[:, idx] @ z) ** 2

    def jacobian_restricted(self, z, idx):
        if self.field != "real":
            return super().jacobian_restricted(z, idx)
        R = self._rows[:, idx]
        return 2.0 * (R @ z)[:, None] * R


class RankMProjectorPhase(QuasiLinearOperator):
    """``A(x)_i = (d/m) ||P_{V_i} x||^2`` for random m-dimensional subspaces."""

    def __init__(self, bases):
        B = np.asarray(bases, dtype=float)  # n x d x m, orthonormal columns
        n, d, m = B.shape
        super().__init__(n, d)
        self.m = m
        self.bases = B
        self.c = d / m

    def projector(self, i):
        U = self.bases[i]
        return U @ U.T

    def evaluate(self, x):
        x = self._check(x)
        coeffs = np.einsum("idm,d->im", self.bases, x)
        return self.c * np.sum(coeffs**2, axis=1)

    def factor(self, x):
        x = self._check(x)
        coeffs = np.einsum("idm,d->im", self.bases, x)
        return self.c * np.einsum("idm,im->id", self.bases, coeffs)

    def evaluate_restricted(self, z, idx):
        coeffs = np.einsum("idm,d->im", self.bases[:, idx, :], z)
        return self.c * np.sum(coeffs**2, axis=1)

    def jacobian_restricted(self, z, idx):
        Bs = self.bases[:, idx, :]
        coeffs = np.einsum("idm,d->im", Bs, z)
        return 2.0 * self.c * np.einsum("idm,im->id", Bs, coeffs)


class NearlyIsometricMap:
    """Random linear map on d x d matrices, ``X -> (trace(A_i* X))_i / sqrt(n)``.

    Inputs are given in factored form: a list of ``(weight, vector)`` pairs
    standing for ``sum_k w_k v_k v_k*`` with at most two terms.
    """

    def __init__(self, matrices):
        self.matrices = np.asarray(matrices, dtype=float)  # n x d x d
        self.n, self.d, _ = self.matrices.shape

    def apply(self, terms):
        terms = list(terms)
        if len(terms) > 2:
            raise ValueError(f"factorization has rank {len(terms)} > 2")
        out = np.zeros(self.n)
        for w, v in terms:
            v = np.asarray(v, dtype=float)
            # trace(A_i^T v v^T) = v^T A_i v
            out += w * np.einsum("j,ijk,k->i", v, self.matrices, v)
        return out / np.sqrt(self.n)

    def apply_dense(self, X):
        return np.einsum("ijk,jk->i", self.matrices, np.asarray(X)) / np.sqrt(self.n)

    def as_operator(self):
        return NearlyIsometricPhase(self)


class NearlyIsometricPhase(QuasiLinearOperator):
    """``A(x) = calA(x x*)`` for a nearly isometric map ``calA``."""

    supports_factor = False

    def __init__(self, nimap):
        super().__init__(nimap.n, nimap.d)
        self.map = nimap

    def evaluate(self, x):
        x = self._check(x)
        return self.map.apply([(1.0, x)])

    def evaluate_restricted(self, z, idx):
        Ms = self.map.matrices[:, idx][:, :, idx]
        return np.einsum("j,ijk,k->i", z, Ms, z) / np.sqrt(self.n)

    def jacobian_restricted(self, z, idx):
        Ms = self.map.matrices[:, idx][:, :, idx]
        return (np.einsum("ijk,k->ij", Ms, z) + np.einsum("j,ijk->ik", z, Ms)) / np.sqrt(self.n)


# --------------------------------------------------------------------------
# asteroseismology contour model
# --------------------------------------------------------------------------

def limb_darkening(d, coefficient=0.6, floor=0.2):
    """Linear limb-darkening weights on samples ``j = -d..d``."""
    j = np.arange(-d, d + 1)
    return np.clip(1.0 - coefficient * (1.0 - np.cos(np.pi * j / d)), floor, 1.0)


class RaisedCosinePartition:
    """n windows on the real line summing to one everywhere.

    Window centres are equispaced on ``[-value_range, value_range]``;
    neighbouring windows cross-fade with ``cos^2``/``sin^2`` ramps and the
    outermost windows stay at one beyond the end centres.
    """

    def __init__(self, n, value_range=2.0):
        if n < 1:
            raise ValueError("need at least one window")
        self.n = int(n)
        self.centres = np.linspace(-value_range, value_range, n) if n > 1 else np.zeros(1)
        self.h = self.centres[1] - self.centres[0] if n > 1 else 1.0

    def _locate(self, t):
        s = np.minimum(np.maximum((np.asarray(t, dtype=float) - self.centres[0]) / self.h, 0.0), self.n - 1)
        left = np.minimum(np.floor(s).astype(int), self.n - 2)
        return s, left, s - left

    def __call__(self, t):
        """Window values, shape ``(n, len(t))``."""
        t = np.atleast_1d(t)
        W = np.zeros((self.n, t.size))
        if self.n == 1:
            W[0] = 1.0
            return W
        _, left, frac = self._locate(t)
        cols = np.arange(t.size)
        W[left, cols] = np.cos(0.5 * np.pi * frac) ** 2
        W[left + 1, cols] = np.sin(0.5 * np.pi * frac) ** 2
        return W

    def weighted_sums(self, t, values):
        """``W(t) @ values`` without forming W (each sample feeds two windows)."""
        t = np.atleast_1d(t)
        if self.n == 1:
            return np.array([np.sum(values)])
        _, left, frac = self._locate(t)
        c2 = np.cos(0.5 * np.pi * frac) ** 2
        return (np.bincount(left, c2 * values, minlength=self.n)
                + np.bincount(left + 1, (1.0 - c2) * values, minlength=self.n))

    def derivative(self, t):
        t = np.atleast_1d(t)
        D = np.zeros((self.n, t.size))
        if self.n == 1:
            return D
        s, left, frac = self._locate(t)
        inside = (s > 0) & (s < self.n - 1)
        slope = np.where(inside, 0.5 * np.pi / self.h * np.sin(np.pi * frac), 0.0)
        cols = np.arange(t.size)
        D[left, cols] = -slope
        D[left + 1, cols] = slope
        return D


class Asteroseismology(QuasiLinearOperator):
    """Light-intensity model of a pulsating 2-D star contour.

    The contour ``u(phi) = sum_i x_i sin((2 pi phi + theta) i)`` is sampled at
    ``phi = j/d`` for ``j = -d..d``; measurement ``l`` is

        b_l = sqrt(pi)/(2d+1) * sum_j w_l(f_j u_j) f_j u_j

    with limb-darkening weights ``f_j`` and a partition of unity ``w_l``.
    """

    def __init__(self, n, d, theta=0.3, limb=None, windows=None):
        if n < 1:
            raise ValueError("need at least one measurement window")
        super().__init__(n, d)
        self.theta = float(theta)
        j = np.arange(-d, d + 1)
        angles = 2.0 * np.pi * j / d + self.theta
        self.sines = np.sin(np.outer(angles, np.arange(1, d + 1)))  # (2d+1) x d
        self.limb = limb_darkening(d) if limb is None else np.asarray(limb, dtype=float)
        if self.limb.shape != (2 * d + 1,):
            raise ValueError("limb-darkening profile needs 2d+1 samples")
        self.windows = RaisedCosinePartition(n) if windows is None else windows
        self.c = np.sqrt(np.pi) / (2 * d + 1)

    def contour(self, x, phi=None):
        """Samples of ``u``: at ``j/d`` by default, else at the given ``phi``."""
        x = np.asarray(x, dtype=float)
        if phi is None:
            return self.sines @ x
        ang = np.outer(2.0 * np.pi * np.asarray(phi) + self.theta, np.arange(1, self.d + 1))
        return np.sin(ang) @ x

    def _from_contour(self, u):
        v = self.limb * u
        if isinstance(self.windows, RaisedCosinePartition):
            return self.c * self.windows.weighted_sums(v, v)
        return self.c * (self.windows(v) @ v)

    def evaluate(self, x):
        return self._from_contour(self.sines @ self._check(x))

    def factor(self, x):
        u = self.sines @ self._check(x)
        W = self.windows(self.limb * u)
        return self.c * (W * self.limb) @ self.sines

    def evaluate_restricted(self, z, idx):
        return self._from_contour(self.sines[:, idx] @ z)

    def jacobian_restricted(self, z, idx):
        S = self.sines[:, idx]
        v = self.limb * (S @ z)
        if not isinstance(self.windows, RaisedCosinePartition) or self.windows.n == 1:
            # d/dv [w_l(v) v] = w_l'(v) v + w_l(v)
            G = self.windows.derivative(v) * v + self.windows(v)
            return self.c * (G * self.limb) @ S
        win = self.windows
        s, left, frac = win._locate(v)
        c2 = np.cos(0.5 * np.pi * frac) ** 2
        inside = (s > 0) & (s < win.n - 1)
        slope = np.where(inside, 0.5 * np.pi / win.h * np.sin(np.pi * frac), 0.0)
        g_left = (c2 - slope * v) * self.limb
        g_right = (1.0 - c2 + slope * v) * self.limb
        m = S.shape[1]
        # one bincount per side over (window, column) pairs
        bins = (left[:, None] * m + np.arange(m)).ravel()
        J = (np.bincount(bins, (g_left[:, None] * S).ravel(), minlength=self.n * m)
             + np.bincount(bins + m, (g_right[:, None] * S).ravel(), minlength=self.n * m))
        return self.c * J.reshape(self.n, m)


# --------------------------------------------------------------------------
# seeded construction
# --------------------------------------------------------------------------

def lipschitz_perturbed(n, d, seed, epsilon=1.0, normalize="none", A2=None, x0=None,
                        profile=default_profile, **kw):
    A1 = make_gaussian(n, d, seed, normalize)
    return LipschitzPerturbed(A1, A2=A2, epsilon=epsilon, x0=x0, profile=profile, **kw)


def rank1_phase(n, d, seed, field="real", distribution="gaussian"):
    """Rank-one phase retrieval operator with i.i.d. Gaussian or unit-sphere vectors."""
    rng = make_rng(seed)
    if field == "real":
        V = gaussian(rng, (n, d))
    elif field == "complex":
        V = complex_gaussian(rng, (n, d))
    else:
        raise ValueError(f"unknown field {field!r}")
    if distribution == "sphere":
        V /= np.linalg.norm(V, axis=1, keepdims=True)
    elif distribution != "gaussian":
        raise ValueError(f"unknown distribution {distribution!r}")
    return Rank1Phase(V)


def rankm_projector_phase(n, d, m, seed):
    """Projections onto n Haar-random m-dimensional subspaces of R^d."""
    if not 1 <= m <= d:
        raise ValueError(f"need 1 <= m <= d, got m={m}, d={d}")
    G = gaussian(make_rng(seed), (n, d, m))
    Q, R = np.linalg.qr(G)
    # sign fix makes the QR factor Haar distributed
    Q = Q * np.sign(np.diagonal(R, axis1=1, axis2=2))[:, None, :]
    return RankMProjectorPhase(Q)


def nearly_isometric(n, d, seed):
    return NearlyIsometricMap(gaussian(make_rng(seed), (n, d, d)))


def asteroseismology(n, d, theta=0.3, seed=None, value_range=2.0, limb_coefficient=0.6,
                     limb_floor=0.2):
    # the model itself is deterministic; seed is accepted for interface symmetry
    return Asteroseismology(n, d, theta=theta, limb=limb_darkening(d, limb_coefficient, limb_floor),
                            windows=RaisedCosinePartition(n, value_range))


@dataclass
class EnsembleSpec:
    """Serializable description of a seeded operator ensemble."""

    kind: str
    n: int
    d: int
    seed: int = 0
    m: int = 1
    epsilon: float = 1.0
    field: str = "real"
    distribution: str = "gaussian"
    normalize: str = "none"
    theta: float = 0.3
    value_range: float = 2.0
    limb_coefficient: float = 0.6
    limb_floor: float = 0.2

    KINDS = ("gaussian_matrix", "lipschitz_perturbed", "rank1_phase",
             "rankm_projector_phase", "nearly_isometric", "asteroseismology")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if self.kind == "rankm_projector_phase" and not 1 <= self.m <= self.d:
            raise ValueError("projector rank m must satisfy 1 <= m <= d")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")

    def to_dict(self):
        return asdict(self)

    def build(self, seed=None):
        """Construct the operator; ``seed`` overrides the stored seed."""
        s = self.seed if seed is None else seed
        if self.kind == "gaussian_matrix":
            return LinearOperator(make_gaussian(self.n, self.d, s, self.normalize))
        if self.kind == "lipschitz_perturbed":
            return lipschitz_perturbed(self.n, self.d, s, self.epsilon, self.normalize)
        if self.kind == "rank1_phase":
            return rank1_phase(self.n, self.d, s, self.field, self.distribution)
        if self.kind == "rankm_projector_phase":
            return rankm_projector_phase(self.n, self.d, self.m, s)
        if self.kind == "nearly_isometric":
            return nearly_isometric(self.n, self.d, s).as_operator()
        return asteroseismology(self.n, self.d, self.theta, s, self.value_range,
                                self.limb_coefficient, self.limb_floor)
