"""Vector utilities: sparsity structure, decay classes and the norms the
recovery conditions are phrased in.

Signals are plain 1-D numpy arrays (real or complex, float64 precision).
"""
from typing import NamedTuple

import numpy as np


class Rearrangement(NamedTuple):
    """Magnitudes sorted nonincreasingly, with ``permutation[i]`` the original
    position of ``values[i]``."""

    values: np.ndarray
    permutation: np.ndarray


def as_signal(x, name="x"):
    """Validate and return ``x`` as a finite, nonempty 1-D float64/complex128 array."""
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D vector, got shape {arr.shape}")
    if np.iscomplexobj(arr):
        arr = arr.astype(np.complex128, copy=False)
    else:
        arr = arr.astype(np.float64, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf")
    return arr


def support(x):
    return np.flatnonzero(np.asarray(x) != 0)


def rearrange(x):
    """Nonincreasing rearrangement of ``|x|``; ties keep ascending index order."""
    x = as_signal(x)
    mags = np.abs(x)
    # stable sort on -|x| keeps equal magnitudes in index order
    perm = np.argsort(-mags, kind="stable")
    return Rearrangement(mags[perm], perm)


def best_k_approx(x, k):
    """Best k-term approximation: keep the ``k`` largest entries in magnitude."""
    x = as_signal(x)
    k = int(k)
    if k < 0 or k > x.size:
        raise ValueError(f"k must lie in [0, {x.size}], got {k}")
    out = np.zeros_like(x)
    if k:
        keep = rearrange(x).permutation[:k]
        out[keep] = x[keep]
    return out


def _check_kappa(kappa):
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")


def in_decay_class(x, kappa):
    """True iff ``r_{j+1}(x) <= kappa * r_j(x)`` for every j.

    Exactly sparse vectors qualify: trailing zeros satisfy ``0 <= kappa * 0``.
    """
    _check_kappa(kappa)
    r = rearrange(x).values
    return bool(np.all(r[1:] <= kappa * r[:-1]))


def decay_tail_bound_check(x, j, kappa):
    """Evaluate both sides of the tail estimate for kappa-decaying vectors.

    Returns ``(||x - x_{j}||, r_{j+1}/sqrt(1-kappa^2), kappa r_j/sqrt(1-kappa^2))``
    with ``x_{j}`` the best j-term approximation and ``r_j`` 1-based.
    """
    x = as_signal(x)
    if not 1 <= j < x.size:
        raise ValueError(f"j must lie in [1, {x.size - 1}], got {j}")
    if not in_decay_class(x, kappa):
        raise ValueError("x is not in the kappa-decay class")
    r = rearrange(x).values
    scale = 1.0 / np.sqrt(1.0 - kappa**2)
    lhs = float(np.linalg.norm(x - best_k_approx(x, j)))
    return lhs, float(r[j] * scale), float(r[j - 1] * kappa * scale)


def lp_norm(v, p=2.0):
    """(sum |v_i|^p)^(1/p) for ``1 <= p < inf``."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(np.asarray(v))
    if p == 2:
        return float(np.sqrt(np.sum(a * a)))
    if p == 1:
        return float(np.sum(a))
    m = a.max(initial=0.0)
    if m == 0:
        return 0.0
    return float(m * np.sum((a / m) ** p) ** (1.0 / p))


def hs_outer_distance(x, y):
    """Hilbert-Schmidt norm of ``xx* - yy*`` without forming the matrices.

    Uses ``||xx*-yy*||_HS^2 = ||x||^4 + ||y||^4 - 2|<x, y>|^2``.
    """
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    nx = np.vdot(x, x).real
    ny = np.vdot(y, y).real
    ip = abs(np.vdot(y, x))
    # (nx - ny)^2 + 2(nx ny - |<x,y>|^2) avoids cancellation when x ~ y
    val = (nx - ny) ** 2 + 2.0 * (nx * ny - ip * ip)
    return float(np.sqrt(max(val, 0.0)))


def phase_aligned_distance(x, y):
    """Distance between ``x`` and ``y`` up to a global sign (real) or unimodular
    factor (complex)."""
    x, y = np.asarray(x), np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if np.iscomplexobj(x) or np.iscomplexobj(y):
        val = np.vdot(x, x).real + np.vdot(y, y).real - 2.0 * abs(np.vdot(y, x))
        return float(np.sqrt(max(val, 0.0)))
    return float(min(np.linalg.norm(x - y), np.linalg.norm(x + y)))
