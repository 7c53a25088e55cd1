"""Seeded random streams.

All randomness goes through numpy's PCG64 bit generator. Gaussian variates
use the Box-Muller transform on PCG64 uniforms rather than numpy's ziggurat so
the recipe is easy to reproduce in other environments.
"""
import numpy as np

BIT_GENERATOR = "PCG64"


def make_rng(seed, *key):
    """Generator for ``seed`` with an optional integer spawn key.

    ``make_rng(s, i, j)`` gives the stream for cell ``(i, j)`` of an experiment
    with base seed ``s``; streams for different keys are independent.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed, *key):
    """A 63-bit integer seed for the stream ``(seed, *key)``; recorded in ledgers."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    hi, lo = (int(w) for w in ss.generate_state(2, np.uint32))
    return ((hi << 32) | lo) >> 1


def gaussian(rng, size):
    """Standard normal samples via Box-Muller."""
    size = (size,) if np.isscalar(size) else tuple(size)
    count = int(np.prod(size, dtype=np.int64))
    m = (count + 1) // 2
    u1 = 1.0 - rng.random(m)  # in (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(2.0 * np.pi * u2)
    z[1::2] = r * np.sin(2.0 * np.pi * u2)
    return z[:count].reshape(size)


def complex_gaussian(rng, size):
    """Circularly symmetric complex normal with ``E|z|^2 = 1``."""
    z = gaussian(rng, (2,) + ((size,) if np.isscalar(size) else tuple(size)))
    return (z[0] + 1j * z[1]) / np.sqrt(2.0)
