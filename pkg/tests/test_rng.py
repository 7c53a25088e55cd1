import numpy as np

from qlcs.rng import BIT_GENERATOR, complex_gaussian, derive_seed, gaussian, make_rng


def test_streams_are_reproducible_and_keyed():
    assert BIT_GENERATOR == "PCG64"
    a = make_rng(5, 1, 2).random(4)
    assert np.array_equal(a, make_rng(5, 1, 2).random(4))
    assert not np.array_equal(a, make_rng(5, 2, 1).random(4))
    assert derive_seed(5, 1) == derive_seed(5, 1) != derive_seed(5, 2)
    assert 0 <= derive_seed(0) < 2**63


def test_box_muller_moments_and_shape():
    z = gaussian(make_rng(0), 200_001)
    assert z.shape == (200_001,)
    assert abs(z.mean()) < 0.01 and abs(z.var() - 1) < 0.01
    assert abs(np.mean(z**4) - 3) < 0.05
    assert gaussian(make_rng(0), (3, 5)).shape == (3, 5)
    assert np.array_equal(gaussian(make_rng(1), 10), gaussian(make_rng(1), 10))


def test_complex_gaussian():
    z = complex_gaussian(make_rng(2), 100_000)
    assert abs(np.mean(np.abs(z) ** 2) - 1) < 0.02
    assert abs(np.mean(z)) < 0.01
