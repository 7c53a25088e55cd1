"""Pulsating-star light curves as a nonlinear sensing problem.

A star contour u(phi) = sum_i x_i sin((2 pi phi + theta) i) is observed only
through n=13 limb-darkened, window-weighted brightness sums. The greedy
algorithm adds one frequency per step. With the default (configurable) limb
and window choices the measurements do not reliably separate a low frequency
from high ones: the contour is sampled on 2d+1 points, so frequencies i and
d - i nearly alias, and the 13 sums only see the distribution of brightness
values, not where on the contour they occur. This demo shows both effects.

Run:  python demos/04_asteroseismology.py
"""
import numpy as np

from qlcs.greedy import GreedyConfig, SubsolverConfig, greedy_recover
from qlcs.operators import asteroseismology

d, n = 200, 13
op = asteroseismology(n, d)
cfg = GreedyConfig(p=2.0, subsolver=SubsolverConfig(starts=4, max_iters=100, init_scale=0.5,
                                                    scan_points=31, scan_radius=1.5))
freq = lambda S: [i + 1 for i in S]  # noqa: E731  coordinate i carries frequency i+1

# a 2-sparse low-frequency pattern
x = np.zeros(d)
x[[1, 4]] = [1.0, -0.5]
cfg.k_max = 2
tr = greedy_recover(op, op.evaluate(x), cfg)
print(f"true frequencies {freq([1, 4])}; greedy picked {[freq(S) for S in tr.supports]}, "
      f"data residual {tr.residual_lp[-1]:.2e}")

# the brightness sums barely distinguish the two patterns
other = np.zeros(d)
other[tr.supports[-1]] = tr.final[tr.supports[-1]]
rel = np.linalg.norm(op.evaluate(other) - op.evaluate(x)) / np.linalg.norm(op.evaluate(x))
print(f"relative data mismatch of the greedy answer: {rel:.2%}")

# a decaying spectrum, reconstructed with three greedy steps
x = np.sign(np.sin(np.arange(d) + 1.0)) * 0.3 ** np.arange(d)
cfg.k_max = 3
tr = greedy_recover(op, op.evaluate(x), cfg)
print(f"\ndecaying spectrum: greedy frequencies {freq(tr.supports[-1])} "
      f"(on the sampling grid frequency {d - 1} equals frequency 1 up to sign and phase)")
phi = np.linspace(-1, 1, 9)
print("phi        " + " ".join(f"{p:6.2f}" for p in phi))
print("true u     " + " ".join(f"{v:6.3f}" for v in op.contour(x, phi)))
print("3-step u   " + " ".join(f"{v:6.3f}" for v in op.contour(tr.final, phi)))
