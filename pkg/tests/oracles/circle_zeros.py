"""Zero counts of random polynomials on the unit circle by sign changes on a fine angle grid.

Polynomials are drawn exactly as topobound.experiments.draw_polynomials does
(seed 0): degree uniform in 1..3, Gaussian coefficients over graded monomials.
"""
import numpy as np
from itertools import combinations_with_replacement

rng = np.random.default_rng(0)


def exps(n, d):
    out = []
    for k in range(d + 1):
        for c in combinations_with_replacement(range(n), k):
            e = [0] * n
            for i in c:
                e[i] += 1
            out.append(tuple(e))
    return out


t = np.linspace(0, 2 * np.pi, 2_000_001)[:-1]
x, y = np.cos(t), np.sin(t)
counts = []
for i in range(100):
    d = int(rng.integers(1, 4))
    E = exps(2, d)
    c = rng.normal(size=len(E))
    v = sum(ci * x ** a * y ** b for ci, (a, b) in zip(c, E))
    s = np.sign(v)
    counts.append(int(np.sum(s != np.roll(s, 1))))
print(counts)
