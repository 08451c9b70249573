"""Extremes of |sin t - 1/2| + |cos t| on [0, 2pi), piece by piece.

On each piece between sign changes the function is s1 (sin t - 1/2) + s2 cos t,
whose critical points satisfy tan t = s1 / s2.
"""
import mpmath as mp

mp.mp.dps = 30
breaks = sorted([mp.pi / 6, 5 * mp.pi / 6, mp.pi / 2, 3 * mp.pi / 2])
pieces = list(zip([mp.mpf(0)] + breaks, breaks + [2 * mp.pi]))


def h(t):
    return abs(mp.sin(t) - mp.mpf(1) / 2) + abs(mp.cos(t))


cands = list(breaks) + [mp.mpf(0)]
for a, b in pieces:
    mid = (a + b) / 2
    s1 = mp.sign(mp.sin(mid) - mp.mpf(1) / 2)
    s2 = mp.sign(mp.cos(mid))
    t0 = mp.atan2(s1, s2) % (2 * mp.pi)
    for t in (t0, (t0 + mp.pi) % (2 * mp.pi)):
        if a < t < b:
            cands.append(t)
vals = [h(t) for t in cands]
lo, hi = min(vals), max(vals)
print("delta", mp.nstr(lo, 20))
print("c1", mp.nstr(hi, 20))
print("kappa", mp.nstr(hi / lo, 20), "1+2sqrt2 =", mp.nstr(1 + 2 * mp.sqrt(2), 20))
