"""Critical points of polynomial objectives on implicit varieties.

For a variety cut out by q_1..q_c (c = n - m) and a c-subset R of coordinates
with nonzero minor, the vector fields

    X_k = cofactor expansion of det[ ∂_{R∪{k}} q_1 ... ∂_{R∪{k}} q_c | e ]

(k ∉ R) span T_xM.  Critical points of r|_M solve q = 0, X_k(r) = <X_k, ∇r> = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateMinor
from .geometry import ManifoldModel, greedy_dedup, implicit_frames, sample
from .poly import Polynomial, determinant

NEWTON_ITERS = 50
ROOT_TOL = 1e-10
DEDUP_RADIUS = 1e-6
ON_M_TOL = 1e-9
GRAD_TOL = 1e-8


def bezout_bound(n: int, m: int, d0: int, dr: int) -> int:
    """d0^(n-m) ((n-m)(d0-1) + dr - 1)^m."""
    for k, v in (("n", n), ("m", m), ("d0", d0), ("dr", dr)):
        if int(v) != v or v < 1:
            raise ValueError(f"{k} must be a positive integer")
    c = int(n) - int(m)
    if c < 0:
        raise ValueError("m must not exceed n")
    return int(d0) ** c * (c * (int(d0) - 1) + int(dr) - 1) ** int(m)


def field_polys(q: Sequence[Polynomial], rows: Sequence[int], k: int) -> list[Polynomial]:
    """Components of X_k as polynomials (zero outside rows ∪ {k})."""
    q = list(q)
    n = q[0].nvars
    c = len(q)
    if len(rows) != c:
        raise ValueError("need one row per polynomial")
    idx = sorted(list(rows) + [k])
    grads = [[qi.diff(i) for qi in q] for i in idx]   # (c+1) x c
    comps = [Polynomial(n) for _ in range(n)]
    for p, i in enumerate(idx):
        minor = [grads[a] for a in range(c + 1) if a != p]
        cof = determinant(minor) if c > 0 else Polynomial.constant(n, 1.0)
        # operator column is the (c+1)-th; 1-based row p+1
        sign = -1.0 if ((p + 1) + (c + 1)) % 2 else 1.0
        comps[i] = sign * cof
    return comps


def _best_minor(J: np.ndarray, c: int):
    """(rows, cols, |minor|) maximizing |det J[cols][:, rows]|; J is l x n."""
    l, n = J.shape
    best = (None, None, -1.0)
    for cols in combinations(range(l), c):
        for rows in combinations(range(n), c):
            v = abs(float(np.linalg.det(J[np.ix_(cols, rows)]))) if c else 1.0
            if v > best[2]:
                best = (rows, cols, v)
    return best


def tangent_fields(q: Sequence[Polynomial], x, rows: Optional[Sequence[int]] = None,
                   cols: Optional[Sequence[int]] = None) -> list[np.ndarray]:
    """X_k(x) for k outside the selected rows, in increasing k.

    Without rows the minor with the largest |det| at x is used. A given
    minor that vanishes at x raises DegenerateMinor.
    """
    q = list(q)
    x = np.asarray(x, float)
    n = q[0].nvars
    J = np.stack([p.gradient(x) for p in q])
    c = len(q) if cols is None else len(cols)
    if rows is None:
        rows, cols, _ = _best_minor(J, c)
    else:
        cols = tuple(range(len(rows))) if cols is None else tuple(cols)
        minor = abs(float(np.linalg.det(J[np.ix_(cols, rows)])))
        if minor <= 1e-12 * max(1.0, float(np.max(np.abs(J)))) ** len(rows):
            raise DegenerateMinor(f"selected minor vanishes at {x.tolist()}")
    qs = [q[j] for j in cols]
    out = []
    for k in range(n):
        if k in rows:
            continue
        comps = field_polys(qs, rows, k)
        out.append(np.array([float(p(x)) for p in comps]))
    return out


@dataclass
class CriticalSystem:
    q: tuple
    r: Polynomial
    rows: tuple
    cols: tuple
    equations: tuple = field(init=False)
    jacobian: tuple = field(init=False)

    def __post_init__(self):
        qs = [self.q[j] for j in self.cols]
        n = self.r.nvars
        c = len(self.rows)
        m = n - c
        grad_r = [self.r.diff(i) for i in range(n)]
        eqs = list(qs)
        d0 = max(p.degree for p in self.q)
        cap = c * (d0 - 1) + self.r.degree - 1
        for k in range(n):
            if k in self.rows:
                continue
            X = field_polys(qs, self.rows, k)
            e = Polynomial(n)
            for i in range(n):
                if not X[i].is_zero():
                    e = e + X[i] * grad_r[i]
            assert e.degree <= max(cap, 0), f"degree {e.degree} exceeds {cap}"
            eqs.append(e)
        assert len(eqs) == n, "system must be square"
        self.equations = tuple(eqs)
        self.jacobian = tuple(tuple(e.diff(i) for i in range(n)) for e in eqs)
        self.m = m

    def residual(self, X: np.ndarray) -> np.ndarray:
        return np.stack([e(X) for e in self.equations], axis=-1)

    def jac(self, X: np.ndarray) -> np.ndarray:
        return np.stack([np.stack([g(X) for g in row], axis=-1) for row in self.jacobian], axis=1)


def _newton(system: CriticalSystem, X0: np.ndarray):
    X = np.array(X0, float)
    ok = np.zeros(X.shape[0], dtype=bool)
    alive = np.ones(X.shape[0], dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(NEWTON_ITERS + 1):
            act = np.nonzero(alive & ~ok)[0]
            if act.size == 0:
                break
            Y = X[act]
            F = system.residual(Y)
            fin = np.all(np.isfinite(F), axis=1) & np.all(np.isfinite(Y), axis=1)
            alive[act[~fin]] = False
            conv = fin & (np.max(np.abs(np.where(np.isfinite(F), F, np.inf)), axis=1) < ROOT_TOL)
            ok[act[conv]] = True
            step_idx = fin & ~conv
            act, Y, F = act[step_idx], Y[step_idx], F[step_idx]
            if act.size == 0:
                break
            J = system.jac(Y)
            try:
                D = np.linalg.solve(J, F[..., None])[..., 0]
            except np.linalg.LinAlgError:
                D = np.einsum("nij,nj->ni", np.linalg.pinv(J), F)
            X[act] = Y - D
    return X[ok]


def _on_manifold_critical(M: ManifoldModel, r: Polynomial, X: np.ndarray) -> np.ndarray:
    if X.shape[0] == 0:
        return X
    q = M.q_values(X)
    good = np.max(np.abs(q), axis=1) < ON_M_TOL
    X = X[good]
    if X.shape[0] == 0:
        return X
    F = implicit_frames(M, X, check=False)
    g = np.einsum("nd,ndm->nm", r.gradient(X), F)
    return X[np.linalg.norm(g, axis=1) < GRAD_TOL]


def _sort_rows(X: np.ndarray) -> np.ndarray:
    if X.shape[0] == 0:
        return X
    key = np.round(X, 6)
    order = np.lexsort(key.T[::-1])
    return X[order]


class CriticalResult(tuple):
    """(count, points) with attributes `possible_undercount` and `bound`."""

    def __new__(cls, count, points, possible_undercount=False, bound=None):
        obj = super().__new__(cls, (count, points))
        obj.possible_undercount = possible_undercount
        obj.bound = bound
        return obj

    @property
    def count(self):
        return self[0]

    @property
    def points(self):
        return self[1]


def _critical_points(q, r, M, resolution):
    S = sample(M, resolution)
    n = M.n
    c = n - M.m
    Jq = M.q_jacobian(S.x)
    groups: dict = {}
    for i in range(len(S)):
        rows, cols, _ = _best_minor(Jq[i], c)
        groups.setdefault((rows, cols), []).append(i)
    found = []
    for (rows, cols), idx in sorted(groups.items()):
        system = CriticalSystem(tuple(q), r, rows, cols)
        found.append(_newton(system, S.x[np.array(idx)]))
    X = np.concatenate(found) if found else np.zeros((0, n))
    X = _on_manifold_critical(M, r, X)
    X = _sort_rows(X)
    X = X[greedy_dedup(X, DEDUP_RADIUS)] if X.shape[0] else X
    return X


def critical_count(q: Sequence[Polynomial], r: Polynomial, M: ManifoldModel, resolution: int,
                   check: bool = True) -> CriticalResult:
    """Count critical points of r on M by multi-start Newton from every sample.

    With check=True the count is repeated at resolution // 2 and a
    disagreement sets `possible_undercount`.
    """
    if M.is_chart:
        raise ValueError("critical_count needs an implicit model")
    X = _critical_points(q, r, M, resolution)
    flag = False
    if check and resolution // 2 >= 2:
        Xh = _critical_points(q, r, M, resolution // 2)
        flag = Xh.shape[0] != X.shape[0]
    bound = bezout_bound(M.n, M.m, M.d0, max(r.degree, 1))
    return CriticalResult(int(X.shape[0]), X, possible_undercount=flag, bound=bound)


def restricted_hessian(M: ManifoldModel, r: Polynomial, x) -> np.ndarray:
    """Hessian of r|_M at a critical point, in the orthonormal tangent frame."""
    x = np.asarray(x, float)
    n = M.n
    F = implicit_frames(M, x[None, :], check=False)[0]
    Jq = M.q_jacobian(x[None, :])[0]
    lam, *_ = np.linalg.lstsq(Jq.T, r.gradient(x), rcond=None)

    def hess(p):
        return np.array([[float(p.diff(i).diff(j)(x)) for j in range(n)] for i in range(n)])

    H = hess(r)
    for li, qi in zip(lam, M.polys):
        H = H - li * hess(qi)
    return F.T @ H @ F


def is_morse_point(M: ManifoldModel, r: Polynomial, x, rtol: float = 1e-8) -> bool:
    H = restricted_hessian(M, r, x)
    scale = max(1.0, float(np.max(np.abs(H)))) ** H.shape[0]
    return abs(float(np.linalg.det(H))) > rtol * scale


def perturb_linear(r: Polynomial, rng: np.random.Generator, scale: float = 1e-3) -> Polynomial:
    """r + scale ‖r‖ <u, x> with u a random unit vector (coefficient norm)."""
    n = r.nvars
    u = rng.standard_normal(n)
    u /= np.linalg.norm(u)
    return r + Polynomial.linear(scale * r.coefficient_norm() * u)
