"""Least-squares polynomial approximation on sampled manifolds.

Fits use ambient monomials of total degree <= d and the minimum-norm
least-squares solution, since monomials are linearly dependent on a variety.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import floor
from typing import Optional

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .bounds import BoundReport, Formula, tm_variety
from .errors import ApproximationTooCoarse, RankDeficientBasis, UnresolvedTopology
from .geometry import ManifoldModel, SampleSet, sample
from .homology import zero_set_betti
from .poly import Polynomial, design_matrix, monomial_exponents
from .smoothmap import MapSpec, PolynomialMap

RANK_RTOL = 1e-10


@dataclass
class PolyFit:
    degree: int
    components: tuple        # Polynomial per output component
    sup_error: float
    c0_hat: float
    c1_norm: float = 0.0
    rank: int = 0
    n_basis: int = 0
    n_samples: int = 0

    def as_map(self) -> PolynomialMap:
        return PolynomialMap(self.components)

    def to_json(self) -> dict:
        comps = [{",".join(str(e) for e in ex): c for ex, c in p.terms.items()} for p in self.components]
        return {"degree": self.degree, "components": comps, "sup_error": self.sup_error,
                "c0_hat": self.c0_hat}


def _fit_samples(M: ManifoldModel, d: int, resolution: Optional[int]):
    """Fit and validation sample sets; validation has about 4x as many points."""
    dim = len(monomial_exponents(M.n, d))
    factor = 4 if M.m == 1 else 2
    if M.is_chart:
        base = resolution or (256 if M.m == 1 else 64)
        need = int(np.ceil((2 * dim) ** (1.0 / M.m)))
        N = max(base, need)
        return sample(M, N), sample(M, factor * N)
    N = resolution or 128
    S = sample(M, N)
    while len(S) < 2 * dim:
        N *= 2
        S = sample(M, N)
    return S, sample(M, factor * N)


def fit_polynomial(f: MapSpec, M: ManifoldModel, d: int, resolution: Optional[int] = None,
                   samples: Optional[SampleSet] = None, validation: Optional[SampleSet] = None,
                   strict: bool = False) -> PolyFit:
    """Minimum-norm least-squares fit of f by ambient polynomials of degree <= d."""
    if d < 0:
        raise ValueError("degree must be nonnegative")
    exps = monomial_exponents(M.n, d)
    if samples is None or validation is None:
        S0, V0 = _fit_samples(M, d, resolution)
        samples = S0 if samples is None else samples
        validation = V0 if validation is None else validation
    if len(samples) < 2 * len(exps):
        raise ValueError(f"{len(samples)} samples for {len(exps)} monomials; need twice as many")
    A = design_matrix(samples.x, exps)
    Y = f.values(samples)
    coef, _, rank, _ = scipy.linalg.lstsq(A, Y, cond=RANK_RTOL, lapack_driver="gelsd")
    if strict and rank < len(exps):
        raise RankDeficientBasis(f"rank {rank} < {len(exps)} monomials")
    comps = tuple(Polynomial(M.n, dict(zip(exps, coef[:, i]))) for i in range(Y.shape[1]))
    JV = f.evaluate(validation)
    P = design_matrix(validation.x, exps) @ coef
    err = float(np.max(np.linalg.norm(JV.values - P, axis=1)))
    c1 = float(np.max(JV.jet_norms()))
    c0 = err * d / c1 if c1 > 0 else 0.0
    return PolyFit(degree=d, components=comps, sup_error=err, c0_hat=c0, c1_norm=c1,
                   rank=int(rank), n_basis=len(exps), n_samples=len(samples))


def select_degree(c0_hat: float, kappa: float) -> int:
    """The unique integer d with 2 c0 κ < d <= 2 c0 κ + 1."""
    if c0_hat < 0 or kappa < 0:
        raise ValueError("c0_hat and kappa must be nonnegative")
    return int(floor(2.0 * c0_hat * kappa)) + 1


# ---------------------------------------------------------------- zero counting on curves

def curve_zero_count(f: MapSpec, M: ManifoldModel, resolution: int, eps: float) -> int:
    """Number of zero clusters of a scalar f on an implicit curve.

    A sample is marked when |f| <= eps or a neighbour (within 2.5 pitch) has the
    opposite sign; marked samples are clustered over the neighbour graph.
    """
    if M.m != 1 or M.is_chart:
        raise ValueError("curve_zero_count needs an implicit curve")
    S = sample(M, resolution)
    v = f.values(S)[:, 0]
    tree = cKDTree(S.x)
    pairs = tree.query_pairs(2.5 * S.pitch, output_type="ndarray")
    i, j = pairs[:, 0], pairs[:, 1]
    flip = np.sign(v[i]) * np.sign(v[j]) < 0
    mark = np.abs(v) <= eps
    mark[i[flip]] = True
    mark[j[flip]] = True
    keep = mark[i] & mark[j]
    n = len(S)
    G = sparse.coo_matrix((np.ones(int(keep.sum())), (i[keep], j[keep])), shape=(n, n))
    _, lab = connected_components(G, directed=False)
    return int(np.unique(lab[mark]).size)


def measured_zero_betti(f: MapSpec, M: ManifoldModel, resolution: int, delta_hat: float,
                        max_resolution: Optional[int] = None) -> Optional[int]:
    """b(Z(f)) by thickening (charts) or zero clustering (implicit curves); None otherwise."""
    if M.is_chart:
        return zero_set_betti(f, M, resolution, delta_hat, max_resolution=max_resolution).total
    if M.m == 1 and f.k == 1:
        eps = 0.45 * delta_hat
        cap = max(max_resolution or 0, 2 * resolution)
        r = resolution
        prev = curve_zero_count(f, M, r, eps)
        while 2 * r <= cap:
            nxt = curve_zero_count(f, M, 2 * r, eps)
            if nxt == prev:
                return prev
            prev, r = nxt, 2 * r
        raise UnresolvedTopology(f"zero count unstable up to resolution {r}", fine=prev)
    return None


# ---------------------------------------------------------------- pipeline

def approx_pipeline(f: MapSpec, M: ManifoldModel, resolution: int, probe_degrees=(1, 2, 4),
                    max_degree: int = 64, fit_resolution: Optional[int] = None, measure: bool = True,
                    return_fit: bool = False):
    """Bound b(Z(f)) through a polynomial approximation and the variety bound.

    1. κ and δ̂ from the condition module.
    2. c0_hat from fits at the probe degrees (floored at 1e-12).
    3. d = select_degree(c0_hat, κ), doubled until sup_error < δ̂/2.
    4. BoundReport with tm_variety(n, m, d0, d) and the measured b(Z(f)).
    """
    from .condition import kappa as kappa_of

    rep = kappa_of(f, M, resolution)
    kap, dhat = rep.kappa, rep.delta
    S = sample(M, resolution)
    J = f.evaluate(S)
    n, m, d0 = M.n, M.m, M.d0
    if np.all(J.tdiff == 0):
        # constant map with no zeros
        br = BoundReport(Formula.TM_VARIETY, {"n": n, "m": m, "d0": d0, "d": 1, "c0_hat": 0.0,
                                              "kappa": kap, "delta_hat": dhat, "sup_error": 0.0},
                         tm_variety(n, m, d0, 1), 0)
        return (br, None) if return_fit else br
    c0 = 0.0
    for dp in probe_degrees:
        c0 = max(c0, fit_polynomial(f, M, dp, resolution=fit_resolution).c0_hat)
    c0 = max(c0, 1e-12)
    d = select_degree(c0, kap)
    while True:
        if d > max_degree:
            raise ApproximationTooCoarse(f"no fit with sup_error < {dhat / 2:.3e} up to degree {max_degree}")
        fit = fit_polynomial(f, M, d, resolution=fit_resolution)
        if fit.sup_error < dhat / 2:
            break
        d = max_degree if d < max_degree < 2 * d else 2 * d
    measured = measured_zero_betti(f, M, resolution, dhat) if measure else None
    br = BoundReport(Formula.TM_VARIETY,
                     {"n": n, "m": m, "d0": d0, "d": d, "c0_hat": c0, "kappa": kap, "delta_hat": dhat,
                      "sup_error": fit.sup_error},
                     tm_variety(n, m, d0, d), measured)
    return (br, fit) if return_fit else br
