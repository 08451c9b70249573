"""Prepackaged studies: sharpness runs, bound sweeps and brute-force campaigns.

Every campaign draws all of its random inputs up front from one seeded
generator, so results depend only on the seed and not on the worker count.
"""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from itertools import combinations, product
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.ndimage import gaussian_filter

from .approx import fit_polynomial, measured_zero_betti
from .bounds import (BoundReport, Formula, estimate_constant, mv_intersection_bound,
                     mv_union_bound, tm_variety)
from .condition import c1_norm, family_delta, kappa
from .errors import BoxTooSmall, SingularMap, UnresolvedTopology
from .geometry import ManifoldModel, implicit_circle, torus_quartic
from .homology import CubicalComplex, betti, zero_set_betti
from .morse import bezout_bound, critical_count
from .poly import Polynomial, monomial_exponents
from .semialg import SignSystem, cell_bound
from .smoothmap import BumpReplicationMap, MapSpec, PolynomialMap, trig

SHARP_RADIUS = 0.45     # disk radius as a fraction of the grid spacing
KAPPA_SLACK = 1.05
PLATEAU_RTOL = 0.2


# ---------------------------------------------------------------- plumbing

def default_workers() -> int:
    return os.cpu_count() or 1


def parallel_map(fn: Callable, items: Sequence, workers: Optional[int] = None) -> list:
    """Ordered map; a process pool is used only when workers > 1."""
    items = list(items)
    workers = default_workers() if workers is None else int(workers)
    if workers <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def rows_to_csv(rows: Sequence[dict], fields: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fields), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(r.get(k)) for k in fields})
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    return str(v)


# ---------------------------------------------------------------- random inputs

def random_trig(rng: np.random.Generator, m: int, n_terms: int = 3, max_freq: int = 2,
                const_scale: float = 0.3) -> MapSpec:
    """const + Σ a cos(<w, u> + φ) with nonzero integer frequency vectors."""
    terms = []
    for _ in range(n_terms):
        while True:
            w = rng.integers(-max_freq, max_freq + 1, size=m)
            if np.any(w != 0):
                break
        terms.append((float(rng.normal()), tuple(float(v) for v in w), float(rng.uniform(0, 2 * np.pi))))
    return trig(float(const_scale * rng.normal()), terms)


def random_polynomial(rng: np.random.Generator, nvars: int, degree: int) -> Polynomial:
    """Gaussian coefficients on every monomial of total degree <= degree."""
    exps = monomial_exponents(nvars, degree)
    return Polynomial(nvars, {e: float(c) for e, c in zip(exps, rng.normal(size=len(exps)))})


# ---------------------------------------------------------------- sharpness

def sharpness_family(M: ManifoldModel, n_rep: int, a: float = 1.0) -> BumpReplicationMap:
    """n_rep^m bump copies on the regular grid of spacing side / n_rep.

    Centers sit at cell midpoints and the radius is 0.45 times the spacing,
    so neighbouring disks (also across a periodic seam) stay disjoint.
    """
    if int(n_rep) != n_rep or n_rep < 1:
        raise ValueError("n_rep must be a positive integer")
    if not M.is_chart:
        raise ValueError("sharpness_family needs a chart model")
    side = M.side_lengths()
    if np.any(side < 1.0):
        raise BoxTooSmall(f"chart sides {side.tolist()} must be at least 1")
    n = int(n_rep)
    spacing = side / n
    if not np.allclose(spacing, spacing[0]):
        # round disks need a common spacing; use the smallest one
        spacing = np.full_like(spacing, spacing.min())
    lower = np.asarray(M.lower, float)
    axes = [lower[i] + (np.arange(n) + 0.5) * (side[i] / n) for i in range(M.m)]
    centers = np.array(list(product(*axes)), dtype=float)
    radius = SHARP_RADIUS * float(spacing.min())
    return BumpReplicationMap(centers, radius, n, M.lower, M.upper, M.periodic, a=a,
                              packing_constant=1.0)


@dataclass
class SharpnessRecord:
    n: int
    disks: int
    b_total: Optional[int]
    kappa: float
    ratio: Optional[float]
    b: tuple = ()

    def row(self) -> dict:
        return {"n": self.n, "disks": self.disks, "b_total": self.b_total, "kappa": self.kappa,
                "ratio": self.ratio}


@dataclass
class SharpnessRun:
    m: int
    records: list
    packing_constant: float
    base_betti: int
    truncated_at: Optional[int] = None
    verdict: dict = field(default_factory=dict)

    CSV_FIELDS = ("n", "disks", "b_total", "kappa", "ratio")

    def to_csv(self) -> str:
        return rows_to_csv([r.row() for r in self.records], self.CSV_FIELDS)

    @property
    def holds(self) -> bool:
        return bool(self.verdict) and all(self.verdict.values())


def _running_min(values):
    out, cur = [], float("inf")
    for v in values:
        cur = min(cur, v)
        out.append(cur)
    return out


def sharpness_verdict(records: Sequence[SharpnessRecord], m: int, base_betti: int) -> dict:
    """Checks on a run: exact Betti counts, κ(f_n) <= 1.05 n κ(f_1), ratio plateau."""
    recs = [r for r in records if r.b_total is not None]
    if not recs:
        return {"b_exact": False, "kappa_linear": False, "ratio_positive": False, "plateau": False}
    k1 = records[0].kappa
    out = {
        "b_exact": all(r.b_total == base_betti * r.disks for r in recs),
        "kappa_linear": all(r.kappa <= KAPPA_SLACK * r.n * k1 for r in records),
        "ratio_positive": all(r.ratio > 0 for r in recs),
    }
    run = _running_min([r.ratio for r in recs])
    tail = run[-3:]
    out["plateau"] = len(tail) == 3 and (tail[0] - tail[-1]) <= PLATEAU_RTOL * tail[0]
    return out


def _sharpness_point(M, resolution, cap, n):
    f = sharpness_family(M, n)
    rep = kappa(f, M, resolution)
    try:
        b = zero_set_betti(f, M, resolution, rep.delta, max_resolution=cap)
    except UnresolvedTopology:
        return SharpnessRecord(n, f.disks, None, rep.kappa, None)
    return SharpnessRecord(n, f.disks, b.total, rep.kappa, b.total / rep.kappa ** M.m, tuple(b))


def sharpness_run(M: ManifoldModel, n_max: int, resolution: int = 128, cap: Optional[int] = None,
                  workers: Optional[int] = 1) -> SharpnessRun:
    """b(Z(f_n)) and κ(f_n) for n = 1..n_max. Stops at the first unresolved n."""
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    cap = cap or 2 * resolution
    recs = parallel_map(partial(_sharpness_point, M, resolution, cap), range(1, n_max + 1), workers)
    truncated = None
    for i, r in enumerate(recs):
        if r.b_total is None:
            truncated = r.n
            recs = recs[: i + 1]
            break
    base = 2   # two points for m = 1, one circle for m = 2
    run = SharpnessRun(M.m, recs, packing_constant=1.0, base_betti=base, truncated_at=truncated)
    run.verdict = sharpness_verdict(recs, M.m, base)
    return run


# ---------------------------------------------------------------- discriminant cutoff

@dataclass
class CutoffRecord:
    index: int
    manifold: str
    delta_cut: float
    delta_all: float
    witness_cut: tuple
    witness_all: tuple

    @property
    def tie(self) -> bool:
        return self.delta_cut == self.delta_all

    def row(self) -> dict:
        return {"index": self.index, "manifold": self.manifold, "delta_cut": self.delta_cut,
                "delta_all": self.delta_all, "witness_cut": "-".join(map(str, self.witness_cut)),
                "witness_all": "-".join(map(str, self.witness_all)), "tie": self.tie}


CUTOFF_FIELDS = ("index", "manifold", "delta_cut", "delta_all", "witness_cut", "witness_all", "tie")


def _cutoff_point(M, resolution, item):
    i, F = item
    a = family_delta(F, M, resolution)
    b = family_delta(F, M, resolution, all_subsets=True)
    return CutoffRecord(i, M.name, float(a[0]), float(b[0]), a[1], b[1])


def cutoff_campaign(M: ManifoldModel, n_families: int, s: int, resolution: int, seed: int,
                    workers: Optional[int] = 1) -> list[CutoffRecord]:
    """family_delta with the |J| <= m+1 cutoff against all nonempty subsets."""
    rng = np.random.default_rng(seed)
    fams = [(i, [random_trig(rng, M.m) for _ in range(s)]) for i in range(n_families)]
    return parallel_map(partial(_cutoff_point, M, resolution), fams, workers)


# ---------------------------------------------------------------- Mayer-Vietoris

def random_open_mask(rng: np.random.Generator, shape=(32, 32), sigma: float = 2.0) -> np.ndarray:
    """Blobby top-cell mask from thresholded smoothed noise on the periodic grid."""
    noise = gaussian_filter(rng.normal(size=shape), sigma=sigma, mode="wrap")
    q = rng.uniform(0.3, 0.7)
    return noise > np.quantile(noise, q)


def random_closed_complex(rng: np.random.Generator, shape=(32, 32), extra_edges: int = 8,
                          extra_vertices: int = 4) -> CubicalComplex:
    """Closure of a random open mask plus stray edges and vertices (periodic 2D grid)."""
    periodic = (True, True)
    c = CubicalComplex.from_top_cells(random_open_mask(rng, shape), periodic, shape)
    cells = {t: a.copy() for t, a in c.cells.items()}
    for _ in range(extra_edges):
        t = (1, 0) if rng.integers(2) == 0 else (0, 1)
        i, j = (int(v) for v in rng.integers(0, shape[0], size=2))
        cells[t][i, j] = True
        cells[(0, 0)][i, j] = True
        if t == (1, 0):
            cells[(0, 0)][(i + 1) % shape[0], j] = True
        else:
            cells[(0, 0)][i, (j + 1) % shape[1]] = True
    for _ in range(extra_vertices):
        i, j = (int(v) for v in rng.integers(0, shape[0], size=2))
        cells[(0, 0)][i, j] = True
    out = CubicalComplex(shape, periodic, cells)
    assert out.is_closed()
    return out


def _subset_tables(Cs):
    inter, union = {}, {}
    idx = range(len(Cs))
    for size in range(1, len(Cs) + 1):
        for L in combinations(idx, size):
            A, B = Cs[L[0]], Cs[L[0]]
            for j in L[1:]:
                A = A & Cs[j]
                B = B | Cs[j]
            inter[frozenset(L)] = betti(A, check=False)
            union[frozenset(L)] = betti(B, check=False)
    return inter, union


def _mv_point(m, b_m, item):
    fam, kind, Cs = item
    inter, union = _subset_tables(Cs)
    s = len(Cs)
    full = frozenset(range(s))
    out = []
    for i in range(m + 1):
        b_u = union[full][i]
        out.append(BoundReport(Formula.MV_UNION, {"family": fam, "masks": kind, "s": s, "i": i},
                               mv_union_bound(i, inter, s), b_u))
        if kind == "open_closure":
            b_n = inter[full][i]
            out.append(BoundReport(Formula.MV_INTERSECTION,
                                   {"family": fam, "masks": kind, "s": s, "i": i},
                                   mv_intersection_bound(i, m, union, b_m, s), b_n))
    return out


def mv_campaign(n_families: int = 200, seed: int = 0, shape=(32, 32), max_sets: int = 4,
                workers: Optional[int] = 1) -> list[BoundReport]:
    """Both Mayer-Vietoris inequalities on random families of periodic cubical sets.

    Even families use general closed complexes (union inequality only); odd
    families use closures of open masks, checked against both inequalities.
    """
    rng = np.random.default_rng(seed)
    items = []
    for fam in range(n_families):
        s = int(rng.integers(1, max_sets + 1))
        if fam % 2 == 0:
            Cs = [random_closed_complex(rng, shape) for _ in range(s)]
            items.append((fam, "closed", Cs))
        else:
            Cs = [CubicalComplex.from_top_cells(random_open_mask(rng, shape), (True, True), shape)
                  for _ in range(s)]
            items.append((fam, "open_closure", Cs))
    res = parallel_map(partial(_mv_point, 2, 1), items, workers)
    return [r for group in res for r in group]


# ---------------------------------------------------------------- variety bound sweep

def circle_zero_count(p: Polynomial, tol: float = 1e-7) -> int:
    """Zeros of p on the unit circle via x = (1-t²)/(1+t²), y = 2t/(1+t²).

    The numerator (1+t²)^d p(x(t), y(t)) is a polynomial in t; t = ∞ is the
    point (-1, 0).
    """
    d = max(p.degree, 0)
    num = np.zeros(2 * d + 1)
    one_m = np.array([1.0, 0.0, -1.0])
    one_p = np.array([1.0, 0.0, 1.0])
    for (a, b), c in p.terms.items():
        term = np.array([c])
        term = npoly.polymul(term, npoly.polypow(one_m, a))
        term = npoly.polymul(term, npoly.polypow(np.array([0.0, 2.0]), b))
        term = npoly.polymul(term, npoly.polypow(one_p, d - a - b))
        num[: term.size] += term
    count = 0
    if abs(float(p(np.array([[-1.0, 0.0]]))[0])) <= tol * max(1.0, p.coefficient_norm()):
        count += 1
    nz = np.nonzero(np.abs(num) > 1e-14 * max(1.0, np.max(np.abs(num))))[0]
    if nz.size == 0:
        raise ValueError("p vanishes on the whole circle")
    roots = npoly.polyroots(num[: nz[-1] + 1]) if nz[-1] > 0 else np.array([])
    real = np.sort(roots[np.abs(roots.imag) <= tol * (1 + np.abs(roots))].real)
    if real.size:
        count += 1 + int(np.sum(np.diff(real) > tol * (1 + np.abs(real[1:]))))
    return count


def _variety_point(M, resolution, item):
    i, d, p = item
    f = PolynomialMap([p])
    base = {"sample": i, "n": M.n, "m": M.m, "d0": M.d0, "d": d}
    try:
        rep = kappa(f, M, resolution)
        measured = measured_zero_betti(f, M, resolution, rep.delta, max_resolution=8 * resolution)
    except (SingularMap, UnresolvedTopology):
        measured = None
    return BoundReport(Formula.TM_VARIETY, base, tm_variety(M.n, M.m, M.d0, d), measured)


def draw_polynomials(rng: np.random.Generator, count: int, nvars: int, max_degree: int):
    """(index, degree, polynomial) with degree uniform in 1..max_degree."""
    out = []
    for i in range(count):
        d = int(rng.integers(1, max_degree + 1))
        out.append((i, d, random_polynomial(rng, nvars, d)))
    return out


def variety_sweep(n_maps: int = 100, seed: int = 0, max_degree: int = 3, resolution: int = 256,
                    M: Optional[ManifoldModel] = None, workers: Optional[int] = 1) -> list[BoundReport]:
    """Measured b(Z(p) ∩ M) against the variety bound for random polynomials."""
    M = M or implicit_circle()
    rng = np.random.default_rng(seed)
    items = draw_polynomials(rng, n_maps, M.n, max_degree)
    return parallel_map(partial(_variety_point, M, resolution), items, workers)


# ---------------------------------------------------------------- cell decomposition

def random_closed_dnf(rng: np.random.Generator, functions, max_conj: int = 3) -> SignSystem:
    s = len(functions)
    rels = ("eq", "le", "ge", "any")
    n_conj = int(rng.integers(1, max_conj + 1))
    dnf = [tuple(rels[int(k)] for k in rng.choice(4, size=s, p=(0.2, 0.3, 0.3, 0.2)))
           for _ in range(n_conj)]
    return SignSystem(tuple(functions), tuple(dnf))


def well_conditioned_family(rng: np.random.Generator, M: ManifoldModel, s: int, resolution: int,
                            max_kappa: float, max_tries: int = 200, **trig_kw):
    """A random trig family with κ(F) <= max_kappa, redrawing otherwise. Returns (F, δ̂)."""
    for _ in range(max_tries):
        F = [random_trig(rng, M.m, **trig_kw) for _ in range(s)]
        fd = family_delta(F, M, resolution)
        if fd.singular:
            continue
        c1 = max(c1_norm(f, M, resolution) for f in F)
        if c1 <= max_kappa * fd[0]:
            return F, float(fd[0])
    raise RuntimeError(f"no family with kappa <= {max_kappa} in {max_tries} draws")


def _cell_point(M, resolution, cap, item):
    i, S, dhat = item
    try:
        _, rep = cell_bound(S, M, resolution, delta_hat=dhat, max_resolution=cap)
    except UnresolvedTopology:
        return BoundReport(Formula.SEMIALG_C, {"system": i, "kind": "cell_sum"}, None, None)
    rep.inputs = {"system": i, **rep.inputs}
    return rep


def cell_campaign(M: ManifoldModel, n_systems: int = 50, seed: int = 0, max_s: int = 3,
                  resolution: int = 64, cap: Optional[int] = 1024, max_kappa: float = 20.0,
                  delta_factor: float = 0.5, workers: Optional[int] = 1) -> list[BoundReport]:
    """b(S) against the sum of cell Betti numbers for random closed DNFs.

    delta = delta_factor * δ̂(F). Families are redrawn until κ(F) <= max_kappa
    (checked at a quarter of the resolution) so that the level bands resolve
    below the doubling cap.
    """
    rng = np.random.default_rng(seed)
    items = []
    for i in range(n_systems):
        s = int(rng.integers(1, max_s + 1))
        F, dhat = well_conditioned_family(rng, M, s, max(resolution // 4, 16), max_kappa,
                                          n_terms=2, max_freq=1)
        S = random_closed_dnf(rng, F).with_delta(delta_factor * dhat)
        items.append((i, S, dhat))
    return parallel_map(partial(_cell_point, M, resolution, cap or 2 * resolution), items, workers)


# ---------------------------------------------------------------- Morse counts

@dataclass
class MorseRecord:
    variety: str
    index: int
    count: int
    bound: int
    possible_undercount: bool

    @property
    def holds(self) -> bool:
        return self.count <= self.bound

    def row(self) -> dict:
        return {"variety": self.variety, "index": self.index, "count": self.count,
                "bound": self.bound, "holds": self.holds}


MORSE_FIELDS = ("variety", "index", "count", "bound", "holds")


def _morse_point(M, resolution, item):
    i, r = item
    res = critical_count(M.polys, r, M, resolution, check=False)
    return MorseRecord(M.name, i, res.count, res.bound, res.possible_undercount)


def morse_campaign(n_objectives: int = 50, seed: int = 0, varieties: Optional[Sequence] = None,
                   resolution: int = 32, workers: Optional[int] = 1) -> list[MorseRecord]:
    """Critical-point counts of random linear objectives against the Bezout bound."""
    varieties = varieties or (implicit_circle(), torus_quartic(axis=1))
    rng = np.random.default_rng(seed)
    out = []
    for M in varieties:
        items = []
        for i in range(n_objectives):
            u = rng.normal(size=M.n)
            items.append((i, Polynomial.linear(u / np.linalg.norm(u))))
        out.extend(parallel_map(partial(_morse_point, M, resolution), items, workers))
    return out


# ---------------------------------------------------------------- constant estimation

def c1_suite(maps: Sequence[MapSpec], M: ManifoldModel, resolution: int):
    """c1_hat = max b / κ^m over the suite, and the smooth-bound reports it implies."""
    recs = []
    for f in maps:
        rep = kappa(f, M, resolution)
        b = zero_set_betti(f, M, resolution, rep.delta).total
        recs.append((b, rep.kappa, M.m))
    c1 = estimate_constant(recs)
    reports = [BoundReport(Formula.SMOOTH_A, {"c1_hat": c1, "kappa": k, "m": m}, c1 * k ** m, b)
               for b, k, m in recs]
    return c1, reports


def c0_suite(maps: Sequence[MapSpec], M: ManifoldModel, degrees: Sequence[int] = (2, 4, 8),
             resolution: Optional[int] = None) -> float:
    """max over maps and degrees of sup_error · d / ‖f‖_C1."""
    c0 = 0.0
    for f in maps:
        for d in degrees:
            c0 = max(c0, fit_polynomial(f, M, d, resolution=resolution).c0_hat)
    return c0


def reports_holds(reports: Sequence[BoundReport]) -> bool:
    return all(r.verdict.value == "Holds" for r in reports)


def bezout_for(M: ManifoldModel, r: Polynomial) -> int:
    return bezout_bound(M.n, M.m, M.d0, max(r.degree, 1))
