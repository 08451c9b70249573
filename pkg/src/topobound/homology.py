"""Z/2 cubical homology on (periodic) grids.

A complex on a grid with N_a vertices per axis stores one boolean array per
cell type t in {0,1}^m, where t_a = 1 means the cell extends along axis a.
Along a periodic axis there are N_a cells of each type, along a flat axis
N_a - 1 extended cells.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import UnresolvedTopology
from .geometry import ManifoldModel, sample


@dataclass(frozen=True)
class BettiVector:
    b: tuple

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(int(v) for v in self.b))
        if any(v < 0 for v in self.b):
            raise ValueError("negative Betti number")

    @property
    def total(self) -> int:
        return sum(self.b)

    @property
    def euler(self) -> int:
        return sum((-1) ** i * v for i, v in enumerate(self.b))

    def __getitem__(self, i):
        return self.b[i] if 0 <= i < len(self.b) else 0

    def __iter__(self):
        return iter(self.b)

    def __len__(self):
        return len(self.b)

    def __eq__(self, other):
        if isinstance(other, BettiVector):
            return self.b == other.b
        try:
            return self.b == tuple(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(self.b)

    def __add__(self, other):
        n = max(len(self), len(other))
        return BettiVector(tuple(self[i] + other[i] for i in range(n)))

    def to_json(self):
        return {"b": list(self.b), "total": self.total}


def cell_types(m: int, dim: int) -> list[tuple]:
    return sorted(t for t in product((0, 1), repeat=m) if sum(t) == dim)


class CubicalComplex:
    def __init__(self, shape: Sequence[int], periodic: Sequence[bool], cells: dict):
        self.shape = tuple(int(n) for n in shape)
        self.periodic = tuple(bool(p) for p in periodic)
        self.m = len(self.shape)
        if any(n < 2 for n in self.shape):
            raise ValueError("need at least 2 vertices per axis")
        self.cells = {}
        for t in product((0, 1), repeat=self.m):
            arr = cells.get(t)
            want = self.type_shape(t)
            if arr is None:
                arr = np.zeros(want, dtype=bool)
            arr = np.asarray(arr, dtype=bool)
            if arr.shape != want:
                raise ValueError(f"cell array {t} has shape {arr.shape}, expected {want}")
            self.cells[t] = arr
        self._index = None

    def type_shape(self, t) -> tuple:
        return tuple(n if (ta == 0 or per) else n - 1
                     for n, ta, per in zip(self.shape, t, self.periodic))

    def top_shape(self) -> tuple:
        return self.type_shape((1,) * self.m)

    @classmethod
    def from_top_cells(cls, mask, periodic, shape=None) -> "CubicalComplex":
        """Closure of a set of top cells."""
        mask = np.asarray(mask, dtype=bool)
        m = mask.ndim
        periodic = tuple(bool(p) for p in periodic)
        if shape is None:
            shape = tuple(c if per else c + 1 for c, per in zip(mask.shape, periodic))
        cells = {(1,) * m: mask}
        for dim in range(m - 1, -1, -1):
            for t in cell_types(m, dim):
                acc = None
                for a in range(m):
                    if t[a]:
                        continue
                    up = list(t)
                    up[a] = 1
                    pushed = _push_down(cells[tuple(up)], a, periodic[a], shape[a])
                    acc = pushed if acc is None else (acc | pushed)
                cells[t] = acc
        return cls(shape, periodic, cells)

    @classmethod
    def full(cls, shape, periodic) -> "CubicalComplex":
        periodic = tuple(periodic)
        top = tuple(n if p else n - 1 for n, p in zip(shape, periodic))
        return cls.from_top_cells(np.ones(top, dtype=bool), periodic, shape)

    @property
    def top_mask(self) -> np.ndarray:
        return self.cells[(1,) * self.m]

    def _binop(self, other, op):
        if self.shape != other.shape or self.periodic != other.periodic:
            raise ValueError("complexes live on different grids")
        return CubicalComplex(self.shape, self.periodic,
                              {t: op(a, other.cells[t]) for t, a in self.cells.items()})

    def __and__(self, other):
        return self._binop(other, np.logical_and)

    def __or__(self, other):
        return self._binop(other, np.logical_or)

    def counts(self) -> list[int]:
        return [sum(int(self.cells[t].sum()) for t in cell_types(self.m, d)) for d in range(self.m + 1)]

    def is_empty(self) -> bool:
        return not any(a.any() for a in self.cells.values())

    def is_closed(self) -> bool:
        for t, arr in self.cells.items():
            for a in range(self.m):
                if not t[a]:
                    continue
                face = list(t)
                face[a] = 0
                need = _push_down(arr, a, self.periodic[a], self.shape[a])
                if np.any(need & ~self.cells[tuple(face)]):
                    return False
        return True

    # indexing of included cells
    def _indices(self):
        if self._index is None:
            idx = {}
            for d in range(self.m + 1):
                off = 0
                for t in cell_types(self.m, d):
                    arr = self.cells[t]
                    lab = np.full(arr.shape, -1, dtype=np.int64)
                    k = int(arr.sum())
                    lab[arr] = np.arange(off, off + k)
                    idx[t] = lab
                    off += k
            self._index = idx
        return self._index

    def boundary(self, d: int) -> sparse.csr_matrix:
        """∂_d over Z/2 as a 0/1 matrix (rows: (d-1)-cells, cols: d-cells)."""
        counts = self.counts()
        if d <= 0 or d > self.m:
            rows = counts[d - 1] if 0 <= d - 1 <= self.m else 0
            cols = counts[d] if 0 <= d <= self.m else 0
            return sparse.csr_matrix((rows, cols), dtype=np.int8)
        lab = self._indices()
        R, C = [], []
        for t in cell_types(self.m, d):
            arr = self.cells[t]
            pos = np.nonzero(arr)
            col = lab[t][pos]
            for a in range(self.m):
                if not t[a]:
                    continue
                face = list(t)
                face[a] = 0
                face = tuple(face)
                for shift in (0, 1):
                    fp = list(pos)
                    fp[a] = pos[a] + shift
                    if self.periodic[a]:
                        fp[a] = fp[a] % self.shape[a]
                    row = lab[face][tuple(fp)]
                    if np.any(row < 0):
                        raise ValueError("complex is not closed under faces")
                    R.append(row)
                    C.append(col)
        if R:
            R = np.concatenate(R)
            C = np.concatenate(C)
        else:
            R = C = np.zeros(0, dtype=np.int64)
        M = sparse.coo_matrix((np.ones(len(R), dtype=np.int8), (R, C)),
                              shape=(counts[d - 1], counts[d])).tocsr()
        M.data %= 2
        M.eliminate_zeros()
        return M

    def check_boundary(self):
        for d in range(2, self.m + 1):
            P = (self.boundary(d - 1).astype(np.int64) @ self.boundary(d).astype(np.int64)).tocsr()
            P.data %= 2
            if P.count_nonzero():
                raise AssertionError(f"boundary of boundary nonzero in degree {d}")


def _push_down(arr: np.ndarray, axis: int, periodic: bool, n_vertices: int) -> np.ndarray:
    """Faces along `axis` of the cells in arr: vertex position p gets cells p-1 and p."""
    if periodic:
        return arr | np.roll(arr, 1, axis=axis)
    shape = list(arr.shape)
    shape[axis] = n_vertices
    out = np.zeros(shape, dtype=bool)
    lo = [slice(None)] * arr.ndim
    hi = [slice(None)] * arr.ndim
    lo[axis] = slice(0, n_vertices - 1)
    hi[axis] = slice(1, n_vertices)
    out[tuple(lo)] |= arr
    out[tuple(hi)] |= arr
    return out


# ---------------------------------------------------------------- Betti numbers

def betti(c: CubicalComplex, check: bool = True) -> BettiVector:
    """Betti numbers over Z/2.

    rank ∂_1 comes from connected components of the 1-skeleton. For m = 2 the
    2-cycles are exactly the unions of face classes (faces glued along edges
    shared by two included faces) that have no free edge.
    """
    if check:
        c.check_boundary()
    counts = c.counts()
    V = counts[0]
    if V == 0:
        return BettiVector((0,) * (c.m + 1))
    if c.m > 2:
        return betti_elimination(c, check=False)
    D1 = c.boundary(1)
    if D1.shape[1]:
        coo = D1.tocoo()
        order = np.argsort(coo.col, kind="stable")
        rows = coo.row[order].reshape(-1, 2)
        G = sparse.coo_matrix((np.ones(rows.shape[0]), (rows[:, 0], rows[:, 1])), shape=(V, V))
        comps, _ = connected_components(G, directed=False)
    else:
        comps = V
    rank1 = V - comps
    E = counts[1]
    if c.m == 1:
        bv = BettiVector((comps, E - rank1))
    else:
        F = counts[2]
        z2 = _closed_face_classes(c.boundary(2)) if F else 0
        rank2 = F - z2
        bv = BettiVector((comps, E - rank1 - rank2, z2))
    chi = sum((-1) ** d * n for d, n in enumerate(counts))
    assert bv.euler == chi, "Euler characteristic mismatch"
    return bv


def _closed_face_classes(D2: sparse.csr_matrix) -> int:
    F = D2.shape[1]
    deg = np.asarray(D2.sum(axis=1)).ravel()
    coo = D2.tocoo()
    free_face = np.zeros(F, dtype=bool)
    free_face[coo.col[deg[coo.row] == 1]] = True
    shared = deg[coo.row] == 2
    r, f = coo.row[shared], coo.col[shared]
    order = np.lexsort((f, r))
    pairs = f[order].reshape(-1, 2)
    G = sparse.coo_matrix((np.ones(pairs.shape[0]), (pairs[:, 0], pairs[:, 1])), shape=(F, F))
    ncomp, lab = connected_components(G, directed=False)
    open_class = np.zeros(ncomp, dtype=bool)
    open_class[lab[free_face]] = True
    return int(ncomp - open_class.sum())


def z2_rank(M: sparse.spmatrix) -> int:
    """Rank over Z/2 by column reduction with Python-int bitsets."""
    M = sparse.csc_matrix(M)
    pivots: dict[int, int] = {}
    for j in range(M.shape[1]):
        v = 0
        for r in M.indices[M.indptr[j]:M.indptr[j + 1]][M.data[M.indptr[j]:M.indptr[j + 1]] % 2 == 1]:
            v ^= 1 << int(r)
        while v:
            h = v.bit_length() - 1
            if h in pivots:
                v ^= pivots[h]
            else:
                pivots[h] = v
                break
    return len(pivots)


def betti_elimination(c: CubicalComplex, check: bool = True) -> BettiVector:
    """Reference implementation: b_i = n_i - rank ∂_i - rank ∂_{i+1}."""
    if check:
        c.check_boundary()
    n = c.counts()
    ranks = [0] + [z2_rank(c.boundary(d)) for d in range(1, c.m + 1)] + [0]
    return BettiVector(tuple(n[i] - ranks[i] - ranks[i + 1] for i in range(c.m + 1)))


# ---------------------------------------------------------------- grid realizations

def _corners(a: np.ndarray, periodic: Sequence[bool]):
    """The 2^m corner-vertex arrays of every top cell."""
    m = a.ndim
    for offs in product((0, 1), repeat=m):
        b = a
        for ax, (o, per) in enumerate(zip(offs, periodic)):
            if per:
                if o:
                    b = np.roll(b, -1, axis=ax)
            else:
                sl = [slice(None)] * m
                sl[ax] = slice(o, a.shape[ax] - 1 + o)
                b = b[tuple(sl)]
        yield b


def corner_all(pred: np.ndarray, periodic: Sequence[bool]) -> np.ndarray:
    """Top-cell mask: cells all of whose corner vertices satisfy pred."""
    out = None
    for a in _corners(pred, periodic):
        out = a.copy() if out is None else (out & a)
    return out


def corner_range(values: np.ndarray, periodic: Sequence[bool]):
    """(min, max) of the corner values of every top cell."""
    lo = hi = None
    for a in _corners(values, periodic):
        lo = a.copy() if lo is None else np.minimum(lo, a)
        hi = a.copy() if hi is None else np.maximum(hi, a)
    return lo, hi


def band_cells(values: np.ndarray, level: float, band: float, periodic) -> np.ndarray:
    """Top cells meeting the band |f - level| <= band (interval test on corner values)."""
    lo, hi = corner_range(values, periodic)
    return (lo <= level + band) & (hi >= level - band)


def mask_to_text(mask: np.ndarray) -> str:
    mask = np.atleast_2d(np.asarray(mask, bool))
    return "\n".join("".join("#" if v else "." for v in row) for row in mask) + "\n"


def grid_values(f, M: ManifoldModel, resolution: int) -> np.ndarray:
    """Vertex values of f on the chart grid, shape (k, *grid)."""
    if not M.is_chart:
        raise ValueError("homology needs a chart model")
    S = sample(M, resolution)
    v = f.evaluate(S).values
    return v.T.reshape((v.shape[1],) + S.grid_shape)


def sublevel_mask(norms: np.ndarray, eps: float, periodic) -> np.ndarray:
    return corner_all(norms <= eps, periodic)


def complex_from_mask(mask, M: ManifoldModel, resolution: int) -> CubicalComplex:
    return CubicalComplex.from_top_cells(mask, M.periodic, shape=(resolution,) * M.m)


def _stable(compute, resolution: int, max_resolution: Optional[int], what: str):
    """Double the resolution until two successive Betti vectors agree."""
    cap = max(max_resolution or 0, 2 * resolution)
    r = resolution
    prev = compute(r)
    coarse = None
    while 2 * r <= cap:
        nxt = compute(2 * r)
        if nxt == prev:
            return prev
        coarse, prev, r = prev, nxt, 2 * r
    raise UnresolvedTopology(f"{what}: Betti numbers {coarse} -> {prev} up to resolution {r}",
                             coarse=coarse, fine=prev)


def zero_set_betti(f, M: ManifoldModel, resolution: int, delta_hat: float, check: bool = True,
                   max_resolution: Optional[int] = None) -> BettiVector:
    """Betti numbers of {‖f‖ <= 0.45 δ̂} realized on the chart grid.

    With check=True the result at N must agree with 2N (auto-doubling up to
    max_resolution if given), otherwise UnresolvedTopology.
    """
    if not delta_hat > 0:
        raise ValueError("delta_hat must be positive")
    eps = 0.45 * delta_hat

    def at(N):
        V = grid_values(f, M, N)
        norms = np.sqrt(np.sum(V * V, axis=0))
        return betti(complex_from_mask(sublevel_mask(norms, eps, M.periodic), M, N))

    if not check:
        return at(resolution)
    return _stable(at, resolution, max_resolution, "zero set")


# Regions: DNFs of level atoms over a family of scalar functions.

REL_OPS = {
    "le": lambda v, c, w: v <= c,
    "ge": lambda v, c, w: v >= c,
    "lt": lambda v, c, w: v < c,
    "gt": lambda v, c, w: v > c,
    "eq": lambda v, c, w: np.abs(v - c) <= w,
}


@dataclass(frozen=True)
class LevelAtom:
    """f_j `rel` level; 'eq' is realized as the band |f_j - level| <= band."""

    j: int
    rel: str
    level: float = 0.0
    band: Optional[float] = None

    def __post_init__(self):
        if self.rel not in REL_OPS:
            raise ValueError(f"unknown relation {self.rel!r}")


@dataclass(frozen=True)
class Region:
    """Union over conjunctions of intersections of level atoms.

    An empty conjunction is the whole manifold; an empty list of
    conjunctions is the empty set.
    """

    functions: tuple
    conjunctions: tuple

    def needs_band(self) -> bool:
        return any(a.rel == "eq" and a.band is None for c in self.conjunctions for a in c)

    def vertex_predicates(self, V: np.ndarray, default_band: Optional[float]) -> list[np.ndarray]:
        """One boolean vertex array per conjunction."""
        out = []
        for conj in self.conjunctions:
            p = np.ones(V.shape[1:], dtype=bool)
            for a in conj:
                w = a.band if a.band is not None else default_band
                if a.rel == "eq" and w is None:
                    raise ValueError("equality atom without band")
                p &= REL_OPS[a.rel](V[a.j], a.level, w)
            out.append(p)
        return out

    def top_mask(self, V: np.ndarray, periodic, default_band=None) -> np.ndarray:
        """Cells in the region.

        Inequalities keep cells whose corners all satisfy them. An equality
        band keeps every cell it meets, so thin bands survive coarse grids.
        Cells whose corners satisfy the DNF through different conjunctions
        are kept too, which glues e.g. {f >= 0} and {f <= 0} along Z(f).
        """
        pred = np.zeros(V.shape[1:], dtype=bool)
        for p in self.vertex_predicates(V, default_band):
            pred |= p
        out = corner_all(pred, periodic)
        for conj in self.conjunctions:
            if not any(a.rel == "eq" for a in conj):
                continue
            cm = None
            for a in conj:
                if a.rel == "eq":
                    w = a.band if a.band is not None else default_band
                    am = band_cells(V[a.j], a.level, w, periodic)
                else:
                    am = corner_all(REL_OPS[a.rel](V[a.j], a.level, None), periodic)
                cm = am if cm is None else (cm & am)
            out |= cm
        return out


def family_grid_values(functions, M: ManifoldModel, resolution: int) -> np.ndarray:
    """(s, *grid) values of scalar functions."""
    S = sample(M, resolution)
    vals = [f.evaluate(S).values[:, 0] for f in functions]
    return np.stack(vals).reshape((len(vals),) + S.grid_shape)


def region_mask(region: Region, M: ManifoldModel, resolution: int, default_band=None,
                values: Optional[np.ndarray] = None) -> np.ndarray:
    V = values if values is not None else family_grid_values(region.functions, M, resolution)
    return region.top_mask(V, M.periodic, default_band)


def region_betti(S, M: ManifoldModel, resolution: int, delta_hat: Optional[float] = None,
                 check: bool = True, max_resolution: Optional[int] = None) -> BettiVector:
    """Betti numbers of a closed region or sign system realized on the chart grid.

    S is a Region or anything with `to_region()` (a SignSystem). Equality atoms
    without an explicit band use |f - c| <= 0.45 δ̂(F); δ̂ is computed when
    needed and not supplied.
    """
    region = S if isinstance(S, Region) else S.to_region()
    band = None
    if region.needs_band():
        if delta_hat is None:
            from .condition import family_delta
            delta_hat = family_delta(list(region.functions), M, resolution)[0]
        band = 0.45 * delta_hat

    def at(N):
        mask = region_mask(region, M, N, band)
        return betti(complex_from_mask(mask, M, N))

    if not check:
        return at(resolution)
    return _stable(at, resolution, max_resolution, "region")
