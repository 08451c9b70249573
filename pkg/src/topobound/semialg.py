"""Sign conditions on a family of scalar functions.

A SignSystem is a DNF: each conjunction assigns one relation from
{lt, gt, eq, le, ge, any} to every function, comparing it with 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import sqrt
from typing import Iterable, Optional, Sequence

import numpy as np

from .bounds import BoundReport, Formula
from .errors import DeltaTooLarge, SingularFamily
from .geometry import ManifoldModel
from .homology import (BettiVector, LevelAtom, Region, betti, complex_from_mask,
                       family_grid_values)
from .errors import UnresolvedTopology

RELATIONS = ("lt", "gt", "eq", "le", "ge", "any")
ALLOWED = {
    "lt": frozenset("-"),
    "gt": frozenset("+"),
    "eq": frozenset("0"),
    "le": frozenset("-0"),
    "ge": frozenset("0+"),
    "any": frozenset("-0+"),
}
_BY_SET = {v: k for k, v in ALLOWED.items()}
_CLOSE = {"lt": "le", "gt": "ge"}

MAX_FUNCTIONS = 6
EQ_BAND = 0.45        # times δ̂(F), for sets described by a SignSystem
CELL_BAND = 0.225     # times δ, keeps the five levels of a cell pairwise disjoint


def merge_relations(rels: Iterable[str]) -> Optional[str]:
    """Intersect relations on one function; None if contradictory."""
    acc = ALLOWED["any"]
    for r in rels:
        acc = acc & ALLOWED[r]
    return _BY_SET.get(acc) if acc else None


def conjunction(s: int, atoms: Iterable[tuple]) -> Optional[tuple]:
    """Relation vector from (j, rel) atoms, merging atoms on the same function."""
    per = [[] for _ in range(s)]
    for j, rel in atoms:
        if rel not in ALLOWED:
            raise ValueError(f"unknown relation {rel!r}")
        per[j].append(rel)
    out = []
    for rels in per:
        r = merge_relations(rels)
        if r is None:
            return None
        out.append(r)
    return tuple(out)


@dataclass(frozen=True)
class SignSystem:
    functions: tuple
    dnf: tuple
    delta: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))
        dnf = tuple(tuple(c) for c in self.dnf)
        s = len(self.functions)
        if s < 1:
            raise ValueError("need at least one function")
        for c in dnf:
            if len(c) != s:
                raise ValueError(f"conjunction {c} does not have length {s}")
            for r in c:
                if r not in ALLOWED:
                    raise ValueError(f"unknown relation {r!r}")
        object.__setattr__(self, "dnf", dnf)

    @classmethod
    def from_atoms(cls, functions, conjunctions, delta=None) -> "SignSystem":
        """Each conjunction is a list of (j, rel); contradictory ones are dropped."""
        s = len(functions)
        dnf = [c for c in (conjunction(s, atoms) for atoms in conjunctions) if c is not None]
        return cls(tuple(functions), tuple(dnf), delta)

    @property
    def s(self) -> int:
        return len(self.functions)

    @property
    def is_closed(self) -> bool:
        return all(r not in _CLOSE for c in self.dnf for r in c)

    def contains_signs(self, signs: Sequence[str]) -> bool:
        return any(all(sg in ALLOWED[r] for sg, r in zip(signs, c)) for c in self.dnf)

    def with_delta(self, delta: float) -> "SignSystem":
        return SignSystem(self.functions, self.dnf, delta)

    def to_region(self, band: Optional[float] = None, slack: float = 0.0) -> Region:
        """Grid region. eq atoms use `band` (None: the caller's default band).

        slack relaxes le/ge to f <= slack / f >= -slack.
        """
        conjs = []
        for c in self.dnf:
            atoms = []
            for j, r in enumerate(c):
                if r == "any":
                    continue
                if r == "eq":
                    atoms.append(LevelAtom(j, "eq", 0.0, band))
                elif r == "le":
                    atoms.append(LevelAtom(j, "le", slack))
                elif r == "ge":
                    atoms.append(LevelAtom(j, "ge", -slack))
                else:
                    atoms.append(LevelAtom(j, r, 0.0))
            conjs.append(tuple(atoms))
        return Region(self.functions, tuple(conjs))


def closure(S: SignSystem) -> SignSystem:
    return SignSystem(S.functions, tuple(tuple(_CLOSE.get(r, r) for r in c) for c in S.dnf), S.delta)


# ---------------------------------------------------------------- cells

CHOICES = ("zero", "half", "neg_half", "ge_delta", "le_neg_delta")
CHOICE_SIGN = {"zero": "0", "half": "+", "neg_half": "-", "ge_delta": "+", "le_neg_delta": "-"}


@dataclass(frozen=True)
class Cell:
    choices: tuple

    @property
    def signs(self) -> tuple:
        return tuple(CHOICE_SIGN[c] for c in self.choices)

    def atoms(self, delta: float, band: Optional[float] = None) -> tuple:
        w = CELL_BAND * delta if band is None else band
        out = []
        for j, c in enumerate(self.choices):
            if c == "zero":
                out.append(LevelAtom(j, "eq", 0.0, w))
            elif c == "half":
                out.append(LevelAtom(j, "eq", 0.5 * delta, w))
            elif c == "neg_half":
                out.append(LevelAtom(j, "eq", -0.5 * delta, w))
            elif c == "ge_delta":
                out.append(LevelAtom(j, "ge", delta))
            else:
                out.append(LevelAtom(j, "le", -delta))
        return tuple(out)

    def region(self, functions, delta: float, band: Optional[float] = None) -> Region:
        return Region(tuple(functions), (self.atoms(delta, band),))


def check_delta(delta: float, delta_hat: float, m: int):
    if not (0 < delta < sqrt(m + 1) * delta_hat):
        raise DeltaTooLarge(f"delta = {delta} must lie in (0, sqrt(m+1) * {delta_hat})")


def cells(S: SignSystem, delta_hat: Optional[float] = None, m: Optional[int] = None) -> list[Cell]:
    """All formal cells (one of five levels per function) whose signs satisfy S.

    Membership is decided from the sign pattern alone.
    """
    if not S.is_closed:
        raise ValueError("cells needs a closed sign system; apply closure() first")
    if S.s > MAX_FUNCTIONS:
        raise ValueError(f"at most {MAX_FUNCTIONS} functions")
    if S.delta is not None and delta_hat is not None and m is not None:
        check_delta(S.delta, delta_hat, m)
    return [Cell(ch) for ch in product(CHOICES, repeat=S.s) if S.contains_signs(
        tuple(CHOICE_SIGN[c] for c in ch))]


class _GridCache:
    """Function values per resolution, shared by many region evaluations."""

    def __init__(self, functions, M):
        self.functions = tuple(functions)
        self.M = M
        self._v = {}

    def values(self, N):
        if N not in self._v:
            self._v[N] = family_grid_values(self.functions, self.M, N)
        return self._v[N]

    def betti(self, region: Region, N: int, band=None) -> BettiVector:
        mask = region.top_mask(self.values(N), self.M.periodic, band)
        if not mask.any():
            return BettiVector((0,) * (self.M.m + 1))
        return betti(complex_from_mask(mask, self.M, N))

    def stable_betti(self, region: Region, N: int, cap: int, band=None) -> BettiVector:
        cap = max(cap, 2 * N)
        prev = self.betti(region, N, band)
        r = N
        while 2 * r <= cap:
            nxt = self.betti(region, 2 * r, band)
            if nxt == prev:
                return prev
            prev, r = nxt, 2 * r
        raise UnresolvedTopology(f"region Betti numbers unstable up to resolution {r}", fine=prev)


def cell_bound(S: SignSystem, M: ManifoldModel, resolution: int, delta_hat: Optional[float] = None,
               max_resolution: Optional[int] = None):
    """Σ over kept cells of b(cell), compared with b(S). Returns (sum, BoundReport)."""
    from .condition import family_delta

    if not M.is_chart:
        raise ValueError("cell_bound needs a chart model")
    if delta_hat is None:
        fd = family_delta(list(S.functions), M, resolution)
        if fd.singular:
            raise SingularFamily("family is singular")
        delta_hat = fd[0]
    if not delta_hat > 0:
        raise SingularFamily("family discriminant distance is zero")
    delta = S.delta if S.delta is not None else 0.5 * delta_hat
    check_delta(delta, delta_hat, M.m)
    Sd = S.with_delta(delta)
    kept = cells(Sd, delta_hat, M.m)
    cache = _GridCache(S.functions, M)
    cap = max_resolution or 2 * resolution
    measured = cache.stable_betti(Sd.to_region(), resolution, cap, EQ_BAND * delta_hat)
    total = 0
    for c in kept:
        total += cache.stable_betti(c.region(S.functions, delta), resolution, cap).total
    rep = BoundReport(Formula.SEMIALG_C,
                      {"kind": "cell_sum", "s": S.s, "m": M.m, "delta": delta, "delta_hat": delta_hat,
                       "cells_kept": len(kept), "resolution": resolution},
                      total, measured.total)
    return total, rep


# ---------------------------------------------------------------- Omega / X sets

@dataclass(frozen=True)
class OmegaSets:
    omega: dict     # j -> Region
    X: dict         # j -> Region
    X_H: Region


def _level_union(functions, j, levels, delta, band):
    conjs = [(LevelAtom(j, "eq", lv, band),) for lv in levels]
    return conjs


def omega_sets(F: Sequence, H: Iterable[int], delta: float, delta_hat: Optional[float] = None) -> OmegaSets:
    """Ω_j = {f_j <= -δ} ∪ {f_j >= δ} ∪ {f_j = ±δ/2} ∪ {f_j = 0}; X_j = {f_j ∈ {0, ±δ/2, ±δ}}.

    Indices are 0-based. Level sets are bands of half-width 0.225 δ.
    """
    F = tuple(F)
    H = sorted(set(int(j) for j in H))
    if delta_hat is not None and not delta < delta_hat:
        raise DeltaTooLarge(f"delta = {delta} must be below {delta_hat}")
    band = CELL_BAND * delta
    omega, X = {}, {}
    for j in range(len(F)):
        conj = [(LevelAtom(j, "le", -delta),), (LevelAtom(j, "ge", delta),)]
        conj += _level_union(F, j, (0.5 * delta, -0.5 * delta, 0.0), delta, band)
        omega[j] = Region(F, tuple(conj))
        X[j] = Region(F, tuple(_level_union(F, j, (delta, -delta, 0.5 * delta, -0.5 * delta, 0.0),
                                            delta, band)))
    xh = tuple(c for j in H for c in X[j].conjunctions)
    return OmegaSets(omega, X, Region(F, xh))
