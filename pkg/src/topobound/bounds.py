"""Closed-form Betti bounds, Mayer-Vietoris inequalities and verdicts."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations
from math import comb, isfinite
from typing import Mapping, Optional, Sequence

from .errors import EmptySuite, MissingEntry, SingularMap


class Formula(str, Enum):
    TM_CLASSICAL = "TMClassical"
    TM_VARIETY = "TMVariety"
    SMOOTH_A = "SmoothA"
    SEMIALG_C = "SemialgC"
    MV_UNION = "MVUnion"
    MV_INTERSECTION = "MVIntersection"


class Verdict(str, Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    NOT_COMPARABLE = "NotComparable"


def verdict(measured, value) -> Verdict:
    if measured is None or value is None:
        return Verdict.NOT_COMPARABLE
    return Verdict.HOLDS if measured <= value else Verdict.VIOLATED


@dataclass
class BoundReport:
    formula: Formula
    inputs: dict
    value: float
    measured: Optional[int] = None
    verdict: Verdict = field(init=False)

    def __post_init__(self):
        self.formula = Formula(self.formula)
        self.verdict = verdict(self.measured, self.value)

    def with_measured(self, measured) -> "BoundReport":
        return BoundReport(self.formula, dict(self.inputs), self.value, measured)

    def row(self) -> dict:
        flat = ";".join(f"{k}={_fmt(v)}" for k, v in self.inputs.items())
        return {"formula": self.formula.value, "inputs": flat, "value": _fmt(self.value),
                "measured": "" if self.measured is None else str(self.measured),
                "verdict": self.verdict.value}

    def to_json(self) -> dict:
        return {"formula": self.formula.value, "inputs": dict(self.inputs), "value": self.value,
                "measured": self.measured, "verdict": self.verdict.value}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


CSV_FIELDS = ["formula", "inputs", "value", "measured", "verdict"]


def reports_to_csv(reports: Sequence[BoundReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


# ---------------------------------------------------------------- closed forms

def _check_pos(**kw):
    for k, v in kw.items():
        if int(v) != v or v < 1:
            raise ValueError(f"{k} must be a positive integer, got {v}")


def tm_classical(n: int, d: int) -> int:
    """d (2d - 1)^(n - 1); Python integers never overflow."""
    _check_pos(n=n, d=d)
    return int(d) * (2 * int(d) - 1) ** (int(n) - 1)


def tm_variety(n: int, m: int, d0: int, d: int) -> int:
    """d0^(n-m) ((n-m)(d0-1) + 2d - 1)^m."""
    _check_pos(n=n, m=m, d=d)
    if m > n:
        raise ValueError("m must not exceed n")
    c = int(n) - int(m)
    if c > 0:
        _check_pos(d0=d0)
    return int(d0) ** c * (c * (int(d0) - 1) + 2 * int(d) - 1) ** int(m)


def smooth_bound(c1_hat: float, kappa: float, m: int) -> float:
    if not isfinite(kappa):
        raise SingularMap("condition number is infinite")
    return float(c1_hat) * float(kappa) ** m


def semialg_bound(c4_hat: float, s: int, kappa: float, m: int) -> float:
    if not isfinite(kappa):
        raise SingularMap("condition number is infinite")
    return float(c4_hat) * float(s) ** m * float(kappa) ** m


# ---------------------------------------------------------------- Mayer-Vietoris

def _key(L) -> frozenset:
    return frozenset(int(j) for j in L)


def _table(table: Mapping) -> dict:
    return {_key(k): v for k, v in table.items()}


def _b(vec, i: int) -> int:
    if i < 0:
        return 0
    try:
        return int(vec[i]) if i < len(vec) else 0
    except IndexError:
        return 0


def _lookup(t, L):
    k = _key(L)
    if k not in t:
        raise MissingEntry(f"no Betti entry for subset {sorted(k)}")
    return t[k]


def _universe(t, s):
    if s is not None:
        return list(range(s))
    return sorted(set().union(*t.keys()))


def mv_union_bound(i: int, table: Mapping, s: int | None = None) -> int:
    """b_i(C_1 ∪ ... ∪ C_s) <= Σ_{l=1}^{i+1} Σ_{|L|=l} b_{i-l+1}(∩_{j∈L} C_j).

    table maps subsets L (any iterable of indices) to Betti vectors of the
    intersection over L.
    """
    t = _table(table)
    idx = _universe(t, s)
    total = 0
    for ell in range(1, min(i + 1, len(idx)) + 1):
        for L in combinations(idx, ell):
            total += _b(_lookup(t, L), i - ell + 1)
    return total


def mv_intersection_bound(i: int, m: int, table: Mapping, b_m_of_M: int, s: int | None = None) -> int:
    """b_i(C_1 ∩ ... ∩ C_s) <= Σ_{l=1}^{m-i} Σ_{|L|=l} b_{i+l-1}(∪_{j∈L} C_j) + C(s, m-i) b_m(M)."""
    t = _table(table)
    idx = _universe(t, s)
    total = 0
    for ell in range(1, min(m - i, len(idx)) + 1):
        for L in combinations(idx, ell):
            total += _b(_lookup(t, L), i + ell - 1)
    if m - i >= 0:
        total += comb(len(idx), m - i) * int(b_m_of_M)
    return total


def estimate_constant(records: Sequence[tuple]) -> float:
    """max b / κ^m over (measured_b, kappa, m) records."""
    records = list(records)
    if not records:
        raise EmptySuite("no records")
    out = 0.0
    for b, kap, m in records:
        if not isfinite(kap) or kap <= 0:
            raise ValueError(f"bad condition number {kap}")
        out = max(out, float(b) / float(kap) ** m)
    return out
