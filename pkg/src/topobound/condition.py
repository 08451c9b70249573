"""C1-norm, distance to the discriminant and condition number on a sampled manifold.

‖f‖_C1 = max_x ‖f(x)‖ + σ_1(D_x f)
δ(f)   = min_x ‖f(x)‖ + σ_k(D_x f)     (min ‖f(x)‖ when k > m)
κ(f)   = ‖f‖_C1 / δ(f)

The maximum is a plain grid maximum. The minimum is a grid minimum followed by
a local search around the grid winner.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.spatial import cKDTree

from .errors import SingularFamily, SingularMap
from .geometry import (ManifoldModel, SamplePoint, SampleSet, chart_samples, chart_spacing,
                       implicit_local_points, implicit_samples, sample)
from .smoothmap import JetBatch, MapSpec, StackedMap, singular_values

SINGULAR_RTOL = 1e-12
REFINE_XTOL = 1e-8
CONVERGED_RTOL = 1e-3


@dataclass
class ConditionReport:
    c1_norm: float
    delta: float
    kappa: float
    argmax_sample: SamplePoint
    argmin_sample: SamplePoint
    resolution: int
    converged: bool
    refine_history: list = field(default_factory=list)
    # reported, not serialized
    error_bar: float = 0.0
    witness: Optional[tuple] = None

    def to_json(self) -> dict:
        return {
            "c1_norm": self.c1_norm,
            "delta": self.delta,
            "kappa": self.kappa,
            "argmax_sample": self.argmax_sample.to_json(),
            "argmin_sample": self.argmin_sample.to_json(),
            "resolution": self.resolution,
            "converged": self.converged,
            "refine_history": [list(r) for r in self.refine_history],
        }


class FamilyDelta(tuple):
    """(delta, witness) pair with extra attributes `singular` and `sample`.

    witness is a tuple of 0-based function indices.
    """

    def __new__(cls, delta, witness, singular=False, sample=None, by_subset=None):
        obj = super().__new__(cls, (delta, witness))
        obj.singular = singular
        obj.sample = sample
        obj.by_subset = by_subset or {}
        return obj

    @property
    def delta(self):
        return self[0]

    @property
    def witness(self):
        return self[1]


# ---------------------------------------------------------------- objectives

def _objective(J: JetBatch) -> np.ndarray:
    """‖f‖ + σ_k, with the ‖f‖ fallback when k > m."""
    vn = J.value_norms()
    if J.k > J.m:
        return vn
    return vn + singular_values(J.tdiff)[:, -1]


def _local_search(model: ManifoldModel, s: SamplePoint, spacing: np.ndarray,
                  obj: Callable[[SampleSet], np.ndarray]):
    """Minimize obj near sample s. Returns (value, SamplePoint) or None."""
    m = model.m
    if model.is_chart:
        lo = np.asarray(model.lower, float)
        hi = np.asarray(model.upper, float)
        per = np.asarray(model.periodic)

        def build(U):
            U = np.atleast_2d(U)
            U = np.where(per, U, np.clip(U, lo, hi))
            return chart_samples(model, U)

        u0 = np.asarray(s.u, float)
    else:
        F0 = s.frame
        x0 = s.x

        def build(T):
            X, ok = implicit_local_points(model, x0, F0, np.atleast_2d(T))
            X = np.where(ok[:, None], X, x0[None, :])
            return implicit_samples(model, X, check=False)

        u0 = np.zeros(m)

    def f_at(P):
        Sx = build(P)
        return obj(Sx), Sx

    if m == 1:
        h = float(spacing[0])
        res = minimize_scalar(lambda t: float(f_at([[t]])[0][0]), bounds=(u0[0] - h, u0[0] + h),
                              method="bounded", options={"xatol": REFINE_XTOL})
        val, Sx = f_at([[res.x]])
        return float(val[0]), Sx[0]

    # m == 2: shrinking pattern search on an 11 x 11 stencil, vectorized
    c = u0.copy()
    w = np.asarray(spacing, float).copy()
    grid = np.linspace(-1.0, 1.0, 11)
    oo = np.stack(np.meshgrid(grid, grid, indexing="ij"), axis=-1).reshape(-1, 2)
    best, bestS = None, None
    while np.max(w) > REFINE_XTOL:
        vals, Sx = f_at(c[None, :] + oo * w[None, :])
        i = int(np.argmin(vals))
        if best is None or vals[i] <= best:
            best, bestS = float(vals[i]), Sx[i]
            c = c + oo[i] * w
        w = w * 0.4
    return best, bestS


def _spacing(model: ManifoldModel, S: SampleSet) -> np.ndarray:
    if model.is_chart:
        return chart_spacing(model, S.resolution)
    return np.full(model.m, S.pitch)


def _lipschitz(S: SampleSet, vals: np.ndarray) -> float:
    """Max |Δ vals| / ambient distance between neighbouring samples."""
    if len(S) < 2:
        return 0.0
    tree = cKDTree(S.x)
    k = min(len(S), 2 * S.model.m + 1)
    d, idx = tree.query(S.x, k=k)
    d = d[:, 1:]
    idx = idx[:, 1:]
    diff = np.abs(vals[idx] - vals[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(d > 0, diff / d, 0.0)
    return float(np.max(r))


def _min_refined(model, S, grid_vals, obj):
    i = int(np.argmin(grid_vals))   # first index wins ties
    best = float(grid_vals[i])
    bs = S[i]
    if best > 0.0:
        out = _local_search(model, bs, _spacing(model, S), obj)
        if out is not None and out[0] < best:
            best, bs = out
    return best, bs


# ---------------------------------------------------------------- single maps

def _samples(M, resolution, samples):
    return samples if samples is not None else sample(M, resolution)


def c1_norm(f: MapSpec, M: ManifoldModel, resolution: int, samples: SampleSet | None = None) -> float:
    S = _samples(M, resolution, samples)
    return float(np.max(f.evaluate(S).jet_norms()))


def delta(f: MapSpec, M: ManifoldModel, resolution: int, samples: SampleSet | None = None) -> float:
    return _delta_at(f, M, _samples(M, resolution, samples))[0]


def _delta_at(f, M, S):
    J = f.evaluate(S)
    dd = _objective(J)
    val, s = _min_refined(M, S, dd, lambda Sx: _objective(f.evaluate(Sx)))
    return val, s, J, dd


def _single_level(f, M, S):
    dval, smin, J, dd = _delta_at(f, M, S)
    jn = J.jet_norms()
    imax = int(np.argmax(jn))
    return float(jn[imax]), dval, S[imax], smin, dd


def kappa(f: MapSpec, M: ManifoldModel, resolution: int, raise_singular: bool = True,
          samples: SampleSet | None = None) -> ConditionReport:
    """Condition number with a convergence check against resolution // 2."""
    levels = []
    for N in _levels(resolution):
        S = samples if (samples is not None and N == resolution) else sample(M, N)
        c1, d, smax, smin, dd = _single_level(f, M, S)
        bar = 0.5 * _lipschitz(S, dd) * S.pitch
        levels.append((N, c1, d, smax, smin, bar))
    return _report(levels, resolution, raise_singular, SingularMap)


def _levels(resolution):
    half = resolution // 2
    return [half, resolution] if half >= 2 else [resolution]


def _report(levels, resolution, raise_singular, err_cls, witness=None):
    N, c1, d, smax, smin, bar = levels[-1]
    if raise_singular and (c1 == 0.0 or d <= SINGULAR_RTOL * c1):
        raise err_cls(f"delta = {d:.3e} is below {SINGULAR_RTOL:g} * c1 = {c1:.3e}")
    kap = c1 / d if (d > 0 and d > SINGULAR_RTOL * c1) else float("inf")
    conv = False
    if len(levels) > 1:
        _, c1h, dh, *_ = levels[0]
        conv = abs(d - dh) <= CONVERGED_RTOL * abs(d) and abs(c1 - c1h) <= CONVERGED_RTOL * abs(c1)
    return ConditionReport(c1_norm=c1, delta=d, kappa=kap, argmax_sample=smax, argmin_sample=smin,
                           resolution=resolution, converged=bool(conv),
                           refine_history=[(lv[0], lv[2], lv[1]) for lv in levels],
                           error_bar=bar, witness=witness)


# ---------------------------------------------------------------- families

def _check_scalar(F):
    for f in F:
        if f.k != 1:
            raise ValueError("family members must be scalar maps")


def subsets(s: int, m: int | None, all_subsets: bool = False) -> list[tuple]:
    top = s if (all_subsets or m is None) else min(s, m + 1)
    out = [J for size in range(1, top + 1) for J in combinations(range(s), size)]
    return sorted(out)


def _family_at(F: Sequence[MapSpec], M: ManifoldModel, S: SampleSet, all_subsets: bool):
    _check_scalar(F)
    joint = StackedMap(F)
    J = joint.evaluate(S)
    best = None
    by = {}
    for sub in subsets(len(F), M.m, all_subsets):
        JJ = J.select(sub)
        grid = _objective(JJ)
        part = StackedMap([F[j] for j in sub])
        val, s = _min_refined(M, S, grid, lambda Sx, part=part: _objective(part.evaluate(Sx)))
        by[sub] = val
        # subsets are visited in lexicographic order, so strict < keeps the smallest on ties
        if best is None or val < best[0]:
            best = (val, sub, s)
    return best, by, J


def family_delta(F: Sequence[MapSpec], M: ManifoldModel, resolution: int, all_subsets: bool = False,
                 samples: SampleSet | None = None) -> FamilyDelta:
    """min over subsets J with 1 <= |J| <= m+1 of δ(f_J) and the lexicographically smallest witness.

    With all_subsets=True every nonempty J is enumerated (used to test the cutoff).
    """
    S = _samples(M, resolution, samples)
    (val, sub, s), by, J = _family_at(F, M, S, all_subsets)
    c1 = float(np.max(J.jet_norms()))
    singular = c1 == 0.0 or val <= SINGULAR_RTOL * c1
    return FamilyDelta(val, sub, singular=singular, sample=s, by_subset=by)


def family_kappa(F: Sequence[MapSpec], M: ManifoldModel, resolution: int, raise_singular: bool = True,
                 samples: SampleSet | None = None) -> ConditionReport:
    levels = []
    witness = None
    for N in _levels(resolution):
        S = samples if (samples is not None and N == resolution) else sample(M, N)
        (val, sub, smin), _, J = _family_at(F, M, S, False)
        jn = J.jet_norms()
        imax = int(np.argmax(jn))
        bar = 0.5 * _lipschitz(S, jn) * S.pitch
        levels.append((N, float(jn[imax]), val, S[imax], smin, bar))
        witness = sub
    return _report(levels, resolution, raise_singular, SingularFamily, witness=witness)
