"""Maps f: M -> R^k and their first jets in orthonormal tangent coordinates."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import CodimensionTooLarge, EvaluationError
from .geometry import (ManifoldModel, SamplePoint, SampleSet, chart_samples, newton_project)
from .poly import Polynomial


@dataclass(frozen=True)
class Jet1Sample:
    at: SamplePoint
    value: np.ndarray   # (k,)
    tdiff: np.ndarray   # (k, m)
    sigma: np.ndarray   # (min(k, m),), descending


@dataclass
class JetBatch:
    values: np.ndarray  # (N, k)
    tdiff: np.ndarray   # (N, k, m)

    @property
    def k(self) -> int:
        return self.values.shape[1]

    @property
    def m(self) -> int:
        return self.tdiff.shape[2]

    def sigma(self) -> np.ndarray:
        return singular_values(self.tdiff)

    def value_norms(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)

    def jet_norms(self) -> np.ndarray:
        return self.value_norms() + self.sigma()[:, 0]

    def discriminant_distances(self) -> np.ndarray:
        if self.k > self.m:
            raise CodimensionTooLarge(f"k = {self.k} > m = {self.m}")
        return self.value_norms() + self.sigma()[:, -1]

    def select(self, comps) -> "JetBatch":
        comps = list(comps)
        return JetBatch(self.values[:, comps], self.tdiff[:, comps, :])


def singular_values(A: np.ndarray) -> np.ndarray:
    """Descending singular values of a stack of k x m matrices."""
    N, k, m = A.shape
    if k == 1:
        return np.linalg.norm(A[:, 0, :], axis=1)[:, None]
    if m == 1:
        return np.linalg.norm(A[:, :, 0], axis=1)[:, None]
    return np.linalg.svd(A, compute_uv=False)


# ---------------------------------------------------------------- map types

class MapSpec:
    """Base class. Subclasses implement `_evaluate(S) -> (values, tdiff)`."""

    kind = "abstract"
    k = 1

    def evaluate(self, S: SampleSet) -> JetBatch:
        with np.errstate(over="raise", invalid="raise"):
            try:
                v, A = self._evaluate(S)
            except FloatingPointError as e:
                raise EvaluationError(str(e)) from e
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(A))):
            raise EvaluationError(f"non-finite value in {self.kind} map")
        return JetBatch(v, A)

    def values(self, S: SampleSet) -> np.ndarray:
        return self.evaluate(S).values

    def _evaluate(self, S):
        raise NotImplementedError

    def scaled(self, lam: float) -> "MapSpec":
        return ScaledMap(self, float(lam))

    def component(self, j: int) -> "MapSpec":
        if self.k == 1 and j == 0:
            return self
        return ComponentMap(self, j)

    def describe(self) -> dict:
        return {"kind": self.kind}


def _ambient_to_tdiff(J: np.ndarray, S: SampleSet) -> np.ndarray:
    return np.einsum("nkd,ndm->nkm", J, S.frames)


def _chart_to_tdiff(Jc: np.ndarray, S: SampleSet) -> np.ndarray:
    if S.u is None or S.chart_to_frame is None:
        raise EvaluationError("map is defined in chart coordinates but the model has no chart")
    return np.einsum("nkj,nji->nki", Jc, S.chart_to_frame)


class PolynomialMap(MapSpec):
    kind = "polynomial"

    def __init__(self, polys: Sequence[Polynomial]):
        self.polys = tuple(polys)
        if not self.polys:
            raise ValueError("empty polynomial map")
        self.k = len(self.polys)
        self.nvars = self.polys[0].nvars

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.polys)

    def _evaluate(self, S):
        if S.x.shape[1] != self.nvars:
            raise EvaluationError(f"polynomial in {self.nvars} variables on R^{S.x.shape[1]}")
        v = np.stack([p(S.x) for p in self.polys], axis=-1)
        J = np.stack([p.gradient(S.x) for p in self.polys], axis=1)
        return v, _ambient_to_tdiff(J, S)

    def scaled(self, lam):
        return PolynomialMap([lam * p for p in self.polys])

    def describe(self):
        return {"kind": self.kind, "k": self.k, "components": [p.to_list() for p in self.polys]}


# Builtin scalar families. Each returns (values (N,), gradient (N, dim)) and
# declares whether the gradient is in chart or ambient coordinates.

def _trig(S, const=0.0, terms=()):
    U = S.u
    if U is None:
        raise EvaluationError("trig builtin needs chart coordinates")
    v = np.full(U.shape[0], float(const))
    g = np.zeros_like(U)
    for amp, freq, phase in terms:
        w = np.asarray(freq, float)
        arg = U @ w + phase
        v += amp * np.cos(arg)
        g -= (amp * np.sin(arg))[:, None] * w[None, :]
    return v, g


def _sin(S, p=1, axis=0, amp=1.0, shift=0.0):
    if S.u is None:
        raise EvaluationError("sin builtin needs chart coordinates")
    t = S.u[:, axis]
    g = np.zeros_like(S.u)
    g[:, axis] = amp * p * np.cos(p * t)
    return amp * np.sin(p * t) + shift, g


def _cos(S, p=1, axis=0, amp=1.0, shift=0.0):
    if S.u is None:
        raise EvaluationError("cos builtin needs chart coordinates")
    t = S.u[:, axis]
    g = np.zeros_like(S.u)
    g[:, axis] = -amp * p * np.sin(p * t)
    return amp * np.cos(p * t) + shift, g


def _exp_cos(S, amp=1.0, freq=(1.0,), phase=0.0):
    if S.u is None:
        raise EvaluationError("exp_cos builtin needs chart coordinates")
    w = np.asarray(freq, float)
    arg = S.u @ w + phase
    v = np.exp(amp * np.cos(arg))
    g = (-amp * np.sin(arg) * v)[:, None] * w[None, :]
    return v, g


def _height(S, a=(0.0, 1.0), b=0.0):
    a = np.asarray(a, float)
    return S.x @ a + b, np.broadcast_to(a, S.x.shape).copy()


def _angle_sin(S, p=1, i=0, j=1, shift=0.0):
    """sin(p * atan2(x_j, x_i)); smooth away from the axis x_i = x_j = 0."""
    xi, xj = S.x[:, i], S.x[:, j]
    r2 = xi * xi + xj * xj
    if np.any(r2 == 0):
        raise EvaluationError("angle_sin undefined on the axis")
    t = np.arctan2(xj, xi)
    g = np.zeros_like(S.x)
    c = p * np.cos(p * t) / r2
    g[:, i] = -xj * c
    g[:, j] = xi * c
    return np.sin(p * t) + shift, g


BUILTINS: dict[str, tuple[Callable, str]] = {
    "trig": (_trig, "chart"),
    "sin": (_sin, "chart"),
    "cos": (_cos, "chart"),
    "exp_cos": (_exp_cos, "chart"),
    "height": (_height, "ambient"),
    "angle_sin": (_angle_sin, "ambient"),
}


class BuiltinMap(MapSpec):
    kind = "builtin"
    k = 1

    def __init__(self, name: str, params: dict | None = None):
        if name not in BUILTINS:
            raise ValueError(f"unknown builtin map {name!r}; known: {sorted(BUILTINS)}")
        self.name = name
        self.params = dict(params or {})
        if name == "trig":
            self.params["terms"] = tuple(
                (float(a), tuple(float(w) for w in np.atleast_1d(f)), float(ph))
                for a, f, ph in self.params.get("terms", ())
            )
        self._fn, self._space = BUILTINS[name]

    def _evaluate(self, S):
        v, g = self._fn(S, **self.params)
        G = g[:, None, :]
        A = _chart_to_tdiff(G, S) if self._space == "chart" else _ambient_to_tdiff(G, S)
        return v[:, None], A

    def describe(self):
        p = dict(self.params)
        if "terms" in p:
            p["terms"] = [[a, list(f), ph] for a, f, ph in p["terms"]]
        return {"kind": self.kind, "name": self.name, "params": p}


def trig(const: float = 0.0, terms=()) -> BuiltinMap:
    """const + sum_i amp_i cos(<freq_i, u> + phase_i) in chart coordinates."""
    return BuiltinMap("trig", {"const": const, "terms": terms})


def base_bump(r2: np.ndarray, a: float = 1.0):
    """g = a - 2a max(0, 1 - 4|y|^2)^2 as a function of |y|^2; returns (g, dg/d(|y|^2))."""
    psi = np.maximum(0.0, 1.0 - 4.0 * r2)
    return a - 2.0 * a * psi * psi, 16.0 * a * psi


BUMP_ZERO_RADIUS = float(np.sqrt((1.0 - 2.0 ** -0.5) / 4.0))


class BumpReplicationMap(MapSpec):
    """Sum of rescaled copies of the base bump on disjoint disks; equals a elsewhere.

    On a disk with center c and radius rho the map is g((u - c) / rho).
    """

    kind = "bump_rep"
    k = 1

    def __init__(self, centers, radius: float, n_rep: int, lower, upper, periodic, a: float = 1.0,
                 packing_constant: float = 1.0):
        self.centers = np.atleast_2d(np.asarray(centers, float))
        self.radius = float(radius)
        self.n_rep = int(n_rep)
        self.lower = np.asarray(lower, float)
        self.upper = np.asarray(upper, float)
        self.periodic = tuple(bool(p) for p in periodic)
        self.a = float(a)
        self.packing_constant = packing_constant
        self._check_disjoint()

    def _offsets(self, U):
        D = U[:, None, :] - self.centers[None, :, :]
        L = self.upper - self.lower
        for ax, per in enumerate(self.periodic):
            if per:
                D[:, :, ax] = (D[:, :, ax] + 0.5 * L[ax]) % L[ax] - 0.5 * L[ax]
        return D

    def _check_disjoint(self):
        C = self.centers
        if C.shape[0] < 2:
            return
        D = self._offsets(C)
        dist = np.linalg.norm(D, axis=2)
        np.fill_diagonal(dist, np.inf)
        if dist.min() <= 2 * self.radius:
            raise ValueError("bump disks overlap")

    def _evaluate(self, S):
        if S.u is None:
            raise EvaluationError("bump replication needs a chart model")
        Y = self._offsets(S.u) / self.radius           # (N, I, m)
        r2 = np.einsum("nim,nim->ni", Y, Y)
        g, dg = base_bump(r2, self.a)
        v = self.a + np.sum(g - self.a, axis=1)
        # d/du g(|y|^2) = dg * 2 y / rho
        grad = np.einsum("ni,nim->nm", dg, Y) * (2.0 / self.radius)
        return v[:, None], _chart_to_tdiff(grad[:, None, :], S)

    @property
    def disks(self) -> int:
        return self.centers.shape[0]

    def describe(self):
        return {"kind": self.kind, "n_rep": self.n_rep, "disks": self.disks, "radius": self.radius,
                "a": self.a}


class ScaledMap(MapSpec):
    def __init__(self, base: MapSpec, lam: float):
        self.base = base
        self.lam = lam
        self.k = base.k
        self.kind = base.kind

    def _evaluate(self, S):
        J = self.base.evaluate(S)
        return self.lam * J.values, self.lam * J.tdiff

    def describe(self):
        return {**self.base.describe(), "scale": self.lam}


class StackedMap(MapSpec):
    """Joint map (f_1, ..., f_s)."""

    kind = "stack"

    def __init__(self, maps: Sequence[MapSpec]):
        self.maps = tuple(maps)
        self.k = sum(f.k for f in self.maps)

    def _evaluate(self, S):
        parts = [f.evaluate(S) for f in self.maps]
        return (np.concatenate([p.values for p in parts], axis=1),
                np.concatenate([p.tdiff for p in parts], axis=1))

    def scaled(self, lam):
        return StackedMap([f.scaled(lam) for f in self.maps])

    def describe(self):
        return {"kind": self.kind, "maps": [f.describe() for f in self.maps]}


class ComponentMap(MapSpec):
    def __init__(self, base: MapSpec, j: int):
        self.base = base
        self.j = j
        self.kind = base.kind

    def _evaluate(self, S):
        J = self.base.evaluate(S)
        return J.values[:, [self.j]], J.tdiff[:, [self.j], :]


class ConstantMap(MapSpec):
    kind = "builtin"

    def __init__(self, c):
        self.c = np.atleast_1d(np.asarray(c, float))
        self.k = self.c.size

    def _evaluate(self, S):
        N, m = len(S), S.frames.shape[2]
        return np.broadcast_to(self.c, (N, self.k)).copy(), np.zeros((N, self.k, m))

    def describe(self):
        return {"kind": "constant", "c": self.c.tolist()}


# ---------------------------------------------------------------- jets

def eval_jets(f: MapSpec, S: SampleSet) -> JetBatch:
    return f.evaluate(S)


def _single(s: SamplePoint) -> SampleSet:
    return SampleSet.from_points([s])


def eval_jet(f: MapSpec, s: SamplePoint) -> Jet1Sample:
    J = f.evaluate(_single(s))
    return Jet1Sample(at=s, value=J.values[0], tdiff=J.tdiff[0], sigma=J.sigma()[0])


def jet_norm(j: Jet1Sample) -> float:
    return float(np.linalg.norm(j.value) + j.sigma[0])


def discriminant_distance(j: Jet1Sample) -> float:
    k, m = j.tdiff.shape
    if k > m:
        raise CodimensionTooLarge(f"k = {k} > m = {m}")
    return float(np.linalg.norm(j.value) + j.sigma[-1])


def fd_tdiff(f: MapSpec, S: SampleSet, h: float | None = None) -> np.ndarray:
    """Central-difference tangential differential, shape (N, k, m).

    Charts difference along chart axes and convert to the orthonormal frame;
    implicit models step along frame columns and re-project onto M.
    """
    N = len(S)
    m = S.frames.shape[2]
    xn = np.linalg.norm(S.x, axis=1)
    step = np.maximum(1e-6, 1e-6 * xn) if h is None else np.full(N, float(h))
    cols = []
    for i in range(m):
        if S.u is not None:
            E = np.zeros_like(S.u)
            E[:, i] = step
            Sp = chart_samples(S.model, S.u + E)
            Sm = chart_samples(S.model, S.u - E)
        else:
            d = S.frames[:, :, i] * step[:, None]
            Xp, _ = newton_project(S.model, S.x + d, max_iter=30, damping=1.0, stop=1e-14)
            Xm, _ = newton_project(S.model, S.x - d, max_iter=30, damping=1.0, stop=1e-14)
            Sp = SampleSet(S.model, Xp, None, S.frames, None, S.cell_size)
            Sm = SampleSet(S.model, Xm, None, S.frames, None, S.cell_size)
        cols.append((f.values(Sp) - f.values(Sm)) / (2 * step[:, None]))
    D = np.stack(cols, axis=-1)   # derivative along chart axes or frame columns
    if S.u is not None:
        D = np.einsum("nkj,nji->nki", D, S.chart_to_frame)
    return D
