"""Compact embedded manifolds and their sample sets.

Two families are supported: box charts (periodic or flat) given by an
explicit embedding, and implicit varieties Z(q_1, ..., q_l) in R^n sampled by
Newton projection of an ambient grid.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyVariety, NonRegularPoint
from .poly import Polynomial


class ManifoldKind(str, Enum):
    PERIODIC_CHART = "periodic_chart"
    FLAT_BOX = "flat_box"
    IMPLICIT = "implicit"


@dataclass(frozen=True, eq=False)
class ManifoldModel:
    kind: ManifoldKind
    m: int
    n: int
    name: str = ""
    params: dict = field(default_factory=dict)
    # chart models
    lower: tuple = ()
    upper: tuple = ()
    periodic: tuple = ()
    embed: Optional[Callable] = None
    embed_jac: Optional[Callable] = None
    # implicit models
    polys: tuple = ()
    box: tuple = ()
    tol: float = 1e-9

    def __post_init__(self):
        if self.m > self.n or self.m < 1:
            raise ValueError(f"bad dimensions m={self.m}, n={self.n}")
        if self.kind == ManifoldKind.IMPLICIT:
            if len(self.polys) < self.n - self.m:
                raise ValueError("need at least n - m defining polynomials")
            if len(self.box) != self.n:
                raise ValueError("ambient box must have one interval per coordinate")
        else:
            if not (len(self.lower) == len(self.upper) == len(self.periodic) == self.m):
                raise ValueError("chart box must have one interval per chart axis")

    @property
    def is_chart(self) -> bool:
        return self.kind != ManifoldKind.IMPLICIT

    @property
    def d0(self) -> int:
        """Degree of the defining equations (charts record it in params, default 1)."""
        if self.kind == ManifoldKind.IMPLICIT:
            return max(p.degree for p in self.polys)
        return int(self.params.get("d0", 1))

    def side_lengths(self) -> np.ndarray:
        return np.asarray(self.upper, float) - np.asarray(self.lower, float)

    def q_values(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.stack([p(X) for p in self.polys], axis=-1)

    def q_jacobian(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.stack([p.gradient(X) for p in self.polys], axis=1)

    def describe(self) -> dict:
        return {"name": self.name, **self.params}


@dataclass(frozen=True)
class SamplePoint:
    x: np.ndarray
    u: Optional[np.ndarray]
    frame: np.ndarray
    cell_size: float
    model: Optional[ManifoldModel] = None
    chart_to_frame: Optional[np.ndarray] = None

    def to_json(self) -> dict:
        return {
            "x": [float(v) for v in self.x],
            "u": None if self.u is None else [float(v) for v in self.u],
        }


@dataclass
class SampleSet:
    """Batch of samples; behaves as a sequence of SamplePoint."""

    model: ManifoldModel
    x: np.ndarray                      # (N, n)
    u: Optional[np.ndarray]            # (N, m) for charts
    frames: np.ndarray                 # (N, n, m)
    chart_to_frame: Optional[np.ndarray]  # (N, m, m): d/du-coordinates -> frame coordinates
    cell_size: np.ndarray              # (N,)
    grid_shape: Optional[tuple] = None
    resolution: int = 0

    def __len__(self):
        return self.x.shape[0]

    def __getitem__(self, i) -> SamplePoint:
        return SamplePoint(
            x=self.x[i],
            u=None if self.u is None else self.u[i],
            frame=self.frames[i],
            cell_size=float(self.cell_size[i]),
            model=self.model,
            chart_to_frame=None if self.chart_to_frame is None else self.chart_to_frame[i],
        )

    def subset(self, idx) -> "SampleSet":
        idx = np.atleast_1d(idx)
        return SampleSet(self.model, self.x[idx], None if self.u is None else self.u[idx],
                         self.frames[idx],
                         None if self.chart_to_frame is None else self.chart_to_frame[idx],
                         self.cell_size[idx], resolution=self.resolution)

    @classmethod
    def from_points(cls, points: Sequence[SamplePoint]) -> "SampleSet":
        pts = list(points)
        model = pts[0].model
        U = None if pts[0].u is None else np.stack([p.u for p in pts])
        C = None if pts[0].chart_to_frame is None else np.stack([p.chart_to_frame for p in pts])
        return cls(model, np.stack([p.x for p in pts]), U, np.stack([p.frame for p in pts]), C,
                   np.array([p.cell_size for p in pts]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def pitch(self) -> float:
        return float(np.max(self.cell_size)) if len(self) else 0.0


# ---------------------------------------------------------------- embeddings

def _circle_embed(u, r):
    t = u[:, 0]
    return np.stack([r * np.cos(t), r * np.sin(t)], axis=-1)


def _circle_jac(u, r):
    t = u[:, 0]
    J = np.empty((u.shape[0], 2, 1))
    J[:, 0, 0] = -r * np.sin(t)
    J[:, 1, 0] = r * np.cos(t)
    return J


def _torus_embed(u, a, b):
    s, t = u[:, 0], u[:, 1]
    return np.stack([a * np.cos(s), a * np.sin(s), b * np.cos(t), b * np.sin(t)], axis=-1)


def _torus_jac(u, a, b):
    s, t = u[:, 0], u[:, 1]
    J = np.zeros((u.shape[0], 4, 2))
    J[:, 0, 0] = -a * np.sin(s)
    J[:, 1, 0] = a * np.cos(s)
    J[:, 2, 1] = -b * np.sin(t)
    J[:, 3, 1] = b * np.cos(t)
    return J


def _identity_embed(u):
    return np.array(u, dtype=float, copy=True)


def _identity_jac(u):
    N, m = u.shape
    return np.broadcast_to(np.eye(m), (N, m, m)).copy()


# ---------------------------------------------------------------- builtins

def circle(r: float = 1.0) -> ManifoldModel:
    if r <= 0:
        raise ValueError("radius must be positive")
    return ManifoldModel(
        ManifoldKind.PERIODIC_CHART, m=1, n=2, name="circle", params={"r": float(r), "d0": 2},
        lower=(0.0,), upper=(2 * np.pi,), periodic=(True,),
        embed=partial(_circle_embed, r=float(r)), embed_jac=partial(_circle_jac, r=float(r)),
    )


def torus_flat(a: float = 1.0, b: float = 1.0) -> ManifoldModel:
    """Product of two circles of radii a, b in R^4 (intrinsically flat)."""
    if a <= 0 or b <= 0:
        raise ValueError("radii must be positive")
    return ManifoldModel(
        ManifoldKind.PERIODIC_CHART, m=2, n=4, name="torus_flat",
        params={"a": float(a), "b": float(b), "d0": 2},
        lower=(0.0, 0.0), upper=(2 * np.pi, 2 * np.pi), periodic=(True, True),
        embed=partial(_torus_embed, a=float(a), b=float(b)),
        embed_jac=partial(_torus_jac, a=float(a), b=float(b)),
    )


def box(bounds: Sequence[Sequence[float]]) -> ManifoldModel:
    bounds = [tuple(map(float, b)) for b in bounds]
    if not bounds or any(hi <= lo for lo, hi in bounds):
        raise ValueError("box bounds must be nonempty intervals")
    m = len(bounds)
    return ManifoldModel(
        ManifoldKind.FLAT_BOX, m=m, n=m, name="box", params={"bounds": [list(b) for b in bounds]},
        lower=tuple(b[0] for b in bounds), upper=tuple(b[1] for b in bounds),
        periodic=(False,) * m, embed=_identity_embed, embed_jac=_identity_jac,
    )


def implicit(polys: Sequence[Polynomial], box: Sequence[Sequence[float]], m: int | None = None,
             tol: float = 1e-9, name: str = "implicit") -> ManifoldModel:
    polys = tuple(polys)
    n = polys[0].nvars
    if m is None:
        m = n - len(polys)
    return ManifoldModel(
        ManifoldKind.IMPLICIT, m=m, n=n, name=name,
        params={"polys": [p.to_list() for p in polys], "box": [list(map(float, b)) for b in box],
                "tol": tol},
        polys=polys, box=tuple(tuple(map(float, b)) for b in box), tol=float(tol),
    )


def implicit_circle(r: float = 1.0, tol: float = 1e-9) -> ManifoldModel:
    q = Polynomial(2, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -r * r})
    L = 1.5 * r
    return implicit([q], [(-L, L), (-L, L)], tol=tol, name="implicit_circle")


def implicit_sphere(r: float = 1.0, tol: float = 1e-9) -> ManifoldModel:
    q = Polynomial(3, {(2, 0, 0): 1.0, (0, 2, 0): 1.0, (0, 0, 2): 1.0, (0, 0, 0): -r * r})
    L = 1.5 * r
    return implicit([q], [(-L, L)] * 3, tol=tol, name="implicit_sphere")


def torus_quartic(R: float = 2.0, r: float = 1.0, axis: int = 2, tol: float = 1e-9) -> ManifoldModel:
    """(|x|^2 + R^2 - r^2)^2 - 4 R^2 (|x|^2 - x_axis^2), a torus of revolution about `axis`."""
    X = [Polynomial.variable(3, i) for i in range(3)]
    sq = X[0] * X[0] + X[1] * X[1] + X[2] * X[2]
    planar = sq - X[axis] * X[axis]
    q = (sq + (R * R - r * r)) ** 2 - 4 * R * R * planar
    L = 1.2 * (R + r)
    return implicit([q], [(-L, L)] * 3, tol=tol, name="torus_quartic")


# ---------------------------------------------------------------- sampling

def chart_axes(model: ManifoldModel, resolution: int) -> list[np.ndarray]:
    axes = []
    for lo, hi, per in zip(model.lower, model.upper, model.periodic):
        if per:
            axes.append(lo + np.arange(resolution) * (hi - lo) / resolution)
        else:
            axes.append(np.linspace(lo, hi, resolution))
    return axes


def chart_spacing(model: ManifoldModel, resolution: int) -> np.ndarray:
    out = []
    for lo, hi, per in zip(model.lower, model.upper, model.periodic):
        out.append((hi - lo) / (resolution if per else resolution - 1))
    return np.array(out)


def _fix_signs(F: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Flip each column so its first entry with |v| > eps is positive."""
    big = np.abs(F) > eps
    first = np.argmax(big, axis=1)  # (N, m)
    lead = np.take_along_axis(F, first[:, None, :], axis=1)[:, 0, :]
    s = np.where(lead < 0, -1.0, 1.0)
    return F * s[:, None, :]


def chart_samples(model: ManifoldModel, U: np.ndarray, grid_shape=None, cell=None,
                  resolution: int = 0) -> SampleSet:
    U = np.atleast_2d(np.asarray(U, float))
    X = model.embed(U)
    D = model.embed_jac(U)
    Q, R = np.linalg.qr(D)
    s = np.sign(np.diagonal(R, axis1=1, axis2=2))
    s[s == 0] = 1.0
    Q = Q * s[:, None, :]
    R = R * s[:, :, None]
    C = np.linalg.inv(R)
    if cell is None:
        cell = np.zeros(U.shape[0])
    return SampleSet(model, X, U, Q, C, np.broadcast_to(np.asarray(cell, float), (U.shape[0],)).copy(),
                     grid_shape=grid_shape, resolution=resolution)


def implicit_frames(model: ManifoldModel, X: np.ndarray, check: bool = True) -> np.ndarray:
    J = model.q_jacobian(X)
    _, S, Vt = np.linalg.svd(J, full_matrices=True)
    c = model.n - model.m
    if check and c > 0:
        bad = S[:, c - 1] <= 10 * model.tol
        if np.any(bad):
            i = int(np.argmax(bad))
            raise NonRegularPoint(f"Jacobian rank drops at x = {X[i].tolist()}")
    F = np.transpose(Vt[:, c:, :], (0, 2, 1))
    return _fix_signs(F)


def implicit_samples(model: ManifoldModel, X: np.ndarray, cell: float = 0.0, check: bool = True,
                     resolution: int = 0) -> SampleSet:
    X = np.atleast_2d(np.asarray(X, float))
    F = implicit_frames(model, X, check=check)
    return SampleSet(model, X, None, F, None, np.full(X.shape[0], float(cell)), resolution=resolution)


def newton_project(model: ManifoldModel, X: np.ndarray, max_iter: int = 50, damping: float = 0.5,
                   stop: float = 1e-10):
    """Damped Gauss-Newton projection onto Z(q). Returns (points, converged mask)."""
    X = np.array(X, dtype=float)
    done = np.zeros(X.shape[0], dtype=bool)
    active = np.arange(X.shape[0])
    for _ in range(max_iter + 1):
        Y = X[active]
        q = model.q_values(Y)
        ok = np.max(np.abs(q), axis=1) < stop
        done[active[ok]] = True
        active = active[~ok]
        if active.size == 0:
            break
        Y, q = Y[~ok], q[~ok]
        J = model.q_jacobian(Y)
        if J.shape[1] == 1:
            g = J[:, 0, :]
            nn = np.einsum("ij,ij->i", g, g)
            nn = np.where(nn > 0, nn, np.inf)
            step = g * (q[:, 0] / nn)[:, None]
        else:
            step = np.einsum("nij,nj->ni", np.linalg.pinv(J), q)
        X[active] = Y - damping * step
    X[~np.isfinite(X).all(axis=1)] = np.nan
    return X, done


def greedy_dedup(X: np.ndarray, radius: float) -> np.ndarray:
    """Indices of a maximal subset with pairwise distances >= radius, greedy in input order."""
    if X.shape[0] == 0:
        return np.zeros(0, dtype=int)
    tree = cKDTree(X)
    nbrs = tree.query_ball_point(X, r=radius)
    removed = np.zeros(X.shape[0], dtype=bool)
    keep = []
    for i in range(X.shape[0]):
        if removed[i]:
            continue
        keep.append(i)
        removed[nbrs[i]] = True
    return np.array(keep, dtype=int)


def _implicit_grid_samples(model: ManifoldModel, resolution: int) -> SampleSet:
    axes = [np.linspace(lo, hi, resolution) for lo, hi in model.box]
    pitch = min((hi - lo) / (resolution - 1) for lo, hi in model.box)
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.n)
    q = model.q_values(G)
    J = model.q_jacobian(G)
    if J.shape[1] == 1:
        gn = np.linalg.norm(J[:, 0, :], axis=1)
        est = np.abs(q[:, 0]) / np.where(gn > 0, gn, np.inf)
    else:
        est = np.linalg.norm(np.einsum("nij,nj->ni", np.linalg.pinv(J), q), axis=1)
    # Newton only from the shell of grid points within one pitch of the variety
    start = G[est < pitch]
    X, ok = newton_project(model, start)
    X = X[ok]
    lo = np.array([b[0] for b in model.box])
    hi = np.array([b[1] for b in model.box])
    X = X[np.all((X >= lo) & (X <= hi), axis=1)]
    if X.shape[0] == 0:
        raise EmptyVariety(f"no grid point of {model.name} converged at resolution {resolution}")
    X = X[greedy_dedup(X, 0.5 * pitch)]
    return implicit_samples(model, X, cell=pitch, resolution=resolution)


def sample(model: ManifoldModel, resolution: int) -> SampleSet:
    """Dense samples with orthonormal tangent frames.

    Chart models give exactly resolution**m points on the chart grid (index
    order = C order over the axes). Implicit models project an ambient grid
    with `resolution` points per axis.
    """
    resolution = int(resolution)
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if model.is_chart:
        axes = chart_axes(model, resolution)
        U = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, model.m)
        cell = float(np.max(chart_spacing(model, resolution)))
        return chart_samples(model, U, grid_shape=(resolution,) * model.m, cell=cell,
                             resolution=resolution)
    return _implicit_grid_samples(model, resolution)


def tangent_frame(model: ManifoldModel, x=None, u=None) -> np.ndarray:
    """Orthonormal n x m frame of T_xM."""
    if model.is_chart:
        if u is None:
            raise ValueError("chart models need chart coordinates u")
        return chart_samples(model, np.atleast_2d(u)).frames[0]
    return implicit_frames(model, np.atleast_2d(np.asarray(x, float)))[0]


def implicit_local_points(model: ManifoldModel, x0: np.ndarray, frame0: np.ndarray,
                          T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Points of M near x0 parametrized by tangent offsets T (N, m), via projection."""
    T = np.atleast_2d(T)
    Y = x0[None, :] + T @ frame0.T
    return newton_project(model, Y, max_iter=30, damping=1.0, stop=1e-13)
