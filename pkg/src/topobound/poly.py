"""Sparse real polynomials in a fixed number of variables.

A polynomial is a mapping from exponent tuples to coefficients. Evaluation
is vectorized over a batch of points.
"""
from __future__ import annotations

from itertools import combinations_with_replacement
from typing import Iterable, Mapping

import numpy as np


class Polynomial:
    __slots__ = ("nvars", "terms", "_E", "_c", "_grad")

    def __init__(self, nvars: int, terms: Mapping[tuple, float] | None = None):
        self.nvars = int(nvars)
        clean = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.nvars:
                raise ValueError(f"exponent {exps} does not match {self.nvars} variables")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = float(c)
            if c != 0.0:
                clean[exps] = clean.get(exps, 0.0) + c
        self.terms = {e: c for e, c in sorted(clean.items()) if c != 0.0}
        self._E = None
        self._c = None
        self._grad = None

    # construction helpers
    @classmethod
    def from_list(cls, nvars: int, items: Iterable) -> "Polynomial":
        """Build from [(exponents, coefficient), ...], summing repeats."""
        acc: dict = {}
        for exps, c in items:
            exps = tuple(int(e) for e in exps)
            acc[exps] = acc.get(exps, 0.0) + float(c)
        return cls(nvars, acc)

    @classmethod
    def constant(cls, nvars: int, c: float) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Polynomial":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1.0})

    @classmethod
    def linear(cls, coeffs, const: float = 0.0) -> "Polynomial":
        coeffs = list(coeffs)
        n = len(coeffs)
        p = cls.constant(n, const)
        for i, a in enumerate(coeffs):
            p = p + float(a) * cls.variable(n, i)
        return p

    # properties
    @property
    def degree(self) -> int:
        if not self.terms:
            return 0
        return max(sum(e) for e in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient_norm(self) -> float:
        return float(np.sqrt(sum(c * c for c in self.terms.values())))

    def to_list(self):
        return [[list(e), c] for e, c in self.terms.items()]

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("variable count mismatch")
            return other
        return Polynomial.constant(self.nvars, float(other))

    def __add__(self, other):
        other = self._coerce(other)
        acc = dict(self.terms)
        for e, c in other.terms.items():
            acc[e] = acc.get(e, 0.0) + c
        return Polynomial(self.nvars, acc)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            a = float(other)
            return Polynomial(self.nvars, {e: a * c for e, c in self.terms.items()})
        other = self._coerce(other)
        acc: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                acc[e] = acc.get(e, 0.0) + c1 * c2
        return Polynomial(self.nvars, acc)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = Polynomial.constant(self.nvars, 1.0)
        for _ in range(int(k)):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, tuple(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        parts = []
        for e, c in self.terms.items():
            mono = "*".join(f"x{i}^{k}" if k > 1 else f"x{i}" for i, k in enumerate(e) if k)
            parts.append(f"{c:g}" + (f"*{mono}" if mono else ""))
        return "Polynomial(" + " + ".join(parts) + ")"

    def diff(self, i: int) -> "Polynomial":
        acc = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            e2 = list(e)
            e2[i] -= 1
            acc[tuple(e2)] = c * e[i]
        return Polynomial(self.nvars, acc)

    # evaluation
    def _arrays(self):
        if self._E is None:
            if self.terms:
                self._E = np.array(list(self.terms.keys()), dtype=np.int64)
                self._c = np.array(list(self.terms.values()), dtype=float)
            else:
                self._E = np.zeros((0, self.nvars), dtype=np.int64)
                self._c = np.zeros(0)
        return self._E, self._c

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        E, c = self._arrays()
        if len(c) == 0:
            out = np.zeros(X2.shape[0])
        else:
            out = _monomials(X2, E) @ c
        return out[0] if single else out

    def gradient(self, X) -> np.ndarray:
        """Gradient at each point, shape (N, nvars)."""
        if self._grad is None:
            self._grad = [self.diff(i) for i in range(self.nvars)]
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        G = np.stack([g(X2) for g in self._grad], axis=-1)
        return G[0] if single else G


def _monomials(X: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Matrix of monomial values, shape (N, T)."""
    N, n = X.shape
    maxe = int(E.max()) if E.size else 0
    # powers[k] = X**k, built by repeated multiplication (exact for integers)
    powers = np.empty((maxe + 1, N, n))
    powers[0] = 1.0
    for k in range(1, maxe + 1):
        powers[k] = powers[k - 1] * X
    out = np.ones((N, E.shape[0]))
    for j in range(n):
        out *= powers[E[:, j], :, j].T
    return out


def monomial_exponents(nvars: int, degree: int) -> list[tuple]:
    """All exponent tuples of total degree <= degree, graded then lexicographic.

    The order is nested: the list for degree d is a prefix of the list for d+1.
    """
    out = []
    for total in range(degree + 1):
        block = set()
        for combo in combinations_with_replacement(range(nvars), total):
            e = [0] * nvars
            for v in combo:
                e[v] += 1
            block.add(tuple(e))
        out.extend(sorted(block, reverse=True))
    return out


def design_matrix(X: np.ndarray, exponents) -> np.ndarray:
    E = np.array(exponents, dtype=np.int64).reshape(-1, X.shape[1])
    return _monomials(np.atleast_2d(np.asarray(X, float)), E)


def determinant(mat: list[list[Polynomial]]) -> Polynomial:
    """Laplace expansion along the first row; fine for sizes up to 4."""
    k = len(mat)
    if k == 1:
        return mat[0][0]
    out = None
    for j in range(k):
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * determinant(minor)
        if j % 2:
            term = -term
        out = term if out is None else out + term
    return out
