"""Uniform symmetric 1-D grid: quadrature, inner products and fast convolution.

All functions in this package live on a ``GridSpec``: ``points`` equally
spaced nodes on ``[-extent, extent]`` with an odd point count so that 0 is a
node and every grid is reflection-symmetric.  Integrals are trapezoid sums;
convolutions are zero-padded FFT convolutions scaled by the grid spacing.
Functions are extended by zero outside the grid wherever shifted lookups
``f(x - y)`` leave the domain.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .exceptions import GridMismatchError

__all__ = ["GridSpec", "GridFunction", "Kernel2D", "integrate", "inner",
           "convolve", "apply_kernel"]


@dataclass(frozen=True)
class GridSpec:
    """Symmetric uniform grid on [-extent, extent] with an odd number of nodes."""

    extent: float
    points: int

    def __post_init__(self):
        if self.points < 3 or self.points % 2 == 0:
            raise ValueError(f"points must be odd and >= 3, got {self.points}")
        if not self.extent > 0:
            raise ValueError(f"extent must be positive, got {self.extent}")

    @property
    def h(self) -> float:
        return 2.0 * self.extent / (self.points - 1)

    @property
    def center(self) -> int:
        """Index of the node at x = 0."""
        return (self.points - 1) // 2

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.points)

    @property
    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.points, self.h)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def node_index(self, x: float) -> int:
        """Index of the node at position x; raises if x is not a node."""
        idx = (x + self.extent) / self.h
        k = int(round(idx))
        if not (0 <= k < self.points) or abs(idx - k) > 1e-8:
            raise ValueError(f"{x} is not a grid node (h={self.h})")
        return k


def _check_same_spec(a, b):
    if a.spec != b.spec:
        raise GridMismatchError(f"grid mismatch: {a.spec} vs {b.spec}")


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real values sampled at the nodes of a GridSpec."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.spec.points,):
            raise ValueError(f"expected {self.spec.points} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("GridFunction values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.spec.x

    def is_even(self, tol: float = 1e-12) -> bool:
        v = self.values
        scale = max(float(np.abs(v).max()), 1.0)
        return float(np.abs(v - v[::-1]).max()) <= tol * scale

    def require_even(self, tol: float = 1e-9):
        if not self.is_even(tol):
            raise ValueError("GridFunction is not even")
        return self

    # small arithmetic helpers so call sites stay readable
    def __add__(self, other):
        if isinstance(other, GridFunction):
            _check_same_spec(self, other)
            return GridFunction(self.spec, self.values + other.values)
        return GridFunction(self.spec, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            _check_same_spec(self, other)
            return GridFunction(self.spec, self.values - other.values)
        return GridFunction(self.spec, self.values - other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            _check_same_spec(self, other)
            return GridFunction(self.spec, self.values * other.values)
        return GridFunction(self.spec, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.spec, -self.values)


@dataclass(frozen=True, eq=False)
class Kernel2D:
    """Two-argument function k(x, x') sampled on grid x grid."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        m = self.spec.points
        if v.shape != (m, m):
            raise ValueError(f"expected {(m, m)} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("Kernel2D values must be finite")
        object.__setattr__(self, "values", v)

    def is_symmetric(self, tol: float = 1e-10) -> bool:
        v = self.values
        scale = max(float(np.abs(v).max()), 1.0)
        return float(np.abs(v - v.T).max()) <= tol * scale


def integrate(f: GridFunction) -> float:
    """Trapezoid rule over [-extent, extent]."""
    return float(f.spec.trapezoid_weights @ f.values)


def inner(f: GridFunction, g: GridFunction) -> float:
    """L2 dual pairing <f, g> = integral of f*g (trapezoid)."""
    _check_same_spec(f, g)
    return float((f.spec.trapezoid_weights * f.values) @ g.values)


def tail_fraction(f: GridFunction, inner_fraction: float = 0.9) -> float:
    """Fraction of the |f| mass outside |x| <= inner_fraction * extent."""
    w = f.spec.trapezoid_weights
    total = float(w @ np.abs(f.values))
    if total == 0.0:
        return 0.0
    outside = np.abs(f.spec.x) > inner_fraction * f.spec.extent
    return float(w[outside] @ np.abs(f.values[outside])) / total


def convolve(f: GridFunction, g: GridFunction, *, warn_tail: float = 0.05) -> GridFunction:
    """(f*g)(x) = integral f(x-y) g(y) dy on the nodes, zero-padded FFT.

    Both inputs should decay towards the domain boundary; the result is
    truncated back to [-extent, extent].  A warning is emitted when a
    non-negligible share of either input's mass sits in the outer 10% of
    the domain (wrap-around is impossible, but truncation loses that mass).
    """
    _check_same_spec(f, g)
    for name, gf in (("f", f), ("g", g)):
        tf = tail_fraction(gf)
        if tf > warn_tail:
            warnings.warn(
                f"convolve: input {name} carries {tf:.1%} of its mass outside "
                f"0.9*extent; truncated convolution may be inaccurate",
                stacklevel=2,
            )
    vals = fftconvolve(f.values, g.values, mode="same") * f.spec.h
    return GridFunction(f.spec, vals)


def convolve_values(spec: GridSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Raw-array version of :func:`convolve` without tail diagnostics."""
    return fftconvolve(a, b, mode="same") * spec.h


def apply_kernel(k: Kernel2D, v: GridFunction) -> GridFunction:
    """(K v)(x) = integral k(x, x') v(x') dx' by trapezoid in x'."""
    if k.spec != v.spec:
        raise GridMismatchError(f"grid mismatch: {k.spec} vs {v.spec}")
    w = k.spec.trapezoid_weights
    return GridFunction(k.spec, k.values @ (w * v.values))


def shifted_lookup(spec: GridSpec, values: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """values at node index ``offsets`` with zero extension outside the grid.

    ``offsets`` are absolute node indices (0 .. points-1 valid); anything
    outside returns 0.  Used for Toeplitz/Hankel style lookups f(x_i - x_j).
    """
    idx = np.asarray(offsets)
    valid = (idx >= 0) & (idx < spec.points)
    return np.where(valid, values[np.clip(idx, 0, spec.points - 1)], 0.0)


def toeplitz_matrix(spec: GridSpec, values: np.ndarray) -> np.ndarray:
    """Matrix T[i, j] = f(x_i - x_j) with zero extension."""
    m = spec.points
    idx = np.subtract.outer(np.arange(m), np.arange(m)) + spec.center
    return shifted_lookup(spec, values, idx)


def hankel_matrix(spec: GridSpec, values: np.ndarray) -> np.ndarray:
    """Matrix H[i, j] = f(x_i + x_j) with zero extension."""
    m = spec.points
    idx = np.add.outer(np.arange(m), np.arange(m)) - spec.center
    return shifted_lookup(spec, values, idx)
