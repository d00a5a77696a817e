"""Mayer graph integrals and truncated cluster expansions.

The engine works with the activity series of the cluster (Ursell) functions

    omega_m(x_1..x_m) = sum_{n>=m} z^n/(n-m)! * integral phi_n(x_1..x_n) dx_{m+1..n}

where phi_n is the sum over connected graphs of products of Mayer functions
along the edges.  Everything needed for forward thermodynamics and for the
inversion Jacobian comes out of one assembly pass per potential:

    w2[n](x)   = z^n coefficient of omega_2(x, 0)
    rho[n]     = z^n coefficient of the density, rho[n] = int w2[n] / (n-1)
    k3[n]      = z^n coefficient of the kernel omega_3(x, 0, x')
    k4         = z^4 base coefficient of K4(x,x') = int omega_4(x,0,y,x'+y) dy

rho[n] is derived from w2[n] by quadrature (and w2 from the kernel rows), so
the discrete series satisfy the density/pressure derivative identities
exactly, not just up to quadrature error.

The quartic kernels are assembled by grouping the 38 connected graphs on 4
vertices by which of their edge factors involve the integrated coordinate;
each group reduces to matrix products or banded correlations.  The direct
tensor quadrature (:func:`phi_n`) is kept as the slow reference
implementation and is cross-checked against the grouped assembly in tests.
"""

from __future__ import annotations

import json
import logging
import time
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .exceptions import TruncationError
from .graphs import connected_graphs
from .grid import (GridFunction, GridSpec, Kernel2D, hankel_matrix,
                   shifted_lookup, toeplitz_matrix)
from .potentials import PairPotential, mayer
from .series import evaluate, truncated_product

__all__ = ["ClusterTruncation", "ClusterCoefficients", "expand", "phi_n",
           "omega_m", "pressure_series", "ursell_from_correlations"]

log = logging.getLogger("imcgas.cluster")


@dataclass(frozen=True)
class ClusterTruncation:
    """Maximal particle number retained in the cluster sums."""

    n_max: int = 4

    def __post_init__(self):
        if not 2 <= self.n_max <= 5:
            raise TruncationError(f"n_max must be in 2..5, got {self.n_max}")


def _log_stage(stage: str, n: int, graphs: int, t0: float):
    if log.isEnabledFor(logging.DEBUG):
        log.debug(json.dumps({"stage": stage, "n": n, "graphs": graphs,
                              "seconds": round(time.perf_counter() - t0, 6)}))


# ---------------------------------------------------------------------------
# direct tensor quadrature (reference path)

def phi_n(f: GridFunction, n: int, external, trunc: ClusterTruncation | None = None):
    """Integral of phi_n over its internal coordinates, externals held fixed.

    ``external`` is a sequence of positions (grid nodes); the remaining
    n - len(external) coordinates are integrated over the grid by trapezoid.
    At most 3 internal coordinates are allowed (tensor quadrature).  Cost
    grows as M^internal per graph; this is the readable reference used to
    validate the grouped kernel assembly, fine for modest grids.
    """
    spec = f.spec
    ext = list(external)
    if len(ext) > n:
        raise ValueError("more external points than vertices")
    n_int = n - len(ext)
    if n_int > 3:
        raise TruncationError("at most 3 internal coordinates supported")
    if trunc is not None and n > trunc.n_max:
        raise TruncationError(f"n={n} exceeds truncation n_max={trunc.n_max}")
    t0 = time.perf_counter()
    m, c = spec.points, spec.center
    ext_idx = [spec.node_index(xx) for xx in ext]

    # node-index array for every vertex, broadcast over the internal axes
    vert = []
    for k in range(n):
        if k < len(ext):
            vert.append(np.asarray(ext_idx[k]).reshape((1,) * n_int))
        else:
            ax = k - len(ext)
            sh = [1] * n_int
            sh[ax] = m
            vert.append(np.arange(m).reshape(sh))

    gs = connected_graphs(n)
    pair_factor = {}
    total = np.zeros((m,) * n_int) if n_int else np.array(0.0)
    for edges in gs.graphs:
        prod = None
        for e in edges:
            if e not in pair_factor:
                pair_factor[e] = shifted_lookup(spec, f.values,
                                                vert[e[0]] - vert[e[1]] + c)
            prod = pair_factor[e] if prod is None else prod * pair_factor[e]
        if prod is None:  # n = 1, single empty graph
            prod = np.ones((1,) * n_int) if n_int else np.array(1.0)
        total = total + prod
    w = spec.trapezoid_weights
    for _ in range(n_int):
        total = total @ w
    _log_stage("phi_n", n, len(gs), t0)
    return float(total)


# ---------------------------------------------------------------------------
# grouped assembly of the quartic kernels

def _combo_table(role_of_edge, integrated_roles):
    """Group the 38 connected graphs on 4 vertices by factor structure."""
    combos = Counter()
    for edges in connected_graphs(4).graphs:
        fixed = frozenset(role_of_edge[e] for e in edges
                          if role_of_edge[e] not in integrated_roles)
        integ = frozenset(role_of_edge[e] for e in edges
                          if role_of_edge[e] in integrated_roles)
        combos[(fixed, integ)] += 1
    return combos


def _w4_kernel(spec: GridSpec, f: np.ndarray) -> np.ndarray:
    """W4(x,x') = integral phi_4(x, 0, x', y) dy.

    Vertices (x, 0, x', y); the y-edges f(x-y), f(y), f(x'-y) are the only
    ones entering the quadrature, so each graph contributes a product of
    column/row/Toeplitz factors times one of 7 precontracted y-integrals.
    """
    t0 = time.perf_counter()
    m = spec.points
    w = spec.trapezoid_weights
    T = toeplitz_matrix(spec, f)
    role = {(0, 1): "a", (0, 2): "m", (1, 2): "g",
            (0, 3): "r", (1, 3): "p", (2, 3): "s"}
    combos = _combo_table(role, {"r", "p", "s"})

    q1 = T @ w                      # int f(x - y) dy
    cc = float(w @ f)               # int f
    q2 = T @ (w * f)                # int f(x - y) f(y) dy
    Q = (T * w) @ T.T               # int f(x - y) f(x' - y) dy
    P = (T * (w * f)) @ T.T         # int f(x - y) f(y) f(x' - y) dy
    contr = {
        frozenset({"r"}): q1[:, None], frozenset({"s"}): q1[None, :],
        frozenset({"p"}): cc,
        frozenset({"r", "p"}): q2[:, None], frozenset({"p", "s"}): q2[None, :],
        frozenset({"r", "s"}): Q, frozenset({"r", "p", "s"}): P,
    }
    colf, rowf = f[:, None], f[None, :]
    out = np.zeros((m, m))
    for (fixed, integ), count in combos.items():
        base = np.ones((m, m)) * contr[integ]
        if "a" in fixed:
            base = base * colf
        if "m" in fixed:
            base = base * T
        if "g" in fixed:
            base = base * rowf
        out += count * base
    out = 0.5 * (out + out.T)  # exact by a vertex relabeling; kill roundoff
    _log_stage("w4_kernel", 4, 38, t0)
    return out


def _k4_kernel(spec: GridSpec, f: np.ndarray) -> np.ndarray:
    """K4(x,x') = integral phi_4(x, 0, y, x'+y) dy.

    Vertices (x, 0, y, x'+y).  The edge f(x-x'-y) couples y to both outputs,
    so groups containing it are evaluated as banded correlations per x'
    column; all other groups are matrix products of Toeplitz/Hankel factors.
    """
    t0 = time.perf_counter()
    m, c = spec.points, spec.center
    w = spec.trapezoid_weights
    T = toeplitz_matrix(spec, f)    # f(x_i - y_j)
    H = hankel_matrix(spec, f)      # f(x_j + y)  indexed [j, y]
    role = {(0, 1): "a", (2, 3): "g",
            (0, 2): "t", (1, 2): "p", (1, 3): "h", (0, 3): "d"}
    combos = _combo_table(role, {"t", "p", "h", "d"})

    q1 = T @ w
    cc = float(w @ f)
    q2 = T @ (w * f)
    qh = H @ w
    qh2 = H @ (w * f)
    X = (T * w) @ H.T               # int f(x-y) f(x'+y) dy
    Xp = (T * (w * f)) @ H.T
    contr = {
        frozenset({"t"}): q1[:, None], frozenset({"p"}): cc,
        frozenset({"h"}): qh[None, :],
        frozenset({"t", "p"}): q2[:, None], frozenset({"p", "h"}): qh2[None, :],
        frozenset({"t", "h"}): X, frozenset({"t", "p", "h"}): Xp,
    }

    fpad = np.concatenate([f, np.zeros(m)])

    def fext(idx):
        valid = (idx >= 0) & (idx < m)
        return np.where(valid, fpad[np.clip(idx, 0, 2 * m - 1)], 0.0)

    s = np.arange(-(m - 1), m)          # s = i - y
    k_t = fext(s + c)                   # f at offset s

    def with_d(integ):
        """sum_y w_y [f(y)]^p [f(x'+y)]^h [f(x-y)]^t f(x-x'-y), per column."""
        res = np.empty((m, m))
        for j in range(m):
            v = w.copy()
            if "p" in integ:
                v = v * f
            if "h" in integ:
                v = v * H[j]
            k = fext(s + 2 * c - j)     # f(x - x' - y) at offset s, column j
            if "t" in integ:
                k = k * k_t
            res[:, j] = np.convolve(k, v)[(m - 1):(2 * m - 1)]
        return res

    colf, rowf = f[:, None], f[None, :]
    out = np.zeros((m, m))
    for (fixed, integ), count in combos.items():
        if "d" in integ:
            base = with_d(integ - {"d"})
        else:
            base = np.ones((m, m)) * contr[integ]
        if "a" in fixed:
            base = base * colf
        if "g" in fixed:
            base = base * rowf
        out += count * base
    out = 0.5 * (out + out.T)
    _log_stage("k4_kernel", 4, 38, t0)
    return out


# ---------------------------------------------------------------------------
# coefficient tables

@dataclass(eq=False)
class ClusterCoefficients:
    """Activity-series coefficients of the cluster functions for one potential."""

    potential: PairPotential
    trunc: ClusterTruncation
    rho: np.ndarray                   # (n_max+1,)
    w2: np.ndarray                    # (n_max+1, M)
    k3: dict[int, np.ndarray]         # order -> (M, M)
    _k4: np.ndarray | None = field(default=None, repr=False)

    @property
    def spec(self) -> GridSpec:
        return self.potential.spec

    @property
    def n_max(self) -> int:
        return self.trunc.n_max

    @property
    def k4(self) -> np.ndarray:
        """z^4 base coefficient of the K4 kernel (assembled on first use)."""
        if self._k4 is None:
            f = mayer(self.potential).values
            self._k4 = (np.zeros((self.spec.points,) * 2) if not f.any()
                        else _k4_kernel(self.spec, f))
        return self._k4

    def rho2(self) -> np.ndarray:
        """Series of the pair correlation: w2 + [rho^2], products re-truncated."""
        return self.w2 + truncated_product(self.rho, self.rho)[:, None]


def expand(p: PairPotential, trunc: ClusterTruncation | None = None) -> ClusterCoefficients:
    """Assemble rho / omega_2 / kernel coefficient tables for a potential."""
    trunc = trunc or ClusterTruncation()
    n_max = trunc.n_max
    if n_max > 4:
        raise TruncationError("coefficient assembly supports n_max <= 4")
    spec = p.spec
    f = mayer(p).values
    w = spec.trapezoid_weights
    m = spec.points

    w2 = np.zeros((n_max + 1, m))
    rho = np.zeros(n_max + 1)
    rho[1] = 1.0
    k3: dict[int, np.ndarray] = {}

    if f.any():
        w2[2] = f
        if n_max >= 3:
            T = toeplitz_matrix(spec, f)
            colf, rowf = f[:, None], f[None, :]
            k3[3] = colf * T + colf * rowf + T * rowf + colf * T * rowf
            w2[3] = k3[3] @ w
        if n_max >= 4:
            k3[4] = _w4_kernel(spec, f)
            w2[4] = (k3[4] @ w) / 2.0
        for n in range(2, n_max + 1):
            rho[n] = float(w2[n] @ w) / (n - 1)

    return ClusterCoefficients(potential=p, trunc=trunc, rho=rho, w2=w2, k3=k3)


# ---------------------------------------------------------------------------
# public series evaluations

def _warn_if_outside_gas_phase(p: PairPotential, z: float, mu0: float | None):
    if mu0 is not None:
        z_max = float(np.exp(p.beta * mu0))
    else:
        # optimistic threshold with B = 0; a positive stability constant
        # shrinks the certified range further
        from .grid import integrate
        c_beta = integrate(GridFunction(p.spec, np.abs(mayer(p).values)))
        if c_beta == 0.0:
            return
        z_max = 1.0 / (c_beta * np.e)
    if z > z_max:
        warnings.warn(f"activity z={z:g} exceeds the certified gas-phase "
                      f"threshold {z_max:g}; series truncation may be poor",
                      stacklevel=3)


def omega_m(p: PairPotential, z: float, m: int,
            trunc: ClusterTruncation | None = None, mu0: float | None = None):
    """Truncated cluster function of order m at activity z.

    m=1 -> density (scalar); m=2 -> omega_2(x) grid function;
    m=3 -> kernel omega_3(x, 0, x'); m=4 -> kernel K4(x, x') =
    integral omega_4(x, 0, y, x'+y) dy retaining only its n=4 base term.
    """
    if not z > 0:
        raise ValueError("activity z must be positive")
    if m not in (1, 2, 3, 4):
        raise ValueError("m must be 1..4")
    trunc = trunc or ClusterTruncation()
    _warn_if_outside_gas_phase(p, z, mu0)
    coeffs = expand(p, trunc)
    if m == 1:
        return float(evaluate(coeffs.rho, z))
    if m == 2:
        return GridFunction(p.spec, evaluate(coeffs.w2, z))
    if m == 3:
        vals = np.zeros((p.spec.points,) * 2)
        for n, kern in coeffs.k3.items():
            vals = vals + kern * z**n
        return Kernel2D(p.spec, vals)
    if trunc.n_max < 4:
        return Kernel2D(p.spec, np.zeros((p.spec.points,) * 2))
    return Kernel2D(p.spec, coeffs.k4 * z**4)


def pressure_series(p: PairPotential, z: float,
                    trunc: ClusterTruncation | None = None,
                    mu0: float | None = None) -> float:
    """beta*p = sum_n z^n/n! * integral phi_n(0, x_2..x_n), truncated."""
    if not z > 0:
        raise ValueError("activity z must be positive")
    trunc = trunc or ClusterTruncation()
    _warn_if_outside_gas_phase(p, z, mu0)
    coeffs = expand(p, trunc)
    n = np.arange(len(coeffs.rho))
    b = np.zeros_like(coeffs.rho)
    b[1:] = coeffs.rho[1:] / n[1:]
    return float(evaluate(b, z))


# ---------------------------------------------------------------------------
# Ursell recursion from plain correlation tables

def _set_partitions(elements: list[int]):
    if not elements:
        yield []
        return
    first, rest = elements[0], elements[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def ursell_from_correlations(corr, m: int):
    """Cluster function omega_m from correlation tables rho_1 .. rho_m.

    ``corr`` is a sequence where corr[k-1] holds the k-particle correlation
    on a shared list of K points: a scalar or (K,) array for k=1, a (K,)*k
    array otherwise.  Implements the partition recursion exactly for m <= 4.
    """
    if not 1 <= m <= 4:
        raise ValueError("m must be in 1..4")
    if len(corr) < m:
        raise ValueError(f"need correlation tables up to order {m}")
    tables = [np.asarray(t, dtype=float) for t in corr[:m]]
    k_pts = None
    for k, t in enumerate(tables, start=1):
        if t.ndim:
            k_pts = t.shape[0]
    if k_pts is None:
        k_pts = 1
    omega = {}
    for k in range(1, m + 1):
        t = tables[k - 1]
        if k == 1 and t.ndim == 0:
            t = np.full(k_pts, float(t))
        if t.shape != (k_pts,) * k:
            raise ValueError(f"table {k} has shape {t.shape}, expected {(k_pts,)*k}")
        total = t.astype(float).copy()
        for part in _set_partitions(list(range(k))):
            if len(part) < 2:
                continue
            prod = np.ones((k_pts,) * k)
            for block in part:
                block_arr = omega[len(block)]
                # lift the block's omega onto the full axes
                lifted = block_arr
                block_sorted = sorted(block)
                for pos in range(k):
                    if pos not in block_sorted:
                        lifted = np.expand_dims(lifted, pos)
                prod = prod * lifted
            total -= prod
        omega[k] = total
    return omega[m]
