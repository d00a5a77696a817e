"""Truncated power series in the activity z.

Thermodynamic quantities are polynomials in z once the cluster expansion is
cut at a maximal particle number N.  Identities between them (density and
pressure derivatives, the pair-correlation Jacobian) hold order by order,
so products of two truncated series must be re-truncated at the same total
order; otherwise spurious O(z^(N+1)) terms break the derivative tests.

Coefficients are indexed by order 0..N and may be scalars or arrays (grid
functions); a coefficient table of shape (N+1,) or (N+1, M) represents
sum_n coef[n] * z^n.
"""

from __future__ import annotations

import numpy as np

__all__ = ["truncated_product", "evaluate", "derivative_weighted"]


def truncated_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cauchy product of coefficient tables, cut at the common order.

    a and b have leading axis of length N+1; scalar/vector coefficients mix
    by broadcasting (scalar series x grid-function series and so on).
    """
    n1 = a.shape[0]
    if b.shape[0] != n1:
        raise ValueError("series must share the truncation order")
    shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
    out = np.zeros((n1, *shape))
    for i in range(n1):
        if not np.any(a[i]):
            continue
        for j in range(n1 - i):
            out[i + j] += a[i] * b[j]
    return out


def evaluate(coef: np.ndarray, z: float):
    """sum_n coef[n] * z**n; returns a scalar or an array matching coef[0]."""
    powers = z ** np.arange(coef.shape[0])
    if coef.ndim == 1:
        return float(coef @ powers)
    return np.tensordot(powers, coef, axes=(0, 0))


def derivative_weighted(coef: np.ndarray) -> np.ndarray:
    """Coefficient table of z * d/dz, i.e. n * coef[n].

    With z = exp(beta*mu) this is (1/beta) * d/dmu.
    """
    n = np.arange(coef.shape[0], dtype=float)
    return coef * n.reshape((-1,) + (1,) * (coef.ndim - 1))
