"""Forward thermodynamics at fixed (mu, u) and the density-constraint solve.

All quantities are evaluated from the activity-series coefficient tables of
:mod:`imcgas.cluster`.  Because the coefficients do not depend on mu, a
forward evaluation at a new chemical potential is a polynomial evaluation;
the expensive kernel assembly happens once per potential.

Derivative identities used here hold exactly for the truncated discrete
series by construction:

    d rho / d mu          = beta * (rho + int omega_2)
    d omega_2 / d mu (x)  = 2 beta omega_2(x) + beta * int omega_3(x,0,x') dx'
    grad_u rho            = -(beta/2) * d rho2 / d mu  (Schwarz identity)

where rho2 denotes the consistently truncated pair-correlation series
omega_2 + [rho^2].
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .cluster import ClusterCoefficients, ClusterTruncation, expand
from .exceptions import ConvergenceError, InfeasibleDensityError
from .grid import GridFunction, toeplitz_matrix
from .potentials import PairPotential, gas_phase_mu0, mayer, stability_bound
from .series import derivative_weighted, evaluate

__all__ = ["ThermoState", "forward", "pair_correlation", "solve_mu_star",
           "mu_star_derivative", "ks_residual", "KSReport"]


@dataclass(eq=False)
class ThermoState:
    """Thermodynamic snapshot at fixed (mu, u) and truncation order."""

    potential: PairPotential
    coeffs: ClusterCoefficients
    z: float
    mu: float
    rho: float
    beta_p: float
    omega2: GridFunction
    d_mu_rho: float
    d_mu_omega2: GridFunction
    grad_u_rho: GridFunction
    trunc: ClusterTruncation

    @property
    def spec(self):
        return self.potential.spec

    @property
    def beta(self) -> float:
        return self.potential.beta

    def rho2_values(self) -> np.ndarray:
        """Consistently truncated pair correlation [omega_2 + rho^2](z)."""
        return evaluate(self.coeffs.rho2(), self.z)


def forward(p: PairPotential, mu: float, trunc: ClusterTruncation | None = None,
            coeffs: ClusterCoefficients | None = None,
            mu0: float | None = None) -> ThermoState:
    """Evaluate density, pressure, omega_2 and its derivatives at (mu, u)."""
    trunc = trunc or ClusterTruncation()
    if coeffs is None:
        coeffs = expand(p, trunc)
    beta = p.beta
    z = float(np.exp(beta * mu))
    if mu0 is not None and mu > mu0:
        warnings.warn(f"mu={mu:g} above the gas-phase threshold mu0={mu0:g}")

    rho = float(evaluate(coeffs.rho, z))
    n = np.arange(coeffs.n_max + 1, dtype=float)
    beta_p = float(evaluate(np.concatenate([[0.0], coeffs.rho[1:] / n[1:]]), z))
    omega2 = GridFunction(p.spec, evaluate(coeffs.w2, z))
    d_mu_rho = beta * float(evaluate(derivative_weighted(coeffs.rho), z))
    d_mu_omega2 = GridFunction(p.spec, beta * evaluate(derivative_weighted(coeffs.w2), z))
    grad_u_rho = GridFunction(
        p.spec, -(beta / 2.0) * evaluate(derivative_weighted(coeffs.rho2()), z))

    if rho <= 0 or d_mu_rho <= 0:
        warnings.warn(f"state outside validity range: rho={rho:g}, "
                      f"d_mu_rho={d_mu_rho:g}")
    return ThermoState(potential=p, coeffs=coeffs, z=z, mu=mu, rho=rho,
                       beta_p=beta_p, omega2=omega2, d_mu_rho=d_mu_rho,
                       d_mu_omega2=d_mu_omega2, grad_u_rho=grad_u_rho,
                       trunc=trunc)


def pair_correlation(state: ThermoState) -> GridFunction:
    """rho2(x) = omega_2(x) + [rho^2] at the state's activity."""
    return GridFunction(state.spec, state.rho2_values())


def gas_phase_activity(p: PairPotential, trials: int = 400, seed: int = 0) -> float:
    """Certified gas-phase activity bound exp(beta * mu0) with sampled B."""
    B = stability_bound(p, trials=trials, seed=seed)
    mu0 = gas_phase_mu0(p, float(B))
    return float(np.exp(p.beta * mu0)) if np.isfinite(mu0) else np.inf


def solve_mu_star(p: PairPotential, rho_star: float,
                  trunc: ClusterTruncation | None = None, tol: float = 1e-12,
                  coeffs: ClusterCoefficients | None = None,
                  z_max: float | None = None) -> tuple[float, ThermoState]:
    """Unique chemical potential with rho(mu*, u) = rho_star (gas phase).

    Newton on the density polynomial, safeguarded by bisection inside
    [ideal-gas guess - 5/beta, mu0].  ``z_max`` overrides the certified
    gas-phase activity bound (callers that already sampled the stability
    constant can pass it in to avoid resampling).
    """
    trunc = trunc or ClusterTruncation()
    if not rho_star > 0:
        raise InfeasibleDensityError("rho_star must be positive")
    if p.hardcore_radius and rho_star >= 1.0 / p.hardcore_radius:
        raise InfeasibleDensityError(
            f"rho_star={rho_star:g} at or above the closest-packing density "
            f"{1.0 / p.hardcore_radius:g}")
    if coeffs is None:
        coeffs = expand(p, trunc)
    beta = p.beta
    if z_max is None:
        z_max = gas_phase_activity(p)
    if not np.isfinite(z_max):  # ideal gas: rho = z exactly
        z_max = max(10.0 * rho_star, 1.0)

    rho_hi = float(evaluate(coeffs.rho, z_max))
    if rho_star >= rho_hi:
        raise InfeasibleDensityError(
            f"rho_star={rho_star:g} outside the gas phase (rho(mu0)={rho_hi:g})")

    mu_hi = float(np.log(z_max)) / beta
    mu = float(np.log(rho_star)) / beta  # ideal-gas guess
    mu_lo = mu - 5.0 / beta
    while evaluate(coeffs.rho, np.exp(beta * mu_lo)) >= rho_star:
        mu_lo -= 5.0 / beta
        if mu_lo < -200:
            raise InfeasibleDensityError("could not bracket the target density")

    lo, hi = mu_lo, mu_hi
    for _ in range(50):
        z = float(np.exp(beta * mu))
        g = float(evaluate(coeffs.rho, z)) - rho_star
        if abs(g) <= tol * rho_star:
            state = forward(p, mu, trunc, coeffs=coeffs)
            return mu, state
        if g > 0:
            hi = mu
        else:
            lo = mu
        dg = beta * float(evaluate(derivative_weighted(coeffs.rho), z))
        step = g / dg if dg > 0 else None
        mu_new = mu - step if step is not None else 0.5 * (lo + hi)
        if not (lo < mu_new < hi):
            mu_new = 0.5 * (lo + hi)
        mu = mu_new
    raise ConvergenceError("mu* Newton did not converge in 50 steps")


def mu_star_derivative(state: ThermoState, v: GridFunction) -> float:
    """Directional derivative mu*'(u) v = -<v, grad_u rho> / d_mu rho."""
    if state.d_mu_rho <= 0:
        raise ConvergenceError("degenerate d_mu_rho <= 0")
    w = state.spec.trapezoid_weights
    return float(-(w * v.values) @ state.grad_u_rho.values / state.d_mu_rho)


# ---------------------------------------------------------------------------
# Kirkwood-Salsburg residual check

@dataclass(frozen=True)
class KSReport:
    """Sup-norm residuals of the first two Kirkwood-Salsburg equations."""

    z: float
    n_max: int
    m0_residual: float
    m1_residual: float
    window_halfwidth: float


def _kernel_triple_sum(spec, kern: np.ndarray, wf: np.ndarray, f: np.ndarray,
                       w: np.ndarray) -> float:
    """sum_{y1,y2,y3} w^3 f(y1) f(y2) f(y3) kern(y1 - y3, y2 - y3)."""
    m, c = spec.points, spec.center
    big = np.zeros((2 * m - 1, 2 * m - 1))
    big[c:c + m, c:c + m] = kern
    total = 0.0
    for t in range(m):
        if f[t] == 0.0:
            continue
        sub = big[2 * c - t:2 * c - t + m, 2 * c - t:2 * c - t + m]
        total += w[t] * f[t] * float(wf @ sub @ wf)
    return total


def ks_residual(p: PairPotential, mu: float, trunc: ClusterTruncation | None = None,
                interior_fraction: float = 0.5) -> KSReport:
    """Residuals of the m=0 and m=1 Kirkwood-Salsburg equations.

    The hierarchy right-hand sides are evaluated with the truncated
    correlation functions (orders <= n_max each), so both sides agree order
    by order through z^n_max and the residual measures the dropped
    O(z^(n_max+1)) tail plus quadrature.  The m=1 supremum runs over the
    interior window |x| <= interior_fraction * extent, where the finite
    grid does not clip the convolution windows.
    """
    trunc = trunc or ClusterTruncation()
    n_max = trunc.n_max
    coeffs = expand(p, trunc)
    spec = p.spec
    beta = p.beta
    z = float(np.exp(beta * mu))
    f = mayer(p).values
    w = spec.trapezoid_weights
    wf = w * f
    c_int = float(w @ f)

    rho = float(evaluate(coeffs.rho, z))
    w2v = evaluate(coeffs.w2, z)
    rho2v = evaluate(coeffs.rho2(), z)
    k3z = np.zeros((spec.points, spec.points))
    for order, kern in coeffs.k3.items():
        k3z = k3z + kern * z**order

    T = toeplitz_matrix(spec, f)
    quad_w2 = float(wf @ toeplitz_matrix(spec, w2v) @ wf)

    # ---- m = 0: rho = z * (1 + sum_{n<=n_max-1} (1/n!) int prod f rho^(n))
    bracket = 1.0
    bracket += c_int * rho                                      # n = 1
    if n_max >= 3:
        bracket += 0.5 * (c_int**2 * rho**2 + quad_w2)          # n = 2
    if n_max >= 4:
        t3 = _kernel_triple_sum(spec, k3z, wf, f, w)
        bracket += (1.0 / 6.0) * (c_int**3 * rho**3
                                  + 3.0 * c_int * rho * quad_w2 + t3)  # n = 3
    m0 = abs(rho - z * bracket)

    # ---- m = 1: rho2(x) = z b(x) [rho + int f(x-y) rho2(y) dy + (1/2) ...]
    b = p.boltzmann.values
    brak = np.full(spec.points, rho)
    brak += T @ (w * rho2v)                                     # n = 1
    if n_max >= 4:
        # n = 2 needs rho3(0, y1, y2) = omega3 + rho*(three omega2) + rho^3
        A = T @ w
        Tw = T * w
        term = rho**3 * A * A
        term += 2.0 * rho * A * (T @ (w * w2v))
        term += rho * np.einsum("ij,ij->i", Tw @ toeplitz_matrix(spec, w2v), Tw)
        term += np.einsum("ij,ij->i", Tw @ k3z, Tw)
        brak += 0.5 * term
    rhs_m1 = z * b * brak
    lhs_m1 = rho2v
    window = np.abs(spec.x) <= interior_fraction * spec.extent
    m1 = float(np.max(np.abs(lhs_m1 - rhs_m1)[window]))

    return KSReport(z=z, n_max=n_max, m0_residual=m0, m1_residual=m1,
                    window_halfwidth=interior_fraction * spec.extent)
