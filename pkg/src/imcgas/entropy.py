"""Relative entropy functional, its gradient, and the Henderson map Jacobian.

The functional (up to an unknown additive constant from the specific
entropy of the target)

    Phi(u) = p(mu*(u), u) - mu*(u) rho* + E(u, target)

is evaluated on the truncated activity series.  Its gradient is
(rho2_target - F(u))/2 with the Henderson map F(u) = [omega_2 + rho^2] at
the constrained activity, products re-truncated at the expansion order.
With that convention the chain of derivative identities closes exactly for
the discrete model: the Jacobian applied here is the exact Frechet
derivative of the truncated map (verified by finite differences in the
tests) and is symmetric to machine precision.

The Jacobian apply is organized in the five-term form (diagonal,
convolutions, rank-one from the density constraint, cubic kernel, quartic
kernel) plus the scalar cross terms that carry the density-series products;
in the untruncated limit those cross terms are absorbed into the rank-one
term, recovering the familiar expression with d_mu omega_2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cluster import ClusterTruncation
from .exceptions import GridMismatchError, InfiniteEnergyError
from .grid import GridFunction, GridSpec, Kernel2D, convolve_values
from .potentials import Majorant, PairPotential
from .series import derivative_weighted, evaluate, truncated_product
from .thermo import ThermoState, pair_correlation, solve_mu_star

__all__ = ["Target", "EntropyEval", "interaction_energy", "phi", "grad_phi",
           "henderson_F", "jacobian_kernels", "FPrimeOperator", "apply_F_prime",
           "hessian_form", "probe_vectors"]

CORE_TOL_FACTOR = 1e-10


@dataclass(frozen=True, eq=False)
class Target:
    """Inversion data: density and pair correlation of the target ensemble."""

    rho_star: float
    rho2_star: GridFunction

    def __post_init__(self):
        if not self.rho_star > 0:
            raise ValueError("rho_star must be positive")
        self.rho2_star.require_even(tol=1e-6)
        if np.any(self.rho2_star.values < -1e-6 * self.rho_star**2):
            raise ValueError("rho2_star is negative beyond tolerance")


@dataclass(eq=False)
class EntropyEval:
    """Value and gradient of the relative entropy functional at one potential."""

    phi: float
    grad: GridFunction
    mu_star: float
    state: ThermoState


def interaction_energy(p: PairPotential, t: Target,
                       core_tol_factor: float = CORE_TOL_FACTOR) -> float:
    """E(u, target) = (1/2) integral u(x) rho2_target(x) dx.

    Inside a hard core (b = 0) the integrand is 0 * inf; that is resolved to
    0 only when the target correlation vanishes there (below
    core_tol_factor * rho*^2), otherwise the energy is infinite.
    """
    if p.spec != t.rho2_star.spec:
        raise GridMismatchError("target and potential live on different grids")
    b = p.boltzmann.values
    rho2 = t.rho2_star.values
    core = b == 0.0
    core_tol = core_tol_factor * t.rho_star**2
    if np.any(core & (np.abs(rho2) >= core_tol)):
        raise InfiniteEnergyError(
            "target pair correlation does not vanish inside the hard core")
    w = p.spec.trapezoid_weights
    mask = ~core
    u = -np.log(b[mask]) / p.beta
    return 0.5 * float((w[mask] * u) @ rho2[mask])


def henderson_F(p: PairPotential, rho_star: float,
                trunc: ClusterTruncation | None = None,
                z_max: float | None = None) -> GridFunction:
    """Henderson map F(u): the pair correlation at the density-matched mu*."""
    _, state = solve_mu_star(p, rho_star, trunc, z_max=z_max)
    return pair_correlation(state)


def grad_phi(p: PairPotential, t: Target, trunc: ClusterTruncation | None = None,
             state: ThermoState | None = None,
             z_max: float | None = None) -> GridFunction:
    """grad Phi(u) = (rho2_target - F(u)) / 2."""
    if state is None:
        _, state = solve_mu_star(p, t.rho_star, trunc, z_max=z_max)
    vals = 0.5 * (t.rho2_star.values - state.rho2_values())
    return GridFunction(p.spec, vals)


def phi(p: PairPotential, t: Target, trunc: ClusterTruncation | None = None,
        z_max: float | None = None) -> EntropyEval:
    """Relative entropy functional (up to the constant specific-entropy offset)."""
    mu_star, state = solve_mu_star(p, t.rho_star, trunc, z_max=z_max)
    e_int = interaction_energy(p, t)
    value = state.beta_p / p.beta - mu_star * t.rho_star + e_int
    grad = grad_phi(p, t, trunc, state=state)
    return EntropyEval(phi=value, grad=grad, mu_star=mu_star, state=state)


# ---------------------------------------------------------------------------
# Jacobian of the Henderson map

def jacobian_kernels(state: ThermoState) -> tuple[Kernel2D, Kernel2D]:
    """(omega_3(x,0,x'), K4(x,x')) kernels at the state's activity."""
    coeffs = state.coeffs
    m = state.spec.points
    z = state.z
    k3 = np.zeros((m, m))
    for n, kern in coeffs.k3.items():
        k3 = k3 + kern * z**n
    k4 = coeffs.k4 * z**4 if coeffs.n_max >= 4 else np.zeros((m, m))
    return Kernel2D(state.spec, k3), Kernel2D(state.spec, k4)


class FPrimeOperator:
    """Matrix-free apply of F'(u), the Jacobian of the Henderson map.

    Exact derivative of the truncated forward model; selfadjoint negative
    semidefinite with respect to the trapezoid inner product.
    """

    def __init__(self, state: ThermoState, kernels: tuple[Kernel2D, Kernel2D]):
        omega3, k4 = kernels
        if omega3.spec != state.spec or k4.spec != state.spec:
            raise GridMismatchError("kernel grids do not match the state")
        coeffs = state.coeffs
        z, beta = state.z, state.beta
        spec = state.spec
        self.spec = spec
        self.beta = beta
        self.w = spec.trapezoid_weights
        self.k3 = omega3.values
        self.k4 = k4.values

        rho_s = coeffs.rho
        w2_s = coeffs.w2
        rho2_s = coeffs.rho2()
        n = np.arange(coeffs.n_max + 1, dtype=float)

        self.diag = evaluate(rho2_s, z)                      # [rho2](x)
        self.dmu_rho = beta * float(evaluate(derivative_weighted(rho_s), z))
        # rank-one vector: grad_u rho = -(beta/2) d/dmu [rho2]
        self.gur = -(beta / 2.0) * evaluate(derivative_weighted(rho2_s), z)

        self.gb = evaluate(truncated_product(rho_s, w2_s), z)        # [rho*w2](x)
        # [w2 * w2] convolution-product series
        gc = np.zeros(spec.points)
        for i in range(2, coeffs.n_max + 1):
            for j in range(2, coeffs.n_max + 1 - i):
                gc = gc + convolve_values(spec, w2_s[i], w2_s[j]) * z**(i + j)
        self.gc = gc

        jrow = (n - 2.0)[:, None] * w2_s                      # int omega3 row series
        self.rj = evaluate(truncated_product(rho_s, jrow), z) # [rho*Jrow](x)
        rho_sq = truncated_product(rho_s, rho_s)
        self.r3 = float(evaluate(truncated_product(rho_s, rho_sq), z))
        c2 = (n - 1.0) * rho_s                                # int omega2 series
        self.q22 = float(evaluate(truncated_product(rho_sq, c2), z))

    def __call__(self, v: np.ndarray) -> np.ndarray:
        w, beta = self.w, self.beta
        s1 = float(w @ v)
        wv = w * v
        out = -beta * self.diag * v
        out = out - 2.0 * beta * convolve_values(self.spec, self.gb, v)
        out = out - beta * convolve_values(self.spec, self.gc, v)
        out = out + (2.0 / self.dmu_rho) * self.gur * float(self.gur @ wv)
        out = out - 2.0 * beta * (self.k3 @ wv)
        out = out - 0.5 * beta * (self.k4 @ wv)
        # scalar cross terms from the density-series products
        out = out - 2.0 * beta * (self.gb * s1 + float(self.gb @ wv) + self.r3 * s1)
        out = out - 0.5 * beta * (4.0 * self.q22 * s1 + 2.0 * self.rj * s1
                                  + 2.0 * float(self.rj @ wv))
        return out

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float((self.w * a) @ b)


def apply_F_prime(state: ThermoState, kernels: tuple[Kernel2D, Kernel2D],
                  v: GridFunction) -> GridFunction:
    """F'(u) v for a single direction; build FPrimeOperator for repeated use."""
    if v.spec != state.spec:
        raise GridMismatchError("direction lives on a different grid")
    op = FPrimeOperator(state, kernels)
    return GridFunction(state.spec, op(v.values))


def hessian_form(state: ThermoState, kernels: tuple[Kernel2D, Kernel2D],
                 v: GridFunction, w: GridFunction, path: str = "fprime") -> float:
    """Hessian bilinear form Phi''(u)(v, w).

    path="fprime": -(1/2) <w, F'(u) v>.
    path="direct": the constrained-derivative expression
    -(1/(d_mu rho)) (d_u rho v)(d_u rho w) - (1/2) <v, d_u rho2 w>, with
    d_mu rho and grad_u rho recomputed from their integral representations
    (density + integral of omega_2; pair correlation + omega_3 rows).  The
    two paths test the discrete derivative-identity web against each other.
    """
    op = FPrimeOperator(state, kernels)
    if path == "fprime":
        return -0.5 * op.inner(w.values, op(v.values))
    if path != "direct":
        raise ValueError(f"unknown path {path!r}")
    coeffs = state.coeffs
    z, beta = state.z, state.beta
    n = np.arange(coeffs.n_max + 1, dtype=float)
    rho_s = coeffs.rho
    c2 = (n - 1.0) * rho_s
    # d_mu rho via the identity beta*(rho + int omega2)
    dmu_rho = beta * (float(evaluate(rho_s, z)) + float(evaluate(c2, z)))
    # grad_u rho via -beta*rho2 - (beta/2) int omega3 rows - beta*rho*int omega2
    jrow = (n - 2.0)[:, None] * coeffs.w2
    nr = (-beta * evaluate(coeffs.rho2(), z)
          - 0.5 * beta * evaluate(jrow, z)
          - beta * float(evaluate(truncated_product(rho_s, c2), z)))
    wq = state.spec.trapezoid_weights
    du_v = float((wq * v.values) @ nr)
    du_w = float((wq * w.values) @ nr)
    # d_u rho2 w = F' w minus the constraint rank-one
    fw = op(w.values)
    fw_unconstrained = fw - (2.0 / op.dmu_rho) * op.gur * float(op.gur @ (wq * w.values))
    return (-du_v * du_w / dmu_rho
            - 0.5 * float((wq * v.values) @ fw_unconstrained))


def probe_vectors(spec: GridSpec, majorant: Majorant, count: int,
                  seed: int = 42, modes: int = 6) -> list[GridFunction]:
    """Seeded even perturbations, decaying like the majorant, zero at +-extent."""
    rng = np.random.default_rng(seed)
    x = spec.x
    psi = majorant(np.abs(x))
    window = 1.0 - (x / spec.extent) ** 2
    out = []
    for _ in range(count):
        coefs = rng.normal(size=modes)
        osc = sum(c * np.cos(np.pi * (k + 1) * x / spec.extent)
                  for k, c in enumerate(coefs))
        v = psi * window * osc
        v = 0.5 * (v + v[::-1])
        peak = np.abs(v).max()
        if peak > 0:
            v = v / peak
        out.append(GridFunction(spec, v))
    return out
