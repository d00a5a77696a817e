"""Independent ground truth: bounded-box quadrature, FD checks, Tonks gas.

Nothing here shares code with the cluster expansion; these routines exist
to validate it.  The box oracle integrates the grand-canonical partition
function and correlation functions directly with tensor Gauss-Legendre
quadrature for up to 5 particles.  The Tonks hard-rod gas provides closed
forms through the Lambert W function.  ``fd_check`` grades claimed
derivatives by the slope of the Taylor remainder.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import lambertw

from .potentials import PairPotential

__all__ = ["BoxSpec", "box_partition_function", "box_correlations",
           "fd_check", "FDReport", "tonks_reference", "TonksReference"]


@dataclass(frozen=True)
class BoxSpec:
    """Bounded box [-L/2, L/2] with a particle-number cap for quadrature."""

    L: float
    N_cap: int
    quad_points: int | None = None    # per dimension; default 64 (<=3 dims), 24 above

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("box length must be positive")
        if not 0 <= self.N_cap <= 5:
            raise ValueError("N_cap must be in 0..5")

    def nodes_weights(self, ndim: int):
        n = self.quad_points or (64 if ndim <= 3 else 24)
        t, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * self.L
        return half * t, half * w


def _boltzmann_lookup(p: PairPotential):
    """b(dx) by linear interpolation on |x|; 1 beyond the tabulated range."""
    spec = p.spec
    c = spec.center
    xs = spec.x[c:]
    bs = p.boltzmann.values[c:]

    def b_of(dx):
        return np.interp(np.abs(dx), xs, bs, right=1.0)

    return b_of


def _pair_product(b_of, coords: list[np.ndarray]) -> np.ndarray:
    """prod over pairs of b(x_i - x_j), broadcast over quadrature tensors."""
    out = 1.0
    for i, j in combinations(range(len(coords)), 2):
        out = out * b_of(coords[i] - coords[j])
    return np.asarray(out)


def box_partition_function(p: PairPotential, mu: float, box: BoxSpec) -> float:
    """Xi = sum_N exp(beta mu N)/N! * integral over the box of exp(-beta U)."""
    z = float(np.exp(p.beta * mu))
    b_of = _boltzmann_lookup(p)
    xi = 1.0
    fact = 1.0
    for n_particles in range(1, box.N_cap + 1):
        fact *= n_particles
        nodes, w = box.nodes_weights(n_particles)
        grids = np.meshgrid(*([nodes] * n_particles), indexing="ij", sparse=True)
        weight = 1.0
        for axis in range(n_particles):
            shape = [1] * n_particles
            shape[axis] = len(w)
            weight = weight * w.reshape(shape)
        integrand = _pair_product(b_of, list(grids)) * weight
        xi += z**n_particles / fact * float(np.sum(integrand))
        if not np.isfinite(xi):
            raise OverflowError("partition function overflow; reduce mu or N_cap")
    return xi


def box_correlations(p: PairPotential, mu: float, box: BoxSpec, m: int,
                     points) -> np.ndarray:
    """m-particle correlation of the finite box on the given evaluation points.

    ``points``: for m = 1 an array of positions x; for m >= 2 an array of
    shape (P, m) whose rows are position tuples.  Returns the P values

        rho_m(x_1..x_m) = Xi^-1 sum_{N>=m} z^N/(N-m)! *
                          integral exp(-beta U(x, y)) dy_{m+1..N}
    """
    if not 1 <= m <= 3:
        raise ValueError("m must be in 1..3")
    if box.N_cap < m:
        raise ValueError("N_cap smaller than the correlation order")
    z = float(np.exp(p.beta * mu))
    b_of = _boltzmann_lookup(p)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if m == 1 and pts.shape[0] == 1 and pts.shape[1] != 1:
        pts = pts.T
    if pts.shape[1] != m:
        raise ValueError(f"points must have {m} columns")
    n_pts = pts.shape[0]

    # fixed-coordinate pair factor
    fixed = np.ones(n_pts)
    for i, j in combinations(range(m), 2):
        fixed = fixed * b_of(pts[:, i] - pts[:, j])

    xi = box_partition_function(p, mu, box)
    total = np.zeros(n_pts)
    fact = 1.0
    for n_particles in range(m, box.N_cap + 1):
        k = n_particles - m
        if k == 0:
            total += z**n_particles * fixed
            continue
        fact = fact * k  # (N - m)!
        nodes, w = box.nodes_weights(k)
        grids = np.meshgrid(*([nodes] * k), indexing="ij", sparse=True)
        weight = 1.0
        for axis in range(k):
            shape = [1] * k
            shape[axis] = len(w)
            weight = weight * w.reshape(shape)
        inner = _pair_product(b_of, list(grids)) * weight  # (n,)*k tensor
        # couple every fixed coordinate to every integrated one
        contrib = np.empty(n_pts)
        for r in range(n_pts):
            cross = 1.0
            for i in range(m):
                for axis, g in enumerate(grids):
                    cross = cross * b_of(pts[r, i] - g)
            contrib[r] = float(np.sum(inner * cross))
        total += z**n_particles / fact * contrib
    return total / xi


# ---------------------------------------------------------------------------
# finite-difference derivative grading

@dataclass(frozen=True)
class FDReport:
    """Slope of the Taylor remainder |f(t) - f(0) - t*df| on a step ladder."""

    label: str
    passed: bool
    slope: float
    claimed_order: float
    errors: tuple
    steps: tuple
    central_estimates: tuple

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.label}: slope {self.slope:.3f} "
                f"(claimed order {self.claimed_order})")


def fd_check(label: str, f, df: float, t_ladder=(1e-2, 1e-3, 1e-4),
             claimed_order: float = 2.0, zero_tol: float = 1e-13) -> FDReport:
    """Grade a claimed derivative of the scalar map t -> f(t) at t = 0.

    PASS iff the log-log slope of the remainder is at least
    claimed_order - 0.1 (or the remainder is at machine zero).
    """
    f0 = f(0.0)
    errors = []
    central = []
    for t in t_ladder:
        fp, fm = f(t), f(-t)
        errors.append(abs(fp - f0 - t * df))
        central.append((fp - fm) / (2.0 * t))
    scale = max(abs(f0), 1.0)
    errors_arr = np.asarray(errors)
    if np.all(errors_arr <= zero_tol * scale):
        return FDReport(label, True, np.inf, claimed_order, tuple(errors),
                        tuple(t_ladder), tuple(central))
    logs = np.log(np.maximum(errors_arr, 1e-300))
    slope = float(np.polyfit(np.log(np.asarray(t_ladder)), logs, 1)[0])
    return FDReport(label, slope >= claimed_order - 0.1, slope, claimed_order,
                    tuple(errors), tuple(t_ladder), tuple(central))


# ---------------------------------------------------------------------------
# Tonks gas closed forms

@dataclass(frozen=True)
class TonksReference:
    beta_p: float
    rho: float
    z: float
    sigma: float


def tonks_reference(z: float | None = None, rho: float | None = None,
                    sigma: float = 1.0) -> TonksReference:
    """Exact hard-rod equation of state: z = beta_p * exp(beta_p * sigma).

    Supply exactly one of ``z`` (activity) or ``rho`` (density with
    rho * sigma < 1); the other quantities follow from the Lambert W
    function and beta_p = rho / (1 - rho * sigma).
    """
    if (z is None) == (rho is None):
        raise ValueError("supply exactly one of z or rho")
    if z is not None:
        if not z > 0:
            raise ValueError("z must be positive")
        beta_p = float(lambertw(sigma * z).real) / sigma
        rho_out = beta_p / (1.0 + beta_p * sigma)
        return TonksReference(beta_p=beta_p, rho=rho_out, z=z, sigma=sigma)
    if not 0 < rho * sigma < 1:
        raise ValueError("need 0 < rho*sigma < 1")
    beta_p = rho / (1.0 - rho * sigma)
    z_out = beta_p * float(np.exp(beta_p * sigma))
    return TonksReference(beta_p=beta_p, rho=rho, z=z_out, sigma=sigma)
