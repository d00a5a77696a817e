"""Pair potentials stored as Boltzmann factors, norms and gas-phase bounds.

A potential is represented by b(x) = exp(-beta*u(x)) on the grid, which is
finite even across a hard core (b = 0 there).  At a jump discontinuity that
falls exactly on a node (e.g. the edge of a hard rod) the stored value is
the jump midpoint, which keeps trapezoid integrals of b and of the Mayer
function exact for piecewise-constant potentials.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import GridMismatchError
from .grid import GridFunction, GridSpec, integrate

__all__ = ["Majorant", "PairPotential", "hard_rod", "lj_type", "from_u_values",
           "tabulated", "with_tail", "mayer", "v_norm", "stability_bound",
           "gas_phase_mu0", "pmf_initial_guess"]


@dataclass(frozen=True)
class Majorant:
    """Decay envelope psi0(r) = C * (1 + r^2)^(-alpha/2) with alpha > 1."""

    C: float
    alpha: float

    def __post_init__(self):
        if not self.C > 0:
            raise ValueError("majorant amplitude C must be positive")
        if not self.alpha > 1:
            raise ValueError("majorant exponent alpha must exceed the dimension (1)")

    def __call__(self, r: np.ndarray | float) -> np.ndarray | float:
        return self.C * (1.0 + np.asarray(r, dtype=float) ** 2) ** (-self.alpha / 2.0)


@dataclass(frozen=True, eq=False)
class PairPotential:
    """Even pair potential at fixed inverse temperature, as a Boltzmann factor."""

    beta: float
    boltzmann: GridFunction
    majorant: Majorant
    hardcore_radius: float | None = None
    core_divergence: str = ""

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        b = self.boltzmann.values
        if np.any(b < 0):
            raise ValueError("Boltzmann factor must be nonnegative")
        self.boltzmann.require_even()
        if self.hardcore_radius is not None:
            x = self.boltzmann.spec.x
            inside = np.abs(x) < self.hardcore_radius - 1e-12
            if np.any(b[inside] != 0.0):
                raise ValueError("Boltzmann factor must vanish inside the hard core")

    @property
    def spec(self) -> GridSpec:
        return self.boltzmann.spec

    def u_values(self) -> np.ndarray:
        """Potential values; +inf wherever b = 0."""
        b = self.boltzmann.values
        with np.errstate(divide="ignore"):
            return np.where(b > 0, -np.log(np.where(b > 0, b, 1.0)) / self.beta, np.inf)

    def finite_mask(self) -> np.ndarray:
        return self.boltzmann.values > 0


def mayer(p: PairPotential, grid: GridSpec | None = None) -> GridFunction:
    """Mayer function f(x) = exp(-beta*u(x)) - 1 = b(x) - 1."""
    if grid is not None and grid != p.spec:
        raise GridMismatchError(f"potential lives on {p.spec}, not {grid}")
    return GridFunction(p.spec, p.boltzmann.values - 1.0)


def v_norm(v: GridFunction, m: Majorant) -> float:
    """Weighted sup norm sup_x |v(x)| / psi0(|x|) over the grid nodes."""
    v.require_even()
    return float(np.max(np.abs(v.values) / m(np.abs(v.spec.x))))


# ---------------------------------------------------------------------------
# constructors

def hard_rod(grid: GridSpec, sigma: float, beta: float = 1.0,
             majorant: Majorant | None = None) -> PairPotential:
    """Hard rod of diameter sigma: u = +inf for |x| < sigma, 0 outside."""
    if not 0 < sigma < grid.extent:
        raise ValueError("sigma must lie inside the grid")
    x = grid.x
    b = np.where(np.abs(x) < sigma, 0.0, 1.0)
    # jump midpoint if sigma falls exactly on a node
    on_edge = np.abs(np.abs(x) - sigma) < 1e-12
    b[on_edge] = 0.5
    maj = majorant or Majorant(C=1.0, alpha=6.0)
    return PairPotential(beta=beta, boltzmann=GridFunction(grid, b), majorant=maj,
                         hardcore_radius=sigma, core_divergence="hard core")


def lj_type(grid: GridSpec, epsilon: float, sigma: float, alpha: float = 6.0,
            beta: float = 1.0) -> PairPotential:
    """12-6 potential u = 4*eps*((sigma/x)^12 - (sigma/x)^6), b(0) = 0."""
    x = np.abs(grid.x)
    with np.errstate(divide="ignore", over="ignore"):
        sr6 = np.where(x > 0, (sigma / np.where(x > 0, x, 1.0)) ** 6, np.inf)
        u = 4.0 * epsilon * (sr6**2 - sr6)
        b = np.where(np.isfinite(u), np.exp(-beta * np.minimum(u, 700.0 / beta)), 0.0)
    b[x == 0] = 0.0
    maj = Majorant(C=32.0 * epsilon * sigma**6, alpha=alpha)
    return PairPotential(beta=beta, boltzmann=GridFunction(grid, b), majorant=maj,
                         core_divergence="r^-12")


def from_u_values(grid: GridSpec, u: np.ndarray, beta: float = 1.0,
                  majorant: Majorant | None = None,
                  hardcore_radius: float | None = None) -> PairPotential:
    """Potential from tabulated u values (+inf allowed for hard cores)."""
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore"):
        b = np.where(np.isposinf(u), 0.0, np.exp(-beta * np.minimum(u, 700.0 / beta)))
    b = 0.5 * (b + b[::-1])  # enforce evenness exactly
    maj = majorant or Majorant(C=max(1.0, float(np.max(np.abs(
        np.where(np.isfinite(u), u, 0.0))))), alpha=6.0)
    return PairPotential(beta=beta, boltzmann=GridFunction(grid, b), majorant=maj,
                         hardcore_radius=hardcore_radius,
                         core_divergence="tabulated")


def tabulated(grid: GridSpec, xs: np.ndarray, us: np.ndarray, beta: float = 1.0,
              majorant: Majorant | None = None) -> PairPotential:
    """Interpolate a two-column (x, u) table onto the grid.

    Tables may cover only x >= 0; they are mirrored.  Values outside the
    tabulated range are taken as 0 (the potential has decayed).
    """
    xs = np.asarray(xs, dtype=float)
    us = np.asarray(us, dtype=float)
    if np.any(np.diff(xs) <= 0):
        raise ValueError("table abscissae must be strictly ascending")
    if xs[0] >= 0.0:
        xs = np.concatenate([-xs[::-1], xs])
        us = np.concatenate([us[::-1], us])
    finite = np.isfinite(us)
    u_grid = np.interp(grid.x, xs[finite], us[finite], left=0.0, right=0.0)
    # propagate +inf core samples to the enclosed grid nodes
    if np.any(~finite):
        core_hi = np.max(np.abs(xs[~finite]))
        u_grid[np.abs(grid.x) <= core_hi] = np.inf
    return from_u_values(grid, u_grid, beta=beta, majorant=majorant)


def with_tail(p: PairPotential, tail: GridFunction) -> PairPotential:
    """Add a bounded even tail to a potential: b <- b * exp(-beta*tail)."""
    tail.require_even()
    b = p.boltzmann.values * np.exp(-p.beta * tail.values)
    return PairPotential(beta=p.beta, boltzmann=GridFunction(p.spec, b),
                         majorant=p.majorant, hardcore_radius=p.hardcore_radius,
                         core_divergence=p.core_divergence)


# ---------------------------------------------------------------------------
# stability and gas-phase bounds

@dataclass(frozen=True)
class StabilityBound:
    """Sampled lower-bound constant B with U >= -B*N over all probes."""

    value: float
    n_max: int
    trials: int
    seed: int
    warning: bool = False

    def __float__(self):
        return self.value


def _config_energy(u_of_dx, xs: np.ndarray) -> float:
    n = len(xs)
    e = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            e += u_of_dx(xs[i] - xs[j])
    return e


def stability_bound(p: PairPotential, n_max: int = 4, trials: int = 2000,
                    seed: int = 0) -> StabilityBound:
    """Estimate B with U(config) >= -B*N by random + structured search.

    Nonnegative potentials return B = 0 exactly.  The estimate is a sampled
    bound, not a proof; the metadata records how it was obtained.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    b = p.boltzmann.values
    if np.all(b <= 1.0 + 1e-15):  # u >= 0 everywhere
        return StabilityBound(0.0, n_max, trials, seed)

    grid = p.spec
    u_grid = p.u_values()

    def u_of_dx(dx):
        # nearest-node lookup, +inf inside cores, 0 beyond the grid
        k = int(round((dx + grid.extent) / grid.h))
        if not (0 <= k < grid.points):
            return 0.0
        return u_grid[k]

    rng = np.random.default_rng(seed)
    # search window: a few interaction ranges around the origin
    span = min(grid.extent, 6.0 * max(1.0, p.hardcore_radius or 1.0))
    worst_by_n = {}
    for n in range(2, n_max + 1):
        worst = 0.0
        # structured probe: equally spaced at the u-minimum distance
        finite = np.isfinite(u_grid)
        if np.any(finite):
            x_min = grid.x[finite][np.argmin(u_grid[finite])]
            d = abs(x_min) if abs(x_min) > grid.h else grid.h
            e = _config_energy(u_of_dx, np.arange(n) * d)
            if np.isfinite(e):
                worst = max(worst, -e / n)
        for _ in range(trials // (n_max - 1)):
            xs = rng.uniform(-span, span, size=n)
            e = _config_energy(u_of_dx, xs)
            if np.isfinite(e):
                worst = max(worst, -e / n)
        worst_by_n[n] = worst
    value = max(worst_by_n.values())
    # for a stable potential the sampled -U/N saturates in n; sustained strong
    # growth suggests collapse and the returned B is only the observed bound
    vals = [worst_by_n[n] for n in range(2, n_max + 1)]
    unstable = (len(vals) >= 3 and vals[0] > 0
                and all(b > a * 1.001 for a, b in zip(vals, vals[1:]))
                and vals[-1] - vals[-2] > 0.8 * (vals[1] - vals[0]) > 0
                and vals[-1] > 2.0 * vals[0])
    if unstable:
        warnings.warn("stability_bound: per-particle energy keeps dropping as n "
                      "grows; potential may be unstable, B is only a sampled bound")
    return StabilityBound(float(max(value, 0.0)), n_max, trials, seed,
                          warning=unstable)


def gas_phase_mu0(p: PairPotential, B: float) -> float:
    """Gas-phase threshold mu0 = (1/beta) * log(1 / (c_beta * e^(2*beta*B + 1)))."""
    c_beta = integrate(GridFunction(p.spec, np.abs(mayer(p).values)))
    if c_beta == 0.0:
        return np.inf
    return float(-(np.log(c_beta) + 2.0 * p.beta * float(B) + 1.0) / p.beta)


# ---------------------------------------------------------------------------
# inversion initial guess

def pmf_initial_guess(rho2_target: GridFunction, rho_star: float, beta: float = 1.0,
                      floor: float = 1e-12, majorant: Majorant | None = None,
                      negative_tol: float = 1e-6) -> PairPotential:
    """Potential of mean force u0 = -(1/beta) log(max(rho2/rho*^2, floor)).

    Nodes where the ratio falls below ``floor`` are marked as hard core.
    Small negative target values (below ``negative_tol * rho*^2`` in
    magnitude) are tolerated and clamped to the floor; anything more
    negative is rejected as invalid data.
    """
    if not rho_star > 0:
        raise ValueError("rho_star must be positive")
    vals = rho2_target.values
    scale = rho_star**2
    if np.any(vals < -negative_tol * scale):
        raise ValueError("rho2_target is negative beyond tolerance")
    ratio = np.maximum(vals, 0.0) / scale
    core = ratio < floor
    b = np.where(core, 0.0, ratio)
    b = 0.5 * (b + b[::-1])
    core_radius = None
    if core.any() and core[rho2_target.spec.center]:
        # contiguous core around the origin
        x = rho2_target.spec.x
        outside = np.where(~core & (x >= 0))[0]
        if len(outside):
            core_radius = float(x[outside[0]]) - 0.5 * rho2_target.spec.h
    maj = majorant or Majorant(C=1.0, alpha=6.0)
    return PairPotential(beta=beta, boltzmann=GridFunction(rho2_target.spec, b),
                         majorant=maj, hardcore_radius=core_radius,
                         core_divergence="pmf guess")
