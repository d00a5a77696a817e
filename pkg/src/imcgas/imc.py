"""Damped, Tikhonov-regularized Newton iteration on the entropy functional.

One outer step solves the regularized normal equation

    (-F'(u_k) + lambda I) v_k = F(u_k) - rho2_target

by conjugate gradients on the symmetric positive semidefinite operator
-F'(u_k) + lambda I (trapezoid inner product), then updates
u_{k+1} = u_k + s_k v_k with backtracking on sup|grad Phi|.  At lambda = 0
and exact solves this is one iteration of the inverse Monte Carlo scheme.
Regularization is always on by default: semidefiniteness of -F' is proven,
injectivity is not.  Since v_k = 0 whenever the residual vanishes, lambda
does not bias the fixed point, it only damps the step.

Hard cores of the starting potential are frozen: the update is masked to
the region where the Boltzmann factor is positive.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .cluster import ClusterTruncation
from .entropy import FPrimeOperator, Target, jacobian_kernels
from .exceptions import ConvergenceError, InfeasibleDensityError
from .grid import GridFunction
from .potentials import PairPotential, v_norm, with_tail
from .thermo import ThermoState, gas_phase_activity, solve_mu_star

__all__ = ["IMCConfig", "IMCIterate", "IMCResult", "newton_step", "run_imc"]

log = logging.getLogger("imcgas.imc")


@dataclass(frozen=True)
class IMCConfig:
    """Solver controls for the inverse iteration."""

    max_iters: int = 25
    grad_tol: float = 1e-6
    lambda0: float | None = None      # default: 1e-3 * mean diagonal of -F'
    lambda_decay: float = 0.5
    damping: float = 1.0              # initial step length
    backtrack: float = 0.5
    max_backtracks: int = 10
    cg_tol: float = 1e-10
    cg_max: int = 400
    trunc: ClusterTruncation = field(default_factory=ClusterTruncation)
    mu_tol: float = 1e-12

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.lambda0 is not None and self.lambda0 < 0:
            raise ValueError("lambda0 must be nonnegative")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must be in (0, 1]")


@dataclass(eq=False)
class IMCIterate:
    """Record of one accepted inverse-iteration step."""

    index: int
    potential: PairPotential
    mu_star: float
    grad_norm: float
    residual_norm: float
    step_len: float
    lambda_k: float
    v_norm_update: float
    cg_iters: int
    seconds: float

    def as_dict(self) -> dict:
        return {"iter": self.index, "mu_star": self.mu_star,
                "grad_norm": self.grad_norm, "residual_norm": self.residual_norm,
                "step_len": self.step_len, "lambda": self.lambda_k,
                "v_norm_update": self.v_norm_update, "cg_iters": self.cg_iters,
                "seconds": round(self.seconds, 4)}


@dataclass(eq=False)
class IMCResult:
    """Outcome of an inverse run: accepted iterates and the final potential."""

    iterates: list[IMCIterate]
    potential: PairPotential
    converged: bool
    grad_norm: float
    mu_star: float

    @property
    def n_iter(self) -> int:
        return len(self.iterates)


def _cg(op, lam: float, rhs: np.ndarray, weights: np.ndarray,
        tol: float, max_iter: int):
    """CG for (-F' + lam I) v = rhs in the weighted inner product."""

    def inner(a, b):
        return float((weights * a) @ b)

    def matvec(v):
        return -op(v) + lam * v

    v = np.zeros_like(rhs)
    r = rhs.copy()
    d = r.copy()
    rr = inner(r, r)
    rr0 = rr
    if rr0 == 0.0:
        return v, 0, 0.0
    for k in range(1, max_iter + 1):
        ad = matvec(d)
        dad = inner(d, ad)
        if dad <= 0:
            break  # semidefinite direction; lambda escalation will handle it
        alpha = rr / dad
        v = v + alpha * d
        r = r - alpha * ad
        rr_new = inner(r, r)
        if np.sqrt(rr_new / rr0) < tol:
            return v, k, float(np.sqrt(rr_new / rr0))
        d = r + (rr_new / rr) * d
        rr = rr_new
    return v, max_iter, float(np.sqrt(rr / rr0))


def newton_step(state: ThermoState, kernels, target: Target, cfg: IMCConfig,
                lam: float | None = None) -> tuple[GridFunction, dict]:
    """Solve (-F' + lambda I) v = F(u) - rho2_target by conjugate gradients.

    On CG stagnation the regularization is increased tenfold and the solve
    retried, up to 5 escalations.
    """
    op = FPrimeOperator(state, kernels)
    rhs = state.rho2_values() - target.rho2_star.values
    w = state.spec.trapezoid_weights
    if lam is None:
        lam = cfg.lambda0 if cfg.lambda0 is not None else \
            1e-3 * state.beta * float(np.mean(np.abs(op.diag)))
    escalations = 0
    while True:
        v, iters, rel = _cg(op, lam, rhs, w, cfg.cg_tol, cfg.cg_max)
        if rel < cfg.cg_tol or iters < cfg.cg_max:
            break
        escalations += 1
        if escalations > 5:
            raise ConvergenceError(
                f"CG stagnated after 5 regularization escalations (rel={rel:g})")
        lam *= 10.0
    v = 0.5 * (v + v[::-1])  # updates are even; remove roundoff drift
    diag = {"lambda": lam, "cg_iters": iters, "cg_rel_residual": rel,
            "escalations": escalations}
    return GridFunction(state.spec, v), diag


def run_imc(p0: PairPotential, target: Target, cfg: IMCConfig | None = None,
            callback=None) -> IMCResult:
    """Inverse iteration from p0 towards the potential reproducing the target.

    Accepted steps strictly decrease sup|grad Phi|; the run stops when the
    gradient tolerance is met, the iteration budget is exhausted, or no
    acceptable step length remains.  The returned result carries every
    accepted iterate (with its potential snapshot) and the final potential.
    """
    cfg = cfg or IMCConfig()
    p = p0
    mask = p0.finite_mask()
    z_max = gas_phase_activity(p0)

    try:
        mu_star, state = solve_mu_star(p, target.rho_star, cfg.trunc,
                                       tol=cfg.mu_tol, z_max=z_max)
    except InfeasibleDensityError:
        raise
    grad = 0.5 * (target.rho2_star.values - state.rho2_values())
    grad_norm = float(np.abs(grad).max())

    iterates: list[IMCIterate] = []
    lam = cfg.lambda0
    converged = grad_norm < cfg.grad_tol
    for k in range(1, cfg.max_iters + 1):
        if converged:
            break
        t0 = time.perf_counter()
        kernels = jacobian_kernels(state)
        v, diag = newton_step(state, kernels, target, cfg, lam=lam)
        lam = diag["lambda"]
        v_vals = v.values * mask  # hard-core freeze

        s = cfg.damping
        accepted = False
        for _ in range(cfg.max_backtracks):
            step = GridFunction(p.spec, s * v_vals)
            p_try = with_tail(p, step)
            try:
                mu_try, state_try = solve_mu_star(p_try, target.rho_star,
                                                  cfg.trunc, tol=cfg.mu_tol,
                                                  z_max=z_max)
            except InfeasibleDensityError:
                s *= cfg.backtrack
                continue
            grad_try = 0.5 * (target.rho2_star.values - state_try.rho2_values())
            grad_try_norm = float(np.abs(grad_try).max())
            if grad_try_norm < grad_norm:
                accepted = True
                break
            s *= cfg.backtrack
        if not accepted:
            log.warning("no acceptable step at iteration %d (grad %.3e)",
                        k, grad_norm)
            break

        p, state, mu_star = p_try, state_try, mu_try
        grad, grad_norm = grad_try, grad_try_norm
        residual_norm = 2.0 * grad_norm
        it = IMCIterate(index=k, potential=p, mu_star=mu_star,
                        grad_norm=grad_norm, residual_norm=residual_norm,
                        step_len=s, lambda_k=lam,
                        v_norm_update=v_norm(GridFunction(p.spec, s * v_vals),
                                             p0.majorant),
                        cg_iters=diag["cg_iters"],
                        seconds=time.perf_counter() - t0)
        iterates.append(it)
        if callback is not None:
            callback(it)
        converged = grad_norm < cfg.grad_tol
        lam = lam * cfg.lambda_decay if lam is not None else None

    return IMCResult(iterates=iterates, potential=p, converged=converged,
                     grad_norm=grad_norm, mu_star=mu_star)
