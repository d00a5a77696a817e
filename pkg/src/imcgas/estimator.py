"""Scikit-learn style front end for the pair-potential inversion.

``HendersonInverter`` wraps the inverse iteration behind the familiar
``fit`` / ``predict`` / ``get_params`` surface so the solver composes with
pipelines and model-selection tooling.  X is a two-column array
``(x, rho2(x))`` sampling the target pair correlation function; ``fit``
recovers the pair potential at the configured density.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .cluster import ClusterTruncation
from .entropy import Target
from .grid import GridFunction, GridSpec
from .imc import IMCConfig, run_imc
from .io import grid_function_from_table
from .potentials import Majorant, pmf_initial_guess

__all__ = ["HendersonInverter"]


class HendersonInverter(BaseEstimator):
    """Recover a pair potential from a sampled pair correlation function.

    Parameters mirror the solver configuration; all are plain values so
    ``get_params`` / ``set_params`` and ``clone`` behave as usual.

    Attributes set by ``fit``: ``potential_`` (the recovered potential),
    ``u_`` (its finite values, +inf inside hard cores), ``x_`` (grid nodes),
    ``n_iter_``, ``converged_``, ``grad_norm_``, ``mu_star_``,
    ``iterates_`` (per-step diagnostics).
    """

    def __init__(self, rho_star: float = 0.05, beta: float = 1.0,
                 extent: float = 10.0, points: int = 321, n_max: int = 4,
                 max_iters: int = 25, grad_tol: float = 1e-8,
                 lambda0: float | None = None, lambda_decay: float = 0.3,
                 damping: float = 1.0, cg_tol: float = 1e-12, cg_max: int = 800,
                 pmf_floor: float = 1e-12, majorant_C: float = 2.4,
                 majorant_alpha: float = 6.0):
        self.rho_star = rho_star
        self.beta = beta
        self.extent = extent
        self.points = points
        self.n_max = n_max
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.lambda0 = lambda0
        self.lambda_decay = lambda_decay
        self.damping = damping
        self.cg_tol = cg_tol
        self.cg_max = cg_max
        self.pmf_floor = pmf_floor
        self.majorant_C = majorant_C
        self.majorant_alpha = majorant_alpha

    def _spec(self) -> GridSpec:
        return GridSpec(extent=self.extent, points=self.points)

    def _target_from_X(self, X) -> Target:
        X = check_array(X, ensure_min_features=2)
        if X.shape[1] != 2:
            raise ValueError("X must have two columns: x and rho2(x)")
        spec = self._spec()
        rho2 = grid_function_from_table(spec, X[:, 0], X[:, 1])
        return Target(rho_star=self.rho_star, rho2_star=rho2)

    def fit(self, X, y=None):
        """Run the inverse iteration against the sampled target rdf in X."""
        target = self._target_from_X(X)
        majorant = Majorant(C=self.majorant_C, alpha=self.majorant_alpha)
        p0 = pmf_initial_guess(target.rho2_star, self.rho_star, beta=self.beta,
                               floor=self.pmf_floor, majorant=majorant)
        cfg = IMCConfig(max_iters=self.max_iters, grad_tol=self.grad_tol,
                        lambda0=self.lambda0, lambda_decay=self.lambda_decay,
                        damping=self.damping, cg_tol=self.cg_tol,
                        cg_max=self.cg_max,
                        trunc=ClusterTruncation(self.n_max))
        result = run_imc(p0, target, cfg)
        self.target_ = target
        self.potential_ = result.potential
        self.x_ = self._spec().x
        self.u_ = result.potential.u_values()
        self.n_iter_ = result.n_iter
        self.converged_ = result.converged
        self.grad_norm_ = result.grad_norm
        self.mu_star_ = result.mu_star
        self.iterates_ = [it.as_dict() for it in result.iterates]
        return self

    def predict(self, X=None) -> np.ndarray:
        """Model pair correlation of the fitted potential.

        With X = None returns values on the estimator grid; otherwise X is
        an array of positions (or a two-column table whose first column is
        used) and values are interpolated.
        """
        check_is_fitted(self, "potential_")
        from .thermo import pair_correlation, solve_mu_star
        _, state = solve_mu_star(self.potential_, self.rho_star,
                                 ClusterTruncation(self.n_max))
        rho2 = pair_correlation(state)
        if X is None:
            return rho2.values
        X = np.asarray(X, dtype=float)
        xs = X[:, 0] if X.ndim == 2 else X
        return np.interp(xs, self.x_, rho2.values)

    def score(self, X, y=None) -> float:
        """Negative sup-norm misfit between model and target rdf (higher is better)."""
        check_is_fitted(self, "potential_")
        target = self._target_from_X(X)
        model = self.predict()
        return -float(np.abs(model - target.rho2_star.values).max())
