"""Scikit-learn style front end for the solver family.

``KaczmarzSolver`` follows the estimator contract (parameters stored verbatim
in ``__init__``, validation deferred to ``fit``, fitted attributes with a
trailing underscore, ``get_params``/``set_params`` via ``BaseEstimator``), so
it drops into pipelines, cross-validation utilities and ``clone``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .operators import as_row_operator
from .solvers import LinearSystem, SolverConfig, solve

__all__ = ["KaczmarzSolver"]


def _as_rhs(y, m):
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != m:
        raise ValueError(f"y must be a length-{m} vector, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains NaN or Inf entries")
    return y.astype(np.complex128)


class KaczmarzSolver(RegressorMixin, BaseEstimator):
    """Solve a consistent linear system A x = b by row-action iteration.

    Parameters
    ----------
    method : str
        One of K, RK, GRK, GTRK, SRK, SRKS, 2DK, TRK, TRKS, TGRK, TSRK,
        TSRKS (case-insensitive).
    tol : float
        Stopping threshold on the residual 2-norm, or on the squared
        relative error when ``stop_rule="relative-error"``.
    stop_rule : str
        "residual" or "relative-error"; the latter needs ``x_true`` in fit.
    max_iter : int
        Iteration cap.
    seed : int
        Seed for every randomized selection; fixes the run bit for bit.
    l, eta : float
        Row fractions drawn per iteration by the subsampled methods
        (TRKS uses ``l``; SRKS/TSRKS use ``eta``).
    parallel_tol : float
        Relative threshold of the two-row parallelism test.
    check_every, residual_refresh_every : int
        Stopping-check cadence and exact-residual refresh cadence.

    Attributes
    ----------
    coef_ : ndarray
        The solution iterate (real when all inputs were real).
    n_iter_ : int
    converged_ : bool
    report_ : SolveReport
        Full solve record including convergence histories.
    """

    def __init__(self, method="TRK", tol=1e-6, stop_rule="residual", max_iter=800_000,
                 seed=0, l=0.01, eta=0.1, parallel_tol=1e-12, check_every=1,
                 residual_refresh_every=1000):
        self.method = method
        self.tol = tol
        self.stop_rule = stop_rule
        self.max_iter = max_iter
        self.seed = seed
        self.l = l
        self.eta = eta
        self.parallel_tol = parallel_tol
        self.check_every = check_every
        self.residual_refresh_every = residual_refresh_every

    def _config(self) -> SolverConfig:
        return SolverConfig(
            method=self.method, tol=self.tol, stop_rule=self.stop_rule,
            max_iter=self.max_iter, seed=self.seed, l=self.l, eta=self.eta,
            parallel_tol=self.parallel_tol, check_every=self.check_every,
            residual_refresh_every=self.residual_refresh_every,
        )

    def fit(self, X, y, x_true=None):
        """Solve A x = y for the operator described by X.

        X may be a 2-D array, a scipy sparse matrix, or any
        :class:`RowOperator`; ``x_true`` enables error-based stopping and
        error histories.
        """
        op = as_row_operator(X)
        b = _as_rhs(y, op.shape[0])
        system = LinearSystem(op, b, None if x_true is None else np.asarray(x_true))
        report = solve(system, self._config())
        coef = report.x
        # real data stays exactly real through the complex arithmetic
        if np.all(coef.imag == 0.0):
            coef = coef.real.copy()
        self.coef_ = coef
        self.n_iter_ = report.iterations
        self.converged_ = report.converged
        self.report_ = report
        self.n_features_in_ = op.shape[1]
        return self

    def predict(self, X):
        """Apply the system matrix of new rows to the fitted solution."""
        if not hasattr(self, "coef_"):
            raise NotFittedError("this KaczmarzSolver instance is not fitted yet")
        op = as_row_operator(X)
        if op.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {op.shape[1]} columns, expected {self.n_features_in_}")
        out = op.apply(np.asarray(self.coef_, dtype=np.complex128))
        if not np.iscomplexobj(self.coef_):
            return out.real
        return out
