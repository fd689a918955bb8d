"""Choosing gamma: the data-adaptive norm criterion and the clean-data oracle."""
from dataclasses import dataclass, replace
import warnings

import numpy as np

from .core import log_gamma_norm, log_pmf
from .estimators import ConvergenceFailure, ConvergenceWarning, EstimatorSpec, SolverOptions, fit, fit_mle

__all__ = [
    "SelectionResult",
    "default_grid",
    "fit_grid",
    "adaptive_criterion",
    "select_gamma_adaptive",
    "oracle_loglik",
    "select_gamma_oracle",
]


def default_grid():
    """0.5, 0.6, ..., 2.5"""
    return np.round(np.arange(0.5, 2.5 + 1e-9, 0.1), 10)


@dataclass(frozen=True)
class SelectionResult:
    grid: np.ndarray
    criterion: np.ndarray  # nan where the fit was excluded
    chosen_gamma: float
    fits: tuple

    @property
    def chosen_fit(self):
        return self.fits[int(np.flatnonzero(self.grid == self.chosen_gamma)[0])]


def _argmax_first(values):
    # grid is ascending, so the first maximizer is the smallest tuning value
    v = np.where(np.isfinite(values), values, -np.inf)
    if not np.any(np.isfinite(values)):
        raise ConvergenceFailure("no grid value produced a converged fit")
    return int(np.argmax(v))


def fit_grid(data, grid, kind="gamma", opts=None, chain=True):
    """Fit one estimator per tuning value in ``grid`` (sorted ascending).

    With ``chain`` each fit starts from the previous one; otherwise every fit
    starts from the MLE.
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    opts = opts or SolverOptions()
    if opts.init is None:
        opts = replace(opts, init=fit_mle(data.X, data.y)[0])
    fits = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for g in grid:
            res = fit(data, EstimatorSpec(kind, g), opts)
            fits.append(res)
            if chain and res.converged:
                opts = replace(opts, init=res.beta)
    return grid, tuple(fits)


def adaptive_criterion(X, beta, gamma0=0.1):
    """(1/n) sum_i ||f(.|x_i; beta)||_{gamma0+1}."""
    return float(np.mean(np.exp(log_gamma_norm(X @ beta, gamma0))))


def select_gamma_adaptive(data, grid=None, gamma0=0.1, opts=None, chain=True, fits=None):
    """Pick gamma maximizing the average pmf norm at the fitted coefficients.

    Grid values whose fit did not converge are dropped with a warning; ties
    go to the smaller gamma. Pass ``fits`` (aligned with ``grid``) to reuse
    existing fits.
    """
    if not gamma0 > 0:
        raise ValueError("gamma0 must be positive")
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("grid must be nonempty with positive entries")
    if fits is None:
        grid, fits = fit_grid(data, grid, "gamma", opts, chain)
    crit = np.full(grid.size, np.nan)
    for k, res in enumerate(fits):
        if res.converged:
            crit[k] = adaptive_criterion(data.X, res.beta, gamma0)
    dropped = grid[np.isnan(crit)]
    if dropped.size:
        warnings.warn(
            f"excluded non-converged gamma values {dropped.tolist()}", ConvergenceWarning, stacklevel=2
        )
    k = _argmax_first(crit)
    return SelectionResult(grid, crit, float(grid[k]), tuple(fits))


def oracle_loglik(fits, clean):
    """Clean-data log-likelihood of each fit; nan for non-converged fits."""
    out = np.full(len(fits), np.nan)
    for k, res in enumerate(fits):
        if res.converged:
            out[k] = float(np.sum(log_pmf(clean.y, clean.X @ res.beta)))
    return out


def select_gamma_oracle(fits, clean):
    """Tuning value whose fit maximizes the likelihood of clean labels."""
    if clean.n == 0:
        raise ValueError("clean data is empty")
    ll = oracle_loglik(fits, clean)
    return float(fits[_argmax_first(ll)].spec.tuning)
