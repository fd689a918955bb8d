"""Bootstrap label-confidence p-values, label flipping and driver analysis."""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .estimators import Dataset, fit_mle, weight_gamma

__all__ = [
    "PvReport",
    "DriverResult",
    "bootstrap_pvalues",
    "pvalues_from_weights",
    "flip_labels",
    "auc",
    "driver_analysis",
]


@dataclass(frozen=True)
class PvReport:
    pv: np.ndarray
    b_prime: int
    threshold: float
    flags: np.ndarray
    seed: int
    weights: np.ndarray

    @property
    def n_flagged(self):
        return int(self.flags.sum())


def pvalues_from_weights(boot_weights, observed):
    """Fraction of bootstrap weights at or below the observed weight.

    ``boot_weights`` has shape (b', n) and ``observed`` shape (n,).
    """
    boot_weights = np.atleast_2d(boot_weights)
    return np.mean(boot_weights <= np.asarray(observed), axis=0)


def bootstrap_pvalues(data, fit, b_prime=2000, seed=0, threshold=0.01):
    """Parametric-bootstrap p-values of the fitted gamma weights.

    Labels are redrawn from the logistic model at the fitted coefficients;
    the coefficients are not refitted. Instance i draws its b' labels from
    its own Philox substream, so p-values do not depend on evaluation order.
    """
    if fit.spec.kind != "gamma":
        raise ValueError("bootstrap p-values need a gamma-logistic fit")
    if not fit.converged:
        raise ValueError("fit did not converge")
    if b_prime < 1:
        raise ValueError("b_prime must be at least 1")
    X, y, beta, gamma = data.X, data.y, fit.beta, fit.spec.tuning
    pi = expit(X @ beta)
    w_obs = weight_gamma(y, X, beta, gamma)
    w1 = weight_gamma(np.ones_like(y), X, beta, gamma)
    w0 = weight_gamma(np.zeros_like(y), X, beta, gamma)

    children = np.random.SeedSequence(seed).spawn(data.n)
    n_ones = np.empty(data.n, dtype=np.int64)
    for i, ss in enumerate(children):
        u = np.random.Generator(np.random.Philox(ss)).random(b_prime)
        n_ones[i] = np.count_nonzero(u < pi[i])
    count = n_ones * (w1 <= w_obs) + (b_prime - n_ones) * (w0 <= w_obs)
    pv = count / b_prime
    return PvReport(pv, int(b_prime), float(threshold), pv < threshold, seed, w_obs)


def flip_labels(data, report):
    """Complement the labels of flagged instances."""
    flags = np.asarray(report.flags if hasattr(report, "flags") else report, dtype=bool)
    if flags.shape != (data.n,):
        raise ValueError("flags must have one entry per instance")
    return data.with_labels(np.where(flags, 1 - data.y, data.y))


def auc(scores, labels):
    """Empirical concordance P(score_pos > score_neg), ties counted 1/2."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n1, n0 = labels.sum(), (~labels).sum()
    if n1 == 0 or n0 == 0:
        raise ValueError("need both classes to compute AUC")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


@dataclass(frozen=True)
class DriverResult:
    group: int
    n: int
    n_flagged: int
    coef: np.ndarray
    auc: float
    notes: tuple = ()


def driver_analysis(data, report):
    """Logistic fit of the flag indicator on X within each corrected-label group.

    Returns {j: DriverResult or None}; a group is None (with a notice in the
    second return value) when it is empty, too small, or has constant flags.
    """
    flags = np.asarray(report.flags, dtype=int)
    corrected = flip_labels(data, report).y
    results, notices = {}, []
    for j in (0, 1):
        mask = corrected == j
        d = flags[mask]
        if mask.sum() < data.p or d.min(initial=1) == d.max(initial=0):
            results[j] = None
            notices.append(f"group {j}: skipped (n={int(mask.sum())}, flagged={int(d.sum())})")
            continue
        sub = Dataset(data.X[mask], d, data.columns)
        coef, notes = fit_mle(sub.X, sub.y)
        results[j] = DriverResult(j, sub.n, int(d.sum()), coef, auc(sub.X @ coef, d), notes)
    return results, notices
