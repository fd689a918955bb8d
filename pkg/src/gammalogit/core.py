"""Probability algebra for the logistic model under label contamination.

Everything here is a pure function of its arguments. Probabilities that can
under- or overflow are evaluated on the log scale and exponentiated last.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

__all__ = [
    "MislabelPair",
    "MixtureDecomposition",
    "success_prob",
    "label_pmf",
    "pmf_gamma_norm",
    "contaminated_pmf",
    "mixture_decompose",
    "bias_term_B",
]


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("inputs must be finite")


def linear_predictor(x, beta):
    """Return ``x @ beta`` after shape and finiteness checks.

    ``x`` may be a single covariate vector of length p or an (n, p) matrix.
    """
    x = np.asarray(x, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if beta.ndim != 1:
        raise ValueError("beta must be a vector")
    if x.shape[-1] != beta.shape[0]:
        raise ValueError(
            f"dimension mismatch: x has {x.shape[-1]} columns, beta has {beta.shape[0]}"
        )
    _check_finite(x, beta)
    return x @ beta


def log_pmf(y, t):
    """log f(y | t) for the Bernoulli model with logit t."""
    y = np.asarray(y)
    return np.where(y == 1, log_expit(t), log_expit(-t))


def log_gamma_norm(t, gamma):
    """log of the (gamma+1)-norm of the Bernoulli pmf with logit t.

    gamma = 0 returns exactly 0 (the 1-norm of a pmf).
    """
    t = np.asarray(t, dtype=float)
    if gamma == 0:
        return np.zeros_like(t)
    g1 = gamma + 1.0
    return np.logaddexp(g1 * log_expit(t), g1 * log_expit(-t)) / g1


def power_prob(log_p, exponent):
    """p ** exponent evaluated as exp(exponent * log p), with log 0 giving 0."""
    log_p = np.asarray(log_p, dtype=float)
    with np.errstate(invalid="ignore"):
        out = np.exp(exponent * log_p)
    return np.where(np.isneginf(log_p), 0.0, out) if exponent > 0 else out


def success_prob(x, beta):
    """P(Y0 = 1 | x) under the logistic model, stable for any finite logit."""
    return expit(linear_predictor(x, beta))


def label_pmf(y, x, beta):
    """f(y | x; beta) = pi^y (1 - pi)^(1 - y)."""
    y = np.asarray(y)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    return np.exp(log_pmf(y, linear_predictor(x, beta)))


def pmf_gamma_norm(x, beta, gamma):
    """The (gamma+1)-norm [pi^(g+1) + (1-pi)^(g+1)]^(1/(g+1)) of the model pmf.

    Lies in (2^(-g/(g+1)), 1], with the minimum at pi = 0.5.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return np.exp(log_gamma_norm(linear_predictor(x, beta), gamma))


@dataclass(frozen=True)
class MislabelPair:
    """Mislabel probabilities eta0 = P(Y=1|Y0=0,x), eta1 = P(Y=0|Y0=1,x)."""

    eta0: float
    eta1: float

    def __post_init__(self):
        e0, e1 = np.asarray(self.eta0), np.asarray(self.eta1)
        if np.any(e0 < 0) or np.any(e1 < 0) or np.any(e0 + e1 >= 1):
            raise ValueError("need eta0, eta1 >= 0 and eta0 + eta1 < 1")


@dataclass(frozen=True)
class MixtureDecomposition:
    """Contaminated label law as c * f(y|x) + (1 - c) * h(y)."""

    c: float
    h1: float

    def h(self, y):
        y = np.asarray(y)
        return np.where(y == 1, self.h1, 1.0 - self.h1)

    def mixture_pmf(self, y, pi):
        """P(Y = y | x) for a model success probability ``pi``."""
        y = np.asarray(y)
        f = np.where(y == 1, pi, 1.0 - pi)
        return self.c * f + (1.0 - self.c) * self.h(y)


def contaminated_pmf(y, pi, eta0, eta1):
    """P(Y = y | x) written directly in terms of the flip probabilities."""
    p1 = eta0 * (1.0 - pi) + (1.0 - eta1) * pi
    return np.where(np.asarray(y) == 1, p1, 1.0 - p1)


def mixture_decompose(eta):
    """Split the contaminated label law into clean and mislabel components.

    When eta0 + eta1 = 0 the contamination component carries zero weight and
    ``h1`` is set to 0.
    """
    if not isinstance(eta, MislabelPair):
        eta = MislabelPair(*eta)
    total = eta.eta0 + eta.eta1
    h1 = eta.eta0 / total if total > 0 else 0.0
    return MixtureDecomposition(c=1.0 - total, h1=h1)


def bias_term_B(x, beta, gamma, eta):
    """Contamination bias term of the gamma-cross-entropy at beta.

    eta0 * pi(x; (g+1) beta)^(g/(g+1)) + eta1 * (1 - pi(x; (g+1) beta))^(g/(g+1)).
    Tends to eta0 I(beta'x > 0) + eta1 I(beta'x <= 0) as gamma grows.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if not isinstance(eta, MislabelPair):
        eta = MislabelPair(*eta)
    t = (gamma + 1.0) * linear_predictor(x, beta)
    e = gamma / (gamma + 1.0)
    return eta.eta0 * power_prob(log_expit(t), e) + eta.eta1 * power_prob(log_expit(-t), e)
