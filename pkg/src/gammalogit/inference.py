"""Sandwich covariance, influence functions and the second-order influence
function of the misclassification rate."""
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import expit, log_expit
from scipy.stats import norm

from .core import linear_predictor, log_gamma_norm, log_pmf, power_prob
from .estimators import _alpha_bias

__all__ = [
    "CovarianceReport",
    "SingularHessianError",
    "sandwich_covariance",
    "gamma_sandwich_parts",
    "observed_hessian",
    "influence_gamma",
    "influence_alpha",
    "two_class_population_hessian",
    "if2_misclassification",
]

MAX_CONDITION = 1e12


class SingularHessianError(np.linalg.LinAlgError):
    def __init__(self, cond):
        super().__init__(
            f"Hessian is numerically singular (condition number {cond:.3g} > {MAX_CONDITION:.0e})"
        )
        self.cond = cond


@dataclass(frozen=True)
class CovarianceReport:
    """Sandwich pieces, standard errors and Wald intervals.

    ``Sigma_hat`` estimates the covariance of sqrt(n)(beta_hat - beta0), so
    ``se = sqrt(diag(Sigma_hat) / n)``.
    """

    beta: np.ndarray
    H_hat: np.ndarray
    U_hat: np.ndarray
    Delta_hat: np.ndarray
    Sigma_hat: np.ndarray
    se: np.ndarray
    ci: np.ndarray
    level: float
    n: int
    condition: float

    def significant(self):
        """True where the interval excludes zero."""
        return (self.ci[:, 0] > 0) | (self.ci[:, 1] < 0)


def _outer_mean(X, weights):
    return (X * weights[:, None]).T @ X / X.shape[0]


def _solve_sym(H, B):
    cond = float(np.linalg.cond(H))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise SingularHessianError(cond)
    return linalg.solve(H, B, assume_a="sym"), cond


def gamma_sandwich_parts(X, y, beta, gamma):
    """(H, U, Delta) of the gamma-logistic sandwich at ``beta``.

    gamma = 0 gives the ordinary logistic sandwich with Delta = 0.
    """
    t = linear_predictor(X, beta)
    tg = (gamma + 1.0) * t
    w = power_prob(log_pmf(y, tg), gamma / (gamma + 1.0))
    r = np.where(y == 1, expit(-tg), -expit(tg))
    nu_g = np.exp(log_expit(tg) + log_expit(-tg))
    fnorm = np.exp(log_gamma_norm(t, gamma))
    U = _outer_mean(X, (w * r) ** 2)
    Delta = gamma * _outer_mean(X, w * (nu_g - r * r))
    H = _outer_mean(X, fnorm * nu_g) + Delta
    return H, U, Delta


def observed_hessian(data, beta, gamma):
    """-dS_gamma/dbeta evaluated exactly on the sample.

    Differs from the sandwich H only in the first term, where the sample
    weight w_i replaces its conditional expectation ||f(.|x_i)||_{g+1}.
    """
    X, y = data.X, data.y
    tg = (gamma + 1.0) * linear_predictor(X, beta)
    w = power_prob(log_pmf(y, tg), gamma / (gamma + 1.0))
    r = np.where(y == 1, expit(-tg), -expit(tg))
    nu_g = np.exp(log_expit(tg) + log_expit(-tg))
    return _outer_mean(X, w * nu_g) + gamma * _outer_mean(X, w * (nu_g - r * r))


def _xi_alpha(t, alpha):
    # {exp(a t) + exp(t)} / (1 + exp(t))^(1 + a)
    return np.exp(np.logaddexp(alpha * t, t) - (1.0 + alpha) * np.logaddexp(0.0, t))


def _alpha_parts(X, beta, alpha):
    t = linear_predictor(X, beta)
    nu = np.exp(log_expit(t) + log_expit(-t))
    xa = _xi_alpha(t, alpha)
    H = _outer_mean(X, xa * nu)
    U = _outer_mean(X, xa * xa * nu)
    return H, U, np.zeros_like(H)


def sandwich_covariance(data, fit, level=0.95):
    """Sandwich covariance H^-1 U H^-1 for a gamma-, alpha- or ML fit.

    Raises :class:`SingularHessianError` rather than regularizing when H has
    condition number above 1e12.
    """
    X, y, beta = data.X, data.y, np.asarray(fit.beta, dtype=float)
    kind = fit.spec.kind
    if kind == "gamma":
        H, U, D = gamma_sandwich_parts(X, y, beta, fit.spec.tuning)
    elif kind == "mle":
        H, U, D = gamma_sandwich_parts(X, y, beta, 0.0)
    elif kind == "alpha":
        H, U, D = _alpha_parts(X, beta, fit.spec.tuning)
    else:
        raise ValueError(f"no sandwich estimator for kind {kind!r}")
    H = 0.5 * (H + H.T)
    U = 0.5 * (U + U.T)
    Hinv_U, cond = _solve_sym(H, U)
    Sigma, _ = _solve_sym(H, Hinv_U.T)
    Sigma = 0.5 * (Sigma + Sigma.T)
    n = data.n
    se = np.sqrt(np.clip(np.diag(Sigma), 0.0, None) / n)
    z = norm.ppf(0.5 + level / 2.0)
    ci = np.column_stack([beta - z * se, beta + z * se])
    return CovarianceReport(beta, H, U, D, Sigma, se, ci, level, n, cond)


def influence_gamma(y, x, beta0, gamma, H):
    """w_gamma(y, x) {y - pi(x; (g+1) beta0)} H^-1 x."""
    x = np.asarray(x, dtype=float)
    tg = (gamma + 1.0) * linear_predictor(x, beta0)
    w = power_prob(log_pmf(y, tg), gamma / (gamma + 1.0))
    r = np.where(np.asarray(y) == 1, expit(-tg), -expit(tg))
    Hinv_x, _ = _solve_sym(np.asarray(H, dtype=float), x.T)
    return (w * r) * Hinv_x if x.ndim == 1 else ((w * r) * Hinv_x).T


def influence_alpha(y, x, beta0, alpha, H):
    """[w_alpha(y, x) {y - pi(x; beta0)} - b_alpha(x; beta0)] H^-1 x."""
    x = np.asarray(x, dtype=float)
    t = linear_predictor(x, beta0)
    w = power_prob(log_pmf(y, t), alpha)
    r = np.where(np.asarray(y) == 1, expit(-t), -expit(t))
    c = w * r - _alpha_bias(t, alpha)
    Hinv_x, _ = _solve_sym(np.asarray(H, dtype=float), x.T)
    return c * Hinv_x if x.ndim == 1 else (c * Hinv_x).T


IF2_BETA0 = np.array([np.log(2.0), 1.0])


def two_class_population_hessian(tuning, kind="gamma", beta0=IF2_BETA0, nodes=64):
    """Population H for X = (1, X2), X2 | Y0=j ~ N(+-0.5, 1), P(Y0=1) = 2/3.

    Expectations over each mixture component use Gauss-Hermite quadrature
    with ``nodes`` points.
    """
    z, wq = np.polynomial.hermite.hermgauss(nodes)
    xs, ws = [], []
    for mu, prior in ((-0.5, 1.0 / 3.0), (0.5, 2.0 / 3.0)):
        xs.append(mu + np.sqrt(2.0) * z)
        ws.append(prior * wq / np.sqrt(np.pi))
    x2, wt = np.concatenate(xs), np.concatenate(ws)
    X = np.column_stack([np.ones_like(x2), x2])
    t = X @ np.asarray(beta0, dtype=float)
    if kind == "gamma":
        tg = (tuning + 1.0) * t
        factor = np.exp(log_gamma_norm(t, tuning))
    elif kind == "alpha":
        tg = t
        factor = _xi_alpha(t, tuning)
    else:
        raise ValueError("kind must be 'gamma' or 'alpha'")
    nu = np.exp(log_expit(tg) + log_expit(-tg))
    return (X * (wt * factor * nu)[:, None]).T @ X


def if2_misclassification(x, y, beta0=IF2_BETA0, tuning=0.0, kind="gamma", H=None):
    """Second-order influence of the error rate, up to a positive constant.

    Returns {beta01 IF_2(x, y) - beta02 IF_1(x, y)}^2 for the intercept +
    one-covariate model; ``x`` is the scalar covariate (array allowed).
    """
    beta0 = np.asarray(beta0, dtype=float)
    if beta0.shape != (2,):
        raise ValueError("IF2 is defined for p = 2 (intercept and one covariate)")
    if H is None:
        H = two_class_population_hessian(tuning, kind, beta0)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    X = np.column_stack([np.ones_like(x), x])
    y = np.broadcast_to(np.asarray(y), x.shape)
    if kind == "gamma":
        inf = influence_gamma(y, X, beta0, tuning, H)
    elif kind == "alpha":
        inf = influence_alpha(y, X, beta0, tuning, H)
    else:
        raise ValueError("kind must be 'gamma' or 'alpha'")
    inf = np.atleast_2d(inf)
    contrast = beta0[0] * inf[:, 1] - beta0[1] * inf[:, 0]
    return contrast**2
