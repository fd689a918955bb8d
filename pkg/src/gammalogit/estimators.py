"""Robust logistic estimators and their solvers.

Five estimating equations share one fitting entry point, :func:`fit`:

``mle``       ordinary logistic regression
``gamma``     minimum gamma-divergence logistic regression
``alpha``     minimum density-power-divergence logistic regression
``constant``  constant-mislabel logistic regression (given eta)
``xi``        boundary-peaked mislabel logistic regression (given xi0, xi1)

Each kind is described by a small model object exposing an objective to be
maximized, its estimating equation (the score), the per-instance weights
and a fixed-point update. Two solvers work on any of them: an MM /
fixed-point iteration and BFGS with an Armijo backtracking line search.
"""
from dataclasses import dataclass, field, replace
import warnings

import numpy as np
from scipy.optimize import linprog
from scipy.special import expit, log_expit

from .core import linear_predictor, log_gamma_norm, log_pmf, power_prob

__all__ = [
    "Dataset",
    "EstimatorSpec",
    "SolverOptions",
    "FitResult",
    "ConvergenceWarning",
    "ConvergenceFailure",
    "gamma_objective",
    "gamma_score",
    "weight_gamma",
    "alpha_weight",
    "alpha_bias_correction",
    "alpha_objective",
    "alpha_score",
    "constant_mislabel_weight",
    "constant_mislabel_score",
    "xi_mislabel_probs",
    "xi_weight",
    "xi_score",
    "mislabel_loglik",
    "estimating_equation",
    "objective",
    "instance_weights",
    "fit",
    "fit_mle",
    "detect_separation",
    "profile_mislabel",
]

KINDS = ("mle", "gamma", "alpha", "constant", "xi")
SOLVERS = ("fixed_point", "quasi_newton")


class ConvergenceWarning(UserWarning):
    pass


class ConvergenceFailure(RuntimeError):
    """No usable converged fit was produced."""


@dataclass(frozen=True)
class Dataset:
    """Covariate matrix (intercept column included) and binary labels."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple = ()

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y)
        if X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError("y must be a vector with one label per row of X")
        if X.shape[0] == 0:
            raise ValueError("empty dataset")
        if X.shape[0] < X.shape[1]:
            raise ValueError(f"need n >= p, got n={X.shape[0]}, p={X.shape[1]}")
        if not np.all(np.isfinite(X)):
            raise ValueError("X contains non-finite values")
        if not np.all((y == 0) | (y == 1)):
            raise ValueError("labels must be 0 or 1")
        y = y.astype(np.int64)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", tuple(self.columns))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def with_labels(self, y):
        return Dataset(self.X, y, self.columns)

    def subset(self, mask):
        return Dataset(self.X[mask], self.y[mask], self.columns)


@dataclass(frozen=True)
class EstimatorSpec:
    """Estimator kind plus its tuning value.

    ``gamma`` and ``alpha`` take a positive float, ``constant`` takes eta in
    [0, 0.5), ``xi`` takes a pair (xi0, xi1) with nonnegative entries summing
    to less than one, ``mle`` takes nothing.
    """

    kind: str
    tuning: object = None

    def __post_init__(self):
        k, t = self.kind, self.tuning
        if k not in KINDS:
            raise ValueError(f"unknown estimator kind {k!r}; expected one of {KINDS}")
        if k == "mle":
            if t is not None:
                raise ValueError("mle takes no tuning value")
        elif k in ("gamma", "alpha"):
            if t is None or not float(t) > 0:
                raise ValueError(f"{k} must be positive")
            object.__setattr__(self, "tuning", float(t))
        elif k == "constant":
            if t is None or not 0 <= float(t) < 0.5:
                raise ValueError("eta must lie in [0, 0.5)")
            object.__setattr__(self, "tuning", float(t))
        else:
            xi0, xi1 = (float(v) for v in t)
            if xi0 < 0 or xi1 < 0 or xi0 + xi1 >= 1:
                raise ValueError("xi needs xi0, xi1 >= 0 and xi0 + xi1 < 1")
            object.__setattr__(self, "tuning", (xi0, xi1))

    @classmethod
    def mle(cls):
        return cls("mle")

    @classmethod
    def gamma(cls, gamma):
        return cls("gamma", gamma)

    @classmethod
    def alpha(cls, alpha):
        return cls("alpha", alpha)

    @classmethod
    def constant(cls, eta):
        return cls("constant", eta)

    @classmethod
    def xi(cls, xi0, xi1):
        return cls("xi", (xi0, xi1))

    def __str__(self):
        if self.kind == "mle":
            return "mle"
        if self.kind == "xi":
            return f"xi=({self.tuning[0]:g},{self.tuning[1]:g})"
        name = {"gamma": "gamma", "alpha": "alpha", "constant": "eta"}[self.kind]
        return f"{self.kind}({name}={self.tuning:g})"


@dataclass(frozen=True)
class SolverOptions:
    """Solver controls.

    ``tol`` is on the max-abs entry of the estimating equation. ``init`` is
    a starting coefficient vector; when None the MLE is used (and the MLE
    itself starts from zero). ``n_restarts`` random restarts are drawn around
    the MLE with standard deviation 0.5.
    """

    solver: str = "quasi_newton"
    tol: float = 1e-8
    max_iter: int = 500
    init: np.ndarray = None
    n_restarts: int = 0
    seed: int = None
    armijo: float = 1e-4
    shrink: float = 0.5
    max_halvings: int = 50

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")


@dataclass(frozen=True)
class FitResult:
    spec: EstimatorSpec
    beta: np.ndarray
    converged: bool
    iterations: int
    score_norm: float
    objective: float
    weights: np.ndarray
    solver: str
    notes: tuple = field(default=())

    def __post_init__(self):
        for name in ("beta", "weights"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def kind(self):
        return self.spec.kind


def _as_xy(data, beta):
    return data.X, data.y, np.asarray(beta, dtype=float)


# -- gamma-logistic ---------------------------------------------------------

def _gamma_terms(X, y, beta, gamma):
    t = (gamma + 1.0) * linear_predictor(X, beta)
    w = power_prob(log_pmf(y, t), gamma / (gamma + 1.0))
    resid = np.where(y == 1, expit(-t), -expit(t))
    return t, w, resid


def weight_gamma(y, x, beta, gamma):
    """Per-instance gamma weight [exp{y(g+1)b'x} / (1 + exp{(g+1)b'x})]^(g/(g+1)).

    Equals 1 at gamma = 0 and decays to 0 for instances whose label
    disagrees with the sign of b'x.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    t = (gamma + 1.0) * linear_predictor(x, beta)
    return power_prob(log_pmf(np.asarray(y), t), gamma / (gamma + 1.0))


def gamma_objective(data, beta, gamma):
    """Empirical gamma-cross-entropy (1/n) sum_i w_i(beta); lies in (0, 1]."""
    X, y, beta = _as_xy(data, beta)
    _, w, _ = _gamma_terms(X, y, beta, gamma)
    return float(np.mean(w))


def gamma_score(data, beta, gamma):
    """(1/n) sum_i w_i {y_i - pi(x_i; (g+1) beta)} x_i.

    gamma times this vector is the gradient of :func:`gamma_objective`.
    """
    X, y, beta = _as_xy(data, beta)
    _, w, r = _gamma_terms(X, y, beta, gamma)
    return X.T @ (w * r) / X.shape[0]


# -- alpha-logistic ---------------------------------------------------------

def alpha_weight(y, x, beta, alpha):
    """{exp(y b'x) / (1 + exp(b'x))}^alpha, i.e. f(y|x)^alpha."""
    return power_prob(log_pmf(np.asarray(y), linear_predictor(x, beta)), alpha)


def _alpha_bias(t, alpha):
    # exp(t){exp(alpha t) - 1} / (1 + exp(t))^(2 + alpha) = (pi^a - (1-pi)^a) pi (1-pi)
    la, lb = log_expit(t), log_expit(-t)
    return (np.exp(alpha * la) - np.exp(alpha * lb)) * np.exp(la + lb)


def alpha_bias_correction(x, beta, alpha):
    """Fisher-consistency correction b_alpha(x; beta)."""
    return _alpha_bias(linear_predictor(x, beta), alpha)


def alpha_objective(data, beta, alpha):
    """Negated empirical density power divergence (up to constants).

    (1/n) sum_i [(1 + 1/a) f(y_i|x_i)^a - ||f(.|x_i)||_{1+a}^{1+a}]; its
    gradient is (1 + a) times :func:`alpha_score`.
    """
    X, y, beta = _as_xy(data, beta)
    t = linear_predictor(X, beta)
    fa = np.exp(alpha * log_pmf(y, t))
    norm = np.exp((1.0 + alpha) * log_expit(t)) + np.exp((1.0 + alpha) * log_expit(-t))
    return float(np.mean((1.0 + 1.0 / alpha) * fa - norm))


def alpha_score(data, beta, alpha):
    """(1/n) sum_i [w_i {y_i - pi(x_i; beta)} - b_alpha(x_i; beta)] x_i."""
    X, y, beta = _as_xy(data, beta)
    t = linear_predictor(X, beta)
    w = np.exp(alpha * log_pmf(y, t))
    resid = np.where(y == 1, expit(-t), -expit(t))
    return X.T @ (w * resid - _alpha_bias(t, alpha)) / X.shape[0]


# -- mislabel-model logistic (constant eta, xi) -----------------------------

def _safe_log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def _mislabel_terms(t, eta0, eta1, d0, d1):
    """Log success/failure probabilities and score weight of the mislabel model.

    P(Y=1|x) = eta0 (1 - pi) + (1 - eta1) pi. The returned weight is
    (d/dt P(Y=1|x)) / {P(Y=1|x) P(Y=0|x)}, so weight * (y - P(Y=1|x)) is
    the derivative of the log-likelihood in t.
    """
    lse = np.logaddexp(0.0, t)
    logp = np.logaddexp(_safe_log(eta0), _safe_log(1.0 - eta1) + t) - lse
    logq = np.logaddexp(_safe_log(1.0 - eta0), _safe_log(eta1) + t) - lse
    denom = logp + logq
    la, lb = log_expit(t), log_expit(-t)
    w = (1.0 - eta0 - eta1) * np.exp(la + lb - denom)
    w = w + d0 * np.exp(lb - denom) - d1 * np.exp(la - denom)
    return logp, logq, w


def constant_mislabel_weight(x, beta, eta):
    """(1 - 2 eta) / [{1 - eta + eta e^(-b'x)} {1 - eta + eta e^(b'x)}]."""
    t = linear_predictor(x, beta)
    a = np.abs(t)
    # multiply through by e^(-|t|) to keep every factor bounded
    u = np.exp(-a)
    return (1.0 - 2.0 * eta) * u / ((1.0 - eta + eta * u) * ((1.0 - eta) * u + eta))


def xi_mislabel_probs(t, xi):
    """eta0, eta1 and their derivatives in t = b'x for the xi-model.

    eta_j = 2 xi_j / [(1 - xi0 - xi1) (e^(t/2) + e^(-t/2)) + 2 (xi0 + xi1)],
    largest on the boundary t = 0 where it equals xi_j.
    """
    xi0, xi1 = xi
    t = np.asarray(t, dtype=float)
    A, S = 1.0 - xi0 - xi1, xi0 + xi1
    u = np.exp(-0.5 * np.abs(t))
    D = A * (1.0 + u * u) + 2.0 * S * u
    base = u / D
    slope = -A * np.sign(t) * (1.0 - u * u) * u / (D * D)
    return 2.0 * xi0 * base, 2.0 * xi1 * base, xi0 * slope, xi1 * slope


def _mislabel_model_terms(X, beta, kind, tuning):
    t = linear_predictor(X, beta)
    if kind == "constant":
        e0 = e1 = tuning
        d0 = d1 = 0.0
    else:
        e0, e1, d0, d1 = xi_mislabel_probs(t, tuning)
    return t, _mislabel_terms(t, e0, e1, d0, d1)


def _mislabel_score(X, y, beta, kind, tuning):
    _, (logp, logq, w) = _mislabel_model_terms(X, beta, kind, tuning)
    resid = np.where(y == 1, np.exp(logq), -np.exp(logp))
    return X.T @ (w * resid) / X.shape[0]


def constant_mislabel_score(data, beta, eta):
    """(1/n) sum_i w_eta,i {y_i - pi_eta(x_i)} x_i with pi_eta = eta(1-pi) + (1-eta)pi."""
    if not 0 <= eta < 0.5:
        raise ValueError("eta must lie in [0, 0.5)")
    X, y, beta = _as_xy(data, beta)
    return _mislabel_score(X, y, beta, "constant", eta)


def xi_weight(x, beta, xi):
    """Score weight of the xi-model at each row of ``x``.

    This is d pi_xi / d(b'x) divided by pi_xi (1 - pi_xi), which makes the
    estimating equation the likelihood score of the xi-model.
    """
    _, (_, _, w) = _mislabel_model_terms(np.asarray(x, dtype=float), beta, "xi", tuple(xi))
    return w


def xi_score(data, beta, xi):
    """(1/n) sum_i w_xi,i {y_i - pi_xi(x_i)} x_i."""
    xi = EstimatorSpec.xi(*xi).tuning
    X, y, beta = _as_xy(data, beta)
    return _mislabel_score(X, y, beta, "xi", xi)


def mislabel_loglik(data, beta, eta0, eta1):
    """Mean observed-data log-likelihood under P(Y=1|x) = eta0(1-pi) + (1-eta1)pi.

    ``eta0`` and ``eta1`` may be scalars or per-row arrays.
    """
    X, y, beta = _as_xy(data, beta)
    t = linear_predictor(X, beta)
    logp, logq, _ = _mislabel_terms(t, eta0, eta1, 0.0, 0.0)
    return float(np.mean(np.where(y == 1, logp, logq)))


# -- inner weighted solves ---------------------------------------------------

def _weighted_logistic(X, y, w, theta, offset=None, ridge=None, tol=1e-12, max_iter=100):
    """Maximize sum_i w_i log f(y_i | theta'x_i) - offset'theta - ridge/2 |theta|^2.

    Newton's method with step halving; ``ridge`` is a per-coordinate penalty
    vector. Returns (theta, converged).
    """
    n, p = X.shape
    offset = np.zeros(p) if offset is None else offset
    ridge = np.zeros(p) if ridge is None else ridge

    def value(th):
        return float(w @ log_pmf(y, X @ th) - offset @ th - 0.5 * ridge @ (th * th))

    f = value(theta)
    for _ in range(max_iter):
        t = X @ theta
        resid = np.where(y == 1, expit(-t), -expit(t))
        g = X.T @ (w * resid) - offset - ridge * theta
        if np.max(np.abs(g)) <= tol * max(1.0, n):
            return theta, True
        nu = np.exp(log_expit(t) + log_expit(-t))
        Hm = (X * (w * nu)[:, None]).T @ X + np.diag(ridge)
        try:
            step = np.linalg.solve(Hm, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(Hm, g, rcond=None)[0]
        s = 1.0
        for _ in range(50):
            cand = theta + s * step
            fc = value(cand)
            if np.isfinite(fc) and fc >= f - 1e-12 * abs(f):
                break
            s *= 0.5
        else:
            return theta, False
        if np.max(np.abs(cand - theta)) < 1e-15 * max(1.0, np.max(np.abs(theta))):
            theta, f = cand, fc
            return theta, True
        theta, f = cand, fc
    return theta, False


def _intercept_mask(X):
    return np.all(X == 1.0, axis=0)


def detect_separation(X, y):
    """True when some direction b != 0 has (2y_i - 1) b'x_i >= 0 for every i.

    Complete and quasi-complete separation are both detected; the check is a
    small linear program over the box |b_j| <= 1.
    """
    s = 2.0 * np.asarray(y) - 1.0
    A = X * s[:, None]
    res = linprog(
        -A.sum(axis=0),
        A_ub=-A,
        b_ub=np.zeros(X.shape[0]),
        bounds=[(-1, 1)] * X.shape[1],
        method="highs",
    )
    return bool(res.status == 0 and -res.fun > 1e-7 * X.shape[0])


def fit_mle(X, y, tol=1e-10, max_iter=100):
    """Ordinary logistic MLE by Newton's method, with separation handling.

    Returns (beta, notes). Under separation, or when the Newton iterates
    exceed 1e3 in magnitude, the ridge solution with penalty 1e-4 * n on the
    non-intercept coordinates is returned instead and a note is attached.
    """
    n, p = X.shape
    w = np.ones(n)
    notes = []
    separated = detect_separation(X, y)
    if not separated:
        beta, ok = _weighted_logistic(X, y, w, np.zeros(p), tol=tol, max_iter=max_iter)
        if ok and np.max(np.abs(beta)) <= 1e3:
            return beta, tuple(notes)
        notes.append("mle did not converge; using ridge-damped start")
    else:
        notes.append("separation detected; using ridge-damped start")
    ridge = np.where(_intercept_mask(X), 0.0, 1e-4 * n)
    beta, _ = _weighted_logistic(X, y, w, np.zeros(p), ridge=ridge, tol=tol, max_iter=max_iter)
    return beta, tuple(notes)


# -- per-kind models ---------------------------------------------------------

class _Model:
    """Objective, score and fixed-point map for one estimator kind."""

    grad_scale = 1.0

    def __init__(self, tuning):
        self.tuning = tuning

    def objective(self, X, y, beta):
        raise NotImplementedError

    def score(self, X, y, beta):
        raise NotImplementedError

    def weights(self, X, y, beta):
        raise NotImplementedError

    def fp_update(self, X, y, beta):
        raise NotImplementedError


class _MLE(_Model):
    def objective(self, X, y, beta):
        return float(np.mean(log_pmf(y, X @ beta)))

    def score(self, X, y, beta):
        t = X @ beta
        return X.T @ np.where(y == 1, expit(-t), -expit(t)) / X.shape[0]

    def weights(self, X, y, beta):
        return np.ones(X.shape[0])

    def fp_update(self, X, y, beta):
        theta, _ = _weighted_logistic(X, y, np.ones(X.shape[0]), beta)
        return theta


class _Gamma(_Model):
    def __init__(self, gamma):
        self.tuning = gamma
        self.grad_scale = gamma

    def objective(self, X, y, beta):
        return float(np.mean(_gamma_terms(X, y, beta, self.tuning)[1]))

    def score(self, X, y, beta):
        _, w, r = _gamma_terms(X, y, beta, self.tuning)
        return X.T @ (w * r) / X.shape[0]

    def weights(self, X, y, beta):
        return _gamma_terms(X, y, beta, self.tuning)[1]

    def fp_update(self, X, y, beta):
        # MM step: exp(a) >= exp(a0)(1 + a - a0) minorizes the objective by a
        # weighted log-likelihood in theta = (g+1) beta with weights frozen.
        g1 = self.tuning + 1.0
        w = self.weights(X, y, beta)
        theta, _ = _weighted_logistic(X, y, w, g1 * beta)
        return theta / g1


class _Alpha(_Model):
    def __init__(self, alpha):
        self.tuning = alpha
        self.grad_scale = 1.0 + alpha

    def objective(self, X, y, beta):
        t = X @ beta
        a = self.tuning
        fa = np.exp(a * log_pmf(y, t))
        norm = np.exp((1 + a) * log_expit(t)) + np.exp((1 + a) * log_expit(-t))
        return float(np.mean((1.0 + 1.0 / a) * fa - norm))

    def score(self, X, y, beta):
        t = X @ beta
        w = np.exp(self.tuning * log_pmf(y, t))
        r = np.where(y == 1, expit(-t), -expit(t))
        return X.T @ (w * r - _alpha_bias(t, self.tuning)) / X.shape[0]

    def weights(self, X, y, beta):
        return np.exp(self.tuning * log_pmf(y, X @ beta))

    def fp_update(self, X, y, beta):
        # weights and bias correction frozen at beta; the remaining equation
        # sum w (y - pi) x = sum b x is a concave weighted-logistic problem
        t = X @ beta
        w = np.exp(self.tuning * log_pmf(y, t))
        offset = X.T @ _alpha_bias(t, self.tuning)
        theta, _ = _weighted_logistic(X, y, w, beta, offset=offset)
        return theta


class _Mislabel(_Model):
    def __init__(self, kind, tuning):
        self.kind = kind
        self.tuning = tuning

    def _terms(self, X, beta):
        return _mislabel_model_terms(X, beta, self.kind, self.tuning)

    def objective(self, X, y, beta):
        _, (logp, logq, _) = self._terms(X, beta)
        return float(np.mean(np.where(y == 1, logp, logq)))

    def score(self, X, y, beta):
        return _mislabel_score(X, y, beta, self.kind, self.tuning)

    def weights(self, X, y, beta):
        return self._terms(X, beta)[1][2]

    def fp_update(self, X, y, beta):
        # Fisher scoring: working weight w^2 pi_m (1 - pi_m) >= 0
        _, (logp, logq, w) = self._terms(X, beta)
        resid = np.where(y == 1, np.exp(logq), -np.exp(logp))
        g = X.T @ (w * resid)
        info = (X * (w * w * np.exp(logp + logq))[:, None]).T @ X
        try:
            step = np.linalg.solve(info, g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(info, g, rcond=None)[0]
        f0 = self.objective(X, y, beta)
        s = 1.0
        for _ in range(50):
            cand = beta + s * step
            f = self.objective(X, y, cand)
            if np.isfinite(f) and f >= f0 - 1e-14 * abs(f0):
                return cand
            s *= 0.5
        return beta


def _model(spec):
    if spec.kind == "mle":
        return _MLE(None)
    if spec.kind == "gamma":
        return _Gamma(spec.tuning)
    if spec.kind == "alpha":
        return _Alpha(spec.tuning)
    return _Mislabel(spec.kind, spec.tuning)


def estimating_equation(data, beta, spec):
    """The estimating-equation vector of ``spec`` at ``beta``."""
    return _model(spec).score(data.X, data.y, np.asarray(beta, dtype=float))


def objective(data, beta, spec):
    """The criterion maximized by ``spec`` (see the module docstring)."""
    return _model(spec).objective(data.X, data.y, np.asarray(beta, dtype=float))


def instance_weights(data, beta, spec):
    return _model(spec).weights(data.X, data.y, np.asarray(beta, dtype=float))


# -- solvers -----------------------------------------------------------------

def _fixed_point(model, X, y, beta, opts):
    for it in range(opts.max_iter + 1):
        s = model.score(X, y, beta)
        snorm = float(np.max(np.abs(s)))
        if not np.isfinite(snorm):
            return beta, False, it, snorm
        if snorm <= opts.tol:
            return beta, True, it, snorm
        if it == opts.max_iter:
            break
        new = model.fp_update(X, y, beta)
        if not np.all(np.isfinite(new)):
            return beta, False, it, snorm
        if np.array_equal(new, beta):
            return beta, False, it, snorm
        beta = new
    return beta, False, opts.max_iter, snorm


def _quasi_newton(model, X, y, beta, opts):
    """BFGS on -objective with Armijo backtracking."""
    c = model.grad_scale
    p = beta.size

    def fg(b):
        return -model.objective(X, y, b), -c * model.score(X, y, b)

    f, g = fg(beta)
    Hinv = None
    eps = np.finfo(float).eps
    for it in range(opts.max_iter + 1):
        snorm = float(np.max(np.abs(g))) / c
        if not np.isfinite(snorm):
            return beta, False, it, snorm
        if snorm <= opts.tol:
            return beta, True, it, snorm
        if it == opts.max_iter:
            break
        d = -g if Hinv is None else -Hinv @ g
        slope = g @ d
        if slope >= 0:
            Hinv = None
            d, slope = -g, -(g @ g)
        step = 1.0
        accepted = False
        for _ in range(opts.max_halvings):
            cand = beta + step * d
            fc, gc = fg(cand)
            if np.isfinite(fc) and fc <= f + opts.armijo * step * slope:
                accepted = True
                break
            # near the optimum the decrease drops below rounding level of f;
            # accept any step that still shrinks the gradient
            if (np.isfinite(fc) and abs(fc - f) <= 16 * eps * max(1.0, abs(f))
                    and np.max(np.abs(gc)) < np.max(np.abs(g))):
                accepted = True
                break
            step *= opts.shrink
        if not accepted:
            if Hinv is None:
                return beta, False, it, snorm
            Hinv = None
            continue
        sk = cand - beta
        yk = gc - g
        sy = sk @ yk
        if Hinv is None:
            Hinv = np.eye(p) * (sy / (yk @ yk) if sy > 0 else 1.0)
        if sy > 1e-12 * np.sqrt((sk @ sk) * (yk @ yk)):
            rho = 1.0 / sy
            V = np.eye(p) - rho * np.outer(sk, yk)
            Hinv = V @ Hinv @ V.T + rho * np.outer(sk, sk)
        beta, f, g = cand, fc, gc
    return beta, False, opts.max_iter, snorm


def _diverging(model, X, y, beta):
    """True when beta has effectively run off to infinity.

    Two symptoms: a 0.1% radial stretch does not lower the objective (a
    finite local maximum loses a second-order amount), or the instances
    with |b'x| < 5 do not span all p directions, so the solution is pinned
    by a handful of points and the information matrix is numerically
    singular.
    """
    big = np.max(np.abs(beta))
    if big > 1e3:
        return True
    if big <= 1.0:
        return False
    active = X[np.abs(X @ beta) < 5.0]
    if active.shape[0] < X.shape[1] or np.linalg.matrix_rank(active) < X.shape[1]:
        return True
    gain = model.objective(X, y, (1.0 + 1e-3) * beta) - model.objective(X, y, beta)
    return gain >= -1e-13


def _run(model, X, y, beta, opts):
    solve = _fixed_point if opts.solver == "fixed_point" else _quasi_newton
    beta, ok, it, snorm = solve(model, X, y, np.array(beta, dtype=float), opts)
    diverged = ok and _diverging(model, X, y, beta)
    return beta, ok and not diverged, it, snorm, diverged


def fit(data, spec, opts=None, **kwargs):
    """Fit ``spec`` to ``data``.

    Parameters
    ----------
    data : Dataset
    spec : EstimatorSpec
    opts : SolverOptions, optional
        Keyword arguments are applied on top of ``opts``
        (``fit(data, spec, solver="quasi_newton")``).

    Returns
    -------
    FitResult
        ``score_norm`` is the max-abs estimating equation at the returned
        coefficients. A fit that hits ``max_iter``, or whose coefficients
        run off to infinity (the objective keeps rising along beta), is
        returned with ``converged=False`` and a :class:`ConvergenceWarning`.
    """
    opts = replace(opts or SolverOptions(), **kwargs)
    X, y = data.X, data.y
    model = _model(spec)
    notes = []

    if opts.init is not None:
        start = np.asarray(opts.init, dtype=float)
        if start.shape != (data.p,):
            raise ValueError("init has the wrong length")
        mle = start
    elif spec.kind == "mle":
        start = np.zeros(data.p)
        if detect_separation(X, y):
            notes.append("separation detected; the MLE does not exist")
            start, _ = fit_mle(X, y)
        mle = start
    else:
        mle, mle_notes = fit_mle(X, y)
        notes.extend(mle_notes)
        start = mle

    beta, ok, it, snorm, diverged = _run(model, X, y, start, opts)
    best = (beta, ok, it, snorm, diverged, model.objective(X, y, beta))

    if opts.n_restarts:
        rng = np.random.default_rng(opts.seed)
        for _ in range(opts.n_restarts):
            b0 = mle + rng.normal(0.0, 0.5, size=data.p)
            cand = _run(model, X, y, b0, opts)
            obj = model.objective(X, y, cand[0])
            cur = best[5]
            better = obj > cur or (obj == cur and np.linalg.norm(cand[0]) < np.linalg.norm(best[0]))
            if cand[1] and (better or not best[1]):
                best = (*cand, obj)

    beta, ok, it, snorm, diverged, obj = best
    if diverged:
        notes.append("coefficients diverge: the objective keeps increasing along beta")
        warnings.warn(f"{spec}: coefficients diverge", ConvergenceWarning, stacklevel=2)
    elif not ok:
        warnings.warn(
            f"{spec} did not converge in {opts.max_iter} iterations "
            f"(max |score| = {snorm:.3g})",
            ConvergenceWarning,
            stacklevel=2,
        )
    return FitResult(
        spec=spec,
        beta=beta,
        converged=bool(ok),
        iterations=int(it),
        score_norm=snorm,
        objective=obj,
        weights=model.weights(X, y, beta),
        solver=opts.solver,
        notes=tuple(notes),
    )


def profile_mislabel(data, kind="constant", grid=None, opts=None):
    """Pick eta (or xi) by maximizing the observed-data likelihood over a grid.

    For ``kind="constant"`` the default grid is eta in {0, 0.01, ..., 0.3};
    for ``kind="xi"`` it is every (xi0, xi1) with entries in
    {0, 0.05, ..., 0.3}. Returns (best FitResult, list of (tuning, loglik)).
    """
    if kind == "constant":
        grid = np.round(np.arange(0, 0.301, 0.01), 10) if grid is None else grid
        specs = [EstimatorSpec.constant(e) for e in grid]
    elif kind == "xi":
        if grid is None:
            vals = np.round(np.arange(0, 0.301, 0.05), 10)
            grid = [(a, b) for a in vals for b in vals]
        specs = [EstimatorSpec.xi(*g) for g in grid]
    else:
        raise ValueError("kind must be 'constant' or 'xi'")
    opts = opts or SolverOptions()
    if opts.init is None:
        mle, _ = fit_mle(data.X, data.y)
        opts = replace(opts, init=mle)
    best, trace = None, []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for spec in specs:
            res = fit(data, spec, opts)
            ll = res.objective
            trace.append((spec.tuning, ll))
            if res.converged and (best is None or ll > best.objective):
                best = res
    if best is None:
        raise ConvergenceFailure("no grid value produced a converged fit")
    return best, trace
