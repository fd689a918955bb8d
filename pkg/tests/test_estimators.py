import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import expit

from gammalogit import (
    ConvergenceWarning,
    Dataset,
    EstimatorSpec,
    SolverOptions,
    fit,
)
from gammalogit.core import label_pmf, pmf_gamma_norm
from gammalogit.estimators import (
    alpha_bias_correction,
    alpha_objective,
    alpha_score,
    alpha_weight,
    constant_mislabel_score,
    constant_mislabel_weight,
    detect_separation,
    gamma_objective,
    gamma_score,
    mislabel_loglik,
    objective,
    profile_mislabel,
    weight_gamma,
    xi_mislabel_probs,
    xi_score,
)

from conftest import make_data

LN2 = np.log(2.0)


def central_grad(f, beta, h=1e-6):
    g = np.zeros_like(beta)
    for j in range(beta.size):
        e = np.zeros_like(beta)
        e[j] = h
        g[j] = (f(beta + e) - f(beta - e)) / (2 * h)
    return g


# -- objective and score ---------------------------------------------------

def test_objective_at_zero(data):
    for g in (0.5, 1, 2):
        assert gamma_objective(data, np.zeros(data.p), g) == pytest.approx(0.5 ** (g / (g + 1)))


def test_objective_hand_value():
    # (y, (g+1) b'x) = (1, 0) and (0, ln 3) at g = 1
    d = Dataset(np.array([[0.0], [np.log(3) / 2]]), np.array([1, 0]))
    assert gamma_objective(d, np.array([1.0]), 1.0) == pytest.approx((np.sqrt(0.5) + 0.5) / 2)


def test_objective_matched_limit():
    X = np.array([[1.0], [-1.0], [2.0]])
    d = Dataset(X, np.array([1, 0, 1]))
    assert gamma_objective(d, np.array([500.0]), 1.0) == pytest.approx(1.0)


def test_score_at_zero(data):
    for g in (0.5, 2):
        expect = 0.5 ** (g / (g + 1)) * data.X.T @ (data.y - 0.5) / data.n
        np.testing.assert_allclose(gamma_score(data, np.zeros(data.p), g), expect, atol=1e-15)


def test_score_small_gamma_is_logistic_score(data):
    b = np.array([0.3, -0.2, 0.1])
    mle_score = data.X.T @ (data.y - expit(data.X @ b)) / data.n
    np.testing.assert_allclose(gamma_score(data, b, 1e-8), mle_score, atol=1e-6)


@given(st.integers(0, 10**6), st.sampled_from([0.5, 1.0, 2.0]))
def test_gradient_identity(seed, g):
    rng = np.random.default_rng(seed)
    d = Dataset(rng.normal(size=(50, 5)), rng.integers(0, 2, 50))
    b = rng.normal(0, 0.5, 5)
    fd = central_grad(lambda v: gamma_objective(d, v, g), b)
    an = g * gamma_score(d, b, g)
    assert np.max(np.abs(fd - an)) <= 1e-6 * max(np.max(np.abs(an)), 1e-3)


@given(st.integers(0, 10**6))
def test_alpha_gradient_identity(seed):
    rng = np.random.default_rng(seed)
    d = Dataset(rng.normal(size=(40, 3)), rng.integers(0, 2, 40))
    b, a = rng.normal(0, 0.5, 3), rng.uniform(0.2, 2)
    fd = central_grad(lambda v: alpha_objective(d, v, a), b)
    np.testing.assert_allclose(fd, (1 + a) * alpha_score(d, b, a), atol=1e-8)


# -- weights -----------------------------------------------------------------

def test_weight_examples():
    x, b = np.array([1.0]), np.array([0.4])
    assert weight_gamma(0, x, b, 0.0) == 1.0 and weight_gamma(1, x, b, 0.0) == 1.0
    assert weight_gamma(1, np.array([0.0]), b, 1.0) == pytest.approx(np.sqrt(0.5))
    assert weight_gamma(1, np.array([-2000.0]), b, 2.0) == 0.0


@given(st.floats(-20, 20), st.floats(0.01, 5), st.sampled_from([0, 1]))
def test_weight_relation(t, g, y):
    x = np.array([t, 1.0])
    b = np.array([1.0, 0.0])
    lhs = weight_gamma(y, x, b, g) ** (g + 1)
    rhs = alpha_weight(y, x, (g + 1) * b, g)
    assert abs(lhs - rhs) < 1e-12


@given(st.floats(-20, 20), st.floats(0.01, 5))
def test_conditional_expectation_identity(t, g0):
    x, b = np.array([t]), np.array([1.0])
    total = sum(weight_gamma(y, x, b, g0) * label_pmf(y, x, b) for y in (0, 1))
    assert abs(total - pmf_gamma_norm(x, b, g0)) < 1e-12


@given(st.floats(0.01, 5))
def test_weight_monotone_in_logit(g):
    t = np.linspace(-30, 30, 601)[:, None]
    b = np.array([1.0])
    assert np.all(np.diff(weight_gamma(1, t, b, g)) >= 0)
    assert np.all(np.diff(weight_gamma(0, t, b, g)) <= 0)


def test_alpha_bias_examples():
    for a in (0.3, 1, 2.5):
        assert alpha_bias_correction(np.array([0.0]), np.array([1.0]), a) == 0.0
    v = alpha_bias_correction(np.array([LN2]), np.array([1.0]), 1.0)
    assert v == pytest.approx(2 / 27, abs=1e-15)


# -- mislabel models ---------------------------------------------------------

def test_constant_mislabel_examples(data):
    b = np.array([0.3, -0.2, 0.1])
    mle_score = data.X.T @ (data.y - expit(data.X @ b)) / data.n
    np.testing.assert_allclose(constant_mislabel_score(data, b, 0.0), mle_score, atol=1e-15)
    assert constant_mislabel_weight(np.array([0.0]), np.array([1.0]), 0.1) == pytest.approx(0.8)
    far = constant_mislabel_weight(np.array([[-60.0], [60.0]]), np.array([1.0]), 0.2)
    assert np.all(far < 1e-20)
    with pytest.raises(ValueError):
        constant_mislabel_score(data, b, 0.5)


def test_xi_examples(data):
    b = np.array([0.3, -0.2, 0.1])
    mle_score = data.X.T @ (data.y - expit(data.X @ b)) / data.n
    np.testing.assert_allclose(xi_score(data, b, (0.0, 0.0)), mle_score, atol=1e-15)
    e0, e1, _, _ = xi_mislabel_probs(0.0, (0.1, 0.25))
    assert e0 == pytest.approx(0.1) and e1 == pytest.approx(0.25)
    with pytest.raises(ValueError):
        xi_score(data, b, (0.6, 0.5))


@given(st.floats(-15, 15), st.floats(0, 0.45), st.floats(0, 0.45))
def test_xi_derivative_matches_fd(t, a, c):
    h = 1e-5
    _, _, d0, d1 = xi_mislabel_probs(t, (a, c))
    p0, p1, _, _ = xi_mislabel_probs(t + h, (a, c))
    m0, m1, _, _ = xi_mislabel_probs(t - h, (a, c))
    for an, fd in ((d0, (p0 - m0) / (2 * h)), (d1, (p1 - m1) / (2 * h))):
        assert abs(an - fd) <= 1e-6 * max(abs(an), 1e-4)


@pytest.mark.parametrize("kind, tuning", [("constant", 0.1), ("xi", (0.1, 0.2))])
def test_mislabel_score_is_loglik_gradient(data, kind, tuning):
    b = np.array([0.5, -0.4, 0.2])
    fd = central_grad(lambda v: objective(data, v, EstimatorSpec(kind, tuning)), b)
    score = constant_mislabel_score(data, b, tuning) if kind == "constant" else xi_score(data, b, tuning)
    np.testing.assert_allclose(fd, score, atol=1e-8)


def test_mislabel_loglik_reduces_to_logistic(data):
    b = np.array([0.5, -0.4, 0.2])
    ll = np.mean(np.log(label_pmf(data.y, data.X, b)))
    assert mislabel_loglik(data, b, 0.0, 0.0) == pytest.approx(ll, rel=1e-12)


# -- fitting -----------------------------------------------------------------

def test_solvers_agree():
    d = make_data(n=400, seed=3, noise=0.1)
    for spec in (EstimatorSpec.gamma(1.0), EstimatorSpec.alpha(0.5), EstimatorSpec.constant(0.1),
                 EstimatorSpec.xi(0.05, 0.1), EstimatorSpec.mle()):
        a = fit(d, spec, solver="fixed_point")
        b = fit(d, spec, solver="quasi_newton")
        assert a.converged and b.converged, spec
        np.testing.assert_allclose(a.beta, b.beta, atol=1e-5)


def test_stationarity_and_local_max():
    d = make_data(n=300, seed=5, noise=0.1)
    res = fit(d, EstimatorSpec.gamma(1.5))
    assert res.converged and res.score_norm <= 1e-8
    assert np.all((res.weights >= 0) & (res.weights <= 1))
    rng = np.random.default_rng(0)
    f0 = gamma_objective(d, res.beta, 1.5)
    for _ in range(100):
        u = rng.normal(size=d.p)
        u *= 1e-4 / np.linalg.norm(u)
        assert gamma_objective(d, res.beta + u, 1.5) <= f0 + 1e-15


def test_limit_consistency():
    d = make_data(n=5000, p=4, seed=11)
    mle = fit(d, EstimatorSpec.mle()).beta
    for spec in (EstimatorSpec.gamma(1e-3), EstimatorSpec.alpha(1e-3),
                 EstimatorSpec.constant(0.0), EstimatorSpec.xi(0.0, 0.0)):
        assert np.max(np.abs(fit(d, spec).beta - mle)) < 1e-2


def test_gamma_downweights_flipped_points():
    d = make_data(n=500, seed=2, beta=[2.0, -1.0, 0.5])
    t = d.X @ np.array([2.0, -1.0, 0.5])
    y = d.y.copy()
    far = np.flatnonzero(np.abs(t) > 3)[:15]
    y[far] = (t[far] < 0).astype(int)
    res = fit(d.with_labels(y), EstimatorSpec.gamma(1.0))
    assert res.weights[far].max() < 0.2 < np.median(res.weights)


def test_divergent_fit_flagged():
    # one covariate splits the labels apart, so beta runs off along it
    X = np.column_stack([np.r_[-np.arange(1, 11), np.arange(1, 11)] / 5.0, np.ones(20)])
    y = np.r_[np.zeros(10), np.ones(10)]
    d = Dataset(X, y)
    assert detect_separation(X, y)
    with pytest.warns(ConvergenceWarning):
        res = fit(d, EstimatorSpec.gamma(1.0))
    assert not res.converged
    assert any("diverge" in n for n in res.notes)


def test_nonconvergence_reported(data):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = fit(data, EstimatorSpec.gamma(1.0), max_iter=1, solver="fixed_point")
    assert not res.converged and res.iterations == 1


def test_restarts_are_seeded():
    d = make_data(n=300, seed=4, noise=0.15)
    a = fit(d, EstimatorSpec.gamma(2.0), n_restarts=3, seed=9)
    b = fit(d, EstimatorSpec.gamma(2.0), n_restarts=3, seed=9)
    np.testing.assert_array_equal(a.beta, b.beta)
    assert a.objective >= fit(d, EstimatorSpec.gamma(2.0)).objective - 1e-12


def test_profile_mislabel_recovers_rate():
    rng = np.random.default_rng(1)
    X = np.column_stack([rng.normal(size=(4000, 2)), np.ones(4000)])
    y0 = (rng.random(4000) < expit(X @ np.array([3.0, -2.0, 0.5]))).astype(int)
    y = np.where(rng.random(4000) < 0.1, 1 - y0, y0)
    best, trace = profile_mislabel(Dataset(X, y), "constant")
    assert abs(best.spec.tuning - 0.1) <= 0.03
    assert len(trace) == 31


@pytest.mark.parametrize("kind, tuning", [("gamma", 0.0), ("gamma", -1), ("alpha", None),
                                          ("constant", 0.5), ("xi", (0.5, 0.5)), ("mle", 1.0),
                                          ("beta", 1.0)])
def test_spec_validation(kind, tuning):
    with pytest.raises((ValueError, TypeError)):
        EstimatorSpec(kind, tuning)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.ones((2, 3)), [0, 1])
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 1)), [0, 1, 2])
    with pytest.raises(ValueError):
        Dataset(np.array([[np.inf], [1.0]]), [0, 1])
    with pytest.raises(ValueError):
        SolverOptions(solver="newton")
