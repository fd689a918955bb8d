import numpy as np
import pytest
from hypothesis import given, strategies as st

from gammalogit.core import (
    MislabelPair,
    bias_term_B,
    contaminated_pmf,
    label_pmf,
    mixture_decompose,
    pmf_gamma_norm,
    success_prob,
)

LN2 = np.log(2.0)
finite = st.floats(-30, 30)
gammas = st.floats(0.01, 10)


def x1(t):
    # one-coordinate design so that beta'x = t
    return np.array([t]), np.array([1.0])


def test_success_prob_examples():
    assert success_prob(*x1(0.0)) == 0.5
    assert success_prob(*x1(LN2)) == pytest.approx(2 / 3, abs=1e-15)
    tiny = success_prob(*x1(-700.0))
    assert 0 < tiny <= 1e-300


def test_success_prob_no_overflow():
    t = np.linspace(-1000, 1000, 2001)
    p = success_prob(t[:, None], np.array([1.0]))
    assert np.all(np.isfinite(p)) and np.all(np.diff(p) >= 0)


def test_dimension_and_finiteness_errors():
    with pytest.raises(ValueError):
        success_prob(np.ones(3), np.ones(2))
    with pytest.raises(ValueError):
        success_prob(np.array([np.nan]), np.ones(1))


def test_label_pmf_examples():
    assert label_pmf(1, *x1(0.0)) == 0.5
    assert label_pmf(0, *x1(LN2)) == pytest.approx(1 / 3, abs=1e-15)
    with pytest.raises(ValueError):
        label_pmf(2, *x1(0.0))


@given(finite)
def test_label_pmf_normalization(t):
    x, b = x1(t)
    assert label_pmf(0, x, b) + label_pmf(1, x, b) == pytest.approx(1.0, abs=1e-15)


def test_gamma_norm_examples():
    assert pmf_gamma_norm(*x1(0.0), 1.0) == pytest.approx(np.sqrt(0.5), abs=1e-12)
    assert pmf_gamma_norm(*x1(0.0), 0.1) == pytest.approx(2 ** (-0.1 / 1.1), abs=1e-12)
    assert pmf_gamma_norm(*x1(800.0), 2.0) == 1.0
    with pytest.raises(ValueError):
        pmf_gamma_norm(*x1(0.0), 0.0)


@given(finite, gammas)
def test_gamma_norm_bounds_and_symmetry(t, g):
    v = pmf_gamma_norm(*x1(t), g)
    lo = 2 ** (-g / (g + 1))
    assert lo - 1e-15 <= v <= 1.0
    assert v == pytest.approx(pmf_gamma_norm(*x1(-t), g), rel=1e-13)
    assert pmf_gamma_norm(*x1(0.0), g) <= v + 1e-15


def test_mixture_decompose_examples():
    d = mixture_decompose(MislabelPair(0.0, 0.0))
    assert d.c == 1.0 and d.h1 == 0.0
    d = mixture_decompose(MislabelPair(0.1, 0.2))
    assert d.c == pytest.approx(0.7) and d.h1 == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        mixture_decompose((0.6, 0.4))


etas = st.tuples(st.floats(0, 0.49), st.floats(0, 0.49))


@given(etas, st.floats(0, 1), st.sampled_from([0, 1]))
def test_mixture_reconstruction(eta, pi, y):
    d = mixture_decompose(eta)
    assert abs(d.mixture_pmf(y, pi) - contaminated_pmf(y, pi, *eta)) < 1e-14


@given(finite, gammas, etas)
def test_bias_term_symmetry(t, g, eta):
    x, b = x1(t)
    a = bias_term_B(x, b, g, eta)
    c = bias_term_B(x, -b, g, eta[::-1])
    assert a == pytest.approx(c, rel=1e-12, abs=1e-300)


def test_bias_term_examples():
    for g in (0.5, 1, 3):
        assert bias_term_B(*x1(0.0), g, (0.1, 0.2)) == pytest.approx(0.3 * 0.5 ** (g / (g + 1)))
    assert abs(bias_term_B(*x1(0.7), 1e4, (0.1, 0.2)) - 0.1) < 1e-3
    for t in (-5, -0.3, 0.2, 4):
        assert abs(bias_term_B(*x1(t), 1e4, (0.15, 0.15)) - 0.15) < 1e-3


def test_bias_term_flat_at_equal_eta():
    vals = [bias_term_B(*x1(t), 1e4, (0.2, 0.2)) for t in np.linspace(-5, 5, 101)]
    assert max(vals) - min(vals) < 1e-3
