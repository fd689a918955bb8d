import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import expit

from gammalogit import load_pima
from gammalogit.simulation import (
    SETTINGS,
    MislabelMechanism,
    StudyConfig,
    classification_accuracy,
    eta_functions,
    generate_contaminated,
    internal_to_table,
    mislabel_rate_tau,
    run_study,
    table1_beta0,
)
from gammalogit import Dataset


@pytest.fixture(scope="module")
def pima():
    return load_pima()


def test_eta_examples():
    X = np.column_stack([np.zeros((3, 8)), np.ones(3)])
    e0, e1 = eta_functions(MislabelMechanism("S1", 0.05, 0.05), X, np.zeros(9))
    assert np.all(e0 == 0.05) and np.all(e1 == 0.05)
    e0, e1 = eta_functions(MislabelMechanism("S2", 0.05, 0.3), X, np.zeros(9))
    np.testing.assert_allclose(e0, 0.175)
    np.testing.assert_allclose(e1, 0.175)
    mech = MislabelMechanism("S4", 0.05, 0.3, a=2.0)
    far = np.column_stack([np.full((3, 8), 10.0), np.ones(3)])
    e0, e1 = eta_functions(mech, far, np.zeros(9))
    assert np.all(e0 == 0.05) and np.all(e1 == 0.05)
    inside = np.zeros((1, 9))
    inside[0, [0, 2]] = [2.0, -2.0]
    assert eta_functions(mech, inside, np.zeros(9))[0][0] == 0.3


@given(st.sampled_from(SETTINGS), st.floats(0.05, 0.5) | st.just(0.5), st.integers(0, 10**6))
def test_eta_ranges(setting, u1, seed):
    rng = np.random.default_rng(seed)
    X = np.column_stack([rng.normal(0, 2, (50, 8)), np.ones(50)])
    beta0 = rng.normal(0, 2, 9)
    mech = MislabelMechanism(setting, 0.05, u1).draw_auxiliaries(rng, 9)
    e0, e1 = eta_functions(mech, X, beta0)
    assert np.all((e0 >= 0) & (e0 <= 1) & (e1 >= 0) & (e1 <= 1))
    assert np.all(e0 + e1 <= 1)
    if u1 < 0.5:
        assert np.all(e0 + e1 < 1)


def test_auxiliaries_required():
    X = np.ones((2, 9))
    for s in ("S3", "S4"):
        with pytest.raises(ValueError):
            eta_functions(MislabelMechanism(s), X, np.zeros(9))


def test_no_flips_without_noise(pima):
    beta0 = table1_beta0(9)
    data, y0 = generate_contaminated(pima.X, beta0, MislabelMechanism("S1", 0.0, 0.0), seed=1)
    assert np.array_equal(data.y, y0)
    assert mislabel_rate_tau(MislabelMechanism("S1", 0.0, 0.0), beta0, pima.X) == 0.0


def test_generation_deterministic(pima):
    mech = MislabelMechanism("S1", 0.05, 0.3)
    a, ya = generate_contaminated(pima.X, table1_beta0(9), mech, seed=5)
    b, yb = generate_contaminated(pima.X, table1_beta0(9), mech, seed=5)
    assert np.array_equal(a.y, b.y) and np.array_equal(ya, yb)


@pytest.mark.parametrize("setting", SETTINGS)
def test_tau_matches_monte_carlo(pima, setting):
    rng = np.random.default_rng(21)
    beta0 = rng.normal(0, 2, 9)
    mech = MislabelMechanism(setting, 0.05, 0.3).draw_auxiliaries(rng, 9)
    X = pima.X[rng.integers(0, pima.n, 100_000)]
    data, y0 = generate_contaminated(X, beta0, mech, rng)
    rate = np.mean(data.y != y0)
    tau = mislabel_rate_tau(mech, beta0, X)
    assert abs(rate - tau) < 3 * np.sqrt(tau * (1 - tau) / X.shape[0])


def test_tau_examples(pima):
    beta0 = np.random.default_rng(0).normal(0, 2, 9)
    assert mislabel_rate_tau(MislabelMechanism("S1", 0.2, 0.2), beta0, pima.X) == pytest.approx(0.2)
    pi = expit(pima.X @ beta0)
    expect = 0.05 * np.mean(1 - pi) + 0.3 * np.mean(pi)
    assert mislabel_rate_tau(MislabelMechanism("S1", 0.05, 0.3), beta0, pima.X) == pytest.approx(expect)


def test_classification_accuracy():
    rng = np.random.default_rng(2)
    X = np.column_stack([rng.normal(size=200), np.ones(200)])
    beta0 = np.array([1.5, 0.2])
    clean = Dataset(X, (X @ beta0 > 0).astype(int))
    assert classification_accuracy(beta0, clean) == 1.0
    noisy = Dataset(X, (rng.random(200) < expit(X @ beta0)).astype(int))
    ca = classification_accuracy(beta0, noisy)
    assert classification_accuracy(-beta0, noisy) == pytest.approx(1 - ca)
    assert classification_accuracy(7.5 * beta0, noisy) == ca


def test_table1_layouts():
    v = table1_beta0(9, "intercept_first")
    assert v[-1] == 0 and list(v[:3]) == [1, -1, 1]
    assert list(internal_to_table(v, "intercept_first")[:4]) == [0, 1, -1, 1]
    w = table1_beta0(9, "intercept_last")
    assert list(w[:4]) == [0, 1, -1, 1]


@pytest.mark.parametrize("kwargs", [
    dict(replicates=0),
    dict(mode="table1", beta0_rule="random"),
    dict(settings=("S9",)),
    dict(methods=("boosting",)),
    dict(u1_values=(0.7,), settings=("S2",)),
    dict(mode="other"),
])
def test_config_rejected(kwargs):
    with pytest.raises(ValueError):
        StudyConfig(**kwargs)


def small_config(**kw):
    base = dict(settings=("S1", "S3"), u1_values=(0.1, 0.3), n=120, replicates=2,
                methods=("logistic", "gamma", "gamma_star", "alpha_star"),
                gamma_grid=(0.5, 1.0, 1.5), alpha_grid=(0.5, 1.0))
    base.update(kw)
    return StudyConfig(**base)


def test_study_deterministic_and_worker_independent():
    a = run_study(small_config(), seed=3)
    b = run_study(small_config(), seed=3)
    c = run_study(small_config(n_jobs=2), seed=3)
    assert a.records == b.records == c.records
    assert len(a.records) == 2 * 2 * 2
    for r in a.records:
        assert 0 <= r["tau"] <= 1
        assert all(0 <= v <= 1 for v in r["ca"].values())
    t2 = a.table2()
    assert set(t2) == {"S1", "S3"}
    rows = a.figure3()
    assert {r[1] for r in rows} == {"logistic", "gamma", "gamma_star", "alpha_star"}


def test_table1_mode_and_outputs(tmp_path):
    cfg = StudyConfig(mode="table1", settings=("S1",), u1_values=(0.1,), n=500, replicates=3)
    rep = run_study(cfg, seed=2)
    t = rep.table1()["S1"]
    assert list(t["true"][:4]) == [0, 1, -1, 1]
    assert t["replicates"] == sum(r["converged"] for r in rep.records) >= 1
    assert t["mean"].shape == (9,) and np.all(np.isfinite(t["se"]))
    paths = rep.write(tmp_path, meta={"seed": 1})
    names = sorted(p.name for p in paths)
    assert names == ["study.json", "study_table1.csv"]
    assert (tmp_path / "study_table1.csv").read_text().startswith("# seed=1")


def test_run_study_needs_seed():
    with pytest.raises(ValueError):
        run_study(small_config(), seed=None)
