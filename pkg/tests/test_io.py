import numpy as np
import pytest
from hypothesis import given, strategies as st

from gammalogit import Dataset, EstimatorSpec, fit
from gammalogit.io import (
    DataError,
    load_csv,
    load_pima,
    pima_path,
    standardize,
    write_csv,
    write_table,
)

from conftest import make_data


def test_bundled_pima():
    raw = load_csv(pima_path(), "Outcome")
    assert raw.n == 768 and raw.p == 8
    assert int(raw.y.sum()) == 268
    assert raw.columns[0] == "Pregnancies" and raw.columns[-1] == "Age"
    std = load_pima()
    assert std.p == 9 and np.all(std.X[:, -1] == 1)
    np.testing.assert_allclose(std.X[:, :-1].mean(0), 0, atol=1e-12)
    np.testing.assert_allclose(std.X[:, :-1].std(0, ddof=1), 1, atol=1e-12)
    assert load_pima(variant="complete_case").n == 532


def test_load_csv_errors(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "missing.csv", "y")
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataError, match="empty.csv"):
        load_csv(empty, "y")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,y\n1,0\nx,1\n")
    with pytest.raises(DataError, match=r"row 3, column 'a'"):
        load_csv(bad, "y")
    two = tmp_path / "two.csv"
    two.write_text("a,y\n1,0\n2,2\n")
    with pytest.raises(DataError, match="row 3"):
        load_csv(two, "y")
    with pytest.raises(DataError, match="no column"):
        load_csv(two, "z")


def test_comment_lines_skipped(tmp_path):
    path = write_table(tmp_path / "t.csv", ["a", "y"], [[1.5, 0], [2.5, 1]], meta={"seed": 1})
    assert path.read_text().startswith("# seed=1\n")
    d = load_csv(path, "y")
    np.testing.assert_array_equal(d.X[:, 0], [1.5, 2.5])


@given(st.integers(0, 10**6))
def test_round_trip(tmp_path_factory, seed):
    d = make_data(n=25, p=3, seed=seed)
    path = write_csv(d, tmp_path_factory.mktemp("rt") / "d.csv")
    back = load_csv(path, "y")
    assert np.array_equal(back.X, d.X) and np.array_equal(back.y, d.y)


def test_standardize_idempotent_and_errors():
    d = make_data(n=60, p=4, seed=1)
    raw = Dataset(d.X[:, :-1] * 3 + 2, d.y)
    once, _ = standardize(raw)
    twice, _ = standardize(Dataset(once.X[:, :-1], once.y))
    np.testing.assert_allclose(twice.X, once.X, atol=1e-12)
    const = Dataset(np.column_stack([np.ones(10), np.arange(10)]), np.r_[np.zeros(5), np.ones(5)])
    with pytest.raises(DataError, match="x1"):
        standardize(const)


def test_decision_rule_invariant_under_standardization():
    rng = np.random.default_rng(4)
    raw_X = rng.normal([5, -2, 100], [2, 0.5, 30], size=(300, 3))
    y = (rng.random(300) < 1 / (1 + np.exp(-(raw_X[:, 0] - 5)))).astype(int)
    std, rec = standardize(Dataset(raw_X, y))
    res = fit(std, EstimatorSpec.gamma(1.0))
    raw_beta = rec.back_transform(res.beta)
    raw_pred = np.column_stack([raw_X, np.ones(300)]) @ raw_beta > 0
    std_pred = rec.transform(raw_X) @ res.beta > 0
    assert np.array_equal(raw_pred, std_pred)
    np.testing.assert_allclose(np.column_stack([raw_X, np.ones(300)]) @ raw_beta, std.X @ res.beta,
                               atol=1e-10)
