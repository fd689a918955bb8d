"""CSV ingestion, standardization and the bundled Pima data.

The bundled ``pima.csv`` is the standard 768-row Pima Indians diabetes
table. Zeros that stand for missing values in some columns (blood pressure,
skin fold, insulin, BMI, glucose) are kept as they are; no imputation or
row filtering is done.
"""
import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .estimators import Dataset

__all__ = [
    "DataError",
    "Standardization",
    "load_csv",
    "standardize",
    "write_csv",
    "write_table",
    "pima_path",
    "load_pima",
]

PIMA_RESPONSE = "Outcome"


class DataError(ValueError):
    """Malformed or invalid input data."""


def pima_path():
    return Path(resources.files("gammalogit") / "data" / "pima.csv")


def load_csv(path, response_column):
    """Read a numeric CSV with a header row into a Dataset.

    Covariates keep their header order; the response must be 0/1. No
    intercept column is added. Lines starting with ``#`` are skipped.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not valid UTF-8 ({exc})") from exc
    rows = [r for r in rows if any(c.strip() for c in r) and not r[0].startswith("#")]
    if not rows:
        raise DataError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if response_column not in header:
        raise DataError(f"{path}: no column named {response_column!r}")
    body = rows[1:]
    if not body:
        raise DataError(f"{path}: header only, no data rows")
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} fields, expected {len(header)}")
        for j, cell in enumerate(row):
            try:
                values[i - 2, j] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: row {i}, column {header[j]!r}: non-numeric value {cell!r}"
                ) from None
    k = header.index(response_column)
    y = values[:, k]
    bad = np.flatnonzero((y != 0) & (y != 1))
    if bad.size:
        raise DataError(
            f"{path}: row {bad[0] + 2}, column {response_column!r}: "
            f"response must be 0 or 1, got {y[bad[0]]:g}"
        )
    cols = [h for j, h in enumerate(header) if j != k]
    X = np.delete(values, k, axis=1)
    if not np.all(np.isfinite(X)):
        raise DataError(f"{path}: non-finite covariate values")
    return Dataset(X, y.astype(int), tuple(cols))


def write_csv(data, path, response_column="y"):
    """Write a Dataset so that :func:`load_csv` reproduces it exactly."""
    path = Path(path)
    names = list(data.columns) or [f"x{j + 1}" for j in range(data.p)]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + [response_column])
        for row, label in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
    return path


def write_table(path, header, rows, meta=None):
    """Write rows under ``header``; ``meta`` goes in a leading ``#`` line.

    Floats are written with repr so the file is exact and byte-stable.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        if meta:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


@dataclass(frozen=True)
class Standardization:
    """Column means and sample standard deviations used to standardize X."""

    mean: np.ndarray
    sd: np.ndarray
    columns: tuple

    def transform(self, X_raw):
        """Standardize raw covariates and append the intercept column."""
        Z = (np.asarray(X_raw, dtype=float) - self.mean) / self.sd
        return np.column_stack([Z, np.ones(Z.shape[0])])

    def back_transform(self, beta):
        """Coefficients on the raw covariate scale (intercept last)."""
        beta = np.asarray(beta, dtype=float)
        slopes = beta[:-1] / self.sd
        return np.append(slopes, beta[-1] - slopes @ self.mean)


def standardize(data):
    """Center and scale covariates (divisor n - 1) and append an intercept.

    Returns (standardized Dataset, Standardization).
    """
    X = np.asarray(data.X, dtype=float)
    mean = X.mean(axis=0)
    sd = X.std(axis=0, ddof=1)
    names = list(data.columns) or [f"x{j + 1}" for j in range(data.p)]
    zero = [names[j] for j in np.flatnonzero(~(sd > 0))]
    if zero:
        raise DataError(f"zero-variance column(s): {', '.join(zero)}")
    rec = Standardization(mean, sd, tuple(names))
    return Dataset(rec.transform(X), data.y, tuple(names) + ("intercept",)), rec


PIMA_VARIANTS = ("full", "complete_case")


def pima_rows(data, variant="full"):
    """Row mask for a Pima variant.

    ``complete_case`` keeps the 532 rows with nonzero glucose, blood
    pressure, skin fold and BMI; insulin is kept as a column.
    """
    if variant == "full":
        return np.ones(data.n, dtype=bool)
    if variant == "complete_case":
        idx = [data.columns.index(c) for c in ("Glucose", "BloodPressure", "SkinThickness", "BMI")]
        return np.all(data.X[:, idx] != 0, axis=1)
    raise ValueError(f"unknown Pima variant {variant!r}; expected one of {PIMA_VARIANTS}")


def load_pima(standardized=True, variant="full"):
    """The bundled Pima data, optionally standardized with intercept appended."""
    data = load_csv(pima_path(), PIMA_RESPONSE)
    data = data.subset(pima_rows(data, variant))
    if not standardized:
        return data
    return standardize(data)[0]
