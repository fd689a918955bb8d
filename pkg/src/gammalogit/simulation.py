"""Mislabel mechanisms and the replicate study runner.

Covariate rows are resampled (with replacement) from the standardized Pima
table with the intercept appended last. Each replicate gets its own
``SeedSequence`` keyed by (setting, u1, replicate) so results do not depend
on the number of worker processes.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
import json
from pathlib import Path
import warnings

import numpy as np
from scipy.special import expit

from .estimators import (
    ConvergenceFailure,
    ConvergenceWarning,
    Dataset,
    EstimatorSpec,
    SolverOptions,
    fit,
    fit_mle,
    profile_mislabel,
)
from .inference import SingularHessianError, sandwich_covariance
from .io import load_pima, write_table
from .selection import (
    adaptive_criterion,
    default_grid,
    fit_grid,
    oracle_loglik,
)

__all__ = [
    "SETTINGS",
    "METHODS",
    "MislabelMechanism",
    "eta_functions",
    "generate_contaminated",
    "mislabel_rate_tau",
    "classification_accuracy",
    "StudyConfig",
    "ReplicateReport",
    "run_replicate",
    "run_study",
    "table1_beta0",
]

SETTINGS = ("S1", "S2", "S3", "S4")
METHODS = ("logistic", "gamma", "gamma_star", "alpha_star", "constant", "xi")


@dataclass(frozen=True)
class MislabelMechanism:
    """Flip-probability design.

    S1: constants (u0, u1). S2: both equal u0 + (u1 - u0) pi(x; beta0).
    S3: eta_j = u0 + (u1 - u0) pi(x; b_j). S4: u0 plus (u1 - u0) inside
    windows around (X1, X3) = (a, -a) for eta0 and (X1, X2) = (-a, -a) for
    eta1. ``b0``, ``b1`` and ``a`` are per-replicate draws (see
    :meth:`draw_auxiliaries`).
    """

    setting: str = "S1"
    u0: float = 0.05
    u1: float = 0.1
    b0: np.ndarray = None
    b1: np.ndarray = None
    a: float = None

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ValueError(f"unknown setting {self.setting!r}")
        for u in (self.u0, self.u1):
            if not 0 <= u <= 1:
                raise ValueError("u0 and u1 must be probabilities")
        # S2-S4 can put the larger of u0, u1 on both flips at once
        if self.setting == "S1" and self.u0 + self.u1 >= 1:
            raise ValueError("need u0 + u1 < 1")
        if self.setting != "S1" and max(self.u0, self.u1) > 0.5:
            raise ValueError("need max(u0, u1) <= 0.5 so that eta0 + eta1 <= 1")

    def draw_auxiliaries(self, rng, p):
        if self.setting == "S3":
            return replace(self, b0=rng.normal(0.0, 2.0, p), b1=rng.normal(0.0, 2.0, p))
        if self.setting == "S4":
            return replace(self, a=float(rng.normal(2.0, 0.3)))
        return self


def eta_functions(mech, X, beta0):
    """(eta0(x), eta1(x)) at each row of ``X`` (intercept in the last column)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    u0, u1 = mech.u0, mech.u1
    ones = np.ones(X.shape[0])
    if mech.setting == "S1":
        return u0 * ones, u1 * ones
    if mech.setting == "S2":
        e = u0 + (u1 - u0) * expit(X @ beta0)
        return e, e.copy()
    if mech.setting == "S3":
        if mech.b0 is None or mech.b1 is None:
            raise ValueError("S3 needs b0 and b1; call draw_auxiliaries first")
        return u0 + (u1 - u0) * expit(X @ mech.b0), u0 + (u1 - u0) * expit(X @ mech.b1)
    if mech.a is None:
        raise ValueError("S4 needs a; call draw_auxiliaries first")
    a = mech.a
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    in0 = (np.abs(x1 - a) < 3) & (np.abs(x3 + a) < 3)
    in1 = (np.abs(x1 + a) < 3) & (np.abs(x2 + a) < 3)
    return u0 + (u1 - u0) * in0, u0 + (u1 - u0) * in1


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def generate_contaminated(X, beta0, mech, seed=None):
    """Draw true labels from the logistic model, then flip them.

    Returns (Dataset with observed labels Y, true labels Y0).
    """
    rng = _rng(seed)
    X = np.asarray(X, dtype=float)
    y0 = (rng.random(X.shape[0]) < expit(X @ beta0)).astype(int)
    eta0, eta1 = eta_functions(mech, X, beta0)
    flip_prob = np.where(y0 == 1, eta1, eta0)
    flip = rng.random(X.shape[0]) < flip_prob
    return Dataset(X, np.where(flip, 1 - y0, y0)), y0


def mislabel_rate_tau(mech, beta0, X):
    """Plug-in P(Y != Y0) averaged over the covariate rows."""
    pi = expit(np.asarray(X, dtype=float) @ beta0)
    eta0, eta1 = eta_functions(mech, X, beta0)
    return float(np.mean(eta0 * (1.0 - pi) + eta1 * pi))


def classification_accuracy(beta_hat, clean):
    """Accuracy of the rule I(beta_hat'x > 0) against the true labels."""
    if clean.n == 0:
        raise ValueError("clean data is empty")
    pred = (clean.X @ np.asarray(beta_hat, dtype=float) > 0).astype(int)
    return float(np.mean(pred == clean.y))


def table1_beta0(p, layout="intercept_first"):
    """beta0 = (0, 1, -1, 1, 0, ..., 0) mapped onto the internal layout.

    Internally the intercept is the last coordinate. With
    ``layout="intercept_first"`` the leading 0 is the intercept and the
    covariate coefficients are (1, -1, 1, 0, ...); with
    ``layout="intercept_last"`` the vector is used as written.
    """
    table = np.zeros(p)
    table[1:4] = [1.0, -1.0, 1.0]
    return table_to_internal(table, layout)


def table_to_internal(v, layout):
    v = np.asarray(v, dtype=float)
    if layout == "intercept_first":
        return np.append(v[1:], v[0])
    if layout == "intercept_last":
        return v.copy()
    raise ValueError("layout must be 'intercept_first' or 'intercept_last'")


def internal_to_table(v, layout):
    v = np.asarray(v, dtype=float)
    if layout == "intercept_first":
        return np.concatenate([v[..., -1:], v[..., :-1]], axis=-1)
    return v.copy()


@dataclass(frozen=True)
class StudyConfig:
    """Settings for a replicate study.

    ``mode="table1"`` fits gamma-logistic at a fixed ``gamma`` with the fixed
    beta0 of :func:`table1_beta0` and records coefficient means, SDs and
    sandwich SEs. ``mode="comparison"`` draws beta0 ~ N(0, 2^2) per replicate
    and compares ``methods`` by classification accuracy, recording the
    selected gamma and oracle gamma*.
    """

    mode: str = "comparison"
    settings: tuple = ("S1",)
    u0: float = 0.05
    u1_values: tuple = (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)
    n: int = 500
    replicates: int = 500
    beta0_rule: str = None
    beta0_sd: float = 2.0
    table1_layout: str = "intercept_first"
    gamma: float = 2.0
    methods: tuple = METHODS
    gamma_grid: tuple = None
    alpha_grid: tuple = None
    gamma0: float = 0.1
    eta_grid: tuple = None
    xi_grid: tuple = None
    solver: str = "quasi_newton"
    chain: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        rule = self.beta0_rule or ("fixed" if self.mode == "table1" else "random")
        object.__setattr__(self, "beta0_rule", rule)
        for name in ("settings", "u1_values", "methods"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.mode not in ("table1", "comparison"):
            raise ValueError("mode must be 'table1' or 'comparison'")
        if rule not in ("fixed", "random"):
            raise ValueError("beta0_rule must be 'fixed' or 'random'")
        if self.mode == "table1" and rule != "fixed":
            raise ValueError("table1 mode uses the fixed beta0")
        if self.replicates < 1:
            raise ValueError("replicates must be at least 1")
        if self.n < 10:
            raise ValueError("n is too small")
        if not self.settings or not self.u1_values:
            raise ValueError("settings and u1_values must be nonempty")
        for s in self.settings:
            if s not in SETTINGS:
                raise ValueError(f"unknown setting {s!r}")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        for u1 in self.u1_values:
            MislabelMechanism(self.settings[0], self.u0, u1)
        if self.mode == "table1" and not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.table1_layout not in ("intercept_first", "intercept_last"):
            raise ValueError("table1_layout must be 'intercept_first' or 'intercept_last'")

    def grid(self, which):
        g = getattr(self, f"{which}_grid")
        return default_grid() if g is None else np.asarray(g, dtype=float)

    def to_dict(self):
        return asdict(self)


def _replicate_seed(seed, key):
    return np.random.SeedSequence(seed, spawn_key=key)


def run_replicate(config, setting, u1, rep, seed, pool=None):
    """One replicate; returns a flat record dict."""
    s_idx = SETTINGS.index(setting)
    u_idx = list(config.u1_values).index(u1)
    rng = np.random.default_rng(_replicate_seed(seed, (s_idx, u_idx, rep)))
    pool = load_pima() if pool is None else pool
    p = pool.p
    n = config.n

    def draw_rows():
        return pool.X[rng.integers(0, pool.n, size=n)]

    if config.beta0_rule == "fixed":
        beta0 = table1_beta0(p, config.table1_layout)
    else:
        beta0 = rng.normal(0.0, config.beta0_sd, p)
    mech = MislabelMechanism(setting, config.u0, u1).draw_auxiliaries(rng, p)
    X = draw_rows()
    data, y0 = generate_contaminated(X, beta0, mech, rng)
    rec = {
        "setting": setting,
        "u1": float(u1),
        "rep": int(rep),
        "tau": mislabel_rate_tau(mech, beta0, X),
        "flip_rate": float(np.mean(data.y != y0)),
    }
    opts = SolverOptions(solver=config.solver)
    mle, _ = fit_mle(data.X, data.y)
    opts = replace(opts, init=mle)

    if config.mode == "table1":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            res = fit(data, EstimatorSpec.gamma(config.gamma), opts)
        rec["converged"] = res.converged
        rec["beta"] = internal_to_table(res.beta, config.table1_layout).tolist()
        try:
            cov = sandwich_covariance(data, res)
            rec["se"] = internal_to_table(cov.se, config.table1_layout).tolist()
        except SingularHessianError:
            rec["se"] = [float("nan")] * p
        return rec

    Xs = draw_rows()
    sel = Dataset(Xs, (rng.random(n) < expit(Xs @ beta0)).astype(int))
    Xe = draw_rows()
    evaluation = Dataset(Xe, (rng.random(n) < expit(Xe @ beta0)).astype(int))
    methods = config.methods
    ca = {}
    if "logistic" in methods:
        ca["logistic"] = classification_accuracy(mle, evaluation)
    if "gamma" in methods or "gamma_star" in methods:
        grid, fits = fit_grid(data, config.grid("gamma"), "gamma", opts, config.chain)
        crit = np.array([adaptive_criterion(data.X, f.beta, config.gamma0) if f.converged
                         else np.nan for f in fits])
        ll = oracle_loglik(fits, sel)
        rec["n_gamma_failed"] = int(np.isnan(crit).sum())
        for name, values in (("gamma", crit), ("gamma_star", ll)):
            k = _first_max(values)
            if name in methods and k is not None:
                rec[name] = float(grid[k])
                ca[name] = classification_accuracy(fits[k].beta, evaluation)
    if "alpha_star" in methods:
        grid, fits = fit_grid(data, config.grid("alpha"), "alpha", opts, config.chain)
        k = _first_max(oracle_loglik(fits, sel))
        if k is not None:
            rec["alpha_star"] = float(grid[k])
            ca["alpha_star"] = classification_accuracy(fits[k].beta, evaluation)
    for name, key in (("constant", "eta"), ("xi", "xi")):
        if name not in methods:
            continue
        try:
            best, _ = profile_mislabel(data, name, getattr(config, f"{key}_grid"), opts)
        except ConvergenceFailure:
            continue
        rec[key] = list(best.spec.tuning) if name == "xi" else best.spec.tuning
        ca[name] = classification_accuracy(best.beta, evaluation)
    rec["ca"] = ca
    return rec


def _first_max(v):
    # None when every grid fit failed; the method is then left out of the record
    if not np.any(np.isfinite(v)):
        return None
    return int(np.argmax(np.where(np.isfinite(v), v, -np.inf)))


def _job(args):
    config, setting, u1, rep, seed = args
    return run_replicate(config, setting, u1, rep, seed)


@dataclass
class ReplicateReport:
    config: StudyConfig
    seed: int
    records: list = field(default_factory=list)

    def select(self, setting=None, u1=None):
        return [r for r in self.records
                if (setting is None or r["setting"] == setting) and (u1 is None or r["u1"] == u1)]

    def table1(self):
        """{setting: dict(true, mean, sd, se)} over converged replicates, table order."""
        out = {}
        p = len(self.records[0]["beta"])
        true = internal_to_table(table1_beta0(p, self.config.table1_layout), self.config.table1_layout)
        for s in self.config.settings:
            recs = [r for r in self.select(s) if r["converged"]]
            B = np.array([r["beta"] for r in recs])
            S = np.array([r["se"] for r in recs])
            out[s] = {
                "true": true,
                "mean": B.mean(axis=0),
                "sd": B.std(axis=0, ddof=1),
                "se": np.nanmean(S, axis=0),
                "replicates": len(recs),
            }
        return out

    def table2(self):
        """{setting: {u1: (mean gamma, mean gamma*)}}"""
        out = {}
        for s in self.config.settings:
            out[s] = {}
            for u1 in self.config.u1_values:
                recs = self.select(s, u1)
                g = [r["gamma"] for r in recs if "gamma" in r]
                gs = [r["gamma_star"] for r in recs if "gamma_star" in r]
                out[s][u1] = (float(np.mean(g)) if g else np.nan,
                              float(np.mean(gs)) if gs else np.nan)
        return out

    def figure3(self):
        """Rows (setting, method, u1, mean tau, mean CA, SE of CA)."""
        rows = []
        for s in self.config.settings:
            for m in self.config.methods:
                for u1 in self.config.u1_values:
                    recs = self.select(s, u1)
                    ca = np.array([r["ca"][m] for r in recs if m in r.get("ca", {})])
                    if ca.size == 0:
                        continue
                    tau = float(np.mean([r["tau"] for r in recs]))
                    se = float(ca.std(ddof=1) / np.sqrt(ca.size)) if ca.size > 1 else np.nan
                    rows.append((s, m, float(u1), tau, float(ca.mean()), se))
        return rows

    def paired_ca(self, setting, u1, a, b):
        """Per-replicate CA(a) - CA(b) over replicates where both were fitted."""
        return np.array([r["ca"][a] - r["ca"][b] for r in self.select(setting, u1)
                         if a in r["ca"] and b in r["ca"]])

    def write(self, outdir, stem="study", meta=None):
        """Write CSV tables and a JSON dump; returns the list of paths.

        ``meta`` (seed, config hash, version) heads every file.
        """
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        meta = dict(meta or {})
        paths = []
        if self.config.mode == "table1":
            rows = []
            for s, t in self.table1().items():
                for j in range(len(t["mean"])):
                    rows.append([s, f"beta{j + 1}", t["true"][j], t["mean"][j], t["sd"][j], t["se"][j],
                                 t["replicates"]])
            paths.append(write_table(outdir / f"{stem}_table1.csv",
                                     ["setting", "coef", "true", "mean", "sd", "se", "replicates"], rows, meta))
        else:
            rows = [[s, u1, g, gs] for s, by_u in self.table2().items() for u1, (g, gs) in by_u.items()]
            paths.append(write_table(outdir / f"{stem}_table2.csv",
                                     ["setting", "u1", "mean_gamma", "mean_gamma_star"], rows, meta))
            paths.append(write_table(outdir / f"{stem}_figure3.csv",
                                     ["setting", "method", "u1", "tau", "mean_ca", "se_ca"],
                                     self.figure3(), meta))
        path = outdir / f"{stem}.json"
        doc = dict(meta, config=self.config.to_dict(), seed=self.seed, records=self.records)
        if self.config.mode == "table1":
            doc["layout_note"] = (
                "coefficients are listed in table order; with intercept_first the "
                "intercept is coefficient 1, internally it is the last column"
            )
        path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=_jsonable) + "\n")
        paths.append(path)
        return paths


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def run_study(config, seed):
    """Run every (setting, u1, replicate) job and collect a ReplicateReport.

    Jobs run in ``config.n_jobs`` processes; records are ordered by
    (setting, u1, replicate) regardless of completion order.
    """
    if seed is None:
        raise ValueError("a seed is required")
    jobs = [(config, s, u1, r, seed)
            for s in config.settings for u1 in config.u1_values for r in range(config.replicates)]
    if config.n_jobs == 1:
        pool = load_pima()
        records = [run_replicate(c, s, u1, r, sd, pool) for c, s, u1, r, sd in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.n_jobs) as ex:
            records = list(ex.map(_job, jobs, chunksize=max(1, len(jobs) // (4 * config.n_jobs))))
    return ReplicateReport(config, seed, records)
