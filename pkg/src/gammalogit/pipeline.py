"""Command implementations: fit, select, cov, detect, pipeline, simulate.

Each command reads a :class:`~gammalogit.config.RunConfig`, writes CSV
tables plus one JSON manifest into ``config.outdir`` and returns the
manifest as a dict. Every file starts with the library version, the seed
and the config digest, and nothing time- or host-dependent is written, so
reruns with the same config are byte-identical.
"""
from dataclasses import fields, replace
import hashlib
import json
from pathlib import Path
import warnings

import numpy as np
from scipy.special import expit

from . import __version__
from .config import ConfigError
from .detection import bootstrap_pvalues, driver_analysis, flip_labels
from .estimators import (
    ConvergenceFailure,
    ConvergenceWarning,
    Dataset,
    EstimatorSpec,
    SolverOptions,
    fit,
    profile_mislabel,
)
from .inference import sandwich_covariance
from .io import PIMA_RESPONSE, load_csv, load_pima, standardize, write_table
from .selection import default_grid, select_gamma_adaptive
from .simulation import StudyConfig, run_study

__all__ = [
    "load_input",
    "cmd_fit",
    "cmd_select",
    "cmd_cov",
    "cmd_detect",
    "cmd_pipeline",
    "cmd_simulate",
    "COMMANDS",
]


def load_input(cfg):
    """Dataset for a run: standardized with intercept, or raw plus intercept."""
    if cfg.input is None:
        raw = load_pima(standardized=False, variant=cfg.pima_variant)
        if cfg.response != PIMA_RESPONSE:
            raise ConfigError(f"the bundled Pima response column is {PIMA_RESPONSE!r}")
    else:
        raw = load_csv(cfg.input, cfg.response)
    if cfg.standardize:
        return standardize(raw)
    X = np.column_stack([raw.X, np.ones(raw.n)])
    return Dataset(X, raw.y, raw.columns + ("intercept",)), None


def _opts(cfg):
    return SolverOptions(solver=cfg.solver, tol=cfg.tol, max_iter=int(cfg.max_iter))


def _meta(cfg):
    return {"gammalogit": __version__, "seed": cfg.seed, "config": cfg.digest()}


def _resolve_fit(cfg, data):
    """(FitResult, SelectionResult or None, profile trace or None)."""
    opts = _opts(cfg)
    spec = cfg.spec()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        if spec is not None:
            return fit(data, spec, opts), None, None
        if cfg.estimator == "gamma":
            grid = default_grid() if cfg.grid is None else np.asarray(cfg.grid)
            sel = select_gamma_adaptive(data, grid, cfg.gamma0, opts)
            return sel.chosen_fit, sel, None
        if cfg.estimator in ("constant", "xi"):
            grid = cfg.grid if cfg.estimator == "constant" else None
            best, trace = profile_mislabel(data, cfg.estimator, grid, opts)
            return best, None, trace
    raise ConfigError(f"{cfg.estimator} needs a tuning value")


def _require_converged(res):
    if not res.converged:
        why = "; ".join(res.notes) or f"max |score| = {res.score_norm:.3g}"
        raise ConvergenceFailure(f"{res.spec} did not converge ({why})")


def _coef_rows(data, res, cov=None):
    rows = []
    for j, name in enumerate(data.columns):
        row = [name, res.beta[j]]
        if cov is not None:
            row += [cov.se[j], cov.ci[j, 0], cov.ci[j, 1]]
        rows.append(row)
    return rows


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _finish(cfg, command, summary, paths):
    outdir = Path(cfg.outdir)
    doc = dict(_meta(cfg))
    doc["command"] = command
    doc["config_values"] = cfg.to_dict()
    doc["config_values"].pop("outdir")
    doc["summary"] = _finite(summary)
    doc["files"] = {Path(p).name: _sha256(p) for p in paths}
    path = outdir / f"{command}.json"
    path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=_plain) + "\n", encoding="utf-8")
    doc["manifest"] = str(path)
    return doc


def _finite(o):
    # JSON has no NaN; missing values are written as null
    if isinstance(o, dict):
        return {k: _finite(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_finite(v) for v in o]
    if isinstance(o, np.ndarray):
        return _finite(o.tolist())
    if isinstance(o, (float, np.floating)) and not np.isfinite(o):
        return None
    return o


def _plain(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _outdir(cfg):
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fit_summary(res):
    return {
        "estimator": str(res.spec),
        "kind": res.kind,
        "tuning": res.spec.tuning,
        "converged": res.converged,
        "iterations": res.iterations,
        "score_norm": res.score_norm,
        "objective": res.objective,
        "notes": list(res.notes),
    }


def _selection_rows(sel):
    return [[g, c, f.converged] for g, c, f in zip(sel.grid, sel.criterion, sel.fits)]


def cmd_fit(cfg):
    data, _ = load_input(cfg)
    res, sel, _ = _resolve_fit(cfg, data)
    _require_converged(res)
    out = _outdir(cfg)
    meta = _meta(cfg)
    paths = [write_table(out / "coefficients.csv", ["coef", "estimate"], _coef_rows(data, res), meta)]
    if sel is not None:
        paths.append(write_table(out / "selection.csv", ["gamma", "criterion", "converged"],
                                 _selection_rows(sel), meta))
    return _finish(cfg, "fit", dict(_fit_summary(res), n=data.n, p=data.p), paths)


def cmd_select(cfg):
    if cfg.estimator != "gamma":
        raise ConfigError("select chooses gamma; set estimator to 'gamma'")
    data, _ = load_input(cfg)
    grid = default_grid() if cfg.grid is None else np.asarray(cfg.grid)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        sel = select_gamma_adaptive(data, grid, cfg.gamma0, _opts(cfg))
    out = _outdir(cfg)
    path = write_table(out / "selection.csv", ["gamma", "criterion", "converged"], _selection_rows(sel), _meta(cfg))
    summary = {"chosen_gamma": sel.chosen_gamma, "gamma0": cfg.gamma0,
               "excluded": [float(g) for g, f in zip(sel.grid, sel.fits) if not f.converged]}
    return _finish(cfg, "select", summary, [path])


def cmd_cov(cfg):
    if cfg.estimator not in ("gamma", "alpha", "mle"):
        raise ConfigError("covariance is available for gamma, alpha and mle fits")
    data, _ = load_input(cfg)
    res, _, _ = _resolve_fit(cfg, data)
    _require_converged(res)
    cov = sandwich_covariance(data, res, cfg.level)
    out = _outdir(cfg)
    path = write_table(out / "coefficients.csv", ["coef", "estimate", "se", "lower", "upper"],
                       _coef_rows(data, res, cov), _meta(cfg))
    summary = dict(_fit_summary(res), level=cfg.level, condition=cov.condition,
                   significant=[data.columns[j] for j in np.flatnonzero(cov.significant())])
    return _finish(cfg, "cov", summary, [path])


def _gamma_fit(cfg, data):
    if cfg.estimator != "gamma":
        raise ConfigError("mislabel detection uses a gamma-logistic fit; set estimator to 'gamma'")
    res, sel, _ = _resolve_fit(cfg, data)
    _require_converged(res)
    return res, sel


def _pv_rows(data, rep):
    corrected = flip_labels(data, rep).y
    return [[i + 1, int(data.y[i]), rep.weights[i], rep.pv[i], int(rep.flags[i]), int(corrected[i])]
            for i in range(data.n)]


def cmd_detect(cfg):
    cfg.require_seed("detect")
    data, _ = load_input(cfg)
    res, _ = _gamma_fit(cfg, data)
    rep = bootstrap_pvalues(data, res, int(cfg.b_prime), cfg.seed, cfg.threshold)
    out = _outdir(cfg)
    path = write_table(out / "pvalues.csv", ["row", "y", "weight", "pv", "flagged", "corrected_y"],
                       _pv_rows(data, rep), _meta(cfg))
    summary = dict(_fit_summary(res), b_prime=rep.b_prime, threshold=rep.threshold, n_flagged=rep.n_flagged)
    return _finish(cfg, "detect", summary, [path])


def cmd_pipeline(cfg):
    """Select gamma, fit, sandwich CIs, p-values, flipping and driver analysis.

    The conventional logistic fit and its CIs are produced alongside for
    comparison.
    """
    cfg.require_seed("pipeline")
    if cfg.estimator != "gamma":
        raise ConfigError("the pipeline runs gamma-logistic; set estimator to 'gamma'")
    data, rec = load_input(cfg)
    res, sel = _gamma_fit(cfg, data)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        mle = fit(data, EstimatorSpec.mle(), _opts(cfg))
    _require_converged(mle)
    cov_g = sandwich_covariance(data, res, cfg.level)
    cov_m = sandwich_covariance(data, mle, cfg.level)
    rep = bootstrap_pvalues(data, res, int(cfg.b_prime), cfg.seed, cfg.threshold)
    drivers, notices = driver_analysis(data, rep)

    out = _outdir(cfg)
    meta = _meta(cfg)
    paths = []
    rows = [[name, res.beta[j], cov_g.se[j], cov_g.ci[j, 0], cov_g.ci[j, 1],
             mle.beta[j], cov_m.se[j], cov_m.ci[j, 0], cov_m.ci[j, 1]]
            for j, name in enumerate(data.columns)]
    paths.append(write_table(
        out / "coefficients.csv",
        ["coef", "gamma_estimate", "gamma_se", "gamma_lower", "gamma_upper",
         "mle_estimate", "mle_se", "mle_lower", "mle_upper"], rows, meta))
    if rec is not None:
        raw_rows = [[name, bg, bm] for name, bg, bm in zip(
            data.columns, rec.back_transform(res.beta), rec.back_transform(mle.beta))]
        paths.append(write_table(out / "coefficients_raw_scale.csv",
                                 ["coef", "gamma_estimate", "mle_estimate"], raw_rows, meta))
    if sel is not None:
        paths.append(write_table(out / "selection.csv", ["gamma", "criterion", "converged"],
                                 _selection_rows(sel), meta))
    pi_g = expit(data.X @ res.beta)
    pi_m = expit(data.X @ mle.beta)
    inst = [row + [pi_g[i], pi_m[i]] for i, row in enumerate(_pv_rows(data, rep))]
    paths.append(write_table(
        out / "instances.csv",
        ["row", "y", "weight", "pv", "flagged", "corrected_y", "pi_gamma", "pi_mle"], inst, meta))
    drow = []
    for j, d in drivers.items():
        if d is not None:
            drow += [[j, name, d.coef[k]] for k, name in enumerate(data.columns)]
    paths.append(write_table(out / "drivers.csv", ["group", "coef", "estimate"], drow, meta))

    width_g = cov_g.ci[:, 1] - cov_g.ci[:, 0]
    width_m = cov_m.ci[:, 1] - cov_m.ci[:, 0]
    summary = {
        "n": data.n,
        "p": data.p,
        "gamma": res.spec.tuning,
        "gamma_fit": _fit_summary(res),
        "level": cfg.level,
        "significant_gamma": [data.columns[j] for j in np.flatnonzero(cov_g.significant())],
        "significant_mle": [data.columns[j] for j in np.flatnonzero(cov_m.significant())],
        "mean_ci_width_gamma": float(width_g.mean()),
        "mean_ci_width_mle": float(width_m.mean()),
        "b_prime": rep.b_prime,
        "threshold": rep.threshold,
        "n_flagged": rep.n_flagged,
        "flagged_by_observed_label": {str(j): int(rep.flags[data.y == j].sum()) for j in (0, 1)},
        "auc": {str(j): (None if d is None else d.auc) for j, d in drivers.items()},
        "driver_groups": {str(j): (None if d is None else {"n": d.n, "n_flagged": d.n_flagged,
                                                            "notes": list(d.notes)})
                          for j, d in drivers.items()},
        "notices": notices,
    }
    return _finish(cfg, "pipeline", summary, paths)


def cmd_simulate(cfg):
    cfg.require_seed("simulate")
    names = {f.name for f in fields(StudyConfig)}
    unknown = sorted(set(cfg.study) - names)
    if unknown:
        raise ConfigError(f"unknown study key(s): {', '.join(unknown)}")
    try:
        study = StudyConfig(**cfg.study)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"study: {exc}") from None
    if study.solver != cfg.solver and "solver" not in cfg.study:
        study = replace(study, solver=cfg.solver)
    report = run_study(study, cfg.seed)
    paths = report.write(_outdir(cfg), "study", _meta(cfg))
    if study.mode == "table1":
        summary = {s: {k: v for k, v in t.items()} for s, t in report.table1().items()}
    else:
        summary = {"table2": {s: {f"{u:g}": v for u, v in by.items()} for s, by in report.table2().items()}}
    return _finish(cfg, "simulate", summary, paths)


COMMANDS = {
    "fit": cmd_fit,
    "select": cmd_select,
    "cov": cmd_cov,
    "detect": cmd_detect,
    "pipeline": cmd_pipeline,
    "simulate": cmd_simulate,
}
