"""Command-line entry point.

    gammalogit <command> [--config run.json] [overrides]

Commands: fit, select, cov, detect, pipeline, simulate. Exit codes: 0
success, 2 validation error, 3 convergence failure, 4 I/O error.
"""
import argparse
import json
import sys

import numpy as np

from .config import ConfigError, load_config
from .estimators import ConvergenceFailure
from .pipeline import COMMANDS

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_IO = 0, 2, 3, 4

HELP = {
    "fit": "fit one estimator (gamma is selected when no tuning is given)",
    "select": "choose gamma over a grid with the data-adaptive criterion",
    "cov": "fit and report sandwich standard errors and confidence intervals",
    "detect": "bootstrap p-values of the gamma weights and flagged instances",
    "pipeline": "full analysis: select, fit, CIs, p-values, flipping, driver fits",
    "simulate": "replicate study (table1 or comparison mode, see 'study' in the config)",
}


def _tuning(text):
    parts = [float(v) for v in text.split(",")]
    return parts[0] if len(parts) == 1 else parts


def _grid(text):
    """'0.5:2.5:0.1' (inclusive range) or a comma list."""
    if ":" in text:
        lo, hi, step = (float(v) for v in text.split(":"))
        if step <= 0 or hi < lo:
            raise argparse.ArgumentTypeError("range must be lo:hi:step with step > 0")
        return np.round(np.arange(lo, hi + step / 2, step), 10).tolist()
    return [float(v) for v in text.split(",")]


def build_parser():
    parser = argparse.ArgumentParser(prog="gammalogit", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in HELP.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--input", help="CSV file with a header row (default: bundled Pima data)")
        p.add_argument("--response", help="name of the 0/1 response column")
        p.add_argument("--pima-variant", dest="pima_variant", choices=("full", "complete_case"))
        p.add_argument("--no-standardize", dest="standardize", action="store_const", const=False,
                       help="use raw covariates (an intercept column is still appended)")
        p.add_argument("--estimator", choices=("mle", "gamma", "alpha", "constant", "xi"))
        p.add_argument("--tuning", type=_tuning, help="gamma, alpha or eta; 'xi0,xi1' for xi")
        p.add_argument("--grid", type=_grid, help="tuning grid, 'lo:hi:step' or comma list")
        p.add_argument("--gamma0", type=float)
        p.add_argument("--level", type=float, help="confidence level")
        p.add_argument("--b-prime", dest="b_prime", type=int, help="bootstrap replicates")
        p.add_argument("--threshold", type=float, help="p-value flagging threshold")
        p.add_argument("--seed", type=int, help="required for detect, pipeline and simulate")
        p.add_argument("--solver", choices=("fixed_point", "quasi_newton"))
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--outdir", help="output directory (default: out)")
        if name == "simulate":
            p.add_argument("--replicates", type=int)
            p.add_argument("--n-jobs", dest="n_jobs", type=int)
    return parser


def run(argv=None):
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    path = args.pop("config")
    study = {k: args.pop(k) for k in ("replicates", "n_jobs") if k in args}
    study = {k: v for k, v in study.items() if v is not None}
    cfg = load_config(path, study=study, **args)
    return COMMANDS[command](cfg)


def main(argv=None):
    try:
        doc = run(argv)
    except (ConfigError, ValueError) as exc:
        print(f"gammalogit: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceFailure as exc:
        print(f"gammalogit: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"gammalogit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps({"manifest": doc["manifest"], "summary": doc["summary"]}, indent=1, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
