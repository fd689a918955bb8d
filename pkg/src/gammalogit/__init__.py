"""Minimum gamma-divergence logistic regression for mislabeled binary data.

Estimators (gamma-, alpha-, constant-mislabel and xi-logistic), sandwich
inference and influence functions, gamma selection, bootstrap mislabel
detection and a replicate-study harness.
"""
__version__ = "0.1.0"

from .core import (
    MislabelPair,
    MixtureDecomposition,
    bias_term_B,
    contaminated_pmf,
    label_pmf,
    mixture_decompose,
    pmf_gamma_norm,
    success_prob,
)
from .estimators import (
    ConvergenceFailure,
    ConvergenceWarning,
    Dataset,
    EstimatorSpec,
    FitResult,
    SolverOptions,
    detect_separation,
    estimating_equation,
    fit,
    fit_mle,
    gamma_objective,
    gamma_score,
    instance_weights,
    objective,
    profile_mislabel,
    weight_gamma,
)
from .inference import (
    CovarianceReport,
    SingularHessianError,
    if2_misclassification,
    influence_alpha,
    influence_gamma,
    sandwich_covariance,
)
from .selection import SelectionResult, default_grid, select_gamma_adaptive, select_gamma_oracle
from .detection import PvReport, auc, bootstrap_pvalues, driver_analysis, flip_labels
from .io import DataError, load_csv, load_pima, standardize, write_csv
