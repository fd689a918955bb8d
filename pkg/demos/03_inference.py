"""Sandwich standard errors and the second-order influence of the error rate."""
# %%
import numpy as np

from gammalogit import EstimatorSpec, fit, load_pima, sandwich_covariance
from gammalogit.inference import if2_misclassification

data = load_pima()
for spec in (EstimatorSpec.mle(), EstimatorSpec.gamma(0.5)):
    res = fit(data, spec)
    cov = sandwich_covariance(data, res)
    print(spec)
    for name, b, (lo, hi) in zip(data.columns, res.beta, cov.ci):
        mark = "*" if lo > 0 or hi < 0 else " "
        print(f"  {name:26s} {b:7.3f}  [{lo:7.3f}, {hi:7.3f}] {mark}")

# %%
# IF2 on the two-class normal design; label 0 at large x is the mislabeled case
x = np.array([-8, -4, -2, 0, 2, 4, 8], dtype=float)
for kind, tune in (("gamma", 0.0), ("gamma", 2.5), ("alpha", 2.5)):
    v = if2_misclassification(x, 0, tuning=tune, kind=kind)
    print(f"{kind} {tune}:", np.array2string(v / v.max(), precision=2))
# gamma=2.5 kills the influence of far-out flips; alpha=2.5 keeps some of it
