"""Fit every estimator on data with flipped labels."""
# %%
import numpy as np
from scipy.special import expit

from gammalogit import Dataset, EstimatorSpec, fit

rng = np.random.default_rng(0)
n = 1000
X = np.column_stack([rng.normal(size=(n, 2)), np.ones(n)])
beta0 = np.array([2.0, -1.5, 0.5])
y0 = (rng.random(n) < expit(X @ beta0)).astype(int)

# flip 15% of the confidently classified instances
score = X @ beta0
far = np.flatnonzero(np.abs(score) > 2)
flip = rng.choice(far, size=int(0.15 * far.size), replace=False)
y = y0.copy()
y[flip] = 1 - y[flip]
data = Dataset(X, y, ("x1", "x2", "intercept"))
print(f"{flip.size} labels flipped out of {n}")

# %%
specs = [EstimatorSpec.mle(), EstimatorSpec.gamma(1.0), EstimatorSpec.alpha(1.0),
         EstimatorSpec.constant(0.1), EstimatorSpec.xi(0.1, 0.1)]
print("truth            ", beta0)
for spec in specs:
    res = fit(data, spec)
    print(f"{str(spec):17s}", np.round(res.beta, 3), "converged" if res.converged else "NOT converged")

# %%
# the two solvers land on the same stationary point
a = fit(data, EstimatorSpec.gamma(1.0), solver="fixed_point")
b = fit(data, EstimatorSpec.gamma(1.0), solver="quasi_newton")
print("solver gap:", np.max(np.abs(a.beta - b.beta)), "iterations:", a.iterations, b.iterations)

# %%
res = fit(data, EstimatorSpec.gamma(1.0))
print("mean weight, flipped:", res.weights[flip].mean().round(4),
      " others:", np.delete(res.weights, flip).mean().round(4))
