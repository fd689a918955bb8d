"""Bootstrap p-values of the weights, label flipping and the driver fits."""
# %%
import numpy as np
from scipy.special import expit

from gammalogit import Dataset, EstimatorSpec, fit
from gammalogit.detection import bootstrap_pvalues, driver_analysis, flip_labels

rng = np.random.default_rng(5)
n = 800
X = np.column_stack([rng.normal(size=(n, 2)), np.ones(n)])
beta0 = np.array([3.0, -2.0, 0.0])
y0 = (rng.random(n) < expit(X @ beta0)).astype(int)
# mislabel only where x1 is large: the flips have a driver
flip = (X[:, 0] > 1.0) & (rng.random(n) < 0.3)
data = Dataset(X, np.where(flip, 1 - y0, y0))

res = fit(data, EstimatorSpec.gamma(1.0))
rep = bootstrap_pvalues(data, res, b_prime=2000, seed=1)
print("flagged:", rep.n_flagged, " of which truly flipped:", int((rep.flags & flip).sum()),
      " flips:", int(flip.sum()))

# %%
corrected = flip_labels(data, rep)
print("label errors before:", int((data.y != y0).sum()), " after:", int((corrected.y != y0).sum()))

# %%
drivers, notices = driver_analysis(data, rep)
for j, d in drivers.items():
    if d is not None:
        print(f"group {j}: coef {np.round(d.coef, 2)}, AUC {d.auc:.3f}")
print(*notices, sep="\n")
