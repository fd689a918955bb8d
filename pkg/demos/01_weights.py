"""How the gamma weight treats matched and mislabeled instances."""
# %%
import numpy as np

from gammalogit import pmf_gamma_norm, weight_gamma
from gammalogit.estimators import alpha_weight

t = np.linspace(-6, 6, 13)[:, None]  # beta'x on a one-column design
beta = np.array([1.0])

# %%
print("beta'x   w(y=1) g=0   g=0.5    g=2")
for row in t:
    ws = [weight_gamma(1, row, beta, g) for g in (0.0, 0.5, 2.0)]
    print(f"{row[0]:6.1f}  " + "  ".join(f"{w:7.4f}" for w in ws))
# label 1 with a very negative score is treated as a probable flip: weight -> 0

# %%
# the gamma weight, raised to g+1, is the alpha weight at the inflated score
g = 1.5
lhs = weight_gamma(1, t, beta, g) ** (g + 1)
rhs = alpha_weight(1, t, (g + 1) * beta, g)
print("max |w_g^(g+1) - w_a((g+1) beta)| =", np.max(np.abs(lhs - rhs)))

# %%
# conditional expectation of the weight is the pmf norm, the quantity used to pick gamma
print("norm at pi=0.5, g0=0.1:", float(pmf_gamma_norm(np.zeros(1), beta, 0.1)))
print("norm at pi~1:          ", float(pmf_gamma_norm(np.array([30.0]), beta, 0.1)))
