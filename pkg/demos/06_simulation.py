"""A small replicate study: accuracy of each method as the flip rate grows."""
# %%
from gammalogit.simulation import StudyConfig, run_study

cfg = StudyConfig(settings=("S1", "S4"), u1_values=(0.1, 0.4), replicates=10,
                  methods=("logistic", "gamma", "gamma_star", "alpha_star", "constant"),
                  gamma_grid=(0.5, 1.0, 1.5, 2.0, 2.5), alpha_grid=(0.5, 1.0, 1.5))
rep = run_study(cfg, seed=0)

# %%
print("setting method      u1    tau    CA     se")
for s, m, u1, tau, ca, se in rep.figure3():
    print(f"{s:7s} {m:10s} {u1:.2f}  {tau:.3f}  {ca:.3f}  {se:.3f}")

# %%
for s, by_u in rep.table2().items():
    for u1, (g, gs) in by_u.items():
        print(f"{s} u1={u1}: mean gamma {g:.2f}, mean gamma* {gs:.2f}")
