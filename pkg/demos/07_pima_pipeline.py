"""The full Pima analysis through the command layer; writes to ./pima_out."""
# %%
import json

from gammalogit.cli import main

code = main(["pipeline", "--seed", "0", "--outdir", "pima_out"])
print("exit code", code)

# %%
doc = json.load(open("pima_out/pipeline.json"))
s = doc["summary"]
print("chosen gamma:", s["gamma"])
print("significant (gamma):", s["significant_gamma"])
print("significant (mle):  ", s["significant_mle"])
print("flagged:", s["n_flagged"], s["flagged_by_observed_label"], "AUC:", s["auc"])
