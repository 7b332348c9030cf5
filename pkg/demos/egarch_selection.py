"""Fit GARCH, EGARCH and GJR to simulated EGARCH returns and rank them."""
from emhkit import bds, synth, volatility as V

r, sigma = synth.gen_garch_family("egarch", 5000, seed=3, k=-0.1, gamma=0.9, alpha=0.3, xi=-0.07)
candidates = [(V.MeanSpec(), V.VarianceSpec(f)) for f in ("GARCH", "EGARCH", "GJR")]
fits, failed = V.select_model(r, candidates, seed=0)
for row in V.selection_table(fits):
    print(row)
best = fits[0]
print("best:", best.label(), {k: round(v, 4) for k, v in best.to_dict()["variance"].items()})
print("negative/positive shock slopes:", V.shock_coefficient(best.to_dict()["variance"], "negative"),
      V.shock_coefficient(best.to_dict()["variance"], "positive"))
print("ARCH-LM p on z:", round(best.arch_lm_p, 3), "| BDS rejects:", bds.bds_test(best.z, 6).rejects())
