"""Rolling Tsallis entropy of a regime-switching series and HHI classes."""
import numpy as np

from emhkit import entropy, market
from emhkit.synth import make_rng

rng = make_rng(0)
x = np.concatenate([0.5 * rng.standard_normal(1500), 2.0 * rng.standard_normal(1500)])
for partition in ("fixed", "adaptive"):
    tr = entropy.rolling_tsallis(x, entropy.EntropyConfig(window=365, step=365, partition=partition))
    print(partition, np.round(tr.values, 3), "bound", round(tr.flags["max_entropy"], 3))

for shares in ([1.0], [0.5, 0.5], [0.3, 0.25, 0.2, 0.15, 0.1], [0.1] * 10):
    res = market.hhi(shares, percent=False)
    print(shares, round(res.value, 1), res.cls)
