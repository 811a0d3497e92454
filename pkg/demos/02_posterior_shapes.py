"""
Conditional densities and model sizes
======================================

The draws of a coefficient taken only from iterations where its variable is
in the model are what one would plot as its conditional posterior density.
Running model sizes across several chains show how quickly chains started
from the full model settle down.  Nothing is plotted here; the arrays are
ready for whichever plotting tool you prefer.
"""

import numpy as np

from ivbma import SamplerConfig, SimSpec, generate, run_chain, run_chains
from ivbma.summary import conditional_density, model_size_trajectory

data, _ = generate(SimSpec(), np.random.default_rng(3))

bma = run_chain(data, SamplerConfig(6000, 1000, seed=3))
iv = run_chain(data, SamplerConfig(6000, 1000, seed=4, mode="iv"))

# conditional draws of the endogenous coefficient against the IV draws
beta = conditional_density(bma, "X", "second")
print(f"beta | X included: mean {beta.mean():.3f}, sd {beta.std():.4f}, {beta.size} draws")
print(f"beta under IV:     mean {iv.rho[:, 0].mean():.3f}, sd {iv.rho[:, 0].std():.4f}")

# a histogram is one line away
counts, edges = np.histogram(beta, bins=30)
print("mode of the histogram near", round(float(edges[counts.argmax()]), 3))

# a noise covariate is in the model only part of the time
w3 = conditional_density(bma, "W3", "second")
print("W3 included in", 0 if w3 is None else w3.size, "of", len(bma), "kept draws")

# eight short chains, running average of the first-stage model size
traces = run_chains(data, SamplerConfig(3000, 500, seed=30), 8, workers=1)
traj = model_size_trajectory(traces)["first"]
for it in (10, 100, 1000, 2999):
    col = traj[:, it]
    print(f"sweep {it + 1:5d}: first-stage size {col.mean():.2f} (spread {col.max() - col.min():.2f})")
