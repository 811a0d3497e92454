"""
Fitting one simulated dataset
=============================

Draw a dataset from the default two-stage design, fit it with model
averaging and with the fixed-model IV sampler, and compare the two.
"""

import numpy as np

from ivbma import SamplerConfig, SimSpec, generate, run_chain, summarize

# 120 observations, 15 covariates, 10 candidate instruments
spec = SimSpec()
data, truth = generate(spec, np.random.default_rng(1))

# a short chain is enough to see the picture; the defaults are 50000 / 10000
config = SamplerConfig(iterations=6000, burn_in=1000, seed=1)
bma = summarize(run_chain(data, config))
iv = summarize(run_chain(data, SamplerConfig(6000, 1000, seed=2, mode="iv")))

# inclusion probabilities: true variables near 1, the rest well below
print("second stage")
print(f"{'name':>6} {'true':>6} {'prob':>6} {'IVBMA':>8} {'IV':>8}")
for j, name in enumerate(bma.second.names):
    print(f"{name:>6} {spec.rho_true[j]:6.2f} {bma.second.inclusion_prob[j]:6.2f} "
          f"{bma.second.mean[j]:8.3f} {iv.second.mean[j]:8.3f}")

print("\nfirst stage, variables with inclusion probability above one half")
for j, name in enumerate(bma.first.names):
    if bma.first.inclusion_prob[j] > 0.5:
        print(f"{name:>6} true {spec.lambda_true[j]:5.2f}  prob {bma.first.inclusion_prob[j]:.2f}  "
              f"mean {bma.first.mean[j]:6.3f}")

# squared error of the posterior means against the truth
for label, s in (("IVBMA", bma), ("IV", iv)):
    err = np.sum((s.second.mean - spec.rho_true) ** 2) + np.sum((s.first.mean - spec.lambda_true) ** 2)
    print(f"{label:>6} squared error {err:.3f}")
