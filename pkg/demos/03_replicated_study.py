"""
A small replicated study
========================

Repeat simulate-and-fit a few times with both samplers and compare the
average squared error of the posterior means.  The same study is available
from the command line as ``ivbma replicate --reps R --desk-scale --both-modes``.
"""

import numpy as np

from ivbma import SamplerConfig, SimSpec
from ivbma.study import run_study

spec = SimSpec()
config = SamplerConfig(iterations=4000, burn_in=1000, seed=11)

# replicate i always uses the same random streams, whatever the worker count
study = run_study(4, spec, config, modes=("ivbma", "iv"), workers=1)
agg = study["aggregate"]

for mode in ("ivbma", "iv"):
    mse = agg[mode]["mse"]
    print(f"{mode:>6}: MSE first {mse['first']:.3f}  second {mse['second']:.3f}  total {mse['total']:.3f}")

# median inclusion probability of each second-stage variable over replicates
names = agg["ivbma"]["second"]["names"]
med = np.array(agg["ivbma"]["second"]["inclusion_median"])
print("\nmedian inclusion, second stage")
for name, m, t in zip(names, med, spec.rho_true):
    print(f"{name:>4} {'*' if t else ' '} {m:.2f}")
