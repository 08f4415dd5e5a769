"""Teleporting a coherent pulse onto the spin, and how close it gets to optimal.

The ideal protocol has a closed-form final variance. Its fidelity peaks
near kappa = 1.64. For comparison we also compute what a two-mode squeezed
resource carrying the same entanglement entropy would achieve.
"""

import numpy as np
from scipy import optimize

from larmor_teleport.teleportation import (
    CoherentInput,
    atomic_entropy,
    ideal_fidelity,
    teleport_pipeline,
    tms_benchmark_fidelity,
)

res = optimize.minimize_scalar(lambda k: -ideal_fidelity(k), bounds=(0.5, 3.0), method="bounded")
print(f"best coupling kappa = {res.x:.3f}, fidelity = {-res.fun:.4f}")

# the Gaussian pipeline (beam splitters, homodyning, feedback) agrees with the formula
r = teleport_pipeline(res.x, CoherentInput(3.0, -2.0))
print(f"pipeline at optimum: mean {r.final_mean.round(12)}, variances {r.final_var.round(6)}")

print(f"\n{'kappa':>6} {'E':>7} {'F':>7} {'F_tms':>7}")
for kappa in np.arange(0.25, 3.01, 0.25):
    e = atomic_entropy(kappa)
    print(f"{kappa:6.2f} {e:7.4f} {ideal_fidelity(kappa):7.4f} {tms_benchmark_fidelity(e):7.4f}")
