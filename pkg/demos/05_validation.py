"""Independent checks of the analytic model.

The slice chain cuts the pulse into thin slices and applies the exact
light-atom shears one at a time; projecting the output on the temporal
modes must reproduce the closed-form covariance. A shot-by-shot simulation
of measurement and feedback must reproduce the averaged final state.
"""

from larmor_teleport.slice_chain import SliceChainConfig, oracle_deviation
from larmor_teleport.teleportation import CoherentInput, monte_carlo_feedback, teleport_closed_form

for n in (1024, 4096, 16384):
    # coarse chains are allowed here to show the convergence
    dev = oracle_deviation(SliceChainConfig(n, 350, 1.0), strict=False)
    print(f"N = {n:6d}: max |slice chain - analytic| = {dev:.5f}")

inp = CoherentInput(3.0, -2.0)
mc = monte_carlo_feedback(1.64, inp, 100_000, seed=3)
ref = teleport_closed_form(1.64, inp)
print(f"\nMonte Carlo mean {mc.mean.round(3)} vs {ref.final_mean}")
print(f"Monte Carlo var  {mc.cov.diagonal().round(4)} vs {ref.final_var.round(4)}")
