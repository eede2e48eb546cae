"""Fit a latency profile from (noisy) measurements and inspect the surface.

The latency model is l(b, c) = gamma*b/c + epsilon/c + delta*b + eta. We
pretend to profile a model whose true coefficients we know, add measurement
noise, fit, and compare. The fitted surface is what every planner decision
downstream is based on.
"""

import numpy as np

from pipescale import ModelProfile, fit_profile, latency, synth_samples, throughput

TRUE = ModelProfile(gamma=10.0, epsilon=40.0, delta=2.0, eta=5.0, name="detector")

rng = np.random.default_rng(7)
samples = synth_samples(
    TRUE, batches=(1, 2, 4, 8, 16), cores=(1, 2, 4, 8), noise_sd=0.5, rng=rng, repeats=2
)
print(f"profiling run: {len(samples)} measurements, sigma = 0.5 ms")

fitted = fit_profile(samples, b_max=16, c_max=16, name="detector")
print("\ncoefficient     true    fitted")
for name, t, f in [
    ("gamma", TRUE.gamma, fitted.gamma),
    ("epsilon", TRUE.epsilon, fitted.epsilon),
    ("delta", TRUE.delta, fitted.delta),
    ("eta", TRUE.eta, fitted.eta),
]:
    print(f"{name:<12} {t:>8.3f} {f:>9.3f}")

print("\nlatency_ms (rows: batch, cols: cores)")
cores = (1, 2, 4, 8, 16)
print("      " + "".join(f"{c:>9}" for c in cores))
for b in (1, 2, 4, 8, 16):
    row = "".join(f"{latency(fitted, b, c):>9.1f}" for c in cores)
    print(f"b={b:<4}{row}")

print("\nthroughput_rps (rows: batch, cols: cores)")
print("      " + "".join(f"{c:>9}" for c in cores))
for b in (1, 2, 4, 8, 16):
    row = "".join(f"{throughput(fitted, b, c):>9.1f}" for c in cores)
    print(f"b={b:<4}{row}")

print("\nnote the two levers: batching trades latency for throughput, and")
print("cores buy back latency until the serial per-item cost dominates.")
