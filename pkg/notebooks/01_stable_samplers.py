"""Two routes to a stable law, and a Pareto sample that is attracted to it.

Run with ``python notebooks/01_stable_samplers.py``. Takes about half a minute.
"""

import numpy as np
from scipy import stats

from stablebox import (
    RngStream,
    StableParams,
    TailParams,
    characteristic_fn,
    ks_two_sample,
    sample_domain_of_attraction,
    sample_eta_with_max,
    sample_stable,
)

root = RngStream(2026)

# The direct sampler turns one uniform angle and one exponential into a stable
# draw. Its empirical characteristic function should sit on the analytic one.
params = StableParams(alpha=1.5, beta=0.4)
x = sample_stable(params, 200_000, root.spawn(0))
print("t     empirical                 analytic")
for t in (0.25, 0.5, 1.0, 2.0):
    emp = np.mean(np.exp(1j * t * x))
    print(f"{t:<5} {emp.real:+.4f}{emp.imag:+.4f}i      {characteristic_fn(params, t):.4f}")

# Strict stability: the scaled sum of two copies has the law of one copy.
pair = (x[:100_000] + x[100_000:]) / 2 ** (1 / 1.5)
fresh = sample_stable(params, 100_000, root.spawn(1))
print("\nKS of (X1 + X2) / 2^(1/alpha) against fresh draws:", round(ks_two_sample(pair, fresh), 4))

# The series route sums arrival times of a Poisson process raised to -1/alpha.
# The scale differs from the direct sampler, so compare after dividing by the IQR.
tp = TailParams(1.5, 0.5)
eta, z = sample_eta_with_max(tp, k=1000, rng=root.spawn(2), size=100_000)
direct = sample_stable(StableParams(1.5), 100_000, root.spawn(3))
print("KS of IQR-scaled series sum against direct sampler:", round(ks_two_sample(eta / stats.iqr(eta), direct / stats.iqr(direct)), 4))

# The largest weighted jump M has M^-alpha ~ Exp(1) whatever the tail weights.
print("mean of M^-alpha (should be 1):", round(float(np.mean(z ** -1.5)), 4))

# A two-sided Pareto sample with right weight p = 0.7 keeps that ratio in its tails.
tp = TailParams(1.2, 0.7)
data = sample_domain_of_attraction(tp, 1_000_000, root.spawn(4))
print("\ny     P{X>y}/P{|X|>y}")
for y in (5, 10, 50):
    big = np.abs(data) > y
    print(f"{y:<5} {np.mean(data[big] > y):.4f}")
