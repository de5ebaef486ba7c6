"""CUSUM paths of a fixed sample, their permutations, and exact small-n laws.

Run with ``python notebooks/02_cusum_and_permutations.py``. Takes a few seconds.
"""

from fractions import Fraction

import numpy as np

from stablebox import (
    RngStream,
    TailParams,
    cusum_an,
    cusum_an_permuted,
    enumerate_permutation_distribution,
    epsilon_indicators,
    epsilon_moments,
    random_permutation,
    sample_domain_of_attraction,
    sup_functional,
)
from stablebox.permutation import order_statistic_sum_exact, permuted_partial_sum_exact

root = RngStream(7)

# A heavy-tailed sample of 12 points. Normed by the largest absolute value,
# the CUSUM path starts and ends at exactly zero.
x = sample_domain_of_attraction(TailParams(1.2, 0.7), 12, root.spawn(0))
path = cusum_an(x)
print("data:", np.round(x, 2))
print("A_n on j/n:", np.round(path.values, 3))
print("sup |A_n| =", round(sup_functional(path), 3))

# Shuffling the sample changes the path but never the norming.
perm = random_permutation(12, root.spawn(1))
print("\npermutation:", perm)
print("A_n,pi on j/n:", np.round(cusum_an_permuted(x, perm).values, 3))

# At a fixed t the permuted CUSUM only depends on which order statistics fall
# in the first floor(nt) positions. The two ways of writing the sum agree exactly.
t = Fraction(5, 12)
ind = epsilon_indicators(x, perm, t)
print("\nselected ranks at t = 5/12:", ind.eps)
print("direct sum  :", float(permuted_partial_sum_exact(x, perm, ind.m)))
print("order stats :", float(order_statistic_sum_exact(x, ind.eps, ind.m)))

# Moments of the selection marks are exact rationals.
for n in (4, 7):
    var, cov = epsilon_moments(n, Fraction(1, 2))
    print(f"n={n}, t=1/2: variance {var}, covariance {cov}")

# For very small samples the whole conditional law can be listed.
est = enumerate_permutation_distribution([1.0, 2.0, 4.0], Fraction(1, 2))
print("\nlaw of A_3,pi(1/2) for data (1, 2, 4):")
for atom, mass in zip(est.atoms, est.masses):
    print(f"  {atom:+.4f} with probability {mass}")
