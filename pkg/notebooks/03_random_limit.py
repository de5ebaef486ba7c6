"""Why permutation CDFs stay random under heavy tails.

For each of several fixed samples we estimate P{A_n,pi(t) <= x0} over random
permutations. With normal data these probabilities settle on one value as n
grows. With heavy tails they keep scattering, and the scatter matches the
scatter of P{R(t) <= x0} over independent LePage environments.

Run with ``python notebooks/03_random_limit.py``. Takes about a minute.
"""

import numpy as np

from stablebox import (
    RngStream,
    TailParams,
    permuted_cusum_samples,
    r_conditional_variance,
    sample_domain_of_attraction,
    sample_r_unconditional,
)
from stablebox.limit_law import tail_variance_ratio

root = RngStream(99)
t, x0 = 0.5, 0.25
samples, perms = 60, 2000
tp = TailParams(1.2, 0.7)


def conditional_probs(draw_data, n, norming):
    out = np.empty(samples)
    for i in range(samples):
        data = draw_data(n, root.spawn(n, i, 0))
        vals = permuted_cusum_samples(data, [t], perms, root.spawn(n, i, 1), norming=norming)[:, 0]
        out[i] = np.mean(vals <= x0)
    return out


normal = lambda n, rng: rng.generator().standard_normal(n)
pareto = lambda n, rng: sample_domain_of_attraction(tp, n, rng)
noise = np.sqrt(0.25 / perms)

print(f"sd over {samples} samples of P{{statistic <= {x0}}} at t = {t} (Monte Carlo floor about {noise:.3f})")
print("n       normal data    Pareto(1.2) data")
for n in (200, 2000):
    a = conditional_probs(normal, n, "sn")
    b = conditional_probs(pareto, n, "tn")
    print(f"{n:<7} {a.std(ddof=1):.4f}         {b.std(ddof=1):.4f}")

# The limit: one conditional law per environment.
lim = sample_r_unconditional(tp, [t], k=2000, num_envs=samples, draws_per_env=perms, rng=root.spawn(10**6))
probs = lim.conditional_cdf(x0)
print(f"\nsd of P_S{{R({t}) <= {x0}}} over {samples} environments: {probs.std(ddof=1):.4f}")

# The conditional variance of R(t) varies a lot between environments, which is
# the source of the scatter.
variances = [r_conditional_variance(env, tp, t, k=2000) for env in lim.envs]
print("conditional variance of R(t): min %.3f  median %.3f  max %.3f" % (min(variances), np.median(variances), max(variances)))
ratios = [tail_variance_ratio(env, tp, 2000) for env in lim.envs]
print("dropped-tail share of that variance: median %.2e" % np.median(ratios))
