"""Random permutations of a fixed sample and the conditional law they induce.

For a fixed realization the permuted CUSUM at ``t`` only depends on *which*
``m = floor(n t)`` observations land in the first ``m`` positions. This module
exposes that selection through order-statistic indicators and uses it for
exact enumeration on small samples.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .cusum import _as_realization, check_permutation, floor_nt, norming_factor
from .rng import RngLike, as_generator

MAX_ENUMERATION_N = 8
_BLOCK_ELEMENTS = 4_000_000


@dataclass(frozen=True)
class SelectionIndicators:
    """``eps[j] = 1`` iff the ``(j+1)``-th smallest observation is among the first ``m`` drawn."""

    eps: np.ndarray
    t: object
    m: int

    @property
    def centered(self) -> np.ndarray:
        return self.eps - self.m / self.eps.size


@dataclass(frozen=True)
class ConditionalCdfEstimate:
    """Estimate of ``x -> P_X{A_{n,pi}(t) <= x}`` for a fixed realization.

    Exact estimates also carry the support ``atoms`` and their probabilities
    ``masses`` as fractions.
    """

    realization_id: Optional[int]
    t: object
    xs: np.ndarray
    probs: np.ndarray
    num_perms: int
    exact: bool
    atoms: Optional[np.ndarray] = None
    masses: Optional[tuple] = field(default=None)

    def cdf(self, x) -> float:
        if self.exact:
            below = sum((mass for a, mass in zip(self.atoms, self.masses) if a <= x), Fraction(0))
            return float(below)
        i = np.searchsorted(self.xs, x, side="right")
        return float(self.probs[i - 1]) if i > 0 else 0.0


def random_permutation(n: int, rng: RngLike) -> np.ndarray:
    """Uniform permutation of ``0..n-1`` (Fisher-Yates)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return as_generator(rng).permutation(n)


def epsilon_indicators(r, perm, t) -> SelectionIndicators:
    r = _as_realization(r)
    if r.has_ties():
        raise ValueError("observations contain ties; apply tie_break first")
    perm = check_permutation(perm, r.n)
    m = floor_nt(r.n, t)
    rank = np.empty(r.n, dtype=np.int64)
    rank[np.argsort(r.x, kind="stable")] = np.arange(r.n)
    eps = np.zeros(r.n, dtype=np.int64)
    eps[rank[perm[:m]]] = 1
    return SelectionIndicators(eps=eps, t=t, m=m)


def epsilon_moments(n: int, t) -> tuple[Fraction, Fraction]:
    """Exact variance and pairwise covariance of the centred indicators.

    ``Var = m/n - (m/n)^2`` and ``Cov = -m (n - m) / (n^2 (n - 1))`` with ``m = floor(n t)``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    m = floor_nt(n, t)
    var = Fraction(m, n) - Fraction(m, n) ** 2
    cov = Fraction(-m * (n - m), n * n * (n - 1))
    return var, cov


def permuted_partial_sum_exact(x, perm, m: int) -> Fraction:
    """``sum_{j < m} (x[perm[j]] - mean(x))`` in rational arithmetic."""
    xs = [Fraction(float(v)) for v in np.asarray(x, dtype=float)]
    mean = sum(xs, Fraction(0)) / len(xs)
    return sum((xs[int(i)] - mean for i in np.asarray(perm)[:m]), Fraction(0))


def order_statistic_sum_exact(x, eps: np.ndarray, m: int, centered: bool = True) -> Fraction:
    """``sum_j (X_(j) - mean) * eps_j`` (or with ``eps_j - m/n`` if ``centered``), exactly."""
    xs = sorted(Fraction(float(v)) for v in np.asarray(x, dtype=float))
    n = len(xs)
    mean = sum(xs, Fraction(0)) / n
    shift = Fraction(m, n) if centered else Fraction(0)
    return sum(((v - mean) * (int(e) - shift) for v, e in zip(xs, eps)), Fraction(0))


def permuted_cusum_samples(
    r,
    ts,
    num_perms: int,
    rng: RngLike,
    norming: str = "tn",
    nu: float | None = None,
) -> np.ndarray:
    """Permuted CUSUM values at each ``t`` in ``ts`` for ``num_perms`` random permutations.

    The same permutations are used for every ``t``, so the columns are jointly
    distributed as ``(A_{n,pi}(t_1), ..., A_{n,pi}(t_r))`` given the data.
    Returns an array of shape ``(num_perms, len(ts))``.
    """
    r = _as_realization(r)
    if num_perms < 1:
        raise ValueError("num_perms must be at least 1")
    gen = as_generator(rng)
    n = r.n
    norm = norming_factor(r, norming, nu)
    ts = list(np.atleast_1d(ts)) if not isinstance(ts, (list, tuple)) else list(ts)
    ms = np.array([floor_nt(n, t) for t in ts])
    xc = r.x - r.mean
    out = np.empty((num_perms, len(ms)))
    rows = max(1, _BLOCK_ELEMENTS // n)
    base = np.arange(n)
    for start in range(0, num_perms, rows):
        k = min(rows, num_perms - start)
        perms = gen.permuted(np.broadcast_to(base, (k, n)), axis=1)
        cs = np.zeros((k, n + 1))
        np.cumsum(xc[perms], axis=1, out=cs[:, 1:])
        out[start : start + k] = cs[:, ms]
    # full selection telescopes to zero
    out[:, ms == n] = 0.0
    return out / norm


def conditional_cdf_estimate(
    r,
    t,
    xs,
    num_perms: int,
    rng: RngLike,
    realization_id: Optional[int] = None,
    norming: str = "tn",
    nu: float | None = None,
) -> ConditionalCdfEstimate:
    """Monte Carlo estimate of ``P_X{A_{n,pi}(t) <= x}`` at each ``x`` in ``xs``."""
    vals = permuted_cusum_samples(r, [t], num_perms, rng, norming=norming, nu=nu)[:, 0]
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    probs = np.searchsorted(np.sort(vals), xs, side="right") / num_perms
    return ConditionalCdfEstimate(
        realization_id=realization_id,
        t=t,
        xs=xs,
        probs=probs,
        num_perms=num_perms,
        exact=False,
    )


def enumerate_permutation_distribution(r, t, realization_id: Optional[int] = None) -> ConditionalCdfEstimate:
    """Exact law of ``A_{n,pi}(t)`` over all ``n!`` permutations (``n <= 8``).

    Every ``m``-subset of positions is hit by ``m! (n-m)!`` permutations, so
    each subset carries mass ``1 / C(n, m)`` and only subsets are enumerated.
    Atom values are computed in rational arithmetic and then rounded once.
    """
    r = _as_realization(r)
    n = r.n
    if n > MAX_ENUMERATION_N:
        raise ValueError(f"exact enumeration is limited to n <= {MAX_ENUMERATION_N}, got {n}")
    m = floor_nt(n, t)
    xs = [Fraction(float(v)) for v in r.x]
    mean = sum(xs, Fraction(0)) / n
    norm = Fraction(norming_factor(r, "tn"))
    weight = Fraction(1, math.comb(n, m))
    masses: dict[Fraction, Fraction] = {}
    for subset in itertools.combinations(range(n), m):
        value = sum((xs[i] - mean for i in subset), Fraction(0)) / norm
        masses[value] = masses.get(value, Fraction(0)) + weight
    atoms_exact = sorted(masses)
    mass_list = tuple(masses[a] for a in atoms_exact)
    cum = list(itertools.accumulate(mass_list))
    atoms = np.array([float(a) for a in atoms_exact])
    return ConditionalCdfEstimate(
        realization_id=realization_id,
        t=t,
        xs=atoms,
        probs=np.array([float(c) for c in cum]),
        num_perms=math.factorial(n),
        exact=True,
        atoms=atoms,
        masses=mass_list,
    )
