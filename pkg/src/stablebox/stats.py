"""Empirical distributions, Kolmogorov-Smirnov distances and the Kolmogorov law."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

# Terms of the Kolmogorov series below this size are dropped.
KOLMOGOROV_TERM_TOL = 1e-12
# Below this point the theta-function form converges much faster than the alternating one.
_KOLMOGOROV_SWITCH = 0.5


class EmpiricalDistribution:
    """Sorted sample with step-function CDF queries.

    Parameters
    ----------
    samples : array_like
        Finite real values. They are copied and sorted.
    """

    __slots__ = ("_x",)

    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=float).ravel())
        if x.size == 0:
            raise ValueError("empirical distribution needs at least one sample")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x.setflags(write=False)
        self._x = x

    @property
    def samples(self) -> np.ndarray:
        return self._x

    @property
    def count(self) -> int:
        return int(self._x.size)

    def __len__(self):
        return self.count

    def cdf(self, x):
        return empirical_cdf(self, x)

    def quantile(self, q: float) -> float:
        return quantile(self, q)

    def __repr__(self):
        return f"EmpiricalDistribution(count={self.count}, min={self._x[0]:.6g}, max={self._x[-1]:.6g})"


def _as_dist(d) -> EmpiricalDistribution:
    return d if isinstance(d, EmpiricalDistribution) else EmpiricalDistribution(d)


def empirical_cdf(d, x):
    """Fraction of samples ``<= x``. Works elementwise on array ``x``."""
    d = _as_dist(d)
    counts = np.searchsorted(d.samples, x, side="right")
    out = counts / d.count
    return float(out) if np.ndim(out) == 0 else out


def ks_two_sample(a, b) -> float:
    """Exact two-sample KS distance ``sup_x |F_a(x) - F_b(x)|``.

    The supremum of the difference of two right-continuous step functions is
    attained at one of the pooled sample points, so evaluating there is exact.
    """
    a, b = _as_dist(a), _as_dist(b)
    pooled = np.concatenate([a.samples, b.samples])
    fa = np.searchsorted(a.samples, pooled, side="right") / a.count
    fb = np.searchsorted(b.samples, pooled, side="right") / b.count
    return float(np.max(np.abs(fa - fb)))


def _eval_cdf(cdf: Callable, x: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(cdf(x), dtype=float)
        if vals.shape == x.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(cdf(float(v))) for v in x])


def ks_one_sample(d, cdf: Callable) -> float:
    """One-sample KS distance between an empirical law and a continuous ``cdf``.

    Both one-sided gaps are taken at every order statistic:
    ``max_i max(i/m - F(x_i), F(x_i) - (i-1)/m)``.
    """
    d = _as_dist(d)
    x = d.samples
    m = x.size
    f = _eval_cdf(cdf, x)
    i = np.arange(1, m + 1)
    upper = np.max(i / m - f)
    lower = np.max(f - (i - 1) / m)
    return float(max(upper, lower))


def _kolmogorov_scalar(x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= _KOLMOGOROV_SWITCH:
        # K(x) = 1 - 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 x^2)
        total = 0.0
        k = 1
        while True:
            term = math.exp(-2.0 * k * k * x * x)
            if term < KOLMOGOROV_TERM_TOL:
                break
            total += term if k % 2 else -term
            k += 1
        return min(1.0, max(0.0, 1.0 - 2.0 * total))
    # Jacobi-transformed form: K(x) = sqrt(2 pi)/x sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 x^2))
    c = math.pi * math.pi / (8.0 * x * x)
    total = 0.0
    k = 1
    while True:
        term = math.exp(-((2 * k - 1) ** 2) * c)
        if term < KOLMOGOROV_TERM_TOL:
            break
        total += term
        k += 1
    return min(1.0, max(0.0, math.sqrt(2.0 * math.pi) / x * total))


def kolmogorov_cdf(x):
    """CDF of ``sup_t |B(t)|`` for a Brownian bridge ``B``.

    Scalars return a float, arrays an array of the same shape.
    """
    if np.ndim(x) == 0:
        return _kolmogorov_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    return np.vectorize(_kolmogorov_scalar, otypes=[float])(arr)


def quantile(d, q: float) -> float:
    """Order statistic number ``ceil(q * count)`` (1-based), clamped to ``[1, count]``."""
    d = _as_dist(d)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    n = d.count
    # guard against q*n landing a hair above an integer through rounding
    idx = math.ceil(q * n - 1e-9 * max(1.0, q * n))
    idx = min(max(idx, 1), n)
    return float(d.samples[idx - 1])


def ks_critical_value(n: int, m: int | None = None, level: float = 0.05) -> float:
    """Asymptotic KS critical value (one-sample if ``m`` is None)."""
    c = math.sqrt(-0.5 * math.log(level / 2.0))
    if m is None:
        return c / math.sqrt(n)
    return c * math.sqrt((n + m) / (n * m))
