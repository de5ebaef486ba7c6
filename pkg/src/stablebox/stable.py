"""Strictly stable laws and Pareto-tailed members of their domains of attraction.

The characteristic function convention is

    phi(t) = exp(-c t^2 / 2)                                  alpha = 2
    phi(t) = exp(-c |t|^alpha [1 - i beta sgn(t) tan(pi alpha / 2)])   alpha != 1, 2
    phi(t) = exp(-c |t|)                                      alpha = 1 (symmetric only)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import RngLike, as_generator


@dataclass(frozen=True)
class StableParams:
    alpha: float
    beta: float = 0.0
    scale_c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if not -1.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [-1, 1], got {self.beta}")
        if self.alpha == 1.0 and self.beta != 0.0:
            raise ValueError("alpha = 1 is only supported in the symmetric case beta = 0")
        if not self.scale_c > 0.0:
            raise ValueError(f"scale_c must be positive, got {self.scale_c}")

    @property
    def sigma(self) -> float:
        """Scale in the ``S_alpha(sigma, beta, 0)`` parametrisation."""
        if self.alpha == 2.0:
            return math.sqrt(self.scale_c / 2.0)
        if self.alpha == 1.0:
            return self.scale_c
        return self.scale_c ** (1.0 / self.alpha)


@dataclass(frozen=True)
class TailParams:
    """Tail index ``alpha`` and right-tail weight ``p`` of a heavy-tailed law.

    ``q = 1 - p`` is the left-tail weight and ``beta = 2p - 1`` the skewness
    of the attracting stable law.
    """

    alpha: float
    p: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"tail index alpha must lie in (0, 2), got {self.alpha}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.alpha == 1.0 and self.p != 0.5:
            raise ValueError("alpha = 1 requires balanced tails p = q = 1/2")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def beta(self) -> float:
        return 2.0 * self.p - 1.0

    @property
    def w1(self) -> float:
        """Weight of the left tail, ``q**(1/alpha)``."""
        return self.q ** (1.0 / self.alpha)

    @property
    def w2(self) -> float:
        """Weight of the right tail, ``p**(1/alpha)``."""
        return self.p ** (1.0 / self.alpha)

    def stable_params(self, scale_c: float = 1.0) -> StableParams:
        return StableParams(self.alpha, self.beta if self.alpha != 1.0 else 0.0, scale_c)


def characteristic_fn(params: StableParams, t):
    """Characteristic function of the strictly stable law ``params`` at ``t``."""
    t = np.asarray(t, dtype=float)
    a, c = params.alpha, params.scale_c
    if a == 2.0:
        out = np.exp(-c * t * t / 2.0 + 0j)
    elif a == 1.0:
        out = np.exp(-c * np.abs(t) + 0j)
    else:
        skew = params.beta * np.sign(t) * math.tan(math.pi * a / 2.0)
        out = np.exp(-c * np.abs(t) ** a * (1.0 - 1j * skew))
    return complex(out) if out.ndim == 0 else out


def sample_stable(params: StableParams, count: int, rng: RngLike) -> np.ndarray:
    """I.i.d. strictly stable draws by the Chambers-Mallows-Stuck transform.

    Uses one uniform angle ``V`` on ``(-pi/2, pi/2)`` and one unit exponential
    ``W`` per draw (Weron's form of the transform for ``alpha != 1``).
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    gen = as_generator(rng)
    a, b = params.alpha, params.beta
    v = (gen.random(count) - 0.5) * math.pi
    w = gen.standard_exponential(count)
    if a == 1.0:
        x = np.tan(v)
    else:
        zeta = b * math.tan(math.pi * a / 2.0) if a != 2.0 else 0.0
        b0 = math.atan(zeta) / a
        s0 = (1.0 + zeta * zeta) ** (1.0 / (2.0 * a))
        av = a * (v + b0)
        x = (
            s0
            * np.sin(av)
            / np.cos(v) ** (1.0 / a)
            * (np.cos(v - av) / w) ** ((1.0 - a) / a)
        )
    return params.sigma * x


def two_sided_pareto(alpha: float, p: float, count: int, rng: RngLike) -> np.ndarray:
    """``+U**(-1/alpha)`` with probability ``p``, else ``-U**(-1/alpha)``.

    Any ``alpha > 0`` is accepted, so this also serves finite-variance
    baselines (``alpha > 2``).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if count < 1:
        raise ValueError("count must be at least 1")
    gen = as_generator(rng)
    u = 1.0 - gen.random(count)  # (0, 1]
    sign = np.where(gen.random(count) < p, 1.0, -1.0)
    return sign * np.exp(-np.log(u) / alpha)


def sample_domain_of_attraction(tp: TailParams, count: int, rng: RngLike) -> np.ndarray:
    """Two-sided Pareto draws with ``P{X > y} = p y^-alpha``, ``P{X < -y} = q y^-alpha`` for ``y >= 1``."""
    return two_sided_pareto(tp.alpha, tp.p, count, rng)


def analytic_mean(tp: TailParams) -> Optional[float]:
    """Mean of the two-sided Pareto law, or ``None`` when ``alpha < 1`` (no mean, no centering)."""
    if tp.alpha < 1.0:
        return None
    if tp.alpha == 1.0:
        return 0.0
    return (tp.p - tp.q) * tp.alpha / (tp.alpha - 1.0)
