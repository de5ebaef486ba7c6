"""LePage series for stable laws and the stable bridge on a finite grid.

Arrival times ``S_1 < S_2 < ...`` of a unit Poisson process, raised to the
power ``-1/alpha``, give the decreasing magnitudes ``Z_j`` of the jumps of a
stable law. Two independent arrival sequences ``S`` (left tail, weight
``w1 = q**(1/alpha)``) and ``S*`` (right tail, weight ``w2 = p**(1/alpha)``)
give the two-sided sum

    eta = w2 * sum_j (Z*_j - centering) - w1 * sum_j (Z_j - centering)

whose largest jump ``M = max(w1 Z_1, w2 Z*_1)`` is returned alongside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .rng import RngLike, as_generator
from .stable import TailParams

DEFAULT_K = 10_000
# exponentials generated per block when sampling many series at once
_BLOCK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class LePageEnvironment:
    """Frozen pair of exponential partial-sum sequences ``S`` and ``S*``."""

    s: np.ndarray
    s_star: np.ndarray

    def __post_init__(self):
        s = np.array(self.s, dtype=float)
        s_star = np.array(self.s_star, dtype=float)
        for name, arr in (("s", s), ("s_star", s_star)):
            if arr.ndim != 1 or arr.size == 0:
                raise ValueError(f"{name} must be a nonempty 1-d sequence")
            if not arr[0] > 0 or np.any(np.diff(arr) <= 0):
                raise ValueError(f"{name} must be positive and strictly increasing")
        if s.size != s_star.size:
            raise ValueError("s and s_star must have the same length")
        s.setflags(write=False)
        s_star.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "s_star", s_star)

    @property
    def size(self) -> int:
        return int(self.s.size)

    def __len__(self):
        return self.size


@dataclass(frozen=True)
class StableBridgePath:
    grid: np.ndarray
    w_values: np.ndarray
    b_values: np.ndarray
    z: float


def exp_partial_sums(k: int, rng: RngLike) -> np.ndarray:
    """``S_j = E_1 + ... + E_j`` for ``j = 1..k`` with unit exponentials ``E_i``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    gen = as_generator(rng)
    return np.cumsum(gen.standard_exponential(k))


def sample_environment(k: int, rng: RngLike) -> LePageEnvironment:
    """Independent ``S`` and ``S*`` of length ``k`` (``S`` drawn first from the stream)."""
    gen = as_generator(rng)
    s = exp_partial_sums(k, gen)
    s_star = exp_partial_sums(k, gen)
    return LePageEnvironment(s, s_star)


def lepage_terms(s, alpha: float) -> np.ndarray:
    """``S_j ** (-1/alpha)``."""
    s = np.asarray(s, dtype=float)
    return s ** (-1.0 / alpha)


def _check_centering_alpha(alpha: float):
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"centering constants are defined for alpha in (1, 2), got {alpha}")


def centering_constant(k: int, alpha: float) -> float:
    """``E[Z_k 1{Z_k <= 1}]`` by adaptive quadrature.

    With ``S_k ~ Gamma(k, 1)`` this is
    ``(1/Gamma(k)) * int_1^inf x^(k - 1 - 1/alpha) e^(-x) dx``.
    The integrand is evaluated in log space and the range is split around its
    mode so large ``k`` stays accurate.
    """
    _check_centering_alpha(alpha)
    if k < 1:
        raise ValueError("k must be at least 1")
    expo = k - 1.0 - 1.0 / alpha
    log_norm = special.gammaln(k)

    def integrand(x):
        return math.exp(expo * math.log(x) - x - log_norm)

    mode = max(1.0, expo)
    width = 40.0 * math.sqrt(k) + 40.0
    lo = max(1.0, mode - width)
    hi = mode + width
    pieces = [(lo, mode), (mode, hi)]
    if lo > 1.0:
        pieces.insert(0, (1.0, lo))
    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    total = 0.0
    for a, b in pieces:
        if b > a:
            total += integrate.quad(integrand, a, b, **opts)[0]
    total += integrate.quad(integrand, hi, np.inf, **opts)[0]
    return total


def centering_constants(k: int, alpha: float) -> np.ndarray:
    """``c_1..c_k`` in closed form, ``Gamma(j - 1/alpha, 1) / Gamma(j)`` (upper incomplete gamma).

    Vectorised counterpart of :func:`centering_constant`.
    """
    _check_centering_alpha(alpha)
    j = np.arange(1, k + 1, dtype=float)
    a = j - 1.0 / alpha
    return np.exp(special.gammaln(a) - special.gammaln(j)) * special.gammaincc(a, 1.0)


def _side_remainder_moments(s_k: np.ndarray, k: int, alpha: float):
    """Conditional mean and variance, given ``S_k``, of the dropped part of one side.

    The arrivals beyond ``S_k`` form a unit Poisson process on ``(S_k, inf)``,
    so Campbell's formula gives the moments of the sum of ``x**(-1/alpha)``
    over them. The mean is taken relative to the centering used for that side.
    """
    var = s_k ** (1.0 - 2.0 / alpha) / (2.0 / alpha - 1.0)
    if alpha < 1.0:
        mean = s_k ** (1.0 - 1.0 / alpha) / (1.0 / alpha - 1.0)
    elif alpha == 1.0:
        mean = special.digamma(k) - np.log(s_k)
    else:
        e = 1.0 - 1.0 / alpha
        mean = -(s_k**e - math.exp(special.gammaln(k + e) - special.gammaln(k))) / e
    return mean, var


def _side_sums(gen, rows: int, k: int, alpha: float, centering, remainder: bool):
    s = np.cumsum(gen.standard_exponential((rows, k)), axis=1)
    z = np.exp(np.log(s) * (-1.0 / alpha))
    total = z.sum(axis=1)
    if centering is not None:
        total -= centering
    if remainder:
        mean, var = _side_remainder_moments(s[:, -1], k, alpha)
        total += mean + np.sqrt(var) * gen.standard_normal(rows)
    return total, z[:, 0]


def sample_eta_with_max(
    tp: TailParams,
    k: int = DEFAULT_K,
    rng: RngLike = None,
    size: int | None = None,
    remainder: str = "gaussian",
):
    """Draw ``(eta, z)`` from the two-sided LePage construction.

    Parameters
    ----------
    tp : TailParams
    k : int
        Number of exact series terms per side.
    rng : RngStream or Generator
    size : int, optional
        Number of independent pairs. ``None`` returns scalars.
    remainder : {"gaussian", "none"}
        ``"none"`` truncates both series after ``k`` terms. ``"gaussian"``
        adds, per side, a normal variable with the exact conditional mean and
        variance of the dropped terms given ``S_k``.

    Returns
    -------
    eta, z : float or ndarray
        For ``alpha`` in (1, 2) each side is centred so that ``E[eta] = 0``,
        which makes ``eta`` strictly stable for every ``p``.
    """
    if rng is None:
        raise ValueError("an explicit rng is required")
    if k < 1:
        raise ValueError("k must be at least 1")
    if remainder not in ("gaussian", "none"):
        raise ValueError(f"unknown remainder mode {remainder!r}")
    gen = as_generator(rng)
    alpha = tp.alpha
    n = 1 if size is None else int(size)
    if n < 1:
        raise ValueError("size must be at least 1")

    centering = None
    drift = 0.0
    if 1.0 < alpha < 2.0:
        centering = centering_constants(k, alpha).sum()
        # sum over all j of E[Z_j 1{Z_j > 1}] = int_0^1 x^(-1/alpha) dx
        drift = alpha / (alpha - 1.0)

    use_rem = remainder == "gaussian"
    eta = np.empty(n)
    zmax = np.empty(n)
    rows = max(1, _BLOCK_ELEMENTS // k)
    for start in range(0, n, rows):
        r = min(rows, n - start)
        left, left1 = _side_sums(gen, r, k, alpha, centering, use_rem)
        right, right1 = _side_sums(gen, r, k, alpha, centering, use_rem)
        eta[start : start + r] = tp.w2 * (right - drift) - tp.w1 * (left - drift)
        zmax[start : start + r] = np.maximum(tp.w1 * left1, tp.w2 * right1)
    if size is None:
        return float(eta[0]), float(zmax[0])
    return eta, zmax


def _validate_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2 or g[0] != 0.0 or g[-1] != 1.0 or np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing from 0 to 1 with at least two points")
    return g


def sample_stable_bridges(
    tp: TailParams,
    grid,
    count: int,
    rng: RngLike,
    k: int = DEFAULT_K,
    remainder: str = "gaussian",
):
    """``count`` independent stable paths on ``grid``.

    Returns ``(w, b, z)`` with ``w`` and ``b`` of shape ``(count, len(grid))``
    and ``z`` of shape ``(count,)``.
    """
    g = _validate_grid(grid)
    dt = np.diff(g)
    gen = as_generator(rng)
    m = dt.size
    eta, zeta = sample_eta_with_max(tp, k, gen, size=count * m, remainder=remainder)
    scale = dt ** (1.0 / tp.alpha)
    eta = eta.reshape(count, m) * scale
    zeta = zeta.reshape(count, m) * scale
    w = np.zeros((count, m + 1))
    np.cumsum(eta, axis=1, out=w[:, 1:])
    b = w - g * w[:, -1:]
    b[:, 0] = 0.0
    b[:, -1] = 0.0
    return w, b, zeta.max(axis=1)


def sample_stable_bridge(
    tp: TailParams, grid, k: int = DEFAULT_K, rng: RngLike = None, remainder: str = "gaussian"
) -> StableBridgePath:
    """One path of ``W_alpha`` and the bridge ``B_alpha(t) = W_alpha(t) - t W_alpha(1)`` on ``grid``."""
    if rng is None:
        raise ValueError("an explicit rng is required")
    g = _validate_grid(grid)
    w, b, z = sample_stable_bridges(tp, g, 1, rng, k=k, remainder=remainder)
    return StableBridgePath(grid=g, w_values=w[0], b_values=b[0], z=float(z[0]))


def truncation_diagnostic(env: LePageEnvironment, tp: TailParams, k: int) -> float:
    """Tail quantity ``A(k) = q^(2/a) sum_{j>k} S_j^(-2/a) + p^(2/a) sum_{j>k} (S*_j)^(-2/a)``.

    Terms stored in ``env`` are summed exactly. Beyond the end of ``env`` the
    sum is replaced by its conditional mean given the last arrival ``S_K``,
    ``S_K^(1 - 2/a) / (2/a - 1)``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    if env.size < k:
        raise ValueError(f"environment has {env.size} terms, fewer than k = {k}")
    a = tp.alpha
    e = -2.0 / a

    def side(s):
        partial = float(np.sum(s[k:] ** e))
        tail = float(s[-1] ** (1.0 + e) / (-e - 1.0))
        return partial + tail

    return tp.q ** (2.0 / a) * side(env.s) + tp.p ** (2.0 / a) * side(env.s_star)
