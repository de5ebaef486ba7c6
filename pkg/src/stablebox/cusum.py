"""CUSUM processes of a fixed sample and of its permutations.

All processes share the numerator ``sum_{j <= floor(n t)} (X_j - mean)`` and
differ only in the norming:

* ``"sn"``  -- ``s_n * sqrt(n)`` (finite-variance CUSUM ``Z_n``),
* ``"tn"``  -- ``T_n = max |X_j|`` (self-normalised ``A_n``),
* ``"nu"``  -- ``T_n^(nu) = (sum |X_j - mean|^nu)^(1/nu)``.

Permutations are 0-based index arrays: ``perm[j]`` is the position in ``x`` of
the ``j``-th drawn element.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

NORMINGS = ("sn", "tn", "nu")
# float grid points are snapped to the nearest rational with a denominator below this
_GRID_DENOMINATOR = 10**9


@dataclass(frozen=True)
class Realization:
    """One observed data vector ``X_1..X_n`` (``n >= 2``)."""

    x: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float).ravel()
        if x.size < 2:
            raise ValueError("a realization needs at least two observations")
        if not np.all(np.isfinite(x)):
            raise ValueError("observations must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return int(self.x.size)

    @property
    def mean(self) -> float:
        return float(np.mean(self.x))

    def order_statistics(self) -> np.ndarray:
        return np.sort(self.x)

    def has_ties(self) -> bool:
        return bool(np.unique(self.x).size < self.x.size)

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class CusumPath:
    grid: np.ndarray
    index: np.ndarray
    values: np.ndarray
    norming: str


def _as_realization(r) -> Realization:
    return r if isinstance(r, Realization) else Realization(r)


def floor_nt(n: int, t) -> int:
    """``floor(n * t)`` in exact arithmetic.

    Integers and :class:`fractions.Fraction` are used as given. Floats are
    first snapped to the closest rational with denominator below 1e9, so
    ``1/3`` or ``0.29`` behave like the fractions they denote.
    """
    if isinstance(t, Rational):
        ft = Fraction(t)
    else:
        tf = float(t)
        if not np.isfinite(tf):
            raise ValueError(f"t must be finite, got {t}")
        ft = Fraction(tf).limit_denominator(_GRID_DENOMINATOR)
    if ft < 0 or ft > 1:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return (n * ft.numerator) // ft.denominator


def grid_indices(n: int, grid=None):
    """Return ``(t_values, floor(n t))`` for ``grid``; ``None`` means the full grid ``j/n``."""
    if grid is None:
        idx = np.arange(n + 1)
        return idx / n, idx
    ts = list(grid) if not np.isscalar(grid) else [grid]
    idx = np.array([floor_nt(n, t) for t in ts], dtype=np.int64)
    return np.array([float(t) for t in ts]), idx


def tie_break(r, alpha: float) -> Realization:
    """Make all observations distinct.

    If any value repeats, the observation with (1-based) index ``j`` is shifted
    by ``j / n**(2 + 1/alpha)``. Distinct input is returned unchanged.
    """
    r = _as_realization(r)
    if not r.has_ties():
        return r
    n = r.n
    j = np.arange(1, n + 1, dtype=float)
    x = r.x + j / float(n) ** (2.0 + 1.0 / alpha)
    if np.unique(x).size < n:
        # shift too small to register in floating point: step ties apart in index order
        order = np.lexsort((np.arange(n), x))
        xs = x[order]
        for i in range(1, n):
            if xs[i] <= xs[i - 1]:
                xs[i] = np.nextafter(xs[i - 1], np.inf)
        x[order] = xs
    return Realization(x)


def t_n(r) -> float:
    """``T_n = max_j |X_j|``."""
    r = _as_realization(r)
    val = float(np.max(np.abs(r.x)))
    if val == 0.0:
        raise ValueError("T_n is zero: all observations are zero")
    return val


def t_n_nu(r, nu: float) -> float:
    """``(sum_j |X_j - mean|^nu)^(1/nu)``."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    r = _as_realization(r)
    dev = np.abs(r.x - r.mean)
    top = dev.max()
    if top == 0.0:
        raise ValueError("T_n^(nu) is zero: all observations are equal")
    # scale out the largest deviation to avoid overflow for large nu
    return float(top * np.sum((dev / top) ** nu) ** (1.0 / nu))


def sample_sd(r) -> float:
    r = _as_realization(r)
    sd = float(np.std(r.x, ddof=1))
    if sd == 0.0:
        raise ValueError("zero sample variance: constant data")
    return sd


def default_nu(alpha: float) -> float:
    """``alpha + 1`` clipped to at most ``2 * alpha``; always strictly above ``alpha``."""
    return min(alpha + 1.0, 2.0 * alpha)


def norming_factor(r, norming: str = "tn", nu: float | None = None) -> float:
    r = _as_realization(r)
    if norming == "tn":
        return t_n(r)
    if norming == "sn":
        return sample_sd(r) * np.sqrt(r.n)
    if norming == "nu":
        if nu is None:
            raise ValueError("norming 'nu' needs a value for nu")
        return t_n_nu(r, nu)
    raise ValueError(f"unknown norming {norming!r}; expected one of {NORMINGS}")


def centered_partial_sums(x: np.ndarray, index: np.ndarray) -> np.ndarray:
    """``sum_{j <= m} (x_j - mean(x))`` for each ``m`` in ``index``.

    Written as ``S_m - (m/n) S_n`` so the value at ``m = n`` is exactly zero.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    cs = np.zeros(x.shape[:-1] + (n + 1,))
    np.cumsum(x, axis=-1, out=cs[..., 1:])
    total = cs[..., n : n + 1]
    return cs[..., index] - (index / n) * total


def _cusum(r, grid, norming, nu=None, perm=None) -> CusumPath:
    r = _as_realization(r)
    norm = norming_factor(r, norming, nu)
    x = r.x
    if perm is not None:
        x = x[check_permutation(perm, r.n)]
    ts, idx = grid_indices(r.n, grid)
    values = centered_partial_sums(x, idx) / norm
    return CusumPath(grid=ts, index=idx, values=values, norming=norming)


def check_permutation(perm, n: int) -> np.ndarray:
    p = np.asarray(perm)
    if p.shape != (n,) or not np.issubdtype(p.dtype, np.integer):
        raise ValueError(f"permutation must be an integer array of length {n}")
    if not np.array_equal(np.sort(p), np.arange(n)):
        raise ValueError("not a permutation of 0..n-1")
    return p


def cusum_zn(r, grid=None) -> CusumPath:
    """Finite-variance CUSUM normed by ``s_n sqrt(n)``."""
    return _cusum(r, grid, "sn")


def cusum_zn_permuted(r, perm, grid=None) -> CusumPath:
    return _cusum(r, grid, "sn", perm=perm)


def cusum_an(r, grid=None) -> CusumPath:
    """CUSUM normed by the largest absolute observation."""
    return _cusum(r, grid, "tn")


def cusum_an_permuted(r, perm, grid=None) -> CusumPath:
    """``A_n`` of the permuted sample; mean and ``T_n`` are those of the original sample."""
    return _cusum(r, grid, "tn", perm=perm)


def cusum_an_nu(r, nu: float, grid=None) -> CusumPath:
    return _cusum(r, grid, "nu", nu=nu)


def cusum_an_nu_permuted(r, nu: float, perm, grid=None) -> CusumPath:
    return _cusum(r, grid, "nu", nu=nu, perm=perm)


def sup_functional(path) -> float:
    """``max |value|`` over the evaluated grid."""
    values = path.values if isinstance(path, CusumPath) else np.asarray(path, dtype=float)
    if values.size == 0:
        raise ValueError("empty path")
    return float(np.max(np.abs(values)))


def batch_cusum(x: np.ndarray, grid=None, norming: str = "tn", nu: float | None = None) -> np.ndarray:
    """CUSUM values for many samples at once.

    ``x`` has shape ``(reps, n)``; the result has shape ``(reps, len(grid))``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] < 2:
        raise ValueError("x must have shape (reps, n) with n >= 2")
    n = x.shape[1]
    _, idx = grid_indices(n, grid)
    num = centered_partial_sums(x, idx)
    if norming == "tn":
        norm = np.max(np.abs(x), axis=1)
    elif norming == "sn":
        norm = np.std(x, axis=1, ddof=1) * np.sqrt(n)
    elif norming == "nu":
        if nu is None:
            raise ValueError("norming 'nu' needs a value for nu")
        dev = np.abs(x - x.mean(axis=1, keepdims=True))
        top = dev.max(axis=1, keepdims=True)
        norm = top[:, 0] * np.sum((dev / top) ** nu, axis=1) ** (1.0 / nu)
    else:
        raise ValueError(f"unknown norming {norming!r}")
    if np.any(norm == 0):
        raise ValueError("degenerate sample with zero norming factor")
    return num / norm[:, None]
