"""The random limit of the permuted CUSUM's conditional law.

Given a LePage environment ``(S, S*)`` and ``t`` in (0, 1),

    R(t) = (1/M) [ -w1 sum_j S_j^(-1/a) (d_j(t) - t) + w2 sum_j (S*_j)^(-1/a) (d*_j(t) - t) ]

with ``d_j(t) = 1{U_j <= t}`` for i.i.d. uniforms ``U_j`` (and ``U*_j``) that are
shared by all ``t``. Conditionally on the environment this is a nondegenerate
law; across environments the law itself is random.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .lepage import DEFAULT_K, LePageEnvironment, lepage_terms, sample_environment, truncation_diagnostic
from .rng import RngLike, RngStream, as_generator
from .stable import TailParams

_BLOCK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class LimitDraw:
    """Draws of ``(R(t_1), ..., R(t_r))`` for one fixed environment.

    ``values`` has shape ``(num_draws, len(ts))``. ``shared_uniforms`` holds
    ``(U, U*)`` with shape ``(num_draws, k)`` each when they were kept.
    """

    env: LePageEnvironment
    ts: np.ndarray
    values: np.ndarray
    k: int
    m: float
    shared_uniforms: Optional[tuple] = None


@dataclass(frozen=True)
class UnconditionalDraws:
    """Nested draws: ``values[e, i, l]`` is draw ``i`` of ``R(ts[l])`` in environment ``e``."""

    ts: np.ndarray
    envs: tuple
    m_values: np.ndarray
    values: np.ndarray
    k: int

    @property
    def num_envs(self) -> int:
        return self.values.shape[0]

    def conditional_cdf(self, x: float, t_index: int = 0) -> np.ndarray:
        """``P_S{R(t) <= x}`` estimated separately in each environment."""
        return np.mean(self.values[:, :, t_index] <= x, axis=1)

    def pooled(self, t_index: int = 0) -> np.ndarray:
        return self.values[:, :, t_index].ravel()

    def cdf_grid(self, t_index: int = 0, num_points: int = 201) -> tuple[np.ndarray, np.ndarray]:
        """Per-environment CDFs on a common grid spanning the pooled 0.5%-99.5% range."""
        pooled = self.pooled(t_index)
        lo, hi = np.quantile(pooled, [0.005, 0.995])
        xs = np.linspace(lo, hi, num_points)
        vals = np.sort(self.values[:, :, t_index], axis=1)
        cdfs = np.stack([np.searchsorted(v, xs, side="right") for v in vals]) / vals.shape[1]
        return xs, cdfs


def compute_m(env: LePageEnvironment, tp: TailParams) -> float:
    """``M = max(w1 S_1^(-1/a), w2 (S*_1)^(-1/a))``."""
    a = tp.alpha
    return float(max(tp.w1 * env.s[0] ** (-1.0 / a), tp.w2 * env.s_star[0] ** (-1.0 / a)))


def _check_k(env: LePageEnvironment, k: int):
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > env.size:
        raise ValueError(f"k = {k} exceeds the environment length {env.size}")


def _check_t(t):
    if not 0.0 < float(t) < 1.0:
        raise ValueError(f"t must lie strictly inside (0, 1), got {t}")


def _weighted_square_sum(env: LePageEnvironment, tp: TailParams, k: int) -> float:
    e = -2.0 / tp.alpha
    return float(tp.w1**2 * np.sum(env.s[:k] ** e) + tp.w2**2 * np.sum(env.s_star[:k] ** e))


def r_conditional_covariance(env: LePageEnvironment, tp: TailParams, t1, t2, k: int = DEFAULT_K) -> float:
    """``Cov_S(R(t1), R(t2))`` for the series truncated at ``k`` terms per side.

    Uses ``Cov(1{U <= t1} - t1, 1{U <= t2} - t2) = min(t1, t2) - t1 t2``.
    """
    _check_t(t1)
    _check_t(t2)
    _check_k(env, k)
    t1, t2 = float(t1), float(t2)
    m = compute_m(env, tp)
    return (min(t1, t2) - t1 * t2) / m**2 * _weighted_square_sum(env, tp, k)


def r_conditional_variance(env: LePageEnvironment, tp: TailParams, t, k: int = DEFAULT_K) -> float:
    return r_conditional_covariance(env, tp, t, t, k)


def tail_variance_bound(env: LePageEnvironment, tp: TailParams, t, k: int = DEFAULT_K) -> float:
    """Conditional variance of the terms dropped beyond ``k``, ``t(1-t) A(k) / M^2``."""
    _check_t(t)
    t = float(t)
    m = compute_m(env, tp)
    return t * (1.0 - t) * truncation_diagnostic(env, tp, k) / m**2


def tail_variance_ratio(env: LePageEnvironment, tp: TailParams, k: int = DEFAULT_K) -> float:
    """Dropped-tail variance over retained variance; the same for every ``t``."""
    _check_k(env, k)
    return truncation_diagnostic(env, tp, k) / _weighted_square_sum(env, tp, k)


def sample_r_conditional(
    env: LePageEnvironment,
    tp: TailParams,
    ts,
    k: int = DEFAULT_K,
    num_draws: int = 1,
    rng: RngLike = None,
    keep_uniforms: bool = False,
) -> LimitDraw:
    """Draws of ``R(t)`` at every ``t`` in ``ts`` with the environment held fixed.

    Each draw uses fresh uniforms ``U_1..U_k`` and ``U*_1..U*_k`` that are
    shared by all ``t``. The value at a given ``t`` is computed on its own, so
    it is bit-identical to a call with ``ts=[t]`` on the same stream.
    """
    if rng is None:
        raise ValueError("an explicit rng is required")
    _check_k(env, k)
    ts_arr = np.atleast_1d(np.asarray(ts, dtype=float))
    for t in ts_arr:
        _check_t(t)
    if num_draws < 1:
        raise ValueError("num_draws must be at least 1")
    gen = as_generator(rng)
    a = tp.alpha
    left = tp.w1 * lepage_terms(env.s[:k], a)
    right = tp.w2 * lepage_terms(env.s_star[:k], a)
    left_total, right_total = left.sum(), right.sum()
    m = compute_m(env, tp)

    values = np.empty((num_draws, ts_arr.size))
    kept_u = np.empty((num_draws, k)) if keep_uniforms else None
    kept_us = np.empty((num_draws, k)) if keep_uniforms else None
    rows = max(1, _BLOCK_ELEMENTS // k)
    for start in range(0, num_draws, rows):
        r = min(rows, num_draws - start)
        u = gen.random((r, k))
        us = gen.random((r, k))
        if keep_uniforms:
            kept_u[start : start + r] = u
            kept_us[start : start + r] = us
        for col, t in enumerate(ts_arr):
            neg = (u <= t).astype(float) @ left - t * left_total
            pos = (us <= t).astype(float) @ right - t * right_total
            values[start : start + r, col] = (pos - neg) / m
    return LimitDraw(
        env=env,
        ts=ts_arr,
        values=values,
        k=k,
        m=m,
        shared_uniforms=(kept_u, kept_us) if keep_uniforms else None,
    )


def sample_r_unconditional(
    tp: TailParams,
    ts,
    k: int = DEFAULT_K,
    num_envs: int = 1,
    draws_per_env: int = 1,
    rng: RngLike = None,
) -> UnconditionalDraws:
    """Outer loop over fresh environments, inner loop over draws of ``R(t)`` given each.

    Environment ``e`` and its draws come from child streams ``(e, 0)`` and
    ``(e, 1)`` of ``rng`` (an :class:`RngStream`), so results do not depend on
    evaluation order.
    """
    if not isinstance(rng, RngStream):
        raise TypeError("sample_r_unconditional needs an RngStream to derive per-environment streams")
    if num_envs < 1 or draws_per_env < 1:
        raise ValueError("num_envs and draws_per_env must be at least 1")
    ts_arr = np.atleast_1d(np.asarray(ts, dtype=float))
    envs = []
    ms = np.empty(num_envs)
    values = np.empty((num_envs, draws_per_env, ts_arr.size))
    for e in range(num_envs):
        env = sample_environment(k, rng.spawn(e, 0))
        draw = sample_r_conditional(env, tp, ts_arr, k, draws_per_env, rng.spawn(e, 1))
        envs.append(env)
        ms[e] = draw.m
        values[e] = draw.values
    return UnconditionalDraws(ts=ts_arr, envs=tuple(envs), m_values=ms, values=values, k=k)


def max_atom_mass(values) -> float:
    """Largest jump of the empirical CDF of ``values``."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    if v.size == 0:
        raise ValueError("no values")
    _, counts = np.unique(v, return_counts=True)
    return float(counts.max() / v.size)
