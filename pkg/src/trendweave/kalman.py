"""Scalar linear-Gaussian chain smoothing.

Each (topic, word) pair owns an independent chain: a latent random walk
``x_t = x_{t-1} + N(0, sigma2)`` observed through Gaussian pseudo-observations
``obs_t ~ N(x_t, obs_variance_t)``. This module provides the forward filter,
the backward (marginal) smoother, the per-slice normalizer ``zeta``, and the
single-step extension used when a new time slice is appended.

All recursion functions are vectorized: ``obs`` may carry arbitrary trailing
axes (e.g. ``(T, n_words)``), in which case every trailing entry is treated as
its own chain sharing ``sigma2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Diffuse initial state: V0 = sigma2 * 1e3 unless overridden.
INIT_VARIANCE_SCALE = 1e3


def default_init_variance(sigma2: float) -> float:
    return sigma2 * INIT_VARIANCE_SCALE


def _check_positive(name: str, value: np.ndarray | float) -> None:
    if not np.all(np.asarray(value) > 0):
        raise ValueError(f"{name} must be strictly positive")


@dataclass
class Chain:
    """Observation sequence plus noise model for one scalar chain."""

    obs: np.ndarray
    obs_variance: np.ndarray
    sigma2: float
    init_mean: float = 0.0
    init_variance: float | None = None

    def __post_init__(self) -> None:
        self.obs = np.asarray(self.obs, dtype=np.float64)
        self.obs_variance = np.asarray(self.obs_variance, dtype=np.float64)
        if self.obs.shape != self.obs_variance.shape:
            raise ValueError("obs and obs_variance must have equal shapes")
        if self.obs.shape[0] < 1:
            raise ValueError("chain needs at least one slice")
        _check_positive("sigma2", self.sigma2)
        _check_positive("obs_variance", self.obs_variance)
        if self.init_variance is None:
            self.init_variance = default_init_variance(self.sigma2)
        _check_positive("init_variance", self.init_variance)


@dataclass
class SmoothedChain:
    """Filtered and marginal (smoothed) moments of a chain."""

    filtered_mean: np.ndarray
    filtered_variance: np.ndarray
    mean: np.ndarray      # marginal means, conditioned on all observations
    variance: np.ndarray  # marginal variances

    last: tuple[float, float] = field(init=False, repr=False, default=(0.0, 0.0))

    def __post_init__(self) -> None:
        self.last = (self.filtered_mean[-1], self.filtered_variance[-1])


def forward(
    obs: np.ndarray,
    obs_variance: np.ndarray,
    sigma2: float,
    init_mean: float = 0.0,
    init_variance: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Filtered means and variances given observations up to each slice.

    Standard scalar predict/update recursion: P_t = V_{t-1} + sigma2,
    K_t = P_t / (P_t + obs_variance_t), m_t = m_{t-1} + K_t (obs_t - m_{t-1}),
    V_t = (1 - K_t) P_t.
    """
    obs = np.asarray(obs, dtype=np.float64)
    obs_variance = np.asarray(obs_variance, dtype=np.float64)
    _check_positive("sigma2", sigma2)
    _check_positive("obs_variance", obs_variance)
    if init_variance is None:
        init_variance = default_init_variance(sigma2)
    _check_positive("init_variance", init_variance)

    n = obs.shape[0]
    m = np.empty_like(obs)
    v = np.empty_like(obs)
    prev_m = np.broadcast_to(np.float64(init_mean), obs.shape[1:])
    prev_v = np.broadcast_to(np.float64(init_variance), obs.shape[1:])
    for t in range(n):
        p = prev_v + sigma2
        gain = p / (p + obs_variance[t])
        m[t] = prev_m + gain * (obs[t] - prev_m)
        v[t] = (1.0 - gain) * p
        prev_m, prev_v = m[t], v[t]
    return m, v


def backward(
    filtered_mean: np.ndarray,
    filtered_variance: np.ndarray,
    sigma2: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Marginal means and variances given all observations (RTS recursion).

    J_t = V_t / (V_t + sigma2); means and variances run backwards from the
    boundary ``mean_T = m_T``, ``variance_T = V_T``.
    """
    m = np.asarray(filtered_mean, dtype=np.float64)
    v = np.asarray(filtered_variance, dtype=np.float64)
    if m.shape != v.shape:
        raise ValueError("filtered mean and variance must have equal shapes")
    _check_positive("sigma2", sigma2)

    n = m.shape[0]
    mean = np.empty_like(m)
    variance = np.empty_like(v)
    mean[n - 1] = m[n - 1]
    variance[n - 1] = v[n - 1]
    for t in range(n - 2, -1, -1):
        p = v[t] + sigma2
        j = v[t] / p
        mean[t] = m[t] + j * (mean[t + 1] - m[t])
        variance[t] = v[t] + j * j * (variance[t + 1] - p)
    return mean, variance


def smooth(chain: Chain) -> SmoothedChain:
    m, v = forward(chain.obs, chain.obs_variance, chain.sigma2,
                   chain.init_mean, chain.init_variance)
    mean, variance = backward(m, v, chain.sigma2)
    return SmoothedChain(m, v, mean, variance)


def smooth_initial_state(
    mean_1: np.ndarray,
    variance_1: np.ndarray,
    sigma2: float,
    init_mean: float = 0.0,
    init_variance: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One extra backward step onto the (unobserved) initial state.

    Gives the smoothed moments of x_0 from the smoothed moments of x_1; used
    by the likelihood bound, which needs the slice-0 boundary values.
    """
    if init_variance is None:
        init_variance = default_init_variance(sigma2)
    p = init_variance + sigma2
    j = init_variance / p
    mean_0 = init_mean + j * (np.asarray(mean_1) - init_mean)
    variance_0 = init_variance + j * j * (np.asarray(variance_1) - p)
    return mean_0, variance_0


def log_zeta(mean: np.ndarray, variance: np.ndarray, axis: int = -1) -> np.ndarray:
    """log sum_w exp(mean_w + variance_w / 2), computed with a max shift."""
    x = np.asarray(mean) + 0.5 * np.asarray(variance)
    shift = np.max(x, axis=axis, keepdims=True)
    out = np.log(np.sum(np.exp(x - shift), axis=axis)) + np.squeeze(shift, axis=axis)
    return out


def zeta(mean: np.ndarray, variance: np.ndarray) -> float:
    """Per-slice likelihood-bound normalizer: sum_w exp(mean_w + variance_w/2).

    Shift-and-rescale keeps the summation finite; the result itself must fit
    a float64, otherwise the overflow is reported instead of returning inf.
    """
    mean = np.asarray(mean, dtype=np.float64)
    variance = np.asarray(variance, dtype=np.float64)
    if mean.shape != variance.shape:
        raise ValueError("mean and variance must have equal lengths")
    with np.errstate(over="ignore"):
        value = np.exp(log_zeta(mean, variance))
    if not np.isfinite(value):
        raise OverflowError("zeta overflows float64 even after max-shift")
    return float(value)


def one_step_extend(
    last_filtered_mean: np.ndarray,
    last_filtered_variance: np.ndarray,
    obs_new: np.ndarray,
    obs_variance_new: np.ndarray,
    sigma2: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Extend a smoothed chain by one slice without revisiting earlier slices.

    One forward step produces the new filtered moments; the new slice's
    marginals equal its filtered moments (it is the boundary), and one
    backward step re-smooths the previous slice only. Earlier slices keep
    their stored values; that truncation is the documented approximation.

    Returns ``(m_new, v_new, mean_new, variance_new, mean_prev, variance_prev)``.
    """
    _check_positive("sigma2", sigma2)
    _check_positive("obs_variance_new", obs_variance_new)
    _check_positive("last_filtered_variance", last_filtered_variance)
    m_t = np.asarray(last_filtered_mean, dtype=np.float64)
    v_t = np.asarray(last_filtered_variance, dtype=np.float64)

    p = v_t + sigma2
    gain = p / (p + obs_variance_new)
    m_new = m_t + gain * (obs_new - m_t)
    v_new = (1.0 - gain) * p
    mean_new, variance_new = m_new, v_new

    j = v_t / p
    mean_prev = m_t + j * (mean_new - m_t)
    variance_prev = v_t + j * j * (variance_new - p)
    return m_new, v_new, mean_new, variance_new, mean_prev, variance_prev
