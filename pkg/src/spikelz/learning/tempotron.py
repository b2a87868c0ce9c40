"""Tempotron: maximum-potential binary decisions, updated only on error.

Each output neuron votes fire / no-fire for its class. The decision
potential is the hidden spike train filtered through the standard
double-exponential PSP kernel, peak-normalized to 1. On a missed fire
the incoming weights move up along the kernel trace at the potential's
peak time; on a false fire they move down. Correct behavior changes
nothing.

The hidden layer stays a frozen random projection; only the readout
learns. Inputs use the latency code.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from ..network import WeightSet
from .base import (
    RuleConfig,
    TrainContext,
    drive_gain,
    firing_threshold,
    fit_loop,
    hidden_spikes,
)


def psp_peak(cfg: RuleConfig) -> tuple[float, float]:
    """(t_peak, v0) for K(t) = v0 (exp(-t/tau) - exp(-t/tau_s))."""
    tau, tau_s = cfg.tau_mem, cfg.tau_s
    t_peak = tau * tau_s / (tau - tau_s) * np.log(tau / tau_s)
    v0 = 1.0 / (np.exp(-t_peak / tau) - np.exp(-t_peak / tau_s))
    return float(t_peak), float(v0)


def psp_kernel(t: np.ndarray | float, cfg: RuleConfig) -> np.ndarray:
    """Peak-normalized PSP kernel sampled at lags t (zero for t < 0)."""
    _, v0 = psp_peak(cfg)
    t = np.asarray(t, dtype=np.float64)
    tc = np.maximum(t, 0.0)  # negative lags are masked; avoid exp overflow
    val = v0 * (np.exp(-tc / cfg.tau_mem) - np.exp(-tc / cfg.tau_s))
    return np.where(t >= 0.0, val, 0.0)


def _lag_matrix(timesteps: int, cfg: RuleConfig) -> np.ndarray:
    t = np.arange(timesteps, dtype=np.float64)
    return psp_kernel(t[:, None] - t[None, :], cfg)


def filtered_trace(pre: np.ndarray, cfg: RuleConfig) -> np.ndarray:
    """PSP-filtered spike rows: out[..., t] = sum_q K(t - q) pre[..., q]."""
    pre = np.asarray(pre, dtype=np.float64)
    kern = _lag_matrix(pre.shape[-1], cfg)
    return np.einsum("pq,...q->...p", kern, pre)


def tempotron_delta(
    pre: np.ndarray, fired: bool, should_fire: bool, t_max: int, cfg: RuleConfig
) -> np.ndarray:
    """Per-input weight change for one output neuron on one sample."""
    pre = np.asarray(pre, dtype=np.float64)
    if pre.ndim != 2:
        raise ContractError("pre must be (inputs, timesteps)")
    if fired == should_fire:
        return np.zeros(pre.shape[0])
    trace = filtered_trace(pre, cfg)[:, t_max]
    sign = 1.0 if should_fire else -1.0
    return sign * cfg.eta * trace


def tempotron_update(
    input_train: np.ndarray,
    label: int,
    weights: WeightSet,
    ctx: TrainContext,
    cfg: RuleConfig,
    tick: int,
) -> WeightSet:
    """One-sample update of the readout weights; hidden weights frozen."""
    s1 = hidden_spikes(weights, ctx, input_train[None, :, :], tick)[0]
    trace = filtered_trace(s1, cfg)  # (n, T)
    gain = drive_gain(ctx.params)
    theta = firing_threshold(ctx.params)
    out = weights.copy()
    v = gain * (weights.w2 @ trace) + weights.b2[:, None]  # (n_out, T)
    for c in range(v.shape[0]):
        t_max = int(np.argmax(v[c]))
        fired = v[c, t_max] >= theta
        should = c == int(label)
        if fired != should:
            sign = 1.0 if should else -1.0
            out.w2[c] += sign * cfg.eta * trace[:, t_max]
    return out


def fit_tempotron(ctx: TrainContext, cfg: RuleConfig, weights: WeightSet):
    kern = _lag_matrix(ctx.encoding.timesteps, cfg)
    gain = drive_gain(ctx.params)
    theta = firing_threshold(ctx.params)

    def epoch_fn(epoch: int, w: WeightSet) -> None:
        for k, idx in enumerate(ctx.minibatches(epoch, cfg.batch_size)):
            s1 = hidden_spikes(w, ctx, ctx.spk_train[idx], epoch * 10000 + k)
            trace = np.einsum("pq,biq->bip", kern, s1.astype(np.float64))
            v = gain * np.einsum("ci,bip->bcp", w.w2, trace) + w.b2[None, :, None]
            t_max = np.argmax(v, axis=2)  # (B, n_out)
            v_max = np.take_along_axis(v, t_max[:, :, None], axis=2)[:, :, 0]
            fired = v_max >= theta
            should = np.zeros_like(fired)
            should[np.arange(idx.size), ctx.y_train[idx]] = True
            err = fired != should
            if not np.any(err):
                continue
            delta = np.zeros_like(w.w2)
            for b, c in zip(*np.nonzero(err)):
                sign = 1.0 if should[b, c] else -1.0
                delta[c] += sign * trace[b, :, t_max[b, c]]
            w.w2 += cfg.eta * delta / idx.size

    return fit_loop(weights, ctx, cfg, epoch_fn)
