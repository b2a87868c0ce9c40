"""Spike-timing-dependent plasticity over all pre/post spike pairs.

Potentiation when the post spike trails the pre spike, depression when
it leads, both decaying exponentially in the lag. The all-pairs sum
over two spike trains factorizes through a T x T lag kernel, so batch
updates are three-tensor contractions rather than pair loops.

Unsupervised like plain Hebbian, and stabilized the same way: the
timing-filtered coincidence term is centred and paired with a
<post, post> decorrelation term, with bias homeostasis and the frozen
class-mean readout on top.
"""

from __future__ import annotations

import numpy as np

from ..network import WeightSet
from .base import (
    RuleConfig,
    TrainContext,
    drive_gain,
    firing_threshold,
    fit_discriminant_head,
    fit_loop,
    hidden_spikes,
    homeostatic_biases,
)
from .hebbian import HOMEO_PCT, init_hebbian_layer


def stdp_pair_delta(t_pre: int, t_post: int, cfg: RuleConfig) -> float:
    """Weight change contributed by a single (pre, post) spike pair."""
    dt = t_post - t_pre
    if dt > 0:
        return float(cfg.a_plus * np.exp(-dt / cfg.tau_plus))
    if dt < 0:
        return float(-cfg.a_minus * np.exp(dt / cfg.tau_minus))
    return 0.0  # simultaneous spikes: both branches are strict

def stdp_kernel(timesteps: int, cfg: RuleConfig) -> np.ndarray:
    """K[t_post, t_pre] = pair delta at that lag; zero diagonal."""
    t = np.arange(timesteps)
    lag = t[:, None] - t[None, :]  # t_post - t_pre
    pos = cfg.a_plus * np.exp(-lag / cfg.tau_plus)
    neg = -cfg.a_minus * np.exp(lag / cfg.tau_minus)
    return np.where(lag > 0, pos, np.where(lag < 0, neg, 0.0))


def stdp_train_delta(pre: np.ndarray, post: np.ndarray, cfg: RuleConfig) -> float:
    """All-pairs delta for one synapse: sum over every spike pair."""
    pre = np.asarray(pre, dtype=np.float64).ravel()
    post = np.asarray(post, dtype=np.float64).ravel()
    k = stdp_kernel(pre.size, cfg)
    return float(post @ k @ pre)


def fit_stdp(ctx: TrainContext, cfg: RuleConfig, weights: WeightSet):
    kern = stdp_kernel(ctx.encoding.timesteps, cfg)
    init_hebbian_layer(ctx, weights, cfg.row_norm)

    def epoch_fn(epoch: int, w: WeightSet) -> None:
        for k, idx in enumerate(ctx.minibatches(epoch, cfg.batch_size)):
            x = ctx.spk_train[idx].astype(np.float64)
            s1 = hidden_spikes(w, ctx, ctx.spk_train[idx], epoch * 10000 + k)
            steps = idx.size * x.shape[2]
            # dw[i,j] = sum_b s1[b,i,:] K x[b,j,:], centred, minus decorrelation
            filt = np.einsum("pq,bjq->bjp", kern, x)
            filt -= filt.mean(axis=(0, 2), keepdims=True)
            post = s1.astype(np.float64)
            post -= post.mean(axis=(0, 2), keepdims=True)
            cross = np.einsum("bip,bjp->ij", post, filt) / steps
            auto = np.einsum("bit,bjt->ij", post, post) / steps
            w.w1 += cfg.eta * (cross - auto @ w.w1)
        w.b1 = homeostatic_biases(
            w.w1, ctx.x_train, drive_gain(ctx.params),
            firing_threshold(ctx.params), HOMEO_PCT[ctx.topo.neuron_model],
        )
        fit_discriminant_head(w, ctx, epoch)

    return fit_loop(weights, ctx, cfg, epoch_fn)
