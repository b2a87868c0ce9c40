"""Reward-modulated plasticity: coincidence through an eligibility trace.

Each pre spike opens an exponentially fading eligibility window; post
spikes landing inside it (same step or later) mark the synapse. A
terminal scalar reward (+1 correct prediction, -1 otherwise) converts
the accumulated eligibility into a signed weight change on both layers.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from ..network import WeightSet, forward_batch
from .base import RuleConfig, TrainContext, batch_readout, fit_loop


def eligibility_kernel(timesteps: int, tau_e: float) -> np.ndarray:
    """K[t_post, t_pre] = exp(-(t_post - t_pre)/tau_e) on lags >= 0."""
    t = np.arange(timesteps)
    lag = t[:, None] - t[None, :]
    with np.errstate(over="ignore"):
        k = np.exp(-lag / tau_e)
    return np.where(lag >= 0, k, 0.0)


def reward_stdp_update(
    pre: np.ndarray, post: np.ndarray, reward: float, cfg: RuleConfig
) -> float:
    """Single-synapse delta: eta * r * sum over non-negative-lag pairs."""
    if not np.isfinite(reward):
        raise ContractError("reward must be finite")
    pre = np.asarray(pre, dtype=np.float64).ravel()
    post = np.asarray(post, dtype=np.float64).ravel()
    if pre.shape != post.shape:
        raise ContractError("pre and post rows must have equal length")
    k = eligibility_kernel(pre.size, cfg.tau_e)
    return float(cfg.eta * reward * (post @ k @ pre))


def fit_reward(ctx: TrainContext, cfg: RuleConfig, weights: WeightSet):
    kern = eligibility_kernel(ctx.encoding.timesteps, cfg.tau_e)
    norm = float(ctx.encoding.timesteps)  # keeps deltas O(rate^2 * tau_e)

    def epoch_fn(epoch: int, w: WeightSet) -> None:
        for k, idx in enumerate(ctx.minibatches(epoch, cfg.batch_size)):
            rng = (
                ctx.rng.substream(3000 + epoch * 10000 + k)
                if ctx.topo.neuron_model == "lb"
                else None
            )
            x = ctx.spk_train[idx].astype(np.float64)
            s1, s2 = forward_batch(ctx.spk_train[idx], w, ctx.topo, ctx.params, rng)
            preds = batch_readout(s2, ctx.readout_mode)
            r = np.where(preds == ctx.y_train[idx], 1.0, -1.0)
            s1 = s1.astype(np.float64)
            s2 = s2.astype(np.float64)
            f1 = np.einsum("pq,bjq->bjp", kern, x)
            f2 = np.einsum("pq,bjq->bjp", kern, s1)
            w.w1 += cfg.eta * np.einsum("b,bip,bjp->ij", r, s1, f1) / (idx.size * norm)
            w.w2 += cfg.eta * np.einsum("b,bip,bjp->ij", r, s2, f2) / (idx.size * norm)

    return fit_loop(weights, ctx, cfg, epoch_fn)
