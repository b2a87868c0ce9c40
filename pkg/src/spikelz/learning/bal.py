"""Uncertainty-driven sample selection with information-weighted updates.

Each step scores every pool sample by the Shannon entropy of its
softmax-normalized class counts, takes the top-k most uncertain (ties
to the lower index), and for those samples only applies a supervised
coincidence update to the readout, scaled per synapse by a plug-in
mutual-information estimate between the binarized pre and post rows.
Confidently handled samples therefore never spend budget or move
weights.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError
from ..network import WeightSet, forward_batch
from .base import RuleConfig, TrainContext, fit_loop


def uncertainty(scores: np.ndarray) -> np.ndarray:
    """Shannon entropy (bits) of softmax over class scores; (B,) or scalar."""
    s = np.asarray(scores, dtype=np.float64)
    one = s.ndim == 1
    if one:
        s = s[None, :]
    z = s - s.max(axis=1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p), 0.0)
    h = -terms.sum(axis=1)
    return float(h[0]) if one else h


def plug_in_mi(pre: np.ndarray, post: np.ndarray) -> float:
    """Plug-in mutual information (bits) of two binary rows' 2x2 table."""
    pre = np.asarray(pre).astype(bool).ravel()
    post = np.asarray(post).astype(bool).ravel()
    if pre.shape != post.shape or pre.size == 0:
        raise ContractError("plug_in_mi needs equal-length non-empty rows")
    t = pre.size
    n11 = np.sum(pre & post)
    n10 = np.sum(pre & ~post)
    n01 = np.sum(~pre & post)
    n00 = t - n11 - n10 - n01
    return _mi_from_counts(
        np.array([[n00, n01], [n10, n11]], dtype=np.float64)
    )


def _mi_from_counts(table: np.ndarray) -> float:
    t = table.sum()
    p = table / t
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p / (px * py)), 0.0)
    return float(terms.sum())


def _mi_matrix(s1: np.ndarray, s2: np.ndarray) -> np.ndarray:
    """MI (bits) between every (post row of s2, pre row of s1) pair.

    s1: (n, T), s2: (n_out, T) binary. Vectorized plug-in estimate.
    """
    t = s1.shape[1]
    a = s2.astype(np.float64)  # post
    b = s1.astype(np.float64)  # pre
    n11 = a @ b.T
    n10 = a @ (1.0 - b).T  # post active, pre silent
    n01 = (1.0 - a) @ b.T
    n00 = t - n11 - n10 - n01
    out = np.zeros(n11.shape)
    for cell_post, cell_pre, n in ((0, 0, n00), (0, 1, n01), (1, 0, n10), (1, 1, n11)):
        p = n / t
        p_post = (n10 + n11) / t if cell_post else (n00 + n01) / t
        p_pre = (n01 + n11) / t if cell_pre else (n00 + n10) / t
        with np.errstate(divide="ignore", invalid="ignore"):
            out += np.where(p > 0, p * np.log2(p / (p_post * p_pre)), 0.0)
    return out


def bal_step(
    pool_spikes: np.ndarray,
    pool_labels: np.ndarray,
    weights: WeightSet,
    ctx: TrainContext,
    cfg: RuleConfig,
    budget: int,
    tick: int,
) -> tuple[np.ndarray, WeightSet]:
    """Select the top-`budget` uncertain samples and learn from them.

    Returns (selected pool indices in selection order, updated weights).
    """
    if pool_spikes.shape[0] == 0:
        raise ContractError("bal_step needs a non-empty pool")
    if budget > pool_spikes.shape[0]:
        raise ContractError("budget exceeds pool size")
    rng = ctx.rng.substream(4000 + tick) if ctx.topo.neuron_model == "lb" else None
    s1, s2 = forward_batch(pool_spikes, weights, ctx.topo, ctx.params, rng)
    counts = s2.sum(axis=2).astype(np.float64)
    u = uncertainty(counts)
    order = np.lexsort((np.arange(u.size), -u))
    selected = order[:budget]
    t_len = pool_spikes.shape[2]
    out = weights.copy()
    for b in selected:
        mi = _mi_matrix(s1[b], s2[b])
        coinc = s2[b].astype(np.float64) @ s1[b].astype(np.float64).T
        sign = np.where(
            np.arange(ctx.topo.n_out) == int(pool_labels[b]), 1.0, -1.0
        )
        out.w2 += cfg.eta * u[b] * sign[:, None] * mi * coinc / t_len
    return selected, out


def fit_bal(ctx: TrainContext, cfg: RuleConfig, weights: WeightSet):
    def epoch_fn(epoch: int, w: WeightSet) -> None:
        remaining = np.arange(ctx.y_train.size)
        step = 0
        while remaining.size > 0:
            k = min(cfg.bal_budget, remaining.size)
            sel, updated = bal_step(
                ctx.spk_train[remaining], ctx.y_train[remaining], w, ctx, cfg,
                k, epoch * 10000 + step,
            )
            w.w1, w.b1 = updated.w1, updated.b1
            w.w2, w.b2 = updated.w2, updated.b2
            remaining = np.delete(remaining, sel)
            step += 1

    return fit_loop(weights, ctx, cfg, epoch_fn)
