"""Coincidence-driven plasticity, plain and gradient-hybrid.

Plain Hebbian training is unsupervised: the hidden layer learns from
per-timestep pre/post spike coincidences. Raw coincidence alone is
unstable (every row drifts toward the mean input and the code collapses
to rank one), so the trainer uses the standard subspace-stabilized
form: the coincidence term is centred, and a decorrelation term
-<post,post> W bounds growth and keeps rows orthogonal. Per-row bias
homeostasis holds each unit in its responsive range, and classification
uses a frozen class-mean readout over hidden counts -- the clamped-Hebb
head: training W2 by coincidence against clamped target outputs yields
exactly the class-conditional mean counts.

The hybrid rule adds a global-loss gradient term to the local update on
both layers: dw = eta_h * coincidence - eta_g * dE/dw.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, TrainingError
from ..network import WeightSet
from .backprop import loss_and_grads
from .base import (
    RuleConfig,
    TrainContext,
    drive_gain,
    firing_threshold,
    fit_discriminant_head,
    fit_loop,
    hidden_spikes,
    homeostatic_biases,
    spread_orthonormal,
)

# Hidden operating point (drive percentile pinned at threshold). The
# stochastic model runs sparser: release noise keeps its units active
# well past the nominal set point.
HOMEO_PCT = {"lif": 50.0, "lb": 80.0}


def hebbian_update(pre: np.ndarray, post: np.ndarray, eta: float) -> float:
    """dw = eta * sum_t pre(t) * post(t) for one synapse's spike rows."""
    pre = np.asarray(pre, dtype=np.float64).ravel()
    post = np.asarray(post, dtype=np.float64).ravel()
    if pre.shape != post.shape:
        raise ContractError("pre and post rows must have equal length")
    return float(eta * np.dot(pre, post))


def hebbian_gd_update(
    pre: np.ndarray,
    post: np.ndarray,
    score_gradient: np.ndarray | float,
    eta_h: float,
    eta_g: float,
):
    """Local coincidence term minus the global gradient term."""
    hebb = hebbian_update(pre, post, eta_h)
    return hebb - eta_g * np.asarray(score_gradient, dtype=np.float64)


def subspace_update(
    w1: np.ndarray, pre: np.ndarray, post: np.ndarray, eta: float
) -> np.ndarray:
    """One stabilized-Hebbian step from batched spike tensors.

    pre is (B, n_in, T), post is (B, n_hidden, T). The cross term is the
    centred per-timestep coincidence <post, pre>; subtracting
    <post, post> W keeps the rows bounded and mutually decorrelated
    (otherwise every row converges onto the dominant input direction).
    """
    steps = pre.shape[0] * pre.shape[2]
    pre_c = pre - pre.mean(axis=(0, 2), keepdims=True)
    post_c = post - post.mean(axis=(0, 2), keepdims=True)
    cross = np.einsum("bit,bjt->ij", post_c, pre_c) / steps
    auto = np.einsum("bit,bjt->ij", post_c, post_c) / steps
    return w1 + eta * (cross - auto @ w1)


def init_hebbian_layer(ctx: TrainContext, weights: WeightSet, scale: float) -> None:
    """Spread-orthonormal rows plus homeostatic biases, in place."""
    weights.w1 = scale * spread_orthonormal(ctx.topo.width, ctx.topo.width)
    weights.b1 = homeostatic_biases(
        weights.w1, ctx.x_train, drive_gain(ctx.params),
        firing_threshold(ctx.params), HOMEO_PCT[ctx.topo.neuron_model],
    )


def fit_hebbian(ctx: TrainContext, cfg: RuleConfig, weights: WeightSet):
    init_hebbian_layer(ctx, weights, cfg.row_norm)

    def epoch_fn(epoch: int, w: WeightSet) -> None:
        for k, idx in enumerate(ctx.minibatches(epoch, cfg.batch_size)):
            x = ctx.spk_train[idx].astype(np.float64)
            s1 = hidden_spikes(w, ctx, ctx.spk_train[idx], epoch * 10000 + k)
            w.w1 = subspace_update(w.w1, x, s1.astype(np.float64), cfg.eta)
        w.b1 = homeostatic_biases(
            w.w1, ctx.x_train, drive_gain(ctx.params),
            firing_threshold(ctx.params), HOMEO_PCT[ctx.topo.neuron_model],
        )
        fit_discriminant_head(w, ctx, epoch)

    return fit_loop(weights, ctx, cfg, epoch_fn)


def fit_hebbian_gd(ctx: TrainContext, cfg: RuleConfig, weights: WeightSet):
    def epoch_fn(epoch: int, w: WeightSet) -> None:
        for idx in ctx.minibatches(epoch, cfg.batch_size):
            x = ctx.spk_train[idx].astype(np.float64)
            _, g, acts = loss_and_grads(
                x, ctx.y_train[idx], w, ctx.topo, ctx.params, cfg, ctx.lam,
                soft=False,
            )
            for a in g.values():
                if not np.all(np.isfinite(a)):
                    raise TrainingError("non-finite gradient in hybrid step")
            b = idx.size
            c1 = np.einsum("bit,bjt->ij", acts["s1"], x) / b
            c2 = np.einsum("bit,bjt->ij", acts["s2"], acts["s1"]) / b
            w.w1 += cfg.hebb_rate * c1 - cfg.grad_rate * g["w1"]
            w.w2 += cfg.hebb_rate * c2 - cfg.grad_rate * g["w2"]
            w.b1 -= cfg.grad_rate * g["b1"]
            w.b2 -= cfg.grad_rate * g["b2"]

    return fit_loop(weights, ctx, cfg, epoch_fn)
