"""Train a conventional dense network, then rescale it into spike space.

The dense net is n -> n -> 2 with rectified-linear hidden units and a
softmax cross-entropy loss, trained by seeded minibatch descent on the
unit-interval feature vectors (which double as firing rates). Conversion
divides weights by the synaptic time constant and then applies
data-based threshold balancing: each layer is scaled so a high
percentile of its pre-activations lands at the firing threshold, which
keeps rate coding inside its linear regime instead of saturating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, TrainingError
from ..network import WeightSet
from .base import (
    RuleConfig,
    TrainContext,
    FitMeta,
    drive_gain,
    firing_threshold,
)


@dataclass
class AnnModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def hidden(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(x @ self.w1.T + self.b1, 0.0)

    def logits(self, x: np.ndarray) -> np.ndarray:
        return self.hidden(x) @ self.w2.T + self.b2

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(x), axis=1)


def _ce_loss_and_grads(
    model: AnnModel, x: np.ndarray, y: np.ndarray, lam: float
) -> tuple[float, dict[str, np.ndarray]]:
    batch = x.shape[0]
    h = model.hidden(x)
    logits = h @ model.w2.T + model.b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    expl = np.exp(shifted)
    probs = expl / expl.sum(axis=1, keepdims=True)
    nll = -np.log(np.maximum(probs[np.arange(batch), y], 1e-300)).mean()
    loss = nll + lam * (np.sum(model.w1**2) + np.sum(model.w2**2))
    dl = probs.copy()
    dl[np.arange(batch), y] -= 1.0
    dl /= batch
    gw2 = dl.T @ h + 2.0 * lam * model.w2
    gb2 = dl.sum(axis=0)
    dh = (dl @ model.w2) * (h > 0)
    gw1 = dh.T @ x + 2.0 * lam * model.w1
    gb1 = dh.sum(axis=0)
    return float(loss), {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2}


def ann_train(
    x: np.ndarray,
    y: np.ndarray,
    init: WeightSet,
    cfg: RuleConfig,
    lam: float,
    rng,
    x_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
) -> tuple[AnnModel, FitMeta]:
    """Seeded minibatch descent to convergence / plateau; deterministic."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    model = AnnModel(init.w1.copy(), init.b1.copy(), init.w2.copy(), init.b2.copy())
    meta = FitMeta()
    best: AnnModel | None = None
    have_val = x_val is not None and y_val is not None and len(y_val) > 0
    for epoch in range(cfg.epochs):
        order = rng.substream(1000 + epoch).permutation(y.size)
        for lo in range(0, y.size, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss, g = _ce_loss_and_grads(model, x[idx], y[idx], lam)
            if not np.isfinite(loss):
                raise TrainingError("dense training diverged (non-finite loss)")
            model.w1 -= cfg.eta * g["w1"]
            model.b1 -= cfg.eta * g["b1"]
            model.w2 -= cfg.eta * g["w2"]
            model.b2 -= cfg.eta * g["b2"]
        meta.epochs_run = epoch + 1
        if not have_val:
            continue
        score = float(np.mean(model.predict(x_val) == y_val))
        meta.history.append(round(score, 6))
        if score > meta.best_score + 1e-12:
            meta.best_score = score
            meta.best_epoch = epoch
            best = AnnModel(model.w1.copy(), model.b1.copy(),
                            model.w2.copy(), model.b2.copy())
        elif epoch - meta.best_epoch >= cfg.patience:
            meta.early_stopped = True
            break
    if best is not None:
        model = best
    return model, meta


def ann_to_snn_convert(
    ann: AnnModel,
    cfg: RuleConfig,
    calib_x: np.ndarray | None = None,
    theta: float = 1.0,
    gain: float = 1.0,
) -> WeightSet:
    """Map dense weights into the spiking network.

    Weights are divided by tau_syn; with balancing enabled (and
    calibration data), layer l is then rescaled by lambda_{l-1} /
    lambda_l where lambda_l is the configured percentile of that
    layer's pre-activations, and multiplied by theta / gain so the
    balanced drive peaks at the firing threshold under the model's
    expected synaptic gain. Biases scale by theta / lambda_l (they
    enter the drive unscaled by gain).
    """
    if cfg.tau_syn <= 0:
        raise ContractError("tau_syn must be positive")
    w1 = ann.w1 / cfg.tau_syn
    b1 = ann.b1 / cfg.tau_syn
    w2 = ann.w2 / cfg.tau_syn
    b2 = ann.b2 / cfg.tau_syn
    if not cfg.balancing or calib_x is None:
        return WeightSet(w1, b1, w2, b2)
    x = np.asarray(calib_x, dtype=np.float64)
    pre1 = x @ w1.T + b1
    lam1 = float(np.percentile(pre1, cfg.balance_percentile))
    h = np.maximum(pre1, 0.0)
    pre2 = h @ w2.T + b2
    lam2 = float(np.percentile(pre2, cfg.balance_percentile))
    lam1 = max(lam1, 1e-9)
    lam2 = max(lam2, 1e-9)
    out_w1 = w1 * (theta / gain) * (1.0 / lam1)
    out_b1 = b1 * theta / lam1
    out_w2 = w2 * (theta / gain) * (lam1 / lam2)
    out_b2 = b2 * theta / lam2
    return WeightSet(out_w1, out_b1, out_w2, out_b2)


def fit_ann2snn(ctx: TrainContext, cfg: RuleConfig, weights: WeightSet):
    ann, meta = ann_train(
        ctx.x_train, ctx.y_train, weights, cfg, ctx.lam, ctx.rng,
        ctx.x_val, ctx.y_val,
    )
    converted = ann_to_snn_convert(
        ann, cfg, calib_x=ctx.x_train,
        theta=firing_threshold(ctx.params), gain=drive_gain(ctx.params),
    )
    return converted, meta
