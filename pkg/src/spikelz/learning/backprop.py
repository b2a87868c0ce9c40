"""Gradient descent through the spiking forward pass.

Two differentiation regimes share one backward implementation:

hard: the network runs its real binary dynamics; the threshold step is
  differentiated with a surrogate (fast-sigmoid derivative by default).
  Used for actual training.
soft: spikes are replaced by a smooth saturating unit whose derivative
  is the same surrogate scaled to match, so the loss is a genuinely
  differentiable function of the weights. Used by finite-difference
  verification, and available as a training variant.

LIF layers backpropagate through time (decay and reset gates); the
stochastic-gate model trains on its memoryless expected drive, where
each synapse contributes w * s/2 * x in expectation.

Loss: cross-entropy of softmax over time-summed output activity, plus
a sum-of-squares weight penalty (biases excluded).
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, TrainingError
from ..network import MODEL_LB, MODEL_LIF, Topology, WeightSet
from ..neuron import LbParams, LifParams
from .base import RuleConfig, TrainContext, fit_loop


def surrogate_grad(x: np.ndarray, beta: float, kind: str) -> np.ndarray:
    """Pseudo-derivative of the threshold step at distance x from it."""
    if kind == "fast-sigmoid":
        return 1.0 / (1.0 + np.abs(x) / beta) ** 2
    if kind == "piecewise-linear":
        return np.maximum(0.0, 1.0 - np.abs(x) / beta)
    raise ContractError(f"unknown surrogate {kind!r}")


def soft_spike(x: np.ndarray, beta: float, kind: str) -> np.ndarray:
    """Smooth spike in (0, 1); its derivative is surrogate_grad / (2 beta)."""
    if kind == "fast-sigmoid":
        return 0.5 * (1.0 + (x / beta) / (1.0 + np.abs(x) / beta))
    if kind == "piecewise-linear":
        # exact integral of the triangular surrogate / (2 beta); saturates
        # at 0.25 / 0.75, which is fine: soft mode only promises that the
        # derivative matches the surrogate, not unit range
        ax = np.minimum(np.abs(x), beta)
        area = ax - ax**2 / (2.0 * beta)
        return 0.5 + np.sign(x) * area / (2.0 * beta)
    raise ContractError(f"unknown surrogate {kind!r}")


def _lif_tape_forward(
    z: np.ndarray, params: LifParams, beta: float, kind: str, soft: bool
) -> tuple[np.ndarray, np.ndarray]:
    """Run the membrane recurrence keeping the pre-reset potentials.

    Returns (s, u_pre), both (B, n, T); s is binary in hard mode and
    continuous in soft mode where the reset is a smooth gate.
    """
    b, n, t_len = z.shape
    s = np.empty((b, n, t_len), dtype=np.float64)
    upre = np.empty((b, n, t_len), dtype=np.float64)
    u = np.full((b, n), params.u_init, dtype=np.float64)
    keep = 1.0 - params.delta
    for t in range(t_len):
        u = keep * u + z[:, :, t]
        upre[:, :, t] = u
        if soft:
            st = soft_spike(u - params.theta, beta, kind)
        else:
            st = (u >= params.theta).astype(np.float64)
        s[:, :, t] = st
        u = u * (1.0 - st) + params.u_reset * st
    return s, upre


def _lif_tape_backward(
    ds_direct: np.ndarray,
    s: np.ndarray,
    upre: np.ndarray,
    params: LifParams,
    beta: float,
    kind: str,
    soft: bool,
) -> np.ndarray:
    """dL/dz given dL/ds at every step, walked backward through time."""
    b, n, t_len = s.shape
    dz = np.empty_like(ds_direct)
    scale = 1.0 / (2.0 * beta) if soft else 1.0
    keep = 1.0 - params.delta
    dupost = np.zeros((b, n), dtype=np.float64)
    for t in range(t_len - 1, -1, -1):
        sg = surrogate_grad(upre[:, :, t] - params.theta, beta, kind) * scale
        ds_tot = ds_direct[:, :, t] + dupost * (params.u_reset - upre[:, :, t])
        duprime = ds_tot * sg + dupost * (1.0 - s[:, :, t])
        dz[:, :, t] = duprime
        dupost = duprime * keep
    return dz


def _currents(w: np.ndarray, b: np.ndarray, s_prev: np.ndarray, gain: float) -> np.ndarray:
    return gain * np.einsum("ij,bjt->bit", w, s_prev) + b[None, :, None]


def loss_and_grads(
    x: np.ndarray,
    y: np.ndarray,
    weights: WeightSet,
    topo: Topology,
    params: LifParams | LbParams,
    cfg: RuleConfig,
    lam: float,
    soft: bool,
) -> tuple[float, dict[str, np.ndarray], dict[str, np.ndarray]]:
    """Batch loss, parameter gradients, and an activity record
    (counts, s1, s2) for consumers that combine gradients with local
    activity terms.

    x is the encoded input (B, n, T); y integer labels. The LB model is
    always differentiated through its expected drive (deterministic), so
    `soft` only changes the LIF path.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    batch = x.shape[0]
    if batch == 0:
        raise ContractError("empty batch")
    beta, kind = cfg.beta, cfg.surrogate

    if topo.neuron_model == MODEL_LIF:
        assert isinstance(params, LifParams)
        z1 = _currents(weights.w1, weights.b1, x, 1.0)
        s1, u1 = _lif_tape_forward(z1, params, beta, kind, soft)
        z2 = _currents(weights.w2, weights.b2, s1, 1.0)
        s2, u2 = _lif_tape_forward(z2, params, beta, kind, soft)
        gain = 1.0
    else:
        assert isinstance(params, LbParams)
        gain = params.s / 2.0
        z1 = _currents(weights.w1, weights.b1, x, gain)
        s1 = soft_spike(z1 - params.theta_lb, beta, kind)
        z2 = _currents(weights.w2, weights.b2, s1, gain)
        s2 = soft_spike(z2 - params.theta_lb, beta, kind)

    counts = s2.sum(axis=2)
    shifted = counts - counts.max(axis=1, keepdims=True)
    expc = np.exp(shifted)
    probs = expc / expc.sum(axis=1, keepdims=True)
    nll = -np.log(np.maximum(probs[np.arange(batch), y], 1e-300)).mean()
    loss = nll + lam * (np.sum(weights.w1**2) + np.sum(weights.w2**2))

    dcounts = probs.copy()
    dcounts[np.arange(batch), y] -= 1.0
    dcounts /= batch
    ds2 = np.broadcast_to(dcounts[:, :, None], s2.shape).copy()

    if topo.neuron_model == MODEL_LIF:
        dz2 = _lif_tape_backward(ds2, s2, u2, params, beta, kind, soft)
    else:
        dz2 = ds2 * surrogate_grad(z2 - params.theta_lb, beta, kind) / (2.0 * beta)
    gw2 = np.einsum("bit,bjt->ij", dz2, s1) * gain + 2.0 * lam * weights.w2
    gb2 = dz2.sum(axis=(0, 2))
    ds1 = gain * np.einsum("ij,bit->bjt", weights.w2, dz2)

    if topo.neuron_model == MODEL_LIF:
        dz1 = _lif_tape_backward(ds1, s1, u1, params, beta, kind, soft)
    else:
        dz1 = ds1 * surrogate_grad(z1 - params.theta_lb, beta, kind) / (2.0 * beta)
    gw1 = np.einsum("bit,bjt->ij", dz1, x) * gain + 2.0 * lam * weights.w1
    gb1 = dz1.sum(axis=(0, 2))

    grads = {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2}
    acts = {"counts": counts, "s1": s1, "s2": s2}
    return float(loss), grads, acts


def backprop_update(
    x: np.ndarray,
    y: np.ndarray,
    weights: WeightSet,
    topo: Topology,
    params: LifParams | LbParams,
    cfg: RuleConfig,
    lam: float = 0.0,
    soft: bool = False,
) -> WeightSet:
    """One descent step w <- w - eta * dL/dw on the given batch."""
    _, g, _ = loss_and_grads(x, y, weights, topo, params, cfg, lam, soft)
    for a in g.values():
        if not np.all(np.isfinite(a)):
            raise TrainingError("non-finite gradient in backprop step")
    return WeightSet(
        weights.w1 - cfg.eta * g["w1"],
        weights.b1 - cfg.eta * g["b1"],
        weights.w2 - cfg.eta * g["w2"],
        weights.b2 - cfg.eta * g["b2"],
    )


def _apply_step(weights: WeightSet, grads: dict, eta: float) -> None:
    weights.w1 -= eta * grads["w1"]
    weights.b1 -= eta * grads["b1"]
    weights.w2 -= eta * grads["w2"]
    weights.b2 -= eta * grads["b2"]


def fit_backprop(ctx: TrainContext, cfg: RuleConfig, weights: WeightSet):
    """Minibatch surrogate-gradient descent with plateau early stop."""

    def epoch_fn(epoch: int, w: WeightSet) -> None:
        for idx in ctx.minibatches(epoch, cfg.batch_size):
            _, g, _ = loss_and_grads(
                ctx.spk_train[idx], ctx.y_train[idx], w, ctx.topo, ctx.params,
                cfg, ctx.lam, soft=False,
            )
            for a in g.values():
                if not np.all(np.isfinite(a)):
                    raise TrainingError("non-finite gradient in backprop step")
            _apply_step(w, g, cfg.eta)

    return fit_loop(weights, ctx, cfg, epoch_fn)
