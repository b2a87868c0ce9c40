"""Shared training plumbing: rule configuration, trained-model record,
teacher signals, dataset encoding, evaluation, and the early-stop loop.

Every rule trainer consumes a TrainContext (encoded training/validation
data plus seeded substreams) and returns an updated WeightSet. Rate
encodings are drawn once per run and frozen across epochs so training
is reproducible draw-for-draw.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..encoding import (
    SCHEME_LATENCY,
    SCHEME_RATE,
    EncodingConfig,
    latency_encode,
    rate_encode,
)
from ..errors import ContractError, TrainingError
from ..network import Topology, WeightSet, forward_batch
from ..neuron import LbParams, LifParams, StreamTag
from ..complexity import normalized_lzc
from ..rng import RngStream
from .. import kernels

RULE_NAMES = (
    "hebbian",
    "hebbian-gd",
    "stdp",
    "backprop",
    "spikeprop",
    "tempotron",
    "ann2snn",
    "reward-stdp",
    "bal",
)

SURROGATES = ("fast-sigmoid", "piecewise-linear")

ETA_MIN = 1e-4
ETA_MAX = 1e-1


@dataclass(frozen=True)
class RuleConfig:
    """Learning-rule selection plus every rule-specific constant.

    Constants irrelevant to the chosen rule are ignored. eta is bounded
    to [1e-4, 1e-1]; amplitudes and time constants must be positive.
    """

    rule: str
    eta: float = 1e-2
    epochs: int = 50
    batch_size: int = 32
    # pairwise STDP constants
    a_plus: float = 1.0
    a_minus: float = 1.0
    tau_plus: float = 20.0
    tau_minus: float = 20.0
    # conversion
    tau_syn: float = 1.0
    balancing: bool = True
    balance_percentile: float = 99.9
    # PSP kernel (tempotron, spikeprop)
    tau_mem: float = 15.0
    tau_s: float = 3.75
    # reward eligibility
    tau_e: float = 5.0
    # surrogate gradient
    beta: float = 10.0
    surrogate: str = "fast-sigmoid"
    # hybrid hebbian-gd rates (default to eta when unset)
    eta_h: float | None = None
    eta_g: float | None = None
    # uncertainty-driven selection
    bal_budget: int = 64
    # unsupervised row scaling
    row_norm: float = 1.0
    # stopping
    patience: int = 10
    val_frac: float = 0.1

    def __post_init__(self):
        if self.rule not in RULE_NAMES:
            raise ContractError(f"unknown rule {self.rule!r}")
        if not ETA_MIN <= self.eta <= ETA_MAX:
            raise ContractError(f"eta must lie in [{ETA_MIN}, {ETA_MAX}]")
        for name in ("a_plus", "a_minus", "tau_plus", "tau_minus", "tau_syn",
                     "tau_mem", "tau_s", "tau_e", "beta", "row_norm"):
            if getattr(self, name) <= 0:
                raise ContractError(f"{name} must be positive")
        if self.tau_s >= self.tau_mem:
            raise ContractError("tau_s must be smaller than tau_mem")
        if self.epochs < 0:
            raise ContractError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if self.bal_budget < 1:
            raise ContractError("bal_budget must be >= 1")
        if not 50 <= self.balance_percentile <= 100:
            raise ContractError("balance_percentile must be in [50, 100]")
        if self.surrogate not in SURROGATES:
            raise ContractError(f"surrogate must be one of {SURROGATES}")
        if self.patience < 1:
            raise ContractError("patience must be >= 1")
        if not 0.0 <= self.val_frac < 0.5:
            raise ContractError("val_frac must be in [0, 0.5)")
        if self.eta_h is not None and self.eta_h <= 0:
            raise ContractError("eta_h must be positive")
        if self.eta_g is not None and self.eta_g <= 0:
            raise ContractError("eta_g must be positive")

    @property
    def hebb_rate(self) -> float:
        return self.eta if self.eta_h is None else self.eta_h

    @property
    def grad_rate(self) -> float:
        return self.eta if self.eta_g is None else self.eta_g


@dataclass(frozen=True)
class TeacherSignal:
    """Target first-spike time per output neuron for one labeled sample."""

    target_times: np.ndarray
    timesteps: int

    def __post_init__(self):
        t = np.asarray(self.target_times, dtype=np.int64)
        object.__setattr__(self, "target_times", t)
        if t.ndim != 1 or t.size == 0:
            raise ContractError("teacher needs at least one output target")
        if np.any(t < 0) or np.any(t >= self.timesteps):
            raise ContractError("teacher spike times must lie in [0, T)")

    @classmethod
    def for_label(cls, label: int, n_out: int, timesteps: int,
                  early: int = 5, late: int | None = None) -> "TeacherSignal":
        """True-class neuron should fire early, the rest late (T - 5)."""
        if late is None:
            late = timesteps - 5
        if not 0 <= early < timesteps or not 0 <= late < timesteps:
            raise ContractError("teacher targets fall outside the window")
        times = np.full(n_out, late, dtype=np.int64)
        times[int(label)] = early
        return cls(target_times=times, timesteps=timesteps)


@dataclass
class TrainedModel:
    weights: WeightSet
    topology: Topology
    neuron_params: LifParams | LbParams
    rule: RuleConfig
    seed: int
    encoding: EncodingConfig
    readout_mode: str
    meta: dict = field(default_factory=dict)


@dataclass
class DataSplits:
    """Feature-space splits after the tabular pipeline (unit interval)."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray


# ---------------------------------------------------------------------------
# encoding and evaluation over batches


def encode_batch(feats: np.ndarray, cfg: EncodingConfig, rng: RngStream) -> np.ndarray:
    """Encode each feature row into a spike train; (N, k, T) uint8."""
    feats = np.asarray(feats, dtype=np.float64)
    if feats.ndim != 2:
        raise ContractError("encode_batch needs a 2-D feature matrix")
    n, k = feats.shape
    if cfg.scheme == SCHEME_RATE:
        draws = rng.uniforms(n * k * cfg.timesteps).reshape(n, k, cfg.timesteps)
        return (draws < feats[:, :, None]).astype(np.uint8)
    out = np.empty((n, k, cfg.timesteps), dtype=np.uint8)
    for i in range(n):
        out[i] = latency_encode(feats[i], cfg).to_train().bits
    return out


def latency_times(feats: np.ndarray, cfg: EncodingConfig) -> np.ndarray:
    """First-spike time per (sample, neuron) under the latency code."""
    feats = np.asarray(feats, dtype=np.float64)
    out = np.empty(feats.shape, dtype=np.int64)
    for i in range(feats.shape[0]):
        out[i] = latency_encode(feats[i], cfg).first_spike_times
    return out


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int
    predictions: np.ndarray

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def batch_readout(s2: np.ndarray, mode: str) -> np.ndarray:
    """Predicted class per sample from output spike tensors (B, n_out, T)."""
    counts = s2.sum(axis=2).astype(np.float64)
    preds = np.empty(s2.shape[0], dtype=np.int64)
    for b in range(s2.shape[0]):
        row = counts[b]
        best = np.flatnonzero(row == row.max())
        if best.size == 1 or mode == "spike-count" or s2.shape[2] < 2:
            preds[b] = best[0]
            continue
        lz = np.array([normalized_lzc(s2[b, c]) for c in best])
        preds[b] = best[int(np.argmax(lz))]
    return preds


def evaluate(
    weights: WeightSet,
    topo: Topology,
    params: LifParams | LbParams,
    spikes: np.ndarray,
    labels: np.ndarray,
    mode: str,
    rng: RngStream | None,
) -> EvalResult:
    """Forward a batch and score count-readout predictions (1 = positive)."""
    _, s2 = forward_batch(spikes, weights, topo, params, rng)
    preds = batch_readout(s2, mode)
    labels = np.asarray(labels, dtype=np.int64)
    tp = int(np.sum((preds == 1) & (labels == 1)))
    fp = int(np.sum((preds == 1) & (labels == 0)))
    tn = int(np.sum((preds == 0) & (labels == 0)))
    fn = int(np.sum((preds == 0) & (labels == 1)))
    acc = (tp + tn) / max(labels.size, 1)
    return EvalResult(acc, tp, fp, tn, fn, preds)


# ---------------------------------------------------------------------------
# context handed to rule trainers


@dataclass
class TrainContext:
    x_train: np.ndarray  # features in [0, 1]
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray
    spk_train: np.ndarray  # encoded (N, n, T)
    spk_val: np.ndarray
    topo: Topology
    params: LifParams | LbParams
    encoding: EncodingConfig
    readout_mode: str
    lam: float
    rng: RngStream  # rule-private stream
    eval_rng: RngStream  # base for per-epoch validation forwards
    lat_train: np.ndarray | None = None  # first-spike times (latency scheme)
    lat_val: np.ndarray | None = None

    def val_score(self, weights: WeightSet, tick: int) -> float:
        if self.y_val.size == 0:
            return 0.0
        rng = self.eval_rng.substream(tick) if self.topo.neuron_model == "lb" else None
        return evaluate(
            weights, self.topo, self.params, self.spk_val, self.y_val,
            self.readout_mode, rng,
        ).accuracy

    def minibatches(self, epoch: int, batch_size: int):
        """Seeded epoch shuffle, then contiguous slices."""
        n = self.y_train.size
        order = self.rng.substream(1000 + epoch).permutation(n)
        for lo in range(0, n, batch_size):
            yield order[lo : lo + batch_size]


@dataclass
class FitMeta:
    epochs_run: int = 0
    best_epoch: int = -1
    best_score: float = -1.0
    early_stopped: bool = False
    history: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "best_score": round(self.best_score, 6),
            "early_stopped": self.early_stopped,
        }


def fit_loop(
    weights: WeightSet,
    ctx: TrainContext,
    cfg: RuleConfig,
    epoch_fn: Callable[[int, WeightSet], None],
) -> tuple[WeightSet, FitMeta]:
    """Run epochs with validation-plateau early stopping.

    epoch_fn mutates `weights` in place for one pass. The best-scoring
    snapshot is restored at the end; with an empty validation split the
    final weights stand.
    """
    meta = FitMeta()
    have_val = ctx.y_val.size > 0
    best: WeightSet | None = None
    for epoch in range(cfg.epochs):
        epoch_fn(epoch, weights)
        meta.epochs_run = epoch + 1
        if not have_val:
            continue
        score = ctx.val_score(weights, epoch)
        meta.history.append(round(score, 6))
        if score > meta.best_score + 1e-12:
            meta.best_score = score
            meta.best_epoch = epoch
            best = weights.copy()
        elif epoch - meta.best_epoch >= cfg.patience:
            meta.early_stopped = True
            break
    if best is not None:
        weights = best
    if not np.all(np.isfinite(weights.w1)) or not np.all(np.isfinite(weights.w2)):
        raise TrainingError("training produced non-finite weights")
    return weights, meta


# ---------------------------------------------------------------------------
# frozen readout for unsupervised rules


def class_prototypes(hidden_counts: np.ndarray, labels: np.ndarray, n_out: int) -> np.ndarray:
    """Per-class mean hidden spike-count vector; zeros for absent classes."""
    protos = np.zeros((n_out, hidden_counts.shape[1]), dtype=np.float64)
    for c in range(n_out):
        mask = labels == c
        if np.any(mask):
            protos[c] = hidden_counts[mask].mean(axis=0)
    return protos


def drive_gain(params: LifParams | LbParams) -> float:
    """Expected synaptic gain: LB gates halve the drive on average."""
    return params.s / 2.0 if isinstance(params, LbParams) else 1.0


def firing_threshold(params: LifParams | LbParams) -> float:
    return params.theta_lb if isinstance(params, LbParams) else params.theta


def prototype_readout(
    protos: np.ndarray, timesteps: int, gamma: float, gain: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """Output weights implementing nearest-prototype on hidden counts.

    Expected drive accumulated by output neuron c over the window is
    gain * gamma * (p_c . h - |p_c|^2 / 2), which orders classes exactly
    like negative squared distance to the prototype, so the count argmax
    tracks the nearest prototype. The bias carries the gain factor
    because biases enter the drive unscaled.
    """
    if timesteps < 1:
        raise ContractError("timesteps must be >= 1")
    w2 = gamma * protos
    b2 = -gain * gamma * np.sum(protos**2, axis=1) / (2.0 * timesteps)
    return w2, b2


def spread_orthonormal(n_rows: int, n_in: int) -> np.ndarray:
    """First n_rows rows of the orthonormal DCT-II basis on n_in inputs.

    Every row mixes all inputs with near-equal magnitudes, so a signal
    concentrated on a few input coordinates spreads evenly across the
    hidden population instead of loading one or two units. Spread
    loadings keep the downstream count readout well conditioned under
    per-synapse release noise (many small terms average out; a couple
    of dominant ones do not).
    """
    if not 1 <= n_rows <= n_in:
        raise ContractError("need 1 <= n_rows <= n_in")
    j = np.arange(n_in)
    k = np.arange(n_rows)[:, None]
    basis = np.cos(np.pi * (2 * j[None, :] + 1) * k / (2.0 * n_in))
    basis *= np.sqrt(2.0 / n_in)
    basis[0] = np.sqrt(1.0 / n_in)
    return basis


def homeostatic_biases(
    w1: np.ndarray,
    feats: np.ndarray,
    gain: float,
    theta: float,
    pct: float = 50.0,
) -> np.ndarray:
    """Per-row bias placing the pct-percentile expected drive at threshold.

    Rate-targeting intrinsic plasticity: each hidden unit's operating
    point is shifted so it responds in a graded way around its own
    typical input instead of sitting silent or saturated.
    """
    drives = gain * (np.asarray(feats, dtype=np.float64) @ w1.T)
    return theta - np.percentile(drives, pct, axis=0)


def fit_discriminant_head(
    weights: WeightSet, ctx: TrainContext, tick: int, kappa: float = 3.0
) -> None:
    """Freeze a centred class-mean readout onto w2/b2 in place.

    Equivalent to the nearest-prototype decision, reparameterized: rows
    are centred prototypes (p_c - mean of prototypes), so the shared
    drive component cancels and the two output neurons swing in
    opposite directions around threshold instead of saturating or
    falling silent together. kappa scales the swing against the firing
    threshold.

    Output biases place each neuron's baseline at its own median drive.
    The deterministic model gets the analytic median; the stochastic
    model's per-step drive distribution is skewed by release gating, so
    its biases come from the empirical median of simulated drive
    samples (one calibration pass over the training spikes).
    """
    s1 = hidden_spikes(weights, ctx, ctx.spk_train, tick)
    h = s1.sum(axis=2).astype(np.float64)
    protos = class_prototypes(h, ctx.y_train, ctx.topo.n_out)
    w2d = protos - protos.mean(axis=0, keepdims=True)
    gain = drive_gain(ctx.params)
    theta = firing_threshold(ctx.params)
    t_len = ctx.encoding.timesteps
    score = h @ w2d.T
    spread = float(np.percentile(np.abs(score - np.median(score, axis=0)), 90))
    beta = 1.0 if spread <= 1e-12 else kappa * theta * t_len / (gain * spread)
    weights.w2 = beta * w2d
    if ctx.topo.neuron_model == "lb":
        n_out, width = weights.w2.shape
        draws = 2 * h.shape[0] * t_len * n_out * width
        key, start = ctx.rng.substream(3000 + tick).reserve(draws)
        _, sigma = kernels.lb_forward(
            weights.w2, np.zeros(n_out), s1, ctx.params.s, theta, key, start,
        )
        weights.b2 = theta - np.median(sigma, axis=(0, 2))
    else:
        weights.b2 = theta - gain * beta * np.median(score, axis=0) / t_len


def hidden_spikes(
    weights: WeightSet,
    ctx: TrainContext,
    spikes: np.ndarray,
    tick: int,
) -> np.ndarray:
    """Hidden spike trains for a batch under the run's neuron model."""
    rng = ctx.rng.substream(2000 + tick) if ctx.topo.neuron_model == "lb" else None
    s1, _ = forward_batch(spikes, weights, ctx.topo, ctx.params, rng)
    return s1


def hidden_counts(
    weights: WeightSet,
    ctx: TrainContext,
    spikes: np.ndarray,
    tick: int,
) -> np.ndarray:
    """Hidden spike counts for a batch under the run's neuron model."""
    return hidden_spikes(weights, ctx, spikes, tick).sum(axis=2).astype(np.float64)
