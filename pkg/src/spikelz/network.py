"""Three-layer dense spiking network: forward simulation and readout.

The network is input -> hidden -> output with full connectivity. Layer
input currents are z = W * (previous layer spikes) + b at every
timestep. LIF layers carry membrane state across steps; LB layers are
memoryless but draw fresh synapse gates every step. Class scores come
from output spike counts, optionally disambiguated by the normalized
Lempel-Ziv complexity of each output row.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .complexity import normalized_lzc
from .errors import ContractError
from .neuron import LbParams, LifParams, SpikeTrain
from .rng import RngStream

MODEL_LIF = "lif"
MODEL_LB = "lb"
MODELS = (MODEL_LIF, MODEL_LB)

ALLOWED_WIDTHS = (2, 8, 16, 30)

READOUT_COUNT = "spike-count"
READOUT_LZC_FEATURE = "lzc-feature"
READOUT_TIEBREAK = "count-with-lzc-tiebreak"
READOUT_MODES = (READOUT_COUNT, READOUT_LZC_FEATURE, READOUT_TIEBREAK)


@dataclass(frozen=True)
class Topology:
    """Layer widths [n, n, n_out] and the neuron model used throughout."""

    width: int
    neuron_model: str
    n_out: int = 2

    def __post_init__(self):
        if self.width not in ALLOWED_WIDTHS:
            raise ContractError(f"layer width must be one of {ALLOWED_WIDTHS}")
        if self.neuron_model not in MODELS:
            raise ContractError(f"neuron model must be one of {MODELS}")
        if self.n_out < 1:
            raise ContractError("output width must be >= 1")

    @property
    def layer_widths(self) -> tuple[int, int, int]:
        return (self.width, self.width, self.n_out)


@dataclass
class WeightSet:
    """Dense connection weights and per-layer biases."""

    w1: np.ndarray  # hidden x input
    b1: np.ndarray
    w2: np.ndarray  # output x hidden
    b2: np.ndarray

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        for name, a in (("w1", self.w1), ("b1", self.b1), ("w2", self.w2), ("b2", self.b2)):
            if not np.all(np.isfinite(a)):
                raise ContractError(f"{name} contains non-finite entries")
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise ContractError("weight matrices must be 2-D")
        if self.b1.shape != (self.w1.shape[0],) or self.b2.shape != (self.w2.shape[0],):
            raise ContractError("bias shapes do not match weight rows")
        if self.w2.shape[1] != self.w1.shape[0]:
            raise ContractError("layer widths are inconsistent between w1 and w2")

    def matches(self, topo: Topology) -> bool:
        n, _, n_out = topo.layer_widths
        return self.w1.shape == (n, n) and self.w2.shape == (n_out, n)

    def copy(self) -> "WeightSet":
        return WeightSet(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


def init_weights(topo: Topology, rng: RngStream, scheme: str = "uniform") -> WeightSet:
    """Seeded init: uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], zero biases."""
    n, _, n_out = topo.layer_widths
    if scheme == "zeros":
        return WeightSet(
            np.zeros((n, n)), np.zeros(n), np.zeros((n_out, n)), np.zeros(n_out)
        )
    if scheme != "uniform":
        raise ContractError(f"unknown init scheme {scheme!r}")
    lim1 = 1.0 / np.sqrt(n)
    w1 = (rng.uniforms(n * n).reshape(n, n) * 2.0 - 1.0) * lim1
    w2 = (rng.uniforms(n_out * n).reshape(n_out, n) * 2.0 - 1.0) * lim1
    return WeightSet(w1, np.zeros(n), w2, np.zeros(n_out))


def _layer_currents(w: np.ndarray, b: np.ndarray, spikes: np.ndarray) -> np.ndarray:
    """z[b,i,t] = sum_j w[i,j] * spikes[b,j,t] + b[i]."""
    return np.einsum("ij,bjt->bit", w, spikes.astype(np.float64)) + b[None, :, None]


def forward_batch(
    x: np.ndarray,
    weights: WeightSet,
    topo: Topology,
    params: LifParams | LbParams,
    rng: RngStream | None,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate a batch of input trains; returns (hidden, output) spike arrays.

    x has shape (batch, n, T) with binary entries. LB topologies consume
    draws from `rng` in a fixed order (layer 1 fully, then layer 2).
    """
    x = np.ascontiguousarray(x, dtype=np.uint8)
    if x.ndim != 3 or x.shape[1] != topo.width:
        raise ContractError(
            f"input batch shape {x.shape} does not match topology width {topo.width}"
        )
    if not weights.matches(topo):
        raise ContractError("weight shapes do not match topology")
    batch, _, steps = x.shape

    if topo.neuron_model == MODEL_LIF:
        if not isinstance(params, LifParams):
            raise ContractError("LIF topology requires LifParams")
        z1 = _layer_currents(weights.w1, weights.b1, x)
        s1, _ = kernels.lif_forward(z1, params.theta, params.delta, params.u_reset, params.u_init)
        z2 = _layer_currents(weights.w2, weights.b2, s1)
        s2, _ = kernels.lif_forward(z2, params.theta, params.delta, params.u_reset, params.u_init)
        return s1, s2

    if not isinstance(params, LbParams):
        raise ContractError("LB topology requires LbParams")
    if rng is None:
        raise ContractError("LB forward needs an RngStream")
    n, n_out = topo.width, topo.n_out
    key1, c1 = rng.reserve(2 * batch * steps * n * topo.width)
    s1, _ = kernels.lb_forward(weights.w1, weights.b1, x, params.s, params.theta_lb, key1, c1)
    key2, c2 = rng.reserve(2 * batch * steps * n_out * n)
    s2, _ = kernels.lb_forward(weights.w2, weights.b2, s1, params.s, params.theta_lb, key2, c2)
    return s1, s2


def forward(
    input_train: SpikeTrain,
    weights: WeightSet,
    topo: Topology,
    params: LifParams | LbParams,
    rng: RngStream | None = None,
) -> tuple[SpikeTrain, SpikeTrain]:
    """Single-sample forward pass; see :func:`forward_batch`."""
    if input_train.neurons != topo.width:
        raise ContractError("input train height does not match topology width")
    s1, s2 = forward_batch(input_train.bits[None, :, :], weights, topo, params, rng)
    return SpikeTrain(s1[0]), SpikeTrain(s2[0])


def readout(output: SpikeTrain, mode: str = READOUT_TIEBREAK) -> tuple[np.ndarray, np.ndarray]:
    """Class scores (spike counts) and per-row normalized LZ complexity.

    Rows shorter than 2 steps score 0 complexity. `mode` selects how
    downstream consumers break ties / build features; the raw vectors
    returned here are the same for all modes.
    """
    if mode not in READOUT_MODES:
        raise ContractError(f"unknown readout mode {mode!r}")
    scores = output.counts().astype(np.float64)
    if output.timesteps >= 2:
        lzc = np.array([normalized_lzc(row) for row in output.bits], dtype=np.float64)
    else:
        lzc = np.zeros(output.neurons, dtype=np.float64)
    return scores, lzc


def predict(scores: np.ndarray, lzc: np.ndarray, mode: str = READOUT_TIEBREAK) -> int:
    """argmax of scores; ties break by higher LZC (unless in pure
    spike-count mode), then by lower class index."""
    if mode not in READOUT_MODES:
        raise ContractError(f"unknown readout mode {mode!r}")
    scores = np.asarray(scores, dtype=np.float64)
    best = np.flatnonzero(scores == scores.max())
    if best.size == 1 or mode == READOUT_COUNT:
        return int(best[0])
    lzc = np.asarray(lzc, dtype=np.float64)[best]
    return int(best[np.argmax(lzc)])


def readout_features(output: SpikeTrain, mode: str = READOUT_TIEBREAK) -> np.ndarray:
    """Feature vector for score-driven rules: counts, with the per-row
    complexity appended in lzc-feature mode."""
    scores, lzc = readout(output, mode)
    if mode == READOUT_LZC_FEATURE:
        return np.concatenate([scores, lzc])
    return scores


def reg_loss(weights: WeightSet, lam: float) -> float:
    """Sum-of-squares penalty over connection weights (biases excluded)."""
    if lam < 0:
        raise ContractError("regularization coefficient must be >= 0")
    return float(lam * (np.sum(weights.w1**2) + np.sum(weights.w2**2)))
