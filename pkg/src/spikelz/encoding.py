"""Feature-to-spike-train encoders and train digitization.

Two codes are supported: a Bernoulli rate code (spike probability per
step equals the feature value) and a deterministic latency code
(stronger feature, earlier first spike). ``digitize`` flattens a train
into one binary sequence for complexity analysis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .neuron import SpikeTrain
from .rng import RngStream

SCHEME_RATE = "bernoulli-rate"
SCHEME_LATENCY = "latency"
SCHEMES = (SCHEME_RATE, SCHEME_LATENCY)


@dataclass(frozen=True)
class EncodingConfig:
    scheme: str = SCHEME_RATE
    timesteps: int = 30

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ContractError(f"unknown encoding scheme {self.scheme!r}")
        if self.timesteps < 1:
            raise ContractError("timesteps must be >= 1")


@dataclass
class LatencyCode:
    """First-spike time per input neuron; a value of T means 'no spike'."""

    first_spike_times: np.ndarray
    timesteps: int

    def __post_init__(self):
        t = np.asarray(self.first_spike_times, dtype=np.int64)
        if np.any(t < 0) or np.any(t > self.timesteps):
            raise ContractError("latency entries must lie in [0, T]")
        self.first_spike_times = t

    def to_train(self) -> SpikeTrain:
        """One-spike-per-neuron train (silent rows for entries equal to T)."""
        n = self.first_spike_times.size
        bits = np.zeros((n, self.timesteps), dtype=np.uint8)
        fires = self.first_spike_times < self.timesteps
        bits[np.arange(n)[fires], self.first_spike_times[fires]] = 1
        return SpikeTrain(bits)


def _check_unit_features(features: np.ndarray) -> np.ndarray:
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 1:
        raise ContractError("features must be a 1-D vector")
    if f.size == 0:
        raise ContractError("features must be non-empty")
    if np.any(f < 0.0) or np.any(f > 1.0) or not np.all(np.isfinite(f)):
        raise ContractError("features must lie in [0, 1]")
    return f


def rate_encode(features: np.ndarray, cfg: EncodingConfig, rng: RngStream) -> SpikeTrain:
    """Bernoulli rate code: entry (i, t) spikes with probability features[i]."""
    f = _check_unit_features(features)
    draws = rng.uniforms(f.size * cfg.timesteps).reshape(f.size, cfg.timesteps)
    return SpikeTrain((draws < f[:, None]).astype(np.uint8))


def latency_encode(features: np.ndarray, cfg: EncodingConfig) -> LatencyCode:
    """Deterministic first-spike code: t_i = round((1 - f_i) * (T - 1)).

    Ties round half-up so the mapping is identical everywhere.
    """
    f = _check_unit_features(features)
    times = np.floor((1.0 - f) * (cfg.timesteps - 1) + 0.5).astype(np.int64)
    return LatencyCode(times, cfg.timesteps)


def digitize(train: SpikeTrain) -> np.ndarray:
    """Row-major flattening of a train into one binary sequence."""
    if train.bits.size == 0:
        raise ContractError("cannot digitize an empty spike train")
    return train.bits.reshape(-1).copy()


def undigitize(seq: np.ndarray, neurons: int, timesteps: int) -> SpikeTrain:
    """Inverse of :func:`digitize` given the original dimensions."""
    seq = np.asarray(seq, dtype=np.uint8)
    if seq.size != neurons * timesteps:
        raise ContractError("sequence length does not match neurons * timesteps")
    return SpikeTrain(seq.reshape(neurons, timesteps))
