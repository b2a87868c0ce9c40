"""Neuron models: discrete-time leaky integrate-and-fire and the
stochastic Levy-Baxter threshold unit.

Both models exchange activity as binary spike trains. The LIF neuron
integrates a weighted input current with leak `delta` and fires/resets
at threshold; the LB neuron passes each active binary input through a
Bernoulli release gate and a uniform amplitude, sums, and thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .rng import RngStream


@dataclass(frozen=True)
class LifParams:
    """Membrane constants for the LIF model.

    theta: firing threshold; delta: per-step decay in (0, 1);
    u_reset: post-spike potential; u_init: potential at t=0.
    """

    theta: float = 0.3
    delta: float = 0.05
    u_reset: float = 0.0
    u_init: float = 0.0

    def __post_init__(self):
        if not self.theta > 0:
            raise ContractError("LIF threshold must be positive")
        if not 0 < self.delta < 1:
            raise ContractError("LIF decay must lie in (0, 1)")
        if not self.u_reset < self.theta:
            raise ContractError("LIF reset potential must sit below threshold")


@dataclass
class LifState:
    """Membrane potentials of one LIF layer (one entry per neuron)."""

    u: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        if self.u.ndim != 1:
            raise ContractError("LIF state must be a 1-D potential vector")
        if not np.all(np.isfinite(self.u)):
            raise ContractError("LIF state contains non-finite potentials")

    @classmethod
    def zeros(cls, n: int, params: LifParams | None = None) -> "LifState":
        u0 = params.u_init if params is not None else 0.0
        return cls(np.full(n, u0, dtype=np.float64))


@dataclass(frozen=True)
class LbParams:
    """Constants for the stochastic Levy-Baxter unit.

    s: neurotransmitter release probability; theta_lb: firing threshold
    on the summed gated excitation.
    """

    s: float = 0.5
    theta_lb: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0:
            raise ContractError("release probability must lie in [0, 1]")
        if not self.theta_lb > 0:
            raise ContractError("LB threshold must be positive")


@dataclass
class SpikeTrain:
    """Binary activity matrix, neurons x timesteps."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ContractError("spike train must be a 2-D matrix")
        if bits.size and not np.isin(bits, (0, 1)).all():
            raise ContractError("spike train entries must be 0 or 1")
        self.bits = bits.astype(np.uint8)

    @property
    def neurons(self) -> int:
        return self.bits.shape[0]

    @property
    def timesteps(self) -> int:
        return self.bits.shape[1]

    def counts(self) -> np.ndarray:
        """Spike count per neuron over the window."""
        return self.bits.sum(axis=1).astype(np.int64)


def heaviside(v: float) -> int:
    """Unit step with the v >= 0 convention."""
    if not np.isfinite(v):
        raise ContractError("heaviside requires a finite argument")
    return 1 if v >= 0.0 else 0


def lif_step(
    state: LifState, input_current: np.ndarray, params: LifParams
) -> tuple[LifState, np.ndarray]:
    """Advance one LIF layer a single timestep.

    u' = (1 - delta) * u + z per neuron; any neuron reaching theta emits
    a spike and resets to u_reset. Returns (new state, spike vector).
    """
    z = np.asarray(input_current, dtype=np.float64)
    if z.shape != state.u.shape:
        raise ContractError(
            f"input current shape {z.shape} does not match state shape {state.u.shape}"
        )
    u = (1.0 - params.delta) * state.u + z
    fired = u >= params.theta
    spikes = fired.astype(np.uint8)
    u = np.where(fired, params.u_reset, u)
    return LifState(u), spikes


def lb_fire(
    x: np.ndarray, w: np.ndarray, params: LbParams, rng: RngStream
) -> int:
    """Single LB neuron decision for one timestep.

    Draws a release gate phi ~ Bernoulli(s) and amplitude Q ~ U[0,1) per
    synapse (gate before amplitude, synapse-major order) and fires iff
    sigma = sum_j w_j * phi_j * Q_j * x_j >= theta_lb.
    """
    x = np.asarray(x)
    w = np.asarray(w, dtype=np.float64)
    if x.ndim != 1 or w.shape != x.shape:
        raise ContractError("input and weight vectors must be 1-D and equally long")
    if x.size and not np.isin(x, (0, 1)).all():
        raise ContractError("LB inputs must be binary")
    u = rng.uniforms(2 * x.size).reshape(-1, 2)
    gate = u[:, 0] < params.s
    sigma = float(np.sum(w * gate * u[:, 1] * x))
    return 1 if sigma >= params.theta_lb else 0


# Tags for deriving per-purpose substreams; keep values stable, they are
# part of run reproducibility.
class StreamTag:
    SPLIT = 1
    SMOTE = 2
    ENCODE_TRAIN = 3
    ENCODE_TEST = 4
    WEIGHT_INIT = 5
    FORWARD = 6
    TRAIN_RULE = 7
