"""Pure-numpy implementations of the hot simulation kernels.

Signature-compatible with the compiled extension in ``_kernels.pyx``;
the package selects between them at import time (see ``__init__``).
The LIF kernel is elementwise and therefore bit-identical to the
compiled one. The LB kernel sums synapse contributions in a different
order than the compiled scalar loop, so its sigmas agree to float
round-off rather than exactly.
"""

from __future__ import annotations

import numpy as np

from ..rng import uniforms_at

BACKEND_NAME = "python"

# Cap on uniforms materialized per LB chunk; keeps peak memory modest.
_LB_CHUNK_DRAWS = 1 << 22


def lz76_count(bits: np.ndarray) -> int:
    """Number of phrases in the exhaustive-history sequential parse.

    Kaspar-Schuster formulation, O(n^2) worst case. The final phrase
    counts even when the sequence ends before the phrase completes.
    """
    s = bytes(bytearray(np.ascontiguousarray(bits, dtype=np.uint8)))
    n = len(s)
    if n == 0:
        return 0
    if n == 1:
        return 1
    c = 1
    l = 1
    i = 0
    k = 1
    k_max = 1
    while True:
        if s[i + k - 1] == s[l + k - 1]:
            k += 1
            if l + k > n:
                c += 1
                break
        else:
            if k > k_max:
                k_max = k
            i += 1
            if i == l:
                c += 1
                l += k_max
                if l + 1 > n:
                    break
                i = 0
                k = 1
                k_max = 1
            else:
                k = 1
    return c


def lif_forward(
    z: np.ndarray,
    theta: float,
    delta: float,
    u_reset: float,
    u_init: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate a layer of LIF neurons over time.

    z: input currents, shape (batch, neurons, timesteps).
    Returns (spikes uint8, pre-reset potentials float64), same shape.
    Update per step: u <- (1-delta)*u + z; spike and reset at u >= theta.
    """
    z = np.ascontiguousarray(z, dtype=np.float64)
    batch, n, steps = z.shape
    spikes = np.zeros((batch, n, steps), dtype=np.uint8)
    u_pre = np.zeros((batch, n, steps), dtype=np.float64)
    u = np.full((batch, n), u_init, dtype=np.float64)
    keep = 1.0 - delta
    for t in range(steps):
        u = keep * u + z[:, :, t]
        u_pre[:, :, t] = u
        fired = u >= theta
        spikes[:, :, t] = fired
        u = np.where(fired, u_reset, u)
    return spikes, u_pre


def lb_forward(
    w: np.ndarray,
    bias: np.ndarray,
    x: np.ndarray,
    s: float,
    theta_lb: float,
    key: int,
    counter0: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate a layer of stochastic-synapse threshold units.

    w: (neurons, inputs) weights; bias: (neurons,); x: (batch, inputs,
    timesteps) binary input spikes. Each synapse draws a fresh release
    gate (Bernoulli s) and amplitude (uniform [0,1)) every timestep:
    sigma_i(t) = sum_j w_ij * phi_ij(t) * Q_ij(t) * x_j(t) + bias_i,
    spike iff sigma >= theta_lb.

    Draw order is fixed as (sample, timestep, neuron, synapse) with the
    gate draw before the amplitude draw, so the compiled kernel and the
    scalar reference consume identical streams.
    """
    w = np.ascontiguousarray(w, dtype=np.float64)
    bias = np.ascontiguousarray(bias, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.uint8)
    batch, m, steps = x.shape
    n = w.shape[0]
    spikes = np.zeros((batch, n, steps), dtype=np.uint8)
    sigma = np.zeros((batch, n, steps), dtype=np.float64)

    per_sample = 2 * steps * n * m
    chunk = max(1, _LB_CHUNK_DRAWS // max(per_sample, 1))
    for b0 in range(0, batch, chunk):
        b1 = min(b0 + chunk, batch)
        nb = b1 - b0
        u = uniforms_at(key, counter0 + b0 * per_sample, nb * per_sample)
        u = u.reshape(nb, steps, n, m, 2)
        gate = u[..., 0] < s
        amp = u[..., 1]
        xs = x[b0:b1].transpose(0, 2, 1).astype(np.float64)  # (nb, steps, m)
        contrib = np.einsum("btnm,nm,btm->btn", gate * amp, w, xs, optimize=True)
        sig = contrib + bias[None, None, :]
        sigma[b0:b1] = sig.transpose(0, 2, 1)
        spikes[b0:b1] = (sig >= theta_lb).transpose(0, 2, 1)
    return spikes, sigma
