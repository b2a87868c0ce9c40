"""Gradient descent on first-spike times through a continuous-time SRM.

Training runs on a surrogate network in which every neuron emits at
most one spike: membrane potential is a weighted sum of PSP kernels
anchored at presynaptic spike times, and the spike time is the first
threshold crossing, located by bracketing on a coarse grid and then
bisection. Because the crossing is solved exactly, the classic
linearization dt*/dw = -psp(t* - t_pre) / u'(t*) is the exact implicit
derivative of the timing loss wherever the crossing moves smoothly.

Silent neurons are handled by boosting their incoming weights and
retrying, a bounded number of times; persistent silence is a training
error. The trained weights are then evaluated on the actual spiking
model, so timing structure only has to survive approximately.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, TrainingError
from ..network import WeightSet
from .base import RuleConfig, TeacherSignal, TrainContext, firing_threshold, fit_loop
from .tempotron import psp_peak

COARSE_DT = 0.5
BISECT_ITERS = 50
UDOT_FLOOR = 0.05
BOOST = 1.2
MAX_BOOSTS = 25


def _psp(t: np.ndarray, cfg: RuleConfig) -> np.ndarray:
    _, v0 = psp_peak(cfg)
    t = np.asarray(t, dtype=np.float64)
    tc = np.maximum(t, 0.0)
    val = v0 * (np.exp(-tc / cfg.tau_mem) - np.exp(-tc / cfg.tau_s))
    return np.where(t > 0.0, val, 0.0)


def _psp_dot(t: np.ndarray, cfg: RuleConfig) -> np.ndarray:
    _, v0 = psp_peak(cfg)
    t = np.asarray(t, dtype=np.float64)
    tc = np.maximum(t, 0.0)
    val = v0 * (
        -np.exp(-tc / cfg.tau_mem) / cfg.tau_mem + np.exp(-tc / cfg.tau_s) / cfg.tau_s
    )
    return np.where(t > 0.0, val, 0.0)


def _first_crossings(
    w: np.ndarray,
    b: np.ndarray,
    src_times: np.ndarray,
    window: float,
    theta: float,
    cfg: RuleConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """First time u_i(t) reaches theta in [0, window], per neuron.

    Returns (t_star, udot); nan where the neuron never crosses.
    src_times at or beyond the window mean "silent input" and are
    masked out of the potential.
    """
    src_times = np.asarray(src_times, dtype=np.float64)
    active = src_times < window
    w_eff = w * active[None, :]

    def u_all(t: float) -> np.ndarray:
        return w_eff @ _psp(t - src_times, cfg) + b

    grid = np.arange(0.0, window + COARSE_DT, COARSE_DT)
    e = _psp(grid[None, :] - src_times[:, None], cfg)
    u = w_eff @ e + b[:, None]  # (n, G)
    n = w.shape[0]
    t_star = np.full(n, np.nan)
    udot = np.full(n, np.nan)
    for i in range(n):
        hits = np.flatnonzero(u[i] >= theta)
        if hits.size == 0:
            continue
        g = int(hits[0])
        if g == 0:
            t_star[i] = 0.0
        else:
            lo, hi = grid[g - 1], grid[g]
            for _ in range(BISECT_ITERS):
                mid = 0.5 * (lo + hi)
                if u_all(mid)[i] >= theta:
                    hi = mid
                else:
                    lo = mid
            t_star[i] = hi
        slope = float(w_eff[i] @ _psp_dot(t_star[i] - src_times, cfg))
        udot[i] = max(slope, UDOT_FLOOR)
    return t_star, udot


def spikeprop_update(
    input_times: np.ndarray,
    teacher: TeacherSignal,
    weights: WeightSet,
    cfg: RuleConfig,
    theta: float,
    window: float,
) -> tuple[WeightSet, float]:
    """One-sample descent step on the timing loss; returns (weights, E).

    input_times holds one first-spike time per input neuron (entries at
    the window or beyond mean the neuron stays silent). Silent hidden or
    output neurons get their incoming rows boosted until they fire or
    the retry budget runs out.
    """
    input_times = np.asarray(input_times, dtype=np.float64)
    out = weights.copy()

    for _ in range(MAX_BOOSTS):
        t_hid, udot_h = _first_crossings(out.w1, out.b1, input_times, window, theta, cfg)
        silent = np.isnan(t_hid)
        if not np.any(silent):
            break
        out.w1[silent] *= BOOST
    else:
        raise TrainingError("hidden neuron stayed silent after weight boosting")

    for _ in range(MAX_BOOSTS):
        t_out, udot_o = _first_crossings(out.w2, out.b2, t_hid, window, theta, cfg)
        silent = np.isnan(t_out)
        if not np.any(silent):
            break
        out.w2[silent] *= BOOST
    else:
        raise TrainingError("output neuron stayed silent after weight boosting")

    err = t_out - teacher.target_times.astype(np.float64)
    loss = 0.5 * float(np.sum(err**2))

    # output layer: dt_c/dw2[c,i] = -psp(t_c - t_i)/udot_c, dt_c/db2 = -1/udot_c
    lag_oh = t_out[:, None] - t_hid[None, :]
    e_oh = _psp(lag_oh, cfg)
    delta_o = err / udot_o
    gw2 = -delta_o[:, None] * e_oh
    gb2 = -delta_o

    # hidden layer chains through dt_c/dt_i = w2[c,i] psp_dot(t_c - t_i)/udot_c
    dtc_dti = out.w2 * _psp_dot(lag_oh, cfg) / udot_o[:, None]
    dE_dti = err @ dtc_dti  # (n,)
    lag_hi = t_hid[:, None] - input_times[None, :]
    e_hi = _psp(lag_hi, cfg)
    delta_h = dE_dti / udot_h
    gw1 = -delta_h[:, None] * e_hi
    gb1 = -delta_h

    out.w1 -= cfg.eta * gw1
    out.b1 -= cfg.eta * gb1
    out.w2 -= cfg.eta * gw2
    out.b2 -= cfg.eta * gb2
    if not (np.all(np.isfinite(out.w1)) and np.all(np.isfinite(out.w2))):
        raise TrainingError("non-finite spikeprop update")
    return out, loss


def spike_time_loss(
    input_times: np.ndarray,
    teacher: TeacherSignal,
    weights: WeightSet,
    cfg: RuleConfig,
    theta: float,
    window: float,
) -> float:
    """Timing loss without updating; nan if any neuron stays silent."""
    t_hid, _ = _first_crossings(
        weights.w1, weights.b1, np.asarray(input_times, dtype=np.float64),
        window, theta, cfg,
    )
    if np.any(np.isnan(t_hid)):
        return float("nan")
    t_out, _ = _first_crossings(weights.w2, weights.b2, t_hid, window, theta, cfg)
    if np.any(np.isnan(t_out)):
        return float("nan")
    err = t_out - teacher.target_times.astype(np.float64)
    return 0.5 * float(np.sum(err**2))


def fit_spikeprop(ctx: TrainContext, cfg: RuleConfig, weights: WeightSet):
    if ctx.lat_train is None:
        raise ContractError("spikeprop needs latency-coded inputs")
    t_len = ctx.encoding.timesteps
    theta = firing_threshold(ctx.params)
    window = 2.0 * t_len
    teachers = [
        TeacherSignal.for_label(int(y), ctx.topo.n_out, t_len) for y in ctx.y_train
    ]

    def epoch_fn(epoch: int, w: WeightSet) -> None:
        order = ctx.rng.substream(1000 + epoch).permutation(ctx.y_train.size)
        for b in order:
            stepped, _ = spikeprop_update(
                ctx.lat_train[b], teachers[b], w, cfg, theta, window
            )
            w.w1, w.b1, w.w2, w.b2 = stepped.w1, stepped.b1, stepped.w2, stepped.b2

    return fit_loop(weights, ctx, cfg, epoch_fn)
