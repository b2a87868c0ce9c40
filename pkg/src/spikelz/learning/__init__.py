"""Nine training procedures behind one dispatcher.

train() owns the per-run randomness budget: the seed fans out into
fixed-purpose substreams (validation carve, encoding, weight init, the
rule's own draws, evaluation forwards), so two runs with the same
configuration and seed are identical draw for draw.
"""

from __future__ import annotations

import numpy as np

from ..encoding import SCHEME_LATENCY, SCHEME_RATE, EncodingConfig
from ..errors import ContractError, DataError
from ..data import stratified_split
from ..network import READOUT_TIEBREAK, Topology, WeightSet, init_weights
from ..neuron import LbParams, LifParams, StreamTag
from ..rng import RngStream
from .base import (
    DataSplits,
    EvalResult,
    RULE_NAMES,
    RuleConfig,
    TeacherSignal,
    TrainContext,
    TrainedModel,
    batch_readout,
    encode_batch,
    evaluate,
    latency_times,
)
from .ann2snn import ann_to_snn_convert, ann_train, fit_ann2snn
from .backprop import backprop_update, fit_backprop, loss_and_grads
from .bal import bal_step, fit_bal, plug_in_mi, uncertainty
from .hebbian import fit_hebbian, fit_hebbian_gd, hebbian_gd_update, hebbian_update
from .reward import fit_reward, reward_stdp_update
from .spikeprop import fit_spikeprop, spike_time_loss, spikeprop_update
from .stdp import fit_stdp, stdp_pair_delta, stdp_train_delta
from .tempotron import fit_tempotron, tempotron_update

FIT_FNS = {
    "hebbian": fit_hebbian,
    "hebbian-gd": fit_hebbian_gd,
    "stdp": fit_stdp,
    "backprop": fit_backprop,
    "spikeprop": fit_spikeprop,
    "tempotron": fit_tempotron,
    "ann2snn": fit_ann2snn,
    "reward-stdp": fit_reward,
    "bal": fit_bal,
}

LATENCY_RULES = ("spikeprop", "tempotron")

# Tuned per-rule overrides applied by default_rule_config. Unsupervised
# rules keep short schedules (their readout is refit every epoch);
# count-code runs on the stochastic model need longer windows because
# release noise only averages out across timesteps.
_RULE_DEFAULTS: dict = {
    "hebbian": dict(eta=5e-2, epochs=6, patience=2),
    "stdp": dict(eta=5e-2, epochs=6, patience=2),
    "backprop": dict(eta=5e-2, epochs=60, patience=10),
    "hebbian-gd": dict(eta=5e-2, eta_h=1e-3, epochs=60, patience=10),
    "spikeprop": dict(eta=5e-3, epochs=30, patience=8),
    "tempotron": dict(eta=1e-2, epochs=40, patience=10),
    "ann2snn": dict(eta=5e-2, epochs=120, patience=15),
    "reward-stdp": dict(eta=1e-2, epochs=40, patience=10),
    "bal": dict(eta=1e-2, epochs=40, patience=10),
}

_RULE_TIMESTEPS: dict = {
    ("hebbian", "lb"): 400,
    ("hebbian", "lif"): 100,
    ("stdp", "lb"): 400,
    ("stdp", "lif"): 100,
}


def default_rule_config(rule: str, **overrides) -> RuleConfig:
    """RuleConfig preloaded with the tuned constants for one rule."""
    kwargs = dict(_RULE_DEFAULTS.get(rule, {}))
    kwargs.update(overrides)
    return RuleConfig(rule=rule, **kwargs)


def default_timesteps(rule: str, neuron_model: str, timesteps: int = 30) -> int:
    return _RULE_TIMESTEPS.get((rule, neuron_model), timesteps)


def default_encoding(rule: str, timesteps: int = 30, neuron_model: str | None = None) -> EncodingConfig:
    scheme = SCHEME_LATENCY if rule in LATENCY_RULES else SCHEME_RATE
    if neuron_model is not None:
        timesteps = default_timesteps(rule, neuron_model, timesteps)
    return EncodingConfig(scheme=scheme, timesteps=timesteps)


def train(
    splits: DataSplits,
    topo: Topology,
    params: LifParams | LbParams,
    rule_cfg: RuleConfig,
    seed: int,
    encoding: EncodingConfig | None = None,
    readout_mode: str = READOUT_TIEBREAK,
    lam: float = 0.0,
    init_scheme: str = "uniform",
) -> TrainedModel:
    """Run the configured rule on the training split; reproducible."""
    if rule_cfg.rule not in FIT_FNS:
        raise ContractError(f"unknown rule {rule_cfg.rule!r}")
    if lam < 0:
        raise ContractError("lam must be >= 0")
    if encoding is None:
        encoding = default_encoding(rule_cfg.rule)
    x = np.asarray(splits.x_train, dtype=np.float64)
    y = np.asarray(splits.y_train, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise ContractError("training features and labels are misaligned")
    if x.shape[1] != topo.width:
        raise ContractError("feature width does not match topology width")

    rng = RngStream(seed)
    tr_idx = np.arange(y.size)
    val_idx = np.array([], dtype=np.int64)
    if rule_cfg.val_frac > 0.0:
        try:
            tr_idx, val_idx = stratified_split(
                y, rng.substream(StreamTag.SPLIT), 1.0 - rule_cfg.val_frac
            )
        except DataError:
            pass  # split too small for a held-out slice; train on all of it

    enc_rng = rng.substream(StreamTag.ENCODE_TRAIN)
    spk_tr = encode_batch(x[tr_idx], encoding, enc_rng)
    spk_val = (
        encode_batch(x[val_idx], encoding, enc_rng)
        if val_idx.size
        else np.zeros((0, topo.width, encoding.timesteps), dtype=np.uint8)
    )
    lat_tr = lat_val = None
    if encoding.scheme == SCHEME_LATENCY:
        lat_tr = latency_times(x[tr_idx], encoding)
        lat_val = latency_times(x[val_idx], encoding) if val_idx.size else None

    w0 = init_weights(topo, rng.substream(StreamTag.WEIGHT_INIT), scheme=init_scheme)
    ctx = TrainContext(
        x_train=x[tr_idx],
        y_train=y[tr_idx],
        x_val=x[val_idx],
        y_val=y[val_idx],
        spk_train=spk_tr,
        spk_val=spk_val,
        topo=topo,
        params=params,
        encoding=encoding,
        readout_mode=readout_mode,
        lam=lam,
        rng=rng.substream(StreamTag.TRAIN_RULE),
        eval_rng=rng.substream(StreamTag.FORWARD),
        lat_train=lat_tr,
        lat_val=lat_val,
    )
    weights, meta = FIT_FNS[rule_cfg.rule](ctx, rule_cfg, w0)
    return TrainedModel(
        weights=weights,
        topology=topo,
        neuron_params=params,
        rule=rule_cfg,
        seed=seed,
        encoding=encoding,
        readout_mode=readout_mode,
        meta=meta.as_dict(),
    )


__all__ = [
    "DataSplits",
    "EvalResult",
    "FIT_FNS",
    "RULE_NAMES",
    "RuleConfig",
    "TeacherSignal",
    "TrainContext",
    "TrainedModel",
    "ann_to_snn_convert",
    "ann_train",
    "backprop_update",
    "bal_step",
    "batch_readout",
    "default_encoding",
    "default_rule_config",
    "default_timesteps",
    "encode_batch",
    "evaluate",
    "hebbian_gd_update",
    "hebbian_update",
    "latency_times",
    "loss_and_grads",
    "plug_in_mi",
    "reward_stdp_update",
    "spike_time_loss",
    "spikeprop_update",
    "stdp_pair_delta",
    "stdp_train_delta",
    "tempotron_update",
    "train",
    "uncertainty",
]
