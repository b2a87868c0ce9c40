"""Scratch calibration harness (not shipped): rule x model accuracy."""
import sys
import time

import numpy as np

from spikelz.data import (
    apply_minmax,
    apply_pca,
    fit_minmax,
    fit_pca,
    load_wdbc,
    smote,
    stratified_split,
)
from spikelz.learning import DataSplits, RuleConfig, train, evaluate, encode_batch
from spikelz.network import Topology
from spikelz.neuron import LbParams, LifParams, StreamTag
from spikelz.rng import RngStream
from spikelz.encoding import EncodingConfig
from spikelz.learning import default_encoding


def make_splits(seed, width):
    ds = load_wdbc()
    rng = RngStream(seed)
    tr, te = stratified_split(ds.labels, rng.substream(StreamTag.SPLIT))
    x_tr, x_te = ds.features[tr], ds.features[te]
    y_tr, y_te = ds.labels[tr], ds.labels[te]
    mm = fit_minmax(x_tr)
    x_tr, x_te = apply_minmax(x_tr, mm), apply_minmax(x_te, mm)
    pca = fit_pca(x_tr, width)
    x_tr, x_te = apply_pca(x_tr, pca), apply_pca(x_te, pca)
    mm2 = fit_minmax(x_tr)
    x_tr, x_te = apply_minmax(x_tr, mm2), apply_minmax(x_te, mm2)
    x_tr, y_tr = smote(x_tr, y_tr, rng.substream(StreamTag.SMOTE))
    return DataSplits(x_tr, y_tr, x_te, y_te)


def run_cell(rule, model, seeds, width=30, T=30, **cfg_kw):
    from spikelz.learning import default_rule_config
    accs = []
    t0 = time.time()
    for seed in seeds:
        splits = make_splits(seed, width)
        topo = Topology(width=width, neuron_model=model)
        params = LifParams() if model == "lif" else LbParams()
        cfg = default_rule_config(rule, **cfg_kw)
        enc = default_encoding(rule, T, neuron_model=model)
        tm = train(splits, topo, params, cfg, seed, encoding=enc, lam=1e-4)
        rng = RngStream(seed)
        enc_rng = rng.substream(StreamTag.ENCODE_TEST)
        spk_te = encode_batch(splits.x_test, enc, enc_rng)
        fw = rng.substream(StreamTag.FORWARD) if model == "lb" else None
        res = evaluate(tm.weights, topo, params, spk_te, splits.y_test,
                       tm.readout_mode, fw)
        accs.append(res.accuracy)
    dt = time.time() - t0
    return np.mean(accs), np.std(accs), dt, tm.meta


if __name__ == "__main__":
    rule = sys.argv[1]
    models = sys.argv[2].split(",") if len(sys.argv) > 2 else ["lb", "lif"]
    nseeds = int(sys.argv[3]) if len(sys.argv) > 3 else 3
    kw = {}
    for a in sys.argv[4:]:
        k, v = a.split("=")
        kw[k] = float(v) if "." in v or "e" in v else int(v)
    for model in models:
        m, s, dt, meta = run_cell(rule, model, list(range(nseeds)), **kw)
        print(f"{rule:12s} {model:4s} acc {m:.4f} +- {s:.4f}  ({dt:.1f}s, meta {meta})")
