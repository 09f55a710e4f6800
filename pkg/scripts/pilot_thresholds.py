#!/usr/bin/env python3
"""Multi-seed pilot for the end-to-end synthetic battery.

Runs the full diagnostics battery on the acceptance configuration
(C=4, R=8, M=25, D=256, k=12, class scale 1, recording scale 4, noise 1)
across a range of seeds and prints the distribution of each headline
quantity next to its acceptance threshold. Run this before touching any
threshold so changes are grounded in data:

    python3 scripts/pilot_thresholds.py --seeds 20
"""

import argparse
import time

import numpy as np

from embdiag.diagnostics import DiagnosticsConfig, run_full_report
from embdiag.probe import ProbeConfig, feature_importance, train_probe
from embdiag.synth import SynthConfig, generate

THRESHOLDS = [
    ("class NMI", "<", 0.30),
    ("recording NMI", ">", 0.60),
    ("class AUC", "<", 0.75),
    ("recording AUC", ">", 0.85),
    ("probe accuracy", ">", 0.85),
    ("shuffle mean", "<", 0.40),
    ("logit NMI - class NMI", ">", 0.10),
    ("frac small drops d>=k", ">=", 0.90),
]


def run_one(seed: int) -> list:
    cfg = SynthConfig(
        n_classes=4, recordings_per_class=8, clips_per_recording=25, dim=256,
        class_dims=12, class_scale=1.0, recording_scale=4.0, noise_scale=1.0,
        seed=seed,
    )
    ds, _ = generate(cfg)
    report = run_full_report(ds, ProbeConfig(), DiagnosticsConfig(seed=seed))
    X = ds.embeddings64
    y = ds.class_indices()
    train = ds.split_mask("train")
    test = ds.split_mask("test")
    probe = train_probe(X[train], y[train], ProbeConfig(), class_names=ds.class_names)
    drops, _ = feature_importance(probe, X[test], y[test])
    frac_small = float(np.mean(np.abs(drops[cfg.class_dims :]) < 0.01))
    d = report.diagnostics
    return [
        report.nmi_class,
        d.nmi_recording,
        report.mean_roc_auc,
        d.auc_recording,
        report.probe_accuracy,
        d.shuffle_mean_accuracy,
        d.nmi_logits - report.nmi_class,
        frac_small,
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=20, help="seeds 1..N (default: %(default)s)")
    args = parser.parse_args()

    rows = []
    for seed in range(1, args.seeds + 1):
        t0 = time.monotonic()
        rows.append(run_one(seed))
        print(f"seed {seed:2d} done in {time.monotonic() - t0:.1f}s", flush=True)

    values = np.array(rows)
    print()
    print(f"{'quantity':24} {'mean':>7} {'sd':>6} {'min':>7} {'max':>7}  threshold  pass")
    for j, (name, op, thr) in enumerate(THRESHOLDS):
        col = values[:, j]
        ok = {"<": col < thr, ">": col > thr, ">=": col >= thr}[op]
        print(
            f"{name:24} {col.mean():7.3f} {col.std():6.3f} {col.min():7.3f} {col.max():7.3f}"
            f"  {op} {thr:<6} {int(ok.sum())}/{len(col)}"
        )


if __name__ == "__main__":
    main()
