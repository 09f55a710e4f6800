"""Command-line entry point wiring all modules together.

Subcommands: featurize, split, cluster-eval, retrieval, probe, diagnose,
synth, compare. Exit codes: 0 success, 1 contract/validation error,
2 usage error. Outputs are written atomically (temp file + rename).

A config file of `key = value` lines can preset any flag; explicit flags
win. All randomness is funneled through the --seed of the subcommand.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .baseline_features import BASELINE_MODEL_ID, MelConfig, baseline_embedding
from .clustering import cluster_eval
from .data_model import EmbeddingTable, LabeledDataset, validate_dataset
from .diagnostics import DiagnosticsConfig, run_full_report
from .io_formats import (
    read_embeddings,
    read_metadata_csv,
    read_report,
    read_wav,
    report_json_bytes,
    report_markdown,
    write_embeddings,
    write_metadata_csv,
)
from .probe import (
    ProbeConfig,
    accuracy,
    per_class_accuracy,
    probe_from_dict,
    probe_to_dict,
    train_probe,
)
from .retrieval import retrieval_eval
from .splits import apply_assignment, recordingwise_split, timewise_split
from .synth import SynthConfig, generate

_THREADS_ENV = "EMBDIAG_THREADS"


def _atomic_write_bytes(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path, text: str):
    _atomic_write_bytes(path, text.encode("utf-8"))


def _atomic_write_embeddings(table: EmbeddingTable, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    os.close(fd)
    try:
        write_embeddings(table, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_metadata(meta, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    os.close(fd)
    try:
        write_metadata_csv(meta, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_dataset(emb_path, meta_path) -> LabeledDataset:
    table = read_embeddings(emb_path)
    meta = read_metadata_csv(meta_path)
    ds = LabeledDataset(table=table, meta=tuple(meta))
    violations = validate_dataset(ds)
    if violations:
        raise ValueError("dataset is invalid: " + "; ".join(violations[:5]))
    return ds


def _read_config_file(path) -> dict[str, str]:
    out = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _default_threads() -> int:
    env = os.environ.get(_THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_synth(args) -> int:
    cfg = SynthConfig(
        n_classes=args.classes,
        recordings_per_class=args.recordings_per_class,
        clips_per_recording=args.clips_per_recording,
        dim=args.dim,
        class_dims=args.class_dims,
        class_scale=args.class_scale,
        recording_scale=args.recording_scale,
        noise_scale=args.noise_scale,
        test_fraction=args.test_fraction,
        seed=args.seed,
    )
    ds, sidecar = generate(cfg)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write_embeddings(ds.table, out / "synth.emb")
    _atomic_write_metadata(ds.meta, out / "meta.csv")
    _atomic_write_text(out / "sidecar.json", json.dumps(sidecar, indent=2) + "\n")
    print(f"wrote {out / 'synth.emb'}, {out / 'meta.csv'}, {out / 'sidecar.json'}")
    return 0


def _cmd_featurize(args) -> int:
    cfg = MelConfig(
        n_mels=args.n_mels,
        n_fft=args.n_fft,
        hop=args.hop,
        f_min=args.f_min,
        f_max=args.f_max,
        log_floor=args.log_floor,
    )
    meta = read_metadata_csv(args.metadata)
    audio_dir = Path(args.audio_dir)
    rows = []
    ids = []
    for m in meta:
        wav_path = audio_dir / f"{m.clip_id}.wav"
        if not wav_path.exists():
            raise FileNotFoundError(f"no audio file for clip {m.clip_id}: {wav_path}")
        rate, samples = read_wav(wav_path)
        rows.append(baseline_embedding(samples, rate, cfg))
        ids.append(m.clip_id)
    table = EmbeddingTable(
        model_id=BASELINE_MODEL_ID,
        rows=np.asarray(rows, dtype=np.float32),
        clip_ids=tuple(ids),
    )
    _atomic_write_embeddings(table, args.output)
    print(f"wrote {args.output} ({table.count} clips x {table.dim} dims)")
    return 0


def _cmd_split(args) -> int:
    meta = read_metadata_csv(args.metadata, require_split=False)
    if args.policy == "timewise":
        assignment = timewise_split(meta, test_fraction=args.test_fraction)
        warnings = []
    else:
        assignment, warnings = recordingwise_split(
            meta, test_fraction=args.test_fraction, seed=args.seed
        )
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    out = args.output or args.metadata
    updated = apply_assignment(meta, assignment)
    _atomic_write_metadata(updated, out)
    n_test = sum(1 for m in updated if m.split == "test")
    print(f"wrote {out}: {len(updated) - n_test} train clips, {n_test} test clips")
    return 0


def _cmd_cluster_eval(args) -> int:
    ds = _load_dataset(args.embeddings, args.metadata)
    score, result = cluster_eval(
        ds,
        label_field=args.label_field,
        which_split=args.split,
        seed=args.seed,
        restarts=args.restarts,
        standardize=args.standardize,
        n_threads=args.threads,
    )
    payload = {
        "model_id": ds.table.model_id,
        "label_field": args.label_field,
        "split": args.split,
        "k": int(result.centroids.shape[0]),
        "nmi": score,
        "inertia": result.inertia,
        "iterations": result.iterations,
        "restarts_used": result.restarts_used,
    }
    text = json.dumps(payload, indent=2) + "\n"
    if args.output:
        _atomic_write_text(args.output, text)
    print(text, end="")
    return 0


def _cmd_retrieval(args) -> int:
    ds = _load_dataset(args.embeddings, args.metadata)
    result = retrieval_eval(ds, label_field=args.label_field)
    if args.output:
        lines = ["clip_id,auc"]
        lines += [f"{cid},{auc!r}" for cid, auc in result.per_query_auc]
        lines += [f"{cid},skipped:{reason.replace(',', ';')}" for cid, reason in result.skipped_queries]
        _atomic_write_text(args.output, "\n".join(lines) + "\n")
    print(
        json.dumps(
            {
                "model_id": ds.table.model_id,
                "label_field": args.label_field,
                "mean_auc": result.mean_auc,
                "queries_scored": len(result.per_query_auc),
                "queries_skipped": len(result.skipped_queries),
            },
            indent=2,
        )
    )
    return 0


def _probe_config(args) -> ProbeConfig:
    return ProbeConfig(
        l2_lambda=args.l2_lambda,
        max_iters=args.max_iters,
        grad_tol=args.grad_tol,
        learning_rate=args.learning_rate,
        seed=args.seed,
    )


def _cmd_probe(args) -> int:
    ds = _load_dataset(args.embeddings, args.metadata)
    X = ds.embeddings64
    y = ds.class_indices()
    train = ds.split_mask("train")
    test = ds.split_mask("test")
    probe = train_probe(X[train], y[train], _probe_config(args), class_names=ds.class_names)
    payload = probe_to_dict(probe)
    payload["test_accuracy"] = accuracy(probe, X[test], y[test]) if test.any() else None
    payload["per_class_accuracy"] = (
        per_class_accuracy(probe, X[test], y[test]) if test.any() else {}
    )
    if args.output:
        _atomic_write_text(args.output, json.dumps(payload, indent=2) + "\n")
    print(
        json.dumps(
            {
                "model_id": ds.table.model_id,
                "test_accuracy": payload["test_accuracy"],
                "per_class_accuracy": payload["per_class_accuracy"],
                "final_train_loss": payload["final_train_loss"],
            },
            indent=2,
        )
    )
    return 0


def _cmd_diagnose(args) -> int:
    ds = _load_dataset(args.embeddings, args.metadata)
    diag_cfg = DiagnosticsConfig(
        shuffle_repeats=args.shuffle_repeats,
        pca_components=args.pca_components,
        kmeans_restarts=args.restarts,
        seed=args.seed,
    )
    probe = None
    if args.probe_json:
        with open(args.probe_json, "r", encoding="utf-8") as f:
            probe = probe_from_dict(json.load(f))
    report = run_full_report(
        ds, _probe_config(args), diag_cfg, probe=probe, n_threads=args.threads
    )
    _atomic_write_bytes(args.output, report_json_bytes(report))
    if args.markdown:
        _atomic_write_text(args.markdown, report_markdown([report]))
    print(f"wrote {args.output}")
    return 0


def _cmd_compare(args) -> int:
    reports = [read_report(p) for p in args.reports]
    table = report_markdown(reports)
    _atomic_write_text(args.output, table)
    print(f"wrote {args.output} ({len(reports)} models)")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embdiag",
        description="Embedding-space diagnostics: probing, clustering, retrieval and confound controls.",
    )
    parser.add_argument("--version", action="version", version=f"embdiag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key = value file presetting any flag (explicit flags win)")
        p.add_argument("--threads", type=int, default=_default_threads(),
                       help="worker threads for parallel restarts (default: %(default)s)")

    p = sub.add_parser("synth", help="generate a synthetic embedding dataset")
    add_common(p)
    p.add_argument("--classes", type=int, default=4, help="number of classes (default: %(default)s)")
    p.add_argument("--recordings-per-class", type=int, default=8, help="recordings per class (default: %(default)s)")
    p.add_argument("--clips-per-recording", type=int, default=25, help="clips per recording (default: %(default)s)")
    p.add_argument("--dim", type=int, default=256, help="embedding dimension (default: %(default)s)")
    p.add_argument("--class-dims", type=int, default=12, help="leading dims carrying class signal (default: %(default)s)")
    p.add_argument("--class-scale", type=float, default=1.0, help="class mean scale (default: %(default)s)")
    p.add_argument("--recording-scale", type=float, default=4.0, help="recording mean scale (default: %(default)s)")
    p.add_argument("--noise-scale", type=float, default=1.0, help="white noise scale (default: %(default)s)")
    p.add_argument("--test-fraction", type=float, default=0.2, help="test fraction of recordings (default: %(default)s)")
    p.add_argument("--seed", type=int, required=True, help="generator seed (required, no wall-clock default)")
    p.add_argument("-o", "--output-dir", required=True, help="directory for synth.emb/meta.csv/sidecar.json")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("featurize", help="compute baseline log-mel embeddings for WAV clips")
    add_common(p)
    p.add_argument("--audio-dir", required=True, help="directory holding <clip_id>.wav files")
    p.add_argument("-m", "--metadata", required=True, help="metadata CSV")
    p.add_argument("-o", "--output", required=True, help="output .emb path")
    p.add_argument("--n-mels", type=int, default=128, help="mel bins (default: %(default)s)")
    p.add_argument("--n-fft", type=int, default=1024, help="FFT size (default: %(default)s)")
    p.add_argument("--hop", type=int, default=512, help="hop length (default: %(default)s)")
    p.add_argument("--f-min", type=float, default=0.0, help="lowest mel edge in Hz (default: %(default)s)")
    p.add_argument("--f-max", type=float, default=None, help="highest mel edge in Hz (default: sample rate / 2)")
    p.add_argument("--log-floor", type=float, default=1e-10, help="additive floor before log (default: %(default)s)")
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("split", help="fill the split column of a metadata CSV")
    add_common(p)
    p.add_argument("-m", "--metadata", required=True, help="metadata CSV (split column optional)")
    p.add_argument("--policy", choices=("timewise", "recordingwise"), required=True,
                   help="timewise: latest recordings become test; recordingwise: seeded stratified shuffle")
    p.add_argument("--test-fraction", type=float, default=0.2, help="fraction of recordings for test (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="shuffle seed for recordingwise (default: %(default)s)")
    p.add_argument("-o", "--output", help="output CSV (default: rewrite input)")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("cluster-eval", help="K-Means + NMI against a label field")
    add_common(p)
    p.add_argument("-e", "--embeddings", required=True, help=".emb file")
    p.add_argument("-m", "--metadata", required=True, help="metadata CSV")
    p.add_argument("--label-field", choices=("class", "recording_id"), default="class",
                   help="field defining ground-truth partitions (default: %(default)s)")
    p.add_argument("--split", choices=("test", "all"), default="test",
                   help="rows to cluster (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="k-means seed (default: %(default)s)")
    p.add_argument("--restarts", type=int, default=10, help="k-means++ restarts (default: %(default)s)")
    p.add_argument("--standardize", action="store_true", help="standardize columns before clustering")
    p.add_argument("-o", "--output", help="optional JSON output path")
    p.set_defaults(func=_cmd_cluster_eval)

    p = sub.add_parser("retrieval", help="cosine-similarity ranking with per-query ROC-AUC")
    add_common(p)
    p.add_argument("-e", "--embeddings", required=True, help=".emb file")
    p.add_argument("-m", "--metadata", required=True, help="metadata CSV")
    p.add_argument("--label-field", choices=("class", "recording_id"), default="class",
                   help="field defining positives (default: %(default)s)")
    p.add_argument("-o", "--output", help="per-query CSV output path")
    p.set_defaults(func=_cmd_retrieval)

    def add_probe_flags(p):
        p.add_argument("--l2-lambda", type=float, default=1e-4, help="L2 penalty (default: %(default)s)")
        p.add_argument("--max-iters", type=int, default=1000, help="max accepted steps (default: %(default)s)")
        p.add_argument("--grad-tol", type=float, default=1e-6, help="gradient stop tolerance (default: %(default)s)")
        p.add_argument("--learning-rate", type=float, default=0.5, help="initial step size (default: %(default)s)")

    p = sub.add_parser("probe", help="train the linear probe and report accuracy")
    add_common(p)
    p.add_argument("-e", "--embeddings", required=True, help=".emb file")
    p.add_argument("-m", "--metadata", required=True, help="metadata CSV")
    add_probe_flags(p)
    p.add_argument("--seed", type=int, default=0, help="probe config seed (default: %(default)s)")
    p.add_argument("-o", "--output", help="probe parameters JSON output path")
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("diagnose", help="full report: metrics plus the confound battery")
    add_common(p)
    p.add_argument("-e", "--embeddings", required=True, help=".emb file")
    p.add_argument("-m", "--metadata", required=True, help="metadata CSV")
    add_probe_flags(p)
    p.add_argument("--shuffle-repeats", type=int, default=10, help="label-shuffle repeats (default: %(default)s)")
    p.add_argument("--pca-components", type=int, default=None,
                   help="PCA control dimensionality (default: number of classes)")
    p.add_argument("--restarts", type=int, default=10, help="k-means++ restarts (default: %(default)s)")
    p.add_argument("--seed", type=int, required=True, help="master seed for the battery (required)")
    p.add_argument("--probe-json", help="reuse probe parameters from a `probe -o` JSON instead of retraining")
    p.add_argument("-o", "--output", required=True, help="report JSON output path")
    p.add_argument("--markdown", help="optional markdown table output path")
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("compare", help="merge report JSONs into one markdown table")
    add_common(p)
    p.add_argument("reports", nargs="+", help="report JSON files")
    p.add_argument("-o", "--output", required=True, help="markdown output path")
    p.set_defaults(func=_cmd_compare)

    return parser


def _scan_for_config(argv):
    """Find the subcommand and a --config value without a full parse."""
    command = next((a for a in argv if not a.startswith("-")), None)
    config_path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
        elif a.startswith("--config="):
            config_path = a.split("=", 1)[1]
    return command, config_path


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    # config-file values become subparser defaults before parsing, so any
    # explicitly passed flag still wins
    command, config_path = _scan_for_config(argv)
    if config_path is not None:
        try:
            presets = _read_config_file(config_path)
        except (OSError, ValueError) as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
        sub_actions = [a for a in parser._subparsers._group_actions
                       if isinstance(a, argparse._SubParsersAction)]
        if command not in sub_actions[0].choices:
            parser.error(f"unknown subcommand {command!r}")
        subparser = sub_actions[0].choices[command]
        known = {a.dest: a for a in subparser._actions}
        converted = {}
        for key, raw in presets.items():
            if key not in known:
                print(f"error: config key {key!r} is not a flag of {command!r}", file=sys.stderr)
                return 1
            action = known[key]
            if isinstance(action, argparse._StoreTrueAction):
                converted[key] = raw.lower() in ("1", "true", "yes", "on")
            elif action.type is not None:
                converted[key] = action.type(raw)
            else:
                converted[key] = raw
            action.required = False
        subparser.set_defaults(**converted)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
