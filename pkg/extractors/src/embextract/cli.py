"""embextract CLI: list registered models, run an adapter over WAV clips."""

from __future__ import annotations

import argparse
import sys

from .pipeline import extract
from .runners import CheckpointUnavailableError
from .specs import REGISTRY, get_spec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embextract",
        description="Run pretrained audio models over WAV clips and emit .emb + CSV.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="show the adapter registry")
    p.set_defaults(func=_cmd_list)

    p = sub.add_parser("extract", help="embed every clip in a metadata CSV")
    p.add_argument("--model", required=True, choices=sorted(REGISTRY),
                   help="registered model name")
    p.add_argument("--audio-dir", required=True, help="directory holding <clip_id>.wav files")
    p.add_argument("-m", "--metadata", required=True, help="metadata CSV")
    p.add_argument("-o", "--output", required=True, help="output .emb path")
    p.add_argument("--output-csv", help="output CSV path (default: alongside the .emb)")
    p.set_defaults(func=_cmd_extract)
    return parser


def _cmd_list(args) -> int:
    print(f"{'model':14} {'domain':14} {'rate':>6} {'window':>7} {'dim':>5}  checkpoint")
    for name in sorted(REGISTRY):
        s = REGISTRY[name]
        print(f"{name:14} {s.domain:14} {s.sample_rate:6d} {s.window_s:6.1f}s {s.dim:5d}  {s.checkpoint}")
    return 0


def _cmd_extract(args) -> int:
    spec = get_spec(args.model)
    result = extract(args.audio_dir, args.metadata, spec, args.output, args.output_csv)
    print(
        f"wrote {result.emb_path} ({result.n_clips} clips x {result.dim} dims); "
        f"{result.n_padded_short} clip(s) zero-padded"
    )
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CheckpointUnavailableError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
