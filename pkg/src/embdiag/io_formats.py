"""Bit-exact readers/writers for embeddings, metadata CSV, WAV audio and
evaluation reports.

The .emb container is deliberately minimal: one JSON header line, raw
little-endian float32 payload, then one clip-id line per row. Identical
inputs always produce identical bytes.
"""

from __future__ import annotations

import json
import math
import re
import struct
from dataclasses import asdict, dataclass

import numpy as np

from .data_model import (
    AblationHistogram,
    ClipMetadata,
    DiagnosticsBlock,
    EmbeddingTable,
    EvalReport,
)

ID_RE = re.compile(r"^[A-Za-z0-9_.-]+$")
META_COLUMNS = ("clip_id", "recording_id", "label", "split", "dataset", "start_s", "duration_s")
_EMB_DTYPE = "f32le"


class FormatError(ValueError):
    """A file does not conform to one of the on-disk contracts."""


@dataclass(frozen=True)
class EmbeddingFileHeader:
    """First line of a .emb file."""

    version: int
    model: str
    dim: int
    count: int
    dtype: str

    def __post_init__(self):
        if self.version != 1:
            raise FormatError(f"unsupported version {self.version!r}")
        if self.dtype != _EMB_DTYPE:
            raise FormatError(f"unsupported dtype {self.dtype!r} (expected {_EMB_DTYPE})")
        if not (isinstance(self.dim, int) and self.dim >= 1):
            raise FormatError(f"dim must be a positive integer, got {self.dim!r}")
        if not (isinstance(self.count, int) and self.count >= 1):
            raise FormatError(f"count must be a positive integer, got {self.count!r}")


def _check_id(kind: str, value: str):
    if not ID_RE.match(value):
        raise FormatError(f"{kind} {value!r} must match [A-Za-z0-9_.-]+")


def _check_text_field(kind: str, value: str):
    if not value or "," in value or "\n" in value or "\r" in value:
        raise FormatError(f"{kind} {value!r} must be non-empty and free of commas/newlines")


# ---------------------------------------------------------------------------
# embeddings (.emb)
# ---------------------------------------------------------------------------

def write_embeddings(table: EmbeddingTable, path) -> int:
    """Serialize a table; returns bytes written. Inverse of read_embeddings."""
    if len(set(table.clip_ids)) != len(table.clip_ids):
        raise FormatError("cannot write table with duplicate clip_ids")
    if not np.isfinite(table.rows).all():
        raise FormatError("cannot write table with non-finite values")
    for cid in table.clip_ids:
        _check_id("clip_id", cid)
    _check_text_field("model_id", table.model_id)

    header = {
        "version": 1,
        "model": table.model_id,
        "dim": table.dim,
        "count": table.count,
        "dtype": _EMB_DTYPE,
    }
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n"
    blob += table.rows.astype("<f4").tobytes()
    blob += "".join(c + "\n" for c in table.clip_ids).encode("utf-8")
    with open(path, "wb") as f:
        f.write(blob)
    return len(blob)


def read_embeddings(path) -> EmbeddingTable:
    """Exact inverse of write_embeddings; rejects trailing or missing bytes."""
    with open(path, "rb") as f:
        data = f.read()

    newline = data.find(b"\n")
    if newline < 0:
        raise FormatError(f"{path}: missing header line")
    try:
        raw = json.loads(data[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: malformed header ({e})") from e
    if not isinstance(raw, dict) or set(raw) != {"version", "model", "dim", "count", "dtype"}:
        raise FormatError(f"{path}: header must contain exactly version/model/dim/count/dtype")
    try:
        header = EmbeddingFileHeader(**raw)
    except FormatError as e:
        raise FormatError(f"{path}: {e}") from None
    dim, count = header.dim, header.count

    payload_start = newline + 1
    payload_len = count * dim * 4
    payload = data[payload_start : payload_start + payload_len]
    if len(payload) < payload_len:
        raise FormatError(f"{path}: truncated payload ({len(payload)} of {payload_len} bytes)")
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    if not np.isfinite(rows).all():
        raise FormatError(f"{path}: payload contains non-finite values")

    tail = data[payload_start + payload_len :]
    try:
        text = tail.decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError(f"{path}: clip-id section is not UTF-8 ({e})") from e
    if not text.endswith("\n"):
        raise FormatError(f"{path}: truncated clip-id section")
    ids = text[:-1].split("\n")
    if len(ids) != count:
        raise FormatError(f"{path}: expected {count} clip ids, found {len(ids)}")
    for cid in ids:
        _check_id("clip_id", cid)
    if len(set(ids)) != count:
        raise FormatError(f"{path}: duplicate clip ids")

    return EmbeddingTable(model_id=header.model, rows=rows, clip_ids=tuple(ids))


# ---------------------------------------------------------------------------
# metadata CSV
# ---------------------------------------------------------------------------

def read_metadata_csv(path, *, require_split: bool = True) -> list[ClipMetadata]:
    """Parse the clip metadata schema. No quoting: fields are raw text split
    on commas, with ids restricted to [A-Za-z0-9_.-].

    With require_split=False the split column may be absent (rows default
    to train) so a split policy can fill it in afterwards.
    """
    with open(path, "r", encoding="utf-8", newline="") as f:
        lines = f.read().splitlines()
    if not lines:
        raise FormatError(f"{path}: empty metadata file")

    header = tuple(lines[0].split(","))
    no_split = tuple(c for c in META_COLUMNS if c != "split")
    if header == META_COLUMNS:
        has_split = True
    elif header == no_split and not require_split:
        has_split = False
    else:
        raise FormatError(f"{path}: header must be {','.join(META_COLUMNS)}, got {lines[0]!r}")

    out = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(header):
            raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(parts)}")
        row = dict(zip(header, parts))
        if not has_split:
            row["split"] = "train"
        _check_id("clip_id", row["clip_id"])
        _check_id("recording_id", row["recording_id"])
        _check_text_field("label", row["label"])
        _check_text_field("dataset", row["dataset"])
        if row["split"] not in ("train", "test"):
            raise FormatError(f"{path}:{lineno}: unknown split token {row['split']!r}")
        try:
            start_s = float(row["start_s"])
            duration_s = float(row["duration_s"])
        except ValueError as e:
            raise FormatError(f"{path}:{lineno}: unparsable number ({e})") from e
        if not (math.isfinite(start_s) and math.isfinite(duration_s)):
            raise FormatError(f"{path}:{lineno}: start_s/duration_s must be finite")
        try:
            out.append(
                ClipMetadata(
                    clip_id=row["clip_id"],
                    recording_id=row["recording_id"],
                    label=row["label"],
                    split=row["split"],
                    dataset=row["dataset"],
                    start_s=start_s,
                    duration_s=duration_s,
                )
            )
        except ValueError as e:
            raise FormatError(f"{path}:{lineno}: {e}") from e
    return out


def write_metadata_csv(meta, path) -> None:
    lines = [",".join(META_COLUMNS)]
    for m in meta:
        _check_id("clip_id", m.clip_id)
        _check_id("recording_id", m.recording_id)
        _check_text_field("label", m.label)
        _check_text_field("dataset", m.dataset)
        lines.append(
            f"{m.clip_id},{m.recording_id},{m.label},{m.split},{m.dataset},{m.start_s!r},{m.duration_s!r}"
        )
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# WAV (read-only)
# ---------------------------------------------------------------------------

def read_wav(path) -> tuple[int, np.ndarray]:
    """Read a RIFF/WAVE file: PCM 16-bit or IEEE-float 32-bit, any channel
    count. Returns (sample_rate, channel-0 samples); int16 is scaled by
    1/32768.
    """
    with open(path, "rb") as f:
        data = f.read()

    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + chunk_size]
        if len(body) < chunk_size:
            raise FormatError(f"{path}: chunk {chunk_id!r} truncated")
        if chunk_id == b"fmt ":
            if chunk_size < 16:
                raise FormatError(f"{path}: fmt chunk too short")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif chunk_id == b"data":
            payload = body
        pos += 8 + chunk_size + (chunk_size & 1)  # chunks are word-aligned

    if fmt is None or payload is None:
        raise FormatError(f"{path}: missing fmt or data chunk")
    audio_format, n_channels, sample_rate, _, _, bits = fmt
    if n_channels < 1:
        raise FormatError(f"{path}: invalid channel count {n_channels}")

    if audio_format == 1 and bits == 16:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (2 * n_channels)], dtype="<i2")
        samples = raw[::n_channels].astype(np.float64) / 32768.0
    elif audio_format == 3 and bits == 32:
        raw = np.frombuffer(payload[: len(payload) - len(payload) % (4 * n_channels)], dtype="<f4")
        samples = raw[::n_channels].astype(np.float64)
    else:
        raise FormatError(
            f"{path}: unsupported encoding (format={audio_format}, bits={bits}); "
            "only PCM16 and IEEE float32 are readable"
        )
    return int(sample_rate), samples


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def report_to_dict(report: EvalReport) -> dict:
    d = asdict(report)
    # tuples -> lists happen in asdict already via dataclass fields
    return d


def report_from_dict(d: dict) -> EvalReport:
    diag = d["diagnostics"]
    ab = diag["ablation"]
    return EvalReport(
        model_id=d["model_id"],
        dataset=d["dataset"],
        probe_accuracy=d["probe_accuracy"],
        per_class_accuracy=dict(d["per_class_accuracy"]),
        nmi_class=d["nmi_class"],
        mean_roc_auc=d["mean_roc_auc"],
        diagnostics=DiagnosticsBlock(
            nmi_recording=diag["nmi_recording"],
            auc_recording=diag["auc_recording"],
            shuffle_mean_accuracy=diag["shuffle_mean_accuracy"],
            shuffle_std_accuracy=diag["shuffle_std_accuracy"],
            shuffle_accuracies=tuple(diag["shuffle_accuracies"]),
            nmi_logits=diag["nmi_logits"],
            nmi_pca=diag["nmi_pca"],
            ablation=AblationHistogram(
                bin_width_pct=ab["bin_width_pct"],
                bin_edges_pct=tuple(ab["bin_edges_pct"]),
                counts=tuple(ab["counts"]),
            ),
        ),
        config_fingerprint=d["config_fingerprint"],
        seed=d["seed"],
    )


def report_json_bytes(report: EvalReport) -> bytes:
    """Canonical JSON encoding: fixed key order, exact float round trip."""
    return (json.dumps(report_to_dict(report), indent=2, sort_keys=False) + "\n").encode("utf-8")


def report_markdown(reports) -> str:
    """One metrics row per report, then a diagnostics table.

    Accuracy renders as a percentage with one decimal; NMI and ROC-AUC with
    two decimals.
    """
    lines = [
        "| Model | Dataset | Accuracy | NMI | ROC-AUC |",
        "|---|---|---|---|---|",
    ]
    for r in reports:
        lines.append(
            f"| {r.model_id} | {r.dataset} "
            f"| {100.0 * r.probe_accuracy:.1f}% | {r.nmi_class:.2f} | {r.mean_roc_auc:.2f} |"
        )
    lines += [
        "",
        "| Model | Dataset | NMI (rec) | AUC (rec) | Shuffle acc | NMI (logits) | NMI (PCA) |",
        "|---|---|---|---|---|---|---|",
    ]
    for r in reports:
        d = r.diagnostics
        lines.append(
            f"| {r.model_id} | {r.dataset} | {d.nmi_recording:.2f} | {d.auc_recording:.2f} "
            f"| {100.0 * d.shuffle_mean_accuracy:.1f}% ± {100.0 * d.shuffle_std_accuracy:.1f} "
            f"| {d.nmi_logits:.2f} | {d.nmi_pca:.2f} |"
        )
    return "\n".join(lines) + "\n"


def write_report(report: EvalReport, path, format: str = "json") -> None:
    if format == "json":
        with open(path, "wb") as f:
            f.write(report_json_bytes(report))
    elif format == "markdown":
        with open(path, "w", encoding="utf-8") as f:
            f.write(report_markdown([report]))
    else:
        raise ValueError(f"unknown report format {format!r}")


def read_report(path) -> EvalReport:
    with open(path, "r", encoding="utf-8") as f:
        d = json.load(f)
    try:
        return report_from_dict(d)
    except (KeyError, TypeError) as e:
        raise FormatError(f"{path}: malformed report ({e})") from e
