"""Writers for the evaluation toolkit's wire formats.

The .emb container: one JSON header line with keys version/model/dim/
count/dtype, then count*dim little-endian float32 values row-major, then
one clip-id line per row. The metadata CSV uses the fixed header below
with no quoting. These writers are intentionally standalone so adapters
install without the evaluation engine; the engine's readers are the
contract they are tested against.
"""

from __future__ import annotations

import json
import re

import numpy as np

ID_RE = re.compile(r"^[A-Za-z0-9_.-]+$")
META_COLUMNS = ("clip_id", "recording_id", "label", "split", "dataset", "start_s", "duration_s")


def write_emb(model_id: str, rows: np.ndarray, clip_ids, path) -> int:
    rows = np.asarray(rows, dtype=np.float32)
    clip_ids = [str(c) for c in clip_ids]
    if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
        raise ValueError(f"rows must be a non-empty 2-D array, got shape {rows.shape}")
    if len(clip_ids) != rows.shape[0]:
        raise ValueError("clip_ids length must match row count")
    if len(set(clip_ids)) != len(clip_ids):
        raise ValueError("duplicate clip ids")
    if not np.isfinite(rows).all():
        raise ValueError("rows contain non-finite values")
    for cid in clip_ids:
        if not ID_RE.match(cid):
            raise ValueError(f"clip id {cid!r} must match [A-Za-z0-9_.-]+")

    header = {
        "version": 1,
        "model": model_id,
        "dim": rows.shape[1],
        "count": rows.shape[0],
        "dtype": "f32le",
    }
    blob = json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n"
    blob += rows.astype("<f4").tobytes()
    blob += "".join(c + "\n" for c in clip_ids).encode("utf-8")
    with open(path, "wb") as f:
        f.write(blob)
    return len(blob)


def read_metadata_rows(path) -> list[dict]:
    """Minimal reader for the clip metadata CSV (string fields preserved)."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        lines = f.read().splitlines()
    if not lines or tuple(lines[0].split(",")) != META_COLUMNS:
        raise ValueError(f"{path}: header must be {','.join(META_COLUMNS)}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(META_COLUMNS):
            raise ValueError(f"{path}:{lineno}: expected {len(META_COLUMNS)} fields")
        rows.append(dict(zip(META_COLUMNS, parts)))
    return rows


def write_metadata_rows(rows, path) -> None:
    lines = [",".join(META_COLUMNS)]
    for r in rows:
        lines.append(",".join(r[c] for c in META_COLUMNS))
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("\n".join(lines) + "\n")
