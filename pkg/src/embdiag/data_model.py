"""Core domain types shared by every other module.

Embedding values are stored at 32-bit precision; all metric arithmetic is
done in float64 (see ``LabeledDataset.embeddings64``). Labels are opaque
strings; dense class indices are assigned in sorted order of the unique
label set so indexing is reproducible across runs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

SPLITS = ("train", "test")


@dataclass(frozen=True)
class EmbeddingTable:
    """N x D matrix of per-clip embedding vectors plus model identity."""

    model_id: str
    rows: np.ndarray
    clip_ids: tuple[str, ...]

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float32, copy=True)
        if rows.ndim != 2:
            raise ValueError(f"rows must be a 2-D array, got ndim={rows.ndim}")
        if rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError(f"rows must be at least 1x1, got shape {rows.shape}")
        ids = tuple(str(c) for c in self.clip_ids)
        if len(ids) != rows.shape[0]:
            raise ValueError(
                f"clip_ids length {len(ids)} does not match row count {rows.shape[0]}"
            )
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "clip_ids", ids)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def count(self) -> int:
        return self.rows.shape[0]


@dataclass(frozen=True)
class ClipMetadata:
    """Per-clip record: identity, recording, label, split and timing."""

    clip_id: str
    recording_id: str
    label: str
    split: str
    dataset: str
    start_s: float
    duration_s: float

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"clip {self.clip_id}: split must be one of {SPLITS}, got {self.split!r}")
        if self.start_s < 0:
            raise ValueError(f"clip {self.clip_id}: start_s must be >= 0, got {self.start_s}")
        if not self.duration_s > 0:
            raise ValueError(f"clip {self.clip_id}: duration_s must be > 0, got {self.duration_s}")


@dataclass(frozen=True)
class LabeledDataset:
    """An embedding table joined one-to-one with clip metadata."""

    table: EmbeddingTable
    meta: tuple[ClipMetadata, ...]

    def __post_init__(self):
        object.__setattr__(self, "meta", tuple(self.meta))

    def _aligned_meta(self) -> list[ClipMetadata]:
        """Metadata reordered to table row order; raises if the join is broken."""
        by_id = {}
        for m in self.meta:
            if m.clip_id in by_id:
                raise ValueError(f"duplicate clip_id {m.clip_id} in metadata")
            by_id[m.clip_id] = m
        missing = [c for c in self.table.clip_ids if c not in by_id]
        extra = [c for c in by_id if c not in set(self.table.clip_ids)]
        if missing or extra:
            raise ValueError(
                f"table/metadata join is not one-to-one (missing={missing[:3]}, extra={extra[:3]})"
            )
        return [by_id[c] for c in self.table.clip_ids]

    @property
    def embeddings64(self) -> np.ndarray:
        return self.table.rows.astype(np.float64)

    @property
    def labels(self) -> np.ndarray:
        return np.array([m.label for m in self._aligned_meta()], dtype=object)

    @property
    def recording_ids(self) -> np.ndarray:
        return np.array([m.recording_id for m in self._aligned_meta()], dtype=object)

    @property
    def splits(self) -> np.ndarray:
        return np.array([m.split for m in self._aligned_meta()], dtype=object)

    @property
    def class_names(self) -> tuple[str, ...]:
        return tuple(sorted({m.label for m in self.meta}))

    def class_indices(self) -> np.ndarray:
        """Dense class index per table row, 0..C-1 in sorted label order."""
        index = {name: i for i, name in enumerate(self.class_names)}
        return np.array([index[lbl] for lbl in self.labels], dtype=np.int64)

    def split_mask(self, split: str) -> np.ndarray:
        if split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
        return self.splits == split


def validate_dataset(ds: LabeledDataset) -> list[str]:
    """Collect invariant violations as human-readable strings.

    Violations are data, not failures: a well-formed call never raises,
    and an empty list means every invariant holds.
    """
    violations = []

    seen = {}
    for i, cid in enumerate(ds.table.clip_ids):
        if cid in seen:
            violations.append(f"duplicate clip_id {cid} in table rows {seen[cid]} and {i}")
        else:
            seen[cid] = i

    finite = np.isfinite(ds.table.rows)
    for i in np.nonzero(~finite.all(axis=1))[0]:
        violations.append(f"clip {ds.table.clip_ids[i]}: non-finite embedding value")

    meta_ids = {}
    for m in ds.meta:
        if m.clip_id in meta_ids:
            violations.append(f"duplicate clip_id {m.clip_id} in metadata")
        meta_ids[m.clip_id] = m

    table_ids = set(ds.table.clip_ids)
    for cid in ds.table.clip_ids:
        if cid not in meta_ids:
            violations.append(f"clip {cid} has no metadata row")
    for cid in meta_ids:
        if cid not in table_ids:
            violations.append(f"metadata clip {cid} has no embedding row")

    rec_splits: dict[str, set[str]] = {}
    for m in ds.meta:
        rec_splits.setdefault(m.recording_id, set()).add(m.split)
    for rid in sorted(rec_splits):
        if len(rec_splits[rid]) > 1:
            violations.append(f"recording {rid} spans train and test")

    return violations


@dataclass(frozen=True)
class AblationHistogram:
    """Histogram of per-feature accuracy drops, fixed 0.5-point bins."""

    bin_width_pct: float
    bin_edges_pct: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.bin_edges_pct) != len(self.counts) + 1:
            raise ValueError("bin_edges_pct must have exactly one more entry than counts")


@dataclass(frozen=True)
class DiagnosticsBlock:
    """Results of the confound battery attached to an EvalReport."""

    nmi_recording: float
    auc_recording: float
    shuffle_mean_accuracy: float
    shuffle_std_accuracy: float
    shuffle_accuracies: tuple[float, ...]
    nmi_logits: float
    nmi_pca: float
    ablation: AblationHistogram

    def __post_init__(self):
        for name in ("nmi_recording", "auc_recording", "shuffle_mean_accuracy", "nmi_logits", "nmi_pca"):
            _check_unit_range(name, getattr(self, name))
        for a in self.shuffle_accuracies:
            _check_unit_range("shuffle accuracy", a)
        if self.shuffle_std_accuracy < 0:
            raise ValueError("shuffle_std_accuracy must be >= 0")


@dataclass(frozen=True)
class EvalReport:
    """Per-model results for the three headline metrics plus all diagnostics."""

    model_id: str
    dataset: str
    probe_accuracy: float
    per_class_accuracy: dict[str, float]
    nmi_class: float
    mean_roc_auc: float
    diagnostics: DiagnosticsBlock
    config_fingerprint: str
    seed: int

    def __post_init__(self):
        for name in ("probe_accuracy", "nmi_class", "mean_roc_auc"):
            _check_unit_range(name, getattr(self, name))
        for cls, acc in self.per_class_accuracy.items():
            _check_unit_range(f"per-class accuracy [{cls}]", acc)
        if not self.config_fingerprint:
            raise ValueError("config_fingerprint must be non-empty")


def _check_unit_range(name: str, value: float):
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def config_fingerprint(payload: dict) -> str:
    """Deterministic hex digest of a JSON-serializable config payload."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def dataset_digest(ds: LabeledDataset) -> str:
    """Content digest of embeddings + metadata, for report fingerprints."""
    h = hashlib.sha256()
    h.update(ds.table.model_id.encode("utf-8"))
    h.update(ds.table.rows.astype("<f4").tobytes())
    for cid in ds.table.clip_ids:
        h.update(cid.encode("utf-8") + b"\0")
    for m in sorted(ds.meta, key=lambda m: m.clip_id):
        h.update(
            f"{m.clip_id},{m.recording_id},{m.label},{m.split},{m.dataset},{m.start_s!r},{m.duration_s!r}\n".encode("utf-8")
        )
    return h.hexdigest()
