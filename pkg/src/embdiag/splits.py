"""Train/test split policies at recording granularity.

timewise: recordings ordered by timestamp, the latest fraction becomes the
test set, so the test set postdates all training data.

recordingwise: seeded stratified shuffle; per class, ceil(fraction * R_c)
recordings go to test. The shuffle uses numpy's PCG64 generator, so an
assignment is reproducible from (seed, sorted recording list) alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

from .data_model import ClipMetadata

POLICIES = ("timewise", "recordingwise")


@dataclass(frozen=True)
class SplitSpec:
    policy: str
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if not (0.0 < self.test_fraction < 1.0):
            raise ValueError(f"test_fraction must lie strictly in (0,1), got {self.test_fraction}")


def _recording_timestamps(meta: Iterable[ClipMetadata]) -> dict[str, float]:
    """Earliest clip start per recording; start_s must carry absolute time
    (e.g. epoch seconds) for the ordering to be meaningful."""
    ts: dict[str, float] = {}
    for m in meta:
        cur = ts.get(m.recording_id)
        if cur is None or m.start_s < cur:
            ts[m.recording_id] = m.start_s
    return ts


def timewise_split(
    meta: Iterable[ClipMetadata],
    test_fraction: float = 0.2,
    timestamps: Mapping[str, float] | None = None,
) -> dict[str, str]:
    """Assign each recording to train/test by chronological order.

    `timestamps` overrides the per-recording time key (default: earliest
    clip start_s). A tie across the cut makes the boundary ambiguous and
    is rejected.
    """
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"test_fraction must lie strictly in (0,1), got {test_fraction}")
    meta = list(meta)
    derived = _recording_timestamps(meta)
    if timestamps is not None:
        missing = sorted(set(derived) - set(timestamps))
        if missing:
            raise ValueError(f"recordings missing a timestamp: {missing}")
        ts = {r: float(timestamps[r]) for r in derived}
    else:
        ts = derived

    ordered = sorted(ts, key=lambda r: (ts[r], r))
    n_test = math.ceil(test_fraction * len(ordered))
    if n_test >= len(ordered):
        raise ValueError(f"test_fraction={test_fraction} leaves no training recordings")
    cut = len(ordered) - n_test
    if ts[ordered[cut - 1]] == ts[ordered[cut]]:
        raise ValueError(
            f"boundary is ambiguous: recordings {ordered[cut - 1]!r} and {ordered[cut]!r} "
            f"share timestamp {ts[ordered[cut]]}"
        )
    return {r: ("test" if i >= cut else "train") for i, r in enumerate(ordered)}


def recordingwise_split(
    meta: Iterable[ClipMetadata],
    test_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[dict[str, str], list[str]]:
    """Seeded stratified split; returns (assignment, warnings).

    A class with a single recording cannot be stratified: its recording is
    forced into train and a warning is emitted.
    """
    if not (0.0 < test_fraction < 1.0):
        raise ValueError(f"test_fraction must lie strictly in (0,1), got {test_fraction}")
    meta = list(meta)

    rec_label: dict[str, str] = {}
    for m in meta:
        prev = rec_label.get(m.recording_id)
        if prev is not None and prev != m.label:
            raise ValueError(
                f"recording {m.recording_id} has clips with labels {prev!r} and {m.label!r}; "
                "stratification requires one label per recording"
            )
        rec_label[m.recording_id] = m.label
    if len(rec_label) < 2:
        raise ValueError("need at least 2 recordings to split")

    by_class: dict[str, list[str]] = {}
    for rid in sorted(rec_label):
        by_class.setdefault(rec_label[rid], []).append(rid)

    rng = np.random.Generator(np.random.PCG64(seed))
    assignment: dict[str, str] = {}
    warnings: list[str] = []
    for label in sorted(by_class):
        recs = by_class[label]
        if len(recs) < 2:
            assignment[recs[0]] = "train"
            warnings.append(
                f"class {label!r} has a single recording ({recs[0]}); forced to train"
            )
            continue
        order = rng.permutation(len(recs))
        n_test = math.ceil(test_fraction * len(recs))
        if n_test >= len(recs):
            n_test = len(recs) - 1
        test_recs = {recs[i] for i in order[:n_test]}
        for rid in recs:
            assignment[rid] = "test" if rid in test_recs else "train"
    return assignment, warnings


def apply_assignment(meta: Iterable[ClipMetadata], assignment: Mapping[str, str]) -> list[ClipMetadata]:
    out = []
    for m in meta:
        if m.recording_id not in assignment:
            raise ValueError(f"recording {m.recording_id} has no split assignment")
        out.append(replace(m, split=assignment[m.recording_id]))
    return out
