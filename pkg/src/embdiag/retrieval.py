"""Cosine-similarity ranking of the test set with per-query ROC-AUC.

Every test clip is used as a query against all other test clips; rows
sharing the query's label are positives. AUC uses the Mann-Whitney
statistic with mid-rank tie handling, which is exact and deterministic.
Queries without both a positive and a negative are skipped and reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import LabeledDataset


@dataclass(frozen=True)
class RetrievalResult:
    per_query_auc: tuple[tuple[str, float], ...]
    mean_auc: float
    skipped_queries: tuple[tuple[str, str], ...]


def _midranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties averaged."""
    uniq, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
    starts = np.cumsum(counts) - counts
    mid = starts + (counts + 1) / 2.0
    return mid[inv]


def _auc_from_mask(scores: np.ndarray, pos_mask: np.ndarray) -> float:
    n_pos = int(pos_mask.sum())
    n_neg = scores.shape[0] - n_pos
    ranks = _midranks(scores)
    u = ranks[pos_mask].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_auc_from_scores(pos_scores, neg_scores) -> float:
    """(#{pos > neg} + 0.5 * #{pos = neg}) / (|pos| * |neg|)."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need at least one positive and one negative score")
    scores = np.concatenate([pos, neg])
    mask = np.zeros(scores.shape[0], dtype=bool)
    mask[: pos.size] = True
    return _auc_from_mask(scores, mask)


def retrieval_eval(ds: LabeledDataset, label_field: str = "class") -> RetrievalResult:
    """Rank all other test rows by cosine similarity per query and score AUC."""
    if label_field not in ("class", "recording_id"):
        raise ValueError(f"label_field must be 'class' or 'recording_id', got {label_field!r}")

    mask = ds.split_mask("test")
    if mask.sum() < 2:
        raise ValueError("retrieval needs at least 2 test rows")
    X = ds.embeddings64[mask]
    labels = (ds.labels if label_field == "class" else ds.recording_ids)[mask]
    clip_ids = [c for c, m in zip(ds.table.clip_ids, mask) if m]

    norms = np.linalg.norm(X, axis=1)
    zero = np.nonzero(norms == 0)[0]
    if zero.size:
        raise ValueError(f"clip {clip_ids[zero[0]]} has a zero-norm embedding; cosine undefined")
    unit = X / norms[:, None]
    sims = np.clip(unit @ unit.T, -1.0, 1.0)

    n = X.shape[0]
    per_query = []
    skipped = []
    for i in range(n):
        others = np.ones(n, dtype=bool)
        others[i] = False
        pos = (labels == labels[i]) & others
        n_pos = int(pos.sum())
        if n_pos == 0:
            skipped.append((clip_ids[i], "no other row shares its label"))
            continue
        if n_pos == n - 1:
            skipped.append((clip_ids[i], "no negatives: every other row shares its label"))
            continue
        per_query.append((clip_ids[i], _auc_from_mask(sims[i][others], pos[others])))

    if not per_query:
        raise ValueError("every query was skipped; no AUC defined")
    mean_auc = float(np.mean([a for _, a in per_query]))
    return RetrievalResult(
        per_query_auc=tuple(per_query),
        mean_auc=mean_auc,
        skipped_queries=tuple(skipped),
    )
