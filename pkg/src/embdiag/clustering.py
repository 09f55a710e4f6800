"""K-Means clustering and normalized mutual information between partitions.

kmeans uses k-means++ seeding with restarts; the winner is chosen by
(inertia, restart index), so results are deterministic for a fixed seed
even when restarts run concurrently. NMI is 2*I(Y;C) / (H(Y) + H(C)),
computed in nats from the joint contingency table.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data_model import LabeledDataset
from .numerics import entropy, fit_standardizer, apply_standardizer


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    iterations: int
    restarts_used: int
    inertia_trace: tuple[float, ...]


@dataclass(frozen=True)
class ContingencyTable:
    """Joint label/cluster counts; rows are class labels, columns clusters."""

    counts: np.ndarray
    row_labels: tuple
    col_labels: tuple

    @staticmethod
    def from_labels(y, c) -> "ContingencyTable":
        y = list(y)
        c = list(c)
        if len(y) != len(c):
            raise ValueError(f"label sequences differ in length: {len(y)} vs {len(c)}")
        if len(y) == 0:
            raise ValueError("label sequences must be non-empty")
        rows = sorted(set(y), key=str)
        cols = sorted(set(c), key=str)
        ri = {v: i for i, v in enumerate(rows)}
        ci = {v: i for i, v in enumerate(cols)}
        counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
        for a, b in zip(y, c):
            counts[ri[a], ci[b]] += 1
        return ContingencyTable(counts=counts, row_labels=tuple(rows), col_labels=tuple(cols))


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Squared euclidean distances, clamped at 0 against rounding."""
    d = (X * X).sum(axis=1)[:, None] + (C * C).sum(axis=1)[None, :] - 2.0 * (X @ C.T)
    return np.maximum(d, 0.0)


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = X[first]
    d2 = _sq_dists(X, centroids[0:1])[:, 0]
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            idx = int(rng.choice(n, p=probs))
        else:
            # all remaining distances zero (duplicate points): pick any
            # point not already used as a centroid
            used = {tuple(c) for c in centroids[:j]}
            candidates = [i for i in range(n) if tuple(X[i]) not in used]
            idx = candidates[0] if candidates else int(rng.integers(n))
        centroids[j] = X[idx]
        d2 = np.minimum(d2, _sq_dists(X, centroids[j : j + 1])[:, 0])
    return centroids


def _lloyd(X: np.ndarray, k: int, seed_seq: np.random.SeedSequence, max_iter: int, tol: float):
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    centroids = _kmeans_pp_init(X, k, rng)
    assignments = np.zeros(X.shape[0], dtype=np.int64)
    trace: list[float] = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        assignments = np.argmin(_sq_dists(X, centroids), axis=1)

        # repair empty clusters with the points farthest from their centroids
        counts = np.bincount(assignments, minlength=k)
        for empty in np.nonzero(counts == 0)[0]:
            dist_to_own = np.linalg.norm(X - centroids[assignments], axis=1)
            # never steal a cluster's only point
            dist_to_own[counts[assignments] <= 1] = -1.0
            far = int(np.argmax(dist_to_own))
            counts[assignments[far]] -= 1
            assignments[far] = empty
            counts[empty] += 1

        new_centroids = np.empty_like(centroids)
        for j in range(k):
            new_centroids[j] = X[assignments == j].mean(axis=0)

        trace.append(float(((X - new_centroids[assignments]) ** 2).sum()))
        shift = np.linalg.norm(new_centroids - centroids, axis=1).max()
        centroids = new_centroids
        if shift < tol:
            break
    return centroids, assignments, trace, iterations


def kmeans(
    X,
    k: int,
    seed: int = 0,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-6,
    n_threads: int = 1,
) -> KMeansResult:
    """Best-of-`restarts` Lloyd iterations with k-means++ seeding."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite values")
    n = X.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of points n={n}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")

    children = np.random.SeedSequence(seed).spawn(restarts)

    def run(idx):
        return _lloyd(X, k, children[idx], max_iter, tol)

    if n_threads > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            runs = list(pool.map(run, range(restarts)))
    else:
        runs = []
        for idx in range(restarts):
            runs.append(run(idx))
            if runs[-1][2][-1] == 0.0:
                break  # exact fit; later restarts cannot improve

    best_idx = min(range(len(runs)), key=lambda i: (runs[i][2][-1], i))
    centroids, assignments, trace, iterations = runs[best_idx]
    return KMeansResult(
        centroids=centroids,
        assignments=assignments,
        inertia=trace[-1],
        iterations=iterations,
        restarts_used=len(runs),
        inertia_trace=tuple(trace),
    )


def mutual_information(table: ContingencyTable) -> float:
    """I(Y;C) in nats from joint counts."""
    counts = table.counts.astype(np.float64)
    n = counts.sum()
    if n <= 0:
        raise ValueError("contingency table must hold at least one observation")
    pij = counts / n
    pi = pij.sum(axis=1, keepdims=True)
    pj = pij.sum(axis=0, keepdims=True)
    mask = pij > 0
    return float((pij[mask] * np.log(pij[mask] / (pi @ pj)[mask])).sum())


def nmi(y, c) -> float:
    """Normalized mutual information 2*I/(H(Y)+H(C)) in [0, 1].

    Two identical trivial partitions (single class, single cluster) agree
    perfectly; the 0/0 case is defined as 1.0 by continuity.
    """
    table = ContingencyTable.from_labels(y, c)
    hy = entropy(table.counts.sum(axis=1))
    hc = entropy(table.counts.sum(axis=0))
    if hy + hc == 0.0:
        return 1.0
    value = 2.0 * mutual_information(table) / (hy + hc)
    return float(np.clip(value, 0.0, 1.0))


def cluster_eval(
    ds: LabeledDataset,
    label_field: str = "class",
    which_split: str = "test",
    seed: int = 0,
    restarts: int = 10,
    standardize: bool = False,
    n_threads: int = 1,
) -> tuple[float, KMeansResult]:
    """K-Means the selected rows with K = #distinct field values, score NMI.

    label_field "class" uses ship-type labels; "recording_id" measures how
    much of the geometry is recording-specific.
    """
    if label_field not in ("class", "recording_id"):
        raise ValueError(f"label_field must be 'class' or 'recording_id', got {label_field!r}")
    if which_split not in ("test", "all"):
        raise ValueError(f"which_split must be 'test' or 'all', got {which_split!r}")

    mask = ds.split_mask("test") if which_split == "test" else np.ones(ds.table.count, dtype=bool)
    if not mask.any():
        raise ValueError(f"selected split {which_split!r} is empty")
    X = ds.embeddings64[mask]
    labels = (ds.labels if label_field == "class" else ds.recording_ids)[mask]

    k = len(set(labels))
    if X.shape[0] < k:
        raise ValueError(f"fewer rows ({X.shape[0]}) than clusters ({k})")
    if standardize:
        X = apply_standardizer(fit_standardizer(X), X)

    result = kmeans(X, k, seed=seed, restarts=restarts, n_threads=n_threads)
    return nmi(labels, result.assignments), result
