"""Shared mathematical kernels: standardization, PCA, cosine similarity,
softmax, entropy. Everything runs in float64 and is deterministic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class Standardizer:
    """Per-column affine transform fitted on training rows only."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        stds = np.asarray(self.stds, dtype=np.float64)
        if means.shape != stds.shape or means.ndim != 1:
            raise ValueError("means and stds must be 1-D arrays of equal length")
        if np.any(stds < STD_FLOOR):
            raise ValueError(f"stds must be floored at {STD_FLOOR}")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)


def fit_standardizer(X_train) -> Standardizer:
    X = np.asarray(X_train, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X_train must be a non-empty 2-D array")
    means = X.mean(axis=0)
    stds = np.maximum(X.std(axis=0), STD_FLOOR)
    return Standardizer(means=means, stds=stds)


def apply_standardizer(std: Standardizer, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != std.means.shape[0]:
        raise ValueError(f"X must be 2-D with {std.means.shape[0]} columns")
    return (X - std.means) / std.stds


def cosine_similarity(u, v) -> float:
    """u.v / (|u||v|), clamped to [-1, 1] against rounding."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity is undefined for zero-norm vectors")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def entropy(counts) -> float:
    """Shannon entropy of a histogram, in nats."""
    c = np.asarray(counts, dtype=np.float64)
    if c.size == 0:
        raise ValueError("entropy of an empty histogram is undefined")
    if np.any(c < 0):
        raise ValueError("histogram counts must be nonnegative")
    total = c.sum()
    if total <= 0:
        raise ValueError("total count must be >= 1")
    p = c[c > 0] / total
    return float(-(p * np.log(p)).sum())


def softmax(z, axis: int = -1) -> np.ndarray:
    """Shift-invariant softmax (max subtraction avoids overflow)."""
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def logsumexp(z, axis: int = -1) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    m = z.max(axis=axis, keepdims=True)
    out = m + np.log(np.exp(z - m).sum(axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


@dataclass(frozen=True)
class PcaModel:
    """Top-k principal axes of centered data.

    components rows are mutually orthonormal; explained_variance holds the
    matching sample-covariance eigenvalues in descending order.
    """

    components: np.ndarray
    mean: np.ndarray
    explained_variance: np.ndarray


def pca_fit(X, k: int) -> PcaModel:
    """Exact PCA via eigendecomposition of the smaller of the DxD
    covariance or the NxN Gram matrix.

    Sign convention: each component's largest-magnitude entry is positive,
    so repeated fits are bit-reproducible.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-D")
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 rows")
    if not (1 <= k <= min(n - 1, d)):
        raise ValueError(f"k must satisfy 1 <= k <= min(N-1, D) = {min(n - 1, d)}, got {k}")

    mean = X.mean(axis=0)
    Xc = X - mean

    if d <= n:
        cov = Xc.T @ Xc / (n - 1)
        evals, evecs = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        components_full = evecs[:, order].T
    else:
        gram = Xc @ Xc.T / (n - 1)
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        evecs = evecs[:, order]
        components_full = np.zeros((n, d))
        for i in range(n):
            if evals[i] > 0:
                components_full[i] = (Xc.T @ evecs[:, i]) / np.sqrt(evals[i] * (n - 1))

    evals = np.maximum(evals, 0.0)
    tol = evals[0] * 1e-12 if evals.size and evals[0] > 0 else 0.0
    rank = int(np.sum(evals > tol))
    if rank < k:
        raise ValueError(f"data rank {rank} is below requested k={k}")

    components = components_full[:k].copy()
    for i in range(k):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]

    return PcaModel(components=components, mean=mean, explained_variance=evals[:k].copy())


def pca_transform(model: PcaModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.mean.shape[0]:
        raise ValueError(f"X must be 2-D with {model.mean.shape[0]} columns")
    return (X - model.mean) @ model.components.T
