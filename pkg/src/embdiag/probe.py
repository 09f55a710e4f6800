"""Multinomial logistic-regression linear probe.

Training is full-batch gradient descent on softmax cross-entropy plus an
L2 penalty on the weights, with halving backtracking, so runs are
bit-reproducible and the recorded loss trace is nonincreasing. Inputs are
standardized with train statistics inside the probe; feature ablation
zeroes standardized columns, which equals train-mean imputation in raw
space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import AblationHistogram
from .numerics import Standardizer, apply_standardizer, fit_standardizer, logsumexp, softmax

_MIN_STEP = 1e-20


@dataclass(frozen=True)
class ProbeConfig:
    l2_lambda: float = 1e-4
    max_iters: int = 1000
    grad_tol: float = 1e-6
    learning_rate: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.l2_lambda < 0:
            raise ValueError(f"l2_lambda must be >= 0, got {self.l2_lambda}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.grad_tol <= 0:
            raise ValueError(f"grad_tol must be > 0, got {self.grad_tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")


@dataclass(frozen=True)
class LinearProbe:
    weights: np.ndarray  # C x D, in standardized space
    bias: np.ndarray  # C
    standardizer: Standardizer
    class_names: tuple[str, ...]
    train_loss_trace: tuple[float, ...]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def _one_hot(y: np.ndarray, c: int) -> np.ndarray:
    out = np.zeros((y.shape[0], c))
    out[np.arange(y.shape[0]), y] = 1.0
    return out


def probe_loss_and_grad(W, b, Xs, y, l2_lambda):
    """Mean cross-entropy + (lambda/2)|W|^2 and its analytic gradient."""
    n = Xs.shape[0]
    z = Xs @ W.T + b
    loss = float(np.mean(logsumexp(z, axis=1) - z[np.arange(n), y]))
    loss += 0.5 * l2_lambda * float((W * W).sum())
    delta = softmax(z, axis=1) - _one_hot(y, W.shape[0])
    grad_w = delta.T @ Xs / n + l2_lambda * W
    grad_b = delta.mean(axis=0)
    return loss, grad_w, grad_b


def train_probe(X_train, y_train, cfg: ProbeConfig = ProbeConfig(), class_names=None) -> LinearProbe:
    """Fit the probe from zero-initialized parameters.

    The objective is convex, so backtracking guarantees every accepted step
    lowers the loss; training stops when the gradient infinity-norm falls
    below grad_tol or after max_iters accepted steps.
    """
    X = np.asarray(X_train, dtype=np.float64)
    y = np.asarray(y_train, dtype=np.int64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X_train must be N x D and y_train length N")
    if not np.isfinite(X).all():
        raise ValueError("X_train contains non-finite values")

    c = int(y.max()) + 1 if y.size else 0
    if c < 2:
        raise ValueError(f"need at least 2 classes, got {c}")
    present = np.bincount(y, minlength=c)
    if (present == 0).any():
        missing = np.nonzero(present == 0)[0].tolist()
        raise ValueError(f"classes {missing} have no training rows")
    if X.shape[0] < c:
        raise ValueError(f"need at least C={c} training rows, got {X.shape[0]}")
    if class_names is None:
        class_names = tuple(str(i) for i in range(c))
    elif len(class_names) != c:
        raise ValueError(f"class_names must have {c} entries")

    std = fit_standardizer(X)
    Xs = apply_standardizer(std, X)

    W = np.zeros((c, X.shape[1]))
    b = np.zeros(c)
    loss, gw, gb = probe_loss_and_grad(W, b, Xs, y, cfg.l2_lambda)
    trace = [loss]

    for _ in range(cfg.max_iters):
        if max(np.abs(gw).max(), np.abs(gb).max()) < cfg.grad_tol:
            break
        step = cfg.learning_rate
        while step >= _MIN_STEP:
            w_new = W - step * gw
            b_new = b - step * gb
            loss_new, gw_new, gb_new = probe_loss_and_grad(w_new, b_new, Xs, y, cfg.l2_lambda)
            if loss_new < loss:
                break
            step *= 0.5
        if step < _MIN_STEP:
            break  # no descent step representable; numerically converged
        W, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
        trace.append(loss)

    return LinearProbe(
        weights=W,
        bias=b,
        standardizer=std,
        class_names=tuple(class_names),
        train_loss_trace=tuple(trace),
    )


def logits(probe: LinearProbe, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != probe.dim:
        raise ValueError(f"X must be 2-D with {probe.dim} columns, got {X.shape}")
    return apply_standardizer(probe.standardizer, X) @ probe.weights.T + probe.bias


def predict(probe: LinearProbe, X) -> np.ndarray:
    """Argmax class index per row; ties resolve to the lowest index."""
    return np.argmax(logits(probe, X), axis=1)


def accuracy(probe: LinearProbe, X_test, y_test) -> float:
    y = np.asarray(y_test, dtype=np.int64)
    if y.size == 0:
        raise ValueError("test set is empty")
    preds = predict(probe, X_test)
    if preds.shape[0] != y.shape[0]:
        raise ValueError("X_test and y_test lengths differ")
    return float(np.mean(preds == y))


def per_class_accuracy(probe: LinearProbe, X_test, y_test) -> dict[str, float]:
    y = np.asarray(y_test, dtype=np.int64)
    preds = predict(probe, X_test)
    out = {}
    for idx, name in enumerate(probe.class_names):
        mask = y == idx
        if mask.any():
            out[name] = float(np.mean(preds[mask] == idx))
    return out


def ablation_histogram(drops_pct: np.ndarray, bin_width_pct: float = 0.5) -> AblationHistogram:
    """Fixed-width histogram with edges aligned to multiples of the width."""
    lo = int(np.floor(drops_pct.min() / bin_width_pct))
    hi = int(np.ceil(drops_pct.max() / bin_width_pct))
    if hi <= lo:
        hi = lo + 1
    edges = np.arange(lo, hi + 1) * bin_width_pct
    counts, _ = np.histogram(drops_pct, bins=edges)
    return AblationHistogram(
        bin_width_pct=bin_width_pct,
        bin_edges_pct=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
    )


def feature_importance(probe: LinearProbe, X_test, y_test) -> tuple[np.ndarray, AblationHistogram]:
    """Accuracy drop from zeroing each standardized feature, one at a time.

    Returns (drops, histogram): drops[d] is baseline accuracy minus the
    accuracy with feature d ablated, as a fraction; the histogram uses
    0.5-percentage-point bins.
    """
    X = np.asarray(X_test, dtype=np.float64)
    y = np.asarray(y_test, dtype=np.int64)
    base_logits = logits(probe, X)
    baseline = float(np.mean(np.argmax(base_logits, axis=1) == y))

    Xs = apply_standardizer(probe.standardizer, X)
    drops = np.empty(probe.dim)
    for d in range(probe.dim):
        ablated = base_logits - np.outer(Xs[:, d], probe.weights[:, d])
        acc = float(np.mean(np.argmax(ablated, axis=1) == y))
        drops[d] = baseline - acc
    return drops, ablation_histogram(drops * 100.0)


def probe_to_dict(probe: LinearProbe) -> dict:
    return {
        "class_names": list(probe.class_names),
        "weights": probe.weights.tolist(),
        "bias": probe.bias.tolist(),
        "standardizer": {
            "means": probe.standardizer.means.tolist(),
            "stds": probe.standardizer.stds.tolist(),
        },
        "final_train_loss": probe.train_loss_trace[-1],
    }


def probe_from_dict(d: dict) -> LinearProbe:
    return LinearProbe(
        weights=np.asarray(d["weights"], dtype=np.float64),
        bias=np.asarray(d["bias"], dtype=np.float64),
        standardizer=Standardizer(
            means=np.asarray(d["standardizer"]["means"], dtype=np.float64),
            stds=np.asarray(d["standardizer"]["stds"], dtype=np.float64),
        ),
        class_names=tuple(d["class_names"]),
        train_loss_trace=(float(d["final_train_loss"]),),
    )
