"""Confound battery separating class structure from recording structure.

The battery asks four questions about a trained embedding space:
  * record_id_eval     - is the geometry organized by recording identity?
  * label_shuffle_control - does probe accuracy survive breaking the
    label-embedding link at recording granularity? (it should not)
  * logit_space_clustering - do probe logits cluster by class better than
    the raw space?
  * pca_control        - is the logit gain explained by dimensionality
    reduction alone?

run_full_report executes the three headline metrics plus the battery and
assembles an EvalReport. All randomness is derived from one seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import probe as probe_mod
from .clustering import cluster_eval, kmeans, nmi
from .data_model import (
    DiagnosticsBlock,
    EvalReport,
    LabeledDataset,
    config_fingerprint,
    dataset_digest,
    validate_dataset,
)
from .numerics import pca_fit, pca_transform
from .retrieval import retrieval_eval


@dataclass(frozen=True)
class DiagnosticsConfig:
    shuffle_repeats: int = 10
    pca_components: int | None = None  # None -> number of classes
    kmeans_restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.shuffle_repeats < 1:
            raise ValueError(f"shuffle_repeats must be >= 1, got {self.shuffle_repeats}")
        if self.pca_components is not None and self.pca_components < 1:
            raise ValueError(f"pca_components must be >= 1, got {self.pca_components}")
        if self.kmeans_restarts < 1:
            raise ValueError(f"kmeans_restarts must be >= 1, got {self.kmeans_restarts}")


def _sub_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _train_test(ds: LabeledDataset):
    X = ds.embeddings64
    y = ds.class_indices()
    train = ds.split_mask("train")
    test = ds.split_mask("test")
    if not train.any() or not test.any():
        raise ValueError("dataset needs both train and test rows")
    return X[train], y[train], X[test], y[test], train, test


def record_id_eval(
    ds: LabeledDataset, seed: int = 0, restarts: int = 10, n_threads: int = 1
) -> tuple[float, float]:
    """Clustering NMI and retrieval AUC against recording ids on the test set."""
    test_recs = set(ds.recording_ids[ds.split_mask("test")])
    if len(test_recs) < 2:
        raise ValueError(f"record-ID evaluation needs >= 2 test recordings, got {len(test_recs)}")
    nmi_rec, _ = cluster_eval(
        ds, label_field="recording_id", which_split="test",
        seed=seed, restarts=restarts, n_threads=n_threads,
    )
    auc_rec = retrieval_eval(ds, label_field="recording_id").mean_auc
    return nmi_rec, auc_rec


def shuffled_train_labels(ds: LabeledDataset, permutation: np.ndarray) -> np.ndarray:
    """Class indices with train-recording labels permuted across recordings.

    permutation maps position i of the sorted train-recording list to the
    recording whose label it receives; all clips of one recording share the
    same shuffled label, so the recording-level class multiset is intact.
    """
    y = ds.class_indices()
    recs = ds.recording_ids
    train_mask = ds.split_mask("train")
    train_recs = sorted(set(recs[train_mask]))
    if len(permutation) != len(train_recs):
        raise ValueError(f"permutation must have length {len(train_recs)}")

    rec_label = {}
    for rid, yi, is_train in zip(recs, y, train_mask):
        if is_train:
            rec_label[rid] = yi
    new_label = {
        rid: rec_label[train_recs[permutation[i]]] for i, rid in enumerate(train_recs)
    }
    out = y.copy()
    for i in np.nonzero(train_mask)[0]:
        out[i] = new_label[recs[i]]
    return out


def label_shuffle_control(
    ds: LabeledDataset,
    probe_cfg: probe_mod.ProbeConfig,
    repeats: int = 10,
    seed: int = 0,
    permutations=None,
) -> tuple[float, float, list[float]]:
    """Retrain the probe on recording-permuted labels, score on true test labels.

    With the semantic link broken the probe should fall to prior-driven
    accuracy; mean and standard deviation over `repeats` permutations are
    returned. Explicit `permutations` override the seeded draws (used to
    verify the identity permutation recovers the unshuffled accuracy).
    """
    X_tr, _, X_te, y_te, train_mask, _ = _train_test(ds)
    n_train_recs = len(set(ds.recording_ids[train_mask]))
    if n_train_recs < 2:
        raise ValueError("label shuffling needs >= 2 train recordings")

    if permutations is None:
        rng = np.random.Generator(np.random.PCG64(seed))
        permutations = [rng.permutation(n_train_recs) for _ in range(repeats)]

    accuracies = []
    for perm in permutations:
        y_shuf = shuffled_train_labels(ds, np.asarray(perm))
        shuffled_probe = probe_mod.train_probe(
            X_tr, y_shuf[train_mask], probe_cfg, class_names=ds.class_names
        )
        accuracies.append(probe_mod.accuracy(shuffled_probe, X_te, y_te))

    mean = float(np.mean(accuracies))
    std = float(np.std(accuracies, ddof=1)) if len(accuracies) > 1 else 0.0
    return mean, std, accuracies


def logit_space_clustering(
    ds: LabeledDataset,
    probe: probe_mod.LinearProbe,
    seed: int = 0,
    restarts: int = 10,
    n_threads: int = 1,
) -> float:
    """NMI of K-Means run on test logits instead of raw embeddings."""
    _, _, X_te, y_te, _, _ = _train_test(ds)
    z = probe_mod.logits(probe, X_te)
    k = len(probe.class_names)
    result = kmeans(z, k, seed=seed, restarts=restarts, n_threads=n_threads)
    return nmi(y_te, result.assignments)


def pca_control(
    ds: LabeledDataset,
    n_components: int,
    seed: int = 0,
    restarts: int = 10,
    n_threads: int = 1,
) -> float:
    """Class NMI after projecting test rows onto train principal axes."""
    X_tr, _, X_te, y_te, _, _ = _train_test(ds)
    if X_te.shape[0] < n_components + 1:
        raise ValueError(
            f"PCA control needs more test rows than components ({X_te.shape[0]} vs {n_components})"
        )
    model = pca_fit(X_tr, n_components)
    Z = pca_transform(model, X_te)
    k = len(ds.class_names)
    result = kmeans(Z, k, seed=seed, restarts=restarts, n_threads=n_threads)
    return nmi(y_te, result.assignments)


def run_full_report(
    ds: LabeledDataset,
    probe_cfg: probe_mod.ProbeConfig = probe_mod.ProbeConfig(),
    diag_cfg: DiagnosticsConfig = DiagnosticsConfig(),
    dataset_name: str | None = None,
    probe: probe_mod.LinearProbe | None = None,
    n_threads: int = 1,
) -> EvalReport:
    """Run probe, clustering, retrieval and the whole confound battery."""
    violations = validate_dataset(ds)
    if violations:
        raise ValueError("dataset is invalid: " + "; ".join(violations[:5]))

    X_tr, y_tr, X_te, y_te, _, _ = _train_test(ds)
    seeds = _sub_seeds(diag_cfg.seed, 5)
    restarts = diag_cfg.kmeans_restarts

    if probe is None:
        probe = probe_mod.train_probe(X_tr, y_tr, probe_cfg, class_names=ds.class_names)
    probe_acc = probe_mod.accuracy(probe, X_te, y_te)
    per_class = probe_mod.per_class_accuracy(probe, X_te, y_te)

    nmi_class, _ = cluster_eval(
        ds, label_field="class", which_split="test",
        seed=seeds[0], restarts=restarts, n_threads=n_threads,
    )
    mean_auc = retrieval_eval(ds, label_field="class").mean_auc

    nmi_rec, auc_rec = record_id_eval(ds, seed=seeds[1], restarts=restarts, n_threads=n_threads)
    shuffle_mean, shuffle_std, shuffle_all = label_shuffle_control(
        ds, probe_cfg, repeats=diag_cfg.shuffle_repeats, seed=seeds[2]
    )
    nmi_logits = logit_space_clustering(ds, probe, seed=seeds[3], restarts=restarts, n_threads=n_threads)
    n_components = diag_cfg.pca_components or len(ds.class_names)
    nmi_pca = pca_control(ds, n_components, seed=seeds[4], restarts=restarts, n_threads=n_threads)

    _, histogram = probe_mod.feature_importance(probe, X_te, y_te)

    fingerprint = config_fingerprint(
        {
            "model_id": ds.table.model_id,
            "dataset": dataset_name or ds.meta[0].dataset,
            "data": dataset_digest(ds),
            "probe": {
                "l2_lambda": probe_cfg.l2_lambda,
                "max_iters": probe_cfg.max_iters,
                "grad_tol": probe_cfg.grad_tol,
                "learning_rate": probe_cfg.learning_rate,
                "seed": probe_cfg.seed,
            },
            "diagnostics": {
                "shuffle_repeats": diag_cfg.shuffle_repeats,
                "pca_components": n_components,
                "kmeans_restarts": restarts,
                "seed": diag_cfg.seed,
            },
        }
    )

    return EvalReport(
        model_id=ds.table.model_id,
        dataset=dataset_name or ds.meta[0].dataset,
        probe_accuracy=probe_acc,
        per_class_accuracy=per_class,
        nmi_class=nmi_class,
        mean_roc_auc=mean_auc,
        diagnostics=DiagnosticsBlock(
            nmi_recording=nmi_rec,
            auc_recording=auc_rec,
            shuffle_mean_accuracy=shuffle_mean,
            shuffle_std_accuracy=shuffle_std,
            shuffle_accuracies=tuple(shuffle_all),
            nmi_logits=nmi_logits,
            nmi_pca=nmi_pca,
            ablation=histogram,
        ),
        config_fingerprint=fingerprint,
        seed=diag_cfg.seed,
    )
