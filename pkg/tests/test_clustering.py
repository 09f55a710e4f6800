import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embdiag.clustering import ContingencyTable, cluster_eval, kmeans, nmi
from conftest import make_dataset


def nmi_oracle(y, c):
    """Direct contingency evaluation of 2*I/(H(Y)+H(C)), pure Python."""
    n = len(y)
    joint = Counter(zip(y, c))
    py = Counter(y)
    pc = Counter(c)

    def H(counter):
        return -sum((v / n) * math.log(v / n) for v in counter.values())

    I = sum(
        (v / n) * math.log((v / n) / ((py[a] / n) * (pc[b] / n)))
        for (a, b), v in joint.items()
    )
    hy, hc = H(py), H(pc)
    if hy + hc == 0:
        return 1.0
    return 2.0 * I / (hy + hc)


# ---------------------------------------------------------------------------
# NMI
# ---------------------------------------------------------------------------

def test_nmi_relabeled_perfect_match():
    assert nmi([0, 0, 1, 1], [1, 1, 0, 0]) == pytest.approx(1.0, abs=1e-12)


def test_nmi_independent_partitions():
    assert nmi([0, 0, 1, 1], [0, 1, 0, 1]) == pytest.approx(0.0, abs=1e-12)


def test_nmi_hand_case():
    # I = 0.21576, H(Y) = 0.69315, H(C) = 0.56234
    assert nmi([0, 0, 1, 1], [0, 0, 0, 1]) == pytest.approx(0.3437, abs=1e-4)


def test_nmi_trivial_partitions_define_0_over_0_as_one():
    assert nmi([7, 7, 7], ["x", "x", "x"]) == 1.0
    assert nmi([7, 7, 7], ["x", "x", "y"]) == 0.0


def test_nmi_length_mismatch():
    with pytest.raises(ValueError, match="length"):
        nmi([0, 1], [0, 1, 2])


def test_nmi_matches_oracle_on_random_pairs():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(1, 51))
        ky = int(rng.integers(1, 7))
        kc = int(rng.integers(1, 7))
        y = rng.integers(0, ky, size=n).tolist()
        c = rng.integers(0, kc, size=n).tolist()
        assert abs(nmi(y, c) - nmi_oracle(y, c)) < 1e-9


@settings(max_examples=100, deadline=None)
@given(
    n=st.integers(min_value=1, max_value=40),
    seed=st.integers(min_value=0, max_value=2**16),
)
def test_nmi_symmetry_and_range(n, seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 4, size=n).tolist()
    c = rng.integers(0, 3, size=n).tolist()
    a = nmi(y, c)
    assert 0.0 <= a <= 1.0
    assert a == pytest.approx(nmi(c, y), abs=1e-12)
    perm = {0: 2, 1: 0, 2: 3, 3: 1}
    assert nmi(y, [perm[v] for v in y]) == pytest.approx(1.0, abs=1e-12)


def test_contingency_table_counts():
    t = ContingencyTable.from_labels(["a", "a", "b"], [0, 1, 1])
    assert t.row_labels == ("a", "b")
    assert t.col_labels == (0, 1)
    np.testing.assert_array_equal(t.counts, [[1, 1], [0, 1]])
    assert t.counts.sum() == 3


# ---------------------------------------------------------------------------
# kmeans
# ---------------------------------------------------------------------------

def test_kmeans_well_separated_pairs():
    X = np.array([[0, 0], [0, 0.1], [10, 10], [10, 10.1]])
    for seed in range(5):
        result = kmeans(X, 2, seed=seed)
        a = result.assignments
        assert a[0] == a[1] and a[2] == a[3] and a[0] != a[2]


def test_kmeans_k_equals_n_zero_inertia(rng):
    X = rng.normal(size=(6, 3))
    result = kmeans(X, 6, seed=0)
    assert result.inertia == 0.0


def test_kmeans_beats_random_assignments(rng):
    X = rng.normal(size=(30, 4))
    result = kmeans(X, 3, seed=1)
    for _ in range(1000):
        assign = rng.integers(0, 3, size=30)
        # give every cluster at least one point
        assign[:3] = [0, 1, 2]
        sse = 0.0
        for j in range(3):
            pts = X[assign == j]
            sse += ((pts - pts.mean(axis=0)) ** 2).sum()
        assert result.inertia <= sse + 1e-9


def test_kmeans_inertia_trace_nonincreasing(rng):
    for _ in range(30):
        X = rng.normal(size=(rng.integers(10, 40), rng.integers(2, 6)))
        result = kmeans(X, int(rng.integers(2, 5)), seed=int(rng.integers(1000)), restarts=1)
        trace = np.array(result.inertia_trace)
        assert np.all(np.diff(trace) <= 1e-9)


def test_kmeans_deterministic_for_fixed_inputs(rng):
    X = rng.normal(size=(25, 3))
    r1 = kmeans(X, 4, seed=42, restarts=5)
    r2 = kmeans(X, 4, seed=42, restarts=5)
    np.testing.assert_array_equal(r1.assignments, r2.assignments)
    np.testing.assert_array_equal(r1.centroids, r2.centroids)


def test_kmeans_threaded_matches_serial(rng):
    X = rng.normal(size=(40, 4))
    serial = kmeans(X, 3, seed=9, restarts=6, n_threads=1)
    threaded = kmeans(X, 3, seed=9, restarts=6, n_threads=4)
    np.testing.assert_array_equal(serial.assignments, threaded.assignments)


def test_kmeans_inertia_consistent_with_assignments(rng):
    X = rng.normal(size=(30, 5))
    result = kmeans(X, 4, seed=3)
    recomputed = ((X - result.centroids[result.assignments]) ** 2).sum()
    assert result.inertia == pytest.approx(recomputed, rel=1e-6)


def test_kmeans_duplicate_points_fill_all_clusters():
    X = np.array([[0.0, 0.0]] * 3 + [[1.0, 1.0]] * 2)
    result = kmeans(X, 4, seed=0)
    assert len(set(result.assignments.tolist())) == 4


def test_kmeans_argument_validation(rng):
    X = rng.normal(size=(4, 2))
    with pytest.raises(ValueError, match="k="):
        kmeans(X, 5, seed=0)
    with pytest.raises(ValueError, match="k must be"):
        kmeans(X, 0, seed=0)
    with pytest.raises(ValueError, match="non-finite"):
        kmeans(np.array([[np.nan, 0.0]]), 1, seed=0)


# ---------------------------------------------------------------------------
# cluster_eval
# ---------------------------------------------------------------------------

def _one_hot_dataset(n_per_class=6, n_classes=3):
    rows, recs, labels, splits = [], [], [], []
    for c in range(n_classes):
        for j in range(n_per_class):
            row = np.zeros(n_classes)
            row[c] = 1.0
            rows.append(row)
            recs.append(f"rec{c}")
            labels.append(f"L{c}")
            splits.append("test")
    return make_dataset(np.array(rows), recs, labels, splits)


def test_cluster_eval_one_hot_geometry_perfect():
    ds = _one_hot_dataset()
    score, result = cluster_eval(ds, label_field="class", which_split="test", seed=0)
    assert score == pytest.approx(1.0, abs=1e-12)
    assert result.centroids.shape[0] == 3


def test_cluster_eval_k_follows_recording_count():
    ds = _one_hot_dataset(n_per_class=4, n_classes=5)
    _, result = cluster_eval(ds, label_field="recording_id", which_split="test", seed=0)
    assert result.centroids.shape[0] == 5


def test_cluster_eval_k_never_exceeds_rows():
    # K is the number of distinct label values inside the selection, so the
    # kmeans precondition K <= N holds by construction even for singletons
    rows = np.eye(3)
    ds = make_dataset(rows, recs=["r0", "r1", "r2"], labels=["A", "B", "C"],
                      splits=["test", "test", "train"])
    _, result = cluster_eval(ds, label_field="class", which_split="test", seed=0)
    assert result.centroids.shape[0] == 2


def test_cluster_eval_split_all_uses_everything():
    ds = _one_hot_dataset()
    score_all, result = cluster_eval(ds, label_field="class", which_split="all", seed=0)
    assert result.assignments.shape[0] == ds.table.count
    assert score_all == pytest.approx(1.0, abs=1e-12)


def test_cluster_eval_empty_split_rejected():
    ds = _one_hot_dataset()  # everything is test
    from dataclasses import replace
    meta = tuple(replace(m, split="train") for m in ds.meta)
    from embdiag.data_model import LabeledDataset
    ds_train_only = LabeledDataset(table=ds.table, meta=meta)
    with pytest.raises(ValueError, match="empty"):
        cluster_eval(ds_train_only, which_split="test", seed=0)
