import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import loop_nearest

from poselift.datagen import Camera, DatasetRecord
from poselift.errors import ContractViolation, FormatVersionError
from poselift.lookup import (
    LookupTable,
    build,
    cluster,
    kmeans,
    pca,
    pca_table,
    query,
    query_many,
    read_table,
    table_from_text,
    table_to_text,
    write_table,
)


def toy_table(poses, actions=None, soft=(0, 1)):
    poses = np.asarray(poses, dtype=float)
    n = len(poses)
    actions = actions or ["A"] * n
    return LookupTable(poses, tuple(actions), tuple(range(n)), tuple(f"e{i}" for i in range(n)), soft, "toy")


def random_table(seed, n=200, k_d=6, soft=(0, 2, 3)):
    rng = np.random.default_rng(seed)
    return toy_table(rng.uniform(size=(n, k_d, 3)), soft=soft)


def test_build_one_entry_per_record(macaque_records, macaque_table):
    assert len(macaque_table) == 8000
    assert macaque_table.record_ids == tuple(r.id for r in macaque_records)
    for i in (0, 1234, 7999):
        assert np.array_equal(macaque_table.poses[i], macaque_records[i].k3d_norm)


def test_build_rejects_empty_and_mixed():
    with pytest.raises(ContractViolation):
        build([])
    cam = Camera(np.array([0.0, 0, 3]), np.zeros(3), 1.0, (10, 10))
    a = DatasetRecord("a", "macaque", "Idle", 0, np.zeros((13, 2)), np.zeros((29, 3)), cam, 1.0)
    b = DatasetRecord("b", "macaque", "Idle", 0, np.zeros((13, 2)), np.zeros((30, 3)), cam, 1.0)
    with pytest.raises(ContractViolation):
        build([a, b])


def test_table_invariants():
    with pytest.raises(ContractViolation):
        toy_table([[[0, 0, 0], [2, 0, 0]]])
    with pytest.raises(ContractViolation):
        toy_table([[[0, 0, 0], [1, 0, 0]]], soft=(0, 5))


def test_exact_match_and_hand_computed_neighbor():
    table = toy_table(
        [
            [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, 0.5, 0.5]],
            [[0.0, 0.0, 1.0], [1.0, 1.0, 0.0], [0.5, 0.5, 0.5]],
        ]
    )
    r = query(table, [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    assert (r.index, r.distance) == (0, 0.0)
    # Distances: entry 0 -> sqrt(0.2^2 + 0.6^2) = 0.632..., entry 1 -> sqrt(0.8^2 + 0.4^2) = 0.894...
    r = query(table, [[0.0, 0.0, 0.2], [1.0, 0.6, 0.0]])
    assert r.index == 0 and np.isclose(r.distance, np.sqrt(0.04 + 0.36))
    assert np.array_equal(r.deep_pose, table.poses[0])


def test_ties_go_to_lowest_index():
    pose = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]
    table = toy_table([pose, pose, pose])
    for brute in (False, True):
        assert query(table, pose, brute_force=brute).index == 0


def test_query_shape_check():
    table = random_table(0)
    with pytest.raises(ContractViolation):
        query(table, np.zeros((4, 3)))


@given(st.integers(0, 2**32 - 1))
def test_tree_and_scan_agree_with_loop_oracle(seed):
    table = random_table(seed % 1000, n=60)
    rng = np.random.default_rng(seed)
    qs = rng.uniform(-0.2, 1.2, size=(5, 3, 3))
    tree = query_many(table, qs)
    scan = query_many(table, qs, brute_force=True)
    assert np.array_equal(tree[0], scan[0]) and np.array_equal(tree[1], scan[1])
    for q, i, d in zip(qs, *scan):
        j, dj = loop_nearest(table.soft_vectors, q.ravel())
        assert i == j and abs(d - dj) < 1e-12


def test_self_queries_return_zero(macaque_table):
    sample = np.arange(0, len(macaque_table), 97)
    soft = macaque_table.soft_vectors[sample].reshape(len(sample), -1, 3)
    for brute in (False, True):
        idx, dist = query_many(macaque_table, soft, brute_force=brute)
        assert np.array_equal(idx, sample) and np.all(dist == 0.0)


def test_table_file_round_trip(tmp_path, macaque_table):
    path = tmp_path / "t.jsonl"
    write_table(path, macaque_table)
    assert read_table(path) == macaque_table
    text = path.read_text()
    assert table_to_text(read_table(path)) == text


def test_table_file_checks():
    text = table_to_text(random_table(1, n=5))
    with pytest.raises(FormatVersionError):
        table_from_text(text.replace('"format_version":1', '"format_version":2', 1))
    head, body = text.split("\n", 1)
    with pytest.raises(ContractViolation):
        table_from_text(head + "\n" + body.replace("0.", "1.", 1))


# ---------------------------------------------------------------- PCA


def test_pca_collinear_points():
    t = np.linspace(-1, 1, 11)
    res = pca(np.c_[t, t], 2)
    assert np.allclose(np.abs(res.components[0]), [1 / np.sqrt(2)] * 2)
    assert res.rank_deficient and len(res.components) == 1
    assert np.isclose(res.eigenvalues[1], 0.0, atol=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_pca_identities(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(40, 6)) @ rng.normal(size=(6, 6))
    res = pca(x, 6)
    assert np.allclose(res.components @ res.components.T, np.eye(6), atol=1e-9)
    assert np.allclose(res.projections.var(axis=0), res.explained_variance, atol=1e-8)
    assert np.all(np.diff(res.explained_variance) <= 0)
    assert np.allclose(res.reconstruct(), x, atol=1e-9)
    for c in res.components:
        assert c[np.argmax(np.abs(c))] > 0


def test_pca_table_shape(macaque_table):
    res = pca_table(macaque_table, 2)
    assert res.projections.shape == (8000, 2)
    assert np.allclose(res.components @ res.components.T, np.eye(2), atol=1e-9)


def test_pca_needs_two_rows():
    with pytest.raises(ContractViolation):
        pca(np.zeros((1, 3)))


# ---------------------------------------------------------------- k-means


def test_kmeans_separated_blobs():
    rng = np.random.default_rng(2)
    a = rng.normal(0.1, 0.01, size=(30, 2, 3)).clip(0, 1)
    b = rng.normal(0.9, 0.01, size=(25, 2, 3)).clip(0, 1)
    table = toy_table(np.r_[a, b], ["near"] * 30 + ["far"] * 25)
    report = cluster(table, k=2, seed=0)
    labels = report.assignments
    assert len(set(labels[:30])) == 1 and len(set(labels[30:])) == 1 and labels[0] != labels[-1]
    assert report.purity == (1.0, 1.0)


@pytest.mark.parametrize("duplicates", [False, True])
def test_kmeans_k_equals_n(duplicates):
    x = np.random.default_rng(3).uniform(size=(12, 4))
    if duplicates:
        x[5] = x[2]
    res = kmeans(x, k=12, seed=0)
    assert sorted(res.labels.tolist()) == list(range(12))
    assert res.inertia == 0.0


@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_kmeans_inertia_non_increasing(seed, k):
    x = np.random.default_rng(seed).normal(size=(80, 3))
    res = kmeans(x, k=k, seed=seed % 100, n_init=1)
    hist = np.array(res.inertia_history)
    assert np.all(np.diff(hist) <= 1e-12 * hist[0])


def test_kmeans_rejects_bad_k():
    with pytest.raises(ContractViolation):
        kmeans(np.zeros((3, 2)), k=4)


def test_cluster_report_csv(macaque_table):
    small = LookupTable(
        macaque_table.poses[::40],
        macaque_table.actions[::40],
        macaque_table.frame_indices[::40],
        macaque_table.record_ids[::40],
        macaque_table.soft_subset,
        "macaque",
    )
    report = cluster(small, k=10, seed=0)
    assert len(report.assignments) == len(small)
    assert all(0 <= p <= 1 for p in report.purity)
    assert sum(report.sizes) == len(small)
    rows = report.entries_csv(small).splitlines()
    assert rows[0] == "entry_id,cluster,action,pc1,pc2" and len(rows) == len(small) + 1
    summary = report.summary_csv().splitlines()
    assert summary[0] == "cluster,size,majority_action,purity" and len(summary) == 11
    assert cluster(small, k=10, seed=0).summary_csv() == report.summary_csv()
