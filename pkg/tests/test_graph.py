import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chebfilter.errors import CapacityError, LabelError, NodeIndexError, ParseError
from chebfilter.graph import (Graph, generate_synthetic, homophily, load_dataset, read_edge_list,
                              read_split)

from conftest import write_dataset


def test_from_edges_symmetrizes_and_dedups():
    g = Graph.from_edges(4, [(0, 1), (1, 0), (1, 2), (2, 2), (1, 2)])
    assert g.m == 2
    a = g.dense_adjacency()
    assert np.array_equal(a, a.T)
    assert np.trace(a) == 0
    assert g.edges().tolist() == [[0, 1], [1, 2]]
    assert g.degrees.tolist() == [1, 2, 1, 0]
    assert g.neighbors(1).tolist() == [0, 2]


def test_out_of_range_edge():
    with pytest.raises(NodeIndexError):
        Graph.from_edges(3, [(0, 3)])


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 15).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                                             max_size=40))))
def test_csr_matches_dense_construction(case):
    n, edges = case
    g = Graph.from_edges(n, edges)
    ref = np.zeros((n, n))
    for u, v in edges:
        if u != v:
            ref[u, v] = ref[v, u] = 1.0
    assert np.array_equal(g.dense_adjacency(), ref)
    assert g.m == int(ref.sum()) // 2
    assert np.all(np.diff(g.indptr) >= 0)


def test_load_dataset_roundtrip(tmp_path):
    paths = write_dataset(tmp_path, [(0, 1), (1, 2)], np.eye(3), [0, 1, 1])
    ds = load_dataset(*paths)
    assert (ds.n, ds.graph.m, ds.num_classes) == (3, 2, 2)


def test_edge_file_parse_error_has_line(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("# header\n0 1\n1 x\n")
    with pytest.raises(ParseError) as info:
        read_edge_list(p)
    assert info.value.lineno == 3
    assert str(p) in str(info.value)


def test_edge_beyond_feature_rows(tmp_path):
    paths = write_dataset(tmp_path, [(0, 5)], np.eye(3), [0, 1, 1])
    with pytest.raises(NodeIndexError):
        load_dataset(*paths)


def test_label_count_mismatch(tmp_path):
    paths = write_dataset(tmp_path, [(0, 1)], np.eye(3), [0, 1])
    with pytest.raises(LabelError):
        load_dataset(*paths)


def test_label_exceeds_class_count(tmp_path):
    paths = write_dataset(tmp_path, [(0, 1)], np.eye(3), [0, 1, 4])
    with pytest.raises(LabelError):
        load_dataset(*paths, num_classes=3)


def test_read_split(tmp_path):
    p = tmp_path / "split.json"
    p.write_text(json.dumps({"train": [0], "val": [1], "test": [2]}))
    assert read_split(p, 3)["test"].tolist() == [2]
    with pytest.raises(NodeIndexError):
        read_split(p, 2)


def test_homophily_two_nodes():
    from chebfilter.graph import Dataset
    g = Graph.from_edges(2, [(0, 1)])
    assert homophily(Dataset(g, np.eye(2), np.array([0, 0]), 1)) == 1.0
    assert homophily(Dataset(g, np.eye(2), np.array([0, 1]), 2)) == 0.0


def test_homophily_isolated_node_counts_zero():
    from chebfilter.graph import Dataset
    g = Graph.from_edges(3, [(0, 1)])
    assert homophily(Dataset(g, np.eye(3), np.array([0, 0, 0]), 1)) == pytest.approx(2 / 3)


def test_synthetic_homophily_regimes():
    assert homophily(generate_synthetic(200, "homophilic", 0)) > 0.8
    assert homophily(generate_synthetic(200, "heterophilic", 0)) < 0.2


def test_synthetic_deterministic():
    a = generate_synthetic(64, "heterophilic", 3)
    b = generate_synthetic(64, "heterophilic", 3)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.graph.indices, b.graph.indices)
    assert np.array_equal(a.labels, b.labels)


def test_synthetic_capacity():
    with pytest.raises(CapacityError):
        generate_synthetic(4, "homophilic")
    with pytest.raises(CapacityError):
        generate_synthetic(21, "heterophilic")
