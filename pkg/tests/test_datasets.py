import warnings

import numpy as np
import pytest

from magcnn.datasets import FeatureScheme, assign_node_features, load_tu_dataset
from magcnn.errors import ConfigurationError, FormatError, LoadError
from magcnn.graph import Graph
from synthetic import make_dataset, random_molecule, write_tu


def write(directory, name, **files):
    for suffix, text in files.items():
        (directory / f"{name}_{suffix}.txt").write_bytes(text.encode())


@pytest.fixture
def triangle_dir(tmp_path):
    write(tmp_path, "TRI", A="1, 2\n2, 3\n3, 1\n", graph_indicator="1\n1\n1\n",
          graph_labels="5\n")
    return tmp_path


def test_triangle_fixture(triangle_dir):
    ds = load_tu_dataset(triangle_dir, "TRI")
    assert len(ds) == 1 and ds.class_count == 1
    g = ds.graphs[0]
    assert g.node_count == 3 and g.edge_count == 3
    assert g.node_labels is None
    assert ds.raw_class_labels == (5,) and ds.labels == (0,)


def test_crlf_and_whitespace(tmp_path):
    write(tmp_path, "W", A=" 1 ,2\r\n2,  1\r\n\r\n3 , 4 \r\n", graph_indicator="1\r\n1\r\n2\r\n2\r\n",
          graph_labels="-1\r\n1\r\n")
    ds = load_tu_dataset(tmp_path, "W")
    assert [g.edge_count for g in ds.graphs] == [1, 1]
    assert ds.labels == (0, 1)


def test_missing_required_file(tmp_path):
    write(tmp_path, "X", A="1, 2\n", graph_indicator="1\n1\n")
    with pytest.raises(LoadError, match="X_graph_labels.txt"):
        load_tu_dataset(tmp_path, "X")


def test_absent_graph_id_reports_line(tmp_path):
    write(tmp_path, "X", A="1, 2\n", graph_indicator="1\n1\n3\n", graph_labels="0\n1\n")
    with pytest.raises(FormatError, match=r"graph_indicator.txt:3"):
        load_tu_dataset(tmp_path, "X")


def test_non_integer_token(tmp_path):
    write(tmp_path, "X", A="1, 2\n2, x\n", graph_indicator="1\n1\n", graph_labels="0\n")
    with pytest.raises(FormatError, match=r"X_A.txt:2"):
        load_tu_dataset(tmp_path, "X")


def test_edge_across_graphs(tmp_path):
    write(tmp_path, "X", A="1, 3\n", graph_indicator="1\n1\n2\n", graph_labels="0\n1\n")
    with pytest.raises(FormatError, match="joins graphs"):
        load_tu_dataset(tmp_path, "X")


def test_self_loop_and_repeat_warn(tmp_path):
    write(tmp_path, "X", A="1, 1\n1, 2\n2, 1\n1, 2\n", graph_indicator="1\n1\n", graph_labels="0\n")
    with pytest.warns(UserWarning) as record:
        ds = load_tu_dataset(tmp_path, "X")
    messages = [str(w.message) for w in record]
    assert any("self-loop" in m for m in messages)
    assert any("repeated" in m for m in messages)
    assert ds.graphs[0].edges == ((0, 1, 1),)


def test_reciprocal_rows_merge_silently(tmp_path):
    write(tmp_path, "X", A="1, 2\n2, 1\n", graph_indicator="1\n1\n", graph_labels="0\n")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ds = load_tu_dataset(tmp_path, "X")
    assert ds.graphs[0].edge_count == 1


def test_bond_multiplicity_table(tmp_path):
    write(tmp_path, "X", A="1, 2\n2, 1\n2, 3\n3, 2\n", graph_indicator="1\n1\n1\n",
          graph_labels="0\n", edge_labels="2\n2\n0\n0\n")
    ds = load_tu_dataset(tmp_path, "X")
    assert ds.graphs[0].edges == ((0, 1, 2), (1, 2, 1))
    ds = load_tu_dataset(tmp_path, "X", bond_multiplicity={0: 3, 2: 1})
    assert ds.graphs[0].edges == ((0, 1, 1), (1, 2, 3))


def test_file_prefix(tmp_path):
    write(tmp_path, "PTC_MR", A="1, 2\n", graph_indicator="1\n1\n", graph_labels="1\n")
    ds = load_tu_dataset(tmp_path, "PTC", file_prefix="PTC_MR")
    assert ds.name == "PTC" and len(ds) == 1


def test_synthetic_recount(tmp_path):
    rng = np.random.default_rng(11)
    labels = [int(x) for x in rng.integers(0, 2, 30)]
    graphs = [random_molecule(rng, y) for y in labels]
    write_tu(tmp_path, "S", graphs, labels)
    ds = load_tu_dataset(tmp_path, "S")
    assert len(ds) == 30
    assert [g.node_count for g in ds.graphs] == [len(a) for a, _ in graphs]
    assert [g.edge_count for g in ds.graphs] == [len(e) for _, e in graphs]
    assert sum(g.node_count for g in ds.graphs) == len(
        (tmp_path / "S_graph_indicator.txt").read_text().split())
    assert ds.mean_nodes == pytest.approx(np.mean([len(a) for a, _ in graphs]))
    for g, (atoms, edges) in zip(ds.graphs, graphs):
        assert g.node_labels == tuple(atoms)
        expect = Graph.from_edges(len(atoms), [(u, v, {0: 1, 1: 1, 2: 2}[b]) for u, v, b in edges])
        assert g.edges == expect.edges


def test_label_remap_sorted(tmp_path):
    write(tmp_path, "X", A="", graph_indicator="1\n2\n3\n", graph_labels="7\n-1\n3\n")
    ds = load_tu_dataset(tmp_path, "X")
    assert ds.labels == (2, 0, 1) and ds.class_count == 3
    assert ds.class_counts == [1, 1, 1]


def test_load_is_deterministic(synth_dir):
    assert load_tu_dataset(synth_dir, "SYNTH") == load_tu_dataset(synth_dir, "SYNTH")


def test_one_hot_features(synth_dir):
    fds = assign_node_features(load_tu_dataset(synth_dir, "SYNTH"), FeatureScheme.ONE_HOT_LABEL)
    vocab = sorted({lab for g in fds.base.graphs for lab in g.node_labels})
    assert fds.feature_dim == len(vocab)
    for g, x in zip(fds.base.graphs, fds.node_features):
        assert x.shape == (g.node_count, fds.feature_dim)
        np.testing.assert_array_equal(x.sum(axis=1), 1.0)
        assert [vocab[k] for k in x.argmax(axis=1)] == list(g.node_labels)


def test_one_hot_needs_labels(triangle_dir):
    with pytest.raises(ConfigurationError):
        assign_node_features(load_tu_dataset(triangle_dir, "TRI"), "one_hot_label")


def test_normalized_degree_examples(tmp_path):
    write(tmp_path, "E", A="1, 2\n", graph_indicator="1\n1\n", graph_labels="0\n")
    fds = assign_node_features(load_tu_dataset(tmp_path, "E"), "normalized_degree")
    np.testing.assert_array_equal(fds.node_features[0], [[1.0], [1.0]])

    star = tmp_path / "star"
    star.mkdir()
    write(star, "S", A="1, 2\n1, 3\n1, 4\n", graph_indicator="1\n1\n1\n1\n", graph_labels="0\n")
    fds = assign_node_features(load_tu_dataset(star, "S"), "normalized_degree")
    np.testing.assert_allclose(fds.node_features[0].ravel(), [1.0, 1 / 3, 1 / 3, 1 / 3])


def test_normalized_degree_in_unit_interval(synth_dir):
    fds = assign_node_features(load_tu_dataset(synth_dir, "SYNTH"), "normalized_degree")
    values = np.concatenate([x.ravel() for x in fds.node_features])
    assert fds.feature_dim == 1
    assert values.min() >= 0.0 and values.max() == 1.0


def test_make_dataset_class_balance(tmp_path):
    ds = load_tu_dataset(make_dataset(tmp_path, count=30), "SYNTH")
    assert ds.class_counts == [20, 10]
