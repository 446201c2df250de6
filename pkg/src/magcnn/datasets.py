"""Reader for TU-Dortmund graph classification datasets plus node featurization.

A dataset ``NAME`` in directory ``dir`` consists of::

    NAME_A.txt               "i, j" rows, 1-based global node ids
    NAME_graph_indicator.txt line k = graph id of global node k
    NAME_graph_labels.txt    line g = class label of graph g
    NAME_node_labels.txt     optional, one label per node
    NAME_edge_labels.txt     optional, parallel to NAME_A.txt
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from .errors import ConfigurationError, FormatError, LoadError
from .graph import Graph, weighted_degrees

# Bond-type edge labels (aromatic=0, single=1, double=2, triple=3 in MUTAG)
DEFAULT_BOND_MULTIPLICITY: Dict[int, int] = {0: 1, 1: 1, 2: 2, 3: 3}


@dataclass(frozen=True)
class GraphDataset:
    name: str
    graphs: Tuple[Graph, ...]
    labels: Tuple[int, ...]
    class_count: int
    raw_class_labels: Tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.graphs) != len(self.labels):
            raise FormatError(f"{len(self.graphs)} graphs but {len(self.labels)} labels")
        for y in self.labels:
            if not 0 <= y < self.class_count:
                raise FormatError(f"label {y} outside 0..{self.class_count - 1}")
        for i, g in enumerate(self.graphs):
            if g.node_count == 0:
                raise FormatError(f"graph {i + 1} has no nodes")

    def __len__(self):
        return len(self.graphs)

    @property
    def mean_nodes(self) -> float:
        return float(np.mean([g.node_count for g in self.graphs]))

    @property
    def mean_edges(self) -> float:
        return float(np.mean([g.edge_count for g in self.graphs]))

    @property
    def class_counts(self) -> List[int]:
        return np.bincount(self.labels, minlength=self.class_count).tolist()


class FeatureScheme(enum.Enum):
    ONE_HOT_LABEL = "one_hot_label"
    NORMALIZED_DEGREE = "normalized_degree"


@dataclass(frozen=True)
class FeaturizedDataset:
    """Dataset with one ``(node_count, feature_dim)`` array per graph."""

    base: GraphDataset
    feature_dim: int
    node_features: Tuple[np.ndarray, ...]
    scheme: FeatureScheme


def _read_int_rows(path: Path, width: int) -> List[Tuple[int, ...]]:
    rows = []
    with open(path, "r", newline=None) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            parts = [p.strip() for p in text.split(",")]
            if len(parts) != width:
                raise FormatError(
                    f"{path.name}:{lineno}: expected {width} value(s), got {len(parts)}")
            try:
                rows.append(tuple(int(p) for p in parts))
            except ValueError:
                raise FormatError(f"{path.name}:{lineno}: non-integer token in {text!r}") from None
    return rows


def _required(path: Path) -> Path:
    if not path.is_file():
        raise LoadError(f"missing required file {path.name} in {path.parent}")
    return path


def load_tu_dataset(directory, name: str, *,
                    bond_multiplicity: Optional[Mapping[int, int]] = None,
                    file_prefix: Optional[str] = None) -> GraphDataset:
    """Load ``name`` from ``directory``.

    ``file_prefix`` overrides the file stem when it differs from the dataset
    name (e.g. ``PTC`` stored as ``PTC_MR_*.txt``). Edge labels, when present,
    are converted to multiplicities through ``bond_multiplicity``; unknown
    labels count as single bonds.
    """
    directory = Path(directory)
    stem = file_prefix or name
    table = dict(DEFAULT_BOND_MULTIPLICITY if bond_multiplicity is None else bond_multiplicity)

    edge_rows = _read_int_rows(_required(directory / f"{stem}_A.txt"), 2)
    indicator = [r[0] for r in _read_int_rows(
        _required(directory / f"{stem}_graph_indicator.txt"), 1)]
    raw_labels = [r[0] for r in _read_int_rows(
        _required(directory / f"{stem}_graph_labels.txt"), 1)]

    node_label_path = directory / f"{stem}_node_labels.txt"
    node_labels = None
    if node_label_path.is_file():
        node_labels = [r[0] for r in _read_int_rows(node_label_path, 1)]
        if len(node_labels) != len(indicator):
            raise FormatError(f"{node_label_path.name}: {len(node_labels)} labels for "
                              f"{len(indicator)} nodes")
    edge_label_path = directory / f"{stem}_edge_labels.txt"
    edge_labels = None
    if edge_label_path.is_file():
        edge_labels = [r[0] for r in _read_int_rows(edge_label_path, 1)]
        if len(edge_labels) != len(edge_rows):
            raise FormatError(f"{edge_label_path.name}: {len(edge_labels)} labels for "
                              f"{len(edge_rows)} edge rows")

    n_graphs = len(raw_labels)
    sizes = [0] * n_graphs
    local_id = []
    for lineno, gid in enumerate(indicator, start=1):
        if not 1 <= gid <= n_graphs:
            raise FormatError(f"{stem}_graph_indicator.txt:{lineno}: node references "
                              f"absent graph id {gid}")
        local_id.append(sizes[gid - 1])
        sizes[gid - 1] += 1

    # per graph: undirected key -> multiplicity, plus the directed rows seen
    edges_per_graph: List[Dict[Tuple[int, int], int]] = [{} for _ in range(n_graphs)]
    seen_rows = set()
    n_nodes = len(indicator)
    for lineno, (i, j) in enumerate(edge_rows, start=1):
        if not (1 <= i <= n_nodes and 1 <= j <= n_nodes):
            raise FormatError(f"{stem}_A.txt:{lineno}: node id out of range 1..{n_nodes}")
        gi, gj = indicator[i - 1], indicator[j - 1]
        if gi != gj:
            raise FormatError(f"{stem}_A.txt:{lineno}: edge joins graphs {gi} and {gj}")
        if i == j:
            warnings.warn(f"{stem}_A.txt:{lineno}: dropping self-loop on node {i}")
            continue
        if (i, j) in seen_rows:
            warnings.warn(f"{stem}_A.txt:{lineno}: repeated edge row ({i}, {j}) ignored")
            continue
        seen_rows.add((i, j))
        u, v = local_id[i - 1], local_id[j - 1]
        key = (min(u, v), max(u, v))
        if key not in edges_per_graph[gi - 1]:
            mult = table.get(edge_labels[lineno - 1], 1) if edge_labels is not None else 1
            edges_per_graph[gi - 1][key] = mult

    per_graph_labels: List[List[int]] = [[] for _ in range(n_graphs)]
    if node_labels is not None:
        for k, gid in enumerate(indicator):
            per_graph_labels[gid - 1].append(node_labels[k])

    graphs = []
    for g in range(n_graphs):
        if sizes[g] == 0:
            raise FormatError(f"graph {g + 1} has no nodes")
        rows = tuple((u, v, m) for (u, v), m in edges_per_graph[g].items())
        labels = tuple(per_graph_labels[g]) if node_labels is not None else None
        graphs.append(Graph(sizes[g], rows, labels))

    classes = sorted(set(raw_labels))
    remap = {c: k for k, c in enumerate(classes)}
    return GraphDataset(name=name, graphs=tuple(graphs),
                        labels=tuple(remap[c] for c in raw_labels),
                        class_count=len(classes), raw_class_labels=tuple(classes))


def assign_node_features(ds: GraphDataset, scheme) -> FeaturizedDataset:
    """Attach node feature vectors.

    ``ONE_HOT_LABEL`` indexes the distinct node labels of the whole dataset in
    ascending order. ``NORMALIZED_DEGREE`` divides each node's weighted degree by
    the largest weighted degree found anywhere in the dataset.
    """
    scheme = FeatureScheme(scheme)
    if scheme is FeatureScheme.ONE_HOT_LABEL:
        if any(g.node_labels is None for g in ds.graphs):
            raise ConfigurationError(f"{ds.name}: one-hot features need node labels")
        vocab = sorted({lab for g in ds.graphs for lab in g.node_labels})
        index = {lab: k for k, lab in enumerate(vocab)}
        feats = []
        for g in ds.graphs:
            x = np.zeros((g.node_count, len(vocab)))
            x[np.arange(g.node_count), [index[lab] for lab in g.node_labels]] = 1.0
            feats.append(x)
        return FeaturizedDataset(ds, len(vocab), tuple(feats), scheme)

    degrees = [np.asarray(weighted_degrees(g), dtype=float) for g in ds.graphs]
    top = max((d.max() for d in degrees if d.size), default=0.0)
    scale = 1.0 / top if top > 0 else 0.0
    feats = tuple((d * scale).reshape(-1, 1) for d in degrees)
    return FeaturizedDataset(ds, 1, feats, scheme)
