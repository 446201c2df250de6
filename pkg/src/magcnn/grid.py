"""Graph-to-grid normalization by two-hop-path motif matching.

Pipeline per graph: rank nodes by closeness, take the top ``N`` as centers,
collect a neighborhood of at most ``K`` nodes around each center (BFS rings
1..3), relabel the neighborhood ``a1..aK``, match every 3-node set that
contains a two-edge path, and file the matches into three row blocks by their
distance from the center. The ``N`` resulting central matrices are laid side
by side and every node slot is replaced with the node's feature vector.
"""

from __future__ import annotations

import itertools
import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, FormatError, LoadError
from .graph import Graph, all_closeness, shortest_path_lengths

PAD = None
EMPTY = -1
MAX_RING = 3


@dataclass(frozen=True)
class NormalizationParams:
    N: int
    K: int
    w1: int
    w2: int
    w3: int

    def __post_init__(self):
        if self.N < 2:
            raise ConfigurationError(f"N must be >= 2, got {self.N}")
        if self.K < 3:
            raise ConfigurationError(f"K must be >= 3, got {self.K}")
        if min(self.w1, self.w2, self.w3) < 1:
            raise ConfigurationError(f"block rows must be >= 1, got {self.block_rows}")
        if self.rows % 3:
            raise ConfigurationError(
                f"w1 + w2 + w3 = {self.rows} is not divisible by 3")

    @property
    def block_rows(self) -> Tuple[int, int, int]:
        return (self.w1, self.w2, self.w3)

    @property
    def rows(self) -> int:
        return self.w1 + self.w2 + self.w3

    @property
    def cols(self) -> int:
        return 3 * self.N


@dataclass(frozen=True)
class Subgraph:
    """Neighborhood of ``center`` in its parent graph.

    ``members`` are parent node ids in collection order (center first);
    ``local`` is the induced subgraph with local id ``i`` = ``members[i]``.
    ``closeness`` and ``hop`` are recomputed inside ``local``.
    """

    center: int
    members: Tuple[int, ...]
    local: Graph
    closeness: Tuple[float, ...]
    hop: Tuple[int, ...]


@dataclass(frozen=True)
class Motif:
    labels: Tuple[int, int, int]  # ascending, 1-based (1 = center)
    block: int


@dataclass
class CentralMatrix:
    """``rows x 3`` slot matrix; ``nodes`` holds parent ids, ``labels`` the a-index.

    Empty slots are ``EMPTY`` in ``nodes`` and 0 in ``labels``.
    """

    nodes: np.ndarray
    labels: np.ndarray
    block_rows: Tuple[int, int, int]
    motif_counts: Tuple[int, int, int]
    center: Optional[int] = None

    @property
    def overflow(self) -> Tuple[int, int, int]:
        return tuple(max(0, c - w) for c, w in zip(self.motif_counts, self.block_rows))

    def block(self, b: int) -> np.ndarray:
        start = sum(self.block_rows[:b - 1])
        return self.nodes[start:start + self.block_rows[b - 1]]


def _rank_key(closeness: Sequence[float]):
    return lambda v: (-closeness[v], v)


def select_central_nodes(g: Graph, N: int) -> List[Optional[int]]:
    """Top-``N`` nodes by (closeness desc, id asc), padded with ``PAD``."""
    if N < 2:
        raise ConfigurationError(f"N must be >= 2, got {N}")
    closeness = all_closeness(g)
    order = sorted(range(g.node_count), key=_rank_key(closeness))
    chosen: List[Optional[int]] = order[:N]
    return chosen + [PAD] * (N - len(chosen))


def neighborhood_field(g: Graph, c: int, K: int, closeness: Optional[Sequence[float]] = None
                       ) -> Subgraph:
    """Collect up to ``K`` nodes (center included) from BFS rings 1, 2 and 3.

    Within a ring, nodes are taken by parent-graph closeness, ties by id.
    """
    if closeness is None:
        closeness = all_closeness(g)
    dist = shortest_path_lengths(g, c)
    members = [c]
    key = _rank_key(closeness)
    for ring in range(1, MAX_RING + 1):
        if len(members) >= K:
            break
        layer = sorted((v for v, d in dist.items() if d == ring), key=key)
        members.extend(layer[:K - len(members)])
    local, _ = g.induced(members)
    hop = shortest_path_lengths(local, 0)
    return Subgraph(center=c, members=tuple(members), local=local,
                    closeness=tuple(all_closeness(local)),
                    hop=tuple(hop[i] for i in range(local.node_count)))


def order_subgraph_nodes(sub: Subgraph) -> List[int]:
    """Parent ids in label order: ``result[0]`` is a1 (the center), and so on.

    Non-center members sort by subgraph closeness desc, hop to center asc, id asc.
    """
    rest = sorted(range(1, len(sub.members)),
                  key=lambda i: (-sub.closeness[i], sub.hop[i], sub.members[i]))
    return [sub.members[0]] + [sub.members[i] for i in rest]


def _motif_block(hops: Sequence[int], has_center: bool) -> int:
    if has_center:
        return 1
    lowest = min(hops)
    if lowest == 1:
        return 2
    if lowest == 2:
        return 3
    return 0


def enumerate_two_hop_motifs(sub: Subgraph) -> List[Motif]:
    """All 3-node sets with at least two induced edges, blocked by center distance.

    Returned in (block, labels) order.
    """
    ordered = order_subgraph_nodes(sub)
    local_of = {p: i for i, p in enumerate(sub.members)}
    # label k (1-based) -> local index
    loc = [local_of[p] for p in ordered]
    adj = [set(a) for a in sub.local.adjacency]
    found = []
    for x, y, z in itertools.combinations(range(len(loc)), 3):
        lx, ly, lz = loc[x], loc[y], loc[z]
        n_edges = (ly in adj[lx]) + (lz in adj[lx]) + (lz in adj[ly])
        if n_edges < 2:
            continue
        block = _motif_block((sub.hop[lx], sub.hop[ly], sub.hop[lz]), x == 0)
        if block:
            found.append(Motif((x + 1, y + 1, z + 1), block))
    found.sort(key=lambda m: (m.block, m.labels))
    return found


def build_central_matrix(sub: Optional[Subgraph], p: NormalizationParams) -> CentralMatrix:
    """Fill block ``b`` with its motifs in lexicographic order, at most ``w_b`` rows."""
    nodes = np.full((p.rows, 3), EMPTY, dtype=np.int64)
    labels = np.zeros((p.rows, 3), dtype=np.int64)
    if sub is None:
        return CentralMatrix(nodes, labels, p.block_rows, (0, 0, 0), None)
    ordered = order_subgraph_nodes(sub)
    motifs = enumerate_two_hop_motifs(sub)
    counts = [0, 0, 0]
    start = (0, p.w1, p.w1 + p.w2)
    for m in motifs:
        b = m.block - 1
        if counts[b] < p.block_rows[b]:
            r = start[b] + counts[b]
            labels[r] = m.labels
            nodes[r] = [ordered[k - 1] for k in m.labels]
        counts[b] += 1
    return CentralMatrix(nodes, labels, p.block_rows, tuple(counts), sub.center)


def central_matrices(g: Graph, p: NormalizationParams) -> List[CentralMatrix]:
    closeness = all_closeness(g)
    out = []
    for c in select_central_nodes(g, p.N):
        sub = None if c is PAD else neighborhood_field(g, c, p.K, closeness)
        out.append(build_central_matrix(sub, p))
    return out


def assemble_grid(mats: Sequence[CentralMatrix], features: np.ndarray,
                  p: NormalizationParams) -> np.ndarray:
    d = features.shape[1]
    padded = np.vstack([features, np.zeros((1, d))])  # row -1 is the zero vector
    idx = np.concatenate([m.nodes for m in mats], axis=1)  # rows x 3N
    grid = padded[idx]
    assert grid.shape == (p.rows, p.cols, d)
    return np.ascontiguousarray(grid)


def normalize_graph(g: Graph, features: np.ndarray, p: NormalizationParams) -> np.ndarray:
    """Grid tensor of shape ``(w1 + w2 + w3, 3N, d)`` for one graph."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != g.node_count:
        raise ConfigurationError(
            f"features shape {features.shape} does not match {g.node_count} nodes")
    return assemble_grid(central_matrices(g, p), features, p)


@dataclass
class PreprocessStats:
    """Per-block motif counts over every non-PAD central matrix of a dataset."""

    motif_counts: np.ndarray  # (n_matrices, 3)
    overflow: Tuple[int, int, int]
    truncated_matrices: int

    def percentile(self, q: float = 95.0) -> Tuple[float, float, float]:
        if len(self.motif_counts) == 0:
            return (0.0, 0.0, 0.0)
        return tuple(float(x) for x in np.percentile(self.motif_counts, q, axis=0))

    def as_dict(self, q: float = 95.0) -> dict:
        return {
            "matrices": int(len(self.motif_counts)),
            "overflow_rows": list(self.overflow),
            "truncated_matrices": self.truncated_matrices,
            "percentile": q,
            "block_count_percentile": list(self.percentile(q)),
            "block_count_max": (self.motif_counts.max(axis=0).tolist()
                                if len(self.motif_counts) else [0, 0, 0]),
        }


def preprocess(graphs: Sequence[Graph], features: Sequence[np.ndarray],
               p: NormalizationParams) -> Tuple[List[np.ndarray], PreprocessStats]:
    grids, counts = [], []
    overflow = np.zeros(3, dtype=np.int64)
    truncated = 0
    for g, x in zip(graphs, features):
        mats = central_matrices(g, p)
        for m in mats:
            if m.center is None:
                continue
            counts.append(m.motif_counts)
            ov = m.overflow
            overflow += ov
            truncated += any(ov)
        grids.append(assemble_grid(mats, np.asarray(x, dtype=np.float64), p))
    stats = PreprocessStats(np.asarray(counts, dtype=np.int64).reshape(-1, 3),
                            tuple(int(v) for v in overflow), truncated)
    return grids, stats


def motif_count_table(graphs: Sequence[Graph], N: int, K: int) -> np.ndarray:
    """Untruncated per-block motif counts for every non-PAD center."""
    rows = []
    for g in graphs:
        closeness = all_closeness(g)
        for c in select_central_nodes(g, N):
            if c is PAD:
                continue
            sub = neighborhood_field(g, c, K, closeness)
            tally = [0, 0, 0]
            for m in enumerate_two_hop_motifs(sub):
                tally[m.block - 1] += 1
            rows.append(tally)
    return np.asarray(rows, dtype=np.int64).reshape(-1, 3)


def suggest_block_rows(counts: np.ndarray, q: float = 95.0) -> Tuple[int, int, int]:
    """Smallest ``(w1, w2, w3)`` covering the ``q``-th percentile counts, sum divisible by 3.

    Any shortfall to a multiple of 3 is added to the later blocks.
    """
    if len(counts) == 0:
        w = [1, 1, 1]
    else:
        w = [max(1, int(np.ceil(v))) for v in np.percentile(counts, q, axis=0)]
    b = 2
    while sum(w) % 3:
        w[b] += 1
        b = 2 if b == 1 else b - 1
    return tuple(w)


# Grid cache: "MGRD", u32 version, then per graph u32 label, u32 rows, cols,
# channels, and rows*cols*channels little-endian float64 in (row, col, channel) order.
GRID_MAGIC = b"MGRD"
GRID_VERSION = 1


def write_grid_cache(path, grids: Sequence[np.ndarray], labels: Sequence[int]) -> None:
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(struct.pack("<I", GRID_VERSION))
        for grid, y in zip(grids, labels):
            if grid.ndim != 3:
                raise ConfigurationError(f"grid must be 3-D, got shape {grid.shape}")
            fh.write(struct.pack("<4I", int(y), *grid.shape))
            fh.write(np.ascontiguousarray(grid, dtype="<f8").tobytes())


def _read_exact(fh: BinaryIO, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"grid cache truncated: wanted {n} bytes, got {len(data)}")
    return data


def iter_grid_cache(path) -> Iterator[Tuple[int, np.ndarray]]:
    try:
        fh = open(path, "rb")
    except FileNotFoundError:
        raise LoadError(f"grid cache {path} not found") from None
    with fh:
        if fh.read(4) != GRID_MAGIC:
            raise FormatError(f"{path}: not a grid cache (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != GRID_VERSION:
            raise FormatError(f"{path}: unsupported grid cache version {version}")
        while True:
            head = fh.read(16)
            if not head:
                return
            if len(head) != 16:
                raise FormatError(f"{path}: truncated record header")
            y, r, c, d = struct.unpack("<4I", head)
            values = np.frombuffer(_read_exact(fh, 8 * r * c * d), dtype="<f8")
            yield y, values.reshape(r, c, d).astype(np.float64)


def read_grid_cache(path) -> Tuple[List[np.ndarray], List[int]]:
    grids, labels = [], []
    for y, grid in iter_grid_cache(path):
        labels.append(y)
        grids.append(grid)
    return grids, labels
