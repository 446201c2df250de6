"""Undirected multigraph with hop-count distances and closeness centrality."""

from __future__ import annotations

import operator
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import ArgumentError

UNREACHABLE = -1


@dataclass(frozen=True)
class Graph:
    """Immutable undirected multigraph on nodes ``0..node_count-1``.

    Edges are stored once as ``(u, v, multiplicity)`` with ``u < v``.
    Multiplicity (bond order) contributes to the weighted degree only,
    never to hop distances.
    """

    node_count: int
    edges: Tuple[Tuple[int, int, int], ...]
    node_labels: Optional[Tuple[int, ...]] = None
    adjacency: Tuple[Tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.node_count < 0:
            raise ArgumentError(f"negative node count {self.node_count}")
        merged: Dict[Tuple[int, int], int] = {}
        for u, v, m in self.edges:
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise ArgumentError(f"edge ({u}, {v}) outside 0..{self.node_count - 1}")
            if u == v:
                raise ArgumentError(f"self-loop at node {u}")
            if m < 1:
                raise ArgumentError(f"edge ({u}, {v}) has multiplicity {m} < 1")
            key = (u, v) if u < v else (v, u)
            if key in merged:
                raise ArgumentError(f"duplicate edge {key}")
            merged[key] = int(m)
        canon = tuple(sorted((u, v, m) for (u, v), m in merged.items()))
        object.__setattr__(self, "edges", canon)
        if self.node_labels is not None:
            labels = tuple(int(x) for x in self.node_labels)
            if len(labels) != self.node_count:
                raise ArgumentError(
                    f"{len(labels)} node labels for {self.node_count} nodes")
            object.__setattr__(self, "node_labels", labels)
        adj: List[List[int]] = [[] for _ in range(self.node_count)]
        for u, v, _ in canon:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "adjacency", tuple(tuple(sorted(a)) for a in adj))

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[Sequence[int]],
                   node_labels: Optional[Sequence[int]] = None) -> "Graph":
        """Build from ``(u, v)`` or ``(u, v, multiplicity)`` rows."""
        rows = []
        for e in edges:
            if len(e) == 2:
                rows.append((int(e[0]), int(e[1]), 1))
            else:
                rows.append((int(e[0]), int(e[1]), int(e[2])))
        labels = tuple(node_labels) if node_labels is not None else None
        return cls(node_count, tuple(rows), labels)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self, v: int) -> Tuple[int, ...]:
        self._check(v)
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def induced(self, nodes: Sequence[int]) -> Tuple["Graph", List[int]]:
        """Induced subgraph on ``nodes``; local id ``i`` maps to ``nodes[i]``."""
        local = {g: i for i, g in enumerate(nodes)}
        rows = []
        for u, v, m in self.edges:
            if u in local and v in local:
                rows.append((local[u], local[v], m))
        labels = None
        if self.node_labels is not None:
            labels = tuple(self.node_labels[g] for g in nodes)
        return Graph(len(nodes), tuple(rows), labels), list(nodes)

    def _check(self, v: int) -> None:
        try:
            idx = operator.index(v)
        except TypeError:
            idx = -1
        if isinstance(v, bool) or not 0 <= idx < self.node_count:
            raise ArgumentError(f"invalid node id {v!r} for graph with {self.node_count} nodes")


def shortest_path_lengths(g: Graph, source: int) -> Dict[int, int]:
    """BFS hop counts from ``source``; unreachable nodes map to ``UNREACHABLE``."""
    g._check(source)
    dist = [UNREACHABLE] * g.node_count
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in g.adjacency[u]:
            if dist[w] == UNREACHABLE:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dict(enumerate(dist))


def closeness_centrality(g: Graph, v: int) -> float:
    """(n - 1) / sum of hop distances to the nodes reachable from ``v``.

    Unreachable nodes are left out of the sum; a node that reaches nothing
    (including the single-node graph) has closeness 0.
    """
    dist = shortest_path_lengths(g, v)
    total = sum(d for d in dist.values() if d > 0)
    if total == 0:
        return 0.0
    return (g.node_count - 1) / total


def all_closeness(g: Graph) -> List[float]:
    return [closeness_centrality(g, v) for v in range(g.node_count)]


def weighted_degree(g: Graph, v: int) -> int:
    """Sum of multiplicities of the edges incident to ``v``."""
    g._check(v)
    return sum(m for a, b, m in g.edges if a == v or b == v)


def weighted_degrees(g: Graph) -> List[int]:
    deg = [0] * g.node_count
    for u, v, m in g.edges:
        deg[u] += m
        deg[v] += m
    return deg
