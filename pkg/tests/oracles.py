"""Brute-force reference computations, independent of the library code paths."""

import itertools

import numpy as np

INF = float("inf")


def random_graph_edges(rng, n, p):
    return [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p]


def floyd_warshall(n, edges):
    d = np.full((n, n), INF)
    np.fill_diagonal(d, 0.0)
    for u, v in edges:
        d[u, v] = d[v, u] = 1.0
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return d


def closeness_oracle(n, edges):
    d = floyd_warshall(n, edges)
    out = []
    for v in range(n):
        reach = d[v][np.isfinite(d[v])]
        total = reach.sum()
        out.append((n - 1) / total if total > 0 else 0.0)
    return out


def neighborhood_oracle(n, edges, c, K):
    """Members of the ring-1..3 neighborhood, as a set."""
    d = floyd_warshall(n, edges)
    clo = closeness_oracle(n, edges)
    chosen = [c]
    for ring in (1, 2, 3):
        ring_nodes = [v for v in range(n) if d[c, v] == ring]
        ring_nodes.sort(key=lambda v: (-clo[v], v))
        for v in ring_nodes:
            if len(chosen) < K:
                chosen.append(v)
    return chosen


def motif_oracle(members, edges):
    """Exhaustive triple scan over a subgraph given by parent ids + parent edges.

    ``members[0]`` is the center. Returns a set of ``(labels, block)`` with labels
    1-based after the closeness / hop / id ordering.
    """
    m = len(members)
    pos = {p: i for i, p in enumerate(members)}
    local_edges = [(pos[u], pos[v]) for u, v in edges if u in pos and v in pos]
    d = floyd_warshall(m, local_edges)
    clo = closeness_oracle(m, local_edges)
    order = [0] + sorted(range(1, m), key=lambda i: (-clo[i], d[0, i], members[i]))
    label = {loc: k + 1 for k, loc in enumerate(order)}
    es = {frozenset(e) for e in local_edges}
    found = set()
    for tri in itertools.combinations(range(m), 3):
        n_edges = sum(frozenset(pair) in es for pair in itertools.combinations(tri, 2))
        if n_edges < 2:
            continue
        hops = [d[0, i] for i in tri]
        if 0 in tri:
            block = 1
        elif min(hops) == 1:
            block = 2
        elif min(hops) == 2:
            block = 3
        else:
            continue
        found.add((tuple(sorted(label[i] for i in tri)), block))
    return found


def conv1_loops(grid, kernels, bias):
    B, W, cols, d = grid.shape
    K1 = kernels.shape[0]
    N = cols // 3
    out = np.zeros((B, K1, N, W))
    for b in range(B):
        for k in range(K1):
            for i in range(N):
                for r in range(W):
                    acc = bias[k]
                    for s in range(3):
                        for c in range(d):
                            acc += grid[b, r, 3 * i + s, c] * kernels[k, s, c]
                    out[b, k, i, r] = acc
    return out


def conv2_loops(fmap, kernels, bias):
    B, K1, N, W = fmap.shape
    K2 = kernels.shape[0]
    T = W // 3
    out = np.zeros((B, N, K2, T))
    for b in range(B):
        for i in range(N):
            for k in range(K2):
                for t in range(T):
                    acc = bias[k]
                    for j in range(3):
                        for c in range(K1):
                            acc += fmap[b, c, i, 3 * t + j] * kernels[k, j, c]
                    out[b, i, k, t] = acc
    return out


def attention_oracle(H, W, a, slope=0.2, dps=40):
    """alpha_ij from exp ratios evaluated in 40-digit arithmetic."""
    import mpmath
    with mpmath.workdps(dps):
        N, F = H.shape
        Fp = W.shape[0]
        P = [[mpmath.fsum(mpmath.mpf(W[c, f]) * mpmath.mpf(H[n, f]) for f in range(F))
              for c in range(Fp)] for n in range(N)]

        def e(i, j):
            x = (mpmath.fsum(mpmath.mpf(a[c]) * P[i][c] for c in range(Fp))
                 + mpmath.fsum(mpmath.mpf(a[Fp + c]) * P[j][c] for c in range(Fp)))
            return x if x > 0 else slope * x

        alpha = np.zeros((N, N))
        for i in range(N):
            den = mpmath.fsum(mpmath.exp(e(i, k)) for k in range(N) if k != i)
            for j in range(N):
                if j != i:
                    alpha[i, j] = float(mpmath.exp(e(i, j)) / den)
        return alpha


def attention_output_oracle(H, heads, slope=0.2):
    """h'_i by explicit sums over heads and t != i, with mpmath coefficients."""
    N = H.shape[0]
    Fp = heads[0][0].shape[0]
    acc = np.zeros((N, Fp))
    for W, a in heads:
        alpha = attention_oracle(H, W, a, slope)
        for i in range(N):
            for t in range(N):
                if t != i:
                    acc[i] += alpha[i, t] * (W @ H[t])
    m = acc / len(heads)
    return 1.0 / (1.0 + np.exp(-m))
