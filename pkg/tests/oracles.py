"""Independent reference computations used by the tests.

None of these share code with the package: trees are enumerated by Prüfer
decoding and tree centres are found from all-pairs hop distances.
"""

from __future__ import annotations

import heapq
import itertools

import numpy as np

from smores_assembly.topology import FACES, ConfigGraph, Connection


def prufer_decode(seq, n):
    deg = [1] * n
    for x in seq:
        deg[x] += 1
    leaves = [i for i in range(n) if deg[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        deg[x] -= 1
        if deg[x] == 1:
            heapq.heappush(leaves, x)
    edges.append((heapq.heappop(leaves), heapq.heappop(leaves)))
    return edges


def labeled_trees(n):
    """Every labelled tree on n vertices whose degrees fit four connectors."""
    if n == 1:
        yield []
        return
    if n == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        if max(seq.count(v) for v in set(seq)) > 3:  # degree = count + 1
            continue
        yield prufer_decode(seq, n)


def random_tree(rng, n):
    """Random tree with max degree 4 (random attachment to a node with a free slot)."""
    deg = [0] * n
    edges = []
    order = rng.permutation(n).tolist()
    for k in range(1, n):
        v = order[k]
        choices = [u for u in order[:k] if deg[u] < 4]
        u = choices[int(rng.integers(len(choices)))]
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
    return edges


_CONN = {(a, b): Connection(a, b) for a in FACES for b in FACES}


def to_graph(n, edges, rng=None, labels=None):
    """ConfigGraph over the edge list; faces handed out in order (or shuffled)."""
    free = {v: list(FACES) for v in range(n)}
    if rng is not None:
        for v in free:
            rng.shuffle(free[v])
    conns = []
    for a, b in edges:
        fa, fb = free[a].pop(0), free[b].pop(0)
        conns.append((a, b, _CONN[fa, fb]))
    if labels is not None:
        return ConfigGraph((labels[v] for v in range(n)), ((labels[a], labels[b], c) for a, b, c in conns))
    return ConfigGraph(range(n), conns)


def hop_distances(n, edges):
    """All-pairs hop distances by repeated boolean reachability."""
    adj = np.zeros((n, n), dtype=bool)
    for a, b in edges:
        adj[a, b] = adj[b, a] = True
    dist = np.full((n, n), -1, dtype=int)
    reach = np.eye(n, dtype=bool)
    dist[reach] = 0
    for k in range(1, n):
        reach = reach | (reach.astype(int) @ adj.astype(int) > 0)
        dist[(dist < 0) & reach] = k
    return dist, adj


def centers_by_distance(n, edges):
    """Vertices whose largest remaining component after removal is at most n/2.

    The component behind neighbour u of v is the set of w closer to u than to v.
    """
    if n == 1:
        return [0]
    dist, adj = hop_distances(n, edges)
    out = []
    for v in range(n):
        worst = 0
        for u in np.flatnonzero(adj[v]):
            worst = max(worst, int(np.sum(dist[u] < dist[v])))
        if worst <= n / 2:
            out.append(v)
    return out


def batch_centers(n, edge_lists):
    """Vectorised :func:`centers_by_distance` over many trees of the same size."""
    B = len(edge_lists)
    adj = np.zeros((B, n, n), dtype=np.int32)
    e = np.array(edge_lists, dtype=int).reshape(B, n - 1, 2)
    b = np.repeat(np.arange(B), n - 1)
    adj[b, e[..., 0].ravel(), e[..., 1].ravel()] = 1
    adj[b, e[..., 1].ravel(), e[..., 0].ravel()] = 1
    dist = np.full((B, n, n), n + 1, dtype=np.int32)
    reach = np.broadcast_to(np.eye(n, dtype=np.int32), (B, n, n)).copy()
    dist[reach > 0] = 0
    for k in range(1, n):
        reach = ((reach @ adj) > 0).astype(np.int32) | reach
        dist[(dist > n) & (reach > 0)] = k
    # closer[b, u, v] = #{w : d(u, w) < d(v, w)}
    closer = (dist[:, :, None, :] < dist[:, None, :, :]).sum(axis=3)
    comp = np.where(adj.transpose(0, 2, 1) > 0, closer, 0)  # comp[b, u, v] for u ~ v
    worst = comp.max(axis=1)  # over neighbours u -> (B, n) indexed by v
    return worst <= n / 2.0


def subtree_counts(graph: ConfigGraph):
    """CN^v(c) by deleting v and flood-filling from the neighbour on face c."""
    adj = graph.adjacency
    out = {}
    for v in graph.vertices:
        for face in FACES:
            if face not in adj[v]:
                out[v, face] = 0
                continue
            start = adj[v][face][0]
            seen = {v, start}
            stack = [start]
            while stack:
                x = stack.pop()
                for y, _ in adj[x].values():
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            out[v, face] = len(seen) - 1
    return out
