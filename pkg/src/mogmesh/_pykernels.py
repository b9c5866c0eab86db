"""Pure-Python reference versions of the hot kernels.

These define the semantics; ``_ckernels.pyx`` must match them exactly.
"""

from __future__ import annotations

import math

import numpy as np

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


def geometric_edges(xs, ys, ranges, active):
    """Index pairs ``(i, j)``, ``i < j``, of active nodes within mutual range."""
    n = len(xs)
    xs = [float(v) for v in xs]
    ys = [float(v) for v in ys]
    ranges = [float(v) for v in ranges]
    active = [bool(v) for v in active]
    out = []
    for i in range(n):
        if not active[i]:
            continue
        xi, yi, ri = xs[i], ys[i], ranges[i]
        for j in range(i + 1, n):
            if not active[j]:
                continue
            dx = xi - xs[j]
            dy = yi - ys[j]
            if math.sqrt(dx * dx + dy * dy) <= min(ri, ranges[j]):
                out.append((i, j))
    return np.array(out, dtype=np.int32).reshape(-1, 2)


def all_pairs_routes(indptr, indices, weights):
    """Shortest weighted-hop routes from every source.

    Bucketed breadth-first search: within a distance bucket nodes are expanded
    first-in first-out, neighbours in ascending index order, and the first
    strictly shorter discovery wins.  With unit weights this is plain BFS.

    Returns ``(dist, first_hop, parent)`` as ``n x n`` int32 arrays, ``-1``
    marking unreachable entries.  ``first_hop[s, s] == s``.
    """
    indptr = [int(v) for v in indptr]
    indices = [int(v) for v in indices]
    weights = [int(v) for v in weights]
    n = len(indptr) - 1
    dist_out = np.full((n, n), -1, dtype=np.int32)
    hop_out = np.full((n, n), -1, dtype=np.int32)
    parent_out = np.full((n, n), -1, dtype=np.int32)
    inf = 1 << 60
    for s in range(n):
        dist = [inf] * n
        parent = [-1] * n
        dist[s] = 0
        buckets: dict[int, list[int]] = {0: [s]}
        settled = []
        d = 0
        pending = 1
        while pending:
            bucket = buckets.pop(d, None)
            if bucket is not None:
                pending -= len(bucket)
                for u in bucket:
                    if dist[u] != d:
                        continue
                    settled.append(u)
                    for k in range(indptr[u], indptr[u + 1]):
                        v = indices[k]
                        nd = d + weights[k]
                        if nd < dist[v]:
                            dist[v] = nd
                            parent[v] = u
                            buckets.setdefault(nd, []).append(v)
                            pending += 1
            d += 1
        first = [-1] * n
        first[s] = s
        for v in settled:
            if v == s:
                continue
            p = parent[v]
            first[v] = v if p == s else first[p]
        for v in settled:
            dist_out[s, v] = dist[v]
            hop_out[s, v] = first[v]
            parent_out[s, v] = parent[v]
    return dist_out, hop_out, parent_out


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & _MASK64
    return h
