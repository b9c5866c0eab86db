"""Independent reference computations used by the tests.

Each oracle here is deliberately naive: it shares no code with the package
beyond plain data types.
"""

from __future__ import annotations

import itertools
import math
import random
import struct
from functools import lru_cache

import numpy as np

from mogmesh.model import LinkClass, LinkKind, NodeProfile, Position

SHORT = LinkClass(LinkKind.ShortRange, 10.0, 0.0, 1.0)
LONG = LinkClass(LinkKind.LongRange, 5.0, 2.0, 3.0)

FNV_OFFSET = 14695981039346656037
FNV_PRIME = 1099511628211


def node(nid, x, y, r=10.0, compute=10, battery=100, trusted=False, long_range=False, cap=None):
    ifaces = {SHORT, LONG} if long_range else {SHORT}
    return NodeProfile(
        node_id=nid,
        compute=compute,
        battery=battery,
        position=Position(float(x), float(y)),
        radio_range=r,
        interfaces=frozenset(ifaces),
        capacity_cap=cap,
        trusted=trusted,
    )


def path_profiles(n, spacing=10.0, **kw):
    return [node(f"n{i}", i * spacing, 0.0, r=spacing, **kw) for i in range(n)]


def random_profiles(rng: random.Random, n, size=100.0, rmin=15.0, rmax=40.0):
    return [
        node(
            f"v{i:02d}",
            rng.uniform(0, size),
            rng.uniform(0, size),
            r=rng.uniform(rmin, rmax),
            compute=rng.randint(1, 20),
            battery=rng.randint(1, 100),
        )
        for i in range(n)
    ]


def geometric_adjacency(profiles) -> np.ndarray:
    """Boolean adjacency by direct pairwise distance checks."""
    ps = sorted(profiles, key=lambda p: p.node_id)
    n = len(ps)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            a, b = ps[i].position, ps[j].position
            d = math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2)
            if d <= min(ps[i].radio_range, ps[j].radio_range):
                adj[i, j] = adj[j, i] = True
    return adj


def floyd_warshall(adj: np.ndarray) -> np.ndarray:
    """All-pairs hop counts; ``inf`` marks unreachable pairs."""
    n = adj.shape[0]
    d = np.where(adj, 1.0, np.inf)
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        d = np.minimum(d, d[:, k : k + 1] + d[k : k + 1, :])
    return d


def bfs_depths(adj: np.ndarray, root: int) -> dict[int, int]:
    depth = {root: 0}
    frontier = [root]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(adj[u]):
                v = int(v)
                if v not in depth:
                    depth[v] = depth[u] + 1
                    nxt.append(v)
        frontier = nxt
    return depth


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) % 2**64
    return h


def encode_state(actors: dict[int, tuple[int, int, int, int, int]], event_count: int) -> bytes:
    out = b""
    for aid in sorted(actors):
        for v in (aid, *actors[aid]):
            out += struct.pack("<q", v)
    return out + struct.pack("<q", event_count)


def greedy_association_oracle(replicas, clients, hop, cap):
    """Replay the greedy rule by brute force over every replica at each turn.

    ``hop(c, r)`` returns a hop count or ``None``.  Returns the list of
    (client, minimal achievable hop) pairs for non-host clients.
    """
    left = dict(cap)
    expected = []
    for r in replicas:
        if r in clients and left[r] > 0:
            left[r] -= 1
    for c in sorted(clients):
        if c in replicas and cap[c] > 0:
            continue
        options = [hop(c, r) for r in replicas if left[r] > 0 and hop(c, r) is not None]
        if not options:
            expected.append((c, None))
            continue
        best = min(options)
        winner = min(r for r in replicas if left[r] > 0 and hop(c, r) == best)
        left[winner] -= 1
        expected.append((c, best))
    return expected


def exhaustive_max_matching(demand, candidates, slots) -> tuple[int, float]:
    """Largest number of (service, distinct node) pairs, then best total score.

    Enumerates every subset of each service's candidate list with memoised
    residual node capacities.  ``candidates[s]`` is a list of (node, score).
    """
    nodes = sorted(slots)
    idx = {n: k for k, n in enumerate(nodes)}

    @lru_cache(maxsize=None)
    def best(s, caps):
        if s == len(demand):
            return (0, 0.0)
        top = best(s + 1, caps)
        cands = candidates[s]
        for size in range(1, min(demand[s], len(cands)) + 1):
            for combo in itertools.combinations(cands, size):
                if any(caps[idx[n]] == 0 for n, _ in combo):
                    continue
                nc = list(caps)
                for n, _ in combo:
                    nc[idx[n]] -= 1
                cnt, score = best(s + 1, tuple(nc))
                cand = (cnt + size, round(score + sum(v for _, v in combo), 9))
                if cand > top:
                    top = cand
        return top

    return best(0, tuple(slots[n] for n in nodes))
