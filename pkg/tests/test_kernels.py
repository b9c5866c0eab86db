import os
import random
import subprocess
import sys

import numpy as np
import pytest
from oracles import floyd_warshall, fnv1a64

from mogmesh import _pykernels, kernels


def _csr(n, edges):
    adj = [[] for _ in range(n)]
    for (i, j), w in edges.items():
        adj[i].append((j, w))
        adj[j].append((i, w))
    indptr, indices, weights = [0], [], []
    for row in adj:
        for j, w in sorted(row):
            indices.append(j)
            weights.append(w)
        indptr.append(len(indices))
    return (np.array(indptr, np.int32), np.array(indices, np.int32), np.array(weights, np.int32))


def _random_graph(rng, n, p, wmax=1):
    return {(i, j): rng.randint(1, wmax) for i in range(n) for j in range(i + 1, n) if rng.random() < p}


def test_geometric_edges_rule(backend):
    xs = np.array([0.0, 5.0, 5.0, 100.0])
    ys = np.array([0.0, 0.0, 0.0, 0.0])
    r = np.array([10.0, 10.0, 4.0, 10.0])
    active = np.array([1, 1, 1, 1], np.uint8)
    pairs = {tuple(map(int, e)) for e in backend.geometric_edges(xs, ys, r, active)}
    # 0-1 at distance 5 within min(10,10); 0-2 at 5 beyond min(10,4); 1-2 coincide
    assert pairs == {(0, 1), (1, 2)}
    active[1] = 0
    assert {tuple(map(int, e)) for e in backend.geometric_edges(xs, ys, r, active)} == set()


def test_boundary_distance_is_inclusive(backend):
    xs, ys = np.array([0.0, 3.0]), np.array([0.0, 4.0])
    pairs = backend.geometric_edges(xs, ys, np.array([5.0, 5.0]), np.ones(2, np.uint8))
    assert pairs.shape == (1, 2)


def test_routes_match_floyd_warshall(backend):
    rng = random.Random(11)
    for _ in range(40):
        n = rng.randint(1, 25)
        edges = _random_graph(rng, n, rng.uniform(0.05, 0.4))
        dist, hop, parent = backend.all_pairs_routes(*_csr(n, edges))
        adj = np.zeros((n, n), bool)
        for i, j in edges:
            adj[i, j] = adj[j, i] = True
        fw = floyd_warshall(adj)
        assert np.array_equal(np.where(dist < 0, np.inf, dist), fw)
        for s in range(n):
            assert hop[s, s] == s and parent[s, s] == -1
            for t in range(n):
                if s != t and dist[s, t] > 0:
                    assert adj[s, hop[s, t]] and dist[hop[s, t], t] == dist[s, t] - 1
                    assert adj[parent[s, t], t] and dist[s, parent[s, t]] == dist[s, t] - 1


def test_weighted_routes_match_floyd_warshall(backend):
    rng = random.Random(12)
    for _ in range(30):
        n = rng.randint(2, 20)
        edges = _random_graph(rng, n, 0.3, wmax=3)
        dist, _, _ = backend.all_pairs_routes(*_csr(n, edges))
        d = np.full((n, n), np.inf)
        np.fill_diagonal(d, 0)
        for (i, j), w in edges.items():
            d[i, j] = d[j, i] = w
        for k in range(n):
            d = np.minimum(d, d[:, [k]] + d[[k], :])
        assert np.array_equal(np.where(dist < 0, np.inf, dist), d)


def test_empty_graph(backend):
    dist, hop, parent = backend.all_pairs_routes(np.zeros(1, np.int32), np.zeros(0, np.int32), np.zeros(0, np.int32))
    assert dist.shape == (0, 0)


@pytest.mark.parametrize("data", [b"", b"a", b"hello", bytes(range(256)), b"\x00" * 8])
def test_fnv_matches_reference(backend, data):
    assert backend.fnv1a64(data) == fnv1a64(data)


def test_fnv_known_vectors(backend):
    # published FNV-1a 64-bit test vectors
    assert backend.fnv1a64(b"") == 0xCBF29CE484222325
    assert backend.fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert backend.fnv1a64(b"foobar") == 0x85944171F73967E8


def test_backends_agree_exactly():
    pytest.importorskip("mogmesh._ckernels")
    from mogmesh import _ckernels

    rng = random.Random(13)
    for _ in range(30):
        n = rng.randint(1, 40)
        xs = np.array([rng.uniform(0, 100) for _ in range(n)])
        ys = np.array([rng.uniform(0, 100) for _ in range(n)])
        r = np.array([rng.uniform(5, 40) for _ in range(n)])
        act = np.array([rng.random() < 0.9 for _ in range(n)], np.uint8)
        e1, e2 = _pykernels.geometric_edges(xs, ys, r, act), _ckernels.geometric_edges(xs, ys, r, act)
        assert np.array_equal(e1, e2)
        edges = _random_graph(rng, n, 0.2, wmax=2)
        for a, b in zip(_pykernels.all_pairs_routes(*_csr(n, edges)), _ckernels.all_pairs_routes(*_csr(n, edges))):
            assert np.array_equal(a, b)


def test_pure_python_switch():
    env = dict(os.environ, MOGMESH_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from mogmesh import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
    assert kernels.BACKEND in ("python", "cython")
