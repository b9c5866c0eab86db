# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``; same semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport uint64_t, int32_t, int64_t
from libc.stdlib cimport malloc, free

cnp.import_array()


def geometric_edges(xs, ys, ranges, active):
    cdef double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef double[::1] r = np.ascontiguousarray(ranges, dtype=np.float64)
    cdef unsigned char[::1] a = np.ascontiguousarray(active, dtype=np.uint8)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j, m = 0
    cdef double dx, dy, lim
    out = np.empty((n * (n - 1) // 2 if n > 1 else 0, 2), dtype=np.int32)
    cdef int32_t[:, ::1] o = out
    for i in range(n):
        if not a[i]:
            continue
        for j in range(i + 1, n):
            if not a[j]:
                continue
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            lim = r[i] if r[i] < r[j] else r[j]
            if sqrt(dx * dx + dy * dy) <= lim:
                o[m, 0] = <int32_t>i
                o[m, 1] = <int32_t>j
                m += 1
    return out[:m].copy()


def all_pairs_routes(indptr, indices, weights):
    cdef int32_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int32)
    cdef int32_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef int32_t[::1] wt = np.ascontiguousarray(weights, dtype=np.int32)
    cdef Py_ssize_t n = ip.shape[0] - 1
    cdef Py_ssize_t m = ix.shape[0]
    dist_a = np.full((n, n), -1, dtype=np.int32)
    hop_a = np.full((n, n), -1, dtype=np.int32)
    par_a = np.full((n, n), -1, dtype=np.int32)
    if n == 0:
        return dist_a, hop_a, par_a
    cdef int32_t[:, ::1] dist_o = dist_a
    cdef int32_t[:, ::1] hop_o = hop_a
    cdef int32_t[:, ::1] par_o = par_a

    cdef int64_t wmax = 1
    cdef Py_ssize_t k
    for k in range(m):
        if wt[k] > wmax:
            wmax = wt[k]
    cdef int64_t maxd = (n - 1) * wmax + 1
    # bucket queues as linked lists over an entry pool; every improvement
    # appends one entry, so the pool never exceeds m + 1 per source
    cdef Py_ssize_t pool_cap = m + 1
    cdef int64_t* dist = <int64_t*>malloc(n * sizeof(int64_t))
    cdef int32_t* parent = <int32_t*>malloc(n * sizeof(int32_t))
    cdef int32_t* first = <int32_t*>malloc(n * sizeof(int32_t))
    cdef int32_t* settled = <int32_t*>malloc(n * sizeof(int32_t))
    cdef int32_t* head = <int32_t*>malloc((maxd + 1) * sizeof(int32_t))
    cdef int32_t* tail = <int32_t*>malloc((maxd + 1) * sizeof(int32_t))
    cdef int32_t* e_node = <int32_t*>malloc(pool_cap * sizeof(int32_t))
    cdef int32_t* e_next = <int32_t*>malloc(pool_cap * sizeof(int32_t))
    if (dist == NULL or parent == NULL or first == NULL or settled == NULL or head == NULL
            or tail == NULL or e_node == NULL or e_next == NULL):
        free(dist); free(parent); free(first); free(settled)
        free(head); free(tail); free(e_node); free(e_next)
        raise MemoryError()

    cdef Py_ssize_t s, v, u, idx, nsettled, used, e
    cdef int64_t d, nd, inf = (<int64_t>1) << 60, pending
    cdef int32_t p
    try:
        for s in range(n):
            for v in range(n):
                dist[v] = inf
                parent[v] = -1
            for d in range(maxd + 1):
                head[d] = -1
                tail[d] = -1
            dist[s] = 0
            e_node[0] = <int32_t>s
            e_next[0] = -1
            head[0] = 0
            tail[0] = 0
            used = 1
            pending = 1
            nsettled = 0
            d = 0
            while pending > 0 and d <= maxd:
                e = head[d]
                while e != -1:
                    pending -= 1
                    u = e_node[e]
                    if dist[u] == d:
                        settled[nsettled] = <int32_t>u
                        nsettled += 1
                        for k in range(ip[u], ip[u + 1]):
                            v = ix[k]
                            nd = d + wt[k]
                            if nd < dist[v]:
                                dist[v] = nd
                                parent[v] = <int32_t>u
                                e_node[used] = <int32_t>v
                                e_next[used] = -1
                                if tail[nd] == -1:
                                    head[nd] = <int32_t>used
                                else:
                                    e_next[tail[nd]] = <int32_t>used
                                tail[nd] = <int32_t>used
                                used += 1
                                pending += 1
                    e = e_next[e]
                d += 1
            first[s] = <int32_t>s
            for idx in range(nsettled):
                v = settled[idx]
                if v == s:
                    continue
                p = parent[v]
                first[v] = <int32_t>v if p == s else first[p]
            for idx in range(nsettled):
                v = settled[idx]
                dist_o[s, v] = <int32_t>dist[v]
                hop_o[s, v] = first[v]
                par_o[s, v] = parent[v]
    finally:
        free(dist); free(parent); free(first); free(settled)
        free(head); free(tail); free(e_node); free(e_next)
    return dist_a, hop_a, par_a


def fnv1a64(const unsigned char[::1] data):
    cdef uint64_t h = 14695981039346656037ULL
    cdef Py_ssize_t i
    for i in range(data.shape[0]):
        h ^= data[i]
        h *= 1099511628211ULL
    return h
