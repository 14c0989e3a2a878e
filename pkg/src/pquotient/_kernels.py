"""Compiled inner loops (numba) for the cubic and per-point scans."""
from __future__ import annotations

import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def triangle_scan(D, tol, cap):
    """Count triples with ``D[i, k] > D[i, j] + D[j, k] + tol``.

    Returns the total count and up to ``cap`` offending triples as rows
    ``(i, j, k)``, in lexicographic order.
    """
    n = D.shape[0]
    found = np.empty((cap, 3), dtype=np.int64)
    count = 0
    for i in range(n):
        for j in range(n):
            dij = D[i, j] + tol
            for k in range(n):
                if D[i, k] > dij + D[j, k]:
                    if count < cap:
                        found[count, 0] = i
                        found[count, 1] = j
                        found[count, 2] = k
                    count += 1
    return count, found[: min(count, cap)]


@numba.njit(cache=True, nogil=True)
def dijkstra_rows(W, sources):
    """Dense O(K^2) Dijkstra from each source; ties settle the smallest index."""
    K = W.shape[0]
    out = np.empty((sources.shape[0], K))
    done = np.zeros(K, dtype=np.bool_)
    for s_pos in range(sources.shape[0]):
        s = sources[s_pos]
        dist = out[s_pos]
        for v in range(K):
            dist[v] = np.inf
            done[v] = False
        dist[s] = 0.0
        for _ in range(K):
            u = -1
            best = np.inf
            for v in range(K):
                if not done[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u < 0:
                break
            done[u] = True
            for v in range(K):
                if not done[v]:
                    alt = best + W[u, v]
                    if alt < dist[v]:
                        dist[v] = alt
    return out


@numba.njit(cache=True, nogil=True)
def floyd_warshall(W):
    D = W.copy()
    K = D.shape[0]
    for k in range(K):
        for i in range(K):
            dik = D[i, k]
            if dik == np.inf:
                continue
            for j in range(K):
                alt = dik + D[k, j]
                if alt < D[i, j]:
                    D[i, j] = alt
    return D


@numba.njit(cache=True, nogil=True)
def congestion_scan(D, indptr, indices, r, R, lo, hi):
    """Flag points ``lo <= x < hi`` having a probe point (``d <= r``) outside
    the delta-component of ``x`` inside the closed ball ``B_R(x)``.

    ``indptr``/``indices`` is the CSR adjacency of the delta-graph.
    """
    n = D.shape[0]
    flags = np.zeros(hi - lo, dtype=np.bool_)
    stamp = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    for x in range(lo, hi):
        row = D[x]
        stamp[x] = x
        stack[0] = x
        top = 1
        while top > 0:
            top -= 1
            u = stack[top]
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                if stamp[v] != x and row[v] <= R:
                    stamp[v] = x
                    stack[top] = v
                    top += 1
        for y in range(n):
            if row[y] <= r and stamp[y] != x:
                flags[x - lo] = True
                break
    return flags
