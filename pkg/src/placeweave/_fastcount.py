"""Compiled ESU kernels for whole-network motif counting.

Each connected induced subgraph is visited exactly once from its minimum
vertex, so roots partition the work: chunks of roots run on independent
threads (the kernels release the GIL) and their integer count arrays sum
to the same totals for any thread count.

Subgraph classes are resolved without a leaf-time adjacency probe: every
extension candidate carries its adjacency bits toward the current subset,
so the leaf only composes a 3- or 6-bit edge mask and looks the class up
in a table derived from classify_graph.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

N_CLASS_SLOTS = 10  # nine motif classes plus OTHER

# Edge-mask bit i corresponds to PAIRS_BY_K[k][i] over subset positions
# (root, w1, w2[, w3]) in discovery order.
PAIRS_BY_K = {
    3: ((0, 1), (0, 2), (1, 2)),
    4: ((0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3)),
}

_TABLES: dict[int, np.ndarray] = {}


def mask_class_table(k: int) -> np.ndarray:
    """Map every k-vertex edge mask to its class index (OTHER if disconnected)."""
    if k in _TABLES:
        return _TABLES[k]
    from .motifs import CLASS_INDEX, classify_graph

    pairs = PAIRS_BY_K[k]
    table = np.empty(1 << len(pairs), dtype=np.int64)
    for mask in range(table.size):
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        table[mask] = CLASS_INDEX[classify_graph(k, edges)]
    _TABLES[k] = table
    return table


if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True, inline="always")
    def _adjacent(indptr, indices, a, b):
        lo = indptr[a]
        hi = indptr[a + 1]
        while lo < hi:
            mid = (lo + hi) >> 1
            v = indices[mid]
            if v == b:
                return True
            if v < b:
                lo = mid + 1
            else:
                hi = mid
        return False

    @numba.njit(cache=True, nogil=True)
    def _census_k3(indptr, indices, roots, table, counts):
        n = indptr.size - 1
        dmax = 0
        for i in range(n):
            d = indptr[i + 1] - indptr[i]
            if d > dmax:
                dmax = d
        marked = np.zeros(n, dtype=np.uint8)
        ext1 = np.empty(dmax + 1, dtype=np.int64)
        ext2 = np.empty(2 * dmax + 2, dtype=np.int64)
        bits2 = np.empty(2 * dmax + 2, dtype=np.int64)
        undo1 = np.empty(dmax + 1, dtype=np.int64)
        for ri in range(roots.size):
            v = roots[ri]
            marked[v] = 1
            n1 = 0
            for p in range(indptr[v], indptr[v + 1]):
                u = indices[p]
                marked[u] = 1
                if u > v:
                    ext1[n1] = u
                    n1 += 1
            for i1 in range(n1):
                w1 = ext1[i1]
                m2 = 0
                for j in range(i1 + 1, n1):
                    x = ext1[j]
                    b = 1  # adjacent to root
                    if _adjacent(indptr, indices, w1, x):
                        b |= 2
                    ext2[m2] = x
                    bits2[m2] = b
                    m2 += 1
                nu1 = 0
                for p in range(indptr[w1], indptr[w1 + 1]):
                    x = indices[p]
                    if marked[x] == 0:
                        marked[x] = 1
                        undo1[nu1] = x
                        nu1 += 1
                        if x > v:
                            ext2[m2] = x
                            bits2[m2] = 2  # exclusive: only w1 adjacency
                            m2 += 1
                for i2 in range(m2):
                    counts[table[1 | (bits2[i2] << 1)]] += 1
                for j in range(nu1):
                    marked[undo1[j]] = 0
            marked[v] = 0
            for p in range(indptr[v], indptr[v + 1]):
                marked[indices[p]] = 0

    @numba.njit(cache=True, nogil=True)
    def _census_k4(indptr, indices, roots, table, counts):
        n = indptr.size - 1
        dmax = 0
        for i in range(n):
            d = indptr[i + 1] - indptr[i]
            if d > dmax:
                dmax = d
        marked = np.zeros(n, dtype=np.uint8)
        ext1 = np.empty(dmax + 1, dtype=np.int64)
        ext2 = np.empty(2 * dmax + 2, dtype=np.int64)
        bits2 = np.empty(2 * dmax + 2, dtype=np.int64)
        ext3 = np.empty(3 * dmax + 3, dtype=np.int64)
        bits3 = np.empty(3 * dmax + 3, dtype=np.int64)
        undo1 = np.empty(dmax + 1, dtype=np.int64)
        undo2 = np.empty(dmax + 1, dtype=np.int64)
        for ri in range(roots.size):
            v = roots[ri]
            marked[v] = 1
            n1 = 0
            for p in range(indptr[v], indptr[v + 1]):
                u = indices[p]
                marked[u] = 1
                if u > v:
                    ext1[n1] = u
                    n1 += 1
            for i1 in range(n1):
                w1 = ext1[i1]
                m2 = 0
                for j in range(i1 + 1, n1):
                    x = ext1[j]
                    b = 1
                    if _adjacent(indptr, indices, w1, x):
                        b |= 2
                    ext2[m2] = x
                    bits2[m2] = b
                    m2 += 1
                nu1 = 0
                for p in range(indptr[w1], indptr[w1 + 1]):
                    x = indices[p]
                    if marked[x] == 0:
                        marked[x] = 1
                        undo1[nu1] = x
                        nu1 += 1
                        if x > v:
                            ext2[m2] = x
                            bits2[m2] = 2
                            m2 += 1
                for i2 in range(m2):
                    w2 = ext2[i2]
                    base = 1 | (bits2[i2] << 1)
                    m3 = 0
                    for j in range(i2 + 1, m2):
                        x = ext2[j]
                        b = bits2[j]
                        if _adjacent(indptr, indices, w2, x):
                            b |= 4
                        ext3[m3] = x
                        bits3[m3] = b
                        m3 += 1
                    nu2 = 0
                    for p in range(indptr[w2], indptr[w2 + 1]):
                        x = indices[p]
                        if marked[x] == 0:
                            marked[x] = 1
                            undo2[nu2] = x
                            nu2 += 1
                            if x > v:
                                ext3[m3] = x
                                bits3[m3] = 4
                                m3 += 1
                    for i3 in range(m3):
                        counts[table[base | (bits3[i3] << 3)]] += 1
                    for j in range(nu2):
                        marked[undo2[j]] = 0
                for j in range(nu1):
                    marked[undo1[j]] = 0
            marked[v] = 0
            for p in range(indptr[v], indptr[v + 1]):
                marked[indices[p]] = 0


def census_counts(
    indptr: np.ndarray, indices: np.ndarray, k: int, threads: int = 1
) -> np.ndarray:
    """Count classes of connected induced k-subgraphs; returns int64[10].

    Roots are dealt round-robin into chunks; chunk results are summed in
    chunk order, so totals are exact and identical for every thread count.
    """
    if not HAVE_NUMBA:
        raise RuntimeError("numba is not available; use the python engine")
    if k not in (3, 4):
        raise ValueError(f"compiled census supports k in (3, 4), got {k}")
    n = indptr.size - 1
    counts = np.zeros(N_CLASS_SLOTS, dtype=np.int64)
    if n == 0:
        return counts
    kernel = _census_k3 if k == 3 else _census_k4
    table = mask_class_table(k)
    n_chunks = 1 if threads <= 1 else min(n, threads * 8)
    chunks = [np.arange(c, n, n_chunks, dtype=np.int64) for c in range(n_chunks)]
    partials = [np.zeros(N_CLASS_SLOTS, dtype=np.int64) for _ in chunks]
    if threads <= 1:
        for roots, part in zip(chunks, partials):
            kernel(indptr, indices, roots, table, part)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(kernel, indptr, indices, roots, table, part)
                for roots, part in zip(chunks, partials)
            ]
            for fut in futures:
                fut.result()
    for part in partials:
        counts += part
    return counts


def warmup() -> None:
    """Trigger JIT compilation on a toy graph so timings exclude it."""
    if not HAVE_NUMBA:
        return
    indptr = np.array([0, 1, 2], dtype=np.int64)
    indices = np.array([1, 0], dtype=np.int64)
    for k in (3, 4):
        census_counts(indptr, indices, k, threads=1)
