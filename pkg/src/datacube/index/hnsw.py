"""Navigable small-world graph over unit vectors (inner-product metric).

Layer 0 lives in flat int32 adjacency arrays and its search/link kernels
are numba-compiled; upper layers hold a small fraction of nodes
(p = 1/M per level) and stay in plain dicts. Neighbor lists are pruned
with the diversity heuristic: a candidate is kept only if it is closer
to the query than to every neighbor already kept.
"""

from __future__ import annotations

import heapq
import math

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def _dot(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


@njit(cache=True, fastmath=True)
def _sift_up(keys, vals, i):
    while i > 0:
        parent = (i - 1) >> 1
        if keys[i] < keys[parent]:
            keys[i], keys[parent] = keys[parent], keys[i]
            vals[i], vals[parent] = vals[parent], vals[i]
            i = parent
        else:
            break


@njit(cache=True, fastmath=True)
def _sift_down(keys, vals, n, i):
    while True:
        left = 2 * i + 1
        right = left + 1
        smallest = i
        if left < n and keys[left] < keys[smallest]:
            smallest = left
        if right < n and keys[right] < keys[smallest]:
            smallest = right
        if smallest == i:
            break
        keys[i], keys[smallest] = keys[smallest], keys[i]
        vals[i], vals[smallest] = vals[smallest], vals[i]
        i = smallest


@njit(cache=True, fastmath=True)
def _search_layer0(q, eps, n_eps, ef, vectors, adj, cnt, visited, epoch,
                   ckeys, cvals, rkeys, rvals):
    """Best-first beam search on layer 0.

    ckeys/cvals: candidate min-heap keyed on -similarity (best first);
    rkeys/rvals: bounded min-heap of the ef best results (worst at root).
    Returns the number of results left in rkeys/rvals.
    """
    nc = 0
    nr = 0
    for j in range(n_eps):
        node = eps[j]
        if visited[node] == epoch:
            continue
        visited[node] = epoch
        sim = _dot(vectors[node], q)
        ckeys[nc] = -sim
        cvals[nc] = node
        nc += 1
        _sift_up(ckeys, cvals, nc - 1)
        rkeys[nr] = sim
        rvals[nr] = node
        nr += 1
        _sift_up(rkeys, rvals, nr - 1)
    while nc > 0:
        best = -ckeys[0]
        node = cvals[0]
        nc -= 1
        ckeys[0] = ckeys[nc]
        cvals[0] = cvals[nc]
        _sift_down(ckeys, cvals, nc, 0)
        if nr >= ef and best < rkeys[0]:
            break
        for j in range(cnt[node]):
            nb = adj[node, j]
            if visited[nb] == epoch:
                continue
            visited[nb] = epoch
            sim = _dot(vectors[nb], q)
            if nr < ef:
                rkeys[nr] = sim
                rvals[nr] = nb
                nr += 1
                _sift_up(rkeys, rvals, nr - 1)
            elif sim > rkeys[0]:
                rkeys[0] = sim
                rvals[0] = nb
                _sift_down(rkeys, rvals, nr, 0)
            else:
                continue
            ckeys[nc] = -sim
            cvals[nc] = nb
            nc += 1
            _sift_up(ckeys, cvals, nc - 1)
    return nr


@njit(cache=True, fastmath=True)
def _select_diverse(q, cand_nodes, cand_sims, n_cand, m, vectors, out, keep_pruned):
    """Diversity heuristic; optionally tops up with pruned candidates."""
    order = np.argsort(-cand_sims[:n_cand])
    n_out = 0
    pruned = np.empty(n_cand, dtype=np.int32)
    n_pruned = 0
    for oi in range(n_cand):
        if n_out >= m:
            break
        i = order[oi]
        node = cand_nodes[i]
        sim_q = cand_sims[i]
        keep = True
        for j in range(n_out):
            if _dot(vectors[out[j]], vectors[node]) > sim_q:
                keep = False
                break
        if keep:
            out[n_out] = node
            n_out += 1
        elif keep_pruned:
            pruned[n_pruned] = node
            n_pruned += 1
    if keep_pruned:
        k = 0
        while n_out < m and k < n_pruned:
            out[n_out] = pruned[k]
            n_out += 1
            k += 1
    return n_out


@njit(cache=True, fastmath=True)
def _link0(src, dst, m_max, vectors, adj, cnt):
    """Append dst to src's layer-0 list, heuristic-pruning on overflow."""
    c = cnt[src]
    for j in range(c):
        if adj[src, j] == dst:
            return
    if c < m_max:
        adj[src, c] = dst
        cnt[src] = c + 1
        return
    nodes = np.empty(c + 1, dtype=np.int32)
    sims = np.empty(c + 1, dtype=np.float32)
    v = vectors[src]
    for j in range(c):
        nodes[j] = adj[src, j]
        sims[j] = _dot(vectors[adj[src, j]], v)
    nodes[c] = dst
    sims[c] = _dot(vectors[dst], v)
    out = np.empty(m_max, dtype=np.int32)
    n = _select_diverse(v, nodes, sims, c + 1, m_max, vectors, out, False)
    for j in range(n):
        adj[src, j] = out[j]
    cnt[src] = n


class HnswGraph:
    """Approximate nearest-neighbor graph over rows of a unit-vector matrix."""

    def __init__(self, dim: int, m: int = 16, ef_construction: int = 200, seed: int = 0):
        self.dim = dim
        self.m = m
        self.m0 = 2 * m
        self.ef_construction = ef_construction
        self.level_mult = 1.0 / math.log(m) if m > 1 else 1.0
        self.rng = np.random.default_rng(seed)
        self.size = 0
        self.entry = -1
        self.max_level = -1
        self.upper: dict[int, dict[int, list[int]]] = {}
        cap = 1024
        self._matrix = np.zeros((cap, dim), dtype=np.float32)
        self._adj0 = np.full((cap, self.m0), -1, dtype=np.int32)
        self._cnt0 = np.zeros(cap, dtype=np.int32)
        self._visited = np.zeros(cap, dtype=np.int64)
        self._epoch = 0
        self._alloc_workspace(cap)

    def _alloc_workspace(self, cap: int) -> None:
        size = cap + 4096
        self._ckeys = np.empty(size, dtype=np.float32)
        self._cvals = np.empty(size, dtype=np.int32)
        self._rkeys = np.empty(size, dtype=np.float32)
        self._rvals = np.empty(size, dtype=np.int32)

    def _grow(self, need: int) -> None:
        cap = self._matrix.shape[0]
        if need <= cap:
            return
        new_cap = max(need, cap * 2)
        matrix = np.zeros((new_cap, self.dim), dtype=np.float32)
        matrix[:cap] = self._matrix
        self._matrix = matrix
        adj = np.full((new_cap, self.m0), -1, dtype=np.int32)
        adj[:cap] = self._adj0
        self._adj0 = adj
        cnt = np.zeros(new_cap, dtype=np.int32)
        cnt[:cap] = self._cnt0
        self._cnt0 = cnt
        visited = np.zeros(new_cap, dtype=np.int64)
        visited[:cap] = self._visited
        self._visited = visited
        self._alloc_workspace(new_cap)

    # -- upper layers (small; plain python) --------------------------------

    def _greedy_upper(self, q: np.ndarray, entry: int, level: int) -> int:
        current = entry
        current_sim = float(self._matrix[current] @ q)
        improved = True
        while improved:
            improved = False
            for nb in self.upper.get(level, {}).get(current, []):
                sim = float(self._matrix[nb] @ q)
                if sim > current_sim:
                    current, current_sim = nb, sim
                    improved = True
        return current

    def _search_upper(self, q: np.ndarray, eps: list[int], ef: int, level: int):
        self._epoch += 1
        epoch = self._epoch
        visited = self._visited
        cand: list[tuple[float, int]] = []
        best: list[tuple[float, int]] = []
        for node in eps:
            if visited[node] == epoch:
                continue
            visited[node] = epoch
            sim = float(self._matrix[node] @ q)
            heapq.heappush(cand, (-sim, node))
            heapq.heappush(best, (sim, node))
        while cand:
            neg, node = heapq.heappop(cand)
            if len(best) >= ef and -neg < best[0][0]:
                break
            for nb in self.upper.get(level, {}).get(node, []):
                if visited[nb] == epoch:
                    continue
                visited[nb] = epoch
                sim = float(self._matrix[nb] @ q)
                if len(best) < ef:
                    heapq.heappush(best, (sim, nb))
                    heapq.heappush(cand, (-sim, nb))
                elif sim > best[0][0]:
                    heapq.heapreplace(best, (sim, nb))
                    heapq.heappush(cand, (-sim, nb))
        return best

    def _link_upper(self, src: int, dst: int, level: int) -> None:
        lst = self.upper[level].setdefault(src, [])
        if dst in lst:
            return
        lst.append(dst)
        if len(lst) > self.m:
            v = self._matrix[src]
            arr = np.asarray(lst, dtype=np.int32)
            sims = (self._matrix[arr] @ v).astype(np.float32)
            out = np.empty(self.m, dtype=np.int32)
            n = _select_diverse(v, arr, sims, len(arr), self.m, self._matrix, out, False)
            self.upper[level][src] = [int(x) for x in out[:n]]

    # -- public API ---------------------------------------------------------

    def add(self, vector: np.ndarray) -> int:
        node = self.size
        self._grow(node + 1)
        self._matrix[node] = vector
        self.size += 1
        level = int(-math.log(self.rng.uniform(1e-12, 1.0)) * self.level_mult)
        for lv in range(1, level + 1):
            self.upper.setdefault(lv, {}).setdefault(node, [])
        if self.entry < 0:
            self.entry = node
            self.max_level = level
            return node
        q = self._matrix[node]
        entry = self.entry
        for lv in range(self.max_level, level, -1):
            entry = self._greedy_upper(q, entry, lv)
        eps = [entry]
        for lv in range(min(level, self.max_level), 0, -1):
            best = self._search_upper(q, eps, self.ef_construction, lv)
            nodes = np.asarray([n for _, n in best], dtype=np.int32)
            sims = np.asarray([s for s, _ in best], dtype=np.float32)
            out = np.empty(self.m, dtype=np.int32)
            n_sel = _select_diverse(q, nodes, sims, len(nodes), self.m, self._matrix, out, True)
            for j in range(n_sel):
                nb = int(out[j])
                self._link_upper(node, nb, lv)
                self._link_upper(nb, node, lv)
            eps = [n for _, n in sorted(best, key=lambda t: -t[0])]
        self._epoch += 1
        eps_arr = np.asarray(eps, dtype=np.int32)
        nr = _search_layer0(
            q, eps_arr, len(eps_arr), self.ef_construction, self._matrix,
            self._adj0, self._cnt0, self._visited, self._epoch,
            self._ckeys, self._cvals, self._rkeys, self._rvals,
        )
        nodes = self._rvals[:nr].copy()
        sims = self._rkeys[:nr].copy()
        out = np.empty(self.m, dtype=np.int32)
        n_sel = _select_diverse(q, nodes, sims, nr, self.m, self._matrix, out, True)
        for j in range(n_sel):
            nb = int(out[j])
            _link0(node, nb, self.m0, self._matrix, self._adj0, self._cnt0)
            _link0(nb, node, self.m0, self._matrix, self._adj0, self._cnt0)
        if level > self.max_level:
            self.max_level = level
            self.entry = node
        return node

    def search(self, query: np.ndarray, k: int, ef: int) -> list[tuple[float, int]]:
        """Top-k (similarity, node) pairs, best first."""
        if self.entry < 0 or k < 1:
            return []
        q = np.ascontiguousarray(query, dtype=np.float32)
        entry = self.entry
        for lv in range(self.max_level, 0, -1):
            entry = self._greedy_upper(q, entry, lv)
        self._epoch += 1
        eps = np.asarray([entry], dtype=np.int32)
        nr = _search_layer0(
            q, eps, 1, max(ef, k), self._matrix, self._adj0, self._cnt0,
            self._visited, self._epoch,
            self._ckeys, self._cvals, self._rkeys, self._rvals,
        )
        sims = self._rkeys[:nr]
        nodes = self._rvals[:nr]
        order = np.argsort(-sims, kind="stable")[:k]
        return [(float(sims[i]), int(nodes[i])) for i in order]
