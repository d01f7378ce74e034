"""Graph distances, diameters, distortions and tree statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .structures import Dissection, Graph, OuterplanarMap, PlaneTree

EXACT_LIMIT = 20_000
SAMPLED_PAIRS = 10_000
TWO_SWEEP_STARTS = 8
BOUNDED_ROUNDS = 512


class MetricError(ValueError):
    pass


def _csr(g):
    if isinstance(g, (Graph, OuterplanarMap)):
        return g.csr
    if isinstance(g, Dissection):
        return g.graph().csr
    if isinstance(g, tuple) and len(g) == 2:
        return g
    raise TypeError(f"cannot read a graph from {type(g).__name__}")


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

@njit(cache=True)
def _bfs(ptr, nbr, src, dist, queue):
    dist[:] = -1
    dist[src] = 0
    queue[0] = src
    head, tail = 0, 1
    while head < tail:
        u = queue[head]
        head += 1
        du = dist[u] + 1
        for e in range(ptr[u], ptr[u + 1]):
            w = nbr[e]
            if dist[w] < 0:
                dist[w] = du
                queue[tail] = w
                tail += 1
    return tail


@njit(cache=True)
def _eccentricities(ptr, nbr, sources):
    n = ptr.shape[0] - 1
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    ecc = np.empty(sources.shape[0], np.int64)
    for i in range(sources.shape[0]):
        reached = _bfs(ptr, nbr, sources[i], dist, queue)
        if reached < n:
            return ecc, False
        ecc[i] = dist[queue[reached - 1]]
    return ecc, True


@njit(cache=True)
def _two_sweep(ptr, nbr, starts):
    n = ptr.shape[0] - 1
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    best = 0
    for s in starts:
        reached = _bfs(ptr, nbr, s, dist, queue)
        if reached < n:
            return -1
        far = queue[reached - 1]
        reached = _bfs(ptr, nbr, far, dist, queue)
        ecc = dist[queue[reached - 1]]
        if ecc > best:
            best = ecc
    return best


@njit(cache=True)
def _identity_distortion(ptrA, nbrA, ptrB, nbrB, scaleB, sources):
    """max over sources s and all v of |dA(s,v) - scaleB dB(s,v)|."""
    n = ptrA.shape[0] - 1
    dA = np.empty(n, np.int64)
    dB = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    worst = 0.0
    for s in sources:
        _bfs(ptrA, nbrA, s, dA, queue)
        _bfs(ptrB, nbrB, s, dB, queue)
        for v in range(n):
            x = abs(dA[v] - scaleB * dB[v])
            if x > worst:
                worst = x
    return worst


@njit(cache=True)
def _cycle_penalty(ptr, nbr, scale, sources):
    """max |d_D(s,v) - scale d_cycle(s,v)| for a polygon labelled 0..n-1."""
    n = ptr.shape[0] - 1
    d = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    worst = 0.0
    for s in sources:
        _bfs(ptr, nbr, s, d, queue)
        for v in range(n):
            k = abs(v - s)
            if n - k < k:
                k = n - k
            x = abs(scale * k - d[v])
            if x > worst:
                worst = x
    return worst


@njit(cache=True)
def _relation_distortion(ptrX, nbrX, ptrY, nbrY, xs, ys, scaleY, rows):
    """Distortion of the relation {(xs[i], ys[i])}, scanning rows i in ``rows``."""
    nX = ptrX.shape[0] - 1
    nY = ptrY.shape[0] - 1
    dX = np.empty(nX, np.int64)
    dY = np.empty(nY, np.int64)
    qX = np.empty(nX, np.int64)
    qY = np.empty(nY, np.int64)
    last_x = -1
    worst = 0.0
    for i in rows:
        if xs[i] != last_x:
            _bfs(ptrX, nbrX, xs[i], dX, qX)
            last_x = xs[i]
        _bfs(ptrY, nbrY, ys[i], dY, qY)
        for j in range(xs.shape[0]):
            x = abs(dX[xs[j]] - scaleY * dY[ys[j]])
            if x > worst:
                worst = x
    return worst


@njit(cache=True)
def _bounded_diameter(ptr, nbr, max_rounds):
    """Diameter by eccentricity bounds: BFS from the vertex with the largest
    upper bound (alternating with the last farthest vertex) until no upper
    bound exceeds the best eccentricity found.  Returns (value, exact); after
    ``max_rounds`` BFS runs the best eccentricity so far is a lower bound."""
    n = ptr.shape[0] - 1
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    upper = np.full(n, n, np.int64)
    done = np.zeros(n, np.bool_)
    best = 0
    v = 0
    far = True
    for _ in range(max_rounds):
        reached = _bfs(ptr, nbr, v, dist, queue)
        if reached < n:
            return -1, False
        done[v] = True
        e = dist[queue[reached - 1]]
        if e > best:
            best = e
        top = -1
        u_top = -1
        for w in range(n):
            b = e + dist[w]
            if b < upper[w]:
                upper[w] = b
            if not done[w] and upper[w] > top:
                top = upper[w]
                u_top = w
        if top <= best:
            return best, True
        nxt = queue[reached - 1]
        if far and not done[nxt]:
            v = nxt
        else:
            v = u_top
        far = not far
    return best, False


@njit(cache=True)
def _pair_distances(ptr, nbr, us, vs):
    """d(us[i], vs[i]) with us sorted (one BFS per distinct source)."""
    n = ptr.shape[0] - 1
    dist = np.empty(n, np.int64)
    queue = np.empty(n, np.int64)
    out = np.empty(us.shape[0], np.int64)
    last = -1
    for i in range(us.shape[0]):
        if us[i] != last:
            _bfs(ptr, nbr, us[i], dist, queue)
            last = us[i]
        out[i] = dist[vs[i]]
    return out


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def graph_distances(graph, sources) -> np.ndarray:
    """BFS distance table, one row per source."""
    ptr, nbr = _csr(graph)
    n = ptr.size - 1
    src = np.atleast_1d(np.asarray(sources, np.int64))
    out = np.empty((src.size, n), np.int64)
    queue = np.empty(n, np.int64)
    for i, s in enumerate(src):
        reached = _bfs(ptr, nbr, int(s), out[i], queue)
        if reached < n:
            raise MetricError("graph is disconnected")
    return out


@dataclass(frozen=True)
class Diameter:
    value: int
    mode: str  # "exact", "lower_bound" or "two_sweep"

    def __int__(self):
        return self.value


def diameter(graph, mode: str = "auto", rng=None, starts: int = TWO_SWEEP_STARTS,
             max_rounds: int = BOUNDED_ROUNDS) -> Diameter:
    """Graph diameter with a mode tag.

    ``"exact"`` prunes all-pairs BFS with eccentricity bounds and is always
    exact.  ``"two_sweep"`` is the best of ``starts`` double sweeps (a lower
    bound).  ``"auto"`` is exact up to ``EXACT_LIMIT`` vertices; beyond, the
    bounded search gets ``max_rounds`` BFS runs and is tagged ``"lower_bound"``
    if it has not certified the value by then.
    """
    ptr, nbr = _csr(graph)
    n = ptr.size - 1
    if n == 1:
        return Diameter(0, "exact")
    if mode in ("auto", "exact"):
        rounds = n if mode == "exact" or n <= EXACT_LIMIT else max_rounds
        val, exact = _bounded_diameter(ptr, nbr, rounds)
        if val < 0:
            raise MetricError("graph is disconnected")
        return Diameter(int(val), "exact" if exact else "lower_bound")
    if mode == "two_sweep":
        if rng is None:
            rng = np.random.default_rng(0)
        st = np.concatenate([[0], rng.integers(0, n, size=starts - 1)]).astype(np.int64)
        val = _two_sweep(ptr, nbr, st)
        if val < 0:
            raise MetricError("graph is disconnected")
        return Diameter(int(val), "two_sweep")
    raise MetricError(f"unknown diameter mode {mode!r}")


def pair_distances(graph, us, vs) -> np.ndarray:
    """Distances between paired vertices us[i], vs[i]."""
    ptr, nbr = _csr(graph)
    us = np.asarray(us, np.int64)
    vs = np.asarray(vs, np.int64)
    order = np.argsort(us, kind="stable")
    out = np.empty(us.size, np.int64)
    out[order] = _pair_distances(ptr, nbr, us[order], vs[order])
    if np.any(out < 0):
        raise MetricError("graph is disconnected")
    return out


def eccentricities(graph) -> np.ndarray:
    ptr, nbr = _csr(graph)
    ecc, ok = _eccentricities(ptr, nbr, np.arange(ptr.size - 1, dtype=np.int64))
    if not ok:
        raise MetricError("graph is disconnected")
    return ecc


@dataclass(frozen=True)
class Measured:
    value: float
    mode: str  # "exact" or "sampled"


def _sources(n, rng, limit, k):
    if n <= limit:
        return np.arange(n, dtype=np.int64), "exact"
    if rng is None:
        rng = np.random.default_rng(0)
    return np.sort(rng.choice(n, size=k, replace=False)).astype(np.int64), "sampled"


def penalty(d: Dissection, nu_D: float, rng=None, sampled_sources: int = 64) -> Measured:
    """max over vertex pairs of |(1 - nu_D) d_cycle - d_D|.

    Exact (all sources) up to ``EXACT_LIMIT`` vertices; beyond that a random
    subset of sources is scanned, which gives a lower bound.
    """
    if not 0 <= nu_D < 1:
        raise MetricError("penalty needs 0 <= nu_D < 1")
    ptr, nbr = d.graph().csr
    src, mode = _sources(d.n_vertices, rng, EXACT_LIMIT, sampled_sources)
    return Measured(float(_cycle_penalty(ptr, nbr, 1.0 - nu_D, src)), mode)


def map_boundary_distortion(m: OuterplanarMap, scale: float, rng=None,
                            sampled_sources: int = 64) -> Measured:
    """Distortion of the identity between (M, d_M) and (bd M, scale d_bd)."""
    b = m.boundary()
    src, mode = _sources(m.n, rng, EXACT_LIMIT, sampled_sources)
    val = _identity_distortion(m.ptr, m.nbr, b.ptr, b.nbr, float(scale), src)
    return Measured(float(val), mode)


@dataclass(frozen=True)
class Correspondence:
    """Relation between two finite spaces, as parallel index arrays."""

    xs: np.ndarray
    ys: np.ndarray

    def check_total(self, nX: int, nY: int):
        if np.unique(self.xs).size != nX or np.unique(self.ys).size != nY:
            raise MetricError("correspondence is not total on both sides")


def distortion(corr: Correspondence, dX, dY, scaleY: float = 1.0) -> float:
    """sup over related pairs of |dX - scaleY dY| from full distance matrices."""
    dX = np.asarray(dX)
    dY = np.asarray(dY)
    corr.check_total(dX.shape[0], dY.shape[0])
    a = dX[np.ix_(corr.xs, corr.xs)]
    b = dY[np.ix_(corr.ys, corr.ys)]
    return float(np.max(np.abs(a - scaleY * b))) if a.size else 0.0


def graph_distortion(corr: Correspondence, gX, gY, scaleY: float = 1.0,
                     rng=None, sampled_rows: int = 64) -> Measured:
    """Distortion computed by BFS; exact up to ``EXACT_LIMIT`` related pairs."""
    pX, nX = _csr(gX)
    pY, nY = _csr(gY)
    corr.check_total(pX.size - 1, pY.size - 1)
    order = np.argsort(corr.xs, kind="stable")
    xs = np.ascontiguousarray(corr.xs[order])
    ys = np.ascontiguousarray(corr.ys[order])
    rows, mode = _sources(xs.size, rng, EXACT_LIMIT, sampled_rows)
    return Measured(float(_relation_distortion(pX, nX, pY, nY, xs, ys, float(scaleY), rows)), mode)


def boundary_looptree_correspondence(vertex: np.ndarray) -> Correspondence:
    """Map vertex vertex[u] related to each leaf-tree node u."""
    return Correspondence(np.asarray(vertex, np.int64), np.arange(len(vertex), dtype=np.int64))


@dataclass(frozen=True)
class GiantStatistics:
    u_star: int
    max_outdegree: int
    fringe_sizes: np.ndarray
    Z: np.ndarray
    pruned_size: int


def giant_statistics(tree: PlaneTree) -> GiantStatistics:
    """Lexicographically first vertex of maximal outdegree and its fringe.

    Preorder is the lexicographic order, so argmax picks the first maximiser.
    """
    u = int(np.argmax(tree.outdegrees))
    ch = tree.children(u)
    sizes = tree.subtree_sizes[ch]
    Z = np.cumsum(sizes)
    pruned = len(tree) - int(sizes.sum())
    return GiantStatistics(u, int(tree.outdegrees[u]), sizes, Z, pruned)


def largest_face(d: Dissection) -> int:
    return d.largest_face()


def floyd_warshall(graph) -> np.ndarray:
    """Dense all-pairs distances (small graphs; used as a test oracle)."""
    ptr, nbr = _csr(graph)
    n = ptr.size - 1
    D = np.full((n, n), np.inf)
    np.fill_diagonal(D, 0)
    for u in range(n):
        D[u, nbr[ptr[u]:ptr[u + 1]]] = np.minimum(D[u, nbr[ptr[u]:ptr[u + 1]]], 1)
    for k in range(n):
        D = np.minimum(D, D[:, k:k + 1] + D[k:k + 1, :])
    return D
