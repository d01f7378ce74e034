"""Exact samplers for conditioned Galton-Watson trees, Gibbs partitions,
Boltzmann dissections and Boltzmann outerplanar maps.

Randomness comes from :class:`Rng`, a PCG64 stream keyed by a master seed and
a tuple of integers (the numpy ``SeedSequence`` spawn key), so the stream for
replica ``i`` at size ``n`` is ``Rng(seed).derive(n, i)``.
"""

from __future__ import annotations

import hashlib
import math
from collections import OrderedDict
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.signal import fftconvolve

from .series import (
    OffspringLaw,
    SeriesError,
    SeriesTable,
    WeightModel,
    _inverse_one_minus_np,
    _scaled_D,
    _bisect,
    cached_phase_parameters,
    regime_identity_residual,
    IDENTITY_TOL,
)
from .structures import (
    BlockList,
    Dissection,
    EnrichedTree,
    OuterplanarMap,
    PlaneTree,
    assemble_dissection,
    assemble_map_leaf,
    assemble_map_vertex,
    blocks_to_map,
)

DEFAULT_DRAW_BUDGET = 10_000_000


class SamplerError(RuntimeError):
    pass


class Rng:
    """Seeded, splittable PCG64 stream."""

    def __init__(self, seed: int, key: tuple = ()):
        self.seed = int(seed) & (2 ** 64 - 1)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def derive(self, *key) -> "Rng":
        return Rng(self.seed, self.key + tuple(key))

    def random(self, size=None):
        return self.gen.random(size)

    def integers(self, lo, hi=None, size=None):
        return self.gen.integers(lo, hi, size=size)

    def __repr__(self):
        return f"Rng(seed={self.seed}, key={self.key})"


def _as_rng(rng) -> Rng:
    if isinstance(rng, Rng):
        return rng
    if rng is None:
        return Rng(0)
    return Rng(int(rng))


def _probabilities(law) -> np.ndarray:
    p = law.probabilities if isinstance(law, OffspringLaw) else law
    p = np.asarray([float(x) for x in p], dtype=float)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise SamplerError("offspring weights must be finite and non-negative")
    return p


# ---------------------------------------------------------------------------
# i.i.d. sums conditioned on their total
# ---------------------------------------------------------------------------

def _conv(a, b, N):
    if min(a.size, b.size) <= 2048:
        return np.convolve(a, b)[:N + 1]
    out = fftconvolve(a, b)[:N + 1]
    np.clip(out, 0.0, None, out=out)
    # zero the entries that are exactly impossible
    sa = (a > 0).astype(float)
    sb = (b > 0).astype(float)
    out[fftconvolve(sa, sb)[:N + 1] < 0.5] = 0.0
    return out


class ConditionedSum:
    """Law of m i.i.d. draws from ``p`` given that they sum to a target.

    Holds the convolution powers P_k for every segment length k reached by
    repeated halving of m, truncated at the largest target N.  A sample is
    drawn by splitting the target between the two halves of the index range
    with the exact conditional law, recursively.
    """

    def __init__(self, p: np.ndarray, m: int, N: int):
        self.m, self.N = int(m), int(N)
        base = np.zeros(N + 1)
        q = p[:N + 1]
        base[:q.size] = q
        need = set()
        stack = [self.m]
        while stack:
            k = stack.pop()
            if k in need:
                continue
            need.add(k)
            if k > 1:
                stack.extend({k // 2, k - k // 2})
        self.sizes = np.array(sorted(need), np.int64)
        tabs = {1: base}
        for k in self.sizes[1:]:
            k = int(k)
            a, b = k // 2, k - k // 2
            tabs[k] = _conv(tabs[a], tabs[b], N)
            # keep magnitudes near one; the conditional law is scale free
            top = tabs[k].max()
            if top > 0:
                tabs[k] = tabs[k] / top
        self.tables = np.vstack([tabs[int(k)] for k in self.sizes])

    def mass(self, total: int) -> float:
        """Unnormalised P(S_m = total) (same scale for all totals)."""
        return float(self.tables[-1, total]) if 0 <= total <= self.N else 0.0

    def masses(self) -> np.ndarray:
        return self.tables[-1]

    def sample(self, total: int, rng: Rng) -> np.ndarray:
        if self.mass(total) <= 0:
            raise SamplerError(f"sum {total} is not attainable with {self.m} draws")
        out = np.zeros(self.m, np.int64)
        u = rng.random(max(self.m - 1, 1))
        ok = _split_fill(self.tables, self.sizes, self.m, int(total), u, out)
        if not ok:
            raise SamplerError("conditioned sum lost all mass (floating-point underflow)")
        return out


@njit(cache=True)
def _split_fill(tab, sizes, m, T, u, out):
    sm = np.empty(256, np.int64)
    sT = np.empty(256, np.int64)
    so = np.empty(256, np.int64)
    sp = 0
    sm[0], sT[0], so[0] = m, T, 0
    sp = 1
    k = 0
    while sp > 0:
        sp -= 1
        mm, TT, off = sm[sp], sT[sp], so[sp]
        if mm == 1:
            out[off] = TT
            continue
        if TT == 0:
            for i in range(mm):
                out[off + i] = 0
            continue
        a = mm // 2
        b = mm - a
        ra = np.searchsorted(sizes, a)
        rb = np.searchsorted(sizes, b)
        total = 0.0
        for x in range(TT + 1):
            total += tab[ra, x] * tab[rb, TT - x]
        if not total > 0.0:
            return False
        target = u[k] * total
        k += 1
        acc = 0.0
        chosen = -1
        last = -1
        for x in range(TT + 1):
            w = tab[ra, x] * tab[rb, TT - x]
            if w > 0.0:
                last = x
                acc += w
                if acc > target:
                    chosen = x
                    break
        if chosen < 0:
            chosen = last
        sm[sp], sT[sp], so[sp] = b, TT - chosen, off + a
        sp += 1
        sm[sp], sT[sp], so[sp] = a, chosen, off
        sp += 1
    return True


_SUM_CACHE: OrderedDict = OrderedDict()


def conditioned_sum(p: np.ndarray, m: int, N: int) -> ConditionedSum:
    key = (hashlib.sha1(np.ascontiguousarray(p[:N + 1]).tobytes()).hexdigest(), m, N)
    hit = _SUM_CACHE.get(key)
    if hit is None:
        hit = ConditionedSum(p, m, N)
        _SUM_CACHE[key] = hit
        while len(_SUM_CACHE) > 24:
            _SUM_CACHE.popitem(last=False)
    else:
        _SUM_CACHE.move_to_end(key)
    return hit


# ---------------------------------------------------------------------------
# cycle lemma
# ---------------------------------------------------------------------------

def cycle_lemma_rotation(deg: np.ndarray) -> np.ndarray:
    """The unique rotation of a sequence with sum(d - 1) = -1 that is a
    depth-first tree encoding: start right after the first minimum."""
    walk = np.cumsum(deg - 1)
    i = int(np.argmin(walk))
    return np.roll(deg, -(i + 1))


def forest_rotation(deg: np.ndarray, rng: Rng) -> np.ndarray:
    """Uniform choice among the j valid forest rotations of a sequence with
    sum(d - 1) = -j: start right after the first visit of one of the levels
    min, ..., min + j - 1 of the walk."""
    walk = np.cumsum(deg - 1)
    j = -int(walk[-1])
    if j < 1:
        raise SamplerError("sequence does not encode a forest")
    level = int(walk.min()) + int(rng.integers(0, j))
    i = int(np.argmax(walk == level))
    return np.roll(deg, -(i + 1))


# ---------------------------------------------------------------------------
# conditioned Galton-Watson trees
# ---------------------------------------------------------------------------

def _degree_sequence_rejection(p, n, total, rng, max_draws):
    cdf = np.cumsum(p / p.sum())
    cdf[-1] = 1.0
    cap = max(1, (1 << 18) // n)
    batch = 8
    draws = 0
    while draws < max_draws:
        batch = min(cap, 2 * batch)
        seqs = np.searchsorted(cdf, rng.random((batch, n)), side="right")
        hits = np.flatnonzero(seqs.sum(axis=1) == total)
        if hits.size:
            draws += (int(hits[0]) + 1) * n
            return seqs[hits[0]].astype(np.int64), draws
        draws += batch * n
    raise SamplerError(
        f"retry budget of {max_draws} draws exhausted for n={n} "
        f"(P(sum = {total}) is too small; use method='split')"
    )


def sample_gw_tree_by_vertices(law, n: int, rng=None, method: str = "split",
                               max_draws: int = DEFAULT_DRAW_BUDGET) -> PlaneTree:
    """Galton-Watson tree conditioned to have exactly n vertices.

    The degree sequence is drawn i.i.d. conditioned on summing to n - 1,
    either by splitting the sum recursively (``"split"``, exact and fast) or
    by plain rejection (``"rejection"``); the cycle lemma then picks the
    single rotation that encodes a tree.  Degrees above n - 1 cannot occur
    and are dropped before normalising.
    """
    rng = _as_rng(rng)
    if n < 1:
        raise SamplerError("tree size must be >= 1")
    p = _probabilities(law)[:n]
    if n == 1:
        if p[0] <= 0:
            raise SamplerError("p_0 = 0: no finite tree")
        return PlaneTree([0])
    if p[0] <= 0 or not np.any(p[1:] > 0):
        raise SamplerError(f"no attainable degree sum {n - 1} with this law")
    if method == "split":
        cs = conditioned_sum(p, n, n - 1)
        if cs.mass(n - 1) <= 0:
            raise SamplerError(f"no attainable degree sum {n - 1} with this law")
        seq = cs.sample(n - 1, rng)
    elif method == "rejection":
        seq, _ = _degree_sequence_rejection(p, n, n - 1, rng, max_draws)
    else:
        raise SamplerError(f"unknown method {method!r}")
    return PlaneTree(cycle_lemma_rotation(seq))


def sample_gw_tree_by_leaves(law, n_leaves: int, rng=None, max_attempts: int = 1_000_000) -> PlaneTree:
    """Galton-Watson tree conditioned on its number of leaves, by rejection.

    ``law`` must be the (possibly truncated) probability vector itself; its
    missing mass is the law of the degrees left out.  Trees are grown in depth-first order and abandoned as soon as the leaves
    found plus the vertices still pending exceed the target.
    """
    rng = _as_rng(rng)
    if n_leaves < 1:
        raise SamplerError("every finite tree has at least one leaf")
    p = _probabilities(law)
    total = p.sum()
    if total > 1 + 1e-9:
        raise SamplerError(f"offspring law sums to {total} > 1")
    if not 0 < p[0] < 1:
        raise SamplerError("leaf conditioning needs 0 < p_0 < 1")
    # no renormalisation: trees with the same leaf count differ in size, so
    # the truncated tail stays a separate outcome that aborts the tree
    cdf = np.cumsum(p)
    buf = np.empty(0, np.int64)
    pos = 0
    for _ in range(max_attempts):
        degs = []
        pending, leaves = 1, 0
        while pending > 0 and leaves + pending <= n_leaves:
            if pos >= buf.size:
                buf = np.searchsorted(cdf, rng.random(4096), side="right")
                pos = 0
            d = int(buf[pos])
            pos += 1
            if d >= p.size:
                break
            degs.append(d)
            pending += d - 1
            leaves += d == 0
        if pending == 0 and leaves == n_leaves:
            return PlaneTree(degs)
    raise SamplerError(f"no tree with {n_leaves} leaves after {max_attempts} attempts")


# ---------------------------------------------------------------------------
# Gibbs partitions
# ---------------------------------------------------------------------------

def sample_chord_restricted(series: SeriesTable, model: WeightModel, d: int, rng=None) -> tuple:
    """Composition (k_1, ..., k_m) of d with probability prod iota_{k_i+2} / [z^d]phi_D.

    Sequential rule: the first part is k with probability
    iota_{k+2} [z^{d-k}]phi_D / [z^d]phi_D.
    """
    rng = _as_rng(rng)
    if d < 1 or d > series.truncation:
        raise SamplerError(f"size {d} outside the series table")
    s = np.array([float(x) for x in series.s_coeffs[:d + 1]])
    phi = np.array([float(x) for x in series.phiD_coeffs[:d + 1]])
    if not phi[d] > 0:
        raise SamplerError(f"zero partition function at size {d}")
    out = []
    k = d
    while k > 0:
        w = s[1:k + 1] * phi[k - 1::-1][:k]
        c = np.cumsum(w)
        j = int(np.searchsorted(c, rng.random() * c[-1], side="right")) + 1
        j = min(j, k)
        while w[j - 1] <= 0:
            j -= 1
        out.append(j)
        k -= j
    return tuple(out)


@njit(cache=True)
def _compositions(kk, a, G, u):
    """Chord-restricted compositions of kk[v] for every v (flat output)."""
    n = kk.shape[0]
    parts = np.empty(max(1, kk.sum()), np.int64)
    ptr = np.zeros(n + 1, np.int64)
    c = 0
    t = 0
    for v in range(n):
        k = kk[v]
        while k > 0:
            total = 0.0
            for j in range(1, k + 1):
                total += a[j] * G[k - j]
            target = u[t] * total
            t += 1
            acc = 0.0
            pick = -1
            last = -1
            for j in range(1, k + 1):
                w = a[j] * G[k - j]
                if w > 0.0:
                    last = j
                    acc += w
                    if acc > target:
                        pick = j
                        break
            if pick < 0:
                pick = last
            parts[c] = pick
            c += 1
            k -= pick
        ptr[v + 1] = c
    return parts[:c], ptr


@njit(cache=True)
def _em_split(deg, G, t, u):
    """Number k of Ehrenborg-Mendez children at each vertex: weight G_k t^(d-k)."""
    n = deg.shape[0]
    kk = np.zeros(n, np.int64)
    for v in range(n):
        d = deg[v]
        if d == 0:
            continue
        total = 0.0
        tp = 1.0
        for k in range(d, -1, -1):
            total += G[k] * tp
            tp *= t
        target = u[v] * total
        acc = 0.0
        tp = 1.0
        pick = -1
        last = d
        for k in range(d, -1, -1):
            w = G[k] * tp
            if w > 0.0:
                last = k
                acc += w
                if acc > target:
                    pick = k
                    break
            tp *= t
        kk[v] = pick if pick >= 0 else last
    return kk


# ---------------------------------------------------------------------------
# model tables
# ---------------------------------------------------------------------------

class _GammaTable:
    """Scaled face weights a_j = iota_{j+2} x^j and G_k = [z^k]phi_D(x z)."""

    def __init__(self, model: WeightModel, x: float):
        self.model, self.x = model, x
        self.a = np.zeros(1)
        self.G = np.ones(1)

    def ensure(self, K: int):
        if self.G.size > K:
            return
        K = max(K, 2 * (self.G.size - 1), 16)
        self.a = self.model.s_coeffs(K, self.x)
        self.G = _phi_series(self.a)


@njit(cache=True)
def _phi_series(a):
    K = a.shape[0] - 1
    G = np.zeros(K + 1)
    G[0] = 1.0
    for k in range(1, K + 1):
        acc = 0.0
        for j in range(1, k + 1):
            acc += a[j] * G[k - j]
        G[k] = acc
    return G


@lru_cache(maxsize=16)
def _gamma_table(model: WeightModel, x: float) -> _GammaTable:
    return _GammaTable(model, x)


def _dissection_tables(model: WeightModel, K: int):
    params = cached_phase_parameters(model)
    tab = _gamma_table(model, params.tau_D)
    tab.ensure(K)
    return tab.a[:K + 1], tab.G[:K + 1]


@lru_cache(maxsize=32)
def augmented_tilt(model: WeightModel) -> float:
    """Tilt t for the augmented vertex tree: psi_D(t) + t/(1-t) = 1 if
    solvable, else the radius min(rho_phiD, 1)."""
    params = cached_phase_parameters(model)
    r = model.radius
    if model.kind == "power_law" and regime_identity_residual(model) <= IDENTITY_TOL:
        return r
    lim = min(params.rho_phiD, 1.0)

    def psi_w(x):
        s0, s1, _ = model.s_derivs(x)
        if s0 >= 1 or x >= 1:
            return math.inf
        return x * s1 / (1 - s0) + x / (1 - x)

    if psi_w(lim) <= 1:
        return lim
    return _bisect(lambda x: psi_w(x) - 1, 0.0, lim * (1 - 1e-15), "augmented tilt")


# ---------------------------------------------------------------------------
# dissections
# ---------------------------------------------------------------------------

def dissection_enriched_tree(model: WeightModel, n: int, rng=None, method: str = "split") -> EnrichedTree:
    rng = _as_rng(rng)
    a, G = _dissection_tables(model, n)
    if not G[n - 1] > 0 and n > 1:
        raise SamplerError(f"no dissection of size {n} has positive weight")
    p = G[:n] / G[:n].sum()
    tree = sample_gw_tree_by_vertices(p, n, rng, method=method)
    deg = tree.outdegrees
    u = rng.random(max(1, int(deg.sum())))
    parts, ptr = _compositions(np.ascontiguousarray(deg), a, G, u)
    comps = [tuple(parts[ptr[v]:ptr[v + 1]].tolist()) for v in range(n)]
    return EnrichedTree(tree, comps)


def sample_dissection(model: WeightModel, n: int, rng=None, method: str = "split") -> Dissection:
    """Boltzmann dissection of size n: conditioned tree, then chord-restricted
    decorations, glued."""
    if n < 1:
        raise SamplerError("dissection size must be >= 1")
    return assemble_dissection(dissection_enriched_tree(model, n, rng, method))


# ---------------------------------------------------------------------------
# outerplanar maps: validation-scale couplings
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _map_vertex_tables(model: WeightModel, K: int):
    params = cached_phase_parameters(model)
    t = params.tau_O
    Dt = _scaled_D(model, t, K)
    phiO = _inverse_one_minus_np(Dt, K)
    return Dt, phiO


def sample_map_vertex_coupling(model: WeightModel, n: int, rng=None):
    """Boltzmann map of size n via the vertex tree with dissection sequences.

    Returns ``(map, enriched_tree)``.  Cost of the series tables is cubic in
    n, so this is meant for moderate n; :func:`sample_map` scales further.
    """
    rng = _as_rng(rng)
    if n < 1:
        raise SamplerError("map size must be >= 1")
    if n == 1:
        return OuterplanarMap.single_vertex(), EnrichedTree(PlaneTree([0]), [[]])
    Dt, phiO = _map_vertex_tables(model, max(n, 8))
    p = phiO[:n] / phiO[:n].sum()
    tree = sample_gw_tree_by_vertices(p, n, rng)
    deco = []
    for d in tree.outdegrees:
        seq = []
        k = int(d)
        while k > 0:
            w = Dt[1:k + 1] * phiO[k - 1::-1][:k]
            c = np.cumsum(w)
            m = int(np.searchsorted(c, rng.random() * c[-1], side="right")) + 1
            m = min(m, k)
            while w[m - 1] <= 0:
                m -= 1
            seq.append(sample_dissection(model, m, rng))
            k -= m
        deco.append(seq)
    enriched = EnrichedTree(tree, deco)
    return assemble_map_vertex(enriched), enriched


def map_leaf_law(model: WeightModel, K: int) -> np.ndarray:
    """Leaf-coupling offspring weights p_0 = 1 - D(tau_O), p_k = tau_O^(k-1) D_(k-1)."""
    from .series import offspring_law

    params = cached_phase_parameters(model)
    return offspring_law(model, params, "MapLeafLaw", K).probabilities


def sample_map_leaf_coupling(model: WeightModel, n: int, rng=None, max_attempts: int = 1_000_000):
    """Boltzmann map of size n via the tree with n leaves and one block
    dissection per internal vertex.  Returns ``(map, leaf_tree)``."""
    rng = _as_rng(rng)
    if n < 1:
        raise SamplerError("map size must be >= 1")
    if n == 1:
        return OuterplanarMap.single_vertex(), PlaneTree([0])
    p = map_leaf_law(model, n)
    tree = sample_gw_tree_by_leaves(p, n, rng, max_attempts)
    deco = [sample_dissection(model, int(d) - 1, rng) if d else None for d in tree.outdegrees]
    enriched = EnrichedTree(tree, deco)
    return assemble_map_leaf(enriched), tree


# ---------------------------------------------------------------------------
# outerplanar maps: large-scale augmented vertex tree
# ---------------------------------------------------------------------------

@dataclass
class MapSample:
    """A sampled map with its vertex tree and block structure."""

    map: OuterplanarMap
    tree: PlaneTree
    em_children: np.ndarray      # Ehrenborg-Mendez children per vertex
    block_sizes: np.ndarray      # vertices per block (origin included)
    blocks: list                 # block dissections, in block order

    @property
    def n(self) -> int:
        return self.map.n


@njit(cache=True)
def _augmented_blocks(deg, kk, child_ptr, child_idx, parent, parts, part_ptr):
    """Block membership, local labels and chords of the augmented tree."""
    n = deg.shape[0]
    block = np.full(n, -1, np.int64)
    local = np.zeros(n, np.int64)
    origin_local = np.zeros(n, np.int64)  # o(u) in local labels
    nb = 0
    for v in range(n):
        for i in range(child_ptr[v + 1] - child_ptr[v]):
            if i >= kk[v]:
                nb += 1
    b_origin = np.empty(nb, np.int64)
    b_rank = np.empty(nb, np.int64)
    b_size = np.ones(nb, np.int64)
    nc = 0
    for v in range(n):
        cnt = part_ptr[v + 1] - part_ptr[v]
        if cnt > 1:
            nc += cnt - 1
        nc += kk[v]
    c_block = np.empty(nc, np.int64)
    c_i = np.empty(nc, np.int64)
    c_j = np.empty(nc, np.int64)
    nb = 0
    # first pass in preorder: assign blocks and local labels
    for v in range(1, n):
        p = parent[v]
        i = 0
        while child_idx[child_ptr[p] + i] != v:
            i += 1
        if i >= kk[p]:
            block[v] = nb
            b_origin[nb] = p
            b_rank[nb] = i - kk[p] + 1
            nb += 1
        else:
            block[v] = block[p]
        local[v] = b_size[block[v]]
        b_size[block[v]] += 1
    # second pass: o(u) and chords
    c = 0
    for v in range(1, n):
        p = parent[v]
        i = 0
        while child_idx[child_ptr[p] + i] != v:
            i += 1
        if i >= kk[p]:
            origin_local[v] = 0
        elif i + 1 < kk[p]:
            origin_local[v] = local[child_idx[child_ptr[p] + i + 1]]
        else:
            origin_local[v] = origin_local[p]
    for v in range(1, n):
        k = kk[v]
        m = part_ptr[v + 1] - part_ptr[v]
        K = 0
        for q in range(m - 1):
            K += parts[part_ptr[v] + q]
            # path = EM children then o(v); entry K (0-based) is the chord end
            c_block[c] = block[v]
            c_i[c] = local[v]
            c_j[c] = local[child_idx[child_ptr[v] + K]]
            c += 1
        size = b_size[block[v]]
        for q in range(k):
            x = local[child_idx[child_ptr[v] + q]]
            if q + 1 < k:
                y = local[child_idx[child_ptr[v] + q + 1]]
            else:
                y = origin_local[v]
            gap = (y - x) % size
            if gap != 1 and gap != size - 1:
                c_block[c] = block[v]
                c_i[c] = min(x, y)
                c_j[c] = max(x, y)
                c += 1
    c_block = c_block[:c]
    c_i = c_i[:c]
    c_j = c_j[:c]
    return block, local, b_origin, b_rank, b_size, c_block, c_i, c_j


def sample_map(model: WeightModel, n: int, rng=None) -> MapSample:
    """Boltzmann map of size n through the augmented vertex tree.

    Every non-root vertex carries d children with weight
    w_d = sum_{k <= d} [z^k]phi_D: its first k children are its
    Ehrenborg-Mendez children inside the block it belongs to, the remaining
    d - k children are the roots of the blocks hanging at it.  The root
    carries only block roots.  The non-root vertices form a conditioned
    forest whose number of trees j has weight t^j; degrees are drawn with
    the exact conditioned-sum sampler and a uniform valid forest rotation.
    """
    rng = _as_rng(rng)
    if n < 1:
        raise SamplerError("map size must be >= 1")
    if n == 1:
        m = OuterplanarMap.single_vertex()
        return MapSample(m, PlaneTree([0]), np.zeros(1, np.int64), np.zeros(0, np.int64), [])
    mm = n - 1
    t = augmented_tilt(model)
    tab = _gamma_table(model, t)
    tab.ensure(mm)
    a, G = tab.a[:mm + 1], tab.G[:mm + 1]
    # q_d = sum_k G_k t^(d-k)
    q = _prefix_tilt(G, t)[:mm]
    q = q / q.sum()
    cs = conditioned_sum(q, mm, mm - 1)
    mass = cs.masses()
    j = np.arange(1, mm + 1)
    with np.errstate(divide="ignore"):
        logw = np.log(j) + j * math.log(t) + np.log(mass[mm - j])
    logw[~np.isfinite(logw)] = -np.inf
    if not np.isfinite(logw.max()):
        raise SamplerError(f"no map of size {n} has positive weight")
    w = np.exp(logw - logw.max())
    cdf = np.cumsum(w)
    jj = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")) + 1
    seq = cs.sample(mm - jj, rng)
    forest = forest_rotation(seq, rng)
    deg = np.concatenate([[jj], forest]).astype(np.int64)
    tree = PlaneTree(deg)
    kk = _em_split(deg, G, t, rng.random(n))
    kk[0] = 0
    parts, part_ptr = _compositions(kk, a, G, rng.random(max(1, int(kk.sum()))))
    cptr, cidx = tree._children
    block, local, b_origin, b_rank, b_size, c_block, c_i, c_j = _augmented_blocks(
        deg, kk, cptr, cidx, tree.parents, parts, part_ptr)
    nb = b_size.size
    start = np.zeros(nb, np.int64)
    np.cumsum(b_size[:-1], out=start[1:])
    flat = np.empty(int(b_size.sum()), np.int64)
    flat[start] = b_origin
    v = np.arange(1, n)
    flat[start[block[1:]] + local[1:]] = v
    cmap = blocks_to_map(n, flat, start, b_size, b_rank, c_block, c_i, c_j,
                         (0, int(tree.children(0)[0])))
    corder = np.argsort(c_block, kind="stable")
    cb, ci, cj = c_block[corder], c_i[corder], c_j[corder]
    cut = np.searchsorted(cb, np.arange(nb + 1))
    blocks = [Dissection(int(b_size[b]) - 1,
                         np.column_stack([ci[cut[b]:cut[b + 1]], cj[cut[b]:cut[b + 1]]]))
              for b in range(nb)]
    return MapSample(cmap, tree, kk, b_size, blocks)


@njit(cache=True)
def _prefix_tilt(G, t):
    q = np.empty_like(G)
    acc = 0.0
    for d in range(G.shape[0]):
        acc = acc * t + G[d]
        q[d] = acc
    return q
