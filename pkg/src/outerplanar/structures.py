"""Plane trees, dissections and outerplanar maps, and the bijections between
them.

Conventions
-----------
* A :class:`PlaneTree` is its outdegree sequence in depth-first (preorder)
  order.  Node 0 is the root.
* A :class:`Dissection` of size n is an (n+1)-gon with vertices 0..n in
  counter-clockwise order, rooted at the edge 0 -> 1.  Vertex 0 (the origin)
  is not counted in the size.
* An :class:`OuterplanarMap` is a rotation system: for every vertex the list
  of neighbours in counter-clockwise order, stored in CSR form.  The outer
  face lies to the right of the root dart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit


class StructureError(ValueError):
    """Raised for malformed trees, decorations or maps."""


# ---------------------------------------------------------------------------
# plane trees
# ---------------------------------------------------------------------------

@njit(cache=True)
def _tree_arrays(deg):
    n = deg.shape[0]
    parent = np.full(n, -1, np.int64)
    depth = np.zeros(n, np.int64)
    size = np.ones(n, np.int64)
    stack = np.empty(n + 1, np.int64)
    remaining = np.empty(n + 1, np.int64)
    stack[0] = 0
    remaining[0] = deg[0]
    top = 1
    for i in range(1, n):
        while remaining[top - 1] == 0:
            top -= 1
        p = stack[top - 1]
        remaining[top - 1] -= 1
        parent[i] = p
        depth[i] = depth[p] + 1
        stack[top] = i
        remaining[top] = deg[i]
        top += 1
    for i in range(n - 1, 0, -1):
        size[parent[i]] += size[i]
    return parent, depth, size


class PlaneTree:
    """Rooted ordered tree given by its preorder outdegree sequence."""

    def __init__(self, outdegrees):
        deg = np.ascontiguousarray(outdegrees, dtype=np.int64)
        if deg.ndim != 1 or deg.size == 0:
            raise StructureError("a plane tree needs at least one vertex")
        if np.any(deg < 0):
            raise StructureError("negative outdegree")
        walk = np.cumsum(deg - 1)
        if walk[-1] != -1 or (deg.size > 1 and walk[:-1].min() < 0):
            raise StructureError("outdegree sequence is not a depth-first tree encoding")
        deg.setflags(write=False)
        self.outdegrees = deg

    def __len__(self):
        return int(self.outdegrees.size)

    def __eq__(self, other):
        return isinstance(other, PlaneTree) and np.array_equal(self.outdegrees, other.outdegrees)

    def __hash__(self):
        return hash(self.outdegrees.tobytes())

    def __repr__(self):
        if len(self) <= 20:
            return f"PlaneTree{self.to_parens()}"
        return f"PlaneTree(n={len(self)})"

    @cached_property
    def _arrays(self):
        return _tree_arrays(self.outdegrees)

    @property
    def parents(self) -> np.ndarray:
        return self._arrays[0]

    @property
    def depths(self) -> np.ndarray:
        return self._arrays[1]

    @property
    def subtree_sizes(self) -> np.ndarray:
        return self._arrays[2]

    @property
    def height(self) -> int:
        return int(self.depths.max())

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.outdegrees == 0))

    @cached_property
    def _children(self):
        ptr = np.zeros(len(self) + 1, np.int64)
        np.cumsum(self.outdegrees, out=ptr[1:])
        idx = np.argsort(self.parents[1:], kind="stable") + 1
        return ptr, idx

    def children(self, v: int) -> np.ndarray:
        ptr, idx = self._children
        return idx[ptr[v]:ptr[v + 1]]

    def mirror(self) -> "PlaneTree":
        """The tree with every child list reversed."""
        out = np.empty(len(self), np.int64)
        stack = [0]
        k = 0
        while stack:
            v = stack.pop()
            out[k] = self.outdegrees[v]
            k += 1
            stack.extend(self.children(v).tolist())
        return PlaneTree(out)

    def to_parens(self) -> str:
        return "(" + ",".join(str(int(d)) for d in self.outdegrees) + ")"

    @classmethod
    def from_parens(cls, text: str) -> "PlaneTree":
        body = text.strip().strip("()")
        return cls([int(t) for t in body.split(",") if t.strip()])


@dataclass(frozen=True)
class LukasiewiczPath:
    """Values W_1, ..., W_n followed by the terminal value -1."""

    values: np.ndarray

    @property
    def excursion(self) -> np.ndarray:
        return self.values[:-1]


def lukasiewicz(tree: PlaneTree) -> LukasiewiczPath:
    w = np.zeros(len(tree) + 1, np.int64)
    np.cumsum(tree.outdegrees - 1, out=w[1:])
    return LukasiewiczPath(w)


def mirrored(tree: PlaneTree) -> LukasiewiczPath:
    """Lukasiewicz path read in reverse depth-first order."""
    return lukasiewicz(tree.mirror())


# ---------------------------------------------------------------------------
# simple graphs
# ---------------------------------------------------------------------------

class Graph:
    """Undirected graph on vertices 0..n-1 with an edge list (multi-edges allowed)."""

    def __init__(self, n: int, edges):
        self.n = int(n)
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        self.edges = e

    @cached_property
    def csr(self):
        n, e = self.n, self.edges
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.argsort(src, kind="stable")
        ptr = np.zeros(n + 1, np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=ptr[1:])
        return ptr, np.ascontiguousarray(dst[order])

    def to_csv(self, path):
        np.savetxt(path, self.edges, fmt="%d", delimiter=",", header="u,v", comments="")


def looptree(tree: PlaneTree) -> Graph:
    """Looptree graph: each vertex is joined to its first and last child and
    consecutive siblings are joined.  A single child gives a doubled edge."""
    n = len(tree)
    if n == 1:
        return Graph(1, np.empty((0, 2), np.int64))
    ptr, idx = tree._children
    deg = tree.outdegrees
    internal = np.flatnonzero(deg > 0)
    first = idx[ptr[internal]]
    # every non-root node links to its next sibling, or to its parent if last
    nxt = np.empty(n - 1, np.int64)
    nxt[:-1] = idx[1:]
    last_pos = ptr[1:][deg > 0] - 1
    nxt[last_pos] = tree.parents[idx[last_pos]]
    sib = np.column_stack([idx, nxt])
    return Graph(n, np.vstack([np.column_stack([internal, first]), sib]))


def tree_graph(tree: PlaneTree) -> Graph:
    p = tree.parents
    return Graph(len(tree), np.column_stack([p[1:], np.arange(1, len(tree))]))


# ---------------------------------------------------------------------------
# outerplanar maps
# ---------------------------------------------------------------------------

@njit(cache=True)
def _twins_sorted(ptr, nbr):
    """Twin darts via sorted keys; linear-logarithmic for large degrees."""
    n = ptr.shape[0] - 1
    m = nbr.shape[0]
    src = np.empty(m, np.int64)
    for u in range(n):
        for e in range(ptr[u], ptr[u + 1]):
            src[e] = u
    key = src * n + nbr
    rkey = nbr * n + src
    order = np.argsort(key)
    sorted_keys = key[order]
    twin = np.empty(m, np.int64)
    for e in range(m):
        j = np.searchsorted(sorted_keys, rkey[e])
        twin[e] = order[j]
    return twin


@njit(cache=True)
def _walk_face(nxt, start, mark):
    e = start
    length = 0
    while True:
        mark[e] = True
        length += 1
        e = nxt[e]
        if e == start:
            break
    return length


class OuterplanarMap:
    """Rooted outerplanar map as a counter-clockwise rotation system."""

    def __init__(self, ptr, nbr, root=None):
        self.ptr = np.ascontiguousarray(ptr, dtype=np.int64)
        self.nbr = np.ascontiguousarray(nbr, dtype=np.int64)
        self.n = int(self.ptr.size - 1)
        if root is not None:
            root = (int(root[0]), int(root[1]))
        elif self.n > 1:
            raise StructureError("a map with more than one vertex needs a root edge")
        self.root = root

    @classmethod
    def from_rotation(cls, rotation, root=None) -> "OuterplanarMap":
        ptr = np.zeros(len(rotation) + 1, np.int64)
        np.cumsum([len(r) for r in rotation], out=ptr[1:])
        nbr = np.fromiter((w for r in rotation for w in r), np.int64, int(ptr[-1]))
        return cls(ptr, nbr, root)

    @classmethod
    def single_vertex(cls) -> "OuterplanarMap":
        return cls(np.zeros(2, np.int64), np.zeros(0, np.int64), None)

    def rotation(self, v: int) -> np.ndarray:
        return self.nbr[self.ptr[v]:self.ptr[v + 1]]

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.ptr)

    @property
    def n_edges(self) -> int:
        return int(self.nbr.size // 2)

    @cached_property
    def src(self) -> np.ndarray:
        return np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)

    @cached_property
    def twin(self) -> np.ndarray:
        if self.nbr.size == 0:
            return np.zeros(0, np.int64)
        return _twins_sorted(self.ptr, self.nbr)

    @cached_property
    def next_right(self) -> np.ndarray:
        """Successor of each dart along the face to its right."""
        t = self.twin
        w = self.nbr
        base = self.ptr[w]
        deg = self.ptr[w + 1] - base
        return base + (t - base + 1) % deg

    @cached_property
    def next_left(self) -> np.ndarray:
        t = self.twin
        w = self.nbr
        base = self.ptr[w]
        deg = self.ptr[w + 1] - base
        return base + (t - base - 1) % deg

    def dart(self, u: int, v: int) -> int:
        hits = np.flatnonzero(self.rotation(u) == v)
        if hits.size == 0:
            raise StructureError(f"no edge {u}-{v}")
        return int(self.ptr[u] + hits[0])

    @property
    def root_dart(self) -> int | None:
        return None if self.root is None else self.dart(*self.root)

    @cached_property
    def outer_darts(self) -> np.ndarray:
        mark = np.zeros(self.nbr.size, np.bool_)
        if self.root is not None:
            _walk_face(self.next_right, self.root_dart, mark)
        return mark

    def edges(self) -> np.ndarray:
        keep = self.src < self.nbr
        return np.column_stack([self.src[keep], self.nbr[keep]])

    def graph(self) -> Graph:
        return Graph(self.n, self.edges())

    @property
    def csr(self):
        return self.ptr, self.nbr

    def boundary(self) -> "OuterplanarMap":
        """Keep exactly the edges having a dart on the outer face."""
        if self.root is None:
            return self
        on = self.outer_darts | self.outer_darts[self.twin]
        deg = np.bincount(self.src[on], minlength=self.n)
        ptr = np.zeros(self.n + 1, np.int64)
        np.cumsum(deg, out=ptr[1:])
        return OuterplanarMap(ptr, self.nbr[on], self.root)

    def faces(self):
        """All faces as left-face dart cycles, outer face first."""
        m = self.nbr.size
        seen = np.zeros(m, np.bool_)
        out = []
        if self.root is not None:
            out.append(self._face_from(int(self.twin[self.root_dart]), self.next_left, seen))
        for e in range(m):
            if not seen[e]:
                out.append(self._face_from(e, self.next_left, seen))
        return out

    @staticmethod
    def _face_from(e0, nxt, seen):
        face = [e0]
        seen[e0] = True
        e = int(nxt[e0])
        while e != e0:
            face.append(e)
            seen[e] = True
            e = int(nxt[e])
        return face

    def inner_faces(self):
        """Inner faces as vertex cycles (counter-clockwise)."""
        return [[int(self.src[e]) for e in f] for f in self.faces()[1:]]

    def validate(self):
        """Check connectivity, simple edges and that every vertex is on the outer face."""
        if self.n == 1:
            if self.nbr.size:
                raise StructureError("loop at a single vertex")
            return
        t = self.twin
        if not np.array_equal(self.nbr[t], self.src):
            raise StructureError("rotation system is not symmetric")
        if np.any(self.src == self.nbr):
            raise StructureError("loop edge")
        seen = np.zeros(self.n, np.bool_)
        seen[self.src[self.outer_darts]] = True
        if not seen.all():
            raise StructureError("vertex not incident to the outer face")
        # Euler: a connected plane map has V - E + F = 2
        if self.n - self.n_edges + len(self.faces()) != 2:
            raise StructureError("rotation system is not a connected plane map")

    def canonical_code(self) -> tuple:
        """Relabel by breadth-first discovery from the root dart; each
        rotation starts at the dart through which its vertex was found."""
        if self.root is None:
            return (self.n,)
        label = np.full(self.n, -1, np.int64)
        start = np.empty(self.n, np.int64)
        r0 = self.root_dart
        label[self.root[0]] = 0
        start[self.root[0]] = r0
        order = [self.root[0]]
        k = 0
        while k < len(order):
            u = order[k]
            k += 1
            b, d = self.ptr[u], self.ptr[u + 1] - self.ptr[u]
            off = start[u] - b
            for i in range(d):
                e = b + (off + i) % d
                w = self.nbr[e]
                if label[w] < 0:
                    label[w] = len(order)
                    start[w] = self.twin[e]
                    order.append(w)
        rows = []
        for u in order:
            b, d = self.ptr[u], self.ptr[u + 1] - self.ptr[u]
            off = start[u] - b
            rows.append(tuple(int(label[self.nbr[b + (off + i) % d]]) for i in range(d)))
        return (self.n, tuple(rows))

    @classmethod
    def from_code(cls, code) -> "OuterplanarMap":
        """Inverse of :meth:`canonical_code` (the root edge is 0 -> rows[0][0])."""
        if len(code) == 1:
            return cls.single_vertex()
        n, rows = code
        return cls.from_rotation(rows, (0, rows[0][0]))

    # -- serialisation -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": self.edges().tolist(),
            "rotation": [self.rotation(v).tolist() for v in range(self.n)],
            "root": list(self.root) if self.root else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OuterplanarMap":
        return cls.from_rotation(data["rotation"], data.get("root"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


# ---------------------------------------------------------------------------
# dissections
# ---------------------------------------------------------------------------

class Dissection:
    """Dissection of the (size+1)-gon 0, 1, ..., size rooted at 0 -> 1."""

    def __init__(self, size: int, chords=(), face_degrees=None):
        if size < 1:
            raise StructureError("a dissection has size >= 1")
        self.size = int(size)
        c = np.asarray(chords, dtype=np.int64).reshape(-1, 2)
        c = np.sort(c, axis=1)
        if c.size:
            c = c[np.lexsort((c[:, 1], c[:, 0]))]
        self.chords = c
        self._face_degrees = None if face_degrees is None else np.asarray(face_degrees, np.int64)

    def __eq__(self, other):
        return (isinstance(other, Dissection) and self.size == other.size
                and np.array_equal(self.chords, other.chords))

    def __hash__(self):
        return hash((self.size, self.chords.tobytes()))

    def __repr__(self):
        return f"Dissection(size={self.size}, chords={self.chords.tolist()})"

    @property
    def n_vertices(self) -> int:
        return self.size + 1

    def encoding(self) -> tuple:
        return (self.size, tuple(map(tuple, self.chords.tolist())))

    def edges(self) -> np.ndarray:
        m = self.size + 1
        if m == 2:
            ring = np.array([[0, 1]], np.int64)
        else:
            ring = np.column_stack([np.arange(m), (np.arange(m) + 1) % m])
        return np.vstack([ring, self.chords])

    def graph(self) -> Graph:
        return Graph(self.n_vertices, self.edges())

    def to_map(self) -> OuterplanarMap:
        blocks = BlockList()
        blocks.add(np.arange(self.n_vertices), self.chords, 0)
        return blocks.to_map(self.n_vertices, (0, 1))

    def faces(self) -> list:
        """Inner faces as counter-clockwise vertex cycles."""
        return self.to_map().inner_faces()

    @property
    def face_degrees(self) -> np.ndarray:
        if self._face_degrees is None:
            self._face_degrees = np.array([len(f) for f in self.faces()], np.int64)
        return self._face_degrees

    def largest_face(self) -> int:
        """Largest inner-face degree (0 for the single edge)."""
        fd = self.face_degrees
        return int(fd.max()) if fd.size else 0

    def weight(self, model, exact: bool = True):
        w = 1
        for k in self.face_degrees:
            w = w * model.iota(int(k), exact=exact)
        return w

    def validate(self):
        m = self.size + 1
        c = self.chords
        if c.size:
            if np.any(c[:, 0] < 0) or np.any(c[:, 1] >= m):
                raise StructureError("chord endpoint out of range")
            gap = c[:, 1] - c[:, 0]
            if np.any((gap < 2) | (gap > m - 2)):
                raise StructureError("chord joins adjacent vertices")
            if len({tuple(x) for x in c.tolist()}) != len(c):
                raise StructureError("repeated chord")
            a, b = c[:, 0], c[:, 1]
            cross = (a[:, None] < a[None, :]) & (a[None, :] < b[:, None]) & (b[:, None] < b[None, :])
            if cross.any():
                raise StructureError("crossing chords")
        if np.any(self.face_degrees < 3) and m > 2:
            raise StructureError("inner face of degree < 3")
        if int(self.face_degrees.sum()) + m != 2 * len(self.edges()):
            raise StructureError("face degree sum mismatch")

    def to_dict(self) -> dict:
        return {"size": self.size, "chords": self.chords.tolist()}


# ---------------------------------------------------------------------------
# assembly from blocks
# ---------------------------------------------------------------------------

class BlockList:
    """Blocks of an outerplanar map in flat form.

    Block b has vertices ``verts[b]`` in counter-clockwise boundary order
    starting at its origin, local chords, and ``rank[b]``: its position among
    the blocks hanging at its origin (the first block at a vertex has rank 1;
    rank 0 is reserved for the block in which the vertex is not the origin).
    """

    def __init__(self):
        self.verts = []
        self.chords = []
        self.rank = []

    def add(self, verts, chords, rank):
        self.verts.append(np.asarray(verts, np.int64))
        self.chords.append(np.asarray(chords, np.int64).reshape(-1, 2))
        self.rank.append(int(rank))

    def __len__(self):
        return len(self.verts)

    def to_map(self, n: int, root) -> OuterplanarMap:
        if n == 1:
            return OuterplanarMap.single_vertex()
        sizes = np.array([v.size for v in self.verts], np.int64)
        start = np.zeros(sizes.size, np.int64)
        np.cumsum(sizes[:-1], out=start[1:])
        nch = np.array([c.shape[0] for c in self.chords], np.int64)
        cc = np.concatenate(self.chords) if nch.sum() else np.zeros((0, 2), np.int64)
        return blocks_to_map(n, np.concatenate(self.verts), start, sizes,
                             np.array(self.rank, np.int64),
                             np.repeat(np.arange(sizes.size), nch), cc[:, 0], cc[:, 1], root)


def blocks_to_map(n, flat, start, sizes, rank, chord_block, chord_i, chord_j, root) -> OuterplanarMap:
    """Glue blocks given in flat arrays into a map.

    Block b occupies ``flat[start[b]:start[b] + sizes[b]]`` (boundary order,
    origin first); chords are (block, local i, local j) triples.
    """
    if n == 1:
        return OuterplanarMap.single_vertex()
    # boundary edges i -> i+1 (one edge for a 2-vertex block)
    nb = np.where(sizes == 2, 1, sizes)
    bid = np.repeat(np.arange(sizes.size), nb)
    li = np.arange(bid.size) - np.repeat(np.cumsum(nb) - nb, nb)
    lj = (li + 1) % sizes[bid]
    bid = np.concatenate([bid, np.asarray(chord_block, np.int64)])
    li = np.concatenate([li, np.asarray(chord_i, np.int64)])
    lj = np.concatenate([lj, np.asarray(chord_j, np.int64)])
    # both directions
    bid = np.concatenate([bid, bid])
    li, lj = np.concatenate([li, lj]), np.concatenate([lj, li])
    k = sizes[bid]
    src = flat[start[bid] + li]
    dst = flat[start[bid] + lj]
    slot = np.where(li == 0, rank[bid], 0)
    key = (lj - li) % k
    order = np.lexsort((key, slot, src))
    deg = np.bincount(src, minlength=n)
    if np.any(deg == 0):
        raise StructureError("isolated vertex in block assembly")
    ptr = np.zeros(n + 1, np.int64)
    np.cumsum(deg, out=ptr[1:])
    return OuterplanarMap(ptr, dst[order], root)


def _em_block(children, comps, root, origin_label=0):
    """Polygon of an Ehrenborg-Mendez tree rooted at ``root``.

    ``children(u)`` lists the tree children of u and ``comps[u]`` is its
    chord-restricted composition.  Returns the nodes in preorder (local
    labels 1, 2, ...) and the chords as local label pairs; the faces are
    returned as degree list as a by-product.
    """
    order = []
    local = {}
    stack = [root]
    while stack:
        u = stack.pop()
        local[u] = len(order) + 1
        order.append(u)
        stack.extend(reversed(list(children(u))))
    size = len(order) + 1
    chords = []
    faces = []
    # o(u) in local labels
    o = {root: origin_label}
    for u in order:
        ch = list(children(u))
        for i, c in enumerate(ch):
            o[c] = local[ch[i + 1]] if i + 1 < len(ch) else o[u]
        comp = comps[u]
        if sum(comp) != len(ch):
            raise StructureError(f"composition {comp} does not match outdegree {len(ch)}")
        path = [local[c] for c in ch] + [o[u]]
        K = 0
        for part in comp[:-1]:
            K += part
            chords.append((local[u], path[K]))
        # consecutive path entries are joined too; keep the non-sides
        for a, b in zip(path, path[1:]):
            if (b - a) % size not in (1, size - 1):
                chords.append((min(a, b), max(a, b)))
        faces.extend(p + 2 for p in comp)
    return order, chords, faces


@dataclass
class EnrichedTree:
    """Plane tree with one decoration per vertex.

    For dissections the decoration of v is a composition of outdeg(v); for
    the map vertex coupling it is a list of :class:`Dissection` whose sizes
    sum to outdeg(v); for the leaf coupling it is a dissection of size
    outdeg(v) - 1 at internal vertices and ``None`` at leaves.
    """

    tree: PlaneTree
    decoration: list


def assemble_dissection(enriched: EnrichedTree) -> Dissection:
    """Ehrenborg-Mendez gluing: tree vertex i becomes polygon vertex i+1."""
    tree, comps = enriched.tree, enriched.decoration
    n = len(tree)
    if len(comps) != n:
        raise StructureError("one composition per vertex required")
    for v in range(n):
        if sum(comps[v]) != tree.outdegrees[v] or any(k < 1 for k in comps[v]):
            raise StructureError(f"bad composition at vertex {v}")
    order, chords, faces = _em_block(tree.children, comps, 0)
    # preorder of the whole tree is the identity, so local label = index + 1
    assert order == list(range(n))
    return Dissection(n, chords, faces)


def assemble_map_vertex(enriched: EnrichedTree) -> OuterplanarMap:
    """Glue each vertex's ordered dissection sequence onto its children."""
    tree, deco = enriched.tree, enriched.decoration
    n = len(tree)
    if n == 1:
        return OuterplanarMap.single_vertex()
    blocks = BlockList()
    for v in range(n):
        ch = tree.children(v)
        seq = deco[v]
        if sum(d.size for d in seq) != ch.size:
            raise StructureError(f"decoration size mismatch at vertex {v}")
        off = 0
        for i, d in enumerate(seq, start=1):
            verts = np.concatenate([[v], ch[off:off + d.size]])
            blocks.add(verts, d.chords, i)
            off += d.size
    return blocks.to_map(n, (0, int(tree.children(0)[0])))


def assemble_map_leaf(enriched: EnrichedTree) -> OuterplanarMap:
    """Inverse of :func:`map_to_leaf_tree`: leaves become map vertices (in
    depth-first order) and internal vertices become blocks."""
    tree, deco = enriched.tree, enriched.decoration
    N = len(tree)
    deg = tree.outdegrees
    leaf_id = np.cumsum(deg == 0) - 1
    # vertex(u): follow first children down to a leaf
    vert = np.empty(N, np.int64)
    for u in range(N - 1, -1, -1):
        vert[u] = leaf_id[u] if deg[u] == 0 else vert[u + 1]
    n = int(leaf_id[-1] + 1)
    if n == 1:
        return OuterplanarMap.single_vertex()
    parent = tree.parents
    # own-block rank: position of u along the first-child chain of its vertex
    rank = np.zeros(N, np.int64)
    for u in range(N):
        if deg[u] == 0:
            continue
        p = parent[u]
        first_child = p >= 0 and tree.children(p)[0] == u
        rank[u] = rank[p] + 1 if first_child else 1
    blocks = BlockList()
    for u in range(N):
        if deg[u] == 0:
            continue
        d = deco[u]
        if d is None or d.size != deg[u] - 1:
            raise StructureError(f"leaf-coupling decoration mismatch at node {u}")
        blocks.add(vert[tree.children(u)], d.chords, rank[u])
    return blocks.to_map(n, (0, int(vert[tree.children(0)[1]])))


# ---------------------------------------------------------------------------
# map -> leaf tree
# ---------------------------------------------------------------------------

def map_to_leaf_tree(m: OuterplanarMap):
    """Block tree of a map with map vertices at the leaves.

    Returns ``(tree, decoration, vertex)`` where ``decoration[u]`` is the
    block dissection at internal node u (None at leaves) and ``vertex[u]`` is
    the map vertex carried by u (the vertex of its first-child chain).
    """
    if m.n == 1:
        return PlaneTree([0]), [None], np.zeros(1, np.int64)
    ptr, nbr, twin = m.ptr, m.nbr, m.twin
    on = m.outer_darts
    chord = ~(on | on[twin])
    bridge = on & on[twin]

    # dart at the head of e that follows the reverse of e counter-clockwise
    next_after = m.next_right

    deg_out, deco, vert = [], [], []
    v0, y0 = m.root
    # stack items: (x, first dart x -> c, stop vertex, forced)
    stack = [(v0, m.root_dart, y0, True)]
    while stack:
        x, e, stop, forced = stack.pop()
        if nbr[e] == stop and not forced:
            deg_out.append(0)
            deco.append(None)
            vert.append(x)
            continue
        # boundary walk of the block through x -> c; darts[i] is w_i -> w_{i+1}
        ws = [x, int(nbr[e])]
        darts = [e]
        if bridge[e]:
            darts.append(int(twin[e]))
        else:
            prev = e
            while True:
                w = nbr[prev]
                b, d = ptr[w], ptr[w + 1] - ptr[w]
                j = twin[prev] - b
                while True:
                    j = (j - 1) % d
                    if not chord[b + j]:
                        break
                f = int(b + j)
                darts.append(f)
                if nbr[f] == x:
                    break
                ws.append(int(nbr[f]))
                prev = f
        k = len(ws)
        chords = []
        if k > 3:
            local = {w: i for i, w in enumerate(ws)}
            for i, w in enumerate(ws):
                b, d = ptr[w], ptr[w + 1] - ptr[w]
                j = (darts[i] - b + 1) % d
                while chord[b + j]:
                    li = local[int(nbr[b + j])]
                    if li > i:
                        chords.append((i, li))
                    j = (j + 1) % d
        deg_out.append(k)
        deco.append(Dissection(k - 1, chords))
        vert.append(x)
        # child i continues at w_i right after its predecessor in the block
        items = [(x, int(next_after[darts[-1]]), stop, False)]
        for i in range(1, k):
            items.append((ws[i], int(next_after[darts[i - 1]]), ws[(i + 1) % k], False))
        stack.extend(reversed(items))
    tree = PlaneTree(deg_out)
    return tree, deco, np.asarray(vert, np.int64)


def blocks_of(m: OuterplanarMap) -> list:
    """All blocks of the map as dissections (in leaf-tree preorder)."""
    _, deco, _ = map_to_leaf_tree(m)
    return [d for d in deco if d is not None]


def tree_to_json(tree: PlaneTree) -> str:
    return json.dumps({"tree": tree.to_parens()})
