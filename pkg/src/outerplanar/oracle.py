"""Exhaustive weighted enumeration of small dissections and outerplanar maps.

Weights are exact rationals.  Objects of weight zero are left out of a
census, so the entries are the support of the Boltzmann law and the total is
the corresponding series coefficient.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .series import WeightModel
from .structures import (
    Dissection,
    EnrichedTree,
    PlaneTree,
    assemble_map_leaf,
    assemble_map_vertex,
)

MAX_DISSECTION_SIZE = 8
MAX_MAP_SIZE = 6


class OracleError(ValueError):
    pass


@dataclass
class WeightedCensus:
    size: int
    entries: dict = field(default_factory=dict)  # encoding -> Fraction

    @property
    def total(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))

    def add(self, key, weight):
        if key in self.entries:
            raise OracleError(f"duplicate encoding {key}")
        self.entries[key] = Fraction(weight)

    def probabilities(self) -> dict:
        t = self.total
        return {k: w / t for k, w in self.entries.items()}

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "total": str(self.total),
            "entries": [{"object": _jsonable(k), "weight": str(w)}
                        for k, w in sorted(self.entries.items(), key=lambda kv: repr(kv[0]))],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _jsonable(obj):
    if isinstance(obj, tuple):
        return [_jsonable(x) for x in obj]
    return obj


def _iota(model: WeightModel, k: int) -> Fraction:
    """Exact weight; power-law floats are taken at their binary value."""
    if model.kind == "power_law":
        return Fraction(model.iota(k))
    return model.iota(k, exact=True)


# ---------------------------------------------------------------------------
# dissections
# ---------------------------------------------------------------------------

def _polygon_dissections(verts: tuple):
    """All chord sets of the polygon on ``verts`` (in order, base edge
    verts[0]-verts[-1]) with the inner-face degrees of each."""
    m = len(verts)
    if m == 2:
        yield (), ()
        return
    inner = verts[1:-1]
    # the face on the base edge uses verts[0], a subset of inner, verts[-1]
    for mask in range(1, 1 << len(inner)):
        face = [verts[0]] + [v for i, v in enumerate(inner) if mask >> i & 1] + [verts[-1]]
        # each gap between consecutive face vertices is a sub-polygon
        subs = []
        for a, b in zip(face, face[1:]):
            ia, ib = verts.index(a), verts.index(b)
            subs.append(verts[ia:ib + 1])
        own = tuple((a, b) for a, b in zip(face, face[1:]) if verts.index(b) - verts.index(a) > 1)
        for parts in product(*[list(_polygon_dissections(s)) for s in subs]):
            chords = own + tuple(c for p in parts for c in p[0])
            degs = (len(face),) + tuple(d for p in parts for d in p[1])
            yield chords, degs


def enumerate_dissections(model: WeightModel, n: int) -> WeightedCensus:
    """All dissections of the (n+1)-gon with positive weight."""
    if not 1 <= n <= MAX_DISSECTION_SIZE:
        raise OracleError(f"dissection enumeration supports 1 <= n <= {MAX_DISSECTION_SIZE}")
    return _dissections_cached(model, n)


@lru_cache(maxsize=None)
def _dissections_cached(model: WeightModel, n: int) -> WeightedCensus:
    census = WeightedCensus(n)
    for chords, degs in _polygon_dissections(tuple(range(n + 1))):
        w = Fraction(1)
        for k in degs:
            w *= _iota(model, k)
        if w:
            d = Dissection(n, chords)
            census.add(d.encoding(), w)
    return census


def dissection_from_encoding(key) -> Dissection:
    return Dissection(key[0], key[1])


# ---------------------------------------------------------------------------
# trees and compositions
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def plane_trees(n: int) -> tuple:
    """Preorder outdegree sequences of all plane trees with n vertices."""
    if n == 1:
        return ((0,),)
    out = []
    for k in range(1, n):
        for sizes in compositions(n - 1, k):
            for subs in product(*[plane_trees(s) for s in sizes]):
                out.append((k,) + tuple(d for t in subs for d in t))
    return tuple(out)


@lru_cache(maxsize=None)
def leaf_trees(n_leaves: int) -> tuple:
    """Plane trees with n leaves whose internal vertices have outdegree >= 2."""
    if n_leaves == 1:
        return ((0,),)
    out = []
    for k in range(2, n_leaves + 1):
        for sizes in compositions(n_leaves, k):
            for subs in product(*[leaf_trees(s) for s in sizes]):
                out.append((k,) + tuple(d for t in subs for d in t))
    return tuple(out)


@lru_cache(maxsize=None)
def compositions(total: int, parts: int | None = None) -> tuple:
    """Compositions of ``total`` (into exactly ``parts`` parts if given)."""
    if parts is None:
        return tuple(c for k in range(1, total + 1) for c in compositions(total, k))
    if parts == 1:
        return ((total,),) if total >= 1 else ()
    return tuple((h,) + rest for h in range(1, total - parts + 2)
                 for rest in compositions(total - h, parts - 1))


def chord_restricted_law(model: WeightModel, d: int) -> dict:
    """Exact law of the chord-restricted composition of size d."""
    w = {c: _prod(_iota(model, k + 2) for k in c) for c in compositions(d)}
    t = sum(w.values(), Fraction(0))
    if t == 0:
        raise OracleError(f"zero partition function at size {d}")
    return {c: x / t for c, x in w.items() if x}


def _prod(it):
    out = Fraction(1)
    for x in it:
        out *= x
    return out


# ---------------------------------------------------------------------------
# outerplanar maps
# ---------------------------------------------------------------------------

def enumerate_maps(model: WeightModel, n: int, generator: str = "vertex") -> WeightedCensus:
    """All rooted outerplanar maps with n vertices and positive weight.

    ``generator="vertex"`` runs over trees with n vertices decorated by
    ordered dissection sequences; ``generator="leaf"`` runs over trees with n
    leaves decorated by one dissection per internal vertex.  Both produce the
    census keyed by the canonical rotation code.
    """
    if not 1 <= n <= MAX_MAP_SIZE:
        raise OracleError(f"map enumeration supports 1 <= n <= {MAX_MAP_SIZE}")
    if generator == "vertex":
        return _maps_vertex(model, n)
    if generator == "leaf":
        return _maps_leaf(model, n)
    raise OracleError(f"unknown generator {generator!r}")


def _dissection_options(model, size):
    return [(Dissection(k[0], k[1]), w)
            for k, w in enumerate_dissections(model, size).entries.items()]


def _sequence_options(model, d):
    """Ordered dissection sequences of total size d with their weights."""
    out = []
    for comp in compositions(d):
        for parts in product(*[_dissection_options(model, m) for m in comp]):
            out.append(([p[0] for p in parts], _prod(p[1] for p in parts)))
    return out


@lru_cache(maxsize=None)
def _maps_vertex(model, n):
    census = WeightedCensus(n)
    for degs in plane_trees(n):
        tree = PlaneTree(degs)
        opts = [_sequence_options(model, d) if d else [([], Fraction(1))] for d in degs]
        for choice in product(*opts):
            w = _prod(c[1] for c in choice)
            if not w:
                continue
            m = assemble_map_vertex(EnrichedTree(tree, [c[0] for c in choice]))
            census.add(m.canonical_code(), w)
    return census


@lru_cache(maxsize=None)
def _maps_leaf(model, n):
    census = WeightedCensus(n)
    for degs in leaf_trees(n):
        tree = PlaneTree(degs)
        opts = [_dissection_options(model, d - 1) if d else [(None, Fraction(1))] for d in degs]
        for choice in product(*opts):
            w = _prod(c[1] for c in choice)
            if not w:
                continue
            m = assemble_map_leaf(EnrichedTree(tree, [c[0] for c in choice]))
            census.add(m.canonical_code(), w)
    return census


def gw_tree_law(probs, n: int) -> dict:
    """Exact law of a Galton-Watson tree conditioned on n vertices."""
    probs = [Fraction(p) for p in probs]
    w = {}
    for degs in plane_trees(n):
        x = _prod(probs[d] if d < len(probs) else Fraction(0) for d in degs)
        if x:
            w[degs] = x
    t = sum(w.values(), Fraction(0))
    if t == 0:
        raise OracleError("no tree of this size has positive probability")
    return {k: v / t for k, v in w.items()}
