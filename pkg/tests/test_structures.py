import json

import numpy as np
import pytest

from outerplanar.oracle import enumerate_maps
from outerplanar.samplers import Rng, sample_map
from outerplanar.series import WeightModel, build_power_law_weights
from outerplanar.structures import (
    Dissection,
    EnrichedTree,
    Graph,
    OuterplanarMap,
    PlaneTree,
    StructureError,
    assemble_dissection,
    assemble_map_leaf,
    assemble_map_vertex,
    blocks_of,
    lukasiewicz,
    looptree,
    map_to_leaf_tree,
    mirrored,
    tree_graph,
)
from outerplanar.metrics import eccentricities


def test_tree_basics():
    t = PlaneTree([2, 1, 0, 0])
    assert t.parents.tolist() == [-1, 0, 1, 0]
    assert t.depths.tolist() == [0, 1, 2, 1]
    assert t.subtree_sizes.tolist() == [4, 2, 1, 1]
    assert t.height == 2 and t.n_leaves == 2
    assert PlaneTree.from_parens(t.to_parens()) == t


def test_invalid_tree():
    with pytest.raises(StructureError):
        PlaneTree([1, 0, 0])
    with pytest.raises(StructureError):
        PlaneTree([2, 0])


@pytest.mark.parametrize("deg,path", [([0], [0]), ([2, 0, 0], [0, 1, 0]), ([1, 1, 0], [0, 0, 0])])
def test_lukasiewicz_examples(deg, path):
    v = lukasiewicz(PlaneTree(deg)).values
    assert v[:-1].tolist() == path and v[-1] == -1


def test_mirror_involution():
    t = PlaneTree([3, 1, 0, 0, 2, 0, 0])
    assert t.mirror().mirror() == t
    np.testing.assert_array_equal(mirrored(t.mirror()).values, lukasiewicz(t).values)


def test_looptree_star_is_cycle():
    g = looptree(PlaneTree([4, 0, 0, 0, 0]))
    assert len(g.edges) == 5
    assert np.all(np.bincount(g.edges.ravel()) == 2)


def test_looptree_single_vertex():
    assert len(looptree(PlaneTree([0])).edges) == 0


def test_height_is_root_eccentricity():
    t = PlaneTree([2, 1, 1, 0, 2, 0, 0])
    assert eccentricities(tree_graph(t))[0] == t.height


def test_dissection_faces_and_boundary():
    d = Dissection(3, [(0, 2)])
    d.validate()
    assert sorted(d.face_degrees.tolist()) == [3, 3]
    b = d.to_map().boundary()
    assert b.n_edges == 4 and b.boundary().n_edges == 4
    assert Dissection(1).largest_face() == 0
    assert Dissection(5).largest_face() == 6


def test_crossing_chords_rejected():
    with pytest.raises(StructureError):
        Dissection(3, [(0, 2), (1, 3)]).validate()


def test_assemble_dissection_single_vertex():
    d = assemble_dissection(EnrichedTree(PlaneTree([0]), [()]))
    assert d.encoding() == (1, ())


def test_assemble_dissection_distinct():
    trees = [((2, 0, 0), [(2,), (), ()]), ((2, 0, 0), [(1, 1), (), ()]), ((1, 1, 0), [(1,), (1,), ()])]
    codes = {assemble_dissection(EnrichedTree(PlaneTree(t), c)).encoding() for t, c in trees}
    assert len(codes) == 3


def test_assemble_map_trivial():
    assert assemble_map_vertex(EnrichedTree(PlaneTree([0]), [[]])).n == 1
    m = assemble_map_vertex(EnrichedTree(PlaneTree([1, 0]), [[Dissection(1)], []]))
    assert m.n == 2 and m.n_edges == 1


def test_triangle_leaf_tree():
    tri = Dissection(2).to_map()
    tree, deco, vertex = map_to_leaf_tree(tri)
    assert tree.outdegrees.tolist() == [3, 0, 0, 0]
    assert deco[0].size == 2


def test_two_triangles_at_cutvertex_boundary_unchanged():
    m = assemble_map_vertex(EnrichedTree(PlaneTree([4, 0, 0, 0, 0]), [[Dissection(2), Dissection(2)], [], [], [], []]))
    m.validate()
    assert m.boundary().n_edges == m.n_edges == 6


def test_round_trip_exhaustive():
    model = WeightModel.uniform()
    for n in range(1, 6):
        for code in enumerate_maps(model, n).entries:
            m = OuterplanarMap.from_code(code)
            tree, deco, _ = map_to_leaf_tree(m)
            again = assemble_map_leaf(EnrichedTree(tree, deco))
            assert again.canonical_code() == code


def test_round_trip_sampled():
    model = build_power_law_weights(1.5)[0]
    for i in range(30):
        s = sample_map(model, 200, Rng(11).derive(i))
        s.map.validate()
        tree, deco, vertex = map_to_leaf_tree(s.map)
        assert tree.n_leaves == s.map.n
        again = assemble_map_leaf(EnrichedTree(tree, deco))
        assert again.canonical_code() == s.map.canonical_code()


def test_blocks_match_sampler():
    s = sample_map(WeightModel.uniform(), 300, Rng(3))
    assert len(blocks_of(s.map)) == len(s.blocks)


def test_map_json_round_trip():
    s = sample_map(WeightModel.uniform(), 40, Rng(5))
    m2 = OuterplanarMap.from_dict(json.loads(s.map.to_json()))
    assert m2.canonical_code() == s.map.canonical_code()


def test_graph_csv(tmp_path):
    g = Graph(3, [(0, 1), (1, 2)])
    g.to_csv(tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().strip().splitlines()[-1] == "1,2"
