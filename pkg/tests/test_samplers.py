from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from outerplanar.oracle import chord_restricted_law, enumerate_dissections, enumerate_maps, gw_tree_law
from outerplanar.samplers import (
    Rng,
    SamplerError,
    augmented_tilt,
    cycle_lemma_rotation,
    dissection_enriched_tree,
    forest_rotation,
    sample_chord_restricted,
    sample_dissection,
    sample_gw_tree_by_leaves,
    sample_gw_tree_by_vertices,
    sample_map,
    sample_map_leaf_coupling,
    sample_map_vertex_coupling,
)
from outerplanar.series import WeightModel, build_power_law_weights, build_series, offspring_law, phase_parameters
from outerplanar.structures import lukasiewicz

from stats_helpers import chi2_gof, chi2_two_sample

ALPHA = 0.01


def test_rng_reproducible_and_independent():
    a = Rng(7).derive(3, 1).random(5)
    b = Rng(7).derive(3, 1).random(5)
    c = Rng(7).derive(3, 2).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_single_vertex_tree():
    assert sample_gw_tree_by_vertices([0.5, 0.5], 1, Rng(0)).outdegrees.tolist() == [0]


def test_unattainable_sum():
    with pytest.raises(SamplerError):
        sample_gw_tree_by_vertices([1.0, 0.0], 3, Rng(0))


def test_rejection_budget():
    # P(sum = n-1) is astronomically small for this law
    law = np.zeros(60)
    law[0], law[59] = 1 - 1e-9, 1e-9
    with pytest.raises(SamplerError, match="budget"):
        sample_gw_tree_by_vertices(law, 60, Rng(0), method="rejection", max_draws=10_000)


def test_cycle_lemma_rotation_unique():
    seq = np.array([0, 2, 0, 1, 0, 3, 0])
    r = cycle_lemma_rotation(seq)
    w = np.cumsum(r - 1)
    assert w[-1] == -1 and np.all(w[:-1] >= 0)


def test_forest_rotation_uniform():
    # sum(d - 1) = -2: two valid rotations, each hit about half the time
    seq = np.array([0, 1, 0, 2, 0])
    rng = Rng(1)
    seen = Counter(tuple(forest_rotation(seq, rng).tolist()) for _ in range(4000))
    assert len(seen) == 2
    for rot in seen:
        w = np.cumsum(np.array(rot) - 1)
        assert w[-1] == -2 and w.min() == -2 and np.argmax(w == -2) == len(rot) - 1
    assert abs(min(seen.values()) / 4000 - 0.5) < 0.05


@pytest.mark.parametrize("method", ["split", "rejection"])
def test_gw_three_vertices(method):
    law = gw_tree_law([Fraction(1, 3)] * 3, 3)
    rng = Rng(2)
    c = Counter(tuple(sample_gw_tree_by_vertices([1 / 3] * 3, 3, rng, method=method).outdegrees.tolist())
                for _ in range(20_000))
    assert chi2_gof(c, law) > ALPHA


def test_gw_dissection_law_n6():
    model = WeightModel.uniform()
    law_p = offspring_law(model, phase_parameters(model), "DissectionVertexLaw", 6).probabilities
    # exact law from the rational coefficients gamma_k tau^k is not rational, so
    # use the float probabilities as Fractions: the conditioning cancels scale
    law = gw_tree_law([Fraction(float(x)) for x in law_p], 6)
    rng = Rng(3)
    c = Counter(tuple(sample_gw_tree_by_vertices(law_p, 6, rng).outdegrees.tolist()) for _ in range(20_000))
    assert chi2_gof(c, law) > ALPHA


def test_trees_are_valid():
    model = build_power_law_weights(1.5)[0]
    for i in range(50):
        t = dissection_enriched_tree(model, 100 + i, Rng(4).derive(i)).tree
        v = lukasiewicz(t).values
        assert len(t) == 100 + i and v[-1] == -1 and v[:-1].min() >= 0


def test_leaves_one_leaf_is_path():
    for i in range(50):
        t = sample_gw_tree_by_leaves([0.5, 0.3, 0.2], 1, Rng(5).derive(i))
        assert set(t.outdegrees.tolist()) <= {0, 1}


def test_leaves_two_leaves_law():
    # exact conditional law truncated to trees with <= 8 vertices
    from outerplanar.oracle import plane_trees
    p = [Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)]
    w = {}
    for n in range(1, 9):
        for t in plane_trees(n):
            if sum(d == 0 for d in t) == 2 and max(t) <= 2:
                x = Fraction(1)
                for d in t:
                    x *= p[d]
                w[t] = x
    tot = sum(w.values())
    law = {k: v / tot for k, v in w.items()}
    rng = Rng(6)
    c = Counter()
    for _ in range(20_000):
        t = tuple(sample_gw_tree_by_leaves([0.5, 0.25, 0.25], 2, rng).outdegrees.tolist())
        if len(t) <= 8:
            c[t] += 1
    assert chi2_gof(c, law) > ALPHA


def test_leaves_zero_is_error():
    with pytest.raises(SamplerError):
        sample_gw_tree_by_leaves([0.5, 0.5], 0, Rng(0))


def test_chord_restricted_uniform_d3():
    t = build_series(WeightModel.uniform(), 8, exact=True)
    rng = Rng(7)
    c = Counter(sample_chord_restricted(t, WeightModel.uniform(), 3, rng) for _ in range(8000))
    assert chi2_gof(c, chord_restricted_law(WeightModel.uniform(), 3)) > ALPHA
    assert sample_chord_restricted(t, WeightModel.uniform(), 1, rng) == (1,)


def test_chord_restricted_part_counts_d6():
    m = WeightModel.uniform()
    t = build_series(m, 8, exact=True)
    law = chord_restricted_law(m, 6)
    parts = Counter()
    for comp, p in law.items():
        parts[len(comp)] += p
    rng = Rng(8)
    c = Counter(len(sample_chord_restricted(t, m, 6, rng)) for _ in range(20_000))
    assert chi2_gof(c, dict(parts)) > ALPHA


def test_dissection_n2_triangle():
    for i in range(20):
        d = sample_dissection(WeightModel.uniform(), 2, Rng(i))
        assert d.encoding() == (2, ())


@pytest.mark.parametrize("model", [WeightModel.uniform(), WeightModel.explicit([1, 0, 2]),
                                   build_power_law_weights(1.5)[0]])
def test_dissection_law_n4(model):
    law = enumerate_dissections(model, 4).probabilities()
    rng = Rng(9)
    c = Counter(sample_dissection(model, 4, rng).encoding() for _ in range(20_000))
    assert chi2_gof(c, law) > ALPHA


def test_dissection_support_without_triangles():
    m = WeightModel.explicit([0, 1, 1])
    for i in range(300):
        d = sample_dissection(m, 4, Rng(10).derive(i))
        assert 3 not in d.face_degrees.tolist()


def test_dissection_invariants():
    model = build_power_law_weights(1.5)[0]
    for i in range(20):
        d = sample_dissection(model, 500, Rng(11).derive(i))
        d.validate()
        assert d.n_vertices == 501


@pytest.mark.parametrize("n", [3, 4, 5])
def test_map_samplers_against_oracle(n):
    m = WeightModel.uniform()
    law = enumerate_maps(m, n).probabilities()
    rng = Rng(12).derive(n)
    a = Counter(sample_map(m, n, rng).map.canonical_code() for _ in range(20_000))
    assert chi2_gof(a, law) > ALPHA
    b = Counter(sample_map_vertex_coupling(m, n, rng)[0].canonical_code() for _ in range(5000))
    assert chi2_gof(b, law) > ALPHA
    c = Counter(sample_map_leaf_coupling(m, n, rng)[0].canonical_code() for _ in range(5000))
    assert chi2_gof(c, law) > ALPHA
    assert chi2_two_sample(b, c) > ALPHA


@pytest.mark.parametrize("model", [build_power_law_weights(1.5)[0], build_power_law_weights(2.5, nu_O=0.5)[0],
                                   WeightModel.explicit([0, 1])])
def test_fast_map_sampler_other_regimes(model):
    law = enumerate_maps(model, 5).probabilities()
    rng = Rng(13)
    a = Counter(sample_map(model, 5, rng).map.canonical_code() for _ in range(20_000))
    assert chi2_gof(a, law) > ALPHA


def test_map_trivial_sizes():
    m = WeightModel.uniform()
    assert sample_map(m, 1, Rng(0)).map.n == 1
    assert sample_map_vertex_coupling(m, 1, Rng(0))[0].n == 1
    assert sample_map_leaf_coupling(m, 1, Rng(0))[0].n == 1


def test_tilt_values():
    assert augmented_tilt(WeightModel.uniform()) == pytest.approx(0.25, abs=1e-12)
    m = build_power_law_weights(1.5)[0]
    assert augmented_tilt(m) == m.r
    c = build_power_law_weights(2.5, nu_O=0.5)[0]
    assert augmented_tilt(c) == pytest.approx(c.r)


def test_same_seed_same_map():
    m = build_power_law_weights(1.5)[0]
    a = sample_map(m, 2000, Rng(99).derive(1)).map.to_json()
    b = sample_map(m, 2000, Rng(99).derive(1)).map.to_json()
    assert a == b
