"""Acceptance suite: one test per criterion, each at its stated tolerance."""

import math
import time
from collections import Counter
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from outerplanar.experiments import load_config, run_experiment
from outerplanar.metrics import boundary_looptree_correspondence, graph_distortion, penalty
from outerplanar.oracle import enumerate_dissections, enumerate_maps
from outerplanar.samplers import (
    Rng,
    dissection_enriched_tree,
    sample_dissection,
    sample_map,
    sample_map_leaf_coupling,
    sample_map_vertex_coupling,
)
from outerplanar.series import (
    WeightModel,
    build_power_law_weights,
    build_series,
    regime_identity_residual,
    phase_parameters,
)
from outerplanar.structures import (
    EnrichedTree,
    assemble_dissection,
    assemble_map_leaf,
    lukasiewicz,
    looptree,
    map_to_leaf_tree,
)

from stats_helpers import chi2_gof, chi2_two_sample

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
SIGNIFICANCE = 0.01


def experiment(name, **override):
    cfg = load_config(CONFIGS / f"{name}.json")
    for k, v in override.items():
        setattr(cfg, k, v)
    return run_experiment(cfg)


def test_criterion_1_series_vs_oracle(record):
    t0 = time.time()
    models = [WeightModel.uniform(), WeightModel.explicit([2]), WeightModel.explicit([0, 1]),
              WeightModel.explicit([1, Fraction(1, 2), 3])]
    bad = []
    for m in models:
        t = build_series(m, 8, exact=True)
        for n in range(1, 9):
            if enumerate_dissections(m, n).total != t.D_coeffs[n]:
                bad.append((m.kind, "D", n))
        for n in range(1, 7):
            if enumerate_maps(m, n).total != t.O_coeffs[n]:
                bad.append((m.kind, "O", n))
    dt = time.time() - t0
    ok = not bad and dt < 60
    record(1, "series coefficients equal weighted censuses", ok, f"mismatches={bad}, {dt:.1f}s")
    assert ok


def test_criterion_2_regime_identities(record):
    t0 = time.time()
    worst, wrong = 0.0, []
    for alpha in (1.25, 1.5, 1.75, 2.5):
        model = build_power_law_weights(alpha)[0]
        worst = max(worst, regime_identity_residual(model))
        if math.isinf(phase_parameters(model).sigma2_O) != (alpha <= 2):
            wrong.append(alpha)
    dt = time.time() - t0
    ok = worst <= 1e-10 and not wrong and dt < 1
    record(2, "identity residual <= 1e-10 and sigma_O = inf iff alpha <= 2", ok,
           f"max residual {worst:.2e}, misclassified {wrong}, {dt:.2f}s")
    assert ok


def test_criterion_3_sampler_exactness(record):
    t0 = time.time()
    m = WeightModel.uniform()
    N = 100_000
    rng = Rng(2024)
    pvals = {}
    law = enumerate_dissections(m, 4).probabilities()
    outcomes = len(law)
    c = Counter(sample_dissection(m, 4, rng).encoding() for _ in range(N))
    pvals["dissection n=4"] = chi2_gof(c, law)
    # n = 1, 2 have a single outcome, so only the support can be checked
    for n in (1, 2):
        law = enumerate_maps(m, n).probabilities()
        for sampler in (sample_map_vertex_coupling, sample_map_leaf_coupling):
            seen = {sampler(m, n, rng)[0].canonical_code() for _ in range(1000)}
            pvals[f"{sampler.__name__.split('_')[-2]} n={n} support"] = float(seen <= set(law))
    for n in (3, 4):
        law = enumerate_maps(m, n).probabilities()
        a = Counter(sample_map_vertex_coupling(m, n, rng)[0].canonical_code() for _ in range(N))
        b = Counter(sample_map_leaf_coupling(m, n, rng)[0].canonical_code() for _ in range(N))
        pvals[f"vertex n={n}"] = chi2_gof(a, law)
        pvals[f"vertex-vs-leaf n={n}"] = chi2_two_sample(a, b)
    dt = time.time() - t0
    ok = min(pvals.values()) > SIGNIFICANCE and outcomes == 11 and dt < 300
    detail = ", ".join(f"{k}: p={v:.3f}" for k, v in pvals.items()) + f", {dt:.0f}s"
    record(3, "chi-square exactness at significance 0.01", ok, detail)
    assert ok


def test_criterion_4_structural_invariants(record):
    t0 = time.time()
    regimes = {"BrownianFinite": WeightModel.uniform(),
               "LooptreeAlpha": build_power_law_weights(1.5)[0],
               "Circle": build_power_law_weights(2.5, nu_O=0.5)[0]}
    failures = Counter()
    for label, model in regimes.items():
        # the bound holds for every admissible parameter; nu_D = 1 is not admissible
        nu_D = phase_parameters(model).nu_D
        nu_D = nu_D if nu_D < 1 else 0.5
        for i in range(1000):
            rng = Rng(4).derive(len(label), i)
            n = int(rng.integers(2, 200))
            et = dissection_enriched_tree(model, n, rng)
            v = lukasiewicz(et.tree).values
            failures["lukasiewicz"] += not (v[-1] == -1 and v[:-1].min() >= 0)
            d = assemble_dissection(et)
            failures["penalty"] += penalty(d, nu_D).value > 2 * d.size
            s = sample_map(model, n, rng)
            b = s.map.boundary()
            failures["idempotence"] += b.boundary().canonical_code() != b.canonical_code()
            tree, deco, vertex = map_to_leaf_tree(s.map)
            lt = looptree(tree)
            failures["looptree_edges"] += len(lt.edges) != (len(tree) - 1) + int((tree.outdegrees > 0).sum())
            dis = graph_distortion(boundary_looptree_correspondence(vertex), b, lt).value
            failures["gh_bound"] += dis / 2 > 2 * tree.height + 1
            failures["round_trip"] += (assemble_map_leaf(EnrichedTree(tree, deco)).canonical_code()
                                       != s.map.canonical_code())
    dt = time.time() - t0
    ok = sum(failures.values()) == 0 and dt < 300
    record(4, "structural invariants on 1000 instances per regime", ok,
           f"failures={dict(failures)}, {dt:.0f}s")
    assert ok


def test_criterion_5_giant_face(record):
    rep = experiment("giant_face")
    c = rep.checks["fraction"]
    rt = rep.runtime["total_seconds"]
    ok = c["passed"] and rt < 300
    record(5, "median largest-face fraction within 10% of 1 - nu_D", ok,
           f"median {c['value']:.4f}, band {c['target'][0]:.4f}..{c['target'][1]:.4f}, {rt:.0f}s")
    assert ok


def test_criterion_6_diameter_exponent(record):
    a = experiment("scaling_alpha15")
    u = experiment("scaling_uniform")
    rt = a.runtime["total_seconds"] + u.runtime["total_seconds"]
    ok = a.checks["slope"]["passed"] and u.checks["slope"]["passed"] and rt < 1200
    record(6, "diameter slopes within 0.08 of 1/alpha and 1/2", ok,
           f"alpha=1.5 slope {a.summary['slope']:.3f} (target {1 / 1.5:.3f}), "
           f"uniform slope {u.summary['slope']:.3f} (target 0.5), {rt:.0f}s")
    assert ok


def test_criterion_7_boundary_contraction(record):
    rep = experiment("boundary_contraction")
    rt = rep.runtime["total_seconds"]
    med = rep.summary["median_normalized_distortion"]
    ok = len(med) == 5 and rep.passed and rt < 900
    record(7, "median distortion / n^(1/alpha) strictly decreasing on 5 sizes", ok,
           f"medians {[round(x, 4) for x in med]}, {rt:.0f}s")
    assert ok


def test_criterion_8_circle(record):
    rep = experiment("circle")
    s = rep.summary
    sizes = s["sizes"]
    diam = dict(zip(sizes, s["median_rescaled_diameter"]))[2 ** 14]
    ks = dict(zip(sizes, s["median_ks"]))[2 ** 15]
    rt = rep.runtime["total_seconds"]
    ok = 0.45 <= diam <= 0.55 and ks < 0.05 and rt < 600
    record(8, "circle regime: rescaled diameter and KS", ok,
           f"median diameter at 2^14 {diam:.4f}, median KS at 2^15 {ks:.4f}, {rt:.0f}s")
    assert ok


SMALL = {
    "scaling_uniform": dict(sizes=[32, 64, 128], replicas=3),
    "giant_face": dict(sizes=[64, 128], replicas=3),
    "boundary_contraction": dict(sizes=[32, 64, 128], replicas=3),
    "circle": dict(sizes=[128, 256], replicas=2, options={"pairs": 200}),
    "looptree_compare": dict(sizes=[32, 64], replicas=3),
    "sample_map": dict(sizes=[100], replicas=2),
    "enumerate_dissections": {},
    "analyze_alpha15": {},
}


def test_criterion_9_reproducibility(record):
    t0 = time.time()
    differ = []
    for name, over in SMALL.items():
        a = experiment(name, **over).rows_csv()
        b = experiment(name, **over).rows_csv()
        if a != b:
            differ.append(name)
    dt = time.time() - t0
    ok = not differ
    record(9, "identical config and seed give byte-identical rows.csv", ok,
           f"{len(SMALL)} commands, differing {differ}, {dt:.1f}s")
    assert ok
