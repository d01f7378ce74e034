import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from outerplanar.series import (
    SeriesError,
    WeightModel,
    build_power_law_weights,
    build_series,
    fixed_point_residual,
    gamma_neg,
    regime_identity_residual,
    model_from_dict,
    offspring_law,
    phase_parameters,
    scaling_constants,
    zeta,
)


@pytest.mark.parametrize("s", [1.25, 1.5, 2.0, 2.5, 3.5, 7.0])
def test_zeta_matches_mpmath(s):
    assert zeta(s) == pytest.approx(float(mpmath.zeta(s)), rel=1e-12)


def test_zeta_pole():
    with pytest.raises(SeriesError):
        zeta(1.0)


def test_gamma_negative_argument():
    assert gamma_neg(1.5) == pytest.approx(4 * math.sqrt(math.pi) / 3, rel=1e-14)
    with pytest.raises(SeriesError):
        gamma_neg(2.0)


def test_uniform_series_exact():
    t = build_series(WeightModel.uniform(), 6, exact=True)
    assert list(t.D_coeffs) == [0, 1, 1, 3, 11, 45, 197]
    assert list(t.phiD_coeffs[:6]) == [1, 1, 2, 4, 8, 16]
    assert list(t.O_coeffs) == [0, 1, 1, 3, 13, 67, 381]
    assert all(isinstance(x, Fraction) for x in t.D_coeffs)


def test_fixed_point_residual_small():
    model = build_power_law_weights(1.5)[0]
    assert fixed_point_residual(build_series(model, 40)) < 1e-12


def test_float_series_agrees_with_exact():
    m = WeightModel.explicit([1, 0, 2])
    a = build_series(m, 12, exact=True)
    b = build_series(m, 12)
    np.testing.assert_allclose([float(x) for x in a.O_coeffs], b.O_coeffs, rtol=1e-12)


def test_uniform_phase():
    p = phase_parameters(WeightModel.uniform())
    assert p.tau_D == pytest.approx(1 - math.sqrt(2) / 2, abs=1e-12)
    assert p.regime == "BrownianFinite"
    assert p.nu_O > 1
    assert math.isfinite(p.sigma2_O)


@pytest.mark.parametrize("alpha,infinite", [(1.25, True), (1.5, True), (1.75, True),
                                            (2.5, False), (3.0, False)])
def test_power_law_identity_and_variance(alpha, infinite):
    model, c0, c, r = build_power_law_weights(alpha)
    assert regime_identity_residual(model) <= 1e-10
    p = phase_parameters(model)
    assert p.nu_O == pytest.approx(1.0, abs=1e-10)
    assert math.isinf(p.sigma2_O) == infinite
    assert p.regime == ("LooptreeAlpha" if infinite else "BrownianFinite")


def test_power_law_constants():
    model, c0, c, r = build_power_law_weights(1.5, c=0.2)
    assert c0 == pytest.approx(0.25291723554040063, rel=1e-12)
    assert r == pytest.approx(0.2223624209328211, rel=1e-12)
    with pytest.raises(SeriesError, match="supercritical"):
        build_power_law_weights(1.5, c=0.3)


def test_nu_D_independent_of_radius():
    a = phase_parameters(build_power_law_weights(2.5)[0])
    b = phase_parameters(build_power_law_weights(2.5, nu_O=0.5)[0])
    assert a.nu_D == pytest.approx(b.nu_D, rel=1e-10)
    assert b.nu_O == pytest.approx(0.5, rel=1e-10)
    assert b.regime == "Circle"


def test_offspring_laws_sum_to_one():
    model = WeightModel.uniform()
    p = phase_parameters(model)
    for which in ("DissectionVertexLaw", "MapVertexLaw", "MapLeafLaw"):
        law = offspring_law(model, p, which, 400)
        assert law.probabilities.sum() + law.tail_mass == pytest.approx(1.0)
        assert law.tail_mass < 1e-6
        assert law.mean == pytest.approx(1.0, abs=1e-3)


def test_map_vertex_law_p0():
    model = build_power_law_weights(1.5, c=0.2)[0]
    law = offspring_law(model, phase_parameters(model), "MapVertexLaw", 50)
    assert law.probabilities[0] == pytest.approx(1 - model.r, rel=1e-9)


def test_scaling_constants_need_looptree():
    p = phase_parameters(WeightModel.uniform())
    with pytest.raises(SeriesError):
        scaling_constants(p, 1.5, 0.1)
    m = build_power_law_weights(1.5)[0]
    sc = scaling_constants(phase_parameters(m), 1.5, m.c)
    assert sc.b_n(8.0) == pytest.approx(sc.b_n_factor * 4.0)


def test_model_from_dict():
    assert model_from_dict({"kind": "uniform"}) == WeightModel.uniform()
    m = model_from_dict({"kind": "power_law", "alpha": 1.5})
    assert regime_identity_residual(m) <= 1e-10
    with pytest.raises(SeriesError):
        model_from_dict({"kind": "nope"})


def test_all_zero_explicit_rejected():
    with pytest.raises(SeriesError):
        phase_parameters(WeightModel.explicit([0, 0]))
