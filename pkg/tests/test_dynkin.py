import math

import numpy as np
import pytest

from katoscope.dynkin import (
    QuadConfig,
    TimePowerBound,
    UnsupportedModel,
    doubling_exponent_from_crossing,
    dynkin_norm,
    holder_bound,
    kato_detect,
    l1_lower_check,
    localized_norm,
    metric_comparability,
    resolvent_sandwich,
    ricci_doubling_exponent,
    time_subadditivity_check,
)
from katoscope.geometry import (
    ClosedBall,
    ConformalCircle,
    Euclidean,
    Hyperbolic,
    Sphere,
    Torus,
)
from katoscope.potentials import Bump, Constant, PowerSingularity, Truncated, scale, sup_norm, values_at

E2, E3 = Euclidean(2), Euclidean(3)
O2, O3 = E2.origin(), E3.origin()
LIGHT = QuadConfig(panel_order=8, time_depth=12, time_order=8, angular_order=12, refine_levels=1)


@pytest.mark.parametrize("model", [E2, Torus(1, (1.0,)), Sphere(2, 0.5)])
@pytest.mark.parametrize("c,t", [(0.5, 0.1), (2.0, 0.7)])
def test_constant_law_exact(model, c, t):
    est = dynkin_norm(Constant(c), model, t)
    assert est.value == pytest.approx(c * t, rel=1e-12)


def test_homogeneity_and_mass_bound():
    w = Bump(O2, 1.0, 3.0)
    base = dynkin_norm(w, E2, 0.2).value
    doubled = dynkin_norm(scale(w, 2.0), E2, 0.2).value
    assert doubled == pytest.approx(2.0 * base, rel=1e-9)
    assert base <= 0.2 * sup_norm(w, E2) * (1 + 1e-12)
    assert dynkin_norm(w, E2, 0.1).value <= base


def test_engine_matches_brute_quadrature():
    # start at the center, substitute u = d^2/(4s) and integrate u over the
    # exact support window so the bump's cutoff lands on an endpoint
    w = Bump(O2, 1.0, 3.0)
    t = 0.2
    sg, sw = np.polynomial.legendre.leggauss(80)
    s = 0.5 * t * (sg + 1.0)
    ug, uw = np.polynomial.legendre.leggauss(300)
    hi = np.minimum(1.0 / (4.0 * s), 40.0)
    u = 0.5 * hi[:, None] * (ug[None, :] + 1.0)
    rad = 2.0 * np.sqrt(s[:, None] * u)
    pts = np.zeros((rad.size, 2))
    pts[:, 0] = rad.ravel()
    vals = np.abs(values_at(w, E2, pts)).reshape(rad.shape)
    inner = 0.5 * hi * ((np.exp(-u) * vals) @ uw)
    brute = 0.5 * t * float(inner @ sw)
    est = dynkin_norm(w, E2, t)
    assert est.value == pytest.approx(brute, rel=1e-9)
    assert E2.distance(est.argmax, O2) < 0.05


def test_sphere_engine_indicator_mass_law():
    s2 = Sphere(2, 1.0)
    w = Truncated(Constant(2.0), ClosedBall(s2.origin(), 4.0))
    est = dynkin_norm(w, s2, 0.1, cfg=LIGHT)
    assert est.method == "sphere-time-quadrature"
    assert est.value == pytest.approx(0.2, rel=1e-4)


def test_kato_detect_thresholds():
    kato = kato_detect(PowerSingularity(O3, 1.0, 1.0), E3)
    assert kato.verdict == "kato"
    assert kato.fitted_exponent == pytest.approx(0.5, abs=0.05)
    diverging = kato_detect(PowerSingularity(O3, 2.0, 1.0), E3)
    assert diverging.verdict == "not-kato"


def test_subadditivity_ladder():
    w = Bump(O2, 1.0, 1.0)
    chk = time_subadditivity_check(w, E2, 0.25, 0.6)
    assert chk.factor == 3
    assert chk.passes
    assert chk.lhs <= chk.rhs


def test_resolvent_sandwich_cases():
    for w in (Constant(1.0), Bump(O2, 1.0, 2.0)):
        res = resolvent_sandwich(w, E2, 1.0, 0.1, tol=1e-3)
        assert res.passes
        assert res.lower <= res.sup_resolvent <= res.upper


def test_holder_bound_euclidean():
    w = Bump(O2, 1.0, 2.0)
    kb = TimePowerBound(1.0 / (4.0 * math.pi), -1.0, 1.0)
    hb = holder_bound(w, E2, kb, 3.0, 0.5, tol=1e-9)
    assert hb.passes
    assert hb.norm_value <= hb.bound * (1 + 1e-9)


def test_l1_lower_bound():
    chk = l1_lower_check(Constant(1.0), E2, 0.25, ClosedBall(O2, 0.5), tol=1e-3)
    assert chk.passes
    assert chk.lhs <= chk.rhs * (1 + 1e-3)
    assert chk.kernel_min > 0.0


def test_localized_norm_centered_gap():
    w = Bump(O2, 1.0, 1.0)
    full, local, gap = localized_norm(w, E2, 0.25, ClosedBall(O2, 0.5))
    assert full.value >= local.value > 0.0
    assert 0.0 <= gap < 1e-6


def test_metric_comparability_flat_and_perturbed():
    flat = ConformalCircle()
    w = Bump(flat.point(0.0), 0.5, 1.0)
    rep = metric_comparability(w, flat, (0.1, 0.05))
    assert rep.constants == (1.0, 1.0)
    assert rep.passes
    warped = ConformalCircle(sin_coeffs=(0.3,))
    wb = Bump(warped.point(0.0), 0.5, 1.0)
    rep2 = metric_comparability(wb, warped, (0.1, 0.05))
    assert rep2.passes
    assert rep2.variation < 0.2


def test_doubling_exponents():
    assert doubling_exponent_from_crossing(3, 0.25) == pytest.approx(4.0)
    assert doubling_exponent_from_crossing(2, 7.3) == pytest.approx(2.0)
    assert math.isinf(doubling_exponent_from_crossing(3, math.inf))
    assert ricci_doubling_exponent(E3).n_exp == pytest.approx(3.0)
    assert ricci_doubling_exponent(Hyperbolic(3, 1.0)).n_exp == pytest.approx(11.0 / 3.0)


def test_unsupported_routes_raise():
    s2 = Sphere(2, 1.0)
    with pytest.raises(UnsupportedModel):
        dynkin_norm(PowerSingularity(s2.origin(), 1.0, 0.5), s2, 0.1)
    h2 = Hyperbolic(2, 1.0)
    with pytest.raises(UnsupportedModel):
        dynkin_norm(Bump(h2.origin(), 1.0, 1.0), h2, 0.1)
