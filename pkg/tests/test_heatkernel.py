import math

import numpy as np
import pytest

from katoscope.geometry import (
    ConformalCircle,
    Euclidean,
    Hyperbolic,
    Point,
    Sphere,
    Torus,
)
from katoscope.heatkernel import (
    UnsupportedModel,
    ck_residual,
    gauss_kernel,
    gaussian_bound_fit,
    hk_mass,
    hk_value,
    hyperbolic3_kernel,
    radial_kernel,
    sphere2_series,
    sphere2_small_tau,
    sphere3_series,
    sphere3_small_tau,
    wrapped_gauss,
)

E2, E3 = Euclidean(2), Euclidean(3)
T1 = Torus(1, (1.0,))
S2 = Sphere(2, 1.0)
CC = ConformalCircle(0.0, (), (0.3,))


def _origin(model):
    if isinstance(model, Sphere) and model.m > 1:
        return Point(model, (math.pi / 2,) + (0.0,) * (model.m - 1))
    return model.origin()


def test_gauss_kernel_normalization():
    # radial integral of the 2-d kernel over the plane
    r = np.linspace(0, 40, 400001)
    p = gauss_kernel(2, 0.7, r)
    mass = np.trapezoid(p * 2 * math.pi * r, r)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_wrapped_gauss_matches_brute_image_sum():
    L, t = 1.3, 0.4
    delta = np.linspace(-2, 2, 101)
    vals, tail = wrapped_gauss(t, delta, L)
    shifts = np.arange(-400, 401) * L
    brute = gauss_kernel(1, t, (delta - L * np.round(delta / L))[:, None] + shifts).sum(axis=1)
    assert np.max(np.abs(vals - brute)) <= tail + 1e-14
    assert np.max(np.abs(vals - brute)) < 1e-12


@pytest.mark.parametrize("model,t", [(E2, 0.01), (E2, 1.0), (E3, 0.1), (T1, 0.1), (S2, 0.5), (Sphere(3, 1.0), 0.25), (Hyperbolic(3, 1.0), 0.3)])
def test_mass_is_one(model, t):
    assert hk_mass(model, t, _origin(model)) == pytest.approx(1.0, abs=1e-6)


def test_mass_spectral_circle():
    # eigenfunction truncation leaves mesh-level error, not quadrature-level
    assert hk_mass(CC, 0.2, CC.origin()) == pytest.approx(1.0, abs=1e-4)


def test_kernel_symmetry():
    for model, a, b in [
        (E2, (0.0, 0.0), (0.7, -0.3)),
        (T1, (0.1,), (0.6,)),
        (S2, (1.0, 0.2), (2.0, 1.1)),
    ]:
        x, y = Point(model, a), Point(model, b)
        assert hk_value(model, 0.3, x, y) == pytest.approx(hk_value(model, 0.3, y, x), rel=1e-10)


def test_ck_residual_closed_forms():
    cases = [
        (E2, Point(E2, (0.4, 0.1))),
        (E3, Point(E3, (0.2, 0.0, -0.3))),
        (T1, Point(T1, (0.4,))),
        (S2, Point(S2, (2.0, 0.5))),
    ]
    for model, y in cases:
        assert ck_residual(model, 0.1, 0.04, _origin(model), y) <= 1e-6


def test_ck_residual_spectral_circle():
    assert ck_residual(CC, 0.1, 0.04, CC.origin(), Point(CC, (1.1,))) <= 1e-3


def test_sphere_series_small_tau_crossover():
    tau = 1.5e-4
    th = np.linspace(0, 10 * math.sqrt(tau), 300)
    a = sphere2_series(tau, np.cos(th))[0]
    b = sphere2_small_tau(tau, np.cos(th))
    keep = a > a.max() * 1e-8
    assert np.max(np.abs(a - b)[keep] / a[keep]) < 1e-6
    a3 = sphere3_series(tau, th)[0]
    b3 = sphere3_small_tau(tau, th)
    keep = a3 > a3.max() * 1e-8
    assert np.max(np.abs(a3 - b3)[keep] / a3[keep]) < 1e-7


def test_sphere_small_tau_mass():
    tau = 2e-5
    th = np.linspace(1e-12, 30 * math.sqrt(tau), 200001)
    m2 = np.trapezoid(sphere2_small_tau(tau, np.cos(th)) * 2 * math.pi * np.sin(th), th)
    m3 = np.trapezoid(sphere3_small_tau(tau, th) * 4 * math.pi * np.sin(th) ** 2, th)
    assert m2 == pytest.approx(1.0, abs=1e-7)
    assert m3 == pytest.approx(1.0, abs=1e-7)


def test_radial_kernel_dispatch_consistency():
    # the S^1 route must agree with the wrapped Gaussian on the circumference
    s1 = Sphere(1, 2.0)
    d = np.linspace(0, math.pi * 2.0, 50)
    direct = radial_kernel(s1, 0.3, d)
    wrapped = wrapped_gauss(0.3, d, 2 * math.pi * 2.0)[0]
    assert np.allclose(direct, wrapped, rtol=1e-12)
    # small-tau switch stays continuous for S^2
    R = 1.0
    lo = radial_kernel(Sphere(2, R), 0.9999e-4 * R * R, np.array([0.01]))
    hi = radial_kernel(Sphere(2, R), 1.0001e-4 * R * R, np.array([0.01]))
    assert lo[0] == pytest.approx(hi[0], rel=1e-3)


def test_hyperbolic3_curvature_scaling():
    d = np.array([0.4, 1.0])
    base = hyperbolic3_kernel(2.0 * 2.0 * 0.2, 2.0 * d)
    scaled = hyperbolic3_kernel(0.2, d, kappa=2.0)
    assert np.allclose(scaled, 2.0**3 * base, rtol=1e-12)


def test_hyperbolic3_mass():
    t = 0.3
    r = np.linspace(1e-9, 30, 400001)
    p = hyperbolic3_kernel(t, r)
    area = 4 * math.pi * np.sinh(r) ** 2
    assert np.trapezoid(p * area, r) == pytest.approx(1.0, abs=1e-7)


def test_gaussian_bound_fit_envelope():
    x = E2.origin()
    grid = [(t, x, Point(E2, (d, 0.0))) for t in (0.05, 0.2, 0.8) for d in (0.0, 0.5, 1.5)]
    fit = gaussian_bound_fit(E2, "upper", 1.0, grid, beta=0.2, gamma=0.1)
    assert math.isfinite(fit.alpha) and fit.alpha > 0
    # the fitted envelope really dominates the sampled kernel values
    for t, x, y in grid:
        d = E2.distance(x, y)
        n = 1.0 / E2.ball_volume(x, math.sqrt(t))
        env = fit.alpha * n * math.exp(-0.2 * d * d / t) * math.exp(0.1 * t)
        assert hk_value(E2, t, x, y) <= env * (1 + 1e-9)


def test_unsupported_model_raises():
    with pytest.raises(UnsupportedModel):
        radial_kernel(ConformalCircle(0.0, (), (0.3,)), 0.1, np.array([0.1]))
