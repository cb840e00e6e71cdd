import math

import numpy as np
import pytest

from katoscope.geometry import (
    ClosedBall,
    ConformalCircle,
    Euclidean,
    FiniteUnionOfBalls,
    GeometryError,
    Hyperbolic,
    Point,
    Sphere,
    Torus,
    WholeSpace,
    circle_chart,
    unit_ball_volume,
)

rng = np.random.default_rng(42)

MODELS = [
    Euclidean(2),
    Euclidean(3),
    Torus(1, (1.0,)),
    Torus(2, (2.0, 3.0)),
    Sphere(2, 1.0),
    Sphere(3, 0.7),
    Hyperbolic(2, 1.0),
    Hyperbolic(3, 0.5),
    ConformalCircle(0.1, (0.2,), (0.3,)),
]


def _random_points(model, n):
    if isinstance(model, Sphere):
        # colatitude chart for m=2, nested angles for m=3; stay off the poles
        cols = rng.uniform(0.1, math.pi - 0.1, (n, model.m))
        cols[:, -1] = rng.uniform(0.0, 2 * math.pi, n)
        return cols
    if isinstance(model, Torus):
        return rng.uniform(0, 1, (n, model.m)) * np.asarray(model.periods)
    if isinstance(model, ConformalCircle):
        return rng.uniform(0, 2 * math.pi, (n, 1))
    return rng.normal(0.0, 1.5, (n, model.m))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: repr(m))
def test_triangle_inequality(model):
    pts = _random_points(model, 3 * 40)
    for a, b, c in pts.reshape(40, 3, -1):
        pa, pb, pc = (Point(model, tuple(v)) for v in (a, b, c))
        ab = model.distance(pa, pb)
        bc = model.distance(pb, pc)
        ac = model.distance(pa, pc)
        assert ac <= ab + bc + 1e-9
        assert ab >= 0 and bc >= 0


@pytest.mark.parametrize("model", MODELS, ids=lambda m: repr(m))
def test_distance_symmetry_and_identity(model):
    pts = _random_points(model, 20)
    for a, b in pts.reshape(10, 2, -1):
        pa, pb = Point(model, tuple(a)), Point(model, tuple(b))
        assert model.distance(pa, pb) == pytest.approx(model.distance(pb, pa), abs=1e-12)
        assert model.distance(pa, pa) == pytest.approx(0.0, abs=1e-9)


def test_euclidean_distance_exact():
    e2 = Euclidean(2)
    assert e2.distance(e2.origin(), Point(e2, (3.0, 4.0))) == 5.0


def test_torus_wraparound():
    t1 = Torus(1, (1.0,))
    a, b = Point(t1, (0.05,)), Point(t1, (0.95,))
    assert t1.distance(a, b) == pytest.approx(0.1, abs=1e-12)
    t2 = Torus(2, (2.0, 3.0))
    a, b = Point(t2, (0.1, 0.1)), Point(t2, (1.9, 2.9))
    assert t2.distance(a, b) == pytest.approx(math.hypot(0.2, 0.2), abs=1e-12)


def test_sphere_distance_is_radius_times_angle():
    s = Sphere(2, 2.0)
    north = Point(s, (1e-12, 0.0))
    equator = Point(s, (math.pi / 2, 0.0))
    assert s.distance(north, equator) == pytest.approx(2.0 * math.pi / 2, rel=1e-9)
    # antipodal pair on the equator
    a = Point(s, (math.pi / 2, 0.0))
    b = Point(s, (math.pi / 2, math.pi))
    assert s.distance(a, b) == pytest.approx(2.0 * math.pi, rel=1e-12)


def test_hyperbolic_geodesic_oracle():
    # embedded point (sqrt(3), 0) has Minkowski product -2 with the origin:
    # the distance must be acosh(2)
    h2 = Hyperbolic(2, 1.0)
    p = Point(h2, (math.sqrt(3.0), 0.0))
    assert h2.distance(h2.origin(), p) == pytest.approx(1.3169578969248166, rel=1e-12)
    # curvature rescaling: kappa contracts distances by 1/kappa at fixed chart radius
    h2k = Hyperbolic(2, 2.0)
    q = Point(h2k, (math.sqrt(3.0) / 2.0, 0.0))
    assert h2k.distance(h2k.origin(), q) == pytest.approx(1.3169578969248166 / 2.0, rel=1e-9)


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)


def test_ball_volume_small_radius_matches_flat():
    # curvature corrections are O(r^2): at r = 0.05 flat volume is 4-digit accurate
    for model in (Sphere(2, 1.0), Hyperbolic(2, 1.0)):
        v = model.ball_volume(model.origin(), 0.05)
        assert v == pytest.approx(math.pi * 0.05**2, rel=5e-4)
    s3 = Sphere(3, 1.0)
    v3 = s3.ball_volume(s3.origin(), 0.05)
    assert v3 == pytest.approx(4 * math.pi / 3 * 0.05**3, rel=5e-4)


def test_sphere_total_volume():
    s = Sphere(2, 2.0)
    assert s.ball_volume(s.origin(), math.pi * 2.0) == pytest.approx(16 * math.pi, rel=1e-9)
    assert s.total_volume == pytest.approx(16 * math.pi, rel=1e-9)


def test_regions():
    e2 = Euclidean(2)
    ball = ClosedBall(e2.origin(), 1.0)
    assert ball.contains(e2, Point(e2, (0.5, 0.5)))
    assert not ball.contains(e2, Point(e2, (1.2, 0.0)))
    assert ball.contains(e2, Point(e2, (1.0, 0.0)))  # closed boundary
    assert WholeSpace().contains(e2, Point(e2, (50.0, 0.0)))
    union = FiniteUnionOfBalls((ball, ClosedBall(Point(e2, (3.0, 0.0)), 0.5)))
    assert union.contains(e2, Point(e2, (3.2, 0.0)))
    assert not union.contains(e2, Point(e2, (2.0, 0.0)))


def test_circle_charts():
    period, weight, circ = circle_chart(Torus(1, (2.5,)))
    assert period == pytest.approx(2.5) and circ == pytest.approx(2.5)
    assert np.allclose(weight(np.linspace(0, 2.5, 7)), 1.0)
    cc = ConformalCircle(0.3, (), ())
    period, weight, circ = circle_chart(cc)
    assert period == pytest.approx(2 * math.pi)
    assert circ == pytest.approx(2 * math.pi * math.exp(0.3), rel=1e-9)
    assert circle_chart(Euclidean(2)) is None


def test_point_model_mismatch_raises():
    e2, e3 = Euclidean(2), Euclidean(3)
    p3 = Point(e3, (0.0, 0.0, 0.0))
    with pytest.raises(GeometryError):
        e2.distance(e2.origin(), p3)


def test_bad_constructions_raise():
    with pytest.raises(GeometryError):
        Euclidean(0)
    with pytest.raises(GeometryError):
        Torus(2, (1.0,))
    with pytest.raises(GeometryError):
        Hyperbolic(4, 1.0)
    with pytest.raises(GeometryError):
        Sphere(2, -1.0)
