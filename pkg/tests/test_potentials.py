import math

import numpy as np
import pytest

from katoscope.geometry import ClosedBall, Euclidean, Point, Sphere, Torus
from katoscope.potentials import (
    Bump,
    Constant,
    LogSingularity,
    PotentialError,
    PowerSingularity,
    Sum,
    Truncated,
    cache_key,
    classical_kato_test_euclidean,
    is_constant,
    mollify,
    negative_part,
    positive_part,
    scale,
    singular_centers,
    sup_norm,
    support_bound,
    values_at,
)

E2, E3 = Euclidean(2), Euclidean(3)
O2, O3 = E2.origin(), E3.origin()


def test_constant_and_scale():
    w = Constant(2.5)
    pts = np.array([[0.0, 0.0], [3.0, -1.0]])
    assert np.allclose(values_at(w, E2, pts), 2.5)
    assert is_constant(w) == 2.5
    assert sup_norm(w, E2) == 2.5
    assert is_constant(scale(w, -2.0)) == -5.0


def test_power_singularity_values():
    w = PowerSingularity(O3, 1.5, cutoff=1.0, amplitude=2.0)
    r = np.array([0.25, 0.5, 0.99])
    pts = np.zeros((3, 3))
    pts[:, 0] = r
    assert np.allclose(values_at(w, E3, pts), 2.0 * r**-1.5)
    outside = values_at(w, E3, np.array([[1.5, 0.0, 0.0]]))
    assert outside[0] == 0.0
    assert sup_norm(w, E3) == math.inf


def test_log_singularity_values():
    w = LogSingularity(O2, cutoff=1.0)
    v = values_at(w, E2, np.array([[0.1, 0.0]]))
    assert v[0] == pytest.approx(-math.log(0.1), rel=1e-12)
    assert values_at(w, E2, np.array([[2.0, 0.0]]))[0] == 0.0


def test_bump_support_and_height():
    w = Bump(O2, 1.0, 3.0)
    inside = values_at(w, E2, np.array([[0.0, 0.0]]))
    assert inside[0] == pytest.approx(3.0)
    assert values_at(w, E2, np.array([[0.999, 0.0]]))[0] > 0.0
    assert values_at(w, E2, np.array([[1.001, 0.0]]))[0] == 0.0
    center, rad = support_bound(w, E2)
    assert E2.distance(center, O2) == 0.0 and rad == pytest.approx(1.0)
    assert sup_norm(w, E2) == pytest.approx(3.0)


def test_truncated_and_sum():
    ball = ClosedBall(O2, 0.5)
    w = Truncated(Constant(1.0), ball)
    vals = values_at(w, E2, np.array([[0.25, 0.0], [0.75, 0.0]]))
    assert vals[0] == 1.0 and vals[1] == 0.0
    s = Sum((Constant(1.0), Bump(O2, 1.0, 2.0)))
    v = values_at(s, E2, np.array([[0.0, 0.0]]))
    assert v[0] == pytest.approx(3.0)
    assert sup_norm(s, E2) == pytest.approx(3.0)


def test_signed_parts():
    wneg = Constant(-2.0)
    assert is_constant(negative_part(wneg)) == 2.0
    assert is_constant(positive_part(wneg)) == 0.0
    bump = Bump(O2, 1.0, 1.5)
    # positive-amplitude bump: negative part is structurally zero
    assert sup_norm(negative_part(bump), E2) == 0.0
    assert sup_norm(positive_part(bump), E2) == pytest.approx(1.5)
    mixed = Sum((Bump(O2, 1.0, 1.0), Bump(Point(E2, (0.5, 0.0)), 1.0, -2.0)))
    with pytest.raises(PotentialError):
        positive_part(mixed)


def test_singular_centers():
    w = Sum((PowerSingularity(O3, 1.0, 1.0), Bump(O3, 1.0, 1.0)))
    centers = singular_centers(w)
    assert len(centers) == 1
    assert E3.distance(centers[0], O3) == 0.0
    assert singular_centers(Bump(O3, 1.0, 1.0)) == ()


def test_mollify_bounded_and_convergent():
    w = PowerSingularity(O3, 1.0, cutoff=1.0)
    for eps in (0.2, 0.05):
        m = mollify(w, E3, eps)
        s = sup_norm(m, E3)
        assert math.isfinite(s)
        # away from the singularity the mollification tracks the original
        far = np.array([[0.7, 0.0, 0.0]])
        assert values_at(m, E3, far)[0] == pytest.approx(1.0 / 0.7, rel=0.25)
    m1 = mollify(w, E3, 0.02)
    assert values_at(m1, E3, np.array([[0.5, 0.0, 0.0]]))[0] == pytest.approx(2.0, rel=0.02)


def test_classical_kato_thresholds():
    for a, expect in [(0.5, "kato"), (1.5, "kato"), (2.0, "not-kato"), (2.5, "not-kato")]:
        w = PowerSingularity(O3, a, cutoff=1.0)
        ev = classical_kato_test_euclidean(w, E3)
        assert ev.verdict == expect, (a, ev.verdict, ev.values[-3:])
    # bounded potentials are always Kato
    ev = classical_kato_test_euclidean(Bump(O2, 1.0, 5.0), E2)
    assert ev.verdict == "kato"


def test_classical_test_needs_compact_radial_data():
    with pytest.raises(PotentialError):
        classical_kato_test_euclidean(Constant(1.0), E3)  # no compact support
    s2 = Sphere(2, 1.0)
    with pytest.raises(PotentialError):
        classical_kato_test_euclidean(Bump(Point(s2, (math.pi / 2, 0.0)), 1.0, 1.0), s2)


def test_cache_key_stability():
    w1 = PowerSingularity(O3, 1.0, 1.0)
    w2 = PowerSingularity(O3, 1.0, 1.0)
    assert cache_key(w1) == cache_key(w2)
    assert cache_key(w1) != cache_key(PowerSingularity(O3, 1.5, 1.0))
    assert hash(cache_key(Sum((w1, Constant(1.0))))) is not None


def test_values_at_torus_uses_metric_distance():
    t1 = Torus(1, (2.0,))
    w = Bump(t1.origin(), 0.3, 1.0)
    # the point 1.9 is distance 0.1 from the origin through the wrap
    assert values_at(w, t1, np.array([[1.9]]))[0] > 0.0
