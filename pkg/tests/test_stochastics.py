import math

import numpy as np
import pytest

from katoscope.dynkin import dynkin_norm
from katoscope.geometry import ClosedBall, Euclidean, Torus
from katoscope.potentials import Bump, Constant
from katoscope.stochastics import (
    exit_time_mean,
    exp_difference_bound,
    fk_functional,
    khasminskii_bound,
    mc_dynkin_norm,
    mc_exp_occupation,
    sample_endpoints,
)

E2, E3 = Euclidean(2), Euclidean(3)
O2, O3 = E2.origin(), E3.origin()
RNG = np.random.default_rng(171)


@pytest.mark.parametrize("model,x0,m", [(E2, O2, 2), (E3, O3, 3)])
def test_endpoint_second_moment(model, x0, m):
    t = 0.5
    pts = sample_endpoints(model, x0, t, dt=0.01, n_paths=20000, seed=5)
    sq = np.sum(pts**2, axis=1)
    sigma = sq.std(ddof=1) / math.sqrt(len(sq))
    assert abs(sq.mean() - 2.0 * m * t) <= 3.0 * sigma


def test_seeded_runs_are_bit_identical():
    a = sample_endpoints(E2, O2, 0.3, dt=0.01, n_paths=2000, seed=42)
    b = sample_endpoints(E2, O2, 0.3, dt=0.01, n_paths=2000, seed=42)
    assert np.array_equal(a, b)
    c = sample_endpoints(E2, O2, 0.3, dt=0.01, n_paths=2000, seed=43)
    assert not np.array_equal(a, c)
    w = Bump(O2, 1.0, 2.0)
    m1 = mc_dynkin_norm(w, E2, 0.2, O2, n_paths=2000, dt=0.005, seed=7)
    m2 = mc_dynkin_norm(w, E2, 0.2, O2, n_paths=2000, dt=0.005, seed=7)
    assert m1.value == m2.value and m1.stderr == m2.stderr


def test_bad_arguments_raise():
    with pytest.raises(ValueError):
        sample_endpoints(E2, O2, 0.1, dt=-1.0)
    with pytest.raises(ValueError):
        sample_endpoints(E2, O2, 0.1, n_paths=0)


def test_torus_endpoints_stay_in_chart_and_mix():
    t1 = Torus(1, (1.0,))
    pts = sample_endpoints(t1, t1.origin(), 2.0, dt=0.01, n_paths=20000, seed=11)
    assert np.all((pts >= 0.0) & (pts < 1.0))
    # after t >> period^2 the law is near uniform on the circle
    sigma = pts[:, 0].std(ddof=1) / math.sqrt(len(pts))
    assert abs(pts[:, 0].mean() - 0.5) <= 4.0 * sigma


def test_constant_potential_functionals_are_exact():
    c, t = 1.5, 0.4
    # exponential occupation moment E exp(+int |w|), the Khasminskii quantity
    occ = mc_exp_occupation(Constant(c), E2, O2, t, n_paths=500, dt=0.01, seed=3)
    assert occ.value == pytest.approx(math.exp(c * t), rel=1e-12)
    assert occ.stderr <= 1e-6
    nrm = mc_dynkin_norm(Constant(c), E2, t, O2, n_paths=500, dt=0.01, seed=3)
    assert nrm.value == pytest.approx(c * t, rel=1e-12)


def test_exit_time_from_disk_center():
    est = exit_time_mean(E2, ClosedBall(O2, 1.0), O2, n_paths=8000, dt=1e-4, seed=9)
    exact = 1.0 / 4.0
    slack = 3.0 * est.stderr + 5.0 * math.sqrt(1e-4) * exact
    assert abs(est.value - exact) <= slack


def test_exp_difference_bound_dominates():
    a = RNG.uniform(-3.0, 5.0, size=1_000_000)
    b = RNG.uniform(-3.0, 5.0, size=1_000_000)
    bound = exp_difference_bound(a, b)
    actual = np.abs(np.exp(-a) - np.exp(-b))
    assert np.all(actual <= bound * (1 + 1e-12))


def test_khasminskii_bound_arithmetic():
    assert khasminskii_bound(0.5, 2.0, 1.0) == pytest.approx(8.0, rel=1e-12)
    with pytest.raises(ValueError):
        khasminskii_bound(1.0, 2.0, 1.0)


def test_fk_with_zero_potential_is_unity():
    psi = lambda pts: np.ones(len(pts))
    est = fk_functional(Constant(0.0), E2, O2, 0.3, psi, n_paths=400, dt=0.01, seed=2)
    assert est.value == pytest.approx(1.0, rel=1e-12)
    assert est.stderr == pytest.approx(0.0, abs=1e-14)


def test_mc_agrees_with_deterministic_norm():
    w = Bump(O2, 1.0, 3.0)
    t = 0.25
    det = dynkin_norm(w, E2, t).value
    mc = mc_dynkin_norm(w, E2, t, O2, n_paths=30000, dt=1e-3, seed=21)
    assert abs(mc.value - det) <= 3.0 * mc.stderr + 0.01 * det
