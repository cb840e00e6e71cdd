"""End-to-end acceptance checks, one per numbered criterion.

Each test prints a single pass/fail line on the real stdout so the run log
shows the full scoreboard even under pytest capture.
"""

import math
import sys

import numpy as np
import pytest

from katoscope.config import chart_origin
from katoscope.dynkin import (
    TimePowerBound,
    doubling_exponent_from_crossing,
    dynkin_norm,
    holder_bound,
    kato_detect,
    l1_lower_check,
    localized_norm,
    metric_comparability,
    mollification_convergence,
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
from katoscope.heatkernel import ck_residual, hk_mass
from katoscope.potentials import (
    Bump,
    Constant,
    GridFunction,
    PowerSingularity,
    Truncated,
    classical_kato_test_euclidean,
)
from katoscope.schrodinger import (
    continuity_probe,
    exhaustion_convergence,
    fk_semigroup,
    spectral_field,
    spectral_oracle,
)
from katoscope.stochastics import (
    fk_functional,
    khasminskii_bound,
    khasminskii_check,
    localization_mc,
    mc_dynkin_norm,
    sample_endpoints,
)

E2, E3 = Euclidean(2), Euclidean(3)
T1 = Torus(1, (1.0,))
S_HALF = Sphere(2, 0.5)
S_UNIT = Sphere(2, 1.0)
FLAT = ConformalCircle()
WARPED = ConformalCircle(sin_coeffs=(0.3,))

MASS_TOL = 1e-6
CK_TOL_CLOSED = 1e-6
CK_TOL_SPECTRAL = 1e-3
LAW_TOL = 1e-3
GAP_TOL = 0.02
SUB_TOL = 1e-3
SANDWICH_TOL = 1e-3
L1_TOL = 1e-3
FK_TOL = 1e-2


def _line(num: int, slug: str, ok: bool) -> None:
    sys.__stdout__.write(f"criterion {num:02d} {slug}: {'PASS' if ok else 'FAIL'}\n")
    sys.__stdout__.flush()


def test_c01_heat_kernel_mass_and_chapman():
    ok = True
    for model in (E2, E3, T1, S_HALF):
        x = chart_origin(model)
        for t in (0.01, 0.1, 1.0):
            ok &= abs(hk_mass(model, t, x) - 1.0) <= MASS_TOL
    pairs = [
        (E2, E2.origin(), E2.point(0.3, 0.4)),
        (E3, E3.origin(), E3.point(0.3, 0.4, 0.1)),
        (T1, T1.origin(), T1.point(0.3)),
        (S_HALF, S_HALF.origin(), S_HALF.point(0.7, 0.0)),
    ]
    for model, x, y in pairs:
        ok &= ck_residual(model, 0.15, 0.06, x, y) <= CK_TOL_CLOSED
    ok &= ck_residual(WARPED, 0.15, 0.06, WARPED.point(0.0), WARPED.point(1.0)) <= CK_TOL_SPECTRAL
    _line(1, "heat-kernel-mass-and-chapman", ok)
    assert ok


def test_c02_constant_potential_law():
    ok = True
    for model in (E2, T1):
        for c in (0.5, 2.0):
            for t in (0.1, 0.5):
                val = dynkin_norm(Constant(c), model, t).value
                ok &= abs(val - c * t) / (c * t) <= LAW_TOL
    _line(2, "constant-potential-law", ok)
    assert ok


def test_c03_power_singularity_classification():
    expected = {0.5: "kato", 1.0: "kato", 1.5: "kato", 2.0: "not-kato", 2.5: "not-kato"}
    ok = True
    for a, want in expected.items():
        w = PowerSingularity(E3.origin(), a, cutoff=1.0)
        classical = classical_kato_test_euclidean(w, E3).verdict
        detected = kato_detect(w, E3).verdict
        ok &= classical == want
        ok &= detected == want
        ok &= classical == detected
    _line(3, "power-singularity-classification", ok)
    assert ok


def test_c04_indicator_localization():
    ok = True
    t = 0.25
    for model in (E2, S_UNIT):
        origin = chart_origin(model)
        ball = ClosedBall(origin, 1.0)
        w = Truncated(Constant(1.0), ball)
        full, local, gap = localized_norm(w, model, t, ball)
        ok &= full.value >= local.value * (1 - 1e-9)
        ok &= gap <= GAP_TOL
        if isinstance(model, Euclidean):
            inside = [origin, model.point(0.5, 0.0)]
            outside = [model.point(1.5, 0.0), model.point(2.5, 0.0)]
        else:
            inside = [origin, model.point(0.5, 0.0)]
            outside = [model.point(1.5, 0.0), model.point(2.5, 0.0)]
        mc = localization_mc(
            w, model, ball, t, inside, outside, n_paths=100000, dt=1e-3, seed=14
        )
        ok &= mc.passes
        ok &= mc.sup_inside + 3.0 * mc.stderr >= local.value * (1 - GAP_TOL)
    _line(4, "indicator-localization", ok)
    assert ok


def test_c05_randomized_subadditivity():
    rng = np.random.default_rng(2026)
    t2pi = Torus(1, (2.0 * math.pi,))
    pool = [
        (E2, Bump(E2.origin(), 1.0, 1.0)),
        (E2, Bump(E2.origin(), 0.7, 2.0)),
        (E3, Bump(E3.origin(), 1.0, 1.0)),
        (E3, PowerSingularity(E3.origin(), 1.0, 1.0)),
        (t2pi, Bump(t2pi.origin(), 1.0, 1.0)),
    ]
    ok = True
    for i in range(20):
        model, w = pool[i % len(pool)]
        t = float(rng.uniform(0.05, 0.35))
        ratio = float(rng.uniform(1.1, 4.7))
        if abs(ratio - round(ratio)) < 0.05:
            ratio += 0.1
        chk = time_subadditivity_check(w, model, t, ratio * t, tol=SUB_TOL)
        ok &= chk.passes
        ok &= chk.lhs <= chk.rhs * (1 + SUB_TOL) + 1e-15
    _line(5, "randomized-subadditivity", ok)
    assert ok


def test_c06_resolvent_sandwich():
    ok = True
    for w in (Constant(1.0), Bump(E2.origin(), 1.0, 2.0)):
        for lam in (1.0, 5.0):
            for t in (0.1, 1.0):
                res = resolvent_sandwich(w, E2, lam, t, tol=SANDWICH_TOL)
                ok &= res.passes
                ok &= res.lower <= res.sup_resolvent <= res.upper
    _line(6, "resolvent-sandwich", ok)
    assert ok


def test_c07_holder_route_bound():
    cases = [
        (E3, PowerSingularity(E3.origin(), 1.0, 1.0), 2.0,
         TimePowerBound((4.0 * math.pi) ** -1.5, -1.5, 1.0), 0.1),
        (E2, Bump(E2.origin(), 1.0, 2.0), 3.0,
         TimePowerBound((4.0 * math.pi) ** -1.0, -1.0, 1.0), 0.25),
    ]
    ok = True
    for model, w, q, kb, t in cases:
        hb = holder_bound(w, model, kb, q, t)
        ok &= hb.passes
        ok &= hb.norm_value <= hb.bound * (1 + 1e-9)
        ok &= hb.precheck_worst <= 1.0 + 1e-6
    _line(7, "holder-route-bound", ok)
    assert ok


def test_c08_l1_lower_bound():
    t2pi = Torus(1, (2.0 * math.pi,))
    cases = [
        (Bump(E2.origin(), 1.0, 1.0), E2, 0.5, ClosedBall(E2.origin(), 1.0)),
        (Constant(1.0), E2, 0.25, ClosedBall(E2.origin(), 0.5)),
        (PowerSingularity(E3.origin(), 1.0, 1.0), E3, 0.1, ClosedBall(E3.origin(), 1.0)),
        (Bump(t2pi.origin(), 1.0, 1.0), t2pi, 0.5, ClosedBall(t2pi.origin(), 1.0)),
        (Bump(E3.origin(), 1.0, 1.0), E3, 0.25, ClosedBall(E3.origin(), 1.0)),
    ]
    ok = True
    for w, model, t, region in cases:
        chk = l1_lower_check(w, model, t, region, tol=L1_TOL)
        ok &= chk.passes
        ok &= chk.kernel_min > 0.0
    _line(8, "l1-lower-bound", ok)
    assert ok


def test_c09_khasminskii_growth():
    ok = khasminskii_bound(0.5, 2.0, 1.0) == pytest.approx(8.0, rel=1e-12)
    ball = ClosedBall(E3.origin(), 1.0)
    kc = khasminskii_check(
        Constant(1.0), E3, ball, E3.origin(), 0.3, 4.0,
        n_paths=100000, dt=1e-3, seed=27,
    )
    ok &= 0.40 <= kc.eta <= 0.55
    ok &= kc.passes
    ok &= kc.estimate.value > 0.0
    _line(9, "khasminskii-growth", ok)
    assert ok


def test_c10_feynman_kac_probes():
    mesh = np.linspace(0.0, 2.0 * math.pi, 513)
    w = GridFunction("circle", tuple(mesh), tuple(np.cos(mesh)), period=2.0 * math.pi)
    psi = lambda pts: np.sin(pts[:, 0])
    nodes_f = np.linspace(0.0, 2.0 * math.pi, 9, endpoint=False)
    nodes = [FLAT.point(v) for v in nodes_f]
    field = fk_semigroup(w, FLAT, psi, (0.5,), nodes, n_paths=100000, dt=1e-3, seed=10)
    oracle = spectral_oracle(FLAT, w, 512)
    exact = spectral_field(oracle, psi, (0.5,), nodes_f)
    diffs = np.abs(field.values[0] - exact.values[0])
    allowed = np.maximum(3.0 * field.stderrs[0], FK_TOL)
    ok = bool(np.all(diffs <= allowed))

    bump = Bump(E2.origin(), 1.0, 1.0)
    one = lambda pts: np.ones(len(pts))
    rep = exhaustion_convergence(
        bump, E2, one, E2.origin(), (2.0, 3.0, 4.0, 6.0), (0.5,), [E2.origin()],
        n_paths=20000, dt=1e-3, seed=8,
    )
    ok &= rep.passes
    devs = rep.deviations
    ok &= all(devs[i + 1] <= devs[i] * 1.05 + 1e-12 for i in range(len(devs) - 1))

    wc = Bump(FLAT.point(0.0), 0.8, 1.0)
    fields = []
    for n in (64, 128, 256):
        orc = spectral_oracle(FLAT, wc, n)
        fields.append(spectral_field(orc, psi, (0.2,), orc.thetas))
    crep = continuity_probe(fields)
    ok &= crep.passes
    ok &= crep.max_jumps[0] >= crep.max_jumps[-1]
    _line(10, "feynman-kac-probes", ok)
    assert ok


def test_c11_mollification_convergence():
    w = PowerSingularity(E3.origin(), 1.0, cutoff=1.0)
    rep = mollification_convergence(
        w, E3, 0.1, (0.2, 0.1, 0.05, 0.025, 0.0125), final_fraction=0.1
    )
    ok = rep.passes and rep.decreasing and rep.final_fraction <= 0.1
    _line(11, "mollification-convergence", ok)
    assert ok


def test_c12_conformal_comparability():
    ts = (0.2, 0.1, 0.05, 0.025)
    flat_rep = metric_comparability(Bump(FLAT.point(0.0), 0.5, 1.0), FLAT, ts)
    ok = flat_rep.constants == (1.0, 1.0)
    warped_rep = metric_comparability(Bump(WARPED.point(0.0), 0.5, 1.0), WARPED, ts, tol=0.2)
    ok &= warped_rep.passes
    ok &= warped_rep.variation < 0.2
    _line(12, "conformal-comparability", ok)
    assert ok


def test_c13_doubling_exponents():
    ok = ricci_doubling_exponent(E3).n_exp == pytest.approx(3.0, abs=1e-9)
    ok &= ricci_doubling_exponent(Hyperbolic(3, 1.0)).n_exp == pytest.approx(11.0 / 3.0, abs=1e-9)
    ok &= doubling_exponent_from_crossing(3, 0.25) == pytest.approx(4.0, abs=1e-12)
    ok &= doubling_exponent_from_crossing(2, 0.25) == pytest.approx(2.0, abs=1e-12)
    _line(13, "doubling-exponents", ok)
    assert ok


def test_c14_seeded_determinism():
    w = Bump(E2.origin(), 1.0, 2.0)
    a = mc_dynkin_norm(w, E2, 0.2, E2.origin(), n_paths=4000, dt=2e-3, seed=99)
    b = mc_dynkin_norm(w, E2, 0.2, E2.origin(), n_paths=4000, dt=2e-3, seed=99)
    ok = a.value == b.value and a.stderr == b.stderr
    psi = lambda pts: np.ones(len(pts))
    f1 = fk_functional(w, E2, E2.origin(), 0.2, psi, n_paths=4000, dt=2e-3, seed=5)
    f2 = fk_functional(w, E2, E2.origin(), 0.2, psi, n_paths=4000, dt=2e-3, seed=5)
    ok &= f1.value == f2.value
    e1 = sample_endpoints(E2, E2.origin(), 0.2, dt=2e-3, n_paths=1000, seed=3)
    e2 = sample_endpoints(E2, E2.origin(), 0.2, dt=2e-3, n_paths=1000, seed=3)
    ok &= bool(np.array_equal(e1, e2))
    c = mc_dynkin_norm(w, E2, 0.2, E2.origin(), n_paths=4000, dt=2e-3, seed=100)
    ok &= c.value != a.value
    _line(14, "seeded-determinism", ok)
    assert ok
