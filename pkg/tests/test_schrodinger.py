import math

import numpy as np
import pytest

from katoscope.geometry import ConformalCircle, Euclidean
from katoscope.potentials import Bump, Constant, PotentialError, PowerSingularity
from katoscope.schrodinger import (
    continuity_probe,
    exhaustion_convergence,
    fk_semigroup,
    kato_decompose,
    spectral_field,
    spectral_oracle,
)

FLAT = ConformalCircle()
E2, E3 = Euclidean(2), Euclidean(3)


def _psi_one(pts):
    return np.ones(len(pts))


def _psi_sin(pts):
    return np.sin(pts[:, 0])


def test_fd_eigenvalues_follow_discrete_law():
    orc = spectral_oracle(FLAT, Constant(0.0), 256)
    h = 2.0 * math.pi / 256
    eigs = np.sort(orc.eigenvalues)
    ks = [0, 1, 1, 2, 2, 3, 3, 4, 4]
    for i, k in enumerate(ks):
        assert abs(eigs[i] - k * k) <= 1.1 * k**4 * h * h / 12.0 + 1e-9


def test_constant_potential_shifts_spectrum_exactly():
    base = np.sort(spectral_oracle(FLAT, Constant(0.0), 128).eigenvalues)
    shifted = np.sort(spectral_oracle(FLAT, Constant(1.5), 128).eigenvalues)
    assert np.allclose(shifted, base + 1.5, atol=1e-10)


def test_modes_orthonormal_under_weights():
    orc = spectral_oracle(FLAT, Bump(FLAT.point(0.3), 0.4, 1.0), 128)
    gram = (orc.modes * orc.weights[:, None]).T @ orc.modes
    assert np.abs(gram - np.eye(len(gram))).max() < 1e-10


def test_semigroup_property_and_symmetry():
    orc = spectral_oracle(FLAT, Bump(FLAT.point(1.0), 0.5, 2.0), 128)
    one_step = spectral_field(orc, _psi_sin, (0.3,), orc.thetas)
    u_mid = spectral_field(orc, _psi_sin, (0.15,), orc.thetas).values[0]
    psi_mid = lambda pts: np.interp(
        pts[:, 0], orc.thetas, u_mid, period=2.0 * math.pi
    )
    two_step = spectral_field(orc, psi_mid, (0.15,), orc.thetas)
    assert np.abs(two_step.values[0] - one_step.values[0]).max() < 1e-8
    # self-adjointness in the weighted inner product
    phi = np.cos(orc.thetas)
    psi = np.sin(2.0 * orc.thetas)
    u_psi = spectral_field(orc, lambda p: np.sin(2.0 * p[:, 0]), (0.2,), orc.thetas)
    u_phi = spectral_field(orc, lambda p: np.cos(p[:, 0]), (0.2,), orc.thetas)
    lhs = float(np.sum(orc.weights * phi * u_psi.values[0]))
    rhs = float(np.sum(orc.weights * u_phi.values[0] * psi))
    assert abs(lhs - rhs) < 1e-10


def test_ground_energy_mesh_stable():
    w = Bump(FLAT.point(0.0), 0.6, 3.0)
    e128 = np.sort(spectral_oracle(FLAT, w, 128).eigenvalues)[0]
    e256 = np.sort(spectral_oracle(FLAT, w, 256).eigenvalues)[0]
    assert abs(e128 - e256) < 5e-3


def test_singular_mesh_node_is_rejected():
    w = PowerSingularity(FLAT.point(0.0), 1.0, 0.5)
    with pytest.raises(PotentialError, match="mollify"):
        spectral_oracle(FLAT, w, 64)


def test_fk_matches_spectral_on_circle():
    w = Bump(FLAT.point(0.0), 0.8, 1.0)
    orc = spectral_oracle(FLAT, w, 256)
    query = np.linspace(0.0, 2.0 * math.pi, 5, endpoint=False)
    exact = spectral_field(orc, _psi_sin, (0.3,), query)
    pts = [FLAT.point(v) for v in query]
    mc = fk_semigroup(w, FLAT, _psi_sin, (0.3,), pts, n_paths=8000, dt=1e-3, seed=4)
    diffs = np.abs(mc.values[0] - exact.values[0])
    allowed = np.maximum(3.0 * mc.stderrs[0], 2e-2)
    assert np.all(diffs <= allowed)


def test_positive_potential_is_dominated_by_heat_flow():
    w = Bump(FLAT.point(2.0), 0.7, 2.0)
    orc_w = spectral_oracle(FLAT, w, 128)
    orc_0 = spectral_oracle(FLAT, Constant(0.0), 128)
    u_w = spectral_field(orc_w, _psi_one, (0.25,), orc_w.thetas).values[0]
    u_0 = spectral_field(orc_0, _psi_one, (0.25,), orc_0.thetas).values[0]
    assert np.all(u_w >= -1e-12)
    assert np.all(u_w <= u_0 + 1e-10)


def test_exhaustion_deviations_shrink():
    w = Bump(E2.origin(), 1.0, 1.0)
    rep = exhaustion_convergence(
        w, E2, _psi_one, E2.origin(), (1.5, 2.5, 3.5), (0.3,), [E2.origin()],
        n_paths=4000, dt=0.002, seed=1,
    )
    assert rep.passes
    assert rep.deviations[0] > rep.deviations[-1]
    with pytest.raises(ValueError):
        exhaustion_convergence(
            w, E2, _psi_one, E2.origin(), (2.0, 3.0), (0.3,), [E2.point(5.0, 0.0)],
            n_paths=500, dt=0.01, seed=1,
        )


def test_continuity_probe_needs_three_levels():
    with pytest.raises(ValueError):
        continuity_probe([])
    w = Bump(FLAT.point(0.0), 0.8, 1.0)
    fields = []
    for n in (64, 128, 256):
        orc = spectral_oracle(FLAT, w, n)
        fields.append(spectral_field(orc, _psi_sin, (0.2,), orc.thetas))
    rep = continuity_probe(fields)
    assert rep.passes
    # adjacent-node jumps shrink with the mesh while the modulus stays bounded
    assert rep.max_jumps[0] >= rep.max_jumps[-1]
    assert max(rep.moduli) < 10.0 * min(m for m in rep.moduli if m > 0)


def test_kato_decompose_verdicts():
    ok = kato_decompose(PowerSingularity(E3.origin(), 1.0, 1.0), E3)
    assert ok.evidence_minus.verdict == "kato"
    assert all(v.verdict == "kato" for _, v in ok.evidence_plus)
    with pytest.raises(PotentialError):
        kato_decompose(PowerSingularity(E3.origin(), 2.5, 1.0), E3)
    with pytest.raises(PotentialError):
        kato_decompose(PowerSingularity(E3.origin(), 2.5, 1.0, amplitude=-1.0), E3)
