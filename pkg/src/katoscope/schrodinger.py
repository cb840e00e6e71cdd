"""Perturbed-generator semigroups: spectral oracle, Feynman-Kac fields,
exhaustion convergence, and continuity probes.

On compact 1-D models the operator -Laplace + w is discretized with
periodic linear finite elements in the chart coordinate: with arc density
v(theta) the stiffness entries integrate f' h' / v and the lumped mass
carries v, so the discrete operator is symmetric in the weighted inner
product and converges at second order in the mesh.  Everywhere else the
semigroup is reached only through Feynman-Kac averaging of paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ClosedBall, Model, Point, circle_chart
from .potentials import (
    PotentialError,
    negative_part,
    positive_part,
    scale,
    sup_norm,
    support_bound,
    values_at,
    Truncated,
)
from .stochastics import MCEstimate, fk_expectation


def _is_zero(w, model) -> bool:
    try:
        return sup_norm(w, model) == 0.0
    except PotentialError:
        return False

_BOUNDED_NODE = 1e12


@dataclass(frozen=True)
class SpectralOracle:
    """Eigen-decomposition of the discretized perturbed generator.

    modes columns are orthonormal in the weighted discrete inner product
    sum_i weights[i] a[i] b[i]; eigenvalues ascend.
    """

    model: Model
    n: int
    thetas: np.ndarray
    weights: np.ndarray
    eigenvalues: np.ndarray
    modes: np.ndarray
    w_values: np.ndarray

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    def project(self, vals: np.ndarray) -> np.ndarray:
        return self.modes.T @ (self.weights * np.asarray(vals, dtype=float))

    def semigroup_apply(self, vals: np.ndarray, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError("t must be >= 0")
        coeff = self.project(vals) * np.exp(-self.eigenvalues * t)
        return self.modes @ coeff

    def interp(self, vals: np.ndarray, query: np.ndarray) -> np.ndarray:
        period = self.thetas[-1] + (self.thetas[1] - self.thetas[0])
        q = np.asarray(query, dtype=float) % period
        ext_t = np.concatenate([self.thetas, [period]])
        ext_v = np.concatenate([vals, [vals[0]]])
        return np.interp(q, ext_t, ext_v)


@dataclass(frozen=True)
class SemigroupField:
    """u(t, x) on a tensor grid with per-node standard errors."""

    ts: tuple[float, ...]
    xs: tuple[tuple[float, ...], ...]
    values: np.ndarray
    stderrs: np.ndarray
    method: str

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.ts, self.ts[1:])):
            raise ValueError("t grid must be strictly increasing")
        if np.any(self.stderrs < 0):
            raise ValueError("standard errors must be >= 0")


@dataclass(frozen=True)
class KatoDecomposablePotential:
    """A potential with verified occupation-norm evidence for both parts:
    the negative part globally, the positive part on declared compacts."""

    w: object
    evidence_minus: object
    evidence_plus: tuple


@dataclass(frozen=True)
class ExhaustionReport:
    radii: tuple[float, ...]
    deviations: tuple[float, ...]
    stderr: float
    final: float
    passes: bool


@dataclass(frozen=True)
class ContinuityReport:
    spacings: tuple[tuple[float, float], ...]
    max_jumps: tuple[float, ...]
    moduli: tuple[float, ...]
    passes: bool


# ---------------------------------------------------------------------------
# spectral oracle on compact 1-D models

_ORACLE_CACHE: dict = {}


def spectral_oracle(model: Model, w, n: int = 512) -> SpectralOracle:
    """Eigen-decomposition of the discrete perturbed generator on a circle model.

    Periodic linear elements: stiffness from midpoint arc densities, lumped
    mass from nodal ones.  Potential values must be finite at every node;
    mollify singular potentials first.
    """
    from .potentials import cache_key

    chart = circle_chart(model)
    if chart is None:
        raise ValueError("spectral oracle needs a compact 1-D model")
    key = (model, cache_key(w), n)
    hit = _ORACLE_CACHE.get(key)
    if hit is not None:
        return hit
    period, weight_fn, _ = chart
    h = period / n
    thetas = np.arange(n) * h
    v_nodes = np.asarray(weight_fn(thetas), dtype=float)
    v_mid = np.asarray(weight_fn(thetas + 0.5 * h), dtype=float)
    w_vals = values_at(w, model, thetas[:, None])
    if not np.all(np.isfinite(w_vals)) or np.max(np.abs(w_vals)) > _BOUNDED_NODE:
        raise PotentialError("potential unbounded at a mesh node; mollify first")
    # stiffness K and lumped mass M of the weighted form
    off = 1.0 / (h * v_mid)                    # coupling across edge i -> i+1
    K = np.zeros((n, n))
    idx = np.arange(n)
    K[idx, idx] = off + np.roll(off, 1)
    K[idx, (idx + 1) % n] -= off
    K[(idx + 1) % n, idx] -= off
    mass = v_nodes * h
    inv_sqrt = 1.0 / np.sqrt(mass)
    H = inv_sqrt[:, None] * K * inv_sqrt[None, :] + np.diag(w_vals)
    H = 0.5 * (H + H.T)
    eigvals, eigvecs = np.linalg.eigh(H)
    modes = inv_sqrt[:, None] * eigvecs
    oracle = SpectralOracle(model, n, thetas, mass, eigvals, modes, w_vals)
    _ORACLE_CACHE[key] = oracle
    return oracle


def spectral_field(oracle: SpectralOracle, psi, ts, query_thetas) -> SemigroupField:
    """Deterministic semigroup field on a (t, theta) tensor grid."""
    ts = tuple(float(t) for t in ts)
    qs = np.asarray(query_thetas, dtype=float)
    psi_vals = np.asarray(psi(oracle.thetas[:, None]), dtype=float)
    values = np.empty((len(ts), len(qs)))
    for i, t in enumerate(ts):
        values[i] = oracle.interp(oracle.semigroup_apply(psi_vals, t), qs)
    return SemigroupField(
        ts, tuple((float(q),) for q in qs), values, np.zeros_like(values), "spectral"
    )


# ---------------------------------------------------------------------------
# Feynman-Kac fields


def _subunit_horizon(w2, model, t_start: float, cfg=None) -> float:
    """Largest probed horizon with occupation norm of w2 below one."""
    from .dynkin import T_MIN, dynkin_norm

    kwargs = {"cfg": cfg} if cfg is not None else {}
    t0 = t_start
    while t0 >= T_MIN:
        val = dynkin_norm(w2, model, t0, **kwargs).value
        if val < 1.0:
            return t0
        t0 /= 2.0
    raise PotentialError(
        "exponential moment precheck failed: doubled negative part has "
        "occupation norm >= 1 at every probed horizon"
    )


def fk_semigroup(
    w,
    model: Model,
    psi,
    ts,
    xs,
    *,
    n_paths: int = 20000,
    dt: float = 1e-3,
    seed: int = 0,
    domain=None,
    precheck_t0: float = 0.1,
    cfg=None,
) -> SemigroupField:
    """Monte Carlo semigroup field u(t, x) = E^x[weighted psi(X_t)].

    Before sampling, the doubled negative part of w must have subunit
    occupation norm at some probed horizon; this guards the second moment
    of the exponential weight.  One seed drives every node, so neighboring
    nodes share their path prefixes (common random numbers).
    """
    wm = negative_part(w)
    if not _is_zero(wm, model):
        _subunit_horizon(scale(wm, 2.0), model, precheck_t0, cfg=cfg)
    ts = tuple(float(t) for t in ts)
    pts = [x if isinstance(x, Point) else Point(model, tuple(x)) for x in xs]
    values = np.empty((len(ts), len(pts)))
    errs = np.empty_like(values)
    for i, t in enumerate(ts):
        for j, x in enumerate(pts):
            est = fk_expectation(
                w, model, x, t, psi,
                n_paths=n_paths, dt=dt, seed=seed, domain=domain,
            )
            values[i, j] = est.value
            errs[i, j] = est.stderr
    return SemigroupField(
        ts, tuple(tuple(map(float, p.coords)) for p in pts), values, errs, "feynman-kac"
    )


def exhaustion_convergence(
    w,
    model: Model,
    psi,
    center: Point,
    radii,
    ts,
    xs,
    *,
    n_paths: int = 20000,
    dt: float = 1e-3,
    seed: int = 0,
    tol: float = 1e-2,
) -> ExhaustionReport:
    """Killed-versus-free semigroup deviation across a growing ball family.

    Free and killed paths share their driving noise, so each per-node
    deviation is an average of nonnegative per-path terms and shrinks
    monotonically as the balls grow.  passes requires a weak decrease and a
    final deviation within max(3 sigma, tol).
    """
    radii = tuple(sorted(float(r) for r in radii))
    pts = [x if isinstance(x, Point) else Point(model, tuple(x)) for x in xs]
    for p in pts:
        if float(model.distances(np.asarray(p.coords, float)[None, :], center)[0]) >= radii[0]:
            raise ValueError("every probe point must lie inside the smallest ball")
    devs = np.zeros(len(radii))
    sig = 0.0
    for t in ts:
        for x in pts:
            full, killed = fk_expectation(
                w, model, x, float(t), psi,
                n_paths=n_paths, dt=dt, seed=seed,
                exhaust_center=center, exhaust_radii=radii,
            )
            for i, k in enumerate(killed):
                devs[i] = max(devs[i], full.value - k.value)
                sig = max(sig, k.stderr)
            sig = max(sig, full.stderr)
    decreasing = all(devs[i + 1] <= devs[i] + 1e-12 for i in range(len(devs) - 1))
    final = float(devs[-1])
    passes = decreasing and final <= max(3.0 * sig, tol)
    return ExhaustionReport(radii, tuple(float(d) for d in devs), sig, final, passes)


def continuity_probe(fields) -> ContinuityReport:
    """Discrete modulus of continuity across refining semigroup fields.

    Each field contributes the largest jump between adjacent grid nodes and
    that jump divided by its spacing.  Continuity is evidenced when the
    jumps shrink with the grid while the modulus stays bounded.
    """
    fields = list(fields)
    if len(fields) < 3:
        raise ValueError("need at least 3 refinement levels")
    spacings, jumps, moduli = [], [], []
    for f in fields:
        vals = f.values
        dts = np.diff(np.asarray(f.ts)) if len(f.ts) > 1 else np.array([math.inf])
        x0 = np.asarray([x[0] for x in f.xs])
        dxs = np.diff(x0) if len(x0) > 1 else np.array([math.inf])
        jump_t = np.abs(np.diff(vals, axis=0)) if vals.shape[0] > 1 else np.zeros((0, 1))
        jump_x = np.abs(np.diff(vals, axis=1)) if vals.shape[1] > 1 else np.zeros((1, 0))
        mj = 0.0
        mod = 0.0
        if jump_t.size:
            mj = max(mj, float(np.max(jump_t)))
            mod = max(mod, float(np.max(jump_t / dts[:, None])))
        if jump_x.size:
            mj = max(mj, float(np.max(jump_x)))
            mod = max(mod, float(np.max(jump_x / dxs[None, :])))
        spacings.append((float(np.min(dts)), float(np.min(dxs))))
        jumps.append(mj)
        moduli.append(mod)
    shrinking = all(jumps[i + 1] <= jumps[i] * 1.05 + 1e-12 for i in range(len(jumps) - 1))
    finite = [m for m in moduli if m > 0]
    bounded = (not finite) or max(finite) <= 3.0 * min(finite) + 1e-12
    return ContinuityReport(
        tuple(spacings), tuple(jumps), tuple(moduli), shrinking and bounded
    )


# ---------------------------------------------------------------------------
# signed decomposition evidence


def _trivial_kato_verdict():
    from .dynkin import KatoVerdict

    return KatoVerdict("kato", (), (), 0.0, 0.0)


def kato_decompose(w, model: Model, compacts=(), **detect_kwargs) -> KatoDecomposablePotential:
    """Occupation-norm evidence that w splits admissibly into w+ - w-.

    The negative part needs global evidence; the positive part is probed on
    the declared compacts (default: one ball around the potential's support).
    Raises when any verdict comes back non-Kato.
    """
    from .dynkin import kato_detect

    wm = negative_part(w)
    if _is_zero(wm, model):
        ev_minus = _trivial_kato_verdict()
    else:
        ev_minus = kato_detect(wm, model, **detect_kwargs)
        if ev_minus.verdict != "kato":
            raise PotentialError(
                f"negative part is not Kato-evidenced (verdict {ev_minus.verdict})"
            )
    wp = positive_part(w)
    regions = list(compacts)
    if not regions and not _is_zero(wp, model):
        sb = support_bound(wp, model)
        if sb is not None:
            center, rad = sb
            regions = [ClosedBall(center, max(rad, 1.0))]
    ev_plus = []
    for reg in regions:
        verdict = kato_detect(Truncated(wp, reg), model, **detect_kwargs)
        if verdict.verdict != "kato":
            raise PotentialError(
                f"positive part is not Kato-evidenced on {type(reg).__name__} "
                f"(verdict {verdict.verdict})"
            )
        ev_plus.append((reg, verdict))
    return KatoDecomposablePotential(w, ev_minus, tuple(ev_plus))
