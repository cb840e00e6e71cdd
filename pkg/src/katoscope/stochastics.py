"""Path sampling and Monte Carlo cross-checks for occupation functionals.

Diffusions follow the Laplace generator convention used by the kernel code:
E|X_t - x|^2 = 2 m t on flat models, so every Euler step draws increments
with variance 2 dt per direction.  Flat and circle charts step exactly;
spheres and hyperbolic spaces step through the exponential map of a tangent
Gaussian (weak first order in dt); the conformal circle uses the
drift-diffusion form of its generator, dtheta = -e^{-2 phi} phi' dt
+ sqrt(2 dt) e^{-phi} dN.

Sampling is chunked with one child RNG stream per chunk, so results are
bit-identical across runs with the same seed and path count, independent
of platform threading.  Values of singular potentials along paths are
capped at their magnitude a distance sqrt(dt) from the singular center,
which keeps trapezoid sums finite with a bias that vanishes with the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    ClosedBall,
    ConformalCircle,
    Euclidean,
    Hyperbolic,
    Model,
    Point,
    Sphere,
    Torus,
)
from .potentials import PotentialError, radial_view, singular_centers, values_at

CHUNK = 4096
MIN_PATHS = 100
DT_MAX = 0.1


@dataclass(frozen=True)
class MCEstimate:
    value: float
    stderr: float
    n_paths: int
    dt: float
    n_steps: int
    seed: int
    domain: str = "whole-space"
    bias: float | None = None


@dataclass(frozen=True)
class ExitTimeEstimate:
    value: float
    stderr: float
    n_paths: int
    dt: float
    capped_fraction: float


@dataclass(frozen=True)
class PathSample:
    """One discretized trajectory with per-node chart points.

    alive_until is the first node index outside the declared domain (the
    step count when the path never leaves).  Integrals are trapezoid sums
    along all nodes, one pair per requested potential.
    """

    model: Model
    dt: float
    times: np.ndarray
    points: np.ndarray
    alive_until: int
    integrals_abs: tuple[float, ...]
    integrals_signed: tuple[float, ...]


@dataclass(frozen=True)
class KhasminskiiCheck:
    eta: float
    growth_const: float
    t: float
    t0: float
    bound: float
    estimate: MCEstimate
    passes: bool


@dataclass(frozen=True)
class LocalizationMC:
    sup_inside: float
    sup_outside: float
    stderr: float
    passes: bool
    values_inside: tuple[float, ...]
    values_outside: tuple[float, ...]


def _chunk_rng(seed: int, idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(idx,)))


def _steps_for(t: float, dt: float) -> tuple[int, float]:
    if t <= 0 or dt <= 0:
        raise ValueError("t and dt must be > 0")
    if dt > DT_MAX * (1 + 1e-12) or dt > (t / 10) * (1 + 1e-12):
        raise ValueError(f"dt too large: need dt <= min(t/10, {DT_MAX})")
    n = max(1, int(round(t / dt)))
    return n, t / n


def _check_paths(n_paths: int) -> None:
    if n_paths < MIN_PATHS:
        raise ValueError(f"need at least {MIN_PATHS} paths")


# ---------------------------------------------------------------------------
# per-model path state


class _PathEngine:
    """Vectorized stepping in a model-specific internal state."""

    def __init__(self, model: Model):
        self.model = model
        if isinstance(model, (Euclidean, Torus)):
            self.kind = "flat"
        elif isinstance(model, Sphere) and model.m == 1:
            self.kind = "circle"
        elif isinstance(model, Sphere):
            self.kind = "sphere"
        elif isinstance(model, Hyperbolic):
            self.kind = "hyperbolic"
        elif isinstance(model, ConformalCircle):
            self.kind = "conformal"
        else:
            raise ValueError(f"no path sampler for {model}")

    def init(self, x0: Point, k: int) -> np.ndarray:
        if self.kind in ("sphere", "hyperbolic"):
            return np.tile(self.model.embed(x0), (k, 1))
        return np.tile(np.asarray(x0.coords, dtype=float), (k, 1))

    def step(self, state: np.ndarray, dt: float, rng: np.random.Generator) -> np.ndarray:
        model = self.model
        k = len(state)
        if self.kind == "flat":
            out = state + math.sqrt(2.0 * dt) * rng.standard_normal(state.shape)
            if isinstance(model, Torus):
                out %= np.asarray(model.periods)
            return out
        if self.kind == "circle":
            sig = math.sqrt(2.0 * dt) / model.radius
            return (state + sig * rng.standard_normal(state.shape)) % (2.0 * math.pi)
        if self.kind == "conformal":
            th = state[:, 0]
            phi = model.phi(th)
            drift = -np.exp(-2.0 * phi) * model.phi_prime(th)
            sig = math.sqrt(2.0 * dt) * np.exp(-phi)
            out = (th + drift * dt + sig * rng.standard_normal(k)) % (2.0 * math.pi)
            return out[:, None]
        if self.kind == "sphere":
            R = model.radius
            g = math.sqrt(2.0 * dt) * rng.standard_normal(state.shape)
            n_hat = state / R
            v = g - np.sum(g * n_hat, axis=1, keepdims=True) * n_hat
            s = np.maximum(np.linalg.norm(v, axis=1, keepdims=True), 1e-300)
            out = np.cos(s / R) * state + np.sin(s / R) * R * v / s
            return out * (R / np.linalg.norm(out, axis=1, keepdims=True))
        # hyperbolic: boost an origin-tangent Gaussian into the tangent at p,
        # then follow the hyperboloid geodesic.  With p_hat = kappa p (Minkowski
        # norm -1) and o_hat the normalized base point, the boost of a tangent
        # vector v at o_hat is v + <v, p_hat>_M (o_hat + p_hat) / (1 + p_t).
        kap = model.kappa
        m = model.m
        w = math.sqrt(2.0 * dt) * rng.standard_normal((k, m))
        p_hat = kap * state
        ip = np.sum(w * p_hat[:, :m], axis=1, keepdims=True)
        denom = 1.0 + p_hat[:, m:]
        v = np.concatenate([w, np.zeros((k, 1))], axis=1)
        o_plus_p = np.concatenate([p_hat[:, :m], 1.0 + p_hat[:, m:]], axis=1)
        v = v + (ip / denom) * o_plus_p
        s = np.maximum(np.linalg.norm(w, axis=1, keepdims=True), 1e-300)
        out = np.cosh(kap * s) * state + np.sinh(kap * s) * v / (kap * s)
        out[:, m] = np.sqrt(1.0 / kap**2 + np.sum(out[:, :m] ** 2, axis=1))
        return out

    def chart(self, state: np.ndarray) -> np.ndarray:
        model = self.model
        if self.kind in ("flat", "circle", "conformal"):
            return state
        if self.kind == "hyperbolic":
            return state[:, : model.m]
        R = model.radius
        u = state / R
        if model.m == 2:
            th = np.arccos(np.clip(u[:, 2], -1.0, 1.0))
            ph = np.arctan2(u[:, 1], u[:, 0]) % (2.0 * math.pi)
            return np.stack([th, ph], axis=1)
        ch = np.arccos(np.clip(u[:, 0], -1.0, 1.0))
        s1 = np.maximum(np.sin(ch), 1e-300)
        th = np.arccos(np.clip(u[:, 1] / s1, -1.0, 1.0))
        ph = np.arctan2(u[:, 3], u[:, 2]) % (2.0 * math.pi)
        return np.stack([ch, th, ph], axis=1)

    def dist_to(self, state: np.ndarray, y: Point) -> np.ndarray:
        model = self.model
        if self.kind == "sphere":
            return model.angles_from_embedded(state, y)
        if self.kind == "hyperbolic":
            return model.dist_from_embedded(state, y)
        return model.distances(state, y)


# ---------------------------------------------------------------------------
# potential evaluation along paths


def _probe_at_distance(model, center: Point, eps: float) -> np.ndarray:
    """Chart coordinates of a point at geodesic distance about eps from center."""
    c = np.asarray(center.coords, dtype=float).copy()
    if isinstance(model, Sphere):
        delta = eps / model.radius
        if model.m > 1 and c[0] + delta > math.pi:
            c[0] -= delta
        else:
            c[0] += delta
        return c
    if isinstance(model, ConformalCircle):
        c[0] += eps * math.exp(-float(model.phi(c[0])))
        return c
    c[0] += eps
    return c


def _singular_caps(w, model, eps: float):
    """(center, cap magnitude at distance eps) for each singular center."""
    caps = []
    for c in singular_centers(w):
        probe = _probe_at_distance(model, c, eps)
        cap = float(np.abs(values_at(w, model, probe[None, :]))[0])
        if not math.isfinite(cap):
            cap = 0.0
        caps.append((c, cap))
    return caps


def _make_eval(w, model, engine: _PathEngine, eps: float, use_abs: bool):
    caps = _singular_caps(w, model, eps)
    view = radial_view(w, model)

    def ev(state):
        if view is not None:
            # distance straight from the internal state; skips the chart
            vals = np.asarray(view.profile(engine.dist_to(state, view.center)))
        else:
            vals = values_at(w, model, engine.chart(state))
        if use_abs:
            vals = np.abs(vals)
        for c, cap in caps:
            near = engine.dist_to(state, c) < eps
            if np.any(near):
                vals = np.where(near, np.clip(vals, -cap, cap), vals)
        return vals

    return ev


def _domain_tag(domain) -> str:
    if domain is None:
        return "whole-space"
    return type(domain).__name__


def _inside_mask(engine, model, region, state):
    if isinstance(region, ClosedBall):
        return engine.dist_to(state, region.center) <= region.radius
    return region.contains_many(model, engine.chart(state))


def _alive_update(engine, model, domain, state, alive):
    if domain is None:
        return alive
    return alive & _inside_mask(engine, model, domain, state)


# ---------------------------------------------------------------------------
# single-trajectory record (audit and hitting/exit analysis)


def sample_path(
    model: Model,
    x0: Point,
    t: float,
    dt: float,
    rng,
    *,
    potentials=(),
    domain=None,
) -> PathSample:
    """One trajectory with all nodes kept, for audit and first-time queries.

    rng is either an integer seed or a numpy Generator.  Trapezoid integrals
    of |w| and of w along the nodes are accumulated per requested potential.
    """
    n_steps, dt_eff = _steps_for(t, dt)
    engine = _PathEngine(model)
    gen = rng if isinstance(rng, np.random.Generator) else _chunk_rng(int(rng), 0)
    state = engine.init(x0, 1)
    charts = [engine.chart(state)[0].copy()]
    evs = [_make_eval(w, model, engine, math.sqrt(dt_eff), use_abs=False) for w in potentials]
    prev = [float(ev(state)[0]) for ev in evs]
    acc_abs = [0.0] * len(evs)
    acc_sgn = [0.0] * len(evs)
    alive_until = n_steps
    alive = np.array([True])
    for k in range(n_steps):
        state = engine.step(state, dt_eff, gen)
        charts.append(engine.chart(state)[0].copy())
        if domain is not None and alive[0]:
            alive = _alive_update(engine, model, domain, state, alive)
            if not alive[0]:
                alive_until = k + 1
        for i, ev in enumerate(evs):
            cur = float(ev(state)[0])
            acc_sgn[i] += 0.5 * dt_eff * (prev[i] + cur)
            acc_abs[i] += 0.5 * dt_eff * (abs(prev[i]) + abs(cur))
            prev[i] = cur
    return PathSample(
        model,
        dt_eff,
        np.arange(n_steps + 1) * dt_eff,
        np.asarray(charts),
        alive_until,
        tuple(acc_abs),
        tuple(acc_sgn),
    )


def first_times(path: PathSample, domain=None, target=None) -> tuple[int, int]:
    """(first node index outside domain, first node index inside target).

    Either query may be None; the step count n acts as the never-sentinel.
    """
    n = len(path.times) - 1
    model = path.model
    zeta = n
    if domain is not None:
        inside = domain.contains_many(model, path.points)
        out = np.flatnonzero(~inside)
        zeta = int(out[0]) if len(out) else n
    sigma = n
    if target is not None:
        hit = np.flatnonzero(target.contains_many(model, path.points))
        sigma = int(hit[0]) if len(hit) else n
    return zeta, sigma


# ---------------------------------------------------------------------------
# bulk sampling operations


def sample_endpoints(
    model: Model,
    x0: Point,
    t: float,
    *,
    dt: float = 1e-3,
    n_paths: int = 10000,
    seed: int = 0,
) -> np.ndarray:
    """Chart coordinates of n_paths diffusion endpoints at time t."""
    _check_paths(n_paths)
    n_steps, dt_eff = _steps_for(t, dt)
    engine = _PathEngine(model)
    out = []
    for idx in range(0, n_paths, CHUNK):
        k = min(CHUNK, n_paths - idx)
        rng = _chunk_rng(seed, idx // CHUNK)
        state = engine.init(x0, k)
        for _ in range(n_steps):
            state = engine.step(state, dt_eff, rng)
        out.append(engine.chart(state))
    return np.concatenate(out, axis=0)


def mc_dynkin_norm(
    w,
    model: Model,
    t: float,
    x0: Point,
    *,
    region=None,
    n_paths: int = 100000,
    dt: float = 1e-3,
    seed: int = 0,
) -> MCEstimate:
    """Monte Carlo E[integral_0^t |w|(X_s) ds] from the fixed start point x0.

    This estimates the occupation mass at one x, the quantity whose sup over
    x the deterministic norm computes; region restricts the integrand.
    """
    _check_paths(n_paths)
    n_steps, dt_eff = _steps_for(t, dt)
    engine = _PathEngine(model)
    ev = _make_eval(w, model, engine, math.sqrt(dt_eff), use_abs=True)

    def masked(state):
        vals = ev(state)
        if region is not None:
            vals = np.where(_inside_mask(engine, model, region, state), vals, 0.0)
        return vals

    total = total_sq = 0.0
    for idx in range(0, n_paths, CHUNK):
        k = min(CHUNK, n_paths - idx)
        rng = _chunk_rng(seed, idx // CHUNK)
        state = engine.init(x0, k)
        prev = masked(state)
        acc = np.zeros(k)
        for _ in range(n_steps):
            state = engine.step(state, dt_eff, rng)
            cur = masked(state)
            acc += 0.5 * dt_eff * (prev + cur)
            prev = cur
        total += float(np.sum(acc))
        total_sq += float(np.sum(acc * acc))
    mean = total / n_paths
    var = max(total_sq / n_paths - mean * mean, 0.0)
    return MCEstimate(
        mean, math.sqrt(var / n_paths), n_paths, dt_eff, n_steps, seed, _domain_tag(region)
    )


def fk_expectation(
    w,
    model: Model,
    x0: Point,
    t: float,
    psi,
    *,
    n_paths: int = 100000,
    dt: float = 1e-3,
    seed: int = 0,
    domain=None,
    exhaust_center: Point | None = None,
    exhaust_radii: tuple[float, ...] = (),
):
    """Feynman-Kac average E[1_{t < exit} e^{-integral of w} psi(X_t)].

    psi is a callable on chart-coordinate rows.  Paths that leave the domain
    contribute zero and stop accumulating.  With exhaustion radii the return
    value is a tuple (full, restricted) where restricted[i] keeps only paths
    whose running distance from exhaust_center stays below exhaust_radii[i];
    the same driving noise couples all of them, so each restricted average
    sits below the full one and increases toward it.
    """
    _check_paths(n_paths)
    n_steps, dt_eff = _steps_for(t, dt)
    engine = _PathEngine(model)
    ev = _make_eval(w, model, engine, math.sqrt(dt_eff), use_abs=False)
    radii = tuple(float(r) for r in exhaust_radii)
    sums = np.zeros(1 + len(radii))
    sq_sums = np.zeros(1 + len(radii))
    for idx in range(0, n_paths, CHUNK):
        k = min(CHUNK, n_paths - idx)
        rng = _chunk_rng(seed, idx // CHUNK)
        state = engine.init(x0, k)
        prev = ev(state)
        acc = np.zeros(k)
        alive = np.ones(k, dtype=bool)
        run_max = (
            engine.dist_to(state, exhaust_center) if exhaust_center is not None else None
        )
        for _ in range(n_steps):
            state = engine.step(state, dt_eff, rng)
            cur = ev(state)
            acc += np.where(alive, 0.5 * dt_eff * (prev + cur), 0.0)
            prev = cur
            alive = _alive_update(engine, model, domain, state, alive)
            if run_max is not None:
                run_max = np.maximum(run_max, engine.dist_to(state, exhaust_center))
        vals = np.exp(-acc) * np.asarray(psi(engine.chart(state)), dtype=float)
        vals = np.where(alive, vals, 0.0)
        sums[0] += float(np.sum(vals))
        sq_sums[0] += float(np.sum(vals * vals))
        for i, r in enumerate(radii):
            kept = np.where(run_max < r, vals, 0.0)
            sums[1 + i] += float(np.sum(kept))
            sq_sums[1 + i] += float(np.sum(kept * kept))
    outs = []
    for i in range(1 + len(radii)):
        mean = sums[i] / n_paths
        var = max(sq_sums[i] / n_paths - mean * mean, 0.0)
        outs.append(
            MCEstimate(
                mean,
                math.sqrt(var / n_paths),
                n_paths,
                dt_eff,
                n_steps,
                seed,
                _domain_tag(domain),
            )
        )
    if not radii:
        return outs[0]
    return outs[0], tuple(outs[1:])


def fk_functional(
    w,
    model: Model,
    x0: Point,
    t: float,
    psi,
    *,
    n_paths: int = 100000,
    dt: float = 1e-3,
    seed: int = 0,
    domain=None,
) -> MCEstimate:
    """fk_expectation plus a dt-halving bias probe stored in the bias field."""
    coarse = fk_expectation(
        w, model, x0, t, psi, n_paths=n_paths, dt=dt, seed=seed, domain=domain
    )
    fine = fk_expectation(
        w, model, x0, t, psi, n_paths=n_paths, dt=dt / 2, seed=seed, domain=domain
    )
    return MCEstimate(
        coarse.value,
        coarse.stderr,
        coarse.n_paths,
        coarse.dt,
        coarse.n_steps,
        seed,
        coarse.domain,
        bias=abs(coarse.value - fine.value),
    )


def mc_exp_occupation(
    w,
    model: Model,
    x0: Point,
    t: float,
    *,
    n_paths: int = 100000,
    dt: float = 1e-3,
    seed: int = 0,
    domain=None,
) -> MCEstimate:
    """Monte Carlo E[1_{t < exit} e^{+integral of |w|}] from x0."""
    _check_paths(n_paths)
    n_steps, dt_eff = _steps_for(t, dt)
    engine = _PathEngine(model)
    ev = _make_eval(w, model, engine, math.sqrt(dt_eff), use_abs=True)
    total = total_sq = 0.0
    for idx in range(0, n_paths, CHUNK):
        k = min(CHUNK, n_paths - idx)
        rng = _chunk_rng(seed, idx // CHUNK)
        state = engine.init(x0, k)
        prev = ev(state)
        acc = np.zeros(k)
        alive = np.ones(k, dtype=bool)
        for _ in range(n_steps):
            state = engine.step(state, dt_eff, rng)
            cur = ev(state)
            acc += np.where(alive, 0.5 * dt_eff * (prev + cur), 0.0)
            prev = cur
            alive = _alive_update(engine, model, domain, state, alive)
        vals = np.where(alive, np.exp(acc), 0.0)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
    mean = total / n_paths
    var = max(total_sq / n_paths - mean * mean, 0.0)
    return MCEstimate(
        mean, math.sqrt(var / n_paths), n_paths, dt_eff, n_steps, seed, _domain_tag(domain)
    )


def exit_time_mean(
    model: Model,
    region: ClosedBall,
    x0: Point,
    *,
    t_cap: float = 10.0,
    n_paths: int = 100000,
    dt: float = 1e-4,
    seed: int = 0,
) -> ExitTimeEstimate:
    """Mean first exit time from the region, capped at t_cap.

    The ball exit law for the Laplace generator gives (r^2 - |x - c|^2) / (2m)
    on flat models; crossings are attributed to the step midpoint.  Node-based
    exit detection biases the mean high by O(sqrt(dt)).
    """
    if not isinstance(region, ClosedBall):
        raise ValueError("exit times are tracked for closed balls")
    _check_paths(n_paths)
    n_steps, dt_eff = _steps_for(t_cap, dt)
    engine = _PathEngine(model)
    total = total_sq = 0.0
    n_capped = 0
    for idx in range(0, n_paths, CHUNK):
        k = min(CHUNK, n_paths - idx)
        rng = _chunk_rng(seed, idx // CHUNK)
        state = engine.init(x0, k)
        times = np.full(k, t_cap)
        alive = np.ones(k, dtype=bool)
        for step in range(n_steps):
            state = engine.step(state, dt_eff, rng)
            if not np.any(alive):
                break
            newly = alive & (engine.dist_to(state, region.center) > region.radius)
            times[newly] = (step + 0.5) * dt_eff
            alive &= ~newly
        n_capped += int(np.sum(alive))
        total += float(np.sum(times))
        total_sq += float(np.sum(times * times))
    mean = total / n_paths
    var = max(total_sq / n_paths - mean * mean, 0.0)
    return ExitTimeEstimate(
        mean, math.sqrt(var / n_paths), n_paths, dt_eff, n_capped / n_paths
    )


# ---------------------------------------------------------------------------
# Khasminskii-type exponential moment control


def khasminskii_bound(eta: float, t: float, t0: float) -> float:
    """Exponential moment cap C^(1 + t/t0) with C = 1/(1 - eta).

    eta is the occupation norm at horizon t0 and must be subunit; iterating
    the Markov property over successive t0-blocks gives the geometric growth.
    """
    if not (0.0 <= eta < 1.0):
        raise PotentialError(f"need occupation norm < 1, got {eta}")
    if t < 0 or t0 <= 0:
        raise ValueError("t must be >= 0 and t0 > 0")
    c = 1.0 / (1.0 - eta)
    return c ** (1.0 + t / t0)


def khasminskii_check(
    w,
    model: Model,
    domain,
    x0: Point,
    t: float,
    t0: float,
    *,
    n_paths: int = 100000,
    dt: float = 1e-3,
    seed: int = 0,
    cfg=None,
) -> KhasminskiiCheck:
    """Exponential occupation moment on a domain versus its geometric bound.

    eta is the domain-localized occupation norm at horizon t0 computed with
    the full-space kernel, which dominates the killed kernel and so gives a
    valid (conservative) precondition check.  The Monte Carlo side kills
    paths on exit from the domain.
    """
    from .dynkin import localized_norm

    kwargs = {"cfg": cfg} if cfg is not None else {}
    _, local, _ = localized_norm(w, model, t0, domain, **kwargs)
    eta = float(local.value)
    bound = khasminskii_bound(eta, t, t0)
    est = mc_exp_occupation(
        w, model, x0, t, n_paths=n_paths, dt=dt, seed=seed, domain=domain
    )
    passes = est.value <= bound + 3.0 * est.stderr
    return KhasminskiiCheck(eta, 1.0 / (1.0 - eta), t, t0, bound, est, passes)


def localization_mc(
    w,
    model: Model,
    region,
    t: float,
    xs_inside,
    xs_outside,
    *,
    n_paths: int = 20000,
    dt: float = 1e-3,
    seed: int = 0,
) -> LocalizationMC:
    """Monte Carlo check that the region-restricted occupation functional
    attains its sup (within noise) from start points inside the region."""
    vals_in, errs = [], []
    for i, x in enumerate(xs_inside):
        est = mc_dynkin_norm(
            w, model, t, x, region=region, n_paths=n_paths, dt=dt, seed=seed + i
        )
        vals_in.append(est.value)
        errs.append(est.stderr)
    vals_out = []
    for i, x in enumerate(xs_outside):
        est = mc_dynkin_norm(
            w, model, t, x, region=region, n_paths=n_paths, dt=dt,
            seed=seed + len(list(xs_inside)) + i,
        )
        vals_out.append(est.value)
        errs.append(est.stderr)
    sup_in = max(vals_in) if vals_in else 0.0
    sup_out = max(vals_out) if vals_out else 0.0
    sigma = max(errs) if errs else 0.0
    passes = (not vals_out) or (not vals_in) or sup_out <= sup_in + 3.0 * sigma
    return LocalizationMC(
        sup_in, sup_out, sigma, passes, tuple(vals_in), tuple(vals_out)
    )


def exp_difference_bound(a, b):
    """Pointwise majorant e^(1 + a^- + b^-) |a - b|^(1/2) of |e^-a - e^-b|.

    Crude but uniform: it needs no Lipschitz window because the square root
    absorbs large separations.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    neg = np.maximum(-a, 0.0) + np.maximum(-b, 0.0)
    return np.exp(1.0 + neg) * np.sqrt(np.abs(a - b))
