"""Potential families and the classical singular-integral Kato tests.

Families (closed set):

* ``Constant(c)``
* ``PowerSingularity(center, exponent, cutoff, amplitude)``  amp * d^-a inside the cutoff
* ``LogSingularity(center, cutoff, amplitude)``              amp * log_+(1/d) inside the cutoff
* ``Bump(center, radius, height)``                           smooth, compactly supported
* ``GridFunction``                                           sampled values; either a periodic
                                                             circle mesh or a radial profile
* ``Truncated(inner, region)``                               pointwise restriction
* ``Sum(parts)``                                             pointwise sum

Values may be +/-inf at singular centers; downstream integrators consume
either pointwise values or, when available, the radial view around a single
center (profile of the distance), which unlocks exact angular reductions.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    ClosedBall,
    ConformalCircle,
    Euclidean,
    FiniteUnionOfBalls,
    GeometryError,
    Point,
    Region,
    Sphere,
    Torus,
    WholeSpace,
    circle_chart,
    unit_ball_volume,
)
from .quadrature import feature_edges, integrate_endpoint_power, integrate_panels


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class RadialView:
    """|center|-radial description: value(x) = profile(d(x, center))."""

    center: Point
    profile: object            # callable: r array -> signed values
    singular_exponent: float   # power blow-up at r = 0 (0 when bounded)
    support_radius: float      # values vanish beyond this radius (inf allowed)
    breakpoints: tuple[float, ...] = ()


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class PowerSingularity:
    center: Point
    exponent: float
    cutoff: float | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if self.exponent <= 0:
            raise PotentialError("exponent must be > 0")
        if self.cutoff is not None and self.cutoff <= 0:
            raise PotentialError("cutoff must be > 0")


@dataclass(frozen=True)
class LogSingularity:
    center: Point
    cutoff: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.cutoff <= 0:
            raise PotentialError("cutoff must be > 0")


@dataclass(frozen=True)
class Bump:
    center: Point
    radius: float
    height: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise PotentialError("radius must be > 0")


@dataclass(eq=False)
class GridFunction:
    """Sampled potential: periodic in the chart angle, or radial about a center.

    kind="circle": mesh over one chart period, periodic linear interpolation.
    kind="radial": mesh in the distance r >= 0 about `center`; zero beyond
    the last node.  Values are finite, so grid functions are always bounded.
    """

    kind: str
    mesh: np.ndarray
    values: np.ndarray
    center: Point | None = None
    period: float | None = None

    def __post_init__(self):
        self.mesh = np.asarray(self.mesh, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.kind not in ("circle", "radial"):
            raise PotentialError("kind must be 'circle' or 'radial'")
        if self.mesh.shape != self.values.shape or self.mesh.ndim != 1:
            raise PotentialError("mesh and values must be 1-D arrays of equal length")
        if not np.all(np.isfinite(self.values)):
            raise PotentialError("grid values must be finite")
        if self.kind == "radial" and self.center is None:
            raise PotentialError("radial grid needs a center")
        if self.kind == "circle" and self.period is None:
            raise PotentialError("circle grid needs the chart period")

    def interp_circle(self, theta):
        th = np.asarray(theta, dtype=float) % self.period
        xp = np.concatenate([self.mesh, [self.mesh[0] + self.period]])
        fp = np.concatenate([self.values, [self.values[0]]])
        return np.interp(th, xp, fp)

    def interp_radial(self, r):
        r = np.asarray(r, dtype=float)
        out = np.interp(r, self.mesh, self.values, right=0.0)
        return np.where(r > self.mesh[-1], 0.0, out)


@dataclass(frozen=True)
class Truncated:
    inner: object
    region: Region


@dataclass(frozen=True)
class Sum:
    parts: tuple


@dataclass(frozen=True, eq=False)
class RadialPotential:
    """Derived radial function: value(x) = profile(d(x, center)).

    Covers functions no closed-form family captures, e.g. mollification
    differences.  The exponent and breakpoints steer quadrature refinement;
    the exponent is an upper bound on the blow-up power at the center.
    """

    center: Point
    profile: object            # callable: radius array -> signed values
    singular_exponent: float = 0.0
    support_radius: float = math.inf
    breakpoints: tuple[float, ...] = ()
    label: str = "radial"


Potential = (
    Constant
    | PowerSingularity
    | LogSingularity
    | Bump
    | GridFunction
    | Truncated
    | Sum
    | RadialPotential
)


# ---------------------------------------------------------------------------
# pointwise evaluation


def _dists(model, pts, center: Point) -> np.ndarray:
    return model.distances(np.atleast_2d(pts), center)


def values_at(w, model, pts) -> np.ndarray:
    """Signed values on chart-coordinate rows; +/-inf at singular centers."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if isinstance(w, Constant):
        return np.full(len(pts), float(w.value))
    if isinstance(w, PowerSingularity):
        if w.amplitude == 0.0:
            return np.zeros(len(pts))
        d = _dists(model, pts, w.center)
        with np.errstate(divide="ignore"):
            v = w.amplitude * d ** (-w.exponent)
        if w.cutoff is not None:
            v = np.where(d <= w.cutoff, v, 0.0)
        return v
    if isinstance(w, LogSingularity):
        if w.amplitude == 0.0:
            return np.zeros(len(pts))
        d = _dists(model, pts, w.center)
        with np.errstate(divide="ignore"):
            v = w.amplitude * np.maximum(np.log(1.0 / d), 0.0)
        return np.where(d <= w.cutoff, v, 0.0)
    if isinstance(w, Bump):
        d = _dists(model, pts, w.center)
        return _bump_profile(d, w.radius, w.height)
    if isinstance(w, GridFunction):
        if w.kind == "circle":
            return w.interp_circle(pts[:, 0])
        return w.interp_radial(_dists(model, pts, w.center))
    if isinstance(w, Truncated):
        inside = w.region.contains_many(model, pts)
        return np.where(inside, values_at(w.inner, model, pts), 0.0)
    if isinstance(w, Sum):
        return np.sum([values_at(p, model, pts) for p in w.parts], axis=0)
    if isinstance(w, RadialPotential):
        return np.asarray(w.profile(_dists(model, pts, w.center)), dtype=float)
    raise PotentialError(f"unknown potential {type(w).__name__}")


def value_at(w, model, point) -> float:
    p = point.array() if isinstance(point, Point) else np.asarray(point, dtype=float)
    return float(values_at(w, model, p[None, :])[0])


def eval_parts(w, model, point) -> tuple[float, float]:
    """(positive part, negative part) at a point; w+ * w- = 0 by construction."""
    v = value_at(w, model, point)
    if v >= 0:
        return v, 0.0
    return 0.0, -v


def _bump_profile(d, radius, height):
    d = np.asarray(d, dtype=float)
    x = d / radius
    out = np.zeros_like(x)
    inside = x < 1.0
    xi = x[inside]
    out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - xi * xi))
    return out


# ---------------------------------------------------------------------------
# structure probes used by the integrators


def is_constant(w) -> float | None:
    if isinstance(w, Constant):
        return float(w.value)
    if isinstance(w, Sum):
        vals = [is_constant(p) for p in w.parts]
        if all(v is not None for v in vals):
            return float(sum(vals))
    return None


def radial_view(w, model) -> RadialView | None:
    """Radial description about a single center, or None.

    Truncation by a concentric closed ball keeps the view; a Sum keeps it when
    every part shares the same center.
    """
    if isinstance(w, PowerSingularity):
        cut = w.cutoff if w.cutoff is not None else math.inf
        amp, a = w.amplitude, w.exponent

        def prof(r, cut=cut, amp=amp, a=a):
            r = np.asarray(r, dtype=float)
            if amp == 0.0:
                return np.zeros_like(r)
            with np.errstate(divide="ignore"):
                v = amp * r ** (-a)
            return np.where(r <= cut, v, 0.0)

        breaks = (cut,) if math.isfinite(cut) else ()
        return RadialView(w.center, prof, a if amp != 0.0 else 0.0, cut, breaks)
    if isinstance(w, LogSingularity):
        cut, amp = w.cutoff, w.amplitude

        def prof(r, cut=cut, amp=amp):
            r = np.asarray(r, dtype=float)
            if amp == 0.0:
                return np.zeros_like(r)
            with np.errstate(divide="ignore"):
                v = amp * np.maximum(np.log(1.0 / r), 0.0)
            return np.where(r <= cut, v, 0.0)

        support = min(cut, 1.0)
        # log blow-up is weaker than every power; treat as exponent ~0+ via 0.01
        expo = 0.01 if amp != 0.0 else 0.0
        return RadialView(w.center, prof, expo, support, (support,))
    if isinstance(w, Bump):
        rad, h = w.radius, w.height
        return RadialView(
            w.center, lambda r: _bump_profile(r, rad, h), 0.0, rad, (rad,)
        )
    if isinstance(w, GridFunction) and w.kind == "radial":
        return RadialView(
            w.center, w.interp_radial, 0.0, float(w.mesh[-1]), tuple(w.mesh[1:-1:8])
        )
    if isinstance(w, Truncated):
        inner = radial_view(w.inner, model)
        if isinstance(w.region, WholeSpace):
            return inner
        if (
            inner is not None
            and isinstance(w.region, ClosedBall)
            and w.region.center == inner.center
        ):
            R = w.region.radius

            def prof(r, base=inner.profile, R=R):
                r = np.asarray(r, dtype=float)
                return np.where(r <= R, base(r), 0.0)

            return RadialView(
                inner.center,
                prof,
                inner.singular_exponent,
                min(inner.support_radius, R),
                tuple(sorted(set(b for b in (*inner.breakpoints, R) if b <= R))),
            )
        if isinstance(w.inner, Constant) and isinstance(w.region, ClosedBall):
            c = float(w.inner.value)
            R = w.region.radius
            return RadialView(
                w.region.center,
                lambda r: np.where(np.asarray(r, dtype=float) <= R, c, 0.0),
                0.0,
                R,
                (R,),
            )
        return None
    if isinstance(w, Sum):
        views = [radial_view(p, model) for p in w.parts]
        if any(v is None for v in views):
            return None
        if len({v.center for v in views}) != 1:
            return None
        profs = [v.profile for v in views]

        def prof(r, profs=profs):
            return np.sum([p(r) for p in profs], axis=0)

        return RadialView(
            views[0].center,
            prof,
            max(v.singular_exponent for v in views),
            max(v.support_radius for v in views),
            tuple(sorted({b for v in views for b in v.breakpoints})),
        )
    if isinstance(w, RadialPotential):
        return RadialView(
            w.center, w.profile, w.singular_exponent, w.support_radius, w.breakpoints
        )
    if isinstance(w, Constant):
        return None
    return None


def singular_centers(w) -> tuple[Point, ...]:
    if isinstance(w, (PowerSingularity, LogSingularity)):
        return (w.center,) if w.amplitude != 0.0 else ()
    if isinstance(w, RadialPotential) and w.singular_exponent > 0:
        return (w.center,)
    if isinstance(w, Truncated):
        return singular_centers(w.inner)
    if isinstance(w, Sum):
        return tuple(c for p in w.parts for c in singular_centers(p))
    return ()


def sup_norm(w, model) -> float:
    """Finite sup of |w| where available; inf for singular families."""
    if isinstance(w, Constant):
        return abs(w.value)
    if isinstance(w, Bump):
        return abs(w.height)
    if isinstance(w, GridFunction):
        return float(np.max(np.abs(w.values)))
    if isinstance(w, (PowerSingularity, LogSingularity)):
        return math.inf if w.amplitude != 0.0 else 0.0
    if isinstance(w, RadialPotential):
        if w.singular_exponent > 0:
            return math.inf
        hi = w.support_radius if math.isfinite(w.support_radius) else 64.0
        probe = np.unique(
            np.concatenate(
                [np.linspace(0.0, hi, 2049), [b for b in w.breakpoints if b <= hi]]
            )
        )
        return float(np.max(np.abs(w.profile(probe))))
    if isinstance(w, Truncated):
        return sup_norm(w.inner, model)
    if isinstance(w, Sum):
        return float(sum(sup_norm(p, model) for p in w.parts))
    raise PotentialError(f"unknown potential {type(w).__name__}")


def support_bound(w, model) -> tuple[Point, float] | None:
    """(center, radius) of a ball containing supp w, or None when unbounded."""
    if isinstance(w, Constant):
        return None if w.value != 0 else (model.origin(), 0.0)
    if isinstance(w, (PowerSingularity, LogSingularity)):
        v = radial_view(w, model)
        return (v.center, v.support_radius) if math.isfinite(v.support_radius) else None
    if isinstance(w, Bump):
        return (w.center, w.radius)
    if isinstance(w, GridFunction):
        if w.kind == "radial":
            return (w.center, float(w.mesh[-1]))
        return None
    if isinstance(w, RadialPotential):
        if math.isfinite(w.support_radius):
            return (w.center, w.support_radius)
        return None
    if isinstance(w, Truncated):
        inner = support_bound(w.inner, model)
        if isinstance(w.region, ClosedBall):
            ball = (w.region.center, w.region.radius)
            if inner is None:
                return ball
            # the tighter of the two covers the intersection
            return ball if ball[1] <= inner[1] else inner
        if isinstance(w.region, FiniteUnionOfBalls) and w.region.balls:
            b0 = w.region.balls[0]
            rad = max(
                model.distance(b0.center, b.center) + b.radius for b in w.region.balls
            )
            return (b0.center, rad)
        return inner
    if isinstance(w, Sum):
        bounds = [support_bound(p, model) for p in w.parts]
        if any(b is None for b in bounds):
            return None
        c0 = bounds[0][0]
        rad = max(model.distance(c0, c) + r for c, r in bounds)
        return (c0, rad)
    raise PotentialError(f"unknown potential {type(w).__name__}")


def scale(w, lam: float):
    """Same-family potential scaled by lam (pointwise)."""
    if isinstance(w, Constant):
        return Constant(w.value * lam)
    if isinstance(w, PowerSingularity):
        return PowerSingularity(w.center, w.exponent, w.cutoff, w.amplitude * lam)
    if isinstance(w, LogSingularity):
        return LogSingularity(w.center, w.cutoff, w.amplitude * lam)
    if isinstance(w, Bump):
        return Bump(w.center, w.radius, w.height * lam)
    if isinstance(w, GridFunction):
        return GridFunction(w.kind, w.mesh, w.values * lam, w.center, w.period)
    if isinstance(w, Truncated):
        return Truncated(scale(w.inner, lam), w.region)
    if isinstance(w, Sum):
        return Sum(tuple(scale(p, lam) for p in w.parts))
    if isinstance(w, RadialPotential):
        base = w.profile
        return RadialPotential(
            w.center,
            lambda r, base=base, lam=lam: lam * np.asarray(base(r), dtype=float),
            w.singular_exponent,
            w.support_radius,
            w.breakpoints,
            w.label,
        )
    raise PotentialError(f"unknown potential {type(w).__name__}")


def positive_part(w):
    """Potential representing max(w, 0); exact for single-signed families."""
    return _signed_part(w, +1)


def negative_part(w):
    """Potential representing max(-w, 0)."""
    return _signed_part(w, -1)


def _signed_part(w, sign):
    if isinstance(w, Constant):
        v = max(sign * w.value, 0.0)
        return Constant(v)
    if isinstance(w, (PowerSingularity, LogSingularity, Bump)):
        amp = w.height if isinstance(w, Bump) else w.amplitude
        keep = sign * amp > 0
        return scale(w, 1.0 if keep else 0.0) if sign > 0 else _flip_keep(w, keep)
    if isinstance(w, GridFunction):
        vals = np.maximum(sign * w.values, 0.0)
        return GridFunction(w.kind, w.mesh, vals, w.center, w.period)
    if isinstance(w, Truncated):
        return Truncated(_signed_part(w.inner, sign), w.region)
    if isinstance(w, RadialPotential):
        base = w.profile
        return RadialPotential(
            w.center,
            lambda r, base=base, sign=sign: np.maximum(
                sign * np.asarray(base(r), dtype=float), 0.0
            ),
            w.singular_exponent,
            w.support_radius,
            w.breakpoints,
            w.label,
        )
    if isinstance(w, Sum):
        # exact only when parts have disjoint supports or one sign; callers
        # that need the true parts should sample on a grid instead
        raise PotentialError("positive/negative part of a Sum is not family-representable")
    raise PotentialError(f"unknown potential {type(w).__name__}")


def _flip_keep(w, keep):
    if not keep:
        return scale(w, 0.0)
    return scale(w, -1.0)


def cache_key(w) -> tuple:
    """Deterministic hashable key for caching spectral solves etc."""
    if isinstance(w, GridFunction):
        digest = hashlib.sha256(w.mesh.tobytes() + w.values.tobytes()).hexdigest()
        return ("grid", w.kind, digest, w.center, w.period)
    if isinstance(w, Truncated):
        return ("trunc", cache_key(w.inner), w.region)
    if isinstance(w, Sum):
        return ("sum",) + tuple(cache_key(p) for p in w.parts)
    if isinstance(w, RadialPotential):
        hi = w.support_radius if math.isfinite(w.support_radius) else 64.0
        probe = np.linspace(0.0, max(hi, 1e-9), 257)
        vals = np.asarray(w.profile(probe), dtype=float)
        digest = hashlib.sha256(vals.tobytes()).hexdigest()
        return ("radialfn", w.label, digest, w.center, w.support_radius)
    return (type(w).__name__,) + tuple(sorted(vars(w).items(), key=lambda kv: kv[0]))


# ---------------------------------------------------------------------------
# classical Euclidean singular-integral tests


def _classical_kernel(m: int, d: np.ndarray) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if m == 2:
        with np.errstate(divide="ignore"):
            return np.maximum(np.log(1.0 / d), 0.0)
    with np.errstate(divide="ignore"):
        return d ** (2.0 - m)


@dataclass(frozen=True)
class ClassicalKatoEvidence:
    dimension: int
    radii: tuple[float, ...]
    values: tuple[float, ...]
    verdict: str               # "kato" | "not-kato" | "inconclusive"
    argmax_offsets: tuple[float, ...]


def classical_kato_test_euclidean(
    w, model: Euclidean, radii=None, x_offsets=None, order: int = 20
) -> ClassicalKatoEvidence:
    """Textbook m-dependent singular-integral test for compactly supported w.

    m = 1 uses unit windows (sup_x of the local L^1 mass over [x-1, x+1]),
    which is a single finiteness check rather than an r -> 0 limit.  m >= 2
    evaluates h(r) = sup_x of the kernel-weighted mass over {d(x, y) < r} on
    a dyadic radius sequence and applies the shared decay rule.
    """
    if not isinstance(model, Euclidean):
        raise PotentialError("classical test is the Euclidean criterion")
    m = model.m
    view = radial_view(w, model)
    if view is None:
        raise PotentialError("classical test needs a radial potential")
    if not math.isfinite(view.support_radius):
        raise PotentialError("classical test needs compact support")

    if m == 1:
        val = _classical_window_value(view, m, 1.0, 0.0, order)
        verdict = "kato" if math.isfinite(val) else "not-kato"
        return ClassicalKatoEvidence(m, (1.0,), (float(val),), verdict, (0.0,))

    if radii is None:
        # 12 dyadic levels: slow-decay Kato cases (h ~ r^{1/2}) need the span
        # to push the last/first ratio below the shared threshold
        radii = tuple(0.5 * 2.0 ** (-k) for k in range(12))
    if x_offsets is None:
        x_offsets = (0.0, 0.25, 0.5, 1.0)

    values, arg = [], []
    for r in radii:
        best, best_off = -math.inf, 0.0
        for off in x_offsets:
            v = _classical_window_value(view, m, r, off, order)
            if v > best:
                best, best_off = v, off
        values.append(best)
        arg.append(best_off)
    verdict = decay_verdict(values)
    return ClassicalKatoEvidence(m, tuple(radii), tuple(values), verdict, tuple(arg))


def _classical_window_value(view: RadialView, m: int, r: float, offset: float, order: int) -> float:
    """integral over {|x - y| < r} of k_m(|x - y|) |w(y)| dy, x at distance
    `offset` from the potential center, reduced to 1-D via angular averages."""
    a = view.singular_exponent
    # combined endpoint power at the center when x sits on it
    if offset == 0.0:
        kern_pow = 0.0 if m == 1 else (2.0 - m if m >= 3 else 0.0)
        total_pow = (m - 1) - a + kern_pow
        if total_pow <= -1.0:
            return math.inf
        hi = min(r, view.support_radius)
        if hi <= 0:
            return 0.0
        area = m * unit_ball_volume(m)

        def smooth(rr):
            base = np.abs(view.profile(rr)) * rr**a
            if m == 2:
                with np.errstate(divide="ignore"):
                    kern = np.maximum(np.log(1.0 / rr), 0.0)
            elif m == 1:
                kern = np.ones_like(rr)
            else:
                kern = np.ones_like(rr)  # d^{2-m} folded into total_pow
            return area * base * kern

        return integrate_endpoint_power(smooth, total_pow, hi, order)

    # off-center: integrate |w|(rho) against the angular window average
    if view.singular_exponent >= m:
        return math.inf
    hi = view.support_radius
    R = offset

    def integrand(rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        for i, p in enumerate(rho):
            out[i] = _angular_window_avg(m, R, p, r)
        srf = m * unit_ball_volume(m) * rho ** (m - 1)
        return srf * np.abs(view.profile(rho)) * out

    feats = [(R, max(r / 8, 1e-6)), (0.0, min(hi, 0.05))]
    if view.singular_exponent > 0:
        # peel the singular origin with the power substitution
        lo_cut = min(0.05 * hi, r / 4)

        def smooth(rr):
            srf = m * unit_ball_volume(m)
            avg = np.array([_angular_window_avg(m, R, p, r) for p in np.atleast_1d(rr)])
            return srf * np.abs(view.profile(rr)) * rr**view.singular_exponent * avg

        head = integrate_endpoint_power(
            smooth, (m - 1) - view.singular_exponent, lo_cut, order
        )
        body = integrate_panels(
            integrand, feature_edges(lo_cut, hi, feats), order
        ) if hi > lo_cut else 0.0
        return head + body
    return integrate_panels(integrand, feature_edges(1e-12, hi, feats), order)


def _angular_window_avg(m: int, R: float, rho: float, r: float) -> float:
    """Mean over the sphere S(center, rho) of k_m(d) 1{d < r}, with |x - center| = R."""
    if rho == 0.0:
        return float(_classical_kernel(m, np.array([R]))[0]) if R < r else 0.0
    if m == 1:
        vals = []
        for d in (abs(R - rho), R + rho):
            vals.append(1.0 if d < r else 0.0)
        return 0.5 * sum(vals)
    # d(xi)^2 = R^2 + rho^2 - 2 R rho xi, xi = cos(angle); split at d = r
    lo_d, hi_d = abs(R - rho), R + rho
    if lo_d >= r:
        return 0.0
    xi_star = (R * R + rho * rho - r * r) / (2 * R * rho)
    xi_star = min(1.0, max(-1.0, xi_star))

    def kern_of_xi(xi):
        d2 = np.maximum(R * R + rho * rho - 2 * R * rho * xi, 1e-300)
        return _classical_kernel(m, np.sqrt(d2))

    edges = feature_edges(xi_star, 1.0, [(1.0, 1e-4)], base=4)
    if m == 2:

        def f(xi):
            return kern_of_xi(xi) / (math.pi * np.sqrt(np.maximum(1.0 - xi * xi, 1e-300)))

        return integrate_panels(f, edges, 24)
    # m >= 3: mean over S^2 is a plain dxi/2 integral
    return integrate_panels(lambda xi: 0.5 * kern_of_xi(xi), edges, 24)


def decay_verdict(values, ratio: float = 0.05, tail: int = 5, slack: float = 1e-9) -> str:
    """Shared decision rule for evidence sequences along shrinking scales.

    kato: all finite, last < ratio * first, and the last `tail` terms are
    non-increasing (within relative slack).  Diverging (any infinity) gives
    not-kato; bounded-but-flat gives not-kato (Dynkin-only); non-monotone
    tails are inconclusive.
    """
    vals = [float(v) for v in values]
    if any(math.isinf(v) for v in vals):
        return "not-kato"
    first, last = vals[0], vals[-1]
    tail_vals = vals[-tail:]
    monotone = all(
        tail_vals[i + 1] <= tail_vals[i] * (1 + slack) + slack
        for i in range(len(tail_vals) - 1)
    )
    if not monotone:
        return "inconclusive"
    if first == 0.0:
        return "kato"
    if last < ratio * first:
        return "kato"
    return "not-kato"


# ---------------------------------------------------------------------------
# mollification


def _mollifier_normalizer(m: int) -> float:
    """1 / integral over R^m of exp(-1/(1-|z|^2)) on |z| < 1."""
    area = m * unit_ball_volume(m)

    def f(u):
        u = np.asarray(u, dtype=float)
        x = np.clip(u, 0.0, 1.0 - 1e-12)
        return area * x ** (m - 1) * np.exp(-1.0 / (1.0 - x * x))

    val = integrate_panels(f, feature_edges(0.0, 1.0, [(1.0, 1e-3)], base=8), 24)
    return 1.0 / val


_MOLL_NORM = {m: None for m in (1, 2, 3)}


def mollifier_constant(m: int) -> float:
    if _MOLL_NORM.get(m) is None:
        _MOLL_NORM[m] = _mollifier_normalizer(m)
    return _MOLL_NORM[m]


def mollify(w, model, eps: float, *, r_max: float | None = None, mesh_size: int = 512):
    """Convolve with the standard compactly supported bump at scale eps.

    Circle models: periodic convolution on a theta mesh -> circle GridFunction.
    Euclidean with a radial view: radial profile on an r mesh -> radial
    GridFunction (dense near 0 and near eps, where the profile bends).
    Constants are exact fixed points and short-circuit.
    """
    if eps <= 0:
        raise PotentialError("eps must be > 0")
    if isinstance(w, Constant):
        return w

    chart = circle_chart(model)
    if chart is not None:
        period, weight_fn, circumference = chart
        if 2 * eps >= circumference:
            raise PotentialError("eps must be smaller than half the circumference")
        th = np.arange(mesh_size) * (period / mesh_size)
        vals = _mollify_circle(w, model, th, eps, period)
        return GridFunction("circle", th, vals, None, period)

    if isinstance(model, Euclidean):
        view = radial_view(w, model)
        if view is None:
            raise PotentialError("mollify needs a radial potential on Euclidean models")
        if not math.isfinite(view.support_radius):
            raise PotentialError("mollify needs compact support")
        if r_max is None:
            r_max = view.support_radius + 2 * eps
        if r_max < view.support_radius + eps:
            raise PotentialError("window must pad the support by at least eps")
        breaks = tuple(view.breakpoints) + (view.support_radius,)
        mesh = _radial_mollify_mesh(eps, r_max, mesh_size, breaks)
        vals = np.array([_mollified_radial_value(view, model.m, eps, R) for R in mesh])
        return GridFunction("radial", mesh, vals, view.center, None)

    raise PotentialError(f"mollify not supported on {model}")


def _mollify_circle(w, model, thetas, eps, period):
    # geodesic eps-ball pulled back to the chart via the metric weight; for
    # the flat members this is just arc distance
    chart = circle_chart(model)
    _, weight_fn, _ = chart
    cnorm = mollifier_constant(1)
    out = np.empty_like(thetas)
    for i, th0 in enumerate(thetas):
        # integrate over chart offsets; geodesic distance ~ weight * offset
        # locally, so take a conservative chart window
        wloc = float(weight_fn(np.array([th0]))[0])
        half = min(2.5 * eps / max(wloc, 1e-9), period / 2 - 1e-9)
        edges = feature_edges(th0 - half, th0 + half, [(th0, eps / 8)], base=6)

        def f(th):
            th = np.asarray(th)
            d = model.distances(th[:, None], model.point(th0))
            u = np.clip(d / eps, 0.0, 1.0 - 1e-12)
            kern = np.where(d < eps, np.exp(-1.0 / (1.0 - u * u)), 0.0)
            mu = weight_fn(th)
            return kern * values_at(w, model, th[:, None]) * mu

        num = integrate_panels(f, edges, 20)
        out[i] = num * cnorm / eps
    return out


def _radial_mollify_mesh(eps, r_max, n, breakpoints=()):
    inner = np.linspace(0.0, 2 * eps, max(n // 2, 64))
    outer = np.linspace(2 * eps, r_max, max(n // 2, 64))[1:]
    pieces = [inner, outer]
    # the mollified function only varies within eps of a kink of w, so the
    # mesh needs extra resolution in those windows to interpolate faithfully
    for b in breakpoints:
        if 0.0 < b <= r_max:
            lo, hi = max(b - 2 * eps, 0.0), min(b + 2 * eps, r_max)
            pieces.append(np.linspace(lo, hi, 97))
    mesh = np.unique(np.concatenate(pieces))
    return mesh


def _mollified_radial_value(view: RadialView, m: int, eps: float, R: float) -> float:
    """(eta_eps * w)(x) at |x - center| = R for radial w, via sphere means."""
    cnorm = mollifier_constant(m) / eps**m
    area = m * unit_ball_volume(m)

    def shell(u):
        # mean of w over the sphere of radius rho around x intersected along
        # the angular variable; u is the mollifier radius variable
        u = np.atleast_1d(u)
        out = np.empty_like(u)
        for i, ui in enumerate(u):
            out[i] = _radial_sphere_mean(view, m, R, float(ui))
        x = np.clip(u / eps, 0.0, 1.0 - 1e-12)
        kern = np.exp(-1.0 / (1.0 - x * x))
        return cnorm * kern * area * u ** (m - 1) * out

    edges = feature_edges(0.0, eps * (1 - 1e-12), [(0.0, eps / 32), (eps, eps / 32)], base=6)
    if abs(R) < eps and view.singular_exponent > 0:
        # the sphere mean itself blows up like |u - R|^(-a) when the shell
        # crosses the center; integrable for a < 1 in the u variable after
        # the sphere mean in m >= 2, handled by edge refinement near u = R
        edges = np.unique(np.concatenate([edges, feature_edges(0.0, eps, [(R, eps / 512)], base=4)]))
    return integrate_panels(shell, edges, 20)


def _radial_sphere_mean(view: RadialView, m: int, R: float, u: float) -> float:
    """Mean of w over the sphere of radius u centered at distance R from the
    potential center (law-of-cosines reduction)."""
    if u == 0.0:
        return float(view.profile(np.array([max(R, 1e-300)]))[0])
    if m == 1:
        vals = view.profile(np.array([abs(R - u), R + u]))
        return float(0.5 * np.sum(vals))
    lo, hi = abs(R - u), R + u

    def f(xi):
        d2 = np.maximum(R * R + u * u - 2 * R * u * xi, 1e-300)
        return view.profile(np.sqrt(d2))

    if m == 2:

        def g(xi):
            return f(xi) / (math.pi * np.sqrt(np.maximum(1.0 - xi * xi, 1e-300)))

        edges = feature_edges(-1.0, 1.0, [(1.0, 1e-5), (-1.0, 1e-5)], base=6)
        return integrate_panels(g, edges, 24)

    a = view.singular_exponent
    if a > 0 and lo < 1e-12:
        # sphere passes through the center: d ~ sqrt(2Ru(1-xi)), integrable
        edges = feature_edges(-1.0, 1.0, [(1.0, 1e-9)], base=6)
    else:
        edges = feature_edges(-1.0, 1.0, [(1.0, 1e-4)], base=6)
    return integrate_panels(lambda xi: 0.5 * f(xi), edges, 24)
