"""Occupation-mass norms, Kato-class detection, and the comparison toolkit.

The central quantity is the time-integrated kernel mass of a potential,

    sup_x integral_0^t integral p(s, x, y) |w(y)| dmu(y) ds,

optionally with the inner integral restricted to a region.  Evaluation
strategies are chosen per model: exact time-integrated kernels on flat
models (no time quadrature at all), eigenfunction sums on the conformal
circle, and a dyadic time quadrature where only the fixed-time kernel has a
closed form.  Divergent integrals surface as +inf estimates, never crashes.

On top of the norm sit the classification and inequality checks: dyadic
small-time decay (Kato detection), time subadditivity, the resolvent
sandwich, Hoelder-type upper bounds from kernel decay, localized lower
bounds for L^1 mass, metric comparability on conformal circles,
mollification convergence, and the Ricci-based volume-doubling exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, i0e, k0e

from .geometry import (
    ClosedBall,
    ConformalCircle,
    Euclidean,
    FiniteUnionOfBalls,
    Hyperbolic,
    Model,
    Point,
    Region,
    Sphere,
    Torus,
    WholeSpace,
    circle_chart,
)
from .heatkernel import (
    SMALL_T_FLOOR,
    UnsupportedModel,
    euclid2_shell_kernel,
    euclid3_shell_time_integral,
    gauss_kernel,
    hk_value,
    radial_kernel,
    sphere_area_vec,
    time_g1,
    time_g1_wrapped,
    time_g2,
    wrapped_gauss,
)
from .potentials import (
    Bump,
    Constant,
    GridFunction,
    LogSingularity,
    PotentialError,
    PowerSingularity,
    RadialPotential,
    Sum,
    Truncated,
    decay_verdict,
    is_constant,
    mollify,
    radial_view,
    singular_centers,
    sup_norm,
    support_bound,
    values_at,
)
from .quadrature import (
    DEFAULT_QUAD,
    DivergentIntegral,
    QuadConfig,
    argmax_refine,
    feature_edges,
    integrate_endpoint_power,
    integrate_panels,
    panel_nodes,
    time_integral_sqrt_subst,
)

T_MIN = 1e-6
T_MAX = 100.0


# ---------------------------------------------------------------------------
# result records


@dataclass(frozen=True)
class DynkinEstimate:
    value: float
    t: float
    region: object            # Region or None
    argmax: object            # Point or None
    error: float
    method: str
    samples: int


@dataclass(frozen=True)
class KatoVerdict:
    verdict: str              # "kato" | "not-kato" | "inconclusive"
    times: tuple[float, ...]
    values: tuple[float, ...]
    fitted_exponent: float
    decay_ratio: float


@dataclass(frozen=True)
class SubadditivityCheck:
    t: float
    big_t: float
    factor: int
    lhs: float
    rhs: float
    passes: bool


@dataclass(frozen=True)
class ResolventSandwich:
    lam: float
    t: float
    sup_resolvent: float
    lower: float
    upper: float
    norm_value: float
    passes: bool
    argmax: object
    s_max: float
    tail_bound: float


@dataclass(frozen=True)
class TimePowerBound:
    """Asserted kernel sup bound p(s, ., .) <= coef * s**expo for s in (0, window]."""

    coef: float
    expo: float
    window: float


@dataclass(frozen=True)
class HolderBound:
    bound: float
    lq_norm: float
    q: float
    norm_value: float
    passes: bool
    precheck_worst: float


@dataclass(frozen=True)
class L1LowerCheck:
    lhs: float
    rhs: float
    kernel_min: float
    localized_norm: float
    passes: bool


@dataclass(frozen=True)
class ComparabilityReport:
    t_values: tuple[float, ...]
    ratios: tuple[float, ...]
    constants: tuple[float, ...]
    variation: float
    passes: bool


@dataclass(frozen=True)
class MollificationReport:
    eps_values: tuple[float, ...]
    diff_norms: tuple[float, ...]
    base_norm: float
    final_fraction: float
    precheck: str
    decreasing: bool
    passes: bool


@dataclass(frozen=True)
class DoublingExponent:
    n_exp: float
    t_star: object            # float or None (degenerate dimension)
    threshold: object
    sigma_minus: float
    m: int
    method: str


@dataclass(frozen=True)
class ChainCheck:
    worst_ratio: float
    passes: bool
    volume_scale: float
    time_power_bound: TimePowerBound
    samples: int


# ---------------------------------------------------------------------------
# potential structure walks


def _flatten(w):
    if isinstance(w, Sum):
        out = []
        for p in w.parts:
            out.extend(_flatten(p))
        return out
    return [w]


def _singular_info(w, model):
    """(center point, endpoint substitution power) per singular center."""
    if isinstance(w, PowerSingularity):
        return [(w.center, w.exponent)]
    if isinstance(w, LogSingularity):
        # log blow-up: a sqrt substitution flattens it to u*log(1/u) -> 0
        return [(w.center, 0.5)]
    if isinstance(w, RadialPotential) and w.singular_exponent > 0:
        return [(w.center, w.singular_exponent)]
    if isinstance(w, Truncated):
        return _singular_info(w.inner, model)
    if isinstance(w, Sum):
        out = {}
        for p in w.parts:
            for c, a in _singular_info(p, model):
                key = tuple(c.coords)
                out[key] = (c, max(a, out[key][1]) if key in out else a)
        return list(out.values())
    return []


def _sign_range(w):
    """(takes negative values, takes positive values), conservatively."""
    if isinstance(w, Constant):
        return (w.value < 0, w.value > 0)
    if isinstance(w, (PowerSingularity, LogSingularity)):
        return (w.amplitude < 0, w.amplitude > 0)
    if isinstance(w, Bump):
        return (w.height < 0, w.height > 0)
    if isinstance(w, GridFunction):
        return (float(np.min(w.values)) < 0, float(np.max(w.values)) > 0)
    if isinstance(w, RadialPotential):
        hi = w.support_radius if math.isfinite(w.support_radius) else 64.0
        probe = np.asarray(w.profile(np.linspace(1e-9, max(hi, 1e-8), 257)), dtype=float)
        probe = probe[np.isfinite(probe)]
        return (bool(np.any(probe < 0)), bool(np.any(probe > 0)))
    if isinstance(w, Truncated):
        return _sign_range(w.inner)
    if isinstance(w, Sum):
        neg = pos = False
        for p in w.parts:
            n, q = _sign_range(p)
            neg, pos = neg or n, pos or q
        return (neg, pos)
    raise PotentialError(f"unknown potential {type(w).__name__}")


def _abs_splits(w, model) -> bool:
    """True when |sum of parts| equals the sum of part magnitudes pointwise."""
    parts = _flatten(w)
    if len(parts) <= 1:
        return True
    neg = pos = False
    for p in parts:
        n, q = _sign_range(p)
        neg, pos = neg or n, pos or q
    if not (neg and pos):
        return True
    bounds = [support_bound(p, model) for p in parts]
    if any(b is None for b in bounds):
        return False
    for i in range(len(bounds)):
        for j in range(i + 1, len(bounds)):
            (ci, ri), (cj, rj) = bounds[i], bounds[j]
            if model.distance(ci, cj) < ri + rj:
                return False
    return True


def _feature_radii(w, model):
    """Radii (per center) where |w| bends: support edges, truncation balls."""
    out = []
    for p in _flatten(w):
        if isinstance(p, Truncated):
            out.extend(_feature_radii(p.inner, model))
            if isinstance(p.region, ClosedBall):
                out.append((p.region.center, p.region.radius))
            elif isinstance(p.region, FiniteUnionOfBalls):
                out.extend((b.center, b.radius) for b in p.region.balls)
            continue
        sb = support_bound(p, model)
        if sb is not None and sb[1] > 0:
            out.append(sb)
        v = radial_view(p, model)
        if v is not None:
            out.extend((v.center, b) for b in v.breakpoints if math.isfinite(b))
    return out


# ---------------------------------------------------------------------------
# evaluation engines; each exposes value(x), value_with_error(x),
# candidates(), neighbors(x, level), to_point(x)


class _EngineBase:
    method = "generic"

    def __init__(self):
        self._memo = {}

    def value(self, x):
        key = self._key(x)
        if key not in self._memo:
            self._memo[key] = self._value(x)
        return self._memo[key]

    def _key(self, x):
        return float(x) if np.isscalar(x) else tuple(np.asarray(x, dtype=float))

    def value_with_error(self, x):
        return self.value(x), 1e-12 * abs(self.value(x)) + self.tail_error

    tail_error = 0.0


class _ConstEngine(_EngineBase):
    """Stochastically complete model: unit mass makes the norm |c| * t exact."""

    method = "complete-mass"

    def __init__(self, model, c_abs, t):
        super().__init__()
        self.model, self.c, self.t = model, c_abs, t

    def _value(self, x):
        return self.c * self.t

    def candidates(self):
        return [np.asarray(self.model.origin().coords)]

    def neighbors(self, x, level):
        return []

    def to_point(self, x):
        return self.model.point(np.asarray(x))


class _CircleEngine(_EngineBase):
    """Flat circle models: exact time-integrated wrapped kernel, chart quadrature."""

    method = "circle-chart"

    def __init__(self, w, model, t, cfg):
        super().__init__()
        self.w, self.model, self.t, self.cfg = w, model, t, cfg
        period, weight_fn, circumference = circle_chart(model)
        self.P, self.C = period, circumference
        self.vw = float(np.asarray(weight_fn(np.zeros(1)))[0])
        self.heads = [(c.coords[0], a) for c, a in _singular_info(w, model)]
        self.feats = []
        for c, r in _feature_radii(w, model):
            th = c.coords[0]
            dth = r / self.vw
            if dth < self.P / 2:
                self.feats.extend([th - dth, th + dth])
            self.feats.append(th)

    def _map(self, pos, x):
        return x + ((pos - x + self.P / 2.0) % self.P) - self.P / 2.0

    def _value(self, x):
        t, vw, P = self.t, self.vw, self.P
        # place the periodic cut away from every singular center
        cut = x + P / 2.0
        guard = P / 48.0
        for _ in range(len(self.heads) + 1):
            if all(abs(self._map(thc, cut) - cut) > guard for thc, _ in self.heads):
                break
            cut += P / 16.0
        lo, hi = cut - P, cut
        x_in = self._map(x, cut - P / 2.0)
        scale_k = max(math.sqrt(t) / (4.0 * vw), P * 1e-9)
        windows = []
        for thc, a in self.heads:
            thc = self._map(thc, cut - P / 2.0)
            h = min(P / 64.0, guard / 2.0)
            gap = abs(thc - x_in)
            if gap > 1e-12:
                h = min(h, gap / 2.0)
            if h > 0:
                windows.append((thc, a, h))

        def integrand(th):
            th = np.asarray(th, dtype=float)
            vals = np.abs(values_at(self.w, self.model, th[:, None]))
            kern = time_g1_wrapped(t, vw * (th - x), self.C)
            out = vals * kern * vw
            for thc, a, h in windows:
                out = np.where(np.abs(th - thc) < h, 0.0, out)
            return out

        features = [(x_in, scale_k)]
        # antipodal point of x: the wrapped kernel bends where the arc flips
        features.append((self._map(x + P / 2.0, cut - P / 2.0), scale_k))
        for f in self.feats:
            features.append((self._map(f, cut - P / 2.0), max(P / 512.0, scale_k / 4)))
        pts = {lo, hi}
        for thc, a, h in windows:
            pts.update((thc - h, thc + h))
        edges = np.unique(np.concatenate([feature_edges(lo, hi, features), sorted(pts)]))
        total = integrate_panels(integrand, edges, self.cfg.panel_order)

        for thc, a, h in windows:
            if a >= 1.0:
                raise DivergentIntegral("endpoint power >= 1 in a one-dimensional chart")
            for sgn in (1.0, -1.0):

                def f_smooth(tau, sgn=sgn, thc=thc, a=a):
                    tau = np.asarray(tau, dtype=float)
                    th = thc + sgn * tau
                    vals = np.abs(values_at(self.w, self.model, th[:, None]))
                    kern = time_g1_wrapped(t, vw * (th - x), self.C)
                    return np.where(tau > 0, tau**a, 0.0) * vals * kern * vw

                total += integrate_endpoint_power(f_smooth, -a, h, self.cfg.panel_order)
        return total

    def candidates(self):
        base = list(np.arange(48) * self.P / 48.0)
        base.extend(th for th, _ in self.heads)
        base.extend(self.feats)
        return sorted({self._map(b, 0.0) for b in base})

    def neighbors(self, x, level):
        h = self.P / 96.0 / 2.0 ** (level - 1)
        return [x - h, x + h]

    def to_point(self, x):
        return self.model.point(float(x))


class _LineEngine(_EngineBase):
    """Euclidean line: exact time-integrated Gaussian against |w|."""

    method = "line"

    def __init__(self, w, model, t, cfg):
        super().__init__()
        self.w, self.model, self.t, self.cfg = w, model, t, cfg
        self.heads = [(c.coords[0], a) for c, a in _singular_info(w, model)]
        self.feats = []
        for c, r in _feature_radii(w, model):
            self.feats.extend([c.coords[0] - r, c.coords[0] + r, c.coords[0]])
        sb = support_bound(w, model)
        self.supp = (sb[0].coords[0] - sb[1], sb[0].coords[0] + sb[1]) if sb else None

    def _value(self, x):
        t = self.t
        W = 12.0 * math.sqrt(t)
        if self.supp is not None:
            lo, hi = max(self.supp[0], x - W), min(self.supp[1], x + W)
            tail = 0.0
        else:
            # monotone-tail bound: whatever lies beyond W sees at most the edge value
            lo, hi = x - W, x + W
            edge_vals = np.abs(values_at(self.w, self.model, np.array([[lo], [hi]])))
            tail = float(np.max(edge_vals)) * t
        self.tail_error = tail
        if hi <= lo:
            return 0.0
        windows = []
        for c, a in self.heads:
            if not (lo < c < hi):
                continue
            h = min(0.05, (c - lo) / 2, (hi - c) / 2)
            gap = abs(c - x)
            if gap > 1e-12:
                h = min(h, gap / 2.0)
            if h > 0:
                windows.append((c, a, h))

        def integrand(y):
            y = np.asarray(y, dtype=float)
            vals = np.abs(values_at(self.w, self.model, y[:, None]))
            out = vals * time_g1(t, y - x)
            for c, a, h in windows:
                out = np.where(np.abs(y - c) < h, 0.0, out)
            return out

        features = [(x, math.sqrt(t) / 4.0)]
        features.extend((f, math.sqrt(t) / 8.0) for f in self.feats if lo < f < hi)
        pts = {lo, hi}
        for c, a, h in windows:
            pts.update((c - h, c + h))
        edges = np.unique(np.concatenate([feature_edges(lo, hi, features), sorted(pts)]))
        total = integrate_panels(integrand, edges, self.cfg.panel_order)
        for c, a, h in windows:
            if a >= 1.0:
                raise DivergentIntegral("endpoint power >= 1 on the line")
            for sgn in (1.0, -1.0):

                def f_smooth(tau, sgn=sgn, c=c, a=a):
                    tau = np.asarray(tau, dtype=float)
                    y = c + sgn * tau
                    vals = np.abs(values_at(self.w, self.model, y[:, None]))
                    return np.where(tau > 0, tau**a, 0.0) * vals * time_g1(t, y - x)

                total += integrate_endpoint_power(f_smooth, -a, h, self.cfg.panel_order)
        return total

    def candidates(self):
        pts = {c for c, _ in self.heads}
        pts.update(self.feats)
        if self.supp is not None:
            lo, hi = self.supp
            pts.update(np.linspace(lo, hi, 17))
            pts.update((lo - math.sqrt(self.t), hi + math.sqrt(self.t)))
        else:
            pts.update(np.linspace(-4, 4, 17) * max(math.sqrt(self.t), 1.0))
        return sorted(pts)

    def neighbors(self, x, level):
        if self.supp is not None:
            h = (self.supp[1] - self.supp[0] + 1.0) / 32.0 / 2.0 ** (level - 1)
        else:
            h = max(math.sqrt(self.t), 1.0) / 8.0 / 2.0 ** (level - 1)
        return [x - h, x + h]

    def to_point(self, x):
        return self.model.point(float(x))


def _radial_sprof(view):
    a = view.singular_exponent

    def sprof(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            out = np.where(r > 0, r, 1.0) ** a * np.abs(view.profile(np.maximum(r, 1e-300)))
        return np.where(r > 0, out, np.nan_to_num(out, nan=0.0, posinf=0.0))

    return sprof


class _RadialEngineBase(_EngineBase):
    """Shared radius-parametrized sup machinery for rotationally symmetric setups."""

    def __init__(self, view, model, t, cfg):
        super().__init__()
        self.view, self.model, self.t, self.cfg = view, model, t, cfg
        self.a = view.singular_exponent
        self.sprof = _radial_sprof(view)
        if math.isfinite(view.support_radius):
            self.rmax = view.support_radius
            self.tail_error = 0.0
        else:
            self.rmax = None  # resolved per evaluation point
            self.tail_error = 0.0

    def _rmax_at(self, R):
        if self.rmax is not None:
            return self.rmax, 0.0
        rm = R + 12.0 * math.sqrt(self.t) * (1.0 + math.sqrt(self.t))
        edge = float(np.abs(np.asarray(self.view.profile(np.array([rm])))[0]))
        return rm, edge * self.t

    def candidates(self):
        base = self.view.support_radius if math.isfinite(self.view.support_radius) else 4.0
        r_cap = base + max(4.0 * math.sqrt(self.t), 1.0)
        pts = set(np.linspace(0.0, r_cap, 25))
        pts.update(b for b in self.view.breakpoints if b <= r_cap)
        pts.add(0.0)
        self._cap = r_cap
        return sorted(pts)

    def neighbors(self, R, level):
        h = getattr(self, "_cap", 4.0) / 24.0 / 2.0 ** (level - 1)
        return [max(R - h, 0.0), R + h]

    def to_point(self, R):
        coords = np.zeros(self.model.m)
        coords[0] = self._chart_offset(float(R))
        center = np.asarray(self.view.center.coords, dtype=float)
        return self.model.point(center + coords)

    def _chart_offset(self, R):
        return R


class _Radial3Engine(_RadialEngineBase):
    """Euclidean 3-space, radial potential: fully closed-form in time."""

    method = "radial-closed-form"

    def _value(self, R):
        t, a, view = self.t, self.a, self.view
        rmax, tail = self._rmax_at(R)
        self.tail_error = tail
        if rmax <= 0:
            return 0.0

        def body_f(r):
            r = np.asarray(r, dtype=float)
            return (
                4.0 * math.pi * r * r
                * np.abs(view.profile(np.maximum(r, 1e-300)))
                * euclid3_shell_time_integral(t, R, r)
            )

        total = 0.0
        h0 = 0.0
        if a > 0:
            power_at_center = (1.0 - a) if R <= 1e-12 else (2.0 - a)
            if power_at_center <= -1.0:
                raise DivergentIntegral("spatial head power below -1")
            # cap the head at the kernel scale so the endpoint transform's
            # fixed ladder resolves the time-integrated kernel inside it
            h0 = min(0.25 * rmax, 0.5, 12.0 * math.sqrt(t))
            if R <= 1e-12:

                def f_head(r):
                    return self.sprof(r) * erfc(np.asarray(r) / (2.0 * math.sqrt(t)))

                total += integrate_endpoint_power(f_head, 1.0 - a, h0, self.cfg.panel_order)
            elif R >= 2.0 * h0:

                def f_head(r):
                    return 4.0 * math.pi * self.sprof(r) * euclid3_shell_time_integral(t, R, r)

                total += integrate_endpoint_power(f_head, 2.0 - a, h0, self.cfg.panel_order)
            else:

                def f_head(r):
                    return 4.0 * math.pi * self.sprof(r) * euclid3_shell_time_integral(t, R, r)

                total += integrate_endpoint_power(f_head, 2.0 - a, R / 2.0, self.cfg.panel_order)
                mid_scale = min(R / 16.0, math.sqrt(t) / 4.0)
                mid_edges = feature_edges(R / 2.0, h0, [(R, mid_scale)])
                total += integrate_panels(body_f, mid_edges, self.cfg.panel_order)
        if h0 < rmax:
            features = [(R, math.sqrt(t) / 4.0), (h0, max(min(h0 / 2.0, math.sqrt(t)), rmax * 1e-12))]
            features.extend(
                (b, math.sqrt(t) / 8.0) for b in view.breakpoints if h0 < b < rmax
            )
            edges = feature_edges(h0, rmax, features)
            total += integrate_panels(body_f, edges, self.cfg.panel_order)
        return total


class _Radial2Engine(_RadialEngineBase):
    """Euclidean plane, radial potential: ring-mean kernel, dyadic time panels."""

    method = "radial-time-quadrature"

    def _radial_mass(self, s, R, rmax):
        """integral of |w| against the kernel ring mean at one time s."""
        a, view = self.a, self.view

        def body_f(r):
            r = np.asarray(r, dtype=float)
            return (
                2.0 * math.pi * r
                * np.abs(view.profile(np.maximum(r, 1e-300)))
                * euclid2_shell_kernel(s, R, r)
            )

        total = 0.0
        h0 = 0.0
        if a > 0:
            if 1.0 - a <= -1.0:
                raise DivergentIntegral("spatial head power below -1")
            # head capped at the kernel scale (see the 3-D engine)
            h0 = min(0.25 * rmax, 0.5, 12.0 * math.sqrt(s))

            def f_head(r):
                return 2.0 * math.pi * self.sprof(r) * euclid2_shell_kernel(s, R, r)

            total += integrate_endpoint_power(f_head, 1.0 - a, h0, self.cfg.panel_order)
        if h0 < rmax:
            width = max(math.sqrt(s), rmax * 1e-12)
            features = [(R, width), (h0, max(min(h0 / 2.0, math.sqrt(s)), rmax * 1e-12))]
            features.extend(
                (b, math.sqrt(s)) for b in view.breakpoints if h0 < b < rmax
            )
            edges = feature_edges(h0, rmax, features)
            total += integrate_panels(body_f, edges, self.cfg.panel_order)
        return total

    def _value(self, R):
        rmax, tail = self._rmax_at(R)
        self.tail_error = tail
        if rmax <= 0:
            return 0.0

        def K(s_arr):
            return np.array([self._radial_mass(float(s), R, rmax) for s in np.atleast_1d(s_arr)])

        val, err = time_integral_sqrt_subst(K, self.t, self.cfg)
        self._last_quad_error = err
        return val

    def value_with_error(self, x):
        v = self.value(x)
        return v, getattr(self, "_last_quad_error", 0.0) + 1e-12 * abs(v) + self.tail_error


class _H3Engine(_RadialEngineBase):
    """Hyperbolic 3-space, bounded radial potential: rotational means in space."""

    method = "h3-time-quadrature"

    def __init__(self, view, model, t, cfg):
        super().__init__(view, model, t, cfg)
        if view.singular_exponent > 0:
            raise UnsupportedModel("hyperbolic route needs a bounded radial potential")
        ax_edges = feature_edges(0.0, math.pi, [(0.0, 0.05)], base=8)
        self.ax, wx = panel_nodes(ax_edges, cfg.angular_order // 2)
        self.ang_w = 0.5 * np.sin(self.ax) * wx

    def _chart_offset(self, R):
        k = self.model.kappa
        return math.sinh(k * R) / k

    def _radial_mass(self, s, R, rmax):
        view, model = self.view, self.model
        k = model.kappa

        def body_f(r):
            r = np.asarray(r, dtype=float)
            coshd = np.maximum(
                np.cosh(k * r)[:, None] * math.cosh(k * R)
                - np.sinh(k * r)[:, None] * math.sinh(k * R) * np.cos(self.ax)[None, :],
                1.0,
            )
            d2 = np.arccosh(coshd) / k
            kern = radial_kernel(model, s, d2.ravel(), self.cfg).reshape(d2.shape)
            means = kern @ self.ang_w
            return sphere_area_vec(model, r) * np.abs(view.profile(r)) * means

        width = max(math.sqrt(s), rmax * 1e-12)
        edges = feature_edges(1e-12, rmax, [(R, width)] + [(b, math.sqrt(s)) for b in view.breakpoints if b < rmax])
        return integrate_panels(body_f, edges, self.cfg.panel_order // 2)

    def _value(self, R):
        rmax, tail = self._rmax_at(R)
        self.tail_error = tail
        if rmax <= 0:
            return 0.0

        def K(s_arr):
            return np.array([self._radial_mass(float(s), R, rmax) for s in np.atleast_1d(s_arr)])

        val, err = time_integral_sqrt_subst(K, self.t, self.cfg)
        self._last_quad_error = err
        return val

    def value_with_error(self, x):
        v = self.value(x)
        return v, getattr(self, "_last_quad_error", 0.0) + 1e-12 * abs(v) + self.tail_error


class _SphereRadialEngine(_RadialEngineBase):
    """Round sphere (m = 2 or 3), bounded radial potential: rotational means.

    The start point is parametrized by its geodesic distance D to the
    potential's center; the spatial integral reduces to the radius r from
    that center with the kernel averaged over the geodesic sphere via the
    spherical law of cosines.
    """

    method = "sphere-time-quadrature"

    def __init__(self, view, model, t, cfg):
        super().__init__(view, model, t, cfg)
        if view.singular_exponent > 0:
            raise UnsupportedModel("sphere route needs a bounded radial potential")
        self.span = math.pi * model.radius
        self.rmax = min(self.rmax if self.rmax is not None else self.span, self.span)
        self.tail_error = 0.0
        ax_edges = feature_edges(0.0, math.pi, [(0.0, 0.05)], base=8)
        self.ax, wx = panel_nodes(ax_edges, cfg.angular_order // 2)
        if model.m == 2:
            self.ang_w = wx / math.pi
        else:
            self.ang_w = 0.5 * np.sin(self.ax) * wx

    def candidates(self):
        pts = set(np.linspace(0.0, self.span, 25))
        pts.update(b for b in self.view.breakpoints if b <= self.span)
        self._cap = self.span
        return sorted(pts)

    def neighbors(self, R, level):
        h = self.span / 24.0 / 2.0 ** (level - 1)
        return [max(R - h, 0.0), min(R + h, self.span)]

    def to_point(self, R):
        model = self.model
        cu = model.embed(self.view.center) / model.radius
        basis = np.eye(model.m + 1)
        k = int(np.argmin(np.abs(basis @ cu)))
        u = basis[k] - (basis[k] @ cu) * cu
        u /= np.linalg.norm(u)
        th = float(R) / model.radius
        emb = model.radius * (math.cos(th) * cu + math.sin(th) * u)
        return model.point_from_embedding(emb)

    def _radial_mass(self, s, D, rmax):
        view, model = self.view, self.model
        R = model.radius

        def body_f(r):
            r = np.asarray(r, dtype=float)
            cosd = np.clip(
                np.cos(r / R)[:, None] * math.cos(D / R)
                + np.sin(r / R)[:, None] * math.sin(D / R) * np.cos(self.ax)[None, :],
                -1.0,
                1.0,
            )
            d2 = R * np.arccos(cosd)
            kern = radial_kernel(model, s, d2.ravel(), self.cfg).reshape(d2.shape)
            means = kern @ self.ang_w
            return sphere_area_vec(model, r) * np.abs(view.profile(r)) * means

        width = max(math.sqrt(s), rmax * 1e-12)
        feats = [(D, width)] + [(b, math.sqrt(s)) for b in view.breakpoints if b < rmax]
        edges = feature_edges(1e-12, rmax, feats)
        return integrate_panels(body_f, edges, self.cfg.panel_order // 2)

    def _value(self, D):
        if self.rmax <= 0:
            return 0.0

        def K(s_arr):
            return np.array(
                [self._radial_mass(float(s), float(D), self.rmax) for s in np.atleast_1d(s_arr)]
            )

        val, err = time_integral_sqrt_subst(K, self.t, self.cfg)
        self._last_quad_error = err
        return val

    def value_with_error(self, x):
        v = self.value(x)
        return v, getattr(self, "_last_quad_error", 0.0) + 1e-12 * abs(v) + self.tail_error


class _AdditiveEngine(_EngineBase):
    """Sum with parts whose magnitudes add pointwise; per-part radial engines."""

    method = "additive"

    def __init__(self, w, model, t, cfg):
        super().__init__()
        self.model, self.t = model, t
        self.parts = []
        self.centers = []
        for p in _flatten(w):
            c = is_constant(p)
            if c is not None:
                self.parts.append(("const", abs(c) * t, None))
                continue
            v = radial_view(p, model)
            if v is None:
                raise UnsupportedModel("additive route needs radial or constant parts")
            eng = (_Radial3Engine if model.m == 3 else _Radial2Engine)(v, model, t, cfg)
            self.parts.append(("radial", eng, v.center))
            self.centers.append(np.asarray(v.center.coords, dtype=float))

    def _value(self, x):
        x = np.asarray(x, dtype=float)
        total = 0.0
        for kind, eng, center in self.parts:
            if kind == "const":
                total += eng
            else:
                R = self.model.distance(self.model.point(x), center)
                total += eng.value(R)
        return total

    def value_with_error(self, x):
        x = np.asarray(x, dtype=float)
        total = err = 0.0
        for kind, eng, center in self.parts:
            if kind == "const":
                total += eng
            else:
                R = self.model.distance(self.model.point(x), center)
                v, e = eng.value_with_error(R)
                total, err = total + v, err + e
        return total, err

    def candidates(self):
        pts = [c.copy() for c in self.centers]
        for i in range(len(self.centers)):
            for j in range(i + 1, len(self.centers)):
                for lam in (0.25, 0.5, 0.75):
                    pts.append((1 - lam) * self.centers[i] + lam * self.centers[j])
        if not pts:
            pts = [np.zeros(self.model.m)]
        return pts

    def neighbors(self, x, level):
        x = np.asarray(x, dtype=float)
        h = 0.5 / 2.0 ** (level - 1)
        out = []
        for i in range(self.model.m):
            e = np.zeros(self.model.m)
            e[i] = h
            out.extend([x + e, x - e])
        return out

    def to_point(self, x):
        return self.model.point(np.asarray(x, dtype=float))


class _Polar2Engine(_EngineBase):
    """Euclidean plane, bounded potential of any shape: polar around x with the
    exact exponential-integral time kernel."""

    method = "polar"

    def __init__(self, w, model, t, cfg):
        super().__init__()
        self.w, self.model, self.t, self.cfg = w, model, t, cfg
        if singular_centers(w):
            raise UnsupportedModel("polar fallback needs a bounded potential")
        self.sup_w = sup_norm(w, model)
        if not math.isfinite(self.sup_w):
            raise UnsupportedModel("polar fallback needs a bounded potential")
        self.balls = []
        for p in _flatten(w):
            sb = support_bound(p, model)
            if sb is None:
                self.balls = None  # unbounded support
                break
            self.balls.append((np.asarray(sb[0].coords, dtype=float), sb[1]))

    @staticmethod
    def _wrap_angle(v):
        return ((v + math.pi) % (2.0 * math.pi)) - math.pi

    def _angular_mean(self, x, rho):
        feats = []
        if self.balls:
            for c, r in self.balls:
                D = float(np.hypot(*(x - c)))
                if D < 1e-12:
                    continue
                phi = math.atan2(c[1] - x[1], c[0] - x[0])
                arg = (rho * rho + D * D - r * r) / (2.0 * rho * D)
                if abs(arg) <= 1.0:
                    beta = math.acos(arg)
                    feats.append((self._wrap_angle(phi - beta), 0.02))
                    feats.append((self._wrap_angle(phi + beta), 0.02))
                feats.append((self._wrap_angle(phi), 0.1))
        edges = feature_edges(-math.pi, math.pi, feats) if feats else np.linspace(-math.pi, math.pi, 17)

        def f(beta):
            pts = x[None, :] + rho * np.stack([np.cos(beta), np.sin(beta)], axis=1)
            return np.abs(values_at(self.w, self.model, pts))

        return integrate_panels(f, edges, self.cfg.angular_order) / (2.0 * math.pi)

    def _value(self, x):
        x = np.asarray(x, dtype=float)
        t = self.t
        cap = 14.0 * math.sqrt(t)
        if self.balls is not None:
            reach = max((float(np.hypot(*(x - c))) + r for c, r in self.balls), default=0.0)
            rmax = min(reach, cap)
            self.tail_error = self.sup_w * t * math.erfc(7.0) if reach > cap else 0.0
        else:
            rmax = cap
            self.tail_error = self.sup_w * t * math.erfc(7.0)
        if rmax <= 0:
            return 0.0

        def f(rho):
            rho = np.atleast_1d(np.asarray(rho, dtype=float))
            kern = np.where(rho > 0, rho * time_g2(t, rho), 0.0)
            means = np.array([self._angular_mean(x, float(r)) for r in rho])
            return 2.0 * math.pi * kern * means

        features = [(0.0, math.sqrt(t) / 8.0)]
        if self.balls:
            for c, r in self.balls:
                D = float(np.hypot(*(x - c)))
                features.append((abs(D - r), min(max(r, 1e-3), math.sqrt(t)) / 4.0))
                features.append((D + r, min(max(r, 1e-3), math.sqrt(t)) / 4.0))
        edges = feature_edges(0.0, rmax, features)
        return integrate_panels(f, edges, self.cfg.panel_order)

    def value_with_error(self, x):
        v = self.value(x)
        return v, 1e-9 * abs(v) + self.tail_error

    def candidates(self):
        if not self.balls:
            return [np.zeros(2)]
        pts = [c.copy() for c, _ in self.balls]
        for i in range(len(self.balls)):
            for j in range(i + 1, len(self.balls)):
                pts.append(0.5 * (self.balls[i][0] + self.balls[j][0]))
        for c, r in self.balls:
            for frac in (0.5, 1.0):
                pts.append(c + np.array([frac * r, 0.0]))
                pts.append(c + np.array([0.0, frac * r]))
        return pts

    def neighbors(self, x, level):
        x = np.asarray(x, dtype=float)
        h = 0.4 / 2.0 ** (level - 1)
        out = []
        for e in (np.array([h, 0.0]), np.array([0.0, h])):
            out.extend([x + e, x - e])
        return out

    def to_point(self, x):
        return self.model.point(np.asarray(x, dtype=float))


class _SpectralEngine(_EngineBase):
    """Conformal circle: eigenfunction expansion with exact time factors."""

    method = "spectral"

    def __init__(self, w, model, t, cfg):
        super().__init__()
        if singular_centers(w):
            raise UnsupportedModel(
                "conformal-circle norms need a bounded potential (sample to a grid first)"
            )
        from .spectral1d import circle_spectral

        self.model, self.t, self.cfg = model, t, cfg
        self.sp = circle_spectral(model, cfg.spectral_mesh)
        self.f_nodes = np.abs(values_at(w, model, self.sp.thetas[:, None]))
        coef = self.sp.weighted_mode_sums(self.f_nodes)
        self.mix = self.sp.time_coefficients(t) * coef
        self.node_vals = self.sp.modes @ self.mix
        # coarser non-nested twin mesh for the discretization error estimate
        # (a nested half mesh shares nodes, which hides correlated error)
        n_twin = max(64, (3 * cfg.spectral_mesh) // 4)
        sp_twin = circle_spectral(model, n_twin)
        f_twin = np.abs(values_at(w, model, sp_twin.thetas[:, None]))
        mix_twin = sp_twin.time_coefficients(t) * sp_twin.weighted_mode_sums(f_twin)
        self._half = (sp_twin, mix_twin)

    def _value(self, x):
        return float((self.sp.interp_modes(np.array([x])) @ self.mix)[0])

    def value_with_error(self, x):
        v = self.value(x)
        sp_half, mix_half = self._half
        v_half = float((sp_half.interp_modes(np.array([x])) @ mix_half)[0])
        return v, abs(v - v_half) + 1e-12 * abs(v)

    def candidates(self):
        step = max(1, self.sp.n // 64)
        return list(self.sp.thetas[::step])

    def neighbors(self, x, level):
        h = 2.0 * math.pi / self.sp.n / 2.0 ** (level - 1) * 4.0
        return [x - h, x + h]

    def to_point(self, x):
        return self.model.point(float(x))


# ---------------------------------------------------------------------------
# engine selection


def _concentric_ball(region, center, model):
    if region is None or isinstance(region, WholeSpace):
        return True
    if isinstance(region, ClosedBall):
        return model.distance(region.center, center) <= 1e-12
    return False


def _build_engine(w, model, t, cfg):
    c = is_constant(w)
    if c is not None:
        return _ConstEngine(model, abs(c), t)
    if isinstance(model, ConformalCircle):
        return _SpectralEngine(w, model, t, cfg)
    if circle_chart(model) is not None:
        return _CircleEngine(w, model, t, cfg)
    if isinstance(model, Euclidean):
        if model.m == 1:
            return _LineEngine(w, model, t, cfg)
        if model.m in (2, 3):
            view = radial_view(w, model)
            if view is not None:
                eng_cls = _Radial3Engine if model.m == 3 else _Radial2Engine
                return eng_cls(view, model, t, cfg)
            if isinstance(w, Truncated) and is_constant(w.inner) is not None and isinstance(
                w.region, FiniteUnionOfBalls
            ):
                # rewrite as a sum of truncated constants over the balls when disjoint
                parts = tuple(Truncated(w.inner, b) for b in w.region.balls)
                w = Sum(parts)
            if isinstance(w, Sum) and _abs_splits(w, model):
                try:
                    return _AdditiveEngine(w, model, t, cfg)
                except UnsupportedModel:
                    pass
            if model.m == 2:
                return _Polar2Engine(w, model, t, cfg)
            raise UnsupportedModel(
                "three-dimensional norms need a radial potential or a sum of radial parts"
            )
        raise UnsupportedModel("Euclidean norms cover dimensions 1 to 3")
    if isinstance(model, Sphere) and model.m in (2, 3):
        view = radial_view(w, model)
        if view is not None and view.singular_exponent == 0:
            return _SphereRadialEngine(view, model, t, cfg)
        raise UnsupportedModel("sphere norms need a bounded radial potential")
    if isinstance(model, Hyperbolic) and model.m == 3:
        view = radial_view(w, model)
        if view is not None and view.singular_exponent == 0:
            return _H3Engine(view, model, t, cfg)
        raise UnsupportedModel("hyperbolic norms need a bounded radial potential")
    raise UnsupportedModel(f"no norm evaluation route on {model}")


def _wrap_region(w, model, region):
    """Fold the region indicator into the potential; drop covered regions."""
    if region is None or isinstance(region, WholeSpace):
        return w, None
    sb = support_bound(w, model)
    if sb is not None and isinstance(region, ClosedBall):
        if model.distance(region.center, sb[0]) + sb[1] <= region.radius + 1e-12:
            return w, region  # region already covers the support
    return Truncated(w, region), region


def _run_sup(engine, cfg, model=None, region=None, restrict=False):
    cands = engine.candidates()
    if restrict:
        cands = [x for x in cands if region.contains(model, engine.to_point(x))]
        if not cands:
            raise ValueError("no evaluation points inside the region")

    def nb(x, level):
        out = engine.neighbors(x, level)
        if restrict:
            out = [z for z in out if region.contains(model, engine.to_point(z))]
        return out

    best, arg, evals = argmax_refine(engine.value, cands, nb, cfg.refine_levels)
    return best, arg, len(evals)


def _estimate(w, model, t, region=None, cfg=DEFAULT_QUAD, enforce_window=True):
    if enforce_window and not (T_MIN <= t <= T_MAX):
        raise ValueError(f"t must lie in [{T_MIN}, {T_MAX}]")
    if t <= 0:
        raise ValueError("t must be > 0")
    w_eff, _ = _wrap_region(w, model, region)
    try:
        engine = _build_engine(w_eff, model, t, cfg)
        best, arg, n_evals = _run_sup(engine, cfg)
        value, err = engine.value_with_error(arg)
        return DynkinEstimate(
            float(value), t, region, engine.to_point(arg), float(err), engine.method, n_evals
        )
    except DivergentIntegral:
        return DynkinEstimate(math.inf, t, region, None, math.inf, "divergent", 0)


# ---------------------------------------------------------------------------
# public operations


def dynkin_norm(w, model: Model, t: float, region=None, cfg: QuadConfig = DEFAULT_QUAD) -> DynkinEstimate:
    """Largest expected occupation mass of |w| up to time t, over start points.

    region restricts the integrand (not the start point) to the region.  A
    divergent integral yields value +inf.
    """
    return _estimate(w, model, t, region, cfg)


def localized_norm(w, model: Model, t: float, region, cfg: QuadConfig = DEFAULT_QUAD):
    """Region-restricted norm two ways: start points free vs inside the region.

    Returns (full, local, gap) with gap = (full - local) / local, which is
    small exactly when starting inside the region is essentially optimal.
    """
    if not (T_MIN <= t <= T_MAX):
        raise ValueError(f"t must lie in [{T_MIN}, {T_MAX}]")
    if region is None or isinstance(region, WholeSpace):
        raise ValueError("localized norm needs a proper region")
    w_eff, _ = _wrap_region(w, model, region)
    try:
        engine = _build_engine(w_eff, model, t, cfg)
    except DivergentIntegral:
        est = DynkinEstimate(math.inf, t, region, None, math.inf, "divergent", 0)
        return est, est, 0.0
    try:
        v_full, arg_full, n_full = _run_sup(engine, cfg)
        v_loc, arg_loc, n_loc = _run_sup(engine, cfg, model=model, region=region, restrict=True)
        vf, ef = engine.value_with_error(arg_full)
        vl, el = engine.value_with_error(arg_loc)
    except DivergentIntegral:
        est = DynkinEstimate(math.inf, t, region, None, math.inf, "divergent", 0)
        return est, est, 0.0
    full = DynkinEstimate(vf, t, region, engine.to_point(arg_full), ef, engine.method, n_full)
    local = DynkinEstimate(vl, t, region, engine.to_point(arg_loc), el, engine.method, n_loc)
    gap = (vf - vl) / vl if vl > 0 else (0.0 if vf == 0 else math.inf)
    return full, local, gap


def kato_detect(
    w,
    model: Model,
    *,
    t0: float = 0.1,
    n_times: int = 20,
    decay_ratio: float = 0.05,
    region=None,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> KatoVerdict:
    """Dyadic small-time decay of the norm; Kato class iff it tends to zero.

    The default ladder is 20 halvings from t0 = 0.1: slowly decaying members
    (norm ~ t^{1/4}) need that span before the last/first ratio drops below
    the threshold.  Eight terms is the minimum accepted.
    """
    if n_times < 8:
        raise ValueError("the decay rule needs at least 8 dyadic times")
    times, values = [], []
    for j in range(n_times):
        t = t0 * 2.0 ** (-j)
        times.append(t)
        est = _estimate(w, model, t, region, cfg, enforce_window=False)
        values.append(est.value)
    verdict = decay_verdict(values, ratio=decay_ratio, tail=5)
    pts = [
        (math.log(t), math.log(v))
        for t, v in zip(times, values)
        if math.isfinite(v) and v > 0
    ][-8:]
    if len(pts) >= 2:
        xs, ys = zip(*pts)
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = math.nan
    return KatoVerdict(verdict, tuple(times), tuple(values), slope, decay_ratio)


def time_subadditivity_check(
    w,
    model: Model,
    t: float,
    big_t: float,
    *,
    region=None,
    tol: float = 1e-3,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> SubadditivityCheck:
    """norm(T) <= l * norm(t) with l the least integer satisfying T < l * t."""
    if big_t < t:
        raise ValueError("big_t must be >= t")
    factor = int(big_t // t) + 1
    if factor * t <= big_t:
        factor += 1
    lhs = _estimate(w, model, big_t, region, cfg).value
    rhs = factor * _estimate(w, model, t, region, cfg).value
    passes = lhs <= rhs * (1.0 + tol)
    return SubadditivityCheck(t, big_t, factor, lhs, rhs, passes)


# -- resolvent ---------------------------------------------------------------


def _resolvent_kernel_1d(lam, d):
    c = math.sqrt(lam)
    return np.exp(-c * np.abs(np.asarray(d, dtype=float))) / (2.0 * c)


def _resolvent_circle(lam, delta, period):
    c = math.sqrt(lam)
    delta = np.asarray(delta, dtype=float)
    delta = delta - period * np.round(delta / period)
    n_img = int(math.ceil(40.0 / (c * period))) + 1
    shifts = np.arange(-n_img, n_img + 1) * period
    return _resolvent_kernel_1d(lam, delta[..., None] + shifts).sum(axis=-1)


def _resolvent_shell2(lam, R, r):
    """Ring mean of the planar resolvent kernel: I0(c r<) K0(c r>) / (2 pi)."""
    c = math.sqrt(lam)
    r = np.asarray(r, dtype=float)
    a, b = np.minimum(r, R) * c, np.maximum(r, R) * c
    return i0e(a) * k0e(b) * np.exp(a - b) / (2.0 * math.pi)


def _resolvent_shell3(lam, R, r):
    """Sphere mean of the free-space resolvent kernel in 3-space; exact."""
    c = math.sqrt(lam)
    r = np.asarray(r, dtype=float)
    small = R * r < 1e-10 * (R + r) ** 2 + 1e-300
    rr = np.maximum(np.maximum(R, r), 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        main = (np.exp(-c * np.abs(R - r)) - np.exp(-c * (R + r))) / (
            8.0 * math.pi * c * R * r
        )
    limit = np.exp(-c * rr) / (4.0 * math.pi * rr)
    return np.where(small, limit, main)


class _ResolventEvaluator:
    """sup_x integral G_lambda(x, y) |w(y)| dmu(y) with exact kernels."""

    def __init__(self, w, model, lam, cfg):
        self.w, self.model, self.lam, self.cfg = w, model, lam, cfg
        if not math.isfinite(sup_norm(w, model)):
            raise PotentialError("resolvent comparison needs a bounded potential")
        self.norm_engine = _build_engine(w, model, 1.0, cfg)  # reuse grids

    def value(self, x):
        w, model, lam, cfg = self.w, self.model, self.lam, self.cfg
        c = is_constant(w)
        if c is not None:
            return abs(c) / lam
        eng = self.norm_engine
        if isinstance(eng, _CircleEngine):
            th = float(x)

            def f(theta):
                theta = np.asarray(theta, dtype=float)
                vals = np.abs(values_at(w, model, theta[:, None]))
                kern = _resolvent_circle(lam, eng.vw * (theta - th), eng.C)
                return vals * kern * eng.vw

            lo, hi = th - eng.P / 2, th + eng.P / 2
            feats = [(th, 1.0 / (math.sqrt(lam) * eng.vw * 8.0))]
            feats.extend((eng._map(p, th), eng.P / 256.0) for p in eng.feats)
            return integrate_panels(f, feature_edges(lo, hi, feats), cfg.panel_order)
        if isinstance(eng, _LineEngine):
            xx = float(x)
            W = 40.0 / math.sqrt(lam)
            lo, hi = xx - W, xx + W
            if eng.supp is not None:
                lo, hi = max(lo, eng.supp[0]), min(hi, eng.supp[1])
            if hi <= lo:
                return 0.0

            def f(y):
                y = np.asarray(y, dtype=float)
                vals = np.abs(values_at(w, model, y[:, None]))
                return vals * _resolvent_kernel_1d(lam, y - xx)

            feats = [(xx, 1.0 / (8.0 * math.sqrt(lam)))]
            feats.extend((p, 1e-3) for p in eng.feats if lo < p < hi)
            return integrate_panels(f, feature_edges(lo, hi, feats), cfg.panel_order)
        if isinstance(eng, (_Radial2Engine, _Radial3Engine)):
            R = float(x)
            view = eng.view
            rmax = view.support_radius
            if not math.isfinite(rmax):
                raise PotentialError("resolvent comparison needs compact support")
            shell = _resolvent_shell3 if isinstance(eng, _Radial3Engine) else _resolvent_shell2
            area = (lambda r: 4.0 * math.pi * r * r) if isinstance(eng, _Radial3Engine) else (
                lambda r: 2.0 * math.pi * r
            )

            def f(r):
                r = np.asarray(r, dtype=float)
                return area(r) * np.abs(view.profile(np.maximum(r, 1e-300))) * shell(lam, R, r)

            feats = [(R, 1.0 / (8.0 * math.sqrt(lam))), (0.0, rmax / 64.0)]
            feats.extend((b, 1e-3) for b in view.breakpoints if 0 < b < rmax)
            return integrate_panels(f, feature_edges(1e-300, rmax, feats), cfg.panel_order)
        if isinstance(eng, _SpectralEngine):
            sp = eng.sp
            coef = sp.weighted_mode_sums(eng.f_nodes)
            mix = coef / (lam + np.maximum(sp.eigenvalues, 0.0))
            return float(sp.interp_modes(np.array([float(x)])) @ mix)
        if isinstance(eng, _AdditiveEngine):
            total = 0.0
            for kind, sub, center in eng.parts:
                if kind == "const":
                    # sub stores |c| * t with the engine built at t = 1
                    total += sub / self.lam
                else:
                    shell = _resolvent_shell3 if isinstance(sub, _Radial3Engine) else _resolvent_shell2
                    area_dim = 3 if isinstance(sub, _Radial3Engine) else 2
                    R = self.model.distance(self.model.point(np.asarray(x, dtype=float)), center)
                    view = sub.view
                    rmax = view.support_radius

                    def f(r, view=view, shell=shell, R=R, area_dim=area_dim):
                        r = np.asarray(r, dtype=float)
                        area = 4.0 * math.pi * r * r if area_dim == 3 else 2.0 * math.pi * r
                        return area * np.abs(view.profile(np.maximum(r, 1e-300))) * shell(lam, R, r)

                    feats = [(R, 1.0 / (8.0 * math.sqrt(lam))), (0.0, rmax / 64.0)]
                    total += integrate_panels(
                        f, feature_edges(1e-300, rmax, feats), cfg.panel_order
                    )
            return total
        raise UnsupportedModel("no resolvent route for this configuration")


def resolvent_sandwich(
    w,
    model: Model,
    lam: float,
    t: float,
    *,
    tol: float = 1e-9,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> ResolventSandwich:
    """Two-sided comparison of the norm with the killed resolvent mass.

    (1 - e^{-lam t}) sup R_lam <= norm(t) <= e^{lam t} sup R_lam.  The
    resolvent kernels here are exact (full time axis), so the reported tail
    bound is what a time-truncated scheme at s_max = 27.6 / lam would need.
    """
    if lam <= 0:
        raise ValueError("lam must be > 0")
    if not (T_MIN <= t <= T_MAX):
        raise ValueError(f"t must lie in [{T_MIN}, {T_MAX}]")
    ev = _ResolventEvaluator(w, model, lam, cfg)
    engine = ev.norm_engine
    best, arg, _ = argmax_refine(
        ev.value, engine.candidates(), engine.neighbors, cfg.refine_levels
    )
    norm_est = _estimate(w, model, t, None, cfg)
    lower = -math.expm1(-lam * t) * best
    upper = math.exp(lam * t) * best
    passes = (lower <= norm_est.value * (1 + tol)) and (
        norm_est.value <= upper * (1 + tol)
    )
    s_max = 27.6 / lam
    tail = sup_norm(w, model) * math.exp(-lam * s_max) / lam
    return ResolventSandwich(
        lam, t, float(best), float(lower), float(upper), norm_est.value,
        bool(passes), engine.to_point(arg), s_max, tail,
    )


# -- Hoelder-type upper bound -------------------------------------------------


def _lq_norm(w, model, q, cfg=DEFAULT_QUAD) -> float:
    """L^q mass of w over its support (radial, line, or circle route)."""
    chart = circle_chart(model)
    if chart is not None:
        period, weight_fn, _ = chart
        heads = [(c.coords[0], a) for c, a in _singular_info(w, model)]

        def f(th):
            th = np.asarray(th, dtype=float)
            out = np.abs(values_at(w, model, th[:, None])) ** q * weight_fn(th)
            for thc, a in heads:
                delta = np.abs(th - thc)
                delta = np.minimum(delta, period - delta)
                out = np.where(delta < 0.02, 0.0, out)
            return out

        total = integrate_panels(
            f, feature_edges(0.0, period, [(c, 1e-3) for c, _ in heads] or [(0.0, period / 16)]),
            cfg.panel_order,
        )
        vw = float(np.asarray(weight_fn(np.zeros(1)))[0])
        for thc, a in heads:
            if a * q >= 1.0:
                raise PotentialError("potential is not q-integrable")
            for sgn in (1.0, -1.0):

                def fs(tau, thc=thc, sgn=sgn, a=a):
                    tau = np.asarray(tau, dtype=float)
                    th = thc + sgn * tau
                    return np.where(tau > 0, tau ** (a * q), 0.0) * np.abs(
                        values_at(w, model, th[:, None])
                    ) ** q * vw

                total += integrate_endpoint_power(fs, -a * q, 0.02, cfg.panel_order)
        return total ** (1.0 / q)
    view = radial_view(w, model)
    if view is None and isinstance(model, Euclidean) and model.m == 1:
        sb = support_bound(w, model)
        if sb is None:
            raise PotentialError("L^q mass needs compact support")
        lo, hi = sb[0].coords[0] - sb[1], sb[0].coords[0] + sb[1]

        def f(y):
            y = np.asarray(y, dtype=float)
            return np.abs(values_at(w, model, y[:, None])) ** q

        return integrate_panels(f, feature_edges(lo, hi, [(lo, 1e-3), (hi, 1e-3)]), cfg.panel_order) ** (1.0 / q)
    if view is None:
        raise PotentialError("L^q mass needs a radial potential on this model")
    if not math.isfinite(view.support_radius):
        raise PotentialError("L^q mass needs compact support")
    m = model.m
    a = view.singular_exponent
    rmax = view.support_radius
    sprof = _radial_sprof(view)
    total = 0.0
    h0 = 0.0
    if a > 0:
        power = m - 1 - a * q
        if power <= -1.0:
            raise PotentialError("potential is not q-integrable over its support")
        h0 = min(0.25 * rmax, 0.5)

        def fs(r):
            r = np.asarray(r, dtype=float)
            rr = np.maximum(r, 1e-300)
            return _area_poly(model, rr) / rr ** (m - 1) * sprof(r) ** q

        total += integrate_endpoint_power(fs, power, h0, cfg.panel_order)
    if h0 < rmax:

        def f(r):
            r = np.asarray(r, dtype=float)
            return _area_poly(model, r) * np.abs(view.profile(np.maximum(r, 1e-300))) ** q

        feats = [(b, 1e-3) for b in view.breakpoints if h0 < b < rmax] or [(h0, (rmax - h0) / 16)]
        total += integrate_panels(f, feature_edges(h0, rmax, feats), cfg.panel_order)
    return total ** (1.0 / q)


def _area_poly(model, r):
    return sphere_area_vec(model, r)


def holder_bound(
    w,
    model: Model,
    kernel_bound: TimePowerBound,
    q: float,
    t: float,
    *,
    tol: float = 1e-9,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> HolderBound:
    """Norm bound from an L^q potential and a kernel sup decay coef * s^expo.

    bound = ||w||_q * coef^{1/q} * t^{1 + expo/q} / (1 + expo/q); the decay
    exponent must satisfy expo / q > -1 or no finite bound exists.
    """
    if q <= 1:
        raise ValueError("q must exceed 1")
    if t > kernel_bound.window:
        raise ValueError("t exceeds the window of the kernel bound")
    if kernel_bound.expo / q <= -1.0:
        raise PotentialError(
            "kernel decay too strong for this exponent: expo/q <= -1 gives no finite bound"
        )
    # precheck the asserted kernel bound against sampled kernel values
    worst = 0.0
    origin = model.origin()
    for s in np.geomspace(max(1e-4, SMALL_T_FLOOR * 10), kernel_bound.window, 7):
        for d in (0.0, math.sqrt(s), 3.0 * math.sqrt(s)):
            try:
                p = float(radial_kernel(model, float(s), np.array([d]))[0])
            except UnsupportedModel:
                y = np.zeros(model.m)
                y[0] = d
                p = hk_value(model, float(s), origin, model.point(y), cfg)
            cap = kernel_bound.coef * float(s) ** kernel_bound.expo
            worst = max(worst, p / cap)
    if worst > 1.0 + 1e-9:
        raise PotentialError(
            f"claimed kernel bound fails on samples (worst ratio {worst:.6g})"
        )
    lq = _lq_norm(w, model, q, cfg)
    expo_q = kernel_bound.expo / q
    bound = lq * kernel_bound.coef ** (1.0 / q) * t ** (1.0 + expo_q) / (1.0 + expo_q)
    norm_est = _estimate(w, model, t, None, cfg)
    passes = norm_est.value <= bound * (1.0 + tol)
    return HolderBound(float(bound), float(lq), q, norm_est.value, bool(passes), worst)


# -- localized L^1 lower bound -------------------------------------------------


def l1_lower_check(
    w,
    model: Model,
    t: float,
    region: ClosedBall,
    *,
    tol: float = 1e-9,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> L1LowerCheck:
    """||w||_{L^1(K)} <= (2/t) (min p)^{-1} sup_{x in K} occupation mass on K."""
    if not isinstance(region, ClosedBall):
        raise ValueError("the lower bound needs a closed-ball region")
    _, local, _ = localized_norm(w, model, t, region, cfg)
    diam = 2.0 * region.radius
    if model.is_compact:
        diam = min(diam, model.diameter)
    kmin = math.inf
    for s in (0.5 * t, 0.75 * t, t):
        for d in (0.0, region.radius, diam):
            kmin = min(kmin, float(radial_kernel(model, s, np.array([d]))[0]))
    lhs = _l1_region_mass(w, model, region, cfg)
    rhs = (2.0 / t) / kmin * local.value
    passes = lhs <= rhs * (1.0 + tol)
    return L1LowerCheck(float(lhs), float(rhs), float(kmin), local.value, bool(passes))


def _l1_region_mass(w, model, region, cfg) -> float:
    w_eff, _ = _wrap_region(w, model, region)
    return _l1_mass(w_eff, model, cfg)


def _l1_mass(w, model, cfg) -> float:
    """L^1 mass via the same quadrature routes as _lq_norm at q = 1."""
    chart = circle_chart(model)
    if chart is not None:
        period, weight_fn, _ = chart
        heads = [(c.coords[0], a) for c, a in _singular_info(w, model)]

        def f(th):
            th = np.asarray(th, dtype=float)
            out = np.abs(values_at(w, model, th[:, None])) * weight_fn(th)
            for thc, a in heads:
                delta = np.abs(th - thc)
                delta = np.minimum(delta, period - delta)
                out = np.where(delta < 0.02, 0.0, out)
            return out

        total = integrate_panels(
            f,
            feature_edges(0.0, period, [(c, 1e-3) for c, _ in heads] or [(0.0, period / 16)]),
            cfg.panel_order,
        )
        vw = float(np.asarray(weight_fn(np.zeros(1)))[0])
        for thc, a in heads:
            if a >= 1.0:
                raise PotentialError("not locally integrable on a one-dimensional chart")
            for sgn in (1.0, -1.0):

                def fs(tau, thc=thc, sgn=sgn, a=a):
                    tau = np.asarray(tau, dtype=float)
                    th = thc + sgn * tau
                    return np.where(tau > 0, tau**a, 0.0) * np.abs(
                        values_at(w, model, th[:, None])
                    ) * vw

                total += integrate_endpoint_power(fs, -a, 0.02, cfg.panel_order)
        return total
    view = radial_view(w, model)
    if view is None and isinstance(model, Euclidean) and model.m == 1:
        sb = support_bound(w, model)
        lo, hi = sb[0].coords[0] - sb[1], sb[0].coords[0] + sb[1]

        def f(y):
            y = np.asarray(y, dtype=float)
            return np.abs(values_at(w, model, y[:, None]))

        return integrate_panels(f, feature_edges(lo, hi, [(lo, 1e-3), (hi, 1e-3)]), cfg.panel_order)
    if view is None:
        raise PotentialError("L^1 mass needs a radial potential on this model")
    m = model.m
    a, rmax = view.singular_exponent, view.support_radius
    sprof = _radial_sprof(view)
    total, h0 = 0.0, 0.0
    if a > 0:
        power = m - 1 - a
        if power <= -1.0:
            raise PotentialError("not locally integrable")
        h0 = min(0.25 * rmax, 0.5)

        def fs(r):
            r = np.asarray(r, dtype=float)
            rr = np.maximum(r, 1e-300)
            return _area_poly(model, rr) / rr ** (m - 1) * sprof(r)

        total += integrate_endpoint_power(fs, power, h0, cfg.panel_order)
    if h0 < rmax:

        def f(r):
            r = np.asarray(r, dtype=float)
            return _area_poly(model, r) * np.abs(view.profile(np.maximum(r, 1e-300)))

        feats = [(b, 1e-3) for b in view.breakpoints if h0 < b < rmax] or [(h0, (rmax - h0) / 16)]
        total += integrate_panels(f, feature_edges(h0, rmax, feats), cfg.panel_order)
    return total


# -- conformal metric comparability --------------------------------------------


def metric_comparability(
    w,
    model: ConformalCircle,
    t_values,
    *,
    chart_interval=None,
    tol: float = 0.2,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> ComparabilityReport:
    """Localized norms under the conformal metric vs the flat circle.

    The potential is sampled once onto the shared chart so both metrics see
    pointwise identical data; with a vanishing conformal factor the two
    computations coincide and every ratio is exactly one.
    """
    if not isinstance(model, ConformalCircle):
        raise ValueError("comparability targets a conformal circle model")
    flat = ConformalCircle(0.0, (), ())
    n = cfg.spectral_mesh
    thetas = np.arange(n) * (2.0 * math.pi / n)
    vals = np.abs(values_at(w, model, thetas[:, None]))
    if chart_interval is not None:
        lo, hi = chart_interval
        inside = ((thetas - lo) % (2.0 * math.pi)) <= ((hi - lo) % (2.0 * math.pi))
        vals = np.where(inside, vals, 0.0)
    wgrid = GridFunction("circle", thetas, vals, None, 2.0 * math.pi)
    ratios, consts = [], []
    for t in t_values:
        va = _estimate(wgrid, model, t, None, cfg).value
        vb = _estimate(wgrid, flat, t, None, cfg).value
        r = va / vb
        ratios.append(r)
        consts.append(max(r, 1.0 / r))
    cmin, cmax = min(consts), max(consts)
    variation = (cmax - cmin) / cmin if cmin > 0 else math.inf
    return ComparabilityReport(
        tuple(float(t) for t in t_values),
        tuple(ratios),
        tuple(consts),
        float(variation),
        bool(variation < tol),
    )


# -- mollification convergence --------------------------------------------------


def mollification_convergence(
    w,
    model: Model,
    t: float,
    eps_values,
    *,
    final_fraction: float = 0.1,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> MollificationReport:
    """Norm of |w - w_eps| along a decreasing mollification ladder.

    Requires a Kato-class potential (checked first); the norms must decrease
    and the last must fall below final_fraction of the norm of w itself.
    """
    eps_values = tuple(float(e) for e in eps_values)
    if any(e2 >= e1 for e1, e2 in zip(eps_values, eps_values[1:])):
        raise ValueError("eps ladder must strictly decrease")
    kv = kato_detect(w, model, cfg=cfg)
    if kv.verdict != "kato":
        raise PotentialError(f"mollification convergence needs a Kato potential (got {kv.verdict})")
    base = _estimate(w, model, t, None, cfg).value
    diffs = []
    for eps in eps_values:
        wm = mollify(w, model, eps, mesh_size=768)
        diff = _difference_potential(w, wm, model, eps)
        diffs.append(_estimate(diff, model, t, None, cfg).value)
    decreasing = all(b <= a * 1.05 + 1e-15 for a, b in zip(diffs, diffs[1:]))
    frac = diffs[-1] / base if base > 0 else math.inf
    passes = decreasing and frac < final_fraction
    return MollificationReport(
        eps_values, tuple(diffs), float(base), float(frac), kv.verdict, bool(decreasing), bool(passes)
    )


def _difference_potential(w, wm, model, eps):
    chart = circle_chart(model)
    if chart is not None:
        period = chart[0]
        n = max(2048, 4 * len(wm.mesh))
        th = np.arange(n) * (period / n)
        dv = np.abs(
            values_at(w, model, th[:, None]) - values_at(wm, model, th[:, None])
        )
        return GridFunction("circle", th, dv, None, period)
    view = radial_view(w, model)
    if view is None:
        raise PotentialError("difference norms need a radial potential here")
    interp = wm.interp_radial

    def prof(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            base = np.abs(view.profile(np.maximum(r, 1e-300)))
        return np.abs(base - interp(r))

    breaks = {eps, 2.0 * eps, float(wm.mesh[-1])}
    breaks.update(b for b in view.breakpoints if math.isfinite(b))
    breaks.update(
        b + s * eps
        for b in view.breakpoints
        if math.isfinite(b)
        for s in (-1.0, 1.0)
        if b + s * eps > 0
    )
    support = max(view.support_radius, float(wm.mesh[-1]))
    return RadialPotential(
        view.center,
        prof,
        view.singular_exponent,
        support,
        tuple(sorted(b for b in breaks if 0 < b <= support)),
        "mollify-diff",
    )


# -- Ricci-based volume doubling exponent ---------------------------------------


def doubling_exponent_from_crossing(m: int, t_star: float) -> float:
    """Exponent from the threshold-crossing time: m + 4 (m-2)^2 t_star."""
    if m == 2:
        return 2.0
    if not math.isfinite(t_star):
        return math.inf
    return float(m) + 4.0 * (m - 2) ** 2 * float(t_star)


def ricci_doubling_exponent(
    model: Model,
    *,
    norm_fn=None,
    cap: float = 100.0,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> DoublingExponent:
    """Volume-doubling exponent from the negative Ricci mass threshold time.

    t_star is the first time the norm of the negative curvature lower bound
    reaches 1/(3m-6); a norm that stays below it up to the cap is censored
    to +inf.  Dimension two is degenerate: the exponent is 2 outright.
    """
    m = model.m
    sigma = max(0.0, -float(model.ricci_lower(model.origin())))
    if m == 2:
        return DoublingExponent(2.0, None, None, sigma, 2, "degenerate-dimension")
    thr = 1.0 / (3.0 * m - 6.0)
    if norm_fn is None:
        # constant curvature bound: the norm is exactly sigma * t
        if sigma == 0.0:
            t_star = 0.0
            method = "flat-curvature"
        else:
            t_star = thr / sigma
            method = "constant-curvature"
            if t_star > cap:
                t_star = math.inf
                method = "censored"
    else:
        method = "bracket-bisection"
        t_star = _crossing_time(norm_fn, thr, cap)
    n_exp = doubling_exponent_from_crossing(m, t_star)
    return DoublingExponent(float(n_exp), t_star, thr, sigma, m, method)


def _crossing_time(norm_fn, thr, cap):
    t = 1e-6
    if norm_fn(t) >= thr:
        lo, hi = 0.0, t
    else:
        while norm_fn(t) < thr:
            t *= 2.0
            if t > cap:
                return math.inf
        lo, hi = t / 2.0, t
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if norm_fn(mid) >= thr:
            hi = mid
        else:
            lo = mid
    return hi


def doubling_kernel_chain_check(
    model: Model,
    fit,
    n_exp: float,
    doubling_const: float,
    *,
    window: float = 1.0,
    n_x: int = 7,
    n_s: int = 12,
    cfg: QuadConfig = DEFAULT_QUAD,
) -> ChainCheck:
    """Chain a Gaussian upper fit through volume doubling into a time power bound.

    Checks a e^a s^{-N/2} mu(x, sqrt(s)) >= mu(x, 1) on a sample grid (the
    iterated-doubling route from radius sqrt(s) up to 1), then packages
    p <= [alpha a e^{a + gamma T} / v1] * s^{-N/2} as a TimePowerBound, with
    v1 the (uniform) unit-ball volume.
    """
    if fit.side != "upper" or fit.normalization != "ball":
        raise ValueError("the chain needs an upper fit with ball normalization")
    a = doubling_const
    pts = _sample_points(model, n_x)
    v1s = [model.ball_volume(p, 1.0) for p in pts]
    v1_min, v1_max = min(v1s), max(v1s)
    if v1_max - v1_min > 1e-9 * v1_max:
        raise UnsupportedModel("chain check expects a uniform unit-ball volume")
    worst = math.inf
    count = 0
    for p in pts:
        for s in np.geomspace(1e-4, window, n_s):
            ratio = a * math.exp(a) * s ** (-n_exp / 2.0) * model.ball_volume(p, math.sqrt(s)) / model.ball_volume(p, 1.0)
            worst = min(worst, ratio)
            count += 1
    coef = fit.alpha * a * math.exp(a + fit.gamma * window) / v1_min
    tpb = TimePowerBound(float(coef), -n_exp / 2.0, window)
    return ChainCheck(float(worst), bool(worst >= 1.0), float(v1_min), tpb, count)


def _sample_points(model, k):
    if circle_chart(model) is not None:
        period = circle_chart(model)[0]
        return [model.point(th) for th in np.linspace(0.0, period, k, endpoint=False)]
    pts = [model.origin()]
    span = 1.5
    if isinstance(model, Sphere):
        span = min(1.5, math.pi * model.radius * 0.45)
    for d in np.linspace(0.2, span, k - 1):
        coords = np.zeros(model.m)
        coords[0] = d if not isinstance(model, Hyperbolic) else math.sinh(model.kappa * d) / model.kappa
        pts.append(model.point(coords))
    return pts
