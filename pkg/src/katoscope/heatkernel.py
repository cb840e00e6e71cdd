"""Heat kernels for the model catalog, kernel identities, Gaussian-bound fits.

Evaluation routes: closed forms (Euclidean, Hyperbolic(3)), wrapped Gaussians
(Torus, Sphere(1)), eigen-series (Sphere(2): Legendre; Sphere(3): Chebyshev-2
recurrence), a one-integral closed form (Hyperbolic(2)), and the dense
spectral solve (ConformalCircle).  All kernels use the generator Delta (not
Delta/2): the Euclidean form is (4 pi t)^{-m/2} e^{-d^2/4t}.

The module also exposes exact time-integrated flat kernels (erfcx-stable),
which downstream norm computations use to avoid time quadrature entirely on
flat models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcx, exp1, i0e

from .geometry import (
    ConformalCircle,
    Euclidean,
    GeometryError,
    Hyperbolic,
    Model,
    Point,
    Sphere,
    Torus,
    _as_point,
    unit_ball_volume,
)
from .quadrature import (
    DEFAULT_QUAD,
    QuadConfig,
    feature_edges,
    integrate_panels,
    panel_nodes,
)

SMALL_T_FLOOR = 1e-8
_SQRT_PI = math.sqrt(math.pi)


class UnsupportedModel(ValueError):
    """The requested operation has no implemented route on this model."""


@dataclass(frozen=True)
class HeatKernelEval:
    value: float
    method: str               # "closed-form" | "series(k)" | "spectral(n)"
    truncation_bound: float


def _check_t(t: float):
    if t <= 0:
        raise ValueError("t must be > 0")
    if t < SMALL_T_FLOOR:
        raise ValueError(f"t below the {SMALL_T_FLOOR} floor (kernel too concentrated)")


# ---------------------------------------------------------------------------
# raw kernels (arrays of distances / coordinates; no small-t floor)


def gauss_kernel(m: int, t: float, d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    return (4.0 * math.pi * t) ** (-m / 2.0) * np.exp(-d * d / (4.0 * t))


def wrapped_gauss(t: float, delta, period: float):
    """Periodic 1-D kernel: sum of Gaussian images.  Returns (values, tail bound)."""
    delta = np.asarray(delta, dtype=float)
    delta = delta - period * np.round(delta / period)
    n_img = int(math.ceil(0.5 + math.sqrt(160.0 * t) / period)) + 1
    shifts = np.arange(-n_img, n_img + 1) * period
    vals = gauss_kernel(1, t, delta[..., None] + shifts).sum(axis=-1)
    edge = (n_img + 0.5) * period
    decay = math.exp(-(2 * n_img + 1) * period**2 / (4.0 * t))
    tail = 2.0 * float(gauss_kernel(1, t, edge)) / max(1.0 - decay, 1e-2)
    return vals, tail


def sphere2_series(tau: float, cos_angle, terms_cap: int = 200_000):
    """Unit-S^2 kernel series at scaled time tau = t/R^2; returns (vals, tail, l)."""
    x = np.clip(np.asarray(cos_angle, dtype=float), -1.0, 1.0)
    l_max = int(math.ceil(math.sqrt(44.0 / tau))) + 8
    if l_max > terms_cap:
        raise UnsupportedModel("sphere series needs too many terms at this time")
    p_prev = np.ones_like(x)
    p_cur = x.copy()
    acc = np.ones_like(x)  # l = 0 term: (2*0+1) P_0 e^0
    l = 1
    while l <= l_max:
        coef = (2 * l + 1) * math.exp(-l * (l + 1) * tau)
        acc += coef * p_cur
        if coef < 1e-16 and l * l * tau > 4.0:
            break
        p_next = ((2 * l + 1) * x * p_cur - l * p_prev) / (l + 1)
        p_prev, p_cur = p_cur, p_next
        l += 1
    tail = math.exp(-l * (l + 1) * tau) / tau
    return acc / (4.0 * math.pi), tail / (4.0 * math.pi), l


def sphere2_small_tau(tau: float, cos_angle) -> np.ndarray:
    """Unit-S^2 kernel for tau << 1: normal-coordinate Gaussian with the van
    Vleck factor and leading scalar-curvature correction.  Relative error
    O(tau^2) near the diagonal; elsewhere the Gaussian factor dominates."""
    th = np.arccos(np.clip(np.asarray(cos_angle, dtype=float), -1.0, 1.0))
    ratio = np.where(th < 1e-6, 1.0 + th * th / 6.0, th / np.maximum(np.sin(th), 1e-300))
    return (
        (4.0 * math.pi * tau) ** (-1.0)
        * np.sqrt(ratio)
        * math.exp(tau / 3.0)
        * np.exp(-th * th / (4.0 * tau))
    )


def sphere3_small_tau(tau: float, angle) -> np.ndarray:
    """Unit-S^3 kernel for tau <= ~1e-4: principal term of the exact image
    formula; the discarded images carry a factor exp(-pi^2/tau) and underflow."""
    th = np.asarray(angle, dtype=float)
    ratio = np.where(th < 1e-6, 1.0 + th * th / 6.0, th / np.maximum(np.sin(th), 1e-300))
    return (4.0 * math.pi * tau) ** (-1.5) * math.exp(tau) * ratio * np.exp(-th * th / (4.0 * tau))


def sphere3_series(tau: float, angle, terms_cap: int = 200_000):
    """Unit-S^3 kernel series; angle in [0, pi].  Returns (vals, tail, k)."""
    th = np.asarray(angle, dtype=float)
    x = np.cos(th)
    k_max = int(math.ceil(math.sqrt(44.0 / tau))) + 8
    if k_max > terms_cap:
        raise UnsupportedModel("sphere series needs too many terms at this time")
    u_prev = np.ones_like(x)          # U_0 = 1
    u_cur = 2.0 * x                   # U_1 = 2x
    acc = np.ones_like(x)             # k = 0 term: (0+1) U_0 e^0
    k = 1
    while k <= k_max:
        coef = (k + 1) * math.exp(-k * (k + 2) * tau)
        acc += coef * u_cur
        if coef * (k + 1) < 1e-16 and k * k * tau > 4.0:
            break
        u_next = 2.0 * x * u_cur - u_prev
        u_prev, u_cur = u_cur, u_next
        k += 1
    tail = (k + 1) * math.exp(-k * (k + 2) * tau) / tau
    return acc / (2.0 * math.pi**2), tail / (2.0 * math.pi**2), k


def hyperbolic3_kernel(t: float, d, kappa: float = 1.0) -> np.ndarray:
    """H^3 closed form; curvature handled by the exact metric-scaling rule."""
    d = np.asarray(d, dtype=float)
    if kappa != 1.0:
        return kappa**3 * hyperbolic3_kernel(kappa * kappa * t, kappa * d)
    d_safe = np.clip(d, 1e-300, 700.0)
    ratio = np.where(d < 1e-6, 1.0 - d * d / 6.0, d_safe / np.sinh(d_safe))
    return (4.0 * math.pi * t) ** (-1.5) * ratio * np.exp(-t - d * d / (4.0 * t))


def hyperbolic2_kernel(t: float, d, kappa: float = 1.0, order: int = 20) -> np.ndarray:
    """H^2 kernel via the one-dimensional integral representation.

    The integrand is regularized with s = d + v^2 and the product identity
    cosh s - cosh d = 2 sinh((s+d)/2) sinh((s-d)/2), which removes both the
    endpoint singularity and the cancellation near v = 0.
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if kappa != 1.0:
        return kappa * kappa * hyperbolic2_kernel(kappa * kappa * t, kappa * d)
    out = np.empty_like(d)
    pref = math.sqrt(2.0) * math.exp(-t / 4.0) * (4.0 * math.pi * t) ** (-1.5)
    for i, di in enumerate(d):
        V = math.sqrt(max(math.sqrt(di * di + 160.0 * t) - di, 1e-300))

        def f(v, di=di):
            v = np.asarray(v, dtype=float)
            s = di + v * v
            half = v * v / 2.0
            q = np.where(half > 1e-8, v * v / np.sinh(np.minimum(half, 700.0)), 2.0 / (1.0 + half * half / 6.0))
            return 2.0 * s * np.exp(-s * s / (4.0 * t)) * np.sqrt(q) / np.sqrt(
                2.0 * np.sinh(np.minimum(di + half, 700.0))
            )

        edges = feature_edges(0.0, V, [(0.0, V / 16.0)], base=8)
        out[i] = pref * integrate_panels(f, edges, order)
    return out


# ---------------------------------------------------------------------------
# exact time-integrated flat kernels


def _bracket(z):
    """pi^{-1/2} - z erfcx(z), the stable core of the time-integrated Gaussians."""
    z = np.asarray(z, dtype=float)
    return 1.0 / _SQRT_PI - z * erfcx(z)


def time_g1(t: float, delta) -> np.ndarray:
    """integral_0^t (4 pi s)^{-1/2} e^{-delta^2/4s} ds, exact."""
    delta = np.abs(np.asarray(delta, dtype=float))
    z = delta / (2.0 * math.sqrt(t))
    return math.sqrt(t) * np.exp(-z * z) * _bracket(z)


def time_g1_wrapped(t: float, delta, period: float) -> np.ndarray:
    """Time integral of the wrapped 1-D kernel (image sum of time_g1)."""
    delta = np.asarray(delta, dtype=float)
    n_img = int(math.ceil(0.5 + math.sqrt(160.0 * t) / period)) + 1
    shifts = np.arange(-n_img, n_img + 1) * period
    return time_g1(t, delta[..., None] + shifts).sum(axis=-1)


def time_h(t: float, c) -> np.ndarray:
    """integral_0^t s^{-1/2} e^{-c^2/4s} ds = 2 sqrt(pi t) e^{-z^2} bracket(z)."""
    c = np.abs(np.asarray(c, dtype=float))
    z = c / (2.0 * math.sqrt(t))
    return 2.0 * math.sqrt(math.pi * t) * np.exp(-z * z) * _bracket(z)


def euclid3_shell_time_integral(t: float, R: float, r) -> np.ndarray:
    """integral_0^t of the mean of p(s, |x-y|) over the sphere |y-c| = r, with
    |x-c| = R, in Euclidean 3-space; exact in s via time_h."""
    r = np.asarray(r, dtype=float)
    pref = (4.0 * math.pi) ** (-1.5)
    small = R * r < 1e-10 * (R + r) ** 2 + 1e-300
    rr = np.maximum(R, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        main = pref * (time_h(t, np.abs(R - r)) - time_h(t, R + r)) / (R * r)
    limit = erfc(rr / (2.0 * math.sqrt(t))) / (4.0 * math.pi * np.maximum(rr, 1e-300))
    return np.where(small, limit, main)


def time_g2(t: float, d) -> np.ndarray:
    """integral_0^t (4 pi s)^{-1} e^{-d^2/4s} ds = E_1(d^2/4t) / (4 pi).

    Log-divergent as d -> 0 (returns +inf at d = 0), integrable against
    area measure in the plane.
    """
    d = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore"):
        z = d * d / (4.0 * t)
        out = np.where(z > 0, exp1(np.maximum(z, 1e-300)), np.inf)
    return out / (4.0 * math.pi)


def euclid2_shell_kernel(s: float, R: float, r) -> np.ndarray:
    """Mean of p(s, |x-y|) over the circle |y-c| = r in the plane, |x-c| = R."""
    r = np.asarray(r, dtype=float)
    z = R * r / (2.0 * s)
    return (4.0 * math.pi * s) ** (-1.0) * np.exp(-((R - r) ** 2) / (4.0 * s)) * i0e(z)


def euclid3_shell_kernel(s: float, R: float, r) -> np.ndarray:
    """Mean of p(s, |x-y|) over the sphere |y-c| = r in 3-space, |x-c| = R."""
    r = np.asarray(r, dtype=float)
    z = R * r / (2.0 * s)
    factor = np.where(z > 1e-8, -np.expm1(-2.0 * z) / (2.0 * np.maximum(z, 1e-300)), 1.0 - z)
    return (4.0 * math.pi * s) ** (-1.5) * np.exp(-((R - r) ** 2) / (4.0 * s)) * factor


# ---------------------------------------------------------------------------
# public evaluation


def hk_eval(model: Model, t: float, x, y, cfg: QuadConfig = DEFAULT_QUAD) -> HeatKernelEval:
    _check_t(t)
    x, y = _as_point(model, x), _as_point(model, y)
    d = model.distance(x, y)
    if isinstance(model, Euclidean):
        return HeatKernelEval(float(gauss_kernel(model.m, t, d)), "closed-form", 0.0)
    if isinstance(model, Torus):
        dx = x.array() - y.array()
        factors, bounds = [], []
        for k, L in enumerate(model.periods):
            v, tb = wrapped_gauss(t, np.array([dx[k]]), L)
            factors.append(float(v[0]))
            bounds.append(tb)
        val = float(np.prod(factors))
        tail = 0.0
        for i in range(len(factors)):
            others = [factors[j] + bounds[j] for j in range(len(factors)) if j != i]
            tail += bounds[i] * float(np.prod(others)) if others else bounds[i]
        return HeatKernelEval(val, "series(wrapped)", tail)
    if isinstance(model, Sphere):
        R = model.radius
        if model.m == 1:
            v, tb = wrapped_gauss(t, np.array([d]), 2.0 * math.pi * R)
            return HeatKernelEval(float(v[0]), "series(wrapped)", tb)
        tau = t / (R * R)
        if model.m == 2:
            vals, tail, order = sphere2_series(tau, np.array([math.cos(d / R)]))
            return HeatKernelEval(float(vals[0]) / R**2, f"series({order})", tail / R**2)
        vals, tail, order = sphere3_series(tau, np.array([d / R]))
        return HeatKernelEval(float(vals[0]) / R**3, f"series({order})", tail / R**3)
    if isinstance(model, Hyperbolic):
        if model.m == 3:
            return HeatKernelEval(float(hyperbolic3_kernel(t, d, model.kappa)), "closed-form", 0.0)
        val = float(hyperbolic2_kernel(t, np.array([d]), model.kappa, cfg.angular_order)[0])
        return HeatKernelEval(val, "closed-form", abs(val) * 1e-10)
    if isinstance(model, ConformalCircle):
        from .spectral1d import circle_spectral

        sp = circle_spectral(model, cfg.spectral_mesh)
        val = float(sp.kernel(t, x.coords[0], np.array([y.coords[0]]))[0])
        return HeatKernelEval(val, f"spectral({sp.n})", abs(val) * 1e-6)
    raise UnsupportedModel(f"no kernel route for {model}")


def hk_value(model, t, x, y, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    return hk_eval(model, t, x, y, cfg).value


def radial_kernel(model: Model, t: float, d, cfg: QuadConfig = DEFAULT_QUAD) -> np.ndarray:
    """Kernel as a function of geodesic distance, for distance-homogeneous models."""
    d = np.asarray(d, dtype=float)
    if isinstance(model, Euclidean):
        return gauss_kernel(model.m, t, d)
    if isinstance(model, Torus) and model.m == 1:
        return wrapped_gauss(t, d, model.periods[0])[0]
    if isinstance(model, Sphere):
        R = model.radius
        if model.m == 1:
            return wrapped_gauss(t, d, 2.0 * math.pi * R)[0]
        tau = t / (R * R)
        if model.m == 2:
            if tau < 1e-4:
                return sphere2_small_tau(tau, np.cos(d / R)) / R**2
            return sphere2_series(tau, np.cos(d / R))[0] / R**2
        if tau < 1e-4:
            return sphere3_small_tau(tau, d / R) / R**3
        return sphere3_series(tau, d / R)[0] / R**3
    if isinstance(model, Hyperbolic):
        if model.m == 3:
            return hyperbolic3_kernel(t, d, model.kappa)
        return hyperbolic2_kernel(t, d, model.kappa, cfg.angular_order)
    raise UnsupportedModel(f"{model} kernel is not a function of distance alone")


# ---------------------------------------------------------------------------
# identities


def sphere_area_vec(model: Model, r) -> np.ndarray:
    """Geodesic-sphere area as a vectorized function of the radius."""
    r = np.asarray(r, dtype=float)
    if isinstance(model, Euclidean):
        m = model.m
        return m * unit_ball_volume(m) * r ** (m - 1)
    if isinstance(model, Sphere):
        R, th = model.radius, np.minimum(r / model.radius, math.pi)
        if model.m == 1:
            return np.full_like(r, 2.0)
        if model.m == 2:
            return 2.0 * math.pi * R * np.sin(th)
        return 4.0 * math.pi * R * R * np.sin(th) ** 2
    if isinstance(model, Hyperbolic):
        k = model.kappa
        if model.m == 2:
            return 2.0 * math.pi * np.sinh(k * r) / k
        return 4.0 * math.pi * np.sinh(k * r) ** 2 / k**2
    raise UnsupportedModel(f"no radial area profile on {model}")


def _mass_radius(model, t: float) -> float:
    if isinstance(model, Sphere):
        return math.pi * model.radius
    drift = 0.0
    if isinstance(model, Hyperbolic):
        drift = 2.0 * (model.m - 1) * t
    return drift + 30.0 * math.sqrt(t) + 30.0 * t


def hk_mass(model: Model, t: float, x, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Quadrature of p(t, x, .) over the model; should be 1 within tolerance."""
    _check_t(t)
    x = _as_point(model, x)
    if isinstance(model, Torus):
        total = 1.0
        for L in model.periods:

            def f(delta, L=L):
                return wrapped_gauss(t, delta, L)[0]

            half = L / 2.0
            edges = feature_edges(0.0, half, [(0.0, min(math.sqrt(t), half / 4) / 4)])
            total *= 2.0 * integrate_panels(f, edges, cfg.panel_order)
        return total
    if isinstance(model, ConformalCircle):
        from .spectral1d import circle_spectral

        sp = circle_spectral(model, cfg.spectral_mesh)
        th0 = x.coords[0]

        def f(th):
            return sp.kernel(t, th0, th) * model.weight(th)

        edges = feature_edges(th0 - math.pi, th0 + math.pi, [(th0, math.sqrt(t) / 4)])
        return integrate_panels(f, edges, cfg.panel_order)
    r_max = _mass_radius(model, t)

    def f(r):
        return sphere_area_vec(model, r) * radial_kernel(model, t, r, cfg)

    scale = min(math.sqrt(t), r_max / 8.0) / 4.0
    features = [(0.0, scale)]
    if isinstance(model, Hyperbolic):
        features.append((2.0 * (model.m - 1) * t, math.sqrt(t)))
    edges = feature_edges(0.0, r_max, features)
    return integrate_panels(f, edges, cfg.panel_order)


def ck_residual(model: Model, t: float, s: float, x, y, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Relative defect of the two-step composition against p(t+s, x, y)."""
    _check_t(t)
    _check_t(s)
    x, y = _as_point(model, x), _as_point(model, y)
    direct = hk_value(model, t + s, x, y, cfg)
    comp = _ck_compose(model, t, s, x, y, cfg)
    return abs(comp - direct) / direct


def _ck_compose(model, t, s, x, y, cfg) -> float:
    D = model.distance(x, y)
    if isinstance(model, Euclidean):
        m = model.m
        r_max = D + 30.0 * math.sqrt(max(t, s)) + 1.0

        def f(rho):
            p1 = gauss_kernel(m, t, rho)
            if m == 1:
                mean = 0.5 * (gauss_kernel(1, s, np.abs(rho - D)) + gauss_kernel(1, s, rho + D))
                area = 2.0 * np.ones_like(rho)
            elif m == 2:
                mean = euclid2_shell_kernel(s, D, rho) if D > 0 else gauss_kernel(2, s, rho)
                area = 2.0 * math.pi * rho
            else:
                mean = euclid3_shell_kernel(s, D, rho) if D > 0 else gauss_kernel(3, s, rho)
                area = 4.0 * math.pi * rho * rho
            return area * p1 * mean

        edges = feature_edges(
            0.0, r_max, [(0.0, math.sqrt(t) / 4), (D, math.sqrt(s) / 4)]
        )
        return integrate_panels(f, edges, cfg.panel_order)
    if isinstance(model, Torus):
        dx = x.array() - y.array()
        total = 1.0
        for k, L in enumerate(model.periods):

            def f(z, k=k, L=L):
                a = wrapped_gauss(t, z - 0.0, L)[0]
                b = wrapped_gauss(s, dx[k] - z, L)[0]
                return a * b

            edges = feature_edges(
                0.0, L, [(0.0, math.sqrt(t) / 4), (L, math.sqrt(t) / 4), (dx[k] % L, math.sqrt(s) / 4)]
            )
            total *= integrate_panels(f, edges, cfg.panel_order)
        return total
    if isinstance(model, Sphere) and model.m == 1:
        L = 2.0 * math.pi * model.radius
        R = model.radius

        def f(phi):
            arc1 = R * phi
            a = wrapped_gauss(t, arc1, L)[0]
            b = wrapped_gauss(s, R * phi - D, L)[0]
            return a * b * R

        edges = feature_edges(
            0.0, 2.0 * math.pi, [(0.0, math.sqrt(t) / (4 * R)), (D / R, math.sqrt(s) / (4 * R))]
        )
        return integrate_panels(f, edges, cfg.panel_order)
    if isinstance(model, ConformalCircle):
        from .spectral1d import circle_spectral

        sp = circle_spectral(model, cfg.spectral_mesh)
        tx, ty = x.coords[0], y.coords[0]

        def f(th):
            return sp.kernel(t, tx, th) * sp.kernel(s, ty, th) * model.weight(th)

        edges = feature_edges(
            tx - math.pi, tx + math.pi, [(tx, math.sqrt(t) / 4), (ty, math.sqrt(s) / 4)]
        )
        return integrate_panels(f, edges, cfg.panel_order)
    if (isinstance(model, Sphere) and model.m in (2, 3)) or (
        isinstance(model, Hyperbolic) and model.m == 3
    ):
        return _ck_compose_rotational(model, t, s, D, cfg)
    raise UnsupportedModel(f"composition quadrature not implemented on {model}")


def sphere_mean_kernel(model: Model, s: float, D: float, rho: float, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Mean of p(s, x, .) over the geodesic sphere of radius rho about a
    center at distance D from x, on a rotationally symmetric model."""
    if isinstance(model, Euclidean):
        if model.m == 1:
            return float(0.5 * np.sum(gauss_kernel(1, s, np.array([abs(D - rho), D + rho]))))
        if model.m == 2:
            return float(euclid2_shell_kernel(s, D, np.array([rho]))[0])
        if model.m == 3:
            return float(euclid3_shell_kernel(s, D, np.array([rho]))[0])
        raise UnsupportedModel("sphere means implemented for m <= 3")
    sphere_like = isinstance(model, Sphere)
    ax, wx = panel_nodes(
        feature_edges(0.0, math.pi, [(0.0, 0.05)], base=8), cfg.angular_order
    )
    if sphere_like and model.m == 2:
        ang_w = wx / math.pi
    else:
        ang_w = 0.5 * np.sin(ax) * wx
    if sphere_like:
        R = model.radius
        cosd = math.cos(rho / R) * math.cos(D / R) + math.sin(rho / R) * math.sin(
            D / R
        ) * np.cos(ax)
        d2 = R * np.arccos(np.clip(cosd, -1.0, 1.0))
    else:
        k = model.kappa
        coshd = np.maximum(
            math.cosh(k * rho) * math.cosh(k * D)
            - math.sinh(k * rho) * math.sinh(k * D) * np.cos(ax),
            1.0,
        )
        d2 = np.arccosh(coshd) / k
    return float(np.sum(radial_kernel(model, s, d2, cfg) * ang_w))


def _ck_compose_rotational(model, t, s, D, cfg) -> float:
    """Polar composition on rotationally symmetric models, angular mean inner."""
    sphere_like = isinstance(model, Sphere)
    R = model.radius if sphere_like else 1.0 / model.kappa
    r_max = math.pi * R if sphere_like else _mass_radius(model, max(t, s)) + D

    def mean_second(rho: float):
        return sphere_mean_kernel(model, s, D, rho, cfg)

    def f(rho):
        rho = np.atleast_1d(rho)
        p1 = radial_kernel(model, t, rho, cfg)
        area = sphere_area_vec(model, rho)
        means = np.array([mean_second(float(r)) for r in rho])
        return area * p1 * means

    edges = feature_edges(1e-12, r_max, [(0.0, math.sqrt(t) / 4), (D, math.sqrt(s) / 4)])
    return integrate_panels(f, edges, cfg.panel_order)


# ---------------------------------------------------------------------------
# Gaussian-bound fitting


class FitNotFound(ValueError):
    pass


@dataclass(frozen=True)
class GaussianBoundFit:
    side: str                 # "upper" | "lower"
    alpha: float
    beta: float
    gamma: float
    window: float
    worst_ratio: float
    worst_sample: tuple
    normalization: str        # "ball" | "power"
    grid_size: int


def gaussian_bound_fit(
    model: Model,
    side: str,
    window: float,
    grid,
    *,
    beta: float,
    gamma: float,
    alphas=None,
    normalization: str = "ball",
    cfg: QuadConfig = DEFAULT_QUAD,
) -> GaussianBoundFit:
    """Fit the envelope constant against kernel samples on (0, window].

    Upper side: p <= alpha * n(x,t) * e^{-beta d^2/t} * e^{gamma t}; the
    smallest ladder alpha that dominates every sample wins.  Lower side:
    alpha * n(x,t) * e^{-beta d^2/t} * e^{-gamma t} <= p with the largest
    valid ladder alpha.  n(x,t) is 1/mu(x, sqrt(t)) ("ball") or t^{-m/2}
    ("power").
    """
    if side not in ("upper", "lower"):
        raise ValueError("side must be 'upper' or 'lower'")
    if beta <= 0 or gamma <= 0:
        raise ValueError("beta and gamma must be > 0")
    if normalization not in ("ball", "power"):
        raise ValueError("normalization must be 'ball' or 'power'")
    samples = list(grid)
    if not samples:
        raise ValueError("empty grid")
    if alphas is None:
        alphas = np.geomspace(1e-8, 1e8, 321)
    ratios = []
    for t, x, y in samples:
        if not (0 < t <= window):
            raise ValueError("grid time outside the window")
        p = hk_value(model, t, x, y, cfg)
        d = model.distance(x, y)
        if normalization == "ball":
            norm_factor = 1.0 / model.ball_volume(x, math.sqrt(t))
        else:
            norm_factor = t ** (-model.m / 2.0)
        envelope = norm_factor * math.exp(-beta * d * d / t)
        envelope *= math.exp(gamma * t) if side == "upper" else math.exp(-gamma * t)
        ratios.append((p / envelope, (t, x, y)))
    if side == "upper":
        need, worst_sample = max(ratios, key=lambda r: r[0])
        ok = [a for a in alphas if a >= need]
        if not ok:
            raise FitNotFound(f"no ladder alpha >= {need:.6g}")
        alpha = min(ok)
        worst = need / alpha
    else:
        need, worst_sample = min(ratios, key=lambda r: r[0])
        ok = [a for a in alphas if a <= need]
        if not ok:
            raise FitNotFound(f"no ladder alpha <= {need:.6g}")
        alpha = max(ok)
        worst = alpha / need
    return GaussianBoundFit(
        side, float(alpha), beta, gamma, window, float(worst), worst_sample, normalization, len(samples)
    )
