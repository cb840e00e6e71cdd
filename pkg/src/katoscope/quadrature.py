"""Deterministic panel quadrature primitives.

Everything downstream integrates sharply peaked or endpoint-singular
integrands, so the core tools are: Gauss-Legendre panels, edge generators
that refine geometrically toward features (kernel peaks, potential
breakpoints), and a power-law substitution for integrable endpoint
singularities.  All integrand callbacks must accept numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss


@dataclass(frozen=True)
class QuadConfig:
    """Shared numeric knobs; defaults are tuned for ~1e-8 absolute accuracy."""

    panel_order: int = 16
    time_depth: int = 24          # dyadic panels in u = sqrt(s) toward u = 0
    time_order: int = 12
    trunc_factor: float = 6.0     # spatial truncation in heat-kernel widths
    angular_order: int = 24
    spectral_mesh: int = 512
    divergence_exponent: float = 1.98   # fitted time power >= this => +inf
    refine_levels: int = 2        # argmax refinement passes over x-grids


DEFAULT_QUAD = QuadConfig()


@lru_cache(maxsize=64)
def gl_rule(order: int):
    x, w = leggauss(order)
    return x, w


def panel_nodes(edges: np.ndarray, order: int):
    """Map a GL rule onto consecutive panels; returns flat (nodes, weights)."""
    x, w = gl_rule(order)
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)[:, None]
    mid = 0.5 * (a + b)[:, None]
    return (mid + half * x[None, :]).ravel(), (half * w[None, :]).ravel()


def integrate_panels(f, edges, order: int = 16) -> float:
    nodes, wts = panel_nodes(np.asarray(edges, dtype=float), order)
    return float(wts @ np.asarray(f(nodes), dtype=float))


def feature_edges(lo: float, hi: float, features, base: int = 8) -> np.ndarray:
    """Panel edges on [lo, hi], geometrically refined around each feature.

    features: iterable of (center, scale) pairs; near each center the panel
    width starts at ~scale and doubles moving away, which resolves peaked
    kernels at spectral GL accuracy.
    """
    if hi <= lo:
        raise ValueError("empty interval")
    pts = {lo, hi}
    span = hi - lo
    for k in range(1, base):
        pts.add(lo + span * k / base)
    min_scale = span
    for c, h in features:
        h = max(float(h), span * 1e-15)
        min_scale = min(min_scale, h)
        if lo < c < hi:
            pts.add(c)
        for sign in (-1.0, 1.0):
            x, step = c, h
            while True:
                x += sign * step
                if x <= lo or x >= hi:
                    break
                pts.add(x)
                step *= 2.0
    edges = np.array(sorted(pts))
    # drop near-duplicate edges (tolerance well below the finest feature)
    keep = np.concatenate([[True], np.diff(edges) > min_scale * 1e-6])
    return edges[keep]


def integrate_with_features(f, lo, hi, features, order: int = 16, base: int = 8) -> float:
    return integrate_panels(f, feature_edges(lo, hi, features, base), order)


def integrate_endpoint_power(f_smooth, power: float, hi: float, order: int = 16) -> float:
    """integral_0^hi r^power * f_smooth(r) dr with integrable power > -1.

    Substitutes u = r^(power+1) so the transformed integrand is bounded;
    f_smooth must be finite on (0, hi].
    """
    if power <= -1.0:
        raise ValueError("non-integrable endpoint power")
    if hi <= 0:
        return 0.0
    q = power + 1.0
    u_hi = hi**q

    def g(u):
        r = np.maximum(u, 1e-300) ** (1.0 / q)
        return f_smooth(r) / q

    edges = feature_edges(0.0, u_hi, [(0.0, u_hi / 64.0)], base=4)
    return integrate_panels(g, edges, order)


class DivergentIntegral(ArithmeticError):
    """Raised when a time integral is detected to diverge (fitted power >= 2)."""


def time_integral_sqrt_subst(K, t: float, cfg: QuadConfig = DEFAULT_QUAD):
    """integral_0^t K(s) ds via u = sqrt(s) on dyadic panels toward u = 0.

    K must accept an array of s values.  The unreachable stub [0, u_min] is
    extrapolated from a local power-law fit K ~ A s^(-p/2) (in u); a fitted
    exponent at or beyond cfg.divergence_exponent raises DivergentIntegral.
    Returns (value, error_estimate).
    """
    if t <= 0:
        raise ValueError("t must be > 0")
    root = math.sqrt(t)
    x, w = gl_rule(cfg.time_order)
    total = 0.0
    probes = []  # K at panel lower edges, for the tail fit
    contributions = []
    for k in range(cfg.time_depth):
        hi = root * 2.0 ** (-k)
        lo = hi / 2.0
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        u = mid + half * x
        vals = np.asarray(K(u * u), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise DivergentIntegral("spatial integral infinite inside the time range")
        c = float(np.sum(w * vals * 2.0 * u) * half)
        contributions.append(c)
        total += c
        probes.append((lo, float(np.asarray(K(np.array([lo * lo])))[0])))
        # early divergence: contributions growing toward u -> 0
        if k >= 6 and all(
            contributions[j + 1] > contributions[j] * 1.02 for j in range(k - 4, k)
        ):
            raise DivergentIntegral("dyadic contributions grow toward s = 0")
    # tail fit over the last few probes: K(u^2) ~ A u^(-p)
    (u1, k1), (u2, k2) = probes[-3], probes[-1]
    if k2 <= 0 or k1 <= 0:
        p_hat = 0.0
    else:
        p_hat = max(0.0, math.log(k2 / k1) / math.log(u1 / u2))
    if p_hat >= cfg.divergence_exponent:
        raise DivergentIntegral(f"fitted singular exponent {p_hat:.3f} >= 2")
    u_min = root * 2.0 ** (-cfg.time_depth)
    stub = 2.0 * k2 * u_min * u_min / (2.0 - p_hat) if k2 > 0 else 0.0
    return total + stub, abs(stub) * 0.5 + 1e-14 * abs(total)


def geometric_edges(lo: float, hi: float, first: float, grow: float = 2.0) -> np.ndarray:
    """Edges from lo with initial step `first`, growing by `grow`, capped at hi."""
    if hi <= lo:
        raise ValueError("empty interval")
    pts = [lo]
    step = max(first, (hi - lo) * 1e-15)
    x = lo
    while x + step < hi:
        x += step
        pts.append(x)
        step *= grow
    pts.append(hi)
    return np.asarray(pts)


def argmax_refine(f, candidates, neighbor_fn, levels: int = 2):
    """Maximize f over candidates, then refine around the running argmax.

    neighbor_fn(x, level) yields extra candidates near x at pass `level`.
    Returns (best_value, best_x, evaluations) with evaluations a list of
    (x, value) over everything probed.
    """
    evals = []
    best_v, best_x = -math.inf, None
    for x in candidates:
        v = f(x)
        evals.append((x, v))
        if v > best_v:
            best_v, best_x = v, x
    for level in range(1, levels + 1):
        for x in neighbor_fn(best_x, level):
            v = f(x)
            evals.append((x, v))
            if v > best_v:
                best_v, best_x = v, x
    return best_v, best_x, evals
