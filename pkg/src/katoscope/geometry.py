"""Model-manifold catalog: distances, ball volumes, curvature data.

The catalog is closed and every member carries exact metric data:

* ``Euclidean(m)``            flat R^m
* ``Torus(m, periods)``       flat torus with per-axis periods
* ``Sphere(m, radius)``       round spheres, m in {1, 2, 3}
* ``Hyperbolic(m, kappa)``    constant sectional curvature -kappa^2,
                              m in {2, 3}, hyperboloid chart: a point is its
                              first m Minkowski coordinates u, the last one is
                              reconstructed as sqrt(1/kappa^2 + |u|^2)
* ``ConformalCircle(...)``    metric e^{2 phi(theta)} dtheta^2 on [0, 2pi),
                              phi a finite Fourier sum

Chart coordinates are real vectors of length m; periodic axes are normalized
into [0, period).  All objects are immutable and hashable so they can key
caches downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

_TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Invalid model parameters, coordinates, or model/point mismatch."""


@dataclass(frozen=True)
class Point:
    """A point of a catalog model, stored as normalized chart coordinates."""

    model: "Model"
    coords: tuple[float, ...]

    def __iter__(self):
        return iter(self.coords)

    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


def _as_point(model, p) -> Point:
    if isinstance(p, Point):
        if p.model != model:
            raise GeometryError(f"point belongs to {p.model}, not {model}")
        return p
    return model.point(*p)


class Model:
    """Shared behaviour; concrete models are frozen dataclasses below."""

    m: int

    def point(self, *coords) -> Point:
        if len(coords) == 1 and hasattr(coords[0], "__len__"):
            coords = tuple(coords[0])
        vals = tuple(float(c) for c in coords)
        if len(vals) != self.m:
            raise GeometryError(f"{self} expects {self.m} coordinates, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise GeometryError("coordinates must be finite")
        return Point(self, self._normalize(vals))

    def origin(self) -> Point:
        return self.point(*([0.0] * self.m))

    def _normalize(self, coords: tuple[float, ...]) -> tuple[float, ...]:
        return coords

    # -- metric data -------------------------------------------------------
    def distance(self, x, y) -> float:
        x, y = _as_point(self, x), _as_point(self, y)
        return float(self._dist_chart(x.array()[None, :], y.array())[0])

    def distances(self, pts: np.ndarray, y) -> np.ndarray:
        """Vectorized distance from each chart row of ``pts`` to the point ``y``."""
        y = _as_point(self, y)
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self._dist_chart(pts, y.array())

    def ball_volume(self, x, r: float) -> float:
        raise NotImplementedError

    def ricci_lower(self, x) -> float:
        """Smallest eigenvalue of the Ricci tensor at x (constant on the catalog)."""
        raise NotImplementedError

    def injectivity_radius(self, x) -> float:
        raise NotImplementedError

    @property
    def total_volume(self) -> float:
        """Riemannian volume; inf for non-compact members."""
        return math.inf

    @property
    def diameter(self) -> float:
        return math.inf

    @property
    def is_compact(self) -> bool:
        return math.isfinite(self.total_volume)


def _sphere_angle(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Angle between rows of unit vectors u and unit vector v, stable near 0 and pi."""
    dots = u @ v
    perp = u - dots[:, None] * v[None, :]
    return np.arctan2(np.linalg.norm(perp, axis=1), dots)


@dataclass(frozen=True)
class Euclidean(Model):
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise GeometryError("dimension must be >= 1")

    def _dist_chart(self, pts, y):
        return np.linalg.norm(pts - y[None, :], axis=1)

    def ball_volume(self, x, r):
        if r < 0:
            raise GeometryError("radius must be >= 0")
        return unit_ball_volume(self.m) * r**self.m

    def sphere_area(self, r):
        return self.m * unit_ball_volume(self.m) * r ** (self.m - 1)

    def ricci_lower(self, x):
        return 0.0

    def injectivity_radius(self, x):
        return math.inf


@dataclass(frozen=True)
class Torus(Model):
    m: int
    periods: tuple[float, ...]

    def __post_init__(self):
        if self.m < 1:
            raise GeometryError("dimension must be >= 1")
        if len(self.periods) != self.m or any(p <= 0 for p in self.periods):
            raise GeometryError("need one positive period per axis")

    def _normalize(self, coords):
        return tuple(c % p for c, p in zip(coords, self.periods))

    def _dist_chart(self, pts, y):
        per = np.asarray(self.periods)
        delta = np.abs((pts - y[None, :]) % per)
        delta = np.minimum(delta, per - delta)
        return np.linalg.norm(delta, axis=1)

    def ball_volume(self, x, r):
        if r < 0:
            raise GeometryError("radius must be >= 0")
        if self.m == 1:
            return min(2.0 * r, self.periods[0])
        if r <= self.injectivity_radius(x):
            return unit_ball_volume(self.m) * r**self.m
        if r >= self.diameter:
            return self.total_volume
        return _torus_ball_volume_grid(self, r)

    def ricci_lower(self, x):
        return 0.0

    def injectivity_radius(self, x):
        return min(self.periods) / 2.0

    @property
    def total_volume(self):
        return float(np.prod(self.periods))

    @property
    def diameter(self):
        return 0.5 * math.hypot(*self.periods)


@lru_cache(maxsize=64)
def _torus_ball_volume_grid(model: Torus, r: float, n: int = 401) -> float:
    """Midpoint-counting fallback above the injectivity radius (documented ~1/n accuracy)."""
    axes = [np.linspace(p / (2 * n), p - p / (2 * n), n) for p in model.periods]
    mesh = np.meshgrid(*axes, indexing="ij")
    per = np.asarray(model.periods)
    d2 = np.zeros_like(mesh[0])
    for k in range(model.m):
        dk = np.abs(mesh[k])
        dk = np.minimum(dk, per[k] - dk)
        d2 += dk * dk
    cell = model.total_volume / n**model.m
    return float(np.count_nonzero(d2 <= r * r) * cell)


@dataclass(frozen=True)
class Sphere(Model):
    m: int
    radius: float = 1.0

    def __post_init__(self):
        if self.m not in (1, 2, 3):
            raise GeometryError("spheres are supported for m in {1, 2, 3}")
        if self.radius <= 0:
            raise GeometryError("radius must be > 0")

    def _normalize(self, coords):
        if self.m == 1:
            return (coords[0] % _TWO_PI,)
        # polar angles in [0, pi], azimuth in [0, 2pi); renormalize through
        # the embedding so degenerate (pole) azimuths have one representative
        emb = self._embed_raw(np.asarray(coords))
        return self._coords_from_embedding(emb)

    # -- embeddings --------------------------------------------------------
    def _embed_raw(self, c: np.ndarray) -> np.ndarray:
        R = self.radius
        if self.m == 1:
            return R * np.array([math.cos(c[0]), math.sin(c[0])])
        if self.m == 2:
            th, ph = c
            return R * np.array(
                [math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)]
            )
        ch, th, ph = c
        s1 = math.sin(ch)
        s2 = s1 * math.sin(th)
        return R * np.array(
            [math.cos(ch), s1 * math.cos(th), s2 * math.cos(ph), s2 * math.sin(ph)]
        )

    def _coords_from_embedding(self, e: np.ndarray) -> tuple[float, ...]:
        u = np.asarray(e, dtype=float) / self.radius
        u = u / np.linalg.norm(u)
        if self.m == 1:
            return (math.atan2(u[1], u[0]) % _TWO_PI,)
        if self.m == 2:
            th = math.acos(min(1.0, max(-1.0, u[2])))
            ph = math.atan2(u[1], u[0]) % _TWO_PI if abs(u[2]) < 1.0 else 0.0
            return (th, ph)
        ch = math.acos(min(1.0, max(-1.0, u[0])))
        s1 = math.sin(ch)
        if s1 < 1e-300:
            return (ch, 0.0, 0.0)
        th = math.acos(min(1.0, max(-1.0, u[1] / s1)))
        s2 = s1 * math.sin(th)
        ph = math.atan2(u[3], u[2]) % _TWO_PI if s2 > 1e-300 else 0.0
        return (ch, th, ph)

    def embed(self, p) -> np.ndarray:
        p = _as_point(self, p)
        return self._embed_raw(p.array())

    def point_from_embedding(self, e) -> Point:
        return Point(self, self._coords_from_embedding(np.asarray(e, dtype=float)))

    def embed_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.stack([self._embed_raw(row) for row in pts])

    def _dist_chart(self, pts, y):
        u = self.embed_many(pts) / self.radius
        v = self._embed_raw(y) / self.radius
        return self.radius * _sphere_angle(u, v)

    def angles_from_embedded(self, emb_pts: np.ndarray, y) -> np.ndarray:
        """Geodesic distances given embedded (n, m+1) points; used by path code."""
        v = self.embed(_as_point(self, y)) / self.radius
        u = np.atleast_2d(emb_pts) / self.radius
        return self.radius * _sphere_angle(u, v)

    def ball_volume(self, x, r):
        if r < 0:
            raise GeometryError("radius must be >= 0")
        R = self.radius
        theta = min(r / R, math.pi)
        if self.m == 1:
            return min(2.0 * r, _TWO_PI * R)
        if self.m == 2:
            return _TWO_PI * R * R * (1.0 - math.cos(theta))
        return _TWO_PI * R**3 * (theta - math.sin(theta) * math.cos(theta))

    def sphere_area(self, r):
        """Area of the geodesic sphere of radius r (volume derivative)."""
        R, th = self.radius, r / self.radius
        if self.m == 1:
            return 2.0
        if self.m == 2:
            return _TWO_PI * R * math.sin(th)
        return 4.0 * math.pi * R * R * math.sin(th) ** 2

    def ricci_lower(self, x):
        return (self.m - 1) / self.radius**2

    def injectivity_radius(self, x):
        return math.pi * self.radius

    @property
    def total_volume(self):
        R = self.radius
        return {1: _TWO_PI * R, 2: 4 * math.pi * R * R, 3: 2 * math.pi**2 * R**3}[self.m]

    @property
    def diameter(self):
        return math.pi * self.radius


@dataclass(frozen=True)
class Hyperbolic(Model):
    m: int
    kappa: float = 1.0

    def __post_init__(self):
        if self.m not in (2, 3):
            raise GeometryError("hyperbolic spaces are supported for m in {2, 3}")
        if self.kappa <= 0:
            raise GeometryError("curvature scale kappa must be > 0")

    def embed(self, p) -> np.ndarray:
        p = _as_point(self, p)
        u = p.array()
        last = math.sqrt(1.0 / self.kappa**2 + float(u @ u))
        return np.concatenate([u, [last]])

    def embed_many(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        last = np.sqrt(1.0 / self.kappa**2 + np.sum(pts * pts, axis=1))
        return np.concatenate([pts, last[:, None]], axis=1)

    def point_from_embedding(self, e) -> Point:
        e = np.asarray(e, dtype=float)
        return Point(self, tuple(float(v) for v in e[:-1]))

    def _dist_chart(self, pts, y):
        # Minkowski square of the difference, with the timelike part computed
        # through (|u|^2 - |v|^2)/(u_+ + v_+) to dodge cancellation
        u = np.atleast_2d(pts)
        uu = np.sum(u * u, axis=1)
        vv = float(y @ y)
        up = np.sqrt(1.0 / self.kappa**2 + uu)
        vp = math.sqrt(1.0 / self.kappa**2 + vv)
        dplus = (uu - vv) / (up + vp)
        q = np.sum((u - y[None, :]) ** 2, axis=1) - dplus * dplus
        q = np.maximum(q, 0.0)
        h = 0.5 * self.kappa**2 * q
        return np.log1p(h + np.sqrt(h * (2.0 + h))) / self.kappa

    def dist_from_embedded(self, emb_pts: np.ndarray, y) -> np.ndarray:
        y = _as_point(self, y)
        return self._dist_chart(np.atleast_2d(emb_pts)[:, : self.m], y.array())

    def ball_volume(self, x, r):
        if r < 0:
            raise GeometryError("radius must be >= 0")
        k = self.kappa
        if self.m == 2:
            return _TWO_PI * (math.cosh(k * r) - 1.0) / k**2
        return _TWO_PI * (math.sinh(k * r) * math.cosh(k * r) - k * r) / k**3

    def sphere_area(self, r):
        k = self.kappa
        if self.m == 2:
            return _TWO_PI * math.sinh(k * r) / k
        return 4.0 * math.pi * math.sinh(k * r) ** 2 / k**2

    def ricci_lower(self, x):
        return -(self.m - 1) * self.kappa**2

    def injectivity_radius(self, x):
        return math.inf


@dataclass(frozen=True)
class ConformalCircle(Model):
    """Circle [0, 2pi) with metric e^{2 phi} dtheta^2, phi a finite Fourier sum."""

    const: float = 0.0
    cos_coeffs: tuple[float, ...] = ()
    sin_coeffs: tuple[float, ...] = ()

    m: int = 1

    def __post_init__(self):
        for c in (self.const, *self.cos_coeffs, *self.sin_coeffs):
            if not math.isfinite(c):
                raise GeometryError("Fourier coefficients must be finite")

    def phi(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        out = np.full_like(th, self.const, dtype=float)
        for j, a in enumerate(self.cos_coeffs, start=1):
            out += a * np.cos(j * th)
        for j, b in enumerate(self.sin_coeffs, start=1):
            out += b * np.sin(j * th)
        return out

    def phi_prime(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=float)
        out = np.zeros_like(th, dtype=float)
        for j, a in enumerate(self.cos_coeffs, start=1):
            out -= a * j * np.sin(j * th)
        for j, b in enumerate(self.sin_coeffs, start=1):
            out += b * j * np.cos(j * th)
        return out

    def weight(self, theta) -> np.ndarray:
        return np.exp(self.phi(theta))

    def _normalize(self, coords):
        return (coords[0] % _TWO_PI,)

    def arc_length(self, a: float, b: float) -> float:
        """Metric length of the coordinate arc from a to b (counterclockwise)."""
        a, b = float(a), float(b)
        if b < a:
            b += _TWO_PI
        nodes, wts = _gl64()
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        return float(np.sum(wts * self.weight(mid + half * nodes)) * half)

    def _dist_chart(self, pts, y):
        th = np.atleast_2d(pts)[:, 0]
        out = np.empty_like(th)
        L = self.circumference
        for i, t in enumerate(th):
            fwd = self.arc_length(float(y[0]), float(t))
            out[i] = min(fwd, L - fwd)
        return out

    @property
    def circumference(self) -> float:
        return _conformal_circumference(self)

    def ball_volume(self, x, r):
        if r < 0:
            raise GeometryError("radius must be >= 0")
        return min(2.0 * r, self.circumference)

    def sphere_area(self, r):
        return 2.0

    def ricci_lower(self, x):
        return 0.0

    def injectivity_radius(self, x):
        return self.circumference / 2.0

    @property
    def total_volume(self):
        return self.circumference

    @property
    def diameter(self):
        return self.circumference / 2.0


@lru_cache(maxsize=1)
def _gl64():
    from numpy.polynomial.legendre import leggauss

    return leggauss(64)


@lru_cache(maxsize=256)
def _conformal_circumference(model: ConformalCircle) -> float:
    # trapezoid on a uniform periodic mesh is spectrally accurate here
    n = 4096
    th = np.arange(n) * (_TWO_PI / n)
    return float(np.mean(model.weight(th)) * _TWO_PI)


@lru_cache(maxsize=32)
def unit_ball_volume(m: int) -> float:
    return math.pi ** (m / 2.0) / math.gamma(m / 2.0 + 1.0)


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class WholeSpace:
    def contains(self, model, p) -> bool:
        return True

    def contains_many(self, model, pts) -> np.ndarray:
        return np.ones(len(np.atleast_2d(pts)), dtype=bool)


@dataclass(frozen=True)
class ClosedBall:
    center: Point
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise GeometryError("radius must be >= 0")

    def contains(self, model, p) -> bool:
        return model.distance(self.center, p) <= self.radius

    def contains_many(self, model, pts) -> np.ndarray:
        return model.distances(pts, self.center) <= self.radius


@dataclass(frozen=True)
class FiniteUnionOfBalls:
    balls: tuple[ClosedBall, ...]

    def contains(self, model, p) -> bool:
        return any(b.contains(model, p) for b in self.balls)

    def contains_many(self, model, pts) -> np.ndarray:
        out = np.zeros(len(np.atleast_2d(pts)), dtype=bool)
        for b in self.balls:
            out |= b.contains_many(model, pts)
        return out


Region = WholeSpace | ClosedBall | FiniteUnionOfBalls


# ---------------------------------------------------------------------------
# volume-doubling witness


def volume_doubling_check(model, n_exp: float, a: float, samples, tol: float = 1e-9):
    """Test mu(x, R) <= a e^{aR} (R/r)^N mu(x, r) over (x, r, R) samples.

    samples: iterable of (point, r, R) with 0 < r <= R.  Returns
    (worst_ratio, worst_sample, passed); the check passes when the worst
    ratio stays <= 1 + tol.
    """
    if a <= 0:
        raise GeometryError("constant a must be > 0")
    worst, worst_s = -math.inf, None
    for x, r, R in samples:
        if not (0 < r <= R):
            raise GeometryError("samples need 0 < r <= R")
        bound = a * math.exp(a * R) * (R / r) ** n_exp * model.ball_volume(x, r)
        ratio = model.ball_volume(x, R) / bound
        if ratio > worst:
            worst, worst_s = ratio, (x, r, R)
    return worst, worst_s, worst <= 1.0 + tol


def circle_chart(model):
    """(chart period, metric weight callable, circumference) for 1-D circle models.

    Covers Torus(1, L), Sphere(1, R) and ConformalCircle; None otherwise.
    """
    if isinstance(model, Torus) and model.m == 1:
        L = model.periods[0]
        return L, (lambda th: np.ones_like(np.asarray(th, dtype=float))), L
    if isinstance(model, Sphere) and model.m == 1:
        R = model.radius
        return _TWO_PI, (lambda th: np.full_like(np.asarray(th, dtype=float), R)), _TWO_PI * R
    if isinstance(model, ConformalCircle):
        return _TWO_PI, model.weight, model.circumference
    return None
