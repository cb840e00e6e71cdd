"""Dense spectral solver for 1-D circle metrics.

Finite differences on a uniform chart mesh discretize the weighted Laplacian
of a circle metric (weight e^{phi}); the operator is symmetrized in the
weighted inner product and diagonalized densely.  Eigenpairs give the heat
kernel, its exact-in-time integrals, and Schrodinger semigroups (after adding
a potential diagonal).  Everything is cached per (model, potential, mesh).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, circle_chart


@dataclass(frozen=True, eq=False)
class CircleSpectral:
    """Eigen-decomposition of a discretized circle operator.

    Modes are orthonormal in the weighted discrete inner product
    <u, v> = sum_i u_i v_i mass_i, so the kernel sum_k e^{-lam_k t}
    v_k(x) v_k(y) has unit mass row sums by construction.
    """

    period: float
    thetas: np.ndarray        # (n,) uniform chart nodes
    mass: np.ndarray          # (n,) weighted cell masses
    eigenvalues: np.ndarray   # (n,) ascending
    modes: np.ndarray         # (n_nodes, n_modes), columns orthonormal in mass

    @property
    def n(self) -> int:
        return len(self.thetas)

    def interp_modes(self, theta) -> np.ndarray:
        """Periodic linear interpolation of every mode; shape (len(theta), n)."""
        th = np.atleast_1d(np.asarray(theta, dtype=float)) % self.period
        h = self.period / self.n
        pos = th / h
        idx = np.floor(pos).astype(int) % self.n
        frac = pos - np.floor(pos)
        nxt = (idx + 1) % self.n
        return self.modes[idx, :] * (1.0 - frac)[:, None] + self.modes[nxt, :] * frac[:, None]

    def _coef(self, t: float) -> np.ndarray:
        lam = np.maximum(self.eigenvalues, 0.0)
        return np.exp(-lam * t)

    def kernel(self, t: float, x_theta: float, y_theta) -> np.ndarray:
        """p(t, x, y) for one x and an array of y, both chart angles."""
        if t <= 0:
            raise ValueError("t must be > 0")
        c = self._coef(t)
        vx = self.interp_modes(np.array([x_theta]))[0]
        vy = self.interp_modes(y_theta)
        return vy @ (c * vx)

    def kernel_nodes(self, t: float) -> np.ndarray:
        """Full node-to-node kernel matrix."""
        c = self._coef(t)
        return (self.modes * c[None, :]) @ self.modes.T

    def time_coefficients(self, t: float) -> np.ndarray:
        """integral_0^t e^{-lam s} ds per mode, exact: (1 - e^{-lam t})/lam."""
        lam = np.maximum(self.eigenvalues, 0.0)
        out = np.full_like(lam, t)
        nz = lam > 1e-12
        out[nz] = -np.expm1(-lam[nz] * t) / lam[nz]
        return out

    def time_kernel(self, t: float, x_theta: float, y_theta) -> np.ndarray:
        """integral_0^t p(s, x, y) ds, exact in s per mode."""
        g = self.time_coefficients(t)
        vx = self.interp_modes(np.array([x_theta]))[0]
        vy = self.interp_modes(y_theta)
        return vy @ (g * vx)

    def weighted_mode_sums(self, values_at_nodes: np.ndarray) -> np.ndarray:
        """<v_k, f> in the weighted inner product, for node-sampled f."""
        return self.modes.T @ (values_at_nodes * self.mass)

    def semigroup(self, t: float, psi_nodes: np.ndarray) -> np.ndarray:
        """(e^{-t H} psi) at the nodes, H the discretized operator."""
        coef = np.exp(-self.eigenvalues * t)
        return self.modes @ (coef * self.weighted_mode_sums(psi_nodes))

    def semigroup_at(self, t: float, psi_nodes: np.ndarray, theta) -> np.ndarray:
        coef = np.exp(-self.eigenvalues * t)
        amps = coef * self.weighted_mode_sums(psi_nodes)
        return self.interp_modes(theta) @ amps


def _assemble(model, n: int, potential_nodes: np.ndarray | None):
    chart = circle_chart(model)
    if chart is None:
        raise GeometryError(f"{model} is not a 1-D circle model")
    period, weight_fn, _ = chart
    h = period / n
    th = np.arange(n) * h
    w_nodes = np.asarray(weight_fn(th), dtype=float)
    w_mid = np.asarray(weight_fn(th + h / 2.0), dtype=float)
    mass = w_nodes * h
    # energy sum_i (f_{i+1}-f_i)^2 / (h * w_{i+1/2}) -> periodic tridiagonal
    inv = 1.0 / (h * w_mid)
    A = np.zeros((n, n))
    idx = np.arange(n)
    nxt = (idx + 1) % n
    A[idx, idx] += inv + np.roll(inv, 1)
    A[idx, nxt] -= inv
    A[nxt, idx] -= inv
    s = 1.0 / np.sqrt(mass)
    B = A * s[:, None] * s[None, :]
    if potential_nodes is not None:
        B = B + np.diag(potential_nodes)
    B = 0.5 * (B + B.T)
    lam, Q = np.linalg.eigh(B)
    modes = Q * s[:, None]
    return CircleSpectral(period, th, mass, lam, modes)


_CACHE: dict = {}


def circle_spectral(model, n: int, potential_key=None, potential_nodes=None) -> CircleSpectral:
    """Cached eigensolve; potential_key must determine potential_nodes."""
    key = (model, int(n), potential_key)
    if key not in _CACHE:
        if len(_CACHE) > 64:
            _CACHE.clear()
        _CACHE[key] = _assemble(model, n, potential_nodes)
    return _CACHE[key]
