"""Product quadrature on spheres and balls of R^{2m}, m in {1, 2}.

Nodes are stored as rays: unit directions times radii, so callers that
continue fiber roots outward from the center can walk each ray in order.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial, pi

import numpy as np


def sphere_area(m, r=1.0):
    """Lebesgue measure of S^{2m-1}(r)."""
    return 2 * pi**m / factorial(m - 1) * r ** (2 * m - 1)


def ball_volume(m, r=1.0):
    """Lebesgue measure of B^{2m}(r)."""
    return pi**m / factorial(m) * r ** (2 * m)


def volume_form_factor(m):
    """Density of the normalized volume form against Lebesgue measure."""
    return factorial(m) / pi**m


def sphere_form_factor(m, r):
    """Density of the normalized sphere form against surface measure."""
    return 1.0 / sphere_area(m, r)


@dataclass(frozen=True)
class RuleSizes:
    """Node counts; ``sphere`` is the circle count (m=1) or the azimuth count (m=2)."""

    sphere: int
    radial: int

    @classmethod
    def default(cls, m):
        return cls(256, 64) if m == 1 else cls(48, 32)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and Lebesgue weights on a sphere or ball.

    ``dirs`` (K, m) are unit directions, ``radii`` (R,) the ray radii;
    node ``i * K + k`` is ``center + radii[i] * dirs[k]``.
    """

    kind: str
    m: int
    center: np.ndarray
    radius: float
    dirs: np.ndarray
    radii: np.ndarray
    weights: np.ndarray

    @property
    def points(self):
        """Complex node coordinates, shape (N, m)."""
        return (self.center[None, None, :] + self.radii[:, None, None] * self.dirs[None, :, :]).reshape(-1, self.m)

    @property
    def nodes(self):
        """Real node coordinates (x1, y1, ...), shape (N, 2m)."""
        z = self.points
        out = np.empty((len(z), 2 * self.m))
        out[:, 0::2] = z.real
        out[:, 1::2] = z.imag
        return out

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        values = np.asarray(values)
        return np.sum(self.weights * values.reshape(len(self.weights), *values.shape[1:]).T, axis=-1)


def _unit_sphere(m, n):
    """Directions and weights of the unit-sphere product rule."""
    if m == 1:
        th = 2 * np.pi * np.arange(n) / n
        return np.exp(1j * th)[:, None], np.full(n, 2 * np.pi / n)
    if m == 2:
        nt = max(n // 2, 2)
        # Gauss-Legendre in u = cos^2(theta): circle-averaged monomials are polynomials in u
        x, wx = np.polynomial.legendre.leggauss(nt)
        u = (x + 1) / 2
        th = np.arccos(np.sqrt(u))
        wt = wx / 4
        ph = 2 * np.pi * np.arange(n) / n
        T, P1, P2 = np.meshgrid(th, ph, ph, indexing="ij")
        W = wt[:, None, None] * (2 * np.pi / n) ** 2 * np.ones_like(T)
        dirs = np.stack([np.cos(T) * np.exp(1j * P1), np.sin(T) * np.exp(1j * P2)], axis=-1)
        return dirs.reshape(-1, 2), W.reshape(-1)
    raise ValueError("only m = 1, 2 are supported")


def sphere_rule(m, center, r, n=None):
    """Product rule on the sphere of radius ``r``: trapezoid on circles,
    Gauss-Legendre in cos^2 of the Hopf angle for m = 2."""
    n = RuleSizes.default(m).sphere if n is None else int(n)
    if n < 8:
        raise ValueError("sphere rule needs n >= 8")
    dirs, w = _unit_sphere(m, n)
    c = np.zeros(m, complex) if center is None else np.asarray(center, dtype=complex).reshape(m)
    return QuadratureRule("sphere", m, c, float(r), dirs, np.array([float(r)]), w * r ** (2 * m - 1))


def radial_nodes(m, r, n_r):
    """Gauss-Legendre radii on (0, r) with weight t^{2m-1}."""
    x, wx = np.polynomial.legendre.leggauss(n_r)
    t = (x + 1) * r / 2
    return t, wx * r / 2 * t ** (2 * m - 1)


def ball_rule(m, center, r, n_r=None, n_s=None):
    """Gauss-Legendre in the radius tensored with the unit-sphere rule."""
    sizes = RuleSizes.default(m)
    n_r = sizes.radial if n_r is None else int(n_r)
    n_s = sizes.sphere if n_s is None else int(n_s)
    if n_r < 4:
        raise ValueError("ball rule needs n_r >= 4")
    dirs, ws = _unit_sphere(m, n_s)
    t, wt = radial_nodes(m, r, n_r)
    c = np.zeros(m, complex) if center is None else np.asarray(center, dtype=complex).reshape(m)
    w = (wt[:, None] * ws[None, :]).reshape(-1)
    return QuadratureRule("ball", m, c, float(r), dirs, t, w)


def coarea_check(integrand, m, r, n=None, center=None):
    """|ball integral - radial integral of sphere integrals| for ``integrand(z (N, m))``.

    The radial side uses its own Gauss-Legendre rule (two more nodes) so the
    two sides share no radial nodes.
    """
    sizes = RuleSizes.default(m)
    n_s = sizes.sphere if n is None else int(n)
    n_r = max(sizes.radial // 2, 8)
    ball = ball_rule(m, center, r, n_r, n_s)
    lhs = ball.integrate(integrand(ball.points))
    x, wx = np.polynomial.legendre.leggauss(n_r + 2)
    ts = (x + 1) * r / 2
    rhs = 0.0
    for t, wt in zip(ts, wx * r / 2):
        s = sphere_rule(m, center, t, n_s)
        rhs = rhs + wt * s.integrate(integrand(s.points))
    return float(abs(lhs - rhs))
