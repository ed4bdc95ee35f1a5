"""Harmonic residues as normalized outward fluxes through pseudo-spheres."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DegenerateRadius, LogSingularity
from .fields import radial_values
from .means import _check_region, _resolve, branch_sample
from .quadrature import sphere_area

TOL_M1 = 1e-8
TOL_M2 = 1e-5


def residue_tol(m):
    return TOL_M1 if m == 1 else TOL_M2


def residue_constant(m):
    """c_m in Res = -c_m * int_sphere d^c f ^ upsilon^{m-1}."""
    return 1.0 if m == 1 else 1.0 / (m - 1)


def harmonic_residue(cov, f, a, r, rule=None) -> complex:
    """Res_a(f, r) = -c_m / (2|S|) * integral over S(p(a), r) of trace(R_{p,a} f)."""
    if not r > 1e-12:
        raise DegenerateRadius(f"pseudo-sphere radius {r!r} is degenerate")
    _check_region(cov, a, r)
    m = cov.m
    s = branch_sample(cov, a, _resolve("sphere", cov, a, r, rule))
    z, w = s.flat
    flux = s.integrate_trace(radial_values(cov, f, a.base, z, w))
    return -residue_constant(m) * flux / (2 * sphere_area(m))


def residue_closed_form(m, alpha, s, r, nu=1, h_a=1.0) -> complex:
    """Residue of (log||p^[a]||^2)^alpha h / ||p^[a]||^{2m-2+s} at radius r.

    m = 1:  [-alpha L^{alpha-1} + (s/2) L^alpha] / r^s * nu * h(a)
    m > 1:  [-alpha L^{alpha-1} + (m-1+s/2) L^alpha] / ((m-1) r^s) * nu * h(a)
    with L = log r^2.
    """
    if alpha < 0 or s < 0:
        raise ValueError("alpha and s must be non-negative")
    L = complex(math.log(r * r))
    if alpha > 0 and alpha < 1 and L == 0:
        raise LogSingularity(f"(log r^2)^(alpha - 1) is singular at r = 1 for alpha = {alpha}")
    first = 0j if alpha == 0 else alpha * (L ** (alpha - 1) if alpha != 1 else 1.0)
    second = L**alpha if alpha != 0 else 1.0
    if m == 1:
        bracket = -first + (s / 2) * second
    else:
        bracket = (-first + (m - 1 + s / 2) * second) / (m - 1)
    return complex(bracket / r**s * nu * h_a)


@dataclass
class ResidueScan:
    a: object
    radii: list
    values: list
    spread: float
    max_abs: float
    tol: float
    semi_harmonic_candidate: bool = field(init=False)

    def __post_init__(self):
        self.semi_harmonic_candidate = bool(self.max_abs < self.tol)


def residue_scan(cov, f, a, radii, rule=None, tol=None) -> ResidueScan:
    """Residues over several radii; the candidate flag requires all to vanish."""
    tol = residue_tol(cov.m) if tol is None else tol
    vals = [harmonic_residue(cov, f, a, r, rule) for r in radii]
    spread = max((abs(x - y) for x in vals for y in vals), default=0.0)
    return ResidueScan(a, list(radii), vals, float(spread), float(max(abs(v) for v in vals)), tol)
