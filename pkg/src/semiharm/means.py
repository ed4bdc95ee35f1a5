"""Solid and spherical means over pseudo-balls, the Dirichlet product, the
mean-gap identity and Green's first identity.

Every covering integral is pushed down to the base ball: quadrature nodes
live in ``B(p(a), r)`` and the integrand is summed over the fiber points
that belong to branches through ``a``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .covering import (
    SEPARATION_MIN,
    CoverPoint,
    _min_separation,
    durand_kerner,
    jittered_roots,
    match_roots,
)
from .errors import BranchJump, RegionEscapesDomain
from .fields import ScalarField, laplacian_values, radial_values, real_partials
from .quadrature import (
    QuadratureRule,
    RuleSizes,
    ball_rule,
    sphere_area,
    sphere_rule,
    volume_form_factor,
)

TOL_M1 = 1e-7
TOL_M2 = 1e-6


def module_tol(m):
    return TOL_M1 if m == 1 else TOL_M2


# ---------------------------------------------------------------------------
# rules centred at p(a)


@lru_cache(maxsize=64)
def _rule(kind, m, center, r, n_s, n_r, grading):
    if kind == "sphere":
        return sphere_rule(m, np.array(center), r, n_s)
    rule = ball_rule(m, np.array(center), r, n_r, n_s)
    if grading == 1:
        return rule
    # t = r u^q concentrates radial nodes where branches behave like t^{1/q}
    x, wx = np.polynomial.legendre.leggauss(n_r)
    u = (x + 1) / 2
    t = r * u**grading
    wt = wx / 2 * r * grading * u ** (grading - 1) * t ** (2 * m - 1)
    unit = sphere_rule(m, None, 1.0, n_s)
    w = (wt[:, None] * unit.weights[None, :]).reshape(-1)
    return QuadratureRule("ball", m, rule.center, float(r), rule.dirs, t, w)


def make_rule(kind, cov, a, r, sizes=None, grading=None):
    """Sphere or ball rule about p(a); ball radii are graded by nu_p(a)."""
    sizes = RuleSizes.default(cov.m) if sizes is None else sizes
    q = a.mult if grading is None else grading
    center = tuple(complex(c) for c in a.base)
    return _rule(kind, cov.m, center, float(r), sizes.sphere, sizes.radial, int(q))


def _check_region(cov, a, r):
    if not r > 0:
        raise RegionEscapesDomain("radius must be positive")
    dist = float(np.linalg.norm(np.asarray(a.base) - np.asarray(cov.base_center)))
    if dist + r >= cov.base_radius:
        raise RegionEscapesDomain(
            f"ball of radius {r} about p(a) leaves the base ball (|p(a) - c| = {dist:.6g}, R = {cov.base_radius})"
        )


def _resolve(kind, cov, a, r, rule):
    if isinstance(rule, QuadratureRule):
        if rule.kind != kind:
            raise ValueError(f"expected a {kind} rule, got {rule.kind}")
        return rule
    return make_rule(kind, cov, a, r, rule)


# ---------------------------------------------------------------------------
# branch sampling


@dataclass(frozen=True, eq=False)
class BranchSample:
    """Fiber points over quadrature nodes, restricted to the branches through a.

    ``z`` (N, m) base nodes (possibly jittered off the branch locus),
    ``w`` (N, nu) fiber values, ``weights`` (N,) Lebesgue weights.
    """

    z: np.ndarray
    w: np.ndarray
    weights: np.ndarray

    @property
    def flat(self):
        nu = self.w.shape[1]
        return np.repeat(self.z, nu, axis=0), self.w.reshape(-1)

    def trace(self, vals):
        return np.asarray(vals).reshape(self.w.shape).sum(axis=1)

    def integrate_trace(self, vals):
        return complex(np.sum(self.weights * self.trace(vals)))


def _march(cov, a, dirs, radii):
    """Continue the fiber roots along rays p(a) + t * dir.

    Returns (len(radii), K, k) roots with a fixed column order, and the
    column indices of the branches through ``a``.
    """
    K, k, nu = len(dirs), cov.degree, a.mult
    c = np.asarray(a.base, dtype=complex)
    root0 = cov.solve(c[None, :])[0]
    order = np.argsort(np.abs(root0 - a.fiber))
    others = np.abs(root0[order[nu:]] - a.fiber)
    gap = float(others.min())
    t = 1e-8 * cov.base_radius
    while True:
        z1 = c[None, :] + t * dirs
        cur = cov.solve(z1)
        d = np.abs(cur - a.fiber)
        idx = np.argsort(d, axis=1)
        near = np.take_along_axis(d, idx[:, nu - 1 : nu], axis=1)
        if np.all(near < 0.25 * gap):
            break
        t *= 0.01
        if t < 1e-300:  # pragma: no cover - cluster never separates
            raise BranchJump("could not isolate the branches through a")
    # columns 0..nu-1 hold the branches through a
    cur = np.take_along_axis(cur, idx, axis=1)
    sel = np.arange(nu)

    rmax = float(np.max(radii))
    grid = np.unique(np.concatenate([
        np.geomspace(t, rmax, 48),
        np.linspace(0, rmax, 33)[1:],
        np.asarray(radii, dtype=float),
    ]))
    grid = grid[grid > t]
    out = np.empty((len(radii), K, k), dtype=complex)
    want = {float(r): i for i, r in enumerate(radii)}
    tprev = t

    def step(prev, t0, t1, depth=0):
        new, _ = durand_kerner(cov.coefficients(c[None, :] + t1 * dirs), init=prev)
        new = match_roots(prev, new)
        move = np.max(np.abs(new - prev), axis=1)
        sep = _min_separation(prev)
        if np.any(move > 0.3 * sep) and depth < 40:
            tm = 0.5 * (t0 + t1)
            mid = step(prev, t0, tm, depth + 1)
            return step(mid, tm, t1, depth + 1)
        return new

    for tn in grid:
        cur = step(cur, tprev, tn)
        tprev = tn
        if k > nu:
            dsel = np.abs(cur[:, :nu, None] - cur[:, None, nu:]).min(axis=(1, 2))
            if np.any(dsel < SEPARATION_MIN):
                j = int(np.argmin(dsel))
                hit = tuple(complex(v) for v in c + tn * dirs[j])
                raise BranchJump(f"branches through a meet another sheet at base point {hit}")
        if float(tn) in want:
            out[want[float(tn)]] = cur
    return out, sel


def _loop_check(cov, m, roots, nu, n_s):
    """Selected branches must be closed under continuation around the outer
    sphere; otherwise the ball contains a branch point joining other sheets."""
    k = roots.shape[-1]
    if m == 1:
        loops = [roots]
    else:
        nt = roots.shape[0] // (n_s * n_s)
        grid = roots.reshape(nt, n_s, n_s, k)
        loops = [grid[i, :, j] for i in range(nt) for j in range(n_s)]
        loops += [grid[i, j, :] for i in range(nt) for j in range(n_s)]
    for loop in loops:
        nxt = np.roll(loop, -1, axis=0)
        matched = match_roots(loop, nxt)
        # the selected set must map into itself along every edge of the loop
        d = np.abs(matched[:, :nu, None] - nxt[:, None, :nu]).min(axis=2)
        if np.any(d > 0):
            raise RegionEscapesDomain(
                "the ball about p(a) contains a branch point joining the branches through a "
                "with other sheets; no pseudo-ball of this radius"
            )


def branch_sample(cov, a: CoverPoint, rule: QuadratureRule) -> BranchSample:
    """Fiber points of the pseudo-ball about ``a`` over the nodes of ``rule``."""
    return _branch_sample(cov, a, rule)


@lru_cache(maxsize=32)
def _branch_sample(cov, a, rule):
    nu, k = a.mult, cov.degree
    if nu == k:
        z, w = jittered_roots(cov, rule.points)
        return BranchSample(z, w, rule.weights)
    roots, sel = _march(cov, a, rule.dirs, rule.radii)
    n_s = _azimuth_count(len(rule.dirs)) if cov.m == 2 else None
    _loop_check(cov, cov.m, roots[-1], nu, n_s)
    w = roots[:, :, sel].reshape(-1, nu)
    return BranchSample(rule.points, w, rule.weights)


def _azimuth_count(K):
    # K = (n / 2) * n * n for the m = 2 product rule
    for n in range(8, 4096):
        if max(n // 2, 2) * n * n == K:
            return n
    raise ValueError(f"cannot recover azimuth count from {K} directions")


# ---------------------------------------------------------------------------
# means


def spherical_mean(cov, f: ScalarField, a: CoverPoint, r, rule=None) -> complex:
    """(1 / (|S| r^{2m-1})) * integral of trace(f) over the sphere S(p(a), r)."""
    _check_region(cov, a, r)
    s = branch_sample(cov, a, _resolve("sphere", cov, a, r, rule))
    vals = f.values(*s.flat)
    return s.integrate_trace(vals) / sphere_area(cov.m, r)


def solid_mean(cov, f: ScalarField, a: CoverPoint, r, rule=None) -> complex:
    """(m! / (pi^m r^{2m})) * integral of trace(f) over the ball B(p(a), r)."""
    _check_region(cov, a, r)
    s = branch_sample(cov, a, _resolve("ball", cov, a, r, rule))
    vals = f.values(*s.flat)
    return volume_form_factor(cov.m) * s.integrate_trace(vals) / r ** (2 * cov.m)


@dataclass
class MeanValueResult:
    passed: bool
    target: complex
    solid: list
    spherical: list
    worst_solid: float
    worst_spherical: float


def mean_value_test(cov, f, a, radii, tol, sizes=None) -> MeanValueResult:
    """Both mean-value properties against nu_p(a) f(a) at every radius."""
    target = a.mult * f.eval(a)
    solid = [solid_mean(cov, f, a, r, sizes) for r in radii]
    sph = [spherical_mean(cov, f, a, r, sizes) for r in radii]
    ws = max(abs(v - target) for v in solid)
    wp = max(abs(v - target) for v in sph)
    return MeanValueResult(bool(ws < tol and wp < tol), target, solid, sph, ws, wp)


def dirichlet_product(cov, eta, phi, a, r, rule=None) -> complex:
    """[eta, phi] = (1/4m) * integral of trace(grad eta . conj(grad phi)) in the
    normalized volume form."""
    _check_region(cov, a, r)
    s = branch_sample(cov, a, _resolve("ball", cov, a, r, rule))
    z, w = s.flat
    ge = real_partials(cov, eta, z, w)
    gp = real_partials(cov, phi, z, w)
    integrand = np.sum(ge * np.conj(gp), axis=1)
    return volume_form_factor(cov.m) / (4 * cov.m) * s.integrate_trace(integrand)


def radius_field(m, center, label="|p-a|^2"):
    """||p^[a]||^2 as a base field with exact partials."""
    c = np.asarray(center, dtype=complex)

    def values(z, w):
        return np.sum(np.abs(z - c[None, :]) ** 2, axis=1) + 0j

    def partials(z, w, dw):
        d = z - c[None, :]
        out = np.empty((len(w), 2 * m), dtype=complex)
        out[:, 0::2] = 2 * d.real
        out[:, 1::2] = 2 * d.imag
        return out

    return ScalarField(values, partials, label=label, uses_w=False)


@dataclass
class MeanReport:
    a: CoverPoint
    r: float
    solid: complex
    spherical: complex
    nu: int
    gap: complex
    dirichlet_term: complex
    identity_residual: float


def mean_gap_identity(cov, f, a, r, rule=None) -> MeanReport:
    """spherical = solid + r^{-2m} [f, ||p^[a]||^2], with all three terms
    computed separately."""
    sph = spherical_mean(cov, f, a, r, rule)
    sol = solid_mean(cov, f, a, r, rule)
    rho2 = radius_field(cov.m, a.base)
    term = dirichlet_product(cov, f, rho2, a, r, rule) / r ** (2 * cov.m)
    gap = sph - sol
    return MeanReport(a, float(r), sol, sph, a.mult, gap, term, float(abs(gap - term)))


@dataclass
class GreenReport:
    dirichlet: complex
    boundary: complex
    volume: complex
    residual: float


def greens_sides(cov, eta, phi, a, r, rule=None) -> GreenReport:
    """Both sides of Green's first identity on the pseudo-ball:
    (1/4m) int grad eta . grad phi  =  (1/(2|S|)) int eta d_nu phi dsigma
    - (1/4m) int eta Laplace(phi), the volume integrals in the normalized form."""
    _check_region(cov, a, r)
    m = cov.m
    vf = volume_form_factor(m)
    ball = branch_sample(cov, a, _resolve("ball", cov, a, r, rule))
    z, w = ball.flat
    grad = np.sum(real_partials(cov, eta, z, w) * real_partials(cov, phi, z, w), axis=1)
    lhs = vf / (4 * m) * ball.integrate_trace(grad)
    vol = vf / (4 * m) * ball.integrate_trace(eta.values(z, w) * laplacian_values(cov, phi, z, w))
    sph = branch_sample(cov, a, _resolve("sphere", cov, a, r, rule))
    zs, ws = sph.flat
    rad = radial_values(cov, phi, a.base, zs, ws)
    bnd = sph.integrate_trace(eta.values(zs, ws) * rad) / (2 * sphere_area(m))
    return GreenReport(lhs, bnd, vol, float(abs(lhs - (bnd - vol))))


def greens_residual(cov, eta, phi, a, r, rule=None) -> float:
    return greens_sides(cov, eta, phi, a, r, rule).residual


def stokes_constant(cov, phi, a, r, rule=None):
    """Fitted constant c in  int_sphere j*(d^c phi ^ upsilon^{m-1}) = c int d_nu phi dsigma.

    The left side is obtained by Stokes from the interior,
    (1/4m) int Laplace(phi) in the normalized volume form.
    """
    _check_region(cov, a, r)
    m = cov.m
    ball = branch_sample(cov, a, _resolve("ball", cov, a, r, rule))
    z, w = ball.flat
    inner = volume_form_factor(m) / (4 * m) * ball.integrate_trace(laplacian_values(cov, phi, z, w))
    sph = branch_sample(cov, a, _resolve("sphere", cov, a, r, rule))
    zs, ws = sph.flat
    flux = sph.integrate_trace(radial_values(cov, phi, a.base, zs, ws))
    return inner / flux


def mean_limit_order(cov, f, a, ks=range(2, 8), sizes=None):
    """Observed convergence order of both means to nu_p(a) f(a) over radii 2^-k.

    Returns (min order over consecutive radii, errors per mean kind).
    """
    target = a.mult * f.eval(a)
    radii = [2.0**-k for k in ks]
    errs = {
        "solid": [abs(solid_mean(cov, f, a, r, sizes) - target) for r in radii],
        "spherical": [abs(spherical_mean(cov, f, a, r, sizes) - target) for r in radii],
    }
    orders = []
    for e in errs.values():
        for e0, e1 in zip(e, e[1:]):
            orders.append(np.log2(e0 / e1))
    return float(min(orders)), errs
