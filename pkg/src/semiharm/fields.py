"""Scalar fields on a covering and their first-order derivative operators.

Real partials are ordered ``(d/dx1, d/dy1, d/dx2, d/dy2)``. Wirtinger
derivatives are always derived from them:
``d/dp_j = (d/dx_j - i d/dy_j) / 2`` and ``d/dpbar_j = (d/dx_j + i d/dy_j) / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .covering import CoverPoint, CoveringMap, _min_separation, continue_branch
from .errors import BranchJump, DegenerateRadius, NotOnBoundary, VanishingGradient
from .expr import CompiledField, parse_field

FD_STEP = 1e-5          # first derivatives, relative to base radius
FD2_STEP = 1e-3         # second differences when only values are available
RADIUS_FLOOR = 1e-12
BOUNDARY_TOL = 1e-8
GRADIENT_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Complex-valued function on a covering, evaluated branchwise.

    Parameters
    ----------
    values : callable ``(z (N, m), w (N,)) -> (N,)`` complex
    partials : optional callable ``(z, w, dw) -> (N, 2m)`` complex, where
        ``dw`` is the (N, m) array of branch derivatives dw/dz_j.
    fd_step : finite-difference step relative to the base radius.
    uses_w : False if the field is a pullback from the base (no fiber tracking needed).
    """

    values: Callable
    partials: Optional[Callable] = None
    fd_step: float = FD_STEP
    label: str = ""
    uses_w: bool = True

    @classmethod
    def from_expr(cls, text, m, label=None, analytic=True):
        """Field from the expression grammar; ``analytic=False`` drops the
        symbolic partials so every derivative goes through finite differences."""
        expr = parse_field(text, m) if isinstance(text, str) else text
        cf = CompiledField(expr, m)
        return cls(
            values=cf,
            partials=cf.partials if analytic else None,
            label=label if label is not None else str(text),
            uses_w=cf.uses_w,
        )

    @classmethod
    def constant(cls, c, label=None):
        c = complex(c)

        def values(z, w):
            return np.full(len(w), c, dtype=complex)

        def partials(z, w, dw):
            return np.zeros((len(w), 2 * np.shape(z)[1]), dtype=complex)

        return cls(values, partials, label=label or repr(c), uses_w=False)

    def without_partials(self):
        return ScalarField(self.values, None, self.fd_step, self.label, self.uses_w)

    def eval(self, x: CoverPoint) -> complex:
        z = np.asarray(x.base, dtype=complex).reshape(1, -1)
        return complex(self.values(z, np.array([x.fiber]))[0])

    __call__ = eval


@dataclass(frozen=True, eq=False)
class DefiningFunction:
    """Real C^1 function whose zero set is the boundary under study."""

    rho: ScalarField

    @classmethod
    def sphere(cls, m, center=None, r=1.0, scale=1.0):
        """``scale * (||p - center||^2 - r^2)``."""
        c = np.zeros(m, complex) if center is None else np.asarray(center, dtype=complex)

        def values(z, w):
            d = np.asarray(z) - c[None, :]
            return scale * (np.sum(np.abs(d) ** 2, axis=1) - r * r) + 0j

        def partials(z, w, dw):
            d = np.asarray(z) - c[None, :]
            out = np.empty((len(w), 2 * m), dtype=complex)
            out[:, 0::2] = 2 * scale * d.real
            out[:, 1::2] = 2 * scale * d.imag
            return out

        return cls(ScalarField(values, partials, label=f"{scale}*(|p-c|^2-{r}^2)", uses_w=False))

    def scaled(self, lam):
        f = self.rho

        def values(z, w):
            return lam * f.values(z, w)

        def partials(z, w, dw):
            return lam * f.partials(z, w, dw)

        dpart = partials if f.partials is not None else None
        return DefiningFunction(ScalarField(values, dpart, f.fd_step, f"{lam}*({f.label})", f.uses_w))


# ---------------------------------------------------------------------------
# vectorized partials


def _step(cov, f, scale=FD_STEP):
    return scale / FD_STEP * f.fd_step * cov.base_radius


def _local_steps(cov, f, z, h):
    """Per-node step: shrunk near the branch locus, where roots of a k-sheeted
    covering separate like dist^{1/k}."""
    if not f.uses_w or cov.degree == 1:
        return np.full(len(z), h)
    sep = _min_separation(cov.solve(z))
    return np.minimum(h, 0.05 * sep**cov.degree)


def _shift(cov, f, z, w, d, h):
    """Base points moved by ``h`` along real direction ``d`` and the continued fiber."""
    zs = np.array(z, dtype=complex)
    zs[:, d // 2] += h if d % 2 == 0 else 1j * h
    if not f.uses_w or cov.degree == 1:
        ws = w if cov.degree > 1 else cov.solve(zs)[:, 0]
        return zs, ws
    return zs, continue_branch(cov, w, zs)


def fd_partials(cov, f, z, w, h=None):
    """Centered differences of ``f`` along each real base direction."""
    z = np.asarray(z, dtype=complex).reshape(-1, cov.m)
    w = np.asarray(w, dtype=complex).reshape(-1)
    h = _local_steps(cov, f, z, _step(cov, f) if h is None else h)
    out = np.empty((len(w), 2 * cov.m), dtype=complex)
    for d in range(2 * cov.m):
        zp, wp = _shift(cov, f, z, w, d, h)
        zm, wm = _shift(cov, f, z, w, d, -h)
        out[:, d] = (f.values(zp, wp) - f.values(zm, wm)) / (2 * h)
    return out


def real_partials(cov, f, z, w):
    """(N, 2m) real partials of ``f`` at points ``(z, w)`` of the covering."""
    z = np.asarray(z, dtype=complex).reshape(-1, cov.m)
    w = np.asarray(w, dtype=complex).reshape(-1)
    if f.partials is None:
        return fd_partials(cov, f, z, w)
    dw = cov.dw_dz(z, w) if f.uses_w else np.zeros((len(w), cov.m), complex)
    return f.partials(z, w, dw)


def wirtinger(partials):
    """Split real partials into (d/dp_j, d/dpbar_j), each (N, m)."""
    px, py = partials[:, 0::2], partials[:, 1::2]
    return 0.5 * (px - 1j * py), 0.5 * (px + 1j * py)


def laplacian_values(cov, f, z, w):
    """Euclidean Laplacian in the base coordinates, branchwise.

    With analytic partials: centered first differences of the partials;
    otherwise second differences of values at a larger step. Both use one
    Richardson step over (h, h/2).
    """
    z = np.asarray(z, dtype=complex).reshape(-1, cov.m)
    w = np.asarray(w, dtype=complex).reshape(-1)

    def lap(h):
        total = np.zeros(len(w), dtype=complex)
        for d in range(2 * cov.m):
            zp, wp = _shift(cov, f, z, w, d, h)
            zm, wm = _shift(cov, f, z, w, d, -h)
            if f.partials is not None:
                total += (real_partials(cov, f, zp, wp)[:, d] - real_partials(cov, f, zm, wm)[:, d]) / (2 * h)
            else:
                total += (f.values(zp, wp) - 2 * f.values(z, w) + f.values(zm, wm)) / (h * h)
        return total

    h = _step(cov, f) if f.partials is not None else _step(cov, f, FD2_STEP)
    h = _local_steps(cov, f, z, h)
    return (4 * lap(h / 2) - lap(h)) / 3


def radial_values(cov, f, a_base, z, w, partials=None):
    """R_{p,a} f at points (z, w); ``a_base`` is p(a)."""
    z = np.asarray(z, dtype=complex).reshape(-1, cov.m)
    if partials is None:
        partials = real_partials(cov, f, z, w)
    d = z - np.asarray(a_base, dtype=complex)[None, :]
    rad = np.sqrt(np.sum(np.abs(d) ** 2, axis=1))
    if np.any(rad < RADIUS_FLOOR):
        raise DegenerateRadius("radial derivative requested at p(x) = p(a)")
    num = np.sum(d.real * partials[:, 0::2] + d.imag * partials[:, 1::2], axis=1)
    return num / rad


# ---------------------------------------------------------------------------
# pointwise operators on CoverPoints


def _at(x):
    return np.asarray(x.base, dtype=complex).reshape(1, -1), np.array([x.fiber])


def gradient(f: ScalarField, x: CoverPoint) -> np.ndarray:
    """(d f/dx1, d f/dy1, ...) at ``x``, analytic if available else FD."""
    z, w = _at(x)
    return real_partials(x.cov, f, z, w)[0]


def wirtinger_at(f, x):
    d, db = wirtinger(gradient(f, x)[None, :])
    return d[0], db[0]


def radial_derivative(f: ScalarField, a: CoverPoint, x: CoverPoint) -> complex:
    z, w = _at(x)
    return complex(radial_values(x.cov, f, a.base, z, w)[0])


def euler_apply(f, a, x):
    """E_{p,a} f = sum_j (p_j(x) - p_j(a)) df/dp_j."""
    d, _ = wirtinger_at(f, x)
    return complex(np.sum((x.z - a.z) * d))


def euler_dbar_apply(f, a, x):
    """Conjugate Euler field: sum_j conj(p_j(x) - p_j(a)) df/dpbar_j."""
    _, db = wirtinger_at(f, x)
    return complex(np.sum(np.conj(x.z - a.z) * db))


def euler_field_apply(g, f, x):
    """(E_g f, Ebar_g f) = (2 sum g_{pbar_k} d_k f, 2 sum g_{p_k} dbar_k f)."""
    gd, gdb = wirtinger_at(g, x)
    fd, fdb = wirtinger_at(f, x)
    return complex(2 * np.sum(gdb * fd)), complex(2 * np.sum(gd * fdb))


def gradient_apply(g, f, x):
    """d_{grad g} f: the real-bilinear pairing of the two gradients."""
    return complex(np.sum(gradient(g, x) * gradient(f, x)))


def partial_gradient_apply(g, f, x, k):
    """nabla_k g applied to f: 2 (g_{p_k} dbar_k f + g_{pbar_k} d_k f)."""
    gd, gdb = wirtinger_at(g, x)
    fd, fdb = wirtinger_at(f, x)
    return complex(2 * (gd[k] * fdb[k] + gdb[k] * fd[k]))


def _boundary_frame(rho: DefiningFunction, x: CoverPoint):
    z, w = _at(x)
    val = complex(rho.rho.values(z, w)[0])
    if abs(val) > BOUNDARY_TOL:
        raise NotOnBoundary(f"|rho(x)| = {abs(val):.3g} exceeds {BOUNDARY_TOL}")
    g = gradient(rho.rho, x).real
    norm = float(np.linalg.norm(g))
    if norm <= GRADIENT_FLOOR:
        raise VanishingGradient(f"||grad rho|| = {norm:.3g} at boundary point")
    return g, norm


def dbar_neumann(f: ScalarField, rho: DefiningFunction, x: CoverPoint) -> complex:
    """2 sum_j rho_j df/dpbar_j with rho_j = (d rho/dp_j) / ||grad rho||."""
    g, norm = _boundary_frame(rho, x)
    rho_d, _ = wirtinger(g[None, :].astype(complex))
    _, fdb = wirtinger_at(f, x)
    return complex(2 * np.sum(rho_d[0] / norm * fdb))


def normal_derivative(f: ScalarField, rho: DefiningFunction, x: CoverPoint) -> complex:
    """grad f . grad rho / ||grad rho||."""
    g, norm = _boundary_frame(rho, x)
    return complex(np.dot(gradient(f, x), g) / norm)


def laplacian(f: ScalarField, x: CoverPoint) -> complex:
    z, w = _at(x)
    return complex(laplacian_values(x.cov, f, z, w)[0])


def check_partials(cov: CoveringMap, f: ScalarField, n=20, rtol=1e-4, seed=None):
    """Compare analytic partials with centered differences at random regular points.

    Returns the worst relative error; points whose stencil meets the branch
    locus are skipped.
    """
    if f.partials is None:
        return 0.0
    z = cov.random_base_points(4 * n, seed=cov.seed + 7 if seed is None else seed, fraction=0.9)
    roots = cov.solve(z)
    worst, used = 0.0, 0
    for zi, ri in zip(z, roots):
        if used >= n:
            break
        zi = zi[None, :]
        wi = ri[:1]
        try:
            num = fd_partials(cov, f, zi, wi)
        except BranchJump:
            continue
        ana = real_partials(cov, f, zi, wi)
        if not np.all(np.isfinite(ana)):
            continue
        scale = max(1.0, float(np.max(np.abs(ana))))
        worst = max(worst, float(np.max(np.abs(ana - num))) / scale)
        used += 1
    return worst
