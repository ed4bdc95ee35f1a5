"""Riemann domains presented as graph coverings ``F(z, w) = 0`` over a ball.

A covering is a monic polynomial in one fiber variable ``w`` whose lower
coefficients are polynomials in the base coordinates ``z = (z1, ..., zm)``.
Fibers are found by a batched Durand-Kerner iteration with a companion
matrix fallback.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from math import factorial

import numpy as np
import sympy as sp

from .errors import AmbiguousCluster, BranchJump, InvalidCovering, SolverDivergence
from .expr import parse_coefficient, z_symbols

DEFAULT_SEED = 20070703

DK_MAXITER = 200
DK_TOL = 1e-12
CLUSTER_RTOL = 1e-6
MULT_EPS = 1e-4        # local_multiplicity perturbation, relative to base radius
JITTER_TRIGGER = 1e-5  # root separation that flags a node as on the branch locus
JITTER = 1e-8          # relative to base radius
SEPARATION_MIN = 1e-7  # branch continuation rejects nearly coincident roots
SIMPLE_GAP = 1e-4  # roots farther apart than this are simple without perturbing


# ---------------------------------------------------------------------------
# batched polynomial root finding


def _horner(coeffs, w):
    # coeffs (N, k+1) low -> high, w (N, k)
    k = coeffs.shape[1] - 1
    val = np.ones_like(w)
    for i in range(k - 1, -1, -1):
        val = val * w + coeffs[:, i : i + 1]
    return val


def _seed(coeffs):
    n, k1 = coeffs.shape
    k = k1 - 1
    # Fujiwara bound on root magnitude
    i = np.arange(1, k + 1)
    mag = np.abs(coeffs[:, k - i]) ** (1.0 / i)
    bound = 2.0 * np.max(mag, axis=1)
    bound = np.where(bound > 0, bound, 1.0)
    ang = 2 * np.pi * np.arange(k) / k + 0.4
    radius = bound[:, None] * (0.5 + 0.5 * (1 + 0.1 * np.arange(k) / k))
    return radius * np.exp(1j * ang)[None, :]


def companion_roots(coeffs):
    """Eigenvalues of the companion matrices of monic polynomials (N, k+1)."""
    coeffs = np.asarray(coeffs, dtype=complex)
    n, k1 = coeffs.shape
    k = k1 - 1
    comp = np.zeros((n, k, k), dtype=complex)
    if k > 1:
        comp[:, np.arange(1, k), np.arange(k - 1)] = 1.0
    comp[:, :, k - 1] = -coeffs[:, :k]
    return np.linalg.eigvals(comp)


def durand_kerner(coeffs, init=None, maxiter=DK_MAXITER, tol=DK_TOL):
    """Simultaneous iteration for all roots of monic polynomials.

    Parameters
    ----------
    coeffs : (N, k+1) complex array, lowest degree first, ``coeffs[:, k] == 1``.
    init : optional (N, k) starting roots (warm start for continuation).

    Returns
    -------
    roots : (N, k) complex array
    converged : (N,) bool array
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    n, k1 = coeffs.shape
    k = k1 - 1
    if k == 1:
        return -coeffs[:, :1].copy(), np.ones(n, bool)
    w = _seed(coeffs) if init is None else np.array(init, dtype=complex)
    done = np.zeros(n, bool)
    active = np.arange(n)
    eye = np.eye(k, dtype=bool)
    for _ in range(maxiter):
        if active.size == 0:
            break
        wa = w[active]
        ca = coeffs[active]
        diff = wa[:, :, None] - wa[:, None, :]
        diff[:, eye] = 1.0
        with np.errstate(all="ignore"):
            step = _horner(ca, wa) / np.prod(diff, axis=2)
        bad = ~np.all(np.isfinite(step), axis=1)
        step[bad] = 0.0
        wa = wa - step
        w[active] = wa
        small = np.all(np.abs(step) <= tol * (1.0 + np.abs(wa)), axis=1) & ~bad
        done[active[small]] = True
        keep = ~small & ~bad
        active = active[keep]
    if not np.all(done):
        idx = np.flatnonzero(~done)
        try:
            w[idx] = companion_roots(coeffs[idx])
        except np.linalg.LinAlgError as exc:  # pragma: no cover - lapack failure
            raise SolverDivergence(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise SolverDivergence("fiber roots are not finite")
    return w, done


def cluster_roots(roots, rtol=CLUSTER_RTOL):
    """Group numerically equal roots; returns sorted [(centroid, count)]."""
    roots = list(np.asarray(roots, dtype=complex).ravel())
    groups = []
    for r in roots:
        for g in groups:
            if any(abs(r - q) <= rtol * max(1.0, abs(r), abs(q)) for q in g):
                g.append(r)
                break
        else:
            groups.append([r])
    # single-linkage merge of groups that became adjacent
    merged = True
    while merged:
        merged = False
        for a, b in itertools.combinations(range(len(groups)), 2):
            if any(
                abs(r - q) <= rtol * max(1.0, abs(r), abs(q)) for r in groups[a] for q in groups[b]
            ):
                groups[a].extend(groups.pop(b))
                merged = True
                break
    tiny = 1e-15 * max([1.0] + [abs(r) for r in roots])
    out = []
    for g in groups:
        c = complex(np.mean(g))
        out.append((complex(c.real if abs(c.real) > tiny else 0.0, c.imag if abs(c.imag) > tiny else 0.0), len(g)))
    return sorted(out, key=lambda t: (round(t[0].real, 12), round(t[0].imag, 12)))


def match_roots(prev, new):
    """Reorder ``new`` (N, k) so that column i continues ``prev[:, i]``."""
    n, k = prev.shape
    if k == 1:
        return new
    if k <= 5:
        perms = np.array(list(itertools.permutations(range(k))))
        cost = np.stack([np.sum(np.abs(new[:, p] - prev), axis=1) for p in perms], axis=1)
        best = perms[np.argmin(cost, axis=1)]
        return np.take_along_axis(new, best, axis=1)
    out = np.empty_like(new)
    for row in range(n):  # greedy for large k
        free = list(range(k))
        for i in range(k):
            j = min(free, key=lambda c: abs(new[row, c] - prev[row, i]))
            out[row, i] = new[row, j]
            free.remove(j)
    return out


# ---------------------------------------------------------------------------
# covering types


def _as_base(z, m):
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        z = z.reshape(1)
    if z.shape[-1] != m:
        raise ValueError(f"base point must have {m} complex coordinates, got shape {z.shape}")
    return z


@dataclass(frozen=True)
class CoverPoint:
    """A point of the covering: base coordinate(s) and fiber coordinate."""

    base: tuple
    fiber: complex
    cov: "CoveringMap" = field(default=None, repr=False, compare=False)

    @cached_property
    def mult(self):
        return local_multiplicity(self.cov, self)

    @property
    def z(self):
        return np.asarray(self.base, dtype=complex)


@dataclass(frozen=True, eq=False)
class CoveringMap:
    """Monic fiber polynomial ``F(z, w) = w^k + c_{k-1}(z) w^{k-1} + ... + c_0(z)``.

    ``coeffs`` holds the sympy polynomials ``c_0 .. c_{k-1}``.
    """

    m: int
    coeffs: tuple
    base_center: tuple
    base_radius: float
    label: str = ""
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.m not in (1, 2):
            raise InvalidCovering(f"base dimension must be 1 or 2, got {self.m}")
        if len(self.coeffs) < 1:
            raise InvalidCovering("fiber degree must be at least 1")
        if not self.base_radius > 0:
            raise InvalidCovering("base radius must be positive")
        if len(self.base_center) != self.m:
            raise InvalidCovering("base center has wrong dimension")
        self._validate()

    # -- construction -----------------------------------------------------

    @classmethod
    def from_strings(cls, m, coeffs, base_center=None, base_radius=2.0, label=""):
        """Build from coefficient strings ``[c_0, ..., c_{k-1}]`` (monic implied)."""
        exprs = tuple(parse_coefficient(c, m) for c in coeffs)
        center = tuple(complex(c) for c in (base_center if base_center is not None else [0] * m))
        return cls(m, exprs, center, float(base_radius), label or _default_label(m, exprs))

    @classmethod
    def from_spec(cls, spec):
        """Build from the JSON covering document (dict or JSON text)."""
        if isinstance(spec, str):
            spec = json.loads(spec)
        known = {"m", "fiber_degree", "coeffs", "base_center", "base_radius", "label"}
        unknown = set(spec) - known
        if unknown:
            raise InvalidCovering(f"unknown covering keys: {sorted(unknown)}")
        try:
            m = int(spec["m"])
            k = int(spec["fiber_degree"])
            raw = spec["coeffs"]
        except KeyError as exc:
            raise InvalidCovering(f"covering spec missing key {exc}") from None
        if k < 1:
            raise InvalidCovering("fiber_degree must be >= 1")
        coeffs = []
        for key in raw:
            if not (key.startswith("w^") and key[2:].isdigit()):
                raise InvalidCovering(f"bad coefficient key {key!r}; expected 'w^<i>'")
            if int(key[2:]) > k:
                raise InvalidCovering(f"coefficient {key} exceeds fiber_degree {k}")
        for i in range(k):
            coeffs.append(str(raw.get(f"w^{i}", "0")))
        lead = raw.get(f"w^{k}")
        if lead is not None and sp.simplify(parse_coefficient(lead, m) - 1) != 0:
            raise InvalidCovering(f"fiber polynomial is not monic: leading coefficient {lead!r}")
        center = _parse_center(spec.get("base_center"), m)
        return cls.from_strings(m, coeffs, center, spec.get("base_radius", 2.0), spec.get("label", ""))

    def to_spec(self):
        return {
            "m": self.m,
            "fiber_degree": self.degree,
            "coeffs": {f"w^{i}": str(c).replace("**", "^").replace("I", "i") for i, c in enumerate(self.coeffs)},
            "base_center": [x for c in self.base_center for x in (c.real, c.imag)],
            "base_radius": self.base_radius,
            "label": self.label,
        }

    # -- compiled evaluators ----------------------------------------------

    @cached_property
    def _coeff_fns(self):
        Z = z_symbols(self.m)
        return [sp.lambdify(Z, c, modules="numpy") for c in self.coeffs]

    @cached_property
    def _coeff_grad_fns(self):
        Z = z_symbols(self.m)
        return [[sp.lambdify(Z, sp.diff(c, zj), modules="numpy") for zj in Z] for c in self.coeffs]

    @property
    def degree(self):
        return len(self.coeffs)

    @property
    def identity_flag(self):
        return self.degree == 1

    @cached_property
    def coeff_scale(self):
        """Rough coefficient magnitude over the base ball (for residual checks)."""
        z = self.random_base_points(16, seed=1)
        return float(np.max(np.abs(self.coefficients(z))))

    def coefficients(self, z):
        """(N, k+1) coefficient array at base points ``z`` (N, m)."""
        z = _as_base(z, self.m).reshape(-1, self.m)
        n = z.shape[0]
        cols = [z[:, j] for j in range(self.m)]
        out = np.empty((n, self.degree + 1), dtype=complex)
        for i, f in enumerate(self._coeff_fns):
            out[:, i] = np.broadcast_to(np.asarray(f(*cols), dtype=complex), (n,))
        out[:, -1] = 1.0
        return out

    def evaluate(self, z, w):
        """F(z, w) for matching arrays of base points and fiber values."""
        c = self.coefficients(z)
        w = np.asarray(w, dtype=complex).reshape(-1)
        return _horner(c, w[:, None])[:, 0]

    def dw_dz(self, z, w):
        """Branchwise holomorphic derivative dw/dz_j = -F_{z_j} / F_w, shape (N, m)."""
        z = _as_base(z, self.m).reshape(-1, self.m)
        w = np.asarray(w, dtype=complex).reshape(-1)
        n, k = len(w), self.degree
        c = self.coefficients(z)
        Fw = np.zeros(n, dtype=complex)
        for i in range(1, k + 1):
            Fw += i * c[:, i] * w ** (i - 1)
        cols = [z[:, j] for j in range(self.m)]
        out = np.zeros((n, self.m), dtype=complex)
        for j in range(self.m):
            Fz = np.zeros(n, dtype=complex)
            for i in range(k):
                g = np.broadcast_to(np.asarray(self._coeff_grad_fns[i][j](*cols), dtype=complex), (n,))
                Fz += g * w**i
            with np.errstate(all="ignore"):
                out[:, j] = -Fz / Fw
        return out

    def solve(self, z, init=None):
        """Raw roots (N, k) of F(z, .) at base points (N, m)."""
        return durand_kerner(self.coefficients(z), init=init)[0]

    def random_base_points(self, n, seed=None, fraction=0.95):
        rng = np.random.default_rng(self.seed if seed is None else seed)
        d = 2 * self.m
        g = rng.standard_normal((n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        rad = fraction * self.base_radius * rng.random(n) ** (1.0 / d)
        x = g * rad[:, None]
        z = x[:, 0::2] + 1j * x[:, 1::2]
        return z + np.asarray(self.base_center)[None, :]

    def _validate(self):
        z = self.random_base_points(8)
        roots = self.solve(z)
        for zi, r in zip(z, roots):
            if len(cluster_roots(r)) != self.degree:
                raise InvalidCovering(
                    f"fiber polynomial has repeated roots at random base point {tuple(zi)}: "
                    "discriminant vanishes identically"
                )

    def contains(self, z, margin=0.0):
        z = _as_base(z, self.m)
        return np.linalg.norm(z - np.asarray(self.base_center)) < self.base_radius - margin

    def point(self, z, w=None, branch=0):
        """CoverPoint over ``z``; ``w`` defaults to the ``branch``-th fiber point."""
        z = tuple(complex(c) for c in np.ravel(_as_base(z, self.m)))
        if w is None:
            w = fiber(self, z)[branch][0]
        resid = abs(self.evaluate(np.array([z]), np.array([w]))[0])
        if resid > 1e-9 * (1.0 + self.coeff_scale):
            raise ValueError(f"point ({z}, {w}) is not on the covering: |F| = {resid:.3g}")
        return CoverPoint(z, complex(w), self)

    def points_over(self, z):
        return [self.point(z, w) for w, _ in fiber(self, z)]


def _default_label(m, exprs):
    k = len(exprs)
    out = "w" if k == 1 else f"w^{k}"
    for i in range(k - 1, -1, -1):
        c = sp.expand(exprs[i])
        if c == 0:
            continue
        mon = "" if i == 0 else ("w" if i == 1 else f"w^{i}")
        sign = " - " if c.could_extract_minus_sign() else " + "
        c = -c if sign == " - " else c
        cs = str(c).replace("**", "^")
        if isinstance(c, sp.Add):
            cs = f"({cs})"
        if mon:
            out += sign + (mon if c == 1 else f"{cs}*{mon}")
        else:
            out += sign + cs
    return out


def _parse_center(raw, m):
    if raw is None:
        return [0j] * m
    if len(raw) == 2 * m and all(isinstance(v, (int, float)) for v in raw):
        return [complex(raw[2 * j], raw[2 * j + 1]) for j in range(m)]
    if len(raw) == m:
        out = []
        for v in raw:
            if isinstance(v, str):
                out.append(complex(v.replace(" ", "").replace("i", "j")))
            else:
                out.append(complex(v))
        return out
    raise InvalidCovering(f"base_center must list {2 * m} reals or {m} complex strings")


# ---------------------------------------------------------------------------
# fiber operations


def fiber(cov, z):
    """Fiber over ``z`` as sorted ``[(w, multiplicity)]``."""
    z = _as_base(z, cov.m).reshape(1, cov.m)
    roots = cov.solve(z)[0]
    return cluster_roots(roots)


def _perturbation_direction(m):
    if m == 1:
        return np.array([1.0 + 0j])
    u = np.array([0.6, 0.8 * np.exp(0.7j)])
    return u / np.linalg.norm(u)


def local_multiplicity(cov, x):
    """Root multiplicity of ``x.fiber``, by counting roots near it at a
    perturbed base point (Rouche-stable for polynomial branching)."""
    k = cov.degree
    if k == 1:
        return 1
    eps = MULT_EPS * cov.base_radius
    delta = 10.0 * eps ** (1.0 / k)
    z0 = np.asarray(x.base, dtype=complex).reshape(1, -1)
    scale = max(1.0, abs(x.fiber))
    clusters = cluster_roots(cov.solve(z0)[0])
    own = min(clusters, key=lambda c: abs(c[0] - x.fiber))
    others = [abs(c - x.fiber) for c, _ in clusters if c != own[0]]
    if own[1] == 1 and (not others or min(others) > SIMPLE_GAP * scale):
        # clearly isolated simple root: no perturbation needed
        return 1
    if others:
        delta = min(delta, min(others) / 3.0)
    zp = np.asarray(x.base, dtype=complex) + eps * _perturbation_direction(cov.m)
    roots = cov.solve(zp.reshape(1, -1))[0]
    d = np.abs(roots - x.fiber)
    inside = int(np.sum(d < delta))
    if np.any((d >= delta) & (d < 2 * delta)):
        raise AmbiguousCluster(
            f"fiber roots near {x.fiber} straddle the cluster radius {delta:.3g}; "
            "discriminant nearly degenerate"
        )
    if inside < 1:
        raise AmbiguousCluster(f"no fiber root within {delta:.3g} of {x.fiber}")
    return inside


def degree(cov, check=True):
    """Sheet number k; optionally cross-checks the fiber count at 8 base points."""
    if check:
        for zi in cov.random_base_points(8, seed=cov.seed + 1):
            total = sum(mu for _, mu in fiber(cov, zi))
            if total != cov.degree:  # pragma: no cover - guarded by construction
                raise InvalidCovering(f"fiber count {total} != {cov.degree} at {zi}")
    return cov.degree


def trace(cov, f, z):
    """Fiber sum  sum_{(w, mu) in fiber(z)} mu * f(z, w)."""
    z = _as_base(z, cov.m).reshape(1, cov.m)
    total = 0j
    for w, mu in fiber(cov, z[0]):
        total += mu * complex(f.values(z, np.array([w]))[0])
    return total


def trace_values(cov, f, z):
    """Vectorized trace over raw roots at many base points (N, m)."""
    z = _as_base(z, cov.m).reshape(-1, cov.m)
    roots = jittered_roots(cov, z)[1]
    n, k = roots.shape
    zz = np.repeat(z, k, axis=0)
    return f.values(zz, roots.reshape(-1)).reshape(n, k).sum(axis=1)


def jittered_roots(cov, z):
    """Roots at ``z``; nodes sitting on the branch locus are nudged off it.

    Returns the (possibly moved) base points and the (N, k) roots.
    """
    z = np.array(_as_base(z, cov.m).reshape(-1, cov.m))
    roots = cov.solve(z)
    k = cov.degree
    if k == 1:
        return z, roots
    sep = _min_separation(roots)
    scale = np.maximum(1.0, np.max(np.abs(roots), axis=1))
    bad = sep < JITTER_TRIGGER * scale
    if np.any(bad):
        u = _perturbation_direction(cov.m)
        z[bad] = z[bad] + JITTER * cov.base_radius * u[None, :]
        roots[bad] = cov.solve(z[bad])
    return z, roots


def _min_separation(roots):
    k = roots.shape[1]
    if k == 1:
        return np.full(roots.shape[0], np.inf)
    d = np.abs(roots[:, :, None] - roots[:, None, :])
    d[:, np.arange(k), np.arange(k)] = np.inf
    return d.reshape(len(roots), -1).min(axis=1)


def continue_branch(cov, w, z_new):
    """Follow fiber values ``w`` (N,) to nearby base points ``z_new`` (N, m).

    Picks the nearest root at ``z_new``; raises BranchJump if the choice is
    ambiguous (two roots within 1e-7 of each other, or no clear nearest).
    """
    roots = cov.solve(z_new)
    k = cov.degree
    if k == 1:
        return roots[:, 0]
    d = np.abs(roots - w[:, None])
    order = np.argsort(d, axis=1)
    i0, i1 = order[:, 0], order[:, 1]
    rows = np.arange(len(w))
    d0, d1 = d[rows, i0], d[rows, i1]
    gap = np.abs(roots[rows, i0] - roots[rows, i1])
    bad = (gap < SEPARATION_MIN) | (d0 > 0.5 * d1)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise BranchJump(
            f"branch continuation ambiguous near base point {tuple(z_new[j])}: "
            f"root gap {gap[j]:.3g}, nearest {d0[j]:.3g}, next {d1[j]:.3g}"
        )
    return roots[rows, i0]


def branch_cluster(cov, a):
    """Raw-root evaluation of the fiber cluster through ``a`` at p(a)."""
    roots = cov.solve(np.asarray(a.base, dtype=complex).reshape(1, -1))[0]
    order = np.argsort(np.abs(roots - a.fiber))
    return roots[order[: a.mult]]


def power_sums_newton(coeffs, qmax):
    """Power sums p_1..p_qmax of the roots from the coefficients alone
    (Newton's identities); coeffs (N, k+1) monic, lowest degree first."""
    coeffs = np.asarray(coeffs, dtype=complex)
    n, k1 = coeffs.shape
    k = k1 - 1
    # elementary symmetric e_i = (-1)^i c_{k-i}
    e = [np.ones(n, complex)] + [(-1) ** i * coeffs[:, k - i] for i in range(1, k + 1)]
    p = [np.full(n, k, dtype=complex)]
    for q in range(1, qmax + 1):
        s = np.zeros(n, complex)
        for i in range(1, min(q - 1, k) + 1):
            s += (-1) ** (i - 1) * e[i] * p[q - i]
        if q <= k:
            s += (-1) ** (q - 1) * q * e[q]
        p.append(s)
    return np.stack(p, axis=1)


def volume_factor(m):
    """Density of the normalized volume form (dd^c||z||^2)^m w.r.t. Lebesgue."""
    return factorial(m) / np.pi**m
