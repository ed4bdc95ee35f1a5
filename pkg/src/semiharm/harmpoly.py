"""Exact homogeneous polynomials over Q and their harmonic decomposition.

``P = sum_j ||x||^{l-j} H_j`` with every ``H_j`` harmonic of degree j is found
by applying the Laplacian repeatedly and solving the resulting triangular
system from the bottom up, using

    Laplace(||x||^{2k} H_j) = 2k (2j + n + 2k - 2) ||x||^{2k-2} H_j    (H_j harmonic).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement

import numpy as np

from .errors import ConfigError
from .expr import parse_polynomial
from .fields import DefiningFunction, ScalarField, laplacian_values, normal_derivative, fd_partials
from .quadrature import sphere_rule


def _monomials(n, l):
    """All exponent tuples of total degree l in n variables (deterministic order)."""
    out = []
    for combo in combinations_with_replacement(range(n), l):
        e = [0] * n
        for i in combo:
            e[i] += 1
        out.append(tuple(e))
    return sorted(set(out), reverse=True)


class HomoPoly:
    """Homogeneous polynomial in n real variables with Fraction coefficients.

    Zero coefficients are never stored, so equality is coefficientwise.
    """

    __slots__ = ("n", "degree", "coeffs")

    def __init__(self, n, degree, coeffs=None):
        self.n = int(n)
        self.degree = int(degree)
        clean = {}
        for e, c in (coeffs or {}).items():
            e = tuple(int(k) for k in e)
            if len(e) != self.n:
                raise ValueError(f"exponent {e} has wrong length for n = {self.n}")
            if sum(e) != self.degree:
                raise ValueError(f"exponent {e} does not have total degree {self.degree}")
            c = Fraction(c)
            if c:
                clean[e] = clean.get(e, Fraction(0)) + c
        self.coeffs = {e: c for e, c in clean.items() if c}

    # -- construction -----------------------------------------------------

    @classmethod
    def parse(cls, text, n=None):
        n, coeffs = parse_polynomial(text, n)
        degs = {sum(e) for e in coeffs}
        if len(degs) > 1:
            raise ConfigError(f"polynomial {text!r} is not homogeneous (degrees {sorted(degs)})")
        return cls(n, degs.pop() if degs else 0, coeffs)

    @classmethod
    def zero(cls, n, degree):
        return cls(n, degree)

    @classmethod
    def norm_sq_power(cls, n, k):
        """||x||^{2k} expanded exactly."""
        out = cls(n, 0, {(0,) * n: 1})
        sq = cls(n, 2, {tuple(2 if i == j else 0 for i in range(n)): 1 for j in range(n)})
        for _ in range(k):
            out = out * sq
        return out

    # -- arithmetic -------------------------------------------------------

    def _compatible(self, other):
        if self.n != other.n:
            raise ValueError("variable counts differ")
        if self.degree != other.degree and self.coeffs and other.coeffs:
            raise ValueError("degrees differ")

    def __add__(self, other):
        self._compatible(other)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, Fraction(0)) + c
        deg = self.degree if self.coeffs else other.degree
        return HomoPoly(self.n, deg, out)

    def __neg__(self):
        return HomoPoly(self.n, self.degree, {e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, HomoPoly):
            if self.n != other.n:
                raise ValueError("variable counts differ")
            out = {}
            for e1, c1 in self.coeffs.items():
                for e2, c2 in other.coeffs.items():
                    e = tuple(a + b for a, b in zip(e1, e2))
                    out[e] = out.get(e, Fraction(0)) + c1 * c2
            return HomoPoly(self.n, self.degree + other.degree, out)
        c = Fraction(other)
        return HomoPoly(self.n, self.degree, {e: c * v for e, v in self.coeffs.items()})

    __rmul__ = __mul__

    def __truediv__(self, c):
        c = Fraction(c)
        return HomoPoly(self.n, self.degree, {e: v / c for e, v in self.coeffs.items()})

    def __eq__(self, other):
        if not isinstance(other, HomoPoly):
            return NotImplemented
        if not self.coeffs and not other.coeffs:
            return self.n == other.n
        return self.n == other.n and self.degree == other.degree and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, self.degree, frozenset(self.coeffs.items())))

    def is_zero(self):
        return not self.coeffs

    def diff(self, i):
        """Exact partial derivative in x_{i+1}."""
        out = {}
        for e, c in self.coeffs.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                out[tuple(f)] = out.get(tuple(f), Fraction(0)) + c * e[i]
        return HomoPoly(self.n, max(self.degree - 1, 0), out)

    def euler_defect(self):
        """sum_i x_i dP/dx_i - degree * P (zero for every homogeneous P)."""
        total = HomoPoly(self.n, self.degree)
        for i in range(self.n):
            xi = HomoPoly(self.n, 1, {tuple(1 if k == i else 0 for k in range(self.n)): 1})
            total = total + xi * self.diff(i)
        return total - self.degree * self

    # -- evaluation -------------------------------------------------------

    def evaluate(self, x):
        """Float evaluation at points x of shape (N, n)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(len(x))
        for e, c in self.coeffs.items():
            out += float(c) * np.prod(x ** np.array(e), axis=1)
        return out

    def evaluate_exact(self, x):
        total = Fraction(0)
        for e, c in self.coeffs.items():
            term = c
            for xi, k in zip(x, e):
                term *= Fraction(xi) ** k
            total += term
        return total

    def as_field(self, label=None):
        """Pullback to the covering through real base coordinates (x1, y1, x2, y2)."""
        if self.n % 2:
            raise ValueError("pullback needs an even number of real variables")
        grads = [self.diff(i) for i in range(self.n)]

        def real(z):
            z = np.asarray(z)
            x = np.empty((len(z), self.n))
            x[:, 0::2] = z.real
            x[:, 1::2] = z.imag
            return x

        def values(z, w):
            return self.evaluate(real(z)) + 0j

        def partials(z, w, dw):
            x = real(z)
            return np.stack([g.evaluate(x) for g in grads], axis=1) + 0j

        return ScalarField(values, partials, label=label or str(self), uses_w=False)

    def __repr__(self):
        return f"HomoPoly(n={self.n}, degree={self.degree}, {self})"

    def __str__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for e in sorted(self.coeffs, reverse=True):
            c = self.coeffs[e]
            mon = "*".join(f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            mag = abs(c)
            if mon:
                body = mon if mag == 1 else f"{mag}*{mon}"
            else:
                body = str(mag)
            parts.append(("-" if c < 0 else "+", body))
        head = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        return head + "".join(f" {s} {b}" for s, b in parts[1:])


def laplacian(P: HomoPoly) -> HomoPoly:
    """Exact Laplacian; the zero polynomial of degree l-2 (or 0) for l < 2."""
    out = HomoPoly(P.n, max(P.degree - 2, 0))
    if P.degree < 2:
        return out
    for i in range(P.n):
        out = out + P.diff(i).diff(i)
    return out


@dataclass
class HarmonicDecomposition:
    P: HomoPoly
    parts: list  # (j, H_j) with H_j != 0, j descending

    @property
    def reconstruction(self):
        n, l = self.P.n, self.P.degree
        total = HomoPoly(n, l)
        for j, H in self.parts:
            total = total + HomoPoly.norm_sq_power(n, (l - j) // 2) * H
        return total

    def part(self, j):
        for jj, H in self.parts:
            if jj == j:
                return H
        return HomoPoly(self.P.n, j)

    @property
    def H0(self) -> Fraction:
        return self.part(0).coeffs.get((0,) * self.P.n, Fraction(0))


def _delta_coeff(n, j, k, i):
    """Laplace^i (||x||^{2k} H_j) = coeff * ||x||^{2(k-i)} H_j for harmonic H_j."""
    if i > k:
        return Fraction(0)
    c = Fraction(1)
    for t in range(i):
        kk = k - t
        c *= 2 * kk * (2 * j + n + 2 * kk - 2)
    return c


def harmonic_decompose(P: HomoPoly) -> HarmonicDecomposition:
    """Exact decomposition P = sum_k ||x||^{2k} H_{l-2k}."""
    n, l = P.n, P.degree
    K = l // 2
    Q = [P]
    for _ in range(K):
        Q.append(laplacian(Q[-1]))
    H = {}
    for i in range(K, -1, -1):
        j = l - 2 * i
        rhs = Q[i]
        for k in range(i + 1, K + 1):
            jk = l - 2 * k
            c = _delta_coeff(n, jk, k, i)
            rhs = rhs - c * (HomoPoly.norm_sq_power(n, k - i) * H[jk])
        H[j] = rhs / _delta_coeff(n, j, i, i)
    parts = [(j, H[j]) for j in sorted(H, reverse=True) if not H[j].is_zero()]
    return HarmonicDecomposition(P, parts)


def harmonic_dimension(n, l):
    """Dimension of degree-l spherical harmonics in n variables."""
    if l < 0:
        return 0
    return math.comb(n + l - 1, l) - (math.comb(n + l - 3, l - 2) if l >= 2 else 0)


def random_homopoly(rng, n, l, density=0.6, bound=9):
    """Random homogeneous P with small rational coefficients."""
    coeffs = {}
    for e in _monomials(n, l):
        if rng.random() < density:
            num = int(rng.integers(-bound, bound + 1))
            den = int(rng.integers(1, bound + 1))
            coeffs[e] = Fraction(num, den)
    if not coeffs:
        coeffs[_monomials(n, l)[0]] = Fraction(1)
    return HomoPoly(n, l, coeffs)


# ---------------------------------------------------------------------------
# sphere integrals


@dataclass(frozen=True)
class PiMultiple:
    """Exact value coef * pi^power."""

    coef: Fraction
    power: int

    def __float__(self):
        return float(self.coef) * math.pi**self.power

    def __str__(self):
        if self.coef == 0:
            return "0"
        return f"{self.coef}*pi^{self.power}"


@dataclass
class SphereIntegral:
    """Printed formula s*H0*|B| next to the exact value s*H0*|S| and quadrature."""

    formula: PiMultiple
    exact: PiMultiple
    quadrature: float
    ratio: float  # exact / formula; 2m when H0 != 0


def sphere_integral_homogeneous(P: HomoPoly, s: int, cov=None, n_nodes=None) -> SphereIntegral:
    """Integral of the pulled-back P over the unit sphere of an s-sheeted covering.

    The quadrature side sums over fiber points of ``cov`` when given, otherwise
    multiplies the base sphere integral by ``s``.
    """
    if P.n % 2:
        raise ValueError("P must live in an even number of real variables")
    m = P.n // 2
    if P.degree % 2:
        zero = PiMultiple(Fraction(0), m)
        formula = exact = zero
    else:
        H0 = harmonic_decompose(P).H0
        formula = PiMultiple(s * H0 / math.factorial(m), m)
        exact = PiMultiple(s * H0 * 2 / math.factorial(m - 1), m)
    n_nodes = n_nodes or (max(64, 4 * P.degree + 8) if m == 1 else max(24, 2 * P.degree + 8))
    rule = sphere_rule(m, None, 1.0, n_nodes)
    if cov is None:
        quad = s * float(np.sum(rule.weights * P.evaluate(rule.nodes)))
    else:
        from .covering import trace_values

        quad = float(np.sum(rule.weights * trace_values(cov, P.as_field(), rule.points).real))
    ratio = float(exact) / float(formula) if formula.coef else float("nan")
    return SphereIntegral(formula, exact, quad, ratio)


# ---------------------------------------------------------------------------
# Neumann example


@dataclass
class NeumannReport:
    P: str
    covering: str
    samples: int
    boundary_residual: float
    boundary_residual_fd: float
    semi_harmonic_residual: float
    constant_shift_residual: float
    psi: str


def neumann_potential(P: HomoPoly, decomposition=None) -> list:
    """psi = sum_{j >= 1} H_j / j (homogeneous pieces kept separately)."""
    dec = harmonic_decompose(P) if decomposition is None else decomposition
    return [(j, H / j) for j, H in dec.parts if j >= 1]


def _sum_field(pieces, n, shift=0.0, label="psi"):
    fields = [H.as_field() for _, H in pieces]
    m = n // 2

    def values(z, w):
        out = np.full(len(w), complex(shift))
        for f in fields:
            out = out + f.values(z, w)
        return out

    def partials(z, w, dw):
        out = np.zeros((len(w), 2 * m), dtype=complex)
        for f in fields:
            out = out + f.partials(z, w, dw)
        return out

    return ScalarField(values, partials, label=label, uses_w=False)


def _boundary_samples(m, count, seed):
    if m == 1:
        th = 2 * np.pi * (np.arange(count) + 0.5) / count
        return np.exp(1j * th)[:, None]
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g[:, 0::2] + 1j * g[:, 1::2]


def neumann_example_check(P: HomoPoly, cov, n_samples=200, seed=20070703) -> NeumannReport:
    """Check psi = sum H_j / j against d_nu psi = P - H0 on the unit sphere of
    an s-sheeted covering, plus branchwise harmonicity and constant shifts."""
    if P.n != 2 * cov.m:
        raise ValueError(f"P has {P.n} variables, covering needs {2 * cov.m}")
    dec = harmonic_decompose(P)
    pieces = neumann_potential(P, dec)
    psi = _sum_field(pieces, P.n)
    psi_shift = _sum_field(pieces, P.n, shift=7.0)
    rho = DefiningFunction.sphere(cov.m)
    H0 = float(dec.H0)

    k = cov.degree
    base = _boundary_samples(cov.m, -(-n_samples // k), seed)
    pts = [cov.point(z, w) for z in base for w, _ in _fiber_all(cov, z)][:n_samples]
    resid = resid_fd = shift = 0.0
    psi_fd = psi.without_partials()
    for x in pts:
        xr = np.empty(P.n)
        xr[0::2], xr[1::2] = x.z.real, x.z.imag
        target = P.evaluate(xr[None, :])[0] - H0
        dn = normal_derivative(psi, rho, x)
        resid = max(resid, abs(dn - target))
        dn_fd = np.dot(fd_partials(cov, psi_fd, x.z[None, :], np.array([x.fiber]))[0], 2 * xr) / 2.0
        resid_fd = max(resid_fd, abs(dn_fd - target))
        shift = max(shift, abs(normal_derivative(psi_shift, rho, x) - dn))
    # branchwise Laplacian at interior points
    inner = 0.6 * _boundary_samples(cov.m, 32, seed + 1)
    z = np.repeat(inner, k, axis=0)
    w = cov.solve(inner).reshape(-1)
    lap = float(np.max(np.abs(laplacian_values(cov, psi, z, w))))
    return NeumannReport(
        str(P), cov.label, len(pts), float(resid), float(resid_fd), lap, float(shift),
        " + ".join(f"({H})" for _, H in pieces) or "0",
    )


def _fiber_all(cov, z):
    from .covering import fiber

    out = []
    for w, mu in fiber(cov, z):
        out.extend([(w, 1)] * mu)
    return out
