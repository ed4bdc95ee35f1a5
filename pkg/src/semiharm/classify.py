"""Semi-harmonicity classifier, maximum-principle audit and Dirichlet
orthogonality test."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .covering import CoverPoint, branch_cluster
from .errors import SemiharmError
from .fields import ScalarField, laplacian_values
from .means import (
    _resolve,
    branch_sample,
    dirichlet_product,
    solid_mean,
    spherical_mean,
)
from .residue import harmonic_residue

DEFAULT_TOL = 1e-6
FAIL_FACTOR = 10.0
CLUSTER_SPREAD_MAX = 1e-6
LAPLACIAN_SAMPLES = 64

TESTS = ("sphericalMVP", "solidMVP", "nearHarmonic", "residue")


@dataclass
class CenterReport:
    base: tuple
    fiber: complex
    nu: int
    values: dict = field(default_factory=dict)  # test name -> worst deviation
    fd_laplacian_max: float = float("nan")
    refused: str = ""

    def passed(self, tol):
        return {k: bool(v < tol) for k, v in self.values.items()}

    def coherent(self, tol):
        """No test passes while another fails by the 10x margin."""
        vals = list(self.values.values())
        return not (any(v < tol for v in vals) and any(v > FAIL_FACTOR * tol for v in vals))


@dataclass
class ClassificationReport:
    label: str
    tol: float
    radii: list
    centers: list
    verdict: str = ""

    def __post_init__(self):
        if not self.verdict:
            self.verdict = _verdict(self.centers, self.tol)

    @property
    def coherent(self):
        return all(c.coherent(self.tol) for c in self.centers if not c.refused)

    def to_dict(self):
        return {
            "field": self.label,
            "tol": self.tol,
            "radii": list(self.radii),
            "verdict": self.verdict,
            "coherent": self.coherent,
            "centers": [
                {
                    "base": [complex(b) for b in c.base],
                    "fiber": complex(c.fiber),
                    "nu": c.nu,
                    "refused": c.refused or None,
                    **{k: float(v) for k, v in c.values.items()},
                    **{f"{k}_pass": p for k, p in c.passed(self.tol).items()},
                    "fdLaplacianMax": float(c.fd_laplacian_max),
                }
                for c in self.centers
            ],
        }


def _verdict(centers, tol):
    used = [c for c in centers if not c.refused]
    if not used:
        return "inconclusive"
    vals = [v for c in used for v in c.values.values()]
    if all(v < tol for v in vals):
        return "semi-harmonic"
    if any(v > FAIL_FACTOR * tol for v in vals):
        return "not semi-harmonic"
    return "inconclusive"


def cluster_spread(cov, f, a: CoverPoint):
    """Spread of f over the raw roots of the fiber cluster through a."""
    roots = branch_cluster(cov, a)
    z = np.repeat(np.asarray(a.base, dtype=complex)[None, :], len(roots), axis=0)
    vals = f.values(z, roots)
    if not np.all(np.isfinite(vals)):
        return float("inf")
    return float(np.max(np.abs(vals[:, None] - vals[None, :])))


def _fd_laplacian_max(cov, f, a, r, sizes):
    s = branch_sample(cov, a, _resolve("sphere", cov, a, r, sizes))
    z, w = s.flat
    idx = np.linspace(0, len(w) - 1, min(LAPLACIAN_SAMPLES, len(w))).astype(int)
    return float(np.max(np.abs(laplacian_values(cov, f, z[idx], w[idx]))))


def classify_center(cov, f, a, radii, sizes=None) -> CenterReport:
    rep = CenterReport(tuple(a.base), a.fiber, a.mult)
    spread = cluster_spread(cov, f, a)
    if spread > CLUSTER_SPREAD_MAX:
        rep.refused = f"field differs between sheets at the center (spread {spread:.3g})"
        return rep
    target = a.mult * f.eval(a)
    sph = [spherical_mean(cov, f, a, r, sizes) for r in radii]
    sol = [solid_mean(cov, f, a, r, sizes) for r in radii]
    res = [harmonic_residue(cov, f, a, r, sizes) for r in radii]
    rep.values = {
        "sphericalMVP": float(max(abs(v - target) for v in sph)),
        "solidMVP": float(max(abs(v - target) for v in sol)),
        "nearHarmonic": float(max(abs(p - q) for p, q in zip(sph, sol))),
        "residue": float(max(abs(v) for v in res)),
    }
    try:
        rep.fd_laplacian_max = _fd_laplacian_max(cov, f, a, max(radii), sizes)
    except SemiharmError:
        rep.fd_laplacian_max = float("nan")
    return rep


def classify(cov, f: ScalarField, centers, radii, tol=DEFAULT_TOL, sizes=None) -> ClassificationReport:
    """Run the four mean-value / residue tests at every center."""
    reports = [classify_center(cov, f, a, radii, sizes) for a in centers]
    return ClassificationReport(f.label, tol, list(radii), reports)


# ---------------------------------------------------------------------------
# maximum principle


@dataclass
class MaxPrincipleResult:
    status: str  # "pass" | "fail" | "hypothesis-violated"
    interior_max: float
    boundary_max: float
    witness: CoverPoint = None
    sub_mean_gap: float = float("nan")


def max_principle_audit(cov, f, region, grid=(16, 64), tol=1e-9) -> MaxPrincipleResult:
    """Audit the maximum principle on the pseudo-ball ``region = (a, r)``.

    ``grid`` is (radial, angular) resolution of the base polar grid. A strict
    interior maximum is a failure only if f satisfies the sub-mean-value
    inequality at the witness; otherwise the hypothesis is reported violated.
    """
    from .quadrature import RuleSizes

    a, r = region
    sizes = RuleSizes(grid[1], grid[0])
    ball = branch_sample(cov, a, _resolve("ball", cov, a, r, sizes))
    bnd = branch_sample(cov, a, _resolve("sphere", cov, a, r, sizes))
    zi, wi = ball.flat
    zb, wb = bnd.flat
    zi = np.vstack([np.asarray(a.base, dtype=complex)[None, :], zi])
    wi = np.concatenate([[a.fiber], wi])
    vi, vb = f.values(zi, wi), f.values(zb, wb)
    if max(np.max(np.abs(vi.imag)), np.max(np.abs(vb.imag))) > 1e-9:
        raise ValueError("maximum principle audit needs a real-valued field")
    vi, vb = vi.real, vb.real
    imax, bmax = float(np.max(vi)), float(np.max(vb))
    if imax <= bmax + tol or max(imax, bmax) - min(vi.min(), vb.min()) < tol:
        return MaxPrincipleResult("pass", imax, bmax)
    j = int(np.argmax(vi))
    witness = cov.point(zi[j], wi[j])
    dist = float(np.linalg.norm(zi[j] - np.asarray(a.base)))
    rho = 0.5 * (r - dist)
    gap = witness.mult * f.eval(witness) - solid_mean(cov, f, witness, rho, sizes)
    status = "fail" if gap.real <= tol else "hypothesis-violated"
    return MaxPrincipleResult(status, imax, bmax, witness, float(gap.real))


# ---------------------------------------------------------------------------
# Dirichlet orthogonality


def bump_field(m, center, r):
    """eta = ||p - center||^2 - r^2 inside the ball, 0 outside (Lipschitz)."""
    c = np.asarray(center, dtype=complex)

    def values(z, w):
        d2 = np.sum(np.abs(z - c[None, :]) ** 2, axis=1)
        return np.where(d2 < r * r, d2 - r * r, 0.0) + 0j

    def partials(z, w, dw):
        d = z - c[None, :]
        inside = (np.sum(np.abs(d) ** 2, axis=1) < r * r)[:, None]
        out = np.empty((len(w), 2 * m), dtype=complex)
        out[:, 0::2] = np.where(inside, 2 * d.real, 0.0)
        out[:, 1::2] = np.where(inside, 2 * d.imag, 0.0)
        return out

    return ScalarField(values, partials, label="bump", uses_w=False)


def orthogonality_test(cov, phi, a, r_support, rule=None) -> float:
    """|[phi, eta_{a,r}]| for the Lipschitz bump supported on the pseudo-ball."""
    eta = bump_field(cov.m, a.base, r_support)
    return float(abs(dirichlet_product(cov, phi, eta, a, r_support, rule)))
