"""Reference coverings, fields and centers used by the verification suite."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .covering import CoveringMap
from .fields import ScalarField

COVERING_SPECS = {
    "identity": dict(m=1, coeffs=["-z1"], label="w - z"),
    "sqrt": dict(m=1, coeffs=["-z1", "0"], label="w^2 - z"),
    "cube_root": dict(m=1, coeffs=["-z1", "0", "0"], label="w^3 - z"),
    "cusp": dict(m=1, coeffs=["-z1^2", "0", "0"], label="w^3 - z^2"),
    "fold": dict(m=1, coeffs=["-z1", "-3", "0"], label="w^3 - 3w - z", base_radius=3.0),
    "identity2": dict(m=2, coeffs=["-z1"], label="w - z1"),
    "quadric2": dict(m=2, coeffs=["-z1*z2", "0"], label="w^2 - z1*z2"),
}


@lru_cache(maxsize=None)
def covering(name) -> CoveringMap:
    spec = COVERING_SPECS[name]
    return CoveringMap.from_strings(
        spec["m"], spec["coeffs"], None, spec.get("base_radius", 2.0), spec["label"]
    )


@dataclass(frozen=True)
class CatalogField:
    text: str
    semi_harmonic: bool


# twelve fields on one-dimensional coverings: six branchwise harmonic, six not
FIELDS_M1 = (
    CatalogField("re(z)", True),
    CatalogField("im(z^2)", True),
    CatalogField("re(w)", True),
    CatalogField("im(w^3) + re(z*w)", True),
    CatalogField("re(w^2 + 3*z)", True),
    CatalogField("im(z*w^2) - 2*re(w)", True),
    CatalogField("abs2(z)", False),
    CatalogField("abs2(w)", False),
    CatalogField("re(z)^2", False),
    CatalogField("abs2(z)^2 + re(w)", False),
    CatalogField("re(w)^2 + im(z)", False),
    CatalogField("re(z)*abs2(w)", False),
)

FIELDS_M2 = (
    CatalogField("re(z1*z2)", True),
    CatalogField("re(z1) + im(z2^2)", True),
    CatalogField("re(w)", True),
    CatalogField("im(w*z1) + re(w^2)", True),
    CatalogField("abs2(z1)", False),
    CatalogField("abs2(w) + re(z2)", False),
)

# harmonic polynomials of degree <= 4 on the base, pulled back
HARMONIC_BASE_M1 = ("1", "re(z)", "im(z^2)", "re(z^3) - im(z)", "im(z^4) + 2*re(z^2)")
HARMONIC_BASE_M2 = ("re(z1*z2)", "im(z1^3) + re(z2)", "re(z1^2*z2^2)")

CLASSIFY_COVERINGS = ("identity", "sqrt", "cusp")


def field(text, m, label=None) -> ScalarField:
    return ScalarField.from_expr(text, m, label=label or text)


def centers(cov: CoveringMap):
    """Branch center over 0 and two regular centers."""
    if cov.m == 1:
        bases = [(0j,), (1 + 0j,), (0.9j,)]
    else:
        bases = [(0j, 0j), (0.8 + 0j, 0.6j), (-0.5 + 0.5j, 0.7 + 0j)]
    return [cov.point(b) for b in bases]
