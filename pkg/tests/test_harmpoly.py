from fractions import Fraction
from math import comb

import numpy as np
import pytest
import sympy as sp

from semiharm.catalog import covering
from semiharm.errors import ConfigError
from semiharm.harmpoly import (
    HomoPoly,
    harmonic_decompose,
    harmonic_dimension,
    laplacian,
    neumann_example_check,
    random_homopoly,
    sphere_integral_homogeneous,
)


def P(text, n=2):
    return HomoPoly.parse(text, n)


def test_laplacian_examples():
    assert laplacian(P("x1^2")) == HomoPoly(2, 0, {(0, 0): Fraction(2)})
    assert laplacian(P("x1^2 - x2^2")).is_zero()
    assert laplacian(P("x1^4")) == P("12*x1^2")


def test_decompose_x_squared():
    dec = harmonic_decompose(P("x1^2"))
    assert dec.H0 == Fraction(1, 2)
    assert dec.part(2) == P("1/2*x1^2 - 1/2*x2^2")
    assert dec.reconstruction == P("x1^2")


def test_decompose_x_squared_brute_force_oracle():
    # unknowns: H2 = a x^2 + b xy + c y^2 with a + c = 0, and H0 = d; x^2 = H2 + d (x^2 + y^2)
    a, b, c, d = sp.symbols("a b c d")
    sol = sp.solve([a + d - 1, b, c + d, a + c], [a, b, c, d])
    dec = harmonic_decompose(P("x1^2"))
    assert dec.H0 == Fraction(str(sol[d]))
    assert dec.part(2).coeffs[(2, 0)] == Fraction(str(sol[a]))


def test_decompose_harmonic_and_norm():
    H = P("x1^3 - 3*x1*x2^2")
    dec = harmonic_decompose(H)
    assert [(j, Q) for j, Q in dec.parts] == [(3, H)]
    dec = harmonic_decompose(P("x1^2 + x2^2 + x3^2 + x4^2", 4))
    assert dec.H0 == 1 and [j for j, _ in dec.parts] == [0]


def test_parse_and_render():
    q = P("x1^2*x2 - 3*x2^3")
    assert q.degree == 3 and q.coeffs[(0, 3)] == -3
    assert P(str(q)) == q
    with pytest.raises(ConfigError):
        P("x1^2 + x2")


def test_random_decompositions_exact():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.choice([2, 4]))
        Q = random_homopoly(rng, n, int(rng.integers(0, 9)))
        dec = harmonic_decompose(Q)
        assert dec.reconstruction == Q
        assert all(laplacian(H).is_zero() for _, H in dec.parts)
        assert all(H.euler_defect().is_zero() for _, H in dec.parts)


def test_harmonic_dimension():
    assert harmonic_dimension(2, 0) == 1
    assert all(harmonic_dimension(2, l) == 2 for l in range(1, 6))
    assert harmonic_dimension(4, 2) == comb(5, 2) - comb(3, 0) == 9


def test_sphere_integrals():
    si = sphere_integral_homogeneous(P("x1^2"), 1)
    assert si.formula.coef == Fraction(1, 2) and si.formula.power == 1
    assert si.quadrature == pytest.approx(np.pi, rel=1e-13)
    assert float(si.exact) == pytest.approx(si.quadrature, rel=1e-13)
    assert si.ratio == pytest.approx(2.0)
    assert sphere_integral_homogeneous(P("x1^3"), 1).quadrature == pytest.approx(0.0, abs=1e-12)
    one = HomoPoly(2, 0, {(0, 0): Fraction(1)})
    three = sphere_integral_homogeneous(one, 3, covering("cube_root"))
    assert three.quadrature == pytest.approx(3 * 2 * np.pi, rel=1e-13)
    assert float(three.formula) == pytest.approx(3 * np.pi)


def test_sphere_integral_m2_ratio():
    si = sphere_integral_homogeneous(P("x1^2*x3^2", 4), 2, covering("quadric2"))
    assert si.ratio == pytest.approx(4.0)
    assert si.quadrature == pytest.approx(float(si.exact), rel=1e-12)


@pytest.mark.parametrize("name", ["identity", "sqrt"])
@pytest.mark.parametrize("text", ["x1^2", "x1^2*x2^2", "x1^3 - 3*x1*x2^2"])
def test_neumann_example(name, text):
    rep = neumann_example_check(P(text), covering(name))
    assert rep.samples == 200
    assert rep.boundary_residual < 1e-6 and rep.boundary_residual_fd < 1e-6
    assert rep.constant_shift_residual < 1e-12
    assert rep.semi_harmonic_residual < 1e-4


def test_neumann_harmonic_cubic_potential():
    rep = neumann_example_check(P("x1^3 - 3*x1*x2^2"), covering("identity"))
    assert rep.psi == "(1/3*x1^3 - x1*x2^2)"
