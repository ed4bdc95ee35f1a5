import numpy as np
import pytest

from semiharm.catalog import covering
from semiharm.errors import RegionEscapesDomain
from semiharm.fields import ScalarField
from semiharm.means import (
    branch_sample,
    dirichlet_product,
    greens_residual,
    greens_sides,
    make_rule,
    mean_gap_identity,
    mean_limit_order,
    mean_value_test,
    radius_field,
    solid_mean,
    spherical_mean,
    stokes_constant,
)
from semiharm.quadrature import sphere_area

ID, SQ, CU, FOLD = covering("identity"), covering("sqrt"), covering("cusp"), covering("fold")
ONE = ScalarField.constant(1.0)


def F(text, m=1):
    return ScalarField.from_expr(text, m)


def test_solid_mean_examples():
    assert solid_mean(ID, ONE, ID.point(0.2), 0.5) == pytest.approx(1.0, abs=1e-12)
    assert solid_mean(SQ, ONE, SQ.point(0), 0.5) == pytest.approx(2.0, abs=1e-12)
    for r in (0.3, 1.0):
        assert solid_mean(ID, F("abs2(z)"), ID.point(0), r) == pytest.approx(r * r / 2, abs=1e-12)


def test_spherical_mean_examples():
    a = ID.point(0)
    assert spherical_mean(ID, ONE, a, 0.4) == pytest.approx(1.0, abs=1e-12)
    assert abs(spherical_mean(ID, F("re(z)"), a, 0.4)) < 1e-14
    assert spherical_mean(ID, F("abs2(z)"), a, 0.4) == pytest.approx(0.16, abs=1e-12)


def test_branch_filter_restricts_to_branches_through_a():
    # over z = 1 the fold covering has three sheets; a pseudo-ball through one sheet has degree 1
    x = FOLD.point(1.0)
    assert solid_mean(FOLD, ONE, x, 0.3) == pytest.approx(1.0, abs=1e-12)
    # at the double point over z = 2 the pseudo-ball carries two sheets
    b = FOLD.point(2.0, -1.0)
    assert b.mult == 2
    assert spherical_mean(FOLD, ONE, b, 0.3) == pytest.approx(2.0, abs=1e-10)


def test_region_escapes_domain():
    with pytest.raises(RegionEscapesDomain):
        solid_mean(ID, ONE, ID.point(1.5), 0.8)


def test_mean_value_test_examples():
    ok = mean_value_test(SQ, F("re(w)"), SQ.point(0), [0.1, 0.2, 0.4], 1e-9)
    assert ok.passed and abs(ok.target) < 1e-12
    bad = mean_value_test(ID, F("abs2(z)"), ID.point(0), [0.1, 0.2, 0.4], 1e-9)
    assert not bad.passed
    c = 0.3 + 0.4j
    h = mean_value_test(ID, F("re(z)"), ID.point(c), [0.2, 0.5], 1e-9)
    assert h.passed and h.target == pytest.approx(0.3)


def test_dirichlet_product_examples():
    a = ID.point(0)
    assert abs(dirichlet_product(ID, ScalarField.constant(3.0), F("abs2(z)"), a, 0.7)) < 1e-15
    for r in (0.5, 1.0):
        val = dirichlet_product(ID, F("abs2(z)"), radius_field(1, a.base), a, r)
        assert val == pytest.approx(r**4 / 2, abs=1e-12)
    c = ID.point(0.2 - 0.1j)
    assert abs(dirichlet_product(ID, F("re(z)"), radius_field(1, c.base), c, 0.6)) < 1e-9


def test_mean_gap_identity_examples(small2):
    rep = mean_gap_identity(ID, F("abs2(z)"), ID.point(0), 1.0)
    assert rep.gap == pytest.approx(0.5, abs=1e-12)
    assert rep.dirichlet_term == pytest.approx(0.5, abs=1e-12)
    assert rep.identity_residual < 1e-9
    h = mean_gap_identity(ID, F("re(z^3)"), ID.point(0.1), 0.8)
    assert abs(h.gap) < 1e-12 and abs(h.dirichlet_term) < 1e-12
    i2 = covering("identity2")
    assert mean_gap_identity(i2, F("re(z1^2)", 2), i2.point((0, 0)), 0.7, small2).identity_residual < 1e-8


def test_mean_gap_identity_at_branch_point():
    for cov in (SQ, CU):
        rep = mean_gap_identity(cov, F("abs2(w) + re(z)*im(w)"), cov.point(0), 0.5)
        assert rep.identity_residual < 1e-7
        assert rep.nu == cov.degree


def test_greens_identity_examples():
    a = ID.point(0)
    assert greens_residual(ID, ONE, F("re(z^2)"), a, 1.0) < 1e-7
    assert greens_residual(ID, ONE, F("abs2(z)"), a, 1.0) < 1e-7
    assert greens_residual(ID, F("re(z)"), F("abs2(z)"), a, 1.0) < 1e-7
    rep = greens_sides(SQ, F("abs2(w) + re(z)"), F("re(z)^2 + re(w)*abs2(z)"), SQ.point(0), 1.0)
    assert abs(rep.dirichlet) > 1e-3  # non-trivial pair
    assert rep.residual < 1e-7


def test_stokes_constant_is_one_over_twice_sphere_area():
    for cov in (ID, SQ):
        c = stokes_constant(cov, radius_field(1, (0j,)), cov.point(0), 0.8)
        assert c.real * 2 * sphere_area(1) == pytest.approx(1.0, abs=1e-9)


def test_mean_limit_order():
    order, errs = mean_limit_order(SQ, F("abs2(w) + re(w)"), SQ.point(0))
    assert order >= 1.0 - 1e-9
    # |w|^2 = |z|: both errors halve with the radius
    assert errs["spherical"] == pytest.approx([2.0**-k for k in range(1, 7)], rel=1e-9)
    assert errs["solid"] == pytest.approx([2.0**-k * 2 / 3 for k in range(1, 7)], rel=1e-9)


def test_branch_sample_shapes():
    rule = make_rule("sphere", SQ, SQ.point(0), 0.5)
    s = branch_sample(SQ, SQ.point(0), rule)
    z, w = s.flat
    assert s.w.shape[1] == 2
    assert np.allclose(w**2, z[:, 0], atol=1e-12)
