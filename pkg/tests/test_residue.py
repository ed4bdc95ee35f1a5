import math

import pytest

from semiharm.catalog import covering
from semiharm.covering import CoveringMap
from semiharm.errors import DegenerateRadius, LogSingularity
from semiharm.fields import ScalarField
from semiharm.quadrature import RuleSizes
from semiharm.residue import harmonic_residue, residue_closed_form, residue_scan

ID = covering("identity")


def F(text, m=1):
    return ScalarField.from_expr(text, m)


def test_log_residue_is_minus_one():
    for r in (0.2, 0.3, 0.5, 0.9):
        assert harmonic_residue(ID, F("log(abs2(z))"), ID.point(0), r) == pytest.approx(-1.0, abs=1e-12)


def test_inverse_square_residue():
    for r in (0.2, 0.5):
        val = harmonic_residue(ID, F("1/abs2(z)"), ID.point(0), r)
        assert val == pytest.approx(1 / r**2, rel=1e-12)


def test_m2_inverse_norm_residue():
    i2 = covering("identity2")
    for r in (0.3, 0.5):
        val = harmonic_residue(i2, F("1/(abs2(z1) + abs2(z2))", 2), i2.point((0, 0)), r)
        assert val == pytest.approx(1.0, abs=1e-5)


def test_closed_form_examples():
    assert residue_closed_form(1, 1, 0, 0.5) == pytest.approx(-1.0)
    assert residue_closed_form(1, 0, 0, 0.37) == 0
    L = math.log(0.25)
    expected = (-1 + (1 + 1) * L) / (1 * 0.25) * 2 * 3
    assert residue_closed_form(2, 1, 2, 0.5, nu=2, h_a=3) == pytest.approx(expected)


def test_closed_form_cross_check_m2_branched():
    cov = CoveringMap.from_strings(2, ["-z1", "0"], label="w^2 - z1")
    a = cov.point((0, 0.3))
    assert a.mult == 2
    f = F("radial_singular(1, 2, [0, 0.3], 3)", 2)
    num = harmonic_residue(cov, f, a, 0.5, RuleSizes(48, 32))
    assert num == pytest.approx(residue_closed_form(2, 1, 2, 0.5, nu=2, h_a=3), abs=1e-5)


def test_closed_form_log_singularity():
    with pytest.raises(LogSingularity):
        residue_closed_form(1, 0.5, 0, 1.0)
    assert residue_closed_form(1, 1, 0, 1.0) == pytest.approx(-1.0)


@pytest.mark.parametrize("alpha", [0, 1])
@pytest.mark.parametrize("s", [0, 2])
def test_family_matches_closed_form(alpha, s):
    f = F(f"radial_singular({alpha}, {s}, 0.1)")
    a = ID.point(0.1)
    for r in (0.2, 0.3, 0.5):
        assert abs(harmonic_residue(ID, f, a, r) - residue_closed_form(1, alpha, s, r)) < 1e-8


def test_family_with_semi_harmonic_factor():
    f = F("radial_singular(1, 0, 0.2, re(z) + 2)")
    a = ID.point(0.2)
    assert harmonic_residue(ID, f, a, 0.3) == pytest.approx(residue_closed_form(1, 1, 0, 0.3, h_a=2.2), abs=1e-8)


def test_pullback_covariance_on_sqrt():
    sq = covering("sqrt")
    f = F("radial_singular(1, 2, 0)")
    up = harmonic_residue(sq, f, sq.point(0), 0.3)
    down = harmonic_residue(ID, f, ID.point(0), 0.3)
    assert up == pytest.approx(2 * down, abs=1e-5)


def test_residue_scan_verdicts():
    a = ID.point(0)
    assert residue_scan(ID, F("re(z)"), a, [0.2, 0.4]).semi_harmonic_candidate
    q = residue_scan(ID, F("abs2(z)"), a, [0.2, 0.4])
    assert not q.semi_harmonic_candidate
    # residue of |z|^2 is -r^2
    assert [v.real for v in q.values] == pytest.approx([-0.04, -0.16], abs=1e-12)
    lg = residue_scan(ID, F("log(abs2(z))"), a, [0.2, 0.3, 0.5])
    assert not lg.semi_harmonic_candidate and lg.spread < 1e-8


def test_degenerate_radius():
    with pytest.raises(DegenerateRadius):
        harmonic_residue(ID, F("re(z)"), ID.point(0), 0.0)
