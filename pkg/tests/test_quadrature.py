import math

import numpy as np
import pytest

from semiharm.quadrature import (
    RuleSizes,
    ball_rule,
    ball_volume,
    coarea_check,
    sphere_area,
    sphere_form_factor,
    sphere_rule,
    volume_form_factor,
)


def sphere_moment(alpha):
    """Independent oracle: integral of x^alpha over the unit sphere (Beta moments)."""
    if any(a % 2 for a in alpha):
        return 0.0
    b = [(a + 1) / 2 for a in alpha]
    return 2 * math.prod(math.gamma(x) for x in b) / math.gamma(sum(b))


def test_sphere_rule_examples():
    s1 = sphere_rule(1, None, 1.0)
    assert s1.integrate(np.ones(len(s1.weights))) == pytest.approx(2 * np.pi, rel=1e-14)
    assert s1.integrate(s1.points[:, 0].real ** 2) == pytest.approx(np.pi, rel=1e-14)
    s2 = sphere_rule(2, None, 1.0)
    assert s2.integrate(np.ones(len(s2.weights))) == pytest.approx(2 * np.pi**2, rel=1e-14)


def test_ball_rule_examples():
    b1 = ball_rule(1, None, 1.0)
    assert b1.weights.sum() == pytest.approx(np.pi, rel=1e-14)
    assert b1.integrate(np.abs(b1.points[:, 0]) ** 2) == pytest.approx(np.pi / 2, rel=1e-14)
    b2 = ball_rule(2, None, 1.0, 8, 16)
    assert b2.weights.sum() == pytest.approx(np.pi**2 / 2, rel=1e-14)


@pytest.mark.parametrize("m,n", [(1, 16), (2, 12)])
def test_moments_exact(m, n):
    s = sphere_rule(m, None, 1.0, n)
    b = ball_rule(m, None, 1.0, 6, n)
    for alpha in np.ndindex(*(7,) * (2 * m)):
        if sum(alpha) > 6:
            continue
        e = sphere_moment(alpha)
        assert abs(s.weights @ np.prod(s.nodes ** np.array(alpha), axis=1) - e) < 1e-12
        assert abs(b.weights @ np.prod(b.nodes ** np.array(alpha), axis=1) - e / (sum(alpha) + 2 * m)) < 1e-12


def test_translated_scaled_rules():
    c, r = [0.3 - 0.1j], 0.6
    s = sphere_rule(1, c, r, 64)
    assert np.allclose(np.abs(s.points[:, 0] - c[0]), r)
    assert s.integrate(np.abs(s.points[:, 0] - c[0]) ** 2) == pytest.approx(2 * np.pi * r**3)


def test_constants():
    assert sphere_area(1) == pytest.approx(2 * np.pi)
    assert sphere_area(2, 2.0) == pytest.approx(2 * np.pi**2 * 8)
    assert ball_volume(2) == pytest.approx(np.pi**2 / 2)
    for m in (1, 2):
        assert volume_form_factor(m) * ball_volume(m) == pytest.approx(1.0)
        assert sphere_form_factor(m, 0.5) * sphere_area(m, 0.5) == pytest.approx(1.0)


def test_coarea_examples():
    assert coarea_check(lambda z: np.ones(len(z)), 1, 1.0) < 1e-12
    assert coarea_check(lambda z: np.abs(z[:, 0]) ** 2, 1, 1.0) < 1e-10
    assert coarea_check(lambda z: z[:, 0].real ** 2, 2, 1.0, n=16) < 1e-8


def test_rule_sizes_defaults():
    assert RuleSizes.default(1) == RuleSizes(256, 64)
    assert RuleSizes.default(2).radial == 32
    with pytest.raises(ValueError):
        sphere_rule(1, None, 1.0, 4)
