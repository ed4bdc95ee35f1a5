import numpy as np
import pytest

from semiharm.catalog import covering
from semiharm.covering import (
    CoveringMap,
    cluster_roots,
    companion_roots,
    continue_branch,
    degree,
    durand_kerner,
    fiber,
    jittered_roots,
    local_multiplicity,
    power_sums_newton,
    trace,
)
from semiharm.errors import BranchJump, InvalidCovering
from semiharm.fields import ScalarField


def test_fiber_square_root_regular():
    fib = fiber(covering("sqrt"), 1.0)
    assert [mu for _, mu in fib] == [1, 1]
    assert sorted(w.real for w, _ in fib) == pytest.approx([-1.0, 1.0], abs=1e-12)


def test_fiber_square_root_branch_point():
    fib = fiber(covering("sqrt"), 0.0)
    assert len(fib) == 1
    w, mu = fib[0]
    assert mu == 2 and abs(w) < 1e-7


def test_fiber_fold_against_companion_oracle():
    cov = covering("fold")
    fib = fiber(cov, 2.0)
    # w^3 - 3w - 2 = (w + 1)^2 (w - 2)
    eig = companion_roots(np.array([[-2, -3, 0, 1]], dtype=complex))[0]
    for w, mu in fib:
        near = eig[np.abs(eig - w) < 1e-4]
        assert len(near) == mu
        assert abs(np.mean(near) - w) < 1e-9
    assert sorted(mu for _, mu in fib) == [1, 2]


def test_local_multiplicity_examples():
    sq, cu, q2 = covering("sqrt"), covering("cusp"), covering("quadric2")
    assert local_multiplicity(sq, sq.point(0)) == 2
    assert local_multiplicity(sq, sq.point(1, 1)) == 1
    assert local_multiplicity(cu, cu.point(0)) == 3
    assert local_multiplicity(q2, q2.point((0, 0))) == 2


def test_multiplicity_fold_regular_point():
    # distinct roots of w^3 - 3w - 1 are closer than the default cluster radius
    cov = covering("fold")
    assert [local_multiplicity(cov, cov.point(1.0, w)) for w, _ in fiber(cov, 1.0)] == [1, 1, 1]


@pytest.mark.parametrize("name,k", [("identity", 1), ("cube_root", 3), ("quadric2", 2)])
def test_degree(name, k):
    assert degree(covering(name)) == k


def test_trace_examples():
    sq = covering("sqrt")
    assert trace(sq, ScalarField.constant(1.0), 0.7) == pytest.approx(2.0)
    assert abs(trace(sq, ScalarField.from_expr("re(w)", 1), 0.5)) < 1e-12
    z = 0.3 - 0.4j
    assert trace(sq, ScalarField.from_expr("w^2", 1), z) == pytest.approx(2 * z, abs=1e-12)


def test_trace_against_newton_identities():
    cov = covering("cusp")
    f = ScalarField.from_expr("z1*w^2 + w^3 - 2*w", 1)
    for z in cov.random_base_points(10, seed=3):
        ps = power_sums_newton(cov.coefficients(z[None, :]), 3)[0]
        assert abs(trace(cov, f, z) - (z[0] * ps[2] + ps[3] - 2 * ps[1])) < 1e-8


def test_durand_kerner_matches_companion():
    rng = np.random.default_rng(0)
    c = np.hstack([rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4)), np.ones((5, 1))])
    roots, ok = durand_kerner(c)
    assert ok.all()
    eig = companion_roots(c)
    for r, e in zip(roots, eig):
        assert np.max(np.min(np.abs(r[:, None] - e[None, :]), axis=1)) < 1e-10


def test_cluster_roots_merges_numerical_duplicates():
    out = cluster_roots([1.0, 1.0 + 1e-9, -2.0])
    assert [(round(c.real, 6), n) for c, n in out] == [(-2.0, 1), (1.0, 2)]


def test_continue_branch_and_jump():
    cov = covering("sqrt")
    w = continue_branch(cov, np.array([1.0 + 0j]), np.array([[1.1 + 0j]]))
    assert w[0] == pytest.approx(np.sqrt(1.1))
    with pytest.raises(BranchJump):
        continue_branch(cov, np.array([1e-9 + 0j]), np.array([[1e-16 + 0j]]))


def test_jittered_roots_near_branch_point():
    cov = covering("sqrt")
    z, roots = jittered_roots(cov, np.array([[1e-14 + 0j], [0.5 + 0j]]))
    assert roots.shape == (2, 2)
    assert abs(z[0, 0]) > 1e-9 and z[1, 0] == 0.5
    assert abs(roots[0, 0] - roots[0, 1]) > 1e-5


def test_spec_round_trip():
    spec = {"m": 1, "fiber_degree": 2, "coeffs": {"w^0": "-z1", "w^1": "0"}, "base_center": [0, 0],
            "base_radius": 2.0}
    cov = CoveringMap.from_spec(spec)
    assert cov.degree == 2 and cov.m == 1
    again = CoveringMap.from_spec(cov.to_spec())
    assert again.degree == 2 and again.base_radius == 2.0


@pytest.mark.parametrize("spec", [
    {"m": 1, "fiber_degree": 2, "coeffs": {"w^0": "-z1", "w^2": "3"}},
    {"m": 1, "fiber_degree": 1, "coeffs": {"w^0": "-z1"}, "colour": "red"},
    {"m": 1, "coeffs": {"w^0": "-z1"}},
    {"m": 1, "fiber_degree": 1, "coeffs": {"x^0": "-z1"}},
])
def test_invalid_specs(spec):
    with pytest.raises(InvalidCovering):
        CoveringMap.from_spec(spec)


def test_point_rejects_off_covering_fiber():
    with pytest.raises(ValueError, match="not on the covering"):
        covering("sqrt").point(1.0, 3.0)
