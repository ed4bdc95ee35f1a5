import pytest

from semiharm import catalog
from semiharm.catalog import covering
from semiharm.classify import (
    FAIL_FACTOR,
    CenterReport,
    classify,
    cluster_spread,
    max_principle_audit,
    orthogonality_test,
)
from semiharm.fields import ScalarField
from semiharm.means import dirichlet_product, radius_field

ID, SQ = covering("identity"), covering("sqrt")


def F(text, m=1):
    return ScalarField.from_expr(text, m)


def test_classify_examples(small2):
    assert classify(SQ, F("re(w)"), catalog.centers(SQ), [0.1, 0.2]).verdict == "semi-harmonic"
    rep = classify(ID, F("abs2(z)"), catalog.centers(ID), [0.1, 0.2])
    assert rep.verdict == "not semi-harmonic"
    # solid mean deviation is r^2 / 2 at the largest radius
    assert rep.centers[0].values["solidMVP"] == pytest.approx(0.02, abs=1e-12)
    i2 = covering("identity2")
    assert classify(i2, F("re(z1*z2)", 2), catalog.centers(i2), [0.2], sizes=small2).verdict == "semi-harmonic"


def test_verdict_bands():
    def rep(vals):
        c = CenterReport((0j,), 0j, 1, dict(zip(["a", "b"], vals)))
        from semiharm.classify import _verdict

        return _verdict([c], 1e-6)

    assert rep([1e-8, 1e-9]) == "semi-harmonic"
    assert rep([1e-8, 5e-6]) == "inconclusive"
    assert rep([1e-8, FAIL_FACTOR * 1e-6 * 1.01]) == "not semi-harmonic"
    c = CenterReport((0j,), 0j, 1, {"a": 1e-9, "b": 1e-3})
    assert not c.coherent(1e-6)


def test_refuses_sheet_discontinuous_center():
    assert cluster_spread(SQ, F("re(w) + 1"), SQ.point(0)) < 1e-6
    step = ScalarField(lambda z, w: (w.real > 0) * 1.0 + 0j, label="step")
    assert cluster_spread(SQ, step, SQ.point(0)) == 1.0
    rep = classify(SQ, step, [SQ.point(0)], [0.1])
    assert rep.centers[0].refused
    assert rep.verdict == "inconclusive"


def test_report_dict():
    d = classify(ID, F("re(z)"), [ID.point(0.2)], [0.1]).to_dict()
    assert d["verdict"] == "semi-harmonic" and d["coherent"]
    assert set(d["centers"][0]) >= {"sphericalMVP", "solidMVP", "nearHarmonic", "residue", "fdLaplacianMax"}


def test_max_principle_examples():
    assert max_principle_audit(ID, F("re(z)"), (ID.point(0), 1.0)).status == "pass"
    sup = max_principle_audit(ID, F("-abs2(z)"), (ID.point(0), 1.0))
    assert sup.status == "hypothesis-violated" and sup.witness is not None
    assert max_principle_audit(SQ, F("re(w)"), (SQ.point(0), 1.0)).status == "pass"


def test_orthogonality_examples():
    a = ID.point(0.3)
    assert orthogonality_test(ID, F("re(z)"), a, 0.5) < 1e-8
    assert orthogonality_test(ID, ScalarField.constant(2.0), a, 0.5) == 0
    z0 = ID.point(0)
    direct = dirichlet_product(ID, F("abs2(z)"), radius_field(1, z0.base), z0, 0.8)
    assert orthogonality_test(ID, F("abs2(z)"), z0, 0.8) == pytest.approx(abs(direct), rel=1e-12)
    assert abs(direct) == pytest.approx(0.8**4 / 2, rel=1e-12)
