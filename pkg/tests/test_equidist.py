import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from fqpatterns.equidist import (
    TwistedPoly,
    char_sum,
    char_sum_table,
    check_condition_v,
    check_condition_v_many,
    classify_family_empirical,
    classify_single,
    family_subgroup_test,
    projective_tuples,
    witness_modulus,
)
from fqpatterns.fpt_ring import FpPoly, irreducibles
from fqpatterns.fqfield import field
from fqpatterns.poly_structure import PolyY


@pytest.mark.parametrize("p", [2, 3, 5])
@pytest.mark.parametrize("text,verdict", [("y", "good"), ("y^{p+1}", "good"), ("y^p", "not_good"), ("y^p - y", "not_good")])
def test_classifier_examples(p, text, verdict):
    cert = classify_single(text, p)
    assert cert.verdict == verdict
    assert cert.check()


def test_good_certificate_reassembles():
    cert = classify_single("y^9 + y^3 + y^2", 3)
    assert cert.verdict == "good"
    assert cert.combination().poly.degree == 0 and cert.combination().poly[0] == cert.a


def test_obstruction_and_witness():
    cert = classify_single("y^2 - y", 2)
    assert cert.verdict == "not_good"
    assert cert.obstruction.poly == FpPoly(2, (1, 1))  # F + 1
    assert not check_condition_v("y^2 - y", cert.witness_modulus, 2).full


@pytest.mark.parametrize("p", [2, 3])
def test_frobenius_is_full_on_fields(p):
    # y^p is not good, yet the Frobenius is onto every F_p[t]_Q with Q irreducible
    for d in (1, 2, 3):
        for Q in irreducibles(p, d):
            assert check_condition_v(f"y^p", Q, p).full
    W = classify_single("y^p", p).witness_modulus
    assert not check_condition_v("y^p", W, p).full


@st.composite
def fp_poly_y(draw):
    p = draw(st.sampled_from([2, 3]))
    exps = draw(st.sets(st.integers(1, p**3), min_size=1, max_size=4))
    coeffs = {e: FpPoly(p, (draw(st.integers(1, p - 1)),)) for e in exps}
    return p, PolyY(p, coeffs)


@given(fp_poly_y())
def test_verdict_matches_subgroup_test(args):
    p, P = args
    cert = classify_single(P)
    Qs = [Q for d in (1, 2, 3) for Q in irreducibles(p, d)]
    if cert.verdict == "good":
        assert all(r.full for r in check_condition_v_many(P, Qs))
    elif cert.witness_modulus is not None:
        assert not check_condition_v(P, cert.witness_modulus).full


@given(st.sampled_from([2, 3, 5]), st.lists(st.integers(0, 4), min_size=2, max_size=5))
def test_witness_modulus_has_a_kernel(p, coeffs):
    g = FpPoly(p, coeffs)
    if g.degree < 1:
        return
    try:
        W = witness_modulus(g.monic())
    except ValueError:
        assume(False)  # witness degree past the search cap
    eta = TwistedPoly(g.monic())
    assert not check_condition_v(eta.as_polyy(), W).full


@given(st.sampled_from([4, 8, 9, 27]), st.lists(st.integers(0, 2), min_size=1, max_size=3), st.lists(st.integers(0, 2), min_size=1, max_size=3))
def test_twisted_composition_is_map_composition(q, a, b):
    F = field(q)
    eta = TwistedPoly.from_coeffs(F.p, [x % F.p for x in a])
    zeta = TwistedPoly.from_coeffs(F.p, [x % F.p for x in b])
    x = F.elements
    assert np.array_equal(eta.compose(zeta).apply(F, x), eta.apply(F, zeta.apply(F, x)))


@pytest.mark.parametrize("q", [9, 27])
def test_char_sums_vanish_exactly_when_subgroup_is_full(q):
    fam = ["y", "y^2"]
    T = char_sum_table(fam, q, 3)
    for s in [(1, 0), (0, 1), (1, 1), (2, 5), (0, 3)]:
        assert T[s] == pytest.approx(char_sum(fam, q, s, 3), abs=1e-12)
        rep = family_subgroup_test(fam, q, s, 3)
        if not rep.full:
            assert abs(T[s]) > 1e-9 or rep.rank < rep.dim


def test_coset_family_sums_have_modulus_one():
    q = 27
    rep = family_subgroup_test(["y^p - y"], q, (1,), 3)
    assert rep.index == 3
    sums = np.abs(char_sum_table(["y^p - y"], q, 3))
    assert np.isclose(sums, 1).sum() == 3  # the characters trivial on the image


def test_witness_degree_cap():
    # X has order 624 modulo a primitive quartic over F_5
    from fqpatterns.fpt_ring import find_irreducible

    g = next(h for h in irreducibles(5, 4) if h[0] != 0 and _order(h) == 624)
    with pytest.raises(ValueError):
        witness_modulus(g)
    cert = classify_single(TwistedPoly(g).as_polyy())
    assert cert.verdict == "not_good" and cert.witness_modulus is None


def _order(h):
    from fqpatterns.equidist import _order_of_x

    return _order_of_x(h)


def test_projective_tuples():
    tuples = list(projective_tuples(3, 2))
    assert len(tuples) == (3**2 - 1) // 2
    assert all(t[next(i for i, x in enumerate(t) if x)] == 1 for t in tuples)


def test_empirical_classifier():
    good = classify_family_empirical(["y", "y^2"], [9, 27], 3)
    assert good.verdict == "consistent-with-good"
    bad = classify_family_empirical(["y", "y^3"], [9, 27], 3)
    assert bad.verdict == "not-good" and bad.witness is not None
