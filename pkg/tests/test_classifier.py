import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from natop.brackets import schouten
from natop.calculus import PolySection, coordinate_field, lie_bracket, wedge
from natop.classifier import (
    ClassificationResult,
    OperatorScheme,
    assemble_system,
    classify,
    coordinate_partial_scheme,
    equivariance_residual,
    evaluate,
    lie_bracket_scheme,
    match_against,
    pretty_print,
    scheme_from_operator,
    symmetric_part,
    wedge_scheme,
    zero_scheme,
)
from natop.errors import ResourceCapExceeded, SignatureMismatch
from natop.probes import random_field, random_section
from natop.reps import order_bound
from natop.tensor import BundleSpec

from conftest import one, section, x

T, L, S = BundleSpec.tangent(), BundleSpec.forms, BundleSpec.symmetric
F0 = L(0)


@pytest.fixture(scope="module")
def bracket_result():
    return classify((T, T), T, 1, 2)


def _probe_residuals(D, rng, n, field_degree, input_degree):
    for _ in range(n):
        X = random_field(D.m, field_degree, rng)
        args = [random_section(E, D.m, input_degree, rng) for E in D.sources]
        yield equivariance_residual(D, X, args)


# -- evaluation ----------------------------------------------------------------


def test_evaluate_examples():
    m = 2
    dx1, dx2 = (section(L(1), m, [((i,), one(m))]) for i in (0, 1))
    assert evaluate(wedge_scheme(1, 1, m), [dx1, dx2]) == wedge(dx1, dx2)
    Y = coordinate_field(m, 1, x(m, 1))
    assert evaluate(lie_bracket_scheme(m), [coordinate_field(m, 0), Y]) == coordinate_field(m, 1)
    assert evaluate(zero_scheme((T, T), T, 1, m), [Y, Y]).is_zero()
    assert evaluate(lie_bracket_scheme(m), [coordinate_field(m, 0), Y], at_origin=True) == (0, 1)


def test_evaluate_rejects_wrong_bundles():
    with pytest.raises(SignatureMismatch):
        evaluate(lie_bracket_scheme(2), [PolySection.zero(L(1), 2), PolySection.zero(T, 2)])


def test_residuals():
    rng = random.Random(1)
    for res in _probe_residuals(wedge_scheme(1, 2, 3), rng, 5, 3, 2):
        assert res.is_zero()
    X = coordinate_field(2, 0, x(2, 1))
    Y = random_section(T, 2, 2, rng)
    assert not equivariance_residual(coordinate_partial_scheme(2), X, [Y]).is_zero()


@given(st.integers(0, 10**6))
def test_residual_is_linear_in_the_scheme(seed):
    rng = random.Random(seed)
    A, B = lie_bracket_scheme(2), scheme_from_operator(lambda a, b: lie_bracket(b, a), (T, T), T, 1, 2)
    X = random_field(2, 2, rng)
    args = [random_section(T, 2, 2, rng) for _ in range(2)]
    c = Fraction(rng.randint(-5, 5), 3)
    lhs = equivariance_residual(A + B.scale(c), X, args)
    assert lhs == equivariance_residual(A, X, args) + equivariance_residual(B, X, args).scale(c)


# -- the linear system -----------------------------------------------------------


def test_system_sizes():
    full = assemble_system((T, T), T, 1, 2, reduce_weights=False)
    assert len(full.unknowns) == 72 == full.full_unknown_count
    reduced = assemble_system((T, T), T, 1, 2)
    assert len(reduced.unknowns) < 72 and reduced.full_unknown_count == 72


def test_full_system_has_nullity_one():
    res = classify((T, T), T, 1, 2, reduce_weights=False)
    assert res.dimension == 1
    assert res.stats["unknowns"] - res.stats["rank"] == 1
    assert match_against(res, lie_bracket_scheme(2)) is not None


def test_identity_operator_on_functions():
    res = classify((F0,), F0, 0, 2)
    assert res.dimension == 1
    assert res.basis[0].coefficients == {(((0, 0),), (0,), 0): 1}


def test_resource_cap_is_a_refusal():
    with pytest.raises(ResourceCapExceeded):
        classify((T, T), T, 2, 3, max_unknowns=10)


def test_cap_from_environment(monkeypatch):
    monkeypatch.setenv("NATOP_MAX_UNKNOWNS", "5")
    with pytest.raises(ResourceCapExceeded):
        classify((T, T), T, 1, 2)


def test_parallel_assembly_matches_serial():
    a = assemble_system((S(2), S(2)), S(3), 1, 2)
    b = assemble_system((S(2), S(2)), S(3), 1, 2, n_jobs=2)
    assert a.unknowns == b.unknowns and a.rows == b.rows


# -- classification results ----------------------------------------------------------


def test_lie_bracket_is_unique(bracket_result):
    assert bracket_result.dimension == 1
    c = match_against(bracket_result, lie_bracket_scheme(2))
    assert c is not None and c[0] != 0


def test_match_examples(bracket_result):
    assert match_against(bracket_result, zero_scheme((T, T), T, 1, 2)) == [0]
    forms = classify((L(1), L(1)), L(3), 1, 3)
    with pytest.raises(SignatureMismatch):
        match_against(forms, wedge_scheme(1, 1, 3))


def test_non_natural_scheme_is_not_matched():
    res = classify((T,), T, 1, 2)
    assert res.dimension == 1  # the identity
    assert match_against(res, coordinate_partial_scheme(2)) is None


def test_schouten_is_unique():
    res = classify((S(2), S(2)), S(3), 1, 2)
    assert res.dimension == 1
    D = scheme_from_operator(schouten, (S(2), S(2)), S(3), 1, 2)
    assert match_against(res, D) is not None


def test_two_operators_raise_form_degree_by_one():
    res = classify((L(1), L(0)), L(2), 1, 3)
    assert res.dimension == 2


def test_determinism(bracket_result):
    again = classify((T, T), T, 1, 2)
    assert again.to_json() == bracket_result.to_json()


def test_json_round_trip(bracket_result):
    data = json.loads(bracket_result.to_json())
    assert set(data) == {"query", "dimension", "basis"}
    assert data["query"] == {"sources": ["T", "T"], "target": "T", "r": 1, "m": 2}
    back = ClassificationResult.from_dict(data)
    assert back.basis == bracket_result.basis
    term = data["basis"][0]["terms"][0]
    assert set(term) == {"alphas", "src_components", "tgt_component", "coeff"}


@pytest.mark.parametrize("sources, target, m", [
    ((T, T), T, 2), ((L(1), L(1)), L(2), 2), ((L(0), L(1)), L(2), 3), ((S(2), T), S(2), 2),
])
def test_soundness_with_probes_beyond_the_generators(sources, target, m):
    rng = random.Random(7)
    r = 1
    res = classify(sources, target, r, m)
    for D in res.basis:
        # fields of degree r+3 exceed the generators used to build the system
        for out in _probe_residuals(D, rng, 5, r + 3, r + 2):
            assert out.is_zero()


@pytest.mark.parametrize("sources, target, m", [((T, T), T, 2), ((L(0), L(0)), L(1), 2), ((L(1),), L(2), 2)])
def test_order_stability(sources, target, m):
    low = classify(sources, target, 1, m)
    high = classify(sources, target, 2, m)
    for D in low.basis:
        assert match_against(high, D) is not None


def test_dimension_is_bounded_and_permutation_invariant():
    res = classify((L(0), L(1)), L(2), 1, 2)
    swapped = classify((L(1), L(0)), L(2), 1, 2)
    assert res.dimension == swapped.dimension <= res.stats["unknowns"]


def test_symmetric_part_of_products():
    for k in (2, 3):
        full = classify((F0,) * k, F0, 2, 2)
        sym = symmetric_part(full)
        assert sym.dimension == 1 <= full.dimension

        def prod(*fs):
            out = fs[0]
            for f in fs[1:]:
                out = out.times_poly(f.component(0))
            return out

        assert match_against(sym, scheme_from_operator(prod, (F0,) * k, F0, 2, 2)) is not None


def test_order_bound_consistent_with_linear_operators_on_functions():
    # order 0 is all that occurs between trivial representations, and the bound agrees
    res = classify((F0,), F0, 2, 2)
    top = max(sum(a) for D in res.basis for key in D.coefficients for a in key[0])
    assert top <= order_bound(2, [0], [0]) == 0


# -- printing ----------------------------------------------------------------


def test_pretty_print(bracket_result):
    assert pretty_print(zero_scheme((T, T), T, 1, 2)) == "0"
    assert pretty_print(wedge_scheme(1, 1, 2)) == "D(X,Y)_{ij} = X_i Y_j − X_j Y_i"
    text = pretty_print(bracket_result.basis[0])
    assert text in ("D(X,Y)^i = X^j ∂_j Y^i − Y^j ∂_j X^i", "D(X,Y)^i = −X^j ∂_j Y^i + Y^j ∂_j X^i")


def test_scheme_validation():
    with pytest.raises(ValueError):
        OperatorScheme((T,), T, 0, 2, {(((1, 0),), (0,), 0): 1})
