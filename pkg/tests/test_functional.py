import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st
from sympy.functions.special.bsplines import bspline_basis

from natop.calculus import PolySection, exterior_derivative, pairing_bundle
from natop.classifier import OperatorScheme, classify
from natop.errors import SignatureMismatch
from natop.functional import (
    AlmostNaturalType,
    ElementaryAlmostNatural,
    all_types,
    evaluate_almost_natural,
    exactness_witness,
    integrate,
    lambda_functional,
    lie_commutation_residual,
    local_subsets,
    locality_predicate,
    psi_product,
    reconstruct,
    spline_lie_derivative,
    weak_locality_witness,
)
from natop.linalg import rank
from natop.probes import random_field
from natop.reps import invariant_scheme
from natop.splines import Grid, random_spline, tensor_bspline
from natop.tensor import BundleSpec

F0, L = BundleSpec.scalar(), BundleSpec.forms
M = 2
GRID = Grid(((0, 1), (0, 1)), (9, 9))
VOL_DUAL = pairing_bundle(L(M), M)
seeds = st.integers(0, 10**6)
# full tensor contraction: <d_1 ^ d_2, dx^1 ^ dx^2> = 2
VOL_PAIRING = 2


@pytest.fixture(scope="module")
def kernels():
    return {
        "g": classify((F0,), VOL_DUAL, 1, M).basis[0],       # g -> g * (vol^* (x) vol)
        "1": invariant_scheme(VOL_DUAL, M),                   # the arity-0 version
        "id": classify((F0,), F0, 0, M).basis[0],
        "fg": classify((F0, F0), F0, 0, M).basis[0],
        "fg_kernel": classify((F0, F0), VOL_DUAL, 0, M).basis[0],
        "const": invariant_scheme(F0, M),
    }


def _sympy_bspline_integral(d, knots, starts_a, starts_b):
    """Integral of the product of two 1-D B-splines, with sympy as the oracle."""
    t = sympy.symbols("t")
    ks = tuple(sympy.Rational(k) for k in knots)
    expr = bspline_basis(d, ks, starts_a, t) * bspline_basis(d, ks, starts_b, t)
    return Fraction(str(sympy.integrate(expr, (t, ks[0], ks[-1]))))


def _bump(bundle, starts, degree=2, coeff=1):
    return tensor_bspline(bundle, GRID, starts, degree, 0, coeff)


# -- integration ----------------------------------------------------------------


def test_single_bump_integral_matches_sympy():
    g = Grid(((0, 1),), (6,))
    b = tensor_bspline(L(1), g, (1,), 2, 0, 3)
    knots = [Fraction(k, 5) for k in range(6)]
    t = sympy.symbols("t")
    oracle = sympy.integrate(3 * bspline_basis(2, tuple(sympy.Rational(k) for k in knots), 1, t), (t, 0, 1))
    assert integrate(b) == Fraction(str(oracle)) == Fraction(3, 5)
    assert integrate(b.scale(Fraction(-2, 7))) == Fraction(-2, 7) * integrate(b)


@given(seeds)
def test_stokes(seed):
    rng = random.Random(seed)
    eta = random_spline(L(M - 1), GRID, 3, rng)
    d_eta = eta.map_cells(exterior_derivative, L(M), eta.smoothness - 1)
    assert integrate(d_eta) == 0
    X = random_field(M, 2, rng)
    w = random_spline(L(M), GRID, 3, rng)
    assert integrate(spline_lie_derivative(X, w)) == 0


def test_integrate_rejects_non_top_forms():
    with pytest.raises(Exception):
        integrate(random_spline(L(1), GRID, 2, random.Random(0)))


# -- integration functionals -------------------------------------------------------


def test_lambda_matches_sympy(kernels):
    knots = [Fraction(k, 8) for k in range(9)]
    g = _bump(F0, (1, 2))
    w = _bump(L(2), (2, 3), coeff=5)
    oracle = VOL_PAIRING * 5 * _sympy_bspline_integral(2, knots, 1, 2) * _sympy_bspline_integral(2, knots, 2, 3)
    assert lambda_functional(kernels["g"], [g, w]) == oracle
    assert lambda_functional(kernels["1"], [w]) == VOL_PAIRING * 5 * Fraction(1, 8) ** 2


def test_lambda_vanishes_on_disjoint_supports(kernels):
    assert lambda_functional(kernels["g"], [_bump(F0, (0, 0)), _bump(L(2), (5, 5))]) == 0


def test_lambda_signature_checks(kernels):
    with pytest.raises(SignatureMismatch):
        lambda_functional(kernels["g"], [_bump(L(2), (0, 0)), _bump(L(2), (0, 0))])


@given(seeds)
def test_functional_identity_for_a_first_order_kernel(seed):
    rng = random.Random(seed)
    D = classify((L(1),), pairing_bundle(F0, M), 1, M).basis[0]  # phi -> d(phi)
    phi, f = random_spline(L(1), GRID, 3, rng, max_terms=4), random_spline(F0, GRID, 3, rng, max_terms=4)
    X = random_field(M, 2, rng)
    total = lambda_functional(D, [spline_lie_derivative(X, phi), f]) + \
        lambda_functional(D, [phi, spline_lie_derivative(X, f)])
    assert total == 0


# -- almost natural operators --------------------------------------------------------


def _example_operator(kernels):
    """``D(f, g, w) = f * integral(g w)``."""
    return ElementaryAlmostNatural(AlmostNaturalType(((2, 3),), (1,)), (kernels["g"],), kernels["id"])


def test_example_operator_is_the_product(kernels):
    op = _example_operator(kernels)
    assert op.sources == (F0, F0, L(2))
    f, g, w = _bump(F0, (0, 1)), _bump(F0, (1, 2)), _bump(L(2), (2, 3), coeff=5)
    expected = f.scale(lambda_functional(kernels["g"], [g, w]))
    assert evaluate_almost_natural(op, [f, g, w]) == expected
    assert not expected.is_zero()


@given(seeds)
def test_example_operator_commutes_with_lie_derivatives(seed):
    rng = random.Random(seed)
    g_kernel = classify((F0,), VOL_DUAL, 1, M).basis[0]
    ident = classify((F0,), F0, 0, M).basis[0]
    op = ElementaryAlmostNatural(AlmostNaturalType(((2, 3),), (1,)), (g_kernel,), ident)
    args = [random_spline(E, GRID, 3, rng, max_terms=3) for E in (F0, F0, L(2))]
    assert lie_commutation_residual(op, random_field(M, 2, rng), args).is_zero()


def test_empty_local_block_gives_a_scaled_invariant(kernels):
    op = ElementaryAlmostNatural(AlmostNaturalType(((1,),), ()), (kernels["1"],), kernels["const"],
                                 sources=(L(2),))
    w = _bump(L(2), (0, 0), coeff=Fraction(64, VOL_PAIRING))
    assert evaluate_almost_natural(op, [w]) == PolySection.constant(F0, M, [1])


def test_non_natural_kernel_has_a_residual(kernels):
    # pairing replaced by a fixed coordinate derivative: translation invariant only
    bad_kernel = OperatorScheme((F0,), VOL_DUAL, 1, M, {(((1, 0),), (0,), 0): 1})
    op = ElementaryAlmostNatural(AlmostNaturalType(((2, 3),), (1,)), (bad_kernel,), kernels["id"])
    rng = random.Random(3)
    args = [random_spline(E, GRID, 3, rng, max_terms=3) for E in (F0, F0, L(2))]
    X = PolySection.from_components(BundleSpec.tangent(), M, [{(1, 0): 1}, {}])  # x^1 d_1
    assert not lie_commutation_residual(op, X, args).is_zero()


def test_type_validation():
    with pytest.raises(ValueError):
        AlmostNaturalType(((1, 2),), (2,))
    with pytest.raises(ValueError):
        AlmostNaturalType(((),), (1,))
    t = AlmostNaturalType(((3, 1), (2,)), ())
    assert t.blocks == ((1, 3), (2,))


# -- locality ---------------------------------------------------------------------


def test_locality_verdicts_of_the_example():
    t = AlmostNaturalType(((2, 3),), (1,))
    assert locality_predicate(t, {1, 2})
    assert not locality_predicate(t, {2, 3})
    assert locality_predicate(t, {1, 3})
    with pytest.raises(ValueError):
        locality_predicate(t, {4})


def test_locality_is_monotone_for_small_arity():
    for k in range(1, 7):
        for t in all_types(k):
            local = set(local_subsets(t))
            for mask in local:
                for i in range(k):
                    assert mask & ~(1 << i) in local


def test_local_subsets_agree_with_predicate():
    for t in all_types(4):
        local = set(local_subsets(t))
        for mask in range(16):
            I = {i + 1 for i in range(4) if mask >> i & 1}
            assert (mask in local) == locality_predicate(t, I)


def test_type_counts():
    # a set partition plus the choice of J among its blocks or empty
    assert sum(1 for _ in all_types(3)) == 5 + 10


def test_weak_locality_probe(kernels):
    two_integrals = ElementaryAlmostNatural(AlmostNaturalType(((1,), (2,)), ()), (kernels["1"], kernels["1"]),
                                            kernels["const"], sources=(L(2), L(2)))
    far = [_bump(L(2), (0, 0)), _bump(L(2), (5, 5))]
    assert weak_locality_witness(two_integrals, [far]) is not None
    op = _example_operator(kernels)
    disjoint = [_bump(F0, (0, 0)), _bump(F0, (3, 0)), _bump(L(2), (0, 5))]
    assert weak_locality_witness(op, [disjoint]) is None


def test_elementary_operators_of_different_type_are_independent(kernels):
    ops = [
        ElementaryAlmostNatural(AlmostNaturalType(((1, 2, 3),), ()), (kernels["fg_kernel"],), kernels["const"]),
        ElementaryAlmostNatural(AlmostNaturalType(((1, 3),), (2,)), (kernels["g"],), kernels["id"]),
        ElementaryAlmostNatural(AlmostNaturalType(((2, 3),), (1,)), (kernels["g"],), kernels["id"]),
        ElementaryAlmostNatural(AlmostNaturalType(((3,),), (1, 2)), (kernels["1"],), kernels["fg"],
                                sources=(F0, F0, L(2))),
    ]
    spots = {"A": (0, 0), "B": (5, 5)}
    points = [(Fraction(3, 16), Fraction(3, 16)), (Fraction(13, 16), Fraction(13, 16))]
    rows = []
    for op in ops:
        row = {}
        col = 0
        for a in spots.values():
            for b in spots.values():
                for c in spots.values():
                    out = evaluate_almost_natural(op, [_bump(F0, a), _bump(F0, b), _bump(L(2), c)])
                    for pt in points:
                        v = out.value_at(pt)[0]
                        if v:
                            row[col] = v
                        col += 1
        rows.append(row)
    assert rank(rows, 16) == 4


# -- the exactness witness ----------------------------------------------------------


@pytest.mark.parametrize("m", [1, 2])
def test_witness_of_the_reference_product(m):
    c, gs = exactness_witness(psi_product(m))
    assert c == 1 and all(g.is_zero() for g in gs)


def test_witness_of_a_derivative():
    h = random_spline(F0, GRID, 3, random.Random(4))
    f = h.derivative(0)
    c, gs = exactness_witness(f)
    assert c == 0
    assert reconstruct(c, gs) == f


@given(seeds, st.sampled_from([1, 2]))
def test_witness_round_trip(seed, m):
    g = Grid(((Fraction(-1, 2), 1),) * m, (7,) * m)
    f = random_spline(F0, g, 3, random.Random(seed))
    c, gs = exactness_witness(f)
    assert len(gs) == m
    assert reconstruct(c, gs) == f
    assert c == integrate(f.map_cells(lambda p: PolySection(L(m), m, p.coefficients), L(m)))
