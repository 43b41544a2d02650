import random

import pytest
from hypothesis import given, strategies as st

from natop.brackets import (
    compressed_fn,
    embed_trace,
    from_fiberwise_polynomial,
    frolicher_nijenhuis,
    identity_section,
    include_trace_free,
    schouten,
    schouten_nijenhuis,
    to_fiberwise_polynomial,
    trace_free_split,
    trace_part,
)
from natop.calculus import PolySection, coordinate_field, lie_bracket, lie_derivative, project_section, wedge
from natop.errors import BundleError
from natop.probes import random_field, random_section
from natop.tensor import BundleSpec
from natop.verify import bracket_catalogue, commutation_ok

from conftest import one, section, x

S, Lv, V, C = BundleSpec.symmetric, BundleSpec.multivectors, BundleSpec.vector_forms, BundleSpec.trace_free_forms
seeds = st.integers(0, 10**6)


# -- Schouten -----------------------------------------------------------------


def test_schouten_example():
    m = 2
    a = section(S(2), m, [((0, 0), one(m))])
    b = section(S(1), m, [((1,), x(m, 1))])
    assert to_fiberwise_polynomial(schouten(a, b)) == {(0, 0, 1, 1): 2}


def test_fiberwise_round_trip():
    s = random_section(S(3), 3, 2, random.Random(0))
    assert from_fiberwise_polynomial(to_fiberwise_polynomial(s), 3) == s


def test_schouten_rejects_functions():
    with pytest.raises(BundleError):
        schouten(PolySection.zero(S(1), 2), random_section(BundleSpec.scalar(), 2, 1, random.Random(0)))


def test_schouten_on_vector_fields_is_the_lie_bracket():
    rng = random.Random(11)
    for _ in range(50):
        X, Y = random_field(2, 2, rng), random_field(2, 2, rng)
        assert schouten(X, Y) == lie_bracket(X, Y)
        assert schouten(X, X).is_zero()


# -- Schouten-Nijenhuis -----------------------------------------------------------


def test_schouten_nijenhuis_examples():
    m = 3
    a = section(Lv(2), m, [((0, 1), one(m))])
    b = section(Lv(1), m, [((2,), x(m, 1))])
    assert schouten_nijenhuis(a, b) == -section(Lv(2), m, [((1, 2), one(m))])
    consts = [PolySection.constant(Lv(1), m, v) for v in ([1, 2, 0], [0, 1, -1], [3, 0, 1])]
    assert schouten_nijenhuis(wedge(consts[0], consts[1]), consts[2]).is_zero()


def test_schouten_nijenhuis_degree_one_is_the_lie_bracket():
    rng = random.Random(3)
    for _ in range(10):
        X, Y = random_field(3, 2, rng), random_field(3, 2, rng)
        assert schouten_nijenhuis(X, Y) == lie_bracket(X, Y)


@given(seeds, st.integers(1, 2), st.integers(1, 2), st.integers(1, 2))
def test_schouten_nijenhuis_graded_lie(seed, p, q, r):
    rng = random.Random(seed)
    m = 3
    a, b, c = (random_section(Lv(k), m, 1, rng) for k in (p, q, r))
    # [a,b] = -(-1)^{(p-1)(q-1)} [b,a]
    sign = -(-1) ** ((p - 1) * (q - 1))
    assert schouten_nijenhuis(a, b) == schouten_nijenhuis(b, a).scale(sign)
    if p + q + r - 2 > m:
        return
    br = schouten_nijenhuis
    # graded Jacobi with shifted degrees |a| = p - 1
    da, db, dc = p - 1, q - 1, r - 1
    total = (br(a, br(b, c)).scale((-1) ** (da * dc)) + br(b, br(c, a)).scale((-1) ** (db * da))
             + br(c, br(a, b)).scale((-1) ** (dc * db)))
    assert total.is_zero()


# -- Frolicher-Nijenhuis -------------------------------------------------------------


def test_frolicher_nijenhuis_degree_zero_is_the_lie_bracket():
    rng = random.Random(4)
    X, Y = random_field(2, 2, rng), random_field(2, 2, rng)
    assert frolicher_nijenhuis(X, Y) == lie_bracket(X, Y)


@pytest.mark.parametrize("m", [2, 3])
def test_frolicher_nijenhuis_of_identity_vanishes(m):
    I = identity_section(m)
    assert frolicher_nijenhuis(I, I).is_zero()


@given(seeds, st.integers(0, 2), st.integers(0, 1))
def test_frolicher_nijenhuis_graded_antisymmetry(seed, k, l):
    rng = random.Random(seed)
    m = 3
    K, L = random_section(V(k), m, 2, rng), random_section(V(l), m, 2, rng)
    assert frolicher_nijenhuis(K, L) == frolicher_nijenhuis(L, K).scale(-(-1) ** (k * l))


# -- trace-free split and compression -----------------------------------------------------


def test_identity_section():
    I = identity_section(3)
    assert lie_derivative(coordinate_field(3, 0, x(3, 1, 1)), I).is_zero()
    assert trace_part(I) == PolySection.constant(BundleSpec.scalar(), 3, [1])
    assert project_section(I, C(1)).is_zero()
    c, f = trace_free_split(I)
    assert c.is_zero() and f == PolySection.constant(BundleSpec.scalar(), 3, [1])


@pytest.mark.parametrize("m, k", [(2, 1), (2, 2), (3, 1), (3, 2), (3, 3)])
def test_split_recomposes(m, k):
    rng = random.Random(m * 10 + k)
    s = random_section(V(k), m, 2, rng)
    c, f = trace_free_split(s)
    assert include_trace_free(c) + embed_trace(f) == s
    c2, f2 = trace_free_split(include_trace_free(c))
    assert c2 == c and f2.is_zero()


def test_split_range_errors():
    with pytest.raises(BundleError):
        trace_free_split(random_section(V(0), 2, 1, random.Random(0)))


def test_compressed_fn_basics():
    rng = random.Random(8)
    K, L = random_section(C(1), 3, 2, rng), random_section(C(1), 3, 2, rng)
    assert compressed_fn(K, PolySection.zero(C(1), 3)).is_zero()
    out = compressed_fn(K, L)
    assert out.bundle == C(2)
    assert out == compressed_fn(L, K)  # graded antisymmetry with k = l = 1
    assert trace_part(include_trace_free(out)).is_zero()
    K2, L2 = random_section(C(1), 2, 2, rng), random_section(C(1), 2, 2, rng)
    assert compressed_fn(K2, L2).dimension == 0 and compressed_fn(K2, L2).is_zero()


# -- naturality of every bracket ------------------------------------------------------


@pytest.mark.parametrize("m", [2, 3])
def test_every_bracket_commutes_with_lie_derivatives(m):
    rng = random.Random(100 + m)
    for name, fn, A, B in bracket_catalogue(m):
        for _ in range(2):
            a, b = random_section(A, m, 2, rng), random_section(B, m, 2, rng)
            assert commutation_ok(fn, random_field(m, 3, rng), a, b), name
