import itertools
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, strategies as st

from natop.errors import ShapeMismatch
from natop.tensor import (
    BundleSpec,
    enumerate_multiindices,
    fiber_basis,
    fiber_dimension,
    jet_dimension,
    project,
)

BUNDLES = [
    BundleSpec.scalar(), BundleSpec.tangent(), BundleSpec.cotangent(), BundleSpec.forms(2),
    BundleSpec.multivectors(2), BundleSpec.symmetric(2), BundleSpec.symmetric(3),
    BundleSpec.vector_forms(1), BundleSpec.vector_forms(2), BundleSpec.tensor(1, 1),
    BundleSpec.tensor(2, 1), BundleSpec.trace_free_forms(1), BundleSpec.trace_free_forms(2),
]


def test_multiindex_order():
    assert enumerate_multiindices(1, 2) == [(0,), (1,), (2,)]
    assert enumerate_multiindices(2, 1) == [(0, 0), (1, 0), (0, 1)]
    assert len(enumerate_multiindices(3, 4)) == comb(7, 3)


def test_multiindex_count_matches_brute_force():
    for m in range(1, 4):
        for d in range(5):
            brute = [a for a in itertools.product(range(d + 1), repeat=m) if sum(a) <= d]
            assert sorted(enumerate_multiindices(m, d)) == sorted(brute)


@pytest.mark.parametrize("bundle, m, dim", [
    (BundleSpec.forms(2), 3, 3),
    (BundleSpec.trace_free_forms(1), 3, 8),
    (BundleSpec.trace_free_forms(2), 2, 0),
    (BundleSpec.symmetric(2), 3, 6),
    (BundleSpec.forms(3), 2, 0),
    (BundleSpec.vector_forms(2), 3, 9),
])
def test_fiber_dimensions(bundle, m, dim):
    assert fiber_dimension(bundle, m) == dim


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_trace_free_direct_sum_dimensions(m):
    for k in range(1, m + 1):
        assert fiber_dimension(BundleSpec.vector_forms(k), m) == (
            fiber_dimension(BundleSpec.trace_free_forms(k), m) + fiber_dimension(BundleSpec.forms(k - 1), m))


def test_projector_examples():
    assert project(BundleSpec.forms(2), [[1, 0], [0, 0]]) == (0,)
    ident = [[1 if i == j else 0 for j in range(3)] for i in range(3)]
    assert not any(project(BundleSpec.trace_free_forms(1), ident))
    sym = [[1, 2], [2, 5]]
    assert project(BundleSpec.symmetric(2), sym) == (1, 2, 5)


def test_projector_shape_error():
    with pytest.raises(ShapeMismatch):
        fiber_basis(BundleSpec.forms(1), 2).include([1, 2, 3])


@pytest.mark.parametrize("bundle", BUNDLES, ids=str)
@pytest.mark.parametrize("m", [2, 3])
def test_project_include_round_trip(bundle, m):
    fb = fiber_basis(bundle, m)
    for i in range(fb.dimension):
        e = [0] * fb.dimension
        e[i] = 1
        assert fb.project(fb.include(e)) == tuple(Fraction(v) for v in e)


@given(st.data())
def test_project_is_idempotent(data):
    bundle = data.draw(st.sampled_from(BUNDLES))
    m = data.draw(st.sampled_from([2, 3]))
    fb = fiber_basis(bundle, m)
    raw = {}
    for idx in itertools.product(range(m), repeat=bundle.rank):
        v = data.draw(st.integers(-3, 3))
        if v:
            raw[idx] = Fraction(v)
    once = fb.project(raw)
    assert fb.project(fb.include(once)) == once


@given(st.data())
def test_alternating_projection_is_sign_twisted(data):
    m = 3
    fb = fiber_basis(BundleSpec.forms(2), m)
    raw = {idx: Fraction(data.draw(st.integers(-4, 4))) for idx in itertools.product(range(m), repeat=2)}
    swapped = {(j, i): v for (i, j), v in raw.items()}
    assert fb.project(swapped) == tuple(-v for v in fb.project(raw))
    sym = fiber_basis(BundleSpec.symmetric(2), m)
    assert sym.project(swapped) == sym.project(raw)


@given(st.fractions(), st.fractions())
def test_rational_round_trip(a, c):
    big = Fraction(10**40 + 7, 3**50)
    assert (a * big + c) - c == a * big


def test_jet_dimension():
    assert jet_dimension(BundleSpec.cotangent(), 2, 1) == 6
    assert jet_dimension(BundleSpec.tangent(), 2, 1) == 6


def test_weights_are_weights():
    # every basis vector is an eigenvector of the diagonal generators
    for bundle in BUNDLES:
        fb = fiber_basis(bundle, 3)
        for i in range(3):
            rows = fb.generator(i, i)
            for c in range(fb.dimension):
                col = {r: row[c] for r, row in enumerate(rows) if row.get(c)}
                w = fb.weights[c][i]
                assert col == ({c: w} if w else {})
