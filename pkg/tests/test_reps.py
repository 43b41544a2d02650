import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from natop.brackets import identity_section
from natop.calculus import PolySection, lie_derivative
from natop.errors import DimensionMismatch, ShapeMismatch
from natop.probes import random_field
from natop.reps import Weight, casimir, gl_action, invariant_scheme, invariant_sections, order_bound
from natop.tensor import BundleSpec, fiber_basis


def _identity(m):
    return [[1 if i == j else 0 for j in range(m)] for i in range(m)]


def test_gl_action_of_identity_matrix():
    I = identity_section(2).coefficients[(0, 0)]
    assert not any(gl_action(_identity(2), I, BundleSpec.vector_forms(1)))
    v = [1, 2, 3]
    assert gl_action(_identity(2), v, BundleSpec.symmetric(2)) == (2, 4, 6)
    assert gl_action(_identity(3), v, BundleSpec.forms(2)) == (-2, -4, -6)


def test_gl_action_shape_errors():
    with pytest.raises(ShapeMismatch):
        gl_action([[1, 0]], [1, 0], BundleSpec.tangent())
    with pytest.raises(ShapeMismatch):
        gl_action(_identity(2), [1, 0, 0], BundleSpec.tangent())


def test_invariants_of_the_identity_bundle():
    for m in (2, 3):
        inv = invariant_sections(BundleSpec.vector_forms(1), m)
        assert inv.dimension == 1
        assert PolySection.constant(inv.bundle, m, inv.basis[0]) == identity_section(m)


def test_two_invariants_in_mixed_rank_four():
    assert invariant_sections(BundleSpec.tensor(2, 2), 3).dimension == 2


def test_top_forms_have_no_invariants():
    # the volume form is only SL-invariant
    assert invariant_sections(BundleSpec.forms(2), 2).dimension == 0


@pytest.mark.parametrize("bundle", [BundleSpec.vector_forms(1), BundleSpec.tensor(2, 2)], ids=str)
def test_invariants_are_killed_by_random_matrices(bundle):
    rng = random.Random(5)
    m = 3
    for v in invariant_sections(bundle, m).basis:
        for _ in range(20):
            A = [[Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(m)] for _ in range(m)]
            assert not any(gl_action(A, v, bundle))
        s = PolySection.constant(bundle, m, v)
        for _ in range(5):
            assert lie_derivative(random_field(m, 3, rng), s).is_zero()


def test_invariant_scheme_wraps_the_basis():
    D = invariant_scheme(BundleSpec.vector_forms(1), 2)
    assert D.arity == 0
    with pytest.raises(ValueError):
        invariant_scheme(BundleSpec.symmetric(2), 2)


def test_casimir_examples():
    assert casimir(3, [0]) == 0
    assert casimir(2, [2]) == 8
    assert casimir(3, [1]) == 5
    with pytest.raises(DimensionMismatch):
        casimir(2, [1, 0, 0])


def test_casimir_grows_along_positive_steps():
    for m in range(1, 5):
        for mu in itertools.product(range(6), repeat=m):
            for i in range(m - 1):
                step = list(mu)
                step[i] += 1
                assert casimir(m, step) - casimir(m, mu) == 2 * mu[i] + 1 + 2 * (m - 1 - i) > 0


def test_order_bound_examples():
    assert order_bound(2, [0], [0]) == 0
    assert order_bound(2, [1], [2]) == 1
    assert order_bound(3, [1, 1], [2, 1]) == 1
    assert order_bound(2, [2], [1]) == -1


@given(st.lists(st.integers(0, 3), min_size=1, max_size=3))
def test_order_bound_of_equal_weights_is_nonnegative(mu):
    assert order_bound(3, mu, mu) >= 0


def test_weights():
    w = Weight.of([3, 1, 0])
    assert w.dominant and not Weight.of([1, 2]).dominant
    assert (w + Weight.of(1)).coords == (4, 1, 0)
    assert fiber_basis(BundleSpec.tangent(), 2).weights == ((1, 0), (0, 1))
