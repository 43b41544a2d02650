import pytest
from hypothesis import given, strategies as st

from natop.cli import parse_bundle
from natop.errors import BundleError, BundleParseError
from natop.tensor import BundleSpec


@pytest.mark.parametrize("text, expected", [
    ("Lam^2 T* * T", BundleSpec.vector_forms(2)),
    ("Lam^2 T* ⊗ T", BundleSpec.vector_forms(2)),
    ("S^3 T", BundleSpec.symmetric(3)),
    ("T* * T", BundleSpec.tensor(0, 1) * BundleSpec.tangent()),
    ("C^1", BundleSpec.trace_free_forms(1)),
    ("Lam^0", BundleSpec.scalar()),
    ("T", BundleSpec.tangent()),
    ("Lam^2 T", BundleSpec.multivectors(2)),
])
def test_parse_examples(text, expected):
    assert parse_bundle(text) == expected


@pytest.mark.parametrize("text", ["Lam^2", "", "S^2", "T ** T", "T T", "X", "T *"])
def test_syntax_errors_carry_a_position(text):
    with pytest.raises(BundleParseError) as info:
        parse_bundle(text)
    assert info.value.position is not None


def test_semantic_errors():
    with pytest.raises(BundleError, match="C\\^0"):
        parse_bundle("C^0")
    with pytest.raises(BundleError):
        parse_bundle("C^1 * T")


term = st.sampled_from(["T", "T*", "S^2 T", "S^1 T*", "Lam^2 T*", "Lam^3 T", "Lam^0"])


@given(st.lists(term, min_size=1, max_size=3))
def test_canonical_printer_round_trips(terms):
    E = parse_bundle(" * ".join(terms))
    assert parse_bundle(str(E)) == E
    assert str(parse_bundle(str(E))) == str(E)
