"""Exact computations with natural multilinear differential operators on R^m."""
from natop.brackets import compressed_fn, frolicher_nijenhuis, lie_bracket, schouten, schouten_nijenhuis
from natop.calculus import PolySection, lie_derivative
from natop.classifier import ClassificationResult, OperatorScheme, classify, match_against, pretty_print
from natop.errors import (
    BundleError,
    BundleParseError,
    DimensionMismatch,
    NatopError,
    ResourceCapExceeded,
    ShapeMismatch,
    SignatureMismatch,
    SmoothnessExhausted,
)
from natop.parser import parse_bundle
from natop.reps import casimir, invariant_sections, order_bound
from natop.tensor import BundleSpec

__version__ = "0.1.0"

__all__ = [
    "BundleSpec", "parse_bundle", "PolySection", "lie_derivative",
    "lie_bracket", "schouten", "schouten_nijenhuis", "frolicher_nijenhuis", "compressed_fn",
    "OperatorScheme", "ClassificationResult", "classify", "match_against", "pretty_print",
    "casimir", "order_bound", "invariant_sections",
    "NatopError", "BundleError", "BundleParseError", "DimensionMismatch", "ShapeMismatch",
    "SignatureMismatch", "ResourceCapExceeded", "SmoothnessExhausted",
]
