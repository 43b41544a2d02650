"""Input validation shared by the estimator facade and the command line."""
from __future__ import annotations

from typing import Iterable, Sequence

from natop.calculus import PolySection
from natop.errors import DimensionMismatch, SignatureMismatch
from natop.parser import parse_bundle
from natop.tensor import BundleSpec


def check_bundle(value) -> BundleSpec:
    """Accept a ``BundleSpec`` or a bundle expression such as ``"Lam^2 T* * T"``."""
    if isinstance(value, BundleSpec):
        return value
    if isinstance(value, str):
        return parse_bundle(value)
    raise TypeError(f"expected a bundle or bundle expression, got {type(value).__name__}")


def check_bundles(values: Iterable) -> tuple[BundleSpec, ...]:
    if isinstance(values, (str, BundleSpec)):
        values = [values]
    return tuple(check_bundle(v) for v in values)


def check_order(r) -> int:
    if isinstance(r, bool) or int(r) != r or r < 0:
        raise ValueError(f"order r must be a nonnegative integer, got {r!r}")
    return int(r)


def check_dimension(m) -> int:
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise ValueError(f"dimension m must be a positive integer, got {m!r}")
    return int(m)


def check_sections(sections: Sequence, bundles: Sequence[BundleSpec], m: int) -> list[PolySection]:
    sections = list(sections)
    if len(sections) != len(bundles):
        raise SignatureMismatch(f"expected {len(bundles)} sections, got {len(sections)}")
    for i, (s, E) in enumerate(zip(sections, bundles)):
        if not isinstance(s, PolySection):
            raise TypeError(f"argument {i} is not a PolySection")
        if s.bundle != E:
            raise SignatureMismatch(f"argument {i} is a section of {s.bundle}, expected {E}")
        if s.m != m:
            raise DimensionMismatch(f"argument {i} lives over R^{s.m}, expected R^{m}")
    return sections
