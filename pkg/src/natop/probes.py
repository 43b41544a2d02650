"""Seeded random polynomial sections and vector fields for identity checks."""
from __future__ import annotations

import random
from fractions import Fraction

from natop.calculus import PolySection
from natop.tensor import BundleSpec, enumerate_multiindices, fiber_basis


def _coeff(rng: random.Random, density: float) -> Fraction:
    if rng.random() > density:
        return Fraction(0)
    return Fraction(rng.randint(-5, 5), rng.randint(1, 3))


def random_section(bundle: BundleSpec, m: int, degree: int, rng: random.Random, density: float = 0.6) -> PolySection:
    """Random polynomial section with small rational coefficients, total degree <= ``degree``."""
    dim = fiber_basis(bundle, m).dimension
    coeffs = {}
    for alpha in enumerate_multiindices(m, degree):
        vec = [_coeff(rng, density) for _ in range(dim)]
        if any(vec):
            coeffs[alpha] = vec
    return PolySection(bundle, m, coeffs)


def random_field(m: int, degree: int, rng: random.Random, density: float = 0.6) -> PolySection:
    return random_section(BundleSpec.tangent(), m, degree, rng, density)


def make_rng(seed: int) -> random.Random:
    return random.Random(seed)
