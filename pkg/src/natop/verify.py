"""Seeded identity suites behind ``natop verify-brackets`` and ``natop verify-functionals``."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from natop import brackets as BR
from natop.calculus import PolySection, lie_derivative, pairing_bundle
from natop.classifier import classify
from natop.functional import (
    exactness_witness,
    integrate,
    lambda_functional,
    reconstruct,
    spline_lie_derivative,
)
from natop.reps import invariant_scheme
from natop.probes import random_field, random_section
from natop.splines import Grid, random_spline
from natop.tensor import BundleSpec


@dataclass
class Check:
    identity: str
    ok: bool
    inputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"identity": self.identity, "ok": self.ok, "inputs": self.inputs}


def bracket_catalogue(m: int) -> list[tuple[str, Callable, BundleSpec, BundleSpec]]:
    """``(name, bracket, source bundle a, source bundle b)`` for every bracket defined over R^m."""
    S, L, V = BundleSpec.symmetric, BundleSpec.multivectors, BundleSpec.vector_forms
    out = [("lie_bracket", BR.lie_bracket, BundleSpec.tangent(), BundleSpec.tangent())]
    out += [(f"schouten[{k},{l}]", BR.schouten, S(k), S(l)) for k, l in [(1, 1), (2, 1), (2, 2)]]
    out += [(f"schouten_nijenhuis[{p},{q}]", BR.schouten_nijenhuis, L(p), L(q))
            for p, q in [(1, 1), (2, 1), (1, 2), (2, 2)] if p + q - 1 <= m]
    out += [(f"frolicher_nijenhuis[{k},{l}]", BR.frolicher_nijenhuis, V(k), V(l))
            for k, l in [(0, 0), (1, 0), (1, 1), (2, 1)] if k + l <= m]
    out += [(f"compressed_fn[{k},{l}]", BR.compressed_fn, BundleSpec.trace_free_forms(k), BundleSpec.trace_free_forms(l))
            for k, l in [(1, 1)] if k + l <= m]
    return out


def commutation_ok(bracket: Callable, X: PolySection, a: PolySection, b: PolySection) -> bool:
    """``L_X B(a, b) == B(L_X a, b) + B(a, L_X b)`` exactly."""
    lhs = lie_derivative(X, bracket(a, b))
    rhs = bracket(lie_derivative(X, a), b) + bracket(a, lie_derivative(X, b))
    return (lhs - rhs).is_zero()


def verify_brackets(seed: int = 0, probes: int = 5, ms=(2, 3), input_degree: int = 2,
                    field_degree: int = 3) -> list[Check]:
    rng = random.Random(seed)
    checks = []
    for m in ms:
        for name, fn, A, B in bracket_catalogue(m):
            failures = []
            for n in range(probes):
                a = random_section(A, m, input_degree, rng)
                b = random_section(B, m, input_degree, rng)
                X = random_field(m, field_degree, rng)
                if not commutation_ok(fn, X, a, b):
                    failures.append({"probe": n, "X": X.to_dict(), "a": a.to_dict(), "b": b.to_dict()})
            checks.append(Check(f"L_X {name}(a,b) = {name}(L_X a,b) + {name}(a,L_X b), m={m}", not failures,
                                {"seed": seed, "probes": probes, "failures": failures[:1]}))
    return checks


def natural_kernels(m: int = 2) -> list[tuple[str, object, tuple[BundleSpec, ...]]]:
    """Natural kernels ``D`` and the bundles of the arguments of ``lambda_D`` (last one paired)."""
    L = BundleSpec.forms
    specs = [
        ("int w", (), L(m)),
        ("int f w", (L(0),), L(m)),
        ("int phi ^ w", (L(1),), L(m - 1)),
        ("int f d(phi)", (L(1),), L(0)),
        ("int h df ^ dg", (L(0), L(0)), L(0)),
    ]
    out = []
    for name, srcs, last in specs:
        target = pairing_bundle(last, m)
        if not srcs:
            D = invariant_scheme(target, m)
        else:
            D = classify(srcs, target, 1, m).basis[0]
        out.append((name, D, srcs + (last,)))
    return out


def verify_functionals(seed: int = 0, probes: int = 3, m: int = 2, degree: int = 3,
                       witnesses: int = 10) -> list[Check]:
    rng = random.Random(seed)
    grid = Grid(((0, 1),) * m, (6,) * m)
    checks = []
    for name, D, bundles in natural_kernels(m):
        failures = []
        for n in range(probes):
            ss = [random_spline(E, grid, degree, rng, max_terms=4) for E in bundles]
            X = random_field(m, 2, rng)
            total = sum((lambda_functional(D, ss[:i] + [spline_lie_derivative(X, ss[i])] + ss[i + 1:])
                         for i in range(len(ss))), Fraction(0))
            if total:
                failures.append({"probe": n, "value": str(total)})
        checks.append(Check(f"sum_i lambda[{name}](.., L_X s_i, ..) = 0", not failures,
                            {"seed": seed, "probes": probes, "failures": failures[:1]}))
    failures = []
    for n in range(probes):
        w = random_spline(BundleSpec.forms(m), grid, degree, rng, max_terms=6)
        X = random_field(m, 2, rng)
        v = integrate(spline_lie_derivative(X, w))
        if v:
            failures.append({"probe": n, "value": str(v)})
    checks.append(Check("integral L_X w = 0 (Stokes)", not failures, {"seed": seed, "failures": failures[:1]}))
    failures = []
    for mm in (1, 2):
        g = Grid(((0, 1),) * mm, (5,) * mm)
        for n in range(witnesses):
            f = random_spline(BundleSpec.scalar(), g, degree, rng)
            c, gs = exactness_witness(f)
            if reconstruct(c, gs) != f:
                failures.append({"m": mm, "probe": n, "f": f.to_dict()})
    checks.append(Check("f = (integral f) psi^m + sum_i d_i g_i", not failures, {"seed": seed, "failures": failures[:1]}))
    return checks
