"""Weights, Casimir values, the order bound, and absolutely invariant sections."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from natop.errors import DimensionMismatch, ShapeMismatch
from natop.linalg import Echelon
from natop.tensor import BundleSpec, fiber_basis

__all__ = ["Weight", "InvariantBasis", "gl_action", "invariant_sections", "invariant_scheme", "casimir", "order_bound"]


@dataclass(frozen=True)
class Weight:
    """An integral weight in the coordinates ``e^1..e^m``."""

    coords: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(int(c) for c in self.coords))

    @classmethod
    def of(cls, w) -> "Weight":
        if isinstance(w, Weight):
            return w
        if isinstance(w, int):
            return cls((w,))
        return cls(tuple(w))

    @property
    def dominant(self) -> bool:
        c = self.coords
        return all(a >= b for a, b in zip(c, c[1:])) and (not c or c[-1] >= 0)

    def padded(self, m: int) -> tuple[int, ...]:
        if len(self.coords) > m:
            raise DimensionMismatch(f"weight {self.coords} has more than m={m} coordinates")
        return self.coords + (0,) * (m - len(self.coords))

    def __add__(self, other: "Weight") -> "Weight":
        n = max(len(self.coords), len(other.coords))
        a, b = self.padded(n), other.padded(n)
        return Weight(tuple(x + y for x, y in zip(a, b)))


@dataclass(frozen=True)
class InvariantBasis:
    """Fiber vectors killed by the whole derived ``gl(m)`` action."""

    bundle: BundleSpec
    m: int
    basis: tuple[tuple[Fraction, ...], ...]

    @property
    def dimension(self) -> int:
        return len(self.basis)


def gl_action(A: Sequence[Sequence], v: Sequence, bundle: BundleSpec) -> tuple[Fraction, ...]:
    """Derived action ``rho'(A) v`` of a matrix ``A`` in ``gl(m)`` on a fiber vector."""
    A = A.tolist() if hasattr(A, "tolist") else A
    m = len(A)
    if m == 0 or any(len(row) != m for row in A):
        raise ShapeMismatch("A must be a square m x m matrix")
    fb = fiber_basis(bundle, m)
    if len(v) != fb.dimension:
        raise ShapeMismatch(f"vector of length {len(v)}, fiber of {bundle} has dimension {fb.dimension}")
    v = [Fraction(x) for x in v]
    out = [Fraction(0)] * fb.dimension
    for i in range(m):
        for j in range(m):
            a = Fraction(A[i][j])
            if not a:
                continue
            for r, row in enumerate(fb.generator(i, j)):
                for c, w in row.items():
                    if v[c]:
                        out[r] += a * w * v[c]
    return tuple(out)


def invariant_sections(bundle: BundleSpec, m: int) -> InvariantBasis:
    """Canonical (reduced echelon) basis of the ``gl(m)``-invariant fiber vectors."""
    if m < 1:
        raise ValueError("m must be >= 1")
    fb = fiber_basis(bundle, m)
    ech = Echelon(fb.dimension)
    for i in range(m):
        for j in range(m):
            for row in fb.generator(i, j):
                if row:
                    ech.add(row)
    basis = []
    for vec in ech.nullspace():
        basis.append(tuple(Fraction(vec.get(c, 0)) for c in range(fb.dimension)))
    return InvariantBasis(bundle, m, tuple(basis))


def _delta(m: int) -> tuple[int, ...]:
    return tuple(m - 1 - i for i in range(m))


def casimir(m: int, mu) -> Fraction:
    """``<mu, mu + 2 delta>`` with ``delta = (m-1, ..., 1, 0)`` and the Euclidean product."""
    mu = Weight.of(mu).padded(m)
    return Fraction(sum(a * (a + 2 * d) for a, d in zip(mu, _delta(m))))


def order_bound(m: int, rho, mu) -> int:
    """Largest ``j`` with ``C(rho + e^{i1} + ... + e^{ij}) = C(mu)``, or -1 if none.

    Adding ``e^i`` to a weight with nonnegative coordinates raises the Casimir
    value by ``2 mu_i + 1 + 2 delta_i >= 1``, so ``j <= C(mu) - C(rho)``.
    """
    r = Weight.of(rho).padded(m)
    target = casimir(m, mu)
    Weight.of(mu).padded(m)
    if any(c < 0 for c in r):
        raise ValueError("order_bound needs a weight rho with nonnegative coordinates")
    cutoff = target - casimir(m, r)
    best = -1
    j = 0
    while j <= cutoff:
        for combo in itertools.combinations_with_replacement(range(m), j):
            w = list(r)
            for i in combo:
                w[i] += 1
            if casimir(m, w) == target:
                best = j
                break
        j += 1
    return best


def invariant_scheme(bundle: BundleSpec, m: int, index: int = 0):
    """An invariant fiber vector as an arity-0 operator scheme (a natural operator without arguments)."""
    from natop.classifier import OperatorScheme

    basis = invariant_sections(bundle, m).basis
    if not basis:
        raise ValueError(f"{bundle} has no invariant vectors for m={m}")
    vec = basis[index]
    return OperatorScheme((), bundle, 0, m, {((), (), b): v for b, v in enumerate(vec) if v})
