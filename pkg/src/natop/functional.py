"""Integration functionals, almost natural operators, locality and the exactness witness.

Everything here works on :class:`~natop.splines.SplineSection` inputs, so all
identities are checked as literal equalities of rationals.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from natop import calculus as C
from natop import poly as P
from natop.calculus import PolySection
from natop.classifier import OperatorScheme, evaluate
from natop.errors import BundleError, SignatureMismatch
from natop.splines import (
    SplineSection,
    antiderivative,
    common_grid,
    extend,
    integrate_axis,
    psi,
)
from natop.tensor import BundleSpec

__all__ = [
    "integrate",
    "spline_lie_derivative",
    "spline_pairing",
    "evaluate_on_splines",
    "lambda_functional",
    "AlmostNaturalType",
    "ElementaryAlmostNatural",
    "evaluate_almost_natural",
    "lie_commutation_residual",
    "locality_predicate",
    "local_subsets",
    "weak_locality_witness",
    "psi_product",
    "exactness_witness",
    "reconstruct",
]


# ---------------------------------------------------------------------------
# calculus on splines


def integrate(w: SplineSection) -> Fraction:
    """``integral_{R^m} w`` for a top-degree form, exact cell by cell."""
    if w.bundle != BundleSpec.forms(w.m):
        raise BundleError(f"integrate needs a section of Lam^{w.m} T*, got {w.bundle}")
    return sum((P.pintegrate_box(p.component(0), w.grid.cell_box(c)) for c, p in w.cells.items()), Fraction(0))


def spline_lie_derivative(X: PolySection, s: SplineSection) -> SplineSection:
    """``L_X s`` for a polynomial field ``X``; costs one order of smoothness."""
    s.require_smoothness(1)
    return s.map_cells(lambda p: C.lie_derivative(X, p), s.bundle, s.smoothness - 1)


def spline_pairing(sigma: SplineSection, s: SplineSection) -> SplineSection:
    """Pointwise ``<sigma, s>``, a top form."""
    return sigma.bilinear(s, C.pairing, BundleSpec.forms(s.m))


def _scheme_orders(scheme: OperatorScheme) -> list[int]:
    orders = [0] * scheme.arity
    for alphas, _, _ in scheme.coefficients:
        for i, a in enumerate(alphas):
            orders[i] = max(orders[i], sum(a))
    return orders


def evaluate_on_splines(scheme: OperatorScheme, sections: Sequence[SplineSection]):
    """Apply a local scheme pointwise; arity 0 gives the constant (invariant) ``PolySection``."""
    if scheme.arity == 0:
        return evaluate(scheme, [])
    if len(sections) != scheme.arity:
        raise SignatureMismatch(f"scheme takes {scheme.arity} arguments, got {len(sections)}")
    orders = _scheme_orders(scheme)
    smooth = []
    for s, E, n in zip(sections, scheme.sources, orders):
        if s.bundle != E or s.m != scheme.m:
            raise SignatureMismatch(f"expected a section of {E} over R^{scheme.m}, got {s.bundle} over R^{s.m}")
        s.require_smoothness(n)
        smooth.append(s.smoothness - n)
    grid = common_grid(*(s.grid for s in sections))
    aligned = [s.refine(grid) for s in sections]
    keys = set(aligned[0].cells)
    for s in aligned[1:]:
        keys &= set(s.cells)
    cells = {c: evaluate(scheme, [s.cells[c] for s in aligned]) for c in keys}
    return SplineSection(scheme.target, grid, cells, min(smooth))


def _pair_any(sigma, s: SplineSection) -> SplineSection:
    if isinstance(sigma, SplineSection):
        return spline_pairing(sigma, s)
    # constant invariant kernel
    return s.map_cells(lambda p: C.pairing(sigma, p), BundleSpec.forms(s.m))


def lambda_functional(D: OperatorScheme, sections: Sequence[SplineSection]) -> Fraction:
    """``integral <D(s_1..s_{n-1}), s_n>`` for a kernel ``D`` with values in ``E_n^* (x) Lam^m T*``."""
    if not sections:
        raise SignatureMismatch("lambda needs at least one argument")
    *head, last = sections
    if D.arity != len(head):
        raise SignatureMismatch(f"kernel takes {D.arity} arguments, got {len(head)}")
    if D.target != C.pairing_bundle(last.bundle, last.m):
        raise SignatureMismatch(f"kernel target {D.target} cannot be paired with {last.bundle}")
    return integrate(_pair_any(evaluate_on_splines(D, head), last))


# ---------------------------------------------------------------------------
# elementary almost natural operators


@dataclass(frozen=True)
class AlmostNaturalType:
    """Partition of ``{1..k}`` into integration blocks ``I^1..I^r`` and a local block ``J``.

    Blocks are stored sorted and ordered by their smallest element.
    """

    blocks: tuple[tuple[int, ...], ...]
    local: tuple[int, ...] = ()

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else 0))
        local = tuple(sorted(self.local))
        if any(not b for b in blocks):
            raise ValueError("integration blocks must be nonempty")
        elems = [x for b in blocks for x in b] + list(local)
        k = len(elems)
        if sorted(elems) != list(range(1, k + 1)):
            raise ValueError(f"blocks {blocks} and J={local} do not partition {{1..{k}}}")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "local", local)

    @property
    def k(self) -> int:
        return sum(len(b) for b in self.blocks) + len(self.local)

    def block_masks(self) -> list[int]:
        return [sum(1 << (x - 1) for x in b) for b in self.blocks]


def _mask(subset: Iterable[int]) -> int:
    return sum(1 << (x - 1) for x in set(subset))


def locality_predicate(t: AlmostNaturalType, I: Iterable[int]) -> bool:
    """Is the associated operator ``D^I`` local?  True iff no block is contained in ``I``."""
    I = set(I)
    if any(not 1 <= x <= t.k for x in I):
        raise ValueError(f"I must be a subset of {{1..{t.k}}}")
    mask = _mask(I)
    return not any(b & mask == b for b in t.block_masks())


def local_subsets(t: AlmostNaturalType) -> list[int]:
    """Bitmasks of all ``I`` for which ``D^I`` is local."""
    blocks = t.block_masks()
    return [mask for mask in range(1 << t.k) if not any(b & mask == b for b in blocks)]


def all_types(k: int) -> Iterable[AlmostNaturalType]:
    """Every elementary type on ``k`` arguments."""
    elems = list(range(1, k + 1))

    def partitions(items):
        if not items:
            yield []
            return
        first, rest = items[0], items[1:]
        for part in partitions(rest):
            for i in range(len(part)):
                yield part[:i] + [[first] + part[i]] + part[i + 1:]
            yield [[first]] + part

    for part in partitions(elems):
        yield AlmostNaturalType(tuple(tuple(b) for b in part), ())
        for j in range(len(part)):
            yield AlmostNaturalType(tuple(tuple(b) for i, b in enumerate(part) if i != j), tuple(part[j]))


@dataclass(frozen=True)
class ElementaryAlmostNatural:
    """``lambda^1(s_{I^1}) ... lambda^r(s_{I^r}) * D(s_J)``.

    ``kernels[l]`` takes the first ``|I^l| - 1`` arguments of block ``l`` and
    returns a section of ``E^* (x) Lam^m T*`` paired with the block's last
    argument.  ``local`` has arity ``|J|``; with ``J`` empty it is an
    invariant section written as an arity-0 scheme.
    """

    type: AlmostNaturalType
    kernels: tuple[OperatorScheme, ...]
    local: OperatorScheme
    sources: tuple[BundleSpec, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "kernels", tuple(self.kernels))
        t = self.type
        if len(self.kernels) != len(t.blocks):
            raise SignatureMismatch("one kernel per integration block is required")
        srcs = list(self.sources) if self.sources else [None] * t.k
        m = self.local.m
        for blk, D in zip(t.blocks, self.kernels):
            if D.arity != len(blk) - 1:
                raise SignatureMismatch(f"kernel for block {blk} must take {len(blk) - 1} arguments")
            for pos, E in zip(blk[:-1], D.sources):
                srcs[pos - 1] = srcs[pos - 1] or E
        if self.local.arity != len(t.local):
            raise SignatureMismatch("local operator arity must equal |J|")
        for pos, E in zip(t.local, self.local.sources):
            srcs[pos - 1] = srcs[pos - 1] or E
        for blk, D in zip(t.blocks, self.kernels):
            srcs[blk[-1] - 1] = srcs[blk[-1] - 1] or _paired_source(D.target, m)
        if any(E is None for E in srcs):
            raise SignatureMismatch("could not infer the bundle of every argument; pass sources")
        for blk, D in zip(t.blocks, self.kernels):
            if D.target != C.pairing_bundle(srcs[blk[-1] - 1], m):
                raise SignatureMismatch(f"kernel for block {blk} has the wrong target {D.target}")
        object.__setattr__(self, "sources", tuple(srcs))

    @property
    def target(self) -> BundleSpec:
        return self.local.target

    @property
    def m(self) -> int:
        return self.local.m


def _paired_source(kernel_target: BundleSpec, m: int) -> BundleSpec | None:
    """``E`` such that ``kernel_target == E^* (x) Lam^m T*``, if there is one."""
    factors = kernel_target.factors
    if kernel_target.trace_free or not factors or BundleSpec(factors[-1:]) != BundleSpec.forms(m):
        return None
    try:
        E = BundleSpec(factors[:-1]).dual()
    except BundleError:
        return None
    return E if C.pairing_bundle(E, m) == kernel_target else None


def _check_args(op: ElementaryAlmostNatural, sections: Sequence[SplineSection]):
    if len(sections) != op.type.k:
        raise SignatureMismatch(f"operator takes {op.type.k} arguments, got {len(sections)}")
    for i, (s, E) in enumerate(zip(sections, op.sources)):
        if s.bundle != E or s.m != op.m:
            raise SignatureMismatch(f"argument {i + 1} should be a section of {E} over R^{op.m}")


def evaluate_almost_natural(op: ElementaryAlmostNatural, sections: Sequence[SplineSection]):
    """Product of the block functionals times the local part (a constant section when ``J`` is empty)."""
    _check_args(op, sections)
    factor = Fraction(1)
    for blk, D in zip(op.type.blocks, op.kernels):
        factor *= lambda_functional(D, [sections[i - 1] for i in blk])
    local = evaluate_on_splines(op.local, [sections[i - 1] for i in op.type.local])
    return local.scale(factor)


def lie_commutation_residual(op: ElementaryAlmostNatural, X: PolySection, sections: Sequence[SplineSection]):
    """``L_X op(s) - sum_i op(.., L_X s_i, ..)``."""
    _check_args(op, sections)
    value = evaluate_almost_natural(op, sections)
    if isinstance(value, SplineSection):
        res = spline_lie_derivative(X, value)
    else:
        res = C.lie_derivative(X, value)
    for i in range(len(sections)):
        args = list(sections)
        args[i] = spline_lie_derivative(X, sections[i])
        res = res - evaluate_almost_natural(op, args)
    return res


def weak_locality_witness(op: ElementaryAlmostNatural, probes: Sequence[Sequence[SplineSection]]):
    """First probe with pairwise disjoint supports on which ``op`` is nonzero, else None.

    Weak locality (vanishing on arguments with disjoint supports) is only
    checked on concrete evaluations; no closed-form criterion is attempted.
    """
    for args in probes:
        if not _pairwise_disjoint(args):
            continue
        out = evaluate_almost_natural(op, args)
        if not out.is_zero():
            return args
    return None


def _pairwise_disjoint(args: Sequence[SplineSection]) -> bool:
    for a, b in itertools.combinations(args, 2):
        a2, b2 = a._aligned(b)
        if set(a2.cells) & set(b2.cells):
            return False
    return True


# ---------------------------------------------------------------------------
# the exactness witness


def psi_product(m: int, bump: SplineSection | None = None) -> SplineSection:
    """``bump(x_1) * ... * bump(x_m)``."""
    bump = bump or psi()
    out = bump
    for axis in range(1, m):
        out = extend(out, bump, axis)
    return out


def exactness_witness(f: SplineSection, bump: SplineSection | None = None) -> tuple[Fraction, list[SplineSection]]:
    """``c`` and ``g_1..g_m`` with ``f = c * bump^{(x)m} + sum_i d_i g_i``, all compactly supported.

    Peel off ``x_1``: with ``F(x') = integral f dx_1`` the function
    ``f - bump(x_1) F(x')`` integrates to zero along every ``x_1``-line, so it
    is ``d_1 g_1`` with ``g_1`` its running integral.  Recurse on ``F``.
    """
    bump = bump or psi()
    if f.bundle != BundleSpec.scalar():
        raise BundleError("exactness_witness needs a scalar spline")
    if integrate_axis(bump, 0) != 1:
        raise ValueError("the reference bump must have unit integral")
    F = integrate_axis(f, 0)
    g1 = antiderivative(f - extend(F, bump, 0), 0)
    if f.m == 1:
        return Fraction(F), [g1]
    c, rest = exactness_witness(F, bump)
    return c, [g1] + [extend(h, bump, 0) for h in rest]


def reconstruct(c, gs: Sequence[SplineSection], bump: SplineSection | None = None) -> SplineSection:
    """``c * bump^{(x)m} + sum_i d_i g_i``."""
    m = len(gs)
    out = psi_product(m, bump).scale(c)
    for i, g in enumerate(gs):
        out = out + g.derivative(i)
    return out
