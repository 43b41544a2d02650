"""Exact Lie-derivative and exterior calculus on polynomial sections over R^m.

All bundles in scope are first-order natural bundles, so the Lie derivative of
a section is ``L_X s = X^l d_l s - rho'(DX) s`` with ``rho'`` the derived
``gl(m)`` action on the fiber (see :mod:`natop.tensor`).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from natop import poly as P
from natop.errors import BundleError, DimensionMismatch, ShapeMismatch
from natop.tensor import (
    BundleSpec,
    MultiIndex,
    _perm_sign,
    fiber_basis,
    graded_lex_key,
    raw_gl_action,
)


class PolySection:
    """An exact polynomial section of ``bundle`` over ``R^m``.

    ``coefficients`` maps a multi-index ``alpha`` to the component vector of
    ``x^alpha`` (length = fiber dimension).  Zero vectors are never stored.
    """

    __slots__ = ("bundle", "m", "_coeffs", "_components")

    def __init__(self, bundle: BundleSpec, m: int, coefficients: Mapping | None = None):
        self.bundle = bundle
        self.m = m
        dim = fiber_basis(bundle, m).dimension
        coeffs = {}
        for alpha, vec in (coefficients or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != m:
                raise ShapeMismatch(f"multi-index {alpha} has wrong length for m={m}")
            vec = tuple(Fraction(v) for v in vec)
            if len(vec) != dim:
                raise ShapeMismatch(f"component vector of length {len(vec)}, fiber has {dim}")
            if any(vec):
                coeffs[alpha] = vec
        self._coeffs = coeffs
        self._components = None

    # construction -------------------------------------------------------
    @classmethod
    def from_components(cls, bundle: BundleSpec, m: int, comps: Sequence[Mapping]) -> "PolySection":
        dim = fiber_basis(bundle, m).dimension
        if len(comps) != dim:
            raise ShapeMismatch(f"expected {dim} component polynomials, got {len(comps)}")
        coeffs: dict = {}
        for c, p in enumerate(comps):
            for alpha, v in p.items():
                if v:
                    coeffs.setdefault(alpha, [Fraction(0)] * dim)[c] = Fraction(v)
        obj = cls(bundle, m, coeffs)
        return obj

    @classmethod
    def zero(cls, bundle: BundleSpec, m: int) -> "PolySection":
        return cls(bundle, m)

    @classmethod
    def constant(cls, bundle: BundleSpec, m: int, vec: Sequence) -> "PolySection":
        return cls(bundle, m, {(0,) * m: vec})

    @classmethod
    def basis_element(cls, bundle: BundleSpec, m: int, label: Sequence[int], coeff: Mapping | None = None):
        """``coeff * e_label`` for a scalar polynomial ``coeff`` (default 1)."""
        fb = fiber_basis(bundle, m)
        comps = [{} for _ in range(fb.dimension)]
        comps[fb.index(tuple(label))] = dict(coeff) if coeff is not None else P.pconst(m, 1)
        return cls.from_components(bundle, m, comps)

    # views --------------------------------------------------------------
    @property
    def coefficients(self) -> dict:
        return dict(self._coeffs)

    @property
    def dimension(self) -> int:
        return fiber_basis(self.bundle, self.m).dimension

    def components(self) -> list[dict]:
        if self._components is None:
            comps = [dict() for _ in range(self.dimension)]
            for alpha, vec in self._coeffs.items():
                for c, v in enumerate(vec):
                    if v:
                        comps[c][alpha] = v
            self._components = comps
        return [dict(c) for c in self._components]

    def component(self, c: int) -> dict:
        if self._components is None:
            self.components()
        return self._components[c]

    def degree(self) -> int:
        return max((sum(a) for a in self._coeffs), default=-1)

    def is_zero(self) -> bool:
        return not self._coeffs

    def value_at(self, point: Sequence) -> tuple[Fraction, ...]:
        return tuple(P.pevaluate(p, point) for p in self.components())

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "PolySection"):
        if self.bundle != other.bundle or self.m != other.m:
            raise DimensionMismatch(f"{self.bundle}/m={self.m} vs {other.bundle}/m={other.m}")

    def __add__(self, other: "PolySection") -> "PolySection":
        self._check(other)
        coeffs = dict(self._coeffs)
        for alpha, vec in other._coeffs.items():
            if alpha in coeffs:
                coeffs[alpha] = tuple(a + b for a, b in zip(coeffs[alpha], vec))
            else:
                coeffs[alpha] = vec
        return PolySection(self.bundle, self.m, coeffs)

    def __neg__(self) -> "PolySection":
        return self.scale(-1)

    def __sub__(self, other: "PolySection") -> "PolySection":
        return self + (-other)

    def scale(self, c) -> "PolySection":
        c = Fraction(c)
        return PolySection(self.bundle, self.m, {a: tuple(c * v for v in vec) for a, vec in self._coeffs.items()})

    def __rmul__(self, c) -> "PolySection":
        return self.scale(c)

    def times_poly(self, f: Mapping) -> "PolySection":
        """Multiply by the scalar polynomial ``f``."""
        return PolySection.from_components(self.bundle, self.m, [P.pmul(f, c) for c in self.components()])

    def derivative(self, j: int) -> "PolySection":
        return PolySection.from_components(self.bundle, self.m, [P.pderiv(c, j) for c in self.components()])

    def partial(self, alpha: Sequence[int]) -> "PolySection":
        return PolySection.from_components(self.bundle, self.m, [P.pderiv_multi(c, alpha) for c in self.components()])

    def apply_fiber_map(self, rows: Sequence[Mapping[int, Fraction]], bundle: BundleSpec) -> "PolySection":
        """Apply a constant linear fiber map given by sparse rows (output coordinate -> {input: coeff})."""
        comps = self.components()
        out = []
        for row in rows:
            acc: dict = {}
            for c, v in row.items():
                P.padd_into(acc, comps[c], v)
            out.append(acc)
        return PolySection.from_components(bundle, self.m, out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolySection):
            return NotImplemented
        return self.bundle == other.bundle and self.m == other.m and self._coeffs == other._coeffs

    def __hash__(self):
        return hash((self.bundle, self.m, frozenset(self._coeffs.items())))

    def __repr__(self) -> str:
        return f"PolySection({self.bundle}, m={self.m}, terms={len(self._coeffs)})"

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        keys = sorted(self._coeffs, key=graded_lex_key)
        return {
            "bundle": str(self.bundle),
            "m": self.m,
            "coefficients": {
                ",".join(map(str, a)): [_frac_str(v) for v in self._coeffs[a]] for a in keys
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: Mapping) -> "PolySection":
        from natop.parser import parse_bundle

        m = int(data["m"])
        coeffs = {}
        for key, vec in data["coefficients"].items():
            alpha = tuple(int(x) for x in key.split(",")) if key else ()
            coeffs[alpha] = [Fraction(v) for v in vec]
        return cls(parse_bundle(data["bundle"]), m, coeffs)


def _frac_str(v: Fraction) -> str:
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


# ---------------------------------------------------------------------------
# vector fields and scalars


def vector_field(m: int, comps: Sequence[Mapping]) -> PolySection:
    return PolySection.from_components(BundleSpec.tangent(), m, comps)


def scalar(m: int, p: Mapping) -> PolySection:
    return PolySection.from_components(BundleSpec.scalar(), m, [p])


def coordinate_field(m: int, i: int, coeff: Mapping | None = None) -> PolySection:
    """``coeff * d_i`` (0-based ``i``)."""
    return PolySection.basis_element(BundleSpec.tangent(), m, (i,), coeff)


def _require_field(X: PolySection, m: int):
    if X.bundle != BundleSpec.tangent():
        raise BundleError(f"expected a vector field, got a section of {X.bundle}")
    if X.m != m:
        raise DimensionMismatch(f"vector field over R^{X.m}, section over R^{m}")


def lie_derivative(X: PolySection, s: PolySection) -> PolySection:
    """Exact Lie derivative ``L_X s``."""
    _require_field(X, s.m)
    m = s.m
    fb = fiber_basis(s.bundle, m)
    xs = X.components()
    comps = s.components()
    out = [dict() for _ in range(fb.dimension)]
    for l in range(m):
        if not xs[l]:
            continue
        for c in range(fb.dimension):
            if comps[c]:
                P.padd_into(out[c], P.pmul(xs[l], P.pderiv(comps[c], l)))
    for i in range(m):
        if not xs[i]:
            continue
        for j in range(m):
            dxij = P.pderiv(xs[i], j)
            if not dxij:
                continue
            gen = fb.generators[i][j]
            for r, row in enumerate(gen):
                acc: dict = {}
                for c, v in row.items():
                    P.padd_into(acc, comps[c], v)
                if acc:
                    P.padd_into(out[r], P.pmul(dxij, acc), -1)
    return PolySection.from_components(s.bundle, m, out)


def lie_bracket(X: PolySection, Y: PolySection) -> PolySection:
    """``[X, Y]^i = X^j d_j Y^i - Y^j d_j X^i``."""
    _require_field(X, Y.m)
    _require_field(Y, X.m)
    m = X.m
    xs, ys = X.components(), Y.components()
    out = []
    for i in range(m):
        acc: dict = {}
        for j in range(m):
            P.padd_into(acc, P.pmul(xs[j], P.pderiv(ys[i], j)))
            P.padd_into(acc, P.pmul(ys[j], P.pderiv(xs[i], j)), -1)
        out.append(acc)
    return vector_field(m, out)


# ---------------------------------------------------------------------------
# constant bilinear fiber maps


def bilinear_apply(table: Iterable[tuple[int, int, int, Fraction]], a: PolySection, b: PolySection,
                   bundle: BundleSpec) -> PolySection:
    """``out_c = sum coef * a_i * b_j`` over ``(c, i, j, coef)`` in ``table``."""
    ca, cb = a.components(), b.components()
    out = [dict() for _ in range(fiber_basis(bundle, a.m).dimension)]
    for c, i, j, coef in table:
        if ca[i] and cb[j]:
            P.padd_into(out[c], P.pmul(ca[i], cb[j]), coef)
    return PolySection.from_components(bundle, a.m, out)


def _alt_degree(bundle: BundleSpec) -> tuple[int, str] | None:
    if bundle.trace_free:
        return None
    if not bundle.factors:
        return 0, ""
    if len(bundle.factors) == 1:
        f = bundle.factors[0]
        if f.symmetry == "alt" or f.rank == 1:
            return f.rank, f.variance
    return None


def _alt_bundle(k: int, variance: str) -> BundleSpec:
    if k == 0:
        return BundleSpec.scalar()
    return BundleSpec.forms(k) if variance == "down" else BundleSpec.multivectors(k)


@lru_cache(maxsize=None)
def _wedge_table(p: int, q: int, variance: str, m: int) -> tuple:
    fa = fiber_basis(_alt_bundle(p, variance), m)
    fb = fiber_basis(_alt_bundle(q, variance), m)
    fc = fiber_basis(_alt_bundle(p + q, variance), m)
    table = []
    for c, K in enumerate(fc.labels):
        for pos in itertools.combinations(range(p + q), p):
            I = tuple(K[t] for t in pos)
            J = tuple(K[t] for t in range(p + q) if t not in pos)
            sign = _perm_sign(I + J)
            table.append((c, fa.index(I), fb.index(J), Fraction(sign)))
    return tuple(table)


def wedge(a: PolySection, b: PolySection) -> PolySection:
    """Wedge product of two alternating sections of the same variance (forms or multivectors)."""
    if a.m != b.m:
        raise DimensionMismatch("sections over different dimensions")
    da, db = _alt_degree(a.bundle), _alt_degree(b.bundle)
    if da is None or db is None:
        raise BundleError(f"wedge needs exterior powers, got {a.bundle} and {b.bundle}")
    variance = da[1] or db[1] or "down"
    if da[1] and db[1] and da[1] != db[1]:
        raise BundleError("cannot wedge a form with a multivector")
    p, q = da[0], db[0]
    target = _alt_bundle(p + q, variance)
    if p + q > a.m:
        return PolySection.zero(target, a.m)
    return bilinear_apply(_wedge_table(p, q, variance, a.m), a, b, target)


def exterior_derivative(s: PolySection) -> PolySection:
    """Exterior derivative ``Lam^p T* -> Lam^{p+1} T*``."""
    p = s.bundle.form_degree
    if p is None:
        raise BundleError(f"d needs a differential form, got {s.bundle}")
    m = s.m
    target = BundleSpec.forms(p + 1)
    if p + 1 > m:
        return PolySection.zero(target, m)
    src = fiber_basis(s.bundle, m)
    tgt = fiber_basis(target, m)
    comps = s.components()
    out = []
    for K in tgt.labels:
        acc: dict = {}
        for t, j in enumerate(K):
            rest = K[:t] + K[t + 1:]
            P.padd_into(acc, P.pderiv(comps[src.index(rest)], j), (-1) ** t)
        out.append(acc)
    return PolySection.from_components(target, m, out)


@lru_cache(maxsize=None)
def _insertion_table(p: int, variance: str, m: int) -> tuple:
    """``(out, j, in, sign)``: ``(i_X w)_out += sign * X^j * w_in``."""
    src = fiber_basis(_alt_bundle(p, variance), m)
    tgt = fiber_basis(_alt_bundle(p - 1, variance), m)
    table = []
    for o, rest in enumerate(tgt.labels):
        for j in range(m):
            if j in rest:
                continue
            seq = (j,) + rest
            table.append((o, j, src.index(tuple(sorted(seq))), Fraction(_perm_sign(seq))))
    return tuple(table)


def insertion(X: PolySection, w: PolySection) -> PolySection:
    """Insertion ``i_X w`` into the first slot of a form."""
    _require_field(X, w.m)
    p = w.bundle.form_degree
    if p is None:
        raise BundleError(f"insertion needs a differential form, got {w.bundle}")
    if p == 0:
        raise BundleError("cannot insert into a 0-form")
    return bilinear_apply(_insertion_table(p, "down", w.m), X, w, BundleSpec.forms(p - 1))


def pairing_bundle(E: BundleSpec, m: int) -> BundleSpec:
    """``E* (x) Lam^m T*``: the kernel bundle paired against sections of ``E``."""
    return E.dual() * BundleSpec.forms(m)


@lru_cache(maxsize=None)
def _pairing_table(E: BundleSpec, m: int) -> tuple:
    sig = fiber_basis(pairing_bundle(E, m), m)
    fe = fiber_basis(E, m)
    vol = fiber_basis(BundleSpec.forms(m), m)
    rk = E.rank
    table = []
    incs = [fe.include([1 if i == b else 0 for i in range(fe.dimension)]) for b in range(fe.dimension)]
    for a in range(sig.dimension):
        raw_sig = sig.include([1 if i == a else 0 for i in range(sig.dimension)])
        for b, raw_s in enumerate(incs):
            contracted: dict = {}
            for idx, v in raw_sig.items():
                w = raw_s.get(idx[:rk])
                if w:
                    key = idx[rk:]
                    contracted[key] = contracted.get(key, 0) + v * w
            val = vol.project(contracted)[0]
            if val:
                table.append((0, a, b, val))
    return tuple(table)


def pairing(sigma: PolySection, s: PolySection) -> PolySection:
    """Canonical pairing ``<sigma, s>`` of ``E* (x) Lam^m T*`` with ``E``, a top form.

    This is the full contraction of the underlying tensors, so for example
    ``<d_1 ^ d_2, dx^1 ^ dx^2> = 2``.
    """
    if sigma.m != s.m:
        raise DimensionMismatch("sections over different dimensions")
    if s.bundle.trace_free:
        raise BundleError("pairing with trace-free bundles is not supported")
    if sigma.bundle != pairing_bundle(s.bundle, s.m):
        raise BundleError(f"cannot pair {sigma.bundle} with {s.bundle}")
    return bilinear_apply(_pairing_table(s.bundle, s.m), sigma, s, BundleSpec.forms(s.m))


def _transfer_rows(src_bundle: BundleSpec, dst_bundle: BundleSpec, m: int) -> list[dict]:
    if src_bundle.rank != dst_bundle.rank:
        raise ShapeMismatch(f"{src_bundle} and {dst_bundle} have different slot counts")
    src = fiber_basis(src_bundle, m)
    tgt = fiber_basis(dst_bundle, m)
    rows = [dict() for _ in range(tgt.dimension)]
    for c in range(src.dimension):
        img = tgt.project(src.include([1 if i == c else 0 for i in range(src.dimension)]))
        for r, v in enumerate(img):
            if v:
                rows[r][c] = v
    return rows


def project_section(s: PolySection, bundle: BundleSpec) -> PolySection:
    """Apply ``bundle``'s projector to a section of a bundle with the same slots."""
    return s.apply_fiber_map(_transfer_rows(s.bundle, bundle, s.m), bundle)


def include_section(s: PolySection, ambient: BundleSpec) -> PolySection:
    """Fiber inclusion into a larger bundle with the same slots (e.g. ``C^k`` into ``Lam^k T* * T``)."""
    return s.apply_fiber_map(_transfer_rows(s.bundle, ambient, s.m), ambient)


def raw_lie_derivative(X: PolySection, s: PolySection) -> PolySection:
    """Lie derivative computed slot-by-slot on the raw tensor, then projected.

    Independent of the cached generator matrices; used to cross-check them.
    """
    _require_field(X, s.m)
    m = s.m
    fb = fiber_basis(s.bundle, m)
    xs = X.components()
    comps = s.components()
    out = [dict() for _ in range(fb.dimension)]
    for l in range(m):
        for c in range(fb.dimension):
            if xs[l] and comps[c]:
                P.padd_into(out[c], P.pmul(xs[l], P.pderiv(comps[c], l)))
    for c in range(fb.dimension):
        raw = fb.include([1 if i == c else 0 for i in range(fb.dimension)])
        for i in range(m):
            for j in range(m):
                dxij = P.pderiv(xs[i], j)
                if not dxij or not comps[c]:
                    continue
                img = fb.project(raw_gl_action(s.bundle, m, i, j, raw))
                prod = P.pmul(dxij, comps[c])
                for r, v in enumerate(img):
                    if v:
                        P.padd_into(out[r], prod, -v)
    return PolySection.from_components(s.bundle, m, out)


# ---------------------------------------------------------------------------
# jets


@dataclass(frozen=True)
class Jet:
    """Truncated Taylor data: a section whose coefficients vanish above ``order``."""

    section: PolySection
    order: int

    def __post_init__(self):
        if self.section.degree() > self.order:
            raise ValueError("jet section has terms above its order")


def truncate(s: PolySection, r: int) -> Jet:
    if r < 0:
        raise ValueError("jet order must be >= 0")
    kept = {a: v for a, v in s.coefficients.items() if sum(a) <= r}
    return Jet(PolySection(s.bundle, s.m, kept), r)


def jet_coordinates(s: PolySection, r: int) -> dict[tuple[MultiIndex, int], Fraction]:
    """Values ``d^alpha s^a(0)`` for ``|alpha| <= r``, keyed by ``(alpha, a)``."""
    from natop.tensor import alpha_factorial

    out = {}
    for alpha, vec in s.coefficients.items():
        if sum(alpha) <= r:
            f = alpha_factorial(alpha)
            for a, v in enumerate(vec):
                if v:
                    out[(alpha, a)] = v * f
    return out
