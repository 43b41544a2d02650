"""Lie, Schouten, Schouten-Nijenhuis and Frolicher-Nijenhuis brackets.

Multivector and vector-valued-form inputs are expanded over the canonical
fiber basis; every basis element is decomposable, so the decomposable
formulas apply term by term.
"""
from __future__ import annotations

from fractions import Fraction
from math import factorial
from collections import Counter

from natop import poly as P
from natop.calculus import (
    PolySection,
    coordinate_field,
    exterior_derivative,
    include_section,
    insertion,
    lie_bracket,
    lie_derivative,
    project_section,
    wedge,
)
from natop.errors import BundleError, DimensionMismatch
from natop.tensor import BundleSpec, fiber_basis, trace_matrix

__all__ = [
    "lie_bracket",
    "schouten",
    "schouten_nijenhuis",
    "frolicher_nijenhuis",
    "trace_free_split",
    "trace_part",
    "include_trace_free",
    "embed_trace",
    "compressed_fn",
    "identity_section",
    "to_fiberwise_polynomial",
    "from_fiberwise_polynomial",
]


def _orderings(label) -> int:
    n = factorial(len(label))
    for c in Counter(label).values():
        n //= factorial(c)
    return n


def to_fiberwise_polynomial(a: PolySection) -> dict:
    """``S^k T`` section -> polynomial in ``(x_1..x_m, p_1..p_m)``, homogeneous of degree k in p."""
    k = a.bundle.symmetric_degree
    if k is None:
        raise BundleError(f"expected a symmetric contravariant tensor, got {a.bundle}")
    m = a.m
    fb = fiber_basis(a.bundle, m)
    out: dict = {}
    for c, lab in enumerate(fb.labels):
        pexp = [0] * m
        for i in lab:
            pexp[i] += 1
        mult = _orderings(lab)
        for alpha, v in a.component(c).items():
            key = tuple(alpha) + tuple(pexp)
            out[key] = out.get(key, 0) + v * mult
    return {k_: v for k_, v in out.items() if v}


def from_fiberwise_polynomial(f: dict, m: int) -> PolySection:
    degs = {sum(e[m:]) for e in f}
    if len(degs) > 1:
        raise ValueError("fiberwise polynomial is not homogeneous in p")
    k = degs.pop() if degs else 0
    bundle = BundleSpec.symmetric(k)
    fb = fiber_basis(bundle, m)
    comps = [dict() for _ in range(fb.dimension)]
    for e, v in f.items():
        lab = tuple(i for i in range(m) for _ in range(e[m + i]))
        comps[fb.index(lab)][tuple(e[:m])] = Fraction(v) / _orderings(lab)
    return PolySection.from_components(bundle, m, comps)


def poisson_bracket(f: dict, g: dict, m: int) -> dict:
    """Canonical Poisson bracket on ``T*R^m``: ``sum_i df/dp_i dg/dx^i - df/dx^i dg/dp_i``."""
    out: dict = {}
    for i in range(m):
        P.padd_into(out, P.pmul(P.pderiv(f, m + i), P.pderiv(g, i)))
        P.padd_into(out, P.pmul(P.pderiv(f, i), P.pderiv(g, m + i)), -1)
    return out


def schouten(a: PolySection, b: PolySection) -> PolySection:
    """Symmetric Schouten bracket ``S^k T x S^l T -> S^{k+l-1} T``."""
    if a.m != b.m:
        raise DimensionMismatch("sections over different dimensions")
    k, l = a.bundle.symmetric_degree, b.bundle.symmetric_degree
    if k is None or l is None:
        raise BundleError("schouten needs symmetric contravariant tensors")
    if k == 0 or l == 0:
        raise BundleError("schouten is defined for k, l >= 1")
    pb = poisson_bracket(to_fiberwise_polynomial(a), to_fiberwise_polynomial(b), a.m)
    if not pb:
        return PolySection.zero(BundleSpec.symmetric(k + l - 1), a.m)
    return from_fiberwise_polynomial(pb, a.m)


def _decompose_multivector(a: PolySection) -> list[list[PolySection]]:
    """Write ``a`` as a sum of wedges ``X_1 ^ ... ^ X_p`` of vector fields."""
    fb = fiber_basis(a.bundle, a.m)
    terms = []
    for c, lab in enumerate(fb.labels):
        coeff = a.component(c)
        if not coeff:
            continue
        fields = [coordinate_field(a.m, lab[0], coeff)]
        fields += [coordinate_field(a.m, i) for i in lab[1:]]
        terms.append(fields)
    return terms


def _wedge_all(fields: list[PolySection], m: int) -> PolySection:
    out = PolySection.constant(BundleSpec.scalar(), m, [1])
    for X in fields:
        out = wedge(out, X)
    return out


def schouten_nijenhuis(a: PolySection, b: PolySection) -> PolySection:
    """Schouten-Nijenhuis bracket ``Lam^p T x Lam^q T -> Lam^{p+q-1} T``.

    On decomposables: ``sum_{i,j} (-1)^{i+j} [X_i, Y_j] ^ X_1..^X_i..X_p ^ Y_1..^Y_j..Y_q``.
    """
    if a.m != b.m:
        raise DimensionMismatch("sections over different dimensions")
    p, q = a.bundle.multivector_degree, b.bundle.multivector_degree
    if p is None or q is None:
        raise BundleError("schouten_nijenhuis needs multivector fields")
    if p == 0 or q == 0:
        raise BundleError("schouten_nijenhuis is defined for p, q >= 1")
    m = a.m
    target = BundleSpec.multivectors(p + q - 1)
    out = PolySection.zero(target, m)
    if p + q - 1 > m:
        return out
    for xs in _decompose_multivector(a):
        for ys in _decompose_multivector(b):
            for i, X in enumerate(xs):
                for j, Y in enumerate(ys):
                    br = lie_bracket(X, Y)
                    if br.is_zero():
                        continue
                    rest = [br] + xs[:i] + xs[i + 1:] + ys[:j] + ys[j + 1:]
                    term = _wedge_all(rest, m)
                    out = out + (term if (i + j) % 2 == 0 else -term)
    return out


def _vector_form_degree(s: PolySection) -> int:
    k = s.bundle.vector_form_degree
    if k is None or s.bundle.trace_free:
        raise BundleError(f"expected a vector-valued form Lam^k T* * T, got {s.bundle}")
    return k


def _tensor_form_field(w: PolySection, X: PolySection) -> PolySection:
    """``w (x) X`` as a section of ``Lam^a T* * T``."""
    a = w.bundle.form_degree
    m = w.m
    bundle = BundleSpec.vector_forms(a)
    fb = fiber_basis(bundle, m)
    fw = fiber_basis(w.bundle, m)
    wc, xc = w.components(), X.components()
    comps = []
    for lab in fb.labels:
        I, j = lab[:-1], lab[-1]
        comps.append(P.pmul(wc[fw.index(I)], xc[j]))
    return PolySection.from_components(bundle, m, comps)


def _decompose_vector_form(K: PolySection) -> list[tuple[PolySection, PolySection]]:
    """``K = sum_j w_j (x) d_j`` as the pairs ``(w_j, d_j)`` with ``w_j != 0``."""
    k = _vector_form_degree(K)
    m = K.m
    fb = fiber_basis(K.bundle, m)
    forms = BundleSpec.forms(k)
    ff = fiber_basis(forms, m)
    parts = [[{} for _ in range(ff.dimension)] for _ in range(m)]
    for c, lab in enumerate(fb.labels):
        parts[lab[-1]][ff.index(lab[:-1])] = K.component(c)
    out = []
    for j, comps in enumerate(parts):
        w = PolySection.from_components(forms, m, comps)
        if not w.is_zero():
            out.append((w, coordinate_field(m, j)))
    return out


def frolicher_nijenhuis(K: PolySection, L: PolySection) -> PolySection:
    """Frolicher-Nijenhuis bracket ``Lam^k T* * T x Lam^l T* * T -> Lam^{k+l} T* * T``.

    On decomposables ``K = w (x) X``, ``L = h (x) Y``::

        [K, L] = w^h (x) [X,Y] + w ^ L_X h (x) Y - L_Y w ^ h (x) X
                 + (-1)^k (dw ^ i_X h (x) Y + i_Y w ^ dh (x) X)
    """
    if K.m != L.m:
        raise DimensionMismatch("sections over different dimensions")
    k, l = _vector_form_degree(K), _vector_form_degree(L)
    m = K.m
    target = BundleSpec.vector_forms(k + l)
    out = PolySection.zero(target, m)
    if k + l > m:
        return out
    sign = -1 if k % 2 else 1
    for w, X in _decompose_vector_form(K):
        for h, Y in _decompose_vector_form(L):
            terms = [
                _tensor_form_field(wedge(w, h), lie_bracket(X, Y)),
                _tensor_form_field(wedge(w, lie_derivative(X, h)), Y),
                -_tensor_form_field(wedge(lie_derivative(Y, w), h), X),
            ]
            if l > 0 and k + 1 <= m:
                terms.append(sign * _tensor_form_field(wedge(exterior_derivative(w), insertion(X, h)), Y))
            if k > 0 and l + 1 <= m:
                terms.append(sign * _tensor_form_field(wedge(insertion(Y, w), exterior_derivative(h)), X))
            for t in terms:
                out = out + t
    return out


def identity_section(m: int) -> PolySection:
    """The absolutely invariant section ``I = sum_i dx^i (x) d_i`` of ``T* * T``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    bundle = BundleSpec.vector_forms(1)
    fb = fiber_basis(bundle, m)
    return PolySection.constant(bundle, m, [1 if lab[0] == lab[1] else 0 for lab in fb.labels])


def _check_split_degree(k: int | None, m: int):
    if k is None:
        raise BundleError("trace_free_split needs a section of Lam^k T* * T")
    if not 1 <= k <= m:
        raise BundleError(f"trace_free_split needs 1 <= k <= m, got k={k}, m={m}")


def trace_part(s: PolySection) -> PolySection:
    """The ``Lam^{k-1} T*`` component ``(-1)^{k-1}/(m-k+1) i_X w`` of ``s``."""
    k = _vector_form_degree(s)
    _check_split_degree(k, s.m)
    return s.apply_fiber_map(trace_matrix(k, s.m), BundleSpec.forms(k - 1))


def embed_trace(f: PolySection) -> PolySection:
    """``f -> f ^ I``: the inclusion ``Lam^{k-1} T* -> Lam^k T* * T``."""
    k1 = f.bundle.form_degree
    if k1 is None:
        raise BundleError("embed_trace needs a differential form")
    m = f.m
    return _sum_vector_forms(
        [_tensor_form_field(wedge(f, PolySection.basis_element(BundleSpec.forms(1), m, (i,))),
                            coordinate_field(m, i)) for i in range(m)],
        BundleSpec.vector_forms(k1 + 1), m,
    )


def _sum_vector_forms(terms, bundle, m):
    out = PolySection.zero(bundle, m)
    for t in terms:
        out = out + t
    return out


def trace_free_split(s: PolySection) -> tuple[PolySection, PolySection]:
    """Split ``s`` in ``Lam^k T* * T`` as ``include(c) + embed_trace(f)`` with ``c`` trace-free."""
    k = _vector_form_degree(s)
    _check_split_degree(k, s.m)
    f = trace_part(s)
    c = project_section(s, BundleSpec.trace_free_forms(k))
    return c, f


def include_trace_free(c: PolySection) -> PolySection:
    if not c.bundle.trace_free:
        raise BundleError(f"expected a trace-free section, got {c.bundle}")
    k = c.bundle.factors[0].rank
    return include_section(c, BundleSpec.vector_forms(k))


def compressed_fn(K: PolySection, L: PolySection) -> PolySection:
    """Trace-free part of the Frolicher-Nijenhuis bracket of trace-free inputs."""
    if not (K.bundle.trace_free and L.bundle.trace_free):
        raise BundleError("compressed_fn needs trace-free vector-valued forms (C^k)")
    if K.m != L.m:
        raise DimensionMismatch("sections over different dimensions")
    k, l = K.bundle.factors[0].rank, L.bundle.factors[0].rank
    m = K.m
    if k + l > m:
        return PolySection.zero(BundleSpec.trace_free_forms(k + l), m)
    full = frolicher_nijenhuis(include_trace_free(K), include_trace_free(L))
    return trace_free_split(full)[0]
