"""Sparse multivariate polynomials with rational coefficients.

A polynomial is a plain ``dict`` mapping exponent tuples to ``Fraction``; zero
coefficients are never stored.  All functions return new dicts.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Sequence

Poly = dict


def padd(p: Mapping, q: Mapping, scale=1) -> Poly:
    out = dict(p)
    for a, v in q.items():
        nv = out.get(a, 0) + scale * v
        if nv:
            out[a] = nv
        else:
            out.pop(a, None)
    return out


def padd_into(acc: dict, q: Mapping, scale=1) -> None:
    for a, v in q.items():
        nv = acc.get(a, 0) + scale * v
        if nv:
            acc[a] = nv
        else:
            acc.pop(a, None)


def pscale(p: Mapping, c) -> Poly:
    if not c:
        return {}
    return {a: v * c for a, v in p.items()}


def pmul(p: Mapping, q: Mapping) -> Poly:
    out: dict = {}
    for a, u in p.items():
        for b, v in q.items():
            k = tuple(x + y for x, y in zip(a, b))
            nv = out.get(k, 0) + u * v
            if nv:
                out[k] = nv
            else:
                out.pop(k, None)
    return out


def pderiv(p: Mapping, j: int) -> Poly:
    out = {}
    for a, v in p.items():
        if a[j]:
            out[a[:j] + (a[j] - 1,) + a[j + 1:]] = v * a[j]
    return out


def pderiv_multi(p: Mapping, alpha: Sequence[int]) -> Poly:
    out = dict(p)
    for j, n in enumerate(alpha):
        for _ in range(n):
            out = pderiv(out, j)
            if not out:
                return out
    return out


def pconst(m: int, c) -> Poly:
    return {(0,) * m: Fraction(c)} if c else {}


def pmonomial(alpha: Sequence[int], c=1) -> Poly:
    return {tuple(alpha): Fraction(c)} if c else {}


def pvar(m: int, i: int) -> Poly:
    return {tuple(1 if j == i else 0 for j in range(m)): Fraction(1)}


def pdegree(p: Mapping) -> int:
    return max((sum(a) for a in p), default=-1)


def pevaluate(p: Mapping, point: Sequence) -> Fraction:
    total = Fraction(0)
    for a, v in p.items():
        term = Fraction(v)
        for x, e in zip(point, a):
            if e:
                term *= Fraction(x) ** e
        total += term
    return total


def psubstitute(p: Mapping, axis: int, value) -> Poly:
    """Set ``x_axis = value``; the result keeps the axis with exponent 0."""
    value = Fraction(value)
    out: dict = {}
    for a, v in p.items():
        k = a[:axis] + (0,) + a[axis + 1:]
        nv = out.get(k, 0) + v * value ** a[axis]
        if nv:
            out[k] = nv
        else:
            out.pop(k, None)
    return out


def pantiderivative(p: Mapping, axis: int, lower) -> Poly:
    """``x -> integral_{lower}^{x_axis} p dx_axis`` (other variables untouched)."""
    prim = {}
    for a, v in p.items():
        e = a[axis] + 1
        prim[a[:axis] + (e,) + a[axis + 1:]] = Fraction(v) / e
    return padd(prim, psubstitute(prim, axis, lower), -1)


def pintegrate_axis(p: Mapping, axis: int, lo, hi) -> Poly:
    """Definite integral over ``x_axis`` in ``[lo, hi]``; the axis exponent becomes 0."""
    prim = pantiderivative(p, axis, lo)
    return psubstitute(prim, axis, hi)


def pintegrate_box(p: Mapping, box: Sequence[tuple]) -> Fraction:
    total = Fraction(0)
    for a, v in p.items():
        term = Fraction(v)
        for (lo, hi), e in zip(box, a):
            lo, hi = Fraction(lo), Fraction(hi)
            term *= (hi ** (e + 1) - lo ** (e + 1)) / (e + 1)
        total += term
    return total


def pdrop_axis(p: Mapping, axis: int) -> Poly:
    """Remove an axis whose exponents are all zero."""
    out = {}
    for a, v in p.items():
        if a[axis]:
            raise ValueError("polynomial still depends on the dropped axis")
        out[a[:axis] + a[axis + 1:]] = v
    return out


def pinsert_axis(p: Mapping, axis: int) -> Poly:
    return {a[:axis] + (0,) + a[axis:]: v for a, v in p.items()}


def pextend(p: Mapping, axis: int, q1: Mapping) -> Poly:
    """Product ``p(x') * q1(x_axis)`` where ``q1`` is univariate (exponent tuples of length 1)."""
    out: dict = {}
    for a, u in p.items():
        for (e,), v in q1.items():
            k = a[:axis] + (e,) + a[axis:]
            nv = out.get(k, 0) + u * v
            if nv:
                out[k] = nv
            else:
                out.pop(k, None)
    return out
