"""Exact sparse linear algebra over the rationals.

Rows are ``dict[int, Fraction | int]`` keyed by column.  Elimination is done
fraction-free on primitive integer rows (each row is kept with coprime integer
entries) and only converted back to ``Fraction`` for the final reduced form.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Mapping, Sequence


def _primitive(row: Mapping[int, Fraction | int]) -> dict[int, int]:
    """Scale a rational row to coprime integers with a positive leading entry."""
    items = [(c, Fraction(v)) for c, v in row.items() if v != 0]
    if not items:
        return {}
    den = 1
    for _, v in items:
        den = lcm(den, v.denominator)
    ints = {c: int(v * den) for c, v in items}
    g = 0
    for v in ints.values():
        g = gcd(g, v)
    lead = min(ints)
    if ints[lead] < 0:
        g = -g
    return {c: v // g for c, v in ints.items()}


def _combine(a: dict[int, int], b: dict[int, int], col: int) -> dict[int, int]:
    """Return a primitive multiple of ``b[col]*a - a[col]*b`` (kills ``col``)."""
    fa, fb = b[col], a[col]
    out = {c: fa * v for c, v in a.items()}
    for c, v in b.items():
        nv = out.get(c, 0) - fb * v
        if nv:
            out[c] = nv
        else:
            out.pop(c, None)
    out.pop(col, None)
    return _primitive(out)


class Echelon:
    """Incremental sparse row echelon form.

    Rows are fed one at a time with :meth:`add`.  Each stored pivot row has its
    pivot at its smallest column.  When a new row collides with an existing
    pivot, the sparser of the two keeps the pivot slot.
    """

    def __init__(self, ncols: int, max_nonzeros: int | None = None):
        self.ncols = ncols
        self.pivots: dict[int, dict[int, int]] = {}
        self.max_nonzeros = max_nonzeros
        self._nnz = 0

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def add(self, row: Mapping[int, Fraction | int]) -> bool:
        """Reduce ``row`` against the pivots; return True if the rank grew."""
        r = _primitive(row)
        while r:
            lead = min(r)
            piv = self.pivots.get(lead)
            if piv is None:
                self.pivots[lead] = r
                self._nnz += len(r)
                if self.max_nonzeros is not None and self._nnz > self.max_nonzeros:
                    from natop.errors import ResourceCapExceeded

                    raise ResourceCapExceeded(
                        f"echelon form exceeded {self.max_nonzeros} nonzero entries"
                    )
                return True
            if len(r) < len(piv):
                self.pivots[lead] = r
                self._nnz += len(r) - len(piv)
                r, piv = piv, r
            r = _combine(r, piv, lead)
        return False

    def reduced(self) -> dict[int, dict[int, Fraction]]:
        """Reduced row echelon form: pivot column -> row with pivot entry 1."""
        out: dict[int, dict[int, Fraction]] = {}
        for p in sorted(self.pivots, reverse=True):
            row = {c: Fraction(v) for c, v in self.pivots[p].items()}
            for c in [c for c in row if c != p and c in out]:
                f = row.pop(c)
                for cc, vv in out[c].items():
                    if cc == c:
                        continue
                    nv = row.get(cc, 0) - f * vv
                    if nv:
                        row[cc] = nv
                    else:
                        row.pop(cc, None)
            lead = row[p]
            out[p] = {c: v / lead for c, v in row.items()}
        return out

    def nullspace(self) -> list[dict[int, Fraction]]:
        """Canonical nullspace basis: one vector per free column, in column order."""
        rref = self.reduced()
        free = [c for c in range(self.ncols) if c not in rref]
        basis = []
        for f in free:
            vec = {f: Fraction(1)}
            for p, row in rref.items():
                v = row.get(f)
                if v:
                    vec[p] = -v
            basis.append(vec)
        return basis


def nullspace(rows: Iterable[Mapping[int, Fraction | int]], ncols: int) -> list[dict[int, Fraction]]:
    ech = Echelon(ncols)
    for row in rows:
        ech.add(row)
    return ech.nullspace()


def rank(rows: Iterable[Mapping[int, Fraction | int]], ncols: int) -> int:
    ech = Echelon(ncols)
    for row in rows:
        ech.add(row)
    return ech.rank


def row_space_basis(rows: Iterable[Mapping[int, Fraction | int]], ncols: int) -> list[dict[int, Fraction]]:
    """RREF rows of the span, ordered by pivot column."""
    ech = Echelon(ncols)
    for row in rows:
        ech.add(row)
    red = ech.reduced()
    return [red[p] for p in sorted(red)]


def solve_in_span(
    vectors: Sequence[Mapping[int, Fraction | int]], target: Mapping[int, Fraction | int]
) -> list[Fraction] | None:
    """Coordinates ``y`` with ``sum(y[i] * vectors[i]) == target``, or None.

    Vectors are assumed linearly independent; the solution is then unique.
    """
    n = len(vectors)
    # transpose: one equation per column, unknowns y_0..y_{n-1}, rhs in column n
    cols: dict[int, dict[int, Fraction]] = {}
    for i, vec in enumerate(vectors):
        for c, v in vec.items():
            if v:
                cols.setdefault(c, {})[i] = Fraction(v)
    for c, v in target.items():
        if v:
            cols.setdefault(c, {})[n] = -Fraction(v)
    ech = Echelon(n + 1)
    for c in sorted(cols):
        ech.add(cols[c])
    red = ech.reduced()
    if n in red:
        return None
    sol = [Fraction(0)] * n
    for p, row in red.items():
        sol[p] = -row.get(n, Fraction(0))
    for p in range(n):
        if p not in red:
            # free unknown: vectors were dependent, pin it to zero
            sol[p] = Fraction(0)
    return sol
