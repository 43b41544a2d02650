"""Compactly supported tensor-product spline sections with exact arithmetic.

A :class:`SplineSection` lives on a uniform rational grid over a box: axis
``i`` has ``knots[i]`` equally spaced knots from ``box[i][0]`` to
``box[i][1]``.  Each grid cell carries a :class:`PolySection` written in global
coordinates; cells that are absent are zero, and so is everything outside the
box.  ``smoothness`` records the global differentiability class ``C^s``
(``-1`` means bounded and piecewise polynomial only) so that operations which
need derivatives can refuse instead of silently producing distributions.
"""
from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from importlib import resources
from typing import Callable, Mapping, Sequence

from natop import poly as P
from natop.calculus import PolySection, _frac_str
from natop.errors import DimensionMismatch, ShapeMismatch, SmoothnessExhausted
from natop.tensor import BundleSpec, fiber_basis

Cell = tuple[int, ...]


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    a, b = abs(Fraction(a)), abs(Fraction(b))
    if not a:
        return b
    if not b:
        return a
    den = a.denominator * b.denominator
    return Fraction(math.gcd(a.numerator * b.denominator, b.numerator * a.denominator), den)


@dataclass(frozen=True)
class Grid:
    box: tuple[tuple[Fraction, Fraction], ...]
    knots: tuple[int, ...]

    def __post_init__(self):
        box = tuple((Fraction(lo), Fraction(hi)) for lo, hi in self.box)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "knots", tuple(int(k) for k in self.knots))
        if len(box) != len(self.knots):
            raise ShapeMismatch("box and knots must have one entry per axis")
        for (lo, hi), k in zip(box, self.knots):
            if not lo < hi or k < 2:
                raise ShapeMismatch("each axis needs lo < hi and at least 2 knots")

    @property
    def m(self) -> int:
        return len(self.knots)

    def step(self, axis: int) -> Fraction:
        lo, hi = self.box[axis]
        return (hi - lo) / (self.knots[axis] - 1)

    def cells_per_axis(self) -> tuple[int, ...]:
        return tuple(k - 1 for k in self.knots)

    def interval(self, axis: int, k: int) -> tuple[Fraction, Fraction]:
        lo = self.box[axis][0]
        h = self.step(axis)
        return lo + k * h, lo + (k + 1) * h

    def cell_box(self, cell: Cell) -> list[tuple[Fraction, Fraction]]:
        return [self.interval(i, k) for i, k in enumerate(cell)]

    def locate(self, axis: int, x) -> int | None:
        """Index of the cell containing ``x`` along ``axis`` (right-closed at the top)."""
        lo, hi = self.box[axis]
        x = Fraction(x)
        if x < lo or x > hi:
            return None
        k = math.floor((x - lo) / self.step(axis))
        return min(k, self.knots[axis] - 2)

    def drop_axis(self, axis: int) -> "Grid":
        return Grid(self.box[:axis] + self.box[axis + 1:], self.knots[:axis] + self.knots[axis + 1:])

    def insert_axis(self, axis: int, box1, knots1: int) -> "Grid":
        return Grid(self.box[:axis] + (tuple(box1),) + self.box[axis:], self.knots[:axis] + (knots1,) + self.knots[axis:])


def common_grid(*grids: Grid) -> Grid:
    """Smallest uniform grid refining all ``grids`` on the hull of their boxes."""
    m = grids[0].m
    if any(g.m != m for g in grids):
        raise DimensionMismatch("grids over different dimensions")
    box, knots = [], []
    for i in range(m):
        lo = min(g.box[i][0] for g in grids)
        hi = max(g.box[i][1] for g in grids)
        h = Fraction(0)
        for g in grids:
            h = _frac_gcd(h, g.step(i))
            h = _frac_gcd(h, g.box[i][0] - lo)
        box.append((lo, hi))
        knots.append(int((hi - lo) / h) + 1)
    return Grid(tuple(box), tuple(knots))


class SplineSection:
    """Piecewise-polynomial section of ``bundle`` on a uniform grid, zero outside its box."""

    __slots__ = ("bundle", "grid", "smoothness", "cells")

    def __init__(self, bundle: BundleSpec, grid: Grid, cells: Mapping[Cell, PolySection] | None = None,
                 smoothness: int = -1):
        self.bundle = bundle
        self.grid = grid
        self.smoothness = int(smoothness)
        clean = {}
        ncell = grid.cells_per_axis()
        for cell, poly in (cells or {}).items():
            cell = tuple(cell)
            if len(cell) != grid.m or any(not 0 <= c < n for c, n in zip(cell, ncell)):
                raise ShapeMismatch(f"cell {cell} is outside the grid")
            if poly.bundle != bundle or poly.m != grid.m:
                raise DimensionMismatch(f"cell {cell} holds a section of {poly.bundle} over R^{poly.m}")
            if not poly.is_zero():
                clean[cell] = poly
        self.cells = dict(sorted(clean.items()))

    # basic properties ----------------------------------------------------
    @property
    def m(self) -> int:
        return self.grid.m

    @property
    def box(self):
        return self.grid.box

    @property
    def knots(self):
        return self.grid.knots

    @property
    def degree(self) -> int:
        """Largest exponent of any single variable over all cells."""
        return max((max(a) if a else 0 for p in self.cells.values() for a in p.coefficients), default=0)

    def is_zero(self) -> bool:
        return not self.cells

    @classmethod
    def zero(cls, bundle: BundleSpec, grid: Grid, smoothness: int = 10**6) -> "SplineSection":
        return cls(bundle, grid, {}, smoothness)

    def __repr__(self) -> str:
        return f"SplineSection({self.bundle}, m={self.m}, knots={self.knots}, cells={len(self.cells)}, C^{self.smoothness})"

    # grid handling -------------------------------------------------------
    def refine(self, grid: Grid) -> "SplineSection":
        """Re-express on a grid whose cells each lie inside one old cell or outside the old box."""
        if grid == self.grid:
            return self
        out = {}
        for cell in itertools.product(*(range(n) for n in grid.cells_per_axis())):
            old = []
            for i, k in enumerate(cell):
                a, b = grid.interval(i, k)
                lo, hi = self.grid.box[i]
                if b <= lo or a >= hi:
                    old = None
                    break
                j = self.grid.locate(i, (a + b) / 2)
                oa, ob = self.grid.interval(i, j)
                if a < oa or b > ob:
                    raise ShapeMismatch("target grid does not refine this spline's grid")
                old.append(j)
            if old is not None and tuple(old) in self.cells:
                out[cell] = self.cells[tuple(old)]
        return SplineSection(self.bundle, grid, out, self.smoothness)

    def _aligned(self, other: "SplineSection"):
        if self.m != other.m:
            raise DimensionMismatch("splines over different dimensions")
        if self.grid == other.grid:
            return self, other
        g = common_grid(self.grid, other.grid)
        return self.refine(g), other.refine(g)

    # arithmetic ----------------------------------------------------------
    def _zip(self, other: "SplineSection", fn: Callable, bundle: BundleSpec, smooth: int, need_both: bool):
        a, b = self._aligned(other)
        keys = (a.cells.keys() & b.cells.keys()) if need_both else (a.cells.keys() | b.cells.keys())
        out = {}
        for c in keys:
            pa = a.cells.get(c) or PolySection.zero(a.bundle, a.m)
            pb = b.cells.get(c) or PolySection.zero(b.bundle, b.m)
            out[c] = fn(pa, pb)
        return SplineSection(bundle, a.grid, out, smooth)

    def __add__(self, other: "SplineSection") -> "SplineSection":
        if self.bundle != other.bundle:
            raise DimensionMismatch(f"cannot add sections of {self.bundle} and {other.bundle}")
        return self._zip(other, lambda p, q: p + q, self.bundle, min(self.smoothness, other.smoothness), False)

    def __neg__(self) -> "SplineSection":
        return self.scale(-1)

    def __sub__(self, other: "SplineSection") -> "SplineSection":
        return self + (-other)

    def scale(self, c) -> "SplineSection":
        c = Fraction(c)
        if not c:
            return SplineSection.zero(self.bundle, self.grid, self.smoothness)
        return SplineSection(self.bundle, self.grid, {k: p.scale(c) for k, p in self.cells.items()}, self.smoothness)

    def __rmul__(self, c) -> "SplineSection":
        return self.scale(c)

    def times_poly(self, f: Mapping) -> "SplineSection":
        return self.map_cells(lambda p: p.times_poly(f), self.bundle)

    def map_cells(self, fn: Callable[[PolySection], PolySection], bundle: BundleSpec, smoothness: int | None = None):
        out = {k: fn(p) for k, p in self.cells.items()}
        return SplineSection(bundle, self.grid, out, self.smoothness if smoothness is None else smoothness)

    def bilinear(self, other: "SplineSection", fn: Callable, bundle: BundleSpec) -> "SplineSection":
        """Cellwise ``fn(p, q)`` for a bilinear pointwise ``fn`` (zero wherever either factor is)."""
        return self._zip(other, fn, bundle, min(self.smoothness, other.smoothness), True)

    def require_smoothness(self, order: int):
        """Refuse unless derivatives of order ``order`` are honest piecewise functions."""
        if self.smoothness < order - 1:
            raise SmoothnessExhausted(
                f"a C^{self.smoothness} spline cannot be differentiated {order} time(s)"
            )

    def derivative(self, j: int) -> "SplineSection":
        self.require_smoothness(1)
        return self.map_cells(lambda p: p.derivative(j), self.bundle, self.smoothness - 1)

    def value_at(self, point: Sequence) -> tuple[Fraction, ...]:
        cell = []
        for i, x in enumerate(point):
            k = self.grid.locate(i, x)
            if k is None:
                return (Fraction(0),) * fiber_basis(self.bundle, self.m).dimension
            cell.append(k)
        p = self.cells.get(tuple(cell))
        if p is None:
            return (Fraction(0),) * fiber_basis(self.bundle, self.m).dimension
        return p.value_at(point)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SplineSection):
            return NotImplemented
        if self.bundle != other.bundle or self.m != other.m:
            return False
        return (self - other).is_zero()

    __hash__ = None

    # serialization -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "bundle": str(self.bundle),
            "m": self.m,
            "box": [[_frac_str(lo), _frac_str(hi)] for lo, hi in self.box],
            "knots": list(self.knots),
            "degree": self.degree,
            "smoothness": self.smoothness,
            "cells": {",".join(map(str, c)): p.to_dict()["coefficients"] for c, p in self.cells.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "SplineSection":
        from natop.parser import parse_bundle

        bundle = parse_bundle(data["bundle"])
        grid = Grid(tuple((Fraction(lo), Fraction(hi)) for lo, hi in data["box"]), tuple(data["knots"]))
        cells = {}
        for key, coeffs in data["cells"].items():
            cell = tuple(int(x) for x in key.split(","))
            cells[cell] = PolySection.from_dict({"bundle": data["bundle"], "m": grid.m, "coefficients": coeffs})
        return cls(bundle, grid, cells, int(data.get("smoothness", -1)))


# ---------------------------------------------------------------------------
# B-splines


def _upoly_shift(p: Mapping) -> dict:
    return {(e + 1,): v for (e,), v in p.items()}


def _bspline(t: tuple[Fraction, ...], start: int, degree: int) -> dict[int, dict]:
    if degree == 0:
        return {start: {(0,): Fraction(1)}}
    out: dict[int, dict] = {}
    d1 = t[start + degree] - t[start]
    for c, p in _bspline(t, start, degree - 1).items():
        # (x - t_i) / (t_{i+d} - t_i) * B_{i,d-1}
        term = P.padd(_upoly_shift(p), P.pscale(p, -t[start]))
        P.padd_into(out.setdefault(c, {}), P.pscale(term, 1 / d1))
    d2 = t[start + degree + 1] - t[start + 1]
    for c, p in _bspline(t, start + 1, degree - 1).items():
        # (t_{i+d+1} - x) / (t_{i+d+1} - t_{i+1}) * B_{i+1,d-1}
        term = P.padd(P.pscale(p, t[start + degree + 1]), _upoly_shift(p), -1)
        P.padd_into(out.setdefault(c, {}), P.pscale(term, 1 / d2))
    return {c: p for c, p in out.items() if p}


def bspline_pieces(breaks: Sequence, start: int, degree: int) -> dict[int, dict]:
    """Exact Cox-de Boor B-spline on ``breaks[start : start + degree + 2]`` as ``cell -> poly``.

    Cell ``c`` is the interval ``[breaks[c], breaks[c+1]]``; polynomials are
    univariate dicts keyed by 1-tuples.
    """
    t = tuple(Fraction(b) for b in breaks)
    if start < 0 or start + degree + 1 >= len(t):
        raise ShapeMismatch("not enough knots for this B-spline")
    return _bspline(t, start, degree)


def _axis_poly(p1: Mapping, axis: int, m: int) -> dict:
    """Embed a univariate poly as a function of ``x_axis`` in ``R^m``."""
    return {tuple(e if i == axis else 0 for i in range(m)): v for (e,), v in p1.items()}


def tensor_bspline(bundle: BundleSpec, grid: Grid, starts: Sequence[int], degree: int,
                   component: int = 0, coeff=1) -> SplineSection:
    """``coeff * prod_i B_{starts[i], degree}(x_i)`` in fiber coordinate ``component``.

    The B-spline along each axis uses the grid's own knots, so it must fit
    inside the box; the result is ``C^{degree-1}`` and vanishes on the boundary.
    """
    m = grid.m
    per_axis = []
    for i, s in enumerate(starts):
        lo = grid.box[i][0]
        breaks = [lo + k * grid.step(i) for k in range(grid.knots[i])]
        per_axis.append(sorted(bspline_pieces(breaks, s, degree).items()))
    dim = fiber_basis(bundle, m).dimension
    cells = {}
    for combo in itertools.product(*per_axis):
        prod = P.pconst(m, coeff)
        for i, (_, p1) in enumerate(combo):
            prod = P.pmul(prod, _axis_poly(p1, i, m))
        comps = [dict() for _ in range(dim)]
        comps[component] = prod
        cells[tuple(c for c, _ in combo)] = PolySection.from_components(bundle, m, comps)
    return SplineSection(bundle, grid, cells, degree - 1)


def random_spline(bundle: BundleSpec, grid: Grid, degree: int, rng: random.Random,
                  density: float = 0.5, max_terms: int | None = None) -> SplineSection:
    """Random combination of interior tensor-product B-splines with small rational weights."""
    m = grid.m
    ranges = [range(grid.knots[i] - degree - 1) for i in range(m)]
    if any(len(r) == 0 for r in ranges):
        raise ShapeMismatch(f"grid {grid.knots} is too coarse for degree {degree}")
    dim = fiber_basis(bundle, m).dimension
    out = SplineSection.zero(bundle, grid, degree - 1)
    terms = 0
    for starts in itertools.product(*ranges):
        for comp in range(dim):
            if rng.random() > density:
                continue
            c = Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 3))
            out = out + tensor_bspline(bundle, grid, starts, degree, comp, c)
            terms += 1
            if max_terms is not None and terms >= max_terms:
                return out
    if out.is_zero():
        starts = tuple(r[0] for r in ranges)
        out = tensor_bspline(bundle, grid, starts, degree, rng.randrange(dim), 1)
    return out


@lru_cache(maxsize=None)
def psi() -> SplineSection:
    """Pinned reference bump on ``[0, 1]``: cubic B-spline on 5 uniform knots, unit integral."""
    text = resources.files("natop").joinpath("data/psi.json").read_text()
    return SplineSection.from_dict(json.loads(text))


def psi_reference() -> SplineSection:
    """Recompute the pinned bump from Cox-de Boor (used to check the data file)."""
    grid = Grid(((0, 1),), (5,))
    return tensor_bspline(BundleSpec.scalar(), grid, (0,), 3, 0, 4)


def integrate_axis(s: SplineSection, axis: int):
    """Integrate a scalar spline over ``x_axis``; returns a spline in the other variables, or a number if m = 1."""
    _require_scalar(s)
    m = s.m
    if m == 1:
        return sum((P.pintegrate_box(p.component(0), s.grid.cell_box(c)) for c, p in s.cells.items()), Fraction(0))
    out: dict[Cell, dict] = {}
    for c, p in s.cells.items():
        lo, hi = s.grid.interval(axis, c[axis])
        q = P.pdrop_axis(P.pintegrate_axis(p.component(0), axis, lo, hi), axis)
        P.padd_into(out.setdefault(c[:axis] + c[axis + 1:], {}), q)
    grid = s.grid.drop_axis(axis)
    cells = {c: PolySection.from_components(s.bundle, m - 1, [q]) for c, q in out.items()}
    return SplineSection(s.bundle, grid, cells, s.smoothness)


def antiderivative(s: SplineSection, axis: int) -> SplineSection:
    """``g(x) = integral_{-inf}^{x_axis} s dt``; refuses unless every axis line integrates to 0."""
    _require_scalar(s)
    m = s.m
    lines: dict[Cell, list] = {}
    for c in s.cells:
        lines.setdefault(c[:axis] + c[axis + 1:], []).append(c[axis])
    n = s.grid.cells_per_axis()[axis]
    out = {}
    for rest in lines:
        acc: dict = {}
        for k in range(n):
            c = rest[:axis] + (k,) + rest[axis:]
            lo, hi = s.grid.interval(axis, k)
            p = s.cells[c].component(0) if c in s.cells else {}
            cell_poly = P.padd(acc, P.pantiderivative(p, axis, lo))
            if cell_poly:
                out[c] = PolySection.from_components(s.bundle, m, [cell_poly])
            acc = P.padd(acc, P.pintegrate_axis(p, axis, lo, hi))
        if acc:
            raise ValueError("antiderivative is not compactly supported: a line integral is nonzero")
    return SplineSection(s.bundle, s.grid, out, s.smoothness + 1)


def extend(s, factor: SplineSection, axis: int) -> SplineSection:
    """``factor(x_axis) * s(other variables)`` for a 1-D scalar spline ``factor``.

    ``s`` may be a number when it is a function of zero variables.
    """
    _require_scalar(factor)
    if factor.m != 1:
        raise DimensionMismatch("extend needs a one-dimensional factor")
    if not isinstance(s, SplineSection):
        return factor.scale(s) if s else SplineSection.zero(factor.bundle, factor.grid)
    _require_scalar(s)
    m = s.m + 1
    grid = s.grid.insert_axis(axis, factor.grid.box[0], factor.grid.knots[0])
    cells = {}
    for c, p in s.cells.items():
        for (k,), q in factor.cells.items():
            poly = P.pextend(p.component(0), axis, q.component(0))
            cells[c[:axis] + (k,) + c[axis:]] = PolySection.from_components(s.bundle, m, [poly])
    return SplineSection(s.bundle, grid, cells, min(s.smoothness, factor.smoothness))


def _require_scalar(s: SplineSection):
    if s.bundle != BundleSpec.scalar():
        raise DimensionMismatch(f"expected a scalar spline, got a section of {s.bundle}")
