"""Multi-indices, natural tensor bundle descriptors and their fiber bases.

A bundle is an ordered tensor product of *factors*; each factor is a symmetric
or alternating power of ``T`` or ``T*``.  The only other structure supported is
the trace-free part ``C^k`` of ``Lam^k T* * T``.

Fiber coordinates
-----------------
For a factor ``S^k`` or ``Lam^k`` the coordinate attached to a sorted label
``(i1, ..., ik)`` is the tensor component at that index tuple, so
``dx^1 ^ dx^2 = dx^1 (x) dx^2 - dx^2 (x) dx^1`` has coordinate 1 at ``(0, 1)``.
Trace-free coordinates are the ambient ``Lam^k T* * T`` components at the free
columns of the (canonical) kernel basis of the trace map; the remaining
ambient components are determined by them.
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

from natop.errors import BundleError, ShapeMismatch
from natop.linalg import nullspace

UP = "up"
DOWN = "down"
SYM = "sym"
ALT = "alt"

MultiIndex = tuple[int, ...]


def enumerate_multiindices(m: int, max_degree: int) -> list[MultiIndex]:
    """All multi-indices of length ``m`` with ``|alpha| <= max_degree``, graded-lex."""
    if m < 1 or max_degree < 0:
        raise ValueError("need m >= 1 and max_degree >= 0")
    out: list[MultiIndex] = []
    for deg in range(max_degree + 1):
        out.extend(multiindices_of_degree(m, deg))
    return out


@lru_cache(maxsize=None)
def multiindices_of_degree(m: int, deg: int) -> tuple[MultiIndex, ...]:
    found = []
    for combo in itertools.combinations_with_replacement(range(m), deg):
        alpha = [0] * m
        for i in combo:
            alpha[i] += 1
        found.append(tuple(alpha))
    # x^1 ranks above x^2 etc. within a degree
    return tuple(sorted(found, reverse=True))


def graded_lex_key(alpha: MultiIndex):
    return (sum(alpha), tuple(-a for a in alpha))


def alpha_factorial(alpha: MultiIndex) -> int:
    out = 1
    for a in alpha:
        out *= factorial(a)
    return out


def unit(m: int, i: int) -> MultiIndex:
    return tuple(1 if j == i else 0 for j in range(m))


@dataclass(frozen=True)
class Factor:
    """``S^rank`` or ``Lam^rank`` of ``T`` (variance ``up``) or ``T*`` (``down``)."""

    variance: str
    rank: int
    symmetry: str = SYM

    def __post_init__(self):
        if self.variance not in (UP, DOWN):
            raise BundleError(f"bad variance {self.variance!r}")
        if self.symmetry not in (SYM, ALT):
            raise BundleError(f"bad symmetry {self.symmetry!r}")
        if self.rank < 1:
            raise BundleError("factor rank must be >= 1 (rank 0 is the trivial bundle)")
        if self.rank == 1 and self.symmetry != SYM:
            object.__setattr__(self, "symmetry", SYM)

    def dual(self) -> "Factor":
        return Factor(DOWN if self.variance == UP else UP, self.rank, self.symmetry)

    def __str__(self) -> str:
        base = "T" if self.variance == UP else "T*"
        if self.rank == 1:
            return base
        head = "S" if self.symmetry == SYM else "Lam"
        return f"{head}^{self.rank} {base}"


@dataclass(frozen=True)
class BundleSpec:
    """A natural tensor bundle: ordered factors plus an optional trace-free flag."""

    factors: tuple[Factor, ...] = ()
    trace_free: bool = False

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if self.trace_free:
            f = self.factors
            ok = (
                len(f) == 2
                and f[0].variance == DOWN
                and (f[0].symmetry == ALT or f[0].rank == 1)
                and f[1] == Factor(UP, 1)
            )
            if not ok:
                raise BundleError("trace_free is only defined for Lam^k T* * T")

    # constructors -------------------------------------------------------
    @classmethod
    def scalar(cls) -> "BundleSpec":
        return cls(())

    @classmethod
    def tangent(cls) -> "BundleSpec":
        return cls((Factor(UP, 1),))

    @classmethod
    def cotangent(cls) -> "BundleSpec":
        return cls((Factor(DOWN, 1),))

    @classmethod
    def forms(cls, k: int) -> "BundleSpec":
        return cls((Factor(DOWN, k, ALT),)) if k else cls(())

    @classmethod
    def multivectors(cls, k: int) -> "BundleSpec":
        return cls((Factor(UP, k, ALT),)) if k else cls(())

    @classmethod
    def symmetric(cls, k: int, variance: str = UP) -> "BundleSpec":
        return cls((Factor(variance, k, SYM),)) if k else cls(())

    @classmethod
    def vector_forms(cls, k: int) -> "BundleSpec":
        return cls.forms(k) * cls.tangent()

    @classmethod
    def trace_free_forms(cls, k: int) -> "BundleSpec":
        if k < 1:
            raise BundleError("C^k needs k >= 1")
        return cls((Factor(DOWN, k, ALT), Factor(UP, 1)), trace_free=True)

    @classmethod
    def tensor(cls, p: int, q: int) -> "BundleSpec":
        """``T (x) ... (x) T (x) T* (x) ... (x) T*`` with ``p`` upper and ``q`` lower slots."""
        return cls(tuple([Factor(UP, 1)] * p + [Factor(DOWN, 1)] * q))

    # structure ----------------------------------------------------------
    def __mul__(self, other: "BundleSpec") -> "BundleSpec":
        if self.trace_free or other.trace_free:
            raise BundleError("trace-free bundles cannot be tensored further")
        return BundleSpec(self.factors + other.factors)

    def dual(self) -> "BundleSpec":
        if self.trace_free:
            raise BundleError("dual of a trace-free bundle is not supported")
        return BundleSpec(tuple(f.dual() for f in self.factors))

    @property
    def upper_slots(self) -> int:
        return sum(f.rank for f in self.factors if f.variance == UP)

    @property
    def lower_slots(self) -> int:
        return sum(f.rank for f in self.factors if f.variance == DOWN)

    @property
    def rank(self) -> int:
        return sum(f.rank for f in self.factors)

    @property
    def slot_variances(self) -> tuple[str, ...]:
        return tuple(v for f in self.factors for v in [f.variance] * f.rank)

    @property
    def symmetry(self) -> tuple[tuple[tuple[int, ...], str], ...]:
        """Slot groups with their symmetry tag, in slot order."""
        groups, start = [], 0
        for f in self.factors:
            groups.append((tuple(range(start, start + f.rank)), f.symmetry))
            start += f.rank
        return tuple(groups)

    @property
    def form_degree(self) -> int | None:
        """``p`` if this is ``Lam^p T*`` (``0`` for scalars), else None."""
        if self.trace_free:
            return None
        if not self.factors:
            return 0
        if len(self.factors) == 1 and self.factors[0].variance == DOWN and (
            self.factors[0].symmetry == ALT or self.factors[0].rank == 1
        ):
            return self.factors[0].rank
        return None

    @property
    def multivector_degree(self) -> int | None:
        if self.trace_free:
            return None
        if not self.factors:
            return 0
        f = self.factors[0]
        if len(self.factors) == 1 and f.variance == UP and (f.symmetry == ALT or f.rank == 1):
            return f.rank
        return None

    @property
    def symmetric_degree(self) -> int | None:
        if self.trace_free:
            return None
        if not self.factors:
            return 0
        f = self.factors[0]
        if len(self.factors) == 1 and f.variance == UP and f.symmetry == SYM:
            return f.rank
        return None

    @property
    def vector_form_degree(self) -> int | None:
        """``k`` for ``Lam^k T* * T`` (``0`` for ``T``), ignoring the trace-free flag."""
        f = self.factors
        if f == (Factor(UP, 1),):
            return 0
        if len(f) == 2 and f[1] == Factor(UP, 1) and f[0].variance == DOWN and (
            f[0].symmetry == ALT or f[0].rank == 1
        ):
            return f[0].rank
        return None

    def __str__(self) -> str:
        if self.trace_free:
            return f"C^{self.factors[0].rank}"
        if not self.factors:
            return "Lam^0"
        return " * ".join(str(f) for f in self.factors)


def _factor_labels(f: Factor, m: int) -> list[tuple[int, ...]]:
    if f.symmetry == ALT:
        return list(itertools.combinations(range(m), f.rank))
    return list(itertools.combinations_with_replacement(range(m), f.rank))


def _perm_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq`` (0 if it has repeats)."""
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    s = list(seq)
    for i in range(len(s)):
        for j in range(i + 1, len(s)):
            if s[i] > s[j]:
                sign = -sign
    return sign


@dataclass(frozen=True, eq=False)
class FiberBasis:
    """Canonical basis of the standard fiber of ``bundle`` over ``R^m``.

    ``labels[i]`` is the index tuple (concatenated over factors) of basis
    element ``i``.  The raw tensor space has one slot per tensor index.
    """

    bundle: BundleSpec
    m: int
    labels: tuple[tuple[int, ...], ...]
    _include: tuple[dict, ...] = field(repr=False)
    _project: dict = field(repr=False)
    generators: tuple[tuple[tuple[dict, ...], ...], ...] = field(repr=False, default=())
    weights: tuple[tuple[int, ...], ...] = field(repr=False, default=())

    @property
    def dimension(self) -> int:
        return len(self.labels)

    @property
    def basis_elements(self) -> tuple[tuple[int, ...], ...]:
        return self.labels

    def index(self, label: Sequence[int]) -> int:
        return self._index[tuple(label)]

    @property
    def _index(self) -> dict:
        cache = self.__dict__.get("_index_cache")
        if cache is None:
            cache = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_index_cache", cache)
        return cache

    def include(self, coords: Sequence) -> dict[tuple[int, ...], Fraction]:
        """Fiber coordinates -> raw tensor (dict over index tuples, zeros omitted)."""
        if len(coords) != self.dimension:
            raise ShapeMismatch(f"expected {self.dimension} coordinates, got {len(coords)}")
        raw: dict[tuple[int, ...], Fraction] = {}
        for c, col in zip(coords, self._include):
            if not c:
                continue
            for idx, v in col.items():
                nv = raw.get(idx, 0) + c * v
                if nv:
                    raw[idx] = nv
                else:
                    raw.pop(idx, None)
        return raw

    def project(self, raw: Mapping[tuple[int, ...], object]) -> tuple[Fraction, ...]:
        """Raw tensor -> fiber coordinates (the bundle's projector)."""
        out = [Fraction(0)] * self.dimension
        for idx, v in raw.items():
            if not v:
                continue
            for i, w in self._project.get(tuple(idx), ()):
                out[i] += w * v
        return tuple(out)

    def generator(self, i: int, j: int) -> tuple[dict, ...]:
        """Rows of the derived action of the elementary matrix ``E_ij``."""
        return self.generators[i][j]


def raw_gl_action(bundle: BundleSpec, m: int, i: int, j: int, raw: Mapping) -> dict:
    """Derived action of ``E_ij`` on a raw tensor: ``+E`` on upper, ``-E^T`` on lower slots."""
    variances = bundle.slot_variances
    out: dict[tuple[int, ...], Fraction] = {}

    def add(idx, v):
        nv = out.get(idx, 0) + v
        if nv:
            out[idx] = nv
        else:
            out.pop(idx, None)

    for idx, v in raw.items():
        for s, var in enumerate(variances):
            if var == UP and idx[s] == j:
                add(idx[:s] + (i,) + idx[s + 1:], v)
            elif var == DOWN and idx[s] == i:
                add(idx[:s] + (j,) + idx[s + 1:], -v)
    return out


def _plain_basis(bundle: BundleSpec, m: int):
    per_factor = [_factor_labels(f, m) for f in bundle.factors]
    labels = [tuple(itertools.chain.from_iterable(p)) for p in itertools.product(*per_factor)]
    include = []
    for lab in itertools.product(*per_factor):
        col: dict[tuple[int, ...], Fraction] = {}
        expansions = []
        for f, part in zip(bundle.factors, lab):
            if f.symmetry == SYM:
                perms = set(itertools.permutations(part))
                expansions.append([(p, 1) for p in sorted(perms)])
            else:
                expansions.append([(p, _perm_sign(p)) for p in itertools.permutations(part)])
        for combo in itertools.product(*expansions):
            idx = tuple(itertools.chain.from_iterable(p for p, _ in combo))
            sign = 1
            for _, s in combo:
                sign *= s
            col[idx] = Fraction(sign)
        include.append(col)
    index = {lab: i for i, lab in enumerate(labels)}
    project: dict[tuple[int, ...], list] = {}
    for idx in itertools.product(range(m), repeat=bundle.rank):
        pos, parts, weight = 0, [], Fraction(1)
        for f in bundle.factors:
            chunk = idx[pos:pos + f.rank]
            pos += f.rank
            srt = tuple(sorted(chunk))
            if f.symmetry == ALT:
                sgn = _perm_sign(chunk)
                if sgn == 0:
                    weight = Fraction(0)
                    break
                weight *= Fraction(sgn, factorial(f.rank))
            else:
                # symmetrization: permutations fixing the label / k!
                stab = 1
                for c in Counter(chunk).values():
                    stab *= factorial(c)
                weight *= Fraction(stab, factorial(f.rank))
            parts.append(srt)
        if weight:
            lab = tuple(itertools.chain.from_iterable(parts))
            project[idx] = [(index[lab], weight)]
    return tuple(labels), tuple(include), project


def trace_matrix(k: int, m: int) -> list[dict[int, Fraction]]:
    """Rows (indexed by ``Lam^{k-1}`` coordinates) of ``w (x) X -> (-1)^{k-1}/(m-k+1) i_X w``.

    Columns are ``Lam^k T* * T`` coordinates.
    """
    amb = fiber_basis(BundleSpec.vector_forms(k), m)
    low = fiber_basis(BundleSpec.forms(k - 1), m)
    scale = Fraction((-1) ** (k - 1), m - k + 1)
    rows: list[dict[int, Fraction]] = [dict() for _ in range(low.dimension)]
    for col, lab in enumerate(amb.labels):
        form_idx, j = lab[:k], lab[k]
        if j not in form_idx:
            continue
        # (i_{d_j} dx^I)_{I'} picks the slot holding j; move it to the front
        pos = form_idx.index(j)
        rest = form_idx[:pos] + form_idx[pos + 1:]
        sign = (-1) ** pos
        r = low.index(rest)
        rows[r][col] = rows[r].get(col, 0) + scale * sign
    return rows


def embed_matrix(k: int, m: int) -> list[dict[int, Fraction]]:
    """Columns (one per ``Lam^{k-1}`` coordinate) of ``f -> f ^ I`` in ``Lam^k T* * T``."""
    amb = fiber_basis(BundleSpec.vector_forms(k), m)
    low = fiber_basis(BundleSpec.forms(k - 1), m)
    cols: list[dict[int, Fraction]] = []
    for lab in low.labels:
        col: dict[int, Fraction] = {}
        for j in range(m):
            if j in lab:
                continue
            seq = lab + (j,)
            sign = _perm_sign(seq)
            col[amb.index(tuple(sorted(seq)) + (j,))] = Fraction(sign)
        cols.append(col)
    return cols


def _trace_free_basis(bundle: BundleSpec, m: int):
    k = bundle.factors[0].rank
    if k > m:
        # Lam^k T* vanishes, and so does C^k
        return (), (), {}
    amb = fiber_basis(BundleSpec.vector_forms(k), m)
    tr = trace_matrix(k, m)
    emb = embed_matrix(k, m)
    kernel = nullspace(tr, amb.dimension)
    # nullspace() inserts each vector's free column first
    free = [next(iter(vec)) for vec in kernel]
    labels = tuple(amb.labels[c] for c in free)
    include = []
    for vec in kernel:
        col: dict[tuple[int, ...], Fraction] = {}
        for a, v in vec.items():
            for idx, w in amb._include[a].items():
                nv = col.get(idx, 0) + v * w
                if nv:
                    col[idx] = nv
                else:
                    col.pop(idx, None)
        include.append(col)
    # ambient coords -> trace-free coords: select free columns of (1 - emb o tr)
    free_pos = {c: i for i, c in enumerate(free)}
    q: dict[int, dict[int, Fraction]] = {}
    for a in range(amb.dimension):
        vec = {a: Fraction(1)}
        for r, row in enumerate(tr):
            t = row.get(a)
            if t:
                for b, e in emb[r].items():
                    vec[b] = vec.get(b, 0) - t * e
        q[a] = {free_pos[b]: v for b, v in vec.items() if v and b in free_pos}
    project: dict[tuple[int, ...], list] = {}
    for idx, entries in amb._project.items():
        acc: dict[int, Fraction] = {}
        for a, w in entries:
            for i, v in q[a].items():
                acc[i] = acc.get(i, 0) + w * v
        acc = {i: v for i, v in acc.items() if v}
        if acc:
            project[idx] = sorted(acc.items())
    return labels, tuple(include), project


@lru_cache(maxsize=None)
def fiber_basis(bundle: BundleSpec, m: int) -> FiberBasis:
    """Canonical fiber basis of ``bundle`` in dimension ``m`` (cached)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if bundle.trace_free:
        labels, include, project = _trace_free_basis(bundle, m)
    else:
        labels, include, project = _plain_basis(bundle, m)
    fb = FiberBasis(bundle, m, labels, include, project)
    gens = []
    for i in range(m):
        row = []
        for j in range(m):
            mat = [dict() for _ in labels]
            for col, inc in enumerate(include):
                image = fb.project(raw_gl_action(bundle, m, i, j, inc))
                for r, v in enumerate(image):
                    if v:
                        mat[r][col] = v
            row.append(tuple(mat))
        gens.append(tuple(row))
    weights = []
    for b in range(len(labels)):
        w = []
        for j in range(m):
            mat = gens[j][j]
            assert all(r == b or b not in mat[r] for r in range(len(labels))), "basis is not a weight basis"
            w.append(int(mat[b].get(b, 0)))
        weights.append(tuple(w))
    object.__setattr__(fb, "generators", tuple(gens))
    object.__setattr__(fb, "weights", tuple(weights))
    return fb


def fiber_dimension(bundle: BundleSpec, m: int) -> int:
    return fiber_basis(bundle, m).dimension


def _as_raw(bundle: BundleSpec, raw_tensor, m: int | None) -> tuple[dict, int]:
    if isinstance(raw_tensor, Mapping):
        if m is None:
            raise ShapeMismatch("m is required when the raw tensor is given as a mapping")
        for idx in raw_tensor:
            if len(idx) != bundle.rank or any(not 0 <= i < m for i in idx):
                raise ShapeMismatch(f"raw index {idx} does not fit {bundle} over R^{m}")
        return dict(raw_tensor), m
    data = raw_tensor.tolist() if hasattr(raw_tensor, "tolist") else raw_tensor
    if bundle.rank == 0:
        if isinstance(data, (list, tuple)):
            if len(data) != 1:
                raise ShapeMismatch("scalar bundle expects a single value")
            data = data[0]
        return {(): data}, m or 1
    shape, probe = [], data
    while isinstance(probe, (list, tuple)):
        shape.append(len(probe))
        probe = probe[0] if probe else None
    if len(shape) != bundle.rank or len(set(shape)) != 1:
        raise ShapeMismatch(f"raw tensor of shape {tuple(shape)} does not fit {bundle}")
    if m is not None and shape[0] != m:
        raise ShapeMismatch(f"raw tensor has side {shape[0]}, expected {m}")
    m = shape[0]
    raw = {}
    for idx in itertools.product(range(m), repeat=bundle.rank):
        v = data
        for i in idx:
            v = v[i]
        if v:
            raw[idx] = v
    return raw, m


def project(bundle: BundleSpec, raw_tensor, m: int | None = None) -> tuple[Fraction, ...]:
    """Project a raw tensor (nested sequence, array, or index->value map) onto the fiber."""
    raw, m = _as_raw(bundle, raw_tensor, m)
    return fiber_basis(bundle, m).project(raw)


def include(bundle: BundleSpec, coords: Sequence, m: int) -> dict[tuple[int, ...], Fraction]:
    return fiber_basis(bundle, m).include(coords)


def apply_rows(rows: Sequence[Mapping[int, Fraction]], vec: Sequence) -> tuple:
    return tuple(sum((v * vec[c] for c, v in row.items()), Fraction(0)) for row in rows)


def jet_dimension(bundle: BundleSpec, m: int, r: int) -> int:
    """``dim V * sum_{i<=r} C(m+i-1, i)``, the fiber dimension of r-jets."""
    return fiber_dimension(bundle, m) * comb(m + r, m)


def as_fractions(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in values)
