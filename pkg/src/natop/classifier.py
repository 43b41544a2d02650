"""Exact classification of multilinear natural operators of bounded order.

A k-linear operator of order <= r with constant coefficients is stored as an
:class:`OperatorScheme`::

    D(s_1, ..., s_k)_b = sum c[(alpha^1..alpha^k), (a^1..a^k), b] * prod_i d^{alpha^i} s_i^{a^i}

Naturality is the infinitesimal equivariance ``L_X D(s) = sum_i D(.., L_X s_i, ..)``.
Constant coefficients give translation invariance, and by translation it is
enough to impose the identity at the origin for the polynomial fields
``X = x^beta d_l``.  There both sides are multilinear in the jets of the
``s_i`` (up to order r+1), and every jet monomial yields one linear row on the
coefficients.  Diagonal fields ``x^j d_j`` force a coefficient to vanish
unless its weight balances, so by default only balanced coefficients are
kept as unknowns and the diagonal rows are skipped.
"""
from __future__ import annotations

import itertools
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from natop import poly as P
from natop.calculus import PolySection, _frac_str, lie_derivative
from natop.errors import BundleError, ResourceCapExceeded, SignatureMismatch
from natop.linalg import Echelon, row_space_basis, solve_in_span
from natop.tensor import (
    DOWN,
    UP,
    BundleSpec,
    alpha_factorial,
    enumerate_multiindices,
    fiber_basis,
    graded_lex_key,
    multiindices_of_degree,
    unit,
)

DEFAULT_MAX_UNKNOWNS = 200_000
DEFAULT_MAX_NONZEROS = 20_000_000

Key = tuple  # ((alpha^1, ..., alpha^k), (a^1, ..., a^k), b)


def default_max_unknowns() -> int:
    env = os.environ.get("NATOP_MAX_UNKNOWNS")
    return int(env) if env else DEFAULT_MAX_UNKNOWNS


def _key_order(key: Key):
    alphas, comps, b = key
    return (tuple(graded_lex_key(a) for a in alphas), comps, b)


@dataclass(frozen=True)
class OperatorScheme:
    """Constant-coefficient k-linear operator ``E_1 x ... x E_k -> E`` of order <= r over ``R^m``."""

    sources: tuple[BundleSpec, ...]
    target: BundleSpec
    r: int
    m: int
    coefficients: Mapping[Key, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        k = len(self.sources)
        dims = [fiber_basis(E, self.m).dimension for E in self.sources]
        tdim = fiber_basis(self.target, self.m).dimension
        clean = {}
        for key, v in dict(self.coefficients).items():
            alphas, comps, b = key
            alphas = tuple(tuple(a) for a in alphas)
            comps = tuple(comps)
            if len(alphas) != k or len(comps) != k:
                raise SignatureMismatch(f"coefficient key {key} does not match arity {k}")
            if any(len(a) != self.m or sum(a) > self.r for a in alphas):
                raise SignatureMismatch(f"coefficient key {key} exceeds order {self.r} or has wrong length")
            if any(not 0 <= c < d for c, d in zip(comps, dims)) or not 0 <= b < tdim:
                raise SignatureMismatch(f"coefficient key {key} has an out-of-range component")
            v = Fraction(v)
            if v:
                clean[(alphas, comps, b)] = v
        object.__setattr__(self, "coefficients", dict(sorted(clean.items(), key=lambda kv: _key_order(kv[0]))))

    @property
    def arity(self) -> int:
        return len(self.sources)

    def is_zero(self) -> bool:
        return not self.coefficients

    def signature(self) -> tuple:
        return (self.sources, self.target, self.m)

    def scale(self, c) -> "OperatorScheme":
        c = Fraction(c)
        return self._with({k: v * c for k, v in self.coefficients.items()})

    def __add__(self, other: "OperatorScheme") -> "OperatorScheme":
        if self.signature() != other.signature():
            raise SignatureMismatch("cannot add schemes with different signatures")
        out = dict(self.coefficients)
        for k, v in other.coefficients.items():
            out[k] = out.get(k, 0) + v
        return OperatorScheme(self.sources, self.target, max(self.r, other.r), self.m, out)

    def __sub__(self, other: "OperatorScheme") -> "OperatorScheme":
        return self + other.scale(-1)

    def __rmul__(self, c) -> "OperatorScheme":
        return self.scale(c)

    def _with(self, coeffs) -> "OperatorScheme":
        return OperatorScheme(self.sources, self.target, self.r, self.m, coeffs)

    def permute_sources(self, perm: Sequence[int]) -> "OperatorScheme":
        """``(sigma D)(s_1..s_k) = D(s_{perm[0]}, ..., s_{perm[k-1]})``."""
        k = self.arity
        if sorted(perm) != list(range(k)):
            raise ValueError(f"{perm} is not a permutation of range({k})")
        if any(self.sources[perm[i]] != self.sources[i] for i in range(k)):
            raise SignatureMismatch("can only permute slots carrying the same bundle")
        out = {}
        for (alphas, comps, b), v in self.coefficients.items():
            # slot i of D receives s_{perm[i]}; re-key by the section's own slot
            na, nc = [None] * k, [None] * k
            for i in range(k):
                na[perm[i]], nc[perm[i]] = alphas[i], comps[i]
            key = (tuple(na), tuple(nc), b)
            out[key] = out.get(key, 0) + v
        return self._with(out)

    def to_dict(self) -> dict:
        return {
            "terms": [
                {
                    "alphas": [list(a) for a in alphas],
                    "src_components": list(comps),
                    "tgt_component": b,
                    "coeff": _frac_str(v),
                }
                for (alphas, comps, b), v in self.coefficients.items()
            ]
        }

    @classmethod
    def from_dict(cls, data: Mapping, sources, target, r: int, m: int) -> "OperatorScheme":
        coeffs = {}
        for t in data["terms"]:
            key = (tuple(tuple(a) for a in t["alphas"]), tuple(t["src_components"]), int(t["tgt_component"]))
            coeffs[key] = Fraction(t["coeff"])
        return cls(tuple(sources), target, r, m, coeffs)


def zero_scheme(sources, target, r: int, m: int) -> OperatorScheme:
    return OperatorScheme(tuple(sources), target, r, m, {})


# ---------------------------------------------------------------------------
# evaluation


def _check_sections(scheme: OperatorScheme, sections: Sequence[PolySection]):
    if len(sections) != scheme.arity:
        raise SignatureMismatch(f"scheme takes {scheme.arity} arguments, got {len(sections)}")
    for i, (s, E) in enumerate(zip(sections, scheme.sources)):
        if s.bundle != E:
            raise SignatureMismatch(f"argument {i} is a section of {s.bundle}, scheme expects {E}")
        if s.m != scheme.m:
            raise SignatureMismatch(f"argument {i} lives over R^{s.m}, scheme over R^{scheme.m}")


def evaluate(scheme: OperatorScheme, sections: Sequence[PolySection], at_origin: bool = False):
    """Apply the scheme; returns a ``PolySection`` or, with ``at_origin``, the fiber value at 0."""
    _check_sections(scheme, sections)
    m = scheme.m
    tdim = fiber_basis(scheme.target, m).dimension
    zero = (0,) * m
    partials: list[dict] = [dict() for _ in sections]

    def factor(i, alpha, a):
        cache = partials[i]
        if alpha not in cache:
            cache[alpha] = sections[i].partial(alpha).components()
        p = cache[alpha][a]
        if at_origin:
            return {zero: p[zero]} if zero in p else {}
        return p

    out = [dict() for _ in range(tdim)]
    products: dict = {}
    for (alphas, comps, b), c in scheme.coefficients.items():
        pk = (alphas, comps)
        if pk not in products:
            prod = P.pconst(m, 1)
            for i, (alpha, a) in enumerate(zip(alphas, comps)):
                prod = P.pmul(prod, factor(i, alpha, a))
                if not prod:
                    break
            products[pk] = prod
        if products[pk]:
            P.padd_into(out[b], products[pk], c)
    section = PolySection.from_components(scheme.target, m, out)
    if at_origin:
        return section.value_at(zero)
    return section


def equivariance_residual(scheme: OperatorScheme, X: PolySection, sections: Sequence[PolySection]) -> PolySection:
    """``L_X D(s) - sum_i D(.., L_X s_i, ..)``; identically zero for natural schemes."""
    _check_sections(scheme, sections)
    res = lie_derivative(X, evaluate(scheme, sections))
    for i in range(len(sections)):
        args = list(sections)
        args[i] = lie_derivative(X, sections[i])
        res = res - evaluate(scheme, args)
    return res


def scheme_from_operator(op: Callable[..., PolySection], sources, target: BundleSpec, r: int, m: int) -> OperatorScheme:
    """Read off the coefficients of a constant-coefficient multilinear operator of order <= r.

    Each slot is probed with ``x^alpha / alpha! e_a`` for ``|alpha| <= r``; the
    value of ``op`` at the origin is then exactly the coefficient column.
    """
    sources = tuple(sources)
    probes = []
    for E in sources:
        fb = fiber_basis(E, m)
        slot = []
        for alpha in enumerate_multiindices(m, r):
            for a in range(fb.dimension):
                coeff = P.pmonomial(alpha, Fraction(1, alpha_factorial(alpha)))
                slot.append(((alpha, a), PolySection.basis_element(E, m, fb.labels[a], coeff)))
        probes.append(slot)
    zero = (0,) * m
    coeffs = {}
    for combo in itertools.product(*probes):
        val = op(*[s for _, s in combo])
        if val.bundle != target:
            raise SignatureMismatch(f"operator returned a section of {val.bundle}, expected {target}")
        alphas = tuple(j[0] for j, _ in combo)
        comps = tuple(j[1] for j, _ in combo)
        for b, v in enumerate(val.value_at(zero)):
            if v:
                coeffs[(alphas, comps, b)] = v
    return OperatorScheme(sources, target, r, m, coeffs)


# ---------------------------------------------------------------------------
# the linear system


@dataclass
class ConstraintSystem:
    """Sparse rows (column -> coefficient) on the unknowns ``unknowns[col]``."""

    sources: tuple[BundleSpec, ...]
    target: BundleSpec
    r: int
    m: int
    unknowns: list[Key]
    rows: list[dict[int, Fraction]]
    full_unknown_count: int

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.unknowns)

    def nonzeros(self) -> int:
        return sum(len(r) for r in self.rows)


def _weight(fb, a: int, alpha) -> tuple[int, ...]:
    return tuple(w - x for w, x in zip(fb.weights[a], alpha))


def _enumerate_unknowns(sources, target, r, m, reduce_weights, cap) -> tuple[list[Key], int]:
    fbs = [fiber_basis(E, m) for E in sources]
    tfb = fiber_basis(target, m)
    alphas = enumerate_multiindices(m, r)
    full = tfb.dimension
    for fb in fbs:
        full *= fb.dimension * len(alphas)
    if not reduce_weights:
        if full > cap:
            raise ResourceCapExceeded(f"{full} unknowns exceed the cap of {cap}")
        keys = []
        for combo in itertools.product(*[[(al, a) for al in alphas for a in range(fb.dimension)] for fb in fbs]):
            for b in range(tfb.dimension):
                keys.append((tuple(c[0] for c in combo), tuple(c[1] for c in combo), b))
        keys.sort(key=_key_order)
        return keys, full
    by_weight = {}
    for b in range(tfb.dimension):
        by_weight.setdefault(tfb.weights[b], []).append(b)
    groups = []
    for fb in fbs:
        g: dict = {}
        for al in alphas:
            for a in range(fb.dimension):
                g.setdefault(_weight(fb, a, al), []).append((al, a))
        groups.append(sorted(g.items()))
    keys = []
    for combo in itertools.product(*groups):
        total = tuple(sum(ws) for ws in zip(*(w for w, _ in combo))) if combo else (0,) * m
        bs = by_weight.get(total)
        if not bs:
            continue
        count = len(bs)
        for _, items in combo:
            count *= len(items)
        if len(keys) + count > cap:
            raise ResourceCapExceeded(f"more than {cap} unknowns after weight reduction")
        for jets in itertools.product(*(items for _, items in combo)):
            al = tuple(j[0] for j in jets)
            cs = tuple(j[1] for j in jets)
            for b in bs:
                keys.append((al, cs, b))
    keys.sort(key=_key_order)
    return keys, full


def _generators(m: int, r: int, reduce_weights: bool) -> list[tuple[tuple[int, ...], int]]:
    """Fields ``x^beta d_l`` with ``1 <= |beta| <= r + 2``, in a fixed order."""
    gens = []
    for deg in range(1, r + 3):
        for beta in multiindices_of_degree(m, deg):
            for l in range(m):
                if reduce_weights and deg == 1 and beta == unit(m, l):
                    continue
                gens.append((beta, l))
    return gens


def _push_table(E: BundleSpec, m: int, beta, l: int):
    """``(gamma, a) -> [((gamma', a'), coef)]`` for ``d^gamma (L_X s)^a (0)``, ``X = x^beta d_l``."""
    fb = fiber_basis(E, m)
    el = unit(m, l)
    cache: dict = {}

    def push(gamma, a):
        key = (gamma, a)
        if key in cache:
            return cache[key]
        out: dict = {}
        gf = alpha_factorial(gamma)
        if all(b <= g for b, g in zip(beta, gamma)):
            diff = tuple(g - b for g, b in zip(gamma, beta))
            tgt = (tuple(d + e for d, e in zip(diff, el)), a)
            out[tgt] = out.get(tgt, 0) + Fraction(gf, alpha_factorial(diff))
        for j in range(m):
            if not beta[j]:
                continue
            delta = tuple(g - b + (1 if t == j else 0) for t, (g, b) in enumerate(zip(gamma, beta)))
            if any(d < 0 for d in delta):
                continue
            coef = Fraction(-beta[j] * gf, alpha_factorial(delta))
            for a2, w in fb.generator(l, j)[a].items():
                tgt = (delta, a2)
                out[tgt] = out.get(tgt, 0) + coef * w
        res = [(k, v) for k, v in out.items() if v]
        cache[key] = res
        return res

    return push


def _rows_for_generator(args) -> list[dict[int, Fraction]]:
    sources, target, m, unknowns, (beta, l) = args
    pushes = [_push_table(E, m, beta, l) for E in sources]
    tfb = fiber_basis(target, m)
    target_rows = None
    if sum(beta) == 1:
        j = beta.index(1)
        gen = tfb.generator(l, j)
        # column b of rho'_E(E_lj): [(r', w)]
        target_rows = [[] for _ in range(tfb.dimension)]
        for rr, row in enumerate(gen):
            for b, w in row.items():
                target_rows[b].append((rr, w))
    rows: dict = {}

    def add(rkey, col, v):
        row = rows.setdefault(rkey, {})
        nv = row.get(col, 0) + v
        if nv:
            row[col] = nv
        else:
            row.pop(col, None)

    for col, (alphas, comps, b) in enumerate(unknowns):
        jets = tuple(zip(alphas, comps))
        if target_rows is not None:
            for rr, w in target_rows[b]:
                add((rr, jets), col, -w)
        for i, push in enumerate(pushes):
            for jet, coef in push(alphas[i], comps[i]):
                add((b, jets[:i] + (jet,) + jets[i + 1:]), col, -coef)
    return [rows[k] for k in sorted(rows) if rows[k]]


def assemble_system(sources, target: BundleSpec, r: int, m: int, *, reduce_weights: bool = True,
                    max_unknowns: int | None = None, n_jobs: int = 1) -> ConstraintSystem:
    """Build the equivariance constraints on the coefficients of an order-r scheme."""
    sources = tuple(sources)
    if r < 0:
        raise ValueError("order r must be >= 0")
    for E in (*sources, target):
        if fiber_basis(E, m).dimension == 0:
            raise BundleError(f"{E} has a zero-dimensional fiber for m={m}")
    cap = default_max_unknowns() if max_unknowns is None else max_unknowns
    unknowns, full = _enumerate_unknowns(sources, target, r, m, reduce_weights, cap)
    gens = _generators(m, r, reduce_weights)
    tasks = [(sources, target, m, unknowns, g) for g in gens]
    if n_jobs and n_jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            chunks = list(pool.map(_rows_for_generator, tasks))
    else:
        chunks = [_rows_for_generator(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    return ConstraintSystem(sources, target, r, m, unknowns, rows, full)


# ---------------------------------------------------------------------------
# classification


@dataclass
class ClassificationResult:
    sources: tuple[BundleSpec, ...]
    target: BundleSpec
    r: int
    m: int
    basis: list[OperatorScheme]
    stats: dict = field(default_factory=dict, compare=False)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def query(self) -> dict:
        return {"sources": [str(E) for E in self.sources], "target": str(self.target), "r": self.r, "m": self.m}

    def to_dict(self) -> dict:
        return {"query": self.query, "dimension": self.dimension, "basis": [b.to_dict() for b in self.basis]}

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: Mapping) -> "ClassificationResult":
        from natop.parser import parse_bundle

        q = data["query"]
        sources = tuple(parse_bundle(s) for s in q["sources"])
        target = parse_bundle(q["target"])
        r, m = int(q["r"]), int(q["m"])
        basis = [OperatorScheme.from_dict(b, sources, target, r, m) for b in data["basis"]]
        return cls(sources, target, r, m, basis)


def classify(sources, target: BundleSpec, r: int, m: int, *, reduce_weights: bool = True,
             max_unknowns: int | None = None, max_nonzeros: int | None = DEFAULT_MAX_NONZEROS,
             n_jobs: int = 1) -> ClassificationResult:
    """All natural k-linear operators ``E_1 x ... x E_k -> E`` of order <= r over ``R^m``."""
    t0 = time.perf_counter()
    system = assemble_system(sources, target, r, m, reduce_weights=reduce_weights,
                             max_unknowns=max_unknowns, n_jobs=n_jobs)
    ech = Echelon(len(system.unknowns), max_nonzeros=max_nonzeros)
    for row in system.rows:
        ech.add(row)
    basis = []
    for vec in ech.nullspace():
        coeffs = {system.unknowns[c]: v for c, v in vec.items()}
        basis.append(OperatorScheme(system.sources, target, r, m, coeffs))
    stats = {
        "unknowns": len(system.unknowns),
        "full_unknowns": system.full_unknown_count,
        "rows": len(system.rows),
        "rank": ech.rank,
        "elapsed_seconds": time.perf_counter() - t0,
    }
    return ClassificationResult(system.sources, target, r, m, basis, stats)


def _vectorize(schemes: Sequence[OperatorScheme]) -> tuple[list[dict[int, Fraction]], dict]:
    index: dict = {}
    vecs = []
    for s in schemes:
        vec = {}
        for k, v in s.coefficients.items():
            vec[index.setdefault(k, len(index))] = v
        vecs.append(vec)
    return vecs, index


def match_against(result: ClassificationResult, candidate: OperatorScheme) -> list[Fraction] | None:
    """Coordinates of ``candidate`` in ``result.basis``, or None if it is not in the span."""
    if candidate.signature() != (result.sources, result.target, result.m):
        raise SignatureMismatch("candidate scheme and classification query have different signatures")
    if candidate.r > result.r:
        candidate_order = max((sum(a) for key in candidate.coefficients for a in key[0]), default=0)
        if candidate_order > result.r:
            return None
    vecs, index = _vectorize(list(result.basis) + [candidate])
    return solve_in_span(vecs[:-1], vecs[-1])


def symmetric_part(result: ClassificationResult) -> ClassificationResult:
    """Subspace of operators invariant under permuting slots that carry the same bundle."""
    k = len(result.sources)
    perms = [p for p in itertools.permutations(range(k))
             if all(result.sources[p[i]] == result.sources[i] for i in range(k))]
    sym = []
    for b in result.basis:
        total = zero_scheme(result.sources, result.target, result.r, result.m)
        for p in perms:
            total = total + b.permute_sources(p)
        sym.append(total.scale(Fraction(1, len(perms))))
    vecs, index = _vectorize(sym)
    keys = {v: k for k, v in index.items()}
    basis = [
        OperatorScheme(result.sources, result.target, result.r, result.m, {keys[c]: v for c, v in row.items()})
        for row in row_space_basis(vecs, len(index))
    ]
    return ClassificationResult(result.sources, result.target, result.r, result.m, basis, dict(result.stats))


# ---------------------------------------------------------------------------
# named schemes


def wedge_scheme(p: int, q: int, m: int) -> OperatorScheme:
    from natop.calculus import wedge

    return scheme_from_operator(wedge, (BundleSpec.forms(p), BundleSpec.forms(q)), BundleSpec.forms(p + q), 0, m)


def lie_bracket_scheme(m: int) -> OperatorScheme:
    from natop.calculus import lie_bracket

    T = BundleSpec.tangent()
    return scheme_from_operator(lie_bracket, (T, T), T, 1, m)


def coordinate_partial_scheme(m: int, axis: int = 0) -> OperatorScheme:
    """``X -> d_axis X`` componentwise: translation invariant but not natural."""
    T = BundleSpec.tangent()
    e = unit(m, axis)
    return OperatorScheme((T,), T, 1, m, {((e,), (a,), a): 1 for a in range(m)})


# ---------------------------------------------------------------------------
# rendering


_ARG_NAMES = ("X", "Y", "Z", "W", "U", "V")
_LETTERS = "ijklnpqrstuvwabcdefgh"


@dataclass(frozen=True)
class _Slot:
    owner: int  # source index, or -1 for the target
    pos: int  # raw slot position, or -(1 + t) for the t-th derivative slot
    variance: str  # UP or DOWN as seen from the owner


def _raw_inverse(E: BundleSpec, m: int) -> dict:
    """Raw index -> [(coordinate, value)] of ``include(e_a)``."""
    fb = fiber_basis(E, m)
    inv: dict = {}
    for a, col in enumerate(fb._include):
        for idx, v in col.items():
            inv.setdefault(idx, []).append((a, v))
    return inv


def _pattern_slots(sources, target, orders):
    slots = []
    for i, (E, n) in enumerate(zip(sources, orders)):
        for s, var in enumerate(E.slot_variances):
            slots.append(_Slot(i, s, var))
        for t in range(n):
            slots.append(_Slot(i, -(1 + t), DOWN))
    for s, var in enumerate(target.slot_variances):
        # a target upper index must be fed by an argument upper index: it plays the "lower" role
        slots.append(_Slot(-1, s, DOWN if var == UP else UP))
    return slots


def _matching_vector(sources, target, m, slots, pairs, invs):
    """Coefficients of the delta-contraction ``pairs`` keyed by ``(alphas, comps, raw target index)``."""
    k = len(sources)
    pos = {sl: n for n, sl in enumerate(slots)}
    out: dict = {}
    for values in itertools.product(range(m), repeat=len(pairs)):
        val = [0] * len(slots)
        for (u, d), x in zip(pairs, values):
            val[pos[u]] = x
            val[pos[d]] = x
        raw = [[0] * E.rank for E in sources]
        ders = [[0] * m for _ in sources]
        traw = [0] * target.rank
        for n, sl in enumerate(slots):
            if sl.owner == -1:
                traw[sl.pos] = val[n]
            elif sl.pos >= 0:
                raw[sl.owner][sl.pos] = val[n]
            else:
                ders[sl.owner][val[n]] += 1
        choices = [invs[i].get(tuple(raw[i]), []) for i in range(k)]
        for combo in itertools.product(*choices):
            coef = Fraction(1)
            for _, v in combo:
                coef *= v
            key = (tuple(tuple(d) for d in ders), tuple(a for a, _ in combo), tuple(traw))
            out[key] = out.get(key, 0) + coef
    return {k_: v for k_, v in out.items() if v}


def _scheme_raw_vector(scheme: OperatorScheme, orders) -> dict:
    tfb = fiber_basis(scheme.target, scheme.m)
    out: dict = {}
    for (alphas, comps, b), c in scheme.coefficients.items():
        if tuple(sum(a) for a in alphas) != orders:
            continue
        for idx, w in tfb._include[b].items():
            key = (alphas, comps, idx)
            out[key] = out.get(key, 0) + c * w
    return {k: v for k, v in out.items() if v}


def _render_matching(scheme, slots, pairs, coef, names, first):
    k = scheme.arity
    letter: dict = {}
    pool = iter(_LETTERS)
    partner = {}
    for u, d in pairs:
        partner[u], partner[d] = d, u
    tslots = [sl for sl in slots if sl.owner == -1]
    for sl in tslots:
        if sl not in letter:
            letter[sl] = next(pool)
            if partner[sl].owner != -1:
                letter[partner[sl]] = letter[sl]
    deltas = []
    for sl in tslots:
        p = partner[sl]
        if p.owner == -1 and sl.variance == DOWN:
            # both ends on the target: an explicit Kronecker delta
            deltas.append(f"δ^{letter[sl]}_{letter[p]}")
    order = sorted(range(k), key=lambda i: (any(s.owner == i and s.pos < 0 for s in slots), i))
    factors = []
    for i in order:
        own = [s for s in slots if s.owner == i]
        for s in own:
            if s not in letter:
                letter[s] = letter[partner[s]] = next(pool)
        ders = "".join(f"∂_{letter[s]} " for s in own if s.pos < 0)
        ups = "".join(letter[s] for s in own if s.pos >= 0 and s.variance == UP)
        downs = "".join(letter[s] for s in own if s.pos >= 0 and s.variance == DOWN)
        factors.append(ders + names[i] + _indices(ups, downs))
    body = " ".join(deltas + factors) or "1"
    mag = abs(coef)
    lead = "" if mag == 1 else (f"{mag.numerator}" if mag.denominator == 1 else f"({mag.numerator}/{mag.denominator})") + " "
    if first:
        sign = "−" if coef < 0 else ""
    else:
        sign = " − " if coef < 0 else " + "
    return sign + lead + body


def _indices(ups: str, downs: str) -> str:
    def wrap(s):
        return s if len(s) == 1 else "{" + s + "}"

    return (f"^{wrap(ups)}" if ups else "") + (f"_{wrap(downs)}" if downs else "")


def _lhs(scheme, names):
    ups = "".join(_LETTERS[n] for n, v in enumerate(scheme.target.slot_variances) if v == UP)
    downs = "".join(_LETTERS[n] for n, v in enumerate(scheme.target.slot_variances) if v == DOWN)
    return f"D({','.join(names[:scheme.arity])})" + _indices(ups, downs)


def _matchings(slots):
    ups = [s for s in slots if s.variance == UP]
    downs = [s for s in slots if s.variance == DOWN]
    if len(ups) != len(downs):
        return None
    return [tuple(zip(ups, perm)) for perm in itertools.permutations(downs)]


def pretty_print(scheme: OperatorScheme, names: Sequence[str] | None = None, max_slots: int = 8) -> str:
    """Render a scheme as an Einstein-summation expression, e.g. ``D(X,Y)^i = X^j ∂_j Y^i − Y^j ∂_j X^i``.

    The output tensor is written as a combination of Kronecker-delta
    contractions of the arguments and their derivatives.  Schemes that are not
    of that form (non-natural ones) fall back to a component listing.
    """
    names = tuple(names) if names else _ARG_NAMES
    if len(names) < scheme.arity:
        names = names + tuple(f"S{i + 1}" for i in range(len(names), scheme.arity))
    if scheme.is_zero():
        return "0"
    patterns = sorted({tuple(sum(a) for a in key[0]) for key in scheme.coefficients})
    pieces = []
    for orders in patterns:
        slots = _pattern_slots(scheme.sources, scheme.target, orders)
        matchings = _matchings(slots) if len(slots) <= 2 * max_slots else None
        if matchings is None:
            return _component_listing(scheme, names)
        invs = [_raw_inverse(E, scheme.m) for E in scheme.sources]
        vecs_raw = [_matching_vector(scheme.sources, scheme.target, scheme.m, slots, mt, invs) for mt in matchings]
        target_raw = _scheme_raw_vector(scheme, orders)
        index: dict = {}
        ech = Echelon(0)
        chosen, chosen_vecs = [], []
        for mt, raw in zip(matchings, vecs_raw):
            vec = {index.setdefault(k, len(index)): v for k, v in raw.items()}
            ech.ncols = len(index)
            if vec and ech.add(vec):
                chosen.append(mt)
                chosen_vecs.append(vec)
        tvec = {index[k]: v for k, v in target_raw.items() if k in index}
        if len(tvec) != len(target_raw):
            return _component_listing(scheme, names)
        sol = solve_in_span(chosen_vecs, tvec)
        if sol is None:
            return _component_listing(scheme, names)
        for mt, c in zip(chosen, sol):
            if c:
                pieces.append(_render_matching(scheme, slots, mt, c, names, first=not pieces))
    return f"{_lhs(scheme, names)} = " + "".join(pieces)


def _component_listing(scheme: OperatorScheme, names) -> str:
    lines = []
    tlabels = fiber_basis(scheme.target, scheme.m).labels
    for (alphas, comps, b), c in scheme.coefficients.items():
        factors = []
        for i, (alpha, a) in enumerate(zip(alphas, comps)):
            lab = fiber_basis(scheme.sources[i], scheme.m).labels[a]
            der = "".join(f"∂_{j + 1}" * n for j, n in enumerate(alpha))
            factors.append(f"{der}{names[i]}[{','.join(str(x + 1) for x in lab)}]")
        lines.append(f"D[{','.join(str(x + 1) for x in tlabels[b])}] += {_frac_str(c)} * {' '.join(factors) or '1'}")
    return "\n".join(lines)
