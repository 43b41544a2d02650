"""Parser for the bundle-expression mini-language.

Grammar::

    expr := term (("⊗" | "*") term)*
    term := "T" | "T*" | "S^" int ("T" | "T*") | "Lam^" int ("T" | "T*")
          | "C^" int | "Lam^0"

A ``*`` glued directly to ``T`` is the dual marker; a separator ``*`` must be
preceded by whitespace or follow ``T*``.  ``str(parse_bundle(s))`` is the
canonical form.
"""
from __future__ import annotations

import re

from natop.errors import BundleError, BundleParseError
from natop.tensor import ALT, DOWN, SYM, UP, BundleSpec, Factor

_TOKEN = re.compile(r"\s*(?:(?P<op>S|Lam|C)\^(?P<n>\d+)|(?P<base>T\*?)|(?P<sep>⊗|\*))")


def _tokens(text: str):
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            return
        mt = _TOKEN.match(text, pos)
        if not mt:
            skip = len(text[pos:]) - len(text[pos:].lstrip())
            raise BundleParseError(f"unexpected character {text[pos + skip]!r}", pos + skip)
        start = mt.start(mt.lastgroup) if mt.lastgroup else mt.start()
        if mt.group("op"):
            yield ("op", (mt.group("op"), int(mt.group("n"))), mt.start("op"))
        elif mt.group("base"):
            yield ("base", mt.group("base"), start)
        else:
            yield ("sep", mt.group("sep"), start)
        pos = mt.end()


def parse_bundle(text: str) -> BundleSpec:
    """Parse a bundle expression such as ``"Lam^2 T* * T"`` or ``"C^1"``."""
    toks = list(_tokens(text))
    if not toks:
        raise BundleParseError("empty bundle expression", 0)
    factors: list[Factor] = []
    trace_free = None
    i = 0
    expect_term = True
    n_terms = 0
    while i < len(toks):
        kind, val, pos = toks[i]
        if not expect_term:
            if kind != "sep":
                raise BundleParseError("expected '*' or '⊗' between terms", pos)
            expect_term = True
            i += 1
            continue
        if kind == "sep":
            raise BundleParseError("expected a term", pos)
        n_terms += 1
        if kind == "base":
            factors.append(Factor(UP if val == "T" else DOWN, 1))
            i += 1
        else:
            op, n = val
            if op == "C":
                if n < 1:
                    raise BundleError("C^0 is not a bundle: trace-free forms need degree >= 1")
                trace_free = n
                i += 1
            else:
                nxt = toks[i + 1] if i + 1 < len(toks) else None
                if nxt is None or nxt[0] != "base":
                    if op == "Lam" and n == 0:
                        i += 1
                        expect_term = False
                        continue
                    where = nxt[2] if nxt else len(text)
                    raise BundleParseError(f"'{op}^{n}' must be followed by T or T*", where)
                variance = UP if nxt[1] == "T" else DOWN
                if n > 0:
                    factors.append(Factor(variance, n, SYM if op == "S" else ALT))
                i += 2
        expect_term = False
    if expect_term:
        raise BundleParseError("expression ends with a separator", len(text))
    if trace_free is not None:
        if n_terms != 1:
            raise BundleError("C^k cannot be combined with other factors")
        return BundleSpec.trace_free_forms(trace_free)
    return BundleSpec(tuple(factors))


def format_bundle(bundle: BundleSpec) -> str:
    return str(bundle)
