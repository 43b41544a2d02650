"""Command line front end: ``natop <command> [flags]``.

Exit status: 0 on success, 2 for malformed input (bundle expressions, flags),
3 when a resource cap refuses a computation, 4 when a verification suite
finds a failing identity.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from natop.classifier import DEFAULT_MAX_NONZEROS, classify, pretty_print, symmetric_part
from natop.errors import BundleError, DimensionMismatch, ResourceCapExceeded
from natop.functional import AlmostNaturalType, locality_predicate
from natop.parser import parse_bundle
from natop.reps import casimir, invariant_sections, order_bound

__all__ = ["main", "build_parser", "parse_bundle", "EXIT_OK", "EXIT_PARSE", "EXIT_CAP", "EXIT_VERIFY"]

EXIT_OK, EXIT_PARSE, EXIT_CAP, EXIT_VERIFY = 0, 2, 3, 4
CONFIG_KEYS = {"max_unknowns", "max_nonzeros"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _frac(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}")


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def _nonnegative(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return n


def read_config(path: str) -> dict[str, int]:
    """Plain ``key=value`` file; only resource caps may be set this way."""
    caps = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key = key.strip().replace("-", "_")
            if not sep or key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{n}: expected one of {sorted(CONFIG_KEYS)} as key=value")
            caps[key] = int(value)
    return caps


def _dump(obj, fmt: str, text: str) -> str:
    if fmt == "json":
        return json.dumps(obj, indent=2, sort_keys=True)
    return text


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args) -> tuple[int, str]:
    sources = [parse_bundle(s) for s in args.src]
    target = parse_bundle(args.tgt)
    caps = read_config(args.config) if args.config else {}
    max_unknowns = args.max_unknowns if args.max_unknowns is not None else caps.get("max_unknowns")
    max_nonzeros = caps.get("max_nonzeros", DEFAULT_MAX_NONZEROS)
    res = classify(sources, target, args.r, args.m, max_unknowns=max_unknowns,
                   max_nonzeros=max_nonzeros, n_jobs=args.n_jobs)
    if args.symmetric:
        res = symmetric_part(res)
    lines = [f"{' x '.join(map(str, res.sources)) or 'R'} -> {res.target}, r={res.r}, m={res.m}: "
             f"dimension {res.dimension}"]
    lines += [f"  [{i}] {pretty_print(D)}" for i, D in enumerate(res.basis)]
    return EXIT_OK, _dump(res.to_dict(), args.format, "\n".join(lines))


def cmd_invariants(args) -> tuple[int, str]:
    E = parse_bundle(args.bundle)
    inv = invariant_sections(E, args.m)
    data = {"bundle": str(E), "m": args.m, "dimension": inv.dimension,
            "basis": [[_frac(x) for x in v] for v in inv.basis]}
    text = f"{E}, m={args.m}: dimension {inv.dimension}"
    text += "".join(f"\n  [{i}] ({', '.join(_frac(x) for x in v)})" for i, v in enumerate(inv.basis))
    return EXIT_OK, _dump(data, args.format, text)


def cmd_casimir(args) -> tuple[int, str]:
    c = casimir(args.m, args.weight)
    return EXIT_OK, _dump({"m": args.m, "weight": args.weight, "casimir": _frac(c)}, args.format, _frac(c))


def cmd_bound(args) -> tuple[int, str]:
    b = order_bound(args.m, args.rho, args.mu)
    return EXIT_OK, _dump({"m": args.m, "rho": args.rho, "mu": args.mu, "bound": b}, args.format, str(b))


def _report_checks(checks, fmt: str) -> tuple[int, str]:
    failed = [c for c in checks if not c.ok]
    data = {"ok": not failed, "checks": [c.to_dict() for c in checks]}
    text = "\n".join(f"{'PASS' if c.ok else 'FAIL'}  {c.identity}" for c in checks)
    for c in failed:
        text += f"\nfailing inputs for {c.identity}: {json.dumps(c.inputs, sort_keys=True)}"
    return (EXIT_VERIFY if failed else EXIT_OK), _dump(data, fmt, text)


def cmd_verify_brackets(args) -> tuple[int, str]:
    from natop.verify import verify_brackets

    return _report_checks(verify_brackets(seed=args.seed, probes=args.probes, ms=tuple(args.m)), args.format)


def cmd_verify_functionals(args) -> tuple[int, str]:
    from natop.verify import verify_functionals

    return _report_checks(verify_functionals(seed=args.seed, probes=args.probes), args.format)


def cmd_demo_locality(args) -> tuple[int, str]:
    # D(f, g, w) = f * integral(g w): one integration block {2,3}, local block {1}
    t = AlmostNaturalType(((2, 3),), (1,))
    rows = [{"I": list(I), "local": locality_predicate(t, I)} for I in [(1, 2), (2, 3), (1, 3)]]
    data = {"type": {"blocks": [list(b) for b in t.blocks], "local": list(t.local)}, "verdicts": rows}
    text = "D(f,g,w) = f * integral(g w), blocks I1={2,3}, J={1}\n"
    text += "\n".join(f"  D^{{{','.join(map(str, r['I']))}}}: {'local' if r['local'] else 'not local'}" for r in rows)
    return EXIT_OK, _dump(data, args.format, text)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="natop", description="Classify and check natural multilinear operators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def fmt(sp, default="json"):
        sp.add_argument("--format", choices=["json", "text"], default=default)

    sp = sub.add_parser("classify", help="solve for all natural operators between bundles")
    sp.add_argument("--src", action="append", default=[], help="source bundle (repeat per argument)")
    sp.add_argument("--tgt", required=True)
    sp.add_argument("--r", type=_nonnegative, default=1)
    sp.add_argument("--m", type=_positive, default=2)
    sp.add_argument("--max-unknowns", type=_positive)
    sp.add_argument("--config", help="key=value file with resource caps")
    sp.add_argument("--n-jobs", type=_positive, default=1)
    sp.add_argument("--symmetric", action="store_true", help="keep only the part symmetric in equal sources")
    fmt(sp)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("invariants", help="invariant fiber vectors of a bundle")
    sp.add_argument("--bundle", required=True)
    sp.add_argument("--m", type=_positive, default=2)
    fmt(sp)
    sp.set_defaults(func=cmd_invariants)

    sp = sub.add_parser("casimir", help="Casimir value of a highest weight")
    sp.add_argument("--m", type=_positive, required=True)
    sp.add_argument("--weight", type=_int_list, required=True)
    fmt(sp, "text")
    sp.set_defaults(func=cmd_casimir)

    sp = sub.add_parser("bound", help="order bound from Casimir values")
    sp.add_argument("--m", type=_positive, required=True)
    sp.add_argument("--rho", type=_int_list, required=True)
    sp.add_argument("--mu", type=_int_list, required=True)
    fmt(sp, "text")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("verify-brackets", help="Lie-derivative commutation of the brackets")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--probes", type=_positive, default=5)
    sp.add_argument("--m", type=_int_list, default=[2, 3])
    fmt(sp)
    sp.set_defaults(func=cmd_verify_brackets)

    sp = sub.add_parser("verify-functionals", help="integration functional identities on splines")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--probes", type=_positive, default=3)
    fmt(sp)
    sp.set_defaults(func=cmd_verify_functionals)

    sp = sub.add_parser("demo-locality", help="locality of the associated operators of f * integral(g w)")
    fmt(sp)
    sp.set_defaults(func=cmd_demo_locality)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, out = args.func(args)
    except ResourceCapExceeded as exc:
        print(f"natop: resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (BundleError, DimensionMismatch, ValueError, OSError) as exc:
        print(f"natop: error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    print(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
