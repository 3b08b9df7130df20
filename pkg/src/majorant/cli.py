"""Batch command line front end.

Every run prints one JSON document (also written to ``--out`` when given) and
exits with 0 on success or a holding verdict, 1 on a failing verdict or a
refusal, 2 on an undecided verdict and 3 on a usage error.

Sequences are given as a JSON file (the sequence format, or a bare list of
rational strings), as an inline comma list such as ``2,1,1/2``, or as a named
family with a length: ``geometric:512``, ``harmonic:256``, ``klogk:256``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import generators as gen
from .numerics import INF, Sequence, fmt, monotonize, rational, sequence_from_json, sequence_to_json
from .oracle import TOL, conjecture_search, sample_orbit_expectation, verify_necessity_bound
from .relations import (APPROX, FAILS, HOLDS, MAJ, PMAJ, STRONG, UNKNOWN, approx_p_majorize,
                        hierarchy_check, majorize, p_majorize, strong_majorize)
from .stochastic import matrix_from_csv, matrix_from_json, schur_square
from .synthesis import (ROOT, HorizonExhausted, KernelGuardFailure, NotMajorized, SynthesisCertificate,
                        synthesize)

EXIT = {HOLDS: 0, FAILS: 1, UNKNOWN: 2}
USAGE = 3


class UsageError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("arguments", message)


def _jsonable(x):
    if isinstance(x, Fraction):
        return fmt(x)
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, tuple)):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, default=_jsonable)


# -- input parsing -----------------------------------------------------------------

NAMED = {"geometric": lambda n: gen.geometric(n), "harmonic": gen.harmonic, "klogk": gen.klogk}


def load_sequence(text: str, field: str) -> Sequence:
    if text is None:
        raise UsageError(field, "required")
    path = Path(text)
    if path.is_file():
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise UsageError(field, f"{path} is not valid JSON ({exc})") from None
        try:
            if isinstance(obj, list):
                if any(isinstance(t, float) for t in obj):
                    raise ValueError("floats are not accepted, use 'p/q' strings")
                return Sequence.finite([rational(t) for t in obj], name=path.stem)
            if isinstance(obj, dict) and "sequences" in obj and "kind" not in obj:
                raise ValueError("this is a generator bundle; pass one of its sequence files")
            return sequence_from_json(obj)
        except (TypeError, ValueError) as exc:
            raise UsageError(field, f"{path}: {exc}") from None
    if ":" in text:
        name, _, n = text.partition(":")
        if name in NAMED:
            try:
                length = int(n)
            except ValueError:
                raise UsageError(field, f"length {n!r} is not an integer") from None
            if length < 1:
                raise UsageError(field, "length must be positive")
            return NAMED[name](length)
    try:
        return Sequence.finite([rational(t) for t in text.split(",") if t.strip()])
    except (TypeError, ValueError) as exc:
        raise UsageError(field, f"not a readable sequence source ({exc})") from None


def parse_p(text: str, field: str = "--p"):
    if str(text).lower() in ("inf", "infinity"):
        return INF
    try:
        p = int(text)
    except ValueError:
        raise UsageError(field, f"expected a nonnegative integer or 'inf', got {text!r}") from None
    if p < 0:
        raise UsageError(field, "must be nonnegative")
    return p


def parse_rational(text: str, field: str, positive: bool = True) -> Fraction:
    try:
        x = rational(text)
    except (TypeError, ValueError) as exc:
        raise UsageError(field, str(exc)) from None
    if positive and x <= 0:
        raise UsageError(field, "must be positive")
    return x


def parse_params(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError("--params", f"expected key=value, got {item!r}")
        out[key] = value
    return out


def _violated_prefix(xi: Sequence, eta: Sequence, n: int) -> str:
    a = sum(monotonize(xi).padded(n)[:n], Fraction(0))
    b = sum(monotonize(eta).padded(n)[:n], Fraction(0))
    rel = ">" if a > b else "<="
    return f"sum_(k<={n}) xi*_k = {fmt(a)} {rel} {fmt(b)} = sum_(k<={n}) eta*_k"


# -- subcommands ---------------------------------------------------------------------

def cmd_check(a) -> tuple[int, dict]:
    xi, eta = load_sequence(a.xi, "--xi"), load_sequence(a.eta, "--eta")
    p = parse_p(a.p) if a.p is not None else 1
    eps = parse_rational(a.epsilon, "--epsilon")
    if a.relation == MAJ:
        v = majorize(xi, eta, a.horizon)
    elif a.relation == STRONG:
        v = strong_majorize(xi, eta, a.horizon)
    elif a.relation == PMAJ:
        v = p_majorize(xi, eta, p, a.horizon)
    else:
        v = approx_p_majorize(xi, eta, p, eps, a.horizon)
    out = v.to_json()
    if v.status == FAILS and a.relation in (MAJ, STRONG) and v.witness:
        out["violated"] = _violated_prefix(xi, eta, v.witness)
    return EXIT[v.status], out


def cmd_synthesize(a) -> tuple[int, dict]:
    xi, eta = load_sequence(a.xi, "--xi"), load_sequence(a.eta, "--eta")
    try:
        cert = synthesize(xi, eta, a.strategy, a.horizon)
    except NotMajorized as exc:
        out = {"status": "refused", "reason": str(exc), "witness": exc.witness}
        if exc.witness and a.strategy == "auto":
            out["violated"] = _violated_prefix(xi, eta, exc.witness)
        return 1, out
    except KernelGuardFailure as exc:
        return 1, {"status": "refused", "reason": str(exc),
                   "violated": f"zeros(xi) = {exc.kernel_xi} > {exc.kernel_eta} = zeros(eta)"}
    except HorizonExhausted as exc:
        return 2, {"status": "unknown", "reason": str(exc)}
    return 0, {"status": "ok", "certificate": cert.to_json()}


def _bundle(spec: gen.GeneratorSpec, out_dir) -> dict:
    result = spec.to_json()
    if out_dir:
        d = Path(out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for key, s in spec.sequences.items():
            (d / f"{key}.json").write_text(dumps(sequence_to_json(s)))
        (d / "certificates.json").write_text(dumps({"family": spec.family, "params": result["params"],
                                                    "certificates": result["certificates"],
                                                    "trace": result["trace"]}))
        result["files"] = sorted(str(d / f"{k}.json") for k in spec.sequences) + [str(d / "certificates.json")]
    return result


def cmd_generate(a) -> tuple[int, dict]:
    prm = parse_params(a.params)
    p = parse_p(a.p) if a.p is not None else 1
    try:
        length = int(prm.get("length", 256))
    except ValueError:
        raise UsageError("--params length", "expected an integer") from None
    fam = a.family
    verify_eta = None
    if fam == "p-gap":
        eta = load_sequence(a.eta, "--eta") if a.eta else gen.geometric(length)
        try:
            spec = gen.gen_p_gap(eta, p)
        except ValueError as exc:
            raise UsageError("--eta", str(exc)) from None
    elif fam == "half-ampliation":
        spec = gen.gen_half_ampliation(load_sequence(a.eta, "--eta") if a.eta else gen.harmonic(length))
    elif fam == "app-gap":
        spec = gen.gen_app_gap(p, length)
    elif fam == "strong-infty":
        eta = load_sequence(a.eta, "--eta") if a.eta else gen.harmonic(int(prm.get("length", 2000)))
        K = int(prm.get("K", 6))
        base = parse_rational(prm.get("ratio", "1/2"), "--params ratio")
        try:
            spec = gen.gen_strong_and_infty(eta, lambda k: base ** k, K, liminf_zero=bool(prm.get("liminf_zero")))
        except IndexError as exc:
            raise UsageError("--eta", str(exc)) from None
    else:  # convex
        left = load_sequence(a.xi, "--xi")
        right = load_sequence(prm.get("zeta"), "--params zeta")
        lam = parse_rational(prm.get("lambda", "1/2"), "--params lambda")
        q = parse_p(prm.get("q", "0"), "--params q")
        spec = gen.convex_mix(left, right, lam, p, q)
        verify_eta = load_sequence(a.eta, "--eta") if a.eta else None
    result = _bundle(spec, a.out_dir)
    if fam == "convex":
        if verify_eta is None:
            return 0, result
        r = spec.params["r"]
        v = approx_p_majorize(spec.xi, verify_eta, r, parse_rational(a.epsilon, "--epsilon"), a.horizon)
        result["verification"] = v.to_json()
        return EXIT[v.status], result
    try:
        result["verification"] = spec.verify(a.horizon)
    except AssertionError as exc:
        result["verification"] = {"error": str(exc)}
        return 1, result
    return 0, result


def _floats(s: Sequence) -> list[float]:
    return [float(t) for t in s.terms]


def cmd_sample(a) -> tuple[int, dict]:
    eta = load_sequence(a.eta, "--eta")
    if a.samples < 0:
        raise UsageError("--samples", "must be nonnegative")
    rep = sample_orbit_expectation(_floats(eta), a.samples, a.seed, a.jobs, a.tolerance)
    out = rep.to_json()
    out["violation_count"] = len(rep.violations)
    return (1 if rep.violations else 0), out


def cmd_verify_bound(a) -> tuple[int, dict]:
    if bool(a.matrix) == bool(a.certificate):
        raise UsageError("--matrix", "give exactly one of --matrix or --certificate")
    r = 0
    if a.certificate:
        try:
            obj = json.loads(Path(a.certificate).read_text())
            # accept the bare certificate or the document written by `synthesize --out`
            cert = SynthesisCertificate.from_json(obj.get("certificate", obj))
        except (OSError, ValueError, KeyError, TypeError, AttributeError) as exc:
            raise UsageError("--certificate", str(exc)) from None
        Q = schur_square(cert.plan.materialize(ROOT))
        eta = list(cert.eta.padded(cert.plan.dimension))
        r = cert.p
    else:
        path = Path(a.matrix)
        try:
            text = path.read_text()
            Q = matrix_from_csv(text) if path.suffix == ".csv" else matrix_from_json(json.loads(text))
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise UsageError("--matrix", str(exc)) from None
        eta = list(load_sequence(a.eta, "--eta").terms)
    if a.p is not None:
        r = parse_p(a.p)
        if r == INF:
            raise UsageError("--p", "the bound needs a finite r")
    try:
        rep = verify_necessity_bound(Q, eta, None, r, parse_rational(a.epsilon, "--epsilon"), a.tolerance)
    except ValueError as exc:
        raise UsageError("--eta", str(exc)) from None
    return (0 if rep.ok else 1), rep.to_json()


def cmd_hierarchy(a) -> tuple[int, dict]:
    xi, eta = load_sequence(a.xi, "--xi"), load_sequence(a.eta, "--eta")
    eps = parse_rational(a.epsilon, "--epsilon")
    if eps >= 1:
        raise UsageError("--epsilon", "hierarchy edges need epsilon < 1")
    rep = hierarchy_check(xi, eta, a.horizon, a.pmax, eps)
    return (1 if rep.violations else 0), rep.to_json()


def cmd_search(a) -> tuple[int, dict]:
    eta = load_sequence(a.eta, "--eta")
    try:
        rep = conjecture_search(_floats(eta), a.budget, a.seed, None,
                                float(parse_rational(a.epsilon, "--epsilon")), a.tolerance)
    except ValueError as exc:
        raise UsageError("--eta", str(exc)) from None
    return 0, rep.to_json()


# -- parser ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="majorant", description="Majorization hierarchy checks and unitary synthesis.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, *names):
        if "xi" in names:
            sp.add_argument("--xi", help="sequence source (see README)")
        if "eta" in names:
            sp.add_argument("--eta", help="sequence source (see README)")
        if "p" in names:
            sp.add_argument("--p", default=None, help="shift p (integer or 'inf')")
        if "epsilon" in names:
            sp.add_argument("--epsilon", default="1/2", help="rational epsilon (default 1/2)")
        if "horizon" in names:
            sp.add_argument("--horizon", type=int, default=None,
                            help="prefix horizon (default $MAJORANT_HORIZON or 512)")
        if "seed" in names:
            sp.add_argument("--seed", type=int, default=0)
        if "tolerance" in names:
            sp.add_argument("--tolerance", type=float, default=TOL)
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--out", help="write the JSON result to this file")

    c = sub.add_parser("check", help="decide one relation")
    common(c, "xi", "eta", "p", "epsilon", "horizon")
    c.add_argument("--relation", choices=[MAJ, STRONG, PMAJ, APPROX], default=MAJ)
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("synthesize", help="orthogonal plan realizing xi from eta")
    common(s, "xi", "eta", "horizon")
    s.add_argument("--strategy", choices=["auto", "theorem"], default="auto")
    s.set_defaults(func=cmd_synthesize)

    g = sub.add_parser("generate", help="emit a sequence family with certificates")
    common(g, "xi", "eta", "p", "epsilon", "horizon")
    g.add_argument("--family", required=True,
                   choices=["p-gap", "half-ampliation", "app-gap", "strong-infty", "convex"])
    g.add_argument("--params", nargs="*", default=[], metavar="KEY=VALUE",
                   help="length, K, ratio, zeta, lambda, q")
    g.add_argument("--out-dir", help="directory for xi.json, eta.json and certificates.json")
    g.set_defaults(func=cmd_generate)

    sm = sub.add_parser("sample", help="Haar orbit diagonals versus majorization")
    common(sm, "eta", "seed", "tolerance")
    sm.add_argument("--samples", type=int, default=1000)
    sm.set_defaults(func=cmd_sample)

    vb = sub.add_parser("verify-bound", help="approximate majorization bound for Q eta'")
    common(vb, "eta", "p", "epsilon", "tolerance")
    vb.add_argument("--matrix", help="matrix JSON or CSV file")
    vb.add_argument("--certificate", help="synthesis certificate JSON file")
    vb.set_defaults(func=cmd_verify_bound)

    h = sub.add_parser("hierarchy", help="evaluate every relation and implication")
    common(h, "xi", "eta", "epsilon", "horizon")
    h.add_argument("--pmax", type=int, default=4)
    h.set_defaults(func=cmd_hierarchy)

    se = sub.add_parser("search", help="randomized search for diagonals outside the region")
    common(se, "eta", "seed", "epsilon", "tolerance")
    se.add_argument("--budget", type=int, default=1000)
    se.set_defaults(func=cmd_search)
    return ap


def run(argv=None) -> int:
    out_path = None
    try:
        args = build_parser().parse_args(argv)
        out_path = args.out
        if args.jobs < 1:
            raise UsageError("--jobs", "must be at least 1")
        if getattr(args, "horizon", None) is not None and args.horizon < 1:
            raise UsageError("--horizon", "must be positive")
        code, result = args.func(args)
        result = {"command": args.command, "exit": code, **result}
    except UsageError as exc:
        code, result = USAGE, {"exit": USAGE, "error": str(exc), "field": exc.field}
    text = dumps(result)
    print(text)
    if out_path:
        try:
            Path(out_path).write_text(text + "\n")
        except OSError as exc:
            print(f"cannot write {out_path}: {exc}", file=sys.stderr)
            return USAGE
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
