"""Decision procedures for majorization, strong, p- and approximate p-majorization.

All relations are evaluated on monotonizations.  Finitely supported inputs are
decided exactly.  Truncated inputs are decided on their listed prefix; claims
about the unlisted tail come only from an attached :class:`Certificate`
(typically produced by :mod:`majorant.generators`), and without one the
verdict is ``UNKNOWN``.  A certificate that disagrees with the prefix raises
:class:`CertificateConflict`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional

from .numerics import INF, Sequence, fmt, monotonize, rational

HOLDS, FAILS, UNKNOWN = "holds", "fails", "unknown"

MAJ, STRONG, PMAJ, APPROX = "maj", "strong", "p-maj", "approx-p-maj"

DEFAULT_HORIZON = int(os.environ.get("MAJORANT_HORIZON", "512"))
DEFAULT_PMAX = 32


class CertificateConflict(AssertionError):
    """An analytic certificate contradicts the exact prefix computation."""


@dataclass(frozen=True)
class Certificate:
    """An analytic claim about a relation, valid for every index.

    For ``p-maj`` certificates ``p`` may be ``INF``.  ``index(p, eps)`` returns
    an index from which the claimed inequality holds (HOLDS) or from which
    every index violates it (FAILS); ``eps`` is ignored except for
    ``approx-p-maj``.  A FAILS certificate may return ``None`` when no such
    index exists at the given ``eps`` (the failure is then witnessed at a
    smaller ``eps``).
    """

    relation: str
    status: str
    p: float = 0
    reason: str = ""
    index: Callable[[float, Optional[Fraction]], int] = field(default=lambda p, eps: 1, compare=False)

    def applies(self, relation: str, p) -> bool:
        if relation != self.relation:
            return False
        if relation in (MAJ, STRONG):
            return True
        # holds is inherited downward in p, failure upward
        return p <= self.p if self.status == HOLDS else p >= self.p

    def to_json(self) -> dict:
        return {"relation": self.relation, "status": self.status,
                "p": "inf" if self.p == INF else int(self.p), "reason": self.reason}


@dataclass
class Verdict:
    relation: str
    status: str
    witness: Optional[int] = None
    margin_trace: tuple[Fraction, ...] = ()
    params: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.status == HOLDS

    @property
    def fails(self) -> bool:
        return self.status == FAILS

    def to_json(self) -> dict:
        params = {}
        for k, v in self.params.items():
            if isinstance(v, Fraction):
                v = fmt(v)
            elif v == INF:
                v = "inf"
            params[k] = v
        return {"relation": self.relation, "status": self.status, "witness": self.witness,
                "margin_trace": [fmt(m) for m in self.margin_trace],
                "parameters": params, "notes": list(self.notes)}


def _find_cert(certs: Iterable[Certificate], relation: str, p=0) -> Optional[Certificate]:
    for c in certs:
        if c.applies(relation, p):
            return c
    return None


def _sums(s: Sequence, upto: int) -> list[Fraction]:
    """sums[k] = sum of first k terms for k = 0..upto (finite lists pad with 0)."""
    out, acc = [Fraction(0)], Fraction(0)
    terms = s.terms
    for k in range(upto):
        if k < len(terms):
            acc += terms[k]
        out.append(acc)
    return out


def _reach(s: Sequence, shift: int = 0) -> float:
    """Largest n for which index n + shift is listed (INF for finite lists)."""
    return INF if s.is_finite else len(s.terms) - shift


def _order_note(raw: Sequence, mono: Sequence) -> list[str]:
    k = min(len(raw.terms), len(mono.terms))
    if raw.terms[:k] != mono.terms[:k]:
        return [f"{raw.name or 'sequence'}: listed order differs from its monotonization in the prefix"]
    return []


def _tail_upper(s: Sequence) -> Optional[Fraction]:
    """Upper bound on every partial sum of s, if known."""
    if s.total is not None:
        return s.total
    if s.tail_sum_bound is not None:
        return sum(s.terms, Fraction(0)) + s.tail_sum_bound
    return None


def majorize(xi: Sequence, eta: Sequence, horizon: Optional[int] = None,
             certificates: Iterable[Certificate] = ()) -> Verdict:
    """Decide xi < eta: prefix-sum domination of monotonizations plus equal totals."""
    return _majorize(xi, eta, horizon, tuple(certificates), MAJ)


def _majorize(xi, eta, horizon, certs, relation) -> Verdict:
    X, Y = monotonize(xi), monotonize(eta)
    notes = _order_note(xi, X)
    if X.is_finite and Y.is_finite:
        L = max(len(X), len(Y))
        sx, sy = _sums(X, L), _sums(Y, L)
        margins = tuple(sy[n] - sx[n] for n in range(1, L + 1))
        for n, m in enumerate(margins, 1):
            if m < 0:
                return Verdict(relation, FAILS, n, margins, notes=notes + [
                    f"sum_{{j<={n}}} xi*_j = {sx[n]} > {sy[n]} = sum_{{j<={n}}} eta*_j"])
        if X.total != Y.total:
            return Verdict(relation, FAILS, L, margins, notes=notes + [
                f"totals differ: {X.total} != {Y.total}"])
        return Verdict(relation, HOLDS, None, margins, notes=notes)

    L = int(min(_reach(X), _reach(Y), horizon or DEFAULT_HORIZON))
    sx, sy = _sums(X, L), _sums(Y, L)
    margins = tuple(sy[n] - sx[n] for n in range(1, L + 1))
    cert = _find_cert(certs, relation)
    for n, m in enumerate(margins, 1):
        if m < 0:
            if cert is not None and cert.status == HOLDS:
                raise CertificateConflict(f"{relation} certificate claims holds, prefix fails at n={n}")
            return Verdict(relation, FAILS, n, margins, {"horizon": L}, notes + [
                f"sum_{{j<={n}}} xi*_j = {sx[n]} > {sy[n]} = sum_{{j<={n}}} eta*_j"])
    if relation == MAJ and X.total is not None and Y.total is not None:
        if X.total != Y.total:
            return Verdict(relation, FAILS, L, margins, {"horizon": L},
                           notes + [f"totals differ: {X.total} != {Y.total}"])
        up = _tail_upper(X)
        if up is not None and L and up <= sy[L]:
            return Verdict(relation, HOLDS, None, margins, {"horizon": L},
                           notes + ["tail certified by total/tail bounds"])
    if cert is not None:
        return Verdict(relation, cert.status, None if cert.status == HOLDS else L, margins,
                       {"horizon": L}, notes + [f"certificate: {cert.reason}"])
    return Verdict(relation, UNKNOWN, L, margins, {"horizon": L},
                   notes + ["prefix consistent; tail not certified"])


def strong_majorize(xi: Sequence, eta: Sequence, horizon: Optional[int] = None,
                    certificates: Iterable[Certificate] = ()) -> Verdict:
    """Decide strong majorization (prefix domination and liminf of the gap = 0)."""
    X, Y = monotonize(xi), monotonize(eta)
    if X.is_finite and Y.is_finite:
        v = _majorize(xi, eta, horizon, (), STRONG)
        v.notes.append("finitely supported: the gap is eventually constant, equal to the total difference")
        return v
    certs = tuple(certificates)
    v = _majorize(xi, eta, horizon, certs, STRONG)
    if v.status == FAILS and v.witness is not None and v.margin_trace and v.margin_trace[v.witness - 1] < 0:
        return v
    gaps = v.margin_trace
    if gaps:
        half = gaps[len(gaps) // 2:]
        low = min(half)
        v.params["min_gap_second_half"] = low
        if low > 0:
            v.notes.append(f"liminf>0 evidence: gap >= {low} on indices {len(gaps) - len(half) + 1}..{len(gaps)}")
    cert = _find_cert(certs, STRONG)
    if cert is None:
        v.status, v.witness = UNKNOWN, len(gaps)
    return v


def _shifted(xi, eta, p, eps, horizon, certs, relation) -> Verdict:
    """Shared engine for p- and approximate p-majorization at finite p."""
    params = {"p": p} if eps is None else {"p": p, "epsilon": eps}
    maj = majorize(xi, eta, horizon, certs)
    cert = _find_cert(certs, relation, p)
    if maj.status == FAILS:
        return Verdict(relation, FAILS, maj.witness, maj.margin_trace, params,
                       maj.notes + ["not majorized"])
    if p == 0 and eps is None:
        return Verdict(relation, maj.status, maj.witness, maj.margin_trace, params, maj.notes)
    X, Y = monotonize(xi), monotonize(eta)
    notes = list(maj.notes)
    finite = X.is_finite and Y.is_finite
    if finite:
        L = max(len(X), len(Y))
    else:
        L = int(min(_reach(X, p), _reach(Y, 0 if eps is None else 1), horizon or DEFAULT_HORIZON))
        L = max(L, 0)
    sx, sy = _sums(X, L + p), _sums(Y, L)
    margins = []
    for n in range(1, L + 1):
        slack = sy[n] - sx[n + p]
        if eps is not None:
            slack += eps * Y[n + 1]
        margins.append(slack)
    margins = tuple(margins)
    bad = [n for n, m in enumerate(margins, 1) if m < 0]
    N = (bad[-1] + 1) if bad else 1

    if finite:
        if maj.status != HOLDS:  # cannot happen for finite inputs
            return Verdict(relation, maj.status, None, margins, params, notes)
        # beyond L both partial sums are constant and equal
        return Verdict(relation, HOLDS, N, margins, params, notes)

    params["horizon"] = L
    if cert is not None:
        start = cert.index(p, eps)
        if cert.status == HOLDS:
            if any(n >= start for n in bad):
                raise CertificateConflict(
                    f"{relation} p={p} certificate claims holds from n={start}, prefix fails at n={bad[-1]}")
            if maj.status != HOLDS:
                notes.append("majorization taken from the certificate")
            return Verdict(relation, HOLDS, N, margins, params, notes + [f"certificate: {cert.reason}"])
        checked = [] if start is None else list(range(max(start, 1), L + 1))
        if checked and any(margins[n - 1] >= 0 for n in checked):
            raise CertificateConflict(
                f"{relation} p={p} certificate claims failure from n={start}, prefix holds at some n<= {L}")
        return Verdict(relation, FAILS, bad[0] if bad else None, margins, params,
                       notes + [f"certificate: {cert.reason}"])
    if maj.status == HOLDS and L:
        # tail certification from bounds: shifted partial sums of xi never exceed
        # its total, those of eta are at least the last listed partial sum
        up = _tail_upper(X)
        if not bad or bad[-1] < L:
            if up is not None and up <= sy[L]:
                return Verdict(relation, HOLDS, N, margins, params, notes + ["tail certified by bounds"])
    if bad and bad[-1] == L:
        notes.append(f"violated at the horizon n={L}")
    else:
        notes.append(f"holds on [{N}, {L}]; tail not certified")
    return Verdict(relation, UNKNOWN, L, margins, params, notes)


def _infinite(xi, eta, eps, horizon, certs, relation, pmax) -> Verdict:
    params = {"p": INF, "pmax": pmax}
    if eps is not None:
        params["epsilon"] = eps
    witnesses, statuses = [], []
    for q in range(1, pmax + 1):
        v = _shifted(xi, eta, q, eps, horizon, certs, relation)
        if v.status == FAILS:
            return Verdict(relation, FAILS, v.witness, v.margin_trace, params,
                           v.notes + [f"fails at p={q}"])
        witnesses.append(v.witness)
        statuses.append(v.status)
    X, Y = monotonize(xi), monotonize(eta)
    notes = [f"N_p for p=1..{pmax}: {witnesses}"]
    inf_cert = _find_cert(certs, relation, INF)
    if X.is_finite and Y.is_finite:
        status = HOLDS
        notes.append("eta finitely supported: majorization implies every p")
    elif inf_cert is not None and inf_cert.status == HOLDS and all(s == HOLDS for s in statuses):
        status = HOLDS
        notes.append(f"certificate: {inf_cert.reason}")
    else:
        status = UNKNOWN
    return Verdict(relation, status, witnesses[-1] if witnesses else None, (), params, notes)


def p_majorize(xi: Sequence, eta: Sequence, p=1, horizon: Optional[int] = None,
               certificates: Iterable[Certificate] = (), pmax: int = DEFAULT_PMAX) -> Verdict:
    """Decide xi <_p eta; ``p`` may be ``INF`` (checked for p = 1..pmax)."""
    certs = tuple(certificates)
    if p == INF:
        return _infinite(xi, eta, None, horizon, certs, PMAJ, pmax)
    if p < 0:
        raise ValueError("p must be nonnegative")
    return _shifted(xi, eta, int(p), None, horizon, certs, PMAJ)


def approx_p_majorize(xi: Sequence, eta: Sequence, p=1, epsilon=Fraction(1, 2),
                      horizon: Optional[int] = None, certificates: Iterable[Certificate] = (),
                      pmax: int = DEFAULT_PMAX) -> Verdict:
    """Decide approximate p-majorization; the witness is N_{p,eps} at ``epsilon``.

    The status concerns the relation itself (every eps > 0).  For finitely
    supported inputs the eps term vanishes past the support, so the relation is
    decided exactly; otherwise a certificate is required for HOLDS.
    """
    eps = rational(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    if not monotonize(eta).monotone:  # pragma: no cover - monotonize always sorts
        raise ValueError("eta must be monotone")
    certs = tuple(certificates)
    if p == INF:
        return _infinite(xi, eta, eps, horizon, certs, APPROX, pmax)
    return _shifted(xi, eta, int(p), eps, horizon, certs, APPROX)


def epsilon_curve(xi: Sequence, eta: Sequence, p: int, grid: Iterable, horizon: Optional[int] = None,
                  certificates: Iterable[Certificate] = ()) -> list[tuple[Fraction, Optional[int]]]:
    """N_{p,eps} for each eps in ``grid``."""
    certs = tuple(certificates)
    return [(rational(e), approx_p_majorize(xi, eta, p, e, horizon, certs).witness) for e in grid]


# -- hierarchy -----------------------------------------------------------------

@dataclass
class Edge:
    name: str
    outcome: str  # "ok", "violated", "skipped"


@dataclass
class HierarchyReport:
    verdicts: dict[str, Verdict]
    edges: list[Edge]

    @property
    def violations(self) -> list[Edge]:
        return [e for e in self.edges if e.outcome == "violated"]

    def to_json(self) -> dict:
        return {"verdicts": {k: v.to_json() for k, v in self.verdicts.items()},
                "edges": [{"edge": e.name, "outcome": e.outcome} for e in self.edges],
                "violations": len(self.violations)}


def hierarchy_check(xi: Sequence, eta: Sequence, horizon: Optional[int] = None, pmax: int = 4,
                    epsilon=Fraction(1, 2), certificates: Iterable[Certificate] = ()) -> HierarchyReport:
    """Evaluate every relation and check every implication edge between them."""
    certs = tuple(certificates)
    eps = rational(epsilon)
    if eps >= 1:
        raise ValueError("hierarchy edges from approximate majorization need epsilon < 1")
    V: dict[str, Verdict] = {"maj": majorize(xi, eta, horizon, certs),
                             "strong": strong_majorize(xi, eta, horizon, certs)}
    for q in range(pmax + 1):
        V[f"p{q}"] = p_majorize(xi, eta, q, horizon, certs)
        V[f"a{q}"] = approx_p_majorize(xi, eta, q, eps, horizon, certs)
    V["pinf"] = p_majorize(xi, eta, INF, horizon, certs, pmax=pmax)
    V["ainf"] = approx_p_majorize(xi, eta, INF, eps, horizon, certs, pmax=pmax)

    edges: list[Edge] = []

    def imply(name, ante: list[tuple[str, str]], cons: str):
        if any(V[k].status == UNKNOWN for k, _ in ante):
            edges.append(Edge(name, "skipped"))
            return
        if not all(V[k].status == want for k, want in ante):
            edges.append(Edge(name, "ok"))  # antecedent false
            return
        st = V[cons].status
        edges.append(Edge(name, "violated" if st == FAILS else ("ok" if st == HOLDS else "skipped")))

    for q in range(1, pmax + 1):
        for r in range(q):
            imply(f"p{q} => p{r}", [(f"p{q}", HOLDS)], f"p{r}")
        imply(f"a{q} => p{q - 1}", [(f"a{q}", HOLDS)], f"p{q - 1}")
    for q in range(pmax + 1):
        imply(f"p{q} => a{q}", [(f"p{q}", HOLDS)], f"a{q}")
        imply(f"p{q} => maj", [(f"p{q}", HOLDS)], "maj")
    imply("pinf => ainf", [("pinf", HOLDS)], "ainf")
    imply("ainf => pinf", [("ainf", HOLDS)], "pinf")
    imply("maj & not strong => pinf", [("maj", HOLDS), ("strong", FAILS)], "pinf")
    return HierarchyReport(V, edges)
