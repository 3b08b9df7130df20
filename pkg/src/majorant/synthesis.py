"""Constructive Schur-Horn synthesis with kernel bookkeeping.

Plans are built from Givens rotations with rational squared cosines and from
permutations.  The rotations are arranged so that every entry of the
materialized orthogonal matrix is a single signed square root of a rational
(a :class:`~majorant.numerics.SignedRoot`), which lets every certificate be
re-verified exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence as Seq

import numpy as np

from .numerics import (
    INF, FINITE, Sequence, SignedRoot, Undecidable, as_sequence, fmt, radical_sum, rational,
    sequence_from_json, sequence_to_json,
)
from .relations import FAILS, HOLDS, majorize, p_majorize
from .stochastic import (
    FLOAT, ROOT, DenseMatrix, classify, expectation_diag, is_orthogonal, matvec, schur_square,
)

GIVENS, PERM = "givens", "perm"


class SynthesisError(Exception):
    """Base class for refusals of the synthesis engine."""


class NotMajorized(SynthesisError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class KernelGuardFailure(SynthesisError):
    def __init__(self, message: str, kernel_xi=None, kernel_eta=None):
        super().__init__(message)
        self.kernel_xi, self.kernel_eta = kernel_xi, kernel_eta


class HorizonExhausted(SynthesisError):
    def __init__(self, message: str, partial: Optional["Interleaving"] = None):
        super().__init__(message)
        self.partial = partial


class NotMonomial(ArithmeticError):
    """An entry of a materialized plan is not a single signed square root."""


@dataclass(frozen=True)
class RotationStep:
    """A Givens rotation on coordinates (i, j) or a permutation.

    The rotation acts as ``[[a, b], [-b, a]]`` on rows (i, j), with ``a, b >= 0``
    stored through ``a2 = a**2`` and ``b2 = b**2``.  Conjugating a diagonal
    matrix gives ``d_i -> a2*d_i + b2*d_j`` and ``d_j -> b2*d_i + a2*d_j``.

    A permutation step moves coordinate ``k`` to ``perm[k-1]`` (1-based).
    """

    kind: str
    i: int = 0
    j: int = 0
    a2: Fraction = Fraction(1)
    b2: Fraction = Fraction(0)
    perm: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind == GIVENS:
            if self.i == self.j or min(self.i, self.j) < 1:
                raise ValueError(f"bad rotation coordinates ({self.i}, {self.j})")
            a2, b2 = rational(self.a2), rational(self.b2)
            if a2 < 0 or b2 < 0 or a2 + b2 != 1:
                raise ValueError("rotation needs a2, b2 >= 0 with a2 + b2 = 1")
            object.__setattr__(self, "a2", a2)
            object.__setattr__(self, "b2", b2)
        elif self.kind == PERM:
            perm = tuple(int(x) for x in self.perm)
            if sorted(perm) != list(range(1, len(perm) + 1)):
                raise ValueError("permutation must be a bijection on 1..n")
            object.__setattr__(self, "perm", perm)
        else:
            raise ValueError(f"unknown step kind {self.kind!r}")

    @classmethod
    def givens(cls, i: int, j: int, a2, b2=None) -> "RotationStep":
        a2 = rational(a2)
        return cls(GIVENS, i, j, a2, 1 - a2 if b2 is None else rational(b2))

    @classmethod
    def permutation(cls, perm: Seq[int]) -> "RotationStep":
        return cls(PERM, perm=tuple(perm))

    def shifted(self, offset: int, dimension: int) -> "RotationStep":
        if self.kind == GIVENS:
            return RotationStep(GIVENS, self.i + offset, self.j + offset, self.a2, self.b2)
        full = list(range(1, dimension + 1))
        for k, t in enumerate(self.perm, start=1):
            full[k + offset - 1] = t + offset
        return RotationStep.permutation(full)

    def to_json(self) -> dict:
        if self.kind == GIVENS:
            return {"kind": GIVENS, "i": self.i, "j": self.j, "a2": fmt(self.a2), "b2": fmt(self.b2)}
        return {"kind": PERM, "map": list(self.perm)}

    @classmethod
    def from_json(cls, obj: dict) -> "RotationStep":
        kind = obj.get("kind")
        if kind == GIVENS:
            return cls(GIVENS, int(obj["i"]), int(obj["j"]), rational(obj["a2"]), rational(obj["b2"]))
        if kind == PERM:
            return cls.permutation(obj["map"])
        raise ValueError(f"field 'kind': unknown step kind {kind!r}")


def _add_roots(x: SignedRoot, y: SignedRoot) -> SignedRoot:
    if not x:
        return y
    if not y:
        return x
    groups = radical_sum([x, y])
    if not groups:
        return SignedRoot.of(0)
    if len(groups) > 1:
        raise NotMonomial("entry is a sum of incommensurable square roots")
    (rep, c), = groups.items()
    return SignedRoot((c > 0) - (c < 0), c * c * rep)


@dataclass(frozen=True)
class UnitaryPlan:
    dimension: int
    steps: tuple[RotationStep, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        for s in self.steps:
            if s.kind == GIVENS and max(s.i, s.j) > self.dimension:
                raise ValueError(f"rotation ({s.i},{s.j}) outside dimension {self.dimension}")
            if s.kind == PERM and len(s.perm) != self.dimension:
                raise ValueError("permutation length differs from plan dimension")

    @property
    def rotations(self) -> int:
        return sum(1 for s in self.steps if s.kind == GIVENS)

    def then(self, *steps: RotationStep) -> "UnitaryPlan":
        return UnitaryPlan(self.dimension, self.steps + tuple(steps))

    def materialize(self, mode: str = ROOT) -> DenseMatrix:
        """The orthogonal M = S_k ... S_1, exactly (root mode) or in floating point."""
        n = self.dimension
        if mode == FLOAT:
            M = np.eye(n)
            for s in self.steps:
                if s.kind == GIVENS:
                    a, b = np.sqrt(float(s.a2)), np.sqrt(float(s.b2))
                    ri, rj = M[s.i - 1].copy(), M[s.j - 1].copy()
                    M[s.i - 1], M[s.j - 1] = a * ri + b * rj, -b * ri + a * rj
                else:
                    M2 = np.empty_like(M)
                    for k, t in enumerate(s.perm):
                        M2[t - 1] = M[k]
                    M = M2
            return DenseMatrix(M, FLOAT)
        if mode != ROOT:
            raise ValueError("plans materialize in 'root' or 'float' mode")
        one, zero = SignedRoot.of(1), SignedRoot.of(0)
        rows = [[one if i == j else zero for j in range(n)] for i in range(n)]
        for s in self.steps:
            if s.kind == GIVENS:
                a, b = SignedRoot.root(s.a2), SignedRoot.root(s.b2)
                ri, rj = rows[s.i - 1], rows[s.j - 1]
                rows[s.i - 1] = [_add_roots(a * x, b * y) for x, y in zip(ri, rj)]
                rows[s.j - 1] = [_add_roots(-(b * x), a * y) for x, y in zip(ri, rj)]
            else:
                new = [None] * n
                for k, t in enumerate(s.perm):
                    new[t - 1] = rows[k]
                rows = new
        return DenseMatrix(rows, ROOT)

    def to_json(self) -> dict:
        return {"dimension": self.dimension, "steps": [s.to_json() for s in self.steps]}

    @classmethod
    def from_json(cls, obj: dict) -> "UnitaryPlan":
        return cls(int(obj["dimension"]), tuple(RotationStep.from_json(s) for s in obj["steps"]))


@dataclass(frozen=True)
class Interleaving:
    N: tuple[int, ...] = ()
    Nprime: tuple[int, ...] = ()
    p: int = 0

    def to_json(self) -> dict:
        return {"N": list(self.N), "Nprime": list(self.Nprime), "p": self.p}


@dataclass
class SynthesisCertificate:
    xi: Sequence
    eta: Sequence
    kernel_xi: int
    kernel_eta: int
    p: int
    plan: UnitaryPlan
    achieved: Sequence
    max_residual: Fraction = Fraction(0)
    case: str = "horn"
    interleaving: Optional[Interleaving] = None
    checks: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = {
            "xi": sequence_to_json(self.xi), "eta": sequence_to_json(self.eta),
            "kernel_xi": self.kernel_xi, "kernel_eta": self.kernel_eta, "p": self.p,
            "case": self.case, "plan": self.plan.to_json(),
            "achieved": [fmt(x) for x in self.achieved.terms], "residual": fmt(self.max_residual),
            "checks": self.checks,
        }
        if self.interleaving is not None:
            out["interleaving"] = self.interleaving.to_json()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SynthesisCertificate":
        inter = obj.get("interleaving")
        return cls(
            sequence_from_json(obj["xi"]), sequence_from_json(obj["eta"]),
            int(obj["kernel_xi"]), int(obj["kernel_eta"]), int(obj["p"]),
            UnitaryPlan.from_json(obj["plan"]),
            Sequence.finite(rational(x) for x in obj["achieved"]),
            rational(obj.get("residual", "0")), obj.get("case", "horn"),
            Interleaving(tuple(inter["N"]), tuple(inter["Nprime"]), int(inter["p"])) if inter else None,
            dict(obj.get("checks", {})),
        )


# -- kernel bookkeeping --------------------------------------------------------

@dataclass(frozen=True)
class KernelReport:
    passed: bool
    kernel_xi: object
    kernel_eta: object


def _window_zeros(s: Sequence, n: int):
    if s.kind == FINITE:
        return sum(1 for x in s.padded(n) if x == 0)
    if not s.infinite_support:
        raise Undecidable(f"support of truncated sequence {s.name or ''} is not declared".replace("  ", " "))
    return sum(1 for x in s.terms if x == 0)


def kernel_guard(xi: Sequence, eta: Sequence) -> KernelReport:
    """Compare zero counts on a common window (cofinite tails counted as equal).

    A finitely supported sequence has a cofinite zero set; a truncated one with
    declared infinite support has exactly its listed zeros.
    """
    xi, eta = as_sequence(xi), as_sequence(eta)
    n = max(len(xi), len(eta))
    zx, ze = _window_zeros(xi, n), _window_zeros(eta, n)
    if xi.kind == FINITE and eta.kind != FINITE:
        zx = INF
    elif eta.kind == FINITE and xi.kind != FINITE:
        ze = INF
    return KernelReport(zx <= ze, zx, ze)


# -- Horn's finite construction --------------------------------------------------

def _majorized(small: list[Fraction], big: list[Fraction]) -> bool:
    if sum(small) != sum(big):
        return False
    a = b = Fraction(0)
    for x, y in zip(sorted(small, reverse=True), sorted(big, reverse=True)):
        a += x
        b += y
        if a > b:
            return False
    return True


def _horn_steps(xi: list[Fraction], eta: list[Fraction]) -> tuple[list[RotationStep], list[int]]:
    """Residual-chain T-transforms realizing xi from eta up to a coordinate map.

    One coordinate (the residual) carries the unplaced mass.  Each fresh
    coordinate is either left alone (its value is still needed) or rotated
    against the residual; the residual then keeps a target value and the fresh
    coordinate becomes the new residual.  Returns the steps and ``assign`` with
    ``assign[c]`` = the 0-based xi position realized at coordinate c.
    """
    n = len(eta)
    targets = list(range(n))  # xi positions still to be realized
    assign = [-1] * n
    r = max(range(n), key=lambda k: (eta[k], -k))
    rho = eta[r]
    fresh = [k for k in range(n) if k != r]
    steps: list[RotationStep] = []
    while fresh:
        choice = None
        for fi, j in enumerate(fresh):
            y = eta[j]
            rest = [eta[k] for k in fresh if k != j]
            order = sorted(targets, key=lambda t: (t != j, t))
            for t in order:
                if xi[t] == y and _majorized([xi[u] for u in targets if u != t], rest + [rho]):
                    choice = ("fix", fi, t)
                    break
            if choice:
                break
            lo, hi = min(rho, y), max(rho, y)
            for t in sorted(targets, key=lambda t: (t != r, t)):
                v = xi[t]
                if lo <= v <= hi and _majorized([xi[u] for u in targets if u != t], rest + [rho + y - v]):
                    choice = ("rot", fi, t)
                    break
            if choice:
                break
        if choice is None:
            raise RuntimeError("residual chain found no eligible pair (internal error)")
        kind, fi, t = choice
        j = fresh.pop(fi)
        targets.remove(t)
        if kind == "fix":
            assign[j] = t
            continue
        y, v = eta[j], xi[t]
        if v != rho:
            a2 = (v - y) / (rho - y)
            steps.append(RotationStep.givens(r + 1, j + 1, a2, 1 - a2))
        assign[r] = t
        r, rho = j, rho + y - v
    (t,) = targets
    if xi[t] != rho:
        raise RuntimeError("residual chain ended on the wrong value (internal error)")
    assign[r] = t
    return steps, assign


def _perm_step(assign: Seq[int]) -> Optional[RotationStep]:
    """Permutation moving coordinate c to position assign[c] (0-based input)."""
    if all(a == c for c, a in enumerate(assign)):
        return None
    return RotationStep.permutation([a + 1 for a in assign])


def _window(s) -> Sequence:
    s = as_sequence(s)
    return s if s.kind == FINITE else Sequence.finite(s.terms, name=s.name)


def _require_majorized(xi: Sequence, eta: Sequence):
    v = majorize(xi, eta)
    if v.status != HOLDS:
        raise NotMajorized(f"xi is not majorized by eta (violation at n={v.witness})", v.witness)


def horn_finite(xi, eta) -> SynthesisCertificate:
    """Orthogonal plan U with diag(U diag(eta) U^T) = xi for finitely supported xi < eta."""
    xi, eta = _window(xi), _window(eta)
    if len(xi) != len(eta):
        raise ValueError(f"xi and eta must have equal listed length ({len(xi)} != {len(eta)})")
    _require_majorized(xi, eta)
    n = len(eta)
    if n == 0:
        plan = UnitaryPlan(0)
    else:
        steps, assign = _horn_steps(list(xi.terms), list(eta.terms))
        perm = _perm_step(assign)
        plan = UnitaryPlan(n, tuple(steps) + ((perm,) if perm else ()))
    zx, ze = xi.zero_count(), eta.zero_count()
    return _finish(xi, eta, plan, zx, ze, 0, "horn", None)


# -- the kernel-aware pipeline ------------------------------------------------------

def _sums(x: Seq[Fraction]) -> list[Fraction]:
    out = [Fraction(0)]
    for v in x:
        out.append(out[-1] + v)
    return out


def select_interleaving(xi, eta_prime, p: int, horizon: Optional[int] = None) -> Interleaving:
    """Greedy-minimal indices N_1 < N'_1 < ... < N_p < N'_p (1-based, into xi).

    Requirements checked on the window: N'_{m-1} + 1 < N_m < N'_m;
    the shifted partial-sum inequality from n = N_m - (m-1) onward;
    xi_{N_m} < xi_{N_m - 1} and xi_{N_m} + xi_{N'_m} <= xi_{N_m - 1}.
    ``xi`` must be positive and nonincreasing.
    """
    x = list(as_sequence(xi).terms)
    e = list(as_sequence(eta_prime).terms)
    if any(v <= 0 for v in x) or any(a < b for a, b in zip(x, x[1:])):
        raise ValueError("xi must be strictly positive and nonincreasing")
    if p == 0:
        return Interleaving((), (), 0)
    L = len(x) if horizon is None else min(len(x), horizon)
    Sx, Se = _sums(x), _sums(e)

    def tail_ok(m: int, start: int) -> bool:
        for n in range(max(start, 1), len(e) + 1):
            if n + m > len(x):
                break
            if Sx[n + m] > Se[n]:
                return False
        return True

    N, Np = [], []
    prev = 0
    for m in range(1, p + 1):
        found = False
        for Nm in range(prev + 2, L + 1):
            if not (x[Nm - 1] < x[Nm - 2]) or not tail_ok(m, Nm - (m - 1)):
                continue
            for Npm in range(Nm + 1, L + 1):
                if x[Nm - 1] + x[Npm - 1] <= x[Nm - 2]:
                    N.append(Nm)
                    Np.append(Npm)
                    prev = Npm
                    found = True
                    break
            if found:
                break
        if not found:
            raise HorizonExhausted(f"no interleaving block {m} of {p} within the window of length {L}",
                                   Interleaving(tuple(N), tuple(Np), p))
    return Interleaving(tuple(N), tuple(Np), p)


def _compress_map(L: int, I: Interleaving) -> list[tuple]:
    """For each k = 1..L-p, the xi indices (1-based) merged into xi'_k."""
    p = I.p
    bounds = [0] + list(I.Nprime)  # N'_0 = 0
    out = []
    for k in range(1, L - p + 1):
        m = 1
        while m <= p and k >= bounds[m] - (m - 1):
            m += 1
        # k lies in [N'_{m-1} - (m-2), N'_m - (m-1)); m = p + 1 is the last segment
        if m <= p and k == I.N[m - 1] - (m - 1):
            out.append((I.N[m - 1], I.Nprime[m - 1]))
        else:
            out.append((k + m - 1,))
    return out


def compress(xi, I: Interleaving) -> Sequence:
    """The compressed sequence xi' with the partial-sum identities re-checked exactly."""
    x = list(as_sequence(xi).terms)
    p = I.p
    if p == 0:
        return Sequence.finite(x)
    L = len(x)
    groups = _compress_map(L, I)
    xp = [sum((x[i - 1] for i in g), Fraction(0)) for g in groups]
    Sx, Sp = _sums(x), _sums(xp)
    bounds = [0] + list(I.Nprime)
    for m in range(1, p + 1):
        lo, mid, hi = bounds[m - 1] - (m - 2), I.N[m - 1] - (m - 1), bounds[m] - (m - 1)
        for k in range(lo, mid):
            if Sp[k] != Sx[k + m - 1]:
                raise AssertionError(f"prefix identity before block {m} fails at k={k}")
        for k in range(mid, hi):
            if Sp[k] != x[I.Nprime[m - 1] - 1] + Sx[k + m - 1]:
                raise AssertionError(f"prefix identity inside block {m} fails at k={k}")
    for k in range(bounds[p] - (p - 1), len(xp) + 1):
        if Sp[k] != Sx[k + p]:
            raise AssertionError(f"last-segment identity fails at k={k}")
    if any(a < b for a, b in zip(xp, xp[1:])):
        raise AssertionError("compressed sequence is not monotone")
    for k in range(1, len(xp) + 1):
        if Sx[k] > Sp[k]:
            raise AssertionError(f"compressed prefix sums fall below the original at k={k}")
    return Sequence.finite(xp)


def decompression_plan(xi, I: Interleaving, offset: int = 0) -> list[RotationStep]:
    """One rotation per block splitting xi_{N_m} + xi_{N'_m} across (f_m, g_{N_m-(m-1)}).

    Coordinates: f_m = offset + m, g_k = offset + p + k.
    """
    x = list(as_sequence(xi).terms)
    steps = []
    for m in range(1, I.p + 1):
        lo, hi = x[I.N[m - 1] - 1], x[I.Nprime[m - 1] - 1]
        total = lo + hi
        f, g = offset + m, offset + I.p + I.N[m - 1] - (m - 1)
        if total == 0:
            steps.append(RotationStep.givens(f, g, 1, 0))
        else:
            steps.append(RotationStep.givens(f, g, hi / total, lo / total))
    return steps


def _finish(xi, eta, plan, zx, ze, p, case, inter, extra=None) -> SynthesisCertificate:
    cert = SynthesisCertificate(xi, eta, zx, ze, p, plan, xi, Fraction(0), case, inter, dict(extra or {}))
    report = verify_certificate(cert)
    if not report["ok"]:
        raise AssertionError(f"synthesized plan failed verification: {report}")
    cert.achieved = Sequence.finite(report["achieved"])
    cert.checks.update({k: v for k, v in report.items() if k != "achieved"})
    return cert


def verify_certificate(cert: SynthesisCertificate) -> dict:
    """Re-materialize the plan and check it exactly (independent of construction)."""
    n = cert.plan.dimension
    eta = cert.eta.padded(n)
    xi = cert.xi.padded(n)
    M = cert.plan.materialize(ROOT)
    orth = is_orthogonal(M)
    achieved = expectation_diag(M, Sequence.finite(eta)).terms if orth else ()
    Q = schur_square(M)
    cls = classify(Q, M)
    qeta = matvec(Q, eta)
    residual = max((abs(a - b) for a, b in zip(achieved, xi)), default=Fraction(0)) if achieved else None
    ok = orth and tuple(achieved) == tuple(xi) and cls.doubly_stochastic and cls.orthostochastic \
        and tuple(qeta) == tuple(xi)
    return {"ok": bool(ok), "orthogonal": orth, "doubly_stochastic": cls.doubly_stochastic,
            "orthostochastic": cls.orthostochastic, "diag_matches": tuple(achieved) == tuple(xi),
            "q_eta_matches": tuple(qeta) == tuple(xi), "achieved": tuple(achieved),
            "residual": fmt(residual) if residual is not None else None}


def synthesize(xi, eta, strategy: str = "auto", horizon: Optional[int] = None) -> SynthesisCertificate:
    """Orthogonal plan realizing diag xi in the orbit of diag eta on a common finite window.

    ``strategy="auto"``: the window is finite rank, so Horn's construction on
    the padded windows applies directly.  ``strategy="theorem"``: the window is
    treated as the leading part of an infinite-rank operator; common zeros are
    split off, the p surplus kernel coordinates of eta are handled by
    interleave / compress / Horn / decompress, and a final permutation puts
    every value at its listed position.
    """
    if strategy not in ("auto", "theorem"):
        raise ValueError("strategy must be 'auto' or 'theorem'")
    xi, eta = _window(xi), _window(eta)
    n = max(len(xi), len(eta))
    xi, eta = Sequence.finite(xi.padded(n), name=xi.name), Sequence.finite(eta.padded(n), name=eta.name)
    guard = kernel_guard(xi, eta)
    if not guard.passed:
        raise KernelGuardFailure(f"xi has {guard.kernel_xi} zeros but eta only {guard.kernel_eta}",
                                 guard.kernel_xi, guard.kernel_eta)
    zx, ze = guard.kernel_xi, guard.kernel_eta
    if strategy == "auto":
        _require_majorized(xi, eta)
        cert = horn_finite(xi, eta)
        cert.case = "finite-rank"
        return cert

    p = ze - zx
    c = zx
    xpos = sorted((k for k in range(n) if xi.terms[k] > 0), key=lambda k: (-xi.terms[k], k))
    xzero = [k for k in range(n) if xi.terms[k] == 0]
    epos = sorted((k for k in range(n) if eta.terms[k] > 0), key=lambda k: (-eta.terms[k], k))
    ezero = [k for k in range(n) if eta.terms[k] == 0]
    xs = [xi.terms[k] for k in xpos]     # s(B): positive part, sorted
    es = [eta.terms[k] for k in epos]    # eta': positive part, sorted
    v = p_majorize(Sequence.finite(xs), Sequence.finite(es), p)
    if v.status == FAILS:
        raise NotMajorized(f"positive part of xi is not {p}-majorized by that of eta "
                           f"(violation at n={v.witness})", v.witness)
    inter = select_interleaving(xs, es, p, horizon)
    xp = list(compress(xs, inter).terms)
    if not _majorized(xp, es):
        raise AssertionError("compressed sequence is not majorized (internal error)")
    # frame: [c common zeros | p kernel coordinates f | H2 holding eta' sorted]
    frame_of_eta = ezero + epos                    # frame slot -> eta coordinate
    P0 = [0] * n
    for slot, k in enumerate(frame_of_eta):
        P0[k] = slot + 1
    steps = [] if P0 == list(range(1, n + 1)) else [RotationStep.permutation(P0)]
    if es:
        w_steps, assign = _horn_steps(xp, es)
        wperm = _perm_step(assign)
        off = c + p
        steps += [s.shifted(off, n) for s in w_steps]
        if wperm:
            steps.append(wperm.shifted(off, n))
    steps += decompression_plan(xs, inter, offset=c)
    # which sorted index of s(B) sits at each frame slot
    realized = [None] * n
    groups = _compress_map(len(xs), inter)
    for k, g in enumerate(groups, start=1):
        realized[c + p + k - 1] = g[-1] if len(g) == 2 else g[0]
    for m in range(1, p + 1):
        realized[c + m - 1] = inter.N[m - 1]
    final = [0] * n
    for slot in range(c):
        final[slot] = xzero[slot] + 1
    for slot in range(c, n):
        final[slot] = xpos[realized[slot] - 1] + 1
    if final != list(range(1, n + 1)):
        steps.append(RotationStep.permutation(final))
    plan = UnitaryPlan(n, tuple(steps))
    case = "kernel-equal" if p == 0 else "kernel-surplus"
    return _finish(xi, eta, plan, zx, ze, p, case, inter if p else None,
                   {"compressed": [fmt(t) for t in xp]})
