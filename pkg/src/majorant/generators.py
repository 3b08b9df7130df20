"""Parametric sequence families with hard-coded analytic certificates.

Every family returns a :class:`GeneratorSpec`.  Its certificates describe the
whole (infinite) sequences; :meth:`GeneratorSpec.verify` runs the relations
module on the listed prefixes and raises if any certificate disagrees with the
exact prefix computation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

from .numerics import (
    INF, Sequence, ampliate2, fmt, rational, scale, sequence_to_json, zero_count_gap,
)
from .relations import (
    APPROX, FAILS, HOLDS, MAJ, PMAJ, STRONG, Certificate, approx_p_majorize, majorize,
    p_majorize, strong_majorize,
)

EtaLike = Union[Sequence, Callable[[int], Fraction]]


@dataclass
class GeneratorSpec:
    family: str
    params: dict
    sequences: dict[str, Sequence]
    certificates: tuple[Certificate, ...] = ()
    trace: dict = field(default_factory=dict)

    @property
    def xi(self) -> Sequence:
        return self.sequences["xi"]

    @property
    def eta(self) -> Sequence:
        return self.sequences["eta"]

    def verify(self, horizon: Optional[int] = None, epsilons=(Fraction(1, 2), Fraction(1, 8))) -> dict:
        """Evaluate every certified relation and require agreement with the certificate."""
        results = {}
        for c in self.certificates:
            if c.relation == MAJ:
                vs = [majorize(self.xi, self.eta, horizon, self.certificates)]
            elif c.relation == STRONG:
                vs = [strong_majorize(self.xi, self.eta, horizon, self.certificates)]
            elif c.relation == PMAJ:
                vs = [p_majorize(self.xi, self.eta, c.p, horizon, self.certificates)]
            else:
                vs = [approx_p_majorize(self.xi, self.eta, c.p, e, horizon, self.certificates)
                      for e in epsilons if c.status == HOLDS or c.index(c.p, rational(e)) is not None]
            for v in vs:
                if v.status != c.status:
                    raise AssertionError(f"{self.family}: certificate {c.relation} p={c.p} says {c.status}, "
                                         f"relations module says {v.status}")
            key = c.relation if c.relation in (MAJ, STRONG) else f"{c.relation}[p={'inf' if c.p == INF else c.p}]"
            results[key] = [v.to_json() for v in vs]
        return results

    def to_json(self) -> dict:
        params = {k: (fmt(v) if isinstance(v, Fraction) else ("inf" if v == INF else v))
                  for k, v in self.params.items()}
        return {"family": self.family, "params": params,
                "sequences": {k: sequence_to_json(s) for k, s in self.sequences.items()},
                "certificates": [c.to_json() for c in self.certificates], "trace": self.trace}


def _cert(relation, status, p=0, reason="", index=None) -> Certificate:
    return Certificate(relation, status, p, reason, index or (lambda p, eps: 1))


# -- base sequences --------------------------------------------------------------

def geometric(length: int, first=1, ratio=Fraction(1, 2), name: str = "") -> Sequence:
    """<first * ratio^(k-1)>, truncated after ``length`` terms."""
    first, ratio = rational(first), rational(ratio)
    if not (0 < ratio < 1) or first <= 0:
        raise ValueError("need first > 0 and 0 < ratio < 1")
    terms = [first * ratio ** k for k in range(length)]
    total = first / (1 - ratio)
    return Sequence.truncated(terms, tail_bound=first * ratio ** length,
                              tail_sum_bound=total - sum(terms, Fraction(0)), total=total,
                              monotone=True, name=name or f"geometric({fmt(first)},{fmt(ratio)})")


def harmonic(length: int) -> Sequence:
    """<1/k>, nonsummable, liminf k*eta_k = 1."""
    return Sequence.truncated([Fraction(1, k) for k in range(1, length + 1)],
                              tail_bound=Fraction(1, length + 1), monotone=True, name="harmonic")


def klogk_value(k: int) -> Fraction:
    """Exact rational of the float 1/((k+1) log(k+1)); the float values decrease in k."""
    return Fraction(1.0 / ((k + 1) * math.log(k + 1)))


def klogk(length: int) -> Sequence:
    """Rational surrogate for <1/((k+1) log(k+1))>, nonsummable with k*eta_k -> 0."""
    return Sequence.truncated([klogk_value(k) for k in range(1, length + 1)],
                              tail_bound=klogk_value(length + 1), monotone=True, name="klogk")


# liminf k * eta_k = 0 for these registered families
LIMINF_ZERO = {"harmonic": False, "klogk": True}


def _liminf_zero(eta: Sequence) -> Optional[bool]:
    if eta.total is not None:
        return True  # summable: k * eta_k -> 0 along a subsequence
    return LIMINF_ZERO.get(eta.name)


def _truncated_like(eta: Sequence, terms, name: str) -> Sequence:
    return Sequence.truncated(terms, tail_bound=eta.tail_bound, tail_sum_bound=eta.tail_sum_bound,
                              total=eta.total, monotone=None, name=name)


# -- families ------------------------------------------------------------------------

def gen_p_gap(eta: Sequence, p: int) -> GeneratorSpec:
    """xi = <eta_1/p (p times), eta_2, eta_3, ...>: (p-1)-majorized by eta but not p-majorized."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if not eta.monotone or not eta.terms:
        raise ValueError("eta must be a nonempty nonincreasing sequence")
    if any(t <= 0 for t in eta.terms) or (not eta.is_finite and eta.tail_bound == 0):
        raise ValueError("eta must be strictly positive")
    if eta.is_finite:
        raise ValueError("eta must be a truncated infinite sequence")
    head = eta.terms[0] / p
    xi = _truncated_like(eta, [head] * p + list(eta.terms[1:]), f"p-gap({p})")
    # from this index on, the listed order of xi agrees with its monotonization
    bigger = [t for t in eta.terms[1:] if t > head]
    if len(bigger) == len(eta.terms) - 1 and (eta.tail_bound is None or eta.tail_bound > head):
        raise ValueError("listed prefix too short to locate eta_1/p inside eta")
    start = len(bigger) + 1
    certs = [
        _cert(MAJ, HOLDS, 0, "eta_1 spread evenly over p slots; the remaining terms are eta shifted"),
        _cert(PMAJ, FAILS, p, "shifted sums exceed eta's by eta_{n+1} > 0 at every n"),
        _cert(APPROX, FAILS, p, "shifted excess eta_{n+1} beats eps*eta_{n+1} for eps < 1",
              lambda q, eps: 1 if eps is not None and eps < 1 else None),
    ]
    if p > 1:
        certs.insert(1, _cert(PMAJ, HOLDS, p - 1, "(p-1)-shifted sums equal eta's partial sums",
                              lambda q, eps: start))
        certs.insert(2, _cert(APPROX, HOLDS, p - 1, "implied by (p-1)-majorization",
                              lambda q, eps: start))
    return GeneratorSpec("p-gap", {"p": p, "eta": eta.name}, {"xi": xi, "eta": eta}, tuple(certs),
                         {"ordered_from": start})


def gen_half_ampliation(eta: Sequence) -> GeneratorSpec:
    """xi = (1/2) D_2 eta, infinity-majorized by eta with N_p = p."""
    xi = scale(ampliate2(eta), Fraction(1, 2))
    xi = xi.with_name(f"half-D2({eta.name})" if eta.name else "half-D2")
    certs = [
        _cert(MAJ, HOLDS, 0, "sum of first 2k terms of xi equals sum of first k of eta"),
        _cert(PMAJ, HOLDS, INF, "n + p <= 2n for n >= p", lambda p, eps: max(int(p), 1)),
        _cert(APPROX, HOLDS, INF, "implied by infinity-majorization", lambda p, eps: max(int(p), 1)),
    ]
    lz = _liminf_zero(eta)
    if lz is not None and not eta.is_finite:
        certs.append(_cert(STRONG, HOLDS if lz else FAILS, 0,
                           "liminf k*eta_k = 0" if lz else "liminf k*eta_k > 0 bounds the gap below"))
    return GeneratorSpec("half-ampliation", {"eta": eta.name}, {"xi": xi, "eta": eta}, tuple(certs))


def ampliation_sandwich(eta: Sequence, horizon: int) -> list[tuple[int, Fraction, Fraction, Fraction]]:
    """Rows (k, floor(k/2) eta_k, sum_{j<=k} (eta_j - xi_j), ceil(k/2) eta_{ceil(k/2)}) for xi = D_2 eta / 2."""
    xi = scale(ampliate2(eta), Fraction(1, 2))
    rows, gap = [], Fraction(0)
    for k in range(1, horizon + 1):
        gap += eta[k] - xi[k]
        c = (k + 1) // 2
        rows.append((k, (k // 2) * eta[k], gap, c * eta[c]))
    return rows


def _app_base(length: int):
    xi = [Fraction(2 ** (k + 1) - 3, 4 ** k) for k in range(1, length + 1)]
    eta = [Fraction(1, 2 ** k) for k in range(1, length + 1)]
    return xi, eta


def app_gap_index(eps: Fraction) -> int:
    """Smallest n >= 1 with 2^(-n-1) <= eps (the base pair's N_{1,eps})."""
    n = 1
    while Fraction(1, 2 ** (n + 1)) > eps:
        n += 1
    return n


def gen_app_gap(p: int, length: int = 256) -> GeneratorSpec:
    """Approximately p-majorized but not p-majorized.

    p = 1: xi_k = (2^(k+1) - 3) / 4^k and eta_k = 2^-k.  The excess of the
    shifted sums is exactly 4^(-n-1), below eps * eta_{n+1} = eps * 2^(-n-1)
    once 2^(-n-1) <= eps.  For p > 1 the pair is padded in front by p ones
    (xi) and a single term p (eta); shifted sums then reduce to the base pair.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    xb, eb = _app_base(length)
    tail = Fraction(1, 2 ** length)
    if p == 1:
        xi_terms, eta_terms, shift = xb, eb, 0
    else:
        xi_terms, eta_terms, shift = [Fraction(1)] * p + xb, [Fraction(p)] + eb, 1
    total = Fraction(1 if p == 1 else p + 1)
    # tail of xi beyond k = length: sum_{k>L} (2^{k+1} - 3)/4^k = 2^{1-L} - 4^{-L}
    xi = Sequence.truncated(xi_terms, tail_bound=xb[-1], tail_sum_bound=2 * tail - tail * tail,
                            total=total, monotone=False, name=f"app-gap-xi({p})")
    eta = Sequence.truncated(eta_terms, tail_bound=tail / 2, tail_sum_bound=tail, total=total,
                             monotone=True, name=f"app-gap-eta({p})")
    certs = (
        _cert(MAJ, HOLDS, 0, "4^-n <= 2^-n and both totals agree"),
        _cert(APPROX, HOLDS, p, "shifted excess 4^(-n-1) <= eps * 2^(-n-1) once 2^(-n-1) <= eps",
              lambda q, eps: app_gap_index(eps) + shift + 1),
        _cert(PMAJ, FAILS, p, "shifted excess 4^(-n-1) > 0 at every n"),
    ) + ((_cert(PMAJ, HOLDS, p - 1, "one shift fewer leaves a nonnegative margin", lambda q, eps: 2),)
         if p > 1 else ())
    return GeneratorSpec("app-gap", {"p": p, "length": length}, {"xi": xi, "eta": eta}, certs)


def _eta_fn(eta: EtaLike) -> Callable[[int], Fraction]:
    if callable(eta):
        return lambda k: rational(eta(k))

    def f(k: int) -> Fraction:
        if k > len(eta.terms):
            raise IndexError(f"construction needs eta_{k}, beyond the {len(eta.terms)} listed terms")
        return eta.terms[k - 1]
    return f


def gen_strong_and_infty(eta: EtaLike, eps: Union[Callable[[int], Fraction], list], K: int,
                         budget: int = 10 ** 6, liminf_zero: bool = False,
                         name: str = "") -> GeneratorSpec:
    """Infinity-majorized and strongly majorized xi for eta with liminf k*eta_k > 0.

    Builds xi block by block: N_k, N'_k, M_k, p_k are chosen smallest-feasible
    (p_k largest-feasible) and every inequality of the construction is
    re-checked exactly.  ``liminf_zero=True`` returns the half-ampliation.
    """
    if liminf_zero:
        if callable(eta):
            raise ValueError("liminf_zero needs eta as a Sequence")
        return gen_half_ampliation(eta)
    e = _eta_fn(eta)
    ep = (lambda k: rational(eps(k))) if callable(eps) else (lambda k: rational(eps[k - 1]))
    S_cache = [Fraction(0)]

    def S(n: int) -> Fraction:
        while len(S_cache) <= n:
            S_cache.append(S_cache[-1] + e(len(S_cache)))
        return S_cache[n]

    def rng(a: int, b: int) -> Fraction:  # sum eta_a..eta_b
        return S(b) - S(a - 1) if b >= a else Fraction(0)

    def smallest(start: int, ok) -> int:
        for j in range(start, budget + 1):
            if ok(j):
                return j
        raise RuntimeError(f"index budget {budget} exhausted")

    checks: list[str] = []
    blocks = []
    Np_prev = 1
    N = smallest(2, lambda j: 0 < e(j) <= e(Np_prev) / 2)
    pk = int(e(Np_prev) // e(N))
    xi = [e(j) for j in range(2, N + 1)] + [e(N)] * pk
    for k in range(1, K + 1):
        M = len(xi) - N
        gap = S(N) - sum(xi, Fraction(0))
        if not (0 <= gap < e(N)):
            raise AssertionError(f"block {k}: gap {gap} outside [0, eta_N)")
        if xi[-1] != e(N):
            raise AssertionError(f"block {k}: last term is not eta_N")
        Np = smallest(len(xi) + 1, lambda j: rng(j - M, j - 1) < ep(k))
        # the extension up to N'_k - 1 must keep the gap below eta_N + eps_k
        ext = xi + [e(j) for j in range(N + 1, Np)]
        gap24 = S(Np - 1) - sum(ext[:Np - 1], Fraction(0))
        if not (0 <= gap24 < e(N) + ep(k)):
            raise AssertionError(f"block {k}: extended gap {gap24} outside [0, eta_N + eps_k)")
        blocks.append({"k": k, "N": N, "Nprime": Np, "M": M, "p": pk, "length": len(xi),
                       "gap": gap, "gap_extended": gap24})
        if k == K:
            break
        Nn = smallest(Np + 1, lambda j: 0 < e(j) <= e(Np) / 2)
        room = S(N) + e(Np) - sum(xi, Fraction(0))
        pn = int(room // e(Nn))
        if pn < 2:
            raise AssertionError(f"block {k + 1}: p = {pn} < 2")
        xi = xi + [e(j) for j in range(N + 1, Np)] + [e(j) for j in range(Np + 1, Nn + 1)] + [e(Nn)] * pn
        N, pk = Nn, pn

    # invariants over the finished prefix
    if any(a < b for a, b in zip(xi, xi[1:])):
        raise AssertionError("xi prefix is not nonincreasing")
    Ms = [b["M"] for b in blocks]
    if any(m < k for k, m in enumerate(Ms, 1)) or any(a >= b for a, b in zip(Ms, Ms[1:])):
        raise AssertionError(f"M_k not strictly increasing with M_k >= k: {Ms}")
    for b, nxt in zip(blocks, blocks[1:]):
        if not (b["Nprime"] < nxt["N"] < nxt["length"] < nxt["Nprime"]):
            raise AssertionError("block indices do not interlace")
    Sx = [Fraction(0)]
    for t in xi:
        Sx.append(Sx[-1] + t)
    N1 = blocks[0]["N"]
    for m in range(1, N1 + 1):
        if Sx[m] > S(m):
            raise AssertionError(f"first-block prefix inequality fails at m={m}")
    shifted_checked = 0
    for b, nxt in zip(blocks, blocks[1:]):
        for m in range(b["N"] + 1, nxt["N"] + 1):
            if Sx[m + b["M"]] > S(m):
                raise AssertionError(f"shifted prefix inequality fails at block {b['k']}, m={m}")
            shifted_checked += 1
    checks.append(f"shifted prefix inequality checked at {shifted_checked} indices")

    tail_bound = xi[-1]
    xs = Sequence.truncated(xi, tail_bound=tail_bound, monotone=True, name=f"block-xi({name})" if name else "block-xi")
    eta_len = max(blocks[-1]["Nprime"], len(xi))
    eta_seq = eta if isinstance(eta, Sequence) else Sequence.truncated(
        [e(j) for j in range(1, eta_len + 1)], tail_bound=e(eta_len + 1), monotone=True, name=name)

    def inf_index(p, eps_):
        for b in blocks[:-1]:
            if b["M"] >= p:
                return b["N"] + 1
        return len(xi) + 1  # beyond the listed prefix: nothing to check

    certs = (
        _cert(MAJ, HOLDS, 0, "block construction keeps every prefix below eta's"),
        _cert(PMAJ, HOLDS, INF, "shift M_k grows without bound", inf_index),
        _cert(APPROX, HOLDS, INF, "implied by infinity-majorization", inf_index),
        _cert(STRONG, HOLDS, 0, "gap at N'_k - 1 is below eta_{N_k} + eps_k -> 0"),
    )
    for b in blocks:
        b["gap"], b["gap_extended"] = fmt(b["gap"]), fmt(b["gap_extended"])
    return GeneratorSpec("strong-infty", {"K": K, "eta": name}, {"xi": xs, "eta": eta_seq}, certs,
                         {"blocks": blocks, "checks": checks})


def convex_index(p, q, gap_xz, gap_zx):
    """min(p + |xi^-1(0) \\ zeta^-1(0)|, q + |zeta^-1(0) \\ xi^-1(0)|) with infinite values."""
    return min(p + gap_xz, q + gap_zx)


def convex_mix(xi: Sequence, zeta: Sequence, lam, p, q) -> GeneratorSpec:
    """phi = lam*xi + (1-lam)*zeta and the index r at which phi stays approximately majorized."""
    lam = rational(lam)
    if not (0 < lam < 1):
        raise ValueError("lambda must lie strictly between 0 and 1")
    if xi.is_finite != zeta.is_finite:
        raise ValueError("xi and zeta must have the same kind")
    n = max(len(xi), len(zeta))
    if xi.is_finite:
        a, b = xi.padded(n), zeta.padded(n)
        phi = Sequence.finite([lam * x + (1 - lam) * z for x, z in zip(a, b)], name="convex")
    else:
        n = min(len(xi), len(zeta))
        terms = [lam * x + (1 - lam) * z for x, z in zip(xi.terms[:n], zeta.terms[:n])]
        tb = None if xi.tail_bound is None or zeta.tail_bound is None else max(xi.tail_bound, zeta.tail_bound)
        total = None if xi.total is None or zeta.total is None else lam * xi.total + (1 - lam) * zeta.total
        phi = Sequence.truncated(terms, tail_bound=tb, total=total, monotone=None, name="convex")
    gxz, gzx = zero_count_gap(xi, zeta), zero_count_gap(zeta, xi)
    r = convex_index(p, q, gxz, gzx)
    certs = (_cert(APPROX, HOLDS, r, "convex combination of approximately majorized sequences"),) \
        if r != INF else (_cert(APPROX, HOLDS, INF, "convex combination of approximately majorized sequences"),)
    return GeneratorSpec("convex", {"lambda": lam, "p": p, "q": q, "r": r},
                         {"xi": phi, "eta": Sequence.finite(()), "left": xi, "right": zeta}, certs,
                         {"gap_xi_zeta": gxz if gxz != INF else "inf",
                          "gap_zeta_xi": gzx if gzx != INF else "inf"})


# -- matrix windows with a prescribed zero pattern ------------------------------------------

def nonnecessity_window(eta: Sequence, p: int, size: int, v=None):
    """Finite window of the block-extended pattern construction.

    Returns ``(Qt, Lt, eta_t, xi)`` where ``eta_t`` interleaves p zeros with the
    first p terms of eta, ``Qt`` is the direct sum of p-1 half blocks and an
    orthostochastic ``size``-square pattern matrix Q (zeros exactly where
    i > j > 1), ``Lt`` its orthogonal certificate and ``xi = Qt eta_t``.
    """
    from .stochastic import block_extend, matvec, pattern_orthostochastic
    if p < 1:
        raise ValueError("p must be at least 1")
    if v is None:
        v = unit_vector(size)
    O, Q = pattern_orthostochastic(size, v)
    Qt, Lt = block_extend(Q, p), block_extend(O, p)
    head = []
    for j in range(1, p):
        head += [Fraction(0), eta[j]]
    # the pattern block sees (0, eta_p, eta_{p+1}, ...)
    body = [Fraction(0)] + [eta[j] for j in range(p, p + size - 1)]
    eta_t = Sequence.finite(head + body, name="eta-tilde")
    xi = Sequence.finite(matvec(Qt, eta_t.terms), name="xi")
    return Qt, Lt, eta_t, xi


def unit_vector(n: int) -> list[Fraction]:
    """A strictly positive rational unit vector (inverse stereographic projection)."""
    if n == 1:
        return [Fraction(1)]
    # y = (1, 1/2, ..., 1/(n-1)) scaled small enough that the first coordinate stays largest
    y = [Fraction(1, 2 * k) for k in range(1, n)]
    s = sum(t * t for t in y)
    first = (1 - s) / (1 + s)
    rest = [2 * t / (1 + s) for t in y]
    out = [first] + rest
    if any(t <= 0 for t in out):
        raise AssertionError("stereographic point is not strictly positive")
    return out


def window_excess(Q, eta: Sequence) -> list[tuple[int, Fraction, Fraction, Fraction]]:
    """Rows (n, sum_{i<=n} (Q eta~)_i, sum_{j<n} eta_j, tail) with eta~ = <0, eta>.

    The tail sum_{j>n} sum_{i<=n} Q_ij eta_{j-1} is exactly the excess of the
    first column over the second; it is strictly positive for every n below
    the window size when Q has the pattern zero set and eta > 0.
    """
    from .stochastic import matvec
    size = Q.shape[0]
    et = [Fraction(0)] + [eta[j] for j in range(1, size)]
    xi = matvec(Q, et)
    rows, lhs, rhs = [], Fraction(0), Fraction(0)
    for n in range(1, size + 1):
        lhs += xi[n - 1]
        if n > 1:
            rhs += eta[n - 1]
        tail = sum((Q.rows[i][j] * et[j] for j in range(n, size) for i in range(n)), Fraction(0))
        if lhs != rhs + tail:
            raise AssertionError(f"column-sum identity fails at n={n}")
        rows.append((n, lhs, rhs, tail))
    return rows
