"""Floating-point cross-checks that share no code with the exact engine.

Haar sampling of orthogonal matrices, a second implementation of the
majorization relations on numpy partial sums, the necessity bound for doubly
stochastic matrices, and a randomized search for diagonals outside the
approximate p-majorization region.  Tolerances: 1e-9 for inequalities and
kernel thresholds, 1e-12 for orthogonality.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .numerics import Sequence, fmt, rational
from .stochastic import EXACT, DenseMatrix, col_sums, matvec, row_sums

TOL = 1e-9
ORTHO_TOL = 1e-12
BLOCK = 1024  # samples per random substream


def haar_orthogonal(n: int, seed=None, count: Optional[int] = None) -> np.ndarray:
    """Haar-distributed real orthogonal matrix (or a stack of ``count`` of them).

    QR of a standard Gaussian matrix, with the columns of Q multiplied by the
    signs of diag(R) so the law is invariant under left multiplication.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    shape = (n, n) if count is None else (count, n, n)
    q, r = np.linalg.qr(rng.standard_normal(shape))
    d = np.sign(np.diagonal(r, axis1=-2, axis2=-1))
    d[d == 0] = 1
    return q * d[..., None, :]


# -- float relations ---------------------------------------------------------------

def _prefix(v) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.asarray(v, dtype=float))])


def _pad(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    n = max(len(a), len(b))
    return np.pad(a, (0, n - len(a))), np.pad(b, (0, n - len(b)))


def float_majorize(xi, eta, tol: float = TOL) -> tuple[bool, Optional[int]]:
    """(holds, first violating n) for finitely supported float vectors."""
    x, e = _pad(xi, eta)
    sx = np.cumsum(np.sort(x)[::-1])
    se = np.cumsum(np.sort(e)[::-1])
    bad = np.nonzero(sx > se + tol)[0]
    if bad.size:
        return False, int(bad[0]) + 1
    if abs(sx[-1] - se[-1]) > tol if len(sx) else False:
        return False, len(sx)
    return True, None


def float_p_majorize(xi, eta, p: int, tol: float = TOL, eps: float = 0.0) -> tuple[bool, int]:
    """(holds, N) with N the least index past the last violation of the shifted inequality."""
    ok, w = float_majorize(xi, eta, tol)
    if not ok:
        return False, w
    x, e = _pad(xi, eta)
    x, e = np.sort(x)[::-1], np.sort(e)[::-1]
    L = len(x)
    sx, se = _prefix(x), _prefix(e)
    N = 1
    for n in range(1, L + 1):
        lhs = sx[min(n + p, L)]
        nxt = e[n] if n < L else 0.0
        if lhs > se[n] + eps * nxt + tol:
            N = n + 1
    return True, N


# -- Monte Carlo over orbits -------------------------------------------------------------

@dataclass
class SampleReport:
    seed: int
    dimension: int
    samples: int
    diagonals: np.ndarray
    violations: list = field(default_factory=list)
    max_orthogonality_error: float = 0.0

    def to_json(self, include_diagonals: bool = False) -> dict:
        out = {"seed": self.seed, "dimension": self.dimension, "samples": self.samples,
               "violations": [{"sample": i, "violated": msg} for i, msg in self.violations],
               "max_orthogonality_error": self.max_orthogonality_error}
        if include_diagonals:
            out["diagonals"] = self.diagonals.tolist()
        return out


def _block_diagonals(eta: np.ndarray, count: int, seed: int, block: int):
    rng = np.random.default_rng([seed, block])
    U = haar_orthogonal(len(eta), rng, count)
    err = np.max(np.abs(U @ np.swapaxes(U, -1, -2) - np.eye(len(eta))))
    return np.einsum("sij,j->si", U * U, eta), float(err)


def sample_orbit_expectation(eta, samples: int = 1000, seed: int = 0, jobs: int = 1,
                             tol: float = TOL) -> SampleReport:
    """Diagonals of U diag(eta) U^T for Haar U, checked against majorization and kernel size.

    Block b of BLOCK samples draws from the substream (seed, b), so the
    samples do not depend on ``jobs``.
    """
    e = np.asarray([float(t) for t in (eta.terms if isinstance(eta, Sequence) else eta)])
    n = len(e)
    counts = [min(BLOCK, samples - b * BLOCK) for b in range((samples + BLOCK - 1) // BLOCK)]
    work = [(e, c, seed, b) for b, c in enumerate(counts)]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(lambda a: _block_diagonals(*a), work))
    else:
        parts = [_block_diagonals(*a) for a in work]
    diags = np.concatenate([p[0] for p in parts]) if parts else np.zeros((0, n))
    err = max((p[1] for p in parts), default=0.0)
    report = SampleReport(seed, n, samples, diags, [], err)
    if err > ORTHO_TOL:
        report.violations.append((-1, f"orthogonality error {err:.3e} > {ORTHO_TOL}"))
    se = np.cumsum(np.sort(e)[::-1])
    kernel_eta = int(np.sum(np.abs(e) <= tol))
    sd = np.cumsum(-np.sort(-diags, axis=1), axis=1)
    over = sd > se + tol
    total_off = np.abs(sd[:, -1] - se[-1]) > tol if n else np.zeros(len(diags), bool)
    kernels = np.sum(np.abs(diags) <= tol, axis=1)
    for i in np.nonzero(over.any(axis=1) | total_off)[0]:
        k = int(np.argmax(over[i])) + 1 if over[i].any() else n
        report.violations.append((int(i), f"prefix sum {k}: {sd[i, k - 1]:.12g} > {se[k - 1]:.12g}"))
    for i in np.nonzero(kernels > kernel_eta)[0]:
        report.violations.append((int(i), f"kernel count {int(kernels[i])} > {kernel_eta}"))
    report.violations.sort(key=lambda t: t[0])
    return report


# -- the necessity bound --------------------------------------------------------------------

@dataclass
class NecessityReport:
    ok: bool
    N_r_eps: Optional[int]
    N: int
    r: int
    epsilon: Fraction
    checked: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    reason: str = ""

    def to_json(self) -> dict:
        return {"ok": self.ok, "N_r_eps": self.N_r_eps, "N": self.N, "r": self.r,
                "epsilon": fmt(self.epsilon), "checked": len(self.checked),
                "failures": [{"m": m, "lhs": str(a), "rhs": str(b)} for m, a, b in self.failures],
                "reason": self.reason}


def verify_necessity_bound(Q: DenseMatrix, eta_prime, N: Optional[int] = None, r: int = 0,
                           epsilon=Fraction(1, 2), tol: float = TOL) -> NecessityReport:
    """Realize the approximate r-majorization bound for xi = Q eta' on a finite window.

    Rows are reordered so xi reads (N zeros, then s(B) decreasing) and columns
    so eta' reads (N + r zeros, then decreasing); both keep Q doubly
    stochastic.  N_{r,eps} is the least index > N + r at which the first
    N + r columns carry more than N + r - eps of mass in the leading rows, and
    from there on the shifted partial sums of s(B) must stay below those of
    s(A) plus eps times the next term.
    """
    eps = rational(epsilon)
    is_exact = Q.mode == EXACT
    D = Q.shape[0]
    if Q.shape != (D, D):
        raise ValueError("Q must be square")
    e = [rational(t) for t in (eta_prime.terms if isinstance(eta_prime, Sequence) else eta_prime)]
    if len(e) != D:
        raise ValueError(f"eta' has {len(e)} terms, Q is {D}x{D}")
    if is_exact:
        ok_ds = all(x == 1 for x in row_sums(Q)) and all(x == 1 for x in col_sums(Q))
        xi = list(matvec(Q, e))
        A = [list(r_) for r_ in Q.rows]
        zero = lambda v: v == 0  # noqa: E731
        le = lambda a, b: a <= b  # noqa: E731
    else:
        M = Q.to_float()
        ok_ds = bool(np.all(np.abs(M.sum(0) - 1) <= tol) and np.all(np.abs(M.sum(1) - 1) <= tol))
        xi = list(M @ np.array([float(t) for t in e]))
        A = M.tolist()
        e = [float(t) for t in e]
        eps_f = float(eps)
        zero = lambda v: abs(v) <= tol  # noqa: E731
        le = lambda a, b: a <= b + tol  # noqa: E731
    if N is None:
        N = sum(1 for v in xi if zero(v))
    report = NecessityReport(False, None, N, r, eps)
    if not ok_ds:
        report.reason = "Q is not doubly stochastic"
        return report
    rows = sorted(range(D), key=lambda i: (not zero(xi[i]), -xi[i], i))
    zcols = [j for j in range(D) if zero(e[j])]
    if len(zcols) < N + r:
        report.reason = f"eta' has {len(zcols)} zeros, fewer than N + r = {N + r}"
        return report
    lead = zcols[:N + r]
    rest = sorted((j for j in range(D) if j not in lead), key=lambda j: (-e[j], j))
    cols = lead + rest
    q = [[A[i][j] for j in cols] for i in rows]
    x = [xi[i] for i in rows]
    s = [e[j] for j in cols]
    if sum(1 for v in x[:N] if zero(v)) != N:
        report.reason = f"xi does not have {N} zeros"
        return report
    K = N + r
    target = K - (eps if is_exact else eps_f)
    mass = 0
    Nre = None
    for m in range(1, D + 1):
        mass += sum(q[m - 1][:K])
        if m > K and mass > target + (0 if is_exact else tol):
            Nre = m
            break
    if Nre is None:
        report.reason = "no index satisfies the column-mass condition inside the window"
        return report
    report.N_r_eps = Nre
    sx = [0] * (D + 1)
    ss = [0] * (D + 1)
    for k in range(D):
        sx[k + 1] = sx[k] + x[k]
        ss[k + 1] = ss[k] + s[k]
    epsv = eps if is_exact else eps_f
    for m in range(Nre, D):
        lhs = sx[m]
        rhs = ss[m] - ss[K] + epsv * s[m]
        report.checked.append(m)
        if not le(lhs, rhs):
            report.failures.append((m, lhs, rhs))
    report.ok = not report.failures
    if report.failures:
        report.reason = "shifted partial sums exceed the bound"
    return report


# -- randomized search -----------------------------------------------------------------------

@dataclass
class SearchReport:
    seed: int
    budget: int
    dimension: int
    kernel_eta: int
    candidates: list = field(default_factory=list)
    by_kernel: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"seed": self.seed, "budget": self.budget, "dimension": self.dimension,
                "kernel_eta": self.kernel_eta, "by_kernel": self.by_kernel,
                "candidates": self.candidates, "heuristic": True}


def conjecture_search(eta, budget: int = 1000, seed: int = 0, kernels=None,
                      epsilon: float = 0.5, tol: float = TOL) -> SearchReport:
    """Sample diagonals with prescribed kernel size and test them against the conjectured region.

    For a kernel size k (at most the number of zeros of eta) the orthogonal
    matrix fixes k zero coordinates of eta and is Haar on the rest, so the
    diagonal has k zeros.  With p = zeros(eta) - k, a candidate is a diagonal
    whose positive part is not approximately p-majorized by eta's (float
    check, slack ``tol``).  This is evidence gathering only.
    """
    e = np.asarray([float(t) for t in (eta.terms if isinstance(eta, Sequence) else eta)])
    n = len(e)
    zeros = [j for j in range(n) if abs(e[j]) <= tol]
    if kernels is None:
        kernels = list(range(len(zeros) + 1))
    report = SearchReport(seed, budget, n, len(zeros))
    if n == 0 or not np.any(e > tol):
        report.by_kernel = {str(k): 0 for k in kernels}
        return report
    rng = np.random.default_rng(seed)
    per = max(1, budget // max(1, len(kernels)))
    for k in kernels:
        if k > len(zeros):
            raise ValueError(f"kernel size {k} exceeds the {len(zeros)} zeros of eta")
        fixed = zeros[:k]
        free = [j for j in range(n) if j not in fixed]
        p = len(zeros) - k
        U = haar_orthogonal(len(free), rng, per)
        d_free = np.einsum("sij,j->si", U * U, e[free])
        found = 0
        for i, d in enumerate(d_free):
            ok, w = float_majorize(d, e[free], tol)
            okp, _ = float_p_majorize(d[d > tol], e[e > tol], p, tol, epsilon) if ok else (False, None)
            kern_ok = int(np.sum(d <= tol)) + k <= len(zeros)
            if not (ok and okp and kern_ok):
                found += 1
                report.candidates.append({"kernel": k, "sample": i, "diagonal": d.tolist()})
        report.by_kernel[str(k)] = found
    return report
