"""Stochastic matrix classes and the contraction / Schur-square bridge.

Matrices come in three modes:

``exact``  entries are Fractions
``root``   entries are :class:`~majorant.numerics.SignedRoot` (exact orthogonal
           matrices whose entries are square roots of rationals)
``float``  a numpy array (real or complex), used by the oracle
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence as Seq

import numpy as np

from .numerics import (
    FINITE, Sequence, SignedRoot, as_sequence, fmt, radical_sum, radical_sum_equals, rational,
)

EXACT, ROOT, FLOAT = "exact", "root", "float"
FLOAT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DenseMatrix:
    rows: object  # tuple of tuples (exact/root) or np.ndarray (float)
    mode: str = EXACT

    def __post_init__(self):
        if self.mode == FLOAT:
            arr = np.asarray(self.rows)
            if arr.ndim != 2:
                raise ValueError("matrix must be 2-dimensional")
            object.__setattr__(self, "rows", arr)
            return
        rows = tuple(tuple(r) for r in self.rows)
        if rows and any(len(r) != len(rows[0]) for r in rows):
            raise ValueError("matrix rows have different lengths")
        if self.mode == EXACT:
            rows = tuple(tuple(rational(x) for x in r) for r in rows)
        elif self.mode == ROOT:
            rows = tuple(tuple(x if isinstance(x, SignedRoot) else SignedRoot.of(x) for x in r) for r in rows)
        else:
            raise ValueError(f"unknown matrix mode {self.mode!r}")
        object.__setattr__(self, "rows", rows)

    @property
    def shape(self) -> tuple[int, int]:
        if self.mode == FLOAT:
            return self.rows.shape
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def entry(self, i: int, j: int):
        """1-based entry access with bounds checking."""
        n, m = self.shape
        if not (1 <= i <= n and 1 <= j <= m):
            raise IndexError(f"entry ({i},{j}) outside a {n}x{m} matrix")
        return self.rows[i - 1][j - 1] if self.mode != FLOAT else self.rows[i - 1, j - 1]

    def to_float(self) -> np.ndarray:
        if self.mode == FLOAT:
            return self.rows
        return np.array([[float(x) for x in r] for r in self.rows], dtype=float)

    def transpose(self) -> "DenseMatrix":
        if self.mode == FLOAT:
            return DenseMatrix(self.rows.T, FLOAT)
        return DenseMatrix(tuple(zip(*self.rows)), self.mode)

    def permute_rows(self, order: Seq[int]) -> "DenseMatrix":
        """Row k of the result is row order[k] (0-based) of self."""
        if self.mode == FLOAT:
            return DenseMatrix(self.rows[list(order)], FLOAT)
        return DenseMatrix(tuple(self.rows[i] for i in order), self.mode)

    def permute_cols(self, order: Seq[int]) -> "DenseMatrix":
        return self.transpose().permute_rows(order).transpose()

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseMatrix) or self.mode != other.mode or self.shape != other.shape:
            return False
        if self.mode == FLOAT:
            return bool(np.array_equal(self.rows, other.rows))
        return self.rows == other.rows


def exact(rows) -> DenseMatrix:
    return DenseMatrix(rows, EXACT)


def identity(n: int, mode: str = EXACT) -> DenseMatrix:
    if mode == FLOAT:
        return DenseMatrix(np.eye(n), FLOAT)
    one, zero = (Fraction(1), Fraction(0)) if mode == EXACT else (SignedRoot.of(1), SignedRoot.of(0))
    return DenseMatrix(tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n)), mode)


def permutation_matrix(mapping: Seq[int], mode: str = EXACT) -> DenseMatrix:
    """P with P[i, mapping[i]] = 1 (0-based), so (P A P^T)_ii = A_{m(i), m(i)}."""
    n = len(mapping)
    if sorted(mapping) != list(range(n)):
        raise ValueError("not a permutation of 0..n-1")
    return identity(n, mode).permute_rows(mapping)


def schur_square(L: DenseMatrix) -> DenseMatrix:
    """Q with Q_ij = |L_ij|^2."""
    if L.mode == FLOAT:
        return DenseMatrix(np.abs(L.rows) ** 2, FLOAT)
    if L.mode == ROOT:
        return exact(tuple(tuple(x.square for x in r) for r in L.rows))
    return exact(tuple(tuple(x * x for x in r) for r in L.rows))


def matvec(Q: DenseMatrix, v) -> object:
    if Q.mode == FLOAT:
        return Q.rows @ np.asarray(v, dtype=Q.rows.dtype if np.iscomplexobj(Q.rows) else float)
    if Q.mode != EXACT:
        raise ValueError("matvec needs an exact or float matrix")
    v = [rational(x) for x in v]
    if len(v) != Q.shape[1]:
        raise ValueError("dimension mismatch")
    return tuple(sum((q * x for q, x in zip(r, v)), Fraction(0)) for r in Q.rows)


def row_sums(Q: DenseMatrix):
    if Q.mode == FLOAT:
        return Q.rows.sum(axis=1)
    return tuple(sum(r, Fraction(0)) for r in Q.rows)


def col_sums(Q: DenseMatrix):
    return row_sums(Q.transpose())


def is_orthogonal(L: DenseMatrix, tol: float = FLOAT_TOL) -> bool:
    """L L^* = I and L^* L = I: exactly for exact/root matrices, within tol for floats."""
    n, m = L.shape
    if n != m:
        return False
    if L.mode == FLOAT:
        A = L.rows
        return bool(np.max(np.abs(A @ A.conj().T - np.eye(n))) <= tol)
    if L.mode == EXACT:
        R = L.rows
        return all(sum((R[i][k] * R[j][k] for k in range(n)), Fraction(0)) == (i == j)
                   for i in range(n) for j in range(i, n))
    R = L.rows
    # square matrices: row orthonormality implies column orthonormality
    for i in range(n):
        if sum(x.square for x in R[i]) != 1:
            return False
        for j in range(i + 1, n):
            if radical_sum(R[i][k] * R[j][k] for k in range(n)):
                return False
    return True


def is_isometry(L: DenseMatrix, tol: float = FLOAT_TOL) -> bool:
    """L^* L = I (orthonormal columns)."""
    A = L.to_float() if L.mode != FLOAT else L.rows
    if L.mode == EXACT:
        C = L.transpose().rows
        k = len(C)
        return all(sum((a * b for a, b in zip(C[i], C[j])), Fraction(0)) == (i == j)
                   for i in range(k) for j in range(i, k))
    return bool(np.max(np.abs(A.conj().T @ A - np.eye(A.shape[1]))) <= tol)


@dataclass
class StochasticClass:
    flags: dict[str, bool]
    witness: Optional[DenseMatrix] = None
    tolerance: Optional[float] = None
    problems: list[str] = field(default_factory=list)

    def __getattr__(self, name):
        flags = self.__dict__.get("flags", {})
        if name in flags:
            return flags[name]
        raise AttributeError(name)

    def to_json(self) -> dict:
        return {"flags": dict(self.flags), "tolerance": self.tolerance, "problems": list(self.problems),
                "witness": self.witness is not None}


def classify(Q: DenseMatrix, certificate: Optional[DenseMatrix] = None,
             tol: float = FLOAT_TOL) -> StochasticClass:
    """Classify a nonnegative matrix per the substochastic ... orthostochastic ladder.

    Uni-/orthostochastic flags are only set from a verified certificate L with
    schur_square(L) == Q.
    """
    if Q.mode == ROOT:
        raise ValueError("classify expects a nonnegative exact or float matrix, not a root matrix")
    is_float = Q.mode == FLOAT
    if is_float:
        if np.iscomplexobj(Q.rows) or np.min(Q.rows) < -tol:
            raise ValueError("Q must be entrywise nonnegative")
    elif any(x < 0 for r in Q.rows for x in r):
        raise ValueError("Q must be entrywise nonnegative")

    def le1(x):
        return x <= 1 + tol if is_float else x <= 1

    def eq1(x):
        return abs(x - 1) <= tol if is_float else x == 1

    rs, cs = row_sums(Q), col_sums(Q)
    sub = all(le1(x) for x in rs) and all(le1(x) for x in cs)
    col = sub and all(eq1(x) for x in cs)
    row = sub and all(eq1(x) for x in rs)
    flags = {"substochastic": sub, "column_stochastic": col, "row_stochastic": row,
             "doubly_stochastic": col and row, "unistochastic": False, "orthostochastic": False}
    out = StochasticClass(flags, certificate, tol if is_float else None)
    if certificate is not None:
        if certificate.shape != Q.shape:
            out.problems.append(f"certificate shape {certificate.shape} != {Q.shape}")
            return out
        sq = schur_square(certificate)
        if sq.mode == FLOAT or Q.mode == FLOAT:
            match = bool(np.max(np.abs(sq.to_float() - Q.to_float())) <= tol)
        else:
            match = sq == Q
        unitary = is_orthogonal(certificate, tol)
        real = certificate.mode != FLOAT or not np.iscomplexobj(certificate.rows) \
            or bool(np.max(np.abs(certificate.rows.imag)) <= tol)
        if not match:
            out.problems.append("certificate mismatch: schur_square(L) != Q")
        if not unitary:
            out.problems.append("certificate is not unitary")
        if match and unitary:
            flags["unistochastic"] = True
            flags["orthostochastic"] = real
    return out


def _column_norms_ok(L: DenseMatrix, tol: float) -> bool:
    Q = schur_square(L)
    cs = col_sums(Q)
    if L.mode == FLOAT:
        return bool(np.all(cs <= 1 + tol)) and np.linalg.norm(L.rows, 2) <= 1 + tol
    return all(x <= 1 for x in cs)


def expectation_diag(L: DenseMatrix, eta, tol: float = FLOAT_TOL):
    """Diagonal of L diag(eta) L^*, computed directly and as schur_square(L) @ eta.

    The two routes are compared (exactly, or within ``tol`` for floats) and an
    AssertionError is raised if they differ.  Exact inputs give a finitely
    supported Sequence, float inputs a numpy vector.
    """
    n, m = L.shape
    if n != m:
        raise ValueError("L must be square")
    if L.mode == FLOAT:
        vals = np.asarray(eta.terms if isinstance(eta, Sequence) else eta, dtype=float)
    else:
        eta = as_sequence(eta)
        vals = eta.padded(n) if len(eta) <= n else None
        if len(eta) != n:
            raise ValueError(f"eta has {len(eta)} terms, L is {n}x{n}")
    if len(vals) != n:
        raise ValueError(f"eta has {len(vals)} terms, L is {n}x{n}")
    if not _column_norms_ok(L, tol):
        raise ValueError("L is not a contraction (a column has norm > 1)")
    Q = schur_square(L)
    if L.mode == FLOAT:
        A = L.rows
        direct = np.real(np.diag(A @ np.diag(vals) @ A.conj().T))
        via_q = Q.rows @ vals
        if np.max(np.abs(direct - via_q), initial=0.0) > tol * max(1.0, np.max(np.abs(vals), initial=0.0)):
            raise AssertionError("E(L diag(eta) L*) != Q eta")
        return direct
    via_q = matvec(Q, vals)
    if L.mode == EXACT:
        R = L.rows
        direct = tuple(sum((R[i][j] * vals[j] * R[i][j] for j in range(n)), Fraction(0)) for i in range(n))
    else:
        R = L.rows
        direct = []
        for i in range(n):
            terms = [R[i][j] * SignedRoot.of(vals[j]) * R[i][j] for j in range(n)]
            groups = radical_sum(terms)
            if any(rep != 1 and not _is_square(rep) for rep in groups):
                raise AssertionError("diagonal entry is irrational")
            direct.append(sum((c * _sqrt(rep) for rep, c in groups.items()), Fraction(0)))
        direct = tuple(direct)
    if direct != via_q:
        raise AssertionError("E(L diag(eta) L*) != Q eta")
    return Sequence.finite(direct)


def _is_square(x: Fraction) -> bool:
    from .numerics import exact_sqrt
    return exact_sqrt(x) is not None


def _sqrt(x: Fraction) -> Fraction:
    from .numerics import exact_sqrt
    r = exact_sqrt(x)
    assert r is not None
    return r


def pattern_orthostochastic(n: int, v) -> tuple[DenseMatrix, DenseMatrix]:
    """Orthogonal O with first column v and Q = schur_square(O) zero exactly where i > j > 1.

    Column j >= 2 is (v_1, ..., v_{j-1}, -S_{j-1}/v_j, 0, ...) normalized, with
    S_k = v_1^2 + ... + v_k^2: the orthogonal completion of v in which column
    j lives on the first j coordinates.  Returns (O, Q), O in root mode.
    """
    v = [rational(x) for x in (v.terms if isinstance(v, Sequence) else v)]
    if len(v) != n:
        raise ValueError(f"v has {len(v)} entries, expected {n}")
    if any(x <= 0 for x in v):
        raise ValueError("v must be strictly positive")
    if sum(x * x for x in v) != 1:
        raise ValueError("v must have unit Euclidean norm")
    cols = [[SignedRoot.of(x) for x in v]]
    S = [Fraction(0)]
    for x in v:
        S.append(S[-1] + x * x)
    for j in range(2, n + 1):
        # squared norm of the unnormalized column: S_{j-1} + S_{j-1}^2 / v_j^2
        vj = v[j - 1]
        norm2 = S[j - 1] * S[j] / (vj * vj)
        col = [SignedRoot.root(v[i] * v[i] / norm2) for i in range(j - 1)]
        col.append(SignedRoot.root((S[j - 1] / vj) ** 2 / norm2, -1))
        col.extend(SignedRoot.of(0) for _ in range(n - j))
        cols.append(col)
    O = DenseMatrix(tuple(zip(*cols)), ROOT)
    return O, schur_square(O)


_HALF = Fraction(1, 2)


def _direct_sum(blocks: list[tuple[tuple, ...]], zero) -> tuple[tuple, ...]:
    n = sum(len(b) for b in blocks)
    rows, off = [], 0
    for b in blocks:
        k = len(b)
        for r in b:
            rows.append((zero,) * off + tuple(r) + (zero,) * (n - off - k))
        off += k
    return tuple(rows)


def block_extend(Q: DenseMatrix, p: int) -> DenseMatrix:
    """Direct sum of p-1 copies of ((1/2,1/2),(1/2,1/2)) followed by Q."""
    if p < 1:
        raise ValueError("p must be at least 1")
    if Q.mode == FLOAT:
        k = Q.shape[0]
        out = np.zeros((2 * (p - 1) + k, 2 * (p - 1) + Q.shape[1]), dtype=Q.rows.dtype)
        for b in range(p - 1):
            out[2 * b:2 * b + 2, 2 * b:2 * b + 2] = 0.5
        out[2 * (p - 1):, 2 * (p - 1):] = Q.rows
        return DenseMatrix(out, FLOAT)
    if Q.mode == ROOT:
        h = SignedRoot.root(_HALF)
        half = ((h, h), (-h, h))
        return DenseMatrix(_direct_sum([half] * (p - 1) + [Q.rows], SignedRoot.of(0)), ROOT)
    half = ((_HALF, _HALF), (_HALF, _HALF))
    return exact(_direct_sum([half] * (p - 1) + [Q.rows], Fraction(0)))


# -- IO --------------------------------------------------------------------

def matrix_to_json(M: DenseMatrix) -> dict:
    if M.mode == FLOAT:
        return {"mode": FLOAT, "rows": M.rows.tolist()}
    if M.mode == ROOT:
        return {"mode": ROOT, "rows": [[{"sign": x.sign, "square": fmt(x.square)} for x in r] for r in M.rows]}
    return {"mode": EXACT, "rows": [[fmt(x) for x in r] for r in M.rows]}


def matrix_from_json(obj: dict) -> DenseMatrix:
    mode = obj.get("mode", EXACT)
    rows = obj.get("rows")
    if not isinstance(rows, list):
        raise ValueError("field 'rows': expected a list of rows")
    if mode == FLOAT:
        return DenseMatrix(np.array(rows, dtype=float), FLOAT)
    if mode == ROOT:
        return DenseMatrix(tuple(tuple(SignedRoot(int(x["sign"]), rational(x["square"])) for x in r)
                                 for r in rows), ROOT)
    return exact(tuple(tuple(rational(x) for x in r) for r in rows))


def matrix_to_csv(M: DenseMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if M.mode == FLOAT:
        w.writerows(M.rows.tolist())
    elif M.mode == ROOT:
        w.writerows([[("-" if x.sign < 0 else "") + f"sqrt({fmt(x.square)})" for x in r] for r in M.rows])
    else:
        w.writerows([[fmt(x) for x in r] for r in M.rows])
    return buf.getvalue()


def matrix_from_csv(text: str) -> DenseMatrix:
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    return exact(tuple(tuple(rational(x) for x in r) for r in rows))
