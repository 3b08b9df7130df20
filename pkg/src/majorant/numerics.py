"""Exact scalars and the sequence model.

Every decision procedure in the package works on :class:`Sequence` values whose
terms are :class:`fractions.Fraction`.  Indices are 1-based in the public API
(``partial_sums(...).sums[n - 1]`` is the sum of the first ``n`` terms) to match
the ``sum_{k=1}^n`` convention used throughout.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence as Seq, Union

INF = math.inf  # cardinal infinity (kernel counts, p values)

FINITE = "finite"
TRUNCATED = "truncated"

RationalLike = Union[Fraction, int, str]

_RATIONAL_RE = re.compile(r"^\s*[+-]?\d+(\s*/\s*\d+)?\s*$")


class Undecidable(Exception):
    """A question cannot be settled from the finite data supplied."""


def rational(x: RationalLike) -> Fraction:
    """Coerce ``x`` to a Fraction, refusing floats and decimal strings."""
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        if not _RATIONAL_RE.match(x):
            raise ValueError(f"not a decimal-free rational string: {x!r}")
        return Fraction(x.replace(" ", ""))
    raise TypeError(f"refusing silent coercion of {type(x).__name__} to a rational")


def fmt(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def exact_sqrt(x: Fraction) -> Optional[Fraction]:
    """Return sqrt(x) when it is rational, else None."""
    if x < 0:
        return None
    n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if n * n == x.numerator and d * d == x.denominator:
        return Fraction(n, d)
    return None


@dataclass(frozen=True)
class SignedRoot:
    """The real number ``sign * sqrt(square)`` with ``square`` rational.

    Orthogonal matrices built from Givens rotations with rational squared
    cosines have entries of this form, which keeps every check exact.
    """

    sign: int
    square: Fraction

    def __post_init__(self):
        if self.square < 0:
            raise ValueError("square must be nonnegative")
        if self.square == 0 and self.sign != 0:
            object.__setattr__(self, "sign", 0)
        elif self.square != 0 and self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1 for a nonzero root")

    @classmethod
    def of(cls, x: RationalLike) -> "SignedRoot":
        x = rational(x)
        return cls((x > 0) - (x < 0), x * x)

    @classmethod
    def root(cls, square: RationalLike, sign: int = 1) -> "SignedRoot":
        square = rational(square)
        return cls(sign if square else 0, square)

    def __mul__(self, other: "SignedRoot") -> "SignedRoot":
        if not isinstance(other, SignedRoot):
            other = SignedRoot.of(other)
        return SignedRoot(self.sign * other.sign, self.square * other.square)

    __rmul__ = __mul__

    def __neg__(self) -> "SignedRoot":
        return SignedRoot(-self.sign, self.square)

    def __bool__(self) -> bool:
        return self.sign != 0

    def __float__(self) -> float:
        return self.sign * math.sqrt(self.square)

    def rational_value(self) -> Optional[Fraction]:
        r = exact_sqrt(self.square)
        return None if r is None else self.sign * r


def radical_sum(terms: Iterable[SignedRoot]) -> dict[Fraction, Fraction]:
    """Group ``sum(terms)`` by square class.

    Returns ``{rep: coeff}`` meaning ``sum = sum(coeff * sqrt(rep))`` where the
    reps lie in pairwise distinct square classes.  Square roots from distinct
    classes are linearly independent over Q, so the decomposition is unique up
    to the choice of representatives; zero coefficients are dropped.
    """
    classes: dict[Fraction, Fraction] = {}
    for t in terms:
        if not t:
            continue
        for rep in classes:
            ratio = exact_sqrt(t.square / rep)
            if ratio is not None:
                classes[rep] += t.sign * ratio
                break
        else:
            classes[t.square] = Fraction(t.sign)
    return {rep: c for rep, c in classes.items() if c != 0}


def radical_sum_equals(terms: Iterable[SignedRoot], value: RationalLike) -> bool:
    """Exact test of ``sum(terms) == value`` for a rational ``value``."""
    value = rational(value)
    groups = radical_sum(list(terms) + [-SignedRoot.of(value)] if value else terms)
    return not groups


@dataclass(frozen=True)
class Sequence:
    """A nonnegative sequence, either finitely supported or a truncated prefix.

    ``tail_bound`` bounds every unlisted term, ``tail_sum_bound`` bounds their
    sum, and ``total`` (when known) is the exact sum of the whole sequence.
    A Truncated sequence with ``infinite_support`` is taken to have no zeros
    beyond its listed prefix.
    """

    terms: tuple[Fraction, ...]
    kind: str = FINITE
    tail_bound: Optional[Fraction] = None
    tail_sum_bound: Optional[Fraction] = None
    total: Optional[Fraction] = None
    monotone: bool = False
    infinite_support: bool = True
    name: str = field(default="", compare=False)

    def __post_init__(self):
        terms = tuple(rational(t) for t in self.terms)
        object.__setattr__(self, "terms", terms)
        for attr in ("tail_bound", "tail_sum_bound", "total"):
            v = getattr(self, attr)
            if v is not None:
                object.__setattr__(self, attr, rational(v))
        if self.kind not in (FINITE, TRUNCATED):
            raise ValueError(f"unknown sequence kind {self.kind!r}")
        for i, t in enumerate(terms, 1):
            if t < 0:
                raise ValueError(f"term {i} is negative: {t}")
        if self.kind == FINITE:
            if self.tail_bound not in (None, 0) or self.tail_sum_bound not in (None, 0):
                raise ValueError("finitely supported sequences have zero tails")
            object.__setattr__(self, "total", sum(terms, Fraction(0)))
        elif self.monotone and self.tail_bound is not None and terms:
            if self.tail_bound > terms[-1]:
                raise ValueError("tail_bound exceeds the last listed term of a monotone sequence")
        if self.monotone and any(a < b for a, b in zip(terms, terms[1:])):
            raise ValueError("sequence declared monotone but listed terms increase")

    @classmethod
    def finite(cls, terms: Iterable[RationalLike], name: str = "") -> "Sequence":
        terms = tuple(rational(t) for t in terms)
        mono = all(a >= b for a, b in zip(terms, terms[1:]))
        return cls(terms, FINITE, monotone=mono, name=name)

    @classmethod
    def truncated(cls, terms: Iterable[RationalLike], *, tail_bound=None, tail_sum_bound=None,
                  total=None, monotone=None, infinite_support=True, name: str = "") -> "Sequence":
        terms = tuple(rational(t) for t in terms)
        if monotone is None:
            monotone = all(a >= b for a, b in zip(terms, terms[1:]))
        return cls(terms, TRUNCATED, tail_bound, tail_sum_bound, total, monotone,
                   infinite_support, name=name)

    @property
    def is_finite(self) -> bool:
        return self.kind == FINITE

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, k: int) -> Fraction:
        """1-based access; FinitelySupported sequences read 0 past their list."""
        if k < 1:
            raise IndexError("sequences are 1-based")
        if k <= len(self.terms):
            return self.terms[k - 1]
        if self.is_finite:
            return Fraction(0)
        raise IndexError(f"index {k} beyond the listed prefix of a truncated sequence")

    def padded(self, n: int) -> tuple[Fraction, ...]:
        if n < len(self.terms):
            return self.terms[:n]
        if not self.is_finite:
            raise IndexError("cannot pad a truncated sequence")
        return self.terms + (Fraction(0),) * (n - len(self.terms))

    def support_end(self) -> int:
        """Last index carrying a nonzero term (0 for the zero sequence)."""
        for i in range(len(self.terms), 0, -1):
            if self.terms[i - 1]:
                return i
        return 0

    def zero_count(self):
        """Number of zero terms; cofinite zeros of a finite list are not counted."""
        if not self.is_finite and not self.infinite_support:
            raise Undecidable("zero count of a truncated sequence without declared support")
        return sum(1 for t in self.terms if t == 0)

    def with_name(self, name: str) -> "Sequence":
        return replace(self, name=name)


@dataclass(frozen=True)
class PartialSumTable:
    sums: tuple[Fraction, ...]
    total: Optional[Fraction]

    def __getitem__(self, n: int) -> Fraction:
        """Sum of the first ``n`` terms (n >= 0)."""
        return Fraction(0) if n == 0 else self.sums[n - 1]


def monotonize(s: Sequence) -> Sequence:
    """Nonincreasing rearrangement.

    Finitely supported inputs keep their zeros at the end.  Truncated inputs
    with infinite support drop listed zeros, and only listed terms that are
    provably among the largest (at least ``tail_bound``) are retained.
    """
    if s.is_finite:
        return replace(s, terms=tuple(sorted(s.terms, reverse=True)), monotone=True)
    terms = sorted((t for t in s.terms if t or not s.infinite_support), reverse=True)
    if s.tail_bound is not None and not s.monotone:
        terms = [t for t in terms if t >= s.tail_bound]
    return replace(s, terms=tuple(terms), monotone=True)


def partial_sums(s: Sequence, horizon: Optional[int] = None) -> PartialSumTable:
    if horizon is None:
        horizon = len(s.terms)
    if horizon > len(s.terms) and not s.is_finite:
        raise ValueError(f"horizon {horizon} beyond listed data ({len(s.terms)} terms)")
    sums, acc = [], Fraction(0)
    for t in s.padded(horizon) if s.is_finite else s.terms[:horizon]:
        acc += t
        sums.append(acc)
    return PartialSumTable(tuple(sums), s.total)


def zero_count_gap(a: Sequence, b: Sequence):
    """``|a^{-1}(0) \\ b^{-1}(0)|`` over positions, possibly ``INF``."""
    for s in (a, b):
        if not s.is_finite and not s.infinite_support:
            raise Undecidable("zero set of a truncated sequence without declared support")
    if a.is_finite and not b.is_finite:
        # cofinite zeros of a against an eventually positive b
        return INF
    n = max(len(a.terms), len(b.terms))
    count = 0
    for k in range(1, n + 1):
        ak = a.terms[k - 1] if k <= len(a.terms) else (Fraction(0) if a.is_finite else Fraction(1))
        bk = b.terms[k - 1] if k <= len(b.terms) else (Fraction(0) if b.is_finite else Fraction(1))
        if ak == 0 and bk != 0:
            count += 1
    return count


def ampliate2(s: Sequence) -> Sequence:
    """The 2-ampliation <s1, s1, s2, s2, ...>."""
    terms = tuple(t for t in s.terms for _ in range(2))
    return replace(
        s,
        terms=terms,
        tail_sum_bound=None if s.tail_sum_bound is None else 2 * s.tail_sum_bound,
        total=None if s.total is None else 2 * s.total,
        name=f"D2({s.name})" if s.name else "",
    )


def scale(s: Sequence, c: RationalLike) -> Sequence:
    c = rational(c)
    if c < 0:
        raise ValueError("scale factor must be nonnegative")
    return replace(
        s,
        terms=tuple(c * t for t in s.terms),
        tail_bound=None if s.tail_bound is None else c * s.tail_bound,
        tail_sum_bound=None if s.tail_sum_bound is None else c * s.tail_sum_bound,
        total=None if s.total is None else c * s.total,
    )


# -- JSON -------------------------------------------------------------------

def sequence_to_json(s: Sequence) -> dict:
    out = {"kind": s.kind, "terms": [fmt(t) for t in s.terms], "monotone": s.monotone}
    if s.kind == TRUNCATED:
        out["infinite_support"] = s.infinite_support
        for attr in ("tail_bound", "tail_sum_bound", "total"):
            v = getattr(s, attr)
            if v is not None:
                out[attr] = fmt(v)
    if s.name:
        out["name"] = s.name
    return out


def sequence_from_json(obj: dict) -> Sequence:
    if not isinstance(obj, dict):
        raise ValueError("sequence JSON must be an object")
    kind = obj.get("kind")
    if kind not in (FINITE, TRUNCATED):
        raise ValueError(f"field 'kind': expected 'finite' or 'truncated', got {kind!r}")
    raw = obj.get("terms")
    if not isinstance(raw, list):
        raise ValueError("field 'terms': expected a list of rational strings")
    terms = []
    for i, t in enumerate(raw):
        if isinstance(t, float):
            raise ValueError(f"field 'terms[{i}]': floats are not accepted, use 'p/q'")
        try:
            terms.append(rational(t))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"field 'terms[{i}]': {exc}") from None
    opt = {}
    for attr in ("tail_bound", "tail_sum_bound", "total"):
        if obj.get(attr) is not None:
            try:
                opt[attr] = rational(obj[attr])
            except (TypeError, ValueError) as exc:
                raise ValueError(f"field '{attr}': {exc}") from None
    name = obj.get("name", "")
    if kind == FINITE:
        return Sequence.finite(terms, name=name)
    return Sequence.truncated(terms, monotone=obj.get("monotone"),
                              infinite_support=obj.get("infinite_support", True), name=name, **opt)


def as_sequence(x: Union[Sequence, Seq[RationalLike]]) -> Sequence:
    return x if isinstance(x, Sequence) else Sequence.finite(x)
