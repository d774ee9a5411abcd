"""Permutations, integer partitions and exact Weingarten calculus.

Weingarten functions are obtained by inverting the class-reduced Gram matrix
``G[rho, tau] = N ** #cycles(tau rho^-1)`` over the field of rational
functions in the formal matrix size ``N``.  Everything here is exact.

Permutations act on ``{1..k}`` in the public API and compose right to left:
``(s * t)(i) = s(t(i))``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable, Iterator, Mapping, Sequence

from lvelab.errors import CapacityError, DomainError

K_MAX_DEFAULT = 6


# ---------------------------------------------------------------------------
# permutations and partitions

@dataclass(frozen=True)
class Permutation:
    """Bijection of ``{1..k}`` stored by its images ``(p(1), ..., p(k))``."""

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(x) for x in self.images)
        if sorted(images) != list(range(1, len(images) + 1)):
            raise DomainError(f"not a permutation of 1..{len(images)}: {images}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, k: int) -> "Permutation":
        return cls(tuple(range(1, k + 1)))

    @classmethod
    def from_zero_based(cls, images: Sequence[int]) -> "Permutation":
        return cls(tuple(i + 1 for i in images))

    @classmethod
    def from_cycles(cls, k: int, cycles: Iterable[Sequence[int]]) -> "Permutation":
        images = list(range(1, k + 1))
        for cyc in cycles:
            for a, b in zip(cyc, tuple(cyc[1:]) + (cyc[0],)):
                images[a - 1] = b
        return cls(tuple(images))

    @property
    def k(self) -> int:
        return len(self.images)

    def zero_based(self) -> tuple[int, ...]:
        return tuple(i - 1 for i in self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        if self.k != other.k:
            raise DomainError("cannot compose permutations of different sizes")
        return Permutation(tuple(self.images[j - 1] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.k
        for i, j in enumerate(self.images, start=1):
            inv[j - 1] = i
        return Permutation(tuple(inv))

    def cycles(self) -> list[tuple[int, ...]]:
        return [tuple(c + 1 for c in cyc) for cyc in _cycles(self.zero_based())]


@dataclass(frozen=True)
class IntegerPartition:
    """Non-decreasing tuple of positive parts."""

    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(x) for x in self.parts)
        if any(p <= 0 for p in parts):
            raise DomainError(f"partition parts must be positive: {parts}")
        if list(parts) != sorted(parts):
            raise DomainError(f"partition parts must be non-decreasing: {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def of(cls, parts: Iterable[int]) -> "IntegerPartition":
        """Build a partition from parts in any order."""
        return cls(tuple(sorted(parts)))

    @property
    def k(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self) -> Iterator[int]:
        return iter(self.parts)

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.parts)) + ")"


def as_partition(ct) -> IntegerPartition:
    if isinstance(ct, IntegerPartition):
        return ct
    if isinstance(ct, int):
        return IntegerPartition((ct,))
    return IntegerPartition.of(ct)


def partitions(k: int) -> list[IntegerPartition]:
    """All partitions of ``k`` in a fixed deterministic order."""
    return [IntegerPartition(p) for p in _partitions(k)]


@lru_cache(maxsize=None)
def _partitions(k: int) -> tuple[tuple[int, ...], ...]:
    out = []

    def rec(rest, smallest, acc):
        if rest == 0:
            out.append(tuple(acc))
            return
        for part in range(smallest, rest + 1):
            rec(rest - part, part, acc + [part])

    rec(k, 1, [])
    return tuple(out)


def _cycles(p: Sequence[int]) -> list[tuple[int, ...]]:
    seen = [False] * len(p)
    out = []
    for start in range(len(p)):
        if seen[start]:
            continue
        cyc = []
        i = start
        while not seen[i]:
            seen[i] = True
            cyc.append(i)
            i = p[i]
        out.append(tuple(cyc))
    return out


def _ncycles(p: Sequence[int]) -> int:
    seen = [False] * len(p)
    count = 0
    for start in range(len(p)):
        if not seen[start]:
            count += 1
            i = start
            while not seen[i]:
                seen[i] = True
                i = p[i]
    return count


def _cycle_type(p: Sequence[int]) -> tuple[int, ...]:
    return tuple(sorted(len(c) for c in _cycles(p)))


def _compose(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    return tuple(p[j] for j in q)


def _inverse(p: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(p)
    for i, j in enumerate(p):
        inv[j] = i
    return tuple(inv)


def cycle_type(p: Permutation) -> IntegerPartition:
    """Sorted cycle lengths of ``p``."""
    return IntegerPartition(_cycle_type(p.zero_based()))


def cycle_count(p: Permutation) -> int:
    """Number of cycles ``|C(p)|``."""
    return _ncycles(p.zero_based())


def canonical_permutation(pi: IntegerPartition) -> Permutation:
    """Permutation with consecutive cycles ``(1..k1)(k1+1..k1+k2)...``."""
    pi = as_partition(pi)
    images = []
    start = 0
    for part in pi.parts:
        images.extend(start + (j + 1) % part for j in range(part))
        start += part
    return Permutation.from_zero_based(images)


# ---------------------------------------------------------------------------
# polynomials over Q, ascending coefficient lists without trailing zeros

def _trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def _padd(a, b):
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)
                  for i in range(n)])


def _pneg(a):
    return [-x for x in a]


def _pmul(a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _pdivmod(a, b):
    a = [Fraction(x) for x in a]
    b = _trim(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    lead = Fraction(b[-1])
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    r = a[:]
    while len(_trim(r)) >= len(b):
        r = _trim(r)
        shift = len(r) - len(b)
        c = r[-1] / lead
        q[shift] = c
        for i, y in enumerate(b):
            r[i + shift] -= c * y
        r = _trim(r)
        if not r:
            break
    return _trim(q), _trim(r)


def _pgcd(a, b):
    a, b = _trim(a), _trim(b)
    while b:
        _, r = _pdivmod(a, b)
        a, b = b, r
    if not a:
        return [Fraction(1)]
    lead = Fraction(a[-1])
    return [Fraction(x) / lead for x in a]


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


class RationalFunctionN:
    """Exact ratio of integer polynomials in the formal symbol ``N``.

    Stored reduced: numerator and denominator are coprime over Q, all
    coefficients are integers with no common factor and the leading
    denominator coefficient is positive.  Coefficients are ascending in ``N``.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Sequence = (), den: Sequence = (1,)):
        num = _trim(Fraction(x) for x in num)
        den = _trim(Fraction(x) for x in den)
        if not den:
            raise DomainError("denominator is identically zero")
        if not num:
            self.num, self.den = (), (1,)
            return
        g = _pgcd(num, den)
        if len(g) > 1:
            num, r1 = _pdivmod(num, g)
            den, r2 = _pdivmod(den, g)
            assert not r1 and not r2
        scale = 1
        for c in itertools.chain(num, den):
            scale = _lcm(scale, c.denominator)
        inum = [int(c * scale) for c in num]
        iden = [int(c * scale) for c in den]
        content = 0
        for c in itertools.chain(inum, iden):
            content = gcd(content, c)
        if iden[-1] < 0:
            content = -content
        self.num = tuple(c // content for c in inum)
        self.den = tuple(c // content for c in iden)

    # constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c) -> "RationalFunctionN":
        c = Fraction(c)
        return cls((c.numerator,), (c.denominator,))

    @classmethod
    def monomial(cls, power: int, coeff=1) -> "RationalFunctionN":
        coeff = Fraction(coeff)
        if power >= 0:
            return cls([0] * power + [coeff])
        return cls((coeff,), [0] * (-power) + [1])

    @classmethod
    def from_json(cls, obj: Mapping) -> "RationalFunctionN":
        return cls(obj["num"], obj["den"])

    def to_json(self) -> dict:
        return {"num": list(self.num), "den": list(self.den)}

    # arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, RationalFunctionN):
            return other
        if isinstance(other, (int, Fraction)):
            return RationalFunctionN.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RationalFunctionN(
            _padd(_pmul(self.num, other.den), _pmul(other.num, self.den)),
            _pmul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return RationalFunctionN(_pneg(self.num), self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return RationalFunctionN(_pmul(self.num, other.num), _pmul(self.den, other.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunctionN(_pmul(self.num, other.den), _pmul(self.den, other.num))

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n: int):
        out = RationalFunctionN.constant(1)
        base = self if n >= 0 else RationalFunctionN.constant(1) / self
        for _ in range(abs(n)):
            out = out * base
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        return hash((self.num, self.den))

    def is_zero(self) -> bool:
        return not self.num

    # evaluation -------------------------------------------------------
    def __call__(self, N):
        """Evaluate at ``N``; exact for ``int``/``Fraction`` input."""
        if isinstance(N, (int, Fraction)):
            den = sum(Fraction(c) * Fraction(N) ** i for i, c in enumerate(self.den))
            if den == 0:
                raise DomainError(f"pole at N={N}")
            num = sum(Fraction(c) * Fraction(N) ** i for i, c in enumerate(self.num))
            return num / den
        num = sum(c * N ** i for i, c in enumerate(self.num))
        den = sum(c * N ** i for i, c in enumerate(self.den))
        return num / den

    def __repr__(self):
        return f"RationalFunctionN({_fmt(self.num)} / {_fmt(self.den)})"

    __str__ = __repr__


def _fmt(p):
    if not p:
        return "0"
    terms = []
    for i, c in enumerate(p):
        if c:
            terms.append(f"{c}" if i == 0 else f"{c}*N^{i}")
    return "(" + " + ".join(terms) + ")"


# ---------------------------------------------------------------------------
# Weingarten functions

def _check_capacity(k: int, k_max: int):
    if k < 1:
        raise DomainError("k must be positive")
    if k > k_max:
        raise CapacityError(f"k={k} exceeds k_max={k_max}")


@lru_cache(maxsize=None)
def _all_perms(k: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.permutations(range(k)))


@lru_cache(maxsize=None)
def class_matrix(k: int) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """Class-reduced Gram matrix as integer polynomials in ``N``.

    Entry ``[i][j]`` is ``sum over tau in class j of N**#cycles(tau rho_i^-1)``
    where ``rho_i`` represents class ``i`` (classes ordered as
    :func:`partitions`).
    """
    classes = _partitions(k)
    index = {c: i for i, c in enumerate(classes)}
    rows = []
    for c in classes:
        rho_inv = _inverse(canonical_permutation(IntegerPartition(c)).zero_based())
        row = [[0] * (k + 1) for _ in classes]
        for tau in _all_perms(k):
            row[index[_cycle_type(tau)]][_ncycles(_compose(tau, rho_inv))] += 1
        rows.append(tuple(tuple(_trim(p)) for p in row))
    return tuple(rows)


@lru_cache(maxsize=None)
def _weingarten_table(k: int) -> dict[tuple[int, ...], RationalFunctionN]:
    classes = _partitions(k)
    n = len(classes)
    gram = class_matrix(k)
    a = [[RationalFunctionN(gram[i][j]) for j in range(n)] for i in range(n)]
    identity_class = tuple([1] * k)
    b = [RationalFunctionN.constant(1 if c == identity_class else 0) for c in classes]
    # Gauss-Jordan elimination over Q(N)
    for col in range(n):
        piv = next(r for r in range(col, n) if not a[r][col].is_zero())
        a[col], a[piv] = a[piv], a[col]
        b[col], b[piv] = b[piv], b[col]
        inv = RationalFunctionN.constant(1) / a[col][col]
        a[col] = [x * inv for x in a[col]]
        b[col] = b[col] * inv
        for r in range(n):
            if r != col and not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                b[r] = b[r] - f * b[col]
    return dict(zip(classes, b))


def weingarten(ct, k_max: int = K_MAX_DEFAULT) -> RationalFunctionN:
    """Exact ``Wg(sigma, N)`` for a permutation of cycle type ``ct``.

    ``ct`` may be an :class:`IntegerPartition`, a :class:`Permutation` or a
    plain sequence of parts.
    """
    if isinstance(ct, Permutation):
        ct = cycle_type(ct)
    ct = as_partition(ct)
    _check_capacity(ct.k, k_max)
    return _weingarten_table(ct.k)[ct.parts]


def weingarten_bound(ct, N: int) -> Fraction:
    """``2^{2k} / N^{2k - |C(sigma)|}``, valid for ``N`` large enough."""
    if isinstance(ct, Permutation):
        ct = cycle_type(ct)
    ct = as_partition(ct)
    return Fraction(2 ** (2 * ct.k), N ** (2 * ct.k - len(ct)))


def haar_moment(k: int, row_pairs, col_pairs, k_max: int = K_MAX_DEFAULT) -> RationalFunctionN:
    """``int dU U_{a1 b1}..U_{ak bk} U*_{c1 d1}..U*_{cl dl}`` over Haar U(N).

    Parameters
    ----------
    k : number of ``U`` factors.
    row_pairs : ``(a, c)``, row indices of the ``U`` and ``U*`` factors.
    col_pairs : ``(b, d)``, column indices of the ``U`` and ``U*`` factors.

    The integral vanishes when the numbers of ``U`` and ``U*`` differ.
    """
    a, c = (tuple(x) for x in row_pairs)
    b, d = (tuple(x) for x in col_pairs)
    if len(a) != k or len(b) != k:
        raise DomainError("row/column index lists of the U factors must have length k")
    if len(c) != len(d):
        raise DomainError("row/column index lists of the U* factors differ in length")
    if len(c) != k:
        return RationalFunctionN()
    _check_capacity(k, k_max)
    perms = _all_perms(k)
    tau_ok = [t for t in perms if all(a[t[i]] == c[i] for i in range(k))]
    sigma_ok = [s for s in perms if all(b[s[i]] == d[i] for i in range(k))]
    counts: dict[tuple[int, ...], int] = {}
    for t in tau_ok:
        for s in sigma_ok:
            ct = _cycle_type(_compose(t, _inverse(s)))
            counts[ct] = counts.get(ct, 0) + 1
    table = _weingarten_table(k)
    total = RationalFunctionN()
    for ct, m in counts.items():
        total = total + table[ct] * m
    return total


def trace_invariant_coeffs(k: int, coeff_tensor: Mapping, N: int | None = None,
                           k_max: int = K_MAX_DEFAULT) -> dict[IntegerPartition, RationalFunctionN]:
    """Coefficients ``P_pi`` of a unitary invariant polynomial in trace invariants.

    ``coeff_tensor`` describes ``P(H) = sum A[p1,q1,...,pk,qk] H_{p1 q1}...H_{pk qk}``
    in one of two forms:

    * symbolic: keys are :class:`Permutation` objects ``rho`` and
      ``A = sum_rho c_rho prod_i delta(q_i, p_rho(i))``; the result is exact
      in ``N``;
    * explicit: keys are ``2k``-tuples of indices; ``N`` (the index range)
      must then be given and the result is evaluated at that ``N``.
    """
    _check_capacity(k, k_max)
    perms = _all_perms(k)
    table = _weingarten_table(k)
    items = list(coeff_tensor.items())
    symbolic = all(isinstance(key, Permutation) for key, _ in items)
    # S[tau] = sum_p A[p1, p_tau(1), ..., pk, p_tau(k)]
    if symbolic:
        S = {}
        for tau in perms:
            acc = RationalFunctionN()
            for rho, coeff in items:
                if rho.k != k:
                    raise DomainError("permutation size differs from k")
                r = rho.zero_based()
                acc = acc + RationalFunctionN.monomial(_ncycles(_compose(tau, _inverse(r))),
                                                       Fraction(coeff))
            S[tau] = acc
    else:
        if N is None:
            raise DomainError("explicit tensors need the index range N")
        S = {}
        for tau in perms:
            acc = Fraction(0)
            for key, coeff in items:
                if len(key) != 2 * k:
                    raise DomainError("tensor keys must have 2k indices")
                p, q = key[0::2], key[1::2]
                if all(q[i] == p[tau[i]] for i in range(k)):
                    acc += Fraction(coeff)
            S[tau] = RationalFunctionN.constant(acc)
    out = {}
    for pi in partitions(k):
        total = RationalFunctionN()
        for sigma in perms:
            if _cycle_type(sigma) != pi.parts:
                continue
            s_inv = _inverse(sigma)
            for tau in perms:
                if S[tau].is_zero():
                    continue
                total = total + S[tau] * table[_cycle_type(_compose(tau, s_inv))]
        if N is not None and not symbolic:
            total = RationalFunctionN.constant(total(N))
        out[pi] = total
    return out
