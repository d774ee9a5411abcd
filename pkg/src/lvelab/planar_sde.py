"""Planar Schwinger-Dyson recursion for the two-point generating function."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

from lvelab.errors import CapacityError, DomainError

N_MAX_SDE = 30
LAMBDA_CRIT = Fraction(1, 12)


@dataclass(frozen=True)
class QPolynomial:
    """Integer polynomial in ``q``; ``coeffs[i]`` multiplies ``q**i``."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        c = list(self.coeffs)
        while c and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(int(x) for x in c))

    @classmethod
    def from_dict(cls, d: dict[int, int]) -> "QPolynomial":
        if not d:
            return cls(())
        out = [0] * (max(d) + 1)
        for e, c in d.items():
            out[e] += c
        return cls(tuple(out))

    def __add__(self, other: "QPolynomial") -> "QPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (n - len(self.coeffs))
        b = other.coeffs + (0,) * (n - len(other.coeffs))
        return QPolynomial(tuple(x + y for x, y in zip(a, b)))

    def __mul__(self, other: "QPolynomial") -> "QPolynomial":
        if not self.coeffs or not other.coeffs:
            return QPolynomial(())
        out = [0] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(other.coeffs):
                    out[i + j] += x * y
        return QPolynomial(tuple(out))

    def shift(self, k: int) -> "QPolynomial":
        """Multiply by ``q**k``."""
        return QPolynomial((0,) * k + self.coeffs) if self.coeffs else self

    def __call__(self, q):
        total = 0
        for c in reversed(self.coeffs):
            total = total * q + c
        return total

    def divided_difference(self) -> "QPolynomial":
        """``(P(q) - P(1)) / (q - 1)`` by synthetic division; the remainder must vanish."""
        p = list(self.coeffs)
        if len(p) <= 1:
            return QPolynomial(())
        p[0] -= sum(p)
        # divide by (q - 1)
        quot = [0] * (len(p) - 1)
        carry = 0
        for i in range(len(p) - 1, 0, -1):
            carry += p[i]
            quot[i - 1] = carry
        if carry + p[0] != 0:
            raise ArithmeticError("non-zero remainder in divided difference")
        return QPolynomial(tuple(quot))

    def __str__(self):
        terms = [f"{c}*q^{i}" for i, c in enumerate(self.coeffs) if c]
        return " + ".join(terms) or "0"


def q_integer(n: int) -> QPolynomial:
    """``[n]_q = 1 + q + ... + q^{n-1}``."""
    return QPolynomial((1,) * n)


def sde_series(n_max: int) -> list[QPolynomial]:
    """``G_0..G_{n_max}`` solving ``G = q + lam q G^2 + lam q^2 (G(q) - G(1))/(q - 1)``."""
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    if n_max > N_MAX_SDE:
        raise CapacityError(f"n_max={n_max} exceeds {N_MAX_SDE}")
    g = [QPolynomial((0, 1))]
    for n in range(1, n_max + 1):
        sq = QPolynomial(())
        for i in range(n):
            sq = sq + g[i] * g[n - 1 - i]
        g.append(sq.shift(1) + g[n - 1].divided_difference().shift(2))
    return g


def planar_count(n: int) -> int:
    """``2 * 3^n * Catalan(n) / (n + 2)``."""
    if n < 0:
        raise DomainError("n must be non-negative")
    num = 2 * 3 ** n * math.comb(2 * n, n)
    den = (n + 1) * (n + 2)
    q, r = divmod(num, den)
    assert r == 0
    return q


def planar_closed_form(lam: float) -> float:
    """``G(1, lam) = (-1 + 18 lam + (1 - 12 lam)^{3/2}) / (54 lam^2)``, limit 1 at 0."""
    if lam > float(LAMBDA_CRIT):
        raise DomainError("lambda beyond 1/12 lies on the branch cut")
    if abs(lam) < 1e-4:
        # cancellation-free series for small lam
        return float(sum(planar_count(n) * lam ** n for n in range(12)))
    return (-1.0 + 18.0 * lam + (1.0 - 12.0 * lam) ** 1.5) / (54.0 * lam * lam)


def closed_form_taylor(n_max: int) -> list[Fraction]:
    """Exact Taylor coefficients of the closed form.

    ``(1 - 12 lam)^{3/2} = sum_m binom(3/2, m) (-12 lam)^m``; after adding
    ``-1 + 18 lam`` the orders 0 and 1 cancel and the rest is divided by ``54 lam^2``.
    """
    out = []
    for n in range(n_max + 1):
        m = n + 2
        binom = Fraction(1)
        for i in range(m):
            binom *= Fraction(3, 2) - i
            binom /= i + 1
        out.append(binom * (-12) ** m / 54)
    return out


def to_csv(series: list[QPolynomial]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    width = max(len(g.coeffs) for g in series)
    w.writerow(["n", "planar_count"] + [f"q{i}" for i in range(width)])
    for n, g in enumerate(series):
        w.writerow([n, planar_count(n)] + list(g.coeffs) + [0] * (width - len(g.coeffs)))
    return buf.getvalue()
