"""Analyticity domains, explicit cumulant bounds and Borel-Laplace resummation."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from scipy.special import roots_laguerre

from lvelab.errors import DomainError, ResummationError

EPS_CAP = 1e6


@dataclass(frozen=True)
class ComplexCoupling:
    """``lambda = rho * exp(i theta)`` with ``-pi < theta < pi``."""

    rho: float
    theta: float = 0.0

    def __post_init__(self):
        if not self.rho >= 0:
            raise DomainError("rho must be non-negative")
        if not -math.pi < self.theta < math.pi:
            raise DomainError("theta must lie strictly inside (-pi, pi)")

    @classmethod
    def of(cls, lam) -> "ComplexCoupling":
        if isinstance(lam, ComplexCoupling):
            return lam
        z = complex(lam)
        if z.imag == 0 and z.real < 0:
            raise DomainError("negative real coupling lies on the cut")
        return cls(abs(z), cmath.phase(z) if z != 0 else 0.0)

    @property
    def value(self) -> complex:
        return cmath.rect(self.rho, self.theta)

    @property
    def half_cos(self) -> float:
        return math.cos(self.theta / 2)


def _coupling_or_none(lam):
    try:
        return ComplexCoupling.of(lam)
    except DomainError:
        return None


def in_domain(lam, which: str = "C", R: float | None = None) -> bool:
    """Membership in the cardioids ``C``, ``C_tilde``, the curve ``C_prime`` or the disc ``D_R``.

    Points on the negative real axis are never inside.
    """
    c = _coupling_or_none(lam)
    if c is None:
        return False
    rho, th = c.rho, c.theta
    cos2 = c.half_cos ** 2
    if which == "C":
        return 4 * rho < cos2
    if which in ("C_tilde", "Ct"):
        return 12 * rho < cos2
    if which in ("C_prime", "Cp"):
        if abs(th) <= math.pi / 2:
            return 4 * rho < 1
        return 4 * rho < math.cos(abs(th) / 2 - math.pi / 4) ** 2
    if which in ("D_R", "D"):
        if R is None or R <= 0:
            raise DomainError("D_R needs a positive radius R")
        if rho == 0:
            return False
        return (1 / c.value).real > 1 / R
    raise DomainError(f"unknown domain {which!r}")


def source_norm_threshold(lam, cap: float = EPS_CAP) -> float:
    """Largest ``eps`` with ``(4|lam|/cos^2)(1 + 2 eps/cos) < 1``, capped at ``cap``."""
    c = ComplexCoupling.of(lam)
    if c.rho == 0:
        return cap
    cs = c.half_cos
    x = 4 * c.rho / cs ** 2
    if x > 1:
        raise DomainError("coupling outside the cardioid")
    return min(cap, cs / 2 * (1 / x - 1))


def tree_bound(E: int, k: int, p: int, lam, N: float) -> float:
    """``N^{2-p} |lam|^E (k!)^2 2^{2k} / (cos^{2E+k}(theta/2) (E+1)!)``."""
    c = ComplexCoupling.of(lam)
    cs = c.half_cos
    return (N ** (2 - p) * c.rho ** E * math.factorial(k) ** 2 * 4 ** k
            / (cs ** (2 * E + k) * math.factorial(E + 1)))


def perturbative_remainder_bound(n: int, k: int, p: int, lam, N: float) -> float:
    """Bound on ``|K_pi - sum_{m<=n} (-lam)^m a_{pi,m}|`` inside the cardioid."""
    c = ComplexCoupling.of(lam)
    cs = c.half_cos
    x = 4 * c.rho / cs ** 2
    if x >= 1:
        raise DomainError("x = 4|lam|/cos^2(theta/2) must be < 1")
    pref = N ** (2 - p) * 2 ** (3 * k - 1) * math.factorial(k) / cs ** k
    return pref * math.factorial(n + 1) * x ** (n + 1) * (x / (1 - x) ** (n + 2) + 2 ** (k + n + 2))


def topological_remainder_bound(g: int, k: int, p: int, lam, N: float, Cg: float = 1.0) -> float:
    """Bound on the remainder of the genus expansion beyond genus ``g``.

    ``Cg`` is a genus-dependent constant that is only known to exist, so the
    value is a shape check rather than a certified number.
    """
    c = ComplexCoupling.of(lam)
    cs = c.half_cos
    y = 12 * c.rho / cs ** 2
    if y >= 1:
        raise DomainError("y = 12|lam|/cos^2(theta/2) must be < 1")
    pref = N ** (2 - 2 * (g + 1) - p) * 2 ** (3 * k) * math.factorial(k) / cs ** k
    return pref * Cg * y ** (2 * g + 2) * math.factorial(4 * g + k + 1) / (1 - y) ** (4 * g + k)


def sample_hermitian(N: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Hermitian Gaussian matrices with ``<A_ab A_cd> = delta_ad delta_bc``."""
    shape = (N, N) if size is None else (size, N, N)
    x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return (x + np.swapaxes(x, -1, -2).conj()) / 2


def resolvent_norm_check(lam, N: int, samples: int = 1000, seed: int = 0) -> float:
    """Largest observed operator norm of ``(1 - i sqrt(lam/N) A)^{-1}``."""
    c = ComplexCoupling.of(lam)
    rng = np.random.default_rng(seed)
    scale = cmath.sqrt(c.value / N)
    eye = np.eye(N)
    worst = 0.0
    for a in sample_hermitian(N, rng, samples):
        r = np.linalg.inv(eye - 1j * scale * a)
        worst = max(worst, float(np.linalg.norm(r, 2)))
    return worst


def bound_report(lam, N: float, k: int = 1, p: int = 1, n: int = 3, g: int = 0, Cg: float = 1.0) -> dict:
    """Domain flags and bound values for one coupling."""
    z = complex(ComplexCoupling.of(lam).value)
    out = {"inputs": {"lambda": [z.real, z.imag], "N": N, "k": k, "p": p, "n": n, "g": g, "Cg": Cg},
           "in_C": in_domain(lam, "C"), "in_C_tilde": in_domain(lam, "C_tilde"),
           "in_C_prime": in_domain(lam, "C_prime")}
    out["tree_bound_E1"] = tree_bound(1, k, p, lam, N)
    out["eps_lambda"] = source_norm_threshold(lam) if out["in_C"] else None
    out["perturbative_remainder_bound"] = perturbative_remainder_bound(n, k, p, lam, N) if out["in_C"] else None
    out["topological_remainder_bound"] = (topological_remainder_bound(g, k, p, lam, N, Cg)
                                          if out["in_C_tilde"] else None)
    return out


# ---------------------------------------------------------------------------
# Borel-Laplace

@dataclass(frozen=True)
class BorelConfig:
    pade_numerator_degree: int | None = None
    pade_denominator_degree: int | None = None
    nodes: int = 64
    R: float | None = None
    sigma: float | None = None
    dps: int = 60

    def __post_init__(self):
        for d in (self.pade_numerator_degree, self.pade_denominator_degree):
            if d is not None and d < 0:
                raise DomainError("Pade degrees must be non-negative")
        if self.nodes < 16:
            raise DomainError("at least 16 quadrature nodes are needed")


def _solve_exact(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Solve ``a x = b`` exactly; ``None`` when singular.

    Rows are scaled to integers and reduced by fraction-free (Bareiss)
    elimination, which keeps intermediate sizes polynomial.
    """
    n = len(b)
    rows = []
    for row, rhs in zip(a, b):
        den = 1
        for x in row + [rhs]:
            den = den * x.denominator // math.gcd(den, x.denominator)
        rows.append([int(x * den) for x in row + [rhs]])
    prev = 1
    for col in range(n):
        piv = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if piv is None:
            return None
        rows[col], rows[piv] = rows[piv], rows[col]
        pc = rows[col]
        for r in range(col + 1, n):
            rr = rows[r]
            f = rr[col]
            rows[r] = [(pc[col] * rr[j] - f * pc[j]) // prev if j >= col else 0 for j in range(n + 1)]
        prev = pc[col]
    x = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        acc = Fraction(rows[r][n]) - sum((rows[r][j] * x[j] for j in range(r + 1, n)), Fraction(0))
        x[r] = acc / rows[r][r]
    return x


def pade(b: Sequence[Fraction], L: int, M: int) -> tuple[list[Fraction], list[Fraction]]:
    """Exact ``[L/M]`` Pade approximant ``P/Q`` of ``sum b_n s^n`` with ``Q(0) = 1``.

    When the Toeplitz system is singular the denominator degree is lowered and
    the numerator degree raised, keeping ``L + M`` fixed.
    """
    b = [Fraction(x) for x in b]
    if len(b) < L + M + 1:
        raise DomainError(f"[{L}/{M}] Pade needs {L + M + 1} coefficients, got {len(b)}")

    def coef(i):
        return b[i] if i >= 0 else Fraction(0)

    while M >= 0:
        if M == 0:
            q = [Fraction(1)]
        else:
            rows = [[coef(L + i - j) for j in range(1, M + 1)] for i in range(1, M + 1)]
            rhs = [-coef(L + i) for i in range(1, M + 1)]
            sol = _solve_exact(rows, rhs)
            if sol is None:
                L, M = L + 1, M - 1
                continue
            q = [Fraction(1)] + sol
        p = [sum((q[j] * coef(i - j) for j in range(min(i, M) + 1)), Fraction(0)) for i in range(L + 1)]
        return p, q
    raise ResummationError("no Pade approximant found")


def _sign_changes_on(q: Sequence[Fraction], smax: float, points: int = 4000, dps: int = 60) -> int:
    """Sign changes of ``Q`` on a uniform grid of ``(0, smax]``.

    An exact Sturm count is too slow for the degree-50 denominators used in
    practice, so the denominator is scanned in high precision instead.
    """
    with mpmath.workdps(dps):
        qm = [mpmath.mpf(c.numerator) / c.denominator for c in q][::-1]
        prev = mpmath.sign(mpmath.polyval(qm, 0))
        changes = 0
        for i in range(1, points + 1):
            cur = mpmath.sign(mpmath.polyval(qm, mpmath.mpf(smax) * i / points))
            if cur == 0 or cur != prev:
                changes += 1
            prev = cur if cur != 0 else prev
        return changes


def borel_sum(coeffs: Sequence, lam: float, cfg: BorelConfig | None = None) -> float:
    """Borel-Laplace sum of ``sum a_n lam^n``.

    ``F(lam) = (1/lam) int_0^inf B(s) exp(-s/lam) ds`` with ``B(s) = sum a_n s^n / n!``
    replaced by a Pade approximant, integrated by Gauss-Laguerre quadrature.
    Unless the degrees are fixed in ``cfg``, the diagonal approximant is
    tried first and the nearest pole-free off-diagonal one is used instead.
    """
    cfg = cfg or BorelConfig()
    if not lam > 0:
        raise DomainError("borel_sum needs a real lambda > 0")
    if cfg.R is not None and not in_domain(lam, "D_R", R=cfg.R):
        raise DomainError("lambda outside the Borel disc D_R")
    a = [Fraction(x) for x in coeffs]
    if not a:
        raise DomainError("no coefficients")
    b = [x / math.factorial(n) for n, x in enumerate(a)]
    x, w = roots_laguerre(cfg.nodes)
    smax = lam * float(x[-1]) * 1.05
    fixed = cfg.pade_numerator_degree is not None or cfg.pade_denominator_degree is not None
    m_default = (len(b) - 1) // 2
    L = cfg.pade_numerator_degree if cfg.pade_numerator_degree is not None else m_default
    M = cfg.pade_denominator_degree if cfg.pade_denominator_degree is not None else m_default
    if fixed:
        candidates = [(L, M)]
    else:
        # diagonal first, then off-diagonal neighbours with the same total degree
        candidates = [(L, M)]
        for d in range(1, M + 1):
            candidates += [(L + d, M - d), (L - d, M + d)]
        candidates = [(l, m) for l, m in candidates if l >= 0 and m >= 0]
    for L, M in candidates:
        p, q = pade(b, L, M)
        if not _sign_changes_on(q, smax, dps=cfg.dps):
            break
    else:
        raise ResummationError("Pade denominator vanishes inside the quadrature range")
    with mpmath.workdps(cfg.dps):
        pm = [mpmath.mpf(c.numerator) / c.denominator for c in p]
        qm = [mpmath.mpf(c.numerator) / c.denominator for c in q]
        total = mpmath.mpf(0)
        for xi, wi in zip(x, w):
            s = mpmath.mpf(lam) * mpmath.mpf(float(xi))
            total += mpmath.mpf(float(wi)) * mpmath.polyval(pm[::-1], s) / mpmath.polyval(qm[::-1], s)
        return float(total)
