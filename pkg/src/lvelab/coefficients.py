"""Perturbative coefficients of the scalar cumulants.

``K_pi(lambda, N) = sum_n (-lambda)^n a_{pi,n}(N)`` where ``a_{pi,n}`` sums
``N^{chi}/|Aut|`` over connected ciliated maps with ``n`` edges whose broken
faces carry the cilium counts ``pi``.  ``K_pi`` is the coefficient of
``Tr_pi(JJ^dagger)`` in ``log Z``.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import sympy

from lvelab.errors import CapacityError, DomainError
from lvelab.perm_algebra import IntegerPartition, Permutation, as_partition, canonical_permutation
from lvelab.ribbon_maps import enumerate_maps, euler_characteristic

K_MAX = 3
N_MAX = 6
WICK_K_MAX = 2
WICK_N_MAX = 3


class LaurentPolyN:
    """Finite Laurent polynomial in ``N`` with exact rational coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Mapping[int, object] | None = None):
        clean = {}
        for e, c in (coeffs or {}).items():
            c = Fraction(c)
            if c:
                clean[int(e)] = c
        self.coeffs = dict(sorted(clean.items(), reverse=True))

    @classmethod
    def monomial(cls, e: int, c=1) -> "LaurentPolyN":
        return cls({e: c})

    def __add__(self, other):
        if not isinstance(other, LaurentPolyN):
            other = LaurentPolyN({0: other})
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out.get(e, 0) + c
        return LaurentPolyN(out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPolyN({e: -c for e, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if not isinstance(other, LaurentPolyN):
            return LaurentPolyN({e: c * Fraction(other) for e, c in self.coeffs.items()})
        out = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
        return LaurentPolyN(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, LaurentPolyN):
            other = LaurentPolyN({0: other})
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    def coefficient(self, e: int) -> Fraction:
        return self.coeffs.get(e, Fraction(0))

    @property
    def max_exponent(self) -> int | None:
        return max(self.coeffs) if self.coeffs else None

    def is_zero(self) -> bool:
        return not self.coeffs

    def __call__(self, N):
        if isinstance(N, (int, Fraction)):
            return sum((c * Fraction(N) ** e for e, c in self.coeffs.items()), Fraction(0))
        return sum(float(c) * N ** e for e, c in self.coeffs.items())

    def to_json(self) -> dict:
        return {str(e): str(c) for e, c in self.coeffs.items()}

    @classmethod
    def from_json(cls, obj: Mapping) -> "LaurentPolyN":
        return cls({int(e): Fraction(c) for e, c in obj.items()})

    @classmethod
    def from_sympy(cls, expr, N: sympy.Symbol) -> "LaurentPolyN":
        out = {}
        for term in sympy.Add.make_args(sympy.expand(expr)):
            if term == 0:
                continue
            coeff, rest = term.as_coeff_Mul()
            e = rest.as_powers_dict().get(N, 0) if rest != 1 else 0
            if rest != 1 and sympy.simplify(rest - N ** e) != 0:
                raise DomainError(f"not a Laurent monomial in N: {term}")
            coeff = sympy.Rational(coeff)
            out[int(e)] = out.get(int(e), 0) + Fraction(int(coeff.p), int(coeff.q))
        return cls(out)

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for e, c in self.coeffs.items():
            mon = "" if e == 0 else ("N" if e == 1 else f"N^{e}")
            if not mon:
                parts.append(str(c))
            elif c == 1:
                parts.append(mon)
            else:
                parts.append(f"{c}*{mon}")
        return " + ".join(parts)


class CoefficientTable:
    """``a_{pi,n}(N)`` for ``n = 0..n_max``."""

    def __init__(self, partition, orders: Sequence[LaurentPolyN]):
        self.partition = as_partition(partition)
        self.orders = list(orders)
        self._check()

    def _check(self):
        top = 2 - len(self.partition)
        for n, poly in enumerate(self.orders):
            for e in poly.coeffs:
                if e > top or (top - e) % 2:
                    raise DomainError(f"order {n}: exponent {e} violates the genus stratification")

    @property
    def n_max(self) -> int:
        return len(self.orders) - 1

    def __getitem__(self, n: int) -> LaurentPolyN:
        return self.orders[n]

    def to_json(self) -> dict:
        return {"partition": list(self.partition.parts),
                "orders": [{"n": n, "laurent": p.to_json()} for n, p in enumerate(self.orders)]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "CoefficientTable":
        orders = sorted(obj["orders"], key=lambda o: o["n"])
        return cls(IntegerPartition.of(obj["partition"]), [LaurentPolyN.from_json(o["laurent"]) for o in orders])

    def __eq__(self, other):
        return isinstance(other, CoefficientTable) and self.partition == other.partition and self.orders == other.orders


def _check_capacity(pi: IntegerPartition, n_max: int):
    if pi.k > K_MAX:
        raise CapacityError(f"k={pi.k} exceeds the coefficient limit {K_MAX}")
    if n_max > N_MAX:
        raise CapacityError(f"n_max={n_max} exceeds the coefficient limit {N_MAX}")
    if n_max < 0:
        raise DomainError("n_max must be non-negative")


def coefficient(pi, n: int, workers: int = 1) -> LaurentPolyN:
    """``a_{pi,n}(N)`` from the map census."""
    pi = as_partition(pi)
    _check_capacity(pi, n)
    if pi.k > n + 1:
        return LaurentPolyN()
    out = {}
    for m, aut in enumerate_maps(n, pi.k, partition=pi, workers=workers):
        chi = euler_characteristic(m)
        out[chi] = out.get(chi, 0) + Fraction(1, aut)
    return LaurentPolyN(out)


def perturbative_coefficients(pi, n_max: int, workers: int = 1) -> CoefficientTable:
    pi = as_partition(pi)
    _check_capacity(pi, n_max)
    return CoefficientTable(pi, [coefficient(pi, n, workers) for n in range(n_max + 1)])


def genus_coefficients(pi, h: int, n_max: int, workers: int = 1) -> list[Fraction]:
    """Coefficients of ``(-lambda)^n`` in the genus-``h`` part ``K_{pi,h}``."""
    if h < 0:
        raise DomainError("genus must be non-negative")
    table = perturbative_coefficients(pi, n_max, workers)
    e = 2 - 2 * h - len(table.partition)
    return [p.coefficient(e) for p in table.orders]


def evaluate_series(table: CoefficientTable, lam: complex, N: float, n_trunc: int | None = None) -> complex:
    """``sum_{m <= n_trunc} (-lambda)^m a_{pi,m}(N)`` in floating point."""
    if n_trunc is None:
        n_trunc = table.n_max
    if n_trunc > table.n_max or n_trunc < 0:
        raise DomainError(f"n_trunc={n_trunc} outside 0..{table.n_max}")
    total = 0
    for m in range(n_trunc + 1):
        total += (-lam) ** m * table.orders[m](N)
    return total


# ---------------------------------------------------------------------------
# Wick-contraction oracle (M representation, no maps involved)

def _wick_slots(n: int, k: int):
    """Index slots and the identifications forced by the interaction and sources.

    Each ``M`` / ``M*`` occurrence has a row and a column slot.  Vertex ``v``
    is ``M_ab M*_cb M_cd M*_ad``; source ``i`` is ``J_pq M*_pq`` and
    ``M_rs J*_rs``.
    """
    ms, mstars = [], []
    links = []
    for v in range(n):
        m1, m1s, m2, m2s = ("M", v, 0), ("Ms", v, 0), ("M", v, 1), ("Ms", v, 1)
        ms += [m1, m2]
        mstars += [m1s, m2s]
        links += [((m1, "r"), (m2s, "r")), ((m1, "c"), (m1s, "c")),
                  ((m1s, "r"), (m2, "r")), ((m2, "c"), (m2s, "c"))]
    for i in range(k):
        js = ("Ms", "J", i)
        jd = ("M", "Jd", i)
        mstars.append(js)
        ms.append(jd)
        links += [((js, "r"), ("J", i, "r")), ((js, "c"), ("J", i, "c")),
                  ((jd, "r"), ("Jd", i, "r")), ((jd, "c"), ("Jd", i, "c"))]
    return ms, mstars, links


def _wick_terms(n: int, k: int) -> dict[tuple[int, tuple[int, ...]], int]:
    """Sum over pairings: ``{(loops, J cycle type): multiplicity}``."""
    ms, mstars, links = _wick_slots(n, k)
    slots = sorted({s for pair in links for s in pair} | {(x, t) for x in ms + mstars for t in "rc"}, key=repr)
    index = {s: i for i, s in enumerate(slots)}
    base_parent = list(range(len(slots)))

    def find(parent, a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in links:
        ra, rb = find(base_parent, index[a]), find(base_parent, index[b])
        base_parent[ra] = rb
    j_rows = [index[("J", i, "r")] for i in range(k)]
    j_cols = [index[("J", i, "c")] for i in range(k)]
    jd_rows = [index[("Jd", i, "r")] for i in range(k)]
    jd_cols = [index[("Jd", i, "c")] for i in range(k)]
    out: dict = {}
    for perm in itertools.permutations(range(len(mstars))):
        parent = list(base_parent)
        for a, b in enumerate(perm):
            for t in "rc":
                ra, rb = find(parent, index[(ms[a], t)]), find(parent, index[(mstars[b], t)])
                if ra != rb:
                    parent[ra] = rb
        roots = {find(parent, i) for i in range(len(slots))}
        source_roots = {find(parent, i) for i in j_rows + j_cols + jd_rows + jd_cols}
        loops = len(roots - source_roots)
        row_of = {find(parent, x): j for j, x in enumerate(jd_rows)}
        col_of = {find(parent, x): j for j, x in enumerate(jd_cols)}
        rho = [row_of[find(parent, x)] for x in j_rows]
        gamma = [col_of[find(parent, x)] for x in j_cols]
        # J cycles follow rho^{-1} gamma
        rho_inv = [0] * k
        for i, j in enumerate(rho):
            rho_inv[j] = i
        walk = [rho_inv[gamma[i]] for i in range(k)]
        seen, ct = set(), []
        for i in range(k):
            if i in seen:
                continue
            length = 0
            x = i
            while x not in seen:
                seen.add(x)
                x = walk[x]
                length += 1
            ct.append(length)
        key = (loops, tuple(sorted(ct)))
        out[key] = out.get(key, 0) + 1
    return out


@lru_cache(maxsize=None)
def _wick_log(n_max: int, k_max: int):
    N, lam = sympy.symbols("N lambda")
    p = {j: sympy.Symbol(f"p{j}") for j in range(1, k_max + 1)}
    # Z as {(n, k): coefficient of lam^n, J-degree k}
    z = {}
    for n in range(n_max + 1):
        for k in range(k_max + 1):
            total = sympy.Integer(0)
            for (loops, ct), mult in _wick_terms(n, k).items():
                mono = sympy.Integer(1)
                for c in ct:
                    mono *= p[c]
                total += mult * N ** loops * mono
            pref = (sympy.Rational(-1, 2) / N) ** n / sympy.factorial(n) * N ** k / sympy.factorial(k) ** 2
            z[(n, k)] = sympy.expand(pref * total)

    def mul(a, b):
        out = {}
        for (n1, k1), c1 in a.items():
            for (n2, k2), c2 in b.items():
                if n1 + n2 <= n_max and k1 + k2 <= k_max:
                    key = (n1 + n2, k1 + k2)
                    out[key] = sympy.expand(out.get(key, 0) + c1 * c2)
        return out

    # log(1 + X) with X = Z - 1 (Z_00 = 1)
    x = {key: c for key, c in z.items() if key != (0, 0)}
    log = {}
    power = dict(x)
    for m in range(1, n_max + k_max + 1):
        for key, c in power.items():
            log[key] = sympy.expand(log.get(key, 0) + sympy.Rational((-1) ** (m + 1), m) * c)
        power = mul(power, x)
    return log, N, p


def wick_oracle(pi, n: int) -> LaurentPolyN:
    """``a_{pi,n}(N)`` by exhaustive Wick contraction of ``n`` quartic vertices.

    The weight is ``exp(-Tr MM^dagger - (lambda/2N) Tr (MM^dagger)^2
    + sqrt(N) Tr(J M^dagger) + sqrt(N) Tr(M J^dagger))``; the answer is the
    coefficient of ``(-lambda)^n Tr_pi(JJ^dagger)`` in the logarithm.
    """
    pi = as_partition(pi)
    if pi.k > WICK_K_MAX or n > WICK_N_MAX:
        raise CapacityError(f"wick_oracle supports k <= {WICK_K_MAX}, n <= {WICK_N_MAX}")
    if n < 0 or pi.k < 1:
        raise DomainError("need n >= 0 and a non-empty partition")
    log, N, p = _wick_log(WICK_N_MAX, WICK_K_MAX)
    expr = log.get((n, pi.k), sympy.Integer(0)) * (-1) ** n
    poly = sympy.Poly(expr, *p.values())
    exps = [0] * len(p)
    for part in pi.parts:
        exps[part - 1] += 1
    c = poly.coeff_monomial(tuple(exps))
    return LaurentPolyN.from_sympy(c, N)


# ---------------------------------------------------------------------------
# tensor structure

def canonical_pair(pi) -> tuple[Permutation, Permutation]:
    """``(tau, xi)`` with ``tau = id`` and ``xi`` the inverse canonical cycle permutation."""
    pi = as_partition(pi)
    return Permutation.identity(pi.k), canonical_permutation(pi).inverse()


def _structure_terms(pi, tau=None, xi=None):
    pi = as_partition(pi)
    k = pi.k
    if tau is None or xi is None:
        tau, xi = canonical_pair(pi)
    if (tau * xi.inverse()).cycles() and sorted(len(c) for c in (tau * xi.inverse()).cycles()) != list(pi.parts):
        raise DomainError("tau xi^{-1} must have cycle type pi")
    for rho in itertools.permutations(range(1, k + 1)):
        rho = Permutation(rho)
        for sigma in itertools.permutations(range(1, k + 1)):
            sigma = Permutation(sigma)
            si = sigma.inverse()
            yield rho * tau * si, rho * xi * si


def cumulant_tensor_entry(pi, scalar: complex, indices: Sequence[Sequence[int]], tau=None, xi=None) -> complex:
    """Contribution of ``K_pi`` to the order-``2k`` cumulant tensor entry.

    ``indices`` lists ``(a_l, b_l, c_l, d_l)`` for ``l = 1..k``.
    """
    pi = as_partition(pi)
    if pi.k > K_MAX:
        raise CapacityError(f"k={pi.k} exceeds {K_MAX}")
    if len(indices) != pi.k or any(len(q) != 4 for q in indices):
        raise DomainError("need k index quadruples (a, b, c, d)")
    a = [q[0] for q in indices]
    b = [q[1] for q in indices]
    c = [q[2] for q in indices]
    d = [q[3] for q in indices]
    count = 0
    for p1, p2 in _structure_terms(pi, tau, xi):
        if all(c[l] == a[p1(l + 1) - 1] and d[l] == b[p2(l + 1) - 1] for l in range(pi.k)):
            count += 1
    return scalar * count


def contracted_structure_coefficient(pi, pattern: Sequence[Sequence[str]], tau=None, xi=None) -> LaurentPolyN:
    """``sum over all index names`` of the structure sum for ``K_pi``.

    ``pattern`` gives symbolic names for ``(a_l, b_l, c_l, d_l)``; every name
    is summed over ``1..N``.  The result is a polynomial in ``N``.
    """
    pi = as_partition(pi)
    if len(pattern) != pi.k:
        raise DomainError("pattern needs k quadruples")
    names = sorted({x for q in pattern for x in q})
    out = {}
    for p1, p2 in _structure_terms(pi, tau, xi):
        parent = {x: x for x in names}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for l in range(pi.k):
            for u, v in ((pattern[l][2], pattern[p1(l + 1) - 1][0]), (pattern[l][3], pattern[p2(l + 1) - 1][1])):
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[ru] = rv
        e = len({find(x) for x in names})
        out[e] = out.get(e, 0) + 1
    return LaurentPolyN(out)


# index patterns of the two invariant observables used for k = 2 extraction
PATTERN_TRACE_SQUARED = (("a", "b", "a", "b"), ("e", "f", "e", "f"))
PATTERN_QUARTIC = (("a", "b", "c", "b"), ("c", "d", "a", "d"))


def k2_extraction_matrix(N: int, tau_xi: Mapping | None = None) -> list[list[float]]:
    """Rows: observables (trace squared, quartic); columns: ``K_(2)``, ``K_(1,1)``."""
    tau_xi = tau_xi or {}
    rows = []
    for pattern in (PATTERN_TRACE_SQUARED, PATTERN_QUARTIC):
        row = []
        for pi in ((2,), (1, 1)):
            tx = tau_xi.get(pi, (None, None))
            row.append(float(contracted_structure_coefficient(pi, pattern, *tx)(Fraction(N))))
        rows.append(row)
    return rows
