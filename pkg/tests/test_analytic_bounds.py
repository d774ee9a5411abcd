import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from lvelab.analytic_bounds import (
    BorelConfig,
    ComplexCoupling,
    borel_sum,
    bound_report,
    in_domain,
    pade,
    perturbative_remainder_bound,
    resolvent_norm_check,
    source_norm_threshold,
    topological_remainder_bound,
    tree_bound,
)
from lvelab.errors import DomainError, ResummationError
from lvelab.planar_sde import planar_closed_form, planar_count


def polar(rho, theta):
    return cmath.rect(rho, theta)


def stieltjes(lam):
    val, _ = quad(lambda s: math.exp(-s / lam) / (1 + s), 0, math.inf, epsabs=1e-14, epsrel=1e-13)
    return val / lam


def test_coupling_validation():
    assert ComplexCoupling.of(0.1).theta == 0
    with pytest.raises(DomainError):
        ComplexCoupling.of(-0.2)
    with pytest.raises(DomainError):
        ComplexCoupling(0.1, math.pi)


def test_domain_examples():
    assert in_domain(0.1, "C")
    assert not in_domain(polar(0.2, math.pi / 2), "C")
    assert not in_domain(-0.2, "C_prime")
    assert not in_domain(polar(0.2, 0.99 * math.pi), "C_prime")
    assert in_domain(0.05, "C_tilde") and not in_domain(0.1, "C_tilde")
    assert in_domain(0.1, "D_R", R=0.2) and not in_domain(0.3, "D_R", R=0.2)
    with pytest.raises(DomainError):
        in_domain(0.1, "nowhere")


def test_domain_nesting_on_grid():
    rhos = np.linspace(1e-4, 0.3, 100)
    thetas = np.linspace(-math.pi * 0.999, math.pi * 0.999, 100)
    for r in rhos:
        for t in thetas:
            lam = polar(r, t)
            if in_domain(lam, "C_tilde"):
                assert in_domain(lam, "C")
            if in_domain(lam, "D_R", R=0.125):
                assert in_domain(lam, "C")


def test_source_threshold():
    assert abs(source_norm_threshold(0.1) - 0.75) < 1e-12
    assert source_norm_threshold(0) == 1e6
    edge = polar(math.cos(0.3) ** 2 / 4, 0.6)
    assert abs(source_norm_threshold(edge)) < 1e-12
    with pytest.raises(DomainError):
        source_norm_threshold(0.3)


def test_tree_bound():
    assert abs(tree_bound(1, 1, 1, 0.01, 10) - 0.2) < 1e-15
    values = [tree_bound(3, 2, 1, polar(r, 0.4), 5) for r in (0.01, 0.02, 0.05)]
    assert values == sorted(values)


def test_perturbative_remainder_golden():
    x = Fraction(4, 100)
    expected = 4 * 6 * x ** 3 * (x / (1 - x) ** 4 + 32)
    assert math.isclose(perturbative_remainder_bound(2, 1, 1, 0.01, 1), float(expected), rel_tol=1e-13)
    assert perturbative_remainder_bound(2, 1, 1, 1e-9, 1) < 1e-20
    with pytest.raises(DomainError):
        perturbative_remainder_bound(2, 1, 1, 0.25, 1)


def test_perturbative_remainder_shape():
    for n in range(1, 5):
        ratios = []
        for r in np.linspace(0.001, 0.1, 30):
            x = 4 * r
            ratios.append(perturbative_remainder_bound(n, 1, 1, r, 1) / (math.factorial(n + 1) * x ** (n + 1)))
        assert max(ratios) < 1e4


def test_topological_remainder():
    y = Fraction(12, 100)
    expected = Fraction(1, 10) * 8 * y ** 2 * 2 / (1 - y)
    assert math.isclose(topological_remainder_bound(0, 1, 1, 0.01, 10), float(expected), rel_tol=1e-13)
    # relative to the tree bound the genus remainder carries an extra N^-2
    rel = [topological_remainder_bound(0, 1, 1, 0.01, n) / tree_bound(1, 1, 1, 0.01, n) for n in (10, 20)]
    assert math.isclose(rel[1] / rel[0], 0.25)
    assert topological_remainder_bound(0, 1, 1, 1e-9, 10) < 1e-15
    with pytest.raises(DomainError):
        topological_remainder_bound(0, 1, 1, 0.1, 10)


def test_bound_report_keys():
    rep = bound_report(0.1, 4)
    assert rep["in_C"] and not rep["in_C_tilde"]
    assert rep["topological_remainder_bound"] is None
    assert rep["eps_lambda"] == pytest.approx(0.75)


def test_resolvent_real_coupling():
    assert resolvent_norm_check(0.3, 6, samples=200, seed=1) <= 1 + 1e-12
    assert resolvent_norm_check(0, 4, samples=5) == pytest.approx(1.0)


def test_resolvent_rotated_coupling():
    th = math.pi / 2
    worst = resolvent_norm_check(polar(0.5, th), 8, samples=300, seed=2)
    assert 1 < worst <= 1 / math.cos(th / 2) + 1e-12


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 2.0), st.floats(-3.0, 3.0), st.integers(0, 1000))
def test_resolvent_bound_property(rho, theta, seed):
    worst = resolvent_norm_check(polar(rho, theta), 4, samples=20, seed=seed)
    assert worst <= 1 / math.cos(theta / 2) + 1e-12


def test_pade_exact():
    # [1/1] of 1 + s + s^2/2 + ... is (1 + s/2) / (1 - s/2)
    b = [Fraction(1, math.factorial(n)) for n in range(3)]
    p, q = pade(b, 1, 1)
    assert p == [1, Fraction(1, 2)] and q == [1, Fraction(-1, 2)]
    with pytest.raises(DomainError):
        pade(b, 2, 2)


def test_borel_geometric():
    assert abs(borel_sum([1] * 40, 0.5) - 2.0) < 1e-8
    assert abs(borel_sum([2 ** n for n in range(30)], 0.2) - 1 / 0.6) < 1e-6


def test_borel_stieltjes():
    coeffs = [(-1) ** n * math.factorial(n) for n in range(40)]
    assert abs(borel_sum(coeffs, 0.1) - stieltjes(0.1)) < 1e-4


def test_borel_planar():
    coeffs = [planar_count(n) for n in range(61)]
    assert abs(borel_sum(coeffs, 0.05) - planar_closed_form(0.05)) < 1e-4


def test_borel_errors():
    with pytest.raises(DomainError):
        borel_sum([1, 1], -0.1)
    with pytest.raises(ResummationError):
        borel_sum([1] * 5, 0.5, BorelConfig(pade_numerator_degree=0, pade_denominator_degree=1))
    with pytest.raises(DomainError):
        BorelConfig(nodes=8)
    with pytest.raises(DomainError):
        borel_sum([1] * 5, 0.5, BorelConfig(R=0.1))
