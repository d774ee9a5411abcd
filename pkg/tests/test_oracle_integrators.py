import cmath
import math

import numpy as np
import pytest
from scipy.integrate import quad

from lvelab.analytic_bounds import sample_hermitian
from lvelab.coefficients import evaluate_series, perturbative_coefficients
from lvelab.errors import CapacityError, DomainError
from lvelab.analytic_bounds import perturbative_remainder_bound
from lvelab.lve_structures import LveGraph, enumerate_lve_trees, tree_covariance
from lvelab.oracle_integrators import (
    SourceProduct,
    k2_from_moments,
    lve_tree_amplitude_bound,
    mc_lve_amplitude,
    mc_matrix_cumulant_k1,
    mc_matrix_cumulant_k2,
    vector_cumulant_cs,
    vector_cumulant_fd,
    vector_first_order,
    vector_logz,
)
from lvelab.ribbon_maps import RibbonMap

CILIATED = LveGraph(RibbonMap([[1]], [], [1]), [])


def resolvent_average(lam, jj, power=1):
    """N = 1 oracle: jj * E[(1 - i sqrt(lam) a)^-power] for a standard normal a."""
    eps = cmath.sqrt(lam)

    def f(a, part):
        v = jj / (1 - 1j * eps * a) ** power * math.exp(-a * a / 2) / math.sqrt(2 * math.pi)
        return v.real if part == 0 else v.imag

    re = quad(f, -np.inf, np.inf, args=(0,), epsabs=1e-13)[0]
    im = quad(f, -np.inf, np.inf, args=(1,), epsabs=1e-13)[0]
    return complex(re, im)


def test_gaussian_sampler_second_moment():
    rng = np.random.default_rng(5)
    A = sample_hermitian(3, rng, 40000)
    diag = (A[:, 0, 0] ** 2).real
    off = (A[:, 0, 1] * A[:, 1, 0]).real
    wrong = A[:, 0, 1] * A[:, 0, 1]
    for est, target in ((diag, 1.0), (off, 1.0)):
        assert abs(est.mean() - target) < 3 * est.std() / math.sqrt(len(est)) + 1e-12
    assert abs(wrong.mean()) < 3 * abs(wrong).std() / math.sqrt(len(wrong))


def test_gaussian_k1():
    est = mc_matrix_cumulant_k1(3, 0.0, steps=250 * 2000, chains=250, seed=1)
    assert abs(est.mean - 3) < 3 * est.stderr
    assert est.samples == 250 * 2000


def test_k1_stderr_scaling():
    a = mc_matrix_cumulant_k1(3, 0.05, steps=250 * 1000, chains=250, seed=2)
    b = mc_matrix_cumulant_k1(3, 0.05, steps=250 * 2000, chains=250, seed=2)
    ratio = b.stderr ** 2 / a.stderr ** 2
    assert 0.3 < ratio < 0.8


def test_k1_reproducible_across_workers():
    a = mc_matrix_cumulant_k1(3, 0.05, steps=10 ** 5, seed=9, workers=1)
    b = mc_matrix_cumulant_k1(3, 0.05, steps=10 ** 5, seed=9, workers=2)
    assert a.mean == b.mean and a.stderr == b.stderr


def test_k1_against_series_and_bound():
    N, lam = 3, 0.1
    est = mc_matrix_cumulant_k1(N, lam, target_stderr=3e-3, seed=4)
    series = evaluate_series(perturbative_coefficients((1,), 4), lam, N, 4)
    bound = perturbative_remainder_bound(4, 1, 1, lam, N)
    assert abs(est.mean - series) <= bound + 3 * est.stderr


def test_matrix_mc_domain():
    with pytest.raises(DomainError):
        mc_matrix_cumulant_k1(3, -0.1, steps=10 ** 5)
    with pytest.raises(DomainError):
        mc_matrix_cumulant_k1(3, 0.1j, steps=10 ** 5)
    with pytest.raises(CapacityError):
        mc_matrix_cumulant_k1(9, 0.1, steps=10 ** 5)
    with pytest.raises(DomainError):
        mc_matrix_cumulant_k2(1, 0.1, steps=10 ** 5)


def test_k2_extraction_recovers_gaussian_moments():
    # Gaussian: <T> = N^2, <T^2> = N^4 + N^2, <Q> = 2 N^3 -> both scalars vanish
    N = 4
    sol, cond = k2_from_moments(N, N ** 2, N ** 4 + N ** 2, 2 * N ** 3)
    assert np.allclose(sol, 0, atol=1e-12)
    assert cond < 10


def test_k2_gaussian_mc():
    k2, k11 = mc_matrix_cumulant_k2(4, 0.0, steps=4 * 10 ** 6, seed=3)
    assert abs(k2.mean) < 3 * k2.stderr
    assert abs(k11.mean) < 3 * k11.stderr


@pytest.mark.slow
def test_k2_against_series():
    N, lam = 4, 0.02
    k2, k11 = mc_matrix_cumulant_k2(N, lam, steps=10 ** 7, seed=11)
    s2 = evaluate_series(perturbative_coefficients((2,), 4), lam, N, 4)
    s11 = evaluate_series(perturbative_coefficients((1, 1), 4), lam, N, 4)
    assert abs(k2.mean - s2) < 3 * k2.stderr
    assert abs(k11.mean - s11) < 3 * k11.stderr


def test_source_product_validation():
    with pytest.raises(DomainError):
        SourceProduct(np.array([[1, 2], [0, 1]]))
    with pytest.raises(DomainError):
        SourceProduct(-np.eye(2))
    sp = SourceProduct.from_J(np.array([[1, 1j], [0, 1]]))
    assert sp.norm > 0


def test_bare_ciliated_vertex_without_field():
    jj = SourceProduct(np.diag([0.2, 0.7, 0.1]))
    est = mc_lve_amplitude(CILIATED, 0.1, 3, jj, samples=50, cov_scale=0.0)
    assert est.mean == pytest.approx(3 * 1.0)
    assert est.stderr == 0.0


def test_ciliated_vertex_against_quadrature():
    lam = 0.1 + 0.05j
    est = mc_lve_amplitude(CILIATED, lam, 1, np.array([[0.5]]), samples=20000, seed=1)
    exact = resolvent_average(lam, 0.5)
    assert abs(est.mean - exact) < 3 * est.stderr


def test_lve_amplitude_reproducible_across_workers():
    G = enumerate_lve_trees(1, 1)[0]
    jj = np.eye(2) * 0.3
    a = mc_lve_amplitude(G, 0.05, 2, jj, samples=3000, seed=8, workers=1)
    b = mc_lve_amplitude(G, 0.05, 2, jj, samples=3000, seed=8, workers=3)
    assert a.mean == b.mean and a.stderr == b.stderr


def test_lve_amplitude_errors():
    with pytest.raises(DomainError):
        mc_lve_amplitude(CILIATED, -0.1, 1, np.eye(1))
    big = enumerate_lve_trees(4, 1)[0]
    with pytest.raises(CapacityError):
        mc_lve_amplitude(big, 0.1, 2, np.eye(2))
    with pytest.raises(DomainError):
        mc_lve_amplitude(CILIATED, 0.1, 2, np.eye(3))


def test_star_tree_covariance_fixture():
    rng = np.random.default_rng(0)
    for _ in range(20):
        t12, t23, t24 = rng.random(3)
        C = tree_covariance((4, [(1, 2), (2, 3), (2, 4)]), [t12, t23, t24])
        expected = np.array([
            [1, t12, min(t12, t23), min(t12, t24)],
            [t12, 1, t23, t24],
            [min(t12, t23), t23, 1, min(t23, t24)],
            [min(t12, t24), t24, min(t23, t24), 1],
        ])
        assert np.array_equal(C, expected)


def test_tree_amplitudes_respect_bound():
    rng = np.random.default_rng(12)
    lam = cmath.rect(0.05, 0.7)
    N = 3
    J = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    jj = SourceProduct.from_J(0.4 * J)
    for i in range(20):
        E = int(rng.integers(0, 4))
        k = int(rng.integers(1, E + 2))
        trees = enumerate_lve_trees(E, k)
        G = trees[int(rng.integers(len(trees)))]
        est = mc_lve_amplitude(G, lam, N, jj, samples=400, seed=i)
        bound = lve_tree_amplitude_bound(E, k, lam, N, jj.norm)
        assert abs(est.mean) <= bound + 3 * est.stderr


def test_vector_free_source():
    for N in (1, 3, 7):
        assert abs(vector_logz(N, 0, 0.2) - N * 0.2) < 1e-10
    assert abs(vector_logz(4, 0.3, 0)) > 0


def test_vector_first_order_derivative():
    N, j = 5, 0.01
    h = 1e-3
    d1 = (vector_logz(N, h, j) - vector_logz(N, 0, j)).real / h
    d2 = (vector_logz(N, 2 * h, j) - vector_logz(N, 0, j)).real / (2 * h)
    assert abs(2 * d1 - d2 - vector_first_order(N, j)) < 1e-4


def test_vector_methods_agree():
    a = vector_logz(4, 0.2, 0.05)
    b = vector_logz(4, 0.2, 0.05, method="hermite")
    assert abs(a - b) < 1e-8


def test_vector_cumulant_differentiation():
    fd = vector_cumulant_fd(5, 0.05)
    cs = vector_cumulant_cs(5, 0.05)
    assert abs(fd - cs) < 1e-8


def test_vector_domain():
    with pytest.raises(DomainError):
        vector_logz(3, -0.2, 0.1)
    with pytest.raises(DomainError):
        vector_logz(3, 0.2, 0.1, method="simpson")
