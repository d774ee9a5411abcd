"""Numerical ground truth: Metropolis sampling of the matrix model, Monte Carlo
LVE amplitudes and quadrature of the one-dimensional vector model."""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from lvelab.analytic_bounds import ComplexCoupling, sample_hermitian
from lvelab.coefficients import k2_extraction_matrix
from lvelab.errors import CapacityError, DomainError, QuadratureError
from lvelab.lve_structures import LveGraph, tree_covariance
from lvelab.ribbon_maps import faces

N_MAX_MC = 8
V_MAX_LVE = 4
CHAINS_PER_CHUNK = 250
ROUND_SWEEPS = 1000


@dataclass
class McEstimate:
    mean: complex | float
    stderr: float
    samples: int
    seed: int
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        mean = self.mean
        if isinstance(mean, complex):
            mean = [mean.real, mean.imag]
        return {"mean": mean, "stderr": self.stderr, "samples": self.samples, "seed": self.seed, **self.extra}


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("LVELAB_WORKERS", "1"))
    return max(1, int(workers))


def _map_chunks(fn, args: list, workers: int) -> list:
    if workers <= 1 or len(args) <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(args))) as ex:
        return list(ex.map(fn, args))


# ---------------------------------------------------------------------------
# matrix model Metropolis

def _energy(M, lam, N):
    H = M @ np.conj(np.swapaxes(M, -1, -2))
    T = np.real(np.trace(H, axis1=-2, axis2=-1))
    Q = np.real(np.einsum("cij,cji->c", H, H))
    return T + lam / (2 * N) * Q, T, Q


def _chunk_round(args):
    """Advance one chunk of chains; returns per-chain observable sums and the new state."""
    N, lam, sweeps, burn, state = args
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = state["rng"]
    M = state["M"]
    step = state["step"]
    chains = M.shape[0]
    E, T, Q = _energy(M, lam, N)
    sums = np.zeros((3, chains))
    acc = 0
    accepted_total = 0
    for it in range(burn + sweeps):
        P = M + step * (rng.standard_normal(M.shape) + 1j * rng.standard_normal(M.shape)) / math.sqrt(2)
        E2, T2, Q2 = _energy(P, lam, N)
        a = rng.random(chains) < np.exp(np.minimum(0.0, E - E2))
        M[a], E[a], T[a], Q[a] = P[a], E2[a], T2[a], Q2[a]
        if it < burn:
            acc += a.sum()
            if it % 50 == 49:
                rate = acc / (50 * chains)
                acc = 0
                if rate > 0.5:
                    step *= 1.2
                elif rate < 0.23:
                    step /= 1.2
        else:
            accepted_total += a.sum()
            sums[0] += T
            sums[1] += T * T
            sums[2] += Q
    return sums, {"rng": rng.bit_generator.state, "M": M, "step": step}, accepted_total


def _init_chunks(N, seed, n_chunks):
    states = []
    for ss in np.random.SeedSequence(seed).spawn(n_chunks):
        rng = np.random.Generator(np.random.PCG64(ss))
        M = (rng.standard_normal((CHAINS_PER_CHUNK, N, N)) + 1j * rng.standard_normal((CHAINS_PER_CHUNK, N, N))) / math.sqrt(2)
        states.append({"rng": rng.bit_generator.state, "M": M, "step": 0.3})
    return states


def _check_mc_args(N, lam):
    if isinstance(lam, complex) or isinstance(lam, ComplexCoupling):
        raise DomainError("matrix Monte Carlo needs a real coupling")
    if lam < 0:
        raise DomainError("matrix Monte Carlo needs lambda >= 0 (positive measure)")
    if not 1 <= N <= N_MAX_MC:
        raise CapacityError(f"N must lie in 1..{N_MAX_MC}")


def _run_matrix_mc(N, lam, steps, seed, chains, target, observable, workers):
    """Shared driver: fixed budget ``steps`` or rounds until ``target`` stderr."""
    _check_mc_args(N, lam)
    n_chunks = max(1, chains // CHAINS_PER_CHUNK)
    chains = n_chunks * CHAINS_PER_CHUNK
    if steps is None and target is None:
        raise DomainError("give a step budget or a stderr target")
    budget_sweeps = (steps // chains) if steps is not None else None
    if budget_sweeps is not None and budget_sweeps < 20:
        raise DomainError("step budget too small for the chain count")
    burn = max(50, (budget_sweeps or 10 * ROUND_SWEEPS) // 10)
    states = _init_chunks(N, seed, n_chunks)
    totals = np.zeros((3, chains))
    done = 0
    used = 0
    first = True
    while True:
        if budget_sweeps is not None:
            remaining = budget_sweeps - used - (burn if first else 0)
            this = min(ROUND_SWEEPS, remaining) if target is not None else remaining
        else:
            this = ROUND_SWEEPS
        if this <= 0:
            break
        b = burn if first else 0
        res = _map_chunks(_chunk_round, [(N, lam, this, b, st) for st in states], workers)
        states = [r[1] for r in res]
        totals += np.concatenate([r[0] for r in res], axis=1)
        done += this
        used += this + b
        first = False
        est = observable(totals / done)
        if target is not None and est[1] <= target:
            break
        if budget_sweeps is not None and used >= budget_sweeps:
            break
        if budget_sweeps is None and used * chains >= 10 ** 7:
            break
    mean, err, extra = est
    extra = dict(extra)
    extra.update({"chains": chains, "sweeps": done, "burn_in": burn, "steps_used": used * chains})
    return mean, err, used * chains, extra


def mc_matrix_cumulant_k1(N: int, lam: float, steps: int | None = None, seed: int = 0,
                          chains: int = 1000, target_stderr: float | None = None,
                          workers: int | None = None) -> McEstimate:
    """``K_(1) = <Tr MM^dagger>/N`` under ``exp(-Tr MM^dagger - lam/(2N) Tr (MM^dagger)^2)``.

    The stderr is the spread of independent chain means.  With
    ``target_stderr`` the run continues in rounds until the target or the step
    budget (default ``10^7``) is met.
    """
    def obs(per_chain):
        m = per_chain[0] / N
        return float(m.mean()), float(m.std(ddof=1) / math.sqrt(len(m))), {}

    mean, err, used, extra = _run_matrix_mc(N, lam, steps, seed, chains, target_stderr, obs, resolve_workers(workers))
    return McEstimate(mean, err, used, seed, extra)


def k2_from_moments(N: int, mT: float, mT2: float, mQ: float) -> tuple[np.ndarray, float]:
    """Solve the 2x2 system for ``(K_(2), K_(1,1))`` from ``<T>, <T^2>, <Q>``."""
    k1 = mT / N
    s1 = N ** 2 * (mT2 - mT ** 2 - k1 ** 2)
    s2 = N ** 2 * (mQ - 2 * N * k1 ** 2)
    mat = np.array(k2_extraction_matrix(N))
    return np.linalg.solve(mat, [s1, s2]), float(np.linalg.cond(mat))


def mc_matrix_cumulant_k2(N: int, lam: float, steps: int | None = None, seed: int = 0,
                          chains: int = 1000, target_stderr: float | None = None,
                          workers: int | None = None, groups: int = 20) -> tuple[McEstimate, McEstimate]:
    """``(K_(2), K_(1,1))`` from ``<(Tr MM^dagger)^2>_c`` and ``<Tr (MM^dagger)^2>_c``.

    Errors come from a delete-one-group jackknife over chain groups.
    """
    if N < 2:
        raise DomainError("the k = 2 system is singular at N = 1")
    info = {}

    def obs(per_chain):
        pooled = per_chain.mean(axis=1)
        full, cond = k2_from_moments(N, *pooled)
        info["cond"] = cond
        idx = np.array_split(np.arange(per_chain.shape[1]), groups)
        jk = []
        for g in idx:
            mask = np.ones(per_chain.shape[1], bool)
            mask[g] = False
            jk.append(k2_from_moments(N, *per_chain[:, mask].mean(axis=1))[0])
        jk = np.array(jk)
        err = np.sqrt((groups - 1) / groups * ((jk - jk.mean(axis=0)) ** 2).sum(axis=0))
        info["err"] = err
        return full, float(err.max()), {"condition_number": cond}

    mean, _, used, extra = _run_matrix_mc(N, lam, steps, seed, chains, target_stderr, obs, resolve_workers(workers))
    err = info["err"]
    return (McEstimate(float(mean[0]), float(err[0]), used, seed, dict(extra)),
            McEstimate(float(mean[1]), float(err[1]), used, seed, dict(extra)))


# ---------------------------------------------------------------------------
# LVE amplitudes

@dataclass(frozen=True)
class SourceProduct:
    """Hermitian positive semidefinite ``JJ^dagger``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("JJ^dagger must be square")
        if not np.allclose(m, m.conj().T, atol=1e-12):
            raise DomainError("JJ^dagger must be Hermitian")
        if np.linalg.eigvalsh(m).min() < -1e-12:
            raise DomainError("JJ^dagger must be positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_J(cls, J) -> "SourceProduct":
        J = np.asarray(J, dtype=complex)
        return cls(J @ J.conj().T)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


def _psd_factor(C: np.ndarray) -> np.ndarray:
    """``L`` with ``L L^T = C``, clamping tiny negative eigenvalues."""
    w, U = np.linalg.eigh(C)
    w = np.where(w < 1e-14, 0.0, w)
    return U * np.sqrt(w)


def _face_words(G: LveGraph):
    """Per face: list of (vertex index, cilium follows) in corner order."""
    m = G.map
    fs = faces(m)
    words = []
    for f in fs.faces:
        if not f:
            # bare vertex without darts: one empty corner
            words.append([(0, False)])
            continue
        words.append([(m.vertex_of(x), m.sigma(x) in m.cilia) for x in f])
    return words


def _amplitude_chunk(args):
    G_json, lam, N, jj, n, seed_state, cov_scale = args
    G = LveGraph.from_json(G_json)
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = seed_state
    V, E = G.n_vertices, G.n_edges
    L = G.n_loops
    lam_c = complex(lam)
    pref = (-lam_c) ** E * float(N) ** (V - E) / math.factorial(V)
    scale = cmath.sqrt(lam_c / N)
    words = _face_words(G)
    tree_pairs = G.vertex_pairs(G.tree_edges)
    loop_pairs = G.vertex_pairs(G.loop_order)
    eye = np.eye(N)
    out = np.empty(n, dtype=complex)
    for i in range(n):
        t = rng.random(len(tree_pairs))
        C = tree_covariance((V, tree_pairs), t) if V > 1 else np.ones((1, 1))
        weight = 1.0
        for a, b in loop_pairs:
            weight *= C[a - 1, b - 1]
        s_last = 1.0
        if L:
            s = np.sort(rng.random(L))[::-1]
            s_last = s[-1]
            weight /= math.factorial(L)
        F = _psd_factor(cov_scale * s_last * C)
        g = sample_hermitian(N, rng, V)
        A = np.einsum("ij,jab->iab", F, g)
        R = [np.linalg.inv(eye - 1j * scale * A[v]) for v in range(V)]
        val = 1.0 + 0j
        for word in words:
            X = eye.astype(complex)
            for v, cil in word:
                X = X @ R[v]
                if cil:
                    X = X @ jj
            val *= np.trace(X)
        out[i] = pref * weight * val
    return out


def mc_lve_amplitude(G: LveGraph, lam, N: int, JJdag: SourceProduct, samples: int = 10000,
                     seed: int = 0, workers: int | None = None, cov_scale: float = 1.0,
                     chunk: int = 1000) -> McEstimate:
    """Monte Carlo estimate of the amplitude of an LVE graph.

    ``cov_scale = 0`` switches the intermediate field off, which leaves the
    bare perturbative value of the graph.
    """
    c = ComplexCoupling.of(lam)
    if G.n_vertices > V_MAX_LVE:
        raise CapacityError(f"at most {V_MAX_LVE} vertices")
    if not 1 <= N <= N_MAX_MC:
        raise CapacityError(f"N must lie in 1..{N_MAX_MC}")
    if not isinstance(JJdag, SourceProduct):
        JJdag = SourceProduct(JJdag)
    if JJdag.matrix.shape != (N, N):
        raise DomainError("JJ^dagger has the wrong size")
    if G.n_cilia == 0 and G.n_vertices == 1 and G.n_edges == 0:
        raise DomainError("a bare vertex has no amplitude")
    sizes = [chunk] * (samples // chunk) + ([samples % chunk] if samples % chunk else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    args = [(G.to_json(), c.value, N, JJdag.matrix, n, np.random.PCG64(ss).state, cov_scale)
            for n, ss in zip(sizes, seeds)]
    vals = np.concatenate(_map_chunks(_amplitude_chunk, args, resolve_workers(workers)))
    mean = complex(vals.mean())
    if len(vals) > 1:
        err = float(math.sqrt(vals.real.var(ddof=1) + vals.imag.var(ddof=1)) / math.sqrt(len(vals)))
    else:
        err = 0.0
    return McEstimate(mean, err, len(vals), seed)


def lve_tree_amplitude_bound(E: int, k: int, lam, N: float, jj_norm: float) -> float:
    """``N^2 |lam|^E ||JJ^dagger||^k / ((E+1)! cos^{2E+k}(theta/2))`` for a tree amplitude."""
    c = ComplexCoupling.of(lam)
    return N ** 2 * c.rho ** E * jj_norm ** k / (math.factorial(E + 1) * c.half_cos ** (2 * E + k))


# ---------------------------------------------------------------------------
# vector model

def _vector_integrand(A, N, lam_c, j):
    eps = cmath.sqrt(lam_c / N) if not isinstance(A, np.ndarray) else np.sqrt(complex(lam_c) / N)
    r = 1.0 / (1.0 - 1j * eps * A)
    return np.exp(-A * A / 2) * r ** N * np.exp(N * j * r) / math.sqrt(2 * math.pi)


def vector_logz(N: int, lam, j: complex = 0.0, method: str = "adaptive", quad_nodes: int = 200) -> complex:
    """``log int dA exp(-A^2/2) (1 - i eps A)^{-N} exp(N j/(1 - i eps A)) / sqrt(2 pi)``.

    ``eps = sqrt(lam/N)``; the source term is normalized so that ``lam = 0``
    gives ``log Z = N j``.  ``method`` is ``"adaptive"`` (scipy quad on the
    real line) or ``"hermite"`` (fixed Gauss-Hermite rule, smooth in ``j``).
    """
    c = ComplexCoupling.of(lam)
    if N < 1:
        raise DomainError("N must be positive")
    lam_c = c.value
    if method == "hermite":
        x, w = np.polynomial.hermite_e.hermegauss(quad_nodes)
        eps = np.sqrt(complex(lam_c) / N)
        r = 1.0 / (1.0 - 1j * eps * x)
        z = np.sum(w * r ** N * np.exp(N * j * r)) / math.sqrt(2 * math.pi)
    elif method == "adaptive":
        f = lambda a: _vector_integrand(a, N, lam_c, j)
        re, e1 = integrate.quad(lambda a: f(a).real, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13, limit=500)
        im, e2 = integrate.quad(lambda a: f(a).imag, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13, limit=500)
        if max(e1, e2) > 1e-8 * max(1.0, abs(complex(re, im))):
            raise QuadratureError(f"quadrature error estimate {max(e1, e2):.2e} too large")
        z = complex(re, im)
    else:
        raise DomainError(f"unknown method {method!r}")
    if z == 0:
        raise QuadratureError("integral vanished")
    return complex(cmath.log(z))


def vector_first_order(N: int, j: float) -> float:
    """``d log Z / d lam`` at ``lam = 0`` from a single-vertex Wick computation."""
    return -(0.5 + j + N * (1 + j) ** 2 / 2)


def vector_cumulant_fd(N: int, lam, h: float = 1e-5, **kw) -> float:
    """``d log Z / d j`` at ``j = 0`` by central differences."""
    return ((vector_logz(N, lam, h, **kw) - vector_logz(N, lam, -h, **kw)) / (2 * h)).real


def vector_cumulant_cs(N: int, lam, h: float = 1e-8, **kw) -> float:
    """``d log Z / d j`` at ``j = 0`` by the complex step ``Im f(ih)/h`` (real ``lam``)."""
    return vector_logz(N, lam, 1j * h, **kw).imag / h
