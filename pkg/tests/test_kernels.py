import numpy as np
import pytest

from kernelgames.grid import MeasureGrid, uniform_grid
from kernelgames.kernels import (Kernel, cauchy_schwarz_audit, check_psd,
                                 check_r1, check_r2, constant_kernel,
                                 diagonal_kernel, eigenvalues,
                                 exchangeable_kernel, graph_kernel,
                                 hadamard_eigen_bound, kernel_from_config,
                                 numerical_range_bounds, operator_matrix,
                                 operator_norm_bound, rayleigh_quotient,
                                 separable_kernel, spectral_report,
                                 unidirectional_kernel)


def _random_kernel(rng, n, undirected):
    values = rng.normal(size=(n, n))
    if undirected:
        values = 0.5 * (values + values.T)
        values = 0.5 * (values + values.T)
    return Kernel(uniform_grid(n), values, undirected=undirected)


# -- constructors and validation -------------------------------------------

def test_undirected_flag_requires_exact_symmetry():
    g = uniform_grid(2)
    with pytest.raises(ValueError):
        Kernel(g, [[0.0, 1.0], [1.0 + 1e-12, 0.0]], undirected=True)


def test_operator_matrix_constant():
    g = uniform_grid(5)
    A = operator_matrix(constant_kernel(g, 0.7))
    assert np.allclose(A, 0.7 / 5)


def test_operator_matrix_diagonal():
    g = uniform_grid(4)
    A = operator_matrix(diagonal_kernel(g, 1.0))
    assert np.allclose(A, np.diag(np.full(4, 0.25)))


def test_operator_matrix_separable_eigenfunction():
    # K(s,t) = q(s) q(t) with q(t) = t has eigenfunction q with value int q^2
    g = uniform_grid(1000)
    K = separable_kernel(g, 1.0, lambda t: t)
    q = g.coords
    Aq = operator_matrix(K) @ q
    assert np.max(np.abs(Aq - q / 3.0)) <= 1e-6


# -- eigenvalues ------------------------------------------------------------

def test_constant_kernel_spectrum():
    g = uniform_grid(8)
    eigs = eigenvalues(constant_kernel(g, 0.6))
    assert eigs[0].real == pytest.approx(0.6, abs=1e-12)
    assert np.max(np.abs(eigs[1:])) <= 1e-12


def test_unidirectional_kernel_spectrum_vanishes():
    for n in (50, 200):
        K = unidirectional_kernel(uniform_grid(n), 0.8)
        assert np.max(np.abs(eigenvalues(K))) <= 10 * 0.8 / n


def test_separable_rank_one_negative_eigenvalue():
    g = uniform_grid(30)
    K = separable_kernel(g, -2.0, np.ones(30))
    eigs = eigenvalues(K)
    assert np.min(eigs.real) == pytest.approx(-2.0, abs=1e-12)
    assert np.sum(np.abs(eigs) > 1e-10) == 1


def test_spectrum_equivalence_of_operator_conventions():
    from kernelgames.kernels import _weighted_symmetrized

    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(3, 30))
        K = _random_kernel(rng, n, undirected=bool(rng.integers(2)))
        a = np.sort_complex(np.linalg.eigvals(operator_matrix(K)))
        b = np.sort_complex(np.linalg.eigvals(_weighted_symmetrized(K)))
        scale = 1.0 + np.max(np.abs(a))
        assert np.max(np.abs(a - b)) <= 1e-9 * scale


# -- numerical range ---------------------------------------------------------

def test_numerical_range_constant_kernel():
    g = uniform_grid(6)
    lo, hi = numerical_range_bounds(constant_kernel(g, 0.8))
    assert hi == pytest.approx(0.8, abs=1e-12)
    assert lo == pytest.approx(0.0, abs=1e-12)


def test_numerical_range_negative_separable():
    g = uniform_grid(25)
    lo, hi = numerical_range_bounds(separable_kernel(g, -1.5, lambda t: 1 + t))
    assert hi <= 1e-12
    assert lo < 0


def test_unidirectional_numerical_range_converges_inside_zero_r():
    r = 0.8
    sups = []
    for n in (100, 200, 400):
        _, hi = numerical_range_bounds(unidirectional_kernel(uniform_grid(n), r))
        assert 0.0 < hi < r
        sups.append(hi)
    # Cauchy-like convergence of the sup as the grid refines
    assert abs(sups[2] - sups[1]) < abs(sups[1] - sups[0])


def test_unidirectional_constant_function_rayleigh_quotient():
    # the flat-profile Rayleigh quotient of r 1{s<t}: double integral r/2,
    # up to the O(1/n) strict-inequality correction of the discrete grid
    r, n = 0.9, 400
    g = uniform_grid(n)
    K = unidirectional_kernel(g, r)
    q = rayleigh_quotient(K, g.constant(1.0), normalization="norm_sq")
    assert q == pytest.approx(r / 2 * (1 - 1 / n), abs=1e-12)
    # the alternative normalization coincides here because ||1|| = 1
    q2 = rayleigh_quotient(K, g.constant(1.0), normalization="norm")
    assert q2 == pytest.approx(q, abs=1e-12)


# -- (R1) / (R2) -------------------------------------------------------------

def test_check_r1_examples():
    g = uniform_grid(10)
    assert check_r1(constant_kernel(g, 0.5))
    assert not check_r1(constant_kernel(g, 1.0))


def test_sup_bounded_kernel_satisfies_r1():
    rng = np.random.default_rng(3)
    values = rng.uniform(-0.99, 0.99, size=(20, 20))
    assert np.max(np.abs(values)) < 1.0
    assert check_r1(Kernel(uniform_grid(20), values))


def test_check_r2_examples():
    g = uniform_grid(40)
    assert not check_r2(constant_kernel(g, 2.0))
    # one-directional interactions: no real eigenvalue at all, any strength
    K = unidirectional_kernel(uniform_grid(200), 5.0)
    assert check_r2(K)
    assert not check_r1(K)


def test_r1_equals_r2_for_undirected():
    rng = np.random.default_rng(4)
    for _ in range(20):
        K = _random_kernel(rng, 15, undirected=True)
        hi = numerical_range_bounds(K)[1]
        assert check_r1(K) == check_r2(K) == (hi < 1.0)


# -- PSD and Cauchy-Schwarz --------------------------------------------------

def test_check_psd_examples():
    g = uniform_grid(6)
    assert check_psd(constant_kernel(g, 1.0))
    for lam in (1.0, 1.5, 4.0):
        assert check_psd(exchangeable_kernel(g, 1.0, 1.0 / lam))
    assert not check_psd(exchangeable_kernel(g, 1.0, 2.0))


def test_check_psd_rejects_directed():
    K = unidirectional_kernel(uniform_grid(4), 0.5)
    with pytest.raises(ValueError):
        check_psd(K)


def test_cauchy_schwarz_audit_examples():
    g = uniform_grid(12)
    assert cauchy_schwarz_audit(constant_kernel(g, 1.0)) == 0.0
    rng = np.random.default_rng(5)
    for _ in range(20):
        B = rng.normal(size=(12, 4))
        vals = B @ B.T
        K = Kernel(g, 0.5 * (vals + vals.T), undirected=True)
        assert check_psd(K)
        assert cauchy_schwarz_audit(K) <= 1e-10


def test_psd_closure_under_sum_and_entrywise_product():
    rng = np.random.default_rng(6)
    g = uniform_grid(10)
    for _ in range(20):
        A = rng.normal(size=(10, 3))
        B = rng.normal(size=(10, 3))
        Ka = Kernel(g, A @ A.T, undirected=True)
        Kb = Kernel(g, B @ B.T, undirected=True)
        assert check_psd(Kernel(g, Ka.values + Kb.values, undirected=True))
        assert check_psd(Kernel(g, Ka.values * Kb.values, undirected=True))


# -- Hadamard-product eigenvalue bound ---------------------------------------

def test_hadamard_bound_with_all_ones_kernel():
    g = uniform_grid(9)
    K = constant_kernel(g, 1.0)
    R = constant_kernel(g, 0.5)
    max_eig, bound, holds = hadamard_eigen_bound(K, R)
    assert max_eig == pytest.approx(0.5, abs=1e-12)
    assert bound == 1.0
    assert holds


def test_hadamard_bound_with_diagonal_correlation():
    g = uniform_grid(7)
    K = diagonal_kernel(g, 1.0)
    rng = np.random.default_rng(8)
    R = Kernel(g, rng.uniform(-0.9, 0.9, size=(7, 7)))
    assert check_r1(R)
    max_eig, bound, holds = hadamard_eigen_bound(K, R)
    expected = np.max(g.weights * np.diag(R.values))
    assert max_eig == pytest.approx(max(expected, 0.0), abs=1e-12)
    assert holds


def test_hadamard_bound_two_node_oracle():
    g = MeasureGrid([0.25, 0.75], [0.5, 0.5])
    K = Kernel(g, [[1.0, 1.0], [1.0, 1.0]], undirected=True)
    R = Kernel(g, [[0.5, 0.9], [0.9, 0.5]], undirected=True)
    assert check_r1(R)           # sym operator eigenvalues {0.7, -0.2}
    max_eig, bound, holds = hadamard_eigen_bound(K, R)
    # K o R = R here; direct 2x2 eigensolve of R W
    oracle = np.max(np.linalg.eigvals(operator_matrix(R)).real)
    assert max_eig == pytest.approx(oracle, abs=1e-12)
    assert holds and max_eig < 1.0


def test_hadamard_bound_rejects_bad_preconditions():
    g = uniform_grid(4)
    with pytest.raises(ValueError):
        hadamard_eigen_bound(exchangeable_kernel(g, 1.0, 2.0),
                             constant_kernel(g, 0.5))
    with pytest.raises(ValueError):
        hadamard_eigen_bound(constant_kernel(g, 1.0),
                             constant_kernel(g, 1.5))


# -- report and serialization ------------------------------------------------

def test_spectral_report_containment_chain():
    rng = np.random.default_rng(9)
    for _ in range(25):
        n = int(rng.integers(3, 25))
        K = _random_kernel(rng, n, undirected=bool(rng.integers(2)))
        rep = spectral_report(K)
        eigs = np.asarray(rep.eigenvalues)
        scale = 1e-9 * (1.0 + np.max(np.abs(eigs)))
        assert eigs.real.max() <= rep.numerical_range_sup + scale
        assert eigs.real.min() >= rep.numerical_range_inf - scale
        assert rep.numerical_range_sup <= rep.operator_norm_bound + scale
        assert rep.numerical_range_inf >= -rep.operator_norm_bound - scale
        if K.undirected:
            assert rep.numerical_range_sup == pytest.approx(
                eigs.real.max(), abs=scale)


def test_operator_norm_bound_constant():
    g = uniform_grid(11)
    assert operator_norm_bound(constant_kernel(g, -0.3)) == pytest.approx(0.3)


def test_kernel_csv_json_round_trip(tmp_path):
    g = uniform_grid(3)
    K = graph_kernel(g, [(0, 1), (1, 2)], 0.4)
    jpath = tmp_path / "k.json"
    K.to_json(jpath)
    K2 = Kernel.from_json(jpath)
    assert np.array_equal(K.values, K2.values)
    assert K2.undirected


def test_kernel_from_config_kinds():
    g = uniform_grid(6)
    K = kernel_from_config(g, {"kind": "constant", "r": 0.25})
    assert np.allclose(K.values, 0.25)
    K = kernel_from_config(g, {"kind": "separable", "r": 2.0, "q_expr": "sin(t)"})
    assert K.values[1, 2] == pytest.approx(
        2.0 * np.sin(g.coords[1]) * np.sin(g.coords[2]))
    with pytest.raises(ValueError):
        kernel_from_config(g, {"kind": "constant", "r": 0.25, "bogus": 1})
    with pytest.raises(ValueError):
        kernel_from_config(g, {"kind": "mystery"})
