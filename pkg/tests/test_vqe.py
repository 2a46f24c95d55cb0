import numpy as np
import pytest

from conftest import random_hamiltonian
from uccvqe.ansatz import MultiDetReference, aufbau_reference, build_ansatz
from uccvqe.fock import sector_basis
from uccvqe.hamiltonian import sector_matrix
from uccvqe.vqe import (
    NoConvergence,
    VqeProblem,
    gradient,
    minimize_from,
    minimize_multistart,
    objective,
    starting_point,
)

EXACT_TWO_SITE = 2 - np.sqrt(8)


@pytest.fixture(scope="module")
def uccsd2(hubbard2):
    _, basis, mat = hubbard2
    return VqeProblem(mat, build_ansatz("uccsd", 4, 1, 1), aufbau_reference(4, 1, 1), basis)


def test_objective_at_zero_is_reference_diagonal(uccsd2, hubbard2):
    _, basis, mat = hubbard2
    # dense oracle: <0b0011|H|0b0011>, both electrons on site 0
    ref = basis.basis_vector(0b0011)
    assert objective(uccsd2, np.zeros(3)) == pytest.approx(ref @ mat @ ref, abs=1e-14)
    assert objective(uccsd2, np.zeros(3)) == pytest.approx(4.0, abs=1e-14)


def test_objective_at_eigenvector(hubbard2):
    _, basis, mat = hubbard2
    vals, vecs = np.linalg.eigh(mat)
    ref = MultiDetReference(zip(basis.determinants, vecs[:, 0]))
    problem = VqeProblem(mat, build_ansatz("uccsd", 4, 1, 1), ref, basis)
    assert objective(problem, np.zeros(3)) == pytest.approx(vals[0], abs=1e-12)
    np.testing.assert_allclose(gradient(problem, np.zeros(3)), 0.0, atol=1e-8)
    np.testing.assert_allclose(gradient(problem, np.zeros(3), "exact"), 0.0, atol=1e-8)


def test_rayleigh_bound(hubbard4):
    _, basis, mat = hubbard4
    e0 = np.linalg.eigvalsh(mat)[0]
    rng = np.random.default_rng(0)
    problem = VqeProblem(mat, build_ansatz("uccgsd", 8, 2, 2), aufbau_reference(8, 2, 2), basis)
    for _ in range(20):
        assert objective(problem, rng.uniform(-2, 2, problem.n_params)) >= e0 - 1e-10


@pytest.mark.parametrize("kind, k", [("uccsd", 1), ("uccgsd", 1), ("upccsd", 1), ("kupccgsd", 2)])
def test_gradient_modes_agree(hubbard4, kind, k):
    _, basis, mat = hubbard4
    problem = VqeProblem(mat, build_ansatz(kind, 8, 2, 2, k), aufbau_reference(8, 2, 2), basis)
    x = np.random.default_rng(1).uniform(-0.5, 0.5, problem.n_params)
    adj = gradient(problem, x, "adjoint")
    exact = gradient(problem, x, "exact")
    fd = gradient(problem, x, "finite_difference")
    assert np.abs(exact - fd).max() <= 1e-6
    assert np.abs(adj - exact).max() <= 1e-10


def test_gradient_with_penalty_matches_finite_difference(hubbard4):
    _, basis, mat = hubbard4
    target = np.linalg.eigh(mat)[1][:, 0]
    problem = VqeProblem(
        mat, build_ansatz("kupccgsd", 8, 2, 2, 1), aufbau_reference(8, 2, 2), basis,
        penalty_mu=3.0, penalty_state=target,
    )
    x = np.random.default_rng(2).uniform(-0.5, 0.5, problem.n_params)
    np.testing.assert_allclose(gradient(problem, x), gradient(problem, x, "finite_difference"), atol=1e-6)


def test_unknown_gradient_mode(uccsd2):
    with pytest.raises(ValueError, match="unknown gradient mode"):
        gradient(uccsd2, np.zeros(3), "symbolic")


def test_dimension_checks(hubbard2, hubbard4):
    _, basis, mat = hubbard2
    with pytest.raises(ValueError):
        VqeProblem(hubbard4[2], build_ansatz("uccsd", 4, 1, 1), aufbau_reference(4, 1, 1), basis)
    problem = VqeProblem(mat, build_ansatz("uccsd", 4, 1, 1), aufbau_reference(4, 1, 1), basis)
    with pytest.raises(ValueError):
        objective(problem, np.zeros(4))


def test_two_site_uccsd_exact(uccsd2):
    result = minimize_multistart(uccsd2, restarts=5, seed=0)
    assert result.energy == pytest.approx(EXACT_TWO_SITE, abs=1e-8)
    assert result.converged
    assert result.energy <= min(result.restart_energies) + 1e-10
    assert result.energy == pytest.approx(objective(uccsd2, result.params), abs=1e-12)
    assert result.gradient_norm <= 1e-6


def test_seeded_determinism(uccsd2):
    a = minimize_multistart(uccsd2, restarts=3, seed=17)
    b = minimize_multistart(uccsd2, restarts=3, seed=17)
    assert np.array_equal(a.params, b.params)
    assert a.restart_energies == b.restart_energies
    single = [minimize_multistart(uccsd2, restarts=1, seed=5).params for _ in range(2)]
    assert np.array_equal(*single)


def test_threads_match_sequential(hubbard4):
    _, basis, mat = hubbard4
    problem = VqeProblem(mat, build_ansatz("kupccgsd", 8, 2, 2, 1), aufbau_reference(8, 2, 2), basis)
    seq = minimize_multistart(problem, restarts=4, seed=3)
    par = minimize_multistart(problem, restarts=4, seed=3, n_jobs=4)
    assert np.array_equal(seq.params, par.params)
    assert seq.restart_energies == par.restart_energies
    assert seq.restart_index == par.restart_index


def test_starting_points():
    assert not starting_point(5, 1, 0, 0.1).any()
    x = starting_point(1000, 1, 3, 0.1)
    assert np.abs(x).max() <= 0.1 and np.abs(x).max() > 0.09
    assert np.array_equal(x, starting_point(1000, 1, 3, 0.1))
    assert not np.array_equal(x, starting_point(1000, 1, 4, 0.1))


def test_tie_break_lowest_index(uccsd2):
    result = minimize_multistart(uccsd2, restarts=4, seed=0)
    near = [i for i, e in enumerate(result.restart_energies) if e <= result.energy + 1e-10]
    assert result.restart_index == min(near)


def test_no_convergence_reports_best(hubbard4):
    _, basis, mat = hubbard4
    problem = VqeProblem(mat, build_ansatz("uccgsd", 8, 2, 2), aufbau_reference(8, 2, 2), basis)
    with pytest.raises(NoConvergence) as info:
        minimize_multistart(problem, restarts=2, seed=0, maxiter=1)
    assert not info.value.result.converged
    assert info.value.result.energy <= min(info.value.result.restart_energies) + 1e-10
    partial = minimize_multistart(problem, restarts=2, seed=0, maxiter=1, raise_on_failure=False)
    assert not partial.converged


def test_restarts_validated(uccsd2):
    with pytest.raises(ValueError):
        minimize_multistart(uccsd2, restarts=0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_two_electron_exactness_random(seed):
    ham = random_hamiltonian(4, 2, 0, seed=seed)
    basis = sector_basis(8, 1, 1)
    mat = sector_matrix(ham, basis)
    problem = VqeProblem(mat, build_ansatz("uccsd", 8, 1, 1), aufbau_reference(8, 1, 1), basis)
    result = minimize_multistart(problem, restarts=5, seed=seed)
    assert result.energy == pytest.approx(np.linalg.eigvalsh(mat)[0], abs=1e-7)


def test_variational_along_optimization(hubbard4):
    _, basis, mat = hubbard4
    e0 = np.linalg.eigvalsh(mat)[0]
    seen = []

    class Recording(VqeProblem):
        def cost_and_gradient(self, params):
            value, grad = super().cost_and_gradient(params)
            seen.append(value)
            return value, grad

    problem = Recording(mat, build_ansatz("kupccgsd", 8, 2, 2, 2), aufbau_reference(8, 2, 2), basis)
    minimize_from(problem, starting_point(problem.n_params, 0, 1, 0.1))
    assert seen and min(seen) >= e0 - 1e-10
