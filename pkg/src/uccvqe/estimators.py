"""Estimator-style front ends for ground and excited UCC-VQE solves."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from uccvqe.ansatz import AnsatzKind, aufbau_reference, build_ansatz, singly_excited_reference
from uccvqe.excited import OcVqeConfig, solve_excited
from uccvqe.fock import StateVector, sector_basis
from uccvqe.hamiltonian import MolecularHamiltonian, sector_matrix
from uccvqe.vqe import DEFAULT_INIT_SCALE, DEFAULT_MAXITER, DEFAULT_RESTARTS, VqeProblem, minimize_multistart


def _check_hamiltonian(X) -> MolecularHamiltonian:
    if not isinstance(X, MolecularHamiltonian):
        raise TypeError(f"expected a MolecularHamiltonian, got {type(X).__name__}")
    return X


def _sector(ham: MolecularHamiltonian, n_alpha, n_beta) -> tuple[int, int]:
    n_alpha = ham.n_alpha if n_alpha is None else int(n_alpha)
    n_beta = ham.n_beta if n_beta is None else int(n_beta)
    return n_alpha, n_beta


class UCCVQE(BaseEstimator):
    """Ground-state UCC-VQE solved exactly on a classical state vector.

    Parameters
    ----------
    ansatz : {"uccsd", "uccgsd", "upccsd", "kupccgsd"}
    k : int
        Number of product blocks (k-UpCCGSD only).
    restarts : int
        BFGS runs; run 0 starts from zero amplitudes.
    seed : int
        Seed of the random starting points.
    init_scale : float
        Half-width of the uniform distribution of random starts.
    n_alpha, n_beta : int, optional
        Sector occupations; default to those implied by NELEC and MS2.
    n_jobs : int
        Threads used across restarts.
    maxiter : int
        BFGS iteration cap per restart.

    Attributes
    ----------
    energy_ : float
        Optimized energy (Hartree).
    params_ : ndarray
        Optimal amplitudes.
    state_ : StateVector
        Prepared optimal state.
    result_ : VqeResult
        Full multi-start diagnostics.
    """

    def __init__(
        self,
        ansatz: str = "uccsd",
        k: int = 1,
        restarts: int = DEFAULT_RESTARTS,
        seed: int = 0,
        init_scale: float = DEFAULT_INIT_SCALE,
        n_alpha: Optional[int] = None,
        n_beta: Optional[int] = None,
        n_jobs: int = 1,
        maxiter: int = DEFAULT_MAXITER,
    ):
        self.ansatz = ansatz
        self.k = k
        self.restarts = restarts
        self.seed = seed
        self.init_scale = init_scale
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        self.n_jobs = n_jobs
        self.maxiter = maxiter

    def _setup(self, X):
        ham = _check_hamiltonian(X)
        n_alpha, n_beta = _sector(ham, self.n_alpha, self.n_beta)
        nso = ham.n_spin_orbitals
        self.basis_ = sector_basis(nso, n_alpha, n_beta)
        self.ansatz_ = build_ansatz(AnsatzKind.parse(self.ansatz), nso, n_alpha, n_beta, self.k)
        self.hamiltonian_matrix_ = sector_matrix(ham, self.basis_)
        return nso, n_alpha, n_beta

    def fit(self, X: MolecularHamiltonian, y=None, *, reference=None, initial_params=None, raise_on_failure=True):
        nso, n_alpha, n_beta = self._setup(X)
        self.reference_ = reference if reference is not None else aufbau_reference(nso, n_alpha, n_beta)
        self.problem_ = VqeProblem(self.hamiltonian_matrix_, self.ansatz_, self.reference_, self.basis_)
        self.result_ = minimize_multistart(
            self.problem_,
            self.restarts,
            self.seed,
            self.init_scale,
            initial_params=initial_params,
            n_jobs=self.n_jobs,
            maxiter=self.maxiter,
            raise_on_failure=raise_on_failure,
        )
        self.energy_ = self.result_.energy
        self.params_ = self.result_.params
        self.state_ = StateVector(self.basis_, self.problem_.state(self.params_))
        return self

    def predict(self, X) -> np.ndarray:
        """Energies of a batch of amplitude vectors, shape (n_samples, n_params)."""
        check_is_fitted(self, "result_")
        X = check_array(X, ensure_min_features=0)
        if X.shape[1] != self.ansatz_.n_params:
            raise ValueError(f"expected {self.ansatz_.n_params} amplitudes per row, got {X.shape[1]}")
        return np.array([self.problem_.cost(row) for row in X])


class OCVQE(BaseEstimator):
    """First excited state by level-shifted (orthogonality-penalized) VQE.

    ``mu=None`` uses ``-E0`` from the ground solve, which requires
    ``E0 < 0``.  ``promotions`` lists spatial ``(i, a)`` promotions for a
    singly excited reference; ``None`` means the aufbau determinant.
    """

    def __init__(
        self,
        ansatz: str = "uccgsd",
        k: int = 1,
        restarts: int = DEFAULT_RESTARTS,
        seed: int = 0,
        init_scale: float = DEFAULT_INIT_SCALE,
        mu: Optional[float] = None,
        promotions: Optional[Sequence[tuple[int, int]]] = None,
        n_alpha: Optional[int] = None,
        n_beta: Optional[int] = None,
        n_jobs: int = 1,
        maxiter: int = DEFAULT_MAXITER,
    ):
        self.ansatz = ansatz
        self.k = k
        self.restarts = restarts
        self.seed = seed
        self.init_scale = init_scale
        self.mu = mu
        self.promotions = promotions
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        self.n_jobs = n_jobs
        self.maxiter = maxiter

    def fit(self, X: MolecularHamiltonian, y=None, *, ground_state: StateVector, ground_energy: float,
            raise_on_failure=True):
        ham = _check_hamiltonian(X)
        n_alpha, n_beta = _sector(ham, self.n_alpha, self.n_beta)
        nso = ham.n_spin_orbitals
        basis = ground_state.basis
        if (basis.n_spin_orbitals, basis.n_alpha, basis.n_beta) != (nso, n_alpha, n_beta):
            raise ValueError("ground state lives in a different sector")
        self.ansatz_ = build_ansatz(AnsatzKind.parse(self.ansatz), nso, n_alpha, n_beta, self.k)
        if self.promotions:
            self.reference_ = singly_excited_reference(nso, n_alpha, n_beta, self.promotions)
        else:
            self.reference_ = aufbau_reference(nso, n_alpha, n_beta)
        self.config_ = OcVqeConfig(
            sector_matrix(ham, basis), basis, self.ansatz_, self.reference_, ground_state,
            float(ground_energy), self.mu,
        )
        self.mu_ = self.config_.mu
        self.result_ = solve_excited(
            self.config_, self.restarts, self.seed, self.init_scale,
            n_jobs=self.n_jobs, maxiter=self.maxiter, raise_on_failure=raise_on_failure,
        )
        self.energy_ = self.result_.energy
        self.overlap_residual_ = self.result_.overlap_residual
        self.params_ = self.result_.params
        return self

    def predict(self, X) -> np.ndarray:
        """Level-shifted costs of a batch of amplitude vectors."""
        check_is_fitted(self, "result_")
        X = check_array(X, ensure_min_features=0)
        if X.shape[1] != self.ansatz_.n_params:
            raise ValueError(f"expected {self.ansatz_.n_params} amplitudes per row, got {X.shape[1]}")
        problem = self.config_.problem()
        return np.array([problem.cost(row) for row in X])
