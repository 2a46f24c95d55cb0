"""Orthogonally constrained VQE for the first excited state."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from uccvqe.ansatz import Ansatz, MultiDetReference
from uccvqe.fock import SectorBasis, StateVector
from uccvqe.vqe import (
    DEFAULT_INIT_SCALE,
    DEFAULT_MAXITER,
    VqeProblem,
    VqeResult,
    minimize_multistart,
)

OVERLAP_FLAG = 1e-3
NOISE_FLOOR = 1e-12


class MuValidationError(ValueError):
    """The default level shift ``-E0`` is only valid for a bound ground state."""


def resolve_mu(ground_energy: float, mu_override: Optional[float] = None) -> float:
    if mu_override is not None:
        return float(mu_override)
    if not ground_energy < 0.0:
        raise MuValidationError(
            f"default level shift mu = -E0 needs a bound ground state (E0 < 0), got E0 = {ground_energy:.10f}; "
            "pass an explicit mu"
        )
    return -float(ground_energy)


@dataclass(frozen=True, eq=False)
class OcVqeConfig:
    hamiltonian_matrix: np.ndarray
    basis: SectorBasis
    ansatz: Ansatz
    reference: MultiDetReference
    ground_state: StateVector
    ground_energy: float
    mu_override: Optional[float] = None

    @property
    def mu(self) -> float:
        return resolve_mu(self.ground_energy, self.mu_override)

    def problem(self) -> VqeProblem:
        return VqeProblem(
            np.asarray(self.hamiltonian_matrix),
            self.ansatz,
            self.reference,
            self.basis,
            penalty_mu=self.mu,
            penalty_state=self.ground_state.amplitudes,
        )


def overlap_squared(a: StateVector, b: StateVector) -> float:
    return a.dot(b) ** 2


def oc_objective(config: OcVqeConfig, params) -> float:
    """Energy plus ``mu * |<psi0|psi1>|^2``."""
    return config.problem().cost(params)


@dataclass(frozen=True)
class ExcitedResult:
    energy: float
    penalized_energy: float
    overlap_residual: float
    mu: float
    flagged: bool
    vqe: VqeResult

    @property
    def params(self) -> np.ndarray:
        return self.vqe.params

    @property
    def converged(self) -> bool:
        return self.vqe.converged


def solve_excited(
    config: OcVqeConfig,
    restarts: int,
    seed: int = 0,
    init_scale: float = DEFAULT_INIT_SCALE,
    *,
    n_jobs: int = 1,
    maxiter: int = DEFAULT_MAXITER,
    raise_on_failure: bool = True,
) -> ExcitedResult:
    """Multi-start minimization of the level-shifted cost.

    The returned ``energy`` is the plain expectation value of the optimal
    state; ``flagged`` marks a residual ground-state overlap above 1e-3.
    """
    problem = config.problem()
    result = minimize_multistart(
        problem, restarts, seed, init_scale,
        n_jobs=n_jobs, maxiter=maxiter, raise_on_failure=raise_on_failure,
    )
    vec = problem.state(result.params)
    energy = float(vec @ (problem.hamiltonian_matrix @ vec))
    overlap = min(1.0, float((config.ground_state.amplitudes @ vec) ** 2))
    return ExcitedResult(energy, result.energy, overlap, problem.penalty_mu, overlap > OVERLAP_FLAG, result)


def penalized_lowest(hamiltonian_matrix, ground: np.ndarray, mu: float) -> float:
    """Lowest eigenvalue of ``H + mu |g><g|`` (small dense cross-check)."""
    ground = np.asarray(ground)
    mat = np.asarray(hamiltonian_matrix) + mu * np.outer(ground, ground)
    return float(scipy.linalg.eigh(mat, eigvals_only=True, subset_by_index=(0, 0))[0])


def projected_lowest(hamiltonian_matrix, ground: np.ndarray) -> float:
    """Lowest eigenvalue of ``(1 - |g><g|) H (1 - |g><g|)`` on the complement of ``g``."""
    ground = np.asarray(ground)
    dim = ground.size
    # orthonormal basis of the complement
    q, _ = np.linalg.qr(np.column_stack([ground, np.eye(dim)]))
    comp = q[:, 1:dim]
    sub = comp.T @ np.asarray(hamiltonian_matrix) @ comp
    return float(scipy.linalg.eigh(sub, eigvals_only=True, subset_by_index=(0, 0))[0])


def perturbed_ground(ground: np.ndarray, perp: np.ndarray, eps: float) -> np.ndarray:
    return np.sqrt(1.0 - eps * eps) * ground + eps * perp


def shifted_excited_energy(hamiltonian_matrix, ground: np.ndarray, perp: np.ndarray, eps: float) -> float:
    """Lowest eigenvalue of ``H - E~ |g~><g~|`` built from a perturbed ground state."""
    mat = np.asarray(hamiltonian_matrix)
    approx = perturbed_ground(np.asarray(ground), np.asarray(perp), eps)
    e_approx = float(approx @ mat @ approx)
    shifted = mat - e_approx * np.outer(approx, approx)
    return float(scipy.linalg.eigh(shifted, eigvals_only=True, subset_by_index=(0, 0))[0])


@dataclass(frozen=True)
class EpsilonStudy:
    epsilons: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float


def epsilon_scaling_study(
    hamiltonian_matrix,
    exact_ground: StateVector | np.ndarray,
    perp: StateVector | np.ndarray,
    epsilons: Sequence[float],
) -> EpsilonStudy:
    """Excited-energy error from a contaminated ground state, and its log-log slope.

    Points whose error is below 1e-12 are dropped before the fit.
    """
    mat = np.asarray(hamiltonian_matrix)
    g = exact_ground.amplitudes if isinstance(exact_ground, StateVector) else np.asarray(exact_ground, float)
    p = perp.amplitudes if isinstance(perp, StateVector) else np.asarray(perp, float)
    g = g / np.linalg.norm(g)
    p = p / np.linalg.norm(p)
    if abs(g @ p) > 1e-12:
        raise ValueError(f"perturbation is not orthogonal to the ground state (overlap {g @ p:.2e})")
    e0 = float(g @ mat @ g)
    if np.linalg.norm(mat @ g - e0 * g) > 1e-10:
        raise ValueError("exact_ground is not an eigenvector of the Hamiltonian")
    eps = np.asarray(epsilons, dtype=float)
    if eps.size < 2 or np.any(eps <= 0) or np.any(eps >= 1) or np.any(np.diff(eps) >= 0):
        raise ValueError("epsilons must be at least two strictly decreasing values in (0, 1)")

    baseline = shifted_excited_energy(mat, g, p, 0.0)
    errors = np.array([abs(shifted_excited_energy(mat, g, p, e) - baseline) for e in eps])
    keep = errors >= NOISE_FLOOR
    if keep.sum() < 2:
        raise ValueError("fewer than two errors above the numerical noise floor")
    slope = float(np.polyfit(np.log(eps[keep]), np.log(errors[keep]), 1)[0])
    return EpsilonStudy(tuple(eps), tuple(errors), slope)
