"""Variational energy minimization over UCC amplitudes."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.optimize
import scipy.sparse
import scipy.sparse.linalg

from uccvqe.ansatz import Ansatz, MultiDetReference, compile_ansatz
from uccvqe.fock import SectorBasis, StateVector, excitation_generator

logger = logging.getLogger(__name__)

GRAD_TOL = 1e-8
ENERGY_TOL = 1e-10
TIE_TOL = 1e-10
DEFAULT_RESTARTS = 50
DEFAULT_INIT_SCALE = 0.1
DEFAULT_MAXITER = 2000
GRADIENT_MODES = ("adjoint", "exact", "finite_difference")


@dataclass(frozen=True, eq=False)
class VqeProblem:
    """Sector Hamiltonian plus ansatz and reference.

    ``penalty_mu`` and ``penalty_state`` add ``mu * |<target|psi>|^2`` to
    the cost; the plain problem leaves them unset.
    """

    hamiltonian_matrix: np.ndarray
    ansatz: Ansatz
    reference: MultiDetReference
    basis: SectorBasis
    penalty_mu: float = 0.0
    penalty_state: Optional[np.ndarray] = None

    def __post_init__(self):
        dim = self.basis.dim
        if self.hamiltonian_matrix.shape != (dim, dim):
            raise ValueError(
                f"Hamiltonian shape {self.hamiltonian_matrix.shape} does not match basis dimension {dim}"
            )
        if self.penalty_state is not None and np.shape(self.penalty_state) != (dim,):
            raise ValueError("penalty state does not match basis dimension")
        # raises on sector mismatch
        compile_ansatz(self.ansatz, self.basis)
        object.__setattr__(self, "_ref", self.reference.to_vector(self.basis))

    @property
    def n_params(self) -> int:
        return self.ansatz.n_params

    def _check(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {params.shape}")
        return params

    def state(self, params) -> np.ndarray:
        compiled = compile_ansatz(self.ansatz, self.basis)
        vec = self._ref
        for factor in compiled.block_exponentials(self._check(params)):
            vec = factor.apply(vec)
        return vec

    def cost_action(self, vec: np.ndarray) -> np.ndarray:
        out = self.hamiltonian_matrix @ vec
        if self.penalty_state is not None and self.penalty_mu != 0.0:
            out = out + self.penalty_mu * (self.penalty_state @ vec) * self.penalty_state
        return out

    def cost(self, params) -> float:
        vec = self.state(params)
        return float(vec @ self.cost_action(vec))

    def cost_and_gradient(self, params) -> tuple[float, np.ndarray]:
        """Cost and its exact gradient by reverse propagation through the blocks."""
        params = self._check(params)
        compiled = compile_ansatz(self.ansatz, self.basis)
        factors = compiled.block_exponentials(params)
        inputs = [self._ref]
        for factor in factors:
            inputs.append(factor.apply(inputs[-1]))
        psi = inputs[-1]
        adj = self.cost_action(psi)
        value = float(psi @ adj)
        grads = [None] * len(factors)
        for b in range(len(factors) - 1, -1, -1):
            weights = factors[b].frechet_weights(adj, inputs[b])
            grads[b] = 2.0 * compiled.block_gradient(b, weights)
            adj = factors[b].apply_transpose(adj)
        grad = np.concatenate(grads) if grads else np.zeros(0)
        return value, grad


def objective(problem: VqeProblem, params) -> float:
    """Energy expectation value of the prepared (unit-norm) state."""
    vec = problem.state(params)
    return float(vec @ (problem.hamiltonian_matrix @ vec))


def _doubled_matrix_gradient(problem: VqeProblem, params: np.ndarray) -> np.ndarray:
    """Gradient via ``exp([[G, dG], [0, G]])`` applied to ``[0, v]`` per amplitude."""
    ansatz, basis = problem.ansatz, problem.basis
    compiled = compile_ansatz(ansatz, basis)
    blocks = ansatz.split_params(params)
    gens = [scipy.sparse.csc_array(compiled.block_generator(b, p)) for b, p in enumerate(blocks)]

    def step(g, vec):
        return scipy.sparse.linalg.expm_multiply(g, vec) if g.nnz else vec

    def propagate(vec, start):
        for g in gens[start:]:
            vec = step(g, vec)
        return vec

    inputs = [problem._ref]
    for g in gens:
        inputs.append(step(g, inputs[-1]))
    psi = inputs[-1]
    adj = problem.cost_action(psi)
    dim = basis.dim
    zero = scipy.sparse.csc_array((dim, dim))
    grad = []
    for b, block in enumerate(ansatz.blocks):
        for exc in block:
            d_gen = excitation_generator(exc, basis)
            big = scipy.sparse.block_array([[gens[b], d_gen], [zero, gens[b]]], format="csc")
            stacked = np.concatenate([np.zeros(dim), inputs[b]])
            top = scipy.sparse.linalg.expm_multiply(big, stacked)[:dim]
            grad.append(2.0 * adj @ propagate(top, b + 1))
    return np.array(grad)


def _finite_difference_gradient(problem: VqeProblem, params: np.ndarray) -> np.ndarray:
    grad = np.zeros(params.size)
    for mu in range(params.size):
        h = 1e-5 * max(1.0, abs(params[mu]))
        up, down = params.copy(), params.copy()
        up[mu] += h
        down[mu] -= h
        grad[mu] = (problem.cost(up) - problem.cost(down)) / (2 * h)
    return grad


def gradient(problem: VqeProblem, params, mode: str = "adjoint") -> np.ndarray:
    """Derivative of the cost with respect to every amplitude.

    ``mode`` is one of ``"adjoint"`` (spectral Frechet derivative with
    reverse propagation), ``"exact"`` (block-triangular doubled matrix
    exponential per amplitude) or ``"finite_difference"`` (central
    differences, step ``1e-5 * max(1, |t|)``).
    """
    params = problem._check(params)
    if mode == "adjoint":
        return problem.cost_and_gradient(params)[1]
    if mode == "exact":
        return _doubled_matrix_gradient(problem, params)
    if mode == "finite_difference":
        return _finite_difference_gradient(problem, params)
    raise ValueError(f"unknown gradient mode {mode!r}; expected one of {GRADIENT_MODES}")


@dataclass(frozen=True)
class RestartOutcome:
    index: int
    energy: float
    params: np.ndarray
    gradient_norm: float
    converged: bool
    n_iterations: int
    message: str


@dataclass(frozen=True)
class VqeResult:
    energy: float
    params: np.ndarray
    gradient_norm: float
    restart_index: int
    converged: bool
    restart_energies: tuple[float, ...]
    restart_converged: tuple[bool, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "params": [float(x) for x in self.params],
            "gradient_norm": self.gradient_norm,
            "restart_index": self.restart_index,
            "converged": self.converged,
            "restart_energies": list(self.restart_energies),
            "restart_converged": list(self.restart_converged),
        }


class NoConvergence(RuntimeError):
    """No restart met the convergence criteria; ``result`` holds the best attempt."""

    def __init__(self, result: VqeResult):
        super().__init__(
            f"no restart converged; best energy {result.energy:.10f} "
            f"(gradient norm {result.gradient_norm:.2e})"
        )
        self.result = result


def starting_point(n_params: int, seed: int, restart_index: int, init_scale: float) -> np.ndarray:
    """Restart 0 is all zeros; others draw from U(-init_scale, init_scale)."""
    if restart_index == 0:
        return np.zeros(n_params)
    rng = np.random.default_rng([seed, restart_index])
    return rng.uniform(-init_scale, init_scale, size=n_params)


def minimize_from(
    problem: VqeProblem, x0, index: int = 0, maxiter: int = DEFAULT_MAXITER
) -> RestartOutcome:
    """One BFGS run.

    BFGS runs until its own gradient test (2-norm 1e-8), a line-search
    failure or ``maxiter``.  The run counts as converged when the final
    gradient norm is at most 1e-8 or the last two accepted steps differ in
    energy by at most 1e-10.
    """
    x0 = problem._check(x0)
    if problem.n_params == 0:
        value = problem.cost(x0)
        return RestartOutcome(index, value, x0, 0.0, True, 0, "no parameters")

    history: list[float] = [problem.cost(x0)]

    def callback(intermediate_result):
        history.append(float(intermediate_result.fun))

    res = scipy.optimize.minimize(
        problem.cost_and_gradient,
        x0,
        jac=True,
        method="BFGS",
        callback=callback,
        options={"gtol": GRAD_TOL, "norm": 2, "maxiter": maxiter},
    )
    x = np.array(res.x, copy=True)
    value, grad = problem.cost_and_gradient(x)
    gnorm = float(np.linalg.norm(grad))
    plateau = len(history) >= 2 and abs(history[-2] - history[-1]) <= ENERGY_TOL
    converged = gnorm <= GRAD_TOL or plateau
    return RestartOutcome(index, value, x, gnorm, converged, int(res.nit), str(res.message))


def _select(outcomes: list[RestartOutcome]) -> RestartOutcome:
    best_energy = min(o.energy for o in outcomes)
    return min(
        (o for o in outcomes if o.energy <= best_energy + TIE_TOL), key=lambda o: o.index
    )


def minimize_multistart(
    problem: VqeProblem,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    init_scale: float = DEFAULT_INIT_SCALE,
    *,
    initial_params=None,
    n_jobs: int = 1,
    maxiter: int = DEFAULT_MAXITER,
    raise_on_failure: bool = True,
) -> VqeResult:
    """Best-of-``restarts`` BFGS minimization.

    ``initial_params``, when given, replaces the all-zero start of restart 0
    (used to warm-start from a smaller ansatz).  Restarts may run on
    ``n_jobs`` threads; the result does not depend on ``n_jobs``.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be at least 1, got {restarts}")
    starts = [starting_point(problem.n_params, seed, r, init_scale) for r in range(restarts)]
    if initial_params is not None:
        starts[0] = problem._check(initial_params).copy()

    def run(r):
        out = minimize_from(problem, starts[r], r, maxiter)
        logger.debug("restart %d: E=%.12f |g|=%.2e converged=%s", r, out.energy, out.gradient_norm, out.converged)
        return out

    if n_jobs > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(run, range(restarts)))
    else:
        outcomes = [run(r) for r in range(restarts)]

    best = _select(outcomes)
    result = VqeResult(
        energy=best.energy,
        params=best.params,
        gradient_norm=best.gradient_norm,
        restart_index=best.index,
        converged=best.converged,
        restart_energies=tuple(o.energy for o in outcomes),
        restart_converged=tuple(o.converged for o in outcomes),
    )
    if raise_on_failure and not any(o.converged for o in outcomes):
        raise NoConvergence(result)
    return result


def vqe_problem(hamiltonian_matrix, ansatz: Ansatz, reference: MultiDetReference, basis: SectorBasis) -> VqeProblem:
    return VqeProblem(np.asarray(hamiltonian_matrix), ansatz, reference, basis)


def prepared_state(problem: VqeProblem, params) -> StateVector:
    return StateVector(problem.basis, problem.state(params))
