"""Exact sector diagonalization and curve error metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from uccvqe.fock import SectorBasis, StateVector

DENSE_LIMIT = 4096
DEGENERACY_TOL = 1e-10
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class Eigenpair:
    energy: float
    state: StateVector
    degenerate: bool = False


def _fix_sign(vecs: np.ndarray) -> np.ndarray:
    # largest-magnitude component positive, first index on ties
    idx = np.argmax(np.abs(vecs) > np.abs(vecs).max(axis=0) - 1e-12, axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def lowest_eigenpairs(matrix, n_states: int, dense_limit: int = DENSE_LIMIT) -> tuple[np.ndarray, np.ndarray]:
    """Smallest ``n_states`` eigenvalues and eigenvectors of a symmetric matrix.

    Dense LAPACK below ``dense_limit``; ARPACK Lanczos above, with a dense
    fallback when it fails to converge.
    """
    dim = matrix.shape[0]
    if not 1 <= n_states <= dim:
        raise ValueError(f"n_states={n_states} out of range for dimension {dim}")
    if dim < dense_limit or n_states >= dim - 1:
        dense = matrix.toarray() if scipy.sparse.issparse(matrix) else np.asarray(matrix)
        vals, vecs = scipy.linalg.eigh(dense, subset_by_index=(0, n_states - 1))
    else:
        try:
            vals, vecs = scipy.sparse.linalg.eigsh(matrix, k=n_states, which="SA", tol=1e-13)
        except scipy.sparse.linalg.ArpackNoConvergence:
            dense = matrix.toarray() if scipy.sparse.issparse(matrix) else np.asarray(matrix)
            vals, vecs = scipy.linalg.eigh(dense, subset_by_index=(0, n_states - 1))
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        # restore orthonormality inside degenerate clusters
        vecs, _ = np.linalg.qr(vecs)
    return vals, _fix_sign(vecs)


def fci_lowest(hamiltonian_matrix, n_states: int, basis: SectorBasis) -> list[Eigenpair]:
    """Lowest exact levels of a sector Hamiltonian.

    Levels within 1e-10 Hartree of a neighbour are flagged ``degenerate``.
    """
    vals, vecs = lowest_eigenpairs(hamiltonian_matrix, n_states)
    hv = hamiltonian_matrix @ vecs
    residual = np.linalg.norm(hv - vecs * vals, axis=0)
    if np.any(residual > RESIDUAL_TOL):
        raise RuntimeError(f"eigensolver residual {residual.max():.2e} exceeds {RESIDUAL_TOL}")
    out = []
    for n in range(n_states):
        degenerate = (n > 0 and vals[n] - vals[n - 1] < DEGENERACY_TOL) or (
            n + 1 < n_states and vals[n + 1] - vals[n] < DEGENERACY_TOL
        )
        out.append(Eigenpair(float(vals[n]), StateVector(basis, vecs[:, n]), bool(degenerate)))
    return out


def npe(errors: Sequence[float]) -> float:
    """Non-parallelity error: spread of the error along a curve."""
    errors = list(errors)
    if not errors:
        raise ValueError("npe of an empty error list")
    return float(max(errors) - min(errors))


@dataclass(frozen=True)
class CurveErrors:
    """Method-minus-FCI errors (mEh) along a curve."""

    labels: tuple[str, ...]
    errors: tuple[float, ...]
    npe: float = field(init=False)

    def __post_init__(self):
        if len(self.labels) != len(self.errors):
            raise ValueError("labels and errors differ in length")
        if not all(np.isfinite(self.errors)):
            raise ValueError("errors must be finite")
        object.__setattr__(self, "npe", npe(self.errors))

    @classmethod
    def from_energies(cls, labels, method_energies, fci_energies) -> CurveErrors:
        errors = [1000.0 * (m - f) for m, f in zip(method_energies, fci_energies)]
        return cls(tuple(labels), tuple(errors))
