"""Determinant sectors, fermionic operator strings and exponential actions.

Spin orbital ``s = 2*i + sigma`` (alpha on even bits, beta on odd bits).
Determinants are integer bitmasks, listed in ascending integer order.
A creation or annihilation operator on mode ``p`` picks up the sign
``(-1) ** popcount(D & (2**p - 1))``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse
import scipy.sparse.linalg


def popcount(x: int) -> int:
    return bin(x).count("1")


def occupied(det: int) -> list[int]:
    """Indices of set bits, ascending."""
    out = []
    p = 0
    while det:
        if det & 1:
            out.append(p)
        det >>= 1
        p += 1
    return out


def apply_operators(ops: Sequence[tuple[int, bool]], det: int) -> tuple[int, int]:
    """Apply a product of ladder operators to a determinant.

    ``ops`` is written left to right as in the operator product, so the
    last entry acts first.  Each entry is ``(mode, is_creation)``.

    Returns ``(sign, new_det)``; ``sign`` is 0 when the string annihilates
    the determinant.
    """
    sign = 1
    for mode, create in reversed(ops):
        bit = 1 << mode
        if bool(det & bit) == create:
            return 0, det
        if popcount(det & (bit - 1)) & 1:
            sign = -sign
        det ^= bit
    return sign, det


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Ordered determinant basis with fixed alpha and beta electron counts."""

    n_spin_orbitals: int
    n_alpha: int
    n_beta: int
    determinants: tuple[int, ...] = field(repr=False)
    index_of: dict[int, int] = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.determinants)

    def __len__(self) -> int:
        return len(self.determinants)

    def contains(self, det: int) -> bool:
        return det in self.index_of

    def basis_vector(self, det: int) -> np.ndarray:
        vec = np.zeros(self.dim)
        vec[self.index_of[det]] = 1.0
        return vec


def _spin_masks(n_spatial: int, n_occ: int, offset: int) -> list[int]:
    return [
        sum(1 << (2 * i + offset) for i in combo)
        for combo in itertools.combinations(range(n_spatial), n_occ)
    ]


def sector_basis(n_spin_orbitals: int, n_alpha: int, n_beta: int) -> SectorBasis:
    """All determinants with ``n_alpha`` even bits and ``n_beta`` odd bits set."""
    if n_spin_orbitals < 0 or n_spin_orbitals % 2:
        raise ValueError(f"number of spin orbitals must be even, got {n_spin_orbitals}")
    n_spatial = n_spin_orbitals // 2
    for label, n in (("n_alpha", n_alpha), ("n_beta", n_beta)):
        if not 0 <= n <= n_spatial:
            raise ValueError(f"{label}={n} exceeds {n_spatial} spatial orbitals")
    dets = sorted(
        a | b
        for a in _spin_masks(n_spatial, n_alpha, 0)
        for b in _spin_masks(n_spatial, n_beta, 1)
    )
    assert len(dets) == comb(n_spatial, n_alpha) * comb(n_spatial, n_beta)
    return SectorBasis(
        n_spin_orbitals, n_alpha, n_beta, tuple(dets), {d: i for i, d in enumerate(dets)}
    )


@dataclass(frozen=True, eq=False)
class StateVector:
    """Real amplitudes over a sector basis."""

    basis: SectorBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=float)
        if amps.shape != (self.basis.dim,):
            raise ValueError(
                f"amplitude vector of length {amps.shape} does not match basis dimension {self.basis.dim}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def dot(self, other: StateVector) -> float:
        if other.basis is not self.basis and other.basis.determinants != self.basis.determinants:
            raise ValueError("states live in different bases")
        return float(self.amplitudes @ other.amplitudes)


def _ladder_string(exc) -> tuple[tuple[int, bool], ...]:
    """Operator string of an excitation (import-cycle-free duck typing)."""
    return exc.operator_string()


def generator_entries(exc, basis: SectorBasis) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sparse (rows, cols, values) of ``tau - tau^dagger`` for one excitation."""
    exc.validate(basis.n_spin_orbitals)
    ops = _ladder_string(exc)
    adjoint = tuple((m, not c) for m, c in reversed(ops))
    rows, cols, vals = [], [], []
    index_of = basis.index_of
    for col, det in enumerate(basis.determinants):
        for string, weight in ((ops, 1), (adjoint, -1)):
            sign, new = apply_operators(string, det)
            if sign:
                rows.append(index_of[new])
                cols.append(col)
                vals.append(float(weight * sign))
    return np.array(rows, dtype=np.intp), np.array(cols, dtype=np.intp), np.array(vals)


def excitation_generator(exc, basis: SectorBasis) -> scipy.sparse.csr_array:
    """Antisymmetric matrix of ``tau - tau^dagger`` for a single excitation."""
    rows, cols, vals = generator_entries(exc, basis)
    return scipy.sparse.csr_array((vals, (rows, cols)), shape=(basis.dim, basis.dim))


def assemble_generator(
    excitations: Sequence, params: Iterable[float], basis: SectorBasis
) -> scipy.sparse.csr_array:
    """Sum of ``t_mu * G_mu`` over an excitation list."""
    params = np.asarray(list(params), dtype=float)
    if len(params) != len(excitations):
        raise ValueError(f"{len(params)} parameters for {len(excitations)} excitations")
    dim = basis.dim
    total = scipy.sparse.csr_array((dim, dim))
    for exc, t in zip(excitations, params):
        if t != 0.0:
            total = total + t * excitation_generator(exc, basis)
    return total


def expmv(generator, state: StateVector | np.ndarray) -> StateVector | np.ndarray:
    """Action of ``exp(G)`` on a vector, for antisymmetric ``G``.

    Accepts a sparse or dense generator.  Returns the same container type
    it was given.
    """
    vec = state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=float)
    if generator.shape != (vec.size, vec.size):
        raise ValueError(f"generator shape {generator.shape} does not match vector length {vec.size}")
    if scipy.sparse.issparse(generator):
        if generator.nnz == 0:
            out = vec.copy()
        else:
            out = scipy.sparse.linalg.expm_multiply(scipy.sparse.csc_array(generator), vec)
    else:
        out = AntisymmetricExp(np.asarray(generator)).apply(vec)
    if isinstance(state, StateVector):
        return StateVector(state.basis, out)
    return out


class AntisymmetricExp:
    """Spectral form of ``exp(G)`` for a dense real antisymmetric ``G``.

    ``i*G`` is Hermitian, so ``G = V diag(i*w) V^H`` with unitary ``V``.
    Keeps the decomposition around for Frechet-derivative contractions.
    """

    def __init__(self, generator: np.ndarray):
        gen = np.asarray(generator, dtype=float)
        self.zero = not np.any(gen)
        self.dim = gen.shape[0]
        if self.zero:
            return
        w, v = np.linalg.eigh(1j * gen)
        # G = V diag(-i w) V^H
        self.lam = -1j * w
        self.vecs = v
        self.phase = np.exp(self.lam)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        if self.zero:
            return np.array(vec, dtype=float, copy=True)
        return (self.vecs @ (self.phase * (self.vecs.conj().T @ vec))).real

    def apply_transpose(self, vec: np.ndarray) -> np.ndarray:
        """``exp(G)^T v = exp(-G) v``."""
        if self.zero:
            return np.array(vec, dtype=float, copy=True)
        return (self.vecs @ (self.phase.conj() * (self.vecs.conj().T @ vec))).real

    def frechet_weights(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        """Matrix ``Y`` with ``left^T dexp(G)[E] right = sum(E * Y)`` for any ``E``."""
        if self.zero:
            # derivative of exp at 0 is the identity map
            return np.outer(left, right)
        lam = self.lam
        diff = lam[:, None] - lam[None, :]
        ediff = self.phase[:, None] - self.phase[None, :]
        close = np.abs(diff) < 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(close, self.phase[:, None], ediff / np.where(close, 1.0, diff))
        a = self.vecs.conj().T @ left
        c = self.vecs.conj().T @ right
        x = phi * np.outer(a.conj(), c)
        return (self.vecs.conj() @ x @ self.vecs.T).real
