"""Excitation catalogs for UCCSD, UCCGSD, UpCCSD and k-UpCCGSD, and state preparation."""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from uccvqe.fock import AntisymmetricExp, SectorBasis, StateVector, generator_entries


class AnsatzKind(str, enum.Enum):
    UCCSD = "uccsd"
    UCCGSD = "uccgsd"
    UPCCSD = "upccsd"
    KUPCCGSD = "kupccgsd"

    @classmethod
    def parse(cls, value: Union[str, AnsatzKind]) -> AnsatzKind:
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown ansatz kind {value!r}; expected one of {[k.value for k in cls]}")


def _check_modes(n_spin_orbitals: int, *modes: int) -> None:
    for m in modes:
        if not 0 <= m < n_spin_orbitals:
            raise ValueError(f"spin-orbital index {m} out of range [0, {n_spin_orbitals})")


@dataclass(frozen=True, order=True)
class Single:
    """``a^dagger_q a_p`` with ``p < q`` of equal spin."""

    p: int
    q: int

    def operator_string(self):
        return ((self.q, True), (self.p, False))

    @property
    def support(self) -> frozenset[int]:
        return frozenset((self.p, self.q))

    def validate(self, n_spin_orbitals: int) -> None:
        _check_modes(n_spin_orbitals, self.p, self.q)
        if not self.p < self.q:
            raise ValueError(f"non-canonical single {self}: need p < q")
        if self.p % 2 != self.q % 2:
            raise ValueError(f"single {self} changes spin")


@dataclass(frozen=True, order=True)
class Double:
    """``a^dagger_a a^dagger_b a_j a_i`` with ``i < j``, ``a < b`` and ``(i, j) < (a, b)``."""

    i: int
    j: int
    a: int
    b: int

    def operator_string(self):
        return ((self.a, True), (self.b, True), (self.j, False), (self.i, False))

    @property
    def support(self) -> frozenset[int]:
        return frozenset((self.i, self.j, self.a, self.b))

    def validate(self, n_spin_orbitals: int) -> None:
        _check_modes(n_spin_orbitals, self.i, self.j, self.a, self.b)
        if not (self.i < self.j and self.a < self.b and (self.i, self.j) < (self.a, self.b)):
            raise ValueError(f"non-canonical double {self}")
        if self.i % 2 + self.j % 2 != self.a % 2 + self.b % 2:
            raise ValueError(f"double {self} changes spin projection")


@dataclass(frozen=True, order=True)
class PairDouble:
    """Moves an alpha-beta pair from spatial orbital ``P`` to ``Q > P``."""

    P: int
    Q: int

    def operator_string(self):
        P, Q = self.P, self.Q
        return ((2 * Q, True), (2 * Q + 1, True), (2 * P + 1, False), (2 * P, False))

    @property
    def support(self) -> frozenset[int]:
        return frozenset((2 * self.P, 2 * self.P + 1, 2 * self.Q, 2 * self.Q + 1))

    def validate(self, n_spin_orbitals: int) -> None:
        _check_modes(n_spin_orbitals, 2 * self.P, 2 * self.Q + 1)
        if not self.P < self.Q:
            raise ValueError(f"non-canonical pair double {self}: need P < Q")


Excitation = Union[Single, Double, PairDouble]


def canonical_double(i: int, j: int, a: int, b: int) -> Double:
    """Order a double; swapping the two pairs only flips the generator's sign."""
    pair1, pair2 = tuple(sorted((i, j))), tuple(sorted((a, b)))
    if pair2 < pair1:
        pair1, pair2 = pair2, pair1
    return Double(*pair1, *pair2)


@dataclass(frozen=True)
class Ansatz:
    kind: AnsatzKind
    n_spin_orbitals: int
    n_alpha: int
    n_beta: int
    k: int
    blocks: tuple[tuple[Excitation, ...], ...]

    @property
    def n_params(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def excitations(self) -> list[Excitation]:
        """All excitations, block-major, in parameter order."""
        return [exc for block in self.blocks for exc in block]

    def split_params(self, params) -> list[np.ndarray]:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {params.shape}")
        out, start = [], 0
        for block in self.blocks:
            out.append(params[start:start + len(block)])
            start += len(block)
        return out


def _generalized_singles(n_spatial: int) -> list[Single]:
    return sorted(
        Single(2 * p + s, 2 * q + s)
        for s in (0, 1)
        for p, q in itertools.combinations(range(n_spatial), 2)
    )


def build_ansatz(
    kind: Union[str, AnsatzKind], n_spin_orbitals: int, n_alpha: int, n_beta: int, k: int = 1
) -> Ansatz:
    """Excitation catalog and parameter layout for one ansatz family."""
    kind = AnsatzKind.parse(kind)
    if n_spin_orbitals < 2 or n_spin_orbitals % 2:
        raise ValueError(f"number of spin orbitals must be even and positive, got {n_spin_orbitals}")
    n_spatial = n_spin_orbitals // 2
    if not (0 <= n_alpha <= n_spatial and 0 <= n_beta <= n_spatial):
        raise ValueError(f"occupation ({n_alpha}, {n_beta}) out of range for {n_spatial} spatial orbitals")
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    if k != 1 and kind is not AnsatzKind.KUPCCGSD:
        raise ValueError(f"k={k} is only allowed for kupccgsd")

    occ = [2 * i for i in range(n_alpha)] + [2 * i + 1 for i in range(n_beta)]
    virt = [p for p in range(n_spin_orbitals) if p not in occ]
    ref_singles = sorted(Single(i, a) for i in occ for a in virt if i % 2 == a % 2)

    if kind is AnsatzKind.UCCSD:
        doubles = sorted(
            canonical_double(i, j, a, b)
            for i, j in itertools.combinations(sorted(occ), 2)
            for a, b in itertools.combinations(virt, 2)
            if i % 2 + j % 2 == a % 2 + b % 2
        )
        block = (*ref_singles, *doubles)
    elif kind is AnsatzKind.UCCGSD:
        pairs = list(itertools.combinations(range(n_spin_orbitals), 2))
        doubles = sorted(
            Double(*p1, *p2)
            for p1, p2 in itertools.combinations(pairs, 2)
            if p1[0] % 2 + p1[1] % 2 == p2[0] % 2 + p2[1] % 2
        )
        block = (*_generalized_singles(n_spatial), *doubles)
    elif kind is AnsatzKind.UPCCSD:
        n_closed = min(n_alpha, n_beta)
        n_open_top = max(n_alpha, n_beta)
        pairs = [PairDouble(P, Q) for P in range(n_closed) for Q in range(n_open_top, n_spatial)]
        block = (*ref_singles, *pairs)
    else:
        pairs = [PairDouble(P, Q) for P, Q in itertools.combinations(range(n_spatial), 2)]
        block = (*_generalized_singles(n_spatial), *pairs)

    block = tuple(block)
    assert len(set(block)) == len(block)
    return Ansatz(kind, n_spin_orbitals, n_alpha, n_beta, k, (block,) * k)


@dataclass(frozen=True)
class MultiDetReference:
    """Normalized linear combination of determinants."""

    terms: tuple[tuple[int, float], ...]

    def __init__(self, terms: Iterable[tuple[int, float]]):
        terms = tuple((int(d), float(c)) for d, c in terms)
        if not terms:
            raise ValueError("reference needs at least one determinant")
        dets = [d for d, _ in terms]
        if len(set(dets)) != len(dets):
            raise ValueError("duplicate determinant in reference")
        norm = np.sqrt(sum(c * c for _, c in terms))
        if norm == 0.0:
            raise ValueError("reference coefficients are all zero")
        object.__setattr__(self, "terms", tuple((d, c / norm) for d, c in terms))

    def to_vector(self, basis: SectorBasis) -> np.ndarray:
        vec = np.zeros(basis.dim)
        for det, coef in self.terms:
            idx = basis.index_of.get(det)
            if idx is None:
                raise ValueError(f"reference determinant {det:#b} is outside the sector")
            vec[idx] = coef
        return vec

    def describe(self) -> list[dict]:
        return [{"determinant": format(d, "b"), "coefficient": c} for d, c in self.terms]


def _aufbau_mask(n_alpha: int, n_beta: int) -> int:
    return sum(1 << (2 * i) for i in range(n_alpha)) | sum(1 << (2 * i + 1) for i in range(n_beta))


def _check_sector(n_spin_orbitals: int, n_alpha: int, n_beta: int) -> None:
    if n_spin_orbitals < 0 or n_spin_orbitals % 2:
        raise ValueError(f"number of spin orbitals must be even, got {n_spin_orbitals}")
    n_spatial = n_spin_orbitals // 2
    if not (0 <= n_alpha <= n_spatial and 0 <= n_beta <= n_spatial):
        raise ValueError(f"occupation ({n_alpha}, {n_beta}) out of range for {n_spatial} spatial orbitals")


def aufbau_reference(n_spin_orbitals: int, n_alpha: int, n_beta: int) -> MultiDetReference:
    _check_sector(n_spin_orbitals, n_alpha, n_beta)
    return MultiDetReference([(_aufbau_mask(n_alpha, n_beta), 1.0)])


def singly_excited_reference(
    n_spin_orbitals: int,
    n_alpha: int,
    n_beta: int,
    promotions: Sequence[tuple[int, int]],
) -> MultiDetReference:
    """Equal-weight combination of alpha- and beta-promoted aufbau determinants.

    Each spatial promotion ``(i, a)`` contributes two determinants, one
    moving the alpha electron of ``i`` into ``a`` and one moving the beta
    electron.
    """
    _check_sector(n_spin_orbitals, n_alpha, n_beta)
    if not promotions:
        raise ValueError("at least one promotion is required")
    n_spatial = n_spin_orbitals // 2
    base = _aufbau_mask(n_alpha, n_beta)
    dets = []
    for i, a in promotions:
        if not (0 <= i < n_spatial and 0 <= a < n_spatial):
            raise ValueError(f"promotion {i}>{a} out of range for {n_spatial} spatial orbitals")
        for spin in (0, 1):
            src, dst = 2 * i + spin, 2 * a + spin
            if not base >> src & 1:
                raise ValueError(f"promotion {i}>{a}: spatial orbital {i} is not occupied")
            if base >> dst & 1:
                raise ValueError(f"promotion {i}>{a}: spatial orbital {a} is already occupied")
            dets.append(base ^ (1 << src) ^ (1 << dst))
    if len(set(dets)) != len(dets):
        raise ValueError("repeated promotion in reference")
    return MultiDetReference([(d, 1.0) for d in dets])


class CompiledAnsatz:
    """Sparse generator pieces of an ansatz realized over one sector basis."""

    def __init__(self, ansatz: Ansatz, basis: SectorBasis):
        if (ansatz.n_spin_orbitals, ansatz.n_alpha, ansatz.n_beta) != (
            basis.n_spin_orbitals, basis.n_alpha, basis.n_beta
        ):
            raise ValueError("ansatz and basis describe different sectors")
        self.ansatz = ansatz
        self.basis = basis
        self.blocks = []
        for block in ansatz.blocks:
            rows, cols, vals, owner = [], [], [], []
            for idx, exc in enumerate(block):
                r, c, v = generator_entries(exc, basis)
                rows.append(r)
                cols.append(c)
                vals.append(v)
                owner.append(np.full(r.size, idx, dtype=np.intp))
            cat = (lambda xs, dt: np.concatenate(xs) if xs else np.zeros(0, dtype=dt))
            self.blocks.append(
                (cat(rows, np.intp), cat(cols, np.intp), cat(vals, float), cat(owner, np.intp), len(block))
            )

    def block_generator(self, b: int, params: np.ndarray) -> np.ndarray:
        rows, cols, vals, owner, _ = self.blocks[b]
        gen = np.zeros((self.basis.dim, self.basis.dim))
        np.add.at(gen, (rows, cols), vals * params[owner])
        return gen

    def block_exponentials(self, params) -> list[AntisymmetricExp]:
        return [
            AntisymmetricExp(self.block_generator(b, p))
            for b, p in enumerate(self.ansatz.split_params(params))
        ]

    def block_gradient(self, b: int, weights: np.ndarray) -> np.ndarray:
        """Contract per-entry weights ``Y[row, col]`` onto parameter slots."""
        rows, cols, vals, owner, n = self.blocks[b]
        return np.bincount(owner, weights=vals * weights[rows, cols], minlength=n)


@functools.lru_cache(maxsize=64)
def compile_ansatz(ansatz: Ansatz, basis: SectorBasis) -> CompiledAnsatz:
    return CompiledAnsatz(ansatz, basis)


def prepare_state(
    ansatz: Ansatz,
    params,
    reference: MultiDetReference,
    basis: SectorBasis,
) -> StateVector:
    """Apply the block exponentials to the reference, first block first."""
    compiled = compile_ansatz(ansatz, basis)
    vec = reference.to_vector(basis)
    for factor in compiled.block_exponentials(params):
        vec = factor.apply(vec)
    return StateVector(basis, vec)
