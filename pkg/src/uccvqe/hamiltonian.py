"""Molecular Hamiltonians: FCIDUMP I/O, lattice models and sector matrices."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, TextIO

import numpy as np

if TYPE_CHECKING:
    from uccvqe.fock import SectorBasis

DUPLICATE_TOL = 1e-10
WRITE_CUTOFF = 1e-12


class FcidumpError(ValueError):
    """Raised for malformed or inconsistent FCIDUMP input."""


@dataclass(frozen=True, eq=False)
class MolecularHamiltonian:
    """Spatial-orbital integrals in chemists' notation plus a core energy.

    Attributes
    ----------
    n_spatial : int
        Number of spatial orbitals.
    n_electrons : int
        Total electron count.
    ms2 : int
        Twice the spin projection, ``n_alpha - n_beta``.
    core_energy : float
        Constant energy shift (Hartree).
    one_body : ndarray, shape (n, n)
        Symmetric one-electron integrals ``h[p, q]``.
    two_body : ndarray, shape (n, n, n, n)
        Two-electron integrals ``(pq|rs)`` with 8-fold symmetry.
    """

    n_spatial: int
    n_electrons: int
    ms2: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray

    def __post_init__(self):
        n = self.n_spatial
        h = np.array(self.one_body, dtype=float)
        g = np.array(self.two_body, dtype=float)
        if h.shape != (n, n) or g.shape != (n, n, n, n):
            raise ValueError(f"integral shapes {h.shape}, {g.shape} do not match n_spatial={n}")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(g)) and np.isfinite(self.core_energy)):
            raise ValueError("integrals must be finite")
        if not np.array_equal(h, h.T):
            raise ValueError("one_body must be symmetric")
        for perm in _EIGHTFOLD:
            if not np.array_equal(g, g.transpose(perm)):
                raise ValueError("two_body lacks 8-fold permutational symmetry")
        if not 0 <= self.n_electrons <= 2 * n:
            raise ValueError(f"n_electrons={self.n_electrons} out of range for {n} orbitals")
        if abs(self.ms2) > self.n_electrons or (self.n_electrons - self.ms2) % 2:
            raise ValueError(f"ms2={self.ms2} inconsistent with n_electrons={self.n_electrons}")
        h.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "one_body", h)
        object.__setattr__(self, "two_body", g)
        object.__setattr__(self, "core_energy", float(self.core_energy))

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n_spatial

    @property
    def n_alpha(self) -> int:
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_beta(self) -> int:
        return (self.n_electrons - self.ms2) // 2

    def same_as(self, other: MolecularHamiltonian) -> bool:
        """Exact field-by-field equality of stored values."""
        return (
            self.n_spatial == other.n_spatial
            and self.n_electrons == other.n_electrons
            and self.ms2 == other.ms2
            and self.core_energy == other.core_energy
            and np.array_equal(self.one_body, other.one_body)
            and np.array_equal(self.two_body, other.two_body)
        )


# axis permutations generating the 8-fold symmetry of (pq|rs)
_EIGHTFOLD = [
    (0, 1, 2, 3),
    (1, 0, 2, 3),
    (0, 1, 3, 2),
    (1, 0, 3, 2),
    (2, 3, 0, 1),
    (3, 2, 0, 1),
    (2, 3, 1, 0),
    (3, 2, 1, 0),
]


def _orbit(p: int, q: int, r: int, s: int) -> set[tuple[int, int, int, int]]:
    return {
        (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
        (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
    }


_HEADER_RE = re.compile(r"&FCI(.*?)(&END|/)", re.IGNORECASE | re.DOTALL)
_KEY_RE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z_][A-Za-z0-9_]*\s*=|$)", re.DOTALL)


def _parse_header(header: str) -> dict[str, str]:
    fields = {}
    for key, value in _KEY_RE.findall(header.strip()):
        fields[key.upper()] = value.strip().rstrip(",").strip()
    return fields


def parse_fcidump(source: str | TextIO) -> MolecularHamiltonian:
    """Parse FCIDUMP text (or an open text stream) into a Hamiltonian.

    Records may list any single representative of a symmetry class; the
    rest of the class is filled in.  Records that repeat a position with a
    value differing by more than 1e-10 Hartree are rejected.
    """
    text = source if isinstance(source, str) else source.read()
    match = _HEADER_RE.search(text)
    if match is None:
        raise FcidumpError("missing &FCI ... &END header")
    fields = _parse_header(match.group(1))
    try:
        norb = int(fields["NORB"])
        nelec = int(fields["NELEC"])
    except KeyError as exc:
        raise FcidumpError(f"missing header field {exc.args[0]}") from None
    except ValueError:
        raise FcidumpError("non-integer NORB/NELEC in header") from None
    try:
        ms2 = int(fields.get("MS2", "0"))
    except ValueError:
        raise FcidumpError("non-integer MS2 in header") from None
    if norb < 1:
        raise FcidumpError(f"NORB must be positive, got {norb}")

    h = np.zeros((norb, norb))
    g = np.zeros((norb, norb, norb, norb))
    seen_h: dict[tuple[int, int], float] = {}
    seen_g: dict[tuple[int, int, int, int], float] = {}
    core = 0.0
    seen_core: float | None = None

    body = text[match.end():]
    for lineno, line in enumerate(body.splitlines(), start=1):
        parts = line.split()
        if not parts:
            continue
        if len(parts) != 5:
            raise FcidumpError(f"record {lineno}: expected 'value i j k l', got {line.strip()!r}")
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(x) for x in parts[1:])
        except ValueError:
            raise FcidumpError(f"record {lineno}: non-numeric field in {line.strip()!r}") from None
        if not np.isfinite(value):
            raise FcidumpError(f"record {lineno}: non-finite value")
        for idx in (i, j, k, l):
            if idx < 0 or idx > norb:
                raise FcidumpError(f"record {lineno}: orbital index out of range [1, {norb}]: {idx}")

        if i > 0 and j == k == l == 0:
            # orbital energy records carry no integrals
            continue
        if i == j == k == l == 0:
            if seen_core is not None and abs(seen_core - value) > DUPLICATE_TOL:
                raise FcidumpError(f"record {lineno}: conflicting core energy")
            seen_core = core = value
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FcidumpError(f"record {lineno}: orbital index out of range [1, {norb}]: 0")
            for key in {(i - 1, j - 1), (j - 1, i - 1)}:
                if key in seen_h and abs(seen_h[key] - value) > DUPLICATE_TOL:
                    raise FcidumpError(f"record {lineno}: conflicting duplicate one-body record {i} {j}")
                seen_h[key] = value
                h[key] = value
        else:
            if 0 in (i, j, k, l):
                raise FcidumpError(f"record {lineno}: orbital index out of range [1, {norb}]: 0")
            for key in _orbit(i - 1, j - 1, k - 1, l - 1):
                if key in seen_g and abs(seen_g[key] - value) > DUPLICATE_TOL:
                    raise FcidumpError(
                        f"record {lineno}: conflicting duplicate two-body record {i} {j} {k} {l}"
                    )
                seen_g[key] = value
                g[key] = value

    try:
        return MolecularHamiltonian(norb, nelec, ms2, core, h, g)
    except ValueError as exc:
        raise FcidumpError(str(exc)) from None


def _representatives(n: int) -> Iterator[tuple[int, int, int, int]]:
    for p, q in itertools.combinations_with_replacement(range(n), 2):
        for r, s in itertools.combinations_with_replacement(range(n), 2):
            if (p, q) <= (r, s):
                yield p, q, r, s


def write_fcidump(ham: MolecularHamiltonian) -> str:
    """Serialize to FCIDUMP text, one record per symmetry class."""
    n = ham.n_spatial
    lines = [
        f"&FCI NORB={n}, NELEC={ham.n_electrons}, MS2={ham.ms2},",
        "  ORBSYM=" + ",".join(["1"] * n) + ",",
        "  ISYM=1,",
        "&END",
    ]
    g = ham.two_body
    for p, q, r, s in _representatives(n):
        v = g[p, q, r, s]
        if abs(v) > WRITE_CUTOFF:
            lines.append(f"{float(v)!r:>24} {p + 1:4d} {q + 1:4d} {r + 1:4d} {s + 1:4d}")
    h = ham.one_body
    for p, q in itertools.combinations_with_replacement(range(n), 2):
        v = h[p, q]
        if abs(v) > WRITE_CUTOFF:
            lines.append(f"{float(v)!r:>24} {p + 1:4d} {q + 1:4d} {0:4d} {0:4d}")
    lines.append(f"{float(ham.core_energy)!r:>24} {0:4d} {0:4d} {0:4d} {0:4d}")
    return "\n".join(lines) + "\n"


def hubbard_hamiltonian(n_sites: int, t: float, U: float) -> MolecularHamiltonian:
    """Open-boundary 1D Hubbard chain at half filling in the site basis."""
    if n_sites < 1:
        raise ValueError("n_sites must be at least 1")
    h = np.zeros((n_sites, n_sites))
    for i in range(n_sites - 1):
        h[i, i + 1] = h[i + 1, i] = -t
    g = np.zeros((n_sites,) * 4)
    for i in range(n_sites):
        g[i, i, i, i] = U
    return MolecularHamiltonian(n_sites, n_sites, n_sites % 2, 0.0, h, g)


def spin_orbital_integrals(ham: MolecularHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """Spin-orbital one-body matrix and antisymmetrized ``<pq||rs>`` tensor.

    Spin orbital ``2*i + sigma`` holds spatial orbital ``i`` with spin
    ``sigma`` (0 for alpha, 1 for beta).
    """
    n = ham.n_spatial
    nso = 2 * n
    spin = np.arange(nso) % 2
    spatial = np.arange(nso) // 2
    same = spin[:, None] == spin[None, :]
    h1 = np.where(same, ham.one_body[np.ix_(spatial, spatial)], 0.0)
    # <pq|rs> = (pr|qs) delta(sp, sr) delta(sq, ss)
    chem = ham.two_body[np.ix_(spatial, spatial, spatial, spatial)]
    phys = chem.transpose(0, 2, 1, 3) * same[:, None, :, None] * same[None, :, None, :]
    return h1, phys - phys.transpose(0, 1, 3, 2)


def sector_matrix(ham: MolecularHamiltonian, basis: SectorBasis) -> np.ndarray:
    """Dense Hamiltonian matrix over a determinant sector (Slater-Condon rules)."""
    from uccvqe.fock import apply_operators, occupied

    nso = basis.n_spin_orbitals
    if nso != ham.n_spin_orbitals:
        raise ValueError(
            f"basis has {nso} spin orbitals but Hamiltonian has {ham.n_spin_orbitals}"
        )
    h1, g = spin_orbital_integrals(ham)
    dim = basis.dim
    mat = np.zeros((dim, dim))
    index_of = basis.index_of
    spin = np.arange(nso) % 2

    for col, det in enumerate(basis.determinants):
        occ = occupied(det)
        virt = [p for p in range(nso) if not det >> p & 1]
        occ_arr = np.array(occ, dtype=int)
        diag = ham.core_energy + h1[occ_arr, occ_arr].sum()
        if occ:
            diag += 0.5 * np.einsum("ijij->", g[np.ix_(occ_arr, occ_arr, occ_arr, occ_arr)])
        mat[col, col] = diag

        for i in occ:
            for a in virt:
                if spin[i] != spin[a]:
                    continue
                sign, new = apply_operators(((a, True), (i, False)), det)
                val = h1[a, i] + g[a, occ_arr, i, occ_arr].sum()
                if val != 0.0:
                    mat[index_of[new], col] += sign * val

        for ii, jj in itertools.combinations(occ, 2):
            for aa, bb in itertools.combinations(virt, 2):
                if spin[ii] + spin[jj] != spin[aa] + spin[bb]:
                    continue
                val = g[aa, bb, ii, jj]
                if val == 0.0:
                    continue
                sign, new = apply_operators(((aa, True), (bb, True), (jj, False), (ii, False)), det)
                mat[index_of[new], col] += sign * val

    return 0.5 * (mat + mat.T)
