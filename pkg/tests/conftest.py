import itertools
from functools import reduce

import numpy as np
import pytest

from uccvqe.fock import sector_basis
from uccvqe.hamiltonian import MolecularHamiltonian, hubbard_hamiltonian, sector_matrix


def hubbard_two_site_levels(t, U):
    """Closed-form spectrum of the two-site Hubbard dimer with one electron per spin."""
    root = np.sqrt((U / 2) ** 2 + 4 * t * t)
    return np.sort([U / 2 - root, 0.0, U, U / 2 + root])


def random_hamiltonian(n_spatial, n_electrons, ms2=0, seed=0, scale=0.5):
    rng = np.random.default_rng(seed)
    h = rng.normal(scale=scale, size=(n_spatial, n_spatial))
    h = np.triu(h) + np.triu(h, 1).T
    g = np.zeros((n_spatial,) * 4)
    for p, q, r, s in itertools.product(range(n_spatial), repeat=4):
        if (p, q, r, s) > (q, p, r, s) or (p, q, r, s) > (p, q, s, r) or (p, q, r, s) > (r, s, p, q):
            continue
        v = rng.normal(scale=scale)
        for idx in {
            (p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
            (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p),
        }:
            g[idx] = v
    return MolecularHamiltonian(n_spatial, n_electrons, ms2, rng.normal(), h, g)


def enumerate_canonical(kind, N, na, nb):
    """Brute force over all index tuples; shares no code with build_ansatz."""
    spin = lambda p: p % 2
    occ = {2 * i for i in range(na)} | {2 * i + 1 for i in range(nb)}
    singles, doubles, pairs = set(), set(), set()
    for p, q in itertools.product(range(N), repeat=2):
        if p < q and spin(p) == spin(q):
            if kind in ("uccgsd", "kupccgsd") or (p in occ and q not in occ):
                singles.add(("S", p, q))
    if kind in ("uccsd", "uccgsd"):
        for i, j, a, b in itertools.product(range(N), repeat=4):
            if not (i < j and a < b and (i, j) < (a, b)):
                continue
            if spin(i) + spin(j) != spin(a) + spin(b):
                continue
            if kind == "uccsd":
                holes = {i, j} <= occ and not ({a, b} & occ)
                parts = {a, b} <= occ and not ({i, j} & occ)
                if not (holes or parts):
                    continue
            doubles.add(("D", i, j, a, b))
    if kind in ("upccsd", "kupccgsd"):
        for P, Q in itertools.product(range(N // 2), repeat=2):
            if P >= Q:
                continue
            if kind == "upccsd" and not (P < min(na, nb) and Q >= max(na, nb)):
                continue
            pairs.add(("P", P, Q))
    return singles, doubles, pairs


# Jordan-Wigner matrices, built without any of the package's sign code.
_Z = np.diag([1.0, -1.0])
_I = np.eye(2)
_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])  # |1> -> |0> in (|0>, |1>) ordering


def jw_annihilators(n_modes):
    """``a_p`` on the 2**n Fock space; mode ``p`` is bit ``p`` of the state index."""
    ops = []
    for p in range(n_modes):
        # kron order: highest mode first so that mode p is bit p of the index
        factors = [_I] * (n_modes - 1 - p) + [_LOWER] + [_Z] * p
        ops.append(reduce(np.kron, factors) if factors else np.eye(1))
    return ops


def fock_vector(det, annihilators):
    """``a+_{p1} a+_{p2} ... |vac>`` with ``p1 < p2 < ...``."""
    dim = annihilators[0].shape[0]
    vec = np.zeros(dim)
    vec[0] = 1.0
    modes = [p for p in range(len(annihilators)) if det >> p & 1]
    for p in reversed(modes):
        vec = annihilators[p].T @ vec
    return vec


def full_space_hamiltonian(ham):
    n = ham.n_spin_orbitals
    a = jw_annihilators(n)
    ad = [x.T for x in a]
    spatial = [p // 2 for p in range(n)]
    spin = [p % 2 for p in range(n)]
    dim = 2 ** n
    H = ham.core_energy * np.eye(dim)
    for P, Q in itertools.product(range(n), repeat=2):
        if spin[P] == spin[Q] and ham.one_body[spatial[P], spatial[Q]] != 0:
            H += ham.one_body[spatial[P], spatial[Q]] * ad[P] @ a[Q]
    for P, Q, R, S in itertools.product(range(n), repeat=4):
        # 1/2 sum (PR|QS) a+_P a+_Q a_S a_R, spin conserved on each electron
        if spin[P] != spin[R] or spin[Q] != spin[S]:
            continue
        v = ham.two_body[spatial[P], spatial[R], spatial[Q], spatial[S]]
        if v != 0:
            H += 0.5 * v * ad[P] @ ad[Q] @ a[S] @ a[R]
    return H


@pytest.fixture(scope="session")
def hubbard2():
    ham = hubbard_hamiltonian(2, 1.0, 4.0)
    basis = sector_basis(4, 1, 1)
    return ham, basis, sector_matrix(ham, basis)


@pytest.fixture(scope="session")
def hubbard4():
    ham = hubbard_hamiltonian(4, 1.0, 4.0)
    basis = sector_basis(8, 2, 2)
    return ham, basis, sector_matrix(ham, basis)
