import numpy as np
import pytest

from uccvqe.ansatz import (
    AnsatzKind,
    Double,
    MultiDetReference,
    PairDouble,
    Single,
    aufbau_reference,
    build_ansatz,
    prepare_state,
    singly_excited_reference,
)
from conftest import enumerate_canonical
from uccvqe.fock import expmv, excitation_generator, sector_basis


def as_keys(excs):
    out = set()
    for e in excs:
        if isinstance(e, Single):
            out.add(("S", e.p, e.q))
        elif isinstance(e, Double):
            out.add(("D", e.i, e.j, e.a, e.b))
        else:
            out.add(("P", e.P, e.Q))
    return out


@pytest.mark.parametrize(
    "kind, k, singles, doubles, pairs",
    [("uccsd", 1, 8, 18, 0), ("uccgsd", 1, 12, 150, 0), ("kupccgsd", 2, 24, 0, 12)],
)
def test_counts_n8(kind, k, singles, doubles, pairs):
    ansatz = build_ansatz(kind, 8, 2, 2, k)
    excs = ansatz.excitations
    assert sum(isinstance(e, Single) for e in excs) == singles
    assert sum(isinstance(e, Double) for e in excs) == doubles
    assert sum(isinstance(e, PairDouble) for e in excs) == pairs
    assert ansatz.n_params == singles + doubles + pairs


@pytest.mark.parametrize(
    "kind, N",
    [(k.value, N) for k in AnsatzKind for N in (4, 8, 12, 16) if (k.value, N) != ("uccgsd", 16)],
)
def test_catalog_matches_enumeration(kind, N):
    for na, nb in {(1, 1), (N // 4, N // 4), (N // 4 + 1, N // 4), (N // 2 - 1, 1)}:
        if not (0 <= na <= N // 2 and 0 <= nb <= N // 2):
            continue
        ansatz = build_ansatz(kind, N, na, nb)
        block = ansatz.blocks[0]
        assert len(set(block)) == len(block)
        s, d, p = enumerate_canonical(kind, N, na, nb)
        assert as_keys(block) == s | d | p
        for exc in block:
            exc.validate(N)


def test_uccgsd_n16_count_formula():
    # singles 2*C(8,2); doubles C(C(8,2),2) twice for same-spin pairs plus C(64,2) for mixed
    ansatz = build_ansatz("uccgsd", 16, 4, 4)
    assert ansatz.n_params == 2 * 28 + 2 * (28 * 27 // 2) + 64 * 63 // 2


def test_kupccgsd_blocks_identical():
    ansatz = build_ansatz("kupccgsd", 8, 2, 2, 3)
    assert ansatz.blocks[0] == ansatz.blocks[1] == ansatz.blocks[2]
    assert ansatz.n_params == 3 * 18
    split = ansatz.split_params(np.arange(54.0))
    assert [s[0] for s in split] == [0.0, 18.0, 36.0]


@pytest.mark.parametrize(
    "args",
    [("uccsd", 8, 2, 2, 2), ("kupccgsd", 8, 2, 2, 0), ("uccsd", 8, 5, 2, 1), ("nope", 8, 2, 2, 1), ("uccsd", 7, 1, 1, 1)],
)
def test_build_errors(args):
    with pytest.raises(ValueError):
        build_ansatz(*args)


def test_kind_parsing():
    assert AnsatzKind.parse("k-UpCCGSD") is AnsatzKind.KUPCCGSD
    assert AnsatzKind.parse("UCCSD") is AnsatzKind.UCCSD


@pytest.mark.parametrize("args, mask", [((8, 2, 2), 0b00001111), ((4, 1, 1), 0b0011), ((4, 2, 1), 0b0111)])
def test_aufbau(args, mask):
    assert aufbau_reference(*args).terms == ((mask, 1.0),)


def test_singly_excited_reference():
    ref = singly_excited_reference(8, 2, 2, [(1, 2)])
    assert dict(ref.terms) == pytest.approx({0b00011011: 2 ** -0.5, 0b00100111: 2 ** -0.5}, abs=1e-15)
    two = singly_excited_reference(8, 2, 2, [(1, 2), (1, 3)])
    assert len(two.terms) == 4
    assert all(c == pytest.approx(0.5, abs=1e-15) for _, c in two.terms)
    with pytest.raises(ValueError, match="occupied"):
        singly_excited_reference(8, 2, 2, [(0, 1)])
    with pytest.raises(ValueError, match="not occupied"):
        singly_excited_reference(8, 2, 2, [(2, 3)])


def test_reference_normalization_and_sector():
    ref = MultiDetReference([(0b0011, 3.0), (0b1100, 4.0)])
    assert sum(c * c for _, c in ref.terms) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError, match="outside"):
        ref.to_vector(sector_basis(4, 2, 0))


def test_zero_params_give_reference():
    basis = sector_basis(8, 2, 2)
    ref = aufbau_reference(8, 2, 2)
    for kind, k in [("uccsd", 1), ("uccgsd", 1), ("upccsd", 1), ("kupccgsd", 3)]:
        ansatz = build_ansatz(kind, 8, 2, 2, k)
        state = prepare_state(ansatz, np.zeros(ansatz.n_params), ref, basis)
        assert np.array_equal(state.amplitudes, ref.to_vector(basis))


def test_pair_amplitude_is_plane_rotation():
    basis = sector_basis(4, 1, 1)
    ansatz = build_ansatz("kupccgsd", 4, 1, 1, 1)
    ref = aufbau_reference(4, 1, 1)
    pair = ansatz.excitations.index(PairDouble(0, 1))
    t = 0.37
    params = np.zeros(ansatz.n_params)
    params[pair] = t
    amps = prepare_state(ansatz, params, ref, basis).amplitudes
    expected = np.zeros(4)
    expected[basis.index_of[0b0011]] = np.cos(t)
    expected[basis.index_of[0b1100]] = np.sin(t)
    np.testing.assert_allclose(amps, expected, atol=1e-14)
    via_expmv = expmv(t * excitation_generator(PairDouble(0, 1), basis), ref.to_vector(basis))
    np.testing.assert_allclose(amps, via_expmv, atol=1e-14)


def test_random_params_unit_norm():
    rng = np.random.default_rng(3)
    basis = sector_basis(8, 2, 2)
    ref = singly_excited_reference(8, 2, 2, [(1, 2)])
    for kind, k in [("uccsd", 1), ("uccgsd", 1), ("upccsd", 1), ("kupccgsd", 2)]:
        ansatz = build_ansatz(kind, 8, 2, 2, k)
        state = prepare_state(ansatz, rng.uniform(-1, 1, ansatz.n_params), ref, basis)
        assert abs(state.norm - 1.0) < 1e-10


def test_block_order_first_block_applied_first():
    basis = sector_basis(4, 1, 1)
    ansatz = build_ansatz("kupccgsd", 4, 1, 1, 2)
    ref = aufbau_reference(4, 1, 1).to_vector(basis)
    rng = np.random.default_rng(5)
    params = rng.normal(size=ansatz.n_params)
    p1, p2 = ansatz.split_params(params)
    from uccvqe.fock import assemble_generator

    g1 = assemble_generator(ansatz.blocks[0], p1, basis)
    g2 = assemble_generator(ansatz.blocks[1], p2, basis)
    expected = expmv(g2, expmv(g1, ref))
    got = prepare_state(ansatz, params, aufbau_reference(4, 1, 1), basis).amplitudes
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_zero_padding_extra_block_is_identity():
    rng = np.random.default_rng(8)
    basis = sector_basis(8, 2, 2)
    ref = aufbau_reference(8, 2, 2)
    a2 = build_ansatz("kupccgsd", 8, 2, 2, 2)
    a3 = build_ansatz("kupccgsd", 8, 2, 2, 3)
    params = rng.normal(size=a2.n_params)
    padded = np.concatenate([params, np.zeros(a3.n_params - a2.n_params)])
    assert np.array_equal(
        prepare_state(a2, params, ref, basis).amplitudes, prepare_state(a3, padded, ref, basis).amplitudes
    )


def test_support_stays_in_sector():
    # embedding: sector states padded into the full Fock space never touch other sectors
    from conftest import fock_vector, jw_annihilators

    basis = sector_basis(6, 2, 1)
    ops = jw_annihilators(6)
    ansatz = build_ansatz("uccgsd", 6, 2, 1)
    rng = np.random.default_rng(2)
    state = prepare_state(ansatz, rng.normal(size=ansatz.n_params), aufbau_reference(6, 2, 1), basis)
    full = sum(c * fock_vector(d, ops) for d, c in zip(basis.determinants, state.amplitudes))
    outside = [m for m in range(64) if m not in basis.index_of]
    assert np.abs(full[outside]).max() == 0.0


def test_parameter_length_checked():
    basis = sector_basis(4, 1, 1)
    ansatz = build_ansatz("uccsd", 4, 1, 1)
    with pytest.raises(ValueError):
        prepare_state(ansatz, np.zeros(2), aufbau_reference(4, 1, 1), basis)
