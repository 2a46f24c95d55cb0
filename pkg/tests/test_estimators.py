import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from uccvqe import OCVQE, UCCVQE, hubbard_hamiltonian
from uccvqe.ansatz import singly_excited_reference
from uccvqe.vqe import NoConvergence


@pytest.fixture(scope="module")
def dimer():
    return hubbard_hamiltonian(2, 1.0, 4.0)


def test_params_round_trip():
    est = UCCVQE(ansatz="kupccgsd", k=3, restarts=7)
    params = est.get_params()
    assert params["k"] == 3 and params["restarts"] == 7 and params["ansatz"] == "kupccgsd"
    est.set_params(seed=11)
    twin = clone(est)
    assert twin.get_params() == est.get_params() and twin is not est
    assert set(OCVQE().get_params()) >= {"mu", "promotions", "ansatz"}


def test_fit_attributes_and_predict(dimer):
    est = UCCVQE(restarts=3).fit(dimer)
    assert est.energy_ == pytest.approx(2 - np.sqrt(8), abs=1e-8)
    assert est.basis_.dim == 4 and est.ansatz_.n_params == 3
    assert est.state_.norm == pytest.approx(1.0, abs=1e-12)
    batch = np.vstack([np.zeros(3), est.params_])
    np.testing.assert_allclose(est.predict(batch), [4.0, est.energy_], atol=1e-12)
    with pytest.raises(ValueError):
        est.predict(np.zeros((1, 4)))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        UCCVQE().predict(np.zeros((1, 3)))
    with pytest.raises(NotFittedError):
        OCVQE().predict(np.zeros((1, 3)))


def test_rejects_non_hamiltonian():
    with pytest.raises(TypeError):
        UCCVQE().fit(np.eye(4))


def test_warm_start_and_sector_override(dimer):
    ham = hubbard_hamiltonian(3, 1.0, 4.0)
    est = UCCVQE(ansatz="uccgsd", restarts=2, n_alpha=1, n_beta=1).fit(ham)
    assert (est.basis_.n_alpha, est.basis_.n_beta) == (1, 1)
    warm = UCCVQE(ansatz="uccgsd", restarts=1, n_alpha=1, n_beta=1).fit(ham, initial_params=est.params_)
    assert warm.energy_ <= est.energy_ + 1e-10


def test_explicit_reference(dimer):
    ref = singly_excited_reference(4, 1, 1, [(0, 1)])
    est = UCCVQE(ansatz="uccgsd", restarts=2).fit(dimer, reference=ref)
    assert est.reference_ is ref
    assert est.energy_ == pytest.approx(2 - np.sqrt(8), abs=1e-8)


def test_non_convergence_propagates(dimer):
    big = hubbard_hamiltonian(4, 1.0, 4.0)
    with pytest.raises(NoConvergence):
        UCCVQE(ansatz="uccgsd", restarts=1, maxiter=1).fit(big)
    est = UCCVQE(ansatz="uccgsd", restarts=1, maxiter=1).fit(big, raise_on_failure=False)
    assert not est.result_.converged


def test_ocvqe_fit(dimer):
    ground = UCCVQE(ansatz="uccgsd", restarts=3).fit(dimer)
    exc = OCVQE(mu=10.0, promotions=[(0, 1)], restarts=3).fit(
        dimer, ground_state=ground.state_, ground_energy=ground.energy_
    )
    assert exc.energy_ == pytest.approx(0.0, abs=1e-6)
    assert exc.mu_ == 10.0 and exc.overlap_residual_ < 1e-8
    assert exc.predict(exc.params_[None, :])[0] == pytest.approx(exc.result_.penalized_energy, abs=1e-12)
    default = OCVQE(promotions=[(0, 1)], restarts=2).fit(
        dimer, ground_state=ground.state_, ground_energy=ground.energy_
    )
    assert default.mu_ == pytest.approx(-ground.energy_)


def test_ocvqe_sector_mismatch(dimer):
    ground = UCCVQE(restarts=1).fit(dimer)
    with pytest.raises(ValueError, match="sector"):
        OCVQE(n_alpha=2, n_beta=0).fit(dimer, ground_state=ground.state_, ground_energy=ground.energy_)
