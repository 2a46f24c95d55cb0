"""Classical benchmarking of unitary coupled-cluster VQE ansatze."""

__version__ = "0.1.0"

from uccvqe.ansatz import (
    Ansatz,
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
from uccvqe.estimators import OCVQE, UCCVQE
from uccvqe.excited import (
    OcVqeConfig,
    epsilon_scaling_study,
    oc_objective,
    overlap_squared,
    solve_excited,
)
from uccvqe.fock import (
    SectorBasis,
    StateVector,
    assemble_generator,
    excitation_generator,
    expmv,
    sector_basis,
)
from uccvqe.hamiltonian import (
    MolecularHamiltonian,
    hubbard_hamiltonian,
    parse_fcidump,
    sector_matrix,
    write_fcidump,
)
from uccvqe.oracle import CurveErrors, fci_lowest, npe
from uccvqe.resources import count_resources, scaling_report, schedule_layers
from uccvqe.vqe import VqeProblem, VqeResult, gradient, minimize_multistart, objective
