"""Bloch-angle quantum speed limits at desk scale.

Library layers: states (Bloch geometry and metrics), dynamics (propagators),
qsl (velocities, path lengths, bounds), swaptest (two-copy measurement and
waveplates).  The experiments module and the qsl-lab CLI sit on top.
"""

__version__ = "0.1.0"

from .dynamics import (
    LandauZener,
    LindbladModel,
    Trajectory,
    evolution_operator,
    landau_zener,
    lindbladian,
    propagate,
    propagate_const,
    propagate_lindblad,
    propagate_timedep,
    propagate_unitary_batch,
    qubit_hamiltonian,
)
from .qsl import (
    QslReport,
    accumulate_path,
    angles_from_start,
    bures_qsl,
    geodesic_defect,
    geodesic_ode_residual,
    qsl_existing,
    qsl_new,
    qsl_report,
    velocity_general,
    velocity_terms,
    velocity_unitary,
)
from .states import (
    basis_ket,
    bloch_angle,
    bloch_from_density,
    bures_angle,
    check_density_matrix,
    density_from_bloch,
    fidelity,
    gell_mann_basis,
    ket_dm,
    overlap,
    purity,
    qubit_state_from_angles,
    random_bloch_direction,
    random_state_fixed_purity,
)
from .swaptest import (
    PathEstimate,
    ShotRecord,
    WaveplateSequence,
    bloch_angle_from_overlaps,
    compile_su2,
    estimate_overlap,
    joint_state,
    measurement_basis,
    measurement_probabilities,
    overlap_from_pc,
    phase_distance,
    sample_shots,
    simulate_path_measurement,
    swap_operator,
    waveplate_unitary,
)
