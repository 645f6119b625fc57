"""Linear-optical simulation of a W-state expansion gate.

End-to-end model of the experiment: photon sources, beamsplitter
interference, post-selection, simulated tomography with iterative
maximum-likelihood reconstruction, and entanglement analysis.
"""

__version__ = "0.1.0"

from .fock import (
    DensityMatrix,
    FockBasisVector,
    ModeLabel,
    PhotonicState,
    apply_annihilation,
    apply_creation,
    coincidence_probability,
    inner_product,
    mode,
    number_state,
    postselect_qubits,
    qubit_amplitudes,
    single_photon,
    tensor,
    vacuum_state,
)
from .optics import (
    BeamsplitterSpec,
    DelayElement,
    JonesElement,
    JonesUnitary,
    apply_beamsplitter,
    apply_circuit,
    apply_delay,
    apply_jones,
)
from .gates import (
    ExpansionGate,
    expand_w,
    expand_w_full_photonic,
    photonic_w_state,
    run_gate,
    success_probability_analytic,
    w_state_qubits,
)
from .sources import (
    SourceParams,
    calibrate_overlap_for_visibility,
    hom_scan,
    spdc_pair,
    two_photon_ancilla,
    weak_coherent_pulse,
)
from .tomography import (
    CountRecord,
    ReconstructionResult,
    bootstrap_errors,
    default_settings,
    expected_probability,
    fidelity,
    imlm_reconstruct,
    sample_counts,
)
from .entanglement import (
    WitnessSpec,
    concurrence,
    eof,
    eof_from_concurrence,
    pairwise_eof_table,
    partial_trace,
    witness_value,
)
from .cli import ExperimentConfig, load_config, run_scenario
