"""Heat-bath algorithmic cooling toolkit.

Simulation of the TSAC and PPA cooling protocols, the exact Markov-chain
theory of TSAC (transfer matrix, spectrum, OAS, mixing bounds), NBDS
complexity analysis of PPA, the state-estimation-noise experiment, and
gate-level synthesis of the two-sort unitary.
"""

from .errors import (
    BoundViolationError,
    DegenerateMarginalError,
    RangeError,
    ValidationError,
)
from .state import (
    DensityMatrix,
    DiagonalState,
    PolarizationReading,
    ResetSpec,
    diagonal_of,
    embed_diagonal,
    make_maximally_mixed,
    make_thermal,
    marginal_populations,
    polarization,
    tv_distance,
)
from .protocols import (
    ProtocolKind,
    ProtocolStep,
    Trajectory,
    ppa_sort_permutation,
    ppa_step,
    reset_channel,
    run_protocol,
    tsac_step,
    tsac_step_density,
    two_sort,
    two_sort_permutation,
)
from .markov import (
    SpectrumReport,
    TransferMatrix,
    analytic_eigenvalues,
    apply_transfer,
    build_transfer_matrix,
    mixing_time_bound,
    oas,
    spectral_gap,
    verify_spectrum,
)
from .ppa_analysis import (
    NbdsRecord,
    Permutation,
    cycle_decomposition,
    nbds,
    nbds_trajectory,
    noisy_ppa_step,
)
from .circuit import (
    Gate,
    GateSequence,
    align_global_phase,
    expand_mcx,
    gate_count,
    gates_to_unitary,
    synth_mcx,
    synth_qft,
    synth_shift,
    synth_two_sort,
)
from .harness import (
    ExperimentConfig,
    build_config,
    parse_config_file,
    run_circuit,
    run_converge,
    run_experiment,
    run_nbds,
    run_noise,
    run_spectrum,
)

__version__ = "0.1.0"
