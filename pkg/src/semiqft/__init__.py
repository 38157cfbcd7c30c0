"""Block-wise semiclassical quantum Fourier transform, exact simulation and Shor order finding."""

__version__ = "0.1.0"

from .dyadic import DyadicPhase
from .sim import (
    CapacityError,
    Circuit,
    OutcomeDistribution,
    StateVector,
    enumerate_branches,
    sample,
    total_variation,
)
from .gates import decompose_phase_gate, controlled_gate_circuit, r_k, s_k, unitary_equal
from .qft import build_standard_qft, count_gates, dft_matrix, lower_to_hardware_gates
from .semiclassical import (
    BlockPlan,
    build_semiclassical_circuit,
    phi_next,
    plan_blocks,
    run_semiclassical,
)
from .shor import ShorConfig, continued_fraction_order, factor, run_order_finding
from .analysis import NoiseModel, compare_semiclassical_vs_standard, run_noisy, sso
from .qasm import emit_qasm, parse_qasm, to_qasm
