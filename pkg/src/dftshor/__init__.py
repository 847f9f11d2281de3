"""Modular multiplication built from DFT-style circuits, with a state-vector
simulator and a verification harness for Shor-style order finding."""

from .builders import (
    Backend,
    ResetPhases,
    ResetStrategy,
    build_ideal_modmul,
    build_modified_qft,
    build_modmul,
    build_order_finding,
    build_phase_multiplier,
    build_reset,
    build_superposition,
    compute_reset_phases,
)
from .circuit import (
    Circuit,
    CircuitError,
    CircuitParseError,
    CostModel,
    GateCount,
    GateOp,
    QubitLayout,
    deserialize,
    gate_count,
    serialize,
    with_control,
)
from .numtheory import (
    Convergent,
    DomainError,
    ModMulParams,
    canonical_odd_multiplier,
    continued_fraction_convergents,
    factors_from_order,
    gcd,
    mod_pow,
    modmul_permutation,
    multiplicative_order,
)
from .simulator import (
    CapacityError,
    MeasurementOutcome,
    StateVector,
    apply_circuit,
    apply_gate,
    fidelity,
    measure_register,
    overlap,
)
from .verify import (
    FidelityRecord,
    OrderFindingResult,
    ScalingReport,
    check_dft_identity,
    run_order_finding,
    scaling_report,
    verify_modmul_action,
)

__version__ = "0.1.0"
