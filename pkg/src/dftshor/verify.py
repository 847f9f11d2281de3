"""Verification harness: matrix identities, circuit-vs-oracle reports,
fidelity sweeps, gate-count scaling and order finding.

Everything here is deterministic given its arguments (and seed, where one
is taken), so reports are byte-identical across reruns.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .builders import (
    Backend,
    ResetStrategy,
    build_order_finding,
    build_superposition,
    compute_reset_phases,
    default_control_count,
    modmul_stages,
)
from .circuit import Circuit, CostModel, QubitLayout, gate_count, with_control
from .numtheory import (
    Convergent,
    DomainError,
    ModMulParams,
    canonical_odd_multiplier,
    continued_fraction_convergents,
    factors_from_order,
    mod_pow,
    modmul_permutation,
    order_from_convergents,
)
from .simulator import CapacityError, MAX_QUBITS, evolve, register_probabilities, StateVector

MAX_DENSE_N = 2048
# amplitudes per evolve call; keeps the working set near the cache size
_CHUNK_AMPLITUDES = 1 << 19


# -- DFT identity ----------------------------------------------------------------


def dft_matrix(N: int, A: int = 1) -> np.ndarray:
    """[F]_{nm} = exp(-2 pi i A n m / N) / sqrt(N), by direct exponent evaluation."""
    n = np.arange(N)
    # reduce the integer exponent before scaling so large N keep full precision
    k = (A * np.outer(n, n)) % N
    return np.exp(-2j * np.pi * k / N) / math.sqrt(N)


def check_dft_identity(N: int, A: int) -> float:
    """max |F_N^{-1} G_N - P_A| over all entries, P_A the m -> Am mod N permutation."""
    if N < 1:
        raise DomainError(f"modulus must be positive, got {N}")
    if N > MAX_DENSE_N:
        raise DomainError(f"dense check limited to N <= {MAX_DENSE_N}, got {N}")
    if math.gcd(A, N) != 1:
        raise DomainError(f"multiplier {A} not coprime to modulus {N}")
    F = dft_matrix(N)
    G = dft_matrix(N, A)
    product = F.conj().T @ G
    P = np.zeros((N, N))
    P[(A * np.arange(N)) % N, np.arange(N)] = 1.0
    return float(np.max(np.abs(product - P)))


# -- modular multiplication action -----------------------------------------------


@dataclass(frozen=True)
class FidelityRecord:
    """One basis input |m>|0> pushed through the modular multiplication circuit.

    ``output_fidelity`` is |<Am mod N, 0|out>|^2 for the full circuit.
    Stage probabilities are the chance the cleared register reads |0>
    after each reset; the stage-2 value is conditioned on a successful
    stage-1 reset. Measured resets always clear, so they report 1.
    """

    N: int
    A: int
    m: int
    output_fidelity: float
    reset_probability_stage1: float
    reset_probability_stage2: float
    predicted_stage_probability: float
    predicted_stage2_probability: float
    predicted_output_fidelity: float

    def as_row(self) -> list:
        return [self.N, self.A, self.m] + [f"{getattr(self, k):.12e}" for k in _FLOAT_FIELDS]


_FLOAT_FIELDS = (
    "output_fidelity",
    "reset_probability_stage1",
    "reset_probability_stage2",
    "predicted_stage_probability",
    "predicted_stage2_probability",
    "predicted_output_fidelity",
)
FIDELITY_COLUMNS = ("N", "A", "m") + _FLOAT_FIELDS


@lru_cache(maxsize=64)
def superposition_unitary(N: int, L: int) -> np.ndarray:
    """Full 2**L x 2**L matrix of the superposition circuit (columns = images of basis states)."""
    circuit = build_superposition(N, L)
    return evolve(np.eye(1 << L, dtype=np.complex128), circuit, L).T


def _phase_sum(N: int, L: int, z: np.ndarray) -> np.ndarray:
    """D(z) = sum_{u<N} exp(2 pi i u z (1/2**L - 1/N))."""
    u = np.arange(N)
    frac = (np.outer(z, u) * (N - (1 << L))) % (N << L)
    return np.exp(2j * np.pi * frac / (N << L)).sum(axis=1)


def predicted_output_amplitude(params: ModMulParams, m: int) -> complex:
    """Closed-form <Am mod N, 0| U |m, 0> for the unitary-reset circuit.

    After the first reset the cleared register holds
    h_x = 2**-L sum_y (-1)^{x.y} exp(2 pi i phi y), phi = A m (1/2**L - 1/N),
    and the second stage maps it onto the output through the superposition
    unitary and the phase sums D(z).
    """
    N, A, L = params.N, params.A, params.L
    D = 1 << L
    y = np.arange(D)
    # exact rational phase A m y (N - 2**L) / (N 2**L) reduced mod 1
    num = (A * m * y * (N - D)) % (N * D)
    wave = np.exp(2j * np.pi * num / (N * D))
    h = _walsh_hadamard(wave) / D
    Sh = superposition_unitary(N, L) @ h
    a = A * m % N
    z = np.arange(D)
    amp = (_phase_sum(N, L, z) * Sh[(a - z) % N]).sum()
    return complex(amp / (D * math.sqrt(N)))


def _walsh_hadamard(v: np.ndarray) -> np.ndarray:
    """sum_y (-1)^{popcount(x & y)} v_y for every x."""
    out = np.array(v, dtype=np.complex128)
    h = 1
    while h < out.size:
        blocks = out.reshape(-1, 2, h)
        a, b = blocks[:, 0].copy(), blocks[:, 1].copy()
        blocks[:, 0], blocks[:, 1] = a + b, a - b
        h *= 2
    return out


def predicted_stage2_probability(params: ModMulParams) -> float:
    """Mean over branch values m' < N of the K_F reset probability (phase multiplier 1)."""
    total = 0.0
    for m2 in range(params.N):
        total += compute_reset_phases(params, m2, multiplier=1).probability
    return total / params.N


def _chunk_size(num_qubits: int) -> int:
    return max(1, _CHUNK_AMPLITUDES >> num_qubits)


def _register_zero_mask(layout: QubitLayout, Q: int) -> np.ndarray:
    index = np.arange(1 << Q)
    mask = np.ones(1 << Q, dtype=bool)
    for q in layout.register2:
        mask &= ((index >> (Q - 1 - q)) & 1) == 0
    return mask


def _basis_inputs(layout: QubitLayout, Q: int, values: Sequence[int]) -> np.ndarray:
    psi = np.zeros((len(values), 1 << Q), dtype=np.complex128)
    shift = Q - 1 - layout.register1[-1]
    for row, m in enumerate(values):
        psi[row, m << shift] = 1.0
    return psi


def verify_modmul_action(params: ModMulParams,
                         strategy: ResetStrategy | str = ResetStrategy.UNITARY,
                         seed: int = 0) -> list[FidelityRecord]:
    """Simulate the modular multiplication circuit on every basis input m < N."""
    strategy = ResetStrategy(strategy)
    layout = QubitLayout.standard(params.L)
    Q = layout.num_qubits
    if Q > MAX_QUBITS:
        raise CapacityError(f"2L = {Q} exceeds the {MAX_QUBITS}-qubit capacity")
    stages = modmul_stages(params, strategy, layout)
    first = Circuit(layout, [g for _, s in stages[:3] for g in s])
    second = Circuit(layout, [g for _, s in stages[3:] for g in s])
    if strategy is ResetStrategy.MEASURED:
        return _verify_measured(params, layout, first + second, seed)

    zero2 = _register_zero_mask(layout, Q)
    shift = Q - 1 - layout.register1[-1]
    p2_pred = predicted_stage2_probability(params)
    records = []
    chunk = _chunk_size(Q)
    for start in range(0, params.N, chunk):
        ms = list(range(start, min(start + chunk, params.N)))
        psi = evolve(_basis_inputs(layout, Q, ms), first, Q)
        p1 = (np.abs(psi[:, zero2]) ** 2).sum(axis=1)
        projected = np.where(zero2, psi, 0.0) / np.sqrt(p1)[:, None]
        both = evolve(np.concatenate([psi, projected]), second, Q)
        out, cond = both[: len(ms)], both[len(ms):]
        p2 = (np.abs(cond[:, zero2]) ** 2).sum(axis=1)
        for row, m in enumerate(ms):
            target = modmul_permutation(params, m) << shift
            records.append(FidelityRecord(
                N=params.N, A=params.A, m=m,
                output_fidelity=float(abs(out[row, target]) ** 2),
                reset_probability_stage1=float(p1[row]),
                reset_probability_stage2=float(p2[row]),
                predicted_stage_probability=compute_reset_phases(params, m).probability,
                predicted_stage2_probability=p2_pred,
                predicted_output_fidelity=abs(predicted_output_amplitude(params, m)) ** 2,
            ))
    return records


def modmul_output_fidelities(params: ModMulParams) -> np.ndarray:
    """Per-input output fidelity of the unitary-reset circuit, index m < N.

    The lean counterpart of :func:`verify_modmul_action` for large sweeps:
    one pass through the full circuit, no stage-wise bookkeeping.
    """
    layout = QubitLayout.standard(params.L)
    Q = layout.num_qubits
    if Q > MAX_QUBITS:
        raise CapacityError(f"2L = {Q} exceeds the {MAX_QUBITS}-qubit capacity")
    circuit = Circuit(layout, [g for _, s in modmul_stages(params, ResetStrategy.UNITARY, layout)
                               for g in s])
    shift = Q - 1 - layout.register1[-1]
    out = np.empty(params.N)
    chunk = _chunk_size(Q)
    for start in range(0, params.N, chunk):
        ms = np.arange(start, min(start + chunk, params.N))
        psi = evolve(_basis_inputs(layout, Q, ms), circuit, Q)
        targets = ((params.A * ms) % params.N) << shift
        out[ms] = np.abs(psi[np.arange(len(ms)), targets]) ** 2
    return out


def _verify_measured(params: ModMulParams, layout: QubitLayout, circuit: Circuit,
                     seed: int) -> list[FidelityRecord]:
    Q = layout.num_qubits
    shift = Q - 1 - layout.register1[-1]
    records = []
    for m in range(params.N):
        psi = evolve(_basis_inputs(layout, Q, [m]), circuit, Q, seed=seed + m)
        target = modmul_permutation(params, m) << shift
        records.append(FidelityRecord(
            N=params.N, A=params.A, m=m,
            output_fidelity=float(abs(psi[0, target]) ** 2),
            reset_probability_stage1=1.0,
            reset_probability_stage2=1.0,
            predicted_stage_probability=1.0,
            predicted_stage2_probability=1.0,
            predicted_output_fidelity=1.0,
        ))
    return records


def odd_coprime_multipliers(N: int) -> list[int]:
    """Odd A in [1, N) coprime to N (for N = 2**L, every odd A below N)."""
    return [A for A in range(1, N, 2) if math.gcd(A, N) == 1]


def fidelity_sweep(N: int, L: int | None = None,
                   strategy: ResetStrategy | str = ResetStrategy.UNITARY,
                   seed: int = 0) -> list[FidelityRecord]:
    """verify_modmul_action over every odd coprime multiplier A < N."""
    records = []
    for A in odd_coprime_multipliers(N):
        params = ModMulParams(N, A, L or N.bit_length())
        records.extend(verify_modmul_action(params, strategy, seed))
    return records


def write_fidelity_csv(records: Sequence[FidelityRecord], stream=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIDELITY_COLUMNS)
    for r in records:
        writer.writerow(r.as_row())
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def read_fidelity_csv(text: str) -> list[FidelityRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != FIDELITY_COLUMNS:
        raise ValueError("not a fidelity CSV: unexpected header")
    out = []
    for row in rows[1:]:
        ints = [int(x) for x in row[:3]]
        floats = [float(x) for x in row[3:]]
        out.append(FidelityRecord(*ints, *floats))
    return out


# -- gate-count scaling ----------------------------------------------------------


@dataclass(frozen=True)
class ScalingRow:
    L: int
    N: int
    A: int
    elementary_gates: int
    modshift_count: int
    total_gates: int
    modeled_cost: float
    ratio: float
    modexp_cost: float
    modexp_ratio: float


SCALING_COLUMNS = tuple(ScalingRow.__dataclass_fields__)


@dataclass
class ScalingReport:
    """Per-L gate counts of the modular multiplication circuit.

    ``ratio`` is total_gates / L**2 (modular shifts counted as one gate);
    ``modexp_ratio`` is the modeled cost of L controlled multiplications / L**3.
    """

    rows: list[ScalingRow] = field(default_factory=list)

    def spread(self, column: str) -> float:
        values = [getattr(r, column) for r in self.rows]
        return max(values) / min(values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SCALING_COLUMNS)
        for r in self.rows:
            writer.writerow([_fmt(getattr(r, c)) for c in SCALING_COLUMNS])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"rows": [asdict(r) for r in self.rows],
                           "ratio_spread": self.spread("ratio"),
                           "modexp_ratio_spread": self.spread("modexp_ratio")},
                          sort_keys=True, indent=2) + "\n"


def _fmt(x) -> str:
    return f"{x:.10g}" if isinstance(x, float) else str(x)


def default_modulus(L: int) -> int:
    """Largest odd modulus that needs exactly L bits."""
    return (1 << L) - 1


def default_multiplier(N: int) -> int:
    return next(A for A in range(3, 2 * N, 2) if math.gcd(A, N) == 1)


def _modmul_circuit(params: ModMulParams, layout: QubitLayout) -> Circuit:
    # built from the stages directly: counting needs no capacity check
    return Circuit(layout, [g for _, s in modmul_stages(params, ResetStrategy.UNITARY, layout) for g in s])


def scaling_report(L_range: Sequence[int],
                   modulus_selector: Callable[[int], int] = default_modulus,
                   A_selector: Callable[[int], int] = default_multiplier,
                   model: CostModel | None = None) -> ScalingReport:
    model = model or CostModel()
    report = ScalingReport()
    for L in L_range:
        if not 2 <= L <= 16:
            raise DomainError(f"scaling report covers 2 <= L <= 16, got {L}")
        N = modulus_selector(L)
        A = A_selector(N)
        params = ModMulParams(N, A, L)
        count = gate_count(_modmul_circuit(params, QubitLayout.standard(L)), model)

        # L controlled multiplications by A^(2^k), each on its own control qubit
        layout = QubitLayout.standard(L, L)
        modexp = 0.0
        for k in range(L):
            a = canonical_odd_multiplier(mod_pow(A, 1 << k, N), N)
            block = _modmul_circuit(ModMulParams(N, a, L), layout)
            modexp += gate_count(with_control(block, layout.controls[L - 1 - k]), model).total_cost

        report.rows.append(ScalingRow(
            L=L, N=N, A=A,
            elementary_gates=count.elementary(),
            modshift_count=count.counts.get("modshift", 0),
            total_gates=count.total_gates,
            modeled_cost=count.total_cost,
            ratio=count.total_gates / L**2,
            modexp_cost=modexp,
            modexp_ratio=modexp / L**3,
        ))
    return report


# -- order finding ---------------------------------------------------------------


@dataclass(frozen=True)
class OrderFindingResult:
    """One seeded order-finding run.

    ``measured_y`` is None when the classical gcd check already split N.
    ``success`` means nontrivial factors were obtained.
    """

    N: int
    A: int
    t: int
    seed: int
    measured_y: int | None
    convergents: tuple[Convergent, ...]
    recovered_r: int | None
    factors: tuple[int, int] | None
    success: bool

    def to_dict(self) -> dict:
        return {
            "N": self.N, "A": self.A, "t": self.t, "seed": self.seed,
            "measured_y": self.measured_y,
            "convergents": [str(c) for c in self.convergents],
            "recovered_r": self.recovered_r,
            "factors": list(self.factors) if self.factors else None,
            "success": self.success,
        }


@lru_cache(maxsize=32)
def control_distribution(N: int, A: int, t: int, backend: str) -> np.ndarray:
    """Probability of each control-register readout y for order finding on (N, A)."""
    circuit = build_order_finding(N, A, t, backend)
    state = StateVector.zero(circuit.layout.num_qubits)
    out = evolve(state.amplitudes, circuit, state.num_qubits)
    probs = register_probabilities(StateVector(state.num_qubits, out), circuit.layout.controls)
    probs = np.clip(probs, 0.0, None)
    probs.flags.writeable = False
    return probs


def _candidates(y: int, t: int, N: int) -> list[Convergent]:
    return continued_fraction_convergents(y, 1 << t, N)


def run_order_finding(N: int, A_raw: int, t: int | None = None, seed: int = 0,
                      backend: Backend | str = Backend.IDEAL,
                      lcm_refine: bool = False) -> OrderFindingResult:
    """Sample the phase-estimation readout and post-process it classically.

    With ``lcm_refine`` a second readout is drawn when the first gives no
    order, and the lcm of the two candidate denominators is tried.
    """
    backend = Backend(backend)
    if N < 3 or N % 2 == 0:
        raise DomainError(f"modulus must be odd and >= 3, got {N}")
    L = N.bit_length()
    t = default_control_count(N) if t is None else t
    if 2 * L + t > MAX_QUBITS:
        raise CapacityError(f"2L + t = {2 * L + t} exceeds the {MAX_QUBITS}-qubit capacity")
    g = math.gcd(A_raw % N, N)
    if A_raw % N == 0:
        raise DomainError(f"multiplier {A_raw} is a multiple of {N}")
    if g > 1:
        return OrderFindingResult(N, A_raw, t, seed, None, (), None,
                                  tuple(sorted((g, N // g))), True)

    probs = control_distribution(N, A_raw % N, t, backend.value)
    rng = np.random.default_rng(seed)
    y = int(rng.choice(probs.size, p=probs / probs.sum()))
    A = A_raw % N
    candidates = _candidates(y, t, N) if y else []
    r = order_from_convergents(A, N, candidates) if y else None
    if r is None and lcm_refine:
        y2 = int(rng.choice(probs.size, p=probs / probs.sum()))
        if y and y2:
            extra = _candidates(y2, t, N)
            for c1 in candidates:
                for c2 in extra:
                    q = math.lcm(c1.denominator, c2.denominator)
                    if q <= N and mod_pow(A, q, N) == 1 and (r is None or q < r):
                        r = q
    factors = factors_from_order(A, r, N) if r else None
    return OrderFindingResult(N, A_raw, t, seed, y, tuple(candidates), r, factors,
                              factors is not None)
