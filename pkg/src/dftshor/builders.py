"""Circuit builders for DFT-based modular multiplication and order finding.

Register conventions follow :class:`~dftshor.circuit.QubitLayout.standard`:
register1 carries the data value, register2 is the ancilla that starts and
ends in |0>. Bit position 1 of a register is its most significant qubit.

The modular multiplication U_A |m> = |A m mod N> is assembled as

    S, V_A^dagger, K_G, S, V_1, K_F

where S prepares the uniform superposition over [0, N) in register2, V_B
applies the phase exp(2 pi i B m n / N), and the resets K swap the
registers and return register2 to |0> by running phase estimation of the
cyclic shift W|n> = |n - 1 mod N> backwards.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

from .circuit import (
    Circuit,
    GateOp,
    H,
    ModMul,
    ModShift,
    Phase,
    QubitLayout,
    Ry,
    Swap,
    with_control,
)
from .numtheory import DomainError, ModMulParams, canonical_odd_multiplier, mod_pow
from .simulator import CapacityError, check_capacity

TWO_PI = 2.0 * math.pi


class ResetStrategy(str, Enum):
    UNITARY = "unitary"
    MEASURED = "measured"


class Backend(str, Enum):
    PAPER = "paper-circuit"
    IDEAL = "ideal"


def _angle(numerator: int, denominator: int, sign: int = 1) -> float:
    """2 pi * sign * numerator/denominator, reduced exactly to (-pi, pi]."""
    r = (sign * numerator) % denominator
    if 2 * r > denominator:
        r -= denominator
    return TWO_PI * r / denominator


# -- superposition -------------------------------------------------------------


@dataclass(frozen=True)
class RotationEntry:
    position: int  # 1-based, MSB first
    angle: float
    remainder: int  # running remainder before this entry


@dataclass(frozen=True)
class RotationSchedule:
    N: int
    L: int
    entries: tuple[RotationEntry, ...]
    final_remainder: int


def rotation_schedule(N: int, L: int) -> RotationSchedule:
    """Rotation angles for the set bits of N, most significant first.

    At a set bit i the |0> branch must carry 2**(L-i) of the remaining
    values, so cos^2(theta_i) = 2**(L-i) / remainder.
    """
    if not 2 <= N <= 1 << L:
        raise DomainError(f"need 2 <= N <= 2**L, got N={N}, L={L}")
    if N == 1 << L:
        return RotationSchedule(N, L, (), 0)
    entries = []
    remainder = N
    for i in range(1, L + 1):
        weight = 1 << (L - i)
        if N & weight:
            theta = math.atan(math.sqrt(remainder / weight - 1.0))
            entries.append(RotationEntry(i, theta, remainder))
            remainder -= weight
    return RotationSchedule(N, L, tuple(entries), remainder)


def superposition_gates(N: int, qubits: Sequence[int]) -> list[GateOp]:
    """Gates taking |0...0> on ``qubits`` to the uniform superposition over [0, N).

    Pass 1 walks the set bits of N from the most significant end, rotating
    each under a positive control on the previous set bit. Pass 2 walks
    every qubit from the least significant end and applies a Hadamard
    negatively controlled on the nearest more-significant set bit, so each
    control is read before it is itself uniformised.
    """
    L = len(qubits)
    sched = rotation_schedule(N, L)
    if N == 1 << L:
        return [H(q) for q in qubits]
    gates: list[GateOp] = []
    prev = None
    for e in sched.entries:
        g = Ry(qubits[e.position - 1], e.angle)
        if prev is not None:
            g = g.controlled(qubits[prev - 1], True)
        gates.append(g)
        prev = e.position
    set_bits = [e.position for e in sched.entries]
    for pos in range(L, 0, -1):
        above = [b for b in set_bits if b < pos]
        if above:
            gates.append(H(qubits[pos - 1]).controlled(qubits[above[-1] - 1], False))
    return gates


def build_superposition(N: int, L: int) -> Circuit:
    check_capacity(L)
    layout = QubitLayout(register1=tuple(range(L)), register2=())
    return Circuit(layout, superposition_gates(N, layout.register1),
                   {"builder": "superposition", "N": N, "L": L})


# -- phase multiplier ----------------------------------------------------------


def phase_multiplier_gates(A: int, N: int, reg1: Sequence[int], reg2: Sequence[int],
                           sign: int = 1) -> list[GateOp]:
    """exp(sign * 2 pi i A m n / N) as L*L controlled phase shifts.

    Bit pair (j, k) contributes A * 2**(2L - j - k) to the exponent of
    m*n; reg1 qubit j is the control, reg2 qubit k the target.
    """
    L = len(reg1)
    gates = []
    for j in range(1, L + 1):
        for k in range(1, len(reg2) + 1):
            weight = A * (1 << (L + len(reg2) - j - k)) % N
            gate = Phase(reg2[k - 1], _angle(weight, N, sign))
            gates.append(gate.controlled(reg1[j - 1]))
    return gates


def build_phase_multiplier(params: ModMulParams, multiplier_sign: int = 1,
                           multiplier: int | None = None) -> Circuit:
    """V_A (sign +1) or its adjoint (sign -1); ``multiplier=1`` gives V_1."""
    if multiplier_sign not in (1, -1):
        raise DomainError("multiplier_sign must be +1 or -1")
    A = params.A if multiplier is None else multiplier
    layout = QubitLayout.standard(params.L)
    gates = phase_multiplier_gates(A, params.N, layout.register1, layout.register2, multiplier_sign)
    return Circuit(layout, gates, {"builder": "phase_multiplier", "N": params.N, "A": A,
                                   "L": params.L, "sign": multiplier_sign})


# -- modified QFT --------------------------------------------------------------


def modified_qft_gates(A: int, qubits: Sequence[int], inverse: bool = False) -> list[GateOp]:
    """F^A |k> = 2**(-L/2) sum_l exp(-2 pi i A k l / 2**L) |l>, A odd.

    Textbook QFT layout with R_k^A = diag(1, exp(-2 pi i A / 2**k)), then
    explicit swaps for the bit reversal.
    """
    if A % 2 == 0:
        raise DomainError(f"modified QFT needs an odd multiplier, got {A}")
    L = len(qubits)
    gates: list[GateOp] = []
    for p in range(L):
        gates.append(H(qubits[p]))
        for j in range(p + 1, L):
            k = j - p + 1
            gates.append(Phase(qubits[p], _angle(A % (1 << k), 1 << k, -1)).controlled(qubits[j]))
    for p in range(L // 2):
        gates.append(Swap(qubits[p], qubits[L - 1 - p]))
    if inverse:
        gates = [g.inverse() for g in reversed(gates)]
    return gates


def build_modified_qft(L: int, A: int, inverse: bool = False) -> Circuit:
    check_capacity(L)
    layout = QubitLayout(register1=tuple(range(L)), register2=())
    return Circuit(layout, modified_qft_gates(A, layout.register1, inverse),
                   {"builder": "modified_qft", "L": L, "A": A, "inverse": inverse})


# -- resets --------------------------------------------------------------------


def unitary_reset_gates(phase_A: int, direction: int, N: int, reg_a: Sequence[int],
                        reg_b: Sequence[int]) -> list[GateOp]:
    """Clear ``reg_a`` using the shift eigenphase held by ``reg_b``, then swap.

    F^{phase_A, dagger} on reg_a, reg_a qubit at bit position p controls
    W^(2**(L-p)) (direction +1) or its adjoint (direction -1) on reg_b,
    Hadamards on reg_a, register swap.
    """
    L = len(reg_a)
    gates = modified_qft_gates(phase_A, reg_a, inverse=True)
    for p in range(1, L + 1):
        shift = (1 << (L - p)) % N
        gates.append(ModShift(reg_b, shift, N, direction).controlled(reg_a[p - 1]))
    gates.extend(H(q) for q in reg_a)
    gates.extend(Swap(a, b) for a, b in zip(reg_a, reg_b))
    return gates


def measured_reset_gates(reg_a: Sequence[int], reg_b: Sequence[int], label: str) -> list[GateOp]:
    """Swap, then clear ``reg_b`` by measuring it and undoing the QFT phases.

    After the measurement reg_b holds a basis value m. The e^{+} QFT maps it
    to a product of (|0> + e^{2 pi i m / 2**K}|1>) factors, the feed-forward
    phases remove each factor's phase and the Hadamards return |0>.
    """
    L = len(reg_b)
    gates: list[GateOp] = [Swap(a, b) for a, b in zip(reg_a, reg_b)]
    gates.append(GateOp("measure", tuple(reg_b), params={"label": label}))
    gates.extend(modified_qft_gates(1, reg_b, inverse=True))
    for K in range(1, L + 1):
        gates.append(GateOp("feedphase", (reg_b[K - 1],), params={"label": label, "exponent": K}))
    gates.extend(H(q) for q in reg_b)
    return gates


def build_reset(params: ModMulParams, phase_A: int, direction: int = 1,
                strategy: ResetStrategy | str = ResetStrategy.UNITARY, label: str = "reset") -> Circuit:
    """K_G (phase_A = A, direction +1) or K_F (phase_A = 1, direction -1)."""
    strategy = ResetStrategy(strategy)
    if direction not in (1, -1):
        raise DomainError("direction must be +1 (W) or -1 (W dagger)")
    layout = QubitLayout.standard(params.L)
    if strategy is ResetStrategy.UNITARY:
        if phase_A % 2 == 0:
            raise DomainError(f"unitary reset needs an odd phase multiplier, got {phase_A}")
        gates = unitary_reset_gates(phase_A, direction, params.N, layout.register1, layout.register2)
    else:
        gates = measured_reset_gates(layout.register1, layout.register2, label)
    return Circuit(layout, gates, {"builder": "reset", "N": params.N, "L": params.L,
                                   "phase_A": phase_A, "direction": direction,
                                   "strategy": strategy.value})


# -- modular multiplication ----------------------------------------------------


def modmul_stages(params: ModMulParams, strategy: ResetStrategy | str = ResetStrategy.UNITARY,
                  layout: QubitLayout | None = None) -> list[tuple[str, list[GateOp]]]:
    """The six named stages of the modular multiplication circuit, in order."""
    strategy = ResetStrategy(strategy)
    N, A = params.N, params.A
    layout = layout or QubitLayout.standard(params.L)
    r1, r2 = layout.register1, layout.register2

    def reset(phase_A: int, direction: int, label: str) -> list[GateOp]:
        if strategy is ResetStrategy.UNITARY:
            return unitary_reset_gates(phase_A, direction, N, r1, r2)
        return measured_reset_gates(r1, r2, label)

    return [
        ("S", superposition_gates(N, r2)),
        ("V_A_dagger", phase_multiplier_gates(A, N, r1, r2, -1)),
        ("K_G", reset(A, 1, "reset_G")),
        ("S", superposition_gates(N, r2)),
        ("V_1", phase_multiplier_gates(1, N, r1, r2, 1)),
        ("K_F", reset(1, -1, "reset_F")),
    ]


def build_modmul(params: ModMulParams, strategy: ResetStrategy | str = ResetStrategy.UNITARY,
                 layout: QubitLayout | None = None) -> Circuit:
    strategy = ResetStrategy(strategy)
    layout = layout or QubitLayout.standard(params.L)
    check_capacity(layout.num_qubits)
    gates = [g for _, stage in modmul_stages(params, strategy, layout) for g in stage]
    return Circuit(layout, gates,
                   {"builder": "modmul", "N": params.N, "A": params.A, "L": params.L,
                    "strategy": strategy.value})


def build_ideal_modmul(params: ModMulParams, layout: QubitLayout | None = None) -> Circuit:
    layout = layout or QubitLayout.standard(params.L)
    return Circuit(layout, [ModMul(layout.register1, params.A % params.N, params.N)],
                   {"builder": "ideal_modmul", "N": params.N, "A": params.A, "L": params.L})


# -- reset phases --------------------------------------------------------------


@dataclass(frozen=True)
class ResetPhases:
    """theta_k = 0.m_k...m_L - 2**(k-1) m / N, reduced to (-1/2, 1/2]."""

    N: int
    A: int
    m: int
    theta: tuple[Fraction, ...]

    @property
    def probability(self) -> float:
        """prod_k cos^2(pi A theta_k): chance the cleared register reads |0>."""
        p = 1.0
        for th in self.theta:
            p *= math.cos(math.pi * float(_reduce(self.A * th))) ** 2
        return p

    @property
    def amplitude(self) -> complex:
        """prod_k (1 + exp(2 pi i A theta_k)) / 2, the |0> amplitude itself."""
        amp = 1.0 + 0.0j
        for th in self.theta:
            x = math.pi * float(_reduce(self.A * th))
            amp *= math.cos(x) * cmath.exp(1j * x)
        return amp


def _reduce(x: Fraction) -> Fraction:
    x = x - math.floor(x)
    return x - 1 if x > Fraction(1, 2) else x


def compute_reset_phases(params: ModMulParams, m: int, multiplier: int | None = None) -> ResetPhases:
    """Exact rational reset phases for value m (``multiplier`` defaults to params.A)."""
    N, L = params.N, params.L
    if not 0 <= m < N:
        raise DomainError(f"m must lie in [0, {N}), got {m}")
    A = params.A if multiplier is None else multiplier
    thetas = []
    for k in range(1, L + 1):
        scaled = m << (k - 1)
        binary_fraction = Fraction(scaled % (1 << L), 1 << L)
        thetas.append(_reduce(binary_fraction - Fraction(scaled, N)))
    return ResetPhases(N, A, m, tuple(thetas))


# -- order finding -------------------------------------------------------------


def order_finding_multipliers(N: int, A_raw: int, t: int) -> list[int]:
    """Odd multipliers for the controlled U_{A^(2^k)}, k = 0..t-1."""
    return [canonical_odd_multiplier(mod_pow(A_raw, 1 << k, N), N) for k in range(t)]


def default_control_count(N: int) -> int:
    L = N.bit_length()
    return max(1, min(2 * L, 26 - 2 * L))


def build_order_finding(N: int, A_raw: int, t: int | None = None,
                        backend: Backend | str = Backend.IDEAL) -> Circuit:
    """Phase estimation of U_A with t control qubits; work register starts at |1>.

    Control qubit k (weight 2**k in the read-out value, i.e. the k-th from
    the least significant end) drives U_{A^(2^k)}.
    """
    backend = Backend(backend)
    if N < 3 or N % 2 == 0:
        raise DomainError(f"modulus must be odd and >= 3, got {N}")
    if math.gcd(A_raw, N) != 1:
        raise DomainError(f"multiplier {A_raw} not coprime to {N}")
    L = N.bit_length()
    t = default_control_count(N) if t is None else t
    if t < 1:
        raise DomainError("need at least one control qubit")
    if 2 * L + t > 26:
        raise CapacityError(f"2L + t = {2 * L + t} exceeds the 26-qubit capacity")
    layout = QubitLayout.standard(L, t)
    controls = layout.controls
    gates: list[GateOp] = [Ry(layout.register1[-1], math.pi / 2)]
    gates.extend(H(c) for c in controls)
    for k, a in enumerate(order_finding_multipliers(N, A_raw, t)):
        ctrl = controls[t - 1 - k]
        params = ModMulParams(N, a, L)
        if backend is Backend.IDEAL:
            block = build_ideal_modmul(params, layout)
        else:
            block = build_modmul(params, ResetStrategy.UNITARY, layout)
        gates.extend(with_control(block, ctrl).gates)
    gates.extend(modified_qft_gates(1, controls))
    return Circuit(layout, gates, {"builder": "order_finding", "N": N, "A": A_raw, "L": L,
                                   "t": t, "backend": backend.value})
