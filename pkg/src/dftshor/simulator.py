"""Dense state-vector simulation of the gate IR.

Amplitudes are complex128. Qubit 0 is the most significant bit of the
amplitude index. Internally every kernel works on an array of shape
``(batch, 2, 2, ..., 2)`` so a stack of independent states can be evolved
through the same circuit in one pass; ``StateVector`` is the batch-of-one
public face.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .circuit import Circuit, CircuitError, GateOp

MAX_QUBITS = 26
_SQRT_HALF = np.sqrt(0.5)


class CapacityError(ValueError):
    pass


def check_capacity(num_qubits: int) -> None:
    if num_qubits > MAX_QUBITS:
        raise CapacityError(f"{num_qubits} qubits exceeds the {MAX_QUBITS}-qubit capacity")


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        check_capacity(self.num_qubits)
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    @classmethod
    def zero(cls, num_qubits: int) -> "StateVector":
        return cls.basis(num_qubits, 0)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "StateVector":
        check_capacity(num_qubits)
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_registers(cls, num_qubits: int, assignment: dict) -> "StateVector":
        """Basis state with each register (tuple of qubits, MSB first) holding a value."""
        return cls.basis(num_qubits, basis_index(num_qubits, assignment))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


def basis_index(num_qubits: int, assignment: dict) -> int:
    index = 0
    for qubits, value in assignment.items():
        if value >= 1 << len(qubits) or value < 0:
            raise ValueError(f"value {value} does not fit in {len(qubits)} qubits")
        for pos, q in enumerate(qubits):
            if q >= num_qubits:
                raise IndexError(f"qubit {q} out of range for {num_qubits} qubits")
            bit = (value >> (len(qubits) - 1 - pos)) & 1
            index |= bit << (num_qubits - 1 - q)
    return index


@dataclass
class MeasurementOutcome:
    register_value: int
    probability: float
    post_state: StateVector


# -- kernels -------------------------------------------------------------------


def _select(Q: int, controls, fixed=()) -> list:
    """Index list over a (batch, 2, ..., 2) array pinning control and fixed axes."""
    idx: list = [slice(None)] * (Q + 1)
    for q, pol in controls:
        idx[q + 1] = slice(1, 2) if pol else slice(0, 1)
    for q, v in fixed:
        idx[q + 1] = v
    return idx


@lru_cache(maxsize=512)
def _register_permutation(kind: str, width: int, a: int, N: int, direction: int) -> np.ndarray:
    """Source index for each destination register value."""
    dim = 1 << width
    src = np.arange(dim)
    n = np.arange(N)
    if kind == "modshift":
        # |n> -> |n - d*a>; destination v is fed from v + d*a
        src[:N] = (n + direction * a) % N
    else:
        inv = pow(a, -1, N)
        src[:N] = (n * inv) % N
    src.flags.writeable = False
    return src


def _apply_one(psi: np.ndarray, gate: GateOp, Q: int, classical: dict, rng) -> None:
    """Apply one gate in place to ``psi`` of shape (batch,) + (2,)*Q."""
    kind = gate.kind
    if any(q >= Q for q in gate.qubits):
        raise IndexError(f"{kind} gate on qubits {gate.qubits} exceeds {Q} qubits")
    ctl = gate.controls

    if kind in ("phase", "feedphase"):
        if kind == "phase":
            phase = np.exp(1j * gate.angle)
        else:
            m = classical[gate.params["label"]]
            K = gate.params["exponent"]
            phase = np.exp(-2j * np.pi * (m % (1 << K)) / (1 << K))
        t = gate.targets[0]
        idx = _select(Q, ctl, [(t, 1)])
        psi[tuple(idx)] *= phase
        return

    if kind in ("hadamard", "rotation"):
        t = gate.targets[0]
        if ctl:
            a0 = psi[tuple(_select(Q, ctl, [(t, 0)]))]
            a1 = psi[tuple(_select(Q, ctl, [(t, 1)]))]
        else:
            pairs = psi.reshape(psi.shape[0] << t, 2, -1)
            a0, a1 = pairs[:, 0], pairs[:, 1]
        if kind == "hadamard":
            tmp = a0 - a1
            a0 += a1
            a0 *= _SQRT_HALF
            np.multiply(tmp, _SQRT_HALF, out=a1)
        else:
            c, s = np.cos(gate.angle), np.sin(gate.angle)
            tmp = s * a0
            a0 *= c
            a0 -= s * a1
            a1 *= c
            a1 += tmp
        return

    if kind == "swap":
        q1, q2 = gate.targets
        i01 = tuple(_select(Q, ctl, [(q1, 0), (q2, 1)]))
        i10 = tuple(_select(Q, ctl, [(q1, 1), (q2, 0)]))
        tmp = psi[i01].copy()
        psi[i01] = psi[i10]
        psi[i10] = tmp
        return

    if kind in ("modshift", "modmul"):
        reg = gate.targets
        p = gate.params
        if kind == "modshift":
            src = _register_permutation(kind, len(reg), p["shift"], p["modulus"], p["direction"])
        else:
            src = _register_permutation(kind, len(reg), p["multiplier"], p["modulus"], 0)
        view = psi[tuple(_select(Q, ctl))]
        moved = np.moveaxis(view, [q + 1 for q in reg], range(view.ndim - len(reg), view.ndim))
        flat = moved.reshape(moved.shape[: view.ndim - len(reg)] + (1 << len(reg),))
        moved[...] = flat[..., src].reshape(moved.shape)
        return

    if kind == "measure":
        if psi.shape[0] != 1:
            raise CircuitError("measurement is only defined for a single state")
        value, _ = _measure_inplace(psi, gate.targets, Q, rng)
        classical[gate.params["label"]] = value
        return

    raise CircuitError(f"unsupported gate kind {kind}")


def _marginal(psi: np.ndarray, qubits, Q: int) -> np.ndarray:
    probs = np.abs(psi[0]) ** 2
    others = tuple(q for q in range(Q) if q not in qubits)
    marg = probs.sum(axis=others) if others else probs
    # remaining axes are in ascending qubit order; reorder to the register order
    order = sorted(qubits)
    marg = np.transpose(marg, [order.index(q) for q in qubits])
    return marg.reshape(-1)


def _measure_inplace(psi: np.ndarray, qubits, Q: int, rng) -> tuple[int, float]:
    marg = _marginal(psi, qubits, Q)
    marg = marg / marg.sum()
    value = int(rng.choice(marg.size, p=marg))
    prob = float(marg[value])
    bits = [(q, (value >> (len(qubits) - 1 - i)) & 1) for i, q in enumerate(qubits)]
    mask = np.zeros(psi.shape, dtype=bool)
    mask[tuple(_select(Q, (), bits))] = True
    psi[~mask] = 0.0
    psi /= np.sqrt(np.vdot(psi, psi).real)
    return value, prob


def _as_tensor(amplitudes: np.ndarray, Q: int) -> np.ndarray:
    return amplitudes.reshape((-1,) + (2,) * Q)


@lru_cache(maxsize=256)
def _fused_phases(gates: tuple[GateOp, ...], Q: int) -> np.ndarray:
    """Combined diagonal of a run of phase gates, as a length-2**Q vector."""
    index = np.arange(1 << Q, dtype=np.int64)
    total = np.zeros(1 << Q)
    for g in gates:
        mask = ((index >> (Q - 1 - g.targets[0])) & 1).astype(bool)
        for q, pol in g.controls:
            bit = ((index >> (Q - 1 - q)) & 1).astype(bool)
            mask &= bit if pol else ~bit
        total[mask] += g.angle
    return np.exp(1j * total)


_PERMUTATION_KINDS = ("swap", "modshift", "modmul")
_LOCAL_KINDS = ("hadamard", "rotation")
# permutation runs are fused into one gather only while the index table stays small
_MAX_FUSED_PERMUTATION_QUBITS = 20
_MAX_BLOCK_QUBITS = 4


def _fusion_class(g: GateOp, Q: int) -> str | None:
    if g.kind == "phase":
        return "phases"
    if g.kind in _LOCAL_KINDS and not g.controls:
        return "local"
    if g.kind in _PERMUTATION_KINDS and Q <= _MAX_FUSED_PERMUTATION_QUBITS:
        return "permutation"
    return None


def _segments(gates, fuse: bool, Q: int):
    """Group gates for application.

    With ``fuse`` set, maximal runs of phase gates, of uncontrolled
    Hadamard/rotation gates, and of basis permutations (swaps and modular
    shifts, controlled or not) are yielded as ("phases" | "local" |
    "permutation", run); a permutation run made only of uncontrolled swaps
    is reported as "swaps". Anything else is ("gate", gate).
    """
    def close(kind, run):
        if len(run) == 1 and kind != "local":
            return ("gate", run[0])
        if kind == "permutation" and all(_is_plain_swap(g) for g in run):
            return ("swaps", run)
        return (kind, run)

    run: list[GateOp] = []
    run_kind = None
    for g in gates:
        kind = _fusion_class(g, Q) if fuse else None
        if run and kind != run_kind:
            yield close(run_kind, run)
            run = []
        if kind is None:
            yield ("gate", g)
        else:
            run.append(g)
            run_kind = kind
    if run:
        yield close(run_kind, run)


def _is_plain_swap(g: GateOp) -> bool:
    return g.kind == "swap" and not g.controls


def _swap_axes(gates, Q: int) -> list[int]:
    """Axis order (over the batch tensor) equivalent to a run of swaps."""
    holder = list(range(Q))  # holder[q] = original qubit whose value now sits on q
    for g in gates:
        a, b = g.targets
        holder[a], holder[b] = holder[b], holder[a]
    return [0] + [h + 1 for h in holder]


def _single_qubit_matrix(g: GateOp) -> np.ndarray:
    if g.kind == "hadamard":
        return np.array([[1.0, 1.0], [1.0, -1.0]]) * _SQRT_HALF
    c, s = np.cos(g.angle), np.sin(g.angle)
    return np.array([[c, -s], [s, c]])


@lru_cache(maxsize=256)
def _local_blocks(gates: tuple[GateOp, ...], Q: int) -> tuple:
    """Real blocks (first_qubit, width, matrix) equivalent to a run of
    uncontrolled single-qubit gates.

    Gates on distinct qubits commute, so each qubit's gates are multiplied
    in order and adjacent qubits are grouped into Kronecker blocks. A block
    near the least significant end is widened with an identity factor so
    it can be applied as one right-multiplication of the float view.
    """
    per_qubit: dict[int, np.ndarray] = {}
    for g in gates:
        q = g.targets[0]
        per_qubit[q] = _single_qubit_matrix(g) @ per_qubit.get(q, np.eye(2))
    blocks = []
    qubits = sorted(per_qubit)
    i = 0
    while i < len(qubits):
        j = i + 1
        while j < len(qubits) and qubits[j] == qubits[j - 1] + 1 and j - i < _MAX_BLOCK_QUBITS:
            j += 1
        mat = np.eye(1)
        for q in qubits[i:j]:
            mat = np.kron(mat, per_qubit[q])
        rest = 1 << (Q - qubits[j - 1] - 1)
        if rest < 8:
            # float view interleaves re/im, hence the extra factor of 2
            mat = np.ascontiguousarray(np.kron(mat, np.eye(2 * rest)).T)
        blocks.append((qubits[i], j - i, rest < 8, mat))
        i = j
    return tuple(blocks)


def _apply_local(psi: np.ndarray, gates: tuple[GateOp, ...], Q: int) -> np.ndarray:
    """Apply a fused local run; returns the (possibly new) tensor."""
    batch = psi.shape[0]
    for q0, width, right, mat in _local_blocks(gates, Q):
        # real matrix acting on complex amplitudes: work on the float view
        if right:
            view = psi.reshape(batch << q0, -1).view(np.float64)
            out = view @ mat
        else:
            view = psi.reshape(batch << q0, 1 << width, -1).view(np.float64)
            out = np.matmul(mat, view)
        psi = out.view(np.complex128).reshape(psi.shape)
    return psi


@lru_cache(maxsize=256)
def _fused_permutation(gates: tuple[GateOp, ...], Q: int) -> np.ndarray:
    """Source index table for a run of permutation gates: out[i] = in[table[i]]."""
    table = np.arange(1 << Q, dtype=np.int64).reshape((1,) + (2,) * Q)
    for g in gates:
        _apply_one(table, g, Q, {}, None)
    table = table.reshape(-1)
    table.flags.writeable = False
    return table


def evolve(amplitudes: np.ndarray, circuit: Circuit, num_qubits: int | None = None,
           seed: int | None = None, classical: dict | None = None,
           fuse: bool = True) -> np.ndarray:
    """Evolve a stack of states (shape ``(batch, 2**Q)`` or ``(2**Q,)``) through ``circuit``.

    Returns a new array of the same shape. Measurements require a batch of
    one and a ``seed``; outcomes are written into ``classical`` if given.
    With ``fuse`` set, runs of phase gates become one diagonal multiply,
    runs of uncontrolled single-qubit rotations become small dense blocks
    and runs of basis permutations become one gather; results agree with
    gate-by-gate application to rounding error.
    """
    Q = num_qubits if num_qubits is not None else int(np.log2(amplitudes.shape[-1]))
    check_capacity(Q)
    if circuit.num_qubits > Q:
        raise IndexError(f"circuit spans {circuit.num_qubits} qubits, state has {Q}")
    shape = amplitudes.shape
    psi = _as_tensor(np.array(amplitudes, dtype=np.complex128, copy=True), Q)
    rng = None
    if not circuit.is_unitary:
        if seed is None:
            raise CircuitError("circuit contains measurements; a seed is required")
        rng = np.random.default_rng(seed)
    record = {} if classical is None else classical
    flat = psi.reshape(psi.shape[0], -1)
    for what, item in _segments(circuit.gates, fuse, Q):
        if what == "gate":
            _apply_one(psi, item, Q, record, rng)
            continue
        if any(q >= Q for g in item for q in g.qubits):
            raise IndexError(f"gate run exceeds {Q} qubits")
        run = tuple(item)
        if what == "phases":
            flat *= _fused_phases(run, Q)
        elif what == "local":
            psi = _apply_local(psi, run, Q)
            flat = psi.reshape(psi.shape[0], -1)
        elif what == "swaps":
            psi = np.ascontiguousarray(np.transpose(psi, _swap_axes(run, Q)))
            flat = psi.reshape(psi.shape[0], -1)
        else:
            flat[...] = np.take(flat, _fused_permutation(run, Q), axis=1)
    return psi.reshape(shape)


# -- public API ----------------------------------------------------------------


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    if not gate.is_unitary:
        raise CircuitError(f"{gate.kind} is not unitary; use measure_register")
    psi = _as_tensor(state.amplitudes.copy(), state.num_qubits)
    _apply_one(psi, gate, state.num_qubits, {}, None)
    return StateVector(state.num_qubits, psi.reshape(-1))


def apply_circuit(state: StateVector, circuit: Circuit, seed: int | None = None,
                  classical: dict | None = None) -> StateVector:
    out = evolve(state.amplitudes, circuit, state.num_qubits, seed=seed, classical=classical)
    return StateVector(state.num_qubits, out)


def register_value_distribution(state: StateVector, qubits) -> dict[int, float]:
    qubits = tuple(qubits)
    marg = _marginal(_as_tensor(state.amplitudes, state.num_qubits), qubits, state.num_qubits)
    return {int(v): float(p) for v, p in enumerate(marg) if p > 0.0}


def register_probabilities(state: StateVector, qubits) -> np.ndarray:
    """Dense version of :func:`register_value_distribution`."""
    return _marginal(_as_tensor(state.amplitudes, state.num_qubits), tuple(qubits), state.num_qubits)


def measure_register(state: StateVector, qubits, rng_seed: int) -> MeasurementOutcome:
    psi = _as_tensor(state.amplitudes.copy(), state.num_qubits)
    value, prob = _measure_inplace(psi, tuple(qubits), state.num_qubits, np.random.default_rng(rng_seed))
    return MeasurementOutcome(value, prob, StateVector(state.num_qubits, psi.reshape(-1)))


def overlap(state_a: StateVector, state_b: StateVector) -> complex:
    if state_a.num_qubits != state_b.num_qubits:
        raise ValueError(
            f"dimension mismatch: {state_a.num_qubits} vs {state_b.num_qubits} qubits"
        )
    return complex(np.vdot(state_a.amplitudes, state_b.amplitudes))


def fidelity(state_a: StateVector, state_b: StateVector) -> float:
    return abs(overlap(state_a, state_b)) ** 2
