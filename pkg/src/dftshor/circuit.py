"""Gate-level circuit IR, control decoration, cost counting and JSON-lines I/O.

Qubit indices are global. Within a register, the first listed qubit is the
most significant bit of the register value, and the global amplitude index
puts qubit 0 in the most significant position.

Gate kinds
----------
``hadamard``   targets ``(q,)``
``rotation``   targets ``(q,)``, ``angle`` th: |0> -> cos th|0> + sin th|1>
``phase``      targets ``(q,)``, ``angle`` phi: diag(1, exp(i phi))
``swap``       targets ``(q1, q2)``
``modshift``   targets = register qubits; params ``shift``, ``modulus``,
               ``direction`` (+1: |n> -> |n - shift mod N>, -1: |n> -> |n + shift mod N>),
               identity on register values >= N
``modmul``     targets = register qubits; params ``multiplier``, ``modulus``:
               |n> -> |A n mod N> for n < N, identity above
``measure``    targets = register qubits; params ``label``; computational-basis
               measurement whose outcome is stored under ``label``
``feedphase``  targets ``(q,)``; params ``label``, ``exponent`` K:
               diag(1, exp(-2 pi i m / 2**K)) with m the stored outcome
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable

UNITARY_KINDS = ("hadamard", "rotation", "phase", "swap", "modshift", "modmul")
CLASSICAL_KINDS = ("measure", "feedphase")
KINDS = UNITARY_KINDS + CLASSICAL_KINDS
FORMAT_NAME = "dftshor-circuit"
FORMAT_VERSION = 1


class CircuitError(ValueError):
    pass


class CircuitParseError(CircuitError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class QubitLayout:
    register1: tuple[int, ...]
    register2: tuple[int, ...]
    controls: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        everything = self.controls + self.register1 + self.register2
        if len(set(everything)) != len(everything):
            raise CircuitError("layout qubit indices must be disjoint")
        if any(q < 0 for q in everything):
            raise CircuitError("qubit indices must be non-negative")

    @classmethod
    def standard(cls, L: int, t: int = 0) -> "QubitLayout":
        """Global order (controls, register1, register2), MSB first in each."""
        return cls(
            register1=tuple(range(t, t + L)),
            register2=tuple(range(t + L, t + 2 * L)),
            controls=tuple(range(t)),
        )

    @property
    def L(self) -> int:
        return len(self.register1)

    @property
    def num_qubits(self) -> int:
        qubits = self.controls + self.register1 + self.register2
        return max(qubits) + 1 if qubits else 0

    def to_dict(self) -> dict:
        return {
            "register1": list(self.register1),
            "register2": list(self.register2),
            "controls": list(self.controls),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QubitLayout":
        return cls(tuple(d["register1"]), tuple(d["register2"]), tuple(d.get("controls", ())))


@dataclass(frozen=True, eq=True)
class GateOp:
    kind: str
    targets: tuple[int, ...]
    controls: tuple[tuple[int, bool], ...] = ()
    angle: float | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        object.__setattr__(
            self, "controls", tuple((int(q), bool(p)) for q, p in self.controls)
        )
        qubits = self.targets + tuple(q for q, _ in self.controls)
        if len(set(qubits)) != len(qubits):
            raise CircuitError(f"{self.kind}: target and control qubits must be distinct")
        if not self.targets:
            raise CircuitError(f"{self.kind}: no target qubits")
        if self.kind in ("rotation", "phase"):
            if self.angle is None or not math.isfinite(self.angle):
                raise CircuitError(f"{self.kind} needs a finite angle")
        if self.kind in ("hadamard", "rotation", "phase", "feedphase") and len(self.targets) != 1:
            raise CircuitError(f"{self.kind} acts on exactly one qubit")
        if self.kind == "swap" and len(self.targets) != 2:
            raise CircuitError("swap acts on exactly two qubits")
        if self.kind == "modshift":
            self._require("shift", "modulus", "direction")
            if self.params["direction"] not in (1, -1):
                raise CircuitError("modshift direction must be +1 or -1")
        if self.kind == "modmul":
            self._require("multiplier", "modulus")
            if math.gcd(self.params["multiplier"], self.params["modulus"]) != 1:
                raise CircuitError("modmul multiplier must be coprime to the modulus")
        if self.kind in ("modshift", "modmul"):
            if self.params["modulus"] > 1 << len(self.targets):
                raise CircuitError(f"{self.kind}: modulus exceeds register capacity")
        if self.kind == "measure":
            self._require("label")
            if self.controls:
                raise CircuitError("measurements cannot be controlled")
        if self.kind == "feedphase":
            self._require("label", "exponent")

    def __hash__(self) -> int:
        return hash((self.kind, self.targets, self.controls, self.angle,
                     tuple(sorted(self.params.items()))))

    def _require(self, *names: str) -> None:
        missing = [n for n in names if n not in self.params]
        if missing:
            raise CircuitError(f"{self.kind} is missing params {missing}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return self.targets + tuple(q for q, _ in self.controls)

    @property
    def is_unitary(self) -> bool:
        return self.kind in UNITARY_KINDS

    def controlled(self, qubit: int, polarity: bool = True) -> "GateOp":
        if qubit in self.qubits:
            raise CircuitError(f"control qubit {qubit} collides with {self.kind} gate")
        return GateOp(self.kind, self.targets, self.controls + ((qubit, polarity),), self.angle, dict(self.params))

    def inverse(self) -> "GateOp":
        if self.kind in ("hadamard", "swap"):
            return self
        if self.kind in ("rotation", "phase"):
            return GateOp(self.kind, self.targets, self.controls, -self.angle, dict(self.params))
        if self.kind == "modshift":
            params = dict(self.params, direction=-self.params["direction"])
            return GateOp(self.kind, self.targets, self.controls, None, params)
        if self.kind == "modmul":
            N = self.params["modulus"]
            params = dict(self.params, multiplier=pow(self.params["multiplier"], -1, N))
            return GateOp(self.kind, self.targets, self.controls, None, params)
        raise CircuitError(f"{self.kind} has no inverse")

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "targets": list(self.targets),
            "controls": [[q, "+" if p else "-"] for q, p in self.controls],
            "angle": self.angle,
            "params": dict(self.params),
        }


def H(q: int) -> GateOp:
    return GateOp("hadamard", (q,))


def Ry(q: int, angle: float) -> GateOp:
    return GateOp("rotation", (q,), angle=float(angle))


def Phase(q: int, angle: float) -> GateOp:
    return GateOp("phase", (q,), angle=float(angle))


def Swap(q1: int, q2: int) -> GateOp:
    return GateOp("swap", (q1, q2))


def ModShift(register: Iterable[int], shift: int, modulus: int, direction: int = 1) -> GateOp:
    return GateOp(
        "modshift",
        tuple(register),
        params={"shift": shift % modulus, "modulus": modulus, "direction": direction},
    )


def ModMul(register: Iterable[int], multiplier: int, modulus: int) -> GateOp:
    return GateOp("modmul", tuple(register), params={"multiplier": multiplier % modulus, "modulus": modulus})


@dataclass(frozen=True)
class Circuit:
    layout: QubitLayout
    gates: tuple[GateOp, ...] = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        span = self.layout.num_qubits
        for g in self.gates:
            if any(q >= span for q in g.qubits):
                raise CircuitError(f"{g.kind} gate touches qubits outside the layout: {g.qubits}")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    @property
    def num_qubits(self) -> int:
        return self.layout.num_qubits

    @property
    def is_unitary(self) -> bool:
        return all(g.is_unitary for g in self.gates)

    def extend(self, gates: Iterable[GateOp]) -> "Circuit":
        return Circuit(self.layout, self.gates + tuple(gates), self.metadata)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.layout != self.layout:
            raise CircuitError("cannot concatenate circuits with different layouts")
        return self.extend(other.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.layout, tuple(g.inverse() for g in reversed(self.gates)), dict(self.metadata))

    def with_metadata(self, **kw) -> "Circuit":
        return Circuit(self.layout, self.gates, {**self.metadata, **kw})


def with_control(circuit: Circuit, control_qubit: int, polarity: bool = True) -> Circuit:
    """Decorate every gate with one more control.

    The control qubit must not be used by any gate. If it is not already part
    of the layout it is appended to the layout's control list.
    """
    if any(control_qubit in g.qubits for g in circuit.gates):
        raise CircuitError(f"control qubit {control_qubit} is already used by the circuit")
    layout = circuit.layout
    if control_qubit in layout.register1 + layout.register2:
        raise CircuitError(f"control qubit {control_qubit} lies inside a data register")
    if any(g.kind == "measure" for g in circuit.gates):
        raise CircuitError("cannot control a circuit containing measurements")
    if control_qubit not in layout.controls:
        layout = QubitLayout(layout.register1, layout.register2, layout.controls + (control_qubit,))
    gates = tuple(g.controlled(control_qubit, polarity) for g in circuit.gates)
    return Circuit(layout, gates, dict(circuit.metadata))


@dataclass
class CostModel:
    """Per-kind unit costs.

    ``mod_shift_cost(L)`` prices one modular shift on an L-qubit register
    (the adder it stands in for); the default is linear. Each control on a
    gate multiplies its cost by ``control_multiplier``.
    """

    unit_costs: dict = field(
        default_factory=lambda: {k: 1.0 for k in KINDS if k not in ("modshift", "modmul")}
    )
    mod_shift_coefficient: float = 1.0
    mod_shift_cost: Callable[[int], float] | None = None
    control_multiplier: float = 1.0

    def __post_init__(self) -> None:
        if any(c < 0 for c in self.unit_costs.values()) or self.mod_shift_coefficient < 0:
            raise CircuitError("costs must be non-negative")
        if self.control_multiplier < 0:
            raise CircuitError("control multiplier must be non-negative")

    def base_cost(self, gate: GateOp) -> float:
        if gate.kind in ("modshift", "modmul"):
            L = len(gate.targets)
            if self.mod_shift_cost is not None:
                return float(self.mod_shift_cost(L))
            return self.mod_shift_coefficient * L
        return float(self.unit_costs.get(gate.kind, 1.0))

    def cost(self, gate: GateOp) -> float:
        return self.base_cost(gate) * self.control_multiplier ** len(gate.controls)


@dataclass(frozen=True)
class GateCount:
    counts: dict
    total_cost: float

    @property
    def total_gates(self) -> int:
        return sum(self.counts.values())

    def elementary(self) -> int:
        """Gates other than the modular shift/multiply primitives."""
        return sum(n for k, n in self.counts.items() if k not in ("modshift", "modmul"))

    def __add__(self, other: "GateCount") -> "GateCount":
        return GateCount(dict(Counter(self.counts) + Counter(other.counts)), self.total_cost + other.total_cost)


def gate_count(circuit: Circuit, model: CostModel | None = None) -> GateCount:
    model = model or CostModel()
    counts = Counter(g.kind for g in circuit.gates)
    return GateCount(dict(counts), sum(model.cost(g) for g in circuit.gates))


# -- JSON-lines serialization -------------------------------------------------


def serialize(circuit: Circuit) -> str:
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "layout": circuit.layout.to_dict(),
        "metadata": circuit.metadata,
    }
    lines = [json.dumps(header, sort_keys=True)]
    lines.extend(json.dumps(g.to_record(), sort_keys=True) for g in circuit.gates)
    return "\n".join(lines) + "\n"


def _parse_line(text: str, lineno: int) -> dict:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitParseError(exc.msg, lineno, exc.colno) from None
    if not isinstance(obj, dict):
        raise CircuitParseError("expected a JSON object", lineno)
    return obj


def _gate_from_record(rec: dict, lineno: int) -> GateOp:
    unknown = set(rec) - {"kind", "targets", "controls", "angle", "params"}
    if unknown:
        raise CircuitParseError(f"unknown fields {sorted(unknown)}", lineno)
    try:
        controls = []
        for q, pol in rec.get("controls", []):
            if pol not in ("+", "-"):
                raise CircuitParseError(f"control polarity must be '+' or '-', got {pol!r}", lineno)
            controls.append((q, pol == "+"))
        angle = rec.get("angle")
        return GateOp(
            kind=rec["kind"],
            targets=tuple(rec["targets"]),
            controls=tuple(controls),
            angle=None if angle is None else float(angle),
            params=dict(rec.get("params") or {}),
        )
    except CircuitParseError:
        raise
    except KeyError as exc:
        raise CircuitParseError(f"missing field {exc.args[0]!r}", lineno) from None
    except (CircuitError, TypeError, ValueError) as exc:
        raise CircuitParseError(str(exc), lineno) from None


def deserialize(text: str) -> Circuit:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise CircuitParseError("empty document: missing header record", 1)
    header = _parse_line(lines[0], 1)
    if header.get("format") != FORMAT_NAME:
        raise CircuitParseError(f"header format must be {FORMAT_NAME!r}", 1)
    if header.get("version") != FORMAT_VERSION:
        raise CircuitParseError(f"unsupported version {header.get('version')!r}", 1)
    try:
        layout = QubitLayout.from_dict(header["layout"])
    except (KeyError, TypeError, CircuitError) as exc:
        raise CircuitParseError(f"bad layout: {exc}", 1) from None
    gates = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        gates.append(_gate_from_record(_parse_line(line, lineno), lineno))
    try:
        return Circuit(layout, tuple(gates), header.get("metadata") or {})
    except CircuitError as exc:
        raise CircuitParseError(str(exc), len(lines)) from None
