import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dftshor.builders import (
    build_modified_qft,
    build_modmul,
    build_order_finding,
    build_superposition,
)
from dftshor.circuit import (
    Circuit,
    CircuitError,
    CircuitParseError,
    CostModel,
    GateOp,
    H,
    ModShift,
    Phase,
    QubitLayout,
    Ry,
    Swap,
    deserialize,
    gate_count,
    serialize,
    with_control,
)
from dftshor.numtheory import ModMulParams
from dftshor.simulator import evolve

from oracles import circuit_matrix

LAYOUT2 = QubitLayout.standard(2)


def test_layout_standard_order():
    lay = QubitLayout.standard(3, 2)
    assert lay.controls == (0, 1)
    assert lay.register1 == (2, 3, 4)
    assert lay.register2 == (5, 6, 7)
    assert lay.num_qubits == 8
    assert QubitLayout.from_dict(lay.to_dict()) == lay
    with pytest.raises(CircuitError):
        QubitLayout((0, 1), (1, 2))


def test_gate_validation():
    with pytest.raises(CircuitError):
        GateOp("hadamard", (0,), ((0, True),))
    with pytest.raises(CircuitError):
        GateOp("phase", (0,))
    with pytest.raises(CircuitError):
        GateOp("teleport", (0,))
    with pytest.raises(CircuitError):
        ModShift((0, 1), 1, 5)  # modulus exceeds a 2-qubit register
    with pytest.raises(CircuitError):
        GateOp("rotation", (0,), angle=float("nan"))


def test_gate_inverse():
    assert Phase(0, 0.3).inverse().angle == -0.3
    assert Ry(0, 0.3).inverse().angle == -0.3
    shift = ModShift((0, 1, 2), 3, 5, 1)
    assert shift.inverse().params["direction"] == -1


def test_with_control_empty_and_collisions():
    empty = Circuit(LAYOUT2, ())
    assert len(with_control(empty, 7)) == 0
    circ = Circuit(LAYOUT2, (H(0),))
    with pytest.raises(CircuitError):
        with_control(circ, 0)
    with pytest.raises(CircuitError):
        with_control(circ, 2)  # inside register2
    measured = build_modmul(ModMulParams(5, 3, 3), "measured")
    with pytest.raises(CircuitError):
        with_control(measured, 9)


def test_with_control_off_branch_is_identity():
    circ = with_control(Circuit(LAYOUT2, (H(0),)), 4)
    Q = 5
    state = np.zeros(1 << Q, complex)
    state[0] = 1
    out = evolve(state, circ, Q)
    assert np.allclose(out, state, atol=1e-15)


def test_with_control_twice_matches_doubly_controlled_oracle():
    base = Circuit(QubitLayout((0, 1), (2, 3)),
                   (H(0), Phase(1, 0.7).controlled(0), ModShift((2, 3), 1, 3, 1).controlled(1), Swap(0, 3)))
    twice = with_control(with_control(base, 4), 5, polarity=False)
    Q = 6
    U = circuit_matrix(twice, Q)
    rng = np.random.default_rng(3)
    psi = rng.normal(size=(4, 1 << Q)) + 1j * rng.normal(size=(4, 1 << Q))
    out = evolve(psi, twice, Q)
    assert np.max(np.abs(out - psi @ U.T)) <= 1e-12
    # projector picture: only the (c4=1, c5=0) block carries the base unitary
    Ub = circuit_matrix(base, 4)
    block = U.reshape(16, 4, 16, 4)  # rest x (c4 c5), controls are the low bits
    assert np.allclose(block[:, 2, :, 2], Ub, atol=1e-12)
    for c in (0, 1, 3):
        assert np.allclose(block[:, c, :, c], np.eye(16), atol=1e-12)


def test_gate_count_examples():
    assert gate_count(Circuit(LAYOUT2, ())).total_cost == 0
    assert gate_count(build_superposition(15, 4)).total_gates <= 10
    qft = gate_count(build_modified_qft(5, 3))
    assert qft.counts["hadamard"] == 5 and qft.counts["phase"] == 10
    assert qft.counts["swap"] == 2


def test_cost_model_controls_and_modshift():
    g = ModShift((0, 1, 2), 1, 5).controlled(3)
    assert CostModel().cost(g) == 3.0
    assert CostModel(control_multiplier=2.0, mod_shift_coefficient=0.5).cost(g) == 3.0
    assert CostModel(mod_shift_cost=lambda L: L ** 1.5).cost(g) == pytest.approx(3 ** 1.5)
    with pytest.raises(CircuitError):
        CostModel(control_multiplier=-1)


def test_gate_count_additive():
    a = build_modmul(ModMulParams(15, 7, 4))
    b = build_modmul(ModMulParams(15, 11, 4))
    model = CostModel(mod_shift_coefficient=2.5, control_multiplier=1.5)
    joined = gate_count(a + b, model)
    summed = gate_count(a, model) + gate_count(b, model)
    assert joined.counts == summed.counts
    assert joined.total_cost == pytest.approx(summed.total_cost)


BUILDERS = [
    lambda: build_superposition(11, 4),
    lambda: build_modified_qft(4, 5, inverse=True),
    lambda: build_modmul(ModMulParams(15, 7, 4)),
    lambda: build_modmul(ModMulParams(21, 5, 5), "measured"),
    lambda: build_order_finding(15, 7, 4, "paper-circuit"),
    lambda: build_order_finding(21, 2, 6, "ideal"),
]


@pytest.mark.parametrize("make", BUILDERS)
def test_round_trip_builder_outputs(make):
    circ = make()
    text = serialize(circ)
    back = deserialize(text)
    assert back == circ
    assert serialize(back) == text


def test_serialized_records_are_explicit():
    circ = with_control(Circuit(LAYOUT2, (Phase(1, math.pi / 3).controlled(0, False),)), 4)
    lines = serialize(circ).splitlines()
    header = json.loads(lines[0])
    assert header["format"] == "dftshor-circuit" and header["layout"]["register1"] == [0, 1]
    rec = json.loads(lines[1])
    assert rec["kind"] == "phase"
    assert rec["controls"] == [[0, "-"], [4, "+"]]
    assert rec["angle"] == math.pi / 3


angles = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@st.composite
def random_gates(draw, Q=5):
    kind = draw(st.sampled_from(["hadamard", "rotation", "phase", "swap", "modshift"]))
    qubits = draw(st.permutations(range(Q)))
    if kind == "swap":
        targets, rest = qubits[:2], qubits[2:]
    elif kind == "modshift":
        targets, rest = qubits[:3], qubits[3:]
    else:
        targets, rest = qubits[:1], qubits[1:]
    nctl = draw(st.integers(0, min(2, len(rest))))
    controls = tuple((q, draw(st.booleans())) for q in rest[:nctl])
    if kind == "modshift":
        N = draw(st.integers(2, 8))
        return GateOp(kind, tuple(targets), controls,
                      params={"shift": draw(st.integers(0, N - 1)), "modulus": N,
                              "direction": draw(st.sampled_from([1, -1]))})
    angle = draw(angles) if kind in ("rotation", "phase") else None
    return GateOp(kind, tuple(targets), controls, angle)


@settings(max_examples=60, deadline=None)
@given(st.lists(random_gates(), max_size=12))
def test_round_trip_random_circuits(gates):
    circ = Circuit(QubitLayout((0, 1), (2, 3), (4,)), tuple(gates), {"note": "random"})
    assert deserialize(serialize(circ)) == circ


@pytest.mark.parametrize("text,line", [
    ("", 1),
    ('{"format": "other", "version": 1, "layout": {}}\n', 1),
    ('{"format": "dftshor-circuit", "version": 1, "layout": {"register1": [0], "register2": [1]}}\n{"kind": "hadamard", "targets": [0]\n', 2),
    ('{"format": "dftshor-circuit", "version": 1, "layout": {"register1": [0], "register2": [1]}}\n{"kind": "hadamard"}\n', 2),
    ('{"format": "dftshor-circuit", "version": 1, "layout": {"register1": [0], "register2": [1]}}\n\n{"kind": "phase", "targets": [0], "controls": [[1, "?"]], "angle": 1}\n', 3),
])
def test_parse_errors_report_position(text, line):
    with pytest.raises(CircuitParseError) as info:
        deserialize(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)
