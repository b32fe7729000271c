import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cnotmin.core import (
    Circuit,
    CnotGate,
    FormatError,
    ParityMatrix,
    apply_cnot,
    circuit_to_parity,
    evaluate_outputs,
    hamming_to_identity,
    pack_rows,
    parse_circuit,
    parse_matrix,
    qasm_body,
    random_instance,
    rank_gf2,
    serialize_circuit,
    serialize_matrix,
    unpack_rows,
    verify_synthesis,
)
from cnotmin.topology import builtin

from conftest import FIG3_C1, FIG3_C2, random_circuit


def test_gate_validation():
    with pytest.raises(ValueError):
        CnotGate(1, 1)
    with pytest.raises(ValueError):
        Circuit(3, (CnotGate(0, 5),))


def test_apply_cnot_elementary():
    m = apply_cnot(ParityMatrix.identity(3), CnotGate(0, 1))
    assert m.to_lists() == [[1, 0, 0], [1, 1, 0], [0, 0, 1]]


def test_apply_cnot_involution_example():
    m = ParityMatrix.identity(3)
    g = CnotGate(2, 0)
    assert apply_cnot(apply_cnot(m, g), g) == m


def test_apply_cnot_fig3_row_xor(fig3_matrix):
    out = apply_cnot(fig3_matrix, CnotGate(0, 1))
    assert out.to_lists() == [[1, 0, 0], [0, 1, 1], [0, 1, 0]]


def test_circuit_to_parity_empty():
    assert circuit_to_parity(Circuit(3)) == ParityMatrix.identity(3)


def test_circuit_to_parity_fig2(fig2_circuit, fig2_matrix):
    assert circuit_to_parity(fig2_circuit) == fig2_matrix


def test_circuit_to_parity_fig3_equivalents(fig3_matrix):
    assert circuit_to_parity(Circuit(3, FIG3_C1)) == fig3_matrix
    assert circuit_to_parity(Circuit(3, FIG3_C2)) == fig3_matrix


def test_evaluate_outputs_identity():
    assert evaluate_outputs(ParityMatrix.identity(3), (1, 0, 1)) == (1, 0, 1)


def test_evaluate_outputs_fig3(fig3_matrix):
    assert evaluate_outputs(fig3_matrix, (1, 1, 0)) == (1, 0, 1)


def test_evaluate_outputs_one_hot_selects_column(fig2_matrix):
    x = tuple(1 if j == 1 else 0 for j in range(6))
    col = tuple(fig2_matrix.entry(i, 1) for i in range(6))
    assert evaluate_outputs(fig2_matrix, x) == col


def test_evaluate_outputs_length_mismatch(fig3_matrix):
    with pytest.raises(ValueError):
        evaluate_outputs(fig3_matrix, (1, 0))


def test_hamming_examples(fig3_matrix):
    assert hamming_to_identity(ParityMatrix.identity(4)) == 0
    e = apply_cnot(ParityMatrix.identity(4), CnotGate(2, 3))
    assert hamming_to_identity(e) == 1
    assert hamming_to_identity(fig3_matrix) == 4


def test_rank_examples(fig2_matrix):
    assert rank_gf2(ParityMatrix.identity(5)) == 5
    dependent = ParityMatrix(3, (0b001, 0b010, 0b011))
    assert rank_gf2(dependent) == 2
    assert rank_gf2(fig2_matrix) == 6


def test_random_instance_rank_and_determinism():
    a = random_instance(3, None, 99)
    b = random_instance(3, None, 99)
    assert a == b
    assert rank_gf2(a) == 3
    assert random_instance(3, None, 100) != a


def test_random_instance_topology_legality():
    t = builtin("4-L")
    legal = {(g.control, g.target) for g in t.action_gates()}
    # re-derive the sampled gates by replaying the construction
    m = random_instance(4, t, 5)
    assert rank_gf2(m) == 4
    # legality is structural: with only path actions, wire 0's row can
    # never contain wire 3 unless built through the chain; spot-check n^2
    # scrambles across seeds stay invertible
    for seed in range(20):
        assert rank_gf2(random_instance(4, t, seed)) == 4
    assert legal == {(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)}


def test_random_instance_topology_mismatch():
    with pytest.raises(ValueError):
        random_instance(5, builtin("4-L"), 0)


def test_verify_synthesis_fig3(fig3_matrix):
    assert verify_synthesis(ParityMatrix.identity(3), Circuit(3))
    reduction = Circuit(3, tuple(reversed(FIG3_C2)))
    assert verify_synthesis(fig3_matrix, reduction)
    tampered = Circuit(3, tuple(reversed(FIG3_C2))[:-1])
    assert not verify_synthesis(fig3_matrix, tampered)


def test_verify_synthesis_dimension_mismatch(fig3_matrix):
    with pytest.raises(ValueError):
        verify_synthesis(fig3_matrix, Circuit(4))


def test_equivalence_class_property(fig3_matrix):
    # both circuits share the matrix, so each reversed sequence reduces it
    for gates in (FIG3_C1, FIG3_C2):
        assert verify_synthesis(fig3_matrix, Circuit(3, tuple(reversed(gates))))


@given(st.integers(2, 8), st.data())
@settings(max_examples=60, deadline=None)
def test_involution_property(n, data):
    rows = data.draw(
        st.lists(st.integers(0, (1 << n) - 1), min_size=n, max_size=n)
    )
    m = ParityMatrix(n, tuple(rows))
    c = data.draw(st.integers(0, n - 1))
    t = data.draw(st.integers(0, n - 1).filter(lambda x: x != c))
    g = CnotGate(c, t)
    assert apply_cnot(apply_cnot(m, g), g) == m


@given(st.integers(2, 8), st.integers(0, 2**32 - 1), st.data())
@settings(max_examples=60, deadline=None)
def test_invertibility_preserved(n, seed, data):
    m = random_instance(n, None, seed)
    c = data.draw(st.integers(0, n - 1))
    t = data.draw(st.integers(0, n - 1).filter(lambda x: x != c))
    assert rank_gf2(apply_cnot(m, CnotGate(c, t))) == n


def test_outputs_match_gate_by_gate_simulation(rng):
    # evaluate_outputs(circuit_to_parity(c), x) == running the circuit on
    # classical bits, for every input, small n
    for n in (2, 3, 4, 5, 6):
        c = random_circuit(n, 2 * n, rng)
        m = circuit_to_parity(c)
        for x in range(1 << n):
            bits = [(x >> j) & 1 for j in range(n)]
            sim = list(bits)
            for g in c.gates:
                sim[g.target] ^= sim[g.control]
            assert evaluate_outputs(m, bits) == tuple(sim)


def test_pack_unpack_roundtrip(rng):
    for n in (2, 5, 8):
        m = random_instance(n, None, int(rng.integers(1 << 30)))
        assert unpack_rows(pack_rows(m), n) == m


# --- file formats


def test_matrix_roundtrip(fig2_matrix):
    assert parse_matrix(serialize_matrix(fig2_matrix)) == fig2_matrix


def test_circuit_roundtrip(fig2_circuit):
    assert parse_circuit(serialize_circuit(fig2_circuit)) == fig2_circuit


def test_circuit_file_via_parity(fig2_circuit, fig2_matrix):
    text = serialize_circuit(fig2_circuit)
    assert circuit_to_parity(parse_circuit(text)) == fig2_matrix


def test_parse_circuit_comments_and_empty_gates():
    c = parse_circuit("# header comment\nqubits 3\n")
    assert len(c) == 0
    c = parse_circuit("qubits 3\ncnot 0 1 # inline\n")
    assert c.gates == (CnotGate(0, 1),)


@pytest.mark.parametrize(
    "text",
    [
        "",
        "qubits x",
        "qubits 3\ncnot 0 3",
        "qubits 3\ncnot 1 1",
        "qubits 3\nnope 0 1",
        "matrix 3\n101\n010",
        "matrix 3\n10a\n010\n001",
        "matrix 2\n101\n010",
    ],
)
def test_parse_errors(text):
    with pytest.raises(FormatError):
        if text.startswith("matrix"):
            parse_matrix(text)
        else:
            parse_circuit(text)


def test_qasm_body(fig3_matrix):
    body = qasm_body(Circuit(3, FIG3_C2))
    assert body.splitlines() == ["cx q[2],q[1];", "cx q[1],q[2];", "cx q[0],q[1];"]
