import numpy as np
import pytest

from cnotmin.core import Circuit, CnotGate, ParityMatrix

# A 6-qubit circuit and the parity matrix it must produce (0-indexed
# wires; the printed matrix is the ground truth for the mapping).
FIG2_GATES = (
    CnotGate(0, 1),
    CnotGate(2, 3),
    CnotGate(5, 4),
    CnotGate(1, 0),
    CnotGate(2, 5),
    CnotGate(0, 5),
    CnotGate(5, 1),
)
FIG2_MATRIX = [
    [0, 1, 0, 0, 0, 0],
    [1, 0, 1, 0, 0, 1],
    [0, 0, 1, 0, 0, 0],
    [0, 0, 1, 1, 0, 0],
    [0, 0, 0, 0, 1, 1],
    [0, 1, 1, 0, 0, 1],
]

# Two equivalent 3-qubit circuits (5 and 3 gates) sharing one matrix.
FIG3_MATRIX = [[1, 0, 0], [1, 1, 1], [0, 1, 0]]
FIG3_C1 = (
    CnotGate(0, 2),
    CnotGate(1, 0),
    CnotGate(2, 1),
    CnotGate(1, 2),
    CnotGate(2, 0),
)
FIG3_C2 = (CnotGate(2, 1), CnotGate(1, 2), CnotGate(0, 1))


@pytest.fixture
def fig2_circuit() -> Circuit:
    return Circuit(6, FIG2_GATES)


@pytest.fixture
def fig2_matrix() -> ParityMatrix:
    return ParityMatrix.from_lists(FIG2_MATRIX)


@pytest.fixture
def fig3_matrix() -> ParityMatrix:
    return ParityMatrix.from_lists(FIG3_MATRIX)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def random_circuit(n: int, length: int, rng: np.random.Generator) -> Circuit:
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    gates = tuple(
        CnotGate(*pairs[k]) for k in rng.integers(len(pairs), size=length)
    )
    return Circuit(n, gates)
