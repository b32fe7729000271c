"""GF(2) parity-matrix arithmetic, CNOT circuits, and their file formats.

A CNOT-only (linear reversible) circuit on ``n`` qubits is fully described
by an invertible Boolean matrix ``M``: wire ``i`` outputs the XOR of the
inputs selected by row ``i``.  Applying ``CNOT(c, t)`` XORs row ``c`` into
row ``t``.  Rows are stored as int bitsets (bit ``j`` of ``rows[i]`` is
``M[i][j]``), so a gate application is a single word XOR.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 32


class FormatError(ValueError):
    """Raised when a circuit/matrix/topology file is malformed."""


@dataclass(frozen=True)
class CnotGate:
    """A controlled-NOT with 0-based control and target wire indices."""

    control: int
    target: int

    def __post_init__(self) -> None:
        if self.control == self.target:
            raise ValueError(f"control and target must differ (got {self.control})")
        if self.control < 0 or self.target < 0:
            raise ValueError("wire indices must be non-negative")

    def validate(self, n: int) -> None:
        if self.control >= n or self.target >= n:
            raise ValueError(f"gate {self} out of range for {n} qubits")


@dataclass(frozen=True)
class Circuit:
    """An ordered CNOT sequence; ``gates[0]`` is applied first."""

    n: int
    gates: tuple[CnotGate, ...] = ()

    def __post_init__(self) -> None:
        _check_n(self.n)
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            g.validate(self.n)

    def __len__(self) -> int:
        return len(self.gates)

    def reversed(self) -> "Circuit":
        return Circuit(self.n, tuple(reversed(self.gates)))


@dataclass(frozen=True)
class ParityMatrix:
    """Invertible n x n Boolean matrix; rows are int bitsets."""

    n: int
    rows: tuple[int, ...]

    def __post_init__(self) -> None:
        _check_n(self.n)
        if len(self.rows) != self.n:
            raise ValueError(f"expected {self.n} rows, got {len(self.rows)}")
        mask = (1 << self.n) - 1
        for r in self.rows:
            if r < 0 or r & ~mask:
                raise ValueError("row bits out of range")

    @staticmethod
    def identity(n: int) -> "ParityMatrix":
        return ParityMatrix(n, tuple(1 << i for i in range(n)))

    @staticmethod
    def from_lists(rows: Sequence[Sequence[int]]) -> "ParityMatrix":
        n = len(rows)
        packed = []
        for row in rows:
            if len(row) != n:
                raise ValueError("matrix must be square")
            bits = 0
            for j, v in enumerate(row):
                if v not in (0, 1):
                    raise ValueError(f"non-binary entry {v!r}")
                bits |= int(v) << j
            packed.append(bits)
        return ParityMatrix(n, tuple(packed))

    def to_lists(self) -> list[list[int]]:
        return [[(r >> j) & 1 for j in range(self.n)] for r in self.rows]

    def to_array(self) -> np.ndarray:
        return np.array(self.to_lists(), dtype=np.uint8)

    def entry(self, i: int, j: int) -> int:
        return (self.rows[i] >> j) & 1

    def is_identity(self) -> bool:
        return all(r == (1 << i) for i, r in enumerate(self.rows))


def _check_n(n: int) -> None:
    if not 2 <= n <= MAX_QUBITS:
        raise ValueError(f"qubit count must be in [2, {MAX_QUBITS}], got {n}")


# ---------------------------------------------------------------------------
# elementary operations


def apply_cnot(m: ParityMatrix, g: CnotGate) -> ParityMatrix:
    """Return ``m`` with row ``g.control`` XORed into row ``g.target``."""
    g.validate(m.n)
    rows = list(m.rows)
    rows[g.target] ^= rows[g.control]
    return ParityMatrix(m.n, tuple(rows))


def circuit_to_parity(c: Circuit) -> ParityMatrix:
    """Fold the circuit's gates over the identity matrix."""
    m = ParityMatrix.identity(c.n)
    for g in c.gates:
        m = apply_cnot(m, g)
    return m


def evaluate_outputs(m: ParityMatrix, x: Sequence[int]) -> tuple[int, ...]:
    """Wire outputs for input bits ``x``: y_i = XOR_j M[i][j] * x_j."""
    if len(x) != m.n:
        raise ValueError(f"input length {len(x)} != {m.n}")
    xbits = 0
    for j, v in enumerate(x):
        if v not in (0, 1):
            raise ValueError(f"non-binary input bit {v!r}")
        xbits |= int(v) << j
    return tuple((r & xbits).bit_count() & 1 for r in m.rows)


def hamming_to_identity(m: ParityMatrix) -> int:
    """Number of entries where ``m`` differs from the identity."""
    return sum((r ^ (1 << i)).bit_count() for i, r in enumerate(m.rows))


def rank_gf2(m: ParityMatrix) -> int:
    """GF(2) rank by row reduction on a scratch copy."""
    work = list(m.rows)
    rank = 0
    for col in range(m.n):
        pivot = None
        for r in range(rank, len(work)):
            if (work[r] >> col) & 1:
                pivot = r
                break
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        for r in range(len(work)):
            if r != rank and (work[r] >> col) & 1:
                work[r] ^= work[rank]
        rank += 1
    return rank


def verify_synthesis(target: ParityMatrix, c: Circuit) -> bool:
    """True iff applying ``c``'s gates to ``target`` reduces it to identity.

    Equivalently (gates are involutions): the reversed gate list is a
    decomposition of ``target``.
    """
    if c.n != target.n:
        raise ValueError(f"circuit is for {c.n} qubits, matrix for {target.n}")
    rows = list(target.rows)
    for g in c.gates:
        rows[g.target] ^= rows[g.control]
    return all(r == (1 << i) for i, r in enumerate(rows))


def random_instance(n: int, topology=None, seed: int = 0) -> ParityMatrix:
    """Scramble the identity with ``n**2`` uniformly random legal gates.

    Legal gates are the topology's action set when one is given, otherwise
    all ordered wire pairs.  Deterministic for a fixed seed.
    """
    _check_n(n)
    if topology is not None:
        if topology.n != n:
            raise ValueError(f"topology is for {topology.n} qubits, asked for {n}")
        pairs = [(g.control, g.target) for g in topology.action_gates()]
    else:
        pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    rng = np.random.default_rng(seed)
    rows = [1 << i for i in range(n)]
    for k in rng.integers(len(pairs), size=n * n):
        c, t = pairs[k]
        rows[t] ^= rows[c]
    return ParityMatrix(n, tuple(rows))


# ---------------------------------------------------------------------------
# packed-state fast path (used by the search and RL modules)
#
# Row-major packing: bit (i*n + j) of the int is M[i][j].


def pack_rows(m: ParityMatrix) -> int:
    packed = 0
    for i, r in enumerate(m.rows):
        packed |= r << (i * m.n)
    return packed


def unpack_rows(packed: int, n: int) -> ParityMatrix:
    mask = (1 << n) - 1
    return ParityMatrix(n, tuple((packed >> (i * n)) & mask for i in range(n)))


def packed_identity(n: int) -> int:
    packed = 0
    for i in range(n):
        packed |= 1 << (i * n + i)
    return packed


def packed_apply(packed: int, n: int, control: int, target: int) -> int:
    row = (packed >> (control * n)) & ((1 << n) - 1)
    return packed ^ (row << (target * n))


def packed_hamming(packed: int, n: int) -> int:
    mask = (1 << n) - 1
    return sum(
        (((packed >> (i * n)) & mask) ^ (1 << i)).bit_count() for i in range(n)
    )


def packed_to_bits(packed: int, n: int) -> np.ndarray:
    """Flattened 0/1 float vector of length n*n (row-major)."""
    return np.array([(packed >> k) & 1 for k in range(n * n)], dtype=np.float64)


# ---------------------------------------------------------------------------
# file formats
#
# Circuit file:  line 1 "qubits <n>", then "cnot <control> <target>" lines.
# Matrix file:   line 1 "matrix <n>", then n lines of n chars in {0,1}.
# "#" starts a comment in both.


def _content_lines(text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    return lines


def parse_circuit(text: str) -> Circuit:
    lines = _content_lines(text)
    if not lines:
        raise FormatError("empty circuit file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "qubits":
        raise FormatError(f"expected 'qubits <n>' header, got {lines[0]!r}")
    try:
        n = int(head[1])
    except ValueError as exc:
        raise FormatError(f"bad qubit count {head[1]!r}") from exc
    _check_n(n)
    gates = []
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 3 or parts[0] != "cnot":
            raise FormatError(f"expected 'cnot <control> <target>', got {line!r}")
        try:
            c, t = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise FormatError(f"bad gate indices in {line!r}") from exc
        if not (0 <= c < n and 0 <= t < n):
            raise FormatError(f"gate index out of range in {line!r}")
        if c == t:
            raise FormatError(f"control equals target in {line!r}")
        gates.append(CnotGate(c, t))
    return Circuit(n, tuple(gates))


def serialize_circuit(c: Circuit) -> str:
    lines = [f"qubits {c.n}"]
    lines.extend(f"cnot {g.control} {g.target}" for g in c.gates)
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> ParityMatrix:
    lines = _content_lines(text)
    if not lines:
        raise FormatError("empty matrix file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "matrix":
        raise FormatError(f"expected 'matrix <n>' header, got {lines[0]!r}")
    try:
        n = int(head[1])
    except ValueError as exc:
        raise FormatError(f"bad matrix size {head[1]!r}") from exc
    _check_n(n)
    if len(lines) != n + 1:
        raise FormatError(f"expected {n} matrix rows, got {len(lines) - 1}")
    rows = []
    for line in lines[1:]:
        if len(line) != n or set(line) - {"0", "1"}:
            raise FormatError(f"bad matrix row {line!r}")
        rows.append(sum((line[j] == "1") << j for j in range(n)))
    return ParityMatrix(n, tuple(rows))


def serialize_matrix(m: ParityMatrix) -> str:
    lines = [f"matrix {m.n}"]
    for r in m.rows:
        lines.append("".join("1" if (r >> j) & 1 else "0" for j in range(m.n)))
    return "\n".join(lines) + "\n"


def qasm_body(c: Circuit) -> str:
    """OpenQASM 2.0 body: one ``cx`` statement per gate."""
    return "".join(f"cx q[{g.control}],q[{g.target}];\n" for g in c.gates)
