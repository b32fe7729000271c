"""Hardware connectivity graphs and their CNOT action sets.

Edges are undirected: a connection {i, j} permits CNOT(i, j) and
CNOT(j, i) at equal cost.  The built-in templates are canonical edge
lists for the common linear / Y / T / H / F layouts on 4-8 qubits; the
non-path shapes on 6+ qubits are best-effort reconstructions, and any of
them can be overridden with an explicit topology file.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import CnotGate, FormatError, _check_n


@dataclass(frozen=True)
class Topology:
    """Connected undirected graph over ``n`` qubits."""

    n: int
    edges: tuple[tuple[int, int], ...]
    name: str = ""

    def __post_init__(self) -> None:
        _check_n(self.n)
        canon = []
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop on qubit {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i},{j}) out of range for n={self.n}")
            e = (min(i, j), max(i, j))
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
            canon.append(e)
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        if not self._connected():
            raise ValueError("topology graph is not connected")

    def _connected(self) -> bool:
        adj: dict[int, list[int]] = {v: [] for v in range(self.n)}
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def action_gates(self) -> tuple[CnotGate, ...]:
        return actions(self)

    def is_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in set(self.edges)


def all_to_all(n: int) -> Topology:
    """Complete graph: every ordered pair is a legal CNOT."""
    _check_n(n)
    edges = tuple((i, j) for i in range(n) for j in range(i + 1, n))
    return Topology(n, edges, name=f"all-to-all-{n}")


def actions(t: Topology) -> tuple[CnotGate, ...]:
    """Both CNOT directions per edge, ordered lexicographically.

    The ordering is the action-id contract shared with the policy head
    and search modules, so it must be stable across runs.
    """
    pairs = set()
    for i, j in t.edges:
        pairs.add((i, j))
        pairs.add((j, i))
    return tuple(CnotGate(c, tg) for c, tg in sorted(pairs))


def _path(n: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(n - 1)]


# Canonical templates.  n-L is the path 0-1-...-(n-1); n-T is a path on
# n-1 nodes with the last qubit attached near the middle; n-Y joins three
# branches at one degree-3 center.  8-H/8-F/8-T2 ship as explicit lists.
_BUILTIN_EDGES: dict[str, tuple[int, list[tuple[int, int]]]] = {
    "4-L": (4, _path(4)),
    "4-Y": (4, [(1, 0), (1, 2), (1, 3)]),
    "5-L": (5, _path(5)),
    "5-T": (5, _path(4) + [(1, 4)]),
    "6-L": (6, _path(6)),
    "6-T": (6, _path(5) + [(2, 5)]),
    "6-Y": (6, [(0, 1), (1, 2), (0, 3), (3, 4), (0, 5)]),
    "7-L": (7, _path(7)),
    "7-T": (7, _path(6) + [(2, 6)]),
    "7-Y": (7, [(0, 1), (1, 2), (0, 3), (3, 4), (0, 5), (5, 6)]),
    "8-H": (8, [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5), (4, 6), (6, 7)]),
    "8-F": (8, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 6), (2, 7)]),
    "8-T1": (8, _path(7) + [(3, 7)]),
    "8-T2": (8, _path(5) + [(2, 5), (5, 6), (6, 7)]),
}

BUILTIN_NAMES = tuple(sorted(_BUILTIN_EDGES))


def builtin(name: str) -> Topology:
    """Look up a built-in template by its size-shape name (e.g. "5-T")."""
    try:
        n, edges = _BUILTIN_EDGES[name]
    except KeyError:
        raise ValueError(
            f"unknown topology {name!r}; choose from {', '.join(BUILTIN_NAMES)}"
        ) from None
    return Topology(n, tuple(edges), name=name)


def parse_topology(text: str) -> Topology:
    """Parse a topology file: "topology <n>" then "edge <i> <j>" lines."""
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise FormatError("empty topology file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "topology":
        raise FormatError(f"expected 'topology <n>' header, got {lines[0]!r}")
    try:
        n = int(head[1])
    except ValueError as exc:
        raise FormatError(f"bad qubit count {head[1]!r}") from exc
    edges = []
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 3 or parts[0] != "edge":
            raise FormatError(f"expected 'edge <i> <j>', got {line!r}")
        try:
            i, j = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise FormatError(f"bad edge indices in {line!r}") from exc
        edges.append((i, j))
    try:
        return Topology(n, tuple(edges), name="custom")
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def serialize_topology(t: Topology) -> str:
    lines = [f"topology {t.n}"]
    lines.extend(f"edge {i} {j}" for i, j in t.edges)
    return "\n".join(lines) + "\n"
