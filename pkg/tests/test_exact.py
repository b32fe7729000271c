from collections import deque

import pytest

from cnotmin.core import (
    Circuit,
    CnotGate,
    ParityMatrix,
    apply_cnot,
    circuit_to_parity,
    random_instance,
)
from cnotmin.exact import (
    DepthCapExceeded,
    ExactConfig,
    SolverTimeout,
    optimal_length,
    optimal_mean,
    optimal_synth,
    pack_cols,
)
from cnotmin.heuristics import SingularMatrixError
from cnotmin.topology import all_to_all, builtin


def bfs_oracle(m: ParityMatrix, topology=None) -> int:
    """Independent plain BFS over row-tuples; small n only."""
    t = topology if topology is not None else all_to_all(m.n)
    gates = [(g.control, g.target) for g in t.action_gates()]
    goal = tuple(1 << i for i in range(m.n))
    start = m.rows
    if start == goal:
        return 0
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        rows, d = queue.popleft()
        for c, tgt in gates:
            nxt = list(rows)
            nxt[tgt] ^= nxt[c]
            nxt = tuple(nxt)
            if nxt == goal:
                return d + 1
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, d + 1))
    raise AssertionError("unreachable")


def test_identity_zero_gates():
    r = optimal_synth(ParityMatrix.identity(4))
    assert r.gate_count == 0


def test_fig3_exactly_three(fig3_matrix):
    r = optimal_synth(fig3_matrix)
    assert r.gate_count == 3
    assert circuit_to_parity(r.circuit) == fig3_matrix


def test_rejects_singular():
    with pytest.raises(SingularMatrixError):
        optimal_synth(ParityMatrix(3, (0b001, 0b010, 0b011)))


def test_matches_plain_bfs_n4_all_to_all():
    # optimality certificate against an independent oracle
    for seed in range(50):
        m = random_instance(4, None, 40_000 + seed)
        assert optimal_length(m) == bfs_oracle(m)


def test_matches_plain_bfs_constrained():
    t = builtin("4-Y")
    cfg = ExactConfig(topology=t)
    for seed in range(15):
        m = random_instance(4, None, 41_000 + seed)
        assert optimal_length(m, cfg) == bfs_oracle(m, t)


def test_every_result_verifies_and_is_legal():
    t = builtin("5-T")
    cfg = ExactConfig(topology=t)
    legal = {(g.control, g.target) for g in t.action_gates()}
    for seed in range(10):
        m = random_instance(5, None, 42_000 + seed)
        r = optimal_synth(m, cfg)
        assert circuit_to_parity(r.circuit) == m
        assert all((g.control, g.target) in legal for g in r.circuit.gates)


def test_constrained_at_least_unconstrained():
    t = builtin("5-L")
    cfg = ExactConfig(topology=t)
    for seed in range(20):
        m = random_instance(5, None, 43_000 + seed)
        assert optimal_length(m, cfg) >= optimal_length(m)


def test_bad_row_heuristic_admissible_along_solutions():
    # the bad-row count must never exceed the remaining optimal length
    for seed in range(10):
        m = random_instance(4, None, 44_000 + seed)
        r = optimal_synth(m)
        state = m
        remaining = r.gate_count
        for g in reversed(r.circuit.gates):  # reduction order
            bad = sum(
                1
                for i in range(state.n)
                if state.rows[i] != (1 << i)
            )
            assert bad <= remaining
            state = apply_cnot(state, CnotGate(g.control, g.target))
            remaining -= 1
        assert state.is_identity()


def test_deterministic_results():
    m = random_instance(4, None, 4242)
    a = optimal_synth(m)
    b = optimal_synth(m)
    assert a.circuit == b.circuit


def test_depth_cap():
    m = random_instance(4, None, 4545)
    true_len = optimal_length(m)
    if true_len == 0:
        return
    with pytest.raises(DepthCapExceeded):
        optimal_synth(m, ExactConfig(max_depth=true_len - 1))


def test_pdb_column_sets_are_valid_covers():
    from cnotmin.exact import _pdb_column_sets

    for n in range(3, 9):
        sets = _pdb_column_sets(n)
        k = len(sets[0])
        assert all(len(s) == k and len(set(s)) == k for s in sets)
        assert set().union(*map(set, sets)) == set(range(n))
        assert sets == sorted(sets)  # deterministic order


def test_pack_cols_matches_layout(fig3_matrix):
    packed = pack_cols(fig3_matrix)
    n = 3
    for r in range(n):
        for c in range(n):
            assert (packed >> (c * n + r)) & 1 == fig3_matrix.entry(r, c)


def test_optimal_mean_stats():
    stats = optimal_mean(4, None, 25, seed=46_000)
    assert len(stats.lengths) == 25
    assert not stats.partial
    assert stats.min <= stats.mean <= stats.max
    assert all(w >= 0 for w in stats.wall_ms)


def test_optimal_mean_constrained_dominates():
    s_free = optimal_mean(4, None, 25, seed=47_000)
    s_path = optimal_mean(4, builtin("4-L"), 25, seed=47_000)
    assert s_path.mean >= s_free.mean
