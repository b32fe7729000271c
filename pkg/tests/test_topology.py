import pytest

from cnotmin.core import FormatError
from cnotmin.topology import (
    BUILTIN_NAMES,
    Topology,
    actions,
    all_to_all,
    builtin,
    parse_topology,
    serialize_topology,
)


def test_all_to_all_counts():
    assert len(all_to_all(4).edges) == 6
    assert len(actions(all_to_all(4))) == 12
    assert len(actions(all_to_all(2))) == 2
    assert len(actions(all_to_all(8))) == 56
    assert len(actions(all_to_all(5))) == 20


def test_all_to_all_rejects_small():
    with pytest.raises(ValueError):
        all_to_all(1)


def test_builtin_4l_edges():
    t = builtin("4-L")
    assert t.edges == ((0, 1), (1, 2), (2, 3))
    assert len(actions(t)) == 6


def test_builtin_4y_is_claw():
    t = builtin("4-Y")
    degrees = [0] * 4
    for i, j in t.edges:
        degrees[i] += 1
        degrees[j] += 1
    assert sorted(degrees) == [1, 1, 1, 3]


def test_builtin_5l_and_5t():
    assert len(builtin("5-L").edges) == 4
    assert len(actions(builtin("5-L"))) == 8
    assert len(actions(builtin("5-T"))) == 8


def test_every_builtin_is_connected_tree_sized():
    for name in BUILTIN_NAMES:
        t = builtin(name)
        n_expected = int(name.split("-")[0])
        assert t.n == n_expected
        assert len(t.edges) >= t.n - 1  # connected


def test_unknown_builtin():
    with pytest.raises(ValueError):
        builtin("9-Z")


def test_action_ordering_deterministic():
    t = builtin("5-T")
    a1 = actions(t)
    a2 = actions(Topology(t.n, t.edges))
    assert a1 == a2
    pairs = [(g.control, g.target) for g in a1]
    assert pairs == sorted(pairs)


def test_actions_cover_both_directions():
    t = builtin("6-Y")
    pairs = {(g.control, g.target) for g in actions(t)}
    assert len(pairs) == 2 * len(t.edges)
    for i, j in t.edges:
        assert (i, j) in pairs and (j, i) in pairs


def test_topology_rejects_self_loop_and_duplicates():
    with pytest.raises(ValueError):
        Topology(3, ((0, 0),))
    with pytest.raises(ValueError):
        Topology(3, ((0, 1), (1, 0), (1, 2)))


def test_topology_rejects_disconnected():
    with pytest.raises(ValueError):
        Topology(4, ((0, 1), (2, 3)))


def test_parse_matches_builtin():
    text = "topology 5\nedge 0 1\nedge 1 2\nedge 2 3\nedge 3 4\n"
    assert parse_topology(text).edges == builtin("5-L").edges


def test_parse_rejects_bad_files():
    with pytest.raises(FormatError):
        parse_topology("topology 3\nedge 0 0\n")
    with pytest.raises(FormatError):
        parse_topology("topology 4\nedge 0 1\nedge 2 3\n")
    with pytest.raises(FormatError):
        parse_topology("edges 3\n")


def test_serialize_roundtrip():
    t = builtin("8-H")
    assert parse_topology(serialize_topology(t)).edges == t.edges
