from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import unclamped_tree
from treecap.errors import InvalidSizeError, InvarianceError, RelayFailureError
from treecap.geometry import NodePlacement, decompose, grid_placement, place_nodes
from treecap.scheme import (
    MessageState,
    _split,
    achieved_edge_rate,
    build_relay_hierarchy,
    concentrate_down,
    distribute_up,
    final_squarelet_exponent,
    level_exponents,
    rate_ledger,
    relay_depth,
    simulate_multicast,
    simulate_unicast,
)
from treecap.treegraph import EdgeRef, build_tree, representative_count

WHOLE = ((Fraction(0), Fraction(1)),)


@pytest.fixture
def grid_tree(grid16):
    p, g = grid16
    return build_tree(p, g, 3.0)


def _climb(tree, u):
    """States after each upward step from leaf ``u`` to the root."""
    node = (tree.leaf_level, u)
    state = MessageState.at_node(u)
    states = [(node, state)]
    while node != (0, 0):
        parent = tree.parent(node)
        state = distribute_up(state, tree, node, parent)
        node = parent
        states.append((node, state))
    return states


def test_leaf_to_single_representative(grid_tree):
    leaf = (2, 5)
    parent = grid_tree.parent(leaf)
    assert len(grid_tree.representatives(parent)) == 1
    state = distribute_up(MessageState.at_node(5), grid_tree, leaf, parent)
    (rep,) = grid_tree.representatives(parent).tolist()
    assert state.holdings == {rep: WHOLE}


def test_level_one_to_root_splits_in_four(grid_tree):
    states = _climb(grid_tree, 5)
    node, state = states[-1]
    assert node == (0, 0)
    assert sorted(state.holders) == sorted(grid_tree.representatives((0, 0)).tolist())
    assert [state.measure(u) for u in state.holders] == [Fraction(1, 4)] * 4
    assert state.is_disjoint()


def test_n256_distribution_to_root_is_an_exact_partition():
    p, tree = unclamped_tree(256)
    for u in range(0, 256, 17):
        for node, state in _climb(tree, u):
            reps = tree.representatives(node).tolist()
            state.check_even(reps)
            share = Fraction(1, len(reps))
            assert all(state.measure(r) == share for r in reps)
        assert len(reps) == 16 * representative_count(256, tree.L) == 64


def test_concentrate_undoes_distribute():
    p, tree = unclamped_tree(256, 4)
    states = _climb(tree, 77)
    for (low, before), (high, after) in zip(states, states[1:]):
        back = concentrate_down(after, tree, high, low)
        holders = sorted(before.holders)
        assert sorted(back.holders) == holders
        assert [back.measure(u) for u in holders] == [before.measure(u) for u in holders]


def test_descent_delivers_whole_message():
    p, tree = unclamped_tree(256, 4)
    node, state = _climb(tree, 3)[-1]
    target = 200
    path = [(tree.leaf_level, target)]
    while path[-1] != (0, 0):
        path.append(tree.parent(path[-1]))
    for parent, child in zip(path[::-1], path[::-1][1:]):
        state = concentrate_down(state, tree, parent, child)
    assert state.holdings == {target: WHOLE}


def test_random_unicast_simulations_complete():
    p, tree = unclamped_tree(64, 2)
    gen = np.random.default_rng(0)
    for _ in range(40):
        u, w = gen.choice(64, 2, replace=False).tolist()
        trace = simulate_unicast(tree, u, w)
        assert trace.complete
        assert len(trace.steps) == len(set(s.edge for s in trace.steps))
        for step in trace.steps:
            assert step.state.is_disjoint()
            assert sum(step.state.measure(x) for x in step.state.holders) == 1
        assert trace.steps[-1].state.holdings == {w: WHOLE}


def test_multicast_simulation_reaches_every_member():
    p, tree = unclamped_tree(256, 1)
    trace = simulate_multicast(tree, 4, [10, 100, 101, 255, 4])
    assert set(trace.delivered) == {10, 100, 101, 255}
    assert trace.complete
    assert trace.to_dict()["complete"] is True


def test_multicast_within_one_cell_never_leaves_it():
    p, tree = unclamped_tree(64, 0)
    g = tree.decomposition
    cell = int(np.argmax(g.counts(g.L)))
    u, a, b = g.members(g.L, cell)[:3].tolist()
    trace = simulate_multicast(tree, u, [a, b])
    assert trace.complete
    assert {s.edge.level for s in trace.steps} == {tree.leaf_level}


def test_uneven_state_is_rejected(grid_tree):
    parent = grid_tree.parent((2, 0))
    bad = MessageState(0, {0: ((Fraction(0), Fraction(1, 2)),)})
    with pytest.raises(InvarianceError) as info:
        distribute_up(bad, grid_tree, (2, 0), parent)
    assert info.value.node == 0
    stray = MessageState(0, {0: ((Fraction(0), Fraction(1, 2)),), 9: ((Fraction(1, 2), Fraction(1)),)})
    with pytest.raises(InvarianceError) as info:
        distribute_up(stray, grid_tree, (2, 0), parent)
    assert info.value.node == 9


def test_overlapping_fragments_are_rejected():
    overlap = MessageState(0, {1: ((Fraction(0), Fraction(1, 2)),), 2: ((Fraction(1, 4), Fraction(3, 4)),)})
    assert not overlap.is_disjoint()
    assert not overlap.is_even([1, 2])


def test_wrong_parent_is_rejected(grid_tree):
    with pytest.raises(ValueError):
        distribute_up(MessageState.at_node(0), grid_tree, (2, 0), (0, 0))


def test_clamped_tree_breaks_invariance():
    pts = place_nodes(256, 0).points.copy()
    g = decompose(NodePlacement.from_points(pts))
    crowd = g.members(2, 0)[2:]
    pts[crowd] = pts[crowd] + [4.0, 0.0]
    p = NodePlacement.from_points(pts)
    tree = build_tree(p, decompose(p), 3.0)
    assert 0 in tree.clamped
    leaf = int(tree.decomposition.members(2, 0)[0])
    state = distribute_up(MessageState.at_node(leaf), tree, (3, leaf), (2, 0))
    with pytest.raises(InvarianceError) as info:
        distribute_up(state, tree, (2, 0), (1, 0))
    assert info.value.node == (1, 0)


@settings(max_examples=60, deadline=None)
@given(
    cuts=st.lists(st.fractions(0, 1), max_size=6, unique=True),
    parts=st.integers(1, 12),
)
def test_split_is_an_equal_partition(cuts, parts):
    points = sorted({Fraction(0), Fraction(1), *cuts})
    frags = tuple(zip(points, points[1:]))
    pieces = _split(frags, parts)
    assert len(pieces) == parts
    assert all(sum(b - a for a, b in piece) == Fraction(1, parts) for piece in pieces)
    flat = sorted(iv for piece in pieces for iv in piece)
    assert all(x[1] <= y[0] for x, y in zip(flat, flat[1:]))


def test_level_one_rate_on_n16(grid_tree):
    entry = achieved_edge_rate(grid_tree, EdgeRef(1, 0, 0), 3.0)
    assert entry.rate == pytest.approx(1 / 48, rel=1e-12)
    assert entry.capacity == 2.0
    assert entry.gap_ratio == pytest.approx(1 / 96, rel=1e-12)
    assert entry.factors["time_share"] == 0.25


def test_leaf_rate_shares_time_budget(grid_tree):
    entry = achieved_edge_rate(grid_tree, EdgeRef(2, 0, 0), 3.0)
    assert entry.rate == pytest.approx(0.25 / 16 * 4**-0.5, rel=1e-12)
    assert entry.capacity == 1.0


@pytest.mark.parametrize("alpha", [2.2, 2.5, 3.0, 4.0, 6.0])
def test_consecutive_internal_gap_ratios_are_equal(alpha):
    p, tree = unclamped_tree(4096)
    ratios = [e.gap_ratio for e in rate_ledger(tree, alpha).entries[:-1]]
    assert len(ratios) == tree.L
    for a, b in zip(ratios, ratios[1:]):
        assert b / a == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("n", [16, 256, 4096])
@pytest.mark.parametrize("alpha", [2.2, 2.5, 3.0, 4.0, 6.0])
def test_gap_ratios_within_unit_interval(n, alpha):
    p, tree = unclamped_tree(n)
    for edge in tree.edges():
        gap = achieved_edge_rate(tree, edge, alpha).gap_ratio
        assert 0 < gap <= 1


def test_ledger_lists_one_entry_per_level(grid_tree):
    ledger = rate_ledger(grid_tree)
    assert [e.edge.level for e in ledger.entries] == [1, 2]
    assert ledger.time_share == 0.25
    assert ledger.to_dict()["leaf_in_shared_budget"] is True


def test_relay_depth_and_squarelets():
    assert relay_depth(2**27) == 3
    assert relay_depth(16) == 2
    assert final_squarelet_exponent(2**16) == 6
    assert level_exponents(2**16) == [2, 2, 2]
    assert sum(level_exponents(2**27)) == final_squarelet_exponent(2**27)


def test_grid_placement_relays_succeed():
    p = grid_placement(16)
    h = build_relay_hierarchy(p, seed=0)
    assert h.success
    assert h.depth == len(h.levels) == relay_depth(256)
    for level in h.levels:
        assert level.dense.all()
        assert level.squarelets == 4**level.resolution
        rows = level.assignments
        relays = rows[:, 2]
        assert level.dense[relays].all()
        cells = np.floor(p.points / (p.side / 2**level.resolution)).astype(int)
        cell = cells[:, 1] * 2**level.resolution + cells[:, 0]
        assert np.all(relays != cell[rows[:, 0]])
        assert np.all(relays != cell[rows[:, 1]])


@pytest.mark.parametrize("seed", range(5))
def test_top_level_relay_loads_are_level(seed):
    h = build_relay_hierarchy(place_nodes(4096, seed), seed)
    top = h.levels[0]
    used = top.load[top.dense]
    assert top.assignments.shape[0] == 4096
    assert used.max() - used.min() <= 1


def test_relay_hierarchy_is_deterministic():
    p = place_nodes(1024, 3)
    a, b = build_relay_hierarchy(p, 7), build_relay_hierarchy(p, 7)
    assert a.to_dict() == b.to_dict()
    for x, y in zip(a.levels, b.levels):
        assert np.array_equal(x.assignments, y.assignments)


def test_clustered_placement_fails_to_find_relays():
    pts = np.random.default_rng(0).uniform(0, 3.9, size=(64, 2))
    p = NodePlacement(n=64, side=8.0, points=pts)
    with pytest.raises(RelayFailureError) as info:
        build_relay_hierarchy(p, 0)
    assert info.value.level == 1
    assert sum(info.value.histogram.values()) == 4


def test_relay_needs_sixteen_nodes():
    with pytest.raises(InvalidSizeError):
        build_relay_hierarchy(place_nodes(9, 0), 0)
