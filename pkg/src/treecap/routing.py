"""Edge loads and routing feasibility on the capacitated tree.

Routing on a tree is unique, so the load on an edge is determined by which
traffic crosses the cut it induces: a unicast entry loads the edges of its
path, a multicast entry the edges of its spanning subtree.
"""

from __future__ import annotations

import math
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from treecap.regions import FEASIBILITY_TOL
from treecap.traffic import MulticastTraffic, Traffic, UnicastTraffic, cut_flows, node_flows
from treecap.geometry import parent_cell
from treecap.treegraph import EdgeRef, TreeGraph


@dataclass(frozen=True, eq=False)
class EdgeLoadMap:
    """Demand on every tree edge.

    ``internal[l - 1][i]`` is the load on the edge above cell ``(l, i)`` for
    ``1 <= l <= L``; ``leaf[u]`` is the load on node ``u``'s edge.
    """

    tree: TreeGraph
    internal: tuple[np.ndarray, ...]
    leaf: np.ndarray

    def load(self, edge: EdgeRef) -> float:
        if edge.level == self.tree.L + 1:
            return float(self.leaf[edge.child])
        return float(self.internal[edge.level - 1][edge.child])

    def items(self) -> Iterator[tuple[EdgeRef, float]]:
        for level, loads in enumerate(self.internal, start=1):
            for i, x in enumerate(loads):
                yield EdgeRef(level, i, int(parent_cell(i, level))), float(x)
        cells = self.tree.decomposition.cell_of[self.tree.L]
        for u, x in enumerate(self.leaf):
            yield EdgeRef(self.tree.L + 1, u, int(cells[u])), float(x)

    def as_dict(self) -> dict[EdgeRef, float]:
        return dict(self.items())

    def scaled(self, c: float) -> EdgeLoadMap:
        return EdgeLoadMap(self.tree, tuple(a * c for a in self.internal), self.leaf * c)


def _check(t: Traffic, tree: TreeGraph) -> None:
    t.check_nodes(tree.n)


def edge_loads_unicast(t: UnicastTraffic, tree: TreeGraph) -> EdgeLoadMap:
    """Total traffic in both directions across every tree edge."""
    _check(t, tree)
    up, down = edge_loads_unicast_split(t, tree)
    return EdgeLoadMap(
        tree,
        tuple(a + b for a, b in zip(up.internal, down.internal)),
        up.leaf + down.leaf,
    )


def edge_loads_unicast_split(t: UnicastTraffic, tree: TreeGraph) -> tuple[EdgeLoadMap, EdgeLoadMap]:
    """Upward and downward unicast loads kept apart."""
    _check(t, tree)
    flows = cut_flows(t, tree.decomposition)
    out, inn = node_flows(t, tree.n)
    return (
        EdgeLoadMap(tree, tuple(o for o, _ in flows), out),
        EdgeLoadMap(tree, tuple(i for _, i in flows), inn),
    )


def edge_loads_multicast(t: MulticastTraffic, tree: TreeGraph) -> EdgeLoadMap:
    """Total rate of the entries whose spanning subtree uses each edge.

    The subtree of ``(u, W)`` uses the edge above a cell exactly when
    ``{u} | W`` has members both inside and outside that cell: either ``u``
    is inside and ``W`` leaves the cell, or ``u`` is outside and ``W`` meets
    it.
    """
    _check(t, tree)
    flows = cut_flows(t, tree.decomposition)
    out, inn = node_flows(t, tree.n)
    return EdgeLoadMap(tree, tuple(o + i for o, i in flows), out + inn)


def edge_loads(t: Traffic, tree: TreeGraph) -> EdgeLoadMap:
    if isinstance(t, MulticastTraffic):
        return edge_loads_multicast(t, tree)
    return edge_loads_unicast(t, tree)


@dataclass(frozen=True)
class TreeFeasibility:
    feasible: bool
    max_multiplier: float
    binding: EdgeRef | None

    def __iter__(self):
        return iter((self.feasible, self.max_multiplier, self.binding))


def feasible_on_tree(t: Traffic, tree: TreeGraph) -> TreeFeasibility:
    """Whether ``t`` can be routed on ``tree`` within its edge capacities.

    Unpacks as ``(feasible, max_multiplier, binding_edge)``. The multiplier
    is ``min(capacity / load)`` over loaded edges, ``inf`` when nothing is
    loaded; ties go to the lowest level, then the lowest index.
    """
    loads = edge_loads(t, tree)
    feasible = True
    best, binding = math.inf, None
    parents = tree.decomposition.cell_of[tree.L]
    per_level = [*loads.internal, loads.leaf]
    for level, arr in enumerate(per_level, start=1):
        cap = tree.capacities[level]
        feasible &= bool(np.all(arr <= cap * (1 + FEASIBILITY_TOL)))
        loaded = np.flatnonzero(arr > 0)
        if loaded.size == 0:
            continue
        # Subnormal loads overflow to inf, beyond any representable multiplier.
        with np.errstate(over="ignore"):
            ratios = cap / arr[loaded]
        j = int(np.argmin(ratios))
        if ratios[j] < best:
            best = float(ratios[j])
            i = int(loaded[j])
            parent = int(parents[i]) if level == tree.L + 1 else int(parent_cell(i, level))
            binding = EdgeRef(level, i, parent)
    return TreeFeasibility(feasible, best, binding)
