"""Slow reference implementations used to cross-check the vectorized code.

Cells are recomputed from coordinates with plain Python arithmetic and every
cut or edge is evaluated by explicit enumeration.
"""

from __future__ import annotations

import itertools
import math

import networkx as nx

from treecap.geometry import NodePlacement


def point_cell(x: float, y: float, side: float, level: int) -> int:
    k = 2**level
    col = min(int(math.floor(x / side * k)), k - 1)
    row = min(int(math.floor(y / side * k)), k - 1)
    return row * k + col


def cell_sets(placement: NodePlacement, level: int) -> list[set[int]]:
    sets: list[set[int]] = [set() for _ in range(4**level)]
    for u, (x, y) in enumerate(placement.points.tolist()):
        sets[point_cell(x, y, placement.side, level)].add(u)
    return sets


def capacity(n: int, level: int, alpha: float) -> float:
    return (n / 4**level) ** (2 - min(3.0, alpha) / 2)


def unicast_constraints(entries, placement, L, alpha, direction="out"):
    """All (lhs, rhs) pairs: cell cuts first (by level, cell), then node cuts."""
    out = []
    if direction != "dense":
        for level in range(1, L + 1):
            for members in cell_sets(placement, level):
                lhs = 0.0
                for (u, w), r in entries.items():
                    if u in members and w not in members:
                        lhs += r
                    elif direction == "both" and u not in members and w in members:
                        lhs += r
                out.append((lhs, capacity(placement.n, level, alpha)))
    for v in range(placement.n):
        lhs = sum(r for (u, w), r in entries.items() if v in (u, w))
        out.append((lhs, 1.0))
    return out


def multicast_constraints(entries, placement, L, alpha, direction="out"):
    out = []
    if direction != "dense":
        for level in range(1, L + 1):
            for members in cell_sets(placement, level):
                lhs = 0.0
                for (u, group), r in entries.items():
                    if u in members and any(w not in members for w in group):
                        lhs += r
                    elif direction == "both" and u not in members and any(w in members for w in group):
                        lhs += r
                out.append((lhs, capacity(placement.n, level, alpha)))
    for v in range(placement.n):
        lhs = 0.0
        for (u, group), r in entries.items():
            if u == v and any(w != v for w in group):
                lhs += r
            if u != v and v in group:
                lhs += r
        out.append((lhs, 1.0))
    return out


def multiplier(constraints) -> float:
    ratios = [rhs / lhs for lhs, rhs in constraints if lhs > 0]
    return min(ratios) if ratios else math.inf


def balance(entries, placement, L, multicast=False) -> float:
    gamma = 0.0
    for level in range(1, L + 1):
        for members in cell_sets(placement, level):
            inflow = outflow = 0.0
            for key, r in entries.items():
                u, dst = key
                group = dst if multicast else (dst,)
                if u in members and any(w not in members for w in group):
                    outflow += r
                if u not in members and any(w in members for w in group):
                    inflow += r
            if inflow > 0:
                gamma = max(gamma, math.inf if outflow == 0 else inflow / outflow)
    return gamma


def tree_graph(placement: NodePlacement, L: int) -> nx.Graph:
    """Tree with nodes ("cell", level, i) and ("leaf", u), parents found geometrically."""
    g = nx.Graph()
    for level in range(1, L + 1):
        k = 2**level
        for i in range(4**level):
            row, col = divmod(i, k)
            # Parent found from the child cell's centre point.
            cx = (col + 0.5) / k * placement.side
            cy = (row + 0.5) / k * placement.side
            g.add_edge(("cell", level, i), ("cell", level - 1, point_cell(cx, cy, placement.side, level - 1)))
    g.add_node(("cell", 0, 0))
    for u, (x, y) in enumerate(placement.points.tolist()):
        g.add_edge(("leaf", u), ("cell", L, point_cell(x, y, placement.side, L)))
    return g


def edge_key(a, b, L: int) -> tuple[int, int]:
    """(level, index) of the lower endpoint of tree edge a-b."""
    lower = a if _depth(a, L) > _depth(b, L) else b
    return (L + 1, lower[1]) if lower[0] == "leaf" else (lower[1], lower[2])


def _depth(node, L: int) -> int:
    return L + 1 if node[0] == "leaf" else node[1]


def below(g: nx.Graph, a, b, L: int) -> set[int]:
    """Leaves on the lower side of edge a-b."""
    lower = a if _depth(a, L) > _depth(b, L) else b
    h = g.copy()
    h.remove_edge(a, b)
    return {node[1] for node in nx.node_connected_component(h, lower) if node[0] == "leaf"}


def unicast_loads(entries, placement, L) -> dict[tuple[int, int], float]:
    g = tree_graph(placement, L)
    loads = {}
    for a, b in g.edges():
        side = below(g, a, b, L)
        loads[edge_key(a, b, L)] = sum(r for (u, w), r in entries.items() if (u in side) != (w in side))
    return loads


def multicast_loads(entries, placement, L) -> dict[tuple[int, int], float]:
    g = tree_graph(placement, L)
    loads = {}
    for a, b in g.edges():
        side = below(g, a, b, L)
        total = 0.0
        for (u, group), r in entries.items():
            if any((w in side) != (u in side) for w in group):
                total += r
        loads[edge_key(a, b, L)] = total
    return loads


def separating_edges(placement, L, u, group) -> set[tuple[int, int]]:
    """Edges whose removal separates u from some group member."""
    g = tree_graph(placement, L)
    found = set()
    for a, b in g.edges():
        side = below(g, a, b, L)
        if any((w in side) != (u in side) for w in group if w != u):
            found.add(edge_key(a, b, L))
    return found


def min_distance(points) -> float:
    return min(math.dist(p, q) for p, q in itertools.combinations(points.tolist(), 2))
