"""The capacitated tree induced by the grid hierarchy.

Tree nodes are keyed ``(level, index)``: internal node ``(l, i)`` is grid
cell ``i`` at level ``l`` for ``0 <= l <= L``; leaf ``(L + 1, u)`` is network
node ``u``. An edge is named by its lower endpoint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np

from treecap.errors import DegeneratePlacementError
from treecap.geometry import GridDecomposition, NodePlacement, parent_cell

TreeNode = tuple[int, int]


class EdgeRef(NamedTuple):
    """Edge between ``(level, child)`` and its parent ``(level - 1, parent)``."""

    level: int
    child: int
    parent: int

    @property
    def lower(self) -> TreeNode:
        return (self.level, self.child)

    @property
    def upper(self) -> TreeNode:
        return (self.level - 1, self.parent)


def effective_alpha(alpha: float) -> float:
    """Path-loss exponent capped at 3, which governs every capacity exponent."""
    if not alpha > 2:
        raise ValueError(f"path-loss exponent must exceed 2, got {alpha}")
    return min(3.0, float(alpha))


def cell_capacity(n: int, level: int, alpha: float) -> float:
    """``(4**-level * n) ** (2 - min(3, alpha) / 2)``, the capacity across a level cell."""
    return (4.0**-level * n) ** (2.0 - effective_alpha(alpha) / 2.0)


def representative_count(n: int, L: int) -> int:
    return max(1, math.floor(4.0 ** (-L - 1) * n + 1e-9))


@dataclass(frozen=True, eq=False)
class TreeGraph:
    """Full tree over the grid cells with per-level edge capacities.

    ``capacities[l]`` is the capacity of every edge whose lower endpoint sits
    at level ``l`` (``1 <= l <= L + 1``; index 0 is unused). ``reps[l][i]`` is
    the sorted representative set of internal node ``(l, i)``. ``clamped``
    lists level-``L`` cells holding fewer members than the representative
    count.
    """

    n: int
    L: int
    alpha: float
    decomposition: GridDecomposition
    capacities: tuple[float, ...]
    reps: tuple[tuple[np.ndarray, ...], ...]
    rep_count: int
    clamped: tuple[int, ...] = field(default=())

    @property
    def levels(self) -> range:
        return range(self.L + 2)

    @property
    def leaf_level(self) -> int:
        return self.L + 1

    def parent(self, node: TreeNode) -> TreeNode:
        level, i = node
        if level == self.L + 1:
            return (self.L, int(self.decomposition.cell_of[self.L][i]))
        if level <= 0:
            raise ValueError("the root has no parent")
        return (level - 1, int(parent_cell(i, level)))

    def children(self, node: TreeNode) -> list[TreeNode]:
        level, i = node
        if level == self.L + 1:
            return []
        if level == self.L:
            return [(self.L + 1, int(u)) for u in self.decomposition.members(self.L, i)]
        k = 1 << level
        row, col = divmod(i, k)
        return [
            (level + 1, (2 * row + dr) * 2 * k + 2 * col + dc) for dr in (0, 1) for dc in (0, 1)
        ]

    def ancestor(self, u: int, level: int) -> int:
        """Index of leaf ``u``'s ancestor at ``level`` (``0..L``)."""
        return int(self.decomposition.cell_of[level][u])

    def edge_above(self, node: TreeNode) -> EdgeRef:
        level, i = node
        return EdgeRef(level, i, self.parent(node)[1])

    def capacity(self, edge: EdgeRef) -> float:
        return self.capacities[edge.level]

    def representatives(self, node: TreeNode) -> np.ndarray:
        level, i = node
        if level == self.L + 1:
            return np.array([i], dtype=np.int64)
        return self.reps[level][i]

    def edges(self) -> list[EdgeRef]:
        """Every tree edge, ordered by level then by lower endpoint."""
        out = []
        for level in range(1, self.L + 1):
            k = 1 << level
            out.extend(EdgeRef(level, i, int(parent_cell(i, level))) for i in range(k * k))
        cells = self.decomposition.cell_of[self.L]
        out.extend(EdgeRef(self.L + 1, u, int(cells[u])) for u in range(self.n))
        return out

    def internal_node_count(self) -> int:
        return sum(4**level for level in range(self.L + 1))

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "L": self.L,
            "alpha": self.alpha,
            "levels": self.L + 2,
            "capacity": {str(level): self.capacities[level] for level in range(1, self.L + 2)},
            "leaf_parent": self.decomposition.cell_of[self.L].tolist(),
            "representatives": [
                {"level": level, "cells": [r.tolist() for r in self.reps[level]]}
                for level in range(self.L + 1)
            ],
            "clamped": list(self.clamped),
        }

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")


def build_tree(placement: NodePlacement, decomposition: GridDecomposition, alpha: float) -> TreeGraph:
    """Build the capacitated tree for a placement and its decomposition.

    Level-``L`` representatives are the ``m = max(1, floor(4**(-L-1) n))``
    lowest-indexed members of each cell (fewer when the cell is smaller,
    which is recorded in ``clamped``); higher levels take the union of their
    children.

    Raises:
        DegeneratePlacementError: a level-``L`` cell is empty. Rebuild the
            decomposition with a smaller ``levels`` override.
    """
    n, L = placement.n, decomposition.L
    if decomposition.n != n:
        raise ValueError("decomposition does not match the placement")
    capacities = (math.nan,) + tuple(cell_capacity(n, level, alpha) for level in range(1, L + 1)) + (1.0,)

    counts = decomposition.counts(L)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        i = int(empty[0])
        raise DegeneratePlacementError(f"cell ({L}, {i}) is empty; reduce the tree depth", cell=(L, i))
    m = representative_count(n, L)
    clamped = tuple(int(i) for i in np.flatnonzero(counts < m))

    reps: list[tuple[np.ndarray, ...]] = [()] * (L + 1)
    reps[L] = tuple(_frozen(decomposition.members(L, i)[:m]) for i in range(4**L))
    for level in range(L - 1, -1, -1):
        k = 1 << level
        below = reps[level + 1]
        cells = []
        for i in range(4**level):
            row, col = divmod(i, k)
            kids = [(2 * row + dr) * 2 * k + 2 * col + dc for dr in (0, 1) for dc in (0, 1)]
            cells.append(_frozen(np.sort(np.concatenate([below[c] for c in kids]))))
        reps[level] = tuple(cells)

    return TreeGraph(
        n=n,
        L=L,
        alpha=float(alpha),
        decomposition=decomposition,
        capacities=capacities,
        reps=tuple(reps),
        rep_count=m,
        clamped=clamped,
    )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.int64)
    a.setflags(write=False)
    return a


def _meet_level(tree: TreeGraph, u: int, w: int) -> int:
    """Deepest level at which ``u`` and ``w`` share a cell."""
    cells = tree.decomposition.cell_of
    for level in range(tree.L, -1, -1):
        if cells[level][u] == cells[level][w]:
            return level
    return 0


def _path_up(tree: TreeGraph, u: int, stop_level: int) -> list[EdgeRef]:
    """Edges from leaf ``u`` up to its ancestor at ``stop_level``."""
    cells = tree.decomposition.cell_of
    path = [EdgeRef(tree.L + 1, u, int(cells[tree.L][u]))]
    for level in range(tree.L, stop_level, -1):
        path.append(EdgeRef(level, int(cells[level][u]), int(cells[level - 1][u])))
    return path


def _check_leaf(tree: TreeGraph, u: int) -> None:
    if not 0 <= u < tree.n:
        raise IndexError(f"node {u} is not a leaf of a tree with {tree.n} leaves")


def unique_path(tree: TreeGraph, u: int, w: int) -> list[EdgeRef]:
    """Edges on the tree path from leaf ``u`` to leaf ``w``.

    Ordered from ``u`` up to the meeting node, then down to ``w``. Empty when
    ``u == w``.
    """
    _check_leaf(tree, u)
    _check_leaf(tree, w)
    if u == w:
        return []
    meet = _meet_level(tree, u, w)
    return _path_up(tree, u, meet) + _path_up(tree, w, meet)[::-1]


def multicast_subtree(tree: TreeGraph, u: int, group: Any) -> set[EdgeRef]:
    """Edges of the smallest subtree spanning ``u`` and ``group``."""
    _check_leaf(tree, u)
    edges: set[EdgeRef] = set()
    for w in group:
        w = int(w)
        _check_leaf(tree, w)
        edges.update(unique_path(tree, u, w))
    return edges
