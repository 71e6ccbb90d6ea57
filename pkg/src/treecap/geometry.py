"""Node placement, nested grid decomposition and placement regularity checks.

Cells at level ``l`` split the square ``[0, sqrt(n)]^2`` into ``4**l`` equal
squares. Cell ``i`` at level ``l`` has column ``i % 2**l`` (left to right) and
row ``i // 2**l`` (bottom to top). Cells are half-open on the low side and
closed at the top/right edge of the region, so every point has exactly one
cell per level and a point's cell at level ``l + 1`` sits inside its cell at
level ``l``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from treecap import _random
from treecap.errors import InvalidSizeError

_FLOOR_EPS = 1e-9


def _floor(x: float) -> int:
    # Absorbs rounding in exact cases such as 0.5 * 16 * (1 - 0.25) == 6.
    return math.floor(x + _FLOOR_EPS)


@dataclass(frozen=True, eq=False)
class NodePlacement:
    """``n`` points on the square ``[0, side]^2`` with ``side = sqrt(n)``."""

    n: int
    side: float
    points: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape != (self.n, 2):
            raise ValueError(f"expected {self.n} points of shape (n, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        if pts.size and (pts.min() < 0.0 or pts.max() > self.side):
            raise ValueError(f"point coordinates must lie in [0, {self.side}]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points: Any, seed: int = 0) -> NodePlacement:
        pts = np.asarray(points, dtype=np.float64)
        n = int(pts.shape[0])
        return cls(n=n, side=math.sqrt(n), points=pts, seed=seed)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NodePlacement):
            return NotImplemented
        return (
            self.n == other.n
            and self.seed == other.seed
            and np.array_equal(self.points, other.points)
        )

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "seed": self.seed, "points": self.points.tolist()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> NodePlacement:
        n = int(data["n"])
        pts = np.asarray(data["points"], dtype=np.float64).reshape(-1, 2)
        if pts.shape[0] != n:
            raise ValueError(f"placement declares n={n} but lists {pts.shape[0]} points")
        return cls(n=n, side=math.sqrt(n), points=pts, seed=int(data.get("seed", 0)))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> NodePlacement:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def place_nodes(n: int, seed: int) -> NodePlacement:
    """Place ``n`` nodes independently and uniformly on ``[0, sqrt(n)]^2``."""
    if n < 4:
        raise InvalidSizeError(f"need n >= 4 nodes, got {n}")
    side = math.sqrt(n)
    pts = _random.rng(seed, _random.PLACEMENT, n).uniform(0.0, side, size=(n, 2))
    return NodePlacement(n=n, side=side, points=pts, seed=seed)


def grid_levels(n: int) -> tuple[int, int]:
    """Return ``(L, L')``, the tree depth and the regularity depth for ``n`` nodes.

    ``L = floor(1/2 log n (1 - log^{-1/2} n))`` and
    ``L' = floor(1/2 log n (1 - 1/2 log^{-5/6} n))``, logs base 2, both
    clamped at 0.
    """
    if n < 4:
        raise InvalidSizeError(f"need n >= 4 nodes, got {n}")
    lg = math.log2(n)
    L = max(0, _floor(0.5 * lg * (1.0 - lg ** -0.5)))
    Lprime = max(0, _floor(0.5 * lg * (1.0 - 0.5 * lg ** (-5.0 / 6.0))))
    return L, Lprime


def cell_indices(points: np.ndarray, side: float, level: int) -> np.ndarray:
    """Cell index of every point in the ``4**level`` grid."""
    k = 1 << level
    # Scaling t by a power of two is exact, which keeps levels nested.
    t = np.asarray(points, dtype=np.float64) / side
    rc = np.floor(t * k).astype(np.int64)
    np.clip(rc, 0, k - 1, out=rc)
    return rc[:, 1] * k + rc[:, 0]


def parent_cell(index: int | np.ndarray, level: int) -> int | np.ndarray:
    """Index of the level ``level - 1`` cell containing cell ``index`` at ``level``."""
    k = 1 << level
    row, col = index // k, index % k
    return (row // 2) * (k // 2) + col // 2


@dataclass(frozen=True, eq=False)
class GridDecomposition:
    """Cell assignment of every node for levels ``0..L``.

    ``cell_of[l, u]`` is the cell of node ``u`` at level ``l``.
    """

    L: int
    Lprime: int
    cell_of: np.ndarray
    _order: list[np.ndarray] = field(repr=False, default_factory=list)
    _offsets: list[np.ndarray] = field(repr=False, default_factory=list)

    @property
    def n(self) -> int:
        return int(self.cell_of.shape[1])

    def counts(self, level: int) -> np.ndarray:
        """Member count of every cell at ``level``."""
        return np.diff(self._offsets[level])

    def members(self, level: int, i: int) -> np.ndarray:
        """Sorted node indices in cell ``i`` at ``level``."""
        off = self._offsets[level]
        return self._order[level][off[i] : off[i + 1]]

    def cell_members(self, level: int) -> list[np.ndarray]:
        return [self.members(level, i) for i in range(4**level)]


def decompose(placement: NodePlacement, levels: int | None = None) -> GridDecomposition:
    """Assign every node to its cell at each level ``0..L``.

    ``levels`` overrides ``L`` (used to shrink the tree on sparse placements);
    ``L'`` always follows ``grid_levels``.
    """
    L, Lprime = grid_levels(placement.n)
    if levels is not None:
        if levels < 0:
            raise ValueError(f"levels must be nonnegative, got {levels}")
        L = levels
    deepest = cell_indices(placement.points, placement.side, L)
    cell_of = np.empty((L + 1, placement.n), dtype=np.int64)
    cell_of[L] = deepest
    for level in range(L, 0, -1):
        cell_of[level - 1] = parent_cell(cell_of[level], level)
    cell_of.setflags(write=False)
    order, offsets = [], []
    for level in range(L + 1):
        o, off = _csr(cell_of[level], 4**level)
        order.append(o)
        offsets.append(off)
    return GridDecomposition(L=L, Lprime=Lprime, cell_of=cell_of, _order=order, _offsets=offsets)


def _csr(cells: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(cells, kind="stable")
    offsets = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(np.bincount(cells, minlength=size), out=offsets[1:])
    return order, offsets


def min_distance(placement: NodePlacement) -> float:
    """Smallest Euclidean distance between two distinct nodes."""
    if placement.n < 2:
        raise InvalidSizeError(f"need at least 2 nodes, got {placement.n}")
    pts = placement.points
    dist, idx = cKDTree(pts).query(pts, k=2)
    u = int(np.argmin(dist[:, 1]))
    v = int(idx[u, 1])
    if dist[u, 1] == 0.0:
        return 0.0
    return math.hypot(pts[u, 0] - pts[v, 0], pts[u, 1] - pts[v, 1])


class Violation(NamedTuple):
    condition: str
    level: int | None
    cell: int | None


@dataclass(frozen=True)
class RegularityReport:
    """Outcome of the four placement regularity conditions.

    ``notes`` records how non-integer condition levels were rounded or
    clamped; notes never affect ``overall``.
    """

    min_dist_ok: bool
    unit_cell_max_ok: bool
    log_cell_min_ok: bool
    proportional_ok: list[bool]
    violations: list[Violation]
    notes: list[str] = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return (
            self.min_dist_ok
            and self.unit_cell_max_ok
            and self.log_cell_min_ok
            and all(self.proportional_ok)
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "overall": self.overall,
            "min_dist_ok": self.min_dist_ok,
            "unit_cell_max_ok": self.unit_cell_max_ok,
            "log_cell_min_ok": self.log_cell_min_ok,
            "proportional_ok": list(self.proportional_ok),
            "violations": [list(v) for v in self.violations],
            "notes": list(self.notes),
        }


def _condition_level(exact: float, name: str, notes: list[str]) -> int:
    level = _floor(exact)
    if level < 0:
        notes.append(f"{name}: level {exact:.4f} clamped to 0")
        return 0
    if abs(exact - level) > _FLOOR_EPS:
        notes.append(f"{name}: level {exact:.4f} floored to {level}")
    return level


def check_regularity(
    placement: NodePlacement, decomposition: GridDecomposition | None = None
) -> RegularityReport:
    """Evaluate the regularity conditions a placement needs for the tree bounds.

    (a) all pairwise distances exceed ``1/n``; (b) cells at level
    ``1/2 log n`` (area about 1) hold at most ``log n`` nodes; (c) cells at
    level ``1/2 log(n / (2 log n))`` hold at least one node; (d) every cell at
    levels ``1..L'`` holds between ``4**(-l-1) n`` and ``4**(-l+1) n`` nodes.
    Failures are reported, never raised.
    """
    n = placement.n
    lg = math.log2(n)
    Lprime = decomposition.Lprime if decomposition is not None else grid_levels(n)[1]
    violations: list[Violation] = []
    notes: list[str] = []

    min_dist_ok = min_distance(placement) > 1.0 / n
    if not min_dist_ok:
        violations.append(Violation("min_distance", None, None))

    def counts_at(level: int) -> np.ndarray:
        if decomposition is not None and level <= decomposition.L:
            return decomposition.counts(level)
        cells = cell_indices(placement.points, placement.side, level)
        return np.bincount(cells, minlength=4**level)

    level_b = _condition_level(0.5 * lg, "unit_cell_max", notes)
    over = np.flatnonzero(counts_at(level_b) > lg)
    violations.extend(Violation("unit_cell_max", level_b, int(i)) for i in over)

    level_c = _condition_level(0.5 * math.log2(n / (2.0 * lg)), "log_cell_min", notes)
    empty = np.flatnonzero(counts_at(level_c) < 1)
    violations.extend(Violation("log_cell_min", level_c, int(i)) for i in empty)

    proportional_ok = []
    for level in range(1, Lprime + 1):
        c = counts_at(level)
        lo, hi = 4.0 ** (-level - 1) * n, 4.0 ** (-level + 1) * n
        bad = np.flatnonzero((c < lo) | (c > hi))
        violations.extend(Violation("proportional", level, int(i)) for i in bad)
        proportional_ok.append(bad.size == 0)

    return RegularityReport(
        min_dist_ok=min_dist_ok,
        unit_cell_max_ok=over.size == 0,
        log_cell_min_ok=empty.size == 0,
        proportional_ok=proportional_ok,
        violations=violations,
        notes=notes,
    )


def grid_placement(k: int) -> NodePlacement:
    """``k * k`` nodes at the centers of the unit cells of ``[0, k]^2``.

    Nodes are indexed row-major from the bottom-left corner.
    """
    c = np.arange(k, dtype=np.float64) + 0.5
    xs, ys = np.meshgrid(c, c)
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    return NodePlacement(n=k * k, side=float(k), points=pts, seed=0)
