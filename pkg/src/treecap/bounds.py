"""Single-node cut-set bound with unit-power transmitters and ``r**-alpha`` gains."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.spatial.distance import cdist

from treecap.errors import DegeneratePlacementError
from treecap.geometry import NodePlacement, min_distance


@dataclass(frozen=True)
class CutBoundReport:
    """Capacity of the cut around node ``u`` against ``(2 + alpha) log2 n``.

    ``satisfied`` is ``None`` when the placement has two nodes within
    ``1/n`` of each other, where the bound is not claimed.
    """

    u: int
    value: float
    bound: float
    satisfied: bool | None

    def to_dict(self) -> dict[str, Any]:
        return {"u": self.u, "value": self.value, "bound": self.bound, "satisfied": self.satisfied}


def _validate(placement: NodePlacement, alpha: float) -> float:
    if not alpha > 2:
        raise ValueError(f"path-loss exponent must exceed 2, got {alpha}")
    if placement.n < 2:
        return math.inf
    d = min_distance(placement)
    if d == 0.0:
        raise DegeneratePlacementError("placement has coincident points")
    return d


def node_cut_bound(placement: NodePlacement, u: int, alpha: float) -> CutBoundReport:
    """``log2(1 + sum_{v != u} r_uv**-alpha)`` for node ``u``.

    Raises:
        DegeneratePlacementError: two nodes coincide.
    """
    if not 0 <= u < placement.n:
        raise IndexError(f"node {u} out of range for n={placement.n}")
    return node_cut_bounds(placement, alpha)[u]


def node_cut_bounds(placement: NodePlacement, alpha: float) -> list[CutBoundReport]:
    """:func:`node_cut_bound` for every node."""
    dmin = _validate(placement, alpha)
    n = placement.n
    bound = (2.0 + alpha) * math.log2(n) if n > 1 else 0.0
    applicable = dmin > 1.0 / n
    pts = placement.points
    values = np.empty(n)
    # Blocks keep the distance matrix small for large n.
    block = max(1, 4_000_000 // max(n, 1))
    for start in range(0, n, block):
        stop = min(n, start + block)
        d = cdist(pts[start:stop], pts)
        d[np.arange(stop - start), np.arange(start, stop)] = np.inf
        values[start:stop] = np.log2(1.0 + np.sum(d**-alpha, axis=1))
    return [
        CutBoundReport(
            u=u,
            value=float(values[u]),
            bound=bound,
            satisfied=bool(values[u] <= bound) if applicable else None,
        )
        for u in range(n)
    ]
