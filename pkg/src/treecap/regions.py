"""Cut-based membership tests for the approximate capacity regions.

A traffic matrix is checked against two families of cuts: every grid cell at
levels ``1..L`` and every single node. The largest multiplier ``rho`` with
``rho * traffic`` satisfying all cuts is ``min(rhs / lhs)`` over the cuts that
carry traffic.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Any, Literal, NamedTuple

import numpy as np

from treecap.geometry import GridDecomposition, NodePlacement, RegularityReport, check_regularity
from treecap.traffic import (
    BalanceReport,
    MulticastTraffic,
    Traffic,
    UnicastTraffic,
    balance_factor,
    cut_flows,
    node_flows,
)
from treecap.treegraph import cell_capacity, effective_alpha

FEASIBILITY_TOL = 1e-9

Kind = Literal["unicast", "multicast"]
Direction = Literal["out", "both", "dense"]


@dataclass(frozen=True)
class RegionSpec:
    """Which region to test against.

    ``direction`` selects the cell-cut left-hand side: ``"out"`` counts
    traffic leaving the cell, ``"both"`` adds traffic entering it, and
    ``"dense"`` drops cell cuts entirely (unit-area networks).
    """

    kind: Kind = "unicast"
    direction: Direction = "out"
    alpha: float = 3.0

    def __post_init__(self) -> None:
        if self.kind not in ("unicast", "multicast"):
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.direction not in ("out", "both", "dense"):
            raise ValueError(f"unknown direction {self.direction!r}")
        effective_alpha(self.alpha)

    @property
    def tight(self) -> bool:
        """Whether the region is known to match capacity up to small factors.

        The two-direction region is only characterized for ``alpha > 5``.
        """
        return self.direction != "both" or self.alpha > 5


class Constraint(NamedTuple):
    """One cut: ``kind`` is ``"cell"`` (``level``, ``index``) or ``"node"`` (``index``)."""

    kind: str
    level: int | None
    index: int
    direction: str
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.rhs / self.lhs if self.lhs > 0 else math.inf

    def to_dict(self) -> dict[str, Any]:
        return self._asdict()


@dataclass(frozen=True)
class MembershipReport:
    feasible: bool
    max_multiplier: float
    binding: Constraint | None
    slack: list[Constraint]
    n_cell_cuts: int
    n_node_cuts: int
    regularity: RegularityReport | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "feasible": self.feasible,
            "max_multiplier": _json_float(self.max_multiplier),
            "binding": self.binding.to_dict() if self.binding else None,
            "n_cell_cuts": self.n_cell_cuts,
            "n_node_cuts": self.n_node_cuts,
            "slack": [c.to_dict() for c in self.slack],
            "regularity": self.regularity.to_dict() if self.regularity else None,
        }


def _json_float(x: float) -> float | str:
    return "inf" if math.isinf(x) else x


def _cut_arrays(
    t: Traffic, g: GridDecomposition, spec: RegionSpec
) -> tuple[list[tuple[np.ndarray, float]], np.ndarray]:
    """Per-level cell-cut lhs with its rhs, and the node-cut lhs."""
    out, inn = node_flows(t, g.n)
    nodes = out + inn
    cells: list[tuple[np.ndarray, float]] = []
    if spec.direction != "dense":
        for level, (c_out, c_in) in enumerate(cut_flows(t, g), start=1):
            lhs = c_out + c_in if spec.direction == "both" else c_out
            cells.append((lhs, cell_capacity(g.n, level, spec.alpha)))
    return cells, nodes


def _evaluate(t: Traffic, g: GridDecomposition, spec: RegionSpec, slack_limit: int | None) -> MembershipReport:
    cells, nodes = _cut_arrays(t, g, spec)
    best, binding = math.inf, None
    feasible = True
    slack: list[Constraint] = []
    limit = sys.maxsize if slack_limit is None else slack_limit

    for level, (lhs, rhs) in enumerate(cells, start=1):
        feasible &= bool(np.all(lhs <= rhs * (1 + FEASIBILITY_TOL)))
        loaded = np.flatnonzero(lhs > 0)
        if loaded.size:
            with np.errstate(over="ignore"):
                ratios = rhs / lhs[loaded]
            j = int(np.argmin(ratios))
            if ratios[j] < best:
                best = float(ratios[j])
                binding = Constraint("cell", level, int(loaded[j]), spec.direction, float(lhs[loaded[j]]), rhs)
        for i in range(min(lhs.size, limit - len(slack))):
            slack.append(Constraint("cell", level, i, spec.direction, float(lhs[i]), rhs))

    feasible &= bool(np.all(nodes <= 1.0 * (1 + FEASIBILITY_TOL)))
    loaded = np.flatnonzero(nodes > 0)
    if loaded.size:
        with np.errstate(over="ignore"):
            ratios = 1.0 / nodes[loaded]
        j = int(np.argmin(ratios))
        if ratios[j] < best:
            best = float(ratios[j])
            binding = Constraint("node", None, int(loaded[j]), "node", float(nodes[loaded[j]]), 1.0)
    for u in range(min(nodes.size, limit - len(slack))):
        slack.append(Constraint("node", None, u, "node", float(nodes[u]), 1.0))

    return MembershipReport(
        feasible=feasible,
        max_multiplier=best,
        binding=binding,
        slack=slack,
        n_cell_cuts=sum(lhs.size for lhs, _ in cells),
        n_node_cuts=int(nodes.size),
    )


def _with_regularity(report: MembershipReport, placement: NodePlacement | None, g: GridDecomposition) -> MembershipReport:
    if placement is None:
        return report
    return MembershipReport(**{**report.__dict__, "regularity": check_regularity(placement, g)})


def membership_unicast(
    t: UnicastTraffic,
    g: GridDecomposition,
    spec: RegionSpec,
    *,
    placement: NodePlacement | None = None,
    slack_limit: int | None = 0,
) -> MembershipReport:
    """Test unicast traffic against the cell and node cuts.

    Cell cut ``(l, i)`` bounds the traffic leaving cell ``i`` (plus entering
    it for ``direction="both"``) by ``(4**-l n) ** (2 - min(3, alpha) / 2)``.
    Node cut ``u`` bounds everything ``u`` sends or receives by 1.

    Args:
        placement: when given, the report carries its regularity check.
        slack_limit: how many constraints to list in ``slack`` (``None`` for all).

    Raises:
        IndexError: the traffic names a node outside the decomposition.
    """
    if spec.kind != "unicast" or not isinstance(t, UnicastTraffic):
        raise ValueError("membership_unicast needs unicast traffic and a unicast region")
    return _with_regularity(_evaluate(t, g, spec, slack_limit), placement, g)


def membership_multicast(
    t: MulticastTraffic,
    g: GridDecomposition,
    spec: RegionSpec,
    *,
    placement: NodePlacement | None = None,
    slack_limit: int | None = 0,
) -> MembershipReport:
    """Test multicast traffic against the cell and node cuts.

    An entry ``(u, W)`` loads cell ``(l, i)`` when ``u`` is inside and ``W``
    is not contained in the cell (and, for ``direction="both"``, when ``u``
    is outside and ``W`` meets the cell). It loads node ``u``'s cut when
    ``W`` reaches past ``u``, and every other member's node cut.
    """
    if spec.kind != "multicast" or not isinstance(t, MulticastTraffic):
        raise ValueError("membership_multicast needs multicast traffic and a multicast region")
    return _with_regularity(_evaluate(t, g, spec, slack_limit), placement, g)


def membership(
    t: Traffic,
    g: GridDecomposition,
    spec: RegionSpec | None = None,
    **kwargs: Any,
) -> MembershipReport:
    """Dispatch on traffic type; ``spec`` defaults to the matching out-only region."""
    if spec is None:
        spec = RegionSpec(kind="multicast" if isinstance(t, MulticastTraffic) else "unicast")
    if isinstance(t, MulticastTraffic):
        return membership_multicast(t, g, spec, **kwargs)
    return membership_unicast(t, g, spec, **kwargs)


def max_multiplier(t: Traffic, g: GridDecomposition, spec: RegionSpec | None = None) -> float:
    """Largest ``rho`` with ``rho * t`` inside the region (``inf`` for zero traffic)."""
    return membership(t, g, spec).max_multiplier


@dataclass(frozen=True)
class BalancedMembership:
    """Region membership together with the balance condition ``gamma <= gamma_max``."""

    membership: MembershipReport
    balance: BalanceReport
    gamma_max: float
    balanced: bool = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "balanced", self.balance.gamma <= self.gamma_max)

    @property
    def feasible(self) -> bool:
        return self.membership.feasible and self.balanced

    def to_dict(self) -> dict[str, Any]:
        return {
            "feasible": self.feasible,
            "balanced": self.balanced,
            "gamma_max": self.gamma_max,
            "balance": {**self.balance.to_dict(), "gamma": _json_float(self.balance.gamma)},
            "membership": self.membership.to_dict(),
        }


def balanced_membership(
    t: Traffic,
    g: GridDecomposition,
    spec: RegionSpec | None = None,
    gamma_max: float = 1.0,
    **kwargs: Any,
) -> BalancedMembership:
    """Membership in the region intersected with the ``gamma_max``-balanced traffic."""
    return BalancedMembership(
        membership=membership(t, g, spec, **kwargs),
        balance=balance_factor(t, g),
        gamma_max=gamma_max,
    )
