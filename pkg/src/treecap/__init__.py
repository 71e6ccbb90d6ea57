"""Tree abstraction and cut-based capacity regions for random wireless networks.

The package builds the grid hierarchy of an extended network (n nodes on a
square of area n), evaluates the cut constraints that approximate the
balanced unicast and multicast capacity regions, routes traffic over the
capacitated tree graph induced by the grid, and fits the scaling exponents of
the maximal rate multiplier.
"""

from treecap.errors import (
    DegeneratePlacementError,
    InvalidSizeError,
    InvarianceError,
    RelayFailureError,
    TreecapError,
)
from treecap.geometry import (
    GridDecomposition,
    NodePlacement,
    RegularityReport,
    check_regularity,
    decompose,
    grid_levels,
    min_distance,
    place_nodes,
)
from treecap.regions import (
    MembershipReport,
    RegionSpec,
    max_multiplier,
    membership,
    membership_multicast,
    membership_unicast,
)
from treecap.routing import (
    EdgeLoadMap,
    edge_loads_multicast,
    edge_loads_unicast,
    feasible_on_tree,
)
from treecap.traffic import (
    BalanceReport,
    MulticastTraffic,
    UnicastTraffic,
    balance_factor_multicast,
    balance_factor_unicast,
)
from treecap.treegraph import EdgeRef, TreeGraph, build_tree, multicast_subtree, unique_path

__all__ = [
    "BalanceReport",
    "DegeneratePlacementError",
    "EdgeLoadMap",
    "EdgeRef",
    "GridDecomposition",
    "InvalidSizeError",
    "InvarianceError",
    "MembershipReport",
    "MulticastTraffic",
    "NodePlacement",
    "RegionSpec",
    "RegularityReport",
    "RelayFailureError",
    "TreeGraph",
    "TreecapError",
    "UnicastTraffic",
    "balance_factor_multicast",
    "balance_factor_unicast",
    "build_tree",
    "check_regularity",
    "decompose",
    "edge_loads_multicast",
    "edge_loads_unicast",
    "feasible_on_tree",
    "grid_levels",
    "max_multiplier",
    "membership",
    "membership_multicast",
    "membership_unicast",
    "min_distance",
    "multicast_subtree",
    "place_nodes",
    "unique_path",
]
