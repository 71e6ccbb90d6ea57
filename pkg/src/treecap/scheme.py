"""Three-layer communication scheme on the tree.

The cooperation layer moves a message between tree nodes while keeping it
spread in equal disjoint parts over the representatives of the current tree
node. The physical layer is represented only by the rate each edge achieves.
Hierarchical relaying is represented by its squarelet structure and relay
assignments.
"""

from __future__ import annotations

import math
from collections import Counter, deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

import numpy as np

from treecap import _random
from treecap.errors import InvalidSizeError, InvarianceError, RelayFailureError
from treecap.geometry import NodePlacement, cell_indices
from treecap.traffic import gen_permutation
from treecap.treegraph import EdgeRef, TreeGraph, TreeNode, effective_alpha, multicast_subtree, unique_path

Interval = tuple[Fraction, Fraction]
Fragments = tuple[Interval, ...]

# ---------------------------------------------------------------------------
# Fragment bookkeeping
# ---------------------------------------------------------------------------


def _measure(frags: Fragments) -> Fraction:
    return sum((b - a for a, b in frags), Fraction(0))


def _merge(frags: Iterable[Interval]) -> Fragments:
    out: list[Interval] = []
    for a, b in sorted(frags):
        if out and out[-1][1] == a:
            out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return tuple(out)


def _split(frags: Fragments, parts: int) -> list[Fragments]:
    """Cut ``frags`` into ``parts`` consecutive pieces of equal measure."""
    step = _measure(frags) / parts
    pieces: list[list[Interval]] = [[] for _ in range(parts)]
    k, room = 0, step
    for a, b in frags:
        while a < b:
            take = min(b - a, room)
            pieces[k].append((a, a + take))
            a += take
            room -= take
            if room == 0 and k < parts - 1:
                k, room = k + 1, step
    return [_merge(p) for p in pieces]


@dataclass(frozen=True)
class MessageState:
    """Which parts of one unit message each node currently holds."""

    message_id: int
    holdings: Mapping[int, Fragments]
    size: Fraction = Fraction(1)

    @classmethod
    def at_node(cls, u: int, message_id: int = 0) -> MessageState:
        return cls(message_id=message_id, holdings={u: ((Fraction(0), Fraction(1)),)})

    def measure(self, u: int) -> Fraction:
        return _measure(self.holdings.get(u, ()))

    @property
    def holders(self) -> list[int]:
        return sorted(u for u, f in self.holdings.items() if f)

    def is_disjoint(self) -> bool:
        spans = sorted(iv for f in self.holdings.values() for iv in f)
        return all(prev[1] <= nxt[0] for prev, nxt in zip(spans, spans[1:]))

    def check_even(self, reps: Iterable[int]) -> None:
        """Require an exact partition of the message into equal parts over ``reps``.

        Raises:
            InvarianceError: naming the first node that breaks the partition.
        """
        reps = sorted(int(r) for r in reps)
        share = Fraction(1, len(reps))
        allowed = set(reps)
        for u in self.holders:
            if u not in allowed:
                raise InvarianceError(f"node {u} holds part of the message but is not a representative", node=u)
        for u in reps:
            if self.measure(u) != share:
                raise InvarianceError(f"node {u} holds {self.measure(u)} instead of {share}", node=u)
        if not self.is_disjoint():
            raise InvarianceError("fragments overlap", node=None)
        whole = _merge(iv for f in self.holdings.values() for iv in f)
        if whole != ((Fraction(0), Fraction(1)),):
            raise InvarianceError("fragments do not cover the message", node=None)

    def is_even(self, reps: Iterable[int]) -> bool:
        try:
            self.check_even(reps)
        except InvarianceError:
            return False
        return True

    def summary(self) -> dict[str, Any]:
        return {
            "message": self.message_id,
            "holders": self.holders,
            "measures": [str(self.measure(u)) for u in self.holders],
        }


def _reps(tree: TreeGraph, node: TreeNode) -> list[int]:
    return [int(r) for r in tree.representatives(node)]


def _check_link(tree: TreeGraph, child: TreeNode, parent: TreeNode) -> None:
    if tree.parent(child) != parent:
        raise ValueError(f"{parent} is not the parent of {child}")


def _check_fourfold(child: TreeNode, parent: TreeNode, k: int, big: int) -> None:
    if big != 4 * k:
        raise InvarianceError(
            f"representatives of {parent} ({big}) are not four times those of {child} ({k})",
            node=parent,
        )


def distribute_up(state: MessageState, tree: TreeGraph, child: TreeNode, parent: TreeNode) -> MessageState:
    """Spread a message held evenly by ``child``'s representatives over ``parent``'s.

    From a leaf the message is cut into one part per representative of the
    parent. Otherwise each holder cuts its part into four, keeps one and
    sends three to distinct parent representatives outside ``child``.

    Raises:
        InvarianceError: the incoming or resulting holdings are not an even
            partition, or the representative sets are not fourfold.
    """
    _check_link(tree, child, parent)
    low, high = _reps(tree, child), _reps(tree, parent)
    state.check_even(low)
    if child[0] == tree.leaf_level:
        pieces = _split(state.holdings[child[1]], len(high))
        new = dict(zip(high, pieces))
    else:
        _check_fourfold(child, parent, len(low), len(high))
        inside = set(low)
        receivers = [r for r in high if r not in inside]
        new = {}
        for j, h in enumerate(low):
            keep, *sent = _split(state.holdings[h], 4)
            new[h] = keep
            for r, piece in zip(receivers[3 * j : 3 * j + 3], sent):
                new[r] = piece
    out = MessageState(state.message_id, new, state.size)
    out.check_even(high)
    return out


def concentrate_down(state: MessageState, tree: TreeGraph, parent: TreeNode, child: TreeNode) -> MessageState:
    """Gather a message held evenly by ``parent``'s representatives onto ``child``'s.

    Each representative of ``child`` keeps its own part and receives three
    more; a leaf receives every part.
    """
    _check_link(tree, child, parent)
    high, low = _reps(tree, parent), _reps(tree, child)
    state.check_even(high)
    if child[0] == tree.leaf_level:
        new = {child[1]: _merge(iv for f in state.holdings.values() for iv in f)}
    else:
        _check_fourfold(child, parent, len(low), len(high))
        inside = set(low)
        senders = [r for r in high if r not in inside]
        gathered: dict[int, list[Interval]] = {r: list(state.holdings[r]) for r in low}
        for j, s in enumerate(senders):
            gathered[low[j // 3]].extend(state.holdings[s])
        new = {r: _merge(f) for r, f in gathered.items()}
    out = MessageState(state.message_id, new, state.size)
    out.check_even(low)
    return out


@dataclass(frozen=True)
class Step:
    edge: EdgeRef
    direction: str
    state: MessageState

    def to_dict(self) -> dict[str, Any]:
        return {"edge": list(self.edge), "direction": self.direction, **self.state.summary()}


@dataclass(frozen=True)
class SimulationTrace:
    steps: list[Step]
    delivered: dict[int, bool]

    @property
    def complete(self) -> bool:
        return all(self.delivered.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "complete": self.complete,
            "delivered": {str(k): v for k, v in self.delivered.items()},
            "steps": [s.to_dict() for s in self.steps],
        }


def _move(state: MessageState, tree: TreeGraph, a: TreeNode, b: TreeNode) -> tuple[MessageState, EdgeRef, str]:
    if b[0] == a[0] - 1:
        return distribute_up(state, tree, a, b), tree.edge_above(a), "up"
    return concentrate_down(state, tree, a, b), tree.edge_above(b), "down"


def _delivered(state: MessageState, w: int) -> bool:
    return state.holders == [w] and state.measure(w) == 1


def simulate_unicast(tree: TreeGraph, u: int, w: int, message_id: int = 0) -> SimulationTrace:
    """Carry one message from leaf ``u`` to leaf ``w`` along the tree path."""
    state = MessageState.at_node(u, message_id)
    node: TreeNode = (tree.leaf_level, u)
    steps = []
    for edge in unique_path(tree, u, w):
        nxt = edge.upper if edge.lower == node else edge.lower
        state, _, direction = _move(state, tree, node, nxt)
        steps.append(Step(edge, direction, state))
        node = nxt
    return SimulationTrace(steps, {w: _delivered(state, w)})


def simulate_multicast(tree: TreeGraph, u: int, group: Iterable[int], message_id: int = 0) -> SimulationTrace:
    """Carry one message from leaf ``u`` to every member of ``group``.

    The message follows the spanning subtree outward from ``u``; where the
    subtree branches, each branch continues with its own copy.
    """
    targets = sorted({int(w) for w in group} - {u})
    edges = sorted(multicast_subtree(tree, u, targets))
    adjacent: dict[TreeNode, list[TreeNode]] = {}
    for e in edges:
        adjacent.setdefault(e.lower, []).append(e.upper)
        adjacent.setdefault(e.upper, []).append(e.lower)
    start: TreeNode = (tree.leaf_level, u)
    queue = deque([(start, MessageState.at_node(u, message_id))])
    seen = {start}
    steps: list[Step] = []
    delivered = {w: False for w in targets}
    while queue:
        node, state = queue.popleft()
        for nxt in sorted(adjacent.get(node, [])):
            if nxt in seen:
                continue
            seen.add(nxt)
            moved, edge, direction = _move(state, tree, node, nxt)
            steps.append(Step(edge, direction, moved))
            if nxt[0] == tree.leaf_level:
                delivered[nxt[1]] = _delivered(moved, nxt[1])
            queue.append((nxt, moved))
    return SimulationTrace(steps, delivered)


# ---------------------------------------------------------------------------
# Physical-layer rate bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RateEntry:
    """Rate achieved on one edge as a product of the listed factors."""

    edge: EdgeRef
    rate: float
    capacity: float
    factors: dict[str, float]

    @property
    def gap_ratio(self) -> float:
        return self.rate / self.capacity

    def to_dict(self) -> dict[str, Any]:
        return {
            "edge": list(self.edge),
            "rate": self.rate,
            "capacity": self.capacity,
            "gap_ratio": self.gap_ratio,
            "factors": dict(self.factors),
        }


def achieved_edge_rate(tree: TreeGraph, edge: EdgeRef, alpha: float | None = None) -> RateEntry:
    """Rate the physical layer delivers on ``edge``.

    Every level gets ``1 / (2 (L + 1))`` of the time, shared between upward
    and downward traffic. An internal edge above a level-``l`` cell
    additionally runs in one of 4 spatial groups and one of 3 pairings, and
    moves ``m = 4**(-l-1) n`` nodes' worth of traffic at per-node rate
    ``m ** (1 - min(3, alpha) / 2)``. A leaf edge runs in one of 16 spatial
    groups at per-node rate ``(4**-L n) ** (1 - min(3, alpha) / 2)``. Polylog
    and ``n**-o(1)`` losses are set to 1.
    """
    a = effective_alpha(tree.alpha if alpha is None else alpha)
    n, L = tree.n, tree.L
    share = 1.0 / (2 * (L + 1))
    if edge.level == L + 1:
        factors = {
            "time_share": share,
            "spatial_reuse": 1.0 / 16,
            "per_node_rate": (4.0**-L * n) ** (1.0 - a / 2.0),
            "normalization": 1.0,
        }
        capacity = 1.0
    else:
        m = 4.0 ** (-edge.level - 1) * n
        factors = {
            "time_share": share,
            "spatial_reuse": 1.0 / 4,
            "pairing": 1.0 / 3,
            "cluster_size": m,
            "per_node_rate": m ** (1.0 - a / 2.0),
        }
        capacity = (4.0**-edge.level * n) ** (2.0 - a / 2.0)
    return RateEntry(edge=edge, rate=math.prod(factors.values()), capacity=capacity, factors=factors)


@dataclass(frozen=True)
class RateLedger:
    """Achieved rate per tree level (rates depend on the level only)."""

    n: int
    L: int
    alpha: float
    entries: list[RateEntry]
    time_share: float
    leaf_in_shared_budget: bool = True

    def to_dict(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "L": self.L,
            "alpha": self.alpha,
            "time_share": self.time_share,
            "leaf_in_shared_budget": self.leaf_in_shared_budget,
            "entries": [e.to_dict() for e in self.entries],
        }


def rate_ledger(tree: TreeGraph, alpha: float | None = None) -> RateLedger:
    a = tree.alpha if alpha is None else alpha
    edges = tree.edges()
    first = {}
    for e in edges:
        first.setdefault(e.level, e)
    return RateLedger(
        n=tree.n,
        L=tree.L,
        alpha=a,
        entries=[achieved_edge_rate(tree, first[level], a) for level in sorted(first)],
        time_share=1.0 / (2 * (tree.L + 1)),
    )


# ---------------------------------------------------------------------------
# Hierarchical relaying structure
# ---------------------------------------------------------------------------


def relay_depth(n: int) -> int:
    return max(1, round(math.log2(n) ** (1.0 / 3.0)))


def final_squarelet_exponent(n: int) -> int:
    """``e`` with ``4**e`` final squarelets: the final count rounded up to a power of 4."""
    lg = math.log2(n)
    return math.ceil(lg / (1.0 + lg ** (-1.0 / 3.0)) / 2.0 - 1e-9)


def level_exponents(n: int) -> list[int]:
    """Squarelet subdivision exponent of each recursion level, larger first."""
    depth = relay_depth(n)
    total = final_squarelet_exponent(n)
    base, extra = divmod(total, depth)
    return [base + 1] * extra + [base] * (depth - extra)


@dataclass(frozen=True, eq=False)
class RelayLevel:
    """One recursion level on the global squarelet grid.

    Squarelet indices follow the grid cell numbering at resolution
    ``resolution`` (``4**resolution`` squarelets). ``assignments`` holds
    rows ``(src, dst, relay)``.
    """

    level: int
    resolution: int
    counts: np.ndarray
    expected: float
    dense: np.ndarray
    assignments: np.ndarray
    load: np.ndarray

    @property
    def squarelets(self) -> int:
        return 4**self.resolution

    def to_dict(self) -> dict[str, Any]:
        used = self.load[self.load > 0]
        return {
            "level": self.level,
            "squarelets": self.squarelets,
            "expected_count": self.expected,
            "dense": int(self.dense.sum()),
            "pairs": int(self.assignments.shape[0]),
            "relays_used": int(used.size),
            "load_min": int(used.min()) if used.size else 0,
            "load_max": int(used.max()) if used.size else 0,
        }


@dataclass(frozen=True)
class RelayHierarchy:
    depth: int
    exponents: list[int]
    levels: list[RelayLevel]
    success: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "depth": self.depth,
            "exponents": self.exponents,
            "success": self.success,
            "levels": [lv.to_dict() for lv in self.levels],
        }


def _children(scope: int, parent_res: int, step: int) -> np.ndarray:
    """Squarelets at resolution ``parent_res + step`` inside squarelet ``scope``."""
    k = 1 << parent_res
    row, col = divmod(scope, k)
    sub = 1 << step
    rows = row * sub + np.arange(sub)
    cols = col * sub + np.arange(sub)
    return (rows[:, None] * (k * sub) + cols[None, :]).ravel()


def _local_pairs(members: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    idx = np.arange(members.size)
    while True:
        perm = gen.permutation(members.size)
        if not np.any(perm == idx):
            return np.column_stack([members, members[perm]])


def _rebalance(rows: list[list[int]], candidates: np.ndarray, cells: np.ndarray, load: np.ndarray) -> None:
    """Move pairs from the busiest to the idlest relay until loads differ by at most 1.

    A pair may only move to a squarelet holding neither of its endpoints;
    each move strictly lowers the sum of squared loads, so this terminates.
    """
    if candidates.size < 2:
        return
    while True:
        sub = load[candidates]
        lo, hi = int(candidates[np.argmin(sub)]), int(candidates[np.argmax(sub)])
        if load[hi] - load[lo] <= 1:
            return
        for row in rows:
            if row[2] == hi and cells[row[0]] != lo and cells[row[1]] != lo:
                row[2] = lo
                load[hi] -= 1
                load[lo] += 1
                break
        else:
            return


def build_relay_hierarchy(placement: NodePlacement, seed: int) -> RelayHierarchy:
    """Squarelet grids, dense flags and relay choices of the relaying recursion.

    The top level pairs nodes by a random derangement. Each pair is relayed
    through the least-loaded dense squarelet (lowest index on ties) that
    holds neither endpoint; loads are then levelled to differ by at most one
    where endpoint exclusions allow. At each deeper level, the nodes of every relay
    squarelet used above are paired by a local derangement and relayed among
    that squarelet's sub-squarelets. A squarelet is dense when it holds at
    least half its expected node count.

    Raises:
        RelayFailureError: some pair has no eligible dense squarelet.
    """
    n = placement.n
    if n < 16:
        raise InvalidSizeError(f"need n >= 16 nodes, got {n}")
    exponents = level_exponents(n)
    pairs = gen_permutation(n, seed)
    work = [(0, np.column_stack([pairs.src, pairs.dst]))]
    resolution = 0
    levels: list[RelayLevel] = []
    for depth_index, step in enumerate(exponents, start=1):
        parent_res, resolution = resolution, resolution + step
        cells = cell_indices(placement.points, placement.side, resolution)
        counts = np.bincount(cells, minlength=4**resolution)
        expected = n / 4**resolution
        dense = counts >= 0.5 * expected
        load = np.zeros(4**resolution, dtype=np.int64)
        rows = []
        for scope, scoped_pairs in work:
            candidates = _children(scope, parent_res, step)
            candidates = candidates[dense[candidates]]
            scoped = []
            for s, d in scoped_pairs:
                ok = candidates[(candidates != cells[s]) & (candidates != cells[d])]
                if ok.size == 0:
                    hist = dict(sorted(Counter(int(c) for c in counts).items()))
                    raise RelayFailureError(
                        f"no dense relay squarelet for pair ({s}, {d}) at level {depth_index}",
                        level=depth_index,
                        histogram=hist,
                    )
                relay = int(ok[np.argmin(load[ok])])
                load[relay] += 1
                scoped.append([int(s), int(d), relay])
            _rebalance(scoped, candidates, cells, load)
            rows.extend(tuple(r) for r in scoped)
        assignments = np.array(rows, dtype=np.int64).reshape(-1, 3)
        levels.append(RelayLevel(depth_index, resolution, counts, expected, dense, assignments, load))
        work = []
        order = np.argsort(cells, kind="stable")
        offsets = np.concatenate([[0], np.cumsum(counts)])
        for relay in np.flatnonzero(load):
            members = order[offsets[relay] : offsets[relay + 1]]
            if members.size >= 2:
                gen = _random.rng(seed, _random.RELAY, n, depth_index, int(relay))
                work.append((int(relay), _local_pairs(members, gen)))
    return RelayHierarchy(
        depth=len(exponents),
        exponents=exponents,
        levels=levels,
        success=bool(levels[-1].dense.all()),
    )
