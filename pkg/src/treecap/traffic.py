"""Sparse unicast/multicast traffic, balance factors and scenario generators."""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from scipy.spatial import cKDTree

from treecap import _random
from treecap.errors import InvalidSizeError
from treecap.geometry import GridDecomposition, NodePlacement

# ---------------------------------------------------------------------------
# Traffic containers
# ---------------------------------------------------------------------------


def _check_rates(rate: np.ndarray) -> None:
    if not np.all(np.isfinite(rate)):
        raise ValueError("rates must be finite")
    if np.any(rate < 0):
        raise ValueError("rates must be nonnegative")


@dataclass(frozen=True, eq=False)
class UnicastTraffic:
    """Sparse map ``(src, dst) -> rate`` with ``src != dst``.

    Entries are kept sorted by ``(src, dst)``; zero rates are dropped, so an
    absent pair means rate 0.
    """

    src: np.ndarray
    dst: np.ndarray
    rate: np.ndarray

    @classmethod
    def from_arrays(cls, src: Any, dst: Any, rate: Any) -> UnicastTraffic:
        """Build canonical traffic; repeated pairs are summed."""
        src = np.asarray(src, dtype=np.int64).ravel()
        dst = np.asarray(dst, dtype=np.int64).ravel()
        rate = np.broadcast_to(np.asarray(rate, dtype=np.float64), src.shape).copy()
        if not (src.shape == dst.shape == rate.shape):
            raise ValueError("src, dst and rate must have equal length")
        _check_rates(rate)
        if np.any(src == dst):
            raise ValueError("self pairs (src == dst) are not allowed")
        if np.any(src < 0) or np.any(dst < 0):
            raise IndexError("node indices must be nonnegative")
        keep = rate > 0
        src, dst, rate = src[keep], dst[keep], rate[keep]
        if src.size:
            order = np.lexsort((dst, src))
            src, dst, rate = src[order], dst[order], rate[order]
            new = np.ones(src.size, dtype=bool)
            new[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
            if not new.all():
                starts = np.flatnonzero(new)
                rate = np.add.reduceat(rate, starts)
                src, dst = src[starts], dst[starts]
        for a in (src, dst, rate):
            a.setflags(write=False)
        return cls(src=src, dst=dst, rate=rate)

    @classmethod
    def from_entries(cls, entries: Mapping[tuple[int, int], float] | Iterable[tuple[int, int, float]]) -> UnicastTraffic:
        if isinstance(entries, Mapping):
            items = [(s, d, r) for (s, d), r in entries.items()]
        else:
            items = list(entries)
        if not items:
            return cls.empty()
        s, d, r = zip(*items)
        return cls.from_arrays(s, d, r)

    @classmethod
    def empty(cls) -> UnicastTraffic:
        return cls.from_arrays(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))

    def __len__(self) -> int:
        return int(self.src.size)

    @property
    def entries(self) -> dict[tuple[int, int], float]:
        return {(int(s), int(d)): float(r) for s, d, r in zip(self.src, self.dst, self.rate)}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UnicastTraffic):
            return NotImplemented
        return (
            np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.rate, other.rate)
        )

    def scaled(self, c: float) -> UnicastTraffic:
        return UnicastTraffic.from_arrays(self.src, self.dst, self.rate * c)

    def check_nodes(self, n: int) -> None:
        if len(self) and max(int(self.src.max()), int(self.dst.max())) >= n:
            raise IndexError(f"traffic references a node index >= n={n}")

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"src": int(s), "dst": int(d), "rate": float(r)}) + "\n"
            for s, d, r in zip(self.src, self.dst, self.rate)
        )

    @classmethod
    def from_jsonl(cls, text: str) -> UnicastTraffic:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls.from_entries([(int(r["src"]), int(r["dst"]), float(r["rate"])) for r in rows])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> UnicastTraffic:
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True, eq=False)
class MulticastTraffic:
    """Sparse map ``(src, group) -> rate``.

    Groups are stored in CSR form: entry ``k`` has members
    ``members[indptr[k]:indptr[k+1]]``, sorted and unique. Entries are sorted
    by ``(src, group)``. A group may contain its source; such a member never
    contributes to a cut.
    """

    src: np.ndarray
    rate: np.ndarray
    indptr: np.ndarray
    members: np.ndarray

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[int, Iterable[int], float]]) -> MulticastTraffic:
        merged: dict[tuple[int, tuple[int, ...]], float] = {}
        for s, group, r in entries:
            g = tuple(sorted({int(w) for w in group}))
            if not g:
                raise ValueError("multicast groups must be nonempty")
            r = float(r)
            if not math.isfinite(r) or r < 0:
                raise ValueError("rates must be finite and nonnegative")
            key = (int(s), g)
            merged[key] = merged.get(key, 0.0) + r
        keys = sorted(k for k, r in merged.items() if r > 0)
        src = np.array([k[0] for k in keys], dtype=np.int64)
        rate = np.array([merged[k] for k in keys], dtype=np.float64)
        sizes = np.array([len(k[1]) for k in keys], dtype=np.int64)
        indptr = np.zeros(len(keys) + 1, dtype=np.int64)
        np.cumsum(sizes, out=indptr[1:])
        members = np.fromiter((w for k in keys for w in k[1]), dtype=np.int64, count=int(indptr[-1]))
        return cls._frozen(src, rate, indptr, members)

    @classmethod
    def _frozen(cls, src, rate, indptr, members) -> MulticastTraffic:
        if src.size and (src.min() < 0 or members.min() < 0):
            raise IndexError("node indices must be nonnegative")
        for a in (src, rate, indptr, members):
            a.setflags(write=False)
        return cls(src=src, rate=rate, indptr=indptr, members=members)

    @classmethod
    def empty(cls) -> MulticastTraffic:
        return cls.from_entries([])

    def __len__(self) -> int:
        return int(self.src.size)

    def group(self, k: int) -> np.ndarray:
        return self.members[self.indptr[k] : self.indptr[k + 1]]

    def items(self) -> Iterable[tuple[int, tuple[int, ...], float]]:
        for k in range(len(self)):
            yield int(self.src[k]), tuple(int(w) for w in self.group(k)), float(self.rate[k])

    @property
    def entries(self) -> dict[tuple[int, tuple[int, ...]], float]:
        return {(s, g): r for s, g, r in self.items()}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MulticastTraffic):
            return NotImplemented
        return all(
            np.array_equal(a, b)
            for a, b in (
                (self.src, other.src),
                (self.rate, other.rate),
                (self.indptr, other.indptr),
                (self.members, other.members),
            )
        )

    def scaled(self, c: float) -> MulticastTraffic:
        rate = self.rate * c
        _check_rates(rate)
        if c == 0:
            return MulticastTraffic.empty()
        return MulticastTraffic._frozen(self.src.copy(), rate, self.indptr.copy(), self.members.copy())

    def entry_ids(self) -> np.ndarray:
        """Entry index of every element of ``members``."""
        return np.repeat(np.arange(len(self), dtype=np.int64), np.diff(self.indptr))

    def check_nodes(self, n: int) -> None:
        if len(self) and max(int(self.src.max()), int(self.members.max())) >= n:
            raise IndexError(f"traffic references a node index >= n={n}")

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"src": s, "group": list(g), "rate": r}) + "\n" for s, g, r in self.items()
        )

    @classmethod
    def from_jsonl(cls, text: str) -> MulticastTraffic:
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        return cls.from_entries([(int(r["src"]), r["group"], float(r["rate"])) for r in rows])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> MulticastTraffic:
        return cls.from_jsonl(Path(path).read_text(encoding="utf-8"))


Traffic = UnicastTraffic | MulticastTraffic


def load_traffic(path: str | Path) -> Traffic:
    """Load a JSON-lines traffic file; rows with a ``group`` key are multicast."""
    text = Path(path).read_text(encoding="utf-8")
    first = next((line for line in text.splitlines() if line.strip()), None)
    if first is not None and "group" in json.loads(first):
        return MulticastTraffic.from_jsonl(text)
    return UnicastTraffic.from_jsonl(text)


# ---------------------------------------------------------------------------
# Cut flows
# ---------------------------------------------------------------------------


def cut_flows(t: Traffic, g: GridDecomposition) -> list[tuple[np.ndarray, np.ndarray]]:
    """Traffic leaving and entering every cell, for levels ``1..L``.

    Element ``l - 1`` is ``(out, in)``, two arrays of length ``4**l``. For
    unicast, ``out[i]`` sums ``rate(u, w)`` over ``u`` inside and ``w``
    outside cell ``i``. For multicast, ``out[i]`` sums entries whose source is
    inside and whose group is not contained in the cell, and ``in[i]`` sums
    entries whose source is outside and whose group meets the cell.
    """
    t.check_nodes(g.n)
    if isinstance(t, UnicastTraffic):
        return _unicast_cut_flows(t, g)
    return _multicast_cut_flows(t, g)


def _unicast_cut_flows(t: UnicastTraffic, g: GridDecomposition) -> list[tuple[np.ndarray, np.ndarray]]:
    flows = []
    for level in range(1, g.L + 1):
        size = 4**level
        cs, cd = g.cell_of[level][t.src], g.cell_of[level][t.dst]
        cross = cs != cd
        w = t.rate[cross]
        out = np.bincount(cs[cross], weights=w, minlength=size)
        inn = np.bincount(cd[cross], weights=w, minlength=size)
        flows.append((out, inn))
    return flows


def _multicast_cut_flows(t: MulticastTraffic, g: GridDecomposition) -> list[tuple[np.ndarray, np.ndarray]]:
    flows = []
    if len(t) == 0:
        return [(np.zeros(4**lv), np.zeros(4**lv)) for lv in range(1, g.L + 1)]
    starts = t.indptr[:-1]
    eid = t.entry_ids()
    for level in range(1, g.L + 1):
        size = 4**level
        cells = g.cell_of[level]
        cs = cells[t.src]
        mc = cells[t.members]
        # Group stays inside the source cell iff its min and max cell both equal it.
        lo = np.minimum.reduceat(mc, starts)
        hi = np.maximum.reduceat(mc, starts)
        leaves = ~((lo == cs) & (hi == cs))
        out = np.bincount(cs[leaves], weights=t.rate[leaves], minlength=size)
        # Each distinct foreign cell met by a group receives the entry once.
        foreign = mc != cs[eid]
        pairs = np.unique(eid[foreign] * size + mc[foreign])
        inn = np.bincount(pairs % size, weights=t.rate[pairs // size], minlength=size)
        flows.append((out, inn))
    return flows


def node_flows(t: Traffic, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-node traffic sent and received, as used by the singleton cuts.

    Multicast: a node sends ``rate(u, W)`` when ``W`` has a member other than
    ``u`` and receives ``rate(v, W)`` for every ``v != u`` with ``u`` in ``W``.
    """
    t.check_nodes(n)
    if isinstance(t, UnicastTraffic):
        return (
            np.bincount(t.src, weights=t.rate, minlength=n),
            np.bincount(t.dst, weights=t.rate, minlength=n),
        )
    if len(t) == 0:
        return np.zeros(n), np.zeros(n)
    eid = t.entry_ids()
    other = t.members != t.src[eid]
    sends = np.bincount(eid[other], minlength=len(t)) > 0
    out = np.bincount(t.src[sends], weights=t.rate[sends], minlength=n)
    inn = np.bincount(t.members[other], weights=t.rate[eid[other]], minlength=n)
    return out, inn


# ---------------------------------------------------------------------------
# Balance factor
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BalanceReport:
    """Largest ratio of traffic into a cell over traffic out of it.

    ``inflow[l - 1]`` and ``outflow[l - 1]`` hold the per-cell values at level
    ``l``. A cut with no traffic either way has ratio 0; a cut with inflow
    but no outflow has ratio infinity.
    """

    gamma: float
    binding_cut: tuple[int, int] | None
    inflow: list[np.ndarray]
    outflow: list[np.ndarray]

    @property
    def per_cut(self) -> list[tuple[int, int, float, float]]:
        return [
            (level, i, float(a), float(b))
            for level, (ins, outs) in enumerate(zip(self.inflow, self.outflow), start=1)
            for i, (a, b) in enumerate(zip(ins, outs))
        ]

    def to_dict(self, include_cuts: bool = False) -> dict[str, Any]:
        d: dict[str, Any] = {
            "gamma": self.gamma,
            "binding_cut": list(self.binding_cut) if self.binding_cut else None,
        }
        if include_cuts:
            d["per_cut"] = [list(c) for c in self.per_cut]
        return d


def cut_ratios(inflow: np.ndarray, outflow: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = inflow / outflow
    r[(inflow == 0) & (outflow == 0)] = 0.0
    return r


def _balance(flows: list[tuple[np.ndarray, np.ndarray]]) -> BalanceReport:
    gamma, binding = 0.0, None
    for level, (out, inn) in enumerate(flows, start=1):
        r = cut_ratios(inn, out)
        if r.size == 0:
            continue
        i = int(np.argmax(r))
        if r[i] > gamma:
            gamma, binding = float(r[i]), (level, i)
    return BalanceReport(
        gamma=gamma,
        binding_cut=binding,
        inflow=[inn for _, inn in flows],
        outflow=[out for out, _ in flows],
    )


def balance_factor_unicast(t: UnicastTraffic, g: GridDecomposition) -> BalanceReport:
    """Smallest ``gamma`` for which ``t`` is gamma-balanced over levels ``1..L``."""
    return _balance(cut_flows(t, g))


def balance_factor_multicast(t: MulticastTraffic, g: GridDecomposition) -> BalanceReport:
    """Multicast analogue of :func:`balance_factor_unicast`."""
    return _balance(cut_flows(t, g))


def balance_factor(t: Traffic, g: GridDecomposition) -> BalanceReport:
    return _balance(cut_flows(t, g))


# ---------------------------------------------------------------------------
# Scenario generators
# ---------------------------------------------------------------------------


def gen_permutation(n: int, seed: int) -> UnicastTraffic:
    """Uniformly random derangement pairing at rate 1.

    Every node is source once and destination once, never for itself.
    """
    if n < 2:
        raise InvalidSizeError(f"need n >= 2 nodes, got {n}")
    gen = _random.rng(seed, _random.PERMUTATION, n)
    idx = np.arange(n)
    while True:
        perm = gen.permutation(n)
        if not np.any(perm == idx):
            break
    return UnicastTraffic.from_arrays(idx, perm, 1.0)


def _pick_classes(n: int, k: int, gen: np.random.Generator) -> np.ndarray:
    return gen.integers(0, k, size=n)


class _BallSampler:
    """Uniform draws among the other nodes within ``radius`` of a node.

    Candidates are drawn uniformly from the 3x3 block of buckets (bucket side
    at least ``radius``) around the node and accepted when inside the ball,
    which is uniform over the ball's members.
    """

    _MAX_TRIES = 64

    def __init__(self, placement: NodePlacement, radius: float):
        self.pts = placement.points
        self.radius = radius
        self.k = max(1, min(int(placement.side / radius), 4096)) if radius > 0 else 1
        width = placement.side / self.k
        b = np.minimum((self.pts / width).astype(np.int64), self.k - 1)
        self.bx, self.by = b[:, 0], b[:, 1]
        key = self.by * self.k + self.bx
        self.order = np.argsort(key, kind="stable")
        self.offsets = np.zeros(self.k * self.k + 1, dtype=np.int64)
        np.cumsum(np.bincount(key, minlength=self.k * self.k), out=self.offsets[1:])
        self._tree: cKDTree | None = None

    def _neighbourhood(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        starts, counts = [], []
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                x, y = self.bx[u] + dx, self.by[u] + dy
                ok = (x >= 0) & (x < self.k) & (y >= 0) & (y < self.k)
                key = np.where(ok, y * self.k + x, 0)
                lo = self.offsets[key]
                cnt = np.where(ok, self.offsets[key + 1] - lo, 0)
                starts.append(lo)
                counts.append(cnt)
        return np.column_stack(starts), np.column_stack(counts)

    def sample(self, sources: np.ndarray, gen: np.random.Generator) -> np.ndarray:
        out = np.full(sources.size, -1, dtype=np.int64)
        pending = np.arange(sources.size)
        tries = 0
        while pending.size:
            u = sources[pending]
            starts, counts = self._neighbourhood(u)
            cum = np.cumsum(counts, axis=1)
            r = (gen.random(u.size) * cum[:, -1]).astype(np.int64)
            j = np.minimum((r[:, None] >= cum).sum(axis=1), 8)
            before = np.where(j > 0, cum[np.arange(u.size), np.maximum(j - 1, 0)], 0)
            cand = self.order[starts[np.arange(u.size), j] + (r - before)]
            d = np.hypot(*(self.pts[cand] - self.pts[u]).T)
            ok = (cand != u) & (d <= self.radius)
            out[pending[ok]] = cand[ok]
            pending = pending[~ok]
            tries += 1
            if tries % self._MAX_TRIES == 0 and pending.size:
                pending = self._resolve_empty(sources, pending, out)
        return out

    def _resolve_empty(self, sources: np.ndarray, pending: np.ndarray, out: np.ndarray) -> np.ndarray:
        # Nodes whose ball holds only themselves fall back to the nearest node.
        if self._tree is None:
            self._tree = cKDTree(self.pts)
        u = sources[pending]
        sizes = self._tree.query_ball_point(self.pts[u], self.radius, return_length=True)
        lonely = sizes <= 1
        if lonely.any():
            _, idx = self._tree.query(self.pts[u[lonely]], k=2)
            nearest = np.where(idx[:, 0] == u[lonely], idx[:, 1], idx[:, 0])
            out[pending[lonely]] = nearest
        return pending[~lonely]


def gen_classes(
    placement: NodePlacement, classes: Sequence[tuple[float, float]], seed: int
) -> UnicastTraffic:
    """Local traffic in classes of source-destination separation.

    Every node picks a class ``(beta, rate)`` uniformly, then a destination
    uniformly among the other nodes within distance ``n**(beta / 2)``
    (the nearest node when that ball is empty), at rate ``rate``.
    """
    _validate_classes(classes)
    n = placement.n
    gen = _random.rng(seed, _random.CLASSES, n)
    cls_of = _pick_classes(n, len(classes), gen)
    src = np.arange(n)
    dst = np.empty(n, dtype=np.int64)
    rate = np.empty(n)
    for c, (beta, r) in enumerate(classes):
        members = src[cls_of == c]
        if members.size == 0:
            continue
        sampler = _BallSampler(placement, n ** (beta / 2.0))
        dst[members] = sampler.sample(members, gen)
        rate[members] = r
    return UnicastTraffic.from_arrays(src, dst, rate)


def class_assignment(n: int, n_classes: int, seed: int, stream: int = _random.CLASSES) -> np.ndarray:
    """Class of every node as drawn by :func:`gen_classes` (stream ``CLASSES``)."""
    return _pick_classes(n, n_classes, _random.rng(seed, stream, n))


def _validate_classes(classes: Sequence[tuple[float, float]]) -> None:
    if not classes:
        raise ValueError("need at least one class")
    for beta, r in classes:
        if not 0.0 <= beta <= 1.0:
            raise ValueError(f"class exponent must lie in [0, 1], got {beta}")
        if r < 0 or not math.isfinite(r):
            raise ValueError(f"class rate must be finite and nonnegative, got {r}")


def _uniform_other(n: int, size_per_source: int, sources: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """Uniform draws from the ``n - 1`` nodes other than each source."""
    d = gen.integers(0, n - 1, size=(sources.size, size_per_source))
    return d + (d >= sources[:, None])


def distance_rate(r: np.ndarray | float, beta: float, rho: float) -> np.ndarray | float:
    """``rho * r**beta`` for ``r >= 1`` and ``rho`` below distance 1."""
    return rho * np.maximum(r, 1.0) ** beta


def gen_distance_rate(placement: NodePlacement, beta: float, rho: float, seed: int = 0) -> UnicastTraffic:
    """One uniform destination per node at a rate growing with separation."""
    n = placement.n
    gen = _random.rng(seed, _random.DISTANCE_RATE, n)
    src = np.arange(n)
    dst = _uniform_other(n, 1, src, gen)[:, 0]
    r = np.hypot(*(placement.points[dst] - placement.points[src]).T)
    return UnicastTraffic.from_arrays(src, dst, distance_rate(r, beta, rho))


def destination_count(n: int, beta: float) -> int:
    """``floor(n**beta)`` capped at the ``n - 1`` available destinations."""
    return min(math.floor(n**beta + 1e-9), n - 1)


def gen_multi_destination(
    placement: NodePlacement, classes: Sequence[tuple[float, float]], seed: int
) -> UnicastTraffic:
    """Sources with many destinations.

    Every node picks a class ``(beta, rate)`` uniformly and sends at ``rate``
    to ``floor(n**beta)`` (at most ``n - 1``) distinct destinations drawn
    uniformly from the other nodes.
    """
    _validate_classes(classes)
    n = placement.n
    gen = _random.rng(seed, _random.MULTI_DESTINATION, n)
    cls_of = _pick_classes(n, len(classes), gen)
    srcs, dsts, rates = [], [], []
    for c, (beta, r) in enumerate(classes):
        members = np.flatnonzero(cls_of == c)
        k = destination_count(n, beta)
        if members.size == 0 or k == 0:
            continue
        if k > (n - 1) // 2:
            # Dense case: a random subset via per-row permutation of the others.
            d = np.argsort(gen.random((members.size, n - 1)), axis=1)[:, :k]
            d = d + (d >= members[:, None])
        else:
            d = _distinct_rows(n, k, members, gen)
        srcs.append(np.repeat(members, k))
        dsts.append(d.ravel())
        rates.append(np.full(members.size * k, float(r)))
    if not srcs:
        return UnicastTraffic.empty()
    return UnicastTraffic.from_arrays(np.concatenate(srcs), np.concatenate(dsts), np.concatenate(rates))


def _distinct_rows(n: int, k: int, sources: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """``k`` distinct non-source destinations per row, by rejection of repeats."""
    d = _uniform_other(n, k, sources, gen)
    while True:
        s = np.sort(d, axis=1)
        dup_rows = np.flatnonzero((s[:, 1:] == s[:, :-1]).any(axis=1))
        if dup_rows.size == 0:
            return d
        for row in dup_rows:
            seen: set[int] = set()
            for j in range(k):
                w = int(d[row, j])
                while w in seen:
                    w = int(_uniform_other(n, 1, sources[row : row + 1], gen)[0, 0])
                seen.add(w)
                d[row, j] = w


def gen_broadcast(n: int, weights: Sequence[float] | np.ndarray, rho: float) -> MulticastTraffic:
    """Every node ``u`` with ``weights[u] > 0`` broadcasts to all others at ``rho * weights[u]``."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError(f"expected {n} weights, got shape {w.shape}")
    _check_rates(w)
    rate = rho * w
    _check_rates(rate)
    src = np.flatnonzero(rate > 0)
    everyone = np.arange(n, dtype=np.int64)
    members = np.concatenate([np.delete(everyone, u) for u in src]) if src.size else np.empty(0, np.int64)
    indptr = np.arange(src.size + 1, dtype=np.int64) * (n - 1)
    return MulticastTraffic._frozen(src.astype(np.int64), rate[src], indptr, members)
