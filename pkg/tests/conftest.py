from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from treecap.errors import DegeneratePlacementError  # noqa: E402
from treecap.geometry import decompose, grid_placement, place_nodes  # noqa: E402
from treecap.traffic import UnicastTraffic  # noqa: E402
from treecap.treegraph import build_tree  # noqa: E402

_CRITERIA: dict[int, tuple[str, list[str]]] = {}


@pytest.fixture
def grid16():
    """4x4 unit grid: every level-1 cell holds 4 nodes."""
    placement = grid_placement(4)
    return placement, decompose(placement)


@pytest.fixture
def foreign_derangement(grid16) -> UnicastTraffic:
    """Node k of cell c sends to node k of cell (c + 1) % 4, rate 1."""
    _, g = grid16
    src, dst = [], []
    for c in range(4):
        here, there = g.members(1, c), g.members(1, (c + 1) % 4)
        src.extend(here.tolist())
        dst.extend(there.tolist())
    return UnicastTraffic.from_arrays(src, dst, 1.0)


def random_unicast(n: int, gen: np.random.Generator, entries: int | None = None, symmetric: bool = False):
    k = entries if entries is not None else int(gen.integers(1, 3 * n))
    src = gen.integers(0, n, k)
    dst = (src + gen.integers(1, n, k)) % n
    rate = gen.random(k)
    if symmetric:
        src, dst, rate = np.concatenate([src, dst]), np.concatenate([dst, src]), np.concatenate([rate, rate])
    return UnicastTraffic.from_arrays(src, dst, rate)


def unclamped_tree(n: int, seed: int = 0, alpha: float = 3.0):
    """First random placement from ``seed`` upward whose tree builds without clamping."""
    while True:
        p = place_nodes(n, seed)
        try:
            tree = build_tree(p, decompose(p), alpha)
        except DegeneratePlacementError:
            tree = None
        if tree is not None and not tree.clamped:
            return p, tree
        seed += 1


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    _CRITERIA.setdefault(number, (title, []))
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        _CRITERIA[number][1].append("failed" if call.excinfo is not None else "passed")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcomes = _CRITERIA[number]
        status = "PASS" if outcomes and all(o == "passed" for o in outcomes) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {title}")
