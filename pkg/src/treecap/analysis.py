"""Scaling sweeps of the maximal multiplier and log-log exponent fits."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Literal

import numpy as np
from scipy.stats import linregress

from treecap.geometry import NodePlacement, check_regularity, decompose, place_nodes
from treecap.regions import RegionSpec, max_multiplier
from treecap.traffic import (
    Traffic,
    gen_broadcast,
    gen_classes,
    gen_distance_rate,
    gen_multi_destination,
    gen_permutation,
)


def fit_exponent(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares slope of ``log2(value)`` against ``log2(n)`` and its standard error.

    Raises:
        ValueError: fewer than 3 points, or a value that is not positive and finite.
    """
    if len(points) < 3:
        raise ValueError(f"need at least 3 points to fit, got {len(points)}")
    ns = np.array([p[0] for p in points], dtype=np.float64)
    vs = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(ns <= 0) or np.any(vs <= 0) or not np.all(np.isfinite(vs)):
        raise ValueError("log-log fit needs positive, finite n and values")
    fit = linregress(np.log2(ns), np.log2(vs))
    return float(fit.slope), float(fit.stderr)


# ---------------------------------------------------------------------------
# Scenario registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    """A traffic workload.

    ``example`` selects the generator: 1 local classes, 2 separation-dependent
    rates, 3 multiple destinations per source, 4 broadcast with unit weights,
    0 uniform derangement. ``betas`` and ``rates`` describe the classes of
    examples 1 and 3; example 2 uses ``betas[0]`` and ``rho``.
    """

    example: int
    betas: tuple[float, ...] = ()
    rates: tuple[float, ...] = ()
    rho: float = 1.0

    def __post_init__(self) -> None:
        if self.example not in _GENERATORS:
            raise ValueError(f"unknown scenario example {self.example}")
        if self.example in (1, 2, 3) and not self.betas:
            raise ValueError(f"example {self.example} needs at least one beta")
        if self.rates and len(self.rates) != len(self.betas):
            raise ValueError("rates must match betas one to one")

    @property
    def scenario_id(self) -> str:
        parts = [f"example{self.example}"]
        if self.betas:
            parts.append("beta=" + ",".join(f"{b:g}" for b in self.betas))
        if self.rates:
            parts.append("rates=" + ",".join(f"{r:g}" for r in self.rates))
        if self.rho != 1.0:
            parts.append(f"rho={self.rho:g}")
        return ":".join(parts)

    @property
    def classes(self) -> list[tuple[float, float]]:
        rates = self.rates or (1.0,) * len(self.betas)
        return list(zip(self.betas, rates))

    def traffic(self, placement: NodePlacement, seed: int) -> Traffic:
        return _GENERATORS[self.example](self, placement, seed)

    def predicted_exponent(self, alpha: float) -> float | None:
        """Growth exponent of the maximal multiplier, or ``None`` when not tabulated."""
        rule = _PREDICTIONS.get(self.example)
        return None if rule is None else rule(self, min(3.0, alpha))

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Scenario:
        return cls(
            example=int(data["example"]),
            betas=tuple(float(b) for b in data.get("betas", ())),
            rates=tuple(float(r) for r in data.get("rates", ())),
            rho=float(data.get("rho", 1.0)),
        )


_GENERATORS = {
    0: lambda s, p, seed: gen_permutation(p.n, seed),
    1: lambda s, p, seed: gen_classes(p, s.classes, seed),
    2: lambda s, p, seed: gen_distance_rate(p, s.betas[0], s.rho, seed),
    3: lambda s, p, seed: gen_multi_destination(p, s.classes, seed),
    4: lambda s, p, seed: gen_broadcast(p.n, np.ones(p.n), s.rho),
}


def _single(rule):
    def predict(s: Scenario, abar: float) -> float | None:
        if len(set(s.betas)) != 1:
            return None
        return rule(s.betas[0], abar)

    return predict


_PREDICTIONS = {
    0: lambda s, abar: 1.0 - abar / 2.0,
    1: _single(lambda b, abar: b * (1.0 - abar / 2.0)),
    2: _single(lambda b, abar: 1.0 - (abar + b) / 2.0 if b >= 2.0 - abar else 0.0),
    3: _single(lambda b, abar: 1.0 - b - abar / 2.0),
    4: lambda s, abar: -1.0,
}


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Run:
    n: int
    seed: int
    rho_star: float
    regular: bool


@dataclass(frozen=True)
class ScalingResult:
    scenario: Scenario
    alpha: float
    direction: str
    points: list[tuple[int, float]]
    fitted_exponent: float | None
    stderr: float | None
    predicted_exponent: float | None
    seeds: list[int]
    runs: list[Run] = field(default_factory=list)

    @property
    def scenario_id(self) -> str:
        return self.scenario.scenario_id

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenario_id": self.scenario_id,
            "scenario": self.scenario.to_dict(),
            "alpha": self.alpha,
            "direction": self.direction,
            "points": [[n, v] for n, v in self.points],
            "fitted_exponent": self.fitted_exponent,
            "stderr": self.stderr,
            "predicted_exponent": self.predicted_exponent,
            "seeds": list(self.seeds),
            "runs": [asdict(r) for r in self.runs],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ScalingResult:
        return cls(
            scenario=Scenario.from_dict(data["scenario"]),
            alpha=float(data["alpha"]),
            direction=str(data["direction"]),
            points=[(int(n), float(v)) for n, v in data["points"]],
            fitted_exponent=data["fitted_exponent"],
            stderr=data["stderr"],
            predicted_exponent=data["predicted_exponent"],
            seeds=[int(s) for s in data["seeds"]],
            runs=[Run(int(r["n"]), int(r["seed"]), float(r["rho_star"]), bool(r["regular"])) for r in data["runs"]],
        )


def run_scaling(
    scenario: Scenario,
    n_list: Sequence[int],
    alpha: float,
    seeds: Sequence[int],
    spec: RegionSpec | None = None,
) -> ScalingResult:
    """Median maximal multiplier per ``n`` over ``seeds``, with its fitted exponent.

    Each run places nodes, generates the scenario's traffic with the same
    seed and evaluates the region. Runs on irregular placements are kept and
    flagged. The fit needs at least three sizes with finite positive medians;
    otherwise the exponent is ``None``.
    """
    if list(n_list) != sorted(set(n_list)):
        raise ValueError("n_list must be strictly increasing")
    if not seeds:
        raise ValueError("need at least one seed")
    kind = "multicast" if scenario.example == 4 else "unicast"
    if spec is None:
        spec = RegionSpec(kind=kind, direction="out", alpha=alpha)
    elif spec.kind != kind or spec.alpha != alpha:
        raise ValueError("region spec does not match the scenario kind or alpha")
    runs: list[Run] = []
    points: list[tuple[int, float]] = []
    for n in n_list:
        values = []
        for seed in seeds:
            placement = place_nodes(n, seed)
            g = decompose(placement)
            rho = max_multiplier(scenario.traffic(placement, seed), g, spec)
            runs.append(Run(n, int(seed), rho, check_regularity(placement, g).overall))
            values.append(rho)
        points.append((n, float(statistics.median(values))))
    usable = [(n, v) for n, v in points if 0 < v < math.inf]
    slope = err = None
    if len(usable) >= 3:
        slope, err = fit_exponent(usable)
    return ScalingResult(
        scenario=scenario,
        alpha=alpha,
        direction=spec.direction,
        points=points,
        fitted_exponent=slope,
        stderr=err,
        predicted_exponent=scenario.predicted_exponent(alpha),
        seeds=[int(s) for s in seeds],
        runs=runs,
    )


def to_csv(result: ScalingResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "seed", "rho_star", "regular_flag"])
    for r in result.runs:
        writer.writerow([r.n, r.seed, repr(r.rho_star), int(r.regular)])
    return buf.getvalue()


def to_json(result: ScalingResult) -> str:
    return json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n"


def emit(result: ScalingResult, format: Literal["json", "csv"], path: str | Path) -> None:
    """Write ``result`` as JSON (complete) or CSV (one row per run)."""
    if format == "json":
        text = to_json(result)
    elif format == "csv":
        text = to_csv(result)
    else:
        raise ValueError(f"unknown format {format!r}")
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write scaling result to {path}: {exc.strerror}") from exc


def load_result(path: str | Path) -> ScalingResult:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read scaling result from {path}: {exc.strerror}") from exc
    return ScalingResult.from_dict(json.loads(text))
