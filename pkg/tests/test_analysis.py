from __future__ import annotations

import csv
import io
import math

import numpy as np
import pytest

from treecap.analysis import (
    Scenario,
    ScalingResult,
    emit,
    fit_exponent,
    load_result,
    run_scaling,
    to_csv,
    to_json,
)
from treecap.regions import RegionSpec

SIZES = [64, 128, 256, 512]


def test_exact_power_law_fit():
    slope, err = fit_exponent([(2**k, 2 ** (-k / 2)) for k in range(8, 15)])
    assert slope == -0.5
    assert err == 0.0
    assert fit_exponent([(2**k, 1.0) for k in range(8, 15)]) == (0.0, 0.0)


def test_noisy_power_law_fit():
    gen = np.random.default_rng(0)
    for _ in range(20):
        points = [(2**k, 2 ** (-k / 2) * (1 + 0.01 * gen.uniform(-1, 1))) for k in range(8, 15)]
        slope, _ = fit_exponent(points)
        assert abs(slope + 0.5) <= 0.02


def test_fit_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_exponent([(2, 1.0), (4, 1.0)])
    with pytest.raises(ValueError):
        fit_exponent([(2, 1.0), (4, 0.0), (8, 1.0)])
    with pytest.raises(ValueError):
        fit_exponent([(2, 1.0), (4, -1.0), (8, 1.0)])
    with pytest.raises(ValueError):
        fit_exponent([(2, 1.0), (4, math.inf), (8, 1.0)])


@pytest.mark.parametrize(
    "scenario, alpha, expected",
    [
        (Scenario(1, betas=(1.0,)), 3.0, -0.5),
        (Scenario(1, betas=(0.5,)), 4.0, -0.25),
        (Scenario(1, betas=(0.5,)), 2.5, -0.125),
        (Scenario(2, betas=(0.0,)), 3.0, -0.5),
        (Scenario(2, betas=(1.0,)), 3.0, -1.0),
        (Scenario(2, betas=(0.2,)), 2.5, -0.35),
        (Scenario(2, betas=(-1.0,)), 2.5, 0.0),
        (Scenario(3, betas=(0.5,)), 3.0, -1.0),
        (Scenario(4), 3.0, -1.0),
        (Scenario(0), 3.0, -0.5),
    ],
)
def test_predicted_exponents(scenario, alpha, expected):
    assert scenario.predicted_exponent(alpha) == pytest.approx(expected)


def test_mixed_classes_have_no_single_prediction():
    assert Scenario(1, betas=(0.2, 0.8)).predicted_exponent(3.0) is None
    assert Scenario(1, betas=(0.5, 0.5)).predicted_exponent(3.0) == pytest.approx(-0.25)


def test_scenario_validation_and_ids():
    with pytest.raises(ValueError):
        Scenario(9)
    with pytest.raises(ValueError):
        Scenario(1)
    with pytest.raises(ValueError):
        Scenario(1, betas=(0.5,), rates=(1.0, 2.0))
    assert Scenario(1, betas=(0.5,)).scenario_id == "example1:beta=0.5"
    assert Scenario(2, betas=(1.0,), rho=0.5).scenario_id == "example2:beta=1:rho=0.5"
    s = Scenario(3, betas=(0.2, 0.4), rates=(1.0, 3.0))
    assert Scenario.from_dict(s.to_dict()) == s


def test_run_scaling_small_sweep():
    result = run_scaling(Scenario(1, betas=(1.0,)), SIZES, 3.0, seeds=[0, 1, 2])
    assert [n for n, _ in result.points] == SIZES
    assert len(result.runs) == len(SIZES) * 3
    for n, value in result.points:
        per_seed = [r.rho_star for r in result.runs if r.n == n]
        assert value == float(np.median(per_seed))
    assert result.fitted_exponent is not None and result.stderr is not None
    assert result.predicted_exponent == -0.5
    assert result.direction == "out"


def test_broadcast_sweep_hits_one_over_n():
    result = run_scaling(Scenario(4), [64, 256, 1024], 3.0, seeds=[0])
    assert all(v * n == 1.0 for n, v in result.points)
    assert result.fitted_exponent == pytest.approx(-1.0, abs=1e-12)


def test_run_scaling_validation():
    with pytest.raises(ValueError):
        run_scaling(Scenario(0), [256, 64, 128], 3.0, [0])
    with pytest.raises(ValueError):
        run_scaling(Scenario(0), SIZES, 3.0, [])
    with pytest.raises(ValueError):
        run_scaling(Scenario(0), SIZES, 3.0, [0], spec=RegionSpec(kind="multicast"))


def test_too_few_sizes_leave_fit_empty():
    result = run_scaling(Scenario(0), [64, 128], 3.0, [0])
    assert result.fitted_exponent is None and result.stderr is None


def test_doubling_rates_shifts_curve_by_one():
    base = run_scaling(Scenario(1, betas=(0.5,)), SIZES, 3.0, seeds=[0, 1, 2])
    doubled = run_scaling(Scenario(1, betas=(0.5,), rates=(2.0,)), SIZES, 3.0, seeds=[0, 1, 2])
    for (n, a), (m, b) in zip(base.points, doubled.points):
        assert n == m
        assert math.log2(b) - math.log2(a) == pytest.approx(-1.0, abs=1e-12)
    assert doubled.fitted_exponent == pytest.approx(base.fitted_exponent, abs=1e-12)


def test_json_round_trip(tmp_path):
    result = run_scaling(Scenario(3, betas=(0.5,)), SIZES, 3.0, seeds=[0, 1])
    path = tmp_path / "r.json"
    emit(result, "json", path)
    assert load_result(path) == result
    assert isinstance(load_result(path), ScalingResult)


def test_csv_rows(tmp_path):
    seeds = [0, 1, 2]
    result = run_scaling(Scenario(0), SIZES, 3.0, seeds)
    path = tmp_path / "r.csv"
    emit(result, "csv", path)
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert len(rows) == len(SIZES) * len(seeds)
    assert list(rows[0]) == ["n", "seed", "rho_star", "regular_flag"]
    assert {row["regular_flag"] for row in rows} <= {"0", "1"}
    assert float(rows[0]["rho_star"]) == result.runs[0].rho_star


def test_output_is_byte_stable():
    make = lambda: run_scaling(Scenario(2, betas=(0.5,), rho=0.25), SIZES, 2.5, seeds=[3, 4])
    assert to_json(make()) == to_json(make())
    assert to_csv(make()) == to_csv(make())


def test_emit_errors_name_the_path(tmp_path):
    result = run_scaling(Scenario(0), SIZES[:3], 3.0, [0])
    missing = tmp_path / "no" / "such" / "dir.json"
    with pytest.raises(OSError, match="dir.json"):
        emit(result, "json", missing)
    with pytest.raises(ValueError):
        emit(result, "xml", tmp_path / "r.xml")
    with pytest.raises(OSError, match="absent.json"):
        load_result(tmp_path / "absent.json")
