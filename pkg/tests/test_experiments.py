from __future__ import annotations

import csv
import io
import json
import math

import pytest

from steinlab import Exponential, Gamma, Uniform
from steinlab.experiments import (
    CSV_COLUMNS,
    SCENARIOS,
    ExperimentResult,
    Row,
    run_characterization,
    run_counterexample,
    run_example1,
    run_nb,
    run_sum,
    to_json_text,
)
from steinlab.metrics import DistanceEstimate


def _est(v, err=0.0):
    return DistanceEstimate(v, "wasserstein", "exact-quadrature", err)


def test_row_verdicts():
    assert Row("a", {}, _est(1.0, 0.1), 0.95, "bound").satisfied
    assert not Row("a", {}, _est(1.0), 0.95, "bound").satisfied
    assert Row("a", {}, _est(1.0), 1.0 + 1e-9, "exact", 1e-8).satisfied
    assert not Row("a", {}, _est(1.0), 1.1, "exact", 1e-8).satisfied
    assert Row("a", {}, _est(0.5), 0.4, "lower").satisfied
    assert Row("a", {}, _est(0.3), 0.4, "upper").satisfied
    with pytest.raises(ValueError):
        Row("a", {}, _est(0.3), 0.4, "sideways")


def test_characterization_small_grid():
    res = run_characterization([(1.0, 1.0), (0.5, 2.0)])
    assert res.satisfied
    gamma_rows = [r for r in res.rows if r.check == "gamma_theta"]
    assert len(gamma_rows) == 2
    assert all(r.computed.value < 1e-6 for r in gamma_rows)
    (control,) = [r for r in res.rows if r.check == "control_theta"]
    assert control.computed.value == pytest.approx(1 / 6, abs=1e-9)


def test_example1_rows():
    res = run_example1([0.01, 0.1])
    assert res.satisfied
    rows = {(r.check, r.params["delta"]): r for r in res.rows}
    assert rows["theta", 0.01].reference == pytest.approx(0.0099504, abs=1e-7)
    assert rows["distance_exact", 0.1].reference == pytest.approx(-math.expm1(-0.1), abs=1e-15)
    assert rows["distance_exact", 0.1].computed.value == pytest.approx(0.0951626, abs=1e-7)
    assert rows["distance_bound", 0.1].reference == pytest.approx(8 * math.sqrt(0.1) + 17 / 30, abs=1e-12)


def test_nb_small_grid():
    res = run_nb([2.0], [0.05, 0.1])
    assert res.satisfied
    checks = {r.check for r in res.rows}
    assert len(checks) >= 3


def test_counterexample():
    res = run_counterexample([10.0, 100.0])
    assert res.satisfied
    assert any(r.computed.value >= math.exp(-1) - 1e-9 for r in res.rows if r.computed.metric == "kolmogorov")


def test_sum_fixed_point_part():
    res = run_sum([Gamma(2.0, 1.0)], seed=1, n=20_000, nb_sum=None)
    assert res.satisfied
    assert all(r.params["theta"] == 0.0 for r in res.rows)
    # a zero theta makes the bound zero, so the rows pass only through the 3 SE slack
    assert {r.check for r in res.rows} == {"wasserstein", "kolmogorov"}


def test_sum_exponential_parts():
    res = run_sum([Exponential(1.0)] * 10, seed=2, n=20_000, nb_sum=None)
    assert res.satisfied


def test_sum_uniform_parts_with_random_sum():
    res = run_sum([Uniform(0.0, 1.0)] * 10, seed=3, n=20_000)
    assert res.satisfied
    assert any("nb" in r.check for r in res.rows)


def test_determinism():
    a = to_json_text(run_sum([Uniform(0.0, 1.0)] * 3, seed=5, n=5_000))
    b = to_json_text(run_sum([Uniform(0.0, 1.0)] * 3, seed=5, n=5_000))
    assert a == b
    c = to_json_text(run_sum([Uniform(0.0, 1.0)] * 3, seed=6, n=5_000))
    assert a != c


def test_json_excludes_wall_time_by_default():
    res = run_counterexample([10.0])
    obj = json.loads(to_json_text(res))
    assert "wall_time" not in obj
    assert obj["scenario"] == "counterexample"
    assert "wall_time" in res.to_json(include_time=True)
    row = obj["rows"][0]
    assert set(row) == {"check", "params", "computed_distance", "reference", "reference_kind", "tolerance", "satisfied"}


def test_csv_columns_are_stable():
    res = run_counterexample([10.0])
    rows = list(csv.reader(io.StringIO(res.to_csv())))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == len(res.rows) + 1
    assert all(len(r) == len(CSV_COLUMNS) for r in rows)
    assert {r[-1] for r in rows[1:]} <= {"true", "false"}


def test_unsatisfied_result():
    res = ExperimentResult("x", [Row("a", {}, _est(1.0), 0.5, "upper")], 0)
    assert not res.satisfied


def test_scenario_registry():
    assert set(SCENARIOS) == {"characterization", "example1", "nb", "counterexample", "sum"}
