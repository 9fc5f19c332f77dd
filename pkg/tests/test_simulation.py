import csv
import io
import json

import numpy as np
import pytest

from noisynet.simulation import (COLUMNS, SimulationConfig, format_csv, run_grid, run_scenario, table_configs,
                                 to_json)


def small(**kw):
    base = dict(p=30, delta=0.1, alpha=0.05, beta=0.05, two_star_target=100, triangle_target=15,
                replications=20, bootstrap_B=50, base_seed=1)
    base.update(kw)
    return SimulationConfig(**base)


def test_table_configs():
    rows = table_configs()
    assert len(rows) == 16
    assert (rows[0].p, rows[0].delta, rows[0].beta, rows[0].two_star_target) == (30, 0.1, 0.05, 100)
    assert (rows[8].p, rows[8].delta, rows[8].beta) == (100, 0.1, 0.05)
    assert rows[1].beta == 0.20
    picked = table_configs([1, 9], replications=5)
    assert [c.p for c in picked] == [30, 100] and picked[0].replications == 5


def test_config_validation():
    with pytest.raises(ValueError):
        small(replications=0)
    with pytest.raises(ValueError):
        small(mode="mle")
    with pytest.raises(ValueError):
        small(alpha=1.5)
    with pytest.raises(ValueError):
        small(bootstrap_B=1)


def test_scenario_is_deterministic():
    r1, r2 = run_scenario(small()), run_scenario(small())
    assert format_csv([r1.row()]) == format_csv([r2.row()])
    assert r1.n_ok + sum(r1.failures.values()) == 20


def test_scenario_row_schema_and_ranges():
    rep = run_scenario(small())
    row = rep.row()
    assert list(row) == list(COLUMNS)
    assert row["gamma"] == pytest.approx(0.45)
    for q in ("delta", "N2s", "Ntri", "gamma"):
        assert 0 <= row[f"rf_{q}"] <= 1
        assert row[f"len_{q}"] > 0
    assert all(row[c] >= 0 for c in COLUMNS if c.startswith("mae_"))


def test_noiseless_known_rates_is_exact():
    rep = run_scenario(small(alpha=0.0, beta=0.0, mode="both_known", bootstrap_B=0))
    assert rep.mae["delta"] == 0.0
    assert rep.mae["N2s"] == pytest.approx(0.0, abs=1e-9)
    assert rep.mae["Ntri"] == pytest.approx(0.0, abs=1e-9)


def test_grid_rows_and_failure_annotation():
    bad = small(two_star_target=0, triangle_target=0, max_iters=200)
    rows = run_grid([small(replications=3), bad])
    assert len(rows) == 2
    assert rows[0]["failures"] == 0
    assert rows[1]["failures"] == 20 and "TargetNotReached" in rows[1]["error"]
    assert np.isnan(rows[1]["mae_delta"])
    with pytest.raises(ValueError):
        run_grid([])


def test_csv_and_json_outputs():
    rows = run_grid([small(replications=3)])
    parsed = list(csv.DictReader(io.StringIO(format_csv(rows))))
    assert list(parsed[0]) == list(COLUMNS)
    doc = json.loads(to_json(rows))
    assert doc[0]["p"] == 30


@pytest.mark.slow
def test_mae_decreases_with_p():
    maes = []
    for p, n2, n3 in ((30, 100, 15), (50, 1260, 50), (100, 5000, 150), (200, 40000, 1500)):
        rep = run_scenario(small(p=p, two_star_target=n2, triangle_target=n3, replications=200, bootstrap_B=0))
        maes.append(rep.mae["delta"])
    assert all(b <= 1.1 * a for a, b in zip(maes, maes[1:]))


@pytest.mark.slow
def test_larger_beta_gives_larger_errors():
    lo = run_scenario(small(p=50, two_star_target=1260, triangle_target=50, replications=200, bootstrap_B=0))
    hi = run_scenario(small(p=50, two_star_target=1260, triangle_target=50, replications=200, bootstrap_B=0,
                            beta=0.20))
    worse = sum(hi.mae[q] > lo.mae[q] for q in ("alpha", "beta", "delta", "N2s", "Ntri", "gamma"))
    assert worse >= 5


@pytest.mark.slow
@pytest.mark.parametrize("p,n2,n3", [(50, 1260, 50), (100, 5000, 150)])
def test_delta_coverage_near_nominal(p, n2, n3):
    rep = run_scenario(small(p=p, two_star_target=n2, triangle_target=n3, replications=500, bootstrap_B=0))
    assert abs(rep.rf["delta"] - 0.95) <= 0.03
