import json
import os
import pathlib

import numpy as np
import pytest

import tsfilt

DATA = pathlib.Path(os.environ.get("TSFILT_DATA_DIR", pathlib.Path(__file__).resolve().parents[2] / "data"))


@pytest.fixture(scope="module")
def ex1():
    return tsfilt.load_model(DATA / "example1.json")


@pytest.fixture(scope="module")
def th1_report(ex1):
    return tsfilt.synthesize(ex1, theorem=1)


def test_model_roundtrip(ex1):
    assert ex1.dims == {"n": 2, "m_y": 1, "p_w": 1, "q": 1}
    assert ex1.plant_rules == 2 and ex1.filter_rules == 2
    again = tsfilt.loads_model(ex1.to_json())
    assert again == ex1
    assert ex1.rule(0)["A"].shape == (2, 2)


def test_bad_model_raises():
    doc = json.loads(tsfilt.load_model(DATA / "example1.json").to_json())
    doc["delay"]["rho"] = 1.2
    with pytest.raises(tsfilt.ValidationError):
        tsfilt.loads_model(json.dumps(doc))


def test_membership_bounds(ex1):
    lo, hi = tsfilt.membership_bounds(ex1)
    assert lo.shape == (2, 2) and hi.shape == (2, 2)
    assert np.all(lo <= hi)
    plant, filt = tsfilt.evaluate_memberships(ex1, 0.3)
    assert plant.sum() == pytest.approx(1.0)
    assert filt.sum() == pytest.approx(1.0)


def test_synthesize_theorem1(th1_report):
    assert th1_report["status"] == "optimal"
    assert th1_report["feasible"]
    assert 0.0 < th1_report["gamma"] < 1.0
    assert th1_report["gamma"] ** 2 == pytest.approx(th1_report["g"], rel=1e-9)
    assert th1_report["grid_check"]["passed"]


def test_extraction_matches_report(th1_report):
    v = {k: np.array(m) for k, m in th1_report["variables"].items()}
    f = tsfilt.extract_filter(v["M22t"], [v["A_scr1"], v["A_scr2"]], [v["B_scr1"], v["B_scr2"]],
                              [v["C_scr1"], v["C_scr2"]])
    g = tsfilt.filter_from_report(th1_report)
    for a, b in zip(f.A_f, g.A_f):
        np.testing.assert_allclose(v["M22t"] @ a, v["M22t"] @ b, atol=1e-10)
    np.testing.assert_allclose(v["M22t"] @ f.A_f[0], v["A_scr1"], atol=1e-9)


def test_simulation_gain_below_bound(ex1, th1_report):
    f = tsfilt.filter_from_report(th1_report)
    out = tsfilt.simulate(ex1, f, scenario="decaying-sine", horizon=20.0)
    assert out["gain"] <= th1_report["gamma"]
    free = tsfilt.simulate(ex1, f, scenario="free")
    assert free["gain"] is None
    assert free["terminal_norm_ratio"] <= 1e-3
    assert "noise" in tsfilt.scenario_names()


def test_property_suites():
    assert tsfilt.integral_inequality_suite(100, 7)["passed"]
    assert tsfilt.upsilon_relaxation_suite(100, 7)["passed"]
    gap = tsfilt.upsilon_relaxation_gap(np.eye(2), 2.0 * np.eye(2), 2.0)
    np.testing.assert_allclose(gap, np.zeros((2, 2)), atol=1e-12)
