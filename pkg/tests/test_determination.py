import numpy as np
import pytest

from slopekit.determination import (builtin_instances, csv_rows,
                                    derived_constants, instance_from_dict,
                                    run_determination, run_one_sided,
                                    verify_subdifferential_equality)
from slopekit.spaces import InputError


def test_derived_constants_exact():
    consts = derived_constants(1.0, 1.0)
    assert consts["delta_prime"] == 1.0 / 9.0
    assert consts["c_prime"] == 6.0
    assert consts["delta_hat"] == 1.0 / 18.0
    # delta binds when small
    consts = derived_constants(0.01, 0.5)
    assert consts["delta_prime"] == 0.5
    assert consts["delta_hat"] == 0.25
    with pytest.raises(InputError):
        derived_constants(0.0, 1.0)


def test_builtin_catalog_shape():
    insts = builtin_instances()
    positives = [i for i in insts.values() if i.expected["equal_up_to_constant"]]
    negatives = [i for i in insts.values() if not i.expected["equal_up_to_constant"]]
    assert len(positives) == 6 and len(negatives) == 3
    assert sorted({i.expected["a"] for i in positives}) == [-3.0, 0.0, 1.0, 2.5]
    assert {i.expected["reason"] for i in negatives} == {
        "scaled", "perturbed-kink", "shifted-argument"}


def test_gate_accepts_constant_shift():
    insts = builtin_instances()
    ok, wit = verify_subdifferential_equality(insts["shift_2p5"])
    assert ok and wit == []


def test_gate_rejects_negative_controls_with_witnesses():
    insts = builtin_instances()
    for name in ("neg_scaled", "neg_kink", "neg_shifted"):
        ok, wit = verify_subdifferential_equality(insts[name])
        assert not ok, name
        assert wit, name
        w = wit[0]
        assert w["gap"] > 1e-9
        assert len(w["point"]) == insts[name].dim


def test_one_sided_identity_pair():
    insts = builtin_instances()
    report = run_one_sided(insts["ident_negsq_1d"], [0.05])
    assert report["ok"]
    assert report["margin"] == pytest.approx(0.0, abs=1e-12)
    assert 0.0 < report["alpha"] < 1.0
    assert report["core"]["ok"]
    for run in report["core"]["runs"]:
        assert run["ends_at_center"] and run["length_bounds_ok"]


def test_one_sided_shifted_pair_agrees_with_direct_evaluation():
    insts = builtin_instances()
    inst = insts["shiftm3_abs_1d"]  # f = |x| - 3, g = |x|
    report = run_one_sided(inst, [0.03])
    assert report["ok"]
    # f(x0) >= g(x0) + (f(0) - g(0)) holds with equality for a pure shift
    assert report["margin"] >= -report["slack"] - 1e-9


def test_one_sided_rejects_x0_outside_ball():
    insts = builtin_instances()
    with pytest.raises(InputError):
        run_one_sided(insts["ident_negsq_1d"], [0.5])  # delta' = 1/9


def test_run_determination_positive_instance():
    insts = builtin_instances()
    report = run_determination(insts["shift_2p5"], n_centers=2)
    assert report["status"] == "completed"
    assert report["passed"]
    assert report["a"] == pytest.approx(2.5)
    assert report["delta_hat"] == 1.0 / 18.0
    assert report["max_deviation"] <= report["tolerance"]
    for cr in report["centers"]:
        assert cr["ok"]
        # two-sided margins must cancel for a true constant-shift pair
        assert abs(cr["two_sided_margin_sum"]) <= 2.0 * report["tolerance"]


def test_run_determination_rejects_negative_control():
    insts = builtin_instances()
    report = run_determination(insts["neg_scaled"])
    assert report["status"] == "rejected"
    assert report["reject_stage"] == "subdifferential-equality"
    assert report["gate_witnesses"]


def test_instance_round_trip_and_strictness():
    doc = {
        "id": "custom",
        "f": {"form": "quadratic", "dim": 1, "a": -2.0},
        "g": {"form": "quadratic", "dim": 1, "a": -2.0},
        "xbar": [0.0],
        "c": 1.0,
        "delta": 1.0,
        "expected": {"equal_up_to_constant": True, "a": 0.0},
    }
    inst = instance_from_dict(doc)
    assert inst.dim == 1
    report = run_determination(inst, n_centers=1)
    assert report["passed"]
    with pytest.raises(InputError):
        instance_from_dict({**doc, "surprise": 1})
    with pytest.raises(InputError):
        instance_from_dict({**doc, "expected": {"equal_up_to_constant": True,
                                                "b": 1}})


def test_csv_rows_columns_and_constant_gap():
    insts = builtin_instances()
    rows = csv_rows(insts["shift_2p5"], grid_h=0.02)
    assert rows
    for row in rows[:20]:
        assert set(row) == {"point", "f", "g", "f_minus_g_minus_a",
                            "slope_f", "slope_g"}
        assert row["f_minus_g_minus_a"] == pytest.approx(0.0, abs=1e-12)
        assert row["slope_f"] == pytest.approx(row["slope_g"])


def test_finite_slope_min_matches_global_min():
    # graphical-density surrogate: min of f - g over finite-slope points
    # equals the min over all sample points (all slopes are finite here)
    insts = builtin_instances()
    inst = insts["shift1_composite_2d"]
    from slopekit.plr import ball_sample
    from slopekit.subdiff import oracle_for, slope_from_subdifferential
    pts = ball_sample(inst.xbar, 1.0 / 18.0, 0.01).points
    fg = inst.f.value(pts) - inst.g.value(pts)
    oracle = oracle_for(inst.f)
    slopes = np.array([slope_from_subdifferential(oracle, x) for x in pts[::20]])
    assert np.all(np.isfinite(slopes))
    assert fg.min() == pytest.approx(fg[np.isfinite(fg)].min())
