import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import analytic_trace
from thermalink.node import (FAN_MAX_RPM, FAN_MIN_RPM, NodeState, NodeThermalParams, PowerModel,
                             WorkloadSchedule, calibrate_node, fan_speed, load_presets, power,
                             preset, run_schedule, step, target_case_temp)

I7 = preset("i7-tower")


segments = st.lists(
    st.tuples(st.integers(1, 400).map(float), st.sampled_from([0.0, 0.2, 0.5, 0.8, 1.0]) | st.floats(0, 1)),
    min_size=1, max_size=6,
)


def test_power_examples():
    assert power(PowerModel(1.0, 2.0, 3.0, 4.0)) == 96.0
    assert power(PowerModel(0.0)) == 0.0
    assert power(PowerModel(0.5, voltage=2.0)) == 2.0
    with pytest.raises(ValueError):
        PowerModel(1.5)
    with pytest.raises(ValueError):
        PowerModel(0.5, frequency=0.0)


def test_target_case_temp():
    assert target_case_temp(I7, 1.0) == 42.0
    assert target_case_temp(I7, 0.0) == 32.0
    assert target_case_temp(I7, 0.5) == 37.0
    with pytest.raises(ValueError):
        target_case_temp(I7, -0.1)


def test_params_validation():
    with pytest.raises(ValueError):
        NodeThermalParams(idle_temp_C=45.0, tau_heat_s=100, tau_cool_s=100)
    with pytest.raises(ValueError):
        NodeThermalParams(32.0, 100, 100, ambient_delta_max_C=25.0)
    with pytest.raises(ValueError):
        NodeThermalParams(32.0, -1, 100)
    with pytest.raises(ValueError):
        NodeThermalParams(32.0, 100, 100, heat_overdrive_C=5.0)
    assert NodeThermalParams(32.0, 100, 100).heat_overdrive_C == 10.0


def test_idle_is_fixed_point_for_any_dt():
    s = NodeState.idle(I7)
    for dt in (0.01, 0.1, 1.0, 2.0):
        assert step(s, I7, 0.0, dt) == s


def test_step_rejects_bad_dt_and_alpha():
    s = NodeState.idle(I7)
    with pytest.raises(ValueError):
        step(s, I7, 0.5, 0.0)
    with pytest.raises(ValueError):
        step(s, I7, 0.5, 2.5)
    with pytest.raises(ValueError):
        step(s, I7, 1.2, 0.1)


def test_step_matches_run_schedule():
    s = NodeState.idle(I7)
    for _ in range(50):
        s = step(s, I7, 1.0, 0.1)
    tr = run_schedule(I7, WorkloadSchedule.of([(5.0, 1.0)]), 0.1)
    assert s.t_case_C == tr.t_case_C[-1]
    assert s.t_cpu_C == tr.t_cpu_C[-1]
    assert s.workload == 1.0


def test_fan_speed_range():
    assert fan_speed(NodeState.idle(I7), I7) == FAN_MIN_RPM
    hot = NodeState(I7.idle_temp_C + I7.cpu_delta_max_C, 40.0)
    assert fan_speed(hot, I7) == FAN_MAX_RPM
    half = NodeState(I7.idle_temp_C + I7.cpu_delta_max_C / 2, 40.0)
    assert fan_speed(half, I7) == pytest.approx((FAN_MIN_RPM + FAN_MAX_RPM) / 2)


def test_run_schedule_shape_and_errors():
    tr = run_schedule(I7, WorkloadSchedule.of([(10.0, 1.0), (5.0, 0.0)]), 0.1)
    assert len(tr) == 151
    assert tr.t_s[-1] == pytest.approx(15.0)
    rows = list(tr)
    assert len(rows[0]) == 3 and rows[0][0] == 0.0
    with pytest.raises(ValueError):
        run_schedule(I7, WorkloadSchedule(), 0.1)
    with pytest.raises(ValueError):
        WorkloadSchedule.of([(0.0, 1.0)])
    with pytest.raises(ValueError):
        WorkloadSchedule.of([(1.0, 2.0)])


def test_schedule_helpers():
    s = WorkloadSchedule.of([(10, 1)]) + WorkloadSchedule.of([(5, 0.5)])
    assert s.duration_s == 15.0
    assert s.idle_padded(0) is s
    assert s.idle_padded(3).segments[-1] == (3.0, 0.0)
    steps = s.to_steps(1.0)
    assert steps.tolist() == [1.0] * 10 + [0.5] * 5


def test_euler_matches_closed_form_600s():
    sched = WorkloadSchedule.of([(600.0, 1.0)])
    tr = run_schedule(I7, sched, 0.1)
    case, cpu = analytic_trace(I7, sched, 0.1)
    assert np.max(np.abs(tr.t_case_C - case)) < 0.05
    assert np.max(np.abs(tr.t_cpu_C - cpu)) < 0.05


@pytest.mark.parametrize("dt", [0.1, 0.5, 1.0, 2.0])
def test_euler_accuracy_up_to_two_second_steps(dt):
    sched = WorkloadSchedule.of([(2400.0, 1.0), (2400.0, 0.0)])
    tr = run_schedule(I7, sched, dt)
    case, cpu = analytic_trace(I7, sched, dt)
    assert np.max(np.abs(tr.t_case_C - case)) < 0.05
    assert np.max(np.abs(tr.t_cpu_C - cpu)) < 0.05


@settings(max_examples=1000, deadline=None)
@given(segs=segments, dt=st.sampled_from([0.1, 0.5, 1.0, 2.0]))
def test_schedule_properties(segs, dt):
    sched = WorkloadSchedule.of(segs)
    tr = run_schedule(I7, sched, dt)
    idle = I7.idle_temp_C
    # bounds
    assert np.all(tr.t_case_C >= idle - 1e-9)
    assert np.all(tr.t_case_C <= idle + I7.ambient_delta_max_C + 1e-9)
    assert np.all(tr.t_cpu_C >= idle - 1e-9)
    assert np.all(tr.t_cpu_C <= idle + I7.cpu_delta_max_C + 1e-9)
    # integration accuracy
    case, cpu = analytic_trace(I7, sched, dt)
    assert np.max(np.abs(tr.t_case_C - case)) < 0.05
    assert np.max(np.abs(tr.t_cpu_C - cpu)) < 0.05
    # monotone approach: within a segment the case never moves away from its
    # target, and the step size never grows
    edges = np.concatenate([[0], np.rint(np.cumsum([d for d, _ in sched]) / dt).astype(int)])
    for (_, a), lo, hi in zip(sched, edges[:-1], edges[1:]):
        target = target_case_temp(I7, a)
        seg = tr.t_case_C[lo:hi + 1]
        gap = np.abs(seg - target)
        assert np.all(np.diff(gap) <= 1e-12)
        steps = np.abs(np.diff(seg))
        assert np.all(np.diff(steps) <= 1e-12)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0, 1), b=st.floats(0, 1))
def test_steady_state_convergence(a, b):
    sched = WorkloadSchedule.of([(3000.0, a), (12 * I7.tau_cool_s, b)])
    tr = run_schedule(I7, sched, 1.0)
    assert tr.t_case_C[-1] == pytest.approx(target_case_temp(I7, b), abs=0.01)
    assert tr.t_cpu_C[-1] == pytest.approx(I7.idle_temp_C + I7.cpu_delta_max_C * b, abs=0.01)


def test_heating_and_cooling_rate_asymmetry():
    tr = run_schedule(I7, WorkloadSchedule.of([(2400.0, 1.0), (2400.0, 0.0)]), 0.1)
    heat = np.diff(tr.t_case_C[: int(2000 / 0.1)])
    cool = -np.diff(tr.t_case_C[int(2400 / 0.1):])
    assert np.all(np.diff(heat) < 0)
    assert np.all(np.diff(cool[:10000]) < 0)
    assert np.argmax(heat) == 0 and np.argmax(cool) == 0


def test_run_schedule_deterministic():
    sched = WorkloadSchedule.of([(300.0, 0.7), (200.0, 0.1)])
    a, b = run_schedule(I7, sched), run_schedule(I7, sched)
    assert np.array_equal(a.t_case_C, b.t_case_C)
    assert np.array_equal(a.t_cpu_C, b.t_cpu_C)


def test_i7_anchor_timings():
    tr = run_schedule(I7, WorkloadSchedule.of([(2400.0, 1.0), (600.0, 0.0)]), 0.1)
    t, case = tr.t_s, tr.t_case_C
    first = t[np.argmax(case >= 33.0)]
    cap = t[np.argmax(case >= 42.0)]
    assert first == pytest.approx(175.0, abs=0.2)
    assert cap == pytest.approx(2100.0, abs=1.0)
    drop = t[np.argmax((t > 2400) & (case <= 41.0))] - 2400
    assert drop == pytest.approx(62.0, abs=0.2)


def test_presets_reproduce_their_calibration():
    doc = json.loads(resources.files("thermalink").joinpath("data/presets.json").read_text())
    presets = load_presets()
    for name, anc in doc["anchors"].items():
        p = presets[name]
        c = calibrate_node(p.idle_temp_C, anc["first_rise_s"], anc["cap_s"], anc["first_drop_s"],
                           p.ambient_delta_max_C, p.cpu_delta_max_C, p.cpu_response_s)
        for field in ("tau_heat_s", "tau_cool_s", "heat_overdrive_C"):
            assert getattr(c, field) == pytest.approx(getattr(p, field), rel=1e-4)


def test_calibrate_rejects_plain_exponential():
    with pytest.raises(ValueError):
        calibrate_node(32.0, 180.0, 1800.0, 70.0)


def test_unknown_preset():
    with pytest.raises(KeyError):
        preset("pentium")


def test_load_presets_from_file(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"presets": {"x": {"idle_temp_C": 30.0, "tau_heat_s": 10.0, "tau_cool_s": 5.0}}}))
    assert load_presets(path)["x"].tau_cool_s == 5.0
