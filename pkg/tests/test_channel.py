import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thermalink.channel import (ChannelConfig, Direction, Layout, LinkProfile, NoLink, couple,
                                first_degree_delay, link_profile, max_receiver_delta)
from thermalink.harness import step_metrics
from thermalink.node import WorkloadSchedule, preset, run_schedule
from thermalink.pipeline import simulate

I7 = preset("i7-tower")


@pytest.mark.parametrize("layout,d,expected", [
    (Layout.PARALLEL, 0, 180.0),
    (Layout.PARALLEL, 10, 390.0),  # 3 + 0.35 * 10 minutes
    (Layout.STACKED_TX_TOP, 0, 300.0),
    (Layout.STACKED_TX_BOTTOM, 0, 720.0),
    (Layout.QUADRATURE, 6, 115.0),
    (Layout.FACE_AWAY, 0, 600.0),
    (Layout.OPEN_ROOM_PARALLEL, 35, 1500.0),
])
def test_first_degree_delay_lookup(layout, d, expected):
    assert first_degree_delay(layout, d) == pytest.approx(expected)


@pytest.mark.parametrize("layout,d,expected", [
    (Layout.PARALLEL, 0, 4.0),
    (Layout.PARALLEL, 32.5, 1.0),
    (Layout.PARALLEL, 45, 0.0),
    (Layout.FACE_AWAY, 0, 1.0),
    (Layout.STACKED_TX_TOP, 0, 3.0),
    (Layout.STACKED_TX_BOTTOM, 0, 1.0),
])
def test_max_receiver_delta_lookup(layout, d, expected):
    assert max_receiver_delta(layout, d) == pytest.approx(expected)


def test_beyond_forty_cm_has_no_link():
    assert math.isinf(first_degree_delay(Layout.PARALLEL, 41))
    for d in (41, 45, 100):
        with pytest.raises(NoLink):
            link_profile(ChannelConfig(Layout.PARALLEL, d))


def test_negative_distance_rejected():
    with pytest.raises(ValueError):
        first_degree_delay(Layout.PARALLEL, -1)
    with pytest.raises(ValueError):
        ChannelConfig(distance_cm=-1)


@settings(max_examples=200)
@given(layout=st.sampled_from(list(Layout)), d1=st.floats(0, 60), d2=st.floats(0, 60))
def test_distance_monotonicity(layout, d1, d2):
    lo, hi = sorted((d1, d2))
    assert first_degree_delay(layout, lo) <= first_degree_delay(layout, hi)
    assert max_receiver_delta(layout, lo) >= max_receiver_delta(layout, hi)
    if hi > 40:
        assert max_receiver_delta(layout, hi) == 0.0


def test_layout_parse():
    assert Layout.parse("face-away") is Layout.FACE_AWAY
    assert Layout.parse(" Parallel ") is Layout.PARALLEL
    with pytest.raises(ValueError):
        Layout.parse("diagonal")


def test_profile_json_round_trip_and_validation():
    p = link_profile(ChannelConfig(Layout.QUADRATURE, 6))
    assert LinkProfile.from_json(p.to_json()) == p
    with pytest.raises(ValueError):
        LinkProfile(-1, 0.4, 100, 100, 4, 6)
    with pytest.raises(ValueError):
        LinkProfile(10, 1.4, 100, 100, 4, 6)
    with pytest.raises(ValueError):
        LinkProfile(10, 0.4, 100, 100, 5, 6)


def test_vm_profile():
    vm = link_profile(ChannelConfig(vm_mode=True))
    phys = link_profile(ChannelConfig())
    assert vm.max_rx_delta_C == 3.0
    assert vm.dead_time_s == pytest.approx(1.1 * phys.dead_time_s)


def test_flat_transmitter_gives_flat_receiver():
    p = link_profile(ChannelConfig())
    out = couple(np.zeros(5000), p, 31.0, 0.1)
    assert np.all(out == 31.0)


@settings(max_examples=100, deadline=None)
@given(exc=st.lists(st.floats(0, 1), min_size=10, max_size=3000),
       layout=st.sampled_from([Layout.PARALLEL, Layout.QUADRATURE, Layout.FACE_AWAY]))
def test_causality_and_bounds(exc, layout):
    cfg = ChannelConfig(layout, 6.0 if layout is Layout.QUADRATURE else 0.0)
    p = link_profile(cfg)
    dt = 0.1
    out = couple(np.array(exc), p, 32.0, dt) - 32.0
    dead = int(round(p.dead_time_s / dt))
    assert np.all(out[: dead + 1] == 0.0)
    assert np.all(out >= 0.0)
    assert np.all(out <= p.max_rx_delta_C + 1e-12)
    assert np.all(out <= p.gain * I7.ambient_delta_max_C + 1e-12)


def test_asymmetry_fast_direction_first():
    sched = WorkloadSchedule.of([(1800.0, 1.0)])
    cfg = ChannelConfig(Layout.PARALLEL, 10.0)
    fast = simulate(I7, link_profile(cfg), sched).reading
    slow = simulate(I7, link_profile(cfg.reversed()), sched).reading
    t_fast = fast.t_s[np.argwhere(fast.value_C >= 33.0)[0, 0]]
    t_slow = slow.t_s[np.argwhere(slow.value_C >= 33.0)[0, 0]]
    assert t_fast < t_slow
    assert link_profile(cfg.reversed()).dead_time_s == pytest.approx(1.5 * link_profile(cfg).dead_time_s)
    assert cfg.reversed().direction is Direction.B_TO_A


def test_couple_follows_transmitter_excitation():
    sched = WorkloadSchedule.of([(600.0, 1.0)])
    tx = run_schedule(I7, sched)
    e = tx.excitation(I7)
    assert e[0] == 0.0 and e[-1] == pytest.approx(1.0)
    assert np.all((e >= 0) & (e <= 1))


@pytest.mark.parametrize("d", [0, 5, 10, 15, 20, 25, 30, 35])
def test_parallel_closure(d):
    m = step_metrics(ChannelConfig(Layout.PARALLEL, d))
    assert m.first_degree_delay_s == pytest.approx(first_degree_delay(Layout.PARALLEL, d), rel=0.10)
    # the steady delta is approached exponentially; give it four hours
    steady = step_metrics(ChannelConfig(Layout.PARALLEL, d), heat_s=4 * 3600.0, cool_s=600.0)
    assert steady.max_delta_C == math.floor(max_receiver_delta(Layout.PARALLEL, d) + 1e-9)


@pytest.mark.parametrize("layout,d", [
    (Layout.STACKED_TX_TOP, 0), (Layout.STACKED_TX_BOTTOM, 0), (Layout.FACE_AWAY, 0),
    (Layout.QUADRATURE, 6), (Layout.OPEN_ROOM_PARALLEL, 35),
])
def test_layout_closure(layout, d):
    m = step_metrics(ChannelConfig(layout, d))
    assert m.first_degree_delay_s == pytest.approx(first_degree_delay(layout, d), rel=0.10)
    assert m.max_delta_C == max_receiver_delta(layout, d)


def test_off_anchor_layout_distances_extend_smoothly():
    near = first_degree_delay(Layout.QUADRATURE, 6)
    far = first_degree_delay(Layout.QUADRATURE, 16)
    assert far == pytest.approx(near + 210.0)
    assert max_receiver_delta(Layout.QUADRATURE, 2) == 4.0
    assert max_receiver_delta(Layout.QUADRATURE, 38) < 4.0
