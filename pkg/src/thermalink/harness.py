"""Desk-scale experiments: figure/table reproductions and link benchmarks.

Every function here is a deterministic function of its arguments (the seed
included). Tabular results are plain CSV that gnuplot can read directly.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelConfig, Layout, LinkProfile, NoLink, link_profile
from .link import Endpoint, LinkConfig, run_session
from .modem import SymbolTiming, ThermalPing, demodulate, detect_ping, modulate, send_ping
from .node import WorkloadSchedule, load_presets, preset, run_schedule
from .pipeline import simulate, step_response
from .sensing import (AMBIENT_SENSOR, GROUP_CPU, NoiseModel, SensorSpec, TemperatureTrace,
                      apply_noise, sample, traces_to_csv)

FIG6_GRID_CM = (0, 5, 10, 15, 20, 25, 30, 35)
DELAY_INTERCEPT_MIN = 3.0
DELAY_SLOPE_MIN_PER_CM = 0.35
STEP_HEAT_S = 2400.0
STEP_COOL_S = 2400.0
CPU_SENSOR = SensorSpec(name="cpu", group=GROUP_CPU)


@dataclass(frozen=True)
class ExperimentSpec:
    layout: Layout = Layout.PARALLEL
    distance_cm: float = 0.0
    tx_preset: str = "i7-tower"
    rx_preset: str = "i7-tower"
    noise: NoiseModel | None = None
    vm_mode: bool = False
    duration_s: float = STEP_HEAT_S + STEP_COOL_S
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "layout", Layout.parse(self.layout))
        known = load_presets()
        for name in (self.tx_preset, self.rx_preset):
            if name not in known:
                raise ValueError(f"unknown preset {name!r}; known: {sorted(known)}")
        if not self.duration_s > 0:
            raise ValueError("duration_s must be positive")
        if self.distance_cm < 0:
            raise ValueError("distance_cm must be >= 0")

    @property
    def channel(self) -> ChannelConfig:
        return ChannelConfig(self.layout, self.distance_cm, vm_mode=self.vm_mode)

    @property
    def seeded_noise(self) -> NoiseModel | None:
        return None if self.noise is None else replace(self.noise, seed=self.seed)

    def endpoints(self) -> tuple[Endpoint, Endpoint]:
        a = Endpoint("A", preset(self.tx_preset), self.seeded_noise)
        b = Endpoint("B", preset(self.rx_preset), self.seeded_noise)
        return a, b


@dataclass(frozen=True)
class RunReport:
    layout: str
    distance_cm: float
    first_degree_delay_s: float
    max_delta_C: float
    ber: float
    effective_bits_per_hour: float
    symbols_per_hour: float
    delivered_ok: bool
    retries: int
    duration_s: float

    def __post_init__(self):
        if not 0.0 <= self.ber <= 1.0:
            raise ValueError("ber must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class StepMetrics:
    """Quantized receiver response to one full-load heat/cool step.

    Times are seconds; the cooling times are counted from the end of heating.
    """

    first_degree_delay_s: float | None
    max_delta_C: float
    time_to_max_s: float | None
    pause_delay_s: float | None
    cooling_to_idle_s: float | None


@dataclass
class Reproduction:
    """A reproduced figure or table: CSV body, summary numbers and checks."""

    name: str
    csv: str
    summary: dict
    checks: dict[str, bool] = field(default_factory=dict)

    def __post_init__(self):
        self.checks = {k: bool(v) for k, v in self.checks.items()}

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def summary_json(self) -> str:
        return json.dumps({"name": self.name, "ok": self.ok, "summary": self.summary,
                           "checks": self.checks}, sort_keys=True)


def _table_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _within(value: float | None, expected: float, rel: float = 0.10) -> bool:
    return value is not None and abs(value - expected) <= rel * expected


def step_metrics(config: ChannelConfig, tx_preset: str = "i7-tower", rx_idle_C: float = 32.0,
                 heat_s: float = STEP_HEAT_S, cool_s: float = STEP_COOL_S) -> StepMetrics:
    profile = link_profile(config)
    run = step_response(preset(tx_preset), profile, heat_s, cool_s, rx_idle_C=rx_idle_C)
    r = run.reading
    idle = float(AMBIENT_SENSOR.quantize(rx_idle_C))
    heating = r.t_s < heat_s
    peak = float(r.value_C[heating].max())
    first = r.first_time_at_or_above(idle + 1)
    at_max = r.first_time_at_or_above(peak)
    pause = r.first_time_below(peak, after_s=heat_s) if peak > idle else None
    back = r.first_time_below(idle + 1, after_s=heat_s) if peak > idle else None
    return StepMetrics(
        first_degree_delay_s=first if first is not None and first < heat_s else None,
        max_delta_C=peak - idle,
        time_to_max_s=at_max,
        pause_delay_s=None if pause is None else pause - heat_s,
        cooling_to_idle_s=None if back is None else back - heat_s,
    )


def reproduce_fig3(preset_name: str = "i7-tower", activity: float = 1.0,
                   heat_s: float = STEP_HEAT_S, cool_s: float = STEP_COOL_S) -> Reproduction:
    """Single machine: 40 min at ``activity`` then 40 min idle."""
    params = preset(preset_name)
    sched = WorkloadSchedule.of([(heat_s, activity)]).idle_padded(cool_s)
    tr = run_schedule(params, sched)
    cpu = sample(tr.t_s, tr.t_cpu_C, CPU_SENSOR)
    amb = sample(tr.t_s, tr.t_case_C, AMBIENT_SENSOR)
    idle = params.idle_temp_C
    cpu_rise = float(cpu.value_C.max()) - idle
    amb_rise = float(amb.value_C.max()) - idle
    fast = cpu.first_time_at_or_above(idle + params.cpu_delta_max_C * activity - 1.0)
    # the first -1 degC is timed on the true curve: the quantized reading
    # drops the instant the case leaves the cap
    heating = tr.t_s <= heat_s + 1e-9
    peak_true = float(tr.t_case_C[heating].max())
    cooled = np.flatnonzero((tr.t_s > heat_s) & (tr.t_case_C <= peak_true - 1.0))
    first_drop = float(tr.t_s[cooled[0]] - heat_s) if len(cooled) else None
    summary = {
        "preset": preset_name,
        "activity": activity,
        "idle_C": idle,
        "cpu_rise_C": cpu_rise,
        "cpu_rise_time_s": fast,
        "ambient_peak_C": float(amb.value_C.max()),
        "ambient_rise_C": amb_rise,
        "first_drop_s": first_drop,
    }
    if activity > 0:
        checks = {
            "cpu_rise_to_max": abs(cpu_rise - params.cpu_delta_max_C * activity) <= 1.0,
            "cpu_rise_fast": fast is not None and fast <= 60.0,
            "ambient_capped": amb_rise == params.ambient_delta_max_C * activity
            and float(tr.t_case_C.max()) <= idle + params.ambient_delta_max_C + 1e-9,
            "first_drop_1_to_3_min": first_drop is not None and 60.0 <= first_drop <= 180.0,
        }
    else:
        checks = {"flat": cpu_rise == 0.0 and amb_rise == 0.0}
    return Reproduction("fig3", traces_to_csv([cpu, amb]), summary, checks)


def reproduce_fig6() -> Reproduction:
    rows = []
    for d in FIG6_GRID_CM:
        m = step_metrics(ChannelConfig(Layout.PARALLEL, float(d)))
        rows.append((d, m.first_degree_delay_s / 60.0, DELAY_INTERCEPT_MIN + DELAY_SLOPE_MIN_PER_CM * d))
    d = np.array([r[0] for r in rows], dtype=float)
    y = np.array([r[1] for r in rows])
    slope, intercept = np.polyfit(d, y, 1)
    checks = {f"d{int(r[0])}_within_10pct": _within(r[1], r[2]) for r in rows}
    checks["slope_0.35_pm_0.05"] = abs(slope - DELAY_SLOPE_MIN_PER_CM) <= 0.05
    summary = {"slope_min_per_cm": float(slope), "intercept_min": float(intercept)}
    body = _table_csv(["distance_cm", "first_degree_delay_min", "model_delay_min"],
                      [[r[0], repr(r[1]), repr(r[2])] for r in rows])
    return Reproduction("fig6", body, summary, checks)


TABLE3_EXPECTED = {
    Layout.STACKED_TX_TOP: {"delay_s": 300.0, "delta_C": 3.0, "pause_s": 480.0, "cooling_s": 1200.0},
    Layout.STACKED_TX_BOTTOM: {"delay_s": 720.0, "delta_C": 1.0, "pause_s": 600.0, "cooling_s": 600.0},
}


def reproduce_table3() -> Reproduction:
    rows = []
    checks = {}
    summary = {}
    for layout, exp in TABLE3_EXPECTED.items():
        m = step_metrics(ChannelConfig(layout, 0.0))
        rows.append([layout.value, repr(m.first_degree_delay_s), repr(m.max_delta_C), repr(m.pause_delay_s),
                     repr(m.cooling_to_idle_s)])
        summary[layout.value] = {"delay_s": m.first_degree_delay_s, "delta_C": m.max_delta_C,
                                 "pause_s": m.pause_delay_s, "cooling_s": m.cooling_to_idle_s}
        checks[f"{layout.value}_delay"] = _within(m.first_degree_delay_s, exp["delay_s"])
        checks[f"{layout.value}_delta"] = m.max_delta_C == exp["delta_C"]
        checks[f"{layout.value}_pause"] = _within(m.pause_delay_s, exp["pause_s"])
        # the top layout's cooling is only known as "20+ minutes"
        cool = m.cooling_to_idle_s
        if layout is Layout.STACKED_TX_TOP:
            checks[f"{layout.value}_cooling"] = cool is not None and cool >= exp["cooling_s"]
        else:
            checks[f"{layout.value}_cooling"] = _within(cool, exp["cooling_s"])
    body = _table_csv(["layout", "heat_delay_s", "max_delta_C", "pause_delay_s", "cooling_to_idle_s"], rows)
    return Reproduction("table3", body, summary, checks)


def reproduce_fig10() -> Reproduction:
    """Virtual-machine transmitter against bare metal, parallel at 0 cm."""
    phys = step_metrics(ChannelConfig(Layout.PARALLEL, 0.0))
    vm = step_metrics(ChannelConfig(Layout.PARALLEL, 0.0, vm_mode=True))
    rows = [["physical", repr(phys.first_degree_delay_s), repr(phys.max_delta_C)],
            ["vm", repr(vm.first_degree_delay_s), repr(vm.max_delta_C)]]
    summary = {"physical_delta_C": phys.max_delta_C, "vm_delta_C": vm.max_delta_C,
               "physical_delay_s": phys.first_degree_delay_s, "vm_delay_s": vm.first_degree_delay_s}
    checks = {"physical_4C": phys.max_delta_C == 4.0, "vm_3C": vm.max_delta_C == 3.0}
    body = _table_csv(["mode", "heat_delay_s", "max_delta_C"], rows)
    return Reproduction("fig10", body, summary, checks)


REPRODUCTIONS = {
    "fig3": reproduce_fig3,
    "fig6": reproduce_fig6,
    "table3": reproduce_table3,
    "fig10": reproduce_fig10,
}


def random_message(seed: int, n_bits: int = 40) -> str:
    rng = random.Random(seed)
    return "".join(rng.choice("01") for _ in range(n_bits))


def bench_link(spec: ExperimentSpec, message: str | None = None,
               link: LinkConfig | None = None) -> RunReport:
    """One full session A -> B; raises NoLink or LinkLost."""
    message = random_message(spec.seed) if message is None else message
    a, b = spec.endpoints()
    delivered, rep = run_session(a, b, spec.channel, message, link=link)
    return RunReport(
        layout=spec.layout.value,
        distance_cm=spec.distance_cm,
        first_degree_delay_s=rep.ping.measured_first_degree_delay_s,
        max_delta_C=rep.ping.measured_max_delta_C,
        ber=rep.raw_ber,
        effective_bits_per_hour=rep.effective_bits_per_hour,
        symbols_per_hour=rep.timing.symbols_per_hour,
        delivered_ok=delivered == message,
        retries=rep.retries,
        duration_s=rep.duration_s,
    )


def monte_carlo_ber(spec: ExperimentSpec, runs: int = 100, n_bits: int = 40) -> tuple[float, list[float]]:
    """Mean raw BER over seeds spec.seed .. spec.seed + runs - 1."""
    bers = []
    for k in range(runs):
        s = replace(spec, seed=spec.seed + k)
        bers.append(bench_link(s, random_message(s.seed, n_bits)).ber)
    return float(np.mean(bers)), bers


def ping_false_detection_rate(noise: NoiseModel | None = None, runs: int = 100, seed: int = 0,
                              rx_idle_C: float = 32.0, ping: ThermalPing | None = None) -> float:
    """Fraction of transmitter-free noisy traces in which a ping is detected."""
    ping = ping or ThermalPing()
    noise = noise or NoiseModel()
    dt = 1.0
    t = np.arange(0.0, ping.duration_s + dt, dt)
    hits = 0
    for k in range(runs):
        v = apply_noise(t, np.full_like(t, rx_idle_C), replace(noise, seed=seed + k))
        if detect_ping(sample(t, v), ping) is not None:
            hits += 1
    return hits / runs


def fixed_timing_ber(distance_cm: float, timing: SymbolTiming, bits: str, noise: NoiseModel | None = None,
                     layout: Layout = Layout.PARALLEL, tx_preset: str = "i7-tower",
                     lead_s: float = 600.0) -> float:
    """Raw BER of ``bits`` sent with a timing that ignores the actual distance.

    Placements without a link yield an unexcited (noise-only) receiver.
    """
    tx = preset(tx_preset)
    try:
        profile = link_profile(ChannelConfig(layout, distance_cm))
    except NoLink:
        profile = LinkProfile(0.0, 0.0, 1.0, 1.0, 0.0, 0.0)
    sched = WorkloadSchedule.of([(lead_s, 0.0)]) + modulate(bits, timing)
    reading = simulate(tx, profile, sched, rx_idle_C=tx.idle_temp_C, noise=noise).reading
    got = demodulate(reading, timing, lead_s, len(bits))
    return sum(a != b for a, b in zip(got, bits)) / len(bits)


def export_trace(spec: ExperimentSpec, bits: str | None = None) -> TemperatureTrace:
    """Receiver reading for a heat/cool step, or for a ping plus ``bits``.

    The step variant heats for half of ``spec.duration_s`` and idles for the rest.
    """
    profile = link_profile(spec.channel)
    tx = preset(spec.tx_preset)
    rx_idle = preset(spec.rx_preset).idle_temp_C
    if bits:
        resp_sched = send_ping()
        run = simulate(tx, profile, resp_sched, rx_idle_C=rx_idle)
        resp = detect_ping(run.reading)
        if resp is None:
            raise NoLink("ping not detected")
        sched = resp_sched + modulate(bits, resp.timing)
    else:
        half = spec.duration_s / 2.0
        sched = WorkloadSchedule.of([(half, 1.0)]).idle_padded(spec.duration_s - half)
    return simulate(tx, profile, sched, rx_idle_C=rx_idle, noise=spec.seeded_noise).reading


__all__ = [
    "CPU_SENSOR", "ExperimentSpec", "FIG6_GRID_CM", "REPRODUCTIONS", "Reproduction", "RunReport",
    "StepMetrics", "bench_link", "export_trace", "fixed_timing_ber", "monte_carlo_ber",
    "ping_false_detection_rate", "random_message", "reproduce_fig10", "reproduce_fig3",
    "reproduce_fig6", "reproduce_table3", "step_metrics",
]
