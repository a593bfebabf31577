"""On-off keying over heat pulses, thermal-ping discovery and timing.

A '1' symbol is full load for ``heat_s`` followed by ``settle_s`` of idle;
a '0' is idle for the whole symbol period. The receiver decides per slot
whether the (median-filtered) reading rose at least ``threshold_C`` above
a trailing-minimum baseline.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np
from scipy.ndimage import median_filter

from .channel import Layout, LinkProfile, NoLink, anchors, first_degree_delay
from .node import WorkloadSchedule
from .sensing import TemperatureTrace

MAX_SYMBOLS_PER_HOUR = 8.0
MIN_SYMBOLS_PER_HOUR = 1.0
HEAT_MARGIN_S = 60.0
SETTLE_MARGIN_S = 60.0
MEDIAN_TAPS = 5


class SpanError(ValueError):
    """Trace does not cover the requested symbol slots."""


def largest_supported_delay_s() -> float:
    """Slowest first-degree delay among the calibrated placements."""
    a = anchors()
    delays = [first_degree_delay(Layout.PARALLEL, 35.0)]
    delays += [v["first_degree_delay_s"] for k, v in a["layouts"].items() if k != "parallel"]
    return max(delays)


def as_bits(bits: str | Iterable[int]) -> str:
    if isinstance(bits, str):
        s = bits
    else:
        s = "".join(str(int(b)) for b in bits)
    if set(s) - {"0", "1"}:
        raise ValueError(f"not a bit string: {s!r}")
    return s


@dataclass(frozen=True)
class SymbolTiming:
    heat_s: float
    settle_s: float
    threshold_C: float = 1.0

    def __post_init__(self):
        if not self.heat_s > 0 or self.settle_s < 0:
            raise ValueError("heat_s must be positive and settle_s non-negative")
        if not self.threshold_C > 0:
            raise ValueError("threshold_C must be positive")

    @property
    def symbol_period_s(self) -> float:
        return self.heat_s + self.settle_s

    @property
    def symbols_per_hour(self) -> float:
        return 3600.0 / self.symbol_period_s

    def to_dict(self) -> dict:
        d = asdict(self)
        d["symbol_period_s"] = self.symbol_period_s
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SymbolTiming":
        return cls(d["heat_s"], d["settle_s"], d.get("threshold_C", 1.0))


@dataclass(frozen=True)
class ThermalPing:
    pulse_s: float = 3000.0
    quiet_s: float = 3000.0

    def __post_init__(self):
        if self.pulse_s < 2 * largest_supported_delay_s():
            raise ValueError("pulse_s must be at least twice the largest supported first-degree delay")
        if self.quiet_s <= 0:
            raise ValueError("quiet_s must be positive")

    @property
    def duration_s(self) -> float:
        return self.pulse_s + self.quiet_s


@dataclass(frozen=True)
class PingResponse:
    measured_first_degree_delay_s: float
    measured_max_delta_C: float
    measured_recovery_s: float

    @property
    def timing(self) -> SymbolTiming:
        return derive_timing(self)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["timing"] = self.timing.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PingResponse":
        return cls(d["measured_first_degree_delay_s"], d["measured_max_delta_C"], d["measured_recovery_s"])


def _profile_estimates(profile: LinkProfile, ping: ThermalPing | None = None) -> tuple[float, float, float]:
    """(first-degree delay, peak delta, recovery after a ping) predicted from a profile."""
    lag = profile.dead_time_s + anchors()["cpu_lag_s"]
    drive = profile.drive_C
    if drive <= 1.0 or profile.max_rx_delta_C < 1.0:
        raise NoLink("profile never produces a +1 degC reading")
    delay = lag + profile.tau_rx_heat_s * -math.log(1.0 - 1.0 / drive)
    pulse = (ping or ThermalPing()).pulse_s
    peak = drive * (1.0 - math.exp(-pulse / profile.tau_rx_heat_s))
    recovery = lag + profile.tau_rx_cool_s * math.log(max(peak, 1.0))
    return delay, profile.max_rx_delta_C, recovery


def derive_timing(source: LinkProfile | PingResponse, heat_margin_s: float = HEAT_MARGIN_S,
                  settle_margin_s: float = SETTLE_MARGIN_S) -> SymbolTiming:
    """Symbol timing for a measured or calibrated link.

    The heat pulse covers the first-degree delay plus a margin; the settle
    time covers the receiver's recovery below threshold after a long pulse
    plus a margin. Both are rounded up to whole seconds and the symbol period
    is never shorter than 3600/8 s.
    """
    if isinstance(source, PingResponse):
        delay = source.measured_first_degree_delay_s
        delta = source.measured_max_delta_C
        recovery = source.measured_recovery_s
    else:
        delay, delta, recovery = _profile_estimates(source)
    if delta < 1.0:
        raise NoLink(f"peak receiver delta {delta} degC is below one quantum")
    # whole seconds keep every slot boundary on the sensor's sample grid
    heat = float(math.ceil(delay + heat_margin_s - 1e-9))
    settle = float(math.ceil(recovery + settle_margin_s - 1e-9))
    min_period = 3600.0 / MAX_SYMBOLS_PER_HOUR
    if heat + settle < min_period:
        settle = min_period - heat
    return SymbolTiming(heat, settle)


def modulate(bits: str | Iterable[int], timing: SymbolTiming) -> WorkloadSchedule:
    bits = as_bits(bits)
    if not bits:
        raise ValueError("nothing to modulate")
    segs: list[tuple[float, float]] = []
    for b in bits:
        if b == "1":
            segs.append((timing.heat_s, 1.0))
            if timing.settle_s > 0:
                segs.append((timing.settle_s, 0.0))
        else:
            segs.append((timing.symbol_period_s, 0.0))
    return WorkloadSchedule(tuple(segs))


def _filtered(trace: TemperatureTrace) -> np.ndarray:
    if len(trace) < MEDIAN_TAPS:
        return trace.value_C.copy()
    return median_filter(trace.value_C, size=MEDIAN_TAPS, mode="nearest")


def demodulate(trace: TemperatureTrace, timing: SymbolTiming, t0: float, n_bits: int | None = None) -> str:
    """Slice the received trace into symbol slots starting at ``t0``."""
    period = timing.symbol_period_s
    slack = trace.sample_period_s
    if n_bits is None:
        n_bits = int(math.floor((trace.end_s + slack - t0) / period + 1e-9))
    if n_bits <= 0 or t0 + n_bits * period > trace.end_s + slack + 1e-9 or t0 < trace.t_s[0] - 1e-9:
        raise SpanError(f"trace ends at {trace.end_s} s; {n_bits} slots from {t0} s need {t0 + n_bits * period} s")
    values = _filtered(trace)
    t = trace.t_s
    out = []
    for k in range(n_bits):
        start = t0 + k * period
        in_slot = (t >= start - 1e-9) & (t < start + period - 1e-9)
        slot = values[in_slot]
        if len(slot) == 0:
            raise SpanError(f"slot {k} has no samples")
        trailing = values[(t >= start - period - 1e-9) & (t < start - 1e-9)]
        baseline = min(float(trailing.min()), float(slot[0])) if len(trailing) else float(slot[0])
        out.append("1" if slot.max() - baseline >= timing.threshold_C else "0")
    return "".join(out)


def send_ping(ping: ThermalPing | None = None) -> WorkloadSchedule:
    ping = ping or ThermalPing()
    return WorkloadSchedule.of([(ping.pulse_s, 1.0), (ping.quiet_s, 0.0)])


def detect_ping(trace: TemperatureTrace, ping: ThermalPing | None = None, t_start: float = 0.0,
                threshold_C: float = 1.0, min_hold_s: float = 60.0) -> PingResponse | None:
    """Look for a sustained rise beginning during the ping pulse.

    Returns None when nothing ping-shaped is present.
    """
    ping = ping or ThermalPing()
    values = _filtered(trace)
    t = trace.t_s
    pulse_end = t_start + ping.pulse_s
    window = (t >= t_start - 1e-9) & (t < pulse_end + ping.quiet_s - 1e-9)
    if not window.any():
        return None
    head = values[window & (t < t_start + 60.0)]
    baseline = float(np.median(head)) if len(head) else float(values[window][0])
    tw = t[window]
    above = values[window] >= baseline + threshold_C
    hold = max(1, int(math.ceil(min_hold_s / trace.sample_period_s)))
    run = 0
    onset = None
    for i, flag in enumerate(above):
        run = run + 1 if flag else 0
        if run >= hold:
            onset = float(tw[i - hold + 1])
            break
    if onset is None or onset > pulse_end:
        return None
    peak = float(values[window].max()) - baseline
    after = np.flatnonzero((tw >= pulse_end - 1e-9) & ~above)
    recovery = float(tw[after[0]] - pulse_end) if len(after) else ping.quiet_s
    return PingResponse(onset - t_start, peak, recovery)
