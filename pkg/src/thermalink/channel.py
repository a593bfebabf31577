"""Placement geometry to calibrated link profiles, and air coupling.

The receiver's ambient offset is modeled as a latent heat excess ``x``:
after a dead time it relaxes toward ``drive_C * e`` (``e`` is the
transmitter's normalized heat output) with one time constant while rising
and another while falling. The sensed offset is ``min(x, max_rx_delta_C)``.
Calibration picks dead time, drive and time constants so that a full-load
transmitter reproduces each layout's observed anchors.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.optimize import brentq

from . import kernels


class NoLink(Exception):
    """The receiver cannot sense the transmitter at this placement."""


class Layout(str, enum.Enum):
    PARALLEL = "parallel"
    STACKED_TX_TOP = "stacked_tx_top"
    STACKED_TX_BOTTOM = "stacked_tx_bottom"
    FACE_AWAY = "face_away"
    QUADRATURE = "quadrature"
    OPEN_ROOM_PARALLEL = "open_room_parallel"

    @classmethod
    def parse(cls, value: "str | Layout") -> "Layout":
        if isinstance(value, Layout):
            return value
        key = str(value).strip().lower().replace("-", "_")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown layout {value!r}; known: {[m.value for m in cls]}") from None


class Direction(str, enum.Enum):
    A_TO_B = "A->B"
    B_TO_A = "B->A"

    def reverse(self) -> "Direction":
        return Direction.B_TO_A if self is Direction.A_TO_B else Direction.A_TO_B


@lru_cache(maxsize=None)
def anchors() -> dict:
    return json.loads(resources.files("thermalink").joinpath("data/anchors.json").read_text())


@dataclass(frozen=True)
class LinkProfile:
    dead_time_s: float
    gain: float
    tau_rx_heat_s: float
    tau_rx_cool_s: float
    max_rx_delta_C: float
    drive_C: float

    def __post_init__(self):
        if self.dead_time_s < 0:
            raise ValueError("dead_time_s must be >= 0")
        if not 0.0 <= self.gain <= 1.0:
            raise ValueError("gain must be in [0, 1]")
        if not 0.0 <= self.max_rx_delta_C <= 4.0:
            raise ValueError("max_rx_delta_C must be in [0, 4]")
        if not (self.tau_rx_heat_s > 0 and self.tau_rx_cool_s > 0):
            raise ValueError("time constants must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "LinkProfile":
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "LinkProfile":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ChannelConfig:
    layout: Layout = Layout.PARALLEL
    distance_cm: float = 0.0
    direction: Direction = Direction.A_TO_B
    asymmetry_factor: float = 1.5
    vm_mode: bool = False

    def __post_init__(self):
        object.__setattr__(self, "layout", Layout.parse(self.layout))
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.distance_cm < 0:
            raise ValueError("distance_cm must be >= 0")
        if self.asymmetry_factor < 1:
            raise ValueError("asymmetry_factor must be >= 1")

    def reversed(self) -> "ChannelConfig":
        return replace(self, direction=self.direction.reverse())


def _parallel_delta(d: float) -> float:
    pts = anchors()["layouts"]["parallel"]["delta_points"]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    if d > xs[-1]:
        return 0.0
    return float(np.interp(d, xs, ys))


def first_degree_delay(layout: Layout | str, distance_cm: float) -> float:
    """Seconds from full-load onset to the receiver's first +1 degC reading."""
    layout = Layout.parse(layout)
    if distance_cm < 0:
        raise ValueError("distance_cm must be >= 0")
    a = anchors()
    if distance_cm > a["max_link_distance_cm"]:
        return math.inf
    law = a["layouts"]["parallel"]["distance_law"]
    if layout is Layout.PARALLEL:
        return law["intercept_s"] + law["slope_s_per_cm"] * distance_cm
    anc = a["layouts"][layout.value]
    extra = max(0.0, distance_cm - anc["distance_cm"])
    return anc["first_degree_delay_s"] + law["slope_s_per_cm"] * extra


def max_receiver_delta(layout: Layout | str, distance_cm: float) -> float:
    """Steady receiver offset (degC) under a full-load transmitter."""
    layout = Layout.parse(layout)
    if distance_cm < 0:
        raise ValueError("distance_cm must be >= 0")
    if layout is Layout.PARALLEL:
        return _parallel_delta(distance_cm)
    anc = anchors()["layouts"][layout.value]
    ref = _parallel_delta(anc["distance_cm"])
    scale = min(1.0, _parallel_delta(distance_cm) / ref) if ref > 0 else 0.0
    return anc["max_delta_C"] * scale


def _tau_for_crossing(drive: float, rise_s: float, level: float = 1.0) -> float:
    if drive <= level:
        # never crosses; keep a finite constant with the same time scale
        return max(rise_s, 1.0)
    return -rise_s / math.log(1.0 - level / drive)


def _solve_rise(first_s: float, max_s: float, max_delta: float, lag: float) -> tuple[float, float]:
    """(tau_heat, drive) such that x(first_s) = 1 and x(max_s) = max_delta."""
    b = first_s - lag
    a = max_s - lag
    g = lambda tau: (1 - math.exp(-a / tau)) / (1 - math.exp(-b / tau)) - max_delta
    tau = brentq(g, 1e-2 * b, 1e7)
    return tau, 1.0 / (1.0 - math.exp(-b / tau))


def _tau_for_decay(peak: float, level: float, delay_s: float, lag: float) -> float:
    if peak <= level or delay_s <= lag:
        raise ValueError("decay anchor is not reachable with this rise calibration")
    return (delay_s - lag) / math.log(peak / level)


@dataclass(frozen=True)
class _Anchor:
    first_s: float
    max_delta: float
    overdrive: float
    tau_cool: float


@lru_cache(maxsize=None)
def _anchor_calibration(layout: Layout) -> _Anchor:
    """Calibrate the layout at its own anchor distance."""
    a = anchors()
    frac = a["dead_time_fraction"]
    lag_cpu = a["cpu_lag_s"]
    heat_s = a["heat_duration_s"]
    if layout is Layout.PARALLEL:
        anc = dict(a["layouts"]["parallel"])
        anc["first_degree_delay_s"] = first_degree_delay(layout, 0.0)
        anc["max_delta_C"] = _parallel_delta(0.0)
    else:
        anc = a["layouts"][layout.value]
    first = anc["first_degree_delay_s"]
    mx = anc["max_delta_C"]
    lag = frac * first + lag_cpu
    if "time_to_max_s" in anc:
        tau_h, drive = _solve_rise(first, anc["time_to_max_s"], mx, lag)
    else:
        drive = a["default_overdrive"] * mx
        tau_h = _tau_for_crossing(drive, first - lag)
    peak = drive * (1 - math.exp(-heat_s / tau_h))
    if "tau_rx_cool_s" in anc:
        tau_c = anc["tau_rx_cool_s"]
    elif "pause_delay_s" in anc:
        tau_c = _tau_for_decay(peak, math.floor(mx + 1e-9), anc["pause_delay_s"], lag)
    elif "cooling_to_idle_s" in anc:
        tau_c = _tau_for_decay(peak, 1.0, anc["cooling_to_idle_s"], lag)
    else:
        tau_c = a["default_tau_rx_cool_s"]
    return _Anchor(first, mx, drive / mx, tau_c)


def link_profile(config: ChannelConfig) -> LinkProfile:
    """Calibrated profile for one directed placement; raises NoLink if unsensable."""
    a = anchors()
    mx = max_receiver_delta(config.layout, config.distance_cm)
    if mx <= 0:
        raise NoLink(f"no thermal link at {config.layout.value}, {config.distance_cm} cm")
    first = first_degree_delay(config.layout, config.distance_cm)
    cal = _anchor_calibration(config.layout)
    if config.vm_mode:
        vm = a["vm"]
        mx *= vm["delta_factor"]
        first *= vm["delay_factor"]
        dead = a["dead_time_fraction"] * first_degree_delay(config.layout, config.distance_cm) * vm["dead_time_factor"]
    else:
        dead = a["dead_time_fraction"] * first
    drive = cal.overdrive * mx
    tau_h = _tau_for_crossing(drive, first - dead - a["cpu_lag_s"])
    if config.direction is Direction.B_TO_A:
        dead *= config.asymmetry_factor
    return LinkProfile(
        dead_time_s=dead,
        gain=mx / a["tx_reference_delta_C"],
        tau_rx_heat_s=tau_h,
        tau_rx_cool_s=cal.tau_cool,
        max_rx_delta_C=mx,
        drive_C=drive,
    )


def couple(excitation: np.ndarray, profile: LinkProfile, rx_idle_C: float, dt_s: float,
           x0: float = 0.0) -> np.ndarray:
    """Receiver ambient true temperature for a transmitter heat-output series.

    ``excitation`` is the transmitter's normalized heat output sampled every
    ``dt_s`` (see ``NodeTrace.excitation``); before the dead time elapses the
    receiver sees an idle transmitter.
    """
    exc = np.ascontiguousarray(excitation, dtype=np.float64)
    dead_steps = int(round(profile.dead_time_s / dt_s))
    delta = kernels.couple(exc, dt_s, dead_steps, profile.drive_C, profile.tau_rx_heat_s,
                           profile.tau_rx_cool_s, profile.max_rx_delta_C, x0)
    return rx_idle_C + delta
