"""Single-PC heat source model.

A node turns a workload (activity fraction in [0, 1]) into CPU-core and
case-ambient temperatures. The case temperature follows a first-order
approach to a workload-dependent target; while heating it is pulled toward
an overdriven level and clamped at the target, which reproduces the nearly
constant heating rate up to the +10 degC ambient cap.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.optimize import brentq

from . import kernels

FAN_MIN_RPM = 800.0
FAN_MAX_RPM = 4000.0
DEFAULT_DT_S = 0.1
MAX_DT_S = 2.0


@dataclass(frozen=True)
class PowerModel:
    activity: float
    capacitance: float = 1.0
    frequency: float = 1.0
    voltage: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.activity <= 1.0:
            raise ValueError(f"activity must be in [0, 1], got {self.activity}")
        for name in ("capacitance", "frequency", "voltage"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def power(pm: PowerModel) -> float:
    """Dynamic CPU power in relative watts: activity * C * f * V**2."""
    return pm.activity * pm.capacitance * pm.frequency * pm.voltage ** 2


@dataclass(frozen=True)
class NodeThermalParams:
    idle_temp_C: float
    tau_heat_s: float
    tau_cool_s: float
    ambient_delta_max_C: float = 10.0
    cpu_delta_max_C: float = 20.0
    cpu_response_s: float = 5.0
    # drive level of the heating phase; equal to ambient_delta_max_C gives a
    # plain exponential that never quite reaches the cap
    heat_overdrive_C: float | None = None

    def __post_init__(self):
        if self.heat_overdrive_C is None:
            object.__setattr__(self, "heat_overdrive_C", self.ambient_delta_max_C)
        for name in ("idle_temp_C", "tau_heat_s", "tau_cool_s", "ambient_delta_max_C",
                     "cpu_delta_max_C", "cpu_response_s"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.ambient_delta_max_C > self.cpu_delta_max_C:
            raise ValueError("ambient_delta_max_C must not exceed cpu_delta_max_C")
        if not 20.0 <= self.idle_temp_C <= 40.0:
            raise ValueError("idle_temp_C must lie in [20, 40]")
        if self.heat_overdrive_C < self.ambient_delta_max_C:
            raise ValueError("heat_overdrive_C must be >= ambient_delta_max_C")

    @property
    def max_case_C(self) -> float:
        return self.idle_temp_C + self.ambient_delta_max_C

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class NodeState:
    t_cpu_C: float
    t_case_C: float
    fan_rpm: float = FAN_MIN_RPM
    workload: float = 0.0

    @classmethod
    def idle(cls, params: NodeThermalParams) -> "NodeState":
        return cls(params.idle_temp_C, params.idle_temp_C, FAN_MIN_RPM, 0.0)


@dataclass(frozen=True)
class WorkloadSchedule:
    """Ordered (duration_s, activity) segments."""

    segments: tuple[tuple[float, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        segs = tuple((float(d), float(a)) for d, a in self.segments)
        for d, a in segs:
            if not d > 0:
                raise ValueError(f"segment duration must be positive, got {d}")
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"segment activity must be in [0, 1], got {a}")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def of(cls, segments: Iterable[Sequence[float]]) -> "WorkloadSchedule":
        return cls(tuple(tuple(s) for s in segments))

    def __add__(self, other: "WorkloadSchedule") -> "WorkloadSchedule":
        return WorkloadSchedule(self.segments + other.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return iter(self.segments)

    @property
    def duration_s(self) -> float:
        return math.fsum(d for d, _ in self.segments)

    def idle_padded(self, seconds: float) -> "WorkloadSchedule":
        """Copy with a trailing α=0 segment (no-op for non-positive seconds)."""
        if seconds <= 0:
            return self
        return WorkloadSchedule(self.segments + ((seconds, 0.0),))

    def to_steps(self, dt_s: float) -> np.ndarray:
        """Per-step activity; segment edges are rounded to the step grid."""
        edges = np.rint(np.cumsum([d for d, _ in self.segments]) / dt_s).astype(np.int64)
        out = np.zeros(int(edges[-1]) if len(edges) else 0, dtype=np.float64)
        start = 0
        for (d, a), stop in zip(self.segments, edges):
            out[start:stop] = a
            start = stop
        return out


@dataclass
class NodeTrace:
    """Unquantized temperatures at t = k*dt, k = 0..n."""

    dt_s: float
    t_s: np.ndarray
    t_cpu_C: np.ndarray
    t_case_C: np.ndarray

    def __len__(self) -> int:
        return len(self.t_s)

    def __iter__(self):
        return zip(self.t_s.tolist(), self.t_cpu_C.tolist(), self.t_case_C.tolist())

    def excitation(self, params: NodeThermalParams) -> np.ndarray:
        """Normalized heat output in [0, 1], tracking the CPU temperature."""
        e = (self.t_cpu_C - params.idle_temp_C) / params.cpu_delta_max_C
        return np.clip(e, 0.0, 1.0)


def target_case_temp(params: NodeThermalParams, alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return params.idle_temp_C + alpha * params.ambient_delta_max_C


def fan_speed(state: NodeState, params: NodeThermalParams) -> float:
    frac = (state.t_cpu_C - params.idle_temp_C) / params.cpu_delta_max_C
    frac = min(1.0, max(0.0, frac))
    return FAN_MIN_RPM + frac * (FAN_MAX_RPM - FAN_MIN_RPM)


def _check_dt(dt_s: float) -> None:
    if not 0 < dt_s <= MAX_DT_S:
        raise ValueError(f"dt_s must be in (0, {MAX_DT_S}], got {dt_s}")


def step(state: NodeState, params: NodeThermalParams, alpha: float, dt_s: float) -> NodeState:
    """Advance one step under constant activity.

    The case temperature takes a forward-Euler step; the much faster CPU lag
    uses the exact exponential update so it stays accurate at dt = 2 s.
    """
    _check_dt(dt_s)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    case, cpu = kernels.integrate_node(
        np.array([alpha], dtype=np.float64), dt_s, params.idle_temp_C,
        params.ambient_delta_max_C, params.heat_overdrive_C, params.tau_heat_s,
        params.tau_cool_s, params.cpu_delta_max_C, params.cpu_response_s,
        state.t_case_C, state.t_cpu_C,
    )
    new = NodeState(float(cpu[1]), float(case[1]), 0.0, float(alpha))
    return NodeState(new.t_cpu_C, new.t_case_C, fan_speed(new, params), new.workload)


def run_schedule(params: NodeThermalParams, schedule: WorkloadSchedule,
                 dt_s: float = DEFAULT_DT_S, initial: NodeState | None = None) -> NodeTrace:
    if len(schedule) == 0:
        raise ValueError("schedule is empty")
    _check_dt(dt_s)
    init = initial or NodeState.idle(params)
    alpha = schedule.to_steps(dt_s)
    case, cpu = kernels.integrate_node(
        alpha, dt_s, params.idle_temp_C, params.ambient_delta_max_C,
        params.heat_overdrive_C, params.tau_heat_s, params.tau_cool_s,
        params.cpu_delta_max_C, params.cpu_response_s, init.t_case_C, init.t_cpu_C,
    )
    t = np.arange(len(case), dtype=np.float64) * dt_s
    return NodeTrace(dt_s, t, cpu, case)


def calibrate_node(idle_temp_C: float, first_rise_s: float, cap_s: float, first_drop_s: float,
                   ambient_delta_max_C: float = 10.0, cpu_delta_max_C: float = 20.0,
                   cpu_response_s: float = 5.0) -> NodeThermalParams:
    """Solve heating/cooling constants from observed timings at full load.

    first_rise_s: time for the first +1 degC from idle;
    cap_s: time to reach the ambient cap;
    first_drop_s: time for the first -1 degC after load stops at the cap.
    """
    n = cap_s / first_rise_s
    if n <= ambient_delta_max_C:
        raise ValueError("cap_s / first_rise_s must exceed ambient_delta_max_C")
    # overdrive K, x = exp(-first_rise/tau): K(1-x) = 1 and K(1-x**n) = delta_max
    x = brentq(lambda x: (1 - x ** n) / (1 - x) - ambient_delta_max_C, 1e-9, 1 - 1e-12)
    return NodeThermalParams(
        idle_temp_C=idle_temp_C,
        tau_heat_s=-first_rise_s / math.log(x),
        tau_cool_s=-first_drop_s / math.log(1 - 1 / ambient_delta_max_C),
        ambient_delta_max_C=ambient_delta_max_C,
        cpu_delta_max_C=cpu_delta_max_C,
        cpu_response_s=cpu_response_s,
        heat_overdrive_C=1 / (1 - x),
    )


def load_presets(path: str | Path | None = None) -> dict[str, NodeThermalParams]:
    """Node presets from JSON: ``{"presets": {name: {NodeThermalParams fields}}}``."""
    if path is None:
        text = resources.files("thermalink").joinpath("data/presets.json").read_text()
    else:
        text = Path(path).read_text()
    doc = json.loads(text)
    return {name: NodeThermalParams(**fields) for name, fields in doc["presets"].items()}


def preset(name: str = "i7-tower") -> NodeThermalParams:
    presets = load_presets()
    try:
        return presets[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {sorted(presets)}") from None
