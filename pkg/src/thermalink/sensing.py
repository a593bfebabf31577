"""What software actually observes: quantized, periodically sampled readings."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

GROUP_CPU = "A"
GROUP_AMBIENT = "B"
GROUP_MOTHERBOARD = "C"
GROUP_HDD = "HDD"
GROUPS = (GROUP_CPU, GROUP_AMBIENT, GROUP_MOTHERBOARD, GROUP_HDD)

# external-delta / self-workload-delta under the reference excitation, used
# when no measured responses are supplied
DEFAULT_SELECTIVITY = {GROUP_CPU: 0.05, GROUP_AMBIENT: 1.0, GROUP_MOTHERBOARD: 0.6, GROUP_HDD: 0.3}

_EPS = 1e-9


class HorizonError(ValueError):
    """True trace does not cover the requested sampling horizon."""


@dataclass(frozen=True)
class SensorSpec:
    name: str = "ambient"
    group: str = GROUP_AMBIENT
    resolution_C: float = 1.0
    sample_period_s: float = 2.0
    range_min_C: float = 0.0
    range_max_C: float = 130.0

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ValueError(f"unknown sensor group {self.group!r}")
        if not self.resolution_C > 0 or not self.sample_period_s > 0:
            raise ValueError("resolution and sample period must be positive")
        if not self.range_min_C < self.range_max_C:
            raise ValueError("range_min_C must be below range_max_C")

    def quantize(self, values):
        v = np.floor(np.asarray(values, dtype=np.float64) / self.resolution_C + _EPS) * self.resolution_C
        return np.clip(v, self.range_min_C, self.range_max_C)


AMBIENT_SENSOR = SensorSpec()


@dataclass
class TemperatureTrace:
    sensor: str
    sample_period_s: float
    t_s: np.ndarray
    value_C: np.ndarray

    def __post_init__(self):
        self.t_s = np.asarray(self.t_s, dtype=np.float64)
        self.value_C = np.asarray(self.value_C, dtype=np.float64)
        if self.t_s.shape != self.value_C.shape:
            raise ValueError("t_s and value_C must have equal length")
        if len(self.t_s) > 1 and not np.all(np.diff(self.t_s) > 0):
            raise ValueError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t_s)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TemperatureTrace):
            return NotImplemented
        return (self.sensor == other.sensor
                and np.array_equal(self.t_s, other.t_s)
                and np.array_equal(self.value_C, other.value_C))

    @property
    def end_s(self) -> float:
        return float(self.t_s[-1]) if len(self.t_s) else 0.0

    def window(self, start_s: float, stop_s: float) -> np.ndarray:
        mask = (self.t_s >= start_s - _EPS) & (self.t_s < stop_s - _EPS)
        return self.value_C[mask]

    def first_time_at_or_above(self, level_C: float, after_s: float = 0.0) -> float | None:
        idx = np.flatnonzero((self.value_C >= level_C) & (self.t_s >= after_s))
        return float(self.t_s[idx[0]]) if len(idx) else None

    def first_time_below(self, level_C: float, after_s: float = 0.0) -> float | None:
        idx = np.flatnonzero((self.value_C < level_C) & (self.t_s >= after_s))
        return float(self.t_s[idx[0]]) if len(idx) else None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_s", "sensor", "value_C"])
        for t, v in zip(self.t_s.tolist(), self.value_C.tolist()):
            w.writerow([repr(t), self.sensor, repr(v)])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def from_csv(cls, text: str, sample_period_s: float | None = None) -> "TemperatureTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty trace CSV")
        sensors = {r["sensor"] for r in rows}
        if len(sensors) != 1:
            raise ValueError(f"expected a single sensor per CSV, got {sorted(sensors)}")
        t = np.array([float(r["t_s"]) for r in rows])
        v = np.array([float(r["value_C"]) for r in rows])
        if sample_period_s is None:
            sample_period_s = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(sensors.pop(), sample_period_s, t, v)

    @classmethod
    def read_csv(cls, path: str | Path, sample_period_s: float | None = None) -> "TemperatureTrace":
        return cls.from_csv(Path(path).read_text(), sample_period_s)


def traces_to_csv(traces: Sequence[TemperatureTrace]) -> str:
    """Several sensors in one long-format CSV (same header as a single trace)."""
    names = [tr.sensor for tr in traces]
    if len(set(names)) != len(names):
        raise ValueError("sensor names must be unique")
    parts = [tr.to_csv() for tr in traces]
    return parts[0] + "".join(p.split("\n", 1)[1] for p in parts[1:])


def traces_from_csv(text: str) -> dict[str, TemperatureTrace]:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty trace CSV")
    by_sensor: dict[str, list[dict]] = {}
    for r in rows:
        by_sensor.setdefault(r["sensor"], []).append(r)
    out = {}
    for name, rs in by_sensor.items():
        t = np.array([float(r["t_s"]) for r in rs])
        v = np.array([float(r["value_C"]) for r in rs])
        out[name] = TemperatureTrace(name, float(t[1] - t[0]) if len(t) > 1 else 0.0, t, v)
    return out


@dataclass(frozen=True)
class NoiseModel:
    """Slow bounded ambient drift plus rare one-quantum jitter.

    Drift is ``A * (1 - cos(w t))`` with a seeded period between one and two
    hours and ``A * w = drift_rate``, so it starts at zero, never exceeds
    ``drift_rate * elapsed`` and stays warm-side of the setpoint (an
    air-conditioned room only pulls temperature down to its setpoint).
    """

    drift_rate_C_per_hour: float = 0.5
    jitter_prob: float = 0.01
    seed: int = 0
    quantum_C: float = 1.0

    def __post_init__(self):
        if self.drift_rate_C_per_hour < 0:
            raise ValueError("drift_rate must be non-negative")
        if not 0.0 <= self.jitter_prob <= 0.1:
            raise ValueError("jitter_prob must be in [0, 0.1]")

    @classmethod
    def quiet(cls) -> "NoiseModel":
        return cls(0.0, 0.0, 0)


def apply_noise(t_s: np.ndarray, values: np.ndarray, model: NoiseModel) -> np.ndarray:
    """Perturb a true temperature series; deterministic in ``model.seed``."""
    t_s = np.asarray(t_s, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if model.drift_rate_C_per_hour == 0 and model.jitter_prob == 0:
        return values.copy()
    rng = np.random.default_rng(model.seed)
    period_s = rng.uniform(3600.0, 7200.0)
    omega = 2 * math.pi / period_s
    amp = (model.drift_rate_C_per_hour / 3600.0) / omega
    elapsed = t_s - t_s[0]
    out = values + amp * (1.0 - np.cos(omega * elapsed))
    if model.jitter_prob > 0:
        u = rng.random(len(values))
        sign = np.where(rng.random(len(values)) < 0.5, -1.0, 1.0)
        out = out + np.where(u < model.jitter_prob, sign * model.quantum_C, 0.0)
    return out


def sample(t_s: np.ndarray, values: np.ndarray, spec: SensorSpec = AMBIENT_SENSOR,
           horizon_s: float | None = None) -> TemperatureTrace:
    """Sample a uniformly stepped true series every ``spec.sample_period_s``.

    Readings are floored to the sensor resolution. Without ``horizon_s`` the
    whole trace is sampled: a trace spanning 600 s at 0.5 Hz yields 300
    samples at t = 0, 2, ..., 598.
    """
    t_s = np.asarray(t_s, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if len(t_s) < 2:
        raise HorizonError("true trace needs at least two points")
    dt = float(t_s[1] - t_s[0])
    span = float(t_s[-1] - t_s[0])
    if horizon_s is None:
        horizon_s = span
    elif horizon_s > span + _EPS:
        raise HorizonError(f"trace spans {span} s, {horizon_s} s requested")
    n = int(math.floor(horizon_s / spec.sample_period_s + _EPS))
    k = np.arange(n)
    idx = np.rint(k * spec.sample_period_s / dt).astype(np.int64)
    ts = t_s[0] + k * spec.sample_period_s
    return TemperatureTrace(spec.name, spec.sample_period_s, ts, spec.quantize(values[idx]))


def requantize(trace: TemperatureTrace, spec: SensorSpec = AMBIENT_SENSOR) -> TemperatureTrace:
    return TemperatureTrace(trace.sensor, trace.sample_period_s, trace.t_s.copy(), spec.quantize(trace.value_C))


def select_sensor(available: Sequence[SensorSpec],
                  responses: Mapping[str, tuple[float, float]] | None = None) -> SensorSpec:
    """Pick the receive sensor.

    The case-ambient sensor (group B) wins whenever present. Otherwise the
    sensor with the largest external-delta / self-delta ratio is chosen,
    from ``responses`` keyed by sensor name when given, else from typical
    per-group selectivity.
    """
    if not available:
        raise ValueError("no sensors available")
    for s in available:
        if s.group == GROUP_AMBIENT:
            return s

    def score(s: SensorSpec) -> float:
        if responses and s.name in responses:
            external, own = responses[s.name]
            return external / own if own > 0 else math.inf
        return DEFAULT_SELECTIVITY[s.group]

    return max(available, key=score)
