"""End-to-end physics: workload -> transmitter -> air -> receiver sensor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import LinkProfile, couple
from .node import DEFAULT_DT_S, NodeThermalParams, NodeTrace, WorkloadSchedule, run_schedule
from .sensing import AMBIENT_SENSOR, NoiseModel, SensorSpec, TemperatureTrace, apply_noise, sample


@dataclass
class LinkRun:
    tx: NodeTrace
    rx_true_C: np.ndarray
    reading: TemperatureTrace

    @property
    def t_s(self) -> np.ndarray:
        return self.tx.t_s


def simulate(tx_params: NodeThermalParams, profile: LinkProfile, schedule: WorkloadSchedule, *,
             rx_idle_C: float = 32.0, dt_s: float = DEFAULT_DT_S, noise: NoiseModel | None = None,
             sensor: SensorSpec = AMBIENT_SENSOR) -> LinkRun:
    tx = run_schedule(tx_params, schedule, dt_s)
    rx = couple(tx.excitation(tx_params), profile, rx_idle_C, dt_s)
    if noise is not None:
        rx = apply_noise(tx.t_s, rx, noise)
    return LinkRun(tx, rx, sample(tx.t_s, rx, sensor))


def step_response(tx_params: NodeThermalParams, profile: LinkProfile, heat_s: float = 2400.0,
                  cool_s: float = 2400.0, **kw) -> LinkRun:
    """Full load for ``heat_s`` then idle for ``cool_s``."""
    sched = WorkloadSchedule.of([(heat_s, 1.0)]).idle_padded(cool_s)
    return simulate(tx_params, profile, sched, **kw)
