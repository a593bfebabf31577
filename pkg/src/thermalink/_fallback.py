"""Pure-Python versions of the inner loops in ``_kernels.pyx``."""

import math

import numpy as np


def integrate_node(alpha, dt, idle, delta_max, overdrive, tau_heat, tau_cool,
                   cpu_delta, cpu_tau, case0, cpu0):
    n = len(alpha)
    case_out = np.empty(n + 1, dtype=np.float64)
    cpu_out = np.empty(n + 1, dtype=np.float64)
    case_t = float(case0)
    cpu_t = float(cpu0)
    cpu_k = 1.0 - math.exp(-dt / cpu_tau)
    case_out[0] = case_t
    cpu_out[0] = cpu_t
    for i, a in enumerate(alpha.tolist()):
        target = idle + delta_max * a
        if case_t < target:
            drive = idle + overdrive * a
            case_t = case_t + dt * (drive - case_t) / tau_heat
            if case_t > target:
                case_t = target
        elif case_t > target:
            case_t = case_t + dt * (target - case_t) / tau_cool
            if case_t < target:
                case_t = target
        cpu_target = idle + cpu_delta * a
        cpu_t = cpu_t + cpu_k * (cpu_target - cpu_t)
        case_out[i + 1] = case_t
        cpu_out[i + 1] = cpu_t
    return case_out, cpu_out


def couple(excitation, dt, dead_steps, drive, tau_heat, tau_cool, max_delta, x0):
    exc = excitation.tolist()
    n = len(exc)
    out = np.empty(n, dtype=np.float64)
    if n == 0:
        return out
    x = float(x0)
    out[0] = x if x < max_delta else max_delta
    for i in range(1, n):
        j = i - 1 - dead_steps
        e = exc[j] if j >= 0 else 0.0
        u = drive * e
        if x < u:
            x = x + dt * (u - x) / tau_heat
        else:
            x = x + dt * (u - x) / tau_cool
        out[i] = x if x < max_delta else max_delta
    return out
