# cython: language_level=3
"""Compiled inner loops for node integration and air coupling.

Arithmetic order matches ``_fallback`` exactly so both backends produce
bit-identical traces.
"""

import numpy as np
from libc.math cimport exp


def integrate_node(const double[::1] alpha, double dt, double idle,
                   double delta_max, double overdrive, double tau_heat,
                   double tau_cool, double cpu_delta, double cpu_tau,
                   double case0, double cpu0):
    cdef Py_ssize_t n = alpha.shape[0]
    cdef Py_ssize_t i
    cdef double a, target, drive, cpu_target
    cdef double case_t = case0
    cdef double cpu_t = cpu0
    # the fast CPU lag uses the exact zero-order-hold update
    cdef double cpu_k = 1.0 - exp(-dt / cpu_tau)
    case_out = np.empty(n + 1, dtype=np.float64)
    cpu_out = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] co = case_out
    cdef double[::1] po = cpu_out
    co[0] = case_t
    po[0] = cpu_t
    for i in range(n):
        a = alpha[i]
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
        co[i + 1] = case_t
        po[i + 1] = cpu_t
    return case_out, cpu_out


def couple(const double[::1] excitation, double dt, Py_ssize_t dead_steps,
           double drive, double tau_heat, double tau_cool, double max_delta,
           double x0):
    cdef Py_ssize_t n = excitation.shape[0]
    cdef Py_ssize_t i, j
    cdef double e, u
    cdef double x = x0
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    if n == 0:
        return out
    o[0] = x if x < max_delta else max_delta
    for i in range(1, n):
        j = i - 1 - dead_steps
        if j >= 0:
            e = excitation[j]
        else:
            e = 0.0
        u = drive * e
        if x < u:
            x = x + dt * (u - x) / tau_heat
        else:
            x = x + dt * (u - x) / tau_cool
        o[i] = x if x < max_delta else max_delta
    return out
