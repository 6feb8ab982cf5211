# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled classical kernels; same signatures and arithmetic order as _pycore."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, log, hypot

cnp.import_array()


cdef inline double _horner(const double[::1] c, double x) noexcept nogil:
    cdef double acc = c[c.shape[0] - 1]
    cdef Py_ssize_t k
    for k in range(c.shape[0] - 2, -1, -1):
        acc = acc * x + c[k]
    return acc


def verlet_trajectory(double x, double p, double t, double dt, Py_ssize_t n,
                      dcoef, double A, double omega, double mass):
    cdef const double[::1] c = np.ascontiguousarray(dcoef, dtype=np.float64)
    xs_a = np.empty(n + 1)
    ps_a = np.empty(n + 1)
    cdef double[::1] xs = xs_a
    cdef double[::1] ps = ps_a
    cdef double h = 0.5 * dt, drive
    cdef Py_ssize_t i
    xs[0] = x
    ps[0] = p
    with nogil:
        for i in range(n):
            drive = A * cos(omega * (t + h))
            p -= h * (_horner(c, x) + drive)
            x += dt * p / mass
            p -= h * (_horner(c, x) + drive)
            t += dt
            xs[i + 1] = x
            ps[i + 1] = p
    return xs_a, ps_a


def tangent_trajectory(double x, double p, double t, double dx, double dp, double dt,
                       Py_ssize_t n, dcoef, ddcoef, double A, double omega, double mass):
    cdef const double[::1] c = np.ascontiguousarray(dcoef, dtype=np.float64)
    cdef const double[::1] cc = np.ascontiguousarray(ddcoef, dtype=np.float64)
    cdef double h = 0.5 * dt, drive
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            drive = A * cos(omega * (t + h))
            p -= h * (_horner(c, x) + drive)
            dp -= h * _horner(cc, x) * dx
            x += dt * p / mass
            dx += dt * dp / mass
            p -= h * (_horner(c, x) + drive)
            dp -= h * _horner(cc, x) * dx
            t += dt
    return x, p, dx, dp


def benettin(double x, double p, double t, double dt, Py_ssize_t n_blocks, Py_ssize_t stride,
             dcoef, ddcoef, double A, double omega, double mass):
    cdef const double[::1] c = np.ascontiguousarray(dcoef, dtype=np.float64)
    cdef const double[::1] cc = np.ascontiguousarray(ddcoef, dtype=np.float64)
    out_a = np.empty((n_blocks, 2))
    cdef double[:, ::1] out = out_a
    cdef double h = 0.5 * dt, drive, k
    cdef double a1 = 1.0, b1 = 0.0, a2 = 0.0, b2 = 1.0
    cdef double s1 = 0.0, s2 = 0.0, r11, r12, r22
    cdef Py_ssize_t blk, i
    with nogil:
        for blk in range(n_blocks):
            for i in range(stride):
                drive = A * cos(omega * (t + h))
                p -= h * (_horner(c, x) + drive)
                k = h * _horner(cc, x)
                b1 -= k * a1
                b2 -= k * a2
                x += dt * p / mass
                a1 += dt * b1 / mass
                a2 += dt * b2 / mass
                p -= h * (_horner(c, x) + drive)
                k = h * _horner(cc, x)
                b1 -= k * a1
                b2 -= k * a2
                t += dt
            r11 = hypot(a1, b1)
            a1 /= r11
            b1 /= r11
            r12 = a1 * a2 + b1 * b2
            a2 -= r12 * a1
            b2 -= r12 * b1
            r22 = hypot(a2, b2)
            a2 /= r22
            b2 /= r22
            s1 += log(r11)
            s2 += log(r22)
            out[blk, 0] = s1
            out[blk, 1] = s2
    return out_a, x, p
