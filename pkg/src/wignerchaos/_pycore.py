"""Pure-Python classical kernels; reference for the compiled core with the same signatures.

Force law: F(x, t) = -(V'(x) + A cos(omega t)), with V' given by ascending
polynomial coefficients ``dcoef`` and V'' by ``ddcoef``.  Velocity Verlet uses
the drive at the step midpoint for both half-kicks.
"""
import math

import numpy as np


def _horner(c, x):
    acc = c[-1]
    for k in range(len(c) - 2, -1, -1):
        acc = acc * x + c[k]
    return acc


def verlet_trajectory(x, p, t, dt, n, dcoef, A, omega, mass):
    c = [float(v) for v in dcoef]
    xs = np.empty(n + 1)
    ps = np.empty(n + 1)
    xs[0] = x
    ps[0] = p
    h = 0.5 * dt
    for i in range(n):
        drive = A * math.cos(omega * (t + h))
        p -= h * (_horner(c, x) + drive)
        x += dt * p / mass
        p -= h * (_horner(c, x) + drive)
        t += dt
        xs[i + 1] = x
        ps[i + 1] = p
    return xs, ps


def tangent_trajectory(x, p, t, dx, dp, dt, n, dcoef, ddcoef, A, omega, mass):
    c = [float(v) for v in dcoef]
    cc = [float(v) for v in ddcoef]
    h = 0.5 * dt
    for _ in range(n):
        drive = A * math.cos(omega * (t + h))
        p -= h * (_horner(c, x) + drive)
        dp -= h * _horner(cc, x) * dx
        x += dt * p / mass
        dx += dt * dp / mass
        p -= h * (_horner(c, x) + drive)
        dp -= h * _horner(cc, x) * dx
        t += dt
    return x, p, dx, dp


def benettin(x, p, t, dt, n_blocks, stride, dcoef, ddcoef, A, omega, mass):
    """Two tangent vectors, Gram-Schmidt every ``stride`` steps.

    Returns cumulative log stretch factors per block, shape (n_blocks, 2), and
    the final (x, p).
    """
    c = [float(v) for v in dcoef]
    cc = [float(v) for v in ddcoef]
    h = 0.5 * dt
    a1, b1, a2, b2 = 1.0, 0.0, 0.0, 1.0
    s1 = s2 = 0.0
    out = np.empty((n_blocks, 2))
    for blk in range(n_blocks):
        for _ in range(stride):
            drive = A * math.cos(omega * (t + h))
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
        r11 = math.hypot(a1, b1)
        a1 /= r11
        b1 /= r11
        r12 = a1 * a2 + b1 * b2
        a2 -= r12 * a1
        b2 -= r12 * b1
        r22 = math.hypot(a2, b2)
        a2 /= r22
        b2 /= r22
        s1 += math.log(r11)
        s2 += math.log(r22)
        out[blk, 0] = s1
        out[blk, 1] = s2
    return out, x, p
