"""Polynomial potentials with a linear periodic drive.

V(x, t) = sum_k c_k x^k + A x cos(omega t)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

__all__ = [
    "PotentialSpec",
    "UndefinedScaleError",
    "derivative",
    "nonlinearity_scale",
    "min_nonlinearity_scale",
    "harmonic",
    "inverted_oscillator",
    "double_well",
    "PRESETS",
]

MAX_DEGREE = 12


class UndefinedScaleError(ValueError):
    """Raised where the force vanishes, so the nonlinearity scale is undefined."""


@dataclass(frozen=True)
class PotentialSpec:
    coefficients: Tuple[float, ...] = (0.0,)
    drive_amplitude: float = 0.0
    drive_frequency: float = 0.0
    mass: float = 1.0

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients) or (0.0,)
        if len(c) - 1 > MAX_DEGREE:
            raise ValueError(f"polynomial degree {len(c) - 1} exceeds {MAX_DEGREE}")
        if not all(math.isfinite(v) for v in c):
            raise ValueError("potential coefficients must be finite")
        if not (math.isfinite(self.drive_amplitude) and math.isfinite(self.drive_frequency)):
            raise ValueError("drive parameters must be finite")
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        nz = [k for k, v in enumerate(self.coefficients) if v != 0.0]
        return nz[-1] if nz else 0

    @property
    def is_quadratic(self) -> bool:
        return self.degree <= 2

    @property
    def driven(self) -> bool:
        return self.drive_amplitude != 0.0

    def drive(self, t):
        return self.drive_amplitude * np.cos(self.drive_frequency * t)

    def eval(self, x, t=0.0):
        return P.polyval(x, self.coefficients) + self.drive(t) * x

    def derivative(self, order: int, x, t=0.0):
        """Exact ``order``-th x-derivative."""
        if order < 0:
            raise ValueError("derivative order must be non-negative")
        if order == 0:
            return self.eval(x, t)
        c = P.polyder(self.coefficients, order) if order <= self.degree else [0.0]
        out = P.polyval(x, c)
        if order == 1:
            out = out + self.drive(t)
        return out if np.ndim(out) else float(out)

    def force(self, x, t=0.0):
        return -self.derivative(1, x, t)

    def chord_difference(self, x, y, t=0.0, n_max=None):
        """V(x + y/2) - V(x - y/2) as the odd Taylor series in y.

        The series terminates for polynomials, so ``n_max=None`` is exact.
        ``n_max = n`` keeps terms through the hbar^(2n) correction, ``n_max = 0``
        is the pure gradient (Poisson) term.
        """
        last = (self.degree - 1) // 2 if n_max is None else n_max
        last = max(last, 0)
        h = 0.5 * y
        total = 0.0
        for j in range(last + 1):
            order = 2 * j + 1
            if order > max(self.degree, 1):
                break
            total = total + 2 * self.derivative(order, x, t) * h**order / math.factorial(order)
        return total

    def nonlinearity_scale(self, n: int, x, t=0.0):
        return nonlinearity_scale(self, n, x, t)


def derivative(spec: PotentialSpec, order: int, x, t=0.0):
    return spec.derivative(order, x, t)


def nonlinearity_scale(spec: PotentialSpec, n: int, x: float, t: float = 0.0) -> float:
    """chi_n = |dV / d^(2n+1)V|^(1/2n) at (x, t); inf where the high derivative is zero."""
    if n < 1:
        raise ValueError("n must be >= 1")
    grad = float(spec.derivative(1, x, t))
    if grad == 0.0:
        raise UndefinedScaleError(f"dV/dx vanishes at x={x}, t={t}")
    high = float(spec.derivative(2 * n + 1, x, t))
    if high == 0.0:
        return math.inf
    return abs(grad / high) ** (1.0 / (2 * n))


def min_nonlinearity_scale(spec: PotentialSpec, xs: Sequence[float], t: float = 0.0, n: int = 1) -> float:
    """Smallest chi_n over sample points, skipping force-free points."""
    best = math.inf
    for x in np.asarray(xs, dtype=float):
        try:
            best = min(best, nonlinearity_scale(spec, n, x, t))
        except UndefinedScaleError:
            continue
    return best


def harmonic(omega: float = 1.0, mass: float = 1.0) -> PotentialSpec:
    return PotentialSpec((0.0, 0.0, 0.5 * mass * omega**2), mass=mass)


def inverted_oscillator(lam: float = 1.0, mass: float = 1.0) -> PotentialSpec:
    """V = -m lam^2 x^2 / 2; phase-space stretching rate lam."""
    return PotentialSpec((0.0, 0.0, -0.5 * mass * lam**2), mass=mass)


def double_well(
    quartic: float = 0.25,
    quadratic: float = -0.5,
    drive_amplitude: float = 0.3,
    drive_frequency: float = 1.0,
    mass: float = 1.0,
) -> PotentialSpec:
    """Driven double well; the defaults are the chaotic reference scenario."""
    return PotentialSpec(
        (0.0, 0.0, quadratic, 0.0, quartic),
        drive_amplitude=drive_amplitude,
        drive_frequency=drive_frequency,
        mass=mass,
    )


PRESETS = {
    "harmonic": harmonic,
    "inverted_oscillator": inverted_oscillator,
    "double_well_driven": double_well,
}
