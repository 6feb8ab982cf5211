"""Classical counterpart of the Wigner engine: Verlet trajectories, tangent
maps, Benettin Lyapunov spectra and Monte Carlo ensemble moments.

Kernels come from :mod:`wignerchaos._core` (compiled when available).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from . import _core
from .phase_space import GaussianSpec
from .potentials import PotentialSpec

__all__ = [
    "TrajectoryState",
    "Trajectory",
    "LyapunovSpectrum",
    "CovarianceHistory",
    "integrate",
    "tangent_step",
    "benettin_spectrum",
    "ensemble_spread",
    "gaussian_cloud",
    "load_fixture",
]

CONVERGENCE_REL = 0.10
CONVERGENCE_ABS = 1e-3


@dataclass(frozen=True)
class TrajectoryState:
    x: float
    p: float
    t: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.p, self.t)):
            raise ValueError("trajectory state must be finite")


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    p: np.ndarray

    @property
    def final(self) -> TrajectoryState:
        return TrajectoryState(float(self.x[-1]), float(self.p[-1]), float(self.t[-1]))

    def energy(self, spec: PotentialSpec) -> np.ndarray:
        """Static-part energy p^2/2m + V(x) (the drive term is excluded)."""
        return self.p**2 / (2 * spec.mass) + P.polyval(self.x, spec.coefficients)


def _force_coefficients(spec: PotentialSpec):
    c = np.asarray(spec.coefficients, dtype=float)
    d = P.polyder(c) if c.size > 1 else np.zeros(1)
    dd = P.polyder(d) if d.size > 1 else np.zeros(1)
    return np.ascontiguousarray(d), np.ascontiguousarray(dd)


def _args(spec):
    d, dd = _force_coefficients(spec)
    return d, dd, float(spec.drive_amplitude), float(spec.drive_frequency), float(spec.mass)


def integrate(state: TrajectoryState, spec: PotentialSpec, dt: float, n_steps: int) -> Trajectory:
    """Velocity Verlet with the drive evaluated at each step's midpoint."""
    d, _, A, w, m = _args(spec)
    xs, ps = _core.verlet_trajectory(state.x, state.p, state.t, dt, int(n_steps), d, A, w, m)
    return Trajectory(state.t + dt * np.arange(n_steps + 1), xs, ps)


def tangent_step(state: TrajectoryState, deviation, spec: PotentialSpec, dt: float, n_steps: int = 1):
    """Deviation carried by the exact Jacobian of ``n_steps`` Verlet steps from ``state``."""
    d, dd, A, w, m = _args(spec)
    dx, dp = (float(v) for v in deviation)
    _, _, dx, dp = _core.tangent_trajectory(state.x, state.p, state.t, dx, dp, dt, int(n_steps), d, dd, A, w, m)
    return np.array([dx, dp])


@dataclass
class LyapunovSpectrum:
    exponents: Tuple[float, float]
    history_times: np.ndarray
    history: np.ndarray
    averaging_time: float
    dt: float
    renorm_stride: int
    spread: float
    converged: bool
    metadata: dict = field(default_factory=dict)

    @property
    def lambda_plus(self) -> float:
        return self.exponents[0]

    @property
    def lambda_minus(self) -> float:
        return self.exponents[1]

    @property
    def tolerance(self) -> float:
        return max(self.spread, CONVERGENCE_ABS)

    def as_dict(self, history_points: int = 200) -> dict:
        step = max(1, len(self.history_times) // history_points)
        return {
            "exponents": list(self.exponents),
            "sum": self.exponents[0] + self.exponents[1],
            "averaging_time": self.averaging_time,
            "dt": self.dt,
            "renorm_stride": self.renorm_stride,
            "spread_final_quarter": self.spread,
            "converged": self.converged,
            "convergence_history": {
                "t": self.history_times[::step].tolist(),
                "lambda_plus": self.history[::step, 0].tolist(),
                "lambda_minus": self.history[::step, 1].tolist(),
            },
            "metadata": self.metadata,
        }


def benettin_spectrum(initial: TrajectoryState, spec: PotentialSpec, dt: float, t_total: float,
                      renorm_stride: int = 10, transient: float = 0.0) -> LyapunovSpectrum:
    """Time-averaged exponents from two Gram-Schmidt-renormalised tangent vectors.

    ``transient`` is integrated first without averaging.  ``converged`` is
    False when the running lambda+ moves by more than 10% (or 1e-3 absolute,
    whichever is larger) over the final quarter.
    """
    d, dd, A, w, m = _args(spec)
    x, p, t = initial.x, initial.p, initial.t
    if transient > 0:
        n_tr = int(round(transient / dt))
        xs, ps = _core.verlet_trajectory(x, p, t, dt, n_tr, d, A, w, m)
        x, p, t = float(xs[-1]), float(ps[-1]), t + n_tr * dt
    block = dt * renorm_stride
    n_blocks = max(1, int(round(t_total / block)))
    sums, _, _ = _core.benettin(x, p, t, dt, n_blocks, int(renorm_stride), d, dd, A, w, m)
    times = block * np.arange(1, n_blocks + 1)
    hist = sums / times[:, None]
    lam = tuple(sorted((float(hist[-1, 0]), float(hist[-1, 1])), reverse=True))
    tail = hist[n_blocks - max(1, n_blocks // 4):, 0]
    spread = float(tail.max() - tail.min())
    converged = spread <= max(CONVERGENCE_REL * abs(lam[0]), CONVERGENCE_ABS)
    return LyapunovSpectrum(
        exponents=lam,
        history_times=times,
        history=hist,
        averaging_time=float(times[-1]),
        dt=dt,
        renorm_stride=int(renorm_stride),
        spread=spread,
        converged=bool(converged),
        metadata={"x0": initial.x, "p0": initial.p, "t0": initial.t, "transient": transient,
                  "backend": _core.BACKEND},
    )


@dataclass
class CovarianceHistory:
    times: np.ndarray
    mean: np.ndarray
    covariance: np.ndarray
    n_samples: int

    def standard_errors(self) -> np.ndarray:
        """Gaussian-approximation standard error of each covariance entry."""
        c = self.covariance
        var = np.empty_like(c)
        var[:, 0, 0] = 2 * c[:, 0, 0] ** 2
        var[:, 1, 1] = 2 * c[:, 1, 1] ** 2
        off = c[:, 0, 0] * c[:, 1, 1] + c[:, 0, 1] ** 2
        var[:, 0, 1] = var[:, 1, 0] = off
        return np.sqrt(var / (self.n_samples - 1))


def gaussian_cloud(spec: GaussianSpec, n: int, seed: int = 0, moment_matched: bool = False) -> np.ndarray:
    """(n, 2) samples of ``spec``; ``moment_matched`` makes the sample mean and
    covariance exact (a variance-reduction step)."""
    rng = np.random.default_rng(seed)
    if not moment_matched:
        return rng.multivariate_normal([spec.x0, spec.p0], spec.covariance, size=n)
    z = rng.standard_normal((n, 2))
    z -= z.mean(axis=0)
    z = z @ np.linalg.inv(np.linalg.cholesky(np.cov(z.T)).T)
    return np.array([spec.x0, spec.p0]) + z @ np.linalg.cholesky(spec.covariance).T


def ensemble_spread(initial_cloud, spec: PotentialSpec, dt: float, t: float, sample_every: int = 1,
                    t0: float = 0.0) -> CovarianceHistory:
    """Evolve an (N, 2) cloud of (x, p) points; record mean and covariance."""
    cloud = np.array(initial_cloud, dtype=float)
    x, p = cloud[:, 0].copy(), cloud[:, 1].copy()
    d, _, A, w, m = _args(spec)
    n_steps = int(round(t / dt))
    h = 0.5 * dt
    times, means, covs = [], [], []

    def record(tt):
        times.append(tt)
        means.append([x.mean(), p.mean()])
        covs.append(np.cov(np.vstack([x, p])))

    tt = t0
    record(tt)
    for i in range(n_steps):
        drive = A * math.cos(w * (tt + h))
        p -= h * (P.polyval(x, d) + drive)
        x += dt * p / m
        p -= h * (P.polyval(x, d) + drive)
        tt = t0 + (i + 1) * dt
        if (i + 1) % sample_every == 0 or i + 1 == n_steps:
            record(tt)
    return CovarianceHistory(np.array(times), np.array(means), np.array(covs), x.size)


def load_fixture(name: str = "double_well_lyapunov") -> dict:
    """Versioned reference data shipped with the package."""
    text = resources.files("wignerchaos").joinpath("fixtures", f"{name}.json").read_text()
    return json.loads(text)
