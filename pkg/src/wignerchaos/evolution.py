"""Split-step propagator for the Wigner-space master equation

    dW/dt = {H, W}_Moyal + 2 gamma d_p(p W) + D d_pp W

Every generator is applied exactly in a representation where it is diagonal:
the kinetic shear in (k, p), the potential kernel and momentum diffusion in
the chord representation (x, y), and friction along its characteristics.
One step is the Strang sequence

    K(dt/2)  V(dt/2)  [D + friction](dt)  V(dt/2)  K(dt/2)

with the potential evaluated at the midpoint time of the step.
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
import scipy.fft as sfft

from . import diagnostics
from .phase_space import WignerField, PhaseSpaceGrid, edge_ratio, moments, purity
from .potentials import PotentialSpec

log = logging.getLogger(__name__)

__all__ = [
    "EnvironmentParams",
    "Bracket",
    "EvolutionConfig",
    "TimestepTooLargeError",
    "SupportExceedsGridError",
    "NumericalIntegrityError",
    "Propagator",
    "RunRecord",
    "kinetic_step",
    "potential_step",
    "diffusion_step",
    "friction_step",
    "step",
    "run",
    "max_stable_dt",
    "chord_transform",
]


class TimestepTooLargeError(ValueError):
    """The potential kernel phase would alias across one chord sample."""


class SupportExceedsGridError(RuntimeError):
    pass


class NumericalIntegrityError(RuntimeError):
    """Raised when a run breaches an invariant; carries the partial record."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


@dataclass(frozen=True)
class EnvironmentParams:
    """High-temperature bath. ``diffusion`` overrides D = 2 m gamma kT and needs gamma = 0."""

    gamma: float = 0.0
    temperature: float = 1.0
    mass: float = 1.0
    hbar: float = 1.0
    diffusion: Optional[float] = None

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if not self.temperature > 0:
            raise ValueError("temperature must be > 0")
        if not self.mass > 0:
            raise ValueError("mass must be > 0")
        if not self.hbar > 0:
            raise ValueError("hbar must be > 0")
        if self.diffusion is not None:
            if self.gamma != 0:
                raise ValueError(
                    "a direct diffusion override is only allowed with gamma = 0 "
                    "(the reversible classical limit); otherwise D = 2 m gamma kT"
                )
            if self.diffusion < 0:
                raise ValueError("diffusion must be >= 0")

    @classmethod
    def reversible(cls, diffusion: float, mass: float = 1.0, hbar: float = 1.0, temperature: float = 1.0):
        return cls(0.0, temperature, mass, hbar, diffusion)

    @property
    def D(self) -> float:
        if self.diffusion is not None:
            return float(self.diffusion)
        return 2 * self.mass * self.gamma * self.temperature

    @property
    def tau_R(self) -> float:
        return math.inf if self.gamma == 0 else 1.0 / self.gamma

    @property
    def lambda_dB(self) -> float:
        return math.sqrt(self.hbar**2 / (2 * self.mass * self.temperature))


_TRUNC = re.compile(r"^truncated\((\d+)\)$")


@dataclass(frozen=True)
class Bracket:
    """Potential kernel: exact Moyal, Poisson (gradient only) or truncated at hbar^(2n)."""

    kind: str = "moyal_exact"
    n_max: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("moyal_exact", "poisson", "truncated"):
            raise ValueError(f"unknown bracket mode {self.kind!r}")
        if self.kind == "truncated" and (self.n_max is None or self.n_max < 1):
            raise ValueError("truncated mode needs n_max >= 1")

    @classmethod
    def parse(cls, value) -> "Bracket":
        if isinstance(value, Bracket):
            return value
        text = str(value).strip()
        m = _TRUNC.match(text)
        if m:
            return cls("truncated", int(m.group(1)))
        return cls(text)

    @property
    def series_order(self) -> Optional[int]:
        return {"moyal_exact": None, "poisson": 0}.get(self.kind, self.n_max)

    def __str__(self):
        return f"truncated({self.n_max})" if self.kind == "truncated" else self.kind


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    t_max: float
    bracket: Bracket = Bracket()
    friction: bool = False
    snapshot_stride: int = 0
    diagnostics_stride: int = 10
    track_entropy: bool = True
    edge_tol: float = 1e-5
    norm_tol: float = 1e-4

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if self.t_max < 0:
            raise ValueError("t_max must be >= 0")
        if self.diagnostics_stride < 1:
            raise ValueError("diagnostics_stride must be >= 1")
        object.__setattr__(self, "bracket", Bracket.parse(self.bracket))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))


def chord_transform(w: WignerField) -> np.ndarray:
    """C(x_k, y_m) = sum_n W(x_k, p_n) exp(i p_n y_m / hbar) dp on the fft chord grid."""
    g = w.grid
    m = sfft.fftfreq(g.np, 1.0 / g.np)
    y = m * g.dy
    c = g.dp * g.np * sfft.ifft(w.values, axis=1)
    return c * np.exp(1j * g.p_extent[0] * y / g.hbar)[None, :]


def _valid_chords(grid: PhaseSpaceGrid, y: np.ndarray) -> np.ndarray:
    x = grid.x[:, None]
    lo, hi = grid.x_extent
    return (x + 0.5 * np.abs(y)[None, :] <= hi) & (x - 0.5 * np.abs(y)[None, :] >= lo)


def _kernel_phase(spec: PotentialSpec, grid: PhaseSpaceGrid, bracket: Bracket, t: float, y: np.ndarray):
    """V(x+y/2) - V(x-y/2) (or its truncation) over (x, y), without the dt/hbar factor."""
    x = grid.x[:, None]
    phi = spec.chord_difference(x, y[None, :], t, bracket.series_order)
    return np.broadcast_to(phi, (grid.nx, y.size)).astype(float)


def _phase_rate_bound(spec, grid, bracket) -> float:
    """Largest change of the kernel phase between neighbouring chord samples, per unit dt/hbar."""
    y = grid.dy * np.arange(grid.np // 2 + 1)
    static = PotentialSpec(spec.coefficients, mass=spec.mass)
    phi = _kernel_phase(static, grid, bracket, 0.0, y)
    valid = _valid_chords(grid, y)
    jump = np.abs(np.diff(phi, axis=1))
    ok = valid[:, 1:] & valid[:, :-1]
    worst = float(jump[ok].max()) if ok.any() else 0.0
    return worst + abs(spec.drive_amplitude) * grid.dy


def max_stable_dt(spec: PotentialSpec, grid: PhaseSpaceGrid, bracket=Bracket(), margin: float = 4.0) -> float:
    """Largest dt keeping the kernel phase step below pi/margin per chord sample."""
    rate = _phase_rate_bound(spec, grid, Bracket.parse(bracket))
    if rate == 0:
        return math.inf
    return math.pi * grid.hbar / (margin * rate)


def _check_aliasing(spec, grid, bracket, dt):
    bound = _phase_rate_bound(spec, grid, bracket) * dt / grid.hbar
    if bound > math.pi:
        raise TimestepTooLargeError(
            f"kernel phase changes by {bound:.3g} rad between chord samples (> pi); "
            f"reduce dt below {max_stable_dt(spec, grid, bracket, 1.0):.3g}"
        )


def _ou_chord(R, W, grid, gamma, D, dt):
    """Exact friction + diffusion on rfft-chord data R of field W.

    Along characteristics of dC/dt = -2 gamma y dC/dy - D y^2 C / hbar^2:
    C(y, dt) = C(y exp(-2 gamma dt), 0) exp(-D y^2 (1 - exp(-4 gamma dt)) / (4 gamma hbar^2)).
    """
    y = grid.y_rfft
    hbar = grid.hbar
    if gamma == 0:
        return R * np.exp(-D * y**2 * dt / hbar**2)[None, :]
    s = math.exp(-2 * gamma * dt)
    p = grid.p
    # chord values at the contracted chords, straight from the momentum samples
    E = np.exp(1j * np.outer(p, y * s) / hbar) * grid.dp
    C = W @ E
    R_new = C * (np.exp(-1j * grid.p_extent[0] * y / hbar) / grid.dp)[None, :]
    width = (1 - math.exp(-4 * gamma * dt)) / (4 * gamma)
    return R_new * np.exp(-D * y**2 * width / hbar**2)[None, :]


class Propagator:
    """Caches the kernels for one (grid, potential, environment, dt, bracket) set."""

    def __init__(self, grid: PhaseSpaceGrid, spec: PotentialSpec, env: EnvironmentParams, dt: float,
                 bracket=Bracket(), friction: bool = False, check: bool = True):
        if abs(env.hbar - grid.hbar) > 1e-12 * grid.hbar:
            raise ValueError("environment hbar differs from the grid hbar")
        self.grid = grid
        self.spec = spec
        self.env = env
        self.dt = float(dt)
        self.bracket = Bracket.parse(bracket)
        self.friction = bool(friction) and env.gamma > 0
        if check:
            _check_aliasing(spec, grid, self.bracket, self.dt)
        hbar = grid.hbar
        y = grid.y_rfft
        static = PotentialSpec(spec.coefficients, mass=spec.mass)
        self._static_half = np.exp(-0.5j * self.dt / hbar * _kernel_phase(static, grid, self.bracket, 0.0, y))
        self._drive_y = y * self.dt / hbar
        self._diff = np.exp(-env.D * y**2 * self.dt / hbar**2)
        kp = grid.k[:, None] * grid.p[None, :] / spec.mass
        self._kin_half = np.exp(-0.5j * kp * self.dt)
        self._kin_full = self._kin_half**2

    def _potential_half(self, t):
        if not self.spec.driven:
            return self._static_half
        a = self.spec.drive(t)
        return self._static_half * np.exp(-0.5j * a * self._drive_y)[None, :]

    def kinetic(self, W, full=False):
        R = sfft.rfft(W, axis=0)
        R *= self._kin_full if full else self._kin_half
        return sfft.irfft(R, n=self.grid.nx, axis=0)

    def chord_block(self, W, t):
        """V(dt/2) [diffusion + friction](dt) V(dt/2) at the step midpoint t + dt/2."""
        tm = t + 0.5 * self.dt
        vh = self._potential_half(tm)
        R = sfft.rfft(W, axis=1)
        if self.friction:
            R *= vh
            W1 = sfft.irfft(R, n=self.grid.np, axis=1)
            R = _ou_chord(R, W1, self.grid, self.env.gamma, self.env.D, self.dt)
            R *= vh
        else:
            R *= vh * vh * self._diff[None, :]
        return sfft.irfft(R, n=self.grid.np, axis=1)

    def step(self, W, t):
        W = self.kinetic(W)
        W = self.chord_block(W, t)
        return self.kinetic(W)

    def advance(self, W, t, n):
        """n Strang steps with the interior kinetic halves fused."""
        if n <= 0:
            return W
        W = self.kinetic(W)
        for i in range(n):
            W = self.chord_block(W, t + i * self.dt)
            W = self.kinetic(W, full=i < n - 1)
        return W


def kinetic_step(w: WignerField, dt: float, mass: float = 1.0) -> WignerField:
    """Free streaming x -> x + p dt / m, exact in the (k, p) representation."""
    g = w.grid
    R = sfft.rfft(w.values, axis=0)
    R *= np.exp(-1j * g.k[:, None] * g.p[None, :] * dt / mass)
    return w.replace(sfft.irfft(R, n=g.nx, axis=0))


def potential_step(w: WignerField, spec: PotentialSpec, dt: float, mode="moyal_exact", t: float = 0.0) -> WignerField:
    g = w.grid
    bracket = Bracket.parse(mode)
    _check_aliasing(spec, g, bracket, dt)
    phase = _kernel_phase(spec, g, bracket, t, g.y_rfft)
    R = sfft.rfft(w.values, axis=1) * np.exp(-1j * phase * dt / g.hbar)
    return w.replace(sfft.irfft(R, n=g.np, axis=1))


def diffusion_step(w: WignerField, env: EnvironmentParams, dt: float) -> WignerField:
    """Exact solution of dW/dt = D d_pp W: chords attenuate by exp(-D y^2 dt / hbar^2)."""
    g = w.grid
    R = sfft.rfft(w.values, axis=1) * np.exp(-env.D * g.y_rfft**2 * dt / g.hbar**2)[None, :]
    return w.replace(sfft.irfft(R, n=g.np, axis=1))


def friction_step(w: WignerField, env: EnvironmentParams, dt: float) -> WignerField:
    """W(x, p) <- exp(2 gamma dt) W(x, p exp(2 gamma dt)), by chord rescaling."""
    if env.gamma == 0 or dt == 0:
        return w
    g = w.grid
    s = math.exp(-2 * env.gamma * dt)
    if s > 1.0:
        # support widens by s; weight mapped past the momentum edge would alias
        lo, hi = g.p_extent[0], g.p_extent[1] - g.dp
        outside = (g.p * s < lo) | (g.p * s > hi)
        lost = np.abs(w.values[:, outside]).sum() * g.cell
        if lost > 1e-8 * max(abs(w.norm()), 1e-300):
            raise SupportExceedsGridError(f"friction rescaling moves weight {lost:.3g} off the momentum grid")
    R = sfft.rfft(w.values, axis=1)
    R = _ou_chord(R, w.values, g, env.gamma, 0.0, dt)
    out = sfft.irfft(R, n=g.np, axis=1)
    return w.replace(out)


def step(w: WignerField, spec: PotentialSpec, env: EnvironmentParams, config: EvolutionConfig) -> WignerField:
    prop = Propagator(w.grid, spec, env, config.dt, config.bracket, config.friction)
    return w.replace(prop.step(w.values, w.time), w.time + config.dt)


@dataclass
class RunRecord:
    times: List[float] = field(default_factory=list)
    norm: List[float] = field(default_factory=list)
    purity: List[float] = field(default_factory=list)
    linear_entropy: List[float] = field(default_factory=list)
    von_neumann: List[float] = field(default_factory=list)
    mean_x: List[float] = field(default_factory=list)
    mean_p: List[float] = field(default_factory=list)
    var_x: List[float] = field(default_factory=list)
    var_p: List[float] = field(default_factory=list)
    cov_xp: List[float] = field(default_factory=list)
    edge: List[float] = field(default_factory=list)
    snapshots: List[tuple] = field(default_factory=list)
    final: Optional[WignerField] = None
    aborted: Optional[str] = None

    COLUMNS = ("t", "norm", "purity", "linear_entropy", "von_neumann",
               "mean_x", "mean_p", "var_x", "var_p", "cov_xp", "edge")

    def rows(self):
        cols = (self.times, self.norm, self.purity, self.linear_entropy, self.von_neumann,
                self.mean_x, self.mean_p, self.var_x, self.var_p, self.cov_xp, self.edge)
        return list(zip(*cols))

    def array(self, name) -> np.ndarray:
        return np.asarray(getattr(self, "times" if name == "t" else name), dtype=float)

    def entropy_series(self) -> "diagnostics.EntropySeries":
        return diagnostics.EntropySeries(
            np.asarray(self.times), np.asarray(self.linear_entropy), np.asarray(self.von_neumann)
        )


def _sample(rec: RunRecord, w: WignerField, track_entropy: bool):
    # compute everything before appending so a failed check leaves no partial row
    mom = moments(w)
    pur = purity(w)
    vn = diagnostics.von_neumann_entropy(w) if track_entropy else math.nan
    cov = mom["covariance"]
    rec.times.append(w.time)
    rec.norm.append(w.norm())
    rec.purity.append(pur)
    rec.linear_entropy.append(-math.log(pur) if pur > 0 else math.inf)
    rec.von_neumann.append(vn)
    rec.mean_x.append(mom["mean_x"])
    rec.mean_p.append(mom["mean_p"])
    rec.var_x.append(float(cov[0, 0]))
    rec.var_p.append(float(cov[1, 1]))
    rec.cov_xp.append(float(cov[0, 1]))
    rec.edge.append(edge_ratio(w))


def run(
    initial: WignerField,
    spec: PotentialSpec,
    env: EnvironmentParams,
    config: EvolutionConfig,
    observers: Sequence[Callable[[WignerField], None]] = (),
    snapshot_writer: Optional[Callable[[WignerField, int], str]] = None,
) -> RunRecord:
    """Iterate :func:`step` to ``config.t_max`` sampling diagnostics every stride.

    Aborts with :class:`NumericalIntegrityError` on NaN, norm drift beyond
    ``norm_tol`` or weight reaching the grid edges (the grid is periodic, so
    leakage would silently wrap around).
    """
    prop = Propagator(initial.grid, spec, env, config.dt, config.bracket, config.friction)
    rec = RunRecord()
    n_total = config.n_steps
    norm0 = initial.norm()
    w = initial
    _sample(rec, w, config.track_entropy)
    for obs in observers:
        obs(w)
    if config.snapshot_stride and snapshot_writer is not None:
        rec.snapshots.append((w.time, snapshot_writer(w, 0)))

    stride = config.diagnostics_stride
    snap = config.snapshot_stride
    done = 0
    while done < n_total:
        chunk = min(stride - done % stride, n_total - done)
        if snap:
            chunk = min(chunk, snap - done % snap)
        W = prop.advance(w.values, w.time, chunk)
        done += chunk
        w = WignerField(initial.grid, W, initial.time + done * config.dt)

        problem = None
        if not np.all(np.isfinite(W)):
            problem = "non-finite Wigner values"
        elif abs(w.norm() - norm0) > config.norm_tol * abs(norm0):
            problem = f"norm drift {w.norm() - norm0:.3e} exceeds {config.norm_tol:g}"
        elif edge_ratio(w) > config.edge_tol:
            problem = f"state reached the grid edge (edge/peak = {edge_ratio(w):.2e} > {config.edge_tol:g})"
        if problem:
            rec.aborted = f"t = {w.time:.6g}: {problem}"
            rec.final = w
            log.error("run aborted at %s", rec.aborted)
            raise NumericalIntegrityError(rec.aborted, rec)

        if done % stride == 0 or done == n_total:
            try:
                _sample(rec, w, config.track_entropy)
            except diagnostics.PropagatorIntegrityError as e:
                rec.aborted = f"t = {w.time:.6g}: {e}"
                rec.final = w
                log.error("run aborted at %s", rec.aborted)
                raise NumericalIntegrityError(rec.aborted, rec) from e
            for obs in observers:
                obs(w)
        if snap and snapshot_writer is not None and done % snap == 0:
            rec.snapshots.append((w.time, snapshot_writer(w, done)))
    rec.final = w
    return rec
