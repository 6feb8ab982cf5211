"""Entropy measures, production-rate estimation, closed-form timescales and the
chaotic/regular classifier.

All entropies are in nats.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

import numpy as np

from .phase_space import WignerField, purity, wigner_to_density

__all__ = [
    "PropagatorIntegrityError",
    "WindowTooShortError",
    "SaturationBeforeWindowError",
    "EntropySeries",
    "RateSeries",
    "TimescaleReport",
    "FitConfig",
    "ChaosVerdict",
    "linear_entropy",
    "von_neumann_entropy",
    "spectrum_entropy",
    "entropy_rate",
    "critical_dispersion",
    "coherence_length",
    "decoherence_time",
    "ehrenfest_time",
    "equilibration_time",
    "hdot_model",
    "hdot_model_entropy",
    "timescale_report",
    "classify",
]

NEG_EIG_TOL = 1e-8
EIG_FLOOR = 1e-15


class PropagatorIntegrityError(RuntimeError):
    """Density-matrix spectrum is more negative than numerical noise allows."""


class WindowTooShortError(ValueError):
    pass


class SaturationBeforeWindowError(ValueError):
    pass


def linear_entropy(w: WignerField) -> float:
    """-ln(2 pi hbar int W^2); the order-2 Renyi entropy."""
    return -math.log(purity(w))


def spectrum_entropy(eigenvalues) -> float:
    ev = np.asarray(eigenvalues, dtype=float)
    if ev.min() < -NEG_EIG_TOL:
        raise PropagatorIntegrityError(
            f"density matrix eigenvalue {ev.min():.3e} below -{NEG_EIG_TOL:g}"
        )
    ev = np.clip(ev, 0.0, None)
    ev = ev[ev > EIG_FLOOR]
    return float(-np.sum(ev * np.log(ev)))


def von_neumann_entropy(w: WignerField) -> float:
    return spectrum_entropy(wigner_to_density(w).eigenvalues())


@dataclass
class RateSeries:
    times: np.ndarray
    rates: np.ndarray
    one_sided: np.ndarray
    window: float


@dataclass
class EntropySeries:
    times: np.ndarray
    linear_entropy: np.ndarray
    von_neumann: np.ndarray
    rate_estimates: Optional[RateSeries] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.linear_entropy = np.asarray(self.linear_entropy, dtype=float)
        self.von_neumann = np.asarray(self.von_neumann, dtype=float)
        n = self.times.size
        if self.linear_entropy.size != n or self.von_neumann.size != n:
            raise ValueError("entropy series lengths differ")

    @property
    def H0(self) -> float:
        return float(self.von_neumann[0])

    def rescaled(self, factor: float) -> "EntropySeries":
        """Same series in time units ``factor`` times larger."""
        return EntropySeries(self.times * factor, self.linear_entropy, self.von_neumann)


def entropy_rate(series, smoothing_window: float, which: str = "von_neumann") -> RateSeries:
    """Centered differences of H over ``smoothing_window``; edges one-sided and flagged.

    ``series`` is an :class:`EntropySeries` or a ``(times, H)`` pair.
    """
    if isinstance(series, EntropySeries):
        t = series.times
        H = getattr(series, which)
    else:
        t, H = (np.asarray(a, dtype=float) for a in series)
    n = t.size
    if n < 3:
        raise WindowTooShortError("need at least three samples for a rate")
    dt = float(np.median(np.diff(t)))
    h = max(1, int(round(0.5 * smoothing_window / dt)))
    h = min(h, (n - 1) // 2)
    idx = np.arange(n)
    lo = idx - h
    hi = idx + h
    one_sided = (lo < 0) | (hi >= n)
    lo = np.where(lo < 0, idx, lo)
    hi = np.where(hi >= n, idx, hi)
    rates = (H[hi] - H[lo]) / (t[hi] - t[lo])
    return RateSeries(t.copy(), rates, one_sided, 2 * h * dt)


def critical_dispersion(env_or_D, lambda_minus: float) -> Optional[float]:
    """sqrt(2 D / |lambda^-|); ``None`` for lambda^- = 0 (no steady width)."""
    D = getattr(env_or_D, "D", env_or_D)
    if lambda_minus == 0:
        return None
    return math.sqrt(2 * D / abs(lambda_minus))


def coherence_length(env_or_D, lambda_minus: float, hbar: Optional[float] = None) -> Optional[float]:
    if hbar is None:
        hbar = env_or_D.hbar
    sc = critical_dispersion(env_or_D, lambda_minus)
    if sc is None:
        return None
    return math.inf if sc == 0 else hbar / sc


def decoherence_time(env, delta_x: float) -> float:
    """hbar^2 / (D dx^2), cross-checked against tau_R (lambda_dB / dx)^2 when gamma > 0."""
    D = env.D
    direct = math.inf if D == 0 else env.hbar**2 / (D * delta_x**2)
    if env.gamma > 0 and env.diffusion is None:
        thermal = env.tau_R * (env.lambda_dB / delta_x) ** 2
        assert math.isclose(direct, thermal, rel_tol=1e-12), (direct, thermal)
    return direct


def ehrenfest_time(lambda_plus: float, chi: float, delta_p: float, hbar: float) -> float:
    """lambda^-1 ln(chi dp / hbar); the proportionality constant is taken as 1."""
    arg = chi * delta_p / hbar
    if arg < 1:
        raise ValueError(f"chi * delta_p / hbar = {arg:.3g} < 1: no logarithmic breakdown window")
    if lambda_plus <= 0:
        return math.inf
    return math.log(arg) / lambda_plus


def equilibration_time(H_eq: float, H_0: float, rate: float) -> dict:
    """Both readings: literal (H_eq/H_0)/rate and difference (H_eq - H_0)/rate."""
    if rate == 0:
        return {"literal": math.inf, "difference": math.inf}
    literal = math.inf if H_0 == 0 else (H_eq / H_0) / rate
    return {"literal": literal, "difference": (H_eq - H_0) / rate}


def hdot_model(lambda_plus, sigma_p0, sigma_c, t):
    r = (sigma_p0 / sigma_c) ** 2
    return lambda_plus / (1 + (r - 1) * np.exp(-2 * lambda_plus * np.asarray(t, dtype=float)))


def hdot_model_entropy(lambda_plus, sigma_p0, sigma_c, t):
    """Antiderivative of :func:`hdot_model` with value 0 at t = 0."""
    r = (sigma_p0 / sigma_c) ** 2
    t = np.asarray(t, dtype=float)
    return lambda_plus * t + 0.5 * np.log((1 + (r - 1) * np.exp(-2 * lambda_plus * t)) / r)


@dataclass
class TimescaleReport:
    delta_x: float
    tau_D: float
    tau_R: float
    chi: float
    delta_p: float
    t_chi: Optional[float]
    H_eq: Optional[float]
    H_0: Optional[float]
    rate: Optional[float]
    t_eq_literal: Optional[float]
    t_eq_difference: Optional[float]
    sigma_c: Optional[float]
    coherence_length: Optional[float]
    chi_1: float
    chi_1_min: float
    chi_over_l: Optional[float]
    hbar_over_chi_sigma_c: Optional[float]
    quantum_regime: Optional[bool]
    classical_regime: Optional[bool]
    margin: float = 10.0

    def as_dict(self):
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in asdict(self).items()}


def timescale_report(env, *, delta_x, chi, chi_min, delta_p, lambda_plus, lambda_minus,
                     H_eq=None, H_0=None, rate=None, margin=10.0) -> TimescaleReport:
    """Collect every closed-form scale for one scenario.

    The regime flags read "much less than" as a factor ``margin``.
    """
    sc = critical_dispersion(env, lambda_minus)
    ell = coherence_length(env, lambda_minus)
    try:
        tchi = ehrenfest_time(lambda_plus, chi, delta_p, env.hbar)
    except ValueError:
        tchi = None
    teq = equilibration_time(H_eq, H_0, rate) if None not in (H_eq, H_0, rate) else {}
    chi_over_l = None if ell is None else chi / ell
    cls_ratio = None if not sc else env.hbar / (chi * sc)
    return TimescaleReport(
        delta_x=delta_x,
        tau_D=decoherence_time(env, delta_x),
        tau_R=env.tau_R,
        chi=chi,
        delta_p=delta_p,
        t_chi=tchi,
        H_eq=H_eq,
        H_0=H_0,
        rate=rate,
        t_eq_literal=teq.get("literal"),
        t_eq_difference=teq.get("difference"),
        sigma_c=sc,
        coherence_length=ell,
        chi_1=chi,
        chi_1_min=chi_min,
        chi_over_l=chi_over_l,
        hbar_over_chi_sigma_c=cls_ratio,
        quantum_regime=None if chi_over_l is None else chi_over_l * margin < 1,
        classical_regime=None if cls_ratio is None else cls_ratio * margin < 1,
        margin=margin,
    )


@dataclass(frozen=True)
class FitConfig:
    smoothing_window: Optional[float] = None
    t_start: Optional[float] = None
    t_end: Optional[float] = None
    dynamical_time: Optional[float] = None
    min_dynamical_times: float = 5.0
    ratio_band: Tuple[float, float] = (0.5, 1.5)
    alpha_target: float = -1.0
    alpha_tol: float = 0.3
    alpha_min: float = 0.3
    improvement_ratio: float = 0.5
    constant_tol: float = 0.15
    saturation_fraction: float = 0.9
    plateau_tail: float = 0.1
    which: str = "von_neumann"

    def scaled(self, factor: float) -> "FitConfig":
        """The same configuration expressed in time units ``factor`` times larger."""
        kw = asdict(self)
        for name in ("smoothing_window", "t_start", "t_end", "dynamical_time"):
            if kw[name] is not None:
                kw[name] *= factor
        kw["ratio_band"] = tuple(kw["ratio_band"])
        return FitConfig(**kw)


@dataclass
class ChaosVerdict:
    classification: str
    plateau_rate: float
    plateau_residual: float
    decay_exponent: float
    decay_coefficient: float
    decay_residual: float
    fit_window: Tuple[float, float]
    lyapunov_reference: float
    plateau_ratio: float
    H_eq: float
    t_saturation: float
    smoothing_window: float
    notes: list = field(default_factory=list)

    def as_dict(self):
        d = asdict(self)
        d["fit_window"] = list(self.fit_window)
        return d


def _lambda_plus(spectrum) -> float:
    if spectrum is None:
        return math.nan
    if hasattr(spectrum, "exponents"):
        return float(spectrum.exponents[0])
    return float(spectrum)


def classify(series: EntropySeries, spectrum, fit_config: FitConfig = FitConfig()) -> ChaosVerdict:
    """Constant-rate versus power-law fit of the entropy production rate.

    The fit runs from the end of the transient to the time the entropy gets
    within ``1 - saturation_fraction`` of its late-time plateau.  Residuals are
    RMS deviations of ln(rate); the power law must cut that by
    ``improvement_ratio`` and carry a real exponent to win.
    """
    cfg = fit_config
    lam = _lambda_plus(spectrum)
    t = series.times
    H = getattr(series, cfg.which)
    span = float(t[-1] - t[0])
    if cfg.dynamical_time is not None:
        t_dyn = cfg.dynamical_time
    elif lam > 0 and math.isfinite(lam):
        t_dyn = 1.0 / lam
    else:
        t_dyn = span / 20
    window = cfg.smoothing_window or t_dyn
    rate = entropy_rate(series, window, cfg.which)

    n_tail = max(1, int(round(0.1 * t.size)))
    H_eq = float(np.mean(H[-n_tail:]))
    H0 = float(H[0])
    target = H0 + cfg.saturation_fraction * (H_eq - H0)
    reached = np.nonzero(H >= target)[0]
    t_sat = float(t[reached[0]]) if reached.size else float(t[-1])

    t0 = cfg.t_start if cfg.t_start is not None else float(t[0]) + 0.5 * rate.window + t_dyn
    t1 = cfg.t_end if cfg.t_end is not None else t_sat
    if t_sat <= t0:
        raise SaturationBeforeWindowError(
            f"entropy saturates at t = {t_sat:.4g}, before the fit window opens at {t0:.4g}"
        )
    t1 = min(t1, t_sat) if cfg.t_end is None else t1
    if t1 - t0 < cfg.min_dynamical_times * t_dyn:
        raise WindowTooShortError(
            f"fit window [{t0:.4g}, {t1:.4g}] is shorter than {cfg.min_dynamical_times:g} "
            f"dynamical times ({t_dyn:.4g} each)"
        )

    sel = (rate.times >= t0) & (rate.times <= t1) & ~rate.one_sided
    notes = []
    rt, rr = rate.times[sel], rate.rates[sel]
    positive = rr > 0
    if positive.sum() < 4:
        raise WindowTooShortError("fewer than four positive rate samples in the fit window")
    if not positive.all():
        notes.append(f"{(~positive).sum()} non-positive rate samples dropped")
    rt, rr = rt[positive], rr[positive]
    lr = np.log(rr)

    plateau = float(np.mean(rr))
    res_a = float(np.sqrt(np.mean((lr - lr.mean()) ** 2)))
    A = np.vstack([np.log(rt), np.ones_like(rt)]).T
    (alpha, lnc), *_ = np.linalg.lstsq(A, lr, rcond=None)
    res_b = float(np.sqrt(np.mean((lr - A @ np.array([alpha, lnc])) ** 2)))

    ratio = plateau / lam if lam > 0 else math.inf
    power_wins = res_b < cfg.improvement_ratio * res_a and abs(alpha) >= cfg.alpha_min
    constant_wins = not power_wins and res_a <= cfg.constant_tol

    n_last = max(2, int(round(cfg.plateau_tail * rr.size)))
    persists = bool(np.mean(rr[-n_last:]) >= 0.5 * plateau) and t1 >= t_sat - t_dyn
    if constant_wins:
        lo, hi = cfg.ratio_band
        if not (lo <= ratio <= hi):
            verdict = "inconclusive"
            notes.append(f"plateau/lambda = {ratio:.3g} outside [{lo:g}, {hi:g}]")
        elif not persists:
            verdict = "inconclusive"
            notes.append("plateau does not persist to saturation")
        else:
            verdict = "chaotic"
    elif power_wins:
        if abs(alpha - cfg.alpha_target) <= cfg.alpha_tol:
            verdict = "regular"
        else:
            verdict = "inconclusive"
            notes.append(f"power-law exponent {alpha:.3g} outside {cfg.alpha_target:g} +- {cfg.alpha_tol:g}")
    else:
        verdict = "inconclusive"
        notes.append("constant and power-law fits have comparable residuals")

    return ChaosVerdict(
        classification=verdict,
        plateau_rate=plateau,
        plateau_residual=res_a,
        decay_exponent=float(alpha),
        decay_coefficient=float(math.exp(lnc)),
        decay_residual=res_b,
        fit_window=(float(t0), float(t1)),
        lyapunov_reference=lam,
        plateau_ratio=ratio,
        H_eq=H_eq,
        t_saturation=t_sat,
        smoothing_window=rate.window,
        notes=notes,
    )
