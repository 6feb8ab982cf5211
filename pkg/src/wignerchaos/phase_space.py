"""Phase-space grids, Gaussian and cat states, and the Weyl transform pair.

Conventions
-----------
Samples sit at ``x_k = x_min + k*dx`` and ``p_n = p_min + n*dp`` (the upper
extents are excluded; the grid is periodic).  The chord function is

    C(X, Y) = rho(X + Y/2, X - Y/2) = sum_n W(X, p_n) exp(i p_n Y / hbar) dp

so that a p -> y FFT of a Wigner field gives the off-diagonal density matrix
directly.  Exact Wigner <-> density-matrix transforms need the momentum
extent to be conjugate to *twice* the position spacing,
``p_max - p_min = pi*hbar/dx``; such grids are called Weyl-matched and are
what :class:`PhaseSpaceGrid` builds when ``p_extent`` is omitted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridError",
    "StateOutsideGridError",
    "IllegalCovarianceError",
    "FringeUndersampledError",
    "GridMismatchError",
    "PhaseSpaceGrid",
    "WignerField",
    "DensityMatrix",
    "GaussianSpec",
    "make_gaussian",
    "make_cat",
    "wigner_to_density",
    "density_to_wigner",
    "moments",
    "purity",
    "marginals",
    "edge_ratio",
]

EDGE_TOL = 1e-7


class GridError(ValueError):
    pass


class StateOutsideGridError(GridError):
    pass


class IllegalCovarianceError(ValueError):
    pass


class FringeUndersampledError(GridError):
    pass


class GridMismatchError(GridError):
    pass


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Uniform periodic (x, p) grid.

    ``p_extent=None`` selects the Weyl-matched momentum range centred on zero.
    """

    nx: int
    np: int
    x_extent: Tuple[float, float]
    p_extent: Optional[Tuple[float, float]] = None
    hbar: float = 1.0

    def __post_init__(self):
        if not (_is_pow2(self.nx) and self.nx >= 32):
            raise GridError(f"nx must be a power of two >= 32, got {self.nx}")
        if not (_is_pow2(self.np) and self.np >= 32):
            raise GridError(f"np must be a power of two >= 32, got {self.np}")
        if not self.hbar > 0:
            raise GridError("hbar must be positive")
        x0, x1 = (float(v) for v in self.x_extent)
        if not x1 > x0:
            raise GridError("x_max must exceed x_min")
        object.__setattr__(self, "x_extent", (x0, x1))
        if self.p_extent is None:
            half = 0.5 * math.pi * self.hbar * self.nx / (x1 - x0)
            object.__setattr__(self, "p_extent", (-half, half))
        else:
            p0, p1 = (float(v) for v in self.p_extent)
            if not p1 > p0:
                raise GridError("p_max must exceed p_min")
            object.__setattr__(self, "p_extent", (p0, p1))
        # the potential kernel V(x +- y/2) has to be evaluable over the x extent
        if self.nx * self.dy < self.length * (1 - 1e-12):
            raise GridError(
                "chord grid too short: nx * 2*pi*hbar/(p_max - p_min) must cover the x extent"
            )

    @property
    def length(self) -> float:
        return self.x_extent[1] - self.x_extent[0]

    @property
    def p_range(self) -> float:
        return self.p_extent[1] - self.p_extent[0]

    @property
    def dx(self) -> float:
        return self.length / self.nx

    @property
    def dp(self) -> float:
        return self.p_range / self.np

    @property
    def dy(self) -> float:
        """Chord spacing conjugate to the momentum axis."""
        return 2 * math.pi * self.hbar / self.p_range

    @property
    def x(self) -> np.ndarray:
        return self.x_extent[0] + self.dx * np.arange(self.nx)

    @property
    def p(self) -> np.ndarray:
        return self.p_extent[0] + self.dp * np.arange(self.np)

    @property
    def k(self) -> np.ndarray:
        """Angular wavenumbers of an rfft along x."""
        return 2 * math.pi * sfft.rfftfreq(self.nx, self.dx)

    @property
    def y_rfft(self) -> np.ndarray:
        """Chord values matching ``rfft(W, axis=1)``.

        rfft uses exp(-2 pi i n m / np), which is the chord convention evaluated
        at -y, hence the sign.
        """
        return -self.dy * np.arange(self.np // 2 + 1)

    @property
    def cell(self) -> float:
        return self.dx * self.dp

    @property
    def weyl_matched(self) -> bool:
        return abs(self.p_range * self.dx - math.pi * self.hbar) <= 1e-9 * math.pi * self.hbar

    def mesh(self):
        return np.meshgrid(self.x, self.p, indexing="ij")

    def with_hbar(self, hbar: float) -> "PhaseSpaceGrid":
        return PhaseSpaceGrid(self.nx, self.np, self.x_extent, None, hbar)


@dataclass(frozen=True, eq=False)
class WignerField:
    """Real Wigner function sampled on ``grid``; ``values[ix, ip]``."""

    grid: PhaseSpaceGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise TypeError("Wigner values must be real")
        if v.shape != (self.grid.nx, self.grid.np):
            raise GridMismatchError(
                f"values shape {v.shape} does not match grid ({self.grid.nx}, {self.grid.np})"
            )
        v = np.array(v, dtype=np.float64, copy=True)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "time", float(self.time))

    def norm(self) -> float:
        return float(self.values.sum() * self.grid.cell)

    def normalized(self) -> "WignerField":
        return WignerField(self.grid, self.values / self.norm(), self.time)

    def replace(self, values=None, time=None) -> "WignerField":
        return WignerField(
            self.grid,
            self.values if values is None else values,
            self.time if time is None else time,
        )


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Position-representation kernel ``values[i, j] = rho(x_i, x_j)``.

    The operator matrix acting on grid vectors is ``values * dx``.
    """

    values: np.ndarray
    dx: float
    hbar: float = 1.0

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def operator(self) -> np.ndarray:
        return self.values * self.dx

    def trace(self) -> float:
        return float(np.real(np.trace(self.values)) * self.dx)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.values - self.values.conj().T)) * self.dx)

    def eigenvalues(self) -> np.ndarray:
        """Ascending spectrum of the operator."""
        a = self.operator
        return np.linalg.eigvalsh(0.5 * (a + a.conj().T))

    @classmethod
    def from_pure(cls, psi, dx, hbar=1.0) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / math.sqrt(np.sum(np.abs(psi) ** 2) * dx)
        return cls(np.outer(psi, psi.conj()), dx, hbar)


@dataclass(frozen=True)
class GaussianSpec:
    x0: float = 0.0
    p0: float = 0.0
    sigma_x: float = 1.0
    sigma_p: float = 1.0
    xp_correlation: float = 0.0

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_p > 0):
            raise IllegalCovarianceError("sigma_x and sigma_p must be positive")

    @property
    def covariance(self) -> np.ndarray:
        c = self.xp_correlation
        return np.array([[self.sigma_x**2, c], [c, self.sigma_p**2]])

    @property
    def determinant(self) -> float:
        return self.sigma_x**2 * self.sigma_p**2 - self.xp_correlation**2

    def purity(self, hbar: float = 1.0) -> float:
        return hbar / (2 * math.sqrt(self.determinant))

    def is_pure(self, hbar: float = 1.0) -> bool:
        return abs(math.sqrt(self.determinant) - hbar / 2) <= 1e-9

    def check_legal(self, hbar: float = 1.0):
        if self.determinant < (hbar / 2) ** 2 * (1 - 1e-12):
            raise IllegalCovarianceError(
                f"covariance determinant {self.determinant:.3g} violates the (hbar/2)^2 = "
                f"{(hbar / 2) ** 2:.3g} bound"
            )


def _check_inside(grid: PhaseSpaceGrid, x0, p0, sx, sp, what="state"):
    lo_x, hi_x = grid.x_extent
    lo_p, hi_p = grid.p_extent
    # the last sample sits one spacing below the upper extent
    hi_x -= grid.dx
    hi_p -= grid.dp
    if x0 - 6 * sx < lo_x or x0 + 6 * sx > hi_x or p0 - 6 * sp < lo_p or p0 + 6 * sp > hi_p:
        raise StateOutsideGridError(
            f"{what} at ({x0:g}, {p0:g}) with widths ({sx:g}, {sp:g}) does not fit +-6 sigma "
            f"inside x {grid.x_extent}, p {grid.p_extent}"
        )


def _gaussian_values(spec: GaussianSpec, grid: PhaseSpaceGrid, x_shift=0.0) -> np.ndarray:
    X, P = grid.mesh()
    dx = X - (spec.x0 + x_shift)
    dp = P - spec.p0
    cov = spec.covariance
    inv = np.linalg.inv(cov)
    q = inv[0, 0] * dx * dx + 2 * inv[0, 1] * dx * dp + inv[1, 1] * dp * dp
    return np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(spec.determinant))


def make_gaussian(spec: GaussianSpec, grid: PhaseSpaceGrid, time: float = 0.0) -> WignerField:
    spec.check_legal(grid.hbar)
    _check_inside(grid, spec.x0, spec.p0, spec.sigma_x, spec.sigma_p)
    w = WignerField(grid, _gaussian_values(spec, grid), time)
    return w.normalized()


def make_cat(x_sep: float, base: GaussianSpec, grid: PhaseSpaceGrid, time: float = 0.0) -> WignerField:
    """Equal superposition of ``base`` displaced by +-x_sep/2 in position.

    The interference term of two translated copies of one state is the
    unshifted Wigner function times cos(p*x_sep/hbar), which holds for any
    base Gaussian (pure or not).
    """
    base.check_legal(grid.hbar)
    a = 0.5 * x_sep
    for s in (-a, a):
        _check_inside(grid, base.x0 + s, base.p0, base.sigma_x, base.sigma_p, what="cat lobe")
    if x_sep != 0:
        wavelength = 2 * math.pi * grid.hbar / abs(x_sep)
        if wavelength < 4 * grid.dp:
            raise FringeUndersampledError(
                f"fringe wavelength {wavelength:.4g} is below 4 momentum spacings ({4 * grid.dp:.4g})"
            )
    lobes = _gaussian_values(base, grid, -a) + _gaussian_values(base, grid, a)
    p = grid.p[None, :]
    fringe = 2 * np.cos(p * x_sep / grid.hbar) * _gaussian_values(base, grid)
    return WignerField(grid, lobes + fringe, time).normalized()


def _require_weyl(grid: PhaseSpaceGrid):
    if not grid.weyl_matched:
        raise GridMismatchError(
            "density-matrix transforms need a Weyl-matched grid (p_max - p_min = pi*hbar/dx); "
            "build the grid with p_extent=None"
        )


def _half_shift_x(values: np.ndarray, dx: float) -> np.ndarray:
    """Band-limited interpolation to x + dx/2 along axis 0."""
    n = values.shape[0]
    k = 2 * math.pi * sfft.fftfreq(n, dx)
    spec = sfft.fft(values, axis=0) * np.exp(0.5j * k * dx)[:, None]
    return np.real(sfft.ifft(spec, axis=0))


def _chord_indices(nx: int, np_: int):
    i, j = np.indices((nx, nx))
    diff = i - j
    odd = (diff & 1).astype(bool)
    m = np.where(odd, (diff - 1) // 2, diff // 2)
    k = np.where(odd, (i + j - 1) // 2, (i + j) // 2)
    valid = (m >= -(np_ // 2)) & (m < np_ // 2)
    return i, j, odd, k, m, valid


def wigner_to_density(w: WignerField) -> DensityMatrix:
    """Inverse Weyl transform onto the position grid.

    Even index differences use W on the grid columns; odd ones need W at
    half-integer positions, obtained by spectral interpolation in x.
    """
    g = w.grid
    _require_weyl(g)
    nx, np_ = g.nx, g.np
    W = w.values
    n = np.arange(np_)
    m_all = sfft.fftfreq(np_, 1.0 / np_).astype(int)  # signed chord index per fft bin

    scale = g.dp * np_
    c_even = scale * sfft.ifft(W, axis=1)
    c_even *= np.exp(1j * g.p_extent[0] * 2 * m_all * g.dx / g.hbar)[None, :]

    Wh = _half_shift_x(W, g.dx)
    c_odd = scale * sfft.ifft(Wh * np.exp(1j * math.pi * n / np_)[None, :], axis=1)
    c_odd *= np.exp(1j * g.p_extent[0] * (2 * m_all + 1) * g.dx / g.hbar)[None, :]

    i, j, odd, k, m, valid = _chord_indices(nx, np_)
    col = np.mod(m, np_)
    rho = np.where(odd, c_odd[k, col], c_even[np.minimum(k, nx - 1), col])
    rho = np.where(valid, rho, 0.0)
    return DensityMatrix(rho, g.dx, g.hbar)


def density_to_wigner(rho: DensityMatrix, grid: PhaseSpaceGrid, time: float = 0.0) -> WignerField:
    """Forward Weyl transform; exact inverse of :func:`wigner_to_density`."""
    _require_weyl(grid)
    nx, np_ = grid.nx, grid.np
    if rho.n != nx or abs(rho.dx - grid.dx) > 1e-12 * grid.dx or abs(rho.hbar - grid.hbar) > 1e-12:
        raise GridMismatchError("density matrix does not live on this grid")
    kk = np.arange(nx)[:, None]
    m_all = sfft.fftfreq(np_, 1.0 / np_).astype(int)[None, :]
    a = kk + m_all
    b = kk - m_all
    ok = (a >= 0) & (a < nx) & (b >= 0) & (b < nx)
    G = np.where(ok, rho.values[np.clip(a, 0, nx - 1), np.clip(b, 0, nx - 1)], 0.0)
    G = G * np.exp(-1j * grid.p_extent[0] * 2 * m_all * grid.dx / grid.hbar)
    W = np.real(sfft.fft(G, axis=1)) * grid.dx / (math.pi * grid.hbar)
    return WignerField(grid, W, time)


def moments(w: WignerField):
    """Mean position, mean momentum and the 2x2 covariance matrix by quadrature."""
    g = w.grid
    W = w.values
    cell = g.cell
    norm = W.sum() * cell
    x = g.x[:, None]
    p = g.p[None, :]
    mx = float((W * x).sum() * cell / norm)
    mp = float((W * p).sum() * cell / norm)
    vxx = (W * (x - mx) ** 2).sum() * cell / norm
    vpp = (W * (p - mp) ** 2).sum() * cell / norm
    vxp = (W * (x - mx) * (p - mp)).sum() * cell / norm
    cov = np.array([[vxx, vxp], [vxp, vpp]])
    return {"mean_x": mx, "mean_p": mp, "covariance": cov}


def purity(w: WignerField) -> float:
    g = w.grid
    return float(2 * math.pi * g.hbar * np.sum(w.values**2) * g.cell)


def marginals(w: WignerField):
    """Position and momentum probability densities, ``(P(x), P(p))``."""
    g = w.grid
    return w.values.sum(axis=1) * g.dp, w.values.sum(axis=0) * g.dx


def edge_ratio(w: WignerField) -> float:
    """Largest |W| on the outermost rows/columns relative to the peak."""
    v = np.abs(w.values)
    edge = max(v[0].max(), v[-1].max(), v[:, 0].max(), v[:, -1].max())
    return float(edge / v.max())
