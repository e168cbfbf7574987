"""Periodic grids, real/spectral fields, spectral calculus and discrete norms.

The continuum line is truncated to a periodic box [-L, L).  All transforms
use the unnormalized engineering FFT convention; normalization lives in the
norms and in the multiplier definitions, so physical statements do not
depend on the convention.
"""

import math

import numpy as np

from .errors import ConfigError, NumericsError

__all__ = [
    "GridSpec",
    "Field",
    "SpectralField",
    "make_grid",
    "to_spectral",
    "from_spectral",
    "derivative",
    "lp_norm",
    "smoothstep",
    "smoothstep_deriv",
    "tail_taper",
    "tail_taper_deriv",
]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class GridSpec:
    """Uniform periodic grid on [-L, L) with N points (N a power of two).

    Attributes
    ----------
    half_width : float
        L; the domain is [-L, L).
    n_points : int
        N; number of grid points.
    dx : float
        Spacing, dx * N == 2 * L exactly.
    x : ndarray
        Grid points -L + j*dx, j = 0..N-1 (read-only).
    xi : ndarray
        Wavenumbers pi*k/L for k in [-N/2, N/2), FFT ordering (read-only).
    """

    __slots__ = ("half_width", "n_points", "dx", "x", "xi", "xi_odd")

    def __init__(self, half_width: float, n_points: int):
        if not (half_width > 0):
            raise ConfigError(f"half_width must be positive, got {half_width}")
        if not _is_power_of_two(n_points) or n_points < 16:
            raise ConfigError(f"n_points must be a power of two >= 16, got {n_points}")
        L = float(half_width)
        N = int(n_points)
        self.half_width = L
        self.n_points = N
        self.dx = 2.0 * L / N
        x = -L + self.dx * np.arange(N)
        xi = 2.0 * np.pi * np.fft.fftfreq(N, d=self.dx)
        # copy with Nyquist zeroed, for odd powers of (i*xi)
        xi_odd = xi.copy()
        xi_odd[N // 2] = 0.0
        for arr in (x, xi, xi_odd):
            arr.setflags(write=False)
        self.x = x
        self.xi = xi
        self.xi_odd = xi_odd

    def __eq__(self, other):
        return (
            isinstance(other, GridSpec)
            and self.half_width == other.half_width
            and self.n_points == other.n_points
        )

    def __hash__(self):
        return hash((self.half_width, self.n_points))

    def __repr__(self):
        return f"GridSpec(L={self.half_width}, N={self.n_points})"


def make_grid(L: float, N: int) -> GridSpec:
    """Build a GridSpec, rejecting non-power-of-two N and nonpositive L."""
    return GridSpec(L, N)


class Field:
    """Real samples of a function on a GridSpec.  Immutable after construction."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: GridSpec, values, check: bool = True):
        v = np.asarray(values, dtype=np.float64)
        if v.shape != (grid.n_points,):
            raise ConfigError(
                f"values shape {v.shape} does not match grid N={grid.n_points}"
            )
        if check and not np.all(np.isfinite(v)):
            raise NumericsError("Field contains non-finite values")
        v = v.copy()
        v.setflags(write=False)
        self.grid = grid
        self.values = v

    def __add__(self, other):
        self._same_grid(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._same_grid(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c):
        return Field(self.grid, self.values * float(c))

    __rmul__ = __mul__

    def _same_grid(self, other):
        if self.grid != other.grid:
            raise ConfigError("Fields live on different grids")

    def mass(self) -> float:
        """Rectangle-rule integral dx * sum(values)."""
        return float(self.grid.dx * self.values.sum())

    def __repr__(self):
        return f"Field({self.grid!r}, max|u|={np.abs(self.values).max():.3e})"


class SpectralField:
    """Complex FFT coefficients of a field, indexed by xi in FFT ordering."""

    __slots__ = ("grid", "coefficients")

    def __init__(self, grid: GridSpec, coefficients):
        c = np.asarray(coefficients, dtype=np.complex128)
        if c.shape != (grid.n_points,):
            raise ConfigError(
                f"coefficients shape {c.shape} does not match grid N={grid.n_points}"
            )
        if not np.all(np.isfinite(c)):
            raise NumericsError("SpectralField contains non-finite coefficients")
        c = c.copy()
        c.setflags(write=False)
        self.grid = grid
        self.coefficients = c


def to_spectral(f: Field) -> SpectralField:
    """Forward FFT of a real field (unnormalized convention)."""
    return SpectralField(f.grid, np.fft.fft(f.values))


def from_spectral(F: SpectralField) -> Field:
    """Inverse FFT; the coefficients must represent a real field."""
    v = np.fft.ifft(F.coefficients)
    scale = max(1.0, float(np.abs(v.real).max()))
    if np.abs(v.imag).max() > 1e-8 * scale:
        raise NumericsError(
            "spectrum is not conjugate-symmetric: inverse transform is complex"
        )
    return Field(F.grid, v.real)


def derivative(f: Field, l: int) -> Field:
    """Spectral derivative of order l; the Nyquist mode is zeroed for odd l."""
    if l < 0:
        raise ConfigError("derivative order must be nonnegative")
    if l == 0:
        return f
    g = f.grid
    xi = g.xi_odd if l % 2 else g.xi
    mult = (1j * xi) ** l
    return Field(g, np.fft.ifft(mult * np.fft.fft(f.values)).real)


def lp_norm(f: Field, p) -> float:
    """Discrete L^p norm: rectangle rule for p in {1, 2}, max for p = inf."""
    v = f.values
    if p == 1:
        return float(f.grid.dx * np.abs(v).sum())
    if p == 2:
        return float(math.sqrt(f.grid.dx * float(v @ v)))
    if p in (np.inf, math.inf, "inf"):
        return float(np.abs(v).max())
    raise ConfigError(f"unsupported norm p={p}; use 1, 2 or inf")


# ---------------------------------------------------------------------------
# Smooth cutoffs used to build initial data with prescribed tails.

def _bump(s):
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smoothstep(s):
    """C-infinity step: 0 for s <= 0, 1 for s >= 1, strictly monotone between."""
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    a = _bump(s)
    b = _bump(1.0 - s)
    return a / (a + b)


def smoothstep_deriv(s):
    """Derivative of smoothstep; equals S(1-S)(1/s^2 + 1/(1-s)^2) inside (0, 1)."""
    s = np.atleast_1d(np.asarray(s, dtype=np.float64))
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    S = smoothstep(si)
    out[inside] = S * (1.0 - S) * (1.0 / si**2 + 1.0 / (1.0 - si) ** 2)
    return out


def tail_taper(grid: GridSpec, flat_frac: float = 0.8):
    """C-infinity cutoff: 1 on [-flat_frac*L, flat_frac*L], 0 at the box edges."""
    L = grid.half_width
    ramp = (1.0 - flat_frac) * L
    return smoothstep((L - np.abs(grid.x)) / ramp)


def tail_taper_deriv(grid: GridSpec, flat_frac: float = 0.8):
    """x-derivative of tail_taper."""
    L = grid.half_width
    ramp = (1.0 - flat_frac) * L
    s = (L - np.abs(grid.x)) / ramp
    return smoothstep_deriv(s) * (-np.sign(grid.x) / ramp)
