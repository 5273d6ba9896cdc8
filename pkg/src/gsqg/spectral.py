"""Periodic grid fields and Fourier-multiplier operators.

Spectral arrays use the real-FFT layout of ``scipy.fft.rfft2``: axis 0 holds
the full set of ``x1`` wavenumbers, axis 1 the non-negative ``x2`` ones.
Coefficients are unnormalized (``f_hat = rfft2(f)``).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import ParameterError

_WORKERS = 1


def set_workers(n: int) -> None:
    """Cap the number of FFT worker threads (1 gives a fixed reduction order)."""
    global _WORKERS
    _WORKERS = max(1, int(n))


def rfft2(a):
    return sfft.rfft2(a, workers=_WORKERS)


def irfft2(a, n):
    return sfft.irfft2(a, s=(n, n), workers=_WORKERS)


class ShellOutsideBandWarning(UserWarning):
    """A dyadic shell does not intersect the resolved wavenumbers."""


@dataclass(frozen=True)
class Grid2D:
    n: int
    L: float = 2 * math.pi

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 8 or self.n & (self.n - 1):
            raise ParameterError("grid size n must be a power of two >= 8")
        if not self.L > 0:
            raise ParameterError("box side L must be positive")

    @property
    def dx(self) -> float:
        return self.L / self.n

    @cached_property
    def x(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    @cached_property
    def mesh(self):
        return np.meshgrid(self.x, self.x, indexing="ij")

    @cached_property
    def index1(self) -> np.ndarray:
        """Integer wavenumbers along axis 0, shape ``(n, 1)``."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)[:, None]

    @cached_property
    def index2(self) -> np.ndarray:
        """Integer wavenumbers along axis 1, shape ``(1, n//2 + 1)``."""
        return np.arange(self.n // 2 + 1)[None, :]

    @cached_property
    def k1(self) -> np.ndarray:
        return (2 * math.pi / self.L) * self.index1.astype(float)

    @cached_property
    def k2(self) -> np.ndarray:
        return (2 * math.pi / self.L) * self.index2.astype(float)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k1 ** 2 + self.k2 ** 2)

    @cached_property
    def nyquist(self) -> np.ndarray:
        """True on modes with an axis index equal to ``n/2``."""
        h = self.n // 2
        return (np.abs(self.index1) == h) | (self.index2 == h)

    @cached_property
    def weights(self) -> np.ndarray:
        """Multiplicity of each stored rfft coefficient in the full spectrum."""
        w = np.full((1, self.n // 2 + 1), 2.0)
        w[0, 0] = 1.0
        w[0, -1] = 1.0
        return w

    def dealias_mask(self, fraction: float) -> np.ndarray:
        """Keep modes with ``|index_i| <= fraction * n/2`` on both axes."""
        if not 0 < fraction <= 1:
            raise ParameterError("dealias fraction must lie in ]0, 1]")
        cut = fraction * (self.n // 2)
        m = (np.abs(self.index1) <= cut) & (self.index2 <= cut)
        return m & ~self.nyquist

    def truncation_mask(self, N: float) -> np.ndarray:
        return self.kmag <= N

    def spectral_norm2(self, fhat) -> float:
        """``int |f|^2 dx`` from rfft coefficients (Parseval)."""
        return float(np.sum(self.weights * np.abs(fhat) ** 2)) * self.L ** 2 / self.n ** 4

    def spectral_inner(self, ahat, bhat) -> float:
        return float(np.sum(self.weights * (ahat.conj() * bhat).real)) * self.L ** 2 / self.n ** 4


class ScalarField2D:
    """Real field with lazily synchronized physical and spectral values."""

    __slots__ = ("grid", "_phys", "_spec")

    def __init__(self, grid: Grid2D, physical=None, spectral=None):
        if physical is None and spectral is None:
            raise ParameterError("field needs physical or spectral values")
        self.grid = grid
        self._phys = None
        self._spec = None
        if physical is not None:
            a = np.asarray(physical)
            if np.iscomplexobj(a):
                raise ParameterError("physical values must be real")
            if a.shape != (grid.n, grid.n):
                raise ParameterError(f"expected shape {(grid.n, grid.n)}, got {a.shape}")
            self._phys = np.array(a, dtype=float)
            self._phys.setflags(write=False)
        if spectral is not None:
            s = np.asarray(spectral, dtype=complex)
            if s.shape != (grid.n, grid.n // 2 + 1):
                raise ParameterError("spectral array has the wrong shape")
            self._spec = np.array(s)
            self._spec.setflags(write=False)

    @classmethod
    def from_function(cls, grid: Grid2D, f):
        X, Y = grid.mesh
        return cls(grid, physical=f(X, Y))

    @classmethod
    def zeros(cls, grid: Grid2D):
        return cls(grid, physical=np.zeros((grid.n, grid.n)))

    @property
    def physical(self) -> np.ndarray:
        if self._phys is None:
            self._phys = irfft2(self._spec, self.grid.n)
            self._phys.setflags(write=False)
        return self._phys

    @property
    def spectral(self) -> np.ndarray:
        if self._spec is None:
            self._spec = rfft2(self._phys)
            self._spec.setflags(write=False)
        return self._spec

    @property
    def valid(self) -> dict:
        return {"physical": self._phys is not None, "spectral": self._spec is not None}

    def l2_norm(self) -> float:
        return math.sqrt(self.grid.spectral_norm2(self.spectral))

    def l2_norm_physical(self) -> float:
        return math.sqrt(float(np.sum(self.physical ** 2))) * self.grid.dx

    def linf(self) -> float:
        return float(np.max(np.abs(self.physical)))

    def mean(self) -> float:
        return float(self.spectral[0, 0].real) / self.grid.n ** 2

    def __add__(self, other):
        return ScalarField2D(self.grid, physical=self.physical + other.physical)

    def __mul__(self, c):
        return ScalarField2D(self.grid, spectral=self.spectral * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class VectorField2D:
    u1: ScalarField2D
    u2: ScalarField2D

    def __post_init__(self):
        if self.u1.grid != self.u2.grid:
            raise ParameterError("components must share a grid")

    @property
    def grid(self) -> Grid2D:
        return self.u1.grid

    def divergence_spectral(self) -> np.ndarray:
        g = self.grid
        return 1j * (g.k1 * self.u1.spectral + g.k2 * self.u2.spectral)

    def max_magnitude(self) -> float:
        return float(np.max(np.hypot(self.u1.physical, self.u2.physical)))


def _multiply(f: ScalarField2D, symbol) -> ScalarField2D:
    return ScalarField2D(f.grid, spectral=f.spectral * symbol)


def fractional_laplacian(f: ScalarField2D, s: float) -> ScalarField2D:
    """Multiplier ``|k|**s``; the zero mode is mapped to 0 for every ``s``."""
    if not 0 <= s <= 2:
        raise ParameterError("fractional Laplacian exponent must lie in [0, 2]")
    g = f.grid
    sym = g.kmag ** s
    sym[0, 0] = 0.0
    return _multiply(f, sym)


def _riesz_symbols(grid: Grid2D, power: float):
    with np.errstate(divide="ignore"):
        mag = np.where(grid.kmag > 0, grid.kmag, 1.0) ** power
    mag[0, 0] = 0.0
    mag = np.where(grid.nyquist, 0.0, mag)
    return mag


def riesz_perp(theta: ScalarField2D) -> VectorField2D:
    """``(-R_2, R_1) theta`` with ``R_j`` of symbol ``i k_j / |k|``."""
    g = theta.grid
    m = _riesz_symbols(g, -1.0)
    return VectorField2D(_multiply(theta, -1j * g.k2 * m), _multiply(theta, 1j * g.k1 * m))


def velocity_symbols(grid: Grid2D, alpha: float):
    m = _riesz_symbols(grid, alpha - 1.0)
    return -1j * grid.k2 * m, 1j * grid.k1 * m


def velocity(theta: ScalarField2D, alpha: float) -> VectorField2D:
    """``u = Lambda**alpha R_perp theta``: ``u_hat = i |k|**(alpha-1) (-k2, k1) theta_hat``."""
    if not 0 < alpha < 1:
        raise ParameterError("alpha must lie in ]0, 1[")
    s1, s2 = velocity_symbols(theta.grid, alpha)
    return VectorField2D(_multiply(theta, s1), _multiply(theta, s2))


def gradient(f: ScalarField2D) -> VectorField2D:
    g = f.grid
    keep = ~g.nyquist
    return VectorField2D(_multiply(f, 1j * g.k1 * keep), _multiply(f, 1j * g.k2 * keep))


def grad_linf(f: ScalarField2D) -> float:
    return gradient(f).max_magnitude()


def shell_index_range(grid: Grid2D):
    """Dyadic indices ``j`` whose shell ``2**j <= |k| < 2**(j+1)`` meets the grid."""
    kmin = 2 * math.pi / grid.L
    kmax = float(grid.kmag.max())
    return int(math.floor(math.log2(kmin))), int(math.floor(math.log2(kmax)))


def dyadic_shell_energy(f: ScalarField2D, j: int) -> float:
    """``int |P_j f|^2`` for the sharp shell ``2**j <= |k| < 2**(j+1)``."""
    g = f.grid
    lo, hi = shell_index_range(g)
    if j < lo or j > hi:
        warnings.warn(f"shell j={j} lies outside the resolved band [{lo}, {hi}]",
                      ShellOutsideBandWarning, stacklevel=2)
        return 0.0
    m = (g.kmag >= 2.0 ** j) & (g.kmag < 2.0 ** (j + 1))
    return g.spectral_norm2(np.where(m, f.spectral, 0.0))


def shell_energies(f: ScalarField2D) -> dict:
    """All resolved shell energies keyed by ``j``; the zero mode under ``'mean'``."""
    g = f.grid
    lo, hi = shell_index_range(g)
    out = {"mean": g.spectral_norm2(np.where(g.kmag == 0, f.spectral, 0.0))}
    for j in range(lo, hi + 1):
        out[j] = dyadic_shell_energy(f, j)
    return out
