"""Smooth initial-data profiles."""
from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .spectral import Grid2D, ScalarField2D


def single_mode(grid: Grid2D, k=(1, 0), amplitude=1.0, phase=0.0) -> ScalarField2D:
    """``amplitude * cos(k . x + phase)`` with integer lattice index ``k``."""
    k1, k2 = (2 * np.pi / grid.L) * np.asarray(k, dtype=float)
    X, Y = grid.mesh
    return ScalarField2D(grid, physical=amplitude * np.cos(k1 * X + k2 * Y + phase))


def gaussian_bump(grid: Grid2D, center=None, width=None, amplitude=1.0) -> ScalarField2D:
    """Gaussian in the flat-torus distance to ``center``.

    Smooth to rounding level as long as ``width`` is small against ``L``
    (the default is ``L / 12``).
    """
    L = grid.L
    center = (L / 2, L / 2) if center is None else center
    width = L / 12 if width is None else width
    if width <= 0:
        raise ParameterError("width must be positive")
    X, Y = grid.mesh
    dx = np.abs(X - center[0]) % L
    dy = np.abs(Y - center[1]) % L
    dx = np.minimum(dx, L - dx)
    dy = np.minimum(dy, L - dy)
    return ScalarField2D(grid, physical=amplitude * np.exp(-(dx ** 2 + dy ** 2) / (2 * width ** 2)))


def random_smooth(grid: Grid2D, seed=0, spectrum_decay=4.0, amplitude=1.0, kmax=None) -> ScalarField2D:
    """Random Fourier series with ``|theta_hat(k)| ~ (1 + |k|^2)**(-spectrum_decay/2)``.

    Modes are limited to ``|k| <= kmax`` (default a third of the Nyquist
    wavenumber, inside the dealiased band), the mean is zero and the result
    is rescaled to ``max |theta| = amplitude``.  Deterministic in ``seed``.
    """
    if spectrum_decay <= 0 or amplitude <= 0:
        raise ParameterError("spectrum_decay and amplitude must be positive")
    rng = np.random.default_rng(seed)
    n = grid.n
    kmax = (2 * np.pi / grid.L) * (n // 6) if kmax is None else kmax
    shape = (n, n // 2 + 1)
    coef = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    env = (1 + grid.kmag ** 2) ** (-spectrum_decay / 2)
    keep = (grid.kmag <= kmax) & ~grid.nyquist
    keep[0, 0] = False
    spec = np.where(keep, coef * env, 0.0)
    phys = ScalarField2D(grid, spectral=spec).physical
    peak = np.max(np.abs(phys))
    if peak == 0:
        raise ParameterError("kmax leaves no resolved modes")
    return ScalarField2D(grid, physical=phys * (amplitude / peak))


PROFILES = {"single_mode": single_mode, "gaussian_bump": gaussian_bump,
            "random_smooth": random_smooth}


def from_spec(grid: Grid2D, spec: dict) -> ScalarField2D:
    spec = dict(spec)
    name = spec.pop("profile", "random_smooth")
    if name not in PROFILES:
        raise ParameterError(f"unknown initial profile {name!r}; choose from {sorted(PROFILES)}")
    try:
        return PROFILES[name](grid, **spec)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for profile {name!r}: {exc}") from None
