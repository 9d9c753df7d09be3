"""Spectral machinery for doubly periodic two-dimensional grids.

Fields are real arrays of shape (ny, nx) sampled on a uniform rectangular
grid, x varying fastest (row-major). Transforms are real-to-complex, so
spectra have shape (ny, nx//2 + 1). Derivative operators zero the Nyquist
column/row, which keeps results real-valued and avoids the sign ambiguity
of that mode. Quadratic products stay alias-free under the 2/3-rule mask
applied by :func:`dealias`.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError, NumericsError, ParameterError

__all__ = [
    "GridSpec",
    "make_grid",
    "to_spectral",
    "from_spectral",
    "ddx",
    "ddy",
    "laplacian",
    "helmholtz_solve",
    "dealias",
    "dealias_spectrum",
    "grid_integral",
]


class GridSpec:
    """Uniform periodic rectangle plus precomputed wavenumber tables.

    ``kx``/``ky`` hold the full signed wavenumbers ``2*pi*f/l`` in standard
    FFT ordering (``kx[0] == 0``). Internal half-spectrum multiplier tables
    are built once here and shared read-only by every operator.
    """

    __slots__ = ("nx", "ny", "lx", "ly", "x0", "y0", "dx", "dy",
                 "x", "y", "kx", "ky", "_ikx", "_iky", "_k2", "_keep")

    def __init__(self, nx, ny, lx, ly, x0=0.0, y0=0.0):
        nx, ny = int(nx), int(ny)
        if nx % 2 or ny % 2:
            raise ConfigError(f"grid counts must be even, got nx={nx}, ny={ny}")
        if nx < 8 or ny < 8:
            raise ConfigError(f"grid counts must be at least 8, got nx={nx}, ny={ny}")
        if not (lx > 0.0 and ly > 0.0):
            raise ConfigError(f"domain lengths must be positive, got lx={lx}, ly={ly}")
        self.nx, self.ny = nx, ny
        self.lx, self.ly = float(lx), float(ly)
        self.x0, self.y0 = float(x0), float(y0)
        self.dx = self.lx / nx
        self.dy = self.ly / ny
        self.x = self.x0 + self.dx * np.arange(nx)
        self.y = self.y0 + self.dy * np.arange(ny)

        fx = np.fft.fftfreq(nx, d=1.0 / nx)        # signed integer frequencies
        fy = np.fft.fftfreq(ny, d=1.0 / ny)
        self.kx = (2.0 * np.pi / self.lx) * fx
        self.ky = (2.0 * np.pi / self.ly) * fy

        kxr = (2.0 * np.pi / self.lx) * np.arange(nx // 2 + 1)
        ikx = 1j * kxr
        ikx[nx // 2] = 0.0                          # Nyquist derivative is ambiguous
        iky = 1j * self.ky.copy()
        iky[ny // 2] = 0.0
        self._ikx = ikx[np.newaxis, :]
        self._iky = iky[:, np.newaxis]
        self._k2 = kxr[np.newaxis, :] ** 2 + self.ky[:, np.newaxis] ** 2

        fxr = np.arange(nx // 2 + 1)
        self._keep = ((fxr[np.newaxis, :] <= nx / 3.0)
                      & (np.abs(fy)[:, np.newaxis] <= ny / 3.0))

    @property
    def shape(self):
        return (self.ny, self.nx)

    def meshgrid(self):
        """2D coordinate arrays (X, Y), each of shape (ny, nx)."""
        return np.meshgrid(self.x, self.y)

    def center(self):
        return (self.x0 + 0.5 * self.lx, self.y0 + 0.5 * self.ly)

    def _key(self):
        return (self.nx, self.ny, self.lx, self.ly, self.x0, self.y0)

    def __eq__(self, other):
        if not isinstance(other, GridSpec):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return (f"GridSpec(nx={self.nx}, ny={self.ny}, lx={self.lx}, "
                f"ly={self.ly}, x0={self.x0}, y0={self.y0})")


def make_grid(nx, ny, lx, ly, x0=0.0, y0=0.0):
    """Build a validated periodic grid with populated wavenumber tables."""
    return GridSpec(nx, ny, lx, ly, x0, y0)


def _require_finite(f, what):
    if not np.isfinite(f).all():
        raise NumericsError(f"non-finite values in {what}")


def _require_shape(grid, f):
    if f.shape != grid.shape:
        raise ConfigError(f"field shape {f.shape} does not match grid {grid.shape}")


def to_spectral(grid, f):
    """Forward real-to-complex transform of a (ny, nx) field."""
    return np.fft.rfft2(f)


def from_spectral(grid, fh):
    """Inverse transform back to a real (ny, nx) field."""
    return np.fft.irfft2(fh, s=grid.shape)


def ddx(grid, f):
    """Spectral x-derivative; exact for resolvable trigonometric modes."""
    _require_shape(grid, f)
    _require_finite(f, "ddx input")
    return from_spectral(grid, to_spectral(grid, f) * grid._ikx)


def ddy(grid, f):
    """Spectral y-derivative; exact for resolvable trigonometric modes."""
    _require_shape(grid, f)
    _require_finite(f, "ddy input")
    return from_spectral(grid, to_spectral(grid, f) * grid._iky)


def laplacian(grid, f):
    """Spectral Laplacian: multiplies the spectrum by -(kx^2 + ky^2)."""
    _require_shape(grid, f)
    _require_finite(f, "laplacian input")
    return from_spectral(grid, to_spectral(grid, f) * (-grid._k2))


def helmholtz_solve(grid, f, kappa):
    """Solve (1 - kappa*Laplacian) u = f by spectral division.

    Requires kappa >= 0 so that every mode divisor 1 + kappa*|k|^2 is
    positive; the zero mode is untouched, so the mean of f is preserved.
    """
    if kappa < 0.0:
        raise ParameterError(f"helmholtz_solve requires kappa >= 0, got {kappa}")
    _require_shape(grid, f)
    _require_finite(f, "helmholtz_solve input")
    return from_spectral(grid, to_spectral(grid, f) / (1.0 + kappa * grid._k2))


def dealias_spectrum(grid, fh):
    """Zero every mode above the 2/3 cutoff, in place-free form. Idempotent."""
    return fh * grid._keep


def dealias(grid, f):
    """2/3-rule low pass: zero all modes with |frequency index| > n/3."""
    _require_shape(grid, f)
    return from_spectral(grid, to_spectral(grid, f) * grid._keep)


def grid_integral(grid, f):
    """Integral of f over the periodic rectangle (trapezoid = exact here)."""
    return float(f.sum()) * grid.dx * grid.dy
