"""Periodic differential operators, the mass projection and the H^-1 pairing.

Every operator here is diagonal in the discrete Fourier basis, so a backend is
little more than a table of multipliers on the ``rfftn`` layout. The
finite-difference backend applies its Laplacian as a stencil in real space and
uses the stencil's own Fourier symbol only for inverses and half-powers.
"""

from __future__ import annotations

import enum

import numpy as np

from .grid import Field, Grid, GridError

ZERO_MEAN_RTOL = 1e-10


class ZeroMeanError(ValueError):
    """An operator defined on zero-mean fields received a field with mass."""


class UnsupportedBackendError(ValueError):
    pass


class BackendKind(str, enum.Enum):
    FINITE_DIFFERENCE = "finite-difference"
    SPECTRAL = "spectral"


def _axis_frequencies(grid: Grid):
    """Integer wavenumbers per axis in ``rfftn`` layout (x is the halved axis)."""
    if grid.ndim == 1:
        return (np.arange(grid.n[0] // 2 + 1, dtype=float),)
    kx = np.arange(grid.n[0] // 2 + 1, dtype=float)[None, :]
    ky = np.fft.fftfreq(grid.n[1], d=1.0 / grid.n[1])[:, None]
    return (kx, ky)


class OperatorBackend:
    """Symbol tables and FFT helpers for one grid.

    ``neg_lap_symbol`` is the multiplier of -Delta at each retained mode; it is
    exactly zero at the zero mode.
    """

    def __init__(self, grid: Grid, kind="spectral"):
        self.grid = grid
        self.kind = BackendKind(kind)
        freqs = _axis_frequencies(grid)
        sym = 0.0
        for k, n, h, L in zip(freqs, grid.n, grid.h, grid.length):
            if self.kind is BackendKind.SPECTRAL:
                sym = sym + (2.0 * np.pi * k / L) ** 2
            else:
                sym = sym + (2.0 - 2.0 * np.cos(2.0 * np.pi * k / n)) / h**2
        sym = np.broadcast_to(sym, self.spectral_shape).copy()
        sym.flat[0] = 0.0
        self.neg_lap_symbol = sym
        inv = np.zeros_like(sym)
        inv[sym > 0] = 1.0 / sym[sym > 0]
        self.inv_neg_lap_symbol = inv
        self.sqrt_neg_lap_symbol = np.sqrt(sym)
        self.inv_sqrt_neg_lap_symbol = np.sqrt(inv)
        self.shifted_biharmonic_symbol = (1.0 - sym) ** 2

    @property
    def spectral_shape(self):
        g = self.grid
        if g.ndim == 1:
            return (g.n[0] // 2 + 1,)
        return (g.n[1], g.n[0] // 2 + 1)

    def fft(self, a: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(a)

    def ifft(self, a_hat: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(a_hat, s=self.grid.shape, axes=tuple(range(self.grid.ndim)))

    def apply_symbol(self, a: np.ndarray, symbol: np.ndarray) -> np.ndarray:
        return self.ifft(symbol * self.fft(a))

    # array kernels; callers guarantee shapes and zero-mean preconditions

    def neg_lap(self, a: np.ndarray) -> np.ndarray:
        if self.kind is BackendKind.SPECTRAL:
            return self.apply_symbol(a, self.neg_lap_symbol)
        out = np.zeros_like(a)
        for axis, h in zip(range(a.ndim - 1, -1, -1), self.grid.h):
            out += (2.0 * a - np.roll(a, 1, axis) - np.roll(a, -1, axis)) / h**2
        return out

    def inv_neg_lap(self, a: np.ndarray) -> np.ndarray:
        return self.apply_symbol(a, self.inv_neg_lap_symbol)

    def sqrt_neg_lap(self, a: np.ndarray) -> np.ndarray:
        return self.apply_symbol(a, self.sqrt_neg_lap_symbol)

    def inv_sqrt_neg_lap(self, a: np.ndarray) -> np.ndarray:
        return self.apply_symbol(a, self.inv_sqrt_neg_lap_symbol)

    def shifted_biharmonic(self, a: np.ndarray) -> np.ndarray:
        if self.kind is not BackendKind.SPECTRAL and self.grid.ndim == 2:
            raise UnsupportedBackendError(
                "(Delta+1)^2 is only available on the spectral backend in 2D")
        if self.kind is BackendKind.SPECTRAL:
            return self.apply_symbol(a, self.shifted_biharmonic_symbol)
        b = a - self.neg_lap(a)
        return b - self.neg_lap(b)

    def _check_grid(self, f: Field):
        if f.grid != self.grid:
            raise GridError("field grid does not match the backend grid")

    def __repr__(self):
        return f"OperatorBackend({self.kind.value}, n={self.grid.n})"


def project(f: Field) -> Field:
    """Orthogonal projection onto zero-mean fields: f - mean(f)."""
    return Field(f.grid, f.values - np.mean(f.values))


def laplacian(f: Field, backend: OperatorBackend) -> Field:
    backend._check_grid(f)
    return Field(f.grid, -backend.neg_lap(f.values))


def biharmonic_shifted(f: Field, backend: OperatorBackend) -> Field:
    """Apply (Delta + 1)^2."""
    backend._check_grid(f)
    return Field(f.grid, backend.shifted_biharmonic(f.values))


def check_zero_mean(f: Field, what: str = "input", rtol: float = ZERO_MEAN_RTOL):
    """Raise unless |integral of f| <= rtol * ||f||_L2."""
    a = f.values
    dv = f.grid.cell_volume
    total = abs(float(np.sum(a))) * dv
    norm = float(np.sqrt(np.dot(a.ravel(), a.ravel()) * dv))
    if total > rtol * norm:
        raise ZeroMeanError(
            f"{what} must have zero mean: |integral| = {total:.3e} exceeds "
            f"{rtol:g} * ||f|| = {rtol * norm:.3e}")


def inverse_neg_laplacian(f: Field, backend: OperatorBackend) -> Field:
    """Zero-mean solution g of -Delta g = f; the zero mode is set to 0."""
    backend._check_grid(f)
    check_zero_mean(f, "inverse_neg_laplacian input")
    return Field(f.grid, backend.inv_neg_lap(f.values))


def inner_hminus1(f: Field, g: Field, backend: OperatorBackend) -> float:
    f._check(g)
    check_zero_mean(f, "first H^-1 argument")
    check_zero_mean(g, "second H^-1 argument")
    w = backend.inv_neg_lap(f.values)
    return float(np.dot(w.ravel(), g.values.ravel())) * f.grid.cell_volume
