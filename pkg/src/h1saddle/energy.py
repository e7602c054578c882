"""Phase-field energies: Ginzburg-Landau (1D) and Landau-Brazovskii (2D).

Each model splits its first variation into a linear part, diagonal in Fourier
space, and a local nonlinear part:

    dF/dphi = Lin phi + N(phi),    H(phi) v = Lin v + N'(phi) v

The time steppers in :mod:`h1saddle.saddle` rely on that split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, GridError
from .operators import OperatorBackend


@dataclass(frozen=True)
class GinzburgLandauParams:
    kappa: float = 0.04
    mass: float = 0.6  # conserved mean value of phi

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be > 0")


@dataclass(frozen=True)
class LandauBrazovskiiParams:
    tau: float = -0.15
    xi: float = 1.0
    gamma_lb: float = 0.25
    mass: float = 0.0

    def __post_init__(self):
        if not self.xi > 0:
            raise ValueError("xi must be > 0")


class EnergyModel:
    """Base class; subclasses supply the linear symbol and the local terms."""

    name = "abstract"
    default_stabilization = 1.0

    def __init__(self, grid: Grid, backend: OperatorBackend, params):
        if backend.grid != grid:
            raise GridError("backend built for a different grid")
        self.grid = grid
        self.backend = backend
        self.params = params
        self.linear_symbol = self._linear_symbol()

    @property
    def mass(self) -> float:
        return self.params.mass

    # array-level interface used by the solvers

    def apply_linear(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def nonlinear(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def nonlinear_prime(self, a: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def energy_array(self, a: np.ndarray) -> float:
        raise NotImplementedError

    def gradient_array(self, a: np.ndarray) -> np.ndarray:
        return self.apply_linear(a) + self.nonlinear(a)

    def hessian_array(self, a: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.apply_linear(v) + self.nonlinear_prime(a) * v

    def _check(self, f: Field):
        if f.grid != self.grid:
            raise GridError(f"field on {f.grid} does not match model grid {self.grid}")

    def __repr__(self):
        return f"{type(self).__name__}({self.params}, n={self.grid.n}, {self.backend.kind.value})"


class GinzburgLandau(EnergyModel):
    """F = int kappa^2/2 |grad phi|^2 + (phi^2 - 1)^2 / 4."""

    name = "gl1d"
    default_stabilization = 2.0

    def _linear_symbol(self):
        return self.params.kappa**2 * self.backend.neg_lap_symbol

    def apply_linear(self, a):
        return self.params.kappa**2 * self.backend.neg_lap(a)

    def nonlinear(self, a):
        return a * a * a - a

    def nonlinear_prime(self, a):
        return 3.0 * a * a - 1.0

    def energy_array(self, a):
        dv = self.grid.cell_volume
        k2 = self.params.kappa**2
        grad_part = 0.5 * k2 * float(np.dot(self.backend.neg_lap(a).ravel(), a.ravel()))
        bulk = float(np.sum(0.25 * (a * a - 1.0) ** 2))
        return (grad_part + bulk) * dv


class LandauBrazovskii(EnergyModel):
    """F = int xi^2/2 [(Delta + 1) phi]^2 + tau/2 phi^2 - gamma/6 phi^3 + phi^4/24."""

    name = "lb2d"
    default_stabilization = 1.0

    def _linear_symbol(self):
        return self.params.xi**2 * self.backend.shifted_biharmonic_symbol

    def apply_linear(self, a):
        return self.params.xi**2 * self.backend.shifted_biharmonic(a)

    def nonlinear(self, a):
        p = self.params
        return p.tau * a - 0.5 * p.gamma_lb * a * a + a * a * a / 6.0

    def nonlinear_prime(self, a):
        p = self.params
        return p.tau - p.gamma_lb * a + 0.5 * a * a

    def energy_array(self, a):
        p = self.params
        dv = self.grid.cell_volume
        b = a - self.backend.neg_lap(a)
        grad_part = 0.5 * p.xi**2 * float(np.dot(b.ravel(), b.ravel()))
        bulk = float(np.sum(0.5 * p.tau * a * a - p.gamma_lb / 6.0 * a**3 + a**4 / 24.0))
        return (grad_part + bulk) * dv


LB_DEFAULT_LENGTH = (16.0 * math.pi / math.sqrt(3.0), 8.0 * math.pi)


def ginzburg_landau(n: int = 100, kappa: float = 0.04, mass: float = 0.6,
                    length: float = 1.0, backend: str = "finite-difference") -> GinzburgLandau:
    grid = Grid((n,), (length,))
    return GinzburgLandau(grid, OperatorBackend(grid, backend), GinzburgLandauParams(kappa, mass))


def landau_brazovskii(n=(64, 64), tau: float = -0.15, xi: float = 1.0, gamma_lb: float = 0.25,
                      mass: float = 0.0, length=LB_DEFAULT_LENGTH,
                      backend: str = "spectral") -> LandauBrazovskii:
    grid = Grid(tuple(n), tuple(length))
    return LandauBrazovskii(grid, OperatorBackend(grid, backend),
                            LandauBrazovskiiParams(tau, xi, gamma_lb, mass))


def energy(model: EnergyModel, phi: Field) -> float:
    model._check(phi)
    return model.energy_array(phi.values)


def gradient_l2(model: EnergyModel, phi: Field) -> Field:
    """First variation dF/dphi in the L2 sense, without projection."""
    model._check(phi)
    return Field(phi.grid, model.gradient_array(phi.values))


def hessian_apply(model: EnergyModel, phi: Field, v: Field) -> Field:
    model._check(phi)
    model._check(v)
    return Field(phi.grid, model.hessian_array(phi.values, v.values))
