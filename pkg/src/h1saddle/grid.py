"""Uniform periodic grids, immutable scalar fields, quadrature and field files.

A 2D field is stored as an array of shape ``(n_y, n_x)`` so that the C-order
flattening runs with x fastest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GridError(ValueError):
    pass


class FieldFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    n: tuple[int, ...]
    length: tuple[float, ...]

    def __post_init__(self):
        n = tuple(int(k) for k in self.n)
        length = tuple(float(x) for x in self.length)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", length)
        if len(n) not in (1, 2) or len(length) != len(n):
            raise GridError("grid must be 1D or 2D with one length per axis")
        for k in n:
            if k < 4 or k % 2:
                raise GridError(f"point count {k} must be even and >= 4")
        for x in length:
            if not (x > 0 and math.isfinite(x)):
                raise GridError(f"domain length {x} must be finite and > 0")

    @property
    def ndim(self) -> int:
        return len(self.n)

    @property
    def h(self) -> tuple[float, ...]:
        return tuple(L / k for L, k in zip(self.length, self.n))

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape, slowest axis first (``(n_y, n_x)`` in 2D)."""
        return tuple(reversed(self.n))

    @property
    def size(self) -> int:
        return math.prod(self.n)

    @property
    def volume(self) -> float:
        return math.prod(self.length)

    @property
    def cell_volume(self) -> float:
        return self.volume / self.size

    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays ``(x,)`` or ``(x, y)`` in array layout."""
        axes = [np.arange(k) * (L / k) for k, L in zip(self.n, self.length)]
        if self.ndim == 1:
            return (axes[0],)
        y, x = np.meshgrid(axes[1], axes[0], indexing="ij")
        return (x, y)


class Field:
    """Scalar values on a :class:`Grid`; read-only after construction."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=np.float64)
        if arr.size != grid.size:
            raise GridError(f"value count mismatch: got {arr.size}, grid holds {grid.size}")
        arr = arr.reshape(grid.shape)
        if not np.all(np.isfinite(arr)):
            raise GridError("field values must be finite")
        arr.flags.writeable = False
        self.grid = grid
        self.values = arr

    @classmethod
    def constant(cls, grid: Grid, c: float) -> Field:
        return cls(grid, np.full(grid.shape, float(c)))

    @classmethod
    def from_function(cls, grid: Grid, func) -> Field:
        return cls(grid, np.broadcast_to(func(*grid.coordinates()), grid.shape))

    def _check(self, other: Field):
        if self.grid != other.grid:
            raise GridError("fields live on different grids")

    def __add__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values + other.values)
        return Field(self.grid, self.values + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values - other.values)
        return Field(self.grid, self.values - float(other))

    def __neg__(self):
        return Field(self.grid, -self.values)

    def __mul__(self, a):
        if isinstance(a, Field):
            self._check(a)
            return Field(self.grid, self.values * a.values)
        return Field(self.grid, self.values * float(a))

    __rmul__ = __mul__

    def __truediv__(self, a):
        return Field(self.grid, self.values / float(a))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __repr__(self):
        return f"Field(n={self.grid.n}, length={self.grid.length})"


def integrate(f: Field) -> float:
    """Periodic trapezoid rule: sum of values times cell volume."""
    return float(np.sum(f.values)) * f.grid.cell_volume


def mean(f: Field) -> float:
    return float(np.mean(f.values))


def inner_l2(f: Field, g: Field) -> float:
    f._check(g)
    return float(np.dot(f.values.ravel(), g.values.ravel())) * f.grid.cell_volume


def norm_l2(f: Field) -> float:
    return math.sqrt(inner_l2(f, f))


def write_field(f: Field, path, comment: str | None = None) -> None:
    g = f.grid
    lines = []
    if comment:
        lines.extend("# " + c for c in comment.splitlines())
    header = [str(g.ndim)] + [str(k) for k in g.n] + [f"{L:.16e}" for L in g.length]
    lines.append(" ".join(header))
    lines.extend(f"{x:.16e}" for x in f.values.ravel().tolist())
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path) -> Field:
    raw = Path(path).read_text().splitlines()
    body = [ln.strip() for ln in raw if ln.strip()]
    while body and body[0].startswith("#"):
        body.pop(0)
    if not body:
        raise FieldFormatError(f"{path}: empty field file")
    head = body[0].split()
    try:
        ndim = int(head[0])
        if ndim not in (1, 2) or len(head) != 1 + 2 * ndim:
            raise ValueError
        n = tuple(int(t) for t in head[1:1 + ndim])
        length = tuple(float(t) for t in head[1 + ndim:])
    except (ValueError, IndexError):
        raise FieldFormatError(f"{path}: malformed header {body[0]!r}") from None
    try:
        grid = Grid(n, length)
    except GridError as exc:
        raise FieldFormatError(f"{path}: {exc}") from None
    try:
        values = np.array([float(t) for t in body[1:]], dtype=np.float64)
    except ValueError as exc:
        raise FieldFormatError(f"{path}: unreadable value ({exc})") from None
    if values.size != grid.size:
        raise FieldFormatError(
            f"{path}: value count mismatch (header says {grid.size}, found {values.size})")
    if not np.all(np.isfinite(values)):
        raise FieldFormatError(f"{path}: non-finite values")
    return Field(grid, values)
