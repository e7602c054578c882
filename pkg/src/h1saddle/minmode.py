"""Smallest eigenpairs of the Hessian restricted to zero-mean fields.

Two metrics are supported:

``projected-l2``
    minimise <psi, P H P psi> / <psi, psi> over zero-mean psi.
``h-1``
    minimise <psi, H psi> / <psi, (-Delta)^-1 psi>. Solved as a standard
    symmetric problem for w = (-Delta)^(-1/2) psi, i.e. for the operator
    (-Delta)^(1/2) P H P (-Delta)^(1/2); the eigenvector is mapped back and
    has unit H^-1 norm.

The iterative solver is a block LOBPCG with a diagonal Fourier preconditioner.
Everything is matrix-free except :func:`dense_oracle`, which assembles the
matrices column by column and is only meant for tiny grids.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .energy import EnergyModel
from .grid import Field
from .operators import ZeroMeanError, check_zero_mean


class Metric(str, enum.Enum):
    PROJECTED_L2 = "projected-l2"
    H_MINUS_1 = "h-1"


class MinModeNotConverged(RuntimeError):
    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


class GridTooLargeError(ValueError):
    pass


@dataclass
class MinModeOptions:
    tolerance: float = 1e-10
    max_iterations: int = 10000
    metric: Metric | str = Metric.PROJECTED_L2
    seed: int = 0
    block_size: int = 1

    def __post_init__(self):
        self.metric = Metric(self.metric)
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")


@dataclass
class MinModeResult:
    """``residual`` is ||A v - lambda v|| / ||v|| in the solver's metric;
    ``scale`` is the operator-norm estimate that sets the rounding floor."""

    eigenvalue: float
    eigenvector: Field
    residual: float
    iterations: int
    metric: Metric
    scale: float = 1.0
    history: list[float] = field(default_factory=list, repr=False)
    eigenvalues: np.ndarray | None = None  # whole block when block_size > 1
    eigenvectors: list[Field] | None = field(default=None, repr=False)


def random_zero_mean(grid, seed: int) -> np.ndarray:
    """Seeded standard-normal field, projected and normalised in L2."""
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(grid.shape)
    a -= a.mean()
    return a / math.sqrt(float(np.dot(a.ravel(), a.ravel())) * grid.cell_volume)


class _Problem:
    """Flattened operator for one (model, phi, metric); columns are fields."""

    def __init__(self, model: EnergyModel, phi: np.ndarray, metric: Metric):
        self.model = model
        self.metric = metric
        self.shape = model.grid.shape
        self.n = model.grid.size
        self.phi = phi
        self.potential = model.nonlinear_prime(phi)
        b = model.backend
        lin = model.linear_symbol
        pot_max = float(np.max(np.abs(self.potential)))
        pot_mean = float(np.mean(self.potential))
        if metric is Metric.PROJECTED_L2:
            self.diag = lin + pot_mean
            self.scale = float(np.max(np.abs(lin))) + pot_max
        else:
            self.diag = b.neg_lap_symbol * (lin + pot_mean)
            self.scale = float(np.max(b.neg_lap_symbol * (np.abs(lin) + pot_max)))
        self.scale = max(self.scale, 1.0)
        self.zero_mode = b.neg_lap_symbol == 0.0

    def apply(self, X: np.ndarray) -> np.ndarray:
        out = np.empty_like(X)
        model, b = self.model, self.model.backend
        for j in range(X.shape[1]):
            x = X[:, j].reshape(self.shape)
            if self.metric is Metric.H_MINUS_1:
                x = b.sqrt_neg_lap(x)
            y = model.apply_linear(x) + self.potential * x
            y -= y.mean()
            if self.metric is Metric.H_MINUS_1:
                y = b.sqrt_neg_lap(y)
            out[:, j] = y.ravel()
        return out

    def precondition(self, R: np.ndarray, theta: np.ndarray) -> np.ndarray:
        b = self.model.backend
        out = np.empty_like(R)
        floor = 1e-3 * max(1.0, float(np.max(np.abs(theta))))
        for j in range(R.shape[1]):
            denom = np.abs(self.diag - theta[j]) + floor
            t = 1.0 / denom
            t[self.zero_mode] = 0.0
            out[:, j] = b.apply_symbol(R[:, j].reshape(self.shape), t).ravel()
        return out


def _constrain(V: np.ndarray, Y: np.ndarray | None) -> np.ndarray:
    V = V - V.mean(axis=0, keepdims=True)
    if Y is not None:
        for _ in range(2):
            V = V - Y @ (Y.T @ V)
    return V


def _orthonormalize(V: np.ndarray, against: np.ndarray | None = None, rtol: float = 1e-10):
    """Orthonormal basis of V (optionally orthogonal to ``against``); drops
    directions that are numerically dependent. Returns (Q, T) with Q = V T."""
    norms0 = np.linalg.norm(V, axis=0)
    V = V / np.where(norms0 > 0, norms0, 1.0)
    T = np.diag(1.0 / np.where(norms0 > 0, norms0, 1.0))
    if against is not None:
        for _ in range(2):
            V = V - against @ (against.T @ V)
    if V.shape[1] == 0:
        return V, T
    G = V.T @ V
    G = 0.5 * (G + G.T)
    s, U = np.linalg.eigh(G)
    keep = s > rtol * max(1.0, s.max(initial=0.0))
    U = U[:, keep] / np.sqrt(s[keep])
    Q = V @ U
    if Q.shape[1] == 0:
        return Q, T @ U
    # second pass cleans up the loss of orthogonality from the Gram route
    G2 = Q.T @ Q
    L = np.linalg.cholesky(0.5 * (G2 + G2.T))
    Linv = np.linalg.inv(L).T
    return Q @ Linv, T @ U @ Linv


def lobpcg(problem: _Problem, X0: np.ndarray, Y: np.ndarray | None, tol: float,
           max_iterations: int):
    """Block LOBPCG for the smallest eigenpairs of ``problem`` on the subspace
    of zero-mean vectors orthogonal to the columns of ``Y``.

    Returns (theta, X, residual norms, iterations, history, converged).
    """
    k = X0.shape[1]
    X, _ = _orthonormalize(_constrain(X0, Y))
    if X.shape[1] < k:
        raise ValueError("degenerate start block")
    AX = problem.apply(X)
    theta, C = np.linalg.eigh(0.5 * (X.T @ AX + AX.T @ X))
    X, AX = X @ C, AX @ C
    P = None
    history = [float(theta[0])]
    # tol relative to max(1, |theta|), but never below what rounding allows
    floor = 64.0 * np.finfo(float).eps * problem.scale
    it = 0
    res = np.full(k, np.inf)
    while True:
        R = _constrain(AX - X * theta, Y)
        res = np.linalg.norm(R, axis=0)
        abs_tol = np.maximum(tol * np.maximum(1.0, np.abs(theta)), floor)
        if np.all(res <= abs_tol):
            # confirm with an exact operator application
            AX = problem.apply(X)
            R = _constrain(AX - X * theta, Y)
            res = np.linalg.norm(R, axis=0)
            if np.all(res <= abs_tol):
                return theta, X, res, it, history, True
        if it >= max_iterations:
            return theta, X, res, it, history, False
        it += 1
        W = problem.precondition(R, theta)
        blocks = [X, W] if P is None else [X, W, P]
        # re-constraining every block stops rounding drift out of the subspace;
        # one orthonormal basis, applied exactly, keeps Rayleigh-Ritz well posed
        Q, _ = _orthonormalize(_constrain(np.hstack(blocks), Y))
        AQ = problem.apply(Q)
        GA = Q.T @ AQ
        vals, vecs = np.linalg.eigh(0.5 * (GA + GA.T))
        C = vecs[:, :k]
        theta = vals[:k]
        Xn, AXn = Q @ C, AQ @ C
        # next search direction: the part of the new Ritz vectors outside the old X
        P = Xn - X @ (X.T @ Xn)
        X, AX = Xn, AXn
        history.append(float(theta[0]))


def _field_norm(a: np.ndarray, model: EnergyModel, metric: Metric) -> float:
    dv = model.grid.cell_volume
    if metric is Metric.H_MINUS_1:
        w = model.backend.inv_neg_lap(a)
        return math.sqrt(float(np.dot(w.ravel(), a.ravel())) * dv)
    return math.sqrt(float(np.dot(a.ravel(), a.ravel())) * dv)


def rayleigh_quotient(model: EnergyModel, phi: Field, psi: Field, metric="projected-l2") -> float:
    """<psi, P H P psi> / ||psi||^2 in the chosen metric (psi zero-mean)."""
    metric = Metric(metric)
    model._check(phi)
    model._check(psi)
    check_zero_mean(psi, "Rayleigh quotient argument")
    a = psi.values
    if not np.any(a):
        raise ZeroMeanError("Rayleigh quotient of the zero field is undefined")
    ha = model.hessian_array(phi.values, a)
    num = float(np.dot(a.ravel(), (ha - ha.mean()).ravel()))
    if metric is Metric.H_MINUS_1:
        den = float(np.dot(model.backend.inv_neg_lap(a).ravel(), a.ravel()))
    else:
        den = float(np.dot(a.ravel(), a.ravel()))
    return num / den


def _to_field_space(problem: _Problem, x: np.ndarray) -> np.ndarray:
    a = x.reshape(problem.shape)
    if problem.metric is Metric.H_MINUS_1:
        a = problem.model.backend.sqrt_neg_lap(a)
    return a


def _from_field_space(problem: _Problem, a: np.ndarray) -> np.ndarray:
    if problem.metric is Metric.H_MINUS_1:
        a = problem.model.backend.inv_sqrt_neg_lap(a - a.mean())
    return a.ravel()


def _normalized(model, metric, a):
    a = a - a.mean()
    return a / _field_norm(a, model, metric)


def smallest_eigenpairs(model: EnergyModel, phi: Field, opts: MinModeOptions | None = None,
                        start: list[Field] | Field | None = None,
                        deflate: list[Field] | None = None) -> MinModeResult:
    """Smallest ``opts.block_size`` eigenpairs on zero-mean fields, optionally
    restricted to the complement of ``deflate`` (orthogonal in the metric).

    ``start`` warm-starts the block; missing columns are seeded random fields.
    Raises :class:`MinModeNotConverged` carrying the best iterate.
    """
    opts = opts or MinModeOptions()
    model._check(phi)
    problem = _Problem(model, phi.values, opts.metric)
    k = max(1, int(opts.block_size))
    cols = []
    if start is not None:
        for f in ([start] if isinstance(start, Field) else list(start))[:k]:
            cols.append(_from_field_space(problem, np.asarray(f.values, dtype=float)))
    rng_seed = opts.seed
    while len(cols) < k:
        cols.append(_from_field_space(problem, random_zero_mean(model.grid, rng_seed)))
        rng_seed += 1
    X0 = np.column_stack(cols)
    Y = None
    if deflate:
        # Euclidean orthogonality in the solver variable equals metric
        # orthogonality of the mapped-back fields.
        ycols = [_from_field_space(problem, np.asarray(f.values, dtype=float)) for f in deflate]
        Y, _ = _orthonormalize(_constrain(np.column_stack(ycols), None))
    theta, X, res, its, history, ok = lobpcg(problem, X0, Y, opts.tolerance, opts.max_iterations)
    vecs = [Field(model.grid, _normalized(model, opts.metric, _to_field_space(problem, X[:, j])))
            for j in range(X.shape[1])]
    result = MinModeResult(
        eigenvalue=float(theta[0]), eigenvector=vecs[0], residual=float(res[0]),
        iterations=its, metric=opts.metric, scale=problem.scale, history=history,
        eigenvalues=np.array(theta, dtype=float), eigenvectors=vecs)
    if not ok:
        raise MinModeNotConverged(
            f"min-mode solve did not reach tolerance {opts.tolerance:g} in {its} iterations "
            f"(residual {float(np.max(res)):.3e})", result)
    return result


def min_mode(model: EnergyModel, phi: Field, opts: MinModeOptions | None = None,
             start: Field | None = None) -> MinModeResult:
    """Minimiser of the Rayleigh quotient over zero-mean fields.

    The eigenvector is zero-mean with unit norm in the solver's metric.
    """
    return smallest_eigenpairs(model, phi, opts, start=start)


DENSE_LIMIT = 64


@dataclass
class DenseSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: list[Field]


def _zero_mean_basis(n: int) -> np.ndarray:
    return scipy.linalg.null_space(np.ones((1, n)))


def _assemble(apply_fn, grid) -> np.ndarray:
    n = grid.size
    M = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        M[:, j] = apply_fn(e.reshape(grid.shape)).ravel()
        e[j] = 0.0
    return M


def dense_oracle(model: EnergyModel, phi: Field, metric="projected-l2") -> DenseSpectrum:
    """Full constrained spectrum by direct dense solve (grids of <= 64 points).

    ``projected-l2``: eigenpairs of Q^T H Q, Q an orthonormal basis of the
    zero-mean vectors. ``h-1``: the generalized pair (Q^T H Q, Q^T K Q) with
    K = (-Delta)^-1. Eigenvectors are normalised in the metric.
    """
    metric = Metric(metric)
    model._check(phi)
    grid = model.grid
    if grid.size > DENSE_LIMIT:
        raise GridTooLargeError(f"dense oracle limited to {DENSE_LIMIT} points, grid has {grid.size}")
    H = _assemble(lambda e: model.hessian_array(phi.values, e), grid)
    H = 0.5 * (H + H.T)
    Q = _zero_mean_basis(grid.size)
    A = Q.T @ H @ Q
    if metric is Metric.H_MINUS_1:
        K = _assemble(model.backend.inv_neg_lap, grid)
        K = 0.5 * (K + K.T)
        vals, Y = scipy.linalg.eigh(A, Q.T @ K @ Q)
    else:
        vals, Y = scipy.linalg.eigh(A)
    vecs = [Field(grid, _normalized(model, metric, (Q @ Y[:, j]).reshape(grid.shape)))
            for j in range(Y.shape[1])]
    return DenseSpectrum(vals, vecs)
