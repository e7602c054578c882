"""Saddle searches: projected IMF, direct H^-1 IMF, projected GAD, plain GAD.

The IMF alternates a rotation step (min-mode of the Hessian) with a
translation step that minimises the auxiliary functional

    L(phi) = (1 - alpha) F(phi) + alpha F(phi - s v) - beta F(phi_k + s v),
    s = <v, phi - phi_k>

by a semi-implicit gradient flow. In the projected method the flow is the
mass-projected L2 flow and every pairing is an L2 pairing. In the direct
method the flow is the H^-1 (Cahn-Hilliard type) flow and s is an H^-1
pairing, computed by a Poisson solve at every step.

Array kernels do the per-step work; the public functions wrap them in
:class:`~h1saddle.grid.Field` values.
"""

from __future__ import annotations

import csv
import enum
import functools
import io
import math
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .energy import EnergyModel, GinzburgLandau
from .grid import Field
from .minmode import (Metric, MinModeNotConverged, MinModeOptions, min_mode,
                      random_zero_mean, rayleigh_quotient, smallest_eigenpairs)
from .operators import check_zero_mean

DIVERGENCE_THRESHOLD = 1e6


class Method(str, enum.Enum):
    IMF_PROJECTED = "imf-projected"
    IMF_H1 = "imf-h1"
    GAD_PROJECTED = "gad-projected"
    GAD_L2 = "gad-l2"


class Status(str, enum.Enum):
    CONVERGED = "converged"
    MAX_CYCLES = "max-cycles"
    DIVERGED = "diverged"


class SolveError(RuntimeError):
    pass


@dataclass
class SearchConfig:
    method: Method | str = Method.IMF_PROJECTED
    alpha: float = 0.0
    beta: float = 2.0
    dt: float = 0.1
    inner_iters: int = 0
    inner_tol: float = 1e-10
    max_inner: int = 200_000
    outer_tol: float = 1e-8
    max_cycles: int = 200
    gad_gamma: float = 1.0
    seed: int = 0
    stabilization: float | None = None
    minmode_tol: float = 1e-10
    minmode_max_iter: int = 10000

    def __post_init__(self):
        self.method = Method(self.method)
        if not self.alpha + self.beta > 1:
            raise ValueError(f"alpha + beta must exceed 1 (got {self.alpha} + {self.beta})")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        if not self.outer_tol > 0:
            raise ValueError("outer_tol must be > 0")
        if not self.gad_gamma > 0:
            raise ValueError("gad_gamma must be > 0")
        if self.inner_iters < 0:
            raise ValueError("inner_iters must be >= 0")

    def stabilization_for(self, model: EnergyModel) -> float:
        if self.stabilization is None:
            return model.default_stabilization
        return float(self.stabilization)


@dataclass
class TraceRecord:
    cycle: int
    inner_iters: int
    residual_l2: float
    energy: float
    min_eig: float
    wall_s: float
    mass: float = float("nan")  # mean of phi; kept in memory, not written to CSV


TRACE_HEADER = ("cycle", "inner_iters", "residual_l2", "energy", "min_eig", "wall_s")


@dataclass
class ConvergenceTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, rec: TraceRecord):
        if self.records and rec.cycle <= self.records[-1].cycle:
            raise ValueError("trace cycles must increase")
        if not rec.residual_l2 >= 0:
            raise ValueError("residual must be non-negative")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual_l2 for r in self.records])

    @property
    def masses(self) -> np.ndarray:
        return np.array([r.mass for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in self.records:
            w.writerow([r.cycle, r.inner_iters, f"{r.residual_l2:.17g}", f"{r.energy:.17g}",
                        f"{r.min_eig:.17g}", f"{r.wall_s:.17g}"])
        return buf.getvalue()

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


@dataclass
class SaddleResult:
    phi: Field
    v: Field
    eigenvalue: float
    trace: ConvergenceTrace
    status: Status
    method: Method
    total_inner: int = 0
    wall_s: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def _dot(a, b, dv):
    return float(np.dot(a.ravel(), b.ravel())) * dv


def projected_residual(model: EnergyModel, phi: np.ndarray) -> float:
    """||P dF/dphi||_L2."""
    g = model.gradient_array(phi)
    g -= g.mean()
    return math.sqrt(_dot(g, g, model.grid.cell_volume))


def auxiliary_gradient(model: EnergyModel, phi: Field, phi_k: Field, v: Field,
                       alpha: float = 0.0, beta: float = 2.0) -> Field:
    """-P dL/dphi for the auxiliary functional with parameters (alpha, beta).

    With (alpha, beta) = (0, 2) this is -P dF(phi) + 2 <v, dF(phi_hat)> P v,
    phi_hat = phi_k + <v, phi - phi_k> v.
    """
    for f in (phi, phi_k, v):
        model._check(f)
    check_zero_mean(v, "direction v")
    dv = model.grid.cell_volume
    vv = v.values
    s = _dot(vv, phi.values - phi_k.values, dv)
    grad = (1.0 - alpha) * model.gradient_array(phi.values)
    if alpha != 0.0:
        g_minus = model.gradient_array(phi.values - s * vv)
        grad += alpha * (g_minus - _dot(vv, g_minus, dv) * vv)
    g_hat = model.gradient_array(phi_k.values + s * vv)
    grad -= beta * _dot(vv, g_hat, dv) * vv
    return Field(model.grid, -(grad - grad.mean()))


# translation kernels ---------------------------------------------------------


class ProjectedTranslation:
    """Semi-implicit steps of d phi/dt = -P dL/dphi with phi_k and v frozen.

    The zero-mean part solves

        (1/dt + S) phi^{n+1} = (1/dt + S) phi^n - P dL(phi^n),
        S = Lin + A + A_r v <v, .>,   A_r = beta * A / 2,

    so that for Ginzburg-Landau with A = 2 this is exactly the convex
    splitting scheme. Lin + A is diagonal in Fourier space and the rank-one
    part is handled by Sherman-Morrison. The mean is carried over unchanged.
    """

    def __init__(self, model: EnergyModel, phi_k: np.ndarray, v: np.ndarray, dt: float,
                 stabilization: float, alpha: float = 0.0, beta: float = 2.0):
        self.model = model
        self.b = model.backend
        self.dv = dv = model.grid.cell_volume
        self.dt = dt
        self.A = A = float(stabilization)
        self.alpha, self.beta = alpha, beta
        self.Ar = beta * A / 2.0
        self.phi_k = phi_k
        self.mass = float(np.mean(phi_k))
        self.v = v
        sym = 1.0 / dt + model.linear_symbol + A
        inv = 1.0 / sym
        inv[self.b.neg_lap_symbol == 0.0] = 0.0
        self.inv_sym = inv
        self.Mv = self.b.apply_symbol(v, inv)
        self.sm_denom = 1.0 + self.Ar * _dot(v, self.Mv, dv)
        if abs(self.sm_denom) < 1e-14:
            raise SolveError("rank-one update denominator vanished")
        self.sm_coef = self.Ar / self.sm_denom
        lin_v = model.apply_linear(v)
        self.c_lin_k = _dot(lin_v, phi_k, dv)
        self.c_lin_v = _dot(lin_v, v, dv)
        self.v_phik = _dot(v, phi_k, dv)
        self.v_norm2 = _dot(v, v, dv)

    def _solve(self, rhs):
        y = self.b.apply_symbol(rhs, self.inv_sym)
        return y - (self.sm_coef * _dot(self.v, y, self.dv)) * self.Mv

    def step(self, phi: np.ndarray) -> np.ndarray:
        if self.alpha != 0.0:
            return self._generic_step(phi)
        model, v, dv = self.model, self.v, self.dv
        v_phi = _dot(v, phi, dv)
        s = v_phi - self.v_phik
        phi_hat = self.phi_k + s * v
        c = self.c_lin_k + s * self.c_lin_v + _dot(v, model.nonlinear(phi_hat), dv)
        # the constant part of rhs is dropped by the solve (zero-mode symbol 0)
        rhs = (1.0 / self.dt + self.A) * phi - model.nonlinear(phi)
        rhs += (self.Ar * v_phi + self.beta * c) * v
        return self._solve(rhs) + self.mass

    def _generic_step(self, phi):
        f = Field(self.model.grid, phi)
        neg_grad = auxiliary_gradient(self.model, f, Field(self.model.grid, self.phi_k),
                                      Field(self.model.grid, self.v), self.alpha, self.beta).values
        psi = phi - phi.mean()
        s_psi = (1.0 / self.dt + self.A) * psi + self.model.apply_linear(psi)
        s_psi += self.Ar * _dot(self.v, psi, self.dv) * self.v
        s_psi -= s_psi.mean()
        return self._solve(s_psi + neg_grad) + self.mass


class H1Translation:
    """Semi-implicit steps of the H^-1 gradient flow of L (alpha = 0):

        d phi/dt = Delta dF(phi) + beta <dF(phi_hat), v>_L2 v,
        phi_hat = phi_k + <v, phi - phi_k>_{H^-1} v,   ||v||_{H^-1} = 1.

    The operator -Delta (Lin + A) is implicit, everything else explicit, and
    the H^-1 pairing goes through a Poisson solve at every step.
    """

    def __init__(self, model: EnergyModel, phi_k: np.ndarray, v: np.ndarray, dt: float,
                 stabilization: float, beta: float = 2.0):
        self.model = model
        self.b = b = model.backend
        self.dv = dv = model.grid.cell_volume
        self.dt = dt
        self.A = A = float(stabilization)
        self.beta = beta
        self.phi_k = phi_k
        self.mass = float(np.mean(phi_k))
        self.v = v
        inv = 1.0 / (1.0 / dt + b.neg_lap_symbol * (model.linear_symbol + A))
        inv[b.neg_lap_symbol == 0.0] = 0.0
        self.inv_sym = inv
        self.stencil = b.kind.value == "finite-difference"
        lin_v = model.apply_linear(v)
        self.c_lin_k = _dot(lin_v, phi_k, dv)
        self.c_lin_v = _dot(lin_v, v, dv)

    def step(self, phi: np.ndarray) -> np.ndarray:
        model, b, v, dv = self.model, self.b, self.v, self.dv
        s = _dot(b.inv_neg_lap(phi - self.phi_k), v, dv)
        phi_hat = self.phi_k + s * v
        c = self.c_lin_k + s * self.c_lin_v + _dot(v, model.nonlinear(phi_hat), dv)
        g = model.nonlinear(phi) - self.A * phi
        if self.stencil:
            rhs_hat = b.fft(phi / self.dt - b.neg_lap(g) + (self.beta * c) * v)
        else:
            rhs_hat = b.fft(phi / self.dt + (self.beta * c) * v) - b.neg_lap_symbol * b.fft(g)
        return b.ifft(self.inv_sym * rhs_hat) + self.mass


def translation_step_convex_split(model: GinzburgLandau, phi_n: Field, phi_k: Field, v: Field,
                                  dt: float) -> Field:
    """One step of the Ginzburg-Landau convex splitting scheme

        (phi^{n+1} - phi^n)/dt = P[k^2 Lap phi - 2 phi - 2<v, phi> v]^{n+1}
                                + P[-phi^3 + 3 phi + 2<v, -k^2 Lap phi_hat + phi_hat^3> v]^n
    """
    if not isinstance(model, GinzburgLandau):
        raise TypeError("the convex splitting scheme is specific to Ginzburg-Landau")
    for f in (phi_n, phi_k, v):
        model._check(f)
    check_zero_mean(v, "direction v")
    b = model.backend
    dv = model.grid.cell_volume
    k2 = model.params.kappa**2
    p, vk, vv = phi_n.values, phi_k.values, v.values
    phi_hat = vk + _dot(vv, p - vk, dv) * vv
    explicit = -p**3 + 3.0 * p
    explicit = explicit - explicit.mean()
    expl_coef = 2.0 * _dot(vv, k2 * b.neg_lap(phi_hat) + phi_hat**3, dv)
    rhs = p / dt + explicit + expl_coef * vv
    mean_next = float(np.mean(rhs)) * dt
    rhs0 = rhs - rhs.mean()
    # zero-mean part: (1/dt + 2 - k^2 Lap) psi + 2 <v, psi> v = rhs0
    sym = 1.0 / dt + 2.0 + k2 * b.neg_lap_symbol
    inv = np.where(b.neg_lap_symbol == 0.0, 0.0, 1.0 / sym)
    y = b.apply_symbol(rhs0, inv)
    z = b.apply_symbol(vv, inv)
    denom = 1.0 + 2.0 * _dot(vv, z, dv)
    if abs(denom) < 1e-14:
        raise SolveError("rank-one update denominator vanished")
    psi = y - (2.0 * _dot(vv, y, dv) / denom) * z
    return Field(model.grid, psi + mean_next)


def translation_step_imex(model: EnergyModel, phi_n: Field, phi_k: Field, v: Field, dt: float,
                          stabilization: float | None = None, beta: float = 2.0) -> Field:
    """One stabilized semi-implicit step of the projected flow of L."""
    for f in (phi_n, phi_k, v):
        model._check(f)
    check_zero_mean(v, "direction v")
    A = model.default_stabilization if stabilization is None else stabilization
    if A < 0:
        raise ValueError("stabilization must be >= 0")
    tr = ProjectedTranslation(model, phi_k.values, v.values, dt, A, beta=beta)
    return Field(model.grid, tr.step(phi_n.values))


def translation_step_h1(model: EnergyModel, phi_n: Field, phi_k: Field, v: Field, dt: float,
                        stabilization: float | None = None, beta: float = 2.0) -> Field:
    """One semi-implicit step of the H^-1 flow of L; v must have unit H^-1 norm."""
    for f in (phi_n, phi_k, v):
        model._check(f)
    check_zero_mean(v, "direction v")
    A = model.default_stabilization if stabilization is None else stabilization
    tr = H1Translation(model, phi_k.values, v.values, dt, A, beta=beta)
    return Field(model.grid, tr.step(phi_n.values))


# IMF ---------------------------------------------------------------------------


def _minmode_opts(cfg: SearchConfig, metric: Metric) -> MinModeOptions:
    return MinModeOptions(tolerance=cfg.minmode_tol, max_iterations=cfg.minmode_max_iter,
                          metric=metric, seed=cfg.seed)


def _quiet(fn):
    """Silence overflow warnings; blow-ups are caught by the divergence guard."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(over="ignore", invalid="ignore"):
            return fn(*args, **kwargs)
    return wrapper


def _check_finite(a):
    return bool(np.all(np.isfinite(a)))


@_quiet
def imf_search(model: EnergyModel, phi0: Field, cfg: SearchConfig | None = None,
               budget: int | None = None, v0: Field | None = None) -> SaddleResult:
    """Iterative minimization formulation, projected (L2) or direct (H^-1).

    Each cycle: residual ||P dF||, rotation step (warm-started from the
    previous v), trace record, stopping tests, translation step. With
    ``cfg.inner_iters == 0`` the translation runs until
    ||phi^{n+1} - phi^n|| / dt <= inner_tol.

    ``budget`` switches to benchmark mode: exactly ``budget`` translation
    steps are executed in total, in cycles of ``inner_iters`` steps, and the
    outer tolerance is ignored.
    """
    cfg = cfg or SearchConfig()
    if cfg.method not in (Method.IMF_PROJECTED, Method.IMF_H1):
        raise ValueError(f"imf_search cannot run method {cfg.method.value}")
    model._check(phi0)
    if budget is not None and cfg.inner_iters <= 0:
        raise ValueError("benchmark mode needs inner_iters > 0")
    h1 = cfg.method is Method.IMF_H1
    metric = Metric.H_MINUS_1 if h1 else Metric.PROJECTED_L2
    opts = _minmode_opts(cfg, metric)
    A = cfg.stabilization_for(model)
    dv = model.grid.cell_volume
    if h1 and cfg.alpha != 0.0:
        raise ValueError("the H^-1 translation step is implemented for alpha = 0")

    trace = ConvergenceTrace()
    phi = np.array(phi0.values, dtype=float)
    last_good = phi.copy()
    v_field = v0
    lam = float("nan")
    status = Status.MAX_CYCLES
    inner_used = 0
    total_inner = 0
    t0 = time.perf_counter()
    cycle = 0
    while True:
        finite = _check_finite(phi)
        res = projected_residual(model, phi) if finite else float("inf")
        if not finite or not res <= DIVERGENCE_THRESHOLD:
            status = Status.DIVERGED
            trace.append(TraceRecord(cycle, inner_used, res if math.isfinite(res) else float("inf"),
                                     float("nan"), lam, time.perf_counter() - t0))
            phi = last_good
            break
        last_good = phi
        phi_field = Field(model.grid, phi)
        try:
            mm = min_mode(model, phi_field, opts, start=v_field)
        except MinModeNotConverged as exc:
            mm = exc.best
        v_field, lam = mm.eigenvector, mm.eigenvalue
        trace.append(TraceRecord(cycle, inner_used, res, model.energy_array(phi), lam,
                                 time.perf_counter() - t0, float(np.mean(phi))))
        if budget is None and res <= cfg.outer_tol:
            status = Status.CONVERGED
            break
        if budget is not None and total_inner >= budget:
            break
        if budget is None and cycle >= cfg.max_cycles:
            break
        if h1:
            tr = H1Translation(model, phi, v_field.values, cfg.dt, A, beta=cfg.beta)
        else:
            tr = ProjectedTranslation(model, phi, v_field.values, cfg.dt, A,
                                      alpha=cfg.alpha, beta=cfg.beta)
        step = tr.step
        if budget is not None:
            n = min(cfg.inner_iters, budget - total_inner)
            for _ in range(n):
                phi = step(phi)
            inner_used = n
        elif cfg.inner_iters > 0:
            for _ in range(cfg.inner_iters):
                phi = step(phi)
            inner_used = cfg.inner_iters
        else:
            inner_used = 0
            tol = cfg.inner_tol * cfg.dt
            while inner_used < cfg.max_inner:
                new = step(phi)
                inner_used += 1
                d = new - phi
                phi = new
                if not math.sqrt(_dot(d, d, dv)) > tol:
                    break
        total_inner += inner_used
        cycle += 1

    wall = time.perf_counter() - t0
    return SaddleResult(phi=Field(model.grid, phi), v=v_field if v_field is not None else
                        Field(model.grid, random_zero_mean(model.grid, cfg.seed)),
                        eigenvalue=lam, trace=trace, status=status, method=cfg.method,
                        total_inner=total_inner, wall_s=wall)


# GAD ---------------------------------------------------------------------------


class _GadStepper:
    """Semi-implicit GAD step; Lin + A is implicit in both equations."""

    def __init__(self, model: EnergyModel, dt: float, gamma: float, stabilization: float,
                 projected: bool):
        self.model = model
        self.b = b = model.backend
        self.dv = model.grid.cell_volume
        self.dt, self.gamma, self.A = dt, gamma, stabilization
        self.projected = projected
        lin = model.linear_symbol
        self.inv_phi = 1.0 / (1.0 / dt + lin + stabilization)
        self.inv_v = 1.0 / (gamma / dt + lin + stabilization)
        if projected:
            zero = b.neg_lap_symbol == 0.0
            self.inv_phi[zero] = 0.0
            self.inv_v[zero] = 0.0

    def step(self, phi, v):
        model, b, dv, A = self.model, self.b, self.dv, self.A
        vv = _dot(v, v, dv)
        if not vv > 1e-28:
            raise SolveError("GAD direction has vanished (||v|| < 1e-14)")
        lin_v = model.apply_linear(v)
        nl = model.nonlinear(phi)
        pot = model.nonlinear_prime(phi)
        grad_v = _dot(phi, lin_v, dv) + _dot(nl, v, dv)  # <dF(phi), v>
        hv = lin_v + pot * v
        v_hv = _dot(v, hv, dv) / vv
        rhs_phi = phi / self.dt + A * phi - nl
        rhs_v = (self.gamma / self.dt) * v - (pot - A) * v
        if self.projected:
            mass = float(np.mean(phi))
            rhs_phi -= rhs_phi.mean()
            rhs_v -= rhs_v.mean()
        rhs_phi += (2.0 * grad_v / vv) * v
        rhs_v += v_hv * v
        new_phi = b.apply_symbol(rhs_phi, self.inv_phi)
        new_v = b.apply_symbol(rhs_v, self.inv_v)
        if self.projected:
            new_phi += mass
            new_v -= new_v.mean()
        nv = math.sqrt(_dot(new_v, new_v, dv))
        if not nv > 1e-14:
            raise SolveError("GAD direction has vanished (||v|| < 1e-14)")
        return new_phi, new_v / nv, v_hv


def gad_step(model: EnergyModel, phi: Field, v: Field, cfg: SearchConfig | None = None):
    """One semi-implicit step of the (projected) GAD; returns (phi', v')."""
    cfg = cfg or SearchConfig(method=Method.GAD_PROJECTED)
    model._check(phi)
    model._check(v)
    projected = cfg.method is not Method.GAD_L2
    if projected:
        check_zero_mean(v, "direction v")
    st = _GadStepper(model, cfg.dt, cfg.gad_gamma, cfg.stabilization_for(model), projected)
    p, w, _ = st.step(phi.values, v.values)
    return Field(model.grid, p), Field(model.grid, w)


@_quiet
def gad_search(model: EnergyModel, phi0: Field, v0: Field | None = None,
               cfg: SearchConfig | None = None, trace_every: int = 1) -> SaddleResult:
    """Iterate GAD steps until ||P dF|| <= outer_tol (one cycle = one step).

    Without ``v0`` the direction starts from the min-mode of ``phi0``, itself
    computed from a seeded random zero-mean field. The ``gad-l2`` variant
    stops on the full ||dF|| since it does not conserve mass.
    """
    cfg = cfg or SearchConfig(method=Method.GAD_PROJECTED, max_cycles=100_000)
    if cfg.method not in (Method.GAD_PROJECTED, Method.GAD_L2):
        raise ValueError(f"gad_search cannot run method {cfg.method.value}")
    model._check(phi0)
    projected = cfg.method is Method.GAD_PROJECTED
    dv = model.grid.cell_volume
    if v0 is None:
        v0 = min_mode(model, phi0, _minmode_opts(cfg, Metric.PROJECTED_L2)).eigenvector
    model._check(v0)
    v = np.array(v0.values, dtype=float)
    if projected:
        check_zero_mean(v0, "initial direction")
        v -= v.mean()
    v /= math.sqrt(_dot(v, v, dv))
    st = _GadStepper(model, cfg.dt, cfg.gad_gamma, cfg.stabilization_for(model), projected)
    phi = np.array(phi0.values, dtype=float)
    trace = ConvergenceTrace()
    status = Status.MAX_CYCLES
    t0 = time.perf_counter()
    lam = float("nan")
    last_good = (phi, v)
    for cycle in range(cfg.max_cycles + 1):
        finite = _check_finite(phi) and _check_finite(v)
        g = model.gradient_array(phi) if finite else None
        if finite:
            full = math.sqrt(_dot(g, g, dv))
            g -= g.mean()
            res = math.sqrt(_dot(g, g, dv))
        if not finite or not res <= DIVERGENCE_THRESHOLD:
            status = Status.DIVERGED
            trace.append(TraceRecord(cycle, 1, res if finite and math.isfinite(res) else float("inf"),
                                     float("nan"), lam, time.perf_counter() - t0))
            phi, v = last_good
            break
        last_good = (phi, v)
        stop_res = res if projected else full
        done = stop_res <= cfg.outer_tol
        if done or cycle % trace_every == 0 or cycle == cfg.max_cycles:
            hv = model.hessian_array(phi, v)
            lam = _dot(v, hv - hv.mean() if projected else hv, dv)
            trace.append(TraceRecord(cycle, 0 if cycle == 0 else 1, res, model.energy_array(phi),
                                     lam, time.perf_counter() - t0, float(np.mean(phi))))
        if done:
            status = Status.CONVERGED
            break
        if cycle == cfg.max_cycles:
            break
        phi, v, _ = st.step(phi, v)
    wall = time.perf_counter() - t0
    return SaddleResult(phi=Field(model.grid, phi), v=Field(model.grid, v), eigenvalue=lam,
                        trace=trace, status=status, method=cfg.method, total_inner=cycle,
                        wall_s=wall)


def search(model: EnergyModel, phi0: Field, cfg: SearchConfig, v0: Field | None = None,
           budget: int | None = None) -> SaddleResult:
    if cfg.method in (Method.IMF_PROJECTED, Method.IMF_H1):
        return imf_search(model, phi0, cfg, budget=budget, v0=v0)
    return gad_search(model, phi0, v0, cfg)


# index verification ------------------------------------------------------------


@dataclass
class Index1Report:
    lambda1: float
    lambda2: float
    is_index1: bool
    degenerate: bool
    residual: float
    mass: float
    lambda2_raw: float
    symmetry_modes: int
    symmetry_eigs: list[float]

    def summary(self) -> dict:
        return asdict(self)


def translation_modes(model: EnergyModel, phi: Field, rel_floor: float = 1e-8) -> list[Field]:
    """Spectral derivatives of phi along each axis (generators of the periodic
    translations), skipping those that vanish."""
    b = model.backend
    g = model.grid
    out = []
    hat = np.fft.rfftn(phi.values)
    if g.ndim == 1:
        k = np.arange(g.n[0] // 2 + 1)
        qs = [(2 * np.pi / g.length[0]) * np.where(k == g.n[0] // 2, 0, k)]
    else:
        kx = np.arange(g.n[0] // 2 + 1)[None, :]
        ky = np.fft.fftfreq(g.n[1], d=1.0 / g.n[1])[:, None]
        kx = np.where(kx == g.n[0] // 2, 0, kx)
        ky = np.where(np.abs(ky) == g.n[1] // 2, 0, ky)
        qs = [(2 * np.pi / g.length[0]) * kx + 0 * ky, (2 * np.pi / g.length[1]) * ky + 0 * kx]
    scale = math.sqrt(_dot(phi.values, phi.values, g.cell_volume))
    for q in qs:
        d = b.ifft(1j * q * hat)
        nd = math.sqrt(_dot(d, d, g.cell_volume))
        if nd > rel_floor * scale:
            out.append(Field(g, d - d.mean()))
    return out


def verify_index1(model: EnergyModel, phi: Field, opts: MinModeOptions | None = None,
                  deflate_symmetry: bool = True, degenerate_tol: float = 1e-8) -> Index1Report:
    """Two smallest eigenvalues of P H P at phi and the index-1 test.

    Both pairs come from block solves of size two, which resolve degenerate
    pairs that a single-vector deflated solve started from the same seed
    cannot. With ``deflate_symmetry`` lambda2 is taken on the complement of
    the translation generators d(phi)/dx_i: on a periodic domain those are
    (near-)null vectors of the Hessian at any critical point, so the test is
    index-1 up to translations. The raw second eigenvalue is reported too.
    """
    opts = opts or MinModeOptions()
    opts = replace(opts, metric=Metric.PROJECTED_L2, block_size=2)
    model._check(phi)
    raw = smallest_eigenpairs(model, phi, opts)
    lam1, lam2_raw = (float(t) for t in raw.eigenvalues[:2])
    sym_modes = translation_modes(model, phi) if deflate_symmetry else []
    sym_eigs = [rayleigh_quotient(model, phi, t) for t in sym_modes]
    lam2 = lam2_raw
    if sym_modes:
        lam2 = float(smallest_eigenpairs(model, phi, opts, deflate=sym_modes).eigenvalues[1])
    return Index1Report(
        lambda1=lam1, lambda2=lam2, is_index1=bool(lam1 < 0.0 < lam2),
        degenerate=bool(abs(lam2_raw - lam1) <= degenerate_tol),
        residual=projected_residual(model, phi.values), mass=float(np.mean(phi.values)),
        lambda2_raw=lam2_raw, symmetry_modes=len(sym_modes), symmetry_eigs=sym_eigs)
