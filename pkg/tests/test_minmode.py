import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from h1saddle.energy import ginzburg_landau, landau_brazovskii
from h1saddle.grid import Field, inner_l2, integrate, norm_l2
from h1saddle.minmode import (GridTooLargeError, Metric, MinModeNotConverged, MinModeOptions,
                              dense_oracle, min_mode, rayleigh_quotient, smallest_eigenpairs)
from h1saddle.operators import ZeroMeanError, inner_hminus1

from oracles import DenseGL, h1_mode_scan, principal_angle, projected_spectrum

KAPPA = 0.04
LAM1 = KAPPA**2 * 4 * np.pi**2 - 1  # mode-1 value at phi = 0


def gl(n=100, backend="spectral", mass=0.0):
    return ginzburg_landau(n, KAPPA, mass, backend=backend)


def zero(model):
    return Field.constant(model.grid, model.mass)


def sin1(model, k=1):
    return Field.from_function(model.grid, lambda x: np.sin(2 * np.pi * k * x))


def metric_norm(model, v, metric):
    if Metric(metric) is Metric.H_MINUS_1:
        return np.sqrt(inner_hminus1(v, v, model.backend))
    return norm_l2(v)


def test_rayleigh_examples():
    m = gl()
    phi, s = zero(m), sin1(m)
    assert rayleigh_quotient(m, phi, s) == pytest.approx(LAM1, rel=1e-12)
    assert LAM1 == pytest.approx(-0.936834, abs=1e-6)
    h1 = rayleigh_quotient(m, phi, s, "h-1")
    assert h1 == pytest.approx(4 * np.pi**2 * LAM1, rel=1e-12)
    assert h1 == pytest.approx(-36.985, abs=1e-3)
    psi = s + 0.3 * sin1(m, 5)
    assert rayleigh_quotient(m, phi, 2.0 * psi) == pytest.approx(
        rayleigh_quotient(m, phi, psi), rel=1e-13)


def test_rayleigh_errors():
    m = gl()
    with pytest.raises(ZeroMeanError):
        rayleigh_quotient(m, zero(m), Field.constant(m.grid, 0.0))
    with pytest.raises(ZeroMeanError):
        rayleigh_quotient(m, zero(m), sin1(m) + 0.1)


def test_min_mode_zero_state_l2():
    m = gl()
    res = min_mode(m, zero(m))
    assert res.eigenvalue == pytest.approx(LAM1, abs=1e-9)
    c = Field.from_function(m.grid, lambda x: np.cos(2 * np.pi * x))
    s = sin1(m)
    # v lies in span{sin, cos}
    a, b = inner_l2(res.eigenvector, s) / 0.5, inner_l2(res.eigenvector, c) / 0.5
    rest = res.eigenvector - (a * s + b * c)
    assert norm_l2(rest) < 1e-6


def test_min_mode_zero_state_fd():
    m = gl(backend="finite-difference")
    res = min_mode(m, zero(m))
    h = 0.01
    assert res.eigenvalue == pytest.approx(KAPPA**2 * (2 - 2 * np.cos(2 * np.pi / 100)) / h**2 - 1,
                                           abs=1e-9)


def test_min_mode_zero_state_h1_picks_mode_three():
    m = gl()
    k, lam = h1_mode_scan(KAPPA, 100)
    assert k == 3
    assert lam == pytest.approx(36 * np.pi**2 * (KAPPA**2 * 36 * np.pi**2 - 1), rel=1e-14)
    res = min_mode(m, zero(m), MinModeOptions(metric="h-1"))
    assert res.eigenvalue == pytest.approx(lam, abs=1e-6)
    spec = np.abs(np.fft.rfft(res.eigenvector.values))
    assert int(np.argmax(spec)) == 3


def test_min_mode_uniform_state():
    m = gl(mass=0.6)
    res = min_mode(m, zero(m))
    assert res.eigenvalue == pytest.approx(KAPPA**2 * 4 * np.pi**2 + 0.08, abs=1e-9)
    assert res.eigenvalue == pytest.approx(0.143166, abs=1e-6)


def test_min_mode_lb_zero_state():
    m = landau_brazovskii()
    res = min_mode(m, Field.constant(m.grid, 0.0))
    assert res.eigenvalue == pytest.approx(-0.15, abs=1e-9)


def test_dense_oracle_fd_mode_one():
    m = gl(32, "finite-difference")
    spec = dense_oracle(m, zero(m))
    h = 1 / 32
    assert spec.eigenvalues[0] == pytest.approx(
        KAPPA**2 * (2 - 2 * np.cos(2 * np.pi / 32)) / h**2 - 1, abs=1e-12)
    # sin/cos pairs at a constant state (the last mode, Nyquist, is single)
    ev = spec.eigenvalues
    assert np.allclose(ev[0:30:2], ev[1:31:2], atol=1e-12)


def test_dense_oracle_matches_independent_assembly():
    m = gl(32, "finite-difference", mass=0.6)
    phi = Field(m.grid, 0.6 + 0.3 * np.random.default_rng(3).standard_normal(32))
    ours = dense_oracle(m, phi).eigenvalues
    ref, _ = projected_spectrum(DenseGL(32).hessian(phi.values))
    assert np.allclose(ours, ref, atol=1e-10)


def test_dense_oracle_limit():
    m = gl(100)
    with pytest.raises(GridTooLargeError):
        dense_oracle(m, zero(m))


def _random_state(model, seed):
    rng = np.random.default_rng(seed)
    return Field(model.grid, model.mass + 0.4 * rng.standard_normal(model.grid.shape))


@pytest.mark.parametrize("metric", ["projected-l2", "h-1"])
@pytest.mark.parametrize("which", ["gl32", "lb8"])
@settings(max_examples=5)
@given(seed=st.integers(0, 2**32 - 1))
def test_iterative_matches_dense(metric, which, seed):
    if which == "gl32":
        m = ginzburg_landau(32, KAPPA, 0.6, backend="finite-difference")
    else:
        m = landau_brazovskii((8, 8))
    phi = _random_state(m, seed)
    dense = dense_oracle(m, phi, metric)
    res = min_mode(m, phi, MinModeOptions(metric=metric))
    assert abs(res.eigenvalue - dense.eigenvalues[0]) <= 1e-8
    gap = dense.eigenvalues[1] - dense.eigenvalues[0]
    if gap > 1e-6:
        ang = principal_angle(res.eigenvector.values.reshape(-1, 1),
                              dense.eigenvectors[0].values.reshape(-1, 1))
        assert ang <= 1e-5


@pytest.mark.parametrize("metric", ["projected-l2", "h-1"])
@pytest.mark.parametrize("which", ["gl", "lb"])
def test_result_invariants(metric, which):
    if which == "gl":
        m = ginzburg_landau(100, KAPPA, 0.6)
        phi = Field.from_function(m.grid, lambda x: 0.6 - 0.4 * np.cos(2 * np.pi * x))
    else:
        m = landau_brazovskii((32, 32))
        phi = Field.from_function(m.grid, lambda x, y: 0.5 * np.cos(y) + 0.1 * np.cos(0.8 * x))
    res = min_mode(m, phi, MinModeOptions(metric=metric))
    v = res.eigenvector
    assert abs(integrate(v)) <= 1e-12 * norm_l2(v)
    assert metric_norm(m, v, metric) == pytest.approx(1.0, abs=1e-12)
    floor = 64 * np.finfo(float).eps * res.scale
    assert res.residual <= max(1e-10 * max(1.0, abs(res.eigenvalue)), floor)
    rq = rayleigh_quotient(m, phi, v, metric)
    assert rq == pytest.approx(res.eigenvalue, rel=1e-10, abs=1e-12)
    hist = np.array(res.history)
    assert np.all(np.diff(hist) <= 1e-12 * max(1.0, np.max(np.abs(hist))))


def test_warm_start_is_cheaper():
    m = ginzburg_landau(100, KAPPA, 0.6)
    phi = Field.from_function(m.grid, lambda x: 0.6 - 0.4 * np.cos(2 * np.pi * x))
    cold = min_mode(m, phi)
    warm = min_mode(m, phi, start=cold.eigenvector)
    assert warm.iterations <= 2
    assert warm.eigenvalue == pytest.approx(cold.eigenvalue, abs=1e-12)


def test_seed_reproducible():
    m = ginzburg_landau(100, KAPPA, 0.6)
    phi = Field.from_function(m.grid, lambda x: 0.6 - 0.3 * np.cos(2 * np.pi * x))
    a = min_mode(m, phi, MinModeOptions(seed=4))
    b = min_mode(m, phi, MinModeOptions(seed=4))
    assert np.array_equal(a.eigenvector.values, b.eigenvector.values)


def test_block_and_deflation():
    m = gl(mass=0.6)
    res = smallest_eigenpairs(m, zero(m), MinModeOptions(block_size=2))
    assert np.allclose(res.eigenvalues, 0.143166, atol=1e-6)
    d = smallest_eigenpairs(m, zero(m), MinModeOptions(block_size=1),
                            deflate=[sin1(m), Field.from_function(m.grid,
                                                                  lambda x: np.cos(2 * np.pi * x))])
    assert d.eigenvalue == pytest.approx(KAPPA**2 * 16 * np.pi**2 + 0.08, abs=1e-9)


def test_not_converged_carries_best():
    m = ginzburg_landau(100, KAPPA, 0.6)
    phi = Field.from_function(m.grid, lambda x: 0.6 - 0.4 * np.cos(2 * np.pi * x))
    with pytest.raises(MinModeNotConverged) as info:
        min_mode(m, phi, MinModeOptions(max_iterations=2, tolerance=1e-14))
    best = info.value.best
    assert best.iterations == 2 and np.isfinite(best.eigenvalue)


def test_options_validation():
    with pytest.raises(ValueError):
        MinModeOptions(tolerance=0.0)
    with pytest.raises(ValueError):
        MinModeOptions(metric="h1")
