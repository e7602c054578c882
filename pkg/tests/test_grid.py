import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from h1saddle.energy import LB_DEFAULT_LENGTH
from h1saddle.grid import (Field, FieldFormatError, Grid, GridError, inner_l2, integrate,
                           norm_l2, read_field, write_field)

G1 = Grid((100,), (1.0,))
G2 = Grid((64, 64), LB_DEFAULT_LENGTH)


def sine(k=1):
    return Field.from_function(G1, lambda x: np.sin(2 * np.pi * k * x))


def test_grid_invariants():
    assert G1.h == (0.01,)
    assert G2.shape == (64, 64)
    assert G2.cell_volume == pytest.approx(G2.volume / 4096, rel=1e-15)
    for k, h, L in zip(G2.n, G2.h, G2.length):
        assert h * k == pytest.approx(L, rel=1e-15)


@pytest.mark.parametrize("n", [(3,), (101,), (2,), (64, 63), (4, 4, 4)])
def test_grid_rejects_bad_counts(n):
    with pytest.raises(GridError):
        Grid(n, (1.0,) * len(n))


def test_grid_rejects_bad_length():
    with pytest.raises(GridError):
        Grid((8,), (0.0,))


def test_integrate_examples():
    assert integrate(Field.constant(G1, 1.0)) == pytest.approx(1.0, abs=1e-15)
    assert abs(integrate(sine())) < 1e-14
    area = 128 * math.pi**2 / math.sqrt(3)
    assert integrate(Field.constant(G2, 0.6)) == pytest.approx(0.6 * area, rel=1e-13)
    assert 0.6 * area == pytest.approx(437.623, abs=1e-3)


def test_inner_examples():
    one = Field.constant(G1, 1.0)
    cos = Field.from_function(G1, lambda x: np.cos(2 * np.pi * x))
    assert inner_l2(one, one) == pytest.approx(1.0, abs=1e-15)
    assert abs(inner_l2(sine(), cos)) < 1e-14
    assert inner_l2(sine(), sine()) == pytest.approx(0.5, abs=1e-14)
    assert norm_l2(sine()) == pytest.approx(math.sqrt(0.5), abs=1e-14)


def test_grid_mismatch():
    f = Field.constant(Grid((8,), (1.0,)), 1.0)
    with pytest.raises(GridError):
        inner_l2(f, Field.constant(Grid((8,), (2.0,)), 1.0))
    with pytest.raises(GridError):
        f + Field.constant(Grid((10,), (1.0,)), 1.0)


def test_field_is_immutable_and_finite():
    f = Field.constant(G1, 0.6)
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(GridError):
        Field(G1, np.full(100, np.nan))
    with pytest.raises(GridError):
        Field(G1, np.zeros(99))


def test_field_arithmetic():
    f = sine()
    g = 2.0 * f - f + 1.0
    assert np.allclose(g.values, f.values + 1.0)
    assert (f / 2).max_abs() == pytest.approx(0.5, abs=1e-12)


fields_1d = st.integers(0, 2**32 - 1).map(
    lambda s: Field(G1, np.random.default_rng(s).standard_normal(100)))
scalars = st.floats(-10, 10, allow_nan=False)


@given(fields_1d, fields_1d, scalars, scalars)
def test_integrate_linear(f, g, a, b):
    lhs = integrate(a * f + b * g)
    rhs = a * integrate(f) + b * integrate(g)
    scale = (abs(a) + abs(b)) * (norm_l2(f) + norm_l2(g)) + 1e-300
    assert abs(lhs - rhs) <= 1e-13 * scale


@given(fields_1d, fields_1d)
def test_inner_exactly_symmetric(f, g):
    assert inner_l2(f, g) == inner_l2(g, f)


def test_roundtrip_constant(tmp_path):
    f = Field.constant(G1, 0.6)
    write_field(f, tmp_path / "c.field", comment="constant")
    assert np.array_equal(read_field(tmp_path / "c.field").values, f.values)


@pytest.mark.parametrize("grid", [G1, G2])
@given(seed=st.integers(0, 2**32 - 1))
def test_roundtrip_random(tmp_path_factory, grid, seed):
    f = Field(grid, np.random.default_rng(seed).standard_normal(grid.shape) * 3.0)
    path = tmp_path_factory.mktemp("rt") / "f.field"
    write_field(f, path)
    g = read_field(path)
    assert g.grid == grid
    assert np.max(np.abs(g.values - f.values)) <= 1e-15 * f.max_abs()


def test_file_layout(tmp_path):
    f = Field.from_function(G2, lambda x, y: x + 100 * y)
    write_field(f, tmp_path / "f.field", comment="two\nlines")
    lines = (tmp_path / "f.field").read_text().splitlines()
    assert lines[0] == "# two" and lines[1] == "# lines"
    head = lines[2].split()
    assert head[:3] == ["2", "64", "64"]
    assert float(head[3]) == G2.length[0]
    # x runs fastest
    assert float(lines[4]) == pytest.approx(G2.h[0])
    assert float(lines[3 + 64]) == pytest.approx(100 * G2.h[1])


def test_value_count_mismatch(tmp_path):
    p = tmp_path / "bad.field"
    p.write_text("1 100 1.0\n" + "0.5\n" * 99)
    with pytest.raises(FieldFormatError, match="value count mismatch"):
        read_field(p)


@pytest.mark.parametrize("text", ["", "x y z\n1\n", "1 100\n", "1 101 1.0\n" + "0\n" * 101,
                                  "1 4 1.0\n0\n0\nnan\n0\n", "1 4 1.0\n0\n0\nabc\n0\n"])
def test_malformed_files(tmp_path, text):
    p = tmp_path / "bad.field"
    p.write_text(text)
    with pytest.raises(FieldFormatError):
        read_field(p)
