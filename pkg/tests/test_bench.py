import pytest

from h1saddle.bench import BenchRow, run_bench, run_cell, speedups, write_speedup_csv
from h1saddle.config import parse_config

TEXT = """
[model]
name = gl1d
n = 32
mass = 0.6
[bench]
budgets = 0, 250
inner_iters = 100
repeats = 2
[init a]
expression = 0.6 - 0.12*cos(2*pi*x) - 0.08*cos(4*pi*x)
[init b]
expression = 0.6 - 0.1*cos(2*pi*x) - 0.1*cos(4*pi*x)
"""


def test_budget_is_exact():
    cfg = parse_config(TEXT)
    for method in ("imf-projected", "imf-h1"):
        row = run_cell(cfg.model, cfg.search, cfg.inits[0], method, 250, 100, 1)
        assert row.steps == 250 and row.iterN == 250 and row.wall_s > 0


def test_zero_budget_is_setup_only():
    cfg = parse_config(TEXT)
    row = run_cell(cfg.model, cfg.search, cfg.inits[0], "imf-h1", 0, 100)
    assert row.steps == 0


def test_run_bench_parallel_matches_serial_layout():
    cfg = parse_config(TEXT)
    serial = run_bench(cfg, jobs=1)
    para = run_bench(cfg, jobs=2)
    key = lambda r: (r.init, r.method, r.iterN, r.steps)
    assert [key(r) for r in serial] == [key(r) for r in para]
    assert len(serial) == 8


def test_speedups_skip_zero_and_incomplete(tmp_path):
    rows = [BenchRow("a", "imf-projected", 0, 0.01, 0, "max-cycles"),
            BenchRow("a", "imf-h1", 0, 0.02, 0, "max-cycles"),
            BenchRow("a", "imf-projected", 100, 1.0, 100, "max-cycles"),
            BenchRow("a", "imf-h1", 100, 1.5, 100, "max-cycles"),
            BenchRow("b", "imf-h1", 100, 1.5, 100, "max-cycles")]
    out = speedups(rows)
    assert out == [("a", 100, 1.5, 1.0, 1.5)]
    write_speedup_csv(out, tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().splitlines()[1] == "a,100,1.500000,1.000000,1.5000"


def test_bench_needs_inits():
    cfg = parse_config("[model]\nname = gl1d\nn = 32\n")
    with pytest.raises(ValueError):
        run_bench(cfg)
