"""Fixed-budget timing of the projected and direct IMF variants.

Each cell (initial state, method, budget) runs exactly ``budget`` translation
steps in cycles of ``inner_iters`` steps, with no early stop, and records the
wall time of the search loop. With ``repeats > 1`` the minimum is kept.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .config import InitConfig, ModelConfig, RunConfig
from .saddle import Method, SearchConfig, Status, imf_search

BENCH_HEADER = ("init", "method", "iterN", "wall_s")
SPEEDUP_HEADER = ("init", "iterN", "wall_imf_h1", "wall_imf_projected", "ratio")


@dataclass
class BenchRow:
    init: str
    method: str
    iterN: int
    wall_s: float
    steps: int
    status: str


def run_cell(model_cfg: ModelConfig, search: SearchConfig, init: InitConfig, method: str,
             budget: int, inner_iters: int, repeats: int = 1) -> BenchRow:
    model = model_cfg.build()
    phi0 = init.build(model)
    cfg = replace(search, method=Method(method), inner_iters=inner_iters)
    # one short untimed pass warms FFT plan caches and allocator pools
    imf_search(model, phi0, cfg, budget=min(budget, inner_iters))
    best = math.inf
    for _ in range(max(1, repeats)):
        res = imf_search(model, phi0, cfg, budget=budget)
        best = min(best, res.wall_s)
        if res.status is Status.DIVERGED:
            break
    return BenchRow(init.name, method, budget, best, res.total_inner, res.status.value)


def _cell_args(cfg: RunConfig):
    b = cfg.bench
    for init in cfg.inits:
        for budget in b.budgets:
            for method in b.methods:
                yield (cfg.model, cfg.search, init, method, budget, b.inner_iters, b.repeats)


def run_bench(cfg: RunConfig, jobs: int = 1) -> list[BenchRow]:
    if not cfg.inits:
        raise ValueError("benchmark needs at least one initial state")
    args = list(_cell_args(cfg))
    if jobs <= 1:
        return [run_cell(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_cell, *zip(*args)))


def speedups(rows: list[BenchRow]) -> list[tuple]:
    """(init, iterN, h1 wall, projected wall, ratio) for every complete pair
    with a positive budget."""
    table = {(r.init, r.method, r.iterN): r for r in rows}
    out = []
    seen = []
    for r in rows:
        key = (r.init, r.iterN)
        if key in seen or r.iterN <= 0:
            continue
        seen.append(key)
        h1 = table.get((r.init, Method.IMF_H1.value, r.iterN))
        pr = table.get((r.init, Method.IMF_PROJECTED.value, r.iterN))
        if h1 is None or pr is None or pr.wall_s <= 0:
            continue
        out.append((r.init, r.iterN, h1.wall_s, pr.wall_s, h1.wall_s / pr.wall_s))
    return out


def write_bench_csv(rows: list[BenchRow], path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BENCH_HEADER)
        for r in rows:
            w.writerow([r.init, r.method, r.iterN, f"{r.wall_s:.6f}"])


def write_speedup_csv(ratios: list[tuple], path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SPEEDUP_HEADER)
        for init, n, h1, pr, ratio in ratios:
            w.writerow([init, n, f"{h1:.6f}", f"{pr:.6f}", f"{ratio:.4f}"])
