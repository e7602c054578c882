"""Command line: ``run``, ``bench``, ``verify`` and ``minmode``.

Exit codes: 0 success, 1 field is not an index-1 saddle (verify), 2 config or
grid error, 3 divergence, unconverged search or eigensolver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import bench as bench_mod
from .config import ConfigError, RunConfig, load_config
from .grid import FieldFormatError, GridError, read_field, write_field
from .minmode import Metric, MinModeNotConverged, MinModeOptions, min_mode
from .saddle import Method, Status, search, verify_index1

EXIT_OK, EXIT_NOT_INDEX1, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("h1saddle")


def _json_float(x):
    return x if isinstance(x, float) and math.isfinite(x) else None


def _write_json(path: Path, data: dict):
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _index_report(model, phi, cfg: RunConfig):
    opts = MinModeOptions(tolerance=cfg.search.minmode_tol,
                          max_iterations=cfg.search.minmode_max_iter, seed=cfg.search.seed)
    return verify_index1(model, phi, opts)


def cmd_run(cfg: RunConfig) -> int:
    model = cfg.model.build()
    phi0 = cfg.init.build(model)
    res = search(model, phi0, cfg.search)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    h1 = cfg.search.method is Method.IMF_H1
    if cfg.write_fields:
        write_field(res.phi, out / "phi_star.field", comment=f"{cfg.search.method.value} saddle")
        write_field(res.v, out / "v_star.field",
                    comment=f"min-mode, unit {'H^-1' if h1 else 'L2'} norm")
    if cfg.write_trace:
        res.trace.write_csv(out / "trace.csv")
    summary = {
        "status": res.status.value, "method": res.method.value,
        "cycles": len(res.trace) - 1, "total_inner": res.total_inner,
        "energy": model.energy_array(res.phi.values),
        "residual": float(res.trace.records[-1].residual_l2) if len(res.trace) else None,
        "mass": float(res.phi.values.mean()), "wall_s": res.wall_s,
        "v_normalization": "H^-1" if h1 else "L2",
    }
    try:
        rep = _index_report(model, res.phi, cfg)
        summary.update(lambda1=rep.lambda1, lambda2=rep.lambda2, lambda2_raw=rep.lambda2_raw,
                       is_index1=rep.is_index1)
    except MinModeNotConverged as exc:
        log.warning("index check failed: %s", exc)
        summary.update(lambda1=None, lambda2=None, is_index1=None)
    summary = {k: _json_float(v) if isinstance(v, float) else v for k, v in summary.items()}
    _write_json(out / "summary.json", summary)
    print(json.dumps(summary, indent=2, sort_keys=True))
    if res.status is Status.CONVERGED:
        return EXIT_OK
    log.error("search ended with status %s", res.status.value)
    return EXIT_SOLVER


def cmd_bench(cfg: RunConfig, jobs: int) -> int:
    rows = bench_mod.run_bench(cfg, jobs)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    bench_mod.write_bench_csv(rows, out / "bench.csv")
    ratios = bench_mod.speedups(rows)
    bench_mod.write_speedup_csv(ratios, out / "speedup.csv")
    print(",".join(bench_mod.BENCH_HEADER))
    for r in rows:
        print(f"{r.init},{r.method},{r.iterN},{r.wall_s:.6f}")
    for init, n, h1, pr, ratio in ratios:
        print(f"# {init} iterN={n}: imf-h1/imf-projected = {ratio:.3f}")
    bad = [r for r in rows if r.status == Status.DIVERGED.value or r.steps != r.iterN]
    for r in bad:
        log.error("cell %s/%s/%d: status %s after %d steps", r.init, r.method, r.iterN,
                  r.status, r.steps)
    return EXIT_SOLVER if bad else EXIT_OK


def cmd_verify(field_path: Path, cfg: RunConfig) -> int:
    model = cfg.model.build()
    try:
        phi = read_field(field_path)
    except (OSError, FieldFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if phi.grid != model.grid:
        print(f"error: field grid {phi.grid} does not match config grid {model.grid}",
              file=sys.stderr)
        return EXIT_CONFIG
    rep = _index_report(model, phi, cfg)
    report = {
        "residual": rep.residual, "lambda1": rep.lambda1, "lambda2": rep.lambda2,
        "lambda2_raw": rep.lambda2_raw, "degenerate": rep.degenerate,
        "is_index1": rep.is_index1, "mass": rep.mass,
        "translation_modes_deflated": rep.symmetry_modes,
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    ok = rep.is_index1 and rep.residual <= cfg.search.outer_tol
    return EXIT_OK if ok else EXIT_NOT_INDEX1


def cmd_minmode(cfg: RunConfig, metric: str | None) -> int:
    model = cfg.model.build()
    phi = cfg.init.build(model)
    m = Metric(metric) if metric else cfg.metric
    opts = MinModeOptions(tolerance=cfg.search.minmode_tol,
                          max_iterations=cfg.search.minmode_max_iter, metric=m,
                          seed=cfg.search.seed)
    try:
        res = min_mode(model, phi, opts)
    except MinModeNotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_field(res.eigenvector, out / "v_min.field", comment=f"min-mode, metric {m.value}")
    report = {"metric": m.value, "eigenvalue": res.eigenvalue, "residual": res.residual,
              "iterations": res.iterations}
    _write_json(out / "minmode.json", report)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="h1saddle",
                                description="Index-1 saddle search for mass-conserving "
                                            "phase-field energies.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the configured saddle search")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--out", type=Path)
    b = sub.add_parser("bench", help="fixed-budget timing of imf-projected vs imf-h1")
    b.add_argument("--config", required=True, type=Path)
    b.add_argument("--out", type=Path)
    b.add_argument("--jobs", type=int, default=1)
    v = sub.add_parser("verify", help="check that a field is an index-1 saddle")
    v.add_argument("--field", required=True, type=Path)
    v.add_argument("--config", required=True, type=Path)
    m = sub.add_parser("minmode", help="min-mode of the projected Hessian at the init field")
    m.add_argument("--config", required=True, type=Path)
    m.add_argument("--metric", choices=[x.value for x in Metric])
    m.add_argument("--out", type=Path)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if getattr(args, "out", None) is not None:
            cfg = replace(cfg, out_dir=args.out)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "bench":
            return cmd_bench(cfg, max(1, args.jobs))
        if args.command == "verify":
            return cmd_verify(args.field, cfg)
        return cmd_minmode(cfg, args.metric)
    except (ConfigError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MinModeNotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
