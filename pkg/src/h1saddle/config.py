"""Run configuration: ``[section] key = value`` files and initial-field expressions.

Sections: ``model``, ``method``, ``init`` (or ``init NAME`` for benchmark
states), ``output`` and ``bench``. Relative paths are resolved against the
directory holding the config file.
"""

from __future__ import annotations

import ast
import configparser
import math
import operator
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .energy import LB_DEFAULT_LENGTH, EnergyModel, ginzburg_landau, landau_brazovskii
from .grid import Field, GridError, read_field
from .minmode import Metric
from .saddle import Method, SearchConfig

MASS_TOL = 1e-12


class ConfigError(ValueError):
    pass


# expressions -------------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sin": np.sin, "cos": np.cos}


def evaluate_expression(text: str, x=0.0, y=0.0):
    """Evaluate a closed-grammar expression in x and y.

    Allowed: numbers, ``pi``, ``x``, ``y``, ``sin(.)``, ``cos(.)``, the four
    arithmetic operators and parentheses.
    """
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {text!r}: {exc.msg}") from None
    names = {"x": x, "y": y, "pi": math.pi}

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in names:
            return names[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ConfigError(f"unsupported element {ast.dump(node)[:60]} in expression {text!r}")

    with np.errstate(divide="raise", invalid="raise"):
        try:
            return ev(tree)
        except (ZeroDivisionError, FloatingPointError) as exc:
            raise ConfigError(f"expression {text!r} is not finite: {exc}") from None


# config records ----------------------------------------------------------------


@dataclass
class ModelConfig:
    name: str = "gl1d"
    n: tuple[int, ...] = (100,)
    length: tuple[float, ...] = (1.0,)
    backend: str = "finite-difference"
    kappa: float = 0.04
    tau: float = -0.15
    xi: float = 1.0
    gamma_lb: float = 0.25
    mass: float = 0.6

    def build(self) -> EnergyModel:
        try:
            if self.name == "gl1d":
                if len(self.n) != 1:
                    raise ConfigError("gl1d needs a single grid size")
                return ginzburg_landau(self.n[0], self.kappa, self.mass, self.length[0],
                                       self.backend)
            if self.name == "lb2d":
                if len(self.n) != 2:
                    raise ConfigError("lb2d needs two grid sizes")
                return landau_brazovskii(self.n, self.tau, self.xi, self.gamma_lb, self.mass,
                                         self.length, self.backend)
        except GridError as exc:
            raise ConfigError(f"grid: {exc}") from None
        raise ConfigError(f"unknown model {self.name!r} (expected gl1d or lb2d)")


@dataclass
class InitConfig:
    name: str = "phi0"
    expression: str | None = None
    field_path: Path | None = None

    def build(self, model: EnergyModel) -> Field:
        if self.field_path is not None:
            try:
                phi = read_field(self.field_path)
            except OSError as exc:
                raise ConfigError(f"init {self.name}: {exc}") from None
            except ValueError as exc:
                raise ConfigError(f"init {self.name}: {exc}") from None
            if phi.grid != model.grid:
                raise ConfigError(f"init {self.name}: field grid {phi.grid} does not match "
                                  f"model grid {model.grid}")
        else:
            coords = model.grid.coordinates()
            x = coords[0]
            y = coords[1] if len(coords) > 1 else 0.0
            vals = evaluate_expression(self.expression, x, y)
            try:
                phi = Field(model.grid, np.broadcast_to(vals, model.grid.shape))
            except GridError as exc:
                raise ConfigError(f"init {self.name}: {exc}") from None
        drift = abs(float(np.mean(phi.values)) - model.mass)
        if drift > MASS_TOL:
            raise ConfigError(f"init {self.name}: mean {np.mean(phi.values):.15g} differs from "
                              f"the model mass {model.mass:.15g} by {drift:.3e} (> {MASS_TOL:g})")
        return phi


@dataclass
class BenchConfig:
    methods: tuple[str, ...] = ("imf-projected", "imf-h1")
    budgets: tuple[int, ...] = (10000,)
    inner_iters: int = 100
    repeats: int = 1


@dataclass
class RunConfig:
    model: ModelConfig
    search: SearchConfig
    inits: list[InitConfig]
    metric: Metric = Metric.PROJECTED_L2
    out_dir: Path = Path("out")
    write_fields: bool = True
    write_trace: bool = True
    bench: BenchConfig = field(default_factory=BenchConfig)
    source: Path | None = None

    @property
    def init(self) -> InitConfig:
        return self.inits[0]


# parsing -----------------------------------------------------------------------


def _ints(text):
    out = []
    for t in text.replace(",", " ").split():
        try:
            out.append(int(t))
        except ValueError:
            raise ConfigError(f"expected an integer, got {t!r}") from None
    return tuple(out)


def _floats(text):
    out = []
    for t in text.replace(",", " ").split():
        val = evaluate_expression(t)
        out.append(float(val))
    return tuple(out)


_SEARCH_TYPES = {f.name: f.type for f in fields(SearchConfig)}


def _search_from(section) -> SearchConfig:
    kw = {}
    for key, raw in section.items():
        if key == "metric":
            continue
        if key not in _SEARCH_TYPES:
            raise ConfigError(f"[method] unknown key {key!r}")
        t = _SEARCH_TYPES[key]
        try:
            if key == "method":
                kw[key] = Method(raw.strip())
            elif key == "stabilization" and raw.strip().lower() in ("", "auto", "default"):
                kw[key] = None
            elif "int" in str(t):
                kw[key] = int(raw)
            else:
                kw[key] = float(evaluate_expression(raw))
        except ValueError as exc:
            raise ConfigError(f"[method] {key} = {raw!r}: {exc}") from None
    try:
        return SearchConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"[method] {exc}") from None


def _model_from(section) -> ModelConfig:
    name = section.get("name", "gl1d").strip()
    mc = ModelConfig(name=name)
    if name == "lb2d":
        mc.n, mc.length, mc.backend, mc.mass = (64, 64), LB_DEFAULT_LENGTH, "spectral", 0.0
    for key, raw in section.items():
        if key == "name":
            continue
        if key == "n":
            mc.n = _ints(raw)
        elif key == "length":
            mc.length = _floats(raw)
        elif key == "backend":
            mc.backend = raw.strip()
        elif key in ("kappa", "tau", "xi", "gamma_lb", "mass"):
            setattr(mc, key, float(evaluate_expression(raw)))
        else:
            raise ConfigError(f"[model] unknown key {key!r}")
    if len(mc.length) != len(mc.n):
        raise ConfigError(f"[model] {len(mc.n)} grid sizes but {len(mc.length)} lengths")
    for k in mc.n:
        if k < 4 or k % 2:
            raise ConfigError(f"[model] grid size {k} violates 'point counts even and >= 4'")
    return mc


def _init_from(name, section, base: Path) -> InitConfig:
    expr = section.get("expression")
    path = section.get("field")
    if (expr is None) == (path is None):
        raise ConfigError(f"[{section.name}] needs exactly one of 'expression' or 'field'")
    fp = None
    if path is not None:
        fp = Path(path.strip())
        if not fp.is_absolute():
            fp = base / fp
        if not fp.exists():
            raise ConfigError(f"[{section.name}] field file {fp} does not exist")
    return InitConfig(name=name, expression=expr, field_path=fp)


def _bool(raw):
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {raw!r}")


def parse_config(text: str, base: Path | str = ".") -> RunConfig:
    base = Path(base)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from None
    if not cp.has_section("model"):
        raise ConfigError("missing [model] section")
    model = _model_from(cp["model"])
    search = _search_from(cp["method"]) if cp.has_section("method") else SearchConfig()
    metric = Metric.PROJECTED_L2
    if cp.has_option("method", "metric"):
        try:
            metric = Metric(cp.get("method", "metric").strip())
        except ValueError:
            raise ConfigError("[method] metric must be projected-l2 or h-1") from None

    inits = []
    if cp.has_section("init"):
        sec = cp["init"]
        inits.append(_init_from("phi0", sec, base))
        if "v_seed" in sec:
            search.seed = int(sec["v_seed"])
    named = [s for s in cp.sections() if s.startswith("init ")]
    for s in named:
        inits.append(_init_from(s.split(None, 1)[1].strip(), cp[s], base))

    out = cp["output"] if cp.has_section("output") else {}
    out_dir = Path(out.get("directory", "out").strip())
    if not out_dir.is_absolute():
        out_dir = base / out_dir
    cfg = RunConfig(model=model, search=search, inits=inits, metric=metric, out_dir=out_dir,
                    write_fields=_bool(out.get("write_fields", "true")),
                    write_trace=_bool(out.get("write_trace", "true")))
    if cp.has_section("bench"):
        b = cp["bench"]
        try:
            cfg.bench = BenchConfig(
                methods=tuple(m.strip() for m in b.get("methods", "imf-projected, imf-h1")
                              .replace(",", " ").split()),
                budgets=_ints(b.get("budgets", "10000")),
                inner_iters=int(b.get("inner_iters", "100")),
                repeats=int(b.get("repeats", "1")))
        except ValueError as exc:
            raise ConfigError(f"[bench] {exc}") from None
        for m in cfg.bench.methods:
            if m not in (Method.IMF_PROJECTED.value, Method.IMF_H1.value):
                raise ConfigError(f"[bench] method {m!r} is not an IMF variant")
        order = b.get("inits")
        if order:
            wanted = order.replace(",", " ").split()
            by_name = {i.name: i for i in inits}
            missing = [w for w in wanted if w not in by_name]
            if missing:
                raise ConfigError(f"[bench] inits {missing} have no [init NAME] section")
            cfg.inits = [by_name[w] for w in wanted]
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = parse_config(text, path.parent)
    cfg.source = path
    return cfg
