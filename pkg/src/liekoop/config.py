"""System definitions and run settings from INI-style ``.cfg`` files.

A config file names a chart, a group, a vector field, a map into the group,
an optional metric and a sampling plan. Fields and maps are built from a
small set of builtin kinds parameterized by numbers or trigonometric
polynomial tables; there is no expression language. Unknown sections and
keys are rejected.
"""
from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .differential import GroupValuedMap
from .errors import ConfigError
from .groups import GroupSpec, get_group
from .manifold import ChartModel, RiemannianMetric, VectorField

COMMANDS = ("verify", "rescale", "lift-check", "residual", "suite")
GRID_CAP = 4096

_ALLOWED = {
    "system": {"id", "description", "group", "omega_target", "lift_anchor"},
    "chart": {"periodic", "names", "lower", "upper"},
    "field": {"kind", "value", "terms", "matrix"},
    "map": {"kind", "generator"},
    "factor": {"generator", "const", "linear", "terms"},
    "metric": {"kind", "gram", "diagonal"},
    "sampling": {"grid", "random", "seed"},
    "expect": {"eigenfunction", "rescalable"},
    "run": {"command", "tol", "collin_tol", "zero_tol", "fd_step", "rk4_step", "horizon", "residual_tol",
            "out", "csv"},
}
_REQUIRED = {"system": ("id", "group"), "chart": ("periodic",), "field": ("kind",), "map": ("kind",)}
_FACTOR_RE = re.compile(r"^factor\.(\d+)$")


@dataclass(frozen=True)
class TrigPolynomial:
    """``const + linear . x + sum coef * sin|cos(modes . x)``."""

    const: float = 0.0
    linear: tuple[float, ...] = ()
    terms: tuple[tuple[float, str, tuple[float, ...]], ...] = ()

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        total = self.const
        if self.linear:
            total += float(np.dot(self.linear, x))
        for coef, kind, modes in self.terms:
            arg = float(np.dot(modes, x))
            total += coef * (math.sin(arg) if kind == "sin" else math.cos(arg))
        return total


@dataclass
class SystemDefinition:
    id: str
    chart: ChartModel
    group: GroupSpec
    field: VectorField
    map_z: GroupValuedMap
    metric: RiemannianMetric
    grid: int = 16
    random: int = 256
    seed: int = 0
    omega_target: np.ndarray | None = None
    lift_anchor: np.ndarray | None = None
    expect: dict = field(default_factory=dict)
    description: str = ""

    def samples(self) -> np.ndarray:
        """Regular grid (at most 4096 points) followed by seeded uniform points."""
        n = self.chart.n
        res = self.grid
        while res > 1 and res**n > GRID_CAP:
            res -= 1
        parts = [self.chart.grid(res)] if res > 0 else []
        if self.random > 0:
            parts.append(self.chart.uniform(np.random.default_rng(self.seed), self.random))
        if not parts:
            raise ConfigError("sampling plan is empty", field="sampling")
        return np.vstack(parts)

    def anchor(self) -> np.ndarray:
        return self.lift_anchor if self.lift_anchor is not None else self.samples()[0]


@dataclass
class RunConfig:
    command: str = "verify"
    tol: float = 1e-6
    collin_tol: float = 1e-6
    zero_tol: float = 1e-8
    fd_step: float = 1e-5
    rk4_step: float = 1e-3
    horizon: float = 10.0
    residual_tol: float = 1e-5
    out: str | None = None
    csv: str | None = None

    def validate(self) -> RunConfig:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}",
                              field="run.command")
        for name in ("tol", "collin_tol", "zero_tol", "fd_step", "rk4_step", "horizon", "residual_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"must be a positive number, got {value!r}", field=f"run.{name}")
        return self


# -- value parsers --------------------------------------------------------------

def _floats(text, where, count=None):
    try:
        vals = [float(t) for t in text.split()]
    except ValueError:
        raise ConfigError(f"expected numbers, got {text!r}", field=where) from None
    if count is not None and len(vals) != count:
        raise ConfigError(f"expected {count} values, got {len(vals)}", field=where)
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError("values must be finite", field=where)
    return vals


def _int(text, where, minimum=0):
    try:
        value = int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text!r}", field=where) from None
    if value < minimum:
        raise ConfigError(f"must be >= {minimum}", field=where)
    return value


def _bool(text, where):
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ConfigError(f"expected true/false, got {text!r}", field=where)


def _rows(text):
    return [line.split() for line in text.strip().splitlines() if line.strip()]


def _matrix(text, where, n):
    rows = [_floats(" ".join(r), where, n) for r in _rows(text)]
    if len(rows) != n:
        raise ConfigError(f"expected {n} rows, got {len(rows)}", field=where)
    return np.array(rows)


def _trig_terms(text, where, n, with_component):
    """Rows ``[component] coef sin|cos m1 .. mn``."""
    terms = []
    lead = 1 if with_component else 0
    for row in _rows(text):
        if len(row) != lead + 2 + n:
            raise ConfigError(f"term row {' '.join(row)!r} needs {lead + 2 + n} entries", field=where)
        comp = _int(row[0], where) if with_component else 0
        coef = _floats(row[lead], where, 1)[0]
        kind = row[lead + 1].lower()
        if kind not in ("sin", "cos"):
            raise ConfigError(f"term kind must be sin or cos, got {row[lead + 1]!r}", field=where)
        modes = tuple(_floats(" ".join(row[lead + 2:]), where, n))
        terms.append((comp, coef, kind, modes))
    return terms


# -- section builders -------------------------------------------------------------

def _build_chart(sec) -> ChartModel:
    periodic = [_bool(t, "chart.periodic") for t in sec["periodic"].split()]
    if not periodic:
        raise ConfigError("needs at least one coordinate", field="chart.periodic")
    n = len(periodic)
    names = tuple(sec["names"].split()) if "names" in sec else ()
    if names and len(names) != n:
        raise ConfigError(f"expected {n} names", field="chart.names")
    lower = tuple(_floats(sec["lower"], "chart.lower", n)) if "lower" in sec else ()
    upper = tuple(_floats(sec["upper"], "chart.upper", n)) if "upper" in sec else ()
    return ChartModel(tuple(periodic), names, lower, upper)


def _build_field(sec, chart: ChartModel) -> VectorField:
    n = chart.n
    kind = sec["kind"].strip()
    if kind == "constant":
        _only(sec, {"kind", "value"}, "field")
        value = np.array(_floats(sec.get("value", ""), "field.value", n))
        return VectorField(chart, lambda x: value, "constant")
    if kind == "linear":
        _only(sec, {"kind", "matrix"}, "field")
        a = _matrix(sec.get("matrix", ""), "field.matrix", n)
        return VectorField(chart, lambda x: a @ x, "linear")
    if kind == "trig":
        _only(sec, {"kind", "terms"}, "field")
        comps = [[] for _ in range(n)]
        for comp, coef, k, modes in _trig_terms(sec.get("terms", ""), "field.terms", n, True):
            if comp >= n:
                raise ConfigError(f"component {comp} out of range", field="field.terms")
            comps[comp].append((coef, k, modes))
        polys = [TrigPolynomial(terms=tuple(c)) for c in comps]
        return VectorField(chart, lambda x: np.array([p(x) for p in polys]), "trig")
    raise ConfigError(f"unknown field kind {kind!r}; expected constant, linear or trig", field="field.kind")


def _build_map(parser, chart: ChartModel, group: GroupSpec) -> GroupValuedMap:
    sec = parser["map"]
    kind = sec["kind"].strip()
    factor_names = sorted((s for s in parser.sections() if _FACTOR_RE.match(s)),
                          key=lambda s: int(_FACTOR_RE.match(s).group(1)))
    if kind == "constant":
        _only(sec, {"kind", "generator"}, "map")
        g = group.exp(_floats(sec.get("generator", ""), "map.generator", group.d))
        return GroupValuedMap(chart, group, lambda x: g, "constant")
    if kind != "exp-product":
        raise ConfigError(f"unknown map kind {kind!r}; expected exp-product or constant", field="map.kind")
    _only(sec, {"kind"}, "map")
    if not factor_names:
        raise ConfigError("exp-product needs at least one [factor.N] section", field="map")
    factors = []
    for name in factor_names:
        fs = parser[name]
        gen = np.array(_floats(fs.get("generator", ""), f"{name}.generator", group.d))
        poly = TrigPolynomial(
            const=_floats(fs["const"], f"{name}.const", 1)[0] if "const" in fs else 0.0,
            linear=tuple(_floats(fs["linear"], f"{name}.linear", chart.n)) if "linear" in fs else (),
            terms=tuple((c, k, m) for _, c, k, m in _trig_terms(fs.get("terms", ""), f"{name}.terms", chart.n, False)),
        )
        factors.append((gen, poly))

    def z(x):
        out = group.identity()
        for gen, poly in factors:
            out = out @ group.exp(poly(x) * gen)
        return out

    return GroupValuedMap(chart, group, z, "exp-product")


def _build_metric(sec, chart: ChartModel) -> RiemannianMetric:
    if sec is None:
        return RiemannianMetric.flat(chart)
    kind = sec.get("kind", "flat").strip()
    if kind == "flat":
        _only(sec, {"kind"}, "metric")
        return RiemannianMetric.flat(chart)
    if kind == "constant":
        _only(sec, {"kind", "gram"}, "metric")
        metric = RiemannianMetric.constant(chart, _matrix(sec.get("gram", ""), "metric.gram", chart.n))
    elif kind == "diagonal":
        _only(sec, {"kind", "diagonal"}, "metric")
        metric = RiemannianMetric.constant(chart, np.diag(_floats(sec.get("diagonal", ""), "metric.diagonal", chart.n)),
                                           "diagonal")
    else:
        raise ConfigError(f"unknown metric kind {kind!r}", field="metric.kind")
    try:
        metric.gram(np.zeros(chart.n))
    except Exception as err:
        raise ConfigError(str(err), field="metric.gram") from None
    return metric


def _only(sec, keys, where):
    extra = set(sec) - keys
    if extra:
        raise ConfigError(f"key {sorted(extra)[0]!r} is not valid for kind {sec.get('kind')!r}", field=where)


# -- entry points -------------------------------------------------------------------

def _parse(text: str, source: str):
    if not text.strip():
        raise ConfigError(f"{source}: configuration is empty")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"), strict=True,
                                       default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as err:
        raise ConfigError(f"{source}: {str(err).splitlines()[0]}", line=getattr(err, "lineno", None)) from None
    for section in parser.sections():
        base = "factor" if _FACTOR_RE.match(section) else section
        if base not in _ALLOWED:
            raise ConfigError(f"unknown section [{section}]", field=section)
        for key in parser[section]:
            if key not in _ALLOWED[base]:
                raise ConfigError(f"unknown key {key!r}", field=f"{section}.{key}")
    for section, keys in _REQUIRED.items():
        if section not in parser:
            raise ConfigError(f"missing section [{section}]", field=section)
        for key in keys:
            if key not in parser[section]:
                raise ConfigError("missing required key", field=f"{section}.{key}")
    return parser


def _line_of(text: str, field: str) -> int | None:
    """1-based line of ``section.key`` (or of the section header) in ``text``."""
    section, _, key = field.partition(".")
    if section in ("factor",) and key:
        # factor.N.key
        num, _, key = key.partition(".")
        section = f"factor.{num}"
    current = None
    header_line = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if current == section and header_line is None:
                header_line = i
            continue
        if current == section and key and re.match(rf"^{re.escape(key)}\s*[=:]", line):
            return i
    return header_line


def parse_config(text: str, source: str = "<config>") -> tuple[SystemDefinition, RunConfig]:
    try:
        return _parse_config(text, source)
    except ConfigError as err:
        if err.line is None and err.field:
            line = _line_of(text, err.field)
            if line is not None:
                raise ConfigError(err.message, field=err.field, line=line) from None
        raise


def _parse_config(text: str, source: str) -> tuple[SystemDefinition, RunConfig]:
    parser = _parse(text, source)
    s = parser["system"]
    try:
        group = get_group(s["group"])
    except KeyError:
        raise ConfigError(f"unknown group {s['group']!r}; expected u1, torus:d, so3 or heisenberg",
                          field="system.group") from None
    chart = _build_chart(parser["chart"])
    vf = _build_field(parser["field"], chart)
    z = _build_map(parser, chart, group)
    metric = _build_metric(parser["metric"] if "metric" in parser else None, chart)

    system = SystemDefinition(
        id=s["id"].strip(), chart=chart, group=group, field=vf, map_z=z, metric=metric,
        description=s.get("description", "").strip(),
    )
    if "omega_target" in s:
        system.omega_target = np.array(_floats(s["omega_target"], "system.omega_target", group.d))
    if "lift_anchor" in s:
        system.lift_anchor = chart.point(_floats(s["lift_anchor"], "system.lift_anchor", chart.n))
    if "sampling" in parser:
        sp = parser["sampling"]
        system.grid = _int(sp.get("grid", "16"), "sampling.grid")
        system.random = _int(sp.get("random", "256"), "sampling.random")
        system.seed = _int(sp.get("seed", "0"), "sampling.seed")
    if "expect" in parser:
        system.expect = {k: _bool(v, f"expect.{k}") for k, v in parser["expect"].items()}

    run = RunConfig()
    if "run" in parser:
        r = parser["run"]
        for key, value in r.items():
            if key == "command":
                run.command = value.strip()
            elif key in ("out", "csv"):
                setattr(run, key, value.strip() or None)
            else:
                setattr(run, key, _floats(value, f"run.{key}", 1)[0])
    run.validate()
    return system, run


def load_config(path) -> tuple[SystemDefinition, RunConfig]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror}") from None
    return parse_config(text, str(path))


def catalog_names() -> list[str]:
    root = resources.files("liekoop") / "catalog"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def catalog_text(name: str) -> str:
    if name not in catalog_names():
        raise ConfigError(f"unknown catalog system {name!r}; available: {', '.join(catalog_names())}",
                          field="system")
    return (resources.files("liekoop") / "catalog" / f"{name}.cfg").read_text(encoding="utf-8")


def load_catalog(name: str) -> tuple[SystemDefinition, RunConfig]:
    return parse_config(catalog_text(name), f"{name}.cfg")
