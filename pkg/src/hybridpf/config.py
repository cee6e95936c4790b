"""
Experiment configuration files.

Plain ``key = value`` lines grouped under ``[section]`` headers, ``#``
comments.  Sections and keys (defaults in parentheses):

``[experiment]``  geometry = bar1d | circle2d; model = ac | hybrid; level (0.5)

``[material]``    a (1); D (1, 1D modulus); lam_e, mu_e (1, 1, 2D Lamé pair);
                  eigenstrain (1D: one value, 2D: ``exx, eyy, exy``; 0)

``[params]``      mu, lam (Allen-Cahn); nu (hybrid); c_hat (1); c (mobility,
                  default ``c_hat c1`` for ac and ``c_hat`` for hybrid);
                  E (interface energy of the sharp reference, default
                  ``sqrt(lam)`` for ac and 0 for hybrid); safety (0.4);
                  stride (1); mu0, lam0, nu0 (caps, 1)

``[grid]``        nodes (per axis, one value or one per axis); extent (1);
                  origin (0)

``[schedule]``    t_end; samples (11); skip (1, leading records left out of
                  the error aggregate while the initial profile relaxes)

``[bar]``         U1 (0.5); z0 (0.25); phase2 = left | right (left)

``[circle]``      R0 (0.3); center (middle of the grid).  A centre on an edge
                  or corner of the grid uses the zero-flux boundary as a
                  mirror plane, so only part of the disc is simulated.

``[sweep]``       parameter (mu, lam, nu or mu_lam, the product with mu = lam);
                  values; workers (1); p (dim + 1)

``[effort]``      targets; E_values; F_values; nu_values; n_k (10); window (40);
                  t_window (20 relaxation times); t_ref (1); kappa_ref (1/R0);
                  circle_n_k (3); circle_t_end (0.05); p (2)

The bar occupies the whole grid with ``u = 0`` on the left end and
``u = U1`` on the right end.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError

GEOMETRIES = ("bar1d", "circle2d")
MODELS = ("ac", "hybrid")
SWEEP_PARAMS = {"ac": ("mu", "lam", "mu_lam"), "hybrid": ("nu",)}

_KNOWN = {
    "experiment": {"geometry", "model", "level"},
    "material": {"a", "D", "lam_e", "mu_e", "eigenstrain"},
    "params": {"mu", "lam", "nu", "c_hat", "c", "E", "safety", "stride", "mu0", "lam0", "nu0"},
    "grid": {"nodes", "extent", "origin"},
    "schedule": {"t_end", "samples", "skip"},
    "bar": {"U1", "z0", "phase2"},
    "circle": {"R0", "center"},
    "sweep": {"parameter", "values", "workers", "p"},
    "effort": {"targets", "E_values", "F_values", "nu_values", "n_k", "window", "t_window",
               "t_ref", "kappa_ref", "circle_n_k", "circle_t_end", "p"},
}


@dataclass(frozen=True)
class MaterialConfig:
    a: float = 1.0
    D: float = 1.0
    lam_e: float = 1.0
    mu_e: float = 1.0
    eigenstrain: tuple[float, ...] = (0.0,)


@dataclass(frozen=True)
class ParamsConfig:
    mu: float | None = None
    lam: float | None = None
    nu: float | None = None
    c_hat: float = 1.0
    c: float | None = None
    E: float | None = None
    safety: float = 0.4
    stride: int = 1
    mu0: float = 1.0
    lam0: float = 1.0
    nu0: float = 1.0


@dataclass(frozen=True)
class GridConfig:
    nodes: tuple[int, ...] = (256,)
    extent: tuple[float, ...] = (1.0,)
    origin: tuple[float, ...] = (0.0,)


@dataclass(frozen=True)
class ScheduleConfig:
    t_end: float = 1.0
    samples: int = 11
    skip: int = 1


@dataclass(frozen=True)
class BarConfig:
    U1: float = 0.5
    z0: float = 0.25
    phase2_on_left: bool = True


@dataclass(frozen=True)
class CircleConfig:
    R0: float = 0.3
    center: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SweepConfig:
    parameter: str | None = None
    values: tuple[float, ...] = ()
    workers: int = 1
    p: float | None = None


@dataclass(frozen=True)
class EffortConfig:
    targets: tuple[float, ...] = (0.04, 0.02, 0.01, 0.005)
    E_values: tuple[float, ...] = tuple(0.1 * 2.0 ** (-i / 2) for i in range(12))
    F_values: tuple[float, ...] = tuple(0.4 * 2.0 ** (-i / 2) for i in range(12))
    nu_values: tuple[float, ...] = tuple(4e-3 * 2.0 ** (-i) for i in range(9))
    n_k: float = 10.0
    window: float = 40.0
    t_window: float = 20.0
    t_ref: float = 1.0
    kappa_ref: float | None = None
    circle_n_k: float = 3.0
    circle_t_end: float = 0.05
    p: float = 2.0


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: str
    model: str
    material: MaterialConfig = field(default_factory=MaterialConfig)
    params: ParamsConfig = field(default_factory=ParamsConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    bar: BarConfig = field(default_factory=BarConfig)
    circle: CircleConfig = field(default_factory=CircleConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    effort: EffortConfig = field(default_factory=EffortConfig)
    level: float = 0.5
    path: str | None = None

    @property
    def dim(self) -> int:
        return 1 if self.geometry == "bar1d" else 2

    @property
    def effort_p(self) -> float:
        return self.sweep.p if self.sweep.p is not None else self.dim + 1.0

    def with_params(self, **kw) -> "ExperimentConfig":
        return replace(self, params=replace(self.params, **kw))

    def with_grid(self, **kw) -> "ExperimentConfig":
        return replace(self, grid=replace(self.grid, **kw))

    def with_schedule(self, **kw) -> "ExperimentConfig":
        return replace(self, schedule=replace(self.schedule, **kw))


class _Reader:
    def __init__(self, cp: configparser.ConfigParser, path: str | None):
        self.cp = cp
        self.path = path

    def fail(self, section: str, key: str, msg: str):
        raise ConfigError(f"[{section}] {key}: {msg}", self.path, f"{section}.{key}")

    def raw(self, section: str, key: str, default=None, required: bool = False):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        if required:
            self.fail(section, key, "missing required key")
        return default

    def number(self, section, key, default=None, required=False, positive=True, cast=float):
        s = self.raw(section, key, None, required)
        if s is None:
            return default
        try:
            v = cast(float(s)) if cast is int else cast(s)
        except ValueError:
            self.fail(section, key, f"not a number: {s!r}")
        if cast is int and float(s) != v:
            self.fail(section, key, f"not an integer: {s!r}")
        if not math.isfinite(v) or (positive and v <= 0):
            self.fail(section, key, f"must be {'positive and ' if positive else ''}finite, got {s}")
        return v

    def numbers(self, section, key, default=None, required=False, positive=True):
        s = self.raw(section, key, None, required)
        if s is None:
            return default
        try:
            vals = tuple(float(x) for x in s.replace(",", " ").split())
        except ValueError:
            self.fail(section, key, f"not a list of numbers: {s!r}")
        if not vals or not all(math.isfinite(v) and (v > 0 or not positive) for v in vals):
            self.fail(section, key, f"needs {'positive ' if positive else ''}finite values, got {s!r}")
        return vals

    def choice(self, section, key, options, default=None, required=False):
        s = self.raw(section, key, default, required)
        if s is not None and s not in options:
            self.fail(section, key, f"expected one of {', '.join(options)}, got {s!r}")
        return s


def _disc_fits(c: float, R: float, lo: float, extent: float) -> bool:
    hi = lo + extent
    on_edge = math.isclose(c, lo, abs_tol=1e-12 * extent) or math.isclose(c, hi, abs_tol=1e-12 * extent)
    if on_edge:
        return R < extent
    return lo < c - R and c + R < hi


def parse_config(text: str, path: str | None = None) -> ExperimentConfig:
    """Parse configuration text.

    Raises:
        ConfigError: naming the file and the offending ``section.key``.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=path or "<string>")
    except configparser.Error as exc:
        raise ConfigError(f"unreadable configuration: {exc}", path) from exc
    r = _Reader(cp, path)

    for section in cp.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown section [{section}]", path, section)
        for key in cp.options(section):
            if key not in _KNOWN[section]:
                raise ConfigError(f"[{section}] unknown key {key!r}", path, f"{section}.{key}")

    geometry = r.choice("experiment", "geometry", GEOMETRIES, required=True)
    model = r.choice("experiment", "model", MODELS, required=True)
    dim = 1 if geometry == "bar1d" else 2
    level = r.number("experiment", "level", 0.5)
    if not 0 < level < 1:
        r.fail("experiment", "level", "must lie in (0, 1)")

    eig_default = (0.0,) * (1 if dim == 1 else 3)
    eig = r.numbers("material", "eigenstrain", eig_default, positive=False)
    if len(eig) != len(eig_default):
        r.fail("material", "eigenstrain", f"needs {len(eig_default)} component(s) for {geometry}")
    material = MaterialConfig(
        a=r.number("material", "a", 1.0),
        D=r.number("material", "D", 1.0),
        lam_e=r.number("material", "lam_e", 1.0, positive=False),
        mu_e=r.number("material", "mu_e", 1.0),
        eigenstrain=eig,
    )

    sweep = SweepConfig(
        parameter=r.choice("sweep", "parameter", SWEEP_PARAMS[model]),
        values=r.numbers("sweep", "values", ()),
        workers=r.number("sweep", "workers", 1, cast=int),
        p=r.number("sweep", "p", None),
    )
    if sweep.values and sweep.parameter is None:
        r.fail("sweep", "parameter", "missing required key")

    swept = {"mu_lam": ("mu", "lam")}.get(sweep.parameter, (sweep.parameter,)) if sweep.values else ()
    params = ParamsConfig(
        mu=r.number("params", "mu", None),
        lam=r.number("params", "lam", None),
        nu=r.number("params", "nu", None),
        c_hat=r.number("params", "c_hat", 1.0),
        c=r.number("params", "c", None),
        E=r.number("params", "E", None, positive=False),
        safety=r.number("params", "safety", 0.4),
        stride=r.number("params", "stride", 1, cast=int),
        mu0=r.number("params", "mu0", 1.0),
        lam0=r.number("params", "lam0", 1.0),
        nu0=r.number("params", "nu0", 1.0),
    )
    needed = ("mu", "lam") if model == "ac" else ("nu",)
    foreign = ("nu", "nu0") if model == "ac" else ("mu", "lam", "mu0", "lam0")
    for key in foreign:
        if r.cp.has_option("params", key):
            r.fail("params", key, f"not a parameter of model {model}")
    for key in needed:
        if getattr(params, key) is None and key not in swept:
            r.fail("params", key, f"missing required key for model {model}")
    caps = {"mu": params.mu0, "lam": params.lam0, "nu": params.nu0}
    for key in needed:
        v = getattr(params, key)
        if v is not None and v > caps[key]:
            r.fail("params", key, f"{v} exceeds cap {caps[key]}")
    for key in swept:
        vals = [math.sqrt(v) for v in sweep.values] if sweep.parameter == "mu_lam" else sweep.values
        if any(v > caps[key] for v in vals):
            r.fail("sweep", "values", f"value above cap {caps[key]} of {key}")
    if params.safety >= 1:
        r.fail("params", "safety", "must be below 1")

    raw_nodes = r.numbers("grid", "nodes", (256.0,))
    raw_nodes = raw_nodes * dim if len(raw_nodes) == 1 else raw_nodes
    if len(raw_nodes) != dim or any(v < 8 or v != int(v) for v in raw_nodes):
        r.fail("grid", "nodes", f"needs 1 or {dim} integer value(s) >= 8")
    nodes = tuple(int(v) for v in raw_nodes)
    extent = r.numbers("grid", "extent", (1.0,))
    origin = r.numbers("grid", "origin", (0.0,), positive=False)
    extent = extent * dim if len(extent) == 1 else extent
    origin = origin * dim if len(origin) == 1 else origin
    if len(extent) != dim:
        r.fail("grid", "extent", f"needs 1 or {dim} values")
    if len(origin) != dim:
        r.fail("grid", "origin", f"needs 1 or {dim} values")
    grid = GridConfig(nodes, extent, origin)

    schedule = ScheduleConfig(
        t_end=r.number("schedule", "t_end", required=True),
        samples=r.number("schedule", "samples", 11, cast=int),
        skip=r.number("schedule", "skip", 1, positive=False, cast=int),
    )
    if schedule.samples < 2:
        r.fail("schedule", "samples", "needs at least 2 sample times")
    if not 0 <= schedule.skip < schedule.samples:
        r.fail("schedule", "skip", "must lie in [0, samples)")

    bar = BarConfig(
        U1=r.number("bar", "U1", 0.5, positive=False),
        z0=r.number("bar", "z0", 0.25),
        phase2_on_left=r.choice("bar", "phase2", ("left", "right"), "left") == "left",
    )
    if geometry == "bar1d" and not 0 < bar.z0 < extent[0]:
        r.fail("bar", "z0", f"must lie inside the bar (0, {extent[0]})")

    center = r.numbers("circle", "center", None, positive=False)
    if center is not None and len(center) != 2:
        r.fail("circle", "center", "needs 2 values")
    circle = CircleConfig(R0=r.number("circle", "R0", 0.3), center=center)
    if geometry == "circle2d":
        c = center if center is not None else tuple(o + 0.5 * e for o, e in zip(origin, extent))
        if not all(_disc_fits(c[i], circle.R0, origin[i], extent[i]) for i in range(2)):
            r.fail("circle", "R0", "disc does not fit inside the grid")

    d = EffortConfig()
    effort = EffortConfig(
        targets=r.numbers("effort", "targets", d.targets),
        E_values=r.numbers("effort", "E_values", d.E_values),
        F_values=r.numbers("effort", "F_values", d.F_values),
        nu_values=r.numbers("effort", "nu_values", d.nu_values),
        n_k=r.number("effort", "n_k", d.n_k),
        window=r.number("effort", "window", d.window),
        t_window=r.number("effort", "t_window", d.t_window),
        t_ref=r.number("effort", "t_ref", d.t_ref),
        kappa_ref=r.number("effort", "kappa_ref", None),
        circle_n_k=r.number("effort", "circle_n_k", d.circle_n_k),
        circle_t_end=r.number("effort", "circle_t_end", d.circle_t_end),
        p=r.number("effort", "p", d.p),
    )

    return ExperimentConfig(geometry, model, material, params, grid, schedule, bar, circle,
                            sweep, effort, level, path)


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc.strerror}", str(p)) from exc
    return parse_config(text, str(p))
