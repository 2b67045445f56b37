"""Text configuration: ``key = value [unit]`` lines, optional ``[section]`` headers.

Example geometry file::

    # shallow etched Si device
    substrate = Si
    trace_width = 10 um
    trace_gap_middle = 5 um
    trench_depth = 75 nm
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError
from .geometry import CrossSectionGeometry, Mode, Substrate, build_cross_section, shallow_si
from .morphology import FilmGrowthParams

UNITS = {
    "": 1.0,
    "m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9, "pm": 1e-12,
    "v/m": 1.0, "kv/m": 1e3, "v/um": 1e6, "mv/m": 1e6,
    "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9,
    "v": 1.0, "mv": 1e-3, "db": 1.0, "ohm": 1.0,
}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s\d].*)?$")


def parse_quantity(text: str, key: str = "value") -> float:
    """'5 um' -> 5e-6. A bare number is taken as SI."""
    m = _NUM.match(str(text))
    if not m:
        raise ParseError(f"{key}: cannot parse {text!r} as a number with unit")
    unit = (m.group(2) or "").strip().lower()
    if unit not in UNITS:
        raise ParseError(f"{key}: unknown unit {m.group(2)!r}")
    return float(m.group(1)) * UNITS[unit]


def parse_list(text: str, key: str = "value") -> list[float]:
    """'50 100 200 nm' or '50, 100, 200 nm' -> SI floats (unit applies to all)."""
    parts = [p for p in re.split(r"[,\s]+", str(text).strip()) if p]
    unit = ""
    if parts and not _NUM.match(parts[-1]):
        unit = parts.pop()
    if not parts:
        raise ParseError(f"{key}: empty list")
    return [parse_quantity(f"{p} {unit}", key) for p in parts]


def _read(path) -> configparser.ConfigParser:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if not re.search(r"^\s*\[", text, re.M):
        text = "[geometry]\n" + text
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ParseError(f"{path}: {exc}") from None
    return cp


GEOMETRY_KEYS = {
    "trace_width", "trace_gap_middle", "trace_gap_side", "metal_thickness", "trench_depth",
    "film_thickness", "domain_width", "domain_height", "box_margin", "substrate",
}


def geometry_from_mapping(items: dict, source: str = "geometry") -> CrossSectionGeometry:
    kw = {}
    for key, raw in items.items():
        if key not in GEOMETRY_KEYS:
            raise ParseError(f"{source}: unknown key {key!r}")
        if key == "substrate":
            try:
                kw[key] = Substrate(raw.strip())
            except ValueError:
                raise ParseError(f"{source}: key 'substrate': expected Si or Sapphire, got {raw!r}") from None
        elif key == "box_margin":
            kw[key] = parse_quantity(raw, key)
        else:
            kw[key] = parse_quantity(raw, key)
    try:
        return build_cross_section(**kw)
    except ConfigError as exc:
        raise type(exc)(f"{source}: {exc}") from None


def load_geometry(path) -> CrossSectionGeometry:
    cp = _read(path)
    if not cp.has_section("geometry"):
        raise ParseError(f"{path}: no [geometry] section")
    return geometry_from_mapping(dict(cp["geometry"]), str(path))


DEFAULT_DEPTHS = (50e-9, 100e-9, 200e-9, 400e-9, 700e-9, 1000e-9)


@dataclass(frozen=True)
class RunConfig:
    geometry: CrossSectionGeometry = field(default_factory=shallow_si)
    depths: tuple = DEFAULT_DEPTHS
    modes: tuple = (Mode.CM, Mode.DM)
    tol: float = 1e-8
    seeds: int = 20
    film: FilmGrowthParams = field(default_factory=FilmGrowthParams)
    field_min: float = 1e4
    field_max: float = 1e6
    field_steps: int = 13
    n_states: int = 20
    seed: int = 0
    out_dir: Path = Path(".")
    jobs: int = 1

    @property
    def fields(self) -> np.ndarray:
        return np.geomspace(self.field_min, self.field_max, self.field_steps)

    def validate(self) -> "RunConfig":
        if not self.depths or any(t <= 0 for t in self.depths):
            raise ConfigError("sweep depths must be positive")
        if self.seeds < 0:
            raise ConfigError("seeds must be >= 0")
        if not 0 < self.field_min <= self.field_max or self.field_steps < 1:
            raise ConfigError("trap field range must satisfy 0 < min <= max, steps >= 1")
        if self.n_states < 2:
            raise ConfigError("n_states must be >= 2")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        return self


def _int(sec, key):
    try:
        return int(sec[key])
    except ValueError:
        raise ParseError(f"key {key!r}: expected an integer, got {sec[key]!r}") from None


def load_config(path=None, **overrides) -> RunConfig:
    """RunConfig from a file (sections: run, geometry, sweep, morphology, trap)."""
    cfg = RunConfig()
    if path is not None:
        cp = _read(path)
        base = Path(path).parent
        kw = {}
        if cp.has_section("geometry"):
            sec = dict(cp["geometry"])
            if "file" in sec:
                gpath = Path(sec.pop("file"))
                kw["geometry"] = load_geometry(gpath if gpath.is_absolute() else base / gpath)
            if sec:
                kw["geometry"] = geometry_from_mapping(sec, f"{path} [geometry]")
        if cp.has_section("sweep"):
            s = cp["sweep"]
            if "depths" in s:
                kw["depths"] = tuple(sorted(parse_list(s["depths"], "depths")))
            if "modes" in s:
                try:
                    kw["modes"] = tuple(Mode(m.strip()) for m in s["modes"].split(",") if m.strip())
                except ValueError:
                    raise ParseError(f"key 'modes': expected CM and/or DM, got {s['modes']!r}") from None
            if "tol" in s:
                kw["tol"] = parse_quantity(s["tol"], "tol")
        if cp.has_section("morphology"):
            s = cp["morphology"]
            if "seeds" in s:
                kw["seeds"] = _int(s, "seeds")
            fk = {}
            for key, attr in (("film_mean", "mean_thickness"), ("film_std", "std_thickness"),
                              ("film_correlation", "correlation_length")):
                if key in s:
                    fk[attr] = parse_quantity(s[key], key)
            if fk:
                try:
                    kw["film"] = FilmGrowthParams(**fk)
                except ValueError as exc:
                    raise ConfigError(str(exc)) from None
        if cp.has_section("trap"):
            s = cp["trap"]
            for key in ("field_min", "field_max"):
                if key in s:
                    kw[key] = parse_quantity(s[key], key)
            for key in ("field_steps", "n_states"):
                if key in s:
                    kw[key] = _int(s, key)
        if cp.has_section("run"):
            s = cp["run"]
            if "seed" in s:
                kw["seed"] = _int(s, "seed")
            if "jobs" in s:
                kw["jobs"] = _int(s, "jobs")
            if "out_dir" in s:
                kw["out_dir"] = base / s["out_dir"]
        cfg = replace(cfg, **kw)
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg.validate()
