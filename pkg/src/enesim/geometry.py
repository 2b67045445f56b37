"""Parametric coplanar-stripline cross-section and its rasterization.

Coordinates: x across the device with the centerline at x = 0, y vertical
with the original substrate surface at y = 0. Metal electrodes sit on
0 <= y <= metal_thickness; gaps between electrodes are etched down to
y = -trench_depth with vertical walls.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGeometry, ResolutionTooCoarse


class Substrate(str, enum.Enum):
    Si = "Si"
    Sapphire = "Sapphire"


class Electrode(enum.IntEnum):
    NONE = 0
    TraceLeft = 1
    TraceRight = 2
    Ground = 3


class Mode(str, enum.Enum):
    CM = "CM"
    DM = "DM"


@dataclass(frozen=True)
class Materials:
    """Relative permittivities (literature values, overridable)."""

    eps_si: float = 11.7
    eps_sapphire: float = 10.0
    eps_ne: float = 1.244

    def substrate_eps(self, substrate: Substrate) -> float:
        return self.eps_si if Substrate(substrate) is Substrate.Si else self.eps_sapphire


DEFAULT_MATERIALS = Materials()

METAL_THICKNESS = {Substrate.Si: 140e-9, Substrate.Sapphire: 200e-9}


@dataclass(frozen=True)
class CrossSectionGeometry:
    trace_width: float
    trace_gap_middle: float
    trace_gap_side: float
    metal_thickness: float
    trench_depth: float
    substrate: Substrate
    film_thickness: float
    domain_width: float
    domain_height: float

    @property
    def structure_half_width(self) -> float:
        return 0.5 * self.trace_gap_middle + self.trace_width + self.trace_gap_side

    def trace_spans(self) -> dict[Electrode, tuple[float, float]]:
        a = 0.5 * self.trace_gap_middle
        b = a + self.trace_width
        return {Electrode.TraceLeft: (-b, -a), Electrode.TraceRight: (a, b)}

    def ground_spans(self) -> list[tuple[float, float]]:
        s = self.structure_half_width
        half = 0.5 * self.domain_width
        return [(-half, -s), (s, half)]

    def trench_spans(self) -> dict[str, list[tuple[float, float]]]:
        """x-extent of each gap region, keyed by region name."""
        a = 0.5 * self.trace_gap_middle
        b = a + self.trace_width
        s = self.structure_half_width
        return {
            "MiddleTrench": [(-a, a)] if a > 0 else [],
            "SideTrench": [(-s, -b), (b, s)],
        }

    def with_depth(self, trench_depth: float) -> "CrossSectionGeometry":
        return validate(dataclasses.replace(self, trench_depth=trench_depth))

    def solid_rectangles(self):
        """Substrate and metal as (x0, x1, y0, y1) rectangles; yields (kind, rect)."""
        half_w = 0.5 * self.domain_width
        ybot = -0.5 * self.domain_height
        t = self.trench_depth
        yield "substrate", (-half_w, half_w, ybot, -t)
        metal = list(self.trace_spans().values()) + self.ground_spans()
        for x0, x1 in metal:
            if t > 0:
                yield "substrate", (x0, x1, -t, 0.0)
            yield "metal", (x0, x1, 0.0, self.metal_thickness)


def validate(geom: CrossSectionGeometry) -> CrossSectionGeometry:
    lengths = {
        f.name: getattr(geom, f.name)
        for f in dataclasses.fields(geom)
        if f.name != "substrate"
    }
    for name, value in lengths.items():
        if not np.isfinite(value) or value < 0:
            raise InvalidGeometry(f"{name} must be a finite length >= 0, got {value!r}")
    for name in ("trace_width", "trace_gap_side", "metal_thickness", "domain_width", "domain_height"):
        if lengths[name] <= 0:
            raise InvalidGeometry(f"{name} must be > 0")
    if geom.domain_width <= 2 * geom.structure_half_width:
        raise InvalidGeometry(
            "domain_width must exceed 2*(trace_width + trace_gap_side) + trace_gap_middle"
        )
    half_h = 0.5 * geom.domain_height
    if geom.trench_depth + geom.film_thickness >= half_h or geom.metal_thickness + geom.film_thickness >= half_h:
        raise InvalidGeometry("domain_height too small for the layer stack")
    try:
        Substrate(geom.substrate)
    except ValueError:
        raise InvalidGeometry(f"unknown substrate {geom.substrate!r}") from None
    return geom


def build_cross_section(
    trench_depth: float = 0.0,
    substrate: Substrate | str = Substrate.Si,
    trace_width: float = 10e-6,
    trace_gap_middle: float = 5e-6,
    trace_gap_side: float = 5e-6,
    metal_thickness: float | None = None,
    film_thickness: float = 0.0,
    domain_width: float | None = None,
    domain_height: float | None = None,
    box_margin: float = 10.0,
) -> CrossSectionGeometry:
    """Build a validated cross-section.

    Unspecified domain sizes put the grounded outer box ``box_margin`` trace
    widths beyond the outer edge of the side gaps (and above/below the surface).
    """
    try:
        substrate = Substrate(substrate)
    except ValueError:
        raise InvalidGeometry(f"unknown substrate {substrate!r}") from None
    if metal_thickness is None:
        metal_thickness = METAL_THICKNESS[substrate]
    half = 0.5 * trace_gap_middle + trace_width + trace_gap_side
    if domain_width is None:
        domain_width = 2.0 * (half + box_margin * trace_width)
    if domain_height is None:
        domain_height = 2.0 * (box_margin * trace_width + half)
    geom = CrossSectionGeometry(
        trace_width=float(trace_width),
        trace_gap_middle=float(trace_gap_middle),
        trace_gap_side=float(trace_gap_side),
        metal_thickness=float(metal_thickness),
        trench_depth=float(trench_depth),
        substrate=substrate,
        film_thickness=float(film_thickness),
        domain_width=float(domain_width),
        domain_height=float(domain_height),
    )
    return validate(geom)


# measured-device trench depths
def shallow_si(**kw) -> CrossSectionGeometry:
    return build_cross_section(trench_depth=75e-9, substrate=Substrate.Si, **kw)


def deep_si(**kw) -> CrossSectionGeometry:
    return build_cross_section(trench_depth=1100e-9, substrate=Substrate.Si, **kw)


def sapphire(**kw) -> CrossSectionGeometry:
    return build_cross_section(trench_depth=0.0, substrate=Substrate.Sapphire, **kw)


# --------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class GridSpec:
    """Controls the graded rectilinear mesh.

    Node spacing grows linearly with distance from each breakpoint
    (``h = h0 + (growth - 1) * s``), capped per interval. ``refine`` divides
    every spacing, so ``refine=2`` halves dx and dy everywhere.
    """

    surface_dy: float = 2.5e-9
    edge_dx: float = 10e-9
    gap_dx_max: float = 100e-9
    trace_dx_max: float = 500e-9
    trench_dy_max: float = 50e-9
    far_fraction: float = 1.0 / 40.0
    growth: float = 1.2
    refine: int = 1


def graded_interval(a: float, b: float, ha: float, hb: float, growth: float, hmax: float) -> np.ndarray:
    """Nodes on [a, b] (both included) with spacing ha at a, hb at b.

    The spacing function h(s) = min(ha + (growth-1) s, hb + (growth-1)(b-s), hmax)
    is integrated; nodes are placed at equal increments of int ds/h.
    """
    L = b - a
    if L <= 0:
        return np.array([a])
    g = growth - 1.0
    # with h growing linearly the first cell is ha*expm1(g)/g long; rescale so
    # the end cells do not exceed the requested spacing
    shrink = g / math.expm1(g) if g > 0 else 1.0
    ha = min(ha * shrink, hmax)
    hb = min(hb * shrink, hmax)
    ends = L * np.geomspace(1e-7, 1.0, 1500)
    s = np.unique(np.concatenate([np.linspace(0.0, L, 2001), ends, L - ends]))
    s = s[(s >= 0.0) & (s <= L)]
    h = np.minimum(np.minimum(ha + g * s, hb + g * (L - s)), hmax)
    inv = 1.0 / h
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(s))])
    n = max(1, int(np.ceil(cum[-1] - 1e-9)))
    levels = np.linspace(0.0, cum[-1], n + 1)
    nodes = a + np.interp(levels, cum, s)
    nodes[0], nodes[-1] = a, b
    return nodes


def _join(pieces: list[np.ndarray]) -> np.ndarray:
    out = [pieces[0]]
    for p in pieces[1:]:
        out.append(p[1:])
    return np.concatenate(out)


def _axis_x(geom: CrossSectionGeometry, spec: GridSpec) -> np.ndarray:
    r = spec.refine
    g = 1.0 + (spec.growth - 1.0) / r
    e = spec.edge_dx / r
    half_w = 0.5 * geom.domain_width
    far = geom.domain_width * spec.far_fraction / r
    a = 0.5 * geom.trace_gap_middle
    b = a + geom.trace_width
    s = b + geom.trace_gap_side
    gap_max = spec.gap_dx_max / r
    pieces = []
    if a > 0:
        pieces.append(graded_interval(0.0, a, gap_max, e, g, gap_max))
    pieces.append(graded_interval(a, b, e, e, g, spec.trace_dx_max / r))
    pieces.append(graded_interval(b, s, e, e, g, gap_max))
    pieces.append(graded_interval(s, half_w, e, far, g, far))
    right = _join(pieces)
    return np.concatenate([-right[:0:-1], right])


def _axis_y(geom: CrossSectionGeometry, spec: GridSpec) -> np.ndarray:
    r = spec.refine
    g = 1.0 + (spec.growth - 1.0) / r
    fine = spec.surface_dy / r
    half_h = 0.5 * geom.domain_height
    far = geom.domain_height * spec.far_fraction / r
    mid = spec.trench_dy_max / r
    t = geom.trench_depth
    m = geom.metal_thickness
    f = geom.film_thickness
    # breakpoints with their local fine spacing
    pts = {-half_h: far, 0.0: fine, m: fine, half_h: far}
    if t > 0:
        pts[-t] = fine
    if f > 0:
        pts.setdefault(m + f, fine)
        pts.setdefault(-t + f, fine)
    keys = sorted(pts)
    pieces = []
    for lo, hi in zip(keys[:-1], keys[1:]):
        cap = far if (lo == -half_h or hi == half_h) else mid
        pieces.append(graded_interval(lo, hi, pts[lo], pts[hi], g, cap))
    return _join(pieces)


@dataclass(frozen=True)
class PermittivityGrid:
    """Rectilinear node grid; ``eps`` lives on cells, labels on nodes.

    Arrays are indexed ``[i, j]`` with i along x and j along y.
    ``dirichlet`` holds the imposed potential on labeled nodes for a given
    drive; it is filled by :func:`apply_drive` and is NaN on free nodes.
    """

    x: np.ndarray
    y: np.ndarray
    eps: np.ndarray
    electrode_mask: np.ndarray
    geometry: CrossSectionGeometry | None = None
    materials: Materials = field(default=DEFAULT_MATERIALS)

    @property
    def nx(self) -> int:
        return self.x.size

    @property
    def ny(self) -> int:
        return self.y.size

    @property
    def dx(self) -> np.ndarray:
        return np.diff(self.x)

    @property
    def dy(self) -> np.ndarray:
        return np.diff(self.y)

    @property
    def is_dirichlet(self) -> np.ndarray:
        return self.electrode_mask != Electrode.NONE

    def vacuum(self) -> "PermittivityGrid":
        """Same grid and electrodes with every dielectric replaced by vacuum."""
        return dataclasses.replace(self, eps=np.ones_like(self.eps))


@dataclass(frozen=True)
class ModeDrive:
    mode: Mode
    v_left: float
    v_right: float
    v_ground: float = 0.0

    @classmethod
    def for_mode(cls, mode: Mode | str) -> "ModeDrive":
        mode = Mode(mode)
        if mode is Mode.CM:
            return cls(mode, 1.0, 1.0)
        return cls(mode, 1.0, -1.0)

    @property
    def magnitude(self) -> float:
        return max(abs(self.v_left), abs(self.v_right))

    def potentials(self, mask: np.ndarray) -> np.ndarray:
        """Imposed potential per node (NaN where free)."""
        out = np.full(mask.shape, np.nan)
        out[mask == Electrode.TraceLeft] = self.v_left
        out[mask == Electrode.TraceRight] = self.v_right
        out[mask == Electrode.Ground] = self.v_ground
        return out


def _inside(xc, lo, hi, tol):
    return (xc >= lo - tol) & (xc <= hi + tol)


def _rect_distance(px, py, rect):
    x0, x1, y0, y1 = rect
    dx = np.maximum(np.maximum(x0 - px, 0.0), px - x1)
    dy = np.maximum(np.maximum(y0 - py, 0.0), py - y1)
    return np.hypot(dx, dy)


def rasterize(
    geom: CrossSectionGeometry,
    resolution: GridSpec | None = None,
    materials: Materials = DEFAULT_MATERIALS,
) -> PermittivityGrid:
    """Mesh the cross-section; outer box nodes are grounded."""
    spec = resolution or GridSpec()
    x = _axis_x(geom, spec)
    y = _axis_y(geom, spec)
    _check_resolution(geom, x, y)

    xc = 0.5 * (x[1:] + x[:-1])
    yc = 0.5 * (y[1:] + y[:-1])
    XC, YC = np.meshgrid(xc, yc, indexing="ij")
    eps = np.ones_like(XC)
    eps_sub = materials.substrate_eps(geom.substrate)
    solid = np.zeros(XC.shape, dtype=bool)
    metal = np.zeros(XC.shape, dtype=bool)
    for kind, (x0, x1, y0, y1) in geom.solid_rectangles():
        inside = (XC > x0) & (XC < x1) & (YC > y0) & (YC < y1)
        solid |= inside
        if kind == "substrate":
            eps[inside] = eps_sub
        else:
            metal |= inside
    if geom.film_thickness > 0:
        dist = np.full(XC.shape, np.inf)
        for _, rect in geom.solid_rectangles():
            dist = np.minimum(dist, _rect_distance(XC, YC, rect))
        film = ~solid & (dist <= geom.film_thickness)
        eps[film] = materials.eps_ne
    eps[metal] = 1.0

    tol = 1e-6 * float(np.min(np.diff(y)))
    X, Y = np.meshgrid(x, y, indexing="ij")
    mask = np.zeros(X.shape, dtype=np.int8)
    in_metal_y = (Y >= -tol) & (Y <= geom.metal_thickness + tol)
    for label, (x0, x1) in geom.trace_spans().items():
        mask[_inside(X, x0, x1, tol) & in_metal_y] = label
    for x0, x1 in geom.ground_spans():
        mask[_inside(X, x0, x1, tol) & in_metal_y] = Electrode.Ground
    mask[0, :] = mask[-1, :] = Electrode.Ground
    mask[:, 0] = mask[:, -1] = Electrode.Ground
    return PermittivityGrid(x=x, y=y, eps=eps, electrode_mask=mask, geometry=geom, materials=materials)


def _cells_between(axis, lo, hi):
    tol = 1e-6 * float(np.min(np.diff(axis)))
    inside = (axis >= lo - tol) & (axis <= hi + tol)
    return int(inside.sum()) - 1


def _check_resolution(geom, x, y):
    features = {"metal_thickness": (0.0, geom.metal_thickness)}
    if geom.trench_depth > 0:
        features["trench_depth"] = (-geom.trench_depth, 0.0)
    if geom.film_thickness > 0:
        features["film_thickness"] = (geom.metal_thickness, geom.metal_thickness + geom.film_thickness)
    for name, (lo, hi) in features.items():
        n = _cells_between(y, lo, hi)
        if n < 4:
            raise ResolutionTooCoarse(f"{name} spans {n} cells (< 4)")
    for name, width in (("trace_width", geom.trace_width), ("trace_gap_side", geom.trace_gap_side)):
        a = 0.5 * geom.trace_gap_middle
        lo = a if name == "trace_width" else a + geom.trace_width
        n = _cells_between(x, lo, lo + width)
        if n < 4:
            raise ResolutionTooCoarse(f"{name} spans {n} cells (< 4)")
    if geom.trace_gap_middle > 0:
        n = _cells_between(x, -0.5 * geom.trace_gap_middle, 0.5 * geom.trace_gap_middle)
        if n < 4:
            raise ResolutionTooCoarse(f"trace_gap_middle spans {n} cells (< 4)")


def material_values(grid: PermittivityGrid) -> set[float]:
    m = grid.materials
    sub = m.substrate_eps(grid.geometry.substrate) if grid.geometry else None
    return {1.0, m.eps_ne} | ({sub} if sub is not None else set())
