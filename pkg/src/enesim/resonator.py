"""Mode capacitance, characteristic impedance and electron-resonator coupling.

The coupling of a trapped electron with transition dipole ``mu`` to a
quarter-wave resonator mode, relative to the mode frequency, is

    g / omega = mu * Etilde * sqrt(2 Z_r / (pi hbar))

with ``Etilde`` the trench-averaged |E_x| per volt on the traces and ``Z_r``
the characteristic impedance of the mode. Equivalently
g = mu * Etilde * V_zpf / hbar with V_zpf = omega * sqrt(2 hbar Z_r / pi).
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .constants import C_LIGHT, E_ANGSTROM, HBAR
from .errors import InvalidCapacitance, NumericalError, SweepPointError
from .fieldsolver import (
    DEFAULT_TOL,
    PotentialField,
    Region,
    field_energy,
    sample_surface_line,
    solve_laplace,
    trench_average_Ex,
)
from .geometry import (
    DEFAULT_MATERIALS,
    CrossSectionGeometry,
    GridSpec,
    Materials,
    Mode,
    ModeDrive,
    PermittivityGrid,
    rasterize,
)

log = logging.getLogger(__name__)

SAMPLE_HEIGHT = 5e-9
DEFAULT_MU = 30 * E_ANGSTROM


def capacitance_per_length(field: PotentialField, grid: PermittivityGrid | None = None,
                           drive: ModeDrive | None = None) -> float:
    """C = 2 W / V^2 from the stored field energy, V the drive magnitude (F/m)."""
    if grid is not None and grid is not field.grid:
        raise ValueError("field was solved on a different grid")
    drive = drive or field.drive
    return 2.0 * field_energy(field) / drive.magnitude ** 2


def characteristic_impedance(C: float, C0: float) -> float:
    """Quasi-TEM impedance Z = 1 / (c sqrt(C C0)) (ohm)."""
    if not C0 > 0:
        raise InvalidCapacitance(f"vacuum capacitance must be positive, got {C0!r}")
    if C < C0:
        raise InvalidCapacitance(f"C = {C:.6g} F/m below vacuum value C0 = {C0:.6g} F/m")
    return 1.0 / (C_LIGHT * np.sqrt(C * C0))


@dataclass(frozen=True)
class CouplingInputs:
    mu: float  # C*m
    omega: float  # rad/s
    Etilde: float  # 1/m per volt
    Z_r: float  # ohm
    kappa: float | None = None  # rad/s

    def __post_init__(self):
        if self.mu < 0 or not self.omega > 0 or not self.Z_r > 0:
            raise ValueError("need mu >= 0, omega > 0, Z_r > 0")

    @classmethod
    def from_eA(cls, mu_eA: float, **kw) -> "CouplingInputs":
        return cls(mu=mu_eA * E_ANGSTROM, **kw)


def coupling_ratio(inp: CouplingInputs) -> float:
    return inp.mu * inp.Etilde * np.sqrt(2.0 * inp.Z_r / (np.pi * HBAR))


def vzpf(omega: float, Z_r: float) -> float:
    """Zero-point anti-node voltage of a quarter-wave mode (V)."""
    if omega <= 0 or Z_r < 0:
        raise ValueError("need omega > 0 and Z_r >= 0")
    return omega * np.sqrt(2.0 * HBAR * Z_r / np.pi)


def coupling_rate(inp: CouplingInputs) -> float:
    """g in rad/s."""
    return coupling_ratio(inp) * inp.omega


# --------------------------------------------------------------------------
# mode solutions and the depth sweep


@dataclass(frozen=True)
class ModeSolution:
    mode: Mode
    t: float
    region: Region
    Etilde_middle: float
    Etilde_side: float
    C: float
    C0: float
    Z_r: float
    g_over_omega: float  # for DEFAULT_MU (or the sweep's mu)
    g_over_omega_normalized: float = float("nan")

    @property
    def Etilde(self) -> float:
        return self.Etilde_middle if self.region is Region.MiddleTrench else self.Etilde_side


def solve_mode(
    geom: CrossSectionGeometry,
    mode: Mode | str,
    grid_spec: GridSpec | None = None,
    tol: float = DEFAULT_TOL,
    materials: Materials = DEFAULT_MATERIALS,
    mu: float = DEFAULT_MU,
) -> list[ModeSolution]:
    """Solve one (geometry, mode) point; returns one entry per trench region."""
    mode = Mode(mode)
    drive = ModeDrive.for_mode(mode)
    grid = rasterize(geom, grid_spec, materials)
    field = solve_laplace(grid, drive, tol=tol)
    field0 = solve_laplace(grid.vacuum(), drive, tol=tol)
    C = capacitance_per_length(field)
    C0 = capacitance_per_length(field0)
    Z = characteristic_impedance(C, C0)
    sample = sample_surface_line(field, geom, SAMPLE_HEIGHT)
    e_mid = trench_average_Ex(sample, Region.MiddleTrench) if geom.trace_gap_middle > 0 else 0.0
    e_side = trench_average_Ex(sample, Region.SideTrench)
    out = []
    for region, e in ((Region.MiddleTrench, e_mid), (Region.SideTrench, e_side)):
        if region is Region.MiddleTrench and geom.trace_gap_middle <= 0:
            continue
        gw = mu * e * np.sqrt(2.0 * Z / (np.pi * HBAR))
        out.append(ModeSolution(mode, geom.trench_depth, region, e_mid, e_side, C, C0, Z, gw))
    return out


def _sweep_point(args):
    geom, t, mode, grid_spec, tol, materials, mu = args
    try:
        return solve_mode(geom.with_depth(t), mode, grid_spec, tol, materials, mu)
    except NumericalError as exc:
        raise SweepPointError({"t": t, "mode": Mode(mode).value}, exc) from exc


def normalize(solutions: list[ModeSolution]) -> list[ModeSolution]:
    """Normalize g/omega to its maximum over the whole list."""
    if not solutions:
        return []
    peak = max(s.g_over_omega for s in solutions)
    if not peak > 0:
        raise NumericalError("g/omega is zero everywhere in the sweep")
    return [replace(s, g_over_omega_normalized=s.g_over_omega / peak) for s in solutions]


def _order(s: ModeSolution):
    return (s.t, s.mode.value, s.region.value)


def depth_sweep(
    geom: CrossSectionGeometry,
    depths,
    modes=(Mode.CM, Mode.DM),
    grid_spec: GridSpec | None = None,
    tol: float = DEFAULT_TOL,
    materials: Materials = DEFAULT_MATERIALS,
    mu: float = DEFAULT_MU,
    jobs: int = 1,
) -> list[ModeSolution]:
    """Trench-depth sweep; one ModeSolution per (t, mode, region), canonically sorted."""
    depths = [float(t) for t in depths]
    if not depths:
        raise ValueError("empty depth list")
    if any(t <= 0 for t in depths) or depths != sorted(depths):
        raise ValueError("depths must be positive and sorted")
    modes = [Mode(m) for m in modes]
    tasks = [(geom, t, m, grid_spec, tol, materials, mu) for t in depths for m in modes]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(task) for task in tasks]
    flat = sorted((s for r in results for s in r), key=_order)
    return normalize(flat)


def sweep_argmax(solutions: list[ModeSolution]) -> ModeSolution:
    return max(solutions, key=lambda s: s.g_over_omega_normalized)
