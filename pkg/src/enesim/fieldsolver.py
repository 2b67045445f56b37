"""2D electrostatics on the rasterized cross-section.

Box-integration (finite-volume) discretization of div(eps grad phi) = 0 on
the node grid. Permittivity is piecewise constant per cell, so an edge
coupling is the length-weighted mean of the two cells sharing that edge,
divided by the edge length; material interfaces lie on grid lines, which
makes the normal-flux continuity exact for layered media.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .constants import EPS0
from .errors import EmptyRegion, HeightUnresolvable, NoConvergence
from .geometry import CrossSectionGeometry, ModeDrive, PermittivityGrid

log = logging.getLogger(__name__)

MAX_ITER = 1_000_000
DEFAULT_TOL = 1e-8
# On strongly graded meshes the pointwise potential error runs ~1e3 times the
# relative residual, so iteration continues to tol * ERROR_MARGIN (floored at
# FLOOR) before the residual is checked against tol.
ERROR_MARGIN = 1e-3
FLOOR = 1e-13


class Region(str, enum.Enum):
    MiddleTrench = "MiddleTrench"
    SideTrench = "SideTrench"
    Metal = "Metal"
    Other = "Other"


@dataclass(frozen=True)
class Stencil:
    """Edge couplings of the unconstrained operator (dimensionless)."""

    aE: np.ndarray
    aN: np.ndarray

    @property
    def aP(self) -> np.ndarray:
        p = self.aE + self.aN
        p[1:, :] += self.aE[:-1, :]
        p[:, 1:] += self.aN[:, :-1]
        return p


def assemble(grid: PermittivityGrid) -> Stencil:
    nx, ny = grid.nx, grid.ny
    dx, dy = grid.dx, grid.dy
    eps = grid.eps
    aE = np.zeros((nx, ny))
    aN = np.zeros((nx, ny))
    # east edges: rows i = 0..nx-2, flux face made of half cells below/above
    face = np.zeros((nx - 1, ny))
    face[:, 1:] += 0.5 * eps * dy[None, :]
    face[:, :-1] += 0.5 * eps * dy[None, :]
    aE[:-1, :] = face / dx[:, None]
    face = np.zeros((nx, ny - 1))
    face[1:, :] += 0.5 * eps * dx[:, None]
    face[:-1, :] += 0.5 * eps * dx[:, None]
    aN[:, :-1] = face / dy[None, :]
    return Stencil(aE=aE, aN=aN)


def _constrain(stencil: Stencil, fixed: np.ndarray, values: np.ndarray):
    """Eliminate Dirichlet nodes symmetrically; returns (aP, aE, aN, b)."""
    aE = stencil.aE.copy()
    aN = stencil.aN.copy()
    aP = stencil.aP
    v = np.where(fixed, values, 0.0)
    b = np.zeros_like(aP)
    # couplings from fixed neighbours move to the right-hand side
    b[:-1, :] += aE[:-1, :] * v[1:, :]
    b[1:, :] += aE[:-1, :] * v[:-1, :]
    b[:, :-1] += aN[:, :-1] * v[:, 1:]
    b[:, 1:] += aN[:, :-1] * v[:, :-1]
    cut_e = np.zeros_like(fixed)
    cut_e[:-1, :] = fixed[:-1, :] | fixed[1:, :]
    cut_n = np.zeros_like(fixed)
    cut_n[:, :-1] = fixed[:, :-1] | fixed[:, 1:]
    aE[cut_e] = 0.0
    aN[cut_n] = 0.0
    aP = np.where(fixed, 1.0, aP)
    b = np.where(fixed, v, b)
    return (np.ascontiguousarray(aP), np.ascontiguousarray(aE), np.ascontiguousarray(aN),
            np.ascontiguousarray(b))


@dataclass(frozen=True)
class PotentialField:
    phi: np.ndarray
    grid: PermittivityGrid
    drive: ModeDrive
    residual: float
    iterations: int
    tol: float

    @property
    def imposed(self) -> np.ndarray:
        return self.drive.potentials(self.grid.electrode_mask)


def pcg(aP, aE, aN, b, x0, tol=DEFAULT_TOL, maxiter=MAX_ITER, kernels=None, stall=200):
    """Conjugate gradients preconditioned with diagonal incomplete Cholesky.

    Stops at ``tol`` on the relative residual ||b - Ax|| / ||b||, at
    ``maxiter``, or when the residual has not halved for ``stall`` iterations.
    Returns (x, relative_residual, iterations).
    """
    k = kernels or _kernels
    d = k.dic_factor(aP, aE, aN)
    x = x0.copy()
    Ax = np.empty_like(x)
    k.stencil_apply(aP, aE, aN, x, Ax)
    r = b - Ax
    bnorm = np.linalg.norm(b) or 1.0
    res = np.linalg.norm(r) / bnorm
    if res <= tol:
        return x, res, 0
    z = np.empty_like(x)
    k.dic_solve(d, aE, aN, r, z)
    p = z.copy()
    rz = np.vdot(r, z)
    q = np.empty_like(x)
    it = 0
    best, best_it = res, 0
    while it < maxiter:
        it += 1
        k.stencil_apply(aP, aE, aN, p, q)
        alpha = rz / np.vdot(p, q)
        x += alpha * p
        r -= alpha * q
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            break
        if res < 0.5 * best:
            best, best_it = res, it
        elif it - best_it > stall:
            break
        k.dic_solve(d, aE, aN, r, z)
        rz_new = np.vdot(r, z)
        p *= rz_new / rz
        p += z
        rz = rz_new
    # recompute the true residual to guard against drift of the recurrence
    k.stencil_apply(aP, aE, aN, x, Ax)
    res = np.linalg.norm(b - Ax) / bnorm
    return x, res, it


def sor(aP, aE, aN, b, x0, tol=DEFAULT_TOL, maxiter=MAX_ITER, omega=1.9, check_every=50, kernels=None):
    """Red-black SOR fallback solver. Returns (x, relative_residual, sweeps)."""
    k = kernels or _kernels
    x = x0.copy()
    Ax = np.empty_like(x)
    bnorm = np.linalg.norm(b) or 1.0
    done = 0
    res = np.inf
    while done < maxiter:
        n = min(check_every, maxiter - done)
        k.sor_redblack(aP, aE, aN, b, x, omega, n)
        done += n
        k.stencil_apply(aP, aE, aN, x, Ax)
        res = np.linalg.norm(b - Ax) / bnorm
        if res <= tol:
            break
    return x, res, done


def solve_laplace(
    grid: PermittivityGrid,
    drive: ModeDrive,
    tol: float = DEFAULT_TOL,
    method: str = "pcg",
    maxiter: int = MAX_ITER,
    backend: str | None = None,
) -> PotentialField:
    """Solve for the node potential; ``backend`` forces "cython" or "python" kernels."""
    if not 0 < tol <= 1e-3:
        raise ValueError("tol must lie in (0, 1e-3]")
    fixed = grid.is_dirichlet
    if not fixed.any():
        raise ValueError("grid has no Dirichlet nodes")
    values = drive.potentials(grid.electrode_mask)
    aP, aE, aN, b = _constrain(assemble(grid), fixed, values)
    x0 = np.where(fixed, values, 0.0)
    kernels = _kernels.implementation(backend) if backend else None
    t0 = time.perf_counter()
    target = max(tol * ERROR_MARGIN, FLOOR)
    if method == "pcg":
        phi, res, it = pcg(aP, aE, aN, b, x0, tol=target, maxiter=maxiter, kernels=kernels)
    elif method == "sor":
        phi, res, it = sor(aP, aE, aN, b, x0, tol=max(tol, FLOOR), maxiter=maxiter, kernels=kernels)
    else:
        raise ValueError(f"unknown method {method!r}")
    log.debug("%s solve %dx%d: %d iterations, residual %.2e, %.2fs",
              method, grid.nx, grid.ny, it, res, time.perf_counter() - t0)
    if not res <= tol:
        raise NoConvergence(it, res)
    phi[fixed] = values[fixed]
    return PotentialField(phi=phi, grid=grid, drive=drive, residual=float(res), iterations=it, tol=tol)


def electric_field(field: PotentialField):
    """Cell-centred (E_x, E_y) from centred differences of phi, shape (nx-1, ny-1)."""
    phi = field.phi
    dx = field.grid.dx[:, None]
    dy = field.grid.dy[None, :]
    gx = (phi[1:, :] - phi[:-1, :]) / dx
    gy = (phi[:, 1:] - phi[:, :-1]) / dy
    Ex = -0.5 * (gx[:, 1:] + gx[:, :-1])
    Ey = -0.5 * (gy[1:, :] + gy[:-1, :])
    return Ex, Ey


def field_energy(field: PotentialField) -> float:
    """Stored energy per unit length, 0.5 * eps0 * sum over edges a (dphi)^2 (J/m)."""
    st = assemble(field.grid)
    phi = field.phi
    we = st.aE[:-1, :] * (phi[1:, :] - phi[:-1, :]) ** 2
    wn = st.aN[:, :-1] * (phi[:, 1:] - phi[:, :-1]) ** 2
    return 0.5 * EPS0 * (we.sum() + wn.sum())


# --------------------------------------------------------------------------
# line sampling


@dataclass(frozen=True)
class FieldLineSample:
    x: np.ndarray
    y: np.ndarray
    Ex_abs: np.ndarray
    region_tags: np.ndarray
    sample_height: float

    def region(self, tag: Region | str, span: int | None = None):
        """(x, |E_x|) of one region; ``span`` selects one contiguous piece."""
        tag = Region(tag).value
        idx = np.flatnonzero(self.region_tags == tag)
        if idx.size == 0:
            return np.array([]), np.array([])
        pieces = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        if span is not None:
            idx = pieces[span]
        return self.x[idx], self.Ex_abs[idx]

    def pieces(self, tag: Region | str):
        tag = Region(tag).value
        idx = np.flatnonzero(self.region_tags == tag)
        if idx.size == 0:
            return []
        return [(self.x[p], self.Ex_abs[p]) for p in np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)]


def _edge_ex(field: PotentialField, x: float, y: float) -> float:
    """E_x of the bilinear interpolant at (x, y): constant in x per cell, linear in y."""
    g = field.grid
    i = int(np.clip(np.searchsorted(g.x, x, side="right") - 1, 0, g.nx - 2))
    j = int(np.clip(np.searchsorted(g.y, y, side="right") - 1, 0, g.ny - 2))
    ty = (y - g.y[j]) / (g.y[j + 1] - g.y[j])
    h = g.x[i + 1] - g.x[i]
    e0 = -(field.phi[i + 1, j] - field.phi[i, j]) / h
    e1 = -(field.phi[i + 1, j + 1] - field.phi[i, j + 1]) / h
    return (1 - ty) * e0 + ty * e1


def _segment_x(axis: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Cell midpoints inside [lo, hi] plus the two end points."""
    tol = 1e-9 * (hi - lo)
    nodes = axis[(axis >= lo - tol) & (axis <= hi + tol)]
    mids = 0.5 * (nodes[1:] + nodes[:-1])
    return np.concatenate([[lo], mids, [hi]])


def _local_dy(y_axis: np.ndarray, y0: float) -> float:
    j = int(np.clip(np.searchsorted(y_axis, y0, side="right") - 1, 0, y_axis.size - 2))
    return float(y_axis[j + 1] - y_axis[j])


def sample_surface_line(field: PotentialField, geom: CrossSectionGeometry, height: float = 5e-9) -> FieldLineSample:
    """|E_x| along the exposed surface (trench floors, metal tops) offset by ``height``.

    Without a film the exposed surface is the trench floor / metal top; with a
    Ne film it is the film top.
    """
    if height <= 0:
        raise HeightUnresolvable("sample height must be > 0")
    g = field.grid
    f = geom.film_thickness
    floor = -geom.trench_depth + f
    top = geom.metal_thickness + f
    for y0 in (floor, top):
        if height < _local_dy(g.y, y0):
            raise HeightUnresolvable(
                f"sample height {height:.3g} m below local dy {_local_dy(g.y, y0):.3g} m"
            )
    segs = []
    trench = geom.trench_spans()
    for lo, hi in geom.ground_spans()[:1]:
        segs.append((max(lo, -geom.structure_half_width - geom.trace_width), hi, top, Region.Other))
    segs.append((*trench["SideTrench"][0], floor, Region.SideTrench))
    spans = geom.trace_spans()
    left, right = list(spans.values())
    segs.append((*left, top, Region.Metal))
    for lo, hi in trench["MiddleTrench"]:
        segs.append((lo, hi, floor, Region.MiddleTrench))
    segs.append((*right, top, Region.Metal))
    segs.append((*trench["SideTrench"][1], floor, Region.SideTrench))
    s = geom.structure_half_width
    segs.append((s, s + geom.trace_width, top, Region.Other))

    xs, ys, ex, tags = [], [], [], []
    for lo, hi, y0, tag in segs:
        px = _segment_x(g.x, lo, hi)
        # end points take the value of the adjacent interior cell
        inner = px.copy()
        inner[0] = px[1]
        inner[-1] = px[-2]
        yv = y0 + height
        vals = np.array([_edge_ex(field, xv, yv) for xv in inner])
        xs.append(px)
        ys.append(np.full(px.size, yv))
        ex.append(np.abs(vals))
        tags.append(np.full(px.size, tag.value, dtype=object))
    return FieldLineSample(
        x=np.concatenate(xs),
        y=np.concatenate(ys),
        Ex_abs=np.concatenate(ex),
        region_tags=np.concatenate(tags).astype(str),
        sample_height=height,
    )


def trench_average_Ex(sample: FieldLineSample, region: Region | str, volts: float = 1.0) -> float:
    """Width-averaged |E_x| per volt over a trench region (1/m).

    Multiple pieces with the same tag (the two side trenches) are averaged
    together, weighting each by its width.
    """
    pieces = sample.pieces(region)
    total = 0.0
    width = 0.0
    for x, e in pieces:
        if x.size < 8:
            raise EmptyRegion(f"{Region(region).value} has {x.size} samples (< 8)")
        total += np.trapezoid(e, x)
        width += x[-1] - x[0]
    if width <= 0:
        raise EmptyRegion(f"no samples tagged {Region(region).value}")
    return total / width / volts
