"""Bound lateral states of an electron riding a corrugated neon surface.

A vertical holding field F presses the electron onto the surface, so height
variations become a lateral potential V(x) = e F (h(x) - min h). The 1D
Schroedinger equation with free-electron mass is discretized with the
three-point Laplacian on the profile grid; the first and last grid points
are hard walls.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.sparse import diags
from scipy.sparse.linalg import eigsh

from .constants import E_ANGSTROM, E_CHARGE, H_PLANCK, HBAR, M_ELECTRON
from .errors import GridTooCoarse, NoBoundState, NotEnoughBoundStates
from .morphology import SurfaceProfile

log = logging.getLogger(__name__)

DENSE_LIMIT = 10_000
GHZ_BAND = (1e9, 10e9)
# dipole floor used by the diagnostic "strong transition" fields only
MIN_DIPOLE = 3.0 * E_ANGSTROM


@dataclass(frozen=True)
class EffectivePotential:
    x: np.ndarray
    V: np.ndarray
    holding_field: float
    source_profile: SurfaceProfile | None = field(default=None, repr=False)

    @property
    def dx(self) -> float:
        return float((self.x[-1] - self.x[0]) / (self.x.size - 1))

    def escape_threshold(self, edge_fraction: float = 0.1) -> float:
        """Largest V within ``edge_fraction`` of the domain next to either wall."""
        n = max(1, int(round(edge_fraction * self.x.size)))
        return float(max(self.V[:n].max(), self.V[-n:].max()))


def effective_potential(profile: SurfaceProfile, F_perp: float) -> EffectivePotential:
    if not F_perp > 0:
        raise ValueError("holding field must be > 0")
    h = profile.h
    V = E_CHARGE * F_perp * (h - h.min())
    return EffectivePotential(x=profile.x, V=V, holding_field=float(F_perp), source_profile=profile)


@dataclass(frozen=True)
class BoundStateSpectrum:
    x: np.ndarray
    energies: np.ndarray
    wavefunctions: np.ndarray  # (n_states, n_x), zero at both walls
    n_bound: int
    threshold: float
    potential: EffectivePotential | None = field(default=None, repr=False)

    @property
    def dx(self) -> float:
        return float((self.x[-1] - self.x[0]) / (self.x.size - 1))

    def inner(self, i: int, j: int) -> float:
        """Trapezoidal inner product <psi_i|psi_j>."""
        return float(np.trapezoid(self.wavefunctions[i] * self.wavefunctions[j], self.x))

    def position_matrix(self) -> np.ndarray:
        psi = self.wavefunctions
        return np.einsum("ik,jk,k->ij", psi, psi, self.x) * self.dx


def oscillation_count(pot: EffectivePotential, energy: float, mass: float = M_ELECTRON) -> int:
    """Sign changes of the hard-wall shooting solution at ``energy``.

    Propagates the ratio psi[i+1] / psi[i] (a Sturm sequence), which stays
    finite through barriers where the solution itself would underflow. By the
    discrete oscillation theorem this equals the number of levels below
    ``energy``, so between levels k-1 and k it is the node count of state k-1
    plus one.
    """
    d, e = _hamiltonian_bands(pot.V, pot.dx, mass)
    t = -e[0] if e.size else 1.0
    tiny = np.finfo(float).eps * t
    negative = 0
    p = d[0] - energy
    for di in d[1:]:
        if p == 0.0:
            p = tiny
        negative += p < 0
        p = di - energy - t * t / p
    return int(negative + (p < 0))


def node_counts(spec: BoundStateSpectrum, mass: float = M_ELECTRON) -> list[int]:
    """Node count of each state: the oscillation count just below its level."""
    E = spec.energies
    below = np.concatenate([[min(E[0], spec.potential.V.min()) - abs(E[0]) - 1e-30], 0.5 * (E[:-1] + E[1:])])
    return [oscillation_count(spec.potential, b, mass) for b in below]


def _hamiltonian_bands(V: np.ndarray, dx: float, mass: float):
    t = HBAR**2 / (2.0 * mass * dx**2)
    inner = V[1:-1]
    return inner + 2.0 * t, np.full(inner.size - 1, -t)


def _lowest(V, dx, n, mass):
    d, e = _hamiltonian_bands(V, dx, mass)
    n = min(n, d.size)
    if d.size <= DENSE_LIMIT:
        w, v = eigh_tridiagonal(d, e, select="i", select_range=(0, n - 1))
    else:
        H = diags([e, d, e], [-1, 0, 1], format="csc")
        w, v = eigsh(H, k=n, sigma=float(V.min()) - abs(e[0]), which="LM")
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    return w, v


def _refined_ground(pot: EffectivePotential, mass: float) -> float:
    x = pot.x
    xf = np.linspace(x[0], x[-1], 2 * x.size - 1)
    Vf = np.interp(xf, x, pot.V)
    w, _ = _lowest(Vf, xf[1] - xf[0], 1, mass)
    return float(w[0])


def solve_bound_states(
    pot: EffectivePotential,
    n_states: int = 20,
    mass: float = M_ELECTRON,
    check_refinement: bool = True,
    refinement_tol: float = 1e-3,
    require_bound: bool = True,
) -> BoundStateSpectrum:
    """Lowest ``n_states`` eigenpairs of -(hbar^2/2m) psi'' + V psi = E psi.

    Wavefunctions are normalized so that the trapezoidal integral of psi^2
    is one and signed so that their largest lobe is positive. ``n_bound``
    counts states below the escape threshold.
    """
    if n_states < 1:
        raise ValueError("n_states must be >= 1")
    x, V = pot.x, pot.V
    if x.size < 3:
        raise ValueError("need at least 3 grid points")
    dx = pot.dx
    w, v = _lowest(V, dx, n_states, mass)
    if check_refinement:
        e_fine = _refined_ground(pot, mass)
        scale = max(abs(e_fine), np.finfo(float).tiny)
        if abs(w[0] - e_fine) / scale > refinement_tol:
            raise GridTooCoarse(
                f"halving dx changes E0 by {abs(w[0] - e_fine) / scale:.2e} (> {refinement_tol:g})"
            )
    psi = np.zeros((w.size, x.size))
    psi[:, 1:-1] = v.T / np.sqrt(dx)
    big = np.argmax(np.abs(psi), axis=1)
    psi *= np.sign(psi[np.arange(w.size), big])[:, None]
    threshold = pot.escape_threshold()
    n_bound = int(np.count_nonzero(w < threshold))
    if require_bound and n_bound == 0:
        raise NoBoundState(f"lowest level {w[0]:.3e} J above escape threshold {threshold:.3e} J")
    return BoundStateSpectrum(x=x, energies=w, wavefunctions=psi, n_bound=n_bound,
                              threshold=threshold, potential=pot)


def count_nodes(psi: np.ndarray, rel_tol: float = 1e-7) -> int:
    """Interior sign changes, ignoring amplitudes below rel_tol * max|psi|."""
    keep = np.abs(psi) > rel_tol * np.abs(psi).max()
    s = np.sign(psi[keep])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def eigen_residual(spec: BoundStateSpectrum, mass: float = M_ELECTRON) -> np.ndarray:
    """||H psi - E psi|| / ||psi|| per state, from an explicitly built H."""
    pot = spec.potential
    d, e = _hamiltonian_bands(pot.V, spec.dx, mass)
    H = diags([e, d, e], [-1, 0, 1])
    out = []
    for E, p in zip(spec.energies, spec.wavefunctions):
        u = p[1:-1]
        out.append(np.linalg.norm(H @ u - E * u) / np.linalg.norm(u))
    return np.array(out)


def trk_partial_sum(spec: BoundStateSpectrum, mass: float = M_ELECTRON) -> float:
    """Thomas-Reiche-Kuhn sum over the computed states (exact total: <= 1)."""
    xm = spec.position_matrix()
    de = spec.energies - spec.energies[0]
    return float(np.sum(2.0 * mass / HBAR**2 * de * xm[0] ** 2))


# --------------------------------------------------------------------------
# transitions


@dataclass(frozen=True)
class TransitionReport:
    f01: float
    mu01: float
    in_GHz_band: bool
    # ground-state transition with the largest dipole among bound states
    f_strong: float = float("nan")
    mu_strong: float = 0.0
    strong_index: int = 0

    @property
    def mu01_eA(self) -> float:
        return self.mu01 / E_ANGSTROM

    @property
    def strong_in_band(self) -> bool:
        return GHZ_BAND[0] <= self.f_strong <= GHZ_BAND[1] and self.mu_strong >= MIN_DIPOLE


def transition_report(spec: BoundStateSpectrum) -> TransitionReport:
    if spec.n_bound < 2:
        raise NotEnoughBoundStates(f"{spec.n_bound} bound state(s); need 2")
    xm = spec.position_matrix()
    f01 = (spec.energies[1] - spec.energies[0]) / H_PLANCK
    mu01 = E_CHARGE * abs(xm[0, 1])
    d = np.abs(xm[0, 1:spec.n_bound])
    j = int(np.argmax(d)) + 1
    return TransitionReport(
        f01=float(f01),
        mu01=float(mu01),
        in_GHz_band=bool(GHZ_BAND[0] <= f01 <= GHZ_BAND[1]),
        f_strong=float((spec.energies[j] - spec.energies[0]) / H_PLANCK),
        mu_strong=float(E_CHARGE * d[j - 1]),
        strong_index=j,
    )


@dataclass(frozen=True)
class TrapPoint:
    F_perp: float
    n_bound: int
    f01: float
    mu01: float
    f_strong: float
    mu_strong: float

    @property
    def trapped_ghz(self) -> bool:
        """At least two bound states with f01 in the 1-10 GHz band."""
        return self.n_bound >= 2 and GHZ_BAND[0] <= self.f01 <= GHZ_BAND[1]

    @property
    def strong_ghz(self) -> bool:
        """Diagnostic: the largest-dipole ground-state transition is in band."""
        return (self.n_bound >= 2 and GHZ_BAND[0] <= self.f_strong <= GHZ_BAND[1]
                and self.mu_strong >= MIN_DIPOLE)


def trap_scan(profile: SurfaceProfile, fields, n_states: int = 20, check_refinement: bool = False) -> list[TrapPoint]:
    out = []
    for F in fields:
        spec = solve_bound_states(effective_potential(profile, F), n_states,
                                  check_refinement=check_refinement, require_bound=False)
        if spec.n_bound >= 2:
            r = transition_report(spec)
            out.append(TrapPoint(float(F), spec.n_bound, r.f01, r.mu01, r.f_strong, r.mu_strong))
        else:
            out.append(TrapPoint(float(F), spec.n_bound, float("nan"), 0.0, float("nan"), 0.0))
    return out


@dataclass(frozen=True)
class ContrastSummary:
    fields: np.ndarray
    scans: dict  # name -> list (per profile) of list[TrapPoint]
    trapped: dict  # name -> bool array (profile, field)
    reference: str = ""
    other: str = ""
    no_samples: bool = False

    def fraction(self, name: str) -> np.ndarray:
        """Fraction of profiles with an in-band trapped state, per field."""
        t = self.trapped[name]
        return t.mean(axis=0) if t.size else np.zeros(self.fields.size)

    @property
    def exclusive_fields(self) -> np.ndarray:
        """Fields where ``other`` has no trapped state in any profile."""
        if self.no_samples:
            return np.zeros(self.fields.size, dtype=bool)
        return ~self.trapped[self.other].any(axis=0)

    @property
    def exclusive_seed_fraction(self) -> float:
        """Fraction of reference profiles trapped at some exclusive field."""
        if self.no_samples or not self.trapped[self.reference].size:
            return 0.0
        t = self.trapped[self.reference][:, self.exclusive_fields]
        return float(t.any(axis=1).mean())

    @property
    def contrast(self) -> bool:
        return self.exclusive_seed_fraction > 0


def _scan_task(args):
    profile, fields, n_states = args
    return trap_scan(profile, fields, n_states)


def morphology_contrast(profiles: dict, fields, n_states: int = 20, reference: str | None = None,
                        other: str | None = None, jobs: int = 1) -> ContrastSummary:
    """Compare trapping statistics of profile ensembles across holding fields.

    ``profiles`` maps an ensemble name to a list of profiles; ``reference``
    and ``other`` default to the first and second name. The summary reports
    whether the reference ensemble traps in-band states at fields where the
    other ensemble traps none.
    """
    fields = np.asarray(list(fields), dtype=float)
    names = list(profiles)
    ref = reference or (names[0] if names else "")
    oth = other or (names[1] if len(names) > 1 else ref)
    if not names or all(len(v) == 0 for v in profiles.values()):
        return ContrastSummary(fields, {}, {}, ref, oth, no_samples=True)
    tasks = [(p, fields, n_states) for name in names for p in profiles[name]]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_scan_task, tasks))
    else:
        runs = [_scan_task(t) for t in tasks]
    scans, trapped, k = {}, {}, 0
    for name in names:
        n = len(profiles[name])
        scans[name] = runs[k:k + n]
        k += n
        trapped[name] = np.array([[pt.trapped_ghz for pt in run] for run in scans[name]],
                                 dtype=bool).reshape(n, fields.size)
    return ContrastSummary(fields, scans, trapped, ref, oth)
