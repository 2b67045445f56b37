"""Microwave transmission analysis: resonance fits, dip-to-shift conversion,
fractional-shift histograms and avoided-crossing fits.

Frequencies on traces are in Hz; everything returned as a rate (omega,
kappa, g) is in rad/s. Transmission is modeled as a two-port Lorentzian,
|S21|^2 = A / (1 + 4 (f - f0)^2 / kappa_Hz^2), reported in dB.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks

from .constants import TWO_PI
from .errors import FitDiverged, InsufficientSpan, NoCrossingInRange, ParseError
from .geometry import Mode

LN10 = math.log(10.0)
DB10 = 10.0 / LN10
MIN_SPAN_LINEWIDTHS = 5.0
MIN_POINTS = 50
MIN_PEAK_DB = 3.0
QUBIT_WIDTH_RATIO = 5.0

DIP_NOTE = ("dip converted assuming a pure dispersive shift of an unchanged Lorentzian; "
            "near resonance this underestimates the coupling")


@dataclass(frozen=True)
class ResonatorParams:
    omega0: float
    kappa: float
    mode: Mode = Mode.DM
    device: str = ""

    def __post_init__(self):
        if not self.omega0 > 0 or not self.kappa > 0:
            raise ValueError("omega0 and kappa must be positive")
        if self.kappa / self.omega0 >= 1e-2:
            raise ValueError("kappa must be much smaller than omega0")


@dataclass(frozen=True)
class TransmissionTrace:
    freq: np.ndarray
    s21_db: np.ndarray
    control: float | None = None

    def __post_init__(self):
        f = np.asarray(self.freq, dtype=float)
        s = np.asarray(self.s21_db, dtype=float)
        object.__setattr__(self, "freq", f)
        object.__setattr__(self, "s21_db", s)
        if f.ndim != 1 or f.shape != s.shape:
            raise ValueError("freq and s21_db must be 1D arrays of equal length")
        if not np.all(np.diff(f) > 0):
            raise ValueError("freq must be strictly increasing")


# --------------------------------------------------------------------------
# single Lorentzian


def lorentzian_db(f, f0, fwhm, offset_db=0.0):
    return offset_db - DB10 * np.log1p(4.0 * ((f - f0) / fwhm) ** 2)


@dataclass(frozen=True)
class LorentzianFit:
    params: ResonatorParams
    depth_db: float  # peak transmission (dB)
    residual: float  # RMS, dB
    f0: float  # Hz
    fwhm: float  # Hz


def lorentzian_fit(trace: TransmissionTrace, mode: Mode = Mode.DM, device: str = "") -> LorentzianFit:
    """Least-squares Lorentzian fit of a transmission peak (dB domain)."""
    f, y = trace.freq, trace.s21_db
    if f.size < MIN_POINTS:
        raise InsufficientSpan(f"{f.size} points (< {MIN_POINTS})")
    if np.ptp(y) < MIN_PEAK_DB:
        raise FitDiverged(f"no resonance: trace varies by {np.ptp(y):.3g} dB")
    k = int(np.argmax(y))
    above = f[y >= y[k] - DB10 * LN10 * math.log10(2.0)]
    fwhm0 = max(above[-1] - above[0], 2.0 * np.min(np.diff(f)))
    fc, fs = f[k], fwhm0
    u = (f - fc) / fs

    def resid(p):
        return lorentzian_db(u, p[0], p[1], p[2]) - y

    def jac(p):
        x0, w, _ = p
        d = u - x0
        q = 4.0 * (d / w) ** 2
        common = -DB10 / (1.0 + q)
        return np.column_stack([common * (-8.0 * d / w**2), common * (-8.0 * d**2 / w**3), np.ones_like(u)])

    try:
        sol = least_squares(resid, [0.0, 1.0, y[k]], jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitDiverged(str(exc)) from exc
    x0, w, off = sol.x
    f0, fwhm = fc + x0 * fs, abs(w) * fs
    if not (np.all(np.isfinite(sol.x)) and f[0] <= f0 <= f[-1] and fwhm > 0):
        raise FitDiverged("fit left the trace or produced a non-finite width")
    if f[-1] - f[0] < MIN_SPAN_LINEWIDTHS * fwhm:
        raise InsufficientSpan(f"trace spans {(f[-1] - f[0]) / fwhm:.2f} linewidths (< {MIN_SPAN_LINEWIDTHS:g})")
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    return LorentzianFit(ResonatorParams(TWO_PI * f0, TWO_PI * fwhm, Mode(mode), device), float(off), rms, f0, fwhm)


# --------------------------------------------------------------------------
# dips and shifts


def dip_to_shift(dip_db, kappa):
    """Frequency shift (rad/s) that lowers transmission at the bare resonance by dip_db."""
    dip = np.asarray(dip_db, dtype=float)
    if np.any(dip < 0):
        raise ValueError("dip must be >= 0 dB")
    out = 0.5 * kappa * np.sqrt(np.expm1(dip * LN10 / 10.0))
    return float(out) if out.ndim == 0 else out


def shift_to_dip(shift, kappa):
    """Inverse of dip_to_shift."""
    s = np.asarray(shift, dtype=float)
    out = DB10 * np.log1p((2.0 * s / kappa) ** 2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ShiftHistogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int
    max_shift: float  # fractional
    values: np.ndarray = field(repr=False)
    note: str = DIP_NOTE


def shift_histogram(scans, params: ResonatorParams, bins: int = 50) -> ShiftHistogram:
    """Histogram of fractional shifts dω/ω0 from (control, dip_db) pairs."""
    scans = list(scans)
    if not scans:
        raise ValueError("no scans")
    dips = np.array([d for _, d in scans], dtype=float)
    frac = dip_to_shift(dips, params.kappa) / params.omega0
    frac = np.atleast_1d(frac)
    top = float(frac.max())
    if top == 0.0:
        edges = np.array([0.0, 0.0])
        counts = np.array([frac.size])
    else:
        counts, edges = np.histogram(frac, bins=bins, range=(0.0, top))
    return ShiftHistogram(edges, counts, int(frac.size), top, frac)


def dips_from_traces(traces, f0: float, reference_db: float | None = None):
    """(control, dip_db) pairs from the transmission at the bare frequency f0 (Hz)."""
    at = np.array([np.interp(f0, t.freq, t.s21_db) for t in traces])
    ref = at.max() if reference_db is None else reference_db
    return [(t.control, max(0.0, float(ref - a))) for t, a in zip(traces, at)]


# --------------------------------------------------------------------------
# coupled resonator-qubit transmission


@dataclass(frozen=True)
class LinearTuning:
    """omega_q(V) = omega_at_zero + slope * V, in rad/s and rad/s per volt."""

    omega_at_zero: float
    slope: float

    def __call__(self, v):
        return self.omega_at_zero + self.slope * np.asarray(v, dtype=float)

    def crossing(self, omega_r: float) -> float:
        return (omega_r - self.omega_at_zero) / self.slope


def branch_frequencies(omega_r, omega_q, g):
    """Hybridized branches (lower, upper) of two coupled modes."""
    mean = 0.5 * (omega_r + omega_q)
    half = np.sqrt(0.25 * (omega_q - omega_r) ** 2 + g**2)
    return mean - half, mean + half


def coupled_s21(omega, omega_r, kappa, omega_q, gamma, g):
    """Complex S21 of a resonator coupled to a lossy two-level mode, unit peak when g = 0."""
    chi = g**2 / (1j * (omega_q - omega) + 0.5 * gamma)
    return (0.5 * kappa) / (1j * (omega_r - omega) + 0.5 * kappa + chi)


def simulate_crossing(
    params: ResonatorParams,
    g: float,
    tuning: LinearTuning,
    controls,
    freqs,
    gamma: float | None = None,
    noise_db: float = 0.0,
    seed: int | None = None,
    offset_db: float = 0.0,
) -> list[TransmissionTrace]:
    """Synthetic S21 traces (dB) over a control sweep; ``freqs`` in Hz."""
    if g < 0:
        raise ValueError("g must be >= 0")
    gamma = QUBIT_WIDTH_RATIO * params.kappa if gamma is None else gamma
    freqs = np.asarray(freqs, dtype=float)
    w = TWO_PI * freqs
    rng = np.random.default_rng(seed)
    out = []
    for v in controls:
        s = coupled_s21(w, params.omega0, params.kappa, float(tuning(v)), gamma, g)
        y = offset_db + 20.0 * np.log10(np.abs(s))
        if noise_db > 0:
            y = y + rng.normal(0.0, noise_db, y.size)
        out.append(TransmissionTrace(freqs, y, float(v)))
    return out


@dataclass(frozen=True)
class CrossingFit:
    g: float
    omega_r: float
    qubit_slope: float
    residual: float  # RMS, dB
    omega_q0: float = float("nan")
    kappa: float = float("nan")
    gamma: float = float("nan")
    crossing_control: float = float("nan")

    @property
    def tuning(self) -> LinearTuning:
        return LinearTuning(self.omega_q0, self.qubit_slope)


def _two_peaks(trace: TransmissionTrace, prominence: float):
    idx, props = find_peaks(trace.s21_db, prominence=prominence)
    if idx.size < 2:
        return None
    top = idx[np.argsort(props["prominences"])[-2:]]
    lo, hi = np.sort(trace.freq[top])
    return TWO_PI * lo, TWO_PI * hi


def _width_guess(trace: TransmissionTrace) -> float:
    y, f = trace.s21_db, trace.freq
    k = int(np.argmax(y))
    inside = y >= y[k] - 10.0 * math.log10(2.0)
    # contiguous half-max run around the peak
    lo = k
    while lo > 0 and inside[lo - 1]:
        lo -= 1
    hi = k
    while hi < y.size - 1 and inside[hi + 1]:
        hi += 1
    return TWO_PI * max(f[hi] - f[lo], f[1] - f[0])


def _initial_guess(traces, prominence):
    ctrl, s, d2 = [], [], []
    for t in traces:
        pk = _two_peaks(t, prominence)
        if pk is None:
            continue
        lo, hi = pk
        ctrl.append(t.control)
        s.append(lo + hi)
        d2.append((hi - lo) ** 2)
    if len(ctrl) < 3:
        raise NoCrossingInRange(f"only {len(ctrl)} trace(s) show two branches")
    ctrl, s, d2 = map(np.asarray, (ctrl, s, d2))
    slope_s, icpt_s = np.polyfit(ctrl, s, 1)  # s = omega_r + q0 + slope*V
    a, b, c = np.polyfit(ctrl, d2, 2)  # d2 = (q0 - r + slope V)^2 + 4 g^2
    slope = slope_s if slope_s != 0 else math.copysign(math.sqrt(max(a, 0.0)), 1.0)
    det = b / (2.0 * slope)  # q0 - omega_r
    g2 = 0.25 * (c - det**2)
    omega_r = 0.5 * (icpt_s - det)
    q0 = omega_r + det
    g = math.sqrt(g2) if g2 > 0 else 0.5 * math.sqrt(max(d2.min(), 0.0))
    return omega_r, q0, slope, g


def fit_crossing(traces, kappa: float | None = None, prominence: float = 3.0) -> CrossingFit:
    """Fit the full set of S21 traces to the coupled-mode transmission model.

    Starting values come from the two-branch traces: the branch sum is linear
    in the control and the squared branch separation quadratic, which fixes
    omega_r, the tuning line and g. The refinement fits every trace point in
    dB with free resonator and qubit linewidths and a common dB offset.
    """
    traces = sorted(traces, key=lambda t: t.control)
    if len(traces) < 3 or any(t.control is None for t in traces):
        raise NoCrossingInRange("need at least 3 traces with control values")
    omega_r, q0, slope, g = _initial_guess(traces, prominence)
    ctrl = np.array([t.control for t in traces])
    v_star = (omega_r - q0) / slope
    if not ctrl[0] < v_star < ctrl[-1]:
        raise NoCrossingInRange(f"branch-distance minimum at control {v_star:.4g}, outside the sweep")

    far = traces[int(np.argmax(np.abs(ctrl - v_star)))]
    k0 = kappa if kappa is not None else _width_guess(far)
    off0 = float(far.s21_db.max())
    # fit in units of k0 around omega_r for conditioning
    w_all = [TWO_PI * t.freq for t in traces]
    y_all = np.concatenate([t.s21_db for t in traces])
    wc, ws = omega_r, k0

    def model(p):
        r, qa, qb, gg, kap, gam, off = p
        out = []
        for v, w in zip(ctrl, w_all):
            x = (w - wc) / ws
            qv = qa + qb * v
            s = coupled_s21(x, r, kap, qv, gam, gg)
            out.append(off + 20.0 * np.log10(np.abs(s)))
        return np.concatenate(out)

    p0 = np.array([0.0, (q0 - wc) / ws, slope / ws, g / ws, 1.0, QUBIT_WIDTH_RATIO, off0])
    try:
        sol = least_squares(lambda p: model(p) - y_all, p0, method="trf", x_scale="jac",
                            xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=2000)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FitDiverged(str(exc)) from exc
    if not sol.success or not np.all(np.isfinite(sol.x)):
        raise FitDiverged(f"crossing fit failed: {sol.message}")
    r, qa, qb, gg, kap, gam, _ = sol.x
    fit = CrossingFit(
        g=abs(gg) * ws,
        omega_r=wc + r * ws,
        qubit_slope=qb * ws,
        residual=float(np.sqrt(np.mean(sol.fun**2))),
        omega_q0=wc + qa * ws,
        kappa=abs(kap) * ws,
        gamma=abs(gam) * ws,
    )
    v_fit = fit.tuning.crossing(fit.omega_r) if fit.qubit_slope != 0 else float("nan")
    if not ctrl[0] < v_fit < ctrl[-1]:
        raise NoCrossingInRange(f"fitted crossing at control {v_fit:.4g}, outside the sweep")
    return CrossingFit(**{**fit.__dict__, "crossing_control": float(v_fit)})


# --------------------------------------------------------------------------
# trace I/O


def format_traces(traces) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    with_ctrl = any(t.control is not None for t in traces)
    w.writerow(["freq_hz", "s21_db", "bias_v"] if with_ctrl else ["freq_hz", "s21_db"])
    for t in traces:
        for f, s in zip(t.freq, t.s21_db):
            w.writerow([repr(float(f)), repr(float(s))] + ([repr(float(t.control))] if with_ctrl else []))
    return buf.getvalue()


def load_traces(source) -> list[TransmissionTrace]:
    """Read ``freq_hz,s21_db[,bias_v]``; rows are grouped by bias value."""
    text = Path(source).read_text() if not isinstance(source, io.TextIOBase) else source.read()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError("empty trace file")
    head = [c.strip().lower() for c in rows[0]]
    if head[:2] != ["freq_hz", "s21_db"] or head[2:] not in ([], ["bias_v"]):
        raise ParseError(f"expected header freq_hz,s21_db[,bias_v], got {rows[0]!r}")
    groups: dict = {}
    for n, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise ParseError(f"line {n}: non-numeric value in {row!r}") from None
        if len(vals) != len(head):
            raise ParseError(f"line {n}: expected {len(head)} columns")
        key = vals[2] if len(head) == 3 else None
        groups.setdefault(key, []).append(vals[:2])
    out = []
    for key, vals in groups.items():
        a = np.array(vals)
        order = np.argsort(a[:, 0], kind="stable")
        out.append(TransmissionTrace(a[order, 0], a[order, 1], key))
    return out
