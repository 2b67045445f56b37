"""Surface profiles: synthetic substrates, log-normal Ne film growth, roughness.

Heights are in meters on a uniform x grid. Generators are pure functions of
their parameters and seed.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainTooShort, ParseError, TooFewSamples

MIN_SAMPLES = 64


class ProfileKind(str, enum.Enum):
    Substrate = "Substrate"
    FilmTop = "FilmTop"
    Combined = "Combined"


class SubstrateKind(str, enum.Enum):
    SiEtched = "SiEtched"
    SapphireSmooth = "SapphireSmooth"


@dataclass(frozen=True)
class SurfaceProfile:
    x: np.ndarray
    h: np.ndarray
    kind: ProfileKind = ProfileKind.Substrate
    seed: int | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        h = np.asarray(self.h, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "h", h)
        if x.ndim != 1 or x.shape != h.shape:
            raise ValueError("x and h must be 1D arrays of equal length")
        if x.size < MIN_SAMPLES:
            raise TooFewSamples(f"profile has {x.size} samples (< {MIN_SAMPLES})")
        step = np.diff(x)
        if not np.all(step > 0):
            raise ValueError("x must be strictly increasing")
        if np.ptp(step) > 1e-6 * step.mean():
            raise ValueError("x must be uniformly spaced")

    @property
    def dx(self) -> float:
        return float((self.x[-1] - self.x[0]) / (self.x.size - 1))

    @property
    def length(self) -> float:
        return float(self.x[-1] - self.x[0])

    def __len__(self):
        return self.x.size


@dataclass(frozen=True)
class RoughnessStats:
    Rq: float
    mean_height: float
    bin_edges: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)

    @property
    def histogram(self):
        return self.bin_edges, self.counts


def roughness_stats(profile: SurfaceProfile, bins: int = 64) -> RoughnessStats:
    """RMS roughness about the mean and a height histogram.

    Bins are laid out relative to the mean height, so shifting the profile by
    a constant shifts the edges and leaves the counts unchanged.
    """
    h = profile.h
    mean = float(h.mean())
    dev = h - mean
    rq = float(np.sqrt(np.mean(dev**2)))
    lo, hi = float(dev.min()), float(dev.max())
    if hi - lo <= 1e-15 * max(1.0, abs(mean)):
        # flat profile: everything lands in the central bin
        counts, edges = np.histogram(dev, bins=bins, range=(lo - 0.5e-12, hi + 0.5e-12))
    else:
        counts, edges = np.histogram(dev, bins=bins, range=(lo, hi))
    return RoughnessStats(Rq=rq, mean_height=mean, bin_edges=edges + mean, counts=counts)


def histogram_modes(stats: RoughnessStats, smooth_bins: float = 1.5, min_fraction: float = 0.01) -> int:
    """Number of local maxima of the Gaussian-smoothed histogram.

    Peaks holding less than ``min_fraction`` of the samples are ignored.
    """
    c = stats.counts.astype(float)
    k = np.arange(-4 * math.ceil(smooth_bins), 4 * math.ceil(smooth_bins) + 1)
    w = np.exp(-0.5 * (k / smooth_bins) ** 2)
    s = np.convolve(np.pad(c, k.size // 2, mode="constant"), w / w.sum(), mode="valid")
    floor = min_fraction * c.sum()
    peaks = 0
    for i in range(len(s)):
        left = s[i - 1] if i > 0 else -np.inf
        right = s[i + 1] if i + 1 < len(s) else -np.inf
        if s[i] > left and s[i] >= right and s[i] > floor:
            peaks += 1
    return peaks


# --------------------------------------------------------------------------
# synthetic substrates


@dataclass(frozen=True)
class SiEtchedParams:
    """Trapezoidal valley train with sparse spikes on the ridges.

    Valley width/depth are jittered uniformly by +-``jitter``; ``ridge_width``
    is calibrated so the ensemble-mean Rq is 9.5 nm.
    """

    length: float = 4e-6
    dx: float = 1e-9
    valley_width: float = 200e-9
    valley_depth: float = 25e-9
    wall_width: float = 75e-9
    ridge_width: float = 50e-9
    jitter: float = 0.2
    spike_width: float = 10e-9
    spike_height: float = 12e-9
    spikes_per_um: float = 0.5


@dataclass(frozen=True)
class SapphireParams:
    length: float = 4e-6
    dx: float = 1e-9
    rq: float = 0.4e-9
    correlation_length: float = 20e-9


def _grid(length, dx):
    n = int(round(length / dx)) + 1
    return np.arange(n) * dx


def gaussian_correlated(n: int, dx: float, correlation_length: float, rng: np.random.Generator) -> np.ndarray:
    """Stationary unit-variance Gaussian field with correlation exp(-r^2 / l^2).

    White noise circularly convolved with exp(-2 r^2 / l^2), normalized so the
    kernel has unit L2 norm.
    """
    white = rng.standard_normal(n)
    if correlation_length <= 0:
        return white
    r = np.minimum(np.arange(n), n - np.arange(n)) * dx
    kernel = np.exp(-2.0 * (r / correlation_length) ** 2)
    kernel /= np.sqrt(np.sum(kernel**2))
    return np.fft.irfft(np.fft.rfft(white) * np.fft.rfft(kernel), n)


def _si_etched(p: SiEtchedParams, rng: np.random.Generator) -> np.ndarray:
    x = _grid(p.length, p.dx)
    h = np.zeros_like(x)
    ridges = []
    pos = -rng.uniform(0.0, p.valley_width + p.ridge_width)
    while pos < x[-1]:
        r = p.ridge_width * (1 + rng.uniform(-p.jitter, p.jitter))
        w = p.valley_width * (1 + rng.uniform(-p.jitter, p.jitter))
        d = p.valley_depth * (1 + rng.uniform(-p.jitter, p.jitter))
        ridges.append((pos, pos + r))
        x0 = pos + r
        a = min(p.wall_width, 0.45 * w)
        u = x - x0
        # trapezoid: linear walls of width a, flat floor
        prof = np.clip(np.minimum(u, w - u) / a, 0.0, 1.0)
        inside = (u > 0) & (u < w)
        h[inside] = np.minimum(h[inside], -d * prof[inside])
        pos = x0 + w
    total_ridge = sum(max(0.0, min(b, x[-1]) - max(a, 0.0)) for a, b in ridges)
    n_spikes = rng.poisson(p.spikes_per_um * total_ridge * 1e6)
    if n_spikes and ridges:
        lengths = np.array([b - a for a, b in ridges])
        which = rng.choice(len(ridges), size=n_spikes, p=lengths / lengths.sum())
        sigma = p.spike_width / (2.0 * math.sqrt(2.0 * math.log(2.0)))
        for k in which:
            a, b = ridges[k]
            c = rng.uniform(a + p.spike_width, max(a + p.spike_width, b - p.spike_width))
            height = p.spike_height * (1 + rng.uniform(-p.jitter, p.jitter))
            h += height * np.exp(-0.5 * ((x - c) / sigma) ** 2)
    return h


def synth_substrate(kind: SubstrateKind | str, params=None, seed: int = 0) -> SurfaceProfile:
    kind = SubstrateKind(kind)
    rng = np.random.default_rng(seed)
    if kind is SubstrateKind.SiEtched:
        p = params or SiEtchedParams()
        if p.length < 10 * p.valley_width:
            raise DomainTooShort(f"length {p.length:.3g} m < 10 valley widths")
        if min(p.valley_width, p.valley_depth, p.dx, p.ridge_width) <= 0:
            raise ValueError("SiEtched parameters must be positive")
        h = _si_etched(p, rng)
    else:
        p = params or SapphireParams()
        if min(p.rq, p.dx, p.length) <= 0:
            raise ValueError("SapphireSmooth parameters must be positive")
        if p.length < 10 * p.correlation_length:
            raise DomainTooShort("length < 10 correlation lengths")
        n = int(round(p.length / p.dx)) + 1
        z = gaussian_correlated(n, p.dx, p.correlation_length, rng)
        z -= z.mean()
        h = p.rq * z / np.sqrt(np.mean(z**2))
    x = _grid(p.length, p.dx)
    return SurfaceProfile(x=x, h=h, kind=ProfileKind.Substrate, seed=seed)


# --------------------------------------------------------------------------
# film growth


@dataclass(frozen=True)
class FilmGrowthParams:
    mean_thickness: float = 10e-9
    std_thickness: float = math.sqrt(10.0) * 1e-9
    correlation_length: float = 20e-9

    def __post_init__(self):
        if self.mean_thickness <= 0 or self.std_thickness < 0 or self.correlation_length <= 0:
            raise ValueError("film mean and correlation length must be > 0, std >= 0")

    @property
    def lognormal(self) -> tuple[float, float]:
        """(mu_ln, sigma_ln) of the log of the thickness."""
        m, s = self.mean_thickness, self.std_thickness
        var_ln = math.log1p((s / m) ** 2)
        return math.log(m) - 0.5 * var_ln, math.sqrt(var_ln)


def film_thickness(n: int, dx: float, params: FilmGrowthParams, rng: np.random.Generator) -> np.ndarray:
    if params.std_thickness == 0:
        return np.full(n, params.mean_thickness)
    mu, sigma = params.lognormal
    z = gaussian_correlated(n, dx, params.correlation_length, rng)
    return np.exp(mu + sigma * z)


def grow_film(substrate: SurfaceProfile, params: FilmGrowthParams | None = None, seed: int = 0) -> SurfaceProfile:
    """Conformal film: combined surface = substrate + log-normal thickness."""
    params = params or FilmGrowthParams()
    rng = np.random.default_rng(seed)
    tau = film_thickness(substrate.x.size, substrate.dx, params, rng)
    return SurfaceProfile(x=substrate.x.copy(), h=substrate.h + tau, kind=ProfileKind.Combined, seed=seed)


# --------------------------------------------------------------------------
# I/O

_UNITS = {"m": 1.0, "um": 1e-6, "nm": 1e-9, "pm": 1e-12, "a": 1e-10}


def _header_units(fields):
    if len(fields) != 2:
        return None
    names = [f.strip().lower() for f in fields]
    if not (names[0].startswith("x_") and names[1].startswith("h_")):
        return None
    try:
        return _UNITS[names[0][2:]], _UNITS[names[1][2:]]
    except KeyError:
        raise ParseError(f"unknown unit in header {fields!r}") from None


def load_profile(source, dx: float = 1e-9, line: int | None = None,
                 kind: ProfileKind = ProfileKind.Substrate) -> SurfaceProfile:
    """Read a line scan.

    Accepted layouts:
      * CSV with header ``x_<unit>,h_<unit>`` (unit m, um, nm, pm or a)
      * a single headerless column of heights in nm, spaced by ``dx``
      * a headerless 2D height map in nm (rows = scan lines); row ``line``
        (default: middle) is used.
    Rows containing NaN are dropped; the remaining x must stay uniform.
    """
    text = Path(source).read_text() if not isinstance(source, io.StringIO) else source.getvalue()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise ParseError("empty profile file")
    units = _header_units(rows[0])
    body = rows[1:] if units else rows
    try:
        data = np.array([[float(v) for v in r if v.strip() != ""] for r in body], dtype=float)
    except ValueError as exc:
        raise ParseError(f"non-numeric value: {exc}") from None
    if data.ndim != 2 or data.size == 0:
        raise ParseError("ragged or empty table")
    if units:
        if data.shape[1] != 2:
            raise ParseError("expected two columns x,h")
        keep = ~np.isnan(data).any(axis=1)
        x = data[keep, 0] * units[0]
        h = data[keep, 1] * units[1]
    else:
        if data.shape[1] == 1:
            h = data[:, 0] * 1e-9
        else:
            h = data[data.shape[0] // 2 if line is None else line] * 1e-9
        x = np.arange(h.size) * dx
        keep = ~np.isnan(h)
        x, h = x[keep], h[keep]
    if x.size < MIN_SAMPLES:
        raise TooFewSamples(f"profile has {x.size} valid samples (< {MIN_SAMPLES})")
    try:
        return SurfaceProfile(x=x, h=h, kind=kind)
    except TooFewSamples:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def format_profile(profile: SurfaceProfile) -> str:
    lines = ["x_m,h_m"]
    lines += [f"{a!r},{b!r}" for a, b in zip(profile.x.tolist(), profile.h.tolist())]
    return "\n".join(lines) + "\n"


def save_profile(profile: SurfaceProfile, path) -> None:
    Path(path).write_text(format_profile(profile))


def format_histogram(stats: RoughnessStats) -> str:
    lines = ["bin_left_m,bin_right_m,count"]
    e = stats.bin_edges.tolist()
    for lo, hi, c in zip(e[:-1], e[1:], stats.counts.tolist()):
        lines.append(f"{lo!r},{hi!r},{c}")
    return "\n".join(lines) + "\n"
