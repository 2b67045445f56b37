import io
import math

import numpy as np
import pytest

from enesim.errors import DomainTooShort, ParseError, TooFewSamples
from enesim.morphology import (
    FilmGrowthParams,
    ProfileKind,
    SapphireParams,
    SiEtchedParams,
    SubstrateKind,
    SurfaceProfile,
    film_thickness,
    format_profile,
    gaussian_correlated,
    grow_film,
    histogram_modes,
    load_profile,
    roughness_stats,
    save_profile,
    synth_substrate,
)


def sine_profile(n=4001, dx=1e-9, amp=5e-9, period=200e-9, offset=0.0):
    x = np.arange(n) * dx
    return SurfaceProfile(x, offset + amp * np.sin(2 * np.pi * x / period))


@pytest.mark.parametrize("seed", range(5))
def test_si_etched_rq_calibrated(seed):
    rq = roughness_stats(synth_substrate("SiEtched", seed=seed)).Rq
    assert rq == pytest.approx(9.5e-9, rel=0.2)


@pytest.mark.parametrize("seed", range(5))
def test_sapphire_rq_calibrated(seed):
    rq = roughness_stats(synth_substrate("SapphireSmooth", seed=seed)).Rq
    assert rq == pytest.approx(0.4e-9, rel=0.1)


def test_si_etched_histogram_multimodal():
    stats = roughness_stats(synth_substrate(SubstrateKind.SiEtched, seed=3))
    assert histogram_modes(stats) >= 2


def test_synth_deterministic_and_seed_sensitive():
    a = synth_substrate("SiEtched", seed=11)
    b = synth_substrate("SiEtched", seed=11)
    c = synth_substrate("SiEtched", seed=12)
    assert np.array_equal(a.h, b.h)
    assert not np.array_equal(a.h, c.h)
    assert a.seed == 11 and a.kind is ProfileKind.Substrate


def test_domain_too_short():
    with pytest.raises(DomainTooShort):
        synth_substrate("SiEtched", SiEtchedParams(length=1e-6))
    with pytest.raises(DomainTooShort):
        synth_substrate("SapphireSmooth", SapphireParams(length=100e-9))


def test_sine_rq():
    # whole number of periods
    assert roughness_stats(sine_profile()).Rq == pytest.approx(5e-9 / math.sqrt(2), rel=1e-3)


def test_flat_profile():
    x = np.arange(100) * 1e-9
    stats = roughness_stats(SurfaceProfile(x, np.full(100, 3e-9)))
    assert stats.Rq == pytest.approx(0.0, abs=1e-20)
    assert stats.mean_height == pytest.approx(3e-9)
    assert stats.counts.sum() == 100
    assert histogram_modes(stats) == 1


def test_translation_invariance():
    p = synth_substrate("SapphireSmooth", seed=8)
    a = roughness_stats(p)
    b = roughness_stats(SurfaceProfile(p.x, p.h + 1e-6))
    assert b.Rq == pytest.approx(a.Rq, rel=1e-6)
    assert np.array_equal(a.counts, b.counts)


def test_lognormal_parameters(oracles):
    mu, sigma = FilmGrowthParams().lognormal
    assert mu == pytest.approx(oracles["lognormal_mu_ln"], rel=1e-12)
    assert sigma == pytest.approx(oracles["lognormal_sigma_ln"], rel=1e-12)


def test_film_moments():
    p = FilmGrowthParams()
    rng = np.random.default_rng(5)
    # correlated samples: pool many independent lines
    tau = np.concatenate([film_thickness(4001, 1e-9, p, rng) for _ in range(60)])
    assert tau.size >= 1e5
    assert np.all(tau > 0)
    assert tau.mean() == pytest.approx(10e-9, rel=0.02)
    assert tau.std() == pytest.approx(math.sqrt(10) * 1e-9, rel=0.05)


def test_gaussian_field_unit_variance():
    rng = np.random.default_rng(0)
    z = np.concatenate([gaussian_correlated(4096, 1e-9, 20e-9, rng) for _ in range(40)])
    assert z.mean() == pytest.approx(0.0, abs=0.03)
    assert z.var() == pytest.approx(1.0, rel=0.05)


def test_gaussian_field_correlation_shape():
    rng = np.random.default_rng(1)
    n, dx, l = 8192, 1e-9, 20e-9
    acc = np.zeros(n)
    for _ in range(40):
        z = gaussian_correlated(n, dx, l, rng)
        f = np.fft.rfft(z)
        acc += np.fft.irfft(f * f.conj(), n) / n
    acc /= 40
    lag = int(l / dx)
    assert acc[lag] / acc[0] == pytest.approx(math.exp(-1), abs=0.05)


def test_zero_std_film_is_uniform():
    sub = synth_substrate("SapphireSmooth", seed=2)
    out = grow_film(sub, FilmGrowthParams(std_thickness=0.0), seed=9)
    assert np.allclose(out.h - sub.h, 10e-9, rtol=0, atol=1e-24)
    assert roughness_stats(out).Rq == pytest.approx(roughness_stats(sub).Rq, rel=1e-9)


def test_film_thickness_positive_and_kind():
    sub = synth_substrate("SiEtched", seed=1)
    out = grow_film(sub, seed=4)
    assert np.all(out.h > sub.h)
    assert out.kind is ProfileKind.Combined
    assert np.array_equal(out.x, sub.x)


@pytest.mark.parametrize("seed", range(3))
def test_film_does_not_smooth_si(seed):
    sub = synth_substrate("SiEtched", seed=seed)
    comb = grow_film(sub, seed=100 + seed)
    assert roughness_stats(comb).Rq >= 0.8 * roughness_stats(sub).Rq


def test_film_params_validation():
    with pytest.raises(ValueError):
        FilmGrowthParams(mean_thickness=0.0)
    with pytest.raises(ValueError):
        FilmGrowthParams(std_thickness=-1e-9)


def test_profile_validation():
    x = np.arange(100) * 1e-9
    with pytest.raises(TooFewSamples):
        SurfaceProfile(x[:10], x[:10])
    with pytest.raises(ValueError):
        SurfaceProfile(x[::-1], x)
    x2 = x.copy()
    x2[50] += 0.3e-9
    with pytest.raises(ValueError):
        SurfaceProfile(x2, x)


def test_profile_roundtrip(tmp_path):
    p = synth_substrate("SiEtched", seed=6)
    path = tmp_path / "p.csv"
    save_profile(p, path)
    q = load_profile(path)
    assert np.array_equal(p.x, q.x) and np.array_equal(p.h, q.h)


def test_load_units_header():
    text = "x_nm,h_a\n" + "\n".join(f"{i},{i % 7}" for i in range(100))
    p = load_profile(io.StringIO(text))
    assert p.dx == pytest.approx(1e-9)
    assert p.h[3] == pytest.approx(3e-10)


def test_load_single_column_nm():
    text = "\n".join(str(0.5 * (i % 3)) for i in range(80))
    p = load_profile(io.StringIO(text), dx=2e-9)
    assert p.dx == pytest.approx(2e-9)
    assert p.h[1] == pytest.approx(0.5e-9)


def test_load_height_map_row():
    rows = [",".join(str(r * 10 + (c % 2)) for c in range(70)) for r in range(5)]
    text = "\n".join(rows)
    mid = load_profile(io.StringIO(text))
    assert mid.h[0] == pytest.approx(20e-9)
    first = load_profile(io.StringIO(text), line=0)
    assert first.h[1] == pytest.approx(1e-9)


def test_load_drops_nan_rows_at_ends():
    body = ["nan,nan"] + [f"{i},{i % 5}" for i in range(1, 101)] + ["101,nan"]
    p = load_profile(io.StringIO("x_nm,h_nm\n" + "\n".join(body)))
    assert len(p) == 100 and np.isfinite(p.h).all()


def test_load_interior_nan_breaks_uniformity():
    body = [f"{i},{'nan' if i == 50 else 1}" for i in range(100)]
    with pytest.raises(ParseError):
        load_profile(io.StringIO("x_nm,h_nm\n" + "\n".join(body)))


def test_load_errors(tmp_path):
    with pytest.raises(TooFewSamples):
        load_profile(io.StringIO("x_nm,h_nm\n" + "\n".join(f"{i},0" for i in range(10))))
    with pytest.raises(ParseError):
        load_profile(io.StringIO("x_nm,h_furlong\n1,2\n"))
    with pytest.raises(ParseError):
        load_profile(io.StringIO("1\nabc\n"))
    with pytest.raises(ParseError):
        load_profile(io.StringIO(""))
    with pytest.raises(FileNotFoundError):
        load_profile(tmp_path / "missing.csv")


def test_format_profile_header():
    assert format_profile(sine_profile(n=100)).splitlines()[0] == "x_m,h_m"


@pytest.mark.parametrize("seed", range(3))
def test_film_on_smooth_substrate_subadditive(seed):
    sub = synth_substrate("SapphireSmooth", seed=seed)
    comb = grow_film(sub, seed=50 + seed)
    film = SurfaceProfile(sub.x, comb.h - sub.h)
    rq_c, rq_s, rq_f = (roughness_stats(p).Rq for p in (comb, sub, film))
    assert rq_c <= rq_f + rq_s + 1e-15
    # independent layers: variances roughly add
    assert rq_c**2 == pytest.approx(rq_f**2 + rq_s**2, rel=0.25)
