import math

import numpy as np
import pytest
from scipy.sparse import diags

from enesim.constants import E_ANGSTROM, E_CHARGE, HBAR, M_ELECTRON
from enesim.errors import GridTooCoarse, NoBoundState, NotEnoughBoundStates
from enesim.morphology import SurfaceProfile, synth_substrate
from enesim.trapstates import (
    GHZ_BAND,
    EffectivePotential,
    count_nodes,
    effective_potential,
    eigen_residual,
    morphology_contrast,
    node_counts,
    oscillation_count,
    solve_bound_states,
    trap_scan,
    transition_report,
    trk_partial_sum,
)

OMEGA = 2 * math.pi * 5e9
X0 = math.sqrt(HBAR / (M_ELECTRON * OMEGA))  # ~60 nm


def harmonic(omega=OMEGA, half_width=10 * X0, dx=0.5e-9, center=0.0):
    x = np.arange(-half_width, half_width + dx / 2, dx)
    return EffectivePotential(x, 0.5 * M_ELECTRON * omega**2 * (x - center) ** 2, 1.0)


def box(L=200e-9, n=2001):
    x = np.linspace(0.0, L, n)
    return EffectivePotential(x, np.zeros(n), 1.0)


@pytest.fixture(scope="module")
def ho():
    return solve_bound_states(harmonic(), n_states=8)


def test_flat_profile_zero_potential():
    x = np.arange(200) * 1e-9
    pot = effective_potential(SurfaceProfile(x, np.full(200, 4e-9)), 1e5)
    assert np.all(pot.V == 0)
    assert pot.escape_threshold() == 0
    with pytest.raises(NoBoundState):
        solve_bound_states(pot, check_refinement=False)


def test_effective_potential_bad_field():
    x = np.arange(100) * 1e-9
    with pytest.raises(ValueError):
        effective_potential(SurfaceProfile(x, x), 0.0)


def test_well_depth_oracle(oracles):
    x = np.arange(1001) * 1e-9
    h = -25e-9 * np.exp(-0.5 * ((x - 500e-9) / 60e-9) ** 2)
    pot = effective_potential(SurfaceProfile(x, h), 1e5)
    depth = pot.V.max() - pot.V.min()
    assert depth == pytest.approx(oracles["well_depth_1e5Vm_25nm_J"], rel=1e-3)
    assert depth / E_CHARGE * 1e3 == pytest.approx(oracles["well_depth_1e5Vm_25nm_meV"], rel=1e-3)


def test_parabolic_valley_is_harmonic():
    # h = x^2 / (2R) under field F gives omega = sqrt(e F / (m R))
    R, F = 2e-6, 1e4
    x = np.arange(-600e-9, 600e-9 + 1e-10, 0.5e-9)
    pot = effective_potential(SurfaceProfile(x, x**2 / (2 * R)), F)
    spec = solve_bound_states(pot, n_states=3)
    w = math.sqrt(E_CHARGE * F / (M_ELECTRON * R))
    assert (spec.energies[1] - spec.energies[0]) == pytest.approx(HBAR * w, rel=1e-3)


def test_harmonic_spacing(ho):
    de = np.diff(ho.energies[:6])
    assert np.allclose(de, HBAR * OMEGA, rtol=1e-4)
    assert ho.energies[0] == pytest.approx(0.5 * HBAR * OMEGA, rel=1e-4)


def test_harmonic_dipole(ho, oracles):
    r = transition_report(ho)
    assert r.mu01 == pytest.approx(oracles["ho_5GHz_mu01_Cm"], rel=1e-4)
    assert r.f01 == pytest.approx(5e9, rel=1e-4)
    assert r.in_GHz_band
    assert r.strong_index == 1
    assert r.mu01_eA == pytest.approx(r.mu01 / E_ANGSTROM)


def test_orthonormal(ho):
    n = ho.energies.size
    gram = np.array([[ho.inner(i, j) for j in range(n)] for i in range(n)])
    assert np.allclose(gram, np.eye(n), atol=1e-8)


def test_node_counts(ho):
    assert [count_nodes(p) for p in ho.wavefunctions] == list(range(ho.energies.size))


def test_node_counts_via_oscillation(ho):
    assert node_counts(ho) == list(range(ho.energies.size))
    assert oscillation_count(ho.potential, 0.0) == 0
    assert oscillation_count(ho.potential, 3 * HBAR * OMEGA) == 3


@pytest.mark.parametrize("kind", ["SiEtched", "SapphireSmooth"])
def test_node_counts_on_rough_profiles(kind):
    from enesim.morphology import grow_film

    prof = grow_film(synth_substrate(kind, seed=5), seed=6)
    for F in (1e4, 1e5, 1e6):
        spec = solve_bound_states(effective_potential(prof, F), 20, check_refinement=False, require_bound=False)
        assert node_counts(spec) == list(range(20))


def test_eigen_residual(ho):
    assert np.all(eigen_residual(ho) < 1e-8)


def test_wavefunction_sign_and_walls(ho):
    psi = ho.wavefunctions
    assert np.all(psi[:, 0] == 0) and np.all(psi[:, -1] == 0)
    assert np.all(psi.max(axis=1) >= -psi.min(axis=1))


def test_trk_sum(ho):
    s = trk_partial_sum(ho)
    assert s <= 1 + 1e-6
    assert s == pytest.approx(1.0, abs=1e-3)


def test_trk_bounded_on_rough_profile():
    spec = solve_bound_states(effective_potential(synth_substrate("SiEtched", seed=2), 1e5),
                              check_refinement=False)
    assert trk_partial_sum(spec) <= 1 + 1e-6


def test_infinite_well_levels():
    L = 200e-9
    exact = (np.arange(1, 6) * math.pi * HBAR / L) ** 2 / (2 * M_ELECTRON)
    coarse = solve_bound_states(box(L, 1001), 5, check_refinement=False, require_bound=False).energies
    fine = solve_bound_states(box(L, 2001), 5, check_refinement=False, require_bound=False).energies
    assert np.allclose(fine / fine[0], np.arange(1, 6) ** 2, rtol=1e-4)
    # second-order scheme: Richardson extrapolation removes the leading error
    rich = (4 * fine - coarse) / 3
    assert np.max(np.abs(rich / exact - 1)) < 0.1 * np.max(np.abs(fine / exact - 1))
    assert np.max(np.abs(rich / exact - 1)) < 1e-8


def discrete_h(pot, mass=M_ELECTRON):
    t = HBAR**2 / (2 * mass * pot.dx**2)
    inner = pot.V[1:-1]
    return diags([inner + 2 * t, np.full(inner.size - 1, -t), np.full(inner.size - 1, -t)], [0, 1, -1])


@pytest.mark.parametrize("sigma", [5e-9, 20e-9, 60e-9, 150e-9])
def test_variational_bound(sigma):
    pot = effective_potential(synth_substrate("SiEtched", seed=4), 3e4)
    spec = solve_bound_states(pot, 1, check_refinement=False)
    H = discrete_h(pot)
    xc = pot.x[1:-1]
    g = np.exp(-0.5 * ((xc - xc[np.argmin(pot.V[1:-1])]) / sigma) ** 2)
    assert g @ (H @ g) / (g @ g) >= spec.energies[0] * (1 - 1e-12)


def test_sqrt_field_scaling():
    R = 2e-6
    x = np.arange(-800e-9, 800e-9 + 1e-10, 0.5e-9)
    prof = SurfaceProfile(x, x**2 / (2 * R))
    f = [transition_report(solve_bound_states(effective_potential(prof, F), 3)).f01 for F in (1e4, 1e5)]
    assert f[1] / f[0] == pytest.approx(math.sqrt(10), rel=0.02)


def test_double_well_splitting_below_single():
    a = 3 * X0
    x = np.arange(-12 * X0, 12 * X0, 0.5e-9)
    V = 0.5 * M_ELECTRON * OMEGA**2 * np.minimum((x - a) ** 2, (x + a) ** 2)
    spec = solve_bound_states(EffectivePotential(x, V, 1.0), 4)
    r = transition_report(spec)
    assert 0 < r.f01 < 5e9
    # the symmetric pair is coupled by the dipole operator
    assert r.mu01 > E_CHARGE * a * 0.5


def test_grid_too_coarse():
    omega = HBAR / (M_ELECTRON * (5e-9) ** 2)
    with pytest.raises(GridTooCoarse):
        solve_bound_states(harmonic(omega, half_width=200e-9, dx=5e-9), 2)


def test_not_enough_bound_states():
    x = np.arange(0, 400e-9 + 1e-12, 0.5e-9)
    V = np.where(np.abs(x - 200e-9) < 10e-9, 0.0, 1e-4 * E_CHARGE)
    spec = solve_bound_states(EffectivePotential(x, V, 1.0), 5)
    assert spec.n_bound == 1
    with pytest.raises(NotEnoughBoundStates):
        transition_report(spec)


def test_solver_argument_checks():
    with pytest.raises(ValueError):
        solve_bound_states(box(), 0)
    with pytest.raises(ValueError):
        solve_bound_states(EffectivePotential(np.array([0.0, 1e-9]), np.zeros(2), 1.0))


def test_sparse_path_matches_dense():
    # above the dense limit the sparse eigensolver is used
    big = harmonic(half_width=3e-6, dx=0.25e-9)
    assert big.x.size > 10_000
    spec = solve_bound_states(big, 4, check_refinement=False)
    assert np.allclose(np.diff(spec.energies), HBAR * OMEGA, rtol=1e-4)


@pytest.fixture(scope="module")
def si_scan():
    fields = np.geomspace(1e4, 1e6, 7)
    return [trap_scan(synth_substrate("SiEtched", seed=s), fields) for s in range(3)]


def test_si_etched_traps_in_band(si_scan):
    for run in si_scan:
        assert any(pt.trapped_ghz for pt in run)


def test_si_etched_dipole_scale(si_scan):
    # largest ground-state dipole at in-band fields is within a decade of 30 eA
    for run in si_scan:
        d = [pt.mu_strong / E_ANGSTROM for pt in run if pt.n_bound >= 2
             and GHZ_BAND[0] <= pt.f_strong <= GHZ_BAND[1] * 3]
        assert d and all(3 <= v <= 300 for v in d)


def test_trap_scan_records(si_scan):
    for run in si_scan:
        for pt in run:
            if pt.n_bound >= 2:
                assert pt.f01 > 0 and pt.mu01 >= 0
            else:
                assert math.isnan(pt.f01) and not pt.trapped_ghz


def test_identical_ensembles_have_no_contrast():
    p = [synth_substrate("SiEtched", seed=s) for s in range(2)]
    s = morphology_contrast({"a": p, "b": list(p)}, np.geomspace(1e4, 1e6, 4))
    assert not s.contrast
    assert s.exclusive_seed_fraction == 0.0
    assert np.array_equal(s.fraction("a"), s.fraction("b"))


def test_empty_ensembles():
    s = morphology_contrast({"a": [], "b": []}, [1e5])
    assert s.no_samples and not s.contrast
    assert not s.exclusive_fields.any()


def test_contrast_detects_exclusive_traps():
    # a deep smooth valley traps in band; a nearly flat box only far above 10 GHz or not at all
    x = np.arange(0, 2e-6 + 1e-12, 1e-9)
    valley = SurfaceProfile(x, (x - 1e-6) ** 2 / (2 * 2e-6))
    flat = SurfaceProfile(x, 1e-12 * np.sin(2 * np.pi * x / 200e-9))
    s = morphology_contrast({"v": [valley], "f": [flat]}, [1e4, 3e4])
    assert s.trapped["v"].all()
    assert not s.trapped["f"].any()
    assert s.contrast and s.exclusive_seed_fraction == 1.0


def test_parallel_contrast_identical():
    p = {"a": [synth_substrate("SiEtched", seed=1)], "b": [synth_substrate("SapphireSmooth", seed=1)]}
    fields = np.geomspace(1e4, 1e6, 3)
    s1 = morphology_contrast(p, fields)
    s2 = morphology_contrast(p, fields, jobs=2)
    for k in p:
        assert np.array_equal(s1.trapped[k], s2.trapped[k])
