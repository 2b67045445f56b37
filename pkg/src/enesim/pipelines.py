"""End-to-end runs: the trench-depth coupling sweep and the substrate contrast.

Every output is CSV with units in the header. Floats are written with
``repr`` so identical inputs give byte-identical files.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .constants import E_ANGSTROM
from .errors import NumericalError
from .fieldsolver import Region
from .geometry import Mode
from .morphology import SubstrateKind, format_histogram, format_profile, grow_film, roughness_stats, synth_substrate
from .resonator import ModeSolution, depth_sweep, sweep_argmax
from .trapstates import ContrastSummary, morphology_contrast

log = logging.getLogger(__name__)


def _f(v) -> str:
    return repr(float(v))


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


SWEEP_HEADER = "t_m,mode,region,Etilde_per_m,C_F_per_m,C0_F_per_m,Zr_ohm,g_over_omega,g_over_omega_norm"


def format_sweep(rows: list[ModeSolution]) -> str:
    lines = [SWEEP_HEADER]
    for s in rows:
        lines.append(",".join([_f(s.t), s.mode.value, s.region.value, _f(s.Etilde), _f(s.C), _f(s.C0),
                               _f(s.Z_r), _f(s.g_over_omega), _f(s.g_over_omega_normalized)]))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Fig3Result:
    rows: list
    argmax: ModeSolution
    expected_argmax: bool
    files: tuple


def run_fig3_pipeline(cfg: RunConfig) -> Fig3Result:
    try:
        rows = depth_sweep(cfg.geometry, cfg.depths, cfg.modes, tol=cfg.tol, jobs=cfg.jobs)
    except NumericalError as exc:
        raise type(exc)(f"depth sweep: {exc}") from exc
    best = sweep_argmax(rows)
    t_min = min(cfg.depths)
    ok = best.mode is Mode.DM and best.region is Region.MiddleTrench and best.t == t_min
    out = Path(cfg.out_dir)
    summary = "\n".join([
        "key,value",
        f"argmax_t_m,{_f(best.t)}",
        f"argmax_mode,{best.mode.value}",
        f"argmax_region,{best.region.value}",
        f"argmax_is_DM_middle_min_t,{ok}",
        f"points,{len(rows)}",
    ]) + "\n"
    files = (_write(out / "fig3_sweep.csv", format_sweep(rows)), _write(out / "fig3_summary.csv", summary))
    return Fig3Result(rows, best, ok, files)


# --------------------------------------------------------------------------


def ensemble_seeds(master: int, n: int) -> dict:
    """Independent integer seeds for (substrate, film) per ensemble member."""
    children = np.random.SeedSequence(master).spawn(2)
    out = {}
    for kind, ss in zip(SubstrateKind, children):
        states = [c.generate_state(2) for c in ss.spawn(n)]
        out[kind] = [(int(s[0]), int(s[1])) for s in states]
    return out


def build_ensembles(cfg: RunConfig):
    seeds = ensemble_seeds(cfg.seed, cfg.seeds)
    subs, combined = {}, {}
    for kind in SubstrateKind:
        subs[kind] = [synth_substrate(kind, seed=s) for s, _ in seeds[kind]]
        combined[kind] = [grow_film(p, cfg.film, seed=f) for p, (_, f) in zip(subs[kind], seeds[kind])]
    return seeds, subs, combined


def format_trap_scan(summary: ContrastSummary, seeds: dict) -> str:
    lines = ["ensemble,member,substrate_seed,F_V_per_m,n_bound,f01_Hz,mu01_C_m,mu01_eA,trapped_ghz"]
    for name, runs in summary.scans.items():
        for i, run in enumerate(runs):
            for pt in run:
                lines.append(",".join([name, str(i), str(seeds[SubstrateKind(name)][i][0]), _f(pt.F_perp),
                                       str(pt.n_bound), _f(pt.f01), _f(pt.mu01), _f(pt.mu01 / E_ANGSTROM),
                                       str(pt.trapped_ghz)]))
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Fig4Result:
    summary: ContrastSummary
    si_fraction: float
    sapphire_fraction: float
    files: tuple


def run_fig4_pipeline(cfg: RunConfig, write_profiles: bool = True) -> Fig4Result:
    out = Path(cfg.out_dir)
    si, sa = SubstrateKind.SiEtched.value, SubstrateKind.SapphireSmooth.value
    seeds, subs, combined = build_ensembles(cfg)
    profiles = {si: combined[SubstrateKind.SiEtched], sa: combined[SubstrateKind.SapphireSmooth]}
    summary = morphology_contrast(profiles, cfg.fields, cfg.n_states, reference=si, other=sa, jobs=cfg.jobs)
    files = []
    if summary.no_samples:
        si_frac = sa_frac = 0.0
    else:
        si_frac = float(summary.trapped[si].any(axis=1).mean())
        sa_frac = float(summary.trapped[sa].any(axis=1).mean())
    lines = [
        "key,value",
        f"no_samples,{summary.no_samples}",
        f"members_per_ensemble,{cfg.seeds}",
        f"master_seed,{cfg.seed}",
        f"fields,{cfg.field_steps}",
        f"F_min_V_per_m,{_f(cfg.field_min)}",
        f"F_max_V_per_m,{_f(cfg.field_max)}",
        f"{si}_fraction_any_field,{_f(si_frac)}",
        f"{sa}_fraction_any_field,{_f(sa_frac)}",
        f"{si}_fraction_at_{sa}_free_fields,{_f(summary.exclusive_seed_fraction)}",
        f"{sa}_free_fields,{int(summary.exclusive_fields.sum())}",
        f"contrast,{summary.contrast}",
    ]
    files.append(_write(out / "fig4_summary.csv", "\n".join(lines) + "\n"))
    if summary.no_samples:
        return Fig4Result(summary, si_frac, sa_frac, tuple(files))

    files.append(_write(out / "fig4_trap_scan.csv", format_trap_scan(summary, seeds)))
    frac = ["F_V_per_m,fraction_" + si + ",fraction_" + sa]
    for F, a, b in zip(cfg.fields, summary.fraction(si), summary.fraction(sa)):
        frac.append(f"{_f(F)},{_f(a)},{_f(b)}")
    files.append(_write(out / "fig4_fractions.csv", "\n".join(frac) + "\n"))
    rough = ["ensemble,member,substrate_seed,film_seed,Rq_substrate_m,Rq_combined_m"]
    for kind in SubstrateKind:
        for i, (p, c) in enumerate(zip(subs[kind], combined[kind])):
            s, f = seeds[kind][i]
            rough.append(f"{kind.value},{i},{s},{f},{_f(roughness_stats(p).Rq)},{_f(roughness_stats(c).Rq)}")
    files.append(_write(out / "fig4_roughness.csv", "\n".join(rough) + "\n"))
    for kind in SubstrateKind:
        files.append(_write(out / f"fig4_hist_{kind.value}_substrate.csv",
                            format_histogram(roughness_stats(subs[kind][0]))))
        files.append(_write(out / f"fig4_hist_{kind.value}_combined.csv",
                            format_histogram(roughness_stats(combined[kind][0]))))
        if write_profiles:
            files.append(_write(out / f"fig4_profile_{kind.value}_substrate.csv", format_profile(subs[kind][0])))
            files.append(_write(out / f"fig4_profile_{kind.value}_combined.csv", format_profile(combined[kind][0])))
    return Fig4Result(summary, si_frac, sa_frac, tuple(files))
