"""Command-line entry point.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
Relative output paths are resolved against ``--out-dir``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config, load_geometry, parse_list, parse_quantity
from .constants import E_ANGSTROM, H_PLANCK, TWO_PI
from .errors import ConfigError, EneError, NumericalError
from .fieldsolver import Region, sample_surface_line, solve_laplace, trench_average_Ex
from .fixtures import get_device, list_fixtures
from .geometry import Mode, ModeDrive, rasterize
from .morphology import (
    FilmGrowthParams,
    SubstrateKind,
    format_histogram,
    format_profile,
    grow_film,
    histogram_modes,
    load_profile,
    roughness_stats,
    synth_substrate,
)
from .pipelines import format_sweep, run_fig3_pipeline, run_fig4_pipeline
from .resonator import capacitance_per_length, characteristic_impedance, depth_sweep
from .spectroscopy import (
    DIP_NOTE,
    LinearTuning,
    ResonatorParams,
    dips_from_traces,
    fit_crossing,
    format_traces,
    lorentzian_fit,
    load_traces,
    shift_histogram,
    simulate_crossing,
)
from .trapstates import effective_potential, solve_bound_states

log = logging.getLogger("enesim")


def _f(v) -> str:
    return repr(float(v))


class Context:
    def __init__(self, args):
        self.args = args
        self.cfg: RunConfig = load_config(
            args.config,
            seed=args.seed,
            jobs=args.jobs,
            out_dir=Path(args.out_dir) if args.out_dir is not None else None,
        )

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else Path(self.cfg.out_dir) / p

    def write(self, p, text: str) -> Path:
        path = self.path(p)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        return path

    @property
    def seed(self) -> int:
        return self.cfg.seed


def _q(key):
    def conv(text):
        try:
            return parse_quantity(text, key)
        except ConfigError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    conv.__name__ = key
    return conv


def _geometry(ctx: Context, path):
    return load_geometry(path) if path else ctx.cfg.geometry


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# subcommands


def cmd_solve_field(ctx: Context, a) -> int:
    geom = _geometry(ctx, a.geometry)
    drive = ModeDrive.for_mode(a.mode)
    grid = rasterize(geom)
    field = solve_laplace(grid, drive, tol=a.tol)
    field0 = solve_laplace(grid.vacuum(), drive, tol=a.tol)
    C, C0 = capacitance_per_length(field), capacitance_per_length(field0)
    Z = characteristic_impedance(C, C0)
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    lines = ["x_m,y_m,phi_V"]
    lines += [f"{x!r},{y!r},{p!r}" for x, y, p in zip(X.ravel().tolist(), Y.ravel().tolist(), field.phi.ravel().tolist())]
    ctx.write(a.out, "\n".join(lines) + "\n")
    sample = sample_surface_line(field, geom)
    if a.line_out:
        ll = ["x_m,Ex_abs_V_per_m,region"]
        ll += [f"{x!r},{e!r},{r}" for x, e, r in zip(sample.x.tolist(), sample.Ex_abs.tolist(), sample.region_tags.tolist())]
        ctx.write(a.line_out, "\n".join(ll) + "\n")
    print(f"mode={Mode(a.mode).value} C_F_per_m={_f(C)} C0_F_per_m={_f(C0)} Zr_ohm={_f(Z)} iterations={field.iterations}")
    for region in (Region.MiddleTrench, Region.SideTrench):
        if region is Region.MiddleTrench and geom.trace_gap_middle <= 0:
            continue
        print(f"Etilde_{region.value}_per_m={_f(trench_average_Ex(sample, region))}")
    return 0


def cmd_sweep_depth(ctx: Context, a) -> int:
    geom = _geometry(ctx, a.geometry)
    if a.depths:
        depths = sorted(parse_list(a.depths, "depths"))
    else:
        depths = np.linspace(a.t_min, a.t_max, a.steps).tolist()
    modes = [Mode(m.strip()) for m in a.modes.split(",") if m.strip()]
    rows = depth_sweep(geom, depths, modes, tol=a.tol, jobs=ctx.cfg.jobs)
    ctx.write(a.out, format_sweep(rows))
    return 0


def cmd_synth_surface(ctx: Context, a) -> int:
    from .morphology import SapphireParams, SiEtchedParams

    kind = SubstrateKind(a.kind)
    base = SiEtchedParams() if kind is SubstrateKind.SiEtched else SapphireParams()
    kw = {k: v for k, v in (("length", a.length), ("dx", a.dx)) if v is not None}
    params = replace(base, **kw)
    prof = synth_substrate(kind, params, seed=ctx.seed)
    ctx.write(a.out, format_profile(prof))
    print(f"Rq_m={_f(roughness_stats(prof).Rq)} samples={prof.x.size}")
    return 0


def cmd_grow_film(ctx: Context, a) -> int:
    sub = load_profile(a.profile)
    p = FilmGrowthParams(**{k: v for k, v in (("mean_thickness", a.mean), ("std_thickness", a.std),
                                                ("correlation_length", a.corr)) if v is not None})
    prof = grow_film(sub, p, seed=ctx.seed)
    ctx.write(a.out, format_profile(prof))
    print(f"Rq_m={_f(roughness_stats(prof).Rq)}")
    return 0


def cmd_surface_stats(ctx: Context, a) -> int:
    prof = load_profile(a.profile, line=a.line)
    st = roughness_stats(prof, bins=a.bins)
    if a.out:
        ctx.write(a.out, format_histogram(st))
    print(f"Rq_m={_f(st.Rq)} mean_m={_f(st.mean_height)} modes={histogram_modes(st)} samples={prof.x.size}")
    return 0


def cmd_trap_spectrum(ctx: Context, a) -> int:
    prof = load_profile(a.profile)
    spec = solve_bound_states(effective_potential(prof, a.field), a.states)
    E0 = spec.energies[0]
    lines = ["n,E_J,f_from_ground_Hz,bound"]
    for n, E in enumerate(spec.energies):
        lines.append(f"{n},{_f(E)},{_f((E - E0) / H_PLANCK)},{n < spec.n_bound}")
    ctx.write(a.out, "\n".join(lines) + "\n")
    if a.wavefunctions:
        head = "x_m," + ",".join(f"psi{n}_per_sqrt_m" for n in range(spec.energies.size))
        rows = [head] + [",".join([_f(x)] + [_f(v) for v in col]) for x, col in zip(spec.x, spec.wavefunctions.T)]
        ctx.write(a.wavefunctions, "\n".join(rows) + "\n")
    msg = f"n_bound={spec.n_bound}"
    if spec.n_bound >= 2:
        from .trapstates import transition_report

        r = transition_report(spec)
        msg += f" f01_Hz={_f(r.f01)} mu01_eA={_f(r.mu01 / E_ANGSTROM)} in_GHz_band={r.in_GHz_band}"
    print(msg)
    return 0


def _resonator(a) -> ResonatorParams:
    if getattr(a, "device", None):
        return get_device(a.device).resonator(a.mode)
    if a.f0 is None or a.kappa is None:
        raise ConfigError("give --device or both --f0 and --kappa")
    return ResonatorParams(TWO_PI * a.f0, TWO_PI * a.kappa, Mode(a.mode))


def cmd_fit_resonance(ctx: Context, a) -> int:
    traces = load_traces(a.trace)
    out = []
    for t in traces:
        fit = lorentzian_fit(t, a.mode)
        out.append({
            "control_V": t.control,
            "omega0_rad_per_s": fit.params.omega0,
            "kappa_rad_per_s": fit.params.kappa,
            "f0_Hz": fit.f0,
            "kappa_over_2pi_Hz": fit.fwhm,
            "peak_dB": fit.depth_db,
            "residual_rms_dB": fit.residual,
        })
    text = _json(out[0] if len(out) == 1 else out)
    if a.out:
        ctx.write(a.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_fit_crossing(ctx: Context, a) -> int:
    traces = load_traces(a.traces)
    fit = fit_crossing(traces, kappa=None if a.kappa is None else TWO_PI * a.kappa)
    text = _json({
        "g_rad_per_s": fit.g,
        "g_over_2pi_Hz": fit.g / TWO_PI,
        "omega_r_rad_per_s": fit.omega_r,
        "qubit_slope_rad_per_s_per_V": fit.qubit_slope,
        "omega_q0_rad_per_s": fit.omega_q0,
        "kappa_rad_per_s": fit.kappa,
        "gamma_rad_per_s": fit.gamma,
        "crossing_control_V": fit.crossing_control,
        "residual_rms_dB": fit.residual,
    })
    if a.out:
        ctx.write(a.out, text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_dip_histogram(ctx: Context, a) -> int:
    params = _resonator(a)
    if a.dips:
        rows = np.loadtxt(a.dips, delimiter=",", skiprows=1, ndmin=2)
        scans = [(float(v), float(d)) for v, d in rows]
    else:
        scans = dips_from_traces(load_traces(a.traces), params.omega0 / TWO_PI)
    h = shift_histogram(scans, params, bins=a.bins)
    lines = ["bin_left_frac,bin_right_frac,count"]
    e = h.edges.tolist()
    lines += [f"{lo!r},{hi!r},{c}" for lo, hi, c in zip(e[:-1], e[1:], h.counts.tolist())]
    ctx.write(a.out, "\n".join(lines) + "\n")
    print(f"total={h.total} max_fractional_shift={_f(h.max_shift)}")
    print(f"note: {DIP_NOTE}")
    return 0


def cmd_simulate_crossing(ctx: Context, a) -> int:
    params = _resonator(a)
    slope = TWO_PI * a.slope
    tuning = LinearTuning(params.omega0 - slope * a.crossing, slope)
    controls = np.linspace(a.control_min, a.control_max, a.controls)
    f0 = params.omega0 / TWO_PI
    freqs = f0 + np.linspace(-a.span / 2, a.span / 2, a.points)
    traces = simulate_crossing(params, TWO_PI * a.g, tuning, controls, freqs,
                               gamma=None if a.gamma is None else TWO_PI * a.gamma,
                               noise_db=a.noise, seed=ctx.seed)
    ctx.write(a.out, format_traces(traces))
    return 0


def cmd_fig3(ctx: Context, a) -> int:
    res = run_fig3_pipeline(ctx.cfg)
    b = res.argmax
    print(f"argmax: mode={b.mode.value} region={b.region.value} t_m={_f(b.t)} expected={res.expected_argmax}")
    return 0


def cmd_fig4(ctx: Context, a) -> int:
    res = run_fig4_pipeline(ctx.cfg)
    s = res.summary
    if s.no_samples:
        print("no samples")
        return 0
    print(f"SiEtched_fraction={_f(res.si_fraction)} SapphireSmooth_fraction={_f(res.sapphire_fraction)} "
          f"contrast={s.contrast}")
    return 0


def cmd_fixtures(ctx: Context, a) -> int:
    sys.stdout.write(list_fixtures())
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="enesim", description="Electron-on-neon device modeling toolkit")
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--seed", type=int, help="master RNG seed")
    p.add_argument("--jobs", type=int, help="worker processes for sweeps")
    p.add_argument("--out-dir", help="directory for relative output paths")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve-field", help="solve one cross-section and write the potential map")
    s.add_argument("--geometry")
    s.add_argument("--mode", choices=["CM", "DM"], default="DM")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--out", default="field.csv")
    s.add_argument("--line-out", help="surface line sample CSV")
    s.set_defaults(func=cmd_solve_field)

    s = sub.add_parser("sweep-depth", help="trench-depth sweep of field, impedance and coupling")
    s.add_argument("--geometry")
    s.add_argument("--t-min", type=_q("t_min"), default=50e-9)
    s.add_argument("--t-max", type=_q("t_max"), default=1000e-9)
    s.add_argument("--steps", type=int, default=6)
    s.add_argument("--depths", help="explicit list, e.g. '50 100 200 nm'")
    s.add_argument("--modes", default="CM,DM")
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--out", default="sweep.csv")
    s.set_defaults(func=cmd_sweep_depth)

    s = sub.add_parser("synth-surface", help="synthetic substrate line scan")
    s.add_argument("--kind", choices=[k.value for k in SubstrateKind], default="SiEtched")
    s.add_argument("--length", type=_q("length"))
    s.add_argument("--dx", type=_q("dx"))
    s.add_argument("--out", default="substrate.csv")
    s.set_defaults(func=cmd_synth_surface)

    s = sub.add_parser("grow-film", help="coat a profile with a log-normal Ne film")
    s.add_argument("--profile", required=True)
    s.add_argument("--mean", type=_q("mean"))
    s.add_argument("--std", type=_q("std"))
    s.add_argument("--corr", type=_q("corr"))
    s.add_argument("--out", default="combined.csv")
    s.set_defaults(func=cmd_grow_film)

    s = sub.add_parser("surface-stats", help="roughness and height histogram")
    s.add_argument("--profile", required=True)
    s.add_argument("--bins", type=int, default=64)
    s.add_argument("--line", type=int, help="row of a 2D height map")
    s.add_argument("--out")
    s.set_defaults(func=cmd_surface_stats)

    s = sub.add_parser("trap-spectrum", help="bound states of a profile under a holding field")
    s.add_argument("--profile", required=True)
    s.add_argument("--field", type=_q("field"), required=True)
    s.add_argument("--states", type=int, default=20)
    s.add_argument("--out", default="spectrum.csv")
    s.add_argument("--wavefunctions")
    s.set_defaults(func=cmd_trap_spectrum)

    s = sub.add_parser("fit-resonance", help="Lorentzian fit of transmission traces")
    s.add_argument("--trace", required=True)
    s.add_argument("--mode", choices=["CM", "DM"], default="DM")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit_resonance)

    s = sub.add_parser("fit-crossing", help="avoided-crossing fit of a control sweep")
    s.add_argument("--traces", required=True)
    s.add_argument("--kappa", type=_q("kappa"), help="resonator linewidth kappa/2pi")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit_crossing)

    def resonator_args(s):
        s.add_argument("--device", help="tabulated device name, e.g. 'Shallow Si'")
        s.add_argument("--mode", choices=["CM", "DM"], default="DM")
        s.add_argument("--f0", type=_q("f0"), help="resonance frequency omega0/2pi")
        s.add_argument("--kappa", type=_q("kappa"), help="linewidth kappa/2pi")

    s = sub.add_parser("dip-histogram", help="fractional-shift histogram from transmission dips")
    resonator_args(s)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--dips", help="CSV bias_v,dip_db")
    g.add_argument("--traces", help="trace CSV with bias_v column")
    s.add_argument("--bins", type=int, default=50)
    s.add_argument("--out", default="shift_histogram.csv")
    s.set_defaults(func=cmd_dip_histogram)

    s = sub.add_parser("simulate-crossing", help="synthetic avoided-crossing traces")
    resonator_args(s)
    s.add_argument("--g", type=_q("g"), default=2.02e6, help="coupling g/2pi")
    s.add_argument("--gamma", type=_q("gamma"), help="qubit linewidth gamma/2pi")
    s.add_argument("--slope", type=_q("slope"), default=8e6, help="qubit tuning (Hz per volt)")
    s.add_argument("--crossing", type=float, default=0.0, help="control value at resonance (V)")
    s.add_argument("--control-min", type=float, default=-1.0)
    s.add_argument("--control-max", type=float, default=1.0)
    s.add_argument("--controls", type=int, default=21)
    s.add_argument("--span", type=_q("span"), default=24e6)
    s.add_argument("--points", type=int, default=801)
    s.add_argument("--noise", type=float, default=0.0, help="Gaussian noise (dB)")
    s.add_argument("--out", default="crossing.csv")
    s.set_defaults(func=cmd_simulate_crossing)

    s = sub.add_parser("fig3", help="trench-depth coupling sweep with argmax summary")
    s.set_defaults(func=cmd_fig3)
    s = sub.add_parser("fig4", help="Si vs sapphire morphology and trapping contrast")
    s.set_defaults(func=cmd_fig4)
    s = sub.add_parser("fixtures", help="print the tabulated device parameters")
    s.set_defaults(func=cmd_fixtures)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        ctx = Context(args)
        if args.command in {"simulate-crossing", "dip-histogram"} and not args.device and args.f0 is None:
            args.device = "Shallow Si"
        return args.func(ctx, args)
    except (ConfigError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except (EneError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
