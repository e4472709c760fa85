"""Command-line orchestration.

Subcommands: synth (write synthetic data), spectrum (model output PSD),
fit (ensemble exponent estimation on spectrum files), nonmarkov (bath
coefficient asymptotics and the non-Markovianity measure), pipeline
(synth -> fit -> nonmarkov in one run).

Every run echoes its fully resolved configuration as sorted-key YAML into
the output directory, and all randomness derives from the single seed, so
any run is reproducible byte-for-byte from the echo.  --threads changes
scheduling only, never results.

Exit codes: 0 success, 2 configuration error, 3 I/O or data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import estimate, formats, optomech, qbm, synth
from .errors import (
    ConfigError,
    DataError,
    DomainError,
    NumericalError,
    UnphysicalParameterError,
)

__all__ = ["main", "build_parser"]


# ---------------------------------------------------------------------------
# argument plumbing


def _add_common(sub):
    sub.add_argument("--config", metavar="FILE", help="YAML run configuration")
    sub.add_argument("--preset", metavar="NAME", help="named preset (paper, paper-synth)")
    sub.add_argument(
        "--set",
        dest="overrides",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="override a dotted config key, e.g. --set fit.objective=log",
    )
    sub.add_argument("--seed", type=int, help="override the master seed")
    sub.add_argument("--threads", type=int, help="worker threads (results unaffected)")
    sub.add_argument("--out", metavar="DIR", help="override the output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bathspec",
        description="open-system identification for a thermally driven oscillator",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_synth = subs.add_parser("synth", help="write synthetic spectra or time series")
    _add_common(p_synth)
    p_synth.add_argument("--truth-k", type=float, help="override the bath exponent")
    p_synth.set_defaults(func=cmd_synth)

    p_spec = subs.add_parser("spectrum", help="evaluate the model output spectrum")
    _add_common(p_spec)
    p_spec.add_argument("--mode", choices=("full", "reduced"), default="full")
    p_spec.add_argument("--fmin", type=float, default=600e3, help="grid start (Hz)")
    p_spec.add_argument("--fmax", type=float, default=1.3e6, help="grid end (Hz)")
    p_spec.add_argument("--points", type=int, default=2001)
    p_spec.add_argument("--output", metavar="FILE", help="CSV path (default out/spectrum.csv)")
    p_spec.set_defaults(func=cmd_spectrum)

    p_fit = subs.add_parser("fit", help="fit the spectral exponent on spectrum files")
    _add_common(p_fit)
    p_fit.add_argument("files", nargs="+", metavar="SPECTRUM_CSV")
    p_fit.add_argument("--window", metavar="LO:HI", help="fit window in Hz, e.g. 885e3:945e3")
    p_fit.add_argument("--objective", choices=("linear", "log"), help="residual space")
    p_fit.set_defaults(func=cmd_fit)

    p_nm = subs.add_parser("nonmarkov", help="bath asymptotics and non-Markovianity")
    _add_common(p_nm)
    p_nm.add_argument("--trajectory", metavar="FILE", help="write a covariance trajectory CSV")
    p_nm.add_argument("--traj-t-end", type=float, default=2000.0,
                      help="trajectory end time in units of 1/Omega")
    p_nm.add_argument("--traj-points", type=int, default=201)
    p_nm.set_defaults(func=cmd_nonmarkov)

    p_pipe = subs.add_parser("pipeline", help="synth -> fit -> nonmarkov in one run")
    _add_common(p_pipe)
    p_pipe.add_argument("--truth-k", type=float, help="override the bath exponent")
    p_pipe.set_defaults(func=cmd_pipeline)

    return parser


def _load(args) -> dict:
    cfg = cfgmod.load_config(
        path=args.config, preset=args.preset, overrides=args.overrides
    )
    if args.seed is not None:
        cfg["seed"] = int(args.seed)
    if args.threads is not None:
        cfg["threads"] = max(1, int(args.threads))
    if args.out is not None:
        cfg["output_dir"] = args.out
    truth_k = getattr(args, "truth_k", None)
    if truth_k is not None:
        if "exponent" not in cfg["bath"]:
            raise ConfigError(
                f"--truth-k needs a bath variant with an exponent, not "
                f"{cfg['bath'].get('variant')!r}"
            )
        cfg["bath"]["exponent"] = float(truth_k)
    return cfg


def _outdir(cfg) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective_config.yaml").write_text(cfgmod.effective_yaml(cfg))
    return out


# ---------------------------------------------------------------------------
# synthesis helpers shared by synth and pipeline


def _synth_spectra(cfg):
    """The configured ensemble of averaged spectra, by the configured route."""
    scfg = cfgmod.build_synth_config(cfg)
    sec = cfg["synth"]
    if sec["mode"] == "spectra":
        return [
            synth.synth_averaged_spectrum(scfg, sec["n_averages"], index=i)
            for i in range(sec["n_spectra"])
        ]
    # timeseries route: records -> batches -> periodograms -> group averages
    group = sec["n_averages"]
    spectra = []
    grid = None
    acc = None
    count = 0
    for rec in range(sec["n_records"]):
        ts = synth.synth_timeseries(scfg, index=rec)
        for batch in estimate.batch_series(ts, sec["batch_samples"]):
            p = estimate.periodogram(batch, scfg.sample_rate)
            if grid is None:
                grid = p.frequencies_hz
                acc = np.zeros_like(p.psd)
            acc += p.psd
            count += 1
            if count == group:
                spectra.append(
                    estimate.Spectrum(
                        frequencies_hz=grid,
                        psd=acc / count,
                        n_averages=count,
                        provenance={
                            "source": "pipeline-timeseries",
                            "group_index": len(spectra),
                        },
                    )
                )
                acc = np.zeros_like(acc)
                count = 0
    if count:
        print(f"note: dropped {count} periodograms past the last full group of {group}")
    if not spectra:
        raise ConfigError("synth settings produce no averaged spectra")
    return spectra


# ---------------------------------------------------------------------------
# fit flow shared by fit and pipeline


def _fmt(x) -> str:
    return f"{x:.17g}"


def _run_fit_flow(cfg, spectra, out: Path):
    fit = cfg["fit"]
    window = cfgmod.build_fit_window(cfg)
    opts = cfgmod.build_fit_options(cfg)

    grid = spectra[0].frequencies_hz
    for i, sp in enumerate(spectra[1:], start=1):
        if sp.frequencies_hz.shape != grid.shape or not np.array_equal(
            sp.frequencies_hz, grid
        ):
            raise DataError(f"spectrum {i} is on a different frequency grid")
    pooled = estimate.Spectrum(
        frequencies_hz=grid,
        psd=np.mean([sp.psd for sp in spectra], axis=0),
        n_averages=sum(sp.n_averages for sp in spectra),
        provenance={"source": "pooled"},
    )
    omega_inf, gamma_inf = estimate.estimate_shape_params(
        pooled,
        window,
        free_exponent=fit["shape_free_exponent"],
        objective_space=fit["shape_objective"],
    )
    shaped = window.with_shape(omega_inf, gamma_inf)
    ensemble = estimate.ensemble_estimate(
        spectra, shaped, opts, threads=cfg["threads"]
    )
    boot = estimate.bootstrap(
        spectra,
        shaped,
        opts,
        n_resamples=fit["bootstrap_resamples"],
        seed=cfg["seed"],
        ensemble=ensemble,
    )
    report = estimate.k_to_nonmarkovianity(
        ensemble, cfg["nonmarkov"]["omega_ref"], cfg["nonmarkov"]["half_window"]
    )

    lines = ["index,k,scale,residual,boundary"]
    for idx, res in zip(ensemble.indices, ensemble.results):
        lines.append(
            f"{idx},{_fmt(res.k)},{_fmt(res.scale)},{_fmt(res.residual)},{int(res.boundary)}"
        )
    (out / "fits.csv").write_text("\n".join(lines) + "\n")

    lines = ["bin_lo,bin_hi,count"]
    for lo, hi, c in zip(
        ensemble.hist_edges[:-1], ensemble.hist_edges[1:], ensemble.hist_counts
    ):
        lines.append(f"{_fmt(lo)},{_fmt(hi)},{int(c)}")
    (out / "histogram.csv").write_text("\n".join(lines) + "\n")

    summary = [
        f"n_spectra = {len(spectra)}",
        f"n_fitted = {ensemble.n_fits}",
        f"n_failed = {len(ensemble.failures)}",
        f"n_boundary = {sum(int(r.boundary) for r in ensemble.results)}",
        f"objective = {opts.objective_space}",
        f"shape_omega_rad_s = {_fmt(omega_inf)}",
        f"shape_gamma_rad_s = {_fmt(gamma_inf)}",
        f"mean_k = {_fmt(ensemble.mean_k)}",
        f"std_k = {_fmt(ensemble.std_k)}",
        f"sem_k = {_fmt(ensemble.sem_k)}",
        f"bootstrap_mean = {_fmt(boot.mean)}",
        f"bootstrap_std = {_fmt(boot.std)}",
        f"xi_lower_bound = {_fmt(report.xi_bound)}",
        f"xi_bound_std = {_fmt(report.xi_std)}",
        f"xi_bound_sem = {_fmt(report.xi_sem)}",
    ]
    for idx, msg in ensemble.failures:
        summary.append(f"failure[{idx}] = {msg}")
    text = "\n".join(summary) + "\n"
    (out / "summary.txt").write_text(text)
    print(text, end="")
    return ensemble, boot, report


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    sec = cfg["synth"]
    scfg = cfgmod.build_synth_config(cfg)
    if sec["mode"] == "spectra":
        sdir = out / "spectra"
        sdir.mkdir(exist_ok=True)
        for i in range(sec["n_spectra"]):
            sp = synth.synth_averaged_spectrum(scfg, sec["n_averages"], index=i)
            formats.write_spectrum_csv(sdir / f"spectrum_{i:04d}.csv", sp)
        print(f"wrote {sec['n_spectra']} averaged spectra to {sdir}")
    else:
        rdir = out / "records"
        rdir.mkdir(exist_ok=True)
        for i in range(sec["n_records"]):
            ts = synth.synth_timeseries(scfg, index=i)
            formats.write_timeseries(rdir / f"record_{i:04d}.bsts", ts)
        print(
            f"wrote {sec['n_records']} records of {sec['n_samples']} samples to {rdir}"
        )
    return 0


def cmd_spectrum(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    model = cfgmod.build_model(cfg)
    osc = cfgmod.build_oscillator(cfg)
    cavity = cfgmod.build_cavity(cfg, osc)
    if args.mode == "full" and cavity is None:
        raise ConfigError("full mode needs cavity.enabled: true (try --preset paper)")
    grid = optomech.output_spectrum_grid(
        args.fmin, args.fmax, args.points, model, osc, cavity, mode=args.mode
    )
    sp = estimate.Spectrum(
        frequencies_hz=grid.omega / (2.0 * math.pi),
        psd=grid.psd,
        n_averages=1,
        provenance={"source": f"model-{args.mode}"},
    )
    meta = {k: v for k, v in grid.meta.items() if v is not None}
    dest = Path(args.output) if args.output else out / "spectrum.csv"
    formats.write_spectrum_csv(dest, sp, extra_meta=meta)
    print(f"wrote {args.points} bins ({args.mode} mode) to {dest}")
    return 0


def cmd_fit(args) -> int:
    cfg = _load(args)
    if args.window:
        try:
            lo, hi = (float(part) for part in args.window.split(":"))
        except ValueError as exc:
            raise ConfigError(f"bad --window {args.window!r}, want LO:HI in Hz") from exc
        cfg["fit"]["window_hz"] = [lo, hi]
    if args.objective:
        cfg["fit"]["objective"] = args.objective
    out = _outdir(cfg)
    spectra = [formats.read_spectrum_csv(p) for p in args.files]
    _run_fit_flow(cfg, spectra, out)
    return 0


def cmd_nonmarkov(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    model = cfgmod.build_model(cfg)
    osc = cfgmod.build_oscillator(cfg)
    half_window = cfg["nonmarkov"]["half_window"]
    asym = qbm.asymptotic_coefficients(model, osc, half_window=half_window)
    report = qbm.nonmarkovianity_measure(asym.as_coefficients())
    lines = [
        f"theta = {_fmt(asym.theta)}",
        f"gamma_inf = {_fmt(asym.damping)}",
        f"freq_shift_inf = {_fmt(asym.freq_shift)}",
        f"momentum_diffusion_inf = {_fmt(asym.momentum_diffusion)}",
        f"cross_diffusion_inf = {_fmt(asym.cross_diffusion)}",
        f"cross_diffusion_resonant = {_fmt(asym.cross_diffusion_resonant)}",
        f"cross_diffusion_offresonant = {_fmt(asym.cross_diffusion_offresonant)}",
        f"xi = {_fmt(report.value)}",
        f"xi_ratio = {_fmt(report.ratio)}",
    ]
    exponent = cfg["bath"].get("exponent")
    if exponent is not None:
        bound = qbm.bound_from_exponent(
            float(exponent), cfg["nonmarkov"]["omega_ref"], half_window
        )
        lines.append(f"xi_bound_from_exponent = {_fmt(bound.measure_bound)}")
    text = "\n".join(lines) + "\n"
    (out / "nonmarkov.txt").write_text(text)
    print(text, end="")

    if args.trajectory:
        theta = asym.theta
        gamma0 = np.array([[2.0 * theta, 0.0], [0.0, 2.0 * theta]])
        times = np.linspace(0.0, args.traj_t_end, args.traj_points)
        traj = qbm.propagate_covariance(
            model, osc, gamma0, times, coefficient_source="asymptotic",
            half_window=half_window,
        )
        rows = ["time,xx,xp,pp"]
        for t, mat in zip(traj.times, traj.matrices):
            rows.append(f"{_fmt(t)},{_fmt(mat[0, 0])},{_fmt(mat[0, 1])},{_fmt(mat[1, 1])}")
        Path(args.trajectory).write_text("\n".join(rows) + "\n")
        print(f"wrote covariance trajectory to {args.trajectory}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = _load(args)
    out = _outdir(cfg)
    spectra = _synth_spectra(cfg)
    _run_fit_flow(cfg, spectra, out)
    print(f"artifacts in {out}")
    return 0


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UnphysicalParameterError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
