"""``mmsc`` command-line entry point.

Exit codes: 0 success, 2 configuration or file-format error, 3 I/O error,
4 numerical non-convergence or non-identifiable data.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from mmsc import io
from mmsc.calibration import (
    LITERATURE,
    CalibrationRecord,
    cooperativity_variants,
    mmsc_threshold,
    od_per_atom,
    threshold_od,
)
from mmsc.config import ConfigError, RunConfig, config_to_dict, load_config
from mmsc.correlations import (
    EnsembleG2Params,
    add_counting_noise,
    fit_atom_number,
    g2_ensemble,
)
from mmsc.errors import (
    AmbiguousAlignmentError,
    DomainError,
    FitError,
    NoClearMinimumError,
    StepSizeError,
    WindowError,
)
from mmsc.fits import fit_coupling, fit_detuning, fit_od_single_pass
from mmsc.model import TWO_PI, gn_to_od, od_to_gn
from mmsc.spectra import (
    add_shot_noise,
    find_mode_shifts,
    frequency_grid,
    recenter,
    shift_spectrum,
    synthesize,
)

EXIT_OK = 0
EXIT_FORMAT = 2
EXIT_IO = 3
EXIT_NUMERIC = 4

SWEEP_ORDERS = (-2, -1, 1, 2)


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _mhz(x):
    return f"{x / 1e6:.6g} MHz"


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _out_path(args, default):
    return Path(args.out) if args.out else Path(default)


def _floats(text, name):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"--{name}: expected a comma-separated list of numbers", EXIT_FORMAT)
    return vals


def _result_payload(result, extra=None):
    data = {
        "names": list(result.names),
        "values": result.x,
        "sigmas": result.sigma,
        "cost": result.cost,
        "residual_norm": float(np.sqrt(result.cost)),
        "iterations": result.n_iter,
        "status": result.status,
        "converged": result.converged,
        "derived": {k: list(v) for k, v in result.derived.items()},
    }
    if extra:
        data.update(extra)
    return data


def _print_result(result):
    for name, v, s in zip(result.names, result.x, result.sigma):
        print(f"{name} = {v:.8g} +/- {s:.3g}")
    for name, (v, s) in result.derived.items():
        print(f"{name} = {v:.8g} +/- {s:.3g}")
    print(f"residual_norm = {np.sqrt(result.cost):.6g}")
    print(f"status = {result.status}")


def cmd_simulate(args):
    cfg = _config(args)
    res, ens = cfg.resonator_params(), cfg.ensemble_params()
    grid = frequency_grid(cfg.sweep.span_hz, cfg.sweep.points)
    spec = synthesize(grid, res, ens)
    if args.counts:
        spec = add_shot_noise(spec, args.counts, cfg.seed)
    spec.meta["seed"] = cfg.seed
    spec.meta["config"] = config_to_dict(cfg)
    out = _out_path(args, "spectrum.csv")
    io.write_spectrum(out, spec)
    if args.svg:
        io.write_svg(out.with_suffix(".svg"), spec.freqs / 1e6, spec.values,
                     xlabel="detuning (MHz)", ylabel="transmission")
    print(f"wrote {out} ({len(spec)} points, OD = {ens.od:.6g})")
    return EXIT_OK


def cmd_fit(args):
    cfg = _config(args)
    if not args.data:
        raise CliError("fit needs --data <spectrum.csv>", EXIT_FORMAT)
    spec = io.read_spectrum(args.data)
    res = cfg.resonator_params()
    mode = args.mode or "coupling"
    out = _out_path(args, "fit.json")
    try:
        result = _run_fit(mode, spec, res, cfg, args)
    except FitError as exc:
        io.write_json(out, {"mode": mode, "data": str(args.data), "status": "failed",
                            "converged": False, "error": str(exc)})
        raise
    _print_result(result)
    io.write_json(out, _result_payload(result, {"mode": mode, "data": str(args.data)}))
    if not result.converged:
        print("fit did not converge", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def _run_fit(mode, spec, res, cfg, args):
    if mode == "detuning":
        ens = cfg.ensemble_params()
        if ens.od == 0:
            raise CliError("atoms.od: detuning mode needs the optical depth", EXIT_FORMAT)
        gn = od_to_gn(ens.od, cfg.gamma, res.fsr)
        result = fit_detuning(spec, res, gn, cfg.gamma, cfg.atoms.beta)
    elif mode == "coupling":
        result = fit_coupling(spec, res, cfg.gamma, cfg.atoms.beta)
    elif mode == "od":
        result = fit_od_single_pass(spec, threshold=args.threshold)
    else:
        raise CliError(f"--mode: unknown fit mode {mode!r}", EXIT_FORMAT)
    return result


def cmd_sweep(args):
    cfg = _config(args)
    res = cfg.resonator_params()
    if args.gn_hz and args.od:
        raise CliError("give either --gn-hz or --od, not both", EXIT_FORMAT)
    if args.gn_hz:
        gns = [TWO_PI * g for g in _floats(args.gn_hz, "gn-hz")]
    elif args.od:
        gns = [od_to_gn(od, cfg.gamma, res.fsr) for od in _floats(args.od, "od")]
    else:
        raise CliError("sweep needs a ladder: --gn-hz or --od", EXIT_FORMAT)
    if not gns:
        raise CliError("sweep ladder is empty", EXIT_FORMAT)
    if any(g < 0 for g in gns):
        raise CliError("sweep ladder values must be nonnegative", EXIT_FORMAT)

    out_dir = _out_path(args, "sweep")
    out_dir.mkdir(parents=True, exist_ok=True)
    base = cfg.ensemble_params()
    grid = frequency_grid(cfg.sweep.span_hz, cfg.sweep.points)
    rows = {"order": [], "gn_hz": [], "shift_hz": [], "depth": []}
    for i, gn in enumerate(gns):
        ens = base.with_od(gn_to_od(gn, cfg.gamma, res.fsr))
        spec = synthesize(grid, res, ens, label=f"step {i}")
        if args.counts:
            spec = add_shot_noise(spec, args.counts, np.random.default_rng([cfg.seed, i]))
        io.write_spectrum(out_dir / f"step_{i:03d}.csv", spec)
        for ms in find_mode_shifts(spec, res.fsr, SWEEP_ORDERS):
            rows["order"].append(ms.order)
            rows["gn_hz"].append(gn / TWO_PI)
            rows["shift_hz"].append(ms.shift)
            rows["depth"].append(ms.depth)
    table = io.ResultTable(rows, caption="mode shifts per ladder step")
    io.write_table_csv(out_dir / "summary.csv", table)
    print(table.to_text())
    return EXIT_OK


def _g2_ensemble_params(cfg: RunConfig):
    g = cfg.g2
    ens = cfg.ensemble_params()
    if cfg.atoms.n_atoms is None and cfg.atoms.od is None:
        raise CliError("atoms.n_atoms: g2 simulation needs n_atoms or od", EXIT_FORMAT)
    mu0 = 0.5 * sum(g.mu0_bounds)
    mu = 0.5 * sum(g.mu_bounds)
    return EnsembleG2Params(ens.n_atoms, mu0, mu, g.mu0_bounds, g.mu_bounds)


def cmd_g2(args):
    cfg = _config(args)
    mode = args.mode or "simulate"
    g = cfg.g2
    if mode == "simulate":
        taus = np.linspace(0.0, g.tau_max_s, g.points)
        ens = _g2_ensemble_params(cfg)
        trace = g2_ensemble(taus, cfg.drive_params(), ens)
        if args.counts:
            trace = add_counting_noise(trace, args.counts, cfg.seed)
        out = _out_path(args, "g2.csv")
        io.write_g2(out, trace)
        if args.svg:
            io.write_svg(out.with_suffix(".svg"), trace.taus * 1e6, np.real(trace.values),
                         xlabel="delay (us)", ylabel="g2")
        print(f"wrote {out}; N = {ens.n_atoms:.6g}, g2(0) = {float(np.real(trace.values[0])):.6g}")
        return EXIT_OK
    if mode == "fit":
        if not args.data:
            raise CliError("g2 fit needs --data <g2.csv>", EXIT_FORMAT)
        trace = io.read_g2(args.data)
        result = fit_atom_number(trace, cfg.gamma, mu_bounds=g.mu_bounds, mu0_bounds=g.mu0_bounds)
        n, sn = result.derived["n_eff"]
        rabi, srabi = result.derived["rabi"]
        print(f"N_eff = {n:.6g} +/- {sn:.3g}")
        print(f"rabi/2pi = {_mhz(rabi / TWO_PI)} +/- {_mhz(srabi / TWO_PI)}")
        print(f"mu = {result.value('mu'):.6g}, mu0 = {result.value('mu0'):.6g}")
        print(f"status = {result.status}")
        out = _out_path(args, "g2_fit.json")
        io.write_json(out, _result_payload(result, {"corner_n": result.notes["corner_n"]}))
        return EXIT_OK if result.converged else EXIT_NUMERIC
    raise CliError(f"--mode: unknown g2 mode {mode!r}", EXIT_FORMAT)


def _csv_files(path):
    path = Path(path)
    if path.is_dir():
        return sorted(p for p in path.glob("*.csv"))
    return [path]


def cmd_recenter(args):
    if not args.data or not args.reference:
        raise CliError("recenter needs --data <dir> and --reference <csv>", EXIT_FORMAT)
    cfg = _config(args)
    reference = io.read_spectrum(args.reference)
    files = _csv_files(args.data)
    if not files:
        raise CliError(f"{args.data}: no CSV traces found", EXIT_FORMAT)
    traces = [io.read_spectrum(p) for p in files]
    step = reference.step
    for p, tr in zip(files, traces):
        if len(tr) != len(reference) or not np.allclose(
            tr.freqs, reference.freqs, rtol=0, atol=1e-6 * abs(step)
        ):
            raise CliError(f"{p}: grid differs from the reference grid", EXIT_FORMAT)
    fsr = reference.meta.get("fsr_hz") or cfg.resonator.fsr_hz
    report, aligned = recenter(traces, reference, fsr=fsr)

    out_dir = _out_path(args, "recentered")
    out_dir.mkdir(parents=True, exist_ok=True)
    warnings = []
    for p, tr in zip(files, aligned):
        io.write_spectrum(out_dir / p.name, tr)
    if args.loaded:
        loaded_dir = Path(args.loaded)
        for p, c in zip(files, report.offsets):
            pair = loaded_dir / p.name
            if not pair.exists():
                warnings.append(f"missing loaded spectrum for {p.stem}")
                continue
            spec = io.read_spectrum(pair)
            io.write_spectrum(out_dir / f"{p.stem}_loaded.csv", shift_spectrum(spec, c))
    table = io.ResultTable(
        {
            "index": np.arange(len(files)),
            "offset_hz": report.offsets,
            "rss_before": report.rss_before,
            "rss_after": report.rss_after,
        },
        caption="recentering offsets",
        notes={"files": [p.name for p in files], "warnings": warnings},
    )
    io.write_table_csv(out_dir / "offsets.csv", table)
    io.write_json(out_dir / "report.json", table)
    print(table.to_text())
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_calibrate(args):
    cfg = _config(args)
    if not args.data:
        raise CliError("calibrate needs --data <records.csv>", EXIT_FORMAT)
    try:
        records = [CalibrationRecord(*row) for row in io.read_records(args.data)]
    except ValueError as exc:
        if isinstance(exc, io.FormatError):
            raise
        raise CliError(f"{args.data}: {exc}", EXIT_FORMAT)
    est = od_per_atom(records)
    res = cfg.resonator_params()
    c1 = cooperativity_variants(est.value, res, cfg.gamma)
    n_thr, s_thr = mmsc_threshold(est.value, cfg.gamma, res.fsr, est.sigma)
    od_thr = threshold_od(cfg.gamma, res.fsr)
    lit = LITERATURE
    table = io.ResultTable(
        {
            "od1": [est.value],
            "od1_err": [est.sigma],
            "od1_unweighted": [est.unweighted],
            "c1_kappa0": [c1["kappa0"]],
            "c1_kappa_total": [c1["kappa_total"]],
            "threshold_od": [od_thr],
            "n_threshold": [n_thr],
            "n_threshold_err": [s_thr],
        },
        caption="calibration from OD / N_eff records",
        notes={"literature": {k: list(v) for k, v in lit.items()}},
    )
    print(f"OD1 = {est.value:.5g} +/- {est.sigma:.2g}   (literature {lit['od1'][0]} +/- {lit['od1'][1]})")
    print(f"OD1 unweighted = {est.unweighted:.5g} +/- {est.unweighted_sigma:.2g}")
    print(f"C1 (kappa0) = {c1['kappa0']:.4g}")
    print(f"C1 (kappa0 + kappa_ext) = {c1['kappa_total']:.4g}   (literature {lit['c1'][0]})")
    print(f"threshold OD = {od_thr:.5g}")
    print(f"N_threshold = {n_thr:.4g} +/- {s_thr:.2g}   (literature "
          f"{lit['n_threshold'][0]:g} +/- {lit['n_threshold'][1]:g})")
    if args.out:
        io.write_json(args.out, table)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "g2": cmd_g2,
    "recenter": cmd_recenter,
    "calibrate": cmd_calibrate,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="mmsc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML run configuration")
        p.add_argument("--out", help="output file or directory")
        p.add_argument("--svg", action="store_true", help="also write an SVG plot")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--mode", help="fit: detuning|coupling|od; g2: simulate|fit")
        p.add_argument("--data", help="input data file or directory")
        p.add_argument("--counts", type=float, help="mean counts per bin for shot noise")
        if name == "fit":
            p.add_argument("--threshold", type=float, default=0.9,
                           help="od mode: required dip below this fraction of the baseline")
        if name == "sweep":
            p.add_argument("--gn-hz", help="comma-separated g_N/2pi ladder in Hz")
            p.add_argument("--od", help="comma-separated optical-depth ladder")
        if name == "recenter":
            p.add_argument("--reference", help="reference spectrum CSV")
            p.add_argument("--loaded", help="directory of loaded-resonator spectra")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_FORMAT if exc.code else EXIT_OK
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_FORMAT
    try:
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, io.FormatError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FitError, WindowError, NoClearMinimumError, AmbiguousAlignmentError,
            StepSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
