"""Batch command-line front end.

Subcommands: ``calibrate``, ``pd``, ``rmse``, ``occupancy``, ``run-all``
and ``verify``. Exit codes are a stable contract: 0 success, 2
configuration error, 3 numerical failure, 4 artifact mismatch.

The default output directory is taken from ``--out-dir``, then the config
file's ``output.dir``, then the ``MOSDET_OUT_DIR`` environment variable,
then ``results``.
"""

import argparse
import os
import sys

from . import __version__, artifacts, montecarlo
from .errors import ConfigError, ConfigMismatch, MosdetError, NumericalError
from .scenario import PulseTiming, gate_assignments

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_MISMATCH = 4


def _parse_sinr_grid(text):
    """Grid syntax: 'start:stop:step' (stop inclusive) or comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            grid = []
            x = start
            while x <= stop + 1e-9:
                grid.append(round(x, 12))
                x += step
            return tuple(grid)
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(
            f"bad --sinr-grid {text!r}; use start:stop:step or a,b,c"
        ) from exc


def _parse_trials(text):
    value = float(text)
    if value < 1 or value != int(value):
        raise ConfigError(f"--trials must be a positive integer, got {text}")
    return int(value)


def _add_common(parser, trials_help):
    parser.add_argument("--config", required=True, help="path to JSON config file")
    parser.add_argument("--out-dir", help="output directory")
    parser.add_argument("--seed", type=int, help="master seed override")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker processes (does not affect results)")
    parser.add_argument("--pfa", type=float, help="target false-alarm rate override")
    parser.add_argument("--trials", help=trials_help)
    parser.add_argument("--sinr-grid", help="grid as start:stop:step or comma list")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mosdet",
        description="Monte Carlo benchmark of model-order-selection detectors "
        "for range-migrating targets",
    )
    parser.add_argument("--version", action="version", version=f"mosdet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="calibrate detection thresholds")
    _add_common(p, "calibration trials override (e.g. 1e5)")

    p = sub.add_parser("pd", help="detection probability curves")
    _add_common(p, "trials per SINR point override")
    p.add_argument("--thresholds", help="thresholds.csv path "
                   "(default <out-dir>/thresholds.csv)")

    p = sub.add_parser("rmse", help="support-estimation error curves")
    _add_common(p, "trials per SINR point override")

    p = sub.add_parser("run-all", help="calibrate, then pd and rmse sweeps")
    _add_common(p, "calibration trials override")

    p = sub.add_parser("occupancy", help="range-gate occupancy table")
    p.add_argument("--prt", type=float, required=True, help="pulse repetition time [s]")
    p.add_argument("--pulse-width", type=float, required=True, help="pulse width [s]")
    p.add_argument("--velocity", type=float, required=True,
                   help="radial velocity [m/s], positive approaching")
    p.add_argument("--n-pulses", type=int, required=True, help="pulses per burst")
    p.add_argument("--light-speed", type=float, default=299792458.0)
    p.add_argument("--gates", help="gate range lo:hi (default: occupied gates)")

    p = sub.add_parser("verify", help="check result files against the manifest")
    p.add_argument("--config", help="config file to cross-check")
    p.add_argument("--out-dir", help="result directory")
    return parser


def _load_effective(args, command):
    config, cfg_out_dir, sha = artifacts.load_config_file(args.config)
    trials = _parse_trials(args.trials) if args.trials is not None else None
    config = artifacts.apply_overrides(
        config,
        seed=args.seed,
        pfa=args.pfa,
        calibration_trials=trials if command in ("calibrate", "run-all") else None,
        pd_trials=trials if command == "pd" else None,
        rmse_trials=trials if command == "rmse" else None,
        sinr_grid_db=_parse_sinr_grid(args.sinr_grid) if args.sinr_grid else None,
    )
    out_dir = (
        args.out_dir
        or cfg_out_dir
        or os.environ.get("MOSDET_OUT_DIR")
        or "results"
    )
    return config, out_dir, sha


def cmd_calibrate(args):
    config, out_dir, sha = _load_effective(args, "calibrate")
    chash = montecarlo.experiment_config_hash(config)
    cals = montecarlo.calibrate_bank(
        config.detectors, config.scenario, config.target_pfa,
        config.calibration_trials, config.master_seed, args.workers, chash,
    )
    path = os.path.join(out_dir, "thresholds.csv")
    artifacts.write_thresholds_csv(
        path, [cals[d] for d in config.detectors], chash, config.master_seed
    )
    artifacts.write_manifest(out_dir, "calibrate", args.config, sha, config, chash)
    print(f"wrote {path} ({len(cals)} detectors)")
    return EXIT_OK


def _load_thresholds(args, config, out_dir, chash):
    path = args.thresholds or os.path.join(out_dir, "thresholds.csv")
    meta, cals = artifacts.read_thresholds_csv(path)
    if meta.get("config_hash") != chash:
        raise ConfigMismatch(
            f"{path} was calibrated under config {meta.get('config_hash')}, "
            f"but the current configuration hashes to {chash}"
        )
    missing = [d for d in config.detectors if d not in cals]
    if missing:
        raise ConfigMismatch(f"{path} lacks thresholds for: {missing}")
    return {d: cals[d] for d in config.detectors}


def cmd_pd(args):
    config, out_dir, sha = _load_effective(args, "pd")
    chash = montecarlo.experiment_config_hash(config)
    thresholds = _load_thresholds(args, config, out_dir, chash)
    curves = montecarlo.estimate_pd_bank(
        thresholds, config.scenario, config.sinr_grid_db,
        config.pd_trials, config.master_seed, args.workers, chash,
    )
    path = os.path.join(out_dir, "pd_curves.csv")
    artifacts.write_pd_csv(path, curves, chash, config.master_seed)
    artifacts.write_manifest(out_dir, "pd", args.config, sha, config, chash)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_rmse(args):
    config, out_dir, sha = _load_effective(args, "rmse")
    chash = montecarlo.experiment_config_hash(config)
    curves = {
        sel: montecarlo.estimate_rmse(
            sel, config.scenario, config.sinr_grid_db,
            config.rmse_trials, config.master_seed, args.workers,
        )
        for sel in config.selectors
    }
    if not curves:
        raise ConfigError("no enabled detector uses a selection rule")
    path = os.path.join(out_dir, "rmse_curves.csv")
    artifacts.write_rmse_csv(path, curves, chash, config.master_seed)
    artifacts.write_manifest(out_dir, "rmse", args.config, sha, config, chash)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_run_all(args):
    config, out_dir, sha = _load_effective(args, "run-all")
    report = montecarlo.run_experiment(config, workers=args.workers)
    chash = report.config_hash
    artifacts.write_thresholds_csv(
        os.path.join(out_dir, "thresholds.csv"),
        report.calibrations, chash, config.master_seed,
    )
    artifacts.write_pd_csv(
        os.path.join(out_dir, "pd_curves.csv"),
        report.pd_curves, chash, config.master_seed,
    )
    if report.rmse_curves:
        artifacts.write_rmse_csv(
            os.path.join(out_dir, "rmse_curves.csv"),
            report.rmse_curves, chash, config.master_seed,
        )
    artifacts.write_report_json(os.path.join(out_dir, "report.json"), report)
    artifacts.write_manifest(out_dir, "run-all", args.config, sha, config, chash)
    print(f"wrote experiment artifacts to {out_dir}")
    return EXIT_OK


def cmd_occupancy(args):
    timing = PulseTiming(
        prt=args.prt,
        pulse_width=args.pulse_width,
        radial_velocity=args.velocity,
        n_pulses=args.n_pulses,
        light_speed=args.light_speed,
    )
    gates = gate_assignments(timing)
    if args.gates:
        try:
            lo, hi = (int(x) for x in args.gates.split(":"))
        except ValueError:
            raise ConfigError(f"bad --gates {args.gates!r}; use lo:hi")
        wanted = range(lo, hi + 1)
    else:
        wanted = sorted(set(int(g) for g in gates))
    print("gate,pulses,l,h")
    for k in wanted:
        (hits,) = (gates == k).nonzero()
        if hits.size == 0:
            print(f"{k},,-,-")
            continue
        pulses = f"{hits[0]}" if hits.size == 1 else f"{hits[0]}-{hits[-1]}"
        print(f"{k},{pulses},{hits[0] + 1},{hits.size - 1}")
    return EXIT_OK


def cmd_verify(args):
    out_dir = args.out_dir or os.environ.get("MOSDET_OUT_DIR") or "results"
    checked = artifacts.verify_out_dir(out_dir, args.config)
    for name in checked:
        print(f"ok: {name}")
    return EXIT_OK


_COMMANDS = {
    "calibrate": cmd_calibrate,
    "pd": cmd_pd,
    "rmse": cmd_rmse,
    "run-all": cmd_run_all,
    "occupancy": cmd_occupancy,
    "verify": cmd_verify,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ConfigMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except MosdetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
