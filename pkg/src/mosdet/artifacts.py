"""Configuration files and result artifacts.

The configuration file is JSON with four sections, all optional:

    {
      "scenario":   { ... ScenarioConfig fields ... },
      "detectors":  { "enabled": ["gamf", ...] },
      "montecarlo": { "target_pfa": 1e-3, "calibration_trials": 100000,
                      "pd_trials": 1000, "rmse_trials": 1000,
                      "sinr_grid_db": [0, 2, ...], "master_seed": 1 },
      "output":     { "dir": "results" }
    }

Unknown keys anywhere are errors, so a typo cannot silently change an
experiment.

Result CSVs start with a fixed comment header carrying the tool version,
the config hash and the master seed; all floating-point values are printed
with 17 significant digits and LF line endings so reruns are
byte-comparable.
"""

import dataclasses
import hashlib
import json
import os

from . import __version__
from .errors import ConfigError, ConfigMismatch
from .montecarlo import (
    CalibrationResult,
    ExperimentConfig,
    experiment_config_hash,
)
from .scenario import ScenarioConfig

__all__ = [
    "load_config_file",
    "apply_overrides",
    "fmt_float",
    "write_thresholds_csv",
    "read_thresholds_csv",
    "write_pd_csv",
    "write_rmse_csv",
    "write_report_json",
    "write_manifest",
    "read_manifest",
    "manifest_config",
    "verify_out_dir",
    "parse_artifact_header",
    "file_sha256",
]

_SECTIONS = ("scenario", "detectors", "montecarlo", "output")
_SCENARIO_KEYS = {f.name for f in dataclasses.fields(ScenarioConfig)}
_MONTECARLO_KEYS = {
    "target_pfa",
    "calibration_trials",
    "pd_trials",
    "rmse_trials",
    "sinr_grid_db",
    "master_seed",
}


def file_sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _require_known(mapping, allowed, where):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def load_config_file(path):
    """Parse and validate one configuration file.

    Returns ``(experiment_config, output_dir, sha256_of_file)``;
    ``output_dir`` is None unless the file sets one.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a JSON object")
    _require_known(raw, _SECTIONS, "config file")

    scen_raw = raw.get("scenario", {})
    _require_known(scen_raw, _SCENARIO_KEYS, "scenario section")
    det_raw = raw.get("detectors", {})
    _require_known(det_raw, {"enabled"}, "detectors section")
    mc_raw = raw.get("montecarlo", {})
    _require_known(mc_raw, _MONTECARLO_KEYS, "montecarlo section")
    out_raw = raw.get("output", {})
    _require_known(out_raw, {"dir"}, "output section")

    try:
        scen = ScenarioConfig(**scen_raw)
        kwargs = dict(mc_raw)
        if "enabled" in det_raw:
            kwargs["detectors"] = tuple(det_raw["enabled"])
        config = ExperimentConfig(scenario=scen, **kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc
    return config, out_raw.get("dir"), file_sha256(path)


def apply_overrides(config, seed=None, pfa=None, calibration_trials=None,
                    pd_trials=None, rmse_trials=None, sinr_grid_db=None):
    """Return a copy of ``config`` with command-line overrides applied."""
    changes = {}
    if seed is not None:
        changes["master_seed"] = seed
    if pfa is not None:
        changes["target_pfa"] = pfa
    if calibration_trials is not None:
        changes["calibration_trials"] = calibration_trials
    if pd_trials is not None:
        changes["pd_trials"] = pd_trials
    if rmse_trials is not None:
        changes["rmse_trials"] = rmse_trials
    if sinr_grid_db is not None:
        changes["sinr_grid_db"] = tuple(sinr_grid_db)
    return dataclasses.replace(config, **changes) if changes else config


def fmt_float(x):
    """17-significant-digit, locale-independent float formatting."""
    return format(float(x), ".17g")


def _header_lines(config_hash, master_seed, command):
    return [
        f"# mosdet {__version__}",
        f"# config_hash: {config_hash}",
        f"# master_seed: {master_seed}",
        f"# command: {command}",
    ]


def _write_lines(path, lines):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_thresholds_csv(path, calibrations, config_hash, master_seed):
    lines = _header_lines(config_hash, master_seed, "calibrate")
    lines.append("detector,pfa,trials,threshold,seed")
    for cal in calibrations:
        lines.append(
            f"{cal.detector_id},{fmt_float(cal.target_pfa)},{cal.n_trials},"
            f"{fmt_float(cal.threshold)},{cal.seed}"
        )
    _write_lines(path, lines)


def parse_artifact_header(path):
    """Read the comment header of a result file into a dict."""
    meta = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if ":" in body:
                key, _, value = body.partition(":")
                meta[key.strip()] = value.strip()
            elif body.startswith("mosdet"):
                meta["version"] = body.split()[-1]
    return meta


def read_thresholds_csv(path):
    """Parse a thresholds file back into calibration results plus header."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except FileNotFoundError as exc:
        raise ConfigMismatch(f"thresholds file not found: {path}") from exc
    meta = parse_artifact_header(path)
    rows = [ln for ln in lines if ln and not ln.startswith("#")]
    if not rows or rows[0] != "detector,pfa,trials,threshold,seed":
        raise ConfigMismatch(f"{path} is not a thresholds file")
    cals = {}
    for row in rows[1:]:
        det, pfa, trials, thr, seed = row.split(",")
        cals[det] = CalibrationResult(
            detector_id=det,
            threshold=float(thr),
            target_pfa=float(pfa),
            n_trials=int(trials),
            empirical_pfa_at_threshold=float("nan"),
            seed=int(seed),
            config_hash=meta.get("config_hash"),
        )
    return meta, cals


def write_pd_csv(path, pd_curves, config_hash, master_seed):
    lines = _header_lines(config_hash, master_seed, "pd")
    lines.append("detector,sinr_db,pd,stderr,trials")
    for det, points in pd_curves.items():
        for p in points:
            lines.append(
                f"{det},{fmt_float(p.sinr_db)},{fmt_float(p.pd)},"
                f"{fmt_float(p.stderr)},{p.n_trials}"
            )
    _write_lines(path, lines)


def write_rmse_csv(path, rmse_curves, config_hash, master_seed):
    lines = _header_lines(config_hash, master_seed, "rmse")
    lines.append("selector,sinr_db,rmse_l,rmse_h,rmse_joint,trials")
    for sel, points in rmse_curves.items():
        for p in points:
            lines.append(
                f"{sel},{fmt_float(p.sinr_db)},{fmt_float(p.rmse_l)},"
                f"{fmt_float(p.rmse_h)},{fmt_float(p.rmse_joint)},{p.n_trials}"
            )
    _write_lines(path, lines)


def write_report_json(path, report):
    """Serialize an experiment report; hash and seed live in the JSON body
    since JSON admits no comment header."""
    payload = report.payload(include_timing=True)
    payload["master_seed"] = report.config.master_seed
    payload["version"] = __version__
    _write_lines(path, [json.dumps(payload, indent=2, sort_keys=False)])


def write_manifest(out_dir, command, config_path, config_sha, config,
                   config_hash):
    manifest = {
        "version": __version__,
        "command": command,
        "config_path": str(config_path),
        "config_file_sha256": config_sha,
        "effective_config": dataclasses.asdict(config),
        "config_hash": config_hash,
        "master_seed": config.master_seed,
        "out_dir": str(out_dir),
    }
    path = os.path.join(out_dir, "manifest.json")
    _write_lines(path, [json.dumps(manifest, indent=2)])
    return path


def read_manifest(out_dir):
    path = os.path.join(out_dir, "manifest.json")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigMismatch(f"no manifest.json in {out_dir}") from exc


def manifest_config(manifest):
    """Rebuild the effective ExperimentConfig recorded in a manifest."""
    eff = manifest["effective_config"]
    scen = ScenarioConfig(**eff["scenario"])
    rest = {k: v for k, v in eff.items() if k != "scenario"}
    return ExperimentConfig(scenario=scen, **rest)


def verify_out_dir(out_dir, config_path):
    """Cross-check a result directory against its manifest and config file.

    Recomputes the config hash from the manifest's effective config,
    recomputes the config file digest, and checks the header of every
    known artifact. Raises ConfigMismatch on the first inconsistency;
    returns the list of checked files.
    """
    manifest = read_manifest(out_dir)
    config = manifest_config(manifest)
    recomputed = experiment_config_hash(config)
    if recomputed != manifest["config_hash"]:
        raise ConfigMismatch(
            f"manifest config_hash {manifest['config_hash']} does not match "
            f"recomputed {recomputed}"
        )
    if config_path is not None:
        sha = file_sha256(config_path)
        if sha != manifest["config_file_sha256"]:
            raise ConfigMismatch(
                f"config file {config_path} changed since the run "
                f"(sha256 {sha[:12]}.. vs recorded "
                f"{manifest['config_file_sha256'][:12]}..)"
            )
    checked = ["manifest.json"]
    for name in ("thresholds.csv", "pd_curves.csv", "rmse_curves.csv"):
        path = os.path.join(out_dir, name)
        if not os.path.exists(path):
            continue
        meta = parse_artifact_header(path)
        if meta.get("config_hash") != manifest["config_hash"]:
            raise ConfigMismatch(
                f"{name} carries config_hash {meta.get('config_hash')}, "
                f"expected {manifest['config_hash']}"
            )
        if "master_seed" not in meta or not meta["master_seed"].lstrip("-").isdigit():
            raise ConfigMismatch(f"{name} has no valid master_seed header")
        checked.append(name)
    report_path = os.path.join(out_dir, "report.json")
    if os.path.exists(report_path):
        with open(report_path, "r", encoding="utf-8") as fh:
            report = json.load(fh)
        if report.get("config_hash") != manifest["config_hash"]:
            raise ConfigMismatch(
                f"report.json carries config_hash {report.get('config_hash')}, "
                f"expected {manifest['config_hash']}"
            )
        checked.append("report.json")
    return checked
