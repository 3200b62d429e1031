"""Command-line interface with deterministic file output.

Commands: ``signal``, ``sweep``, ``estimate``, ``decohere``, ``calibrate``.
Interface units are MHz for drive frequencies (ordinary, i.e. Omega/2pi),
microseconds for times and millitesla for fields; everything is converted
to internal angular-frequency units at this boundary.

Configuration comes from an optional flat key-value file (``key = value``
per line, ``#`` comments) selected with ``--config``; command-line options
override file values.  Unknown keys are rejected.  Every output file embeds
a comment block with the fully resolved configuration and the tool version,
and all numbers are printed with 9 significant digits, so identical config
plus seed yields byte-identical output.

Exit codes: 0 ok, 2 configuration error, 3 computation error, 4 partial
sweep failure (file still written), 5 unresolvable estimate.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np

from . import __version__, analytic, harness, noise as noise_mod, sequences
from .analytic import DynamicModel, GeometricModel, HyperfineModel
from .constants import TWO_PI, PhysicalConstants, angular_from_mhz
from .errors import PhasemagError, Unresolvable
from .harness import SweepSpec, fmt
from .noise import Lorentzian

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_COMPUTE = 3
EXIT_PARTIAL = 4
EXIT_UNRESOLVABLE = 5

SIGNAL_HEADER = "B_mT,P,engine,protocol,omega_MHz,N,T_us"


class ConfigError(Exception):
    pass


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected boolean, got {text!r}")


def _parse_float_list(text: str):
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _parse_int_list(text: str):
    try:
        return [int(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from exc


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` file; '#' starts a comment; keys must be known."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        val = val.strip()
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = val
    return values


# per-command key registry: name -> (converter, default)
_COMMON_KEYS = {
    "seed": (int, 0),
    "workers": (int, 1),
    "out": (str, "-"),
}

_NOISE_KEYS = {
    "t2star_us": (float, None),
    "t2_us": (float, None),
    "delta_rad_s": (float, None),
    "tau_c_us": (float, None),
}

_COMMAND_KEYS = {
    "signal": {
        **_COMMON_KEYS, **_NOISE_KEYS,
        "protocol": (str, None),
        "engine": (str, "analytic"),
        "omega_mhz": (float, None),
        "n": (int, None),
        "t_us": (float, None),
        "b_start_mt": (float, 0.0),
        "b_stop_mt": (float, None),
        "b_points": (int, None),
        "hyperfine": (_parse_bool, False),
        "ensemble": (int, 200),
        "gamma_ghz_per_t": (float, 28.0),
        "hyperfine_mhz": (float, 2.16),
    },
    "sweep": {
        **_COMMON_KEYS, **_NOISE_KEYS,
        "protocol": (str, None),
        "engine": (str, "analytic"),
        "omega_mhz_list": (_parse_float_list, None),
        "n_list": (_parse_int_list, None),
        "t_us_list": (_parse_float_list, None),
        "b_start_mt": (float, 0.0),
        "b_stop_mt": (float, None),
        "b_points": (int, None),
        "sigma_p": (float, 1.0),
        "overhead_us": (float, 0.0),
        "ensemble": (int, 200),
        "fit": (_parse_bool, True),
        "gamma_ghz_per_t": (float, 28.0),
    },
    "estimate": {
        **_COMMON_KEYS,
        "protocol": (str, None),
        "p": (float, None),
        "slope_per_mt": (float, None),
        "sigma": (float, 0.0),
        "omega_mhz": (float, None),
        "n": (int, None),
        "t_us": (float, None),
        "window_start_mt": (float, 0.0),
        "window_stop_mt": (float, None),
        "gamma_ghz_per_t": (float, 28.0),
    },
    "decohere": {
        **_COMMON_KEYS, **_NOISE_KEYS,
        "a_list": (_parse_float_list, None),
        "engine": (str, "eq3"),
        "ensemble": (int, 100),
        "overlay_a": (float, None),
        "overlay_t_us": (float, None),
        "gamma_ghz_per_t": (float, 28.0),
    },
    "calibrate": {
        **_COMMON_KEYS,
        "t2star_us": (float, None),
        "t2_us": (float, None),
    },
}

_DEFAULT_A_LIST = [0.01, 0.0215, 0.0464, 0.1, 0.147, 0.215,
                   0.316, 0.464, 0.681, 1.0, 1.47, 2.0]


def _resolve(command: str, config_path: Optional[str], overrides: dict) -> dict:
    registry = _COMMAND_KEYS[command]
    resolved = {k: default for k, (_, default) in registry.items()}
    if config_path:
        raw = read_config_file(config_path)
        for key, text in raw.items():
            if key not in registry:
                raise ConfigError(f"unknown config key {key!r} for command {command!r}")
            conv, _ = registry[key]
            try:
                resolved[key] = conv(text)
            except (ValueError, ConfigError) as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
    for key, val in overrides.items():
        if val is None:
            continue
        if key not in registry:
            raise ConfigError(f"unknown option {key!r} for command {command!r}")
        resolved[key] = val
    return resolved


def _require(cfg: dict, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise ConfigError(f"missing required key {k!r}")


def _constants(cfg: dict) -> PhysicalConstants:
    gamma = TWO_PI * cfg.get("gamma_ghz_per_t", 28.0) * 1e9
    hf = TWO_PI * cfg.get("hyperfine_mhz", 2.16) * 1e6
    return PhysicalConstants(gamma=gamma, hyperfine_splitting=hf)


def _noise_model(cfg: dict) -> Optional[Lorentzian]:
    if cfg.get("delta_rad_s") is not None or cfg.get("tau_c_us") is not None:
        _require(cfg, "delta_rad_s", "tau_c_us")
        return Lorentzian(delta=cfg["delta_rad_s"], tau_c=cfg["tau_c_us"] * 1e-6)
    if cfg.get("t2star_us") is not None or cfg.get("t2_us") is not None:
        _require(cfg, "t2star_us", "t2_us")
        return noise_mod.calibrate_noise(cfg["t2star_us"] * 1e-6, cfg["t2_us"] * 1e-6)
    return None


def _header_lines(command: str, cfg: dict) -> list[str]:
    lines = [f"# phasemag {__version__}", f"# command = {command}"]
    for key in sorted(cfg):
        val = cfg[key]
        if val is None:
            continue
        if isinstance(val, bool):
            text = "true" if val else "false"
        elif isinstance(val, float):
            text = fmt(val)
        elif isinstance(val, list):
            text = ",".join(fmt(v) if isinstance(v, float) else str(v) for v in val)
        else:
            text = str(val)
        lines.append(f"# {key} = {text}")
    return lines


def _write_text(path: str, text: str):
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_signal(cfg: dict) -> int:
    _require(cfg, "protocol", "b_stop_mt", "b_points")
    protocol = cfg["protocol"]
    engine = cfg["engine"]
    if protocol not in ("ramsey", "hahn", "berry"):
        raise ConfigError(f"unknown protocol {protocol!r}")
    if engine not in ("analytic", "numeric", "numeric+noise"):
        raise ConfigError(f"unknown engine {engine!r}")
    if protocol == "hahn" and engine == "analytic":
        raise ConfigError("analytic engine is not defined for the echo protocol")
    if cfg["b_points"] < 1:
        raise ConfigError("b_points must be >= 1")
    if protocol == "berry":
        _require(cfg, "omega_mhz", "n", "t_us")
    else:
        _require(cfg, "t_us")
    if cfg["hyperfine"] and not (protocol == "ramsey" and engine == "analytic"):
        raise ConfigError("hyperfine averaging is implemented for analytic ramsey only")

    constants = _constants(cfg)
    duration = cfg["t_us"] * 1e-6
    b_grid = np.linspace(cfg["b_start_mt"], cfg["b_stop_mt"], cfg["b_points"]) * 1e-3

    S = _noise_model(cfg)
    if engine == "numeric+noise" and S is None:
        raise ConfigError("numeric+noise engine needs t2star_us/t2_us or delta_rad_s/tau_c_us")

    if engine == "analytic":
        if protocol == "ramsey":
            model = DynamicModel(duration, constants.gamma)
            if cfg["hyperfine"]:
                h = HyperfineModel.triplet(constants)
                p = analytic.hyperfine_average(
                    lambda off, b: np.cos((constants.gamma * b + off) * duration),
                    h, b_grid)
            else:
                p = analytic.ramsey_signal(model, b_grid)
        else:
            model = GeometricModel(angular_from_mhz(cfg["omega_mhz"]), cfg["n"],
                                   constants.gamma)
            p = analytic.berry_signal(model, b_grid)
    else:
        if protocol == "ramsey":
            plan = sequences.build_ramsey(duration)
        elif protocol == "hahn":
            plan = sequences.build_hahn(duration)
        else:
            plan = sequences.build_berry(angular_from_mhz(cfg["omega_mhz"]),
                                         cfg["n"], duration)
        if engine == "numeric":
            p = sequences.execute_batch(plan, b_grid, constants=constants)
        else:
            total = np.zeros_like(b_grid)
            dt = min(S.tau_c / 10.0, duration / 256.0)
            for k in range(cfg["ensemble"]):
                traj = harness._seeded_trajectory(S, duration, dt,
                                                  [cfg["seed"], k],
                                                  constants.gamma)
                total += sequences.execute_batch(plan, b_grid,
                                                 noise_trajectory=traj,
                                                 constants=constants)
            p = total / cfg["ensemble"]

    lines = _header_lines("signal", cfg)
    lines.append(SIGNAL_HEADER)
    omega_txt = fmt(cfg["omega_mhz"]) if protocol == "berry" else ""
    n_txt = str(cfg["n"]) if protocol == "berry" else ""
    for b, pv in zip(b_grid, p):
        lines.append(",".join([fmt(b * 1e3), fmt(pv), engine, protocol,
                               omega_txt, n_txt, fmt(duration * 1e6)]))
    _write_text(cfg["out"], "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_sweep(cfg: dict) -> int:
    _require(cfg, "protocol", "t_us_list", "b_stop_mt", "b_points")
    if cfg["b_points"] < 2:
        raise ConfigError("b_points must be >= 2 for sweeps")
    constants = _constants(cfg)
    S = _noise_model(cfg)
    times = [t * 1e-6 for t in cfg["t_us_list"]]
    omegas = ([angular_from_mhz(f) for f in cfg["omega_mhz_list"]]
              if cfg.get("omega_mhz_list") else None)
    b_grid = list(np.linspace(cfg["b_start_mt"], cfg["b_stop_mt"],
                              cfg["b_points"]) * 1e-3)
    try:
        spec = SweepSpec(protocol=cfg["protocol"], times=times, b_grid=b_grid,
                         omegas=omegas, n_rotations=cfg.get("n_list"),
                         engine=cfg["engine"], noise=S, seed=cfg["seed"],
                         ensemble=cfg["ensemble"], sigma_p=cfg["sigma_p"],
                         overhead=cfg["overhead_us"] * 1e-6,
                         constants=constants, workers=cfg["workers"])
    except PhasemagError as exc:
        raise ConfigError(str(exc)) from exc

    result = harness.run_sweep(spec)
    fits = []
    if cfg["fit"]:
        controls = []
        if len(set(times)) >= 3:
            controls.append("duration")
        if spec.protocol == "berry":
            if omegas and len(set(omegas)) >= 3:
                controls.append("omega")
            if cfg.get("n_list") and len(set(cfg["n_list"])) >= 3:
                controls.append("n_rotations")
        if controls:
            for response in ("eta", "b_max"):
                try:
                    fits.append(harness.fit_power_law(result, response, controls))
                except PhasemagError:
                    pass
    text = "\n".join(_header_lines("sweep", cfg)) + "\n" + harness.to_jsonl(result, fits)
    _write_text(cfg["out"], text)
    return EXIT_OK if result.ok else EXIT_PARTIAL


def cmd_estimate(cfg: dict) -> int:
    _require(cfg, "protocol", "p")
    constants = _constants(cfg)
    out = []
    if cfg["protocol"] == "berry":
        _require(cfg, "omega_mhz", "n", "slope_per_mt")
        model = GeometricModel(angular_from_mhz(cfg["omega_mhz"]), cfg["n"],
                               constants.gamma)
        from .estimate import Measurement, estimate_geometric, geometric_candidates
        meas = Measurement(p=cfg["p"], slope=cfg["slope_per_mt"] * 1e3,
                           sigma=cfg["sigma"])
        cands = geometric_candidates(model, max(-1.0, min(1.0, cfg["p"])))
        out.append("candidates_mT = " + ",".join(fmt(b * 1e3) for b, _ in cands))
        try:
            est = estimate_geometric(model, meas)
        except Unresolvable as exc:
            out.append(f"unresolvable: {exc}")
            _write_text(cfg["out"], "\n".join(_header_lines("estimate", cfg) + out) + "\n")
            print("\n".join(out))
            return EXIT_UNRESOLVABLE
        out.append(f"B_hat_mT = {fmt(est.b_hat * 1e3)}")
        out.append(f"lobe_index = {est.lobe_index}")
        out.append(f"candidates_considered = {est.candidates_considered}")
        out.append(f"confidence = {fmt(est.confidence)}")
    elif cfg["protocol"] == "ramsey":
        _require(cfg, "t_us", "window_stop_mt")
        model = DynamicModel(cfg["t_us"] * 1e-6, constants.gamma)
        from .estimate import Measurement, estimate_dynamic
        meas = Measurement(p=cfg["p"], slope=(None if cfg.get("slope_per_mt") is None
                                              else cfg["slope_per_mt"] * 1e3),
                           sigma=cfg["sigma"])
        ests = estimate_dynamic(model, meas,
                                (cfg["window_start_mt"] * 1e-3,
                                 cfg["window_stop_mt"] * 1e-3))
        out.append(f"candidates_considered = {len(ests)}")
        for e in ests:
            out.append(f"candidate_mT = {fmt(e.b_hat * 1e3)} fringe = {e.lobe_index} "
                       f"confidence = {fmt(e.confidence)}")
    else:
        raise ConfigError(f"estimation supports ramsey or berry, got {cfg['protocol']!r}")
    _write_text(cfg["out"], "\n".join(_header_lines("estimate", cfg) + out) + "\n")
    if cfg["out"] != "-":
        print("\n".join(out))
    return EXIT_OK


def cmd_decohere(cfg: dict) -> int:
    constants = _constants(cfg)
    S = _noise_model(cfg)
    if S is None:
        raise ConfigError("decohere needs t2star_us/t2_us or delta_rad_s/tau_c_us")
    if cfg["out"] == "-":
        raise ConfigError("decohere writes multiple files; --out is required")
    a_list = cfg.get("a_list") or list(_DEFAULT_A_LIST)
    engine = cfg["engine"]
    if engine not in ("eq3", "monte-carlo"):
        raise ConfigError(f"unknown engine {engine!r}")

    header = _header_lines("decohere", cfg)

    # (T, W) curves per A
    lines = list(header) + ["A,T_us,W"]
    for a in a_list:
        grid = harness._auto_decay_grid(S, a, None)
        curve = noise_mod.coherence_decay(S, a, grid)
        for t, w in zip(curve.times, curve.values):
            lines.append(f"{fmt(a)},{fmt(t * 1e6)},{fmt(w)}")
    _write_text(cfg["out"] + "_coherence.csv", "\n".join(lines) + "\n")

    # regime table
    rows = harness.decoherence_regime_scan(a_list, S, engine=engine,
                                           ensemble=cfg["ensemble"],
                                           seed=cfg["seed"], constants=constants)
    lines = list(header) + ["A,T2g_us,residual,regime,status"]
    for r in rows:
        lines.append(",".join([fmt(r.a_value),
                               fmt(None if r.t2g is None else r.t2g * 1e6),
                               fmt(r.residual), r.regime, r.status]))
    _write_text(cfg["out"] + "_regimes.csv", "\n".join(lines) + "\n")

    # spectral overlay
    overlay_a = cfg.get("overlay_a")
    overlay_a = a_list[0] if overlay_a is None else overlay_a
    t_over = (cfg.get("overlay_t_us") or
              (cfg["t2star_us"] / 2.0 if cfg.get("t2star_us") else 25.0)) * 1e-6
    w0 = TWO_PI / t_over
    omega_grid = np.geomspace(1e-3 * w0, 1e2 * w0, 200)
    ov = noise_mod.spectral_overlay(S, overlay_a, t_over, omega_grid)
    lines = list(header) + ["omega_rad_s,S,geometric_weight,dynamic_weight"]
    for i in range(len(ov.omega)):
        lines.append(",".join([fmt(ov.omega[i]), fmt(ov.psd[i]),
                               fmt(ov.geometric_weight[i]),
                               fmt(ov.dynamic_weight[i])]))
    _write_text(cfg["out"] + "_overlay.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_calibrate(cfg: dict) -> int:
    _require(cfg, "t2star_us", "t2_us")
    S = noise_mod.calibrate_noise(cfg["t2star_us"] * 1e-6, cfg["t2_us"] * 1e-6)
    lines = _header_lines("calibrate", cfg)
    lines.append(f"delta_rad_s = {fmt(S.delta)}")
    lines.append(f"delta_over_2pi_kHz = {fmt(S.delta / TWO_PI / 1e3)}")
    lines.append(f"tau_c_us = {fmt(S.tau_c * 1e6)}")
    _write_text(cfg["out"], "\n".join(lines) + "\n")
    if cfg["out"] != "-":
        print(f"delta_rad_s = {fmt(S.delta)}")
        print(f"tau_c_us = {fmt(S.tau_c * 1e6)}")
    return EXIT_OK


_COMMANDS = {
    "signal": cmd_signal,
    "sweep": cmd_sweep,
    "estimate": cmd_estimate,
    "decohere": cmd_decohere,
    "calibrate": cmd_calibrate,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasemag",
        description="Dynamic- and geometric-phase magnetometry simulator")
    parser.add_argument("--version", action="version",
                        version=f"phasemag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, registry in _COMMAND_KEYS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", default=None, help="key = value config file")
        for key, (conv, _) in registry.items():
            if conv is _parse_bool:
                p.add_argument(f"--{key.replace('_', '-')}", dest=key,
                               default=None, type=_parse_bool, metavar="BOOL")
            elif conv in (_parse_float_list, _parse_int_list):
                p.add_argument(f"--{key.replace('_', '-')}", dest=key,
                               default=None, type=conv, metavar="LIST")
            else:
                p.add_argument(f"--{key.replace('_', '-')}", dest=key,
                               default=None, type=conv)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage, matching the config error code
        return int(exc.code) if exc.code else 0
    overrides = {k: v for k, v in vars(args).items()
                 if k not in ("command", "config")}
    try:
        cfg = _resolve(args.command, args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Unresolvable as exc:
        print(f"unresolvable: {exc}", file=sys.stderr)
        return EXIT_UNRESOLVABLE
    except PhasemagError as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
