"""Command-line front end: config files in, CSV artifacts out.

Four subcommands cover the workflows: `analyze` prices a fixed policy,
`optimize` searches for the best one, `simulate` grades the analytics
against a Monte Carlo run, and `sweep` walks one parameter axis.  Every
run drops a manifest next to its outputs so results are reproducible
from the artifacts alone; reruns with identical inputs are byte
identical.

Exit codes: 0 success, 2 config/validation error, 3 infeasible
optimization, 4 simulation-vs-analytic comparison failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import json
import math
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .analysis import NetworkAnalysis, analyze
from .model import (NetworkModel, PolicyParams, SuProfile, SystemConfig,
                    ValidationError, validate)
from .optimizer import SearchConfig, SuEvaluator, solve_p1
from .sim import compare, simulate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_MISMATCH = 4

_SYSTEM_KEYS = {
    "slot_duration": float,       # s
    "sensing_duration": float,    # s
    "probing_duration": float,    # s
    "sampling_frequency": float,  # Hz
    "bandwidth": float,           # Hz
    "energy_unit": float,         # J
    "battery_cells": int,
    "probe_cells": int,
    "prior_idle": float,
    "target_detection": float,
    "pu_power": float,            # W
    "pu_ap_channel_var": float,
    "interference_cap": float,    # W
}

_PROFILE_KEYS = {
    "su_ap_var": float,
    "pu_su_var": float,
    "su_pu_var": float,
    "sensing_noise": float,   # W
    "ap_noise": float,        # W
    "harvest_rate": float,    # cells/slot
}

_POLICY_KEYS = ("omega", "theta")

_SEARCH_KEYS = {
    "omega_points": int,
    "theta_points": int,
    "theta_floor": float,
    "theta_cap": float,
    "refine_levels": int,
    "refine_points": int,
    "top_candidates": int,
    "max_sweeps": int,
    "sweep_tol": float,
}

SWEEP_AXES = ("tau_s", "alpha_t", "omega", "theta", "K", "rho", "I_av")


class ConfigError(Exception):
    """Config file could not be turned into a valid model."""

    def __init__(self, problems: Sequence[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclasses.dataclass
class LoadedConfig:
    """Everything a subcommand needs, resolved from one config file."""

    model: NetworkModel
    policies: List[Optional[PolicyParams]]
    search: SearchConfig
    snapshot: Dict[str, Dict[str, object]]

    def require_policies(self) -> List[PolicyParams]:
        missing = [i + 1 for i, p in enumerate(self.policies) if p is None]
        if missing:
            raise ConfigError(
                [f"[su.{i}] needs omega and theta for this command"
                 for i in missing])
        return list(self.policies)  # type: ignore[return-value]


def _line_of(text: str, key: str) -> Optional[int]:
    for n, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith(key) and "=" in stripped:
            return n
    return None


def _read_section(parser: configparser.ConfigParser, section: str,
                  keys: Dict[str, type], extra_ok: Sequence[str],
                  text: str, problems: List[str]) -> Dict[str, object]:
    values: Dict[str, object] = {}
    for key, raw in parser.items(section):
        where = _line_of(text, key)
        at = f" (line {where})" if where else ""
        if key in keys:
            caster = keys[key]
            try:
                values[key] = caster(raw) if caster is not int \
                    else int(float(raw))
            except ValueError:
                problems.append(
                    f"[{section}] {key}: cannot parse {raw!r}{at}")
        elif key in extra_ok:
            try:
                values[key] = float(raw)
            except ValueError:
                problems.append(
                    f"[{section}] {key}: cannot parse {raw!r}{at}")
        else:
            problems.append(f"[{section}] unknown key {key!r}{at}")
    return values


def load_config(path: str) -> LoadedConfig:
    """Parse and validate a run configuration.

    Sections: [system] for shared constants, [su.1]..[su.N] for per-user
    statistics plus an optional (omega, theta) policy, [search] for
    optimizer knobs.  All values are plain numbers in SI base units.
    Raises ConfigError listing every problem found, with line numbers
    where they can be attributed.
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError([str(exc)]) from exc

    problems: List[str] = []
    system_vals = {}
    if parser.has_section("system"):
        system_vals = _read_section(parser, "system", _SYSTEM_KEYS, (),
                                    text, problems)

    su_sections = sorted(
        (s for s in parser.sections() if s.startswith("su.")),
        key=lambda s: s[3:])
    indices = []
    for section in su_sections:
        tail = section[3:]
        if not tail.isdigit():
            problems.append(f"[{section}] user sections are [su.1]..[su.N]")
        else:
            indices.append(int(tail))
    if not indices:
        problems.append("no [su.N] sections: at least one user is required")
    elif sorted(indices) != list(range(1, len(indices) + 1)):
        problems.append("user sections must be numbered consecutively "
                        f"from 1, got {sorted(indices)}")

    profiles: List[SuProfile] = []
    policies: List[Optional[PolicyParams]] = []
    su_snapshot: Dict[str, Dict[str, object]] = {}
    for idx in sorted(set(indices)):
        section = f"su.{idx}"
        vals = _read_section(parser, section, _PROFILE_KEYS, _POLICY_KEYS,
                             text, problems)
        policy_vals = {k: vals.pop(k) for k in _POLICY_KEYS if k in vals}
        try:
            profiles.append(SuProfile(**vals))
        except TypeError as exc:
            problems.append(f"[{section}] {exc}")
            profiles.append(SuProfile())
        if len(policy_vals) == 2:
            policies.append(PolicyParams(**policy_vals))
        elif len(policy_vals) == 1:
            problems.append(f"[{section}] omega and theta go together; "
                            f"got only {list(policy_vals)[0]!r}")
            policies.append(None)
        else:
            policies.append(None)
        su_snapshot[section] = {**vals, **policy_vals}

    search_vals: Dict[str, object] = {}
    if parser.has_section("search"):
        search_vals = _read_section(parser, "search", _SEARCH_KEYS, (),
                                    text, problems)

    known = {"system", "search"} | set(su_sections)
    for section in parser.sections():
        if section not in known:
            problems.append(f"unknown section [{section}]")

    if problems:
        raise ConfigError(problems)

    try:
        config = SystemConfig(**system_vals)
    except TypeError as exc:
        raise ConfigError([f"[system] {exc}"]) from exc
    try:
        model = validate(config, profiles)
    except ValidationError as exc:
        raise ConfigError(list(exc.errors)) from exc
    search = SearchConfig(**search_vals)  # type: ignore[arg-type]

    snapshot = {
        "system": {k: getattr(config, k) for k in _SYSTEM_KEYS},
        **su_snapshot,
        "search": {f.name: getattr(search, f.name)
                   for f in dataclasses.fields(search)},
    }
    return LoadedConfig(model=model, policies=policies, search=search,
                        snapshot=snapshot)


def _fmt(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".12g")
    if value is None:
        return ""
    return str(value)


def _write_csv(path: str, header: Sequence[str],
               rows: Sequence[Sequence[object]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _write_manifest(out_dir: str, command: str, loaded: LoadedConfig,
                    outputs: Sequence[str], **extras: object) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "config": loaded.snapshot,
        "outputs": sorted(outputs),
    }
    manifest.update(extras)

    def _default(obj):
        if isinstance(obj, float) and math.isinf(obj):
            return "inf"
        raise TypeError(f"not JSON serializable: {obj!r}")

    path = os.path.join(out_dir, "run_manifest.json")
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True,
                  allow_nan=True, default=_default)
        handle.write("\n")


_METRIC_COLUMNS = ("omega", "theta", "rate_lb", "interference",
                   "avg_energy", "battery_outage", "transmission_outage")


def _analysis_rows(analysis: NetworkAnalysis) -> List[List[object]]:
    rows: List[List[object]] = []
    for su in analysis.sus:
        rows.append(["su%d" % (su.index + 1), su.params.omega,
                     su.params.theta, su.rate.total, su.interference,
                     su.chain.avg_energy, su.chain.outage,
                     su.transmission_outage])
    rows.append(["total", None, None, analysis.breakdown.sum_rate,
                 analysis.breakdown.aic_lhs, None, None, None])
    return rows


def cmd_analyze(args: argparse.Namespace, loaded: LoadedConfig) -> int:
    policies = loaded.require_policies()
    analysis = analyze(loaded.model, policies,
                       ideal_sensing=args.ideal_sensing)
    outputs = ["metrics.csv", "zeta.csv"]
    _write_csv(os.path.join(args.out, "metrics.csv"),
               ("su",) + _METRIC_COLUMNS, _analysis_rows(analysis))
    zeta_rows = [["su%d" % (su.index + 1), level, prob]
                 for su in analysis.sus
                 for level, prob in enumerate(su.chain.steady_state)]
    _write_csv(os.path.join(args.out, "zeta.csv"),
               ("su", "level", "probability"), zeta_rows)
    if args.dump_matrix:
        for su in analysis.sus:
            name = "matrix_su%d.csv" % (su.index + 1)
            outputs.append(name)
            _write_csv(os.path.join(args.out, name),
                       ["to\\from"] + [str(j) for j in
                                       range(su.chain.matrix.shape[1])],
                       [[i] + list(row)
                        for i, row in enumerate(su.chain.matrix)])
    _write_manifest(args.out, "analyze", loaded, outputs,
                    ideal_sensing=args.ideal_sensing)
    for su in analysis.sus:
        print(f"su{su.index + 1}: rate_lb={su.rate.total:.6g} bit/s "
              f"interference={su.interference:.6g} W "
              f"avg_energy={su.chain.avg_energy:.6g} cells")
    print(f"total: rate_lb={analysis.breakdown.sum_rate:.6g} bit/s "
          f"aic_lhs={analysis.breakdown.aic_lhs:.6g} W "
          f"satisfied={analysis.breakdown.aic_satisfied}")
    return EXIT_OK


def _search_with_flags(args: argparse.Namespace,
                       loaded: LoadedConfig) -> SearchConfig:
    search = loaded.search
    updates = {}
    if args.grid_omega is not None:
        updates["omega_points"] = args.grid_omega
    if args.grid_theta is not None:
        updates["theta_points"] = args.grid_theta
    if args.refine is not None:
        updates["refine_levels"] = args.refine
    return dataclasses.replace(search, **updates) if updates else search


def cmd_optimize(args: argparse.Namespace, loaded: LoadedConfig) -> int:
    search = _search_with_flags(args, loaded)
    result = solve_p1(loaded.model, search,
                      ideal_sensing=args.ideal_sensing)
    rows: List[List[object]] = []
    for i, point in enumerate(result.per_su):
        rows.append(["su%d" % (i + 1), point.params.omega,
                     point.params.theta, point.rate, point.interference,
                     point.avg_energy, point.battery_outage,
                     point.transmission_outage])
    rows.append(["total", None, None, result.sum_rate, result.aic_lhs,
                 None, None, None])
    _write_csv(os.path.join(args.out, "optimum.csv"),
               ("su",) + _METRIC_COLUMNS, rows)
    _write_manifest(args.out, "optimize", loaded, ["optimum.csv"],
                    ideal_sensing=args.ideal_sensing,
                    feasible=result.feasible,
                    evaluations=result.evaluations, sweeps=result.sweeps)
    status = "feasible" if result.feasible else "INFEASIBLE"
    print(f"optimum ({status}): rate_lb={result.sum_rate:.6g} bit/s "
          f"aic_lhs={result.aic_lhs:.6g} W "
          f"cap={loaded.model.config.interference_cap:.6g} W")
    for i, point in enumerate(result.per_su):
        print(f"  su{i + 1}: omega={point.params.omega:.6g} "
              f"theta={point.params.theta:.6g} rate={point.rate:.6g}")
    if not result.feasible:
        print("no policy satisfies the interference cap; "
              "least-loading point reported", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, loaded: LoadedConfig) -> int:
    if args.slots < 1:
        raise ConfigError([f"--slots must be >= 1, got {args.slots}"])
    policies = loaded.require_policies()
    analysis = analyze(loaded.model, policies,
                       ideal_sensing=args.ideal_sensing)
    trace = simulate(loaded.model, policies, slots=args.slots,
                     seed=args.seed, ideal_sensing=args.ideal_sensing,
                     assume_idle_gains=args.assume_idle_gains)
    report = compare(trace, analysis)
    rows = [[("net" if c.su_index is None else "su%d" % (c.su_index + 1)),
             c.name, c.simulated, c.analytic, c.deviation, c.tolerance,
             c.kind, c.passed] for c in report.checks]
    outputs = ["compare.csv"]
    _write_csv(os.path.join(args.out, "compare.csv"),
               ("scope", "quantity", "simulated", "analytic", "deviation",
                "tolerance", "kind", "passed"), rows)
    if args.dump_trace:
        for su in trace.sus:
            name = "trace_su%d.csv" % (su.index + 1)
            outputs.append(name)
            per_slot = zip(range(su.slots), su.busy, su.sensed_busy,
                           su.state_before, su.probed, su.gain, su.spent,
                           su.harvested, su.state_after, su.rate_sample,
                           su.interference_sample)
            _write_csv(os.path.join(args.out, name),
                       ("slot", "busy", "sensed_busy", "state_before",
                        "probed", "gain", "spent", "harvested",
                        "state_after", "rate_sample",
                        "interference_sample"),
                       ([s, int(b), int(sb), st, int(p), g, sp, h, sa, r, w]
                        for s, b, sb, st, p, g, sp, h, sa, r, w in per_slot))
    _write_manifest(args.out, "simulate", loaded, outputs, seed=args.seed,
                    slots=args.slots, ideal_sensing=args.ideal_sensing,
                    assume_idle_gains=args.assume_idle_gains,
                    passed=report.passed)
    for line in report.lines():
        print(line)
    skips = sum(su.probe_skips for su in trace.sus)
    if skips:
        print(f"note: {skips} sensed-idle slots lacked the probe reserve "
              "and were skipped")
    return EXIT_OK if report.passed else EXIT_MISMATCH


def _sweep_model(loaded: LoadedConfig, axis: str,
                 value: float) -> NetworkModel:
    config = loaded.model.config
    profiles = loaded.model.profiles
    if axis == "tau_s":
        config = dataclasses.replace(config, sensing_duration=value)
    elif axis == "alpha_t":
        config = dataclasses.replace(config, probe_cells=int(round(value)))
    elif axis == "K":
        config = dataclasses.replace(config, battery_cells=int(round(value)))
    elif axis == "I_av":
        config = dataclasses.replace(config, interference_cap=value)
    elif axis == "rho":
        profiles = tuple(dataclasses.replace(p, harvest_rate=value)
                         for p in profiles)
    return validate(config, profiles)


def _sweep_policies(loaded: LoadedConfig, axis: str,
                    value: float) -> List[PolicyParams]:
    policies = loaded.require_policies()
    if axis == "omega":
        return [dataclasses.replace(p, omega=value) for p in policies]
    if axis == "theta":
        return [dataclasses.replace(p, theta=value) for p in policies]
    return policies


def cmd_sweep(args: argparse.Namespace, loaded: LoadedConfig) -> int:
    if args.points < 2:
        raise ConfigError([f"--points must be >= 2, got {args.points}"])
    values = np.linspace(args.sweep_from, args.to, args.points)
    n_users = loaded.model.n_users
    header: List[str] = [args.axis, "status", "rate_lb", "aic_lhs"]
    for i in range(1, n_users + 1):
        header += [f"rate_su{i}", f"omega_su{i}", f"theta_su{i}",
                   f"avg_energy_su{i}", f"battery_outage_su{i}",
                   f"transmission_outage_su{i}"]

    search = _search_with_flags(args, loaded)
    # Physics is unchanged along these axes, so evaluators can be shared.
    shared_evaluators = None
    if args.optimize and args.axis in ("I_av",):
        shared_evaluators = [SuEvaluator(loaded.model, i,
                                         ideal_sensing=args.ideal_sensing)
                             for i in range(n_users)]

    rows: List[List[object]] = []
    for value in values:
        row: List[object] = [value]
        try:
            model = _sweep_model(loaded, args.axis, value)
            if args.optimize:
                result = solve_p1(model, search,
                                  ideal_sensing=args.ideal_sensing,
                                  evaluators=shared_evaluators)
                status = "ok" if result.feasible else "infeasible"
                row += [status, result.sum_rate, result.aic_lhs]
                for point in result.per_su:
                    row += [point.rate, point.params.omega,
                            point.params.theta, point.avg_energy,
                            point.battery_outage, point.transmission_outage]
            else:
                policies = _sweep_policies(loaded, args.axis, value)
                analysis = analyze(model, policies,
                                   ideal_sensing=args.ideal_sensing)
                row += ["ok", analysis.breakdown.sum_rate,
                        analysis.breakdown.aic_lhs]
                for su in analysis.sus:
                    row += [su.rate.total, su.params.omega, su.params.theta,
                            su.chain.avg_energy, su.chain.outage,
                            su.transmission_outage]
        except (ValidationError, ConfigError) as exc:
            note = str(exc).replace(",", ";")
            row = [value, f"invalid: {note}"] + [None] * (len(header) - 2)
        rows.append(row)

    _write_csv(os.path.join(args.out, "sweep.csv"), header, rows)
    _write_manifest(args.out, "sweep", loaded, ["sweep.csv"],
                    axis=args.axis, sweep_from=args.sweep_from, to=args.to,
                    points=args.points, optimize=args.optimize,
                    ideal_sensing=args.ideal_sensing)
    ok = sum(1 for r in rows if r[1] == "ok")
    print(f"swept {args.axis} over [{args.sweep_from:g}, {args.to:g}] "
          f"({args.points} points, {ok} valid) -> sweep.csv")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehcr",
        description="Energy-harvesting cognitive-radio uplink: analytic "
                    "metrics, policy optimization, Monte Carlo checks.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, metavar="PATH",
                       help="run configuration (INI; see docs)")
        p.add_argument("--out", default=".", metavar="DIR",
                       help="directory for CSV outputs and the manifest")
        p.add_argument("--ideal-sensing", action="store_true",
                       help="force a perfect detector (no false alarms, "
                            "no misses)")

    p_an = sub.add_parser("analyze", help="price the configured policies")
    common(p_an)
    p_an.add_argument("--dump-matrix", action="store_true",
                      help="also write each user's transition matrix")
    p_an.set_defaults(func=cmd_analyze)

    p_opt = sub.add_parser("optimize", help="search for the best policies")
    common(p_opt)
    p_opt.add_argument("--grid-omega", type=int, metavar="N",
                       help="coarse grid points on the spend fraction")
    p_opt.add_argument("--grid-theta", type=int, metavar="N",
                       help="coarse grid points on the gain cutoff")
    p_opt.add_argument("--refine", type=int, metavar="L",
                       help="local refinement levels")
    p_opt.set_defaults(func=cmd_optimize)

    p_sim = sub.add_parser("simulate",
                           help="Monte Carlo run graded against analytics")
    common(p_sim)
    p_sim.add_argument("--slots", type=int, default=1_000_000, metavar="N",
                       help="number of simulated frames")
    p_sim.add_argument("--seed", type=int, default=0, metavar="N")
    p_sim.add_argument("--dump-trace", action="store_true",
                       help="also write per-slot records per user")
    p_sim.add_argument("--assume-idle-gains", action="store_true",
                       help="draw fed-back gains from the idle-band law "
                            "even on missed detections, like the analytic "
                            "chain does")
    p_sim.set_defaults(func=cmd_simulate)

    p_sw = sub.add_parser("sweep", help="walk one parameter axis")
    common(p_sw)
    p_sw.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p_sw.add_argument("--from", dest="sweep_from", type=float,
                      required=True, metavar="F")
    p_sw.add_argument("--to", type=float, required=True, metavar="T")
    p_sw.add_argument("--points", type=int, default=21, metavar="N")
    p_sw.add_argument("--optimize", action="store_true",
                      help="re-optimize policies at every grid point")
    p_sw.add_argument("--grid-omega", type=int, metavar="N")
    p_sw.add_argument("--grid-theta", type=int, metavar="N")
    p_sw.add_argument("--refine", type=int, metavar="L")
    p_sw.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        loaded = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return args.func(args, loaded)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        for problem in exc.errors:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
