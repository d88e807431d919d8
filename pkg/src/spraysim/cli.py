"""``spraysim`` command line: run, compare, calibrate, show-config.

Exit codes: 0 success, 1 configuration/usage error, 2 scenario error,
3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import perception as pc
from .config import ConfigError, SimConfig, load_config
from .control import Mode
from .harness import compare_controls, run_trial, summarize
from .scenario import GeneratorSpec, ScenarioError, generate_scenario, load_scenario, validate_scenario
from .spray import grid, replicate_pe1, replicate_pe2, table_csv

BUILTIN_SCENARIOS = {"naju_default": GeneratorSpec}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def atomic_write(path, data) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    tmp = f"{path}.tmp{os.getpid()}"
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(tmp, mode) as fh:
        fh.write(data)
    os.replace(tmp, path)


def _parse_seeds(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"--seed expects N[,N...], got {text!r}") from None
    if not seeds:
        raise ConfigError("--seed needs at least one value")
    return seeds


def _parse_sets(items) -> dict:
    out: dict = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parts = key.split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return out


def _add_common(p: argparse.ArgumentParser, top: bool) -> None:
    # Subcommands suppress defaults so flags given before the subcommand survive.
    d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
    p.add_argument("--scenario", default=d("naju_default"),
                   help="scenario manifest/directory or a built-in name (naju_default)")
    p.add_argument("--mode", default=d("variable"), help="all | onoff | variable")
    p.add_argument("--seed", "--seeds", dest="seed", default=d("1"), help="seed or comma-separated seed list")
    p.add_argument("--config", default=d(None), help="JSON config file")
    p.add_argument("--set", action="append", default=d(None), metavar="KEY=VALUE",
                   help="override a config value, e.g. --set controller.k_p=0.9")
    p.add_argument("--out", default=d("spraysim_out"), help="output directory")
    p.add_argument("--jobs", type=int, default=d(os.cpu_count() or 1))
    p.add_argument("--show-config", action="store_true", default=d(False),
                   help="print the effective config and exit")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spraysim", description=__doc__.splitlines()[0])
    _add_common(p, top=True)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    helps = {
        "run": "replay a scenario under one control mode",
        "compare": "run all three modes and emit the comparison table",
        "calibrate": "replicate the duty sweeps",
        "show-config": "print the effective config",
    }
    for name, text in helps.items():
        sp = sub.add_parser(name, help=text)
        _add_common(sp, top=False)
        if name == "calibrate":
            sp.add_argument("which", help="pe1 | pe2")
    return p


def _resolve_scenario(arg: str, out_dir: str):
    if os.path.exists(arg):
        return load_scenario(arg)
    if arg in BUILTIN_SCENARIOS:
        target = os.path.join(out_dir, "scenario", arg)
        manifest = os.path.join(target, "scenario.json")
        if os.path.exists(manifest):
            return load_scenario(manifest)
        return generate_scenario(BUILTIN_SCENARIOS[arg](), seed=0, out_dir=target)
    raise ScenarioError(f"scenario not found: {arg}")


def _series_csv(series: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "x", "y"])
    for name, (xs, ys) in series.items():
        for x, y in zip(xs, ys):
            w.writerow([name, f"{x:.6g}", f"{y:.6f}"])
    return buf.getvalue()


def _papers_csv(results) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mode", "seed", "paper", "zone", "tag", "rp"])
    for r in results:
        for pid, z, t, rp in zip(r.paper_ids, r.zones, r.tags, r.rp):
            w.writerow([r.mode.value, r.seed, pid, z, t, f"{rp:.6f}"])
    return buf.getvalue()


def _duty_series(scen, results) -> dict:
    xs = (np.arange(scen.n_frames) + 0.5) * scen.frame_interval
    series = {}
    for r in results:
        name = f"{r.mode.value}"
        if name not in series:
            series[name] = (xs, r.duties.mean(axis=1))
    return series


def cmd_run(args, cfg: SimConfig) -> int:
    mode = Mode.parse(args.mode)
    seeds = _parse_seeds(args.seed)
    scen = _resolve_scenario(args.scenario, args.out)
    validate_scenario(scen, cfg.controller.thres_nozzle, max_depth=cfg.max_depth,
                      n_zones=cfg.n_zones, axis=cfg.axis)
    results = []
    for seed in seeds:
        r = run_trial(scen, mode, cfg, seed, keep_trace=True)
        results.append(r)
        d = os.path.join(args.out, f"run_{mode.value}_seed{seed}")
        atomic_write(os.path.join(d, "trace.csv"), r.trace.to_csv())
        atomic_write(os.path.join(d, "papers.csv"), _papers_csv([r]))
        for pid, raster in zip(r.paper_ids, r.stains):
            atomic_write(os.path.join(d, "stains", f"{pid}.segmask"), pc.mask_bytes(raster.astype(np.uint8)))
        summary = {"mode": mode.value, "seed": seed, "volume_l": r.volume_used,
                   "mean_rp": {t: float(np.mean(r.rp_for(t))) for t in ("T", "NT") if len(r.rp_for(t))},
                   "notes": r.notes}
        atomic_write(os.path.join(d, "summary.json"), json.dumps(summary, indent=1, sort_keys=True) + "\n")
    report = summarize(results)
    report.check()
    atomic_write(os.path.join(args.out, f"report_{mode.value}.csv"), report.to_csv())
    atomic_write(os.path.join(args.out, f"report_{mode.value}.json"), report.to_json())
    print(report.to_csv(), end="")
    return 0


def cmd_compare(args, cfg: SimConfig) -> int:
    seeds = _parse_seeds(args.seed)
    scen = _resolve_scenario(args.scenario, args.out)
    report, results = compare_controls(scen, seeds, cfg, jobs=max(1, args.jobs))
    report.check()
    atomic_write(os.path.join(args.out, "compare.csv"), report.to_csv())
    atomic_write(os.path.join(args.out, "compare.json"), report.to_json())
    atomic_write(os.path.join(args.out, "compare_papers.csv"), _papers_csv(results))
    atomic_write(os.path.join(args.out, "plot_duty_vs_position.csv"), _series_csv(_duty_series(scen, results)))
    print(report.to_csv(), end="")
    return 0


def cmd_calibrate(args, cfg: SimConfig) -> int:
    which = args.which.lower()
    if which == "pe1":
        rows = replicate_pe1(cfg.plume, cfg.valve, cfg.pe)
    elif which == "pe2":
        rows = replicate_pe2(cfg.plume, cfg.valve, cfg.pe)
    else:
        raise UsageError(f"calibrate expects pe1 or pe2, got {args.which!r}")
    duties, keys, g = grid(rows)
    series = {f"duty_{d:g}": (keys, g[i]) for i, d in enumerate(duties)}
    atomic_write(os.path.join(args.out, f"{which}.csv"), table_csv(rows))
    atomic_write(os.path.join(args.out, f"{which}_plot.csv"), _series_csv(series))
    print(table_csv(rows), end="")
    return 0


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "calibrate": cmd_calibrate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None and not args.show_config:
            raise UsageError("missing subcommand: run, compare, calibrate or show-config")
        Mode.parse(args.mode)
        cfg = load_config(args.config, _parse_sets(args.set))
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except (UsageError, ConfigError, ValueError) as exc:
        print(f"spraysim: error: {exc}", file=sys.stderr)
        return 1
    if args.show_config or args.command == "show-config":
        sys.stdout.write(cfg.dumps())
        return 0
    try:
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"spraysim: error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"spraysim: config error: {exc}", file=sys.stderr)
        return 1
    except ScenarioError as exc:
        print(f"spraysim: scenario error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"spraysim: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
