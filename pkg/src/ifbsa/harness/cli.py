"""Command-line entry point ``ifbsa``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Sequence, TextIO

import numpy as np

from ifbsa.bsa import outcome_table
from ifbsa.errors import ConfigInvalid, DegenerateDesign, GridMismatch, IfbsaError, ZeroNorm
from ifbsa.harness.config import ExperimentConfig, ScanSpec, load_json
from ifbsa.harness.report import build_report, fit_only_report
from ifbsa.harness.scan import read_csv, run_scan, write_csv
from ifbsa.noise import DEFAULT_WIDTH, BlockScenario, NoiseConfig, antidip_scan, noise_components

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
NOISE_CLASSES = ("alice_dark", "epr_dark", "epr_double", "alice_double", "dark_dark")

log = logging.getLogger("ifbsa")


def _fmt(x: float) -> str:
    return format(x, ".12g")


@contextmanager
def _output(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yield fh


def _angle(value: float, unit: str) -> float:
    return math.radians(value) if unit == "deg" else value


def cmd_bsa_table(args) -> int:
    rows, cols, matrix = outcome_table(args.analyzer, args.dead_time, _angle(args.delta, args.unit))
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["input"] + [c.label for c in cols])
        for kind, probs in zip(rows, matrix):
            w.writerow([kind.label] + [_fmt(p) for p in probs])
    return EXIT_OK


def cmd_teleport_scan(args) -> int:
    cfg = ExperimentConfig.from_dict(load_json(args.config))
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    scan = ScanSpec.from_dict(load_json(args.scan)) if args.scan else ScanSpec.uniform()
    records = run_scan(cfg, scan, args.mode)
    with _output(args.out) as fh:
        write_csv(records, fh)
    return EXIT_OK


def cmd_antidip_scan(args) -> int:
    if args.num < 1:
        raise ConfigInvalid("--num must be positive")
    offsets = np.linspace(args.start, args.stop, args.num)
    points = antidip_scan(offsets, args.width, not args.no_doubles, _angle(args.delta, args.unit))
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["offset", "rate_00", "rate_22", "visibility"])
        for p in points:
            w.writerow([_fmt(v) for v in p])
    return EXIT_OK


def cmd_noise_sim(args) -> int:
    if args.config:
        d = load_json(args.config)
        cfg = ExperimentConfig.from_dict(d)
    else:
        cfg = ExperimentConfig()
    noise = cfg.noise if cfg.noise is not None else NoiseConfig()
    scan = ScanSpec.from_dict(load_json(args.scan)) if args.scan else ScanSpec.uniform()
    scenarios = [BlockScenario(args.scenario)] if args.scenario else list(BlockScenario)
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["phase_rad", "scenario", "outcome", *NOISE_CLASSES, "total"])
        for sc in scenarios:
            for v in scan.values:
                ph = cfg.phases.replace(**{scan.scanned_phase: v})
                comps = noise_components(noise, sc, ph, cfg.analyzer)
                for label in comps["alice_dark"]:
                    vals = [comps[c][label] for c in NOISE_CLASSES]
                    w.writerow([_fmt(v), sc.value, label, *(_fmt(x) for x in vals), _fmt(sum(vals))])
    return EXIT_OK


def _read_records(path: str):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return read_csv(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc}") from exc


def _dump(obj: dict, path: str | None) -> None:
    with _output(path) as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def cmd_fit(args) -> int:
    _dump(fit_only_report(_read_records(args.inp), args.analyzer), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = ExperimentConfig.from_dict(load_json(args.config))
    scan = ScanSpec.from_dict(load_json(args.scan)) if args.scan else None
    _dump(build_report(_read_records(args.inp), cfg, scan), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ifbsa", description="Time-bin Bell-state analyzer and teleportation simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("bsa-table", help="click-pattern probability table for the four Bell inputs")
    s.add_argument("--analyzer", choices=["bs", "if"], default="if")
    s.add_argument("--dead-time", action="store_true", help="collapse same-detector double clicks")
    s.add_argument("--delta", type=float, default=0.0, help="analyzer interferometer phase")
    s.add_argument("--unit", choices=["rad", "deg"], default="rad")
    s.add_argument("--out")
    s.set_defaults(func=cmd_bsa_table)

    s = sub.add_parser("teleport-scan", help="coincidence counts over a phase scan (CSV)")
    s.add_argument("--config", required=True, help="experiment config JSON")
    s.add_argument("--scan", help="scan spec JSON (default: 12 points of alpha)")
    s.add_argument("--mode", choices=["expected", "sampled"], default="expected")
    s.add_argument("--seed", type=int, help="override the config seed")
    s.add_argument("--out")
    s.set_defaults(func=cmd_teleport_scan)

    s = sub.add_parser("antidip-scan", help="alignment antidip versus delay offset (CSV)")
    s.add_argument("--start", type=float, default=-4 * DEFAULT_WIDTH)
    s.add_argument("--stop", type=float, default=4 * DEFAULT_WIDTH)
    s.add_argument("--num", type=int, default=41)
    s.add_argument("--width", type=float, default=DEFAULT_WIDTH, help="coherence width, same unit as offsets")
    s.add_argument("--no-doubles", action="store_true", help="drop double-pair contributions")
    s.add_argument("--delta", type=float, default=0.0)
    s.add_argument("--unit", choices=["rad", "deg"], default="rad")
    s.add_argument("--out")
    s.set_defaults(func=cmd_antidip_scan)

    s = sub.add_parser("noise-sim", help="accidental coincidence rates by class and blocking scenario (CSV)")
    s.add_argument("--config", help="experiment config JSON; its noise block is used")
    s.add_argument("--scan", help="scan spec JSON (default: 12 points of alpha)")
    s.add_argument("--scenario", choices=[b.value for b in BlockScenario])
    s.add_argument("--out")
    s.set_defaults(func=cmd_noise_sim)

    s = sub.add_parser("fit", help="fringe fits of a scan CSV (JSON)")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--analyzer", choices=["bs", "if"], default="if")
    s.add_argument("--out")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("report", help="full report: fits, fidelities, phase differences, delta recovery (JSON)")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--config", required=True)
    s.add_argument("--scan")
    s.add_argument("--out")
    s.set_defaults(func=cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigInvalid, ValueError, KeyError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (DegenerateDesign, GridMismatch, ZeroNorm, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except IfbsaError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
