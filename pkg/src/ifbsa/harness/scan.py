"""Synthetic coincidence scans: exact expected counts or seeded Poisson draws."""
from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np

from ifbsa.bsa import Bell, table_columns, unambiguous_patterns
from ifbsa.errors import ConfigInvalid
from ifbsa.harness.config import ExperimentConfig, ScanSpec
from ifbsa.noise import BlockScenario, noise_budget
from ifbsa.teleport import PhaseConfig, joint_rate

CSV_HEADER = ("phase_rad", "outcome", "raw", "background", "net")
_QUARTER_TURNS = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)


@dataclass(frozen=True)
class ScanRecord:
    phase: float
    outcome: str
    raw: float
    background: float
    net: float


def scan_outcomes(analyzer: str, dead_time: bool) -> list[str]:
    """Identified outcome labels in conventional column order."""
    keep = unambiguous_patterns(analyzer, dead_time)
    return [p.label for p in table_columns(analyzer) if p in keep]


def _phases_at(cfg: PhaseConfig, scanned: str, value: float) -> PhaseConfig:
    return cfg.replace(**{scanned: value})


def _total_rate(cfg: ExperimentConfig, scanned: str, outcomes: Sequence[str]) -> float:
    # phase average of the summed identified rate; exact for first-harmonic fringes
    total = 0.0
    for v in _QUARTER_TURNS:
        ph = _phases_at(cfg.phases, scanned, v)
        total += sum(joint_rate(o, ph, analyzer=cfg.analyzer) for o in outcomes)
    return total / len(_QUARTER_TURNS)


def expected_counts(cfg: ExperimentConfig, scan: ScanSpec) -> list[tuple[float, str, float, float]]:
    """(phase, outcome, signal, background) expectation values per scan point."""
    outcomes = scan_outcomes(cfg.analyzer, cfg.dead_time)
    total = _total_rate(cfg, scan.scanned_phase, outcomes)
    distinguishable = cfg.noise is not None and not cfg.noise.aligned
    bg_scale = 0.0
    if cfg.noise is not None:
        n = cfg.noise
        pulse_signal = n.p_alice * n.p_epr * n.t_a * n.t_e * total
        if pulse_signal <= 0:
            raise ConfigInvalid("noise model needs nonzero pair rates and transmissions")
        bg_scale = cfg.integration / pulse_signal
    out = []
    for v in scan.values:
        ph = _phases_at(cfg.phases, scan.scanned_phase, v)
        bg = noise_budget(cfg.noise, BlockScenario.UNBLOCKED, ph, cfg.analyzer) if cfg.noise is not None else {}
        for o in outcomes:
            t = cfg.transmission_for(o)
            sig = cfg.integration * t * joint_rate(o, ph, distinguishable, cfg.analyzer) / total
            out.append((v, o, sig, bg_scale * t * bg.get(o, 0.0)))
    return out


def point_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), index]))


def run_scan(cfg: ExperimentConfig, scan: ScanSpec, mode: str = "expected") -> list[ScanRecord]:
    """Coincidence records for every (phase point, identified outcome).

    ``expected`` gives exact means. ``sampled`` draws the raw count from
    Poisson(signal + background) and an independent background-only count
    from Poisson(background), as a blocked-source calibration run would.
    Each phase point has its own generator derived from (seed, index).
    """
    if mode not in ("expected", "sampled"):
        raise ConfigInvalid(f"unknown mode {mode!r}")
    rows = expected_counts(cfg, scan)
    if mode == "expected":
        return [ScanRecord(v, o, s + b, b, s) for v, o, s, b in rows]
    by_point: dict[float, list] = defaultdict(list)
    for r in rows:
        by_point[r[0]].append(r)
    out = []
    for idx, v in enumerate(scan.values):
        rng = point_rng(cfg.seed, idx)
        for _, o, s, b in by_point[v]:
            raw = float(rng.poisson(s + b))
            bg = float(rng.poisson(b))
            out.append(ScanRecord(v, o, raw, bg, raw - bg))
    return out


def bell_mapping(analyzer: str = "if", dead_time: bool = True) -> dict[str, Bell]:
    return {p.label: b for p, b in unambiguous_patterns(analyzer, dead_time).items()}


def bell_aggregate(records: Iterable[ScanRecord], mapping: Mapping[str, Bell] | None = None) -> list[ScanRecord]:
    """Sum constituent outcomes into one record per (phase, Bell state)."""
    if mapping is None:
        mapping = bell_mapping("if", dead_time=False)
    acc: dict[tuple[float, Bell], list[float]] = defaultdict(lambda: [0.0, 0.0, 0.0])
    for r in records:
        bell = mapping.get(r.outcome)
        if bell is None:
            continue
        s = acc[(r.phase, bell)]
        s[0] += r.raw
        s[1] += r.background
        s[2] += r.net
    order = list(Bell)
    keys = sorted(acc, key=lambda k: (order.index(k[1]), k[0]))
    return [ScanRecord(ph, b.value, *acc[(ph, b)]) for ph, b in keys]


def group_points(records: Iterable[ScanRecord], column: str = "net") -> dict[str, list[tuple[float, float]]]:
    out: dict[str, list[tuple[float, float]]] = defaultdict(list)
    for r in records:
        out[r.outcome].append((r.phase, getattr(r, column)))
    return dict(out)


def _fmt(x: float) -> str:
    return format(x, ".12g")


def write_csv(records: Iterable[ScanRecord], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([_fmt(r.phase), r.outcome, _fmt(r.raw), _fmt(r.background), _fmt(r.net)])


def records_to_csv(records: Iterable[ScanRecord]) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_csv(fh: TextIO) -> list[ScanRecord]:
    reader = csv.reader(fh)
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ConfigInvalid(f"expected CSV header {','.join(CSV_HEADER)}")
    out = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            ph, o, raw, bg, net = row
            out.append(ScanRecord(float(ph), o, float(raw), float(bg), float(net)))
        except ValueError as exc:
            raise ConfigInvalid(f"line {line_no}: {exc}") from exc
    return out
