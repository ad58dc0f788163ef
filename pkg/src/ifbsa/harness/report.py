"""Fits per outcome and per Bell state, fidelities, phase differences, delta recovery."""
from __future__ import annotations

import math
from typing import Iterable, Mapping

from ifbsa.bsa import Bell
from ifbsa.harness.config import SCHEMA, ExperimentConfig, ScanSpec
from ifbsa.harness.fitting import FringeFit, fit_fringe, noise_subtract, wrap
from ifbsa.harness.scan import ScanRecord, bell_aggregate, bell_mapping, group_points
from ifbsa.teleport import visibility_to_fidelity

UNCERTAINTY_NOTE = "all uncertainties are 1 standard deviation"
PHASE_NOTE = (
    "fringes are R(1 + V cos(phi + rho)) in the scanned phase; "
    "outcome 11 follows cos(alpha - beta - 2 delta), psi+ outcomes cos(alpha + beta), "
    "psi- outcomes cos(alpha + beta + pi)"
)


def fit_records(records: Iterable[ScanRecord]) -> dict[str, dict]:
    """Raw fit, background-subtracted fit and clamp flag for each outcome."""
    records = list(records)
    raw = group_points(records, "raw")
    bg = group_points(records, "background")
    out = {}
    for label, pts in raw.items():
        sub = noise_subtract(pts, bg[label])
        out[label] = {"raw": fit_fringe(pts), "net": sub.fit, "clamped": sub.clamped}
    return out


def fidelity(fit: FringeFit) -> dict:
    """F = (1 + V)/2 with V clipped into [0, 1]; error V_err / 2."""
    v = min(max(fit.V, 0.0), 1.0)
    return {"F": visibility_to_fidelity(v), "F_err": fit.V_err / 2}


def phase_difference(f1: FringeFit, f2: FringeFit) -> dict:
    return {"diff": wrap(f1.rho - f2.rho), "err": math.hypot(f1.rho_err, f2.rho_err)}


def recover_delta(phi_plus: FringeFit, scanned: str, fixed_phase: float) -> dict:
    """Interferometer phase of the analyzer from the phi+ fringe, modulo pi.

    Scanning alpha, rho = -beta - 2 delta; scanning beta, rho = 2 delta - alpha.
    """
    if scanned == "alpha":
        d = -(phi_plus.rho + fixed_phase) / 2
    else:
        d = (phi_plus.rho + fixed_phase) / 2
    return {"delta": d % math.pi, "err": phi_plus.rho_err / 2}


def _fit_dict(f: FringeFit) -> dict:
    return f.to_dict()


def build_report(records: Iterable[ScanRecord], cfg: ExperimentConfig, scan: ScanSpec | None = None) -> dict:
    records = list(records)
    scanned = scan.scanned_phase if scan is not None else "alpha"
    mapping: Mapping[str, Bell] = bell_mapping(cfg.analyzer, cfg.dead_time)
    per_outcome = fit_records(records)
    per_bell = fit_records(bell_aggregate(records, mapping))

    report: dict = {
        "schema": SCHEMA,
        "uncertainty": UNCERTAINTY_NOTE,
        "phase_convention": PHASE_NOTE,
        "config": cfg.to_dict(),
        "scan": scan.to_dict() if scan is not None else None,
        "outcomes": {k: _entry(v) for k, v in per_outcome.items()},
        "bell_states": {},
        "phase_differences": {},
        "delta_recovery": None,
    }
    for label, v in per_bell.items():
        e = _entry(v)
        e["fidelity"] = fidelity(v["net"])
        e["fidelity_raw"] = fidelity(v["raw"])
        report["bell_states"][label] = e

    nets = {k: v["net"] for k, v in per_bell.items()}
    for a, b in ((Bell.PSI_PLUS, Bell.PSI_MINUS), (Bell.PHI_PLUS, Bell.PSI_MINUS), (Bell.PHI_PLUS, Bell.PSI_PLUS)):
        if a.value in nets and b.value in nets:
            report["phase_differences"][f"{a.value} - {b.value}"] = phase_difference(nets[a.value], nets[b.value])

    if Bell.PHI_PLUS.value in nets:
        fixed = cfg.phases.beta if scanned == "alpha" else cfg.phases.alpha
        rec = recover_delta(nets[Bell.PHI_PLUS.value], scanned, fixed)
        rec["configured"] = cfg.phases.delta % math.pi
        report["delta_recovery"] = rec
    return report


def fit_only_report(records: Iterable[ScanRecord], analyzer: str = "if", dead_time: bool = False) -> dict:
    """Fits without a configuration: per outcome and per Bell state."""
    records = list(records)
    per_bell = fit_records(bell_aggregate(records, bell_mapping(analyzer, dead_time)))
    return {
        "schema": SCHEMA,
        "uncertainty": UNCERTAINTY_NOTE,
        "phase_convention": PHASE_NOTE,
        "outcomes": {k: _entry(v) for k, v in fit_records(records).items()},
        "bell_states": {k: {**_entry(v), "fidelity": fidelity(v["net"])} for k, v in per_bell.items()},
    }


def _entry(v: dict) -> dict:
    return {"raw": _fit_dict(v["raw"]), "net": _fit_dict(v["net"]), "clamped": v["clamped"]}
