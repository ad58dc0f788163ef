from ifbsa.harness.config import ExperimentConfig, ScanSpec
from ifbsa.harness.fitting import FringeFit, Subtraction, fit_fringe, noise_subtract
from ifbsa.harness.report import build_report, fit_only_report
from ifbsa.harness.scan import ScanRecord, bell_aggregate, read_csv, run_scan, write_csv

__all__ = [
    "ExperimentConfig",
    "FringeFit",
    "ScanRecord",
    "ScanSpec",
    "Subtraction",
    "bell_aggregate",
    "build_report",
    "fit_fringe",
    "fit_only_report",
    "noise_subtract",
    "read_csv",
    "run_scan",
    "write_csv",
]
