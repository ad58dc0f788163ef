"""Experiment and scan configuration, with their JSON forms."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

from ifbsa.errors import ConfigInvalid
from ifbsa.noise import NoiseConfig
from ifbsa.teleport import PhaseConfig

SCHEMA = 1
ANALYZERS = ("if", "bs")
SCANNABLE = ("alpha", "beta")
MIN_FIT_POINTS = 5


def _to_rad(x: float, unit: str) -> float:
    if unit == "rad":
        return float(x)
    if unit == "deg":
        return math.radians(x)
    raise ConfigInvalid(f"unknown unit {unit!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to generate one set of coincidence scans.

    ``integration`` is the expected number of true triple coincidences per
    phase point, summed over all identified outcomes and averaged over phase.
    ``noise=None`` switches accidentals off. ``transmission`` maps outcome
    labels to electronic transmission factors; unlisted outcomes get 1.
    """

    phases: PhaseConfig = PhaseConfig()
    noise: NoiseConfig | None = None
    analyzer: str = "if"
    dead_time: bool = True
    integration: float = 1e4
    seed: int = 0
    transmission: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.analyzer not in ANALYZERS:
            raise ConfigInvalid(f"analyzer must be one of {ANALYZERS}")
        if not self.integration > 0 or not math.isfinite(self.integration):
            raise ConfigInvalid("integration must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigInvalid("seed must fit in 64 bits")
        for k, t in self.transmission.items():
            if not 0 < t <= 1:
                raise ConfigInvalid(f"transmission[{k!r}]={t} outside (0, 1]")

    def transmission_for(self, label: str) -> float:
        return self.transmission.get(label, 1.0)

    def replace(self, **kw) -> "ExperimentConfig":
        return ExperimentConfig(**{**self.__dict__, **kw})

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "unit": "rad",
            "phases": asdict(self.phases),
            "noise": None if self.noise is None else asdict(self.noise),
            "analyzer": self.analyzer,
            "dead_time": self.dead_time,
            "integration": self.integration,
            "seed": int(self.seed),
            "transmission": dict(self.transmission),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExperimentConfig":
        _check_schema(d)
        unit = d.get("unit", "rad")
        try:
            ph = d.get("phases", {})
            phases = PhaseConfig(*(_to_rad(ph.get(k, 0.0), unit) for k in ("alpha", "beta", "delta")))
            noise = d.get("noise")
            return cls(
                phases=phases,
                noise=None if noise is None else NoiseConfig(**noise),
                analyzer=d.get("analyzer", "if"),
                dead_time=bool(d.get("dead_time", True)),
                integration=float(d.get("integration", 1e4)),
                seed=int(d.get("seed", 0)),
                transmission={str(k): float(v) for k, v in d.get("transmission", {}).items()},
            )
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigInvalid(str(exc)) from exc


@dataclass(frozen=True)
class ScanSpec:
    scanned_phase: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.scanned_phase not in SCANNABLE:
            raise ConfigInvalid(f"scanned_phase must be one of {SCANNABLE}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) < MIN_FIT_POINTS:
            raise ConfigInvalid(f"a fit needs at least {MIN_FIT_POINTS} phase points")

    @classmethod
    def uniform(cls, scanned_phase: str = "alpha", n: int = 12) -> "ScanSpec":
        return cls(scanned_phase, tuple(2 * math.pi * k / n for k in range(n)))

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "scanned_phase": self.scanned_phase, "unit": "rad", "values": list(self.values)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ScanSpec":
        """Accepts explicit ``values`` or a ``start``/``stop``/``num`` grid (stop excluded)."""
        _check_schema(d)
        unit = d.get("unit", "rad")
        try:
            if "values" in d:
                vals: Sequence[float] = d["values"]
            else:
                start, stop, num = float(d["start"]), float(d["stop"]), int(d["num"])
                vals = [start + (stop - start) * k / num for k in range(num)]
            return cls(d.get("scanned_phase", "alpha"), tuple(_to_rad(v, unit) for v in vals))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigInvalid(f"bad scan spec: {exc}") from exc


def _check_schema(d: Mapping[str, Any]) -> None:
    if not isinstance(d, Mapping):
        raise ConfigInvalid("expected a JSON object")
    if d.get("schema", SCHEMA) != SCHEMA:
        raise ConfigInvalid(f"unsupported schema {d.get('schema')!r}")


def load_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read {path}: {exc}") from exc
