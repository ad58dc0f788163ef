"""Bell states, click patterns and their Bell-state classification.

Detector D1 watches port ``e`` and D2 watches port ``f``. A click pattern is
the multiset of (detector, slot) clicks; two photons in the same detector and
slot count as two clicks there (photon-number resolution is assumed unless
the dead-time filter is applied).
"""
from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Mapping

from ifbsa.fock import ModeLabel, PhotonicState, basis_state, measure_probabilities
from ifbsa.optics import analyzer_map, apply

DETECTOR_PORTS = {"e": "D1", "f": "D2"}


class Bell(Enum):
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"


@dataclass(frozen=True)
class BellKind:
    """A Bell state, optionally in the analyzer-adapted (primed) form.

    Primed states replace |1> by e^{i delta}|1> on both qubits.
    """

    bell: Bell
    primed: bool = False
    delta: float = 0.0

    @classmethod
    def prime(cls, bell: Bell, delta: float) -> "BellKind":
        return cls(bell, True, delta)

    @property
    def label(self) -> str:
        return self.bell.value + ("'" if self.primed else "")


@dataclass(frozen=True, order=True)
class ClickPattern:
    clicks: tuple[tuple[str, int], ...] = ()

    @classmethod
    def of(cls, *clicks: tuple[str, int]) -> "ClickPattern":
        return cls(tuple(sorted(clicks)))

    @classmethod
    def cross(cls, d1_slot: int, d2_slot: int) -> "ClickPattern":
        return cls.of(("D1", d1_slot), ("D2", d2_slot))

    @classmethod
    def same(cls, detector: str, s1: int, s2: int) -> "ClickPattern":
        return cls.of((detector, s1), (detector, s2))

    @classmethod
    def parse(cls, label: str) -> "ClickPattern":
        """Inverse of ``label``: ``"01"`` is D1 slot 0 with D2 slot 1, ``"D2:12"`` one detector."""
        if label == "none":
            return NO_COINCIDENCE
        if ":" in label:
            det, slots = label.split(":")
            return cls.of(*((det, int(s)) for s in slots))
        if len(label) != 2 or not label.isdigit():
            raise ValueError(f"bad pattern label {label!r}")
        return cls.cross(int(label[0]), int(label[1]))

    @property
    def n_clicks(self) -> int:
        return len(self.clicks)

    @property
    def same_detector(self) -> bool:
        return self.n_clicks == 2 and self.clicks[0][0] == self.clicks[1][0]

    @property
    def label(self) -> str:
        if not self.clicks:
            return "none"
        if self.n_clicks == 2 and not self.same_detector:
            d = dict(self.clicks)
            return f"{d['D1']}{d['D2']}"
        dets = {d for d, _ in self.clicks}
        if len(dets) == 1:
            return f"{self.clicks[0][0]}:" + "".join(str(s) for _, s in self.clicks)
        return ",".join(f"{d}:{s}" for d, s in self.clicks)

    def __repr__(self) -> str:
        return f"ClickPattern({self.label})"


NO_COINCIDENCE = ClickPattern()


@dataclass(frozen=True)
class BsaOutcome:
    kind: str  # "unambiguous" | "ambiguous" | "none"
    candidates: frozenset = field(default_factory=frozenset)

    @property
    def bell(self) -> Bell:
        if self.kind != "unambiguous":
            raise ValueError(f"{self.kind} outcome has no single Bell state")
        return next(iter(self.candidates))

    @classmethod
    def unambiguous(cls, bell: Bell) -> "BsaOutcome":
        return cls("unambiguous", frozenset({bell}))


NONE_OUTCOME = BsaOutcome("none")


def bell_state(kind: BellKind | Bell, ports: tuple[str, str] = ("a", "b")) -> PhotonicState:
    """Two time-bin qubits on ``ports``; first port is the first qubit."""
    if isinstance(kind, Bell):
        kind = BellKind(kind)
    p1, p2 = ports
    if p1 == p2:
        raise ValueError("Bell state needs two distinct ports")
    d = kind.delta if kind.primed else 0.0

    def ket(i: int, j: int) -> PhotonicState:
        return basis_state({ModeLabel(p1, i): 1, ModeLabel(p2, j): 1})

    r = 1 / math.sqrt(2)
    b = kind.bell
    if b in (Bell.PHI_PLUS, Bell.PHI_MINUS):
        sign = 1 if b is Bell.PHI_PLUS else -1
        return r * (ket(0, 0) + sign * cmath.exp(2j * d) * ket(1, 1))
    sign = 1 if b is Bell.PSI_PLUS else -1
    return r * cmath.exp(1j * d) * (ket(0, 1) + sign * ket(1, 0))


def detection_distribution(s: PhotonicState) -> dict[ClickPattern, float]:
    """Tag-summed click-pattern probabilities on D1/D2; other ports are traced out."""
    dist: dict[ClickPattern, float] = defaultdict(float)
    for vec, p in measure_probabilities(s, sum_tags=True).items():
        clicks = []
        for m, n in vec.occupancy:
            if m.port in DETECTOR_PORTS:
                clicks.extend([(DETECTOR_PORTS[m.port], m.slot)] * n)
        dist[ClickPattern.of(*clicks)] += p
    return dict(dist)


def dead_time_filter(dist: Mapping[ClickPattern, float]) -> dict[ClickPattern, float]:
    """Same-detector double clicks collapse to one click: no coincidence forms."""
    out: dict[ClickPattern, float] = defaultdict(float)
    for pat, p in dist.items():
        out[NO_COINCIDENCE if pat.same_detector else pat] += p
    return dict(out)


def _bell_inputs(analyzer: str, delta: float) -> dict[Bell, BellKind]:
    if analyzer == "if":
        return {b: BellKind.prime(b, delta) for b in Bell}
    return {b: BellKind(b) for b in Bell}


def analyzer_distribution(kind: BellKind, analyzer: str = "if", delta: float | None = None) -> dict[ClickPattern, float]:
    """Click distribution for a Bell input sent through the analyzer.

    The interferometer phase defaults to the input's own ``delta``.
    """
    if delta is None:
        delta = kind.delta
    out = apply(analyzer_map(analyzer, delta), bell_state(kind))
    return detection_distribution(out)


@lru_cache(maxsize=None)
def _support(analyzer: str) -> dict[ClickPattern, frozenset]:
    support: dict[ClickPattern, set] = defaultdict(set)
    for bell, kind in _bell_inputs(analyzer, 0.0).items():
        for pat, p in analyzer_distribution(kind, analyzer).items():
            if p > 1e-12:
                support[pat].add(bell)
    return {pat: frozenset(v) for pat, v in support.items()}


def _classify(p: ClickPattern, analyzer: str) -> BsaOutcome:
    if p.n_clicks != 2:
        return NONE_OUTCOME
    cands = _support(analyzer).get(p, frozenset())
    if len(cands) == 1:
        return BsaOutcome("unambiguous", cands)
    return BsaOutcome("ambiguous", cands)


def classify_if_bsa(p: ClickPattern) -> BsaOutcome:
    return _classify(p, "if")


def classify_bs_bsa(p: ClickPattern) -> BsaOutcome:
    return _classify(p, "bs")


def classify(p: ClickPattern, analyzer: str = "if") -> BsaOutcome:
    return _classify(p, analyzer)


def success_probability(kind: BellKind, analyzer: str = "if", dead_time: bool = False) -> float:
    dist = analyzer_distribution(kind, analyzer)
    if dead_time:
        dist = dead_time_filter(dist)
    return sum(p for pat, p in dist.items() if _classify(pat, analyzer).kind == "unambiguous")


def unambiguous_patterns(analyzer: str = "if", dead_time: bool = False) -> dict[ClickPattern, Bell]:
    out = {}
    for pat in table_columns(analyzer):
        if dead_time and pat.same_detector:
            continue
        o = _classify(pat, analyzer)
        if o.kind == "unambiguous":
            out[pat] = o.bell
    return out


def table_columns(analyzer: str = "if") -> list[ClickPattern]:
    """Conventional column order of the outcome tables."""
    if analyzer == "bs":
        same = [(0, 0), (1, 1), (0, 1)]
        cross = [(0, 0), (0, 1), (1, 0), (1, 1)]
    else:
        same = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
        cross = [(0, 0), (2, 2), (1, 1), (1, 0), (0, 1), (1, 2), (2, 1), (0, 2), (2, 0)]
    cols = []
    for s1, s2 in same:
        cols += [ClickPattern.same("D1", s1, s2), ClickPattern.same("D2", s1, s2)]
    cols += [ClickPattern.cross(x, y) for x, y in cross]
    return cols


def outcome_table(analyzer: str = "if", dead_time: bool = False, delta: float = 0.0) -> tuple[list[BellKind], list[ClickPattern], list[list[float]]]:
    """(rows, columns, probabilities) regenerated from the optics."""
    cols = table_columns(analyzer)
    if dead_time:
        cols = [c for c in cols if not c.same_detector] + [NO_COINCIDENCE]
    rows = list(_bell_inputs(analyzer, delta).values())
    matrix = []
    for kind in rows:
        dist = analyzer_distribution(kind, analyzer)
        if dead_time:
            dist = dead_time_filter(dist)
        matrix.append([dist.get(c, 0.0) for c in cols])
    return rows, cols, matrix


def average_success(analyzer: str = "if", dead_time: bool = False, delta: float = 0.0) -> float:
    """Mean unambiguous-detection probability over the four Bell inputs."""
    kinds = _bell_inputs(analyzer, delta).values()
    return sum(success_probability(k, analyzer, dead_time) for k in kinds) / 4


def iter_two_click_patterns(slots: Iterable[int]) -> list[ClickPattern]:
    slots = list(slots)
    out = []
    for det in ("D1", "D2"):
        for i, s1 in enumerate(slots):
            for s2 in slots[i:]:
                out.append(ClickPattern.same(det, s1, s2))
    out += [ClickPattern.cross(x, y) for x in slots for y in slots]
    return out
