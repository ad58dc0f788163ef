"""Teleportation through the Bell-state analyzer.

Alice's qubit rides on port ``a``; the EPR pair is |phi+> on (``b``, ``bob``).
Charly's analyzer mixes ``a`` and ``b`` into the detector ports ``e``/``f``;
Bob's photon goes through his own time-bin interferometer (phase beta) and
is detected on port ``h``. Only Bob's middle slot interferes, so fringes are
read from ``bob_slot == 1``.
"""
from __future__ import annotations

import cmath
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ifbsa.bsa import (
    NO_COINCIDENCE,
    Bell,
    BellKind,
    BsaOutcome,
    ClickPattern,
    bell_state,
    classify,
    unambiguous_patterns,
)
from ifbsa.errors import AmbiguousOutcome
from ifbsa.fock import ModeLabel, OccupationVector, PhotonicState, inner_product, normalize, partial_measure, tensor
from ifbsa.optics import QubitSpec, analyzer_map, apply, bob_analyzer_map, qubit_encode

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)

CROSS_OUTCOMES = ("01", "02", "10", "11", "12", "20", "21")
_QUARTER_TURNS = (0.0, math.pi / 2, math.pi, 3 * math.pi / 2)


def sigma_phase(phi: float) -> np.ndarray:
    """Phase shift of the late bin: |0><0| + e^{i phi}|1><1|."""
    return np.diag([1, cmath.exp(1j * phi)])


@dataclass(frozen=True)
class PhaseConfig:
    alpha: float = 0.0
    beta: float = 0.0
    delta: float = 0.0

    def normalized(self) -> "PhaseConfig":
        tau = 2 * math.pi
        return PhaseConfig(self.alpha % tau, self.beta % tau, self.delta % tau)

    def replace(self, **kw) -> "PhaseConfig":
        return PhaseConfig(**{**self.__dict__, **kw})


@dataclass(frozen=True)
class DecompositionTerm:
    kind: BellKind
    amplitude: float
    bob: np.ndarray  # normalized (amp |0>, amp |1>) of Bob's photon


def _bob_vector(s: PhotonicState) -> np.ndarray:
    return np.array([inner_product(_bob_ket(i), s) for i in (0, 1)])


def _bob_ket(slot: int) -> PhotonicState:
    return PhotonicState({_occ(ModeLabel("bob", slot)): 1.0})


def _occ(m: ModeLabel) -> OccupationVector:
    return OccupationVector(((m, 1),))


def source_state(zeta: QubitSpec) -> PhotonicState:
    """Alice's qubit on ``a`` times |phi+> on (``b``, ``bob``)."""
    return tensor(qubit_encode(zeta), bell_state(Bell.PHI_PLUS, ("b", "bob")))


def teleport_decompose(zeta: QubitSpec, delta: float) -> list[DecompositionTerm]:
    """Expand the three-photon source on primed Bell states of (a, b).

    Each term's Bob state is obtained by projecting the Fock state, not from
    the closed-form correction list.
    """
    src = source_state(zeta)
    residuals = partial_measure(src, ("a", "b"))
    terms = []
    for bell in Bell:
        kind = BellKind.prime(bell, delta)
        ket = bell_state(kind)
        bob = PhotonicState()
        for vec, amp in ket.items():
            if vec in residuals:
                bob = bob + amp.conjugate() * residuals[vec]
        norm = bob.norm()
        terms.append(DecompositionTerm(kind, norm, _bob_vector(normalize(bob)) if norm > 1e-14 else np.zeros(2)))
    return terms


def reassemble(terms: list[DecompositionTerm]) -> PhotonicState:
    out = PhotonicState()
    for t in terms:
        bob = PhotonicState({_occ(ModeLabel("bob", i)): complex(t.bob[i]) for i in (0, 1)})
        out = out + t.amplitude * tensor(bell_state(t.kind), bob)
    return out


def bob_transformation(bell: Bell, delta: float) -> np.ndarray:
    """Unitary relating Bob's conditional state to Alice's qubit (up to phase)."""
    inv = sigma_phase(-2 * delta)
    return {
        Bell.PHI_PLUS: inv,
        Bell.PHI_MINUS: SIGMA_Z @ inv,
        Bell.PSI_PLUS: SIGMA_X,
        Bell.PSI_MINUS: SIGMA_X @ SIGMA_Z,
    }[bell]


def correction_unitary(bell: Bell, delta: float) -> np.ndarray:
    """What Bob applies to recover Alice's qubit: the inverse transformation."""
    return bob_transformation(bell, delta).conj().T


def visibility_to_fidelity(v: float) -> float:
    if not 0 <= v <= 1:
        raise ValueError("visibility must lie in [0, 1]")
    return (1 + v) / 2


def simulate_teleportation(
    cfg: PhaseConfig,
    dead_time: bool = False,
    analyzer: str = "if",
    distinguishable: bool = False,
    zeta: QubitSpec | None = None,
) -> dict[tuple[ClickPattern, int | None], float]:
    """Joint distribution of (BSA click pattern, Bob's click slot on ``h``).

    Bob's slot is ``None`` when his photon leaves through ``g``. With
    ``distinguishable`` Alice's photon carries tag 1 and cannot interfere
    with the EPR photon at the analyzer.
    """
    return dict(_simulate(cfg.alpha, cfg.beta, cfg.delta, dead_time, analyzer, distinguishable, zeta))


@lru_cache(maxsize=4096)
def _simulate(alpha, beta, delta, dead_time, analyzer, distinguishable, zeta):
    if zeta is None:
        zeta = QubitSpec.from_phase(alpha)
    zeta = QubitSpec(zeta.amp0, zeta.amp1, "a", 1 if distinguishable else 0)
    after_bsa = apply(analyzer_map(analyzer, delta), source_state(zeta))
    bob_map = bob_analyzer_map(beta)
    joint: dict[tuple[ClickPattern, int | None], float] = defaultdict(float)
    for measured, bob in partial_measure(after_bsa, ("e", "f")).items():
        clicks = []
        for m, n in measured.occupancy:
            clicks.extend([("D1" if m.port == "e" else "D2", m.slot)] * n)
        pat = ClickPattern.of(*clicks)
        if dead_time:
            pat = NO_COINCIDENCE if pat.same_detector else pat
        for vec, p in _probabilities(apply(bob_map, bob)).items():
            joint[(pat, vec)] += p
    return tuple(sorted(joint.items(), key=lambda kv: (kv[0][0], -1 if kv[0][1] is None else kv[0][1])))


def _probabilities(s: PhotonicState) -> dict[int | None, float]:
    out: dict[int | None, float] = defaultdict(float)
    for vec, amp in s.items():
        slots = [m.slot for m, _ in vec.occupancy if m.port == "h"]
        out[slots[0] if slots else None] += abs(amp) ** 2
    return out


def outcome_table(joint: dict[tuple[ClickPattern, int | None], float], analyzer: str = "if") -> dict[tuple[BsaOutcome, int | None], float]:
    """Collapse a joint distribution onto (BSA outcome, Bob slot)."""
    out: dict[tuple[BsaOutcome, int | None], float] = defaultdict(float)
    for (pat, slot), p in joint.items():
        out[(classify(pat, analyzer), slot)] += p
    return dict(out)


def bell_groups(analyzer: str = "if") -> dict[Bell, tuple[str, ...]]:
    """Cross-detector patterns (those surviving dead time) identifying each Bell state."""
    groups: dict[Bell, list[str]] = defaultdict(list)
    for pat, bell in unambiguous_patterns(analyzer, dead_time=True).items():
        groups[bell].append(pat.label)
    return {b: tuple(sorted(v)) for b, v in groups.items()}


def _patterns(outcome, analyzer: str = "if") -> tuple[ClickPattern, ...]:
    if isinstance(outcome, BellKind):
        outcome = outcome.bell
    if isinstance(outcome, Bell):
        groups = bell_groups(analyzer)
        if outcome not in groups:
            raise AmbiguousOutcome(f"{outcome.value} is never identified")
        return tuple(ClickPattern.parse(lbl) for lbl in groups[outcome])
    if isinstance(outcome, str):
        outcome = ClickPattern.parse(outcome)
    return (outcome,)


def joint_rate(outcome, cfg: PhaseConfig, distinguishable: bool = False, analyzer: str = "if", bob_slot: int = 1) -> float:
    """P(outcome at the analyzer and Bob clicks in ``bob_slot``)."""
    joint = _simulate(cfg.alpha, cfg.beta, cfg.delta, False, analyzer, distinguishable, None)
    pats = set(_patterns(outcome, analyzer))
    return sum(p for (pat, slot), p in joint if pat in pats and slot == bob_slot)


def conditional_rate(outcome, cfg: PhaseConfig, analyzer: str = "if") -> float:
    """P(Bob's middle-slot click | outcome)."""
    joint = _simulate(cfg.alpha, cfg.beta, cfg.delta, False, analyzer, False, None)
    pats = set(_patterns(outcome, analyzer))
    total = sum(p for (pat, _), p in joint if pat in pats)
    hit = sum(p for (pat, slot), p in joint if pat in pats and slot == 1)
    return hit / total


def fringe_phase(outcome, beta: float, delta: float, analyzer: str = "if") -> float:
    """Phase rho of the simulated fringe 1 + V cos(alpha + rho), in [0, 2 pi).

    Read off exactly from four quarter-turn samples of Alice's phase.
    """
    for pat in _patterns(outcome, analyzer):
        if classify(pat, analyzer).kind != "unambiguous":
            raise AmbiguousOutcome(f"{pat.label} does not identify a Bell state")
    r = [joint_rate(outcome, PhaseConfig(a, beta, delta), analyzer=analyzer) for a in _QUARTER_TURNS]
    b = (r[0] - r[2]) / 2
    c = (r[1] - r[3]) / 2
    return math.atan2(-c, b) % (2 * math.pi)


@lru_cache(maxsize=None)
def _column_scale(analyzer: str) -> float:
    # alpha-average of the indistinguishable "01" rate; exact for a sinusoid
    return sum(joint_rate("01", PhaseConfig(a, 0.0, 0.0), analyzer=analyzer) for a in _QUARTER_TURNS) / 4


def fringe_rate(outcome, cfg: PhaseConfig, distinguishable: bool = False, analyzer: str = "if") -> float:
    """Relative triple-coincidence rate, scaled so that "01" averages to 1."""
    return joint_rate(outcome, cfg, distinguishable, analyzer) / _column_scale(analyzer)


def outcome_probabilities(dead_time: bool = True, analyzer: str = "if", cfg: PhaseConfig = PhaseConfig()) -> tuple[dict[str, float], dict[Bell, float]]:
    """Normalized probabilities of the unambiguous patterns and their Bell sums."""
    joint = _simulate(cfg.alpha, cfg.beta, cfg.delta, dead_time, analyzer, False, None)
    keep = unambiguous_patterns(analyzer, dead_time)
    per: dict[str, float] = defaultdict(float)
    for (pat, _), p in joint:
        if pat in keep:
            per[pat.label] += p
    total = sum(per.values())
    per = {k: v / total for k, v in per.items()}
    bells: dict[Bell, float] = defaultdict(float)
    for lbl, p in per.items():
        bells[keep[ClickPattern.parse(lbl)]] += p
    return per, dict(bells)
