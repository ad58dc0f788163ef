"""Accidental coincidences, multi-pair events and temporal distinguishability.

Every probability here is produced by running Fock states through the
optics. Partial temporal overlap ``o`` is modeled by giving Alice's photon
the internal state sqrt(o)|tag 0> + sqrt(1 - o)|tag 1>, so two-photon
interference with the (tag 0) EPR photon is weighted by ``o``.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, fields
from enum import Enum
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from ifbsa.bsa import Bell, ClickPattern, bell_state, detection_distribution
from ifbsa.errors import ConfigInvalid
from ifbsa.fock import ModeLabel, PhotonicState, create, normalize, partial_measure, tensor, vacuum
from ifbsa.optics import QubitSpec, analyzer_map, apply, bob_analyzer_map
from ifbsa.teleport import PhaseConfig, bell_groups, fringe_rate

# documentation default: ~150 um coherence length, in the same units as delay offsets
DEFAULT_WIDTH = 150.0

ANTIDIP_CASES = ("aligned", "non_aligned", "double_alice", "double_epr")


@dataclass(frozen=True)
class NoiseConfig:
    """Per-pulse source and detector parameters.

    ``d1``/``d2`` are dark-count probabilities per gate of the analyzer
    detectors, ``d_bob`` the same for Bob's detector. Dark counts are spread
    uniformly over the three slots of a gate.
    """

    p_alice: float = 0.01
    p_epr: float = 0.01
    d1: float = 1e-4
    d2: float = 1e-4
    t_a: float = 0.5
    t_e: float = 0.5
    aligned: bool = True
    d_bob: float = 1e-4

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name != "aligned" and not 0 <= v <= 1:
                raise ConfigInvalid(f"{f.name}={v} outside [0, 1]")

    def replace(self, **kw) -> "NoiseConfig":
        return NoiseConfig(**{**self.__dict__, **kw})


class BlockScenario(Enum):
    UNBLOCKED = "unblocked"
    ALICE_BLOCKED = "alice_blocked"
    EPR_TO_BOB_BLOCKED = "epr_to_bob_blocked"
    EPR_TO_BSA_BLOCKED = "epr_to_bsa_blocked"


def _superposed_create(s: PhotonicState, terms: Sequence[tuple[ModeLabel, complex]]) -> PhotonicState:
    out = PhotonicState()
    for m, c in terms:
        out = out + c * create(s, m)
    return out


def _alice_modes(slot: int, overlap: float) -> list[tuple[ModeLabel, complex]]:
    terms = [(ModeLabel("a", slot, 0), math.sqrt(overlap))]
    if overlap < 1:
        terms.append((ModeLabel("a", slot, 1), math.sqrt(1 - overlap)))
    return terms


def _pattern_prob(state: PhotonicState, pattern: ClickPattern, delta: float) -> float:
    out = apply(analyzer_map("if", delta), state)
    return detection_distribution(out).get(pattern, 0.0)


def _input_state(case: str, slot: int, overlap: float | None = None) -> PhotonicState:
    a, b = ModeLabel("a", slot), ModeLabel("b", slot)
    if case == "aligned":
        overlap = 1.0 if overlap is None else overlap
        return create(_superposed_create(vacuum(), _alice_modes(slot, overlap)), b)
    if case == "non_aligned":
        return create(create(vacuum(), a.with_tag(1)), b)
    if case == "double_alice":
        return normalize(create(create(vacuum(), a), a))
    if case == "double_epr":
        return normalize(create(create(vacuum(), b), b))
    raise ValueError(f"unknown antidip case {case!r}")


def antidip_probability(case: str, delta: float = 0.0) -> float:
    """P("00"): one click in slot 0 on each analyzer detector, for |0> inputs."""
    return _pattern_prob(_input_state(case, 0), ClickPattern.cross(0, 0), delta)


def antidip_budget(include_double_pairs: bool = True, delta: float = 0.0) -> tuple[float, float]:
    """(P_out, P_in): "00" probability for misaligned and aligned sources.

    Double pairs from either source are weighted like one pair from each.
    """
    doubles = 0.0
    if include_double_pairs:
        doubles = antidip_probability("double_alice", delta) + antidip_probability("double_epr", delta)
    return antidip_probability("non_aligned", delta) + doubles, antidip_probability("aligned", delta) + doubles


def antidip_visibility(include_double_pairs: bool = True, delta: float = 0.0) -> float:
    p_out, p_in = antidip_budget(include_double_pairs, delta)
    return -(p_out - p_in) / p_out


def overlap(offset: float, width: float) -> float:
    if width <= 0:
        raise ValueError("width must be positive")
    return math.exp(-((offset / width) ** 2))


class AntidipPoint(NamedTuple):
    offset: float
    rate_00: float
    rate_22: float
    visibility: float


@lru_cache(maxsize=None)
def _antidip_rate(slot: int, o: float, include_double_pairs: bool, delta: float) -> float:
    pat = ClickPattern.cross(slot * 2, slot * 2)
    rate = _pattern_prob(_input_state("aligned", slot, o), pat, delta)
    if include_double_pairs:
        rate += _pattern_prob(_input_state("double_alice", slot), pat, delta)
        rate += _pattern_prob(_input_state("double_epr", slot), pat, delta)
    return rate


def antidip_scan(
    delay_offsets: Sequence[float],
    width: float = DEFAULT_WIDTH,
    include_double_pairs: bool = True,
    delta: float = 0.0,
) -> list[AntidipPoint]:
    """Relative "00" and "22" rates versus the delay of Alice's photon.

    "00" comes from the early components of both inputs and "22" from the
    late ones, so each is computed with both photons in that slot.
    ``visibility`` is the "00" excess over the fully distinguishable rate.
    """
    baseline = _antidip_rate(0, 0.0, include_double_pairs, delta)
    out = []
    for x in delay_offsets:
        o = overlap(x, width)
        r00 = _antidip_rate(0, o, include_double_pairs, delta)
        r22 = _antidip_rate(1, o, include_double_pairs, delta)
        out.append(AntidipPoint(float(x), r00, r22, (r00 - baseline) / baseline))
    return out


class DipPoint(NamedTuple):
    offset: float
    phase: float
    raw_01: float
    baby_01: float
    normalized: float


@lru_cache(maxsize=None)
def _dip_rate(alpha: float, o: float, delta: float) -> float:
    alice = PhotonicState()
    for slot, amp in ((0, 1 / math.sqrt(2)), (1, np.exp(1j * alpha) / math.sqrt(2))):
        alice = alice + amp * _superposed_create(vacuum(), _alice_modes(slot, o))
    state = tensor(alice, bell_state(Bell.PHI_PLUS, ("b", "bob")))
    return _pattern_prob(state, ClickPattern.cross(0, 1), delta)


def dip_with_baby_peak(
    delay_offsets: Sequence[float],
    unstabilized_phases: Sequence[float] | int = 0,
    width: float = DEFAULT_WIDTH,
    delta: float = 0.0,
) -> list[DipPoint]:
    """Two-fold "01" rate and its baby-peak normalization across a delay scan.

    Interferometers are unlocked, so each scan point sees its own phase of
    Alice's interferometer (given explicitly, or drawn uniformly from an
    integer seed). The baby peak pairs photons from different pulses: same
    single-photon interference, no bunching. Bob's photon is ignored.
    """
    if isinstance(unstabilized_phases, (int, np.integer)):
        rng = np.random.default_rng(unstabilized_phases)
        phases = rng.uniform(0, 2 * math.pi, len(delay_offsets))
    else:
        phases = list(unstabilized_phases)
        if len(phases) != len(delay_offsets):
            raise ValueError("need one phase per delay offset")
    out = []
    for x, phi in zip(delay_offsets, phases):
        raw = _dip_rate(float(phi), overlap(x, width), delta)
        baby = _dip_rate(float(phi), 0.0, delta)
        out.append(DipPoint(float(x), float(phi), raw, baby, raw / baby))
    return out


def _cross_outcomes(analyzer: str) -> list[str]:
    return sorted(lbl for group in bell_groups(analyzer).values() for lbl in group)


@lru_cache(maxsize=4096)
def _alice_single(alpha: float, delta: float, analyzer: str) -> dict[tuple[str, int], float]:
    s = apply(analyzer_map(analyzer, delta), _qubit(alpha))
    out: dict[tuple[str, int], float] = defaultdict(float)
    for vec, amp in s.items():
        (m, _), = vec.occupancy
        out[(m.port, m.slot)] += abs(amp) ** 2
    return dict(out)


def _qubit(alpha: float) -> PhotonicState:
    q = QubitSpec.from_phase(alpha)
    return PhotonicState() + q.amp0 * create(vacuum(), ModeLabel("a", 0)) + q.amp1 * create(vacuum(), ModeLabel("a", 1))


def _bob_hit(s: PhotonicState, beta: float) -> float:
    """P(at least one photon in Bob's middle slot on ``h``) for residual state ``s``."""
    out = apply(bob_analyzer_map(beta), s)
    return sum(abs(a) ** 2 for vec, a in out.items() if vec.count(ModeLabel("h", 1)) > 0)


def _epr_pair_state(pairs: int) -> PhotonicState:
    s = vacuum()
    for _ in range(pairs):
        nxt = PhotonicState()
        for slot in (0, 1):
            nxt = nxt + create(create(s, ModeLabel("b", slot)), ModeLabel("bob", slot))
        s = nxt
    return normalize(s)


@lru_cache(maxsize=4096)
def _epr_joint(pairs: int, beta: float, delta: float, analyzer: str) -> tuple[dict, dict]:
    """Analyzer clicks of the EPR photon(s): (with Bob's hit, marginal)."""
    s = apply(analyzer_map(analyzer, delta), _epr_pair_state(pairs))
    with_bob: dict = defaultdict(float)
    marginal: dict = defaultdict(float)
    for measured, rest in partial_measure(s, ("e", "f")).items():
        key = tuple(sorted((m.port, m.slot) for m, n in measured.occupancy for _ in range(n)))
        marginal[key] += rest.norm() ** 2
        with_bob[key] += _bob_hit(rest, beta)
    return dict(with_bob), dict(marginal)


@lru_cache(maxsize=None)
def _bob_marginal(beta: float) -> float:
    """P(Bob's EPR photon hits the middle slot) regardless of its partner."""
    s = _epr_pair_state(1)
    return sum(_bob_hit(rest, beta) for rest in partial_measure(s, ("b",)).values())


@lru_cache(maxsize=4096)
def _alice_double(alpha: float, delta: float, analyzer: str) -> dict[str, float]:
    q = QubitSpec.from_phase(alpha)
    one = q.amp0 * create(vacuum(), ModeLabel("a", 0)) + q.amp1 * create(vacuum(), ModeLabel("a", 1))
    two = normalize(q.amp0 * create(one, ModeLabel("a", 0)) + q.amp1 * create(one, ModeLabel("a", 1)))
    dist = detection_distribution(apply(analyzer_map(analyzer, delta), two))
    return {p.label: v for p, v in dist.items() if p.n_clicks == 2 and not p.same_detector}


def noise_components(
    cfg: NoiseConfig,
    scenario: BlockScenario = BlockScenario.UNBLOCKED,
    phases: PhaseConfig = PhaseConfig(),
    analyzer: str = "if",
) -> dict[str, dict[str, float]]:
    """Accidental triple-coincidence probabilities per pulse, by event class.

    Classes (to second order in pair-creation probability):
      ``alice_dark``  Alice photon + analyzer dark count, Bob from a lost-partner pair or dark
      ``epr_dark``    EPR photon + analyzer dark count, Bob from the same pair
      ``epr_double``  two EPR pairs, both analyzer-side photons detected
      ``alice_double`` two Alice photons + Bob dark count
      ``dark_dark``   two analyzer dark counts + Bob photon
    """
    alpha, beta, delta = phases.alpha, phases.beta, phases.delta
    p_a, p_e, t_a, t_e = cfg.p_alice, cfg.p_epr, cfg.t_a, cfg.t_e
    bob_ok = True
    if scenario is BlockScenario.ALICE_BLOCKED:
        p_a = 0.0
    elif scenario is BlockScenario.EPR_TO_BSA_BLOCKED:
        t_e = 0.0
    elif scenario is BlockScenario.EPR_TO_BOB_BLOCKED:
        bob_ok = False
    dark_slot = {"e": cfg.d1 / 3, "f": cfg.d2 / 3}
    bob_dark = cfg.d_bob / 3
    bob_pair = _bob_marginal(beta) if bob_ok else 0.0

    single_a = _alice_single(alpha, delta, analyzer)
    epr_bob, epr_marg = _epr_joint(1, beta, delta, analyzer)
    dbl_bob, dbl_marg = _epr_joint(2, beta, delta, analyzer)
    dbl_a = _alice_double(alpha, delta, analyzer)

    out: dict[str, dict[str, float]] = {k: {} for k in ("alice_dark", "epr_dark", "epr_double", "alice_double", "dark_dark")}
    for lbl in _cross_outcomes(analyzer):
        x, y = int(lbl[0]), int(lbl[1])
        # a real photon on one detector, a dark count on the other
        one_real = lambda dist: dist.get(("e", x), 0.0) * dark_slot["f"] + dist.get(("f", y), 0.0) * dark_slot["e"]
        bob_for_alice = p_e * (1 - t_e) * bob_pair + bob_dark
        out["alice_dark"][lbl] = p_a * t_a * one_real(single_a) * bob_for_alice

        epr_single = {k[0]: v for k, v in (epr_bob if bob_ok else epr_marg).items()}
        epr_single_b = {k: v * (1.0 if bob_ok else bob_dark) for k, v in epr_single.items()}
        out["epr_dark"][lbl] = p_e * t_e * one_real(epr_single_b)

        key = (("e", x), ("f", y))
        two = dbl_bob.get(key, 0.0) if bob_ok else dbl_marg.get(key, 0.0) * bob_dark
        out["epr_double"][lbl] = p_e**2 * t_e**2 * two

        out["alice_double"][lbl] = p_a**2 * t_a**2 * dbl_a.get(lbl, 0.0) * bob_dark
        out["dark_dark"][lbl] = dark_slot["e"] * dark_slot["f"] * (p_e * bob_pair + bob_dark)
    return out


def noise_budget(
    cfg: NoiseConfig,
    scenario: BlockScenario = BlockScenario.UNBLOCKED,
    phases: PhaseConfig = PhaseConfig(),
    analyzer: str = "if",
) -> dict[str, float]:
    """Total accidental rate per cross-detector outcome label."""
    comps = noise_components(cfg, scenario, phases, analyzer)
    labels = _cross_outcomes(analyzer)
    return {lbl: sum(c[lbl] for c in comps.values()) for lbl in labels}


def distinguishable_fringe(outcome, cfg: PhaseConfig) -> float:
    return fringe_rate(outcome, cfg, distinguishable=True)
