"""Exact few-photon Fock-state algebra over a small set of labeled modes.

A mode is a (spatial port, time slot, distinguishability tag) triple. States
are sparse superpositions of occupation vectors with complex amplitudes.
Slots are integers in units of the time-bin separation (1.2 ns in the
experiment); tags label internal degrees of freedom that never interfere.
"""
from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from ifbsa.errors import ModeCapExceeded, PhotonCapExceeded, SlotOverflow, ZeroNorm

PORTS = ("a", "b", "e", "f", "bob", "g", "h")
MAX_SLOT = 3
MAX_TAG = 3
MAX_PHOTONS = 4
MAX_MODES = 16
PRUNE = 1e-14

_PORT_INDEX = {p: i for i, p in enumerate(PORTS)}


@dataclass(frozen=True)
class ModeLabel:
    port: str
    slot: int = 0
    tag: int = 0

    def __post_init__(self):
        if self.port not in _PORT_INDEX:
            raise ValueError(f"unknown port {self.port!r}")
        if not 0 <= self.slot <= MAX_SLOT:
            raise SlotOverflow(f"slot {self.slot} outside 0..{MAX_SLOT}")
        if not 0 <= self.tag <= MAX_TAG:
            raise ValueError(f"tag {self.tag} outside 0..{MAX_TAG}")

    @property
    def key(self) -> tuple[int, int, int]:
        return (_PORT_INDEX[self.port], self.slot, self.tag)

    def __lt__(self, other: "ModeLabel") -> bool:
        return self.key < other.key

    def with_tag(self, tag: int) -> "ModeLabel":
        return ModeLabel(self.port, self.slot, tag)

    def __repr__(self) -> str:
        t = f"~{self.tag}" if self.tag else ""
        return f"{self.port}@{self.slot}{t}"


@dataclass(frozen=True)
class OccupationVector:
    """Canonically sorted ((mode, count), ...) with no zero counts."""

    occupancy: tuple[tuple[ModeLabel, int], ...] = ()

    @classmethod
    def from_counts(cls, counts: Mapping[ModeLabel, int]) -> "OccupationVector":
        items = sorted(((m, n) for m, n in counts.items() if n), key=lambda mn: mn[0].key)
        if any(n < 0 for _, n in items):
            raise ValueError("negative occupation")
        return cls(tuple(items))

    @property
    def photon_number(self) -> int:
        return sum(n for _, n in self.occupancy)

    def count(self, mode: ModeLabel) -> int:
        for m, n in self.occupancy:
            if m == mode:
                return n
        return 0

    def as_dict(self) -> dict[ModeLabel, int]:
        return dict(self.occupancy)

    def modes(self) -> tuple[ModeLabel, ...]:
        return tuple(m for m, _ in self.occupancy)

    def added(self, mode: ModeLabel) -> tuple["OccupationVector", int]:
        """Return (vector with one more photon in ``mode``, prior count)."""
        counts = self.as_dict()
        prior = counts.get(mode, 0)
        counts[mode] = prior + 1
        return OccupationVector.from_counts(counts), prior

    def untagged(self) -> "OccupationVector":
        counts: dict[ModeLabel, int] = defaultdict(int)
        for m, n in self.occupancy:
            counts[m.with_tag(0)] += n
        return OccupationVector.from_counts(counts)

    def restrict(self, ports: Iterable[str]) -> "OccupationVector":
        ports = set(ports)
        return OccupationVector(tuple((m, n) for m, n in self.occupancy if m.port in ports))

    def __repr__(self) -> str:
        if not self.occupancy:
            return "|vac>"
        body = " ".join(f"{n}_{m!r}" for m, n in self.occupancy)
        return f"|{body}>"


class PhotonicState:
    """Immutable sparse superposition of occupation vectors.

    Amplitudes below ``PRUNE`` are dropped on construction; the photon and
    mode caps are enforced rather than truncated.
    """

    __slots__ = ("_amps",)

    def __init__(self, amplitudes: Mapping[OccupationVector, complex] | None = None):
        amps = {}
        modes = set()
        for vec, amp in (amplitudes or {}).items():
            amp = complex(amp)
            if abs(amp) <= PRUNE:
                continue
            if vec.photon_number > MAX_PHOTONS:
                raise PhotonCapExceeded(f"{vec.photon_number} photons > {MAX_PHOTONS}")
            modes.update(vec.modes())
            amps[vec] = amp
        if len(modes) > MAX_MODES:
            raise ModeCapExceeded(f"{len(modes)} distinct modes > {MAX_MODES}")
        object.__setattr__(self, "_amps", dict(sorted(amps.items(), key=_vec_key)))

    @property
    def amplitudes(self) -> Mapping[OccupationVector, complex]:
        return MappingProxyType(self._amps)

    def items(self) -> Iterator[tuple[OccupationVector, complex]]:
        return iter(self._amps.items())

    def __len__(self) -> int:
        return len(self._amps)

    def amplitude(self, vec: OccupationVector) -> complex:
        return self._amps.get(vec, 0j)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self._amps.values()))

    def modes(self) -> set[ModeLabel]:
        out = set()
        for vec in self._amps:
            out.update(vec.modes())
        return out

    def __add__(self, other: "PhotonicState") -> "PhotonicState":
        out = dict(self._amps)
        for vec, amp in other.items():
            out[vec] = out.get(vec, 0j) + amp
        return PhotonicState(out)

    def __sub__(self, other: "PhotonicState") -> "PhotonicState":
        return self + (-1) * other

    def __mul__(self, scalar: complex) -> "PhotonicState":
        return PhotonicState({v: a * scalar for v, a in self._amps.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar: complex) -> "PhotonicState":
        return self * (1 / scalar)

    def allclose(self, other: "PhotonicState", atol: float = 1e-12) -> bool:
        keys = set(self._amps) | set(other._amps)
        return all(abs(self.amplitude(k) - other.amplitude(k)) <= atol for k in keys)

    def __setattr__(self, name, value):
        raise AttributeError("PhotonicState is immutable")

    def __repr__(self) -> str:
        terms = " + ".join(f"({a.real:.4g}{a.imag:+.4g}j){v!r}" for v, a in self._amps.items())
        return f"PhotonicState({terms or '0'})"

    def to_json(self) -> str:
        return json.dumps(state_to_dict(self), separators=(",", ":"))


def _vec_key(item):
    vec = item[0]
    return tuple((m.key, n) for m, n in vec.occupancy)


def vacuum() -> PhotonicState:
    return PhotonicState({OccupationVector(): 1.0})


def basis_state(counts: Mapping[ModeLabel, int]) -> PhotonicState:
    """Normalized Fock basis state with the given occupation numbers."""
    return PhotonicState({OccupationVector.from_counts(counts): 1.0})


def create(s: PhotonicState, m: ModeLabel) -> PhotonicState:
    """Apply the creation operator of mode ``m`` (result is unnormalized)."""
    out: dict[OccupationVector, complex] = defaultdict(complex)
    for vec, amp in s.items():
        if vec.photon_number + 1 > MAX_PHOTONS:
            raise PhotonCapExceeded(f"creating photon {vec.photon_number + 1} > {MAX_PHOTONS}")
        new, prior = vec.added(m)
        out[new] += amp * math.sqrt(prior + 1)
    return PhotonicState(out)


def normalize(s: PhotonicState) -> PhotonicState:
    n = s.norm()
    if n <= PRUNE:
        raise ZeroNorm("cannot normalize the zero vector")
    return s / n


def inner_product(s1: PhotonicState, s2: PhotonicState) -> complex:
    """<s1|s2>, antilinear in the first argument."""
    return sum((a.conjugate() * s2.amplitude(v) for v, a in s1.items()), 0j)


def tensor(s1: PhotonicState, s2: PhotonicState) -> PhotonicState:
    """Product state: the photons of ``s2`` are created on top of ``s1``.

    For states on disjoint modes this is the ordinary tensor product. Shared
    modes merge with bosonic weights.
    """
    out = PhotonicState()
    for vec, amp in s2.items():
        term = s1 * amp
        for mode, n in vec.occupancy:
            for _ in range(n):
                term = create(term, mode)
            term = term / math.sqrt(math.factorial(n))
        out = out + term
    return out


def measure_probabilities(s: PhotonicState, sum_tags: bool = False) -> dict[OccupationVector, float]:
    """Born-rule distribution over occupation vectors.

    With ``sum_tags`` the vectors differing only by tag are merged
    incoherently, i.e. what tag-blind detectors see.
    """
    probs: dict[OccupationVector, float] = defaultdict(float)
    for vec, amp in s.items():
        key = vec.untagged() if sum_tags else vec
        probs[key] += abs(amp) ** 2
    return dict(probs)


def partial_measure(s: PhotonicState, ports: Iterable[str]) -> dict[OccupationVector, PhotonicState]:
    """Project on the occupations of ``ports``.

    Returns measured occupation (tags kept) -> unnormalized post-measurement
    state of the remaining modes. Squared norms are the outcome probabilities.
    """
    ports = set(ports)
    groups: dict[OccupationVector, dict[OccupationVector, complex]] = defaultdict(lambda: defaultdict(complex))
    for vec, amp in s.items():
        measured = vec.restrict(ports)
        rest = OccupationVector(tuple((m, n) for m, n in vec.occupancy if m.port not in ports))
        groups[measured][rest] += amp
    return {k: PhotonicState(v) for k, v in groups.items()}


def state_to_dict(s: PhotonicState) -> list[dict]:
    return [
        {
            "modes": [{"port": m.port, "slot": m.slot, "tag": m.tag, "count": n} for m, n in vec.occupancy],
            "re": amp.real,
            "im": amp.imag,
        }
        for vec, amp in s.items()
    ]


def state_from_json(text: str) -> PhotonicState:
    amps = {}
    for term in json.loads(text):
        counts = {ModeLabel(d["port"], d["slot"], d["tag"]): d["count"] for d in term["modes"]}
        amps[OccupationVector.from_counts(counts)] = complex(term["re"], term["im"])
    return PhotonicState(amps)
