"""Passive linear optics as substitution rules on creation operators.

Conventions pinned by the interferometer transform: the balanced splitter is
symmetric and acts in place on its two ports,

    p1+ -> (p1+ + i p2+)/sqrt(2),    p2+ -> (i p1+ + p2+)/sqrt(2),

and the time-bin interferometer is splitter -> delay on p1 (one slot, phase
delta) -> splitter -> rename (p1, p2) to the output ports.
"""
from __future__ import annotations

import cmath
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

from ifbsa.errors import SlotOverflow
from ifbsa.fock import (
    MAX_SLOT,
    MAX_TAG,
    PRUNE,
    ModeLabel,
    OccupationVector,
    PhotonicState,
    create,
)

Image = tuple[tuple[ModeLabel, complex], ...]


def _port_modes(port: str) -> list[ModeLabel]:
    return [ModeLabel(port, s, t) for s in range(MAX_SLOT + 1) for t in range(MAX_TAG + 1)]


@dataclass(frozen=True)
class LinearMap:
    """Sparse substitution rule ``mode -> sum_k coeff_k * out_k``.

    Modes on ports outside ``ports`` pass through unchanged. A mode on a
    handled port with no entry has no image inside the slot range, and
    substituting it raises ``SlotOverflow``.
    """

    entries: Mapping[ModeLabel, Image]
    ports: frozenset

    def image(self, mode: ModeLabel) -> Image:
        if mode.port not in self.ports:
            return ((mode, 1 + 0j),)
        try:
            return self.entries[mode]
        except KeyError:
            raise SlotOverflow(f"{mode!r} leaves the slot range under this map") from None

    def domain(self) -> list[ModeLabel]:
        return sorted(self.entries, key=lambda m: m.key)

    def matrix(self) -> tuple[np.ndarray, list[ModeLabel], list[ModeLabel]]:
        """Dense (outputs x inputs) coefficient matrix restricted to the support."""
        inputs = self.domain()
        outputs = sorted({o for m in inputs for o, _ in self.entries[m]}, key=lambda m: m.key)
        row = {m: i for i, m in enumerate(outputs)}
        u = np.zeros((len(outputs), len(inputs)), dtype=complex)
        for j, m in enumerate(inputs):
            for o, c in self.entries[m]:
                u[row[o], j] += c
        return u, inputs, outputs

    def is_unitary(self, atol: float = 1e-12) -> bool:
        u, _, _ = self.matrix()
        return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[1]), atol=atol, rtol=0))

    def to_json(self) -> str:
        rows = []
        for m in self.domain():
            for o, c in self.entries[m]:
                rows.append(
                    {
                        "in": {"port": m.port, "slot": m.slot, "tag": m.tag},
                        "out": {"port": o.port, "slot": o.slot, "tag": o.tag},
                        "re": c.real,
                        "im": c.imag,
                    }
                )
        return json.dumps({"ports": sorted(self.ports), "coefficients": rows}, separators=(",", ":"))


def _make(entries: Mapping[ModeLabel, Iterable[tuple[ModeLabel, complex]]], ports: Iterable[str]) -> LinearMap:
    clean = {}
    for m, img in entries.items():
        acc: dict[ModeLabel, complex] = defaultdict(complex)
        for o, c in img:
            acc[o] += c
        clean[m] = tuple(sorted(((o, c) for o, c in acc.items() if abs(c) > PRUNE), key=lambda oc: oc[0].key))
    return LinearMap(MappingProxyType(clean), frozenset(ports))


def identity() -> LinearMap:
    return _make({}, ())


def beamsplitter_map(p1: str, p2: str) -> LinearMap:
    """Balanced symmetric splitter acting in place on ports ``p1``, ``p2``."""
    if p1 == p2:
        raise ValueError("beamsplitter needs two distinct ports")
    r = 1 / math.sqrt(2)
    entries = {}
    for m in _port_modes(p1):
        entries[m] = ((m, r), (ModeLabel(p2, m.slot, m.tag), 1j * r))
    for m in _port_modes(p2):
        entries[m] = ((ModeLabel(p1, m.slot, m.tag), 1j * r), (m, r))
    return _make(entries, (p1, p2))


def phase_map(m: ModeLabel, phi: float) -> LinearMap:
    entries = {k: ((k, cmath.exp(1j * phi) if k == m else 1 + 0j),) for k in _port_modes(m.port)}
    return _make(entries, (m.port,))


def delay_map(port: str, dslot: int, delta: float = 0.0) -> LinearMap:
    """``c+(t) -> exp(i delta) c+(t + dslot)`` on every mode of ``port``."""
    phase = cmath.exp(1j * delta)
    entries = {}
    for m in _port_modes(port):
        s = m.slot + dslot
        if 0 <= s <= MAX_SLOT:
            entries[m] = ((ModeLabel(port, s, m.tag), phase),)
    return _make(entries, (port,))


def swap_map(p1: str, p2: str) -> LinearMap:
    """Exchange two port labels (a relabeling, used to name outputs)."""
    entries = {}
    for m in _port_modes(p1):
        entries[m] = ((ModeLabel(p2, m.slot, m.tag), 1 + 0j),)
    for m in _port_modes(p2):
        entries[m] = ((ModeLabel(p1, m.slot, m.tag), 1 + 0j),)
    return _make(entries, (p1, p2))


def compose(first: LinearMap, *rest: LinearMap) -> LinearMap:
    """Map equivalent to applying ``first`` and then each of ``rest`` in order."""
    out = first
    for second in rest:
        out = _compose2(out, second)
    return out


def _compose2(first: LinearMap, second: LinearMap) -> LinearMap:
    ports = first.ports | second.ports
    entries = {}
    for port in ports:
        for m in _port_modes(port):
            try:
                acc = []
                for mid, c1 in first.image(m):
                    acc.extend((o, c1 * c2) for o, c2 in second.image(mid))
            except SlotOverflow:
                continue
            entries[m] = acc
    return _make(entries, ports)


def apply(lmap: LinearMap, s: PhotonicState) -> PhotonicState:
    """Substitute every creation operator of every basis term by its image."""
    out: dict[OccupationVector, complex] = defaultdict(complex)
    for vec, amp in s.items():
        norm = math.prod(math.factorial(n) for _, n in vec.occupancy)
        partial = PhotonicState({OccupationVector(): amp / math.sqrt(norm)})
        for mode, n in vec.occupancy:
            img = lmap.image(mode)
            for _ in range(n):
                nxt = PhotonicState()
                for o, c in img:
                    nxt = nxt + c * create(partial, o)
                partial = nxt
        for v, a in partial.items():
            out[v] += a
    return PhotonicState(out)


def tb_interferometer_map(
    delta: float,
    inputs: tuple[str, str] = ("a", "b"),
    outputs: tuple[str, str] = ("e", "f"),
) -> LinearMap:
    """Unbalanced time-bin interferometer with long-arm phase ``delta``.

    For the default ports this is exactly

        a+(t) -> (-e+(t) + e^{i delta} e+(t+1) + i f+(t) + i e^{i delta} f+(t+1)) / 2
        b+(t) -> ( f+(t) - e^{i delta} f+(t+1) + i e+(t) + i e^{i delta} e+(t+1)) / 2
    """
    p1, p2 = inputs
    maps = [beamsplitter_map(p1, p2), delay_map(p1, 1, delta), beamsplitter_map(p1, p2)]
    for src, dst in zip(inputs, outputs):
        if src != dst:
            maps.append(swap_map(src, dst))
    return compose(*maps)


def analyzer_map(analyzer: str, delta: float = 0.0) -> LinearMap:
    """Optics of the Bell-state analyzer: ``"if"`` (interferometer) or ``"bs"``."""
    if analyzer == "if":
        return tb_interferometer_map(delta)
    if analyzer == "bs":
        return compose(beamsplitter_map("a", "b"), swap_map("a", "e"), swap_map("b", "f"))
    raise ValueError(f"unknown analyzer {analyzer!r}")


def bob_analyzer_map(beta: float) -> LinearMap:
    """Bob's analysis interferometer; his detector watches port ``h``."""
    return tb_interferometer_map(beta, inputs=("bob", "h"), outputs=("g", "h"))


@dataclass(frozen=True)
class QubitSpec:
    """Time-bin qubit ``amp0|0> + amp1|1>`` carried by one photon on ``port``."""

    amp0: complex
    amp1: complex
    port: str = "a"
    tag: int = 0

    def __post_init__(self):
        if abs(abs(self.amp0) ** 2 + abs(self.amp1) ** 2 - 1) > 1e-12:
            raise ValueError("qubit amplitudes are not normalized")

    @classmethod
    def from_phase(cls, alpha: float, port: str = "a", amp0: float = 1 / math.sqrt(2), tag: int = 0) -> "QubitSpec":
        """``A|0> + e^{i alpha} B|1>`` with real ``A`` and ``B = sqrt(1 - A^2)``."""
        return cls(amp0, math.sqrt(1 - amp0**2) * cmath.exp(1j * alpha), port, tag)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)


def qubit_encode(q: QubitSpec) -> PhotonicState:
    return PhotonicState(
        {
            OccupationVector(((ModeLabel(q.port, 0, q.tag), 1),)): q.amp0,
            OccupationVector(((ModeLabel(q.port, 1, q.tag), 1),)): q.amp1,
        }
    )
