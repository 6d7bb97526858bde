"""Single-excitation quantum reference for the same circuits.

The state is a complex amplitude vector over the vacuum (slot 0) and one
excitation in each live mode.  Beamsplitters use the real Hadamard
convention, which pairs with the toy rule: with no phase shift the
excitation returns to its input port.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from erft.circuit import BS, Circuit, Detect, Divert, Fresh, Measure, Phase, Source, validate
from erft.ensemble import (
    InvalidCircuit,
    OutcomeDistribution,
    instrument_label,
    mode_index,
    terminal_label,
)
from erft.ontology import DomainError

# Beamsplitter convention paired with the toy routing rule.
BEAMSPLITTER_CONVENTION = "real-hadamard"
NORM_TOL = 1e-12
_PRUNE = 1e-15


@dataclass(frozen=True)
class QuantumState:
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 1 or a.size < 1:
            raise DomainError("amplitudes must be a nonempty vector")
        if abs(np.vdot(a, a).real - 1) > NORM_TOL:
            raise DomainError(f"state not normalized: |psi|^2 = {np.vdot(a, a).real!r}")
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def single(cls, mode_count: int, m: int) -> QuantumState:
        a = np.zeros(mode_count + 1, dtype=complex)
        a[m + 1] = 1
        return cls(a)

    @classmethod
    def vacuum(cls, mode_count: int) -> QuantumState:
        a = np.zeros(mode_count + 1, dtype=complex)
        a[0] = 1
        return cls(a)

    @property
    def mode_count(self) -> int:
        return self.amplitudes.size - 1

    def amp(self, m: int) -> complex:
        return complex(self.amplitudes[m + 1])

    def occupation_probability(self, m: int) -> float:
        return abs(self.amp(m)) ** 2

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def with_fresh_mode(self) -> QuantumState:
        return QuantumState(np.append(self.amplitudes, 0))


def _check(q: QuantumState, *modes: int) -> None:
    for m in modes:
        if not 0 <= m < q.mode_count:
            raise DomainError(f"mode {m} out of range for {q.mode_count} modes")


def apply_bs(q: QuantumState, i: int, j: int) -> QuantumState:
    if i == j:
        raise DomainError("beamsplitter needs two distinct modes")
    _check(q, i, j)
    a = q.amplitudes.copy()
    ai, aj = a[i + 1], a[j + 1]
    a[i + 1] = (ai + aj) / math.sqrt(2)
    a[j + 1] = (ai - aj) / math.sqrt(2)
    return QuantumState(a)


def apply_phase(q: QuantumState, m: int, phi: float) -> QuantumState:
    _check(q, m)
    a = q.amplitudes.copy()
    a[m + 1] *= cmath.exp(1j * phi)
    return QuantumState(a)


def measure_occupation(q: QuantumState, m: int, destructive: bool = False) -> list[tuple[int, float, QuantumState]]:
    """Born-rule branches ``(outcome, probability, post-state)`` with nonzero probability.

    The no-click branch is the renormalized projection whichever kind of
    measurement is made; a click leaves ``|1_m>`` or, destructively, the
    vacuum.
    """
    _check(q, m)
    p1 = q.occupation_probability(m)
    out = []
    p0 = 1 - p1
    if p0 > _PRUNE:
        a = q.amplitudes.copy()
        a[m + 1] = 0
        out.append((0, p0, QuantumState(a / math.sqrt(np.vdot(a, a).real))))
    if p1 > _PRUNE:
        post = QuantumState.vacuum(q.mode_count) if destructive else QuantumState.single(q.mode_count, m)
        out.append((1, p1, post))
    return out


def run_quantum(c: Circuit) -> OutcomeDistribution:
    """Branch-tree evaluation of the circuit; accepts any real phase.

    A diverted mode is left alone and read by an environment detector at
    the end, together with the terminal detectors.
    """
    findings = [f for f in validate(c) if f.code != "unsupported-phase"]
    if findings:
        raise InvalidCircuit(findings)
    index = mode_index(c)
    diverted: list[str] = []
    branches: list[tuple[tuple[str, ...], float, QuantumState]] = []
    for e in c.elements:
        if isinstance(e, Source):
            branches = [((), 1.0, QuantumState.single(len(c.modes), index[e.mode]))]
        elif isinstance(e, BS):
            branches = [(t, p, apply_bs(q, index[e.i], index[e.j])) for t, p, q in branches]
        elif isinstance(e, Phase):
            branches = [(t, p, apply_phase(q, index[e.mode], e.phi)) for t, p, q in branches]
        elif isinstance(e, Measure):
            branches = [
                (t + (instrument_label(e.mode, e.destructive, o),), p * po, post)
                for t, p, q in branches
                for o, po, post in measure_occupation(q, index[e.mode], e.destructive)
            ]
        elif isinstance(e, Fresh):
            branches = [(t, p, q.with_fresh_mode()) for t, p, q in branches]
        elif isinstance(e, Divert):
            diverted.append(e.mode)
        elif isinstance(e, Detect):
            targets = [m for m in e.targets if m not in diverted]
            readers = [(f"diverted@{m}", index[m]) for m in diverted] + [(f"D_{m}", index[m]) for m in targets]
            ended: dict[tuple[str, ...], float] = {}
            for t, p, q in branches:
                seen = 0.0
                for label, m in readers:
                    pm = q.occupation_probability(m)
                    seen += pm
                    if pm > _PRUNE:
                        ended[t + (label,)] = ended.get(t + (label,), 0.0) + p * pm
                if 1 - seen > _PRUNE:
                    key = t + (terminal_label([]),)
                    ended[key] = ended.get(key, 0.0) + p * (1 - seen)
            return OutcomeDistribution(ended, "exact")
    raise InvalidCircuit([])  # pragma: no cover - validate guarantees a Detect
