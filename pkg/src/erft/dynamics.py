"""Deterministic transformations and occupation-number instruments.

The 50-50 beamsplitter routes a lone excitation by the product of the two
phase signs: it stays in its mode when the product is +1 and hops to the
partner mode when the product is -1.  Phases are never touched by
transformations.  Measuring a mode's occupation randomizes that mode's
phase, whatever the outcome; the randomizing coin is an explicit argument.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass
from fractions import Fraction

from erft.ontology import (
    DomainError,
    EpistemicState,
    JointOnticState,
    ModeId,
    ModeOnticState,
)

PI = math.pi


class MultiExcitationWarning(UserWarning):
    """A beamsplitter saw both of its modes occupied."""


@dataclass(frozen=True)
class Beamsplitter:
    i: ModeId
    j: ModeId

    def __post_init__(self) -> None:
        if self.i == self.j:
            raise DomainError(f"beamsplitter needs two distinct modes, got {self.i} twice")

    @property
    def modes(self) -> tuple[ModeId, ...]:
        return (self.i, self.j)


@dataclass(frozen=True)
class PhaseShift:
    m: ModeId
    phi: float

    def __post_init__(self) -> None:
        if self.phi not in (0, PI):
            raise DomainError(f"unsupported phase {self.phi!r}; toy domain is {{0, pi}}")

    @property
    def modes(self) -> tuple[ModeId, ...]:
        return (self.m,)


@dataclass(frozen=True)
class Identity:
    @property
    def modes(self) -> tuple[ModeId, ...]:
        return ()


Transformation = Beamsplitter | PhaseShift | Identity
OnticRule = Callable[[JointOnticState, Transformation], JointOnticState]


@dataclass(frozen=True)
class Instrument:
    m: ModeId
    destructive: bool = False


@dataclass(frozen=True)
class MeasurementResult:
    outcome: int
    post_state: EpistemicState | JointOnticState
    probability: Fraction | None = None


def coin_phase(coin: int) -> int:
    """Map a fair bit to a phase sign: 0 (heads) -> +1, 1 (tails) -> -1."""
    if coin not in (0, 1):
        raise DomainError(f"coin must be 0 or 1, got {coin!r}")
    return 1 - 2 * coin


def apply_transformation_ontic(x: JointOnticState, t: Transformation) -> JointOnticState:
    if isinstance(t, Identity):
        return x
    if isinstance(t, PhaseShift):
        x.check_mode(t.m)
        if t.phi == 0:
            return x
        return x.updated(t.m, s=-x.phase(t.m))
    if isinstance(t, Beamsplitter):
        x.check_mode(t.i)
        x.check_mode(t.j)
        ni, nj = x.occ(t.i), x.occ(t.j)
        if ni + nj == 2:
            warnings.warn(
                f"beamsplitter on modes {t.i},{t.j} with both occupied; acting as identity",
                MultiExcitationWarning,
                stacklevel=2,
            )
            return x
        if ni + nj == 0:
            return x
        if x.phase(t.i) * x.phase(t.j) == -1:
            return x.updated(t.i, n=nj).updated(t.j, n=ni)
        return x
    raise DomainError(f"unknown transformation {t!r}")


def pushforward(
    p: EpistemicState, t: Transformation, rule: OnticRule = apply_transformation_ontic
) -> EpistemicState:
    for m in t.modes:
        if not 0 <= m < p.mode_count:
            raise DomainError(f"mode id {m} out of range for {p.mode_count} modes")
    return EpistemicState.accumulate((rule(x, t), w) for x, w in p.items())


def measure_nondestructive_ontic(x: JointOnticState, m: ModeId, coin: int) -> tuple[int, JointOnticState]:
    outcome = x.occ(m)
    return outcome, x.updated(m, s=coin_phase(coin))


def measure_destructive_ontic(x: JointOnticState, m: ModeId, coin: int) -> tuple[int, JointOnticState]:
    outcome = x.occ(m)
    return outcome, x.updated(m, n=0, s=coin_phase(coin))


def measure_ontic(x: JointOnticState, instrument: Instrument, coin: int) -> tuple[int, JointOnticState]:
    if instrument.destructive:
        return measure_destructive_ontic(x, instrument.m, coin)
    return measure_nondestructive_ontic(x, instrument.m, coin)


def _measure_epistemic(p: EpistemicState, m: ModeId, destructive: bool) -> list[MeasurementResult]:
    if not 0 <= m < p.mode_count:
        raise DomainError(f"mode id {m} out of range for {p.mode_count} modes")
    total = p.total()
    results = []
    for outcome in (0, 1):
        branch = [(x, w) for x, w in p.items() if x.modes[m].n == outcome]
        mass = sum((w for _, w in branch), Fraction(0))
        if not mass:
            continue
        mixed = []
        for x, w in branch:
            for coin in (0, 1):
                if destructive:
                    _, y = measure_destructive_ontic(x, m, coin)
                else:
                    _, y = measure_nondestructive_ontic(x, m, coin)
                mixed.append((y, w / mass / 2))
        results.append(MeasurementResult(outcome, EpistemicState.accumulate(mixed), mass / total))
    return results


def measure_nondestructive_epistemic(p: EpistemicState, m: ModeId) -> list[MeasurementResult]:
    """Split the ensemble by the occupation of ``m``, then mix over the coin."""
    return _measure_epistemic(p, m, destructive=False)


def measure_destructive_epistemic(p: EpistemicState, m: ModeId) -> list[MeasurementResult]:
    return _measure_epistemic(p, m, destructive=True)


def measure_epistemic(p: EpistemicState, instrument: Instrument) -> list[MeasurementResult]:
    return _measure_epistemic(p, instrument.m, instrument.destructive)


def extend_with_vacuum(p: EpistemicState) -> EpistemicState:
    """Append a fresh vacuum mode with a uniformly unknown phase."""
    return EpistemicState.accumulate(
        (x.extended(ModeOnticState(0, s)), w / 2) for x, w in p.items() for s in (1, -1)
    )
