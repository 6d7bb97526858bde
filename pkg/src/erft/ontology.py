"""Ontic and epistemic state spaces of the toy field theory.

Every mode carries an occupation bit ``n`` in {0, 1} and a phase bit ``s``
in {+1, -1} (phase 0 or pi).  An epistemic state is a probability
distribution over joint ontic states, stored sparsely with exact dyadic
weights.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType

ModeId = int


class DomainError(ValueError):
    """Raised when an operation is called outside its domain."""


def is_dyadic(q: Fraction) -> bool:
    d = q.denominator
    return d & (d - 1) == 0


@dataclass(frozen=True, order=True)
class ModeOnticState:
    n: int
    s: int

    def __post_init__(self) -> None:
        if self.n not in (0, 1) or isinstance(self.n, bool):
            raise DomainError(f"occupation must be 0 or 1, got {self.n!r}")
        if self.s not in (1, -1) or isinstance(self.s, bool):
            raise DomainError(f"phase sign must be +1 or -1, got {self.s!r}")

    def __repr__(self) -> str:
        return f"({self.n},{'+' if self.s > 0 else '-'}1)"


@dataclass(frozen=True, order=True)
class JointOnticState:
    """Ontic state of every live mode, indexed by mode id.

    All reads and writes made by the dynamics go through :meth:`occ`,
    :meth:`phase` and :meth:`updated`; the locality audit relies on this.
    """

    modes: tuple[ModeOnticState, ...]

    @classmethod
    def of(cls, *pairs: tuple[int, int]) -> JointOnticState:
        return cls(tuple(ModeOnticState(n, s) for n, s in pairs))

    def __len__(self) -> int:
        return len(self.modes)

    def __iter__(self) -> Iterator[ModeOnticState]:
        return iter(self.modes)

    def check_mode(self, m: ModeId) -> None:
        if not isinstance(m, int) or not 0 <= m < len(self.modes):
            raise DomainError(f"mode id {m!r} out of range for {len(self.modes)} live modes")

    def occ(self, m: ModeId) -> int:
        self.check_mode(m)
        return self.modes[m].n

    def phase(self, m: ModeId) -> int:
        self.check_mode(m)
        return self.modes[m].s

    def updated(self, m: ModeId, *, n: int | None = None, s: int | None = None) -> JointOnticState:
        self.check_mode(m)
        old = self.modes[m]
        new = ModeOnticState(old.n if n is None else n, old.s if s is None else s)
        return self._derive(self.modes[:m] + (new,) + self.modes[m + 1 :])

    def extended(self, mode: ModeOnticState) -> JointOnticState:
        """Append a newly introduced mode."""
        return self._derive(self.modes + (mode,))

    def plain(self) -> JointOnticState:
        return JointOnticState(self.modes)

    def _derive(self, modes: tuple[ModeOnticState, ...]) -> JointOnticState:
        return JointOnticState(modes)

    def __repr__(self) -> str:
        return "(" + ",".join(repr(x) for x in self.modes) + ")"


@dataclass(frozen=True)
class EpistemicState:
    """Sparse distribution over joint ontic states of a fixed number of modes.

    Weights must be positive rationals.  Normalization and dyadic
    denominators are not enforced here; :func:`validate_epistemic` reports
    on both.  Conditioning a state of three or more modes on a measurement
    outcome of probability 3/4 legitimately yields weights like 1/3.
    """

    weights: Mapping[JointOnticState, Fraction]
    mode_count: int = field(init=False)

    def __init__(self, weights: Mapping[JointOnticState, Fraction] | Iterable[tuple[JointOnticState, Fraction]]):
        items = dict(weights)
        if not items:
            raise DomainError("epistemic state needs a nonempty support")
        sizes = {len(x) for x in items}
        if len(sizes) != 1:
            raise DomainError(f"support mixes joint states of sizes {sorted(sizes)}")
        clean = {}
        for x, w in sorted(items.items()):
            w = Fraction(w)
            if w <= 0:
                raise DomainError(f"nonpositive weight {w} on {x!r}")
            clean[x.plain()] = w
        object.__setattr__(self, "weights", MappingProxyType(clean))
        object.__setattr__(self, "mode_count", sizes.pop())

    @classmethod
    def point(cls, x: JointOnticState) -> EpistemicState:
        return cls({x: Fraction(1)})

    @classmethod
    def accumulate(cls, pairs: Iterable[tuple[JointOnticState, Fraction]]) -> EpistemicState:
        acc: dict[JointOnticState, Fraction] = {}
        for x, w in pairs:
            acc[x.plain()] = acc.get(x.plain(), Fraction(0)) + w
        return cls({x: w for x, w in acc.items() if w})

    def is_dyadic(self) -> bool:
        return all(is_dyadic(w) for w in self.weights.values())

    def total(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))

    def items(self):
        return self.weights.items()

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, x: JointOnticState) -> Fraction:
        return self.weights.get(x, Fraction(0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EpistemicState):
            return NotImplemented
        return dict(self.weights) == dict(other.weights)

    def __hash__(self) -> int:
        return hash(frozenset(self.weights.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{x!r}: {w}" for x, w in self.weights.items())
        return f"EpistemicState({{{body}}})"


@dataclass(frozen=True)
class ValidityReport:
    normalized: bool
    phase_marginals_uniform: tuple[bool, ...]
    max_weight_bound_ok: bool
    dyadic: bool
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def _uniform_phase_states(occupations: tuple[int, ...]) -> dict[JointOnticState, Fraction]:
    k = len(occupations)
    w = Fraction(1, 2**k)
    out = {}
    for signs in itertools.product((1, -1), repeat=k):
        out[JointOnticState(tuple(ModeOnticState(n, s) for n, s in zip(occupations, signs)))] = w
    return out


def make_source_state(mode_count: int, excited: ModeId) -> EpistemicState:
    """One excitation in ``excited``, vacuum elsewhere, all phases uniform."""
    if mode_count < 1:
        raise DomainError(f"mode_count must be positive, got {mode_count}")
    if not 0 <= excited < mode_count:
        raise DomainError(f"excited mode {excited} out of range for {mode_count} modes")
    occupations = tuple(1 if m == excited else 0 for m in range(mode_count))
    return EpistemicState(_uniform_phase_states(occupations))


def make_vacuum_state(mode_count: int) -> EpistemicState:
    if mode_count < 1:
        raise DomainError(f"mode_count must be positive, got {mode_count}")
    return EpistemicState(_uniform_phase_states((0,) * mode_count))


def marginal(state: EpistemicState, m: ModeId) -> dict[ModeOnticState, Fraction]:
    if not 0 <= m < state.mode_count:
        raise DomainError(f"mode id {m} out of range for {state.mode_count} modes")
    out: dict[ModeOnticState, Fraction] = {}
    for x, w in state.items():
        out[x.modes[m]] = out.get(x.modes[m], Fraction(0)) + w
    return dict(sorted(out.items()))


def validate_epistemic(state: EpistemicState) -> ValidityReport:
    """Check normalization and the two epistemic-restriction surrogates.

    The surrogates are: every single-mode phase marginal is exactly
    uniform, and no joint ontic state carries more than ``2**-k`` weight
    for ``k`` live modes.  Dyadic weights are reported alongside.
    """
    violations = []
    total = state.total()
    normalized = total == 1
    if not normalized:
        violations.append(f"weights sum to {total}, not 1")

    uniform = []
    half = Fraction(1, 2)
    for m in range(state.mode_count):
        plus = sum((w for x, w in state.items() if x.modes[m].s == 1), Fraction(0))
        minus = sum((w for x, w in state.items() if x.modes[m].s == -1), Fraction(0))
        ok = plus == minus == half
        uniform.append(ok)
        if not ok:
            violations.append(f"phase marginal of mode {m} is ({plus}, {minus}), not uniform")

    bound = Fraction(1, 2**state.mode_count)
    heaviest = max(state.weights.values())
    bound_ok = heaviest <= bound
    if not bound_ok:
        violations.append(f"max weight {heaviest} exceeds 2^-{state.mode_count} = {bound}")

    dyadic = state.is_dyadic()
    if not dyadic:
        odd = sorted({w.denominator for w in state.weights.values() if not is_dyadic(w)})
        violations.append(f"weights with non-power-of-two denominators {odd}")

    return ValidityReport(normalized, tuple(uniform), bound_ok, dyadic, tuple(violations))
