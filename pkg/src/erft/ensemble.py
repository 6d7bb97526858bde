"""Running circuits: exact ensemble evolution, brute-force enumeration, sampling.

Outcomes are transcripts: one entry per instrument in circuit order,
followed by a single terminal label.  Instrument entries are ``m=0`` /
``m=1`` for a nondestructive measurement and ``pass@m`` / ``absorbed@m``
for a destructive one.  The terminal label names the detector that fired
(``D_m``), an environment detector behind a diverted mode
(``diverted@m``), or ``none``.
"""

from __future__ import annotations

import itertools
import math
import os
from collections import Counter
from collections.abc import Callable, Iterable, Iterator, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType

import numpy as np

from erft.circuit import (
    BS,
    Circuit,
    Detect,
    Divert,
    Fresh,
    Measure,
    Phase,
    Source,
    validate,
)
from erft.dynamics import (
    Beamsplitter,
    Instrument,
    OnticRule,
    PhaseShift,
    apply_transformation_ontic,
    coin_phase,
    extend_with_vacuum,
    measure_epistemic,
    measure_ontic,
    pushforward,
)
from erft.ontology import (
    DomainError,
    EpistemicState,
    JointOnticState,
    ModeOnticState,
    make_source_state,
)

Transcript = tuple[str, ...]


class InvalidCircuit(DomainError):
    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("; ".join(str(f) for f in self.findings))


def require_valid(c: Circuit) -> None:
    findings = validate(c)
    if findings:
        raise InvalidCircuit(findings)


def instrument_label(mode: str, destructive: bool, outcome: int) -> str:
    if destructive:
        return f"absorbed@{mode}" if outcome else f"pass@{mode}"
    return f"{mode}={outcome}"


def terminal_label(fired: Sequence[str]) -> str:
    return "+".join(fired) if fired else "none"


def headline(transcript: Transcript) -> str:
    """Collapse a transcript to what finally happened to the excitation."""
    terminal = transcript[-1]
    if terminal != "none":
        return terminal
    absorbed = [t for t in transcript[:-1] if t.startswith("absorbed@")]
    return absorbed[-1] if absorbed else "none"


def format_label(key: tuple) -> str:
    return ",".join(str(k) for k in key)


def format_fraction(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class OutcomeDistribution:
    entries: Mapping[tuple, Fraction | float]
    kind: str = "exact"
    trials: int | None = None
    counts: Mapping[tuple, int] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("exact", "estimated"):
            raise DomainError(f"unknown distribution kind {self.kind!r}")
        object.__setattr__(self, "entries", MappingProxyType(dict(sorted(self.entries.items()))))
        if self.counts is not None:
            object.__setattr__(self, "counts", MappingProxyType(dict(sorted(self.counts.items()))))

    @classmethod
    def from_counts(cls, counts: Mapping[tuple, int]) -> OutcomeDistribution:
        n = sum(counts.values())
        return cls({k: v / n for k, v in counts.items()}, "estimated", n, dict(counts))

    def __getitem__(self, key) -> Fraction | float:
        if not isinstance(key, tuple):
            key = (key,)
        return self.entries.get(key, Fraction(0) if self.is_exact() else 0.0)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OutcomeDistribution):
            return NotImplemented
        return dict(self.entries) == dict(other.entries) and self.kind == other.kind

    def __hash__(self) -> int:
        return hash(frozenset(self.entries.items()))

    def is_exact(self) -> bool:
        return self.kind == "exact"

    def is_dyadic(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.entries.values())

    def support(self) -> list[tuple]:
        return list(self.entries)

    def total(self) -> Fraction | float:
        zero = Fraction(0) if self.is_dyadic() else 0.0
        return sum(self.entries.values(), zero)

    def map(self, fn: Callable[[tuple], object]) -> OutcomeDistribution:
        """Push the distribution through a relabelling of outcomes."""

        def key(k):
            v = fn(k)
            return v if isinstance(v, tuple) else (v,)

        entries: dict[tuple, Fraction | float] = {}
        for k, p in self.entries.items():
            entries[key(k)] = entries.get(key(k), 0) + p
        counts = None
        if self.counts is not None:
            counts = Counter()
            for k, n in self.counts.items():
                counts[key(k)] += n
        return OutcomeDistribution(entries, self.kind, self.trials, counts)

    def marginal(self, positions: Iterable[int]) -> OutcomeDistribution:
        pos = tuple(positions)
        return self.map(lambda k: tuple(k[i] for i in pos))

    def terminal(self) -> OutcomeDistribution:
        return self.map(lambda k: k[-1])

    def summary(self) -> OutcomeDistribution:
        return self.map(headline)

    def as_labels(self) -> dict[str, Fraction | float]:
        return {format_label(k): p for k, p in self.entries.items()}

    def to_json_outcomes(self) -> dict[str, str | float]:
        return {
            format_label(k): format_fraction(p) if isinstance(p, Fraction) else float(p)
            for k, p in self.entries.items()
        }


def _matches(key: tuple, pattern: Mapping[int, str]) -> bool:
    return all(key[i] == v for i, v in pattern.items())


def condition(d: OutcomeDistribution, pattern: Mapping[int, str]) -> OutcomeDistribution:
    """Restrict to transcripts agreeing with ``pattern`` (position -> label) and renormalize."""
    kept = {k: p for k, p in d.entries.items() if _matches(k, pattern)}
    mass = sum(kept.values(), 0)
    if not mass:
        raise DomainError(f"pattern {dict(pattern)} has zero probability")
    counts = None
    trials = d.trials
    if d.counts is not None:
        counts = {k: n for k, n in d.counts.items() if _matches(k, pattern)}
        trials = sum(counts.values())
    return OutcomeDistribution({k: p / mass for k, p in kept.items()}, d.kind, trials, counts)


def tv_distance(p: OutcomeDistribution, q: OutcomeDistribution) -> Fraction | float:
    keys = set(p.entries) | set(q.entries)
    total = sum((abs(p[k] - q[k]) for k in keys), 0)
    return total / 2


# --- exact evolution of the epistemic state -------------------------------------------------


@dataclass(frozen=True)
class Branch:
    transcript: Transcript
    probability: Fraction
    state: EpistemicState | None


def mode_index(c: Circuit) -> dict[str, int]:
    return {m: k for k, m in enumerate(c.live_modes())}


def evolve_epistemic(c: Circuit, rule: OnticRule = apply_transformation_ontic) -> Iterator[tuple[int, list[Branch]]]:
    """Yield ``(element index, branches)`` after every element.

    Each instrument splits every branch by outcome; the post-state of a
    branch is the outcome-consistent subensemble with the measured mode's
    phase mixed over both coin values.  The Detect step yields branches
    with ``state=None`` carrying the terminal label.
    """
    require_valid(c)
    index = mode_index(c)
    diverted: list[str] = []
    branches: list[Branch] = []
    for k, e in enumerate(c.elements):
        if isinstance(e, Source):
            branches = [Branch((), Fraction(1), make_source_state(len(c.modes), index[e.mode]))]
        elif isinstance(e, BS):
            t = Beamsplitter(index[e.i], index[e.j])
            branches = [Branch(b.transcript, b.probability, pushforward(b.state, t, rule)) for b in branches]
        elif isinstance(e, Phase):
            t = PhaseShift(index[e.mode], e.phi)
            branches = [Branch(b.transcript, b.probability, pushforward(b.state, t, rule)) for b in branches]
        elif isinstance(e, Measure):
            inst = Instrument(index[e.mode], e.destructive)
            branches = [
                Branch(
                    b.transcript + (instrument_label(e.mode, e.destructive, r.outcome),),
                    b.probability * r.probability,
                    r.post_state,
                )
                for b in branches
                for r in measure_epistemic(b.state, inst)
            ]
        elif isinstance(e, Fresh):
            branches = [Branch(b.transcript, b.probability, extend_with_vacuum(b.state)) for b in branches]
        elif isinstance(e, Divert):
            diverted.append(e.mode)
        elif isinstance(e, Detect):
            targets = [m for m in e.targets if m not in diverted]
            ended: dict[Transcript, Fraction] = {}
            for b in branches:
                for x, w in b.state.items():
                    label = terminal_label(_fired(x, diverted, targets, index))
                    key = b.transcript + (label,)
                    ended[key] = ended.get(key, Fraction(0)) + b.probability * w
            branches = [Branch(t, p, None) for t, p in ended.items()]
        else:  # pragma: no cover
            raise DomainError(f"unknown element {e!r}")
        yield k, branches


def _fired(x: JointOnticState, diverted, targets, index) -> list[str]:
    fired = [f"diverted@{m}" for m in diverted if x.occ(index[m])]
    fired += [f"D_{m}" for m in targets if x.occ(index[m])]
    return fired


def run_exact(c: Circuit, rule: OnticRule = apply_transformation_ontic) -> OutcomeDistribution:
    """Exact transcript distribution via evolution of the epistemic state."""
    branches: list[Branch] = []
    for _, branches in evolve_epistemic(c, rule):
        pass
    return OutcomeDistribution({b.transcript: b.probability for b in branches}, "exact")


def reachable_states(c: Circuit) -> Iterator[tuple[int, Transcript, EpistemicState]]:
    for k, branches in evolve_epistemic(c):
        for b in branches:
            if b.state is not None:
                yield k, b.transcript, b.state


# --- ontic trials ---------------------------------------------------------------------------


def random_bit_count(c: Circuit) -> int:
    """Fair bits consumed by one trial: initial phases, one per instrument, one per fresh mode."""
    return len(c.modes) + sum(isinstance(e, (Measure, Fresh)) for e in c.elements)


Override = Callable[[JointOnticState, object, Mapping[str, int], Callable[[], int]], tuple[JointOnticState, str | None]]


def run_ontic(
    c: Circuit,
    bits: Sequence[int],
    *,
    rule: OnticRule = apply_transformation_ontic,
    wrap: Callable[[JointOnticState], JointOnticState] | None = None,
    on_element: Callable[[int], None] | None = None,
    overrides: Mapping[int, Override] | None = None,
    keep_trajectory: bool = False,
) -> tuple[Transcript, tuple[JointOnticState, ...]]:
    """Run one ensemble element through the circuit using only ontic updates.

    ``bits`` supplies, in order, the initial phase bit of each declared mode
    and then one fair coin per instrument or fresh mode as they occur.
    """
    feed = iter(bits)
    draw = lambda: next(feed)  # noqa: E731
    index = mode_index(c)
    x = JointOnticState(tuple(ModeOnticState(0, coin_phase(draw())) for _ in c.modes))
    if wrap is not None:
        x = wrap(x)
    overrides = overrides or {}
    diverted: list[str] = []
    transcript: list[str] = []
    trajectory = []
    for k, e in enumerate(c.elements):
        if on_element is not None:
            on_element(k)
        if k in overrides:
            x, label = overrides[k](x, e, index, draw)
            if label is not None:
                transcript.append(label)
        elif isinstance(e, Source):
            x = x.updated(index[e.mode], n=1)
        elif isinstance(e, BS):
            x = rule(x, Beamsplitter(index[e.i], index[e.j]))
        elif isinstance(e, Phase):
            x = rule(x, PhaseShift(index[e.mode], e.phi))
        elif isinstance(e, Measure):
            outcome, x = measure_ontic(x, Instrument(index[e.mode], e.destructive), draw())
            transcript.append(instrument_label(e.mode, e.destructive, outcome))
        elif isinstance(e, Fresh):
            x = x.extended(ModeOnticState(0, coin_phase(draw())))
        elif isinstance(e, Divert):
            diverted.append(e.mode)
        elif isinstance(e, Detect):
            targets = [m for m in e.targets if m not in diverted]
            transcript.append(terminal_label(_fired(x, diverted, targets, index)))
        if keep_trajectory:
            trajectory.append(x.plain())
    return tuple(transcript), tuple(trajectory)


def enumerate_exact(c: Circuit, rule: OnticRule = apply_transformation_ontic) -> OutcomeDistribution:
    """Exact distribution by brute force over every initial ontic state and coin sequence."""
    require_valid(c)
    nbits = random_bit_count(c)
    weight = Fraction(1, 2**nbits)
    acc: dict[Transcript, Fraction] = {}
    for bits in itertools.product((0, 1), repeat=nbits):
        transcript, _ = run_ontic(c, bits, rule=rule)
        acc[transcript] = acc.get(transcript, Fraction(0)) + weight
    return OutcomeDistribution(acc, "exact")


# --- sampling -------------------------------------------------------------------------------


def trial_bits(master_seed: int, trial_index: int, count: int) -> list[int]:
    """Fair bits for one trial from a Philox stream keyed by (seed, trial index)."""
    if master_seed < 0 or trial_index < 0:
        raise DomainError("seed and trial index must be nonnegative")
    gen = np.random.Philox(key=[master_seed, trial_index])
    words = gen.random_raw(max(1, -(-count // 64)))
    return [(int(words[b // 64]) >> (b % 64)) & 1 for b in range(count)]


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    master_seed: int
    trajectory: tuple[JointOnticState, ...]
    transcript: Transcript

    @property
    def terminal(self) -> str:
        return self.transcript[-1]

    def to_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "master_seed": self.master_seed,
            "trajectory": [[[m.n, m.s] for m in x] for x in self.trajectory],
            "transcript": list(self.transcript),
        }


def run_trial(c: Circuit, trial_index: int, master_seed: int, **hooks) -> TrialRecord:
    require_valid(c)
    bits = trial_bits(master_seed, trial_index, random_bit_count(c))
    transcript, trajectory = run_ontic(c, bits, keep_trajectory=True, **hooks)
    return TrialRecord(trial_index, master_seed, trajectory, transcript)


def _count_range(c: Circuit, master_seed: int, start: int, stop: int) -> Counter:
    nbits = random_bit_count(c)
    counts: Counter = Counter()
    for i in range(start, stop):
        transcript, _ = run_ontic(c, trial_bits(master_seed, i, nbits))
        counts[transcript] += 1
    return counts


def _chunks(n: int, parts: int) -> list[tuple[int, int]]:
    bounds = np.linspace(0, n, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds, bounds[1:]) if b > a]


def run_ensemble(c: Circuit, n: int, master_seed: int, workers: int = 1) -> OutcomeDistribution:
    """Empirical transcript frequencies over trials ``0..n-1``.

    Trial ``i`` draws its randomness from its own keyed stream, so the
    result does not depend on how trials are split across workers.
    """
    if n < 1:
        raise DomainError(f"need at least one trial, got {n}")
    require_valid(c)
    workers = max(1, min(workers, n))
    if workers == 1:
        counts = _count_range(c, master_seed, 0, n)
    else:
        counts = Counter()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_count_range, c, master_seed, a, b) for a, b in _chunks(n, workers)]
            for fut in futures:
                counts.update(fut.result())
    return OutcomeDistribution.from_counts(counts)


@dataclass(frozen=True)
class ConvergenceReport:
    circuit: str
    seed: int
    trials: tuple[int, ...]
    tv: tuple[float, ...]
    support_size: int = field(default=0)

    def bound(self, n: int) -> float:
        return 3 * math.sqrt(self.support_size / n)

    def to_dict(self) -> dict:
        return {
            "circuit": self.circuit,
            "seed": self.seed,
            "support_size": self.support_size,
            "rows": [
                {"trials": n, "tv": tv, "bound": self.bound(n)} for n, tv in zip(self.trials, self.tv)
            ],
        }


def convergence_experiment(c: Circuit, n_list: Sequence[int], master_seed: int, workers: int = 1) -> ConvergenceReport:
    n_list = tuple(int(n) for n in n_list)
    if not n_list:
        raise DomainError("trial-count list is empty")
    if any(n < 1 for n in n_list) or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError(f"trial counts must be positive and strictly increasing, got {list(n_list)}")
    exact = run_exact(c)
    tvs = tuple(float(tv_distance(run_ensemble(c, n, master_seed, workers), exact)) for n in n_list)
    return ConvergenceReport(c.name, master_seed, n_list, tvs, len(exact))


def default_workers() -> int:
    return os.cpu_count() or 1
