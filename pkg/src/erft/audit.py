"""Locality audits: variable-access tracing and no-signalling probes."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from erft.circuit import PI, Circuit, Detect, Divert, Fresh, Measure, Phase, causal_dag, detector_past
from erft.ensemble import (
    OutcomeDistribution,
    Override,
    TrialRecord,
    random_bit_count,
    require_valid,
    run_exact,
    run_ontic,
    trial_bits,
    tv_distance,
)
from erft.ontology import DomainError, JointOnticState, ModeOnticState


@dataclass(frozen=True)
class Access:
    element: int | None
    mode: int
    var: str  # "n" or "s"
    write: bool


@dataclass
class AccessLog:
    """Accesses attributed to the element executing when they happen."""

    accesses: list[Access] = field(default_factory=list)
    current: int | None = None

    def record(self, mode: int, var: str, write: bool) -> None:
        self.accesses.append(Access(self.current, mode, var, write))

    def by_element(self) -> dict[int | None, dict[str, set[tuple[int, str]]]]:
        out: dict[int | None, dict[str, set[tuple[int, str]]]] = {}
        for a in self.accesses:
            slot = out.setdefault(a.element, {"read": set(), "write": set()})
            slot["write" if a.write else "read"].add((a.mode, a.var))
        return out


@dataclass(frozen=True, order=True)
class TracedJointOnticState(JointOnticState):
    log: AccessLog = field(default_factory=AccessLog, compare=False, repr=False)

    def occ(self, m):
        value = super().occ(m)
        self.log.record(m, "n", False)
        return value

    def phase(self, m):
        value = super().phase(m)
        self.log.record(m, "s", False)
        return value

    def updated(self, m, *, n=None, s=None):
        if n is not None:
            self.log.record(m, "n", True)
        if s is not None:
            self.log.record(m, "s", True)
        return super().updated(m, n=n, s=s)

    def extended(self, mode: ModeOnticState):
        new = len(self.modes)
        self.log.record(new, "n", True)
        self.log.record(new, "s", True)
        return super().extended(mode)

    def _derive(self, modes):
        return TracedJointOnticState(modes, self.log)


@dataclass(frozen=True)
class AccessFinding:
    trial: int
    element: int
    kind: str
    mode: str
    var: str
    declared: tuple[str, ...]

    def __str__(self) -> str:
        return (
            f"trial {self.trial}: element {self.element} {self.kind}s {self.var} of mode {self.mode!r} "
            f"outside its modes {list(self.declared)}"
        )


@dataclass(frozen=True)
class AuditReport:
    circuit: str
    trials: int
    seed: int
    findings: tuple[AccessFinding, ...]
    accesses: Mapping[int, Mapping[str, frozenset[tuple[str, str]]]]
    records: tuple[TrialRecord, ...] = field(repr=False, default=())

    @property
    def ok(self) -> bool:
        return not self.findings

    def to_dict(self) -> dict:
        return {
            "circuit": self.circuit,
            "trials": self.trials,
            "seed": self.seed,
            "findings": [str(f) for f in self.findings],
            "accesses": {
                str(k): {rw: sorted(f"{m}.{v}" for m, v in vs) for rw, vs in slots.items()}
                for k, slots in sorted(self.accesses.items())
            },
        }


def traced_trial(
    c: Circuit, trial_index: int, master_seed: int, overrides: Mapping[int, Override] | None = None
) -> tuple[TrialRecord, AccessLog]:
    """One ontic trial with every read and write of ``n``/``s`` logged."""
    log = AccessLog()

    def enter(k: int) -> None:
        log.current = k

    bits = trial_bits(master_seed, trial_index, random_bit_count(c))
    transcript, trajectory = run_ontic(
        c,
        bits,
        wrap=lambda x: TracedJointOnticState(x.modes, log),
        on_element=enter,
        overrides=overrides,
        keep_trajectory=True,
    )
    return TrialRecord(trial_index, master_seed, trajectory, transcript), log


def taint_trace(
    c: Circuit, trials: int, seed: int, overrides: Mapping[int, Override] | None = None
) -> AuditReport:
    """Flag every access an element makes to a mode outside its own mode set."""
    require_valid(c)
    names = c.live_modes()
    findings: list[AccessFinding] = []
    seen: set[tuple] = set()
    usage: dict[int, dict[str, set[tuple[str, str]]]] = {}
    records = []
    for i in range(trials):
        record, log = traced_trial(c, i, seed, overrides)
        records.append(record)
        for a in log.accesses:
            if a.element is None:
                continue
            slot = usage.setdefault(a.element, {"read": set(), "write": set()})
            slot["write" if a.write else "read"].add((names[a.mode], a.var))
            declared = c.element_modes(a.element)
            if names[a.mode] not in declared:
                key = (a.element, a.mode, a.var, a.write)
                if key not in seen:
                    seen.add(key)
                    kind = "write" if a.write else "read"
                    findings.append(AccessFinding(i, a.element, kind, names[a.mode], a.var, declared))
    frozen = {k: {rw: frozenset(v) for rw, v in slots.items()} for k, slots in usage.items()}
    return AuditReport(c.name, trials, seed, tuple(findings), frozen, tuple(records))


# --- no-signalling ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Intervention:
    """Change one element: ``toggle`` a phase, ``insert``/``remove`` an element, or ``replace`` one."""

    kind: str
    index: int
    element: object | None = None

    def apply(self, c: Circuit) -> Circuit:
        els = list(c.elements)
        if not 0 <= self.index <= len(els):
            raise DomainError(f"intervention index {self.index} out of range")
        if self.kind == "toggle":
            e = els[self.index]
            if not isinstance(e, Phase):
                raise DomainError(f"element {self.index} is not a phase shifter")
            els[self.index] = Phase(e.mode, PI if e.phi == 0 else 0.0)
        elif self.kind == "insert":
            els.insert(self.index, self.element)
        elif self.kind == "remove":
            del els[self.index]
        elif self.kind == "replace":
            els[self.index] = self.element
        else:
            raise DomainError(f"unknown intervention kind {self.kind!r}")
        return c.replace_elements(els)

    def sites(self, base: Circuit) -> list[tuple[Circuit, int]]:
        """Intervention node in each circuit where it exists."""
        intervened = self.apply(base)
        if self.kind == "insert":
            return [(intervened, self.index)]
        if self.kind == "remove":
            return [(base, self.index)]
        return [(base, self.index), (intervened, self.index)]


@dataclass(frozen=True)
class SignallingProbe:
    base: Circuit
    intervention: Intervention
    probe_modes: tuple[str, ...]


@dataclass(frozen=True)
class SignallingReport:
    probe_modes: tuple[str, ...]
    base_marginal: OutcomeDistribution
    intervened_marginal: OutcomeDistribution
    deviation: Fraction | float


class CausalPrecondition(DomainError):
    """The probe sits downstream of the intervention, so influence is allowed."""


def probe_marginal(d: OutcomeDistribution, probe_modes: Sequence[str]) -> OutcomeDistribution:
    """Which probed detector fired, or ``other``."""
    wanted = {f"D_{m}" for m in probe_modes}
    return d.map(lambda t: t[-1] if t[-1] in wanted else "other")


def check_admissible(p: SignallingProbe) -> None:
    for circuit, site in p.intervention.sites(p.base):
        if not isinstance(circuit.elements[-1], Detect):
            raise DomainError("intervention must leave the terminal detect in place")
        if site == len(circuit.elements) - 1:
            raise CausalPrecondition("intervention on the terminal detect")
        for m in p.probe_modes:
            if site in detector_past(circuit, m):
                raise CausalPrecondition(
                    f"detector on {m!r} is causally downstream of element {site} "
                    f"({type(circuit.elements[site]).__name__})"
                )
    if not causal_dag(p.intervention.apply(p.base)).is_acyclic():  # pragma: no cover
        raise DomainError("intervened circuit has a cyclic causal graph")


def no_signalling_check(p: SignallingProbe) -> SignallingReport:
    check_admissible(p)
    base = probe_marginal(run_exact(p.base), p.probe_modes)
    intervened = probe_marginal(run_exact(p.intervention.apply(p.base)), p.probe_modes)
    return SignallingReport(p.probe_modes, base, intervened, tv_distance(base, intervened))


def candidate_interventions(c: Circuit) -> list[Intervention]:
    """Phase toggles, measurement removals and nondestructive insertions on every live mode."""
    out = []
    last = len(c.elements) - 1
    for k, e in enumerate(c.elements[:last]):
        if isinstance(e, Phase):
            out.append(Intervention("toggle", k))
        if isinstance(e, Measure):
            out.append(Intervention("remove", k))
            out.append(Intervention("replace", k, Measure(e.mode, not e.destructive)))
    for pos in range(1, last + 1):
        alive = _alive_modes_at(c, pos)
        for m in alive:
            out.append(Intervention("insert", pos, Measure(m, False)))
    return out


def _alive_modes_at(c: Circuit, pos: int) -> list[str]:
    alive = list(c.modes)
    for e in c.elements[:pos]:
        if isinstance(e, Fresh):
            alive.append(e.mode)
        elif isinstance(e, Divert) and e.mode in alive:
            alive.remove(e.mode)
    return alive


def admissible_probes(c: Circuit) -> list[SignallingProbe]:
    probes = []
    detect = c.elements[-1]
    for iv in candidate_interventions(c):
        for m in detect.targets:
            p = SignallingProbe(c, iv, (m,))
            try:
                check_admissible(p)
            except DomainError:
                continue
            probes.append(p)
    return probes


def nonlocal_phase_fixture(victim: str) -> Override:
    """A deliberately broken phase shifter that also reads and flips ``victim``'s phase."""

    def op(x: JointOnticState, element, index, draw):
        v = index[victim]
        x = x.updated(index[element.mode], s=-x.phase(index[element.mode]))
        return x.updated(v, s=-x.phase(v)), None

    return op
