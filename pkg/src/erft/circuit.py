"""Circuit model: elements over named modes, static validation, causal DAG.

Statement order is temporal order.  Each element acts on a set of modes;
per-mode timelines and the causal DAG are derived from that order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

PI = math.pi


@dataclass(frozen=True)
class Source:
    mode: str

    def modes(self) -> tuple[str, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class BS:
    i: str
    j: str

    def modes(self) -> tuple[str, ...]:
        return (self.i, self.j)


@dataclass(frozen=True)
class Phase:
    mode: str
    phi: float

    def modes(self) -> tuple[str, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class Measure:
    mode: str
    destructive: bool = False
    # "block m" sugar; presentation only, not part of the structure
    block: bool = field(default=False, compare=False)

    def modes(self) -> tuple[str, ...]:
        return (self.mode,)


def Block(mode: str) -> Measure:
    return Measure(mode, destructive=True, block=True)


@dataclass(frozen=True)
class Divert:
    mode: str

    def modes(self) -> tuple[str, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class Fresh:
    mode: str

    def modes(self) -> tuple[str, ...]:
        return (self.mode,)


@dataclass(frozen=True)
class Detect:
    targets: tuple[str, ...]

    def modes(self) -> tuple[str, ...]:
        return self.targets


Element = Source | BS | Phase | Measure | Divert | Fresh | Detect
INSTRUMENTS = (Measure,)


@dataclass(frozen=True)
class Circuit:
    name: str
    modes: tuple[str, ...]
    elements: tuple[Element, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "elements", tuple(self.elements))

    def replace_elements(self, elements) -> Circuit:
        return replace(self, elements=tuple(elements))

    def diverted_before(self, index: int) -> tuple[str, ...]:
        return tuple(e.mode for e in self.elements[:index] if isinstance(e, Divert))

    def element_modes(self, index: int) -> tuple[str, ...]:
        """Modes an element may touch; a Detect also reads every diverted mode."""
        e = self.elements[index]
        if isinstance(e, Detect):
            return self.diverted_before(index) + tuple(m for m in e.targets if m not in self.diverted_before(index))
        return e.modes()

    def live_modes(self) -> tuple[str, ...]:
        """Declared modes followed by freshly introduced ones, in order."""
        return self.modes + tuple(e.mode for e in self.elements if isinstance(e, Fresh))


@dataclass(frozen=True)
class Finding:
    code: str
    message: str
    element: int | None = None

    def __str__(self) -> str:
        where = f"element {self.element}: " if self.element is not None else ""
        return f"{where}{self.message}"


def validate(c: Circuit) -> list[Finding]:
    """Return every invariant violation; an empty list means the circuit is valid."""
    out: list[Finding] = []

    if len(set(c.modes)) != len(c.modes):
        seen = set()
        for m in c.modes:
            if m in seen:
                out.append(Finding("duplicate-mode", f"mode {m!r} declared twice"))
            seen.add(m)
    if not c.modes:
        out.append(Finding("no-modes", "no modes declared"))

    sources = [k for k, e in enumerate(c.elements) if isinstance(e, Source)]
    if not sources:
        out.append(Finding("missing-source", "missing source"))
    elif len(sources) > 1:
        out.append(
            Finding(
                "multiple-sources",
                f"multiple sources (elements {sources}); beamsplitters may see two excitations",
                sources[1],
            )
        )
    if sources and sources[0] != 0:
        out.append(Finding("source-not-first", "source must be the first element", sources[0]))

    detects = [k for k, e in enumerate(c.elements) if isinstance(e, Detect)]
    if not detects:
        out.append(Finding("missing-detect", "missing terminal detect"))
    else:
        if len(detects) > 1:
            out.append(Finding("multiple-detects", f"detect appears {len(detects)} times", detects[1]))
        if detects[-1] != len(c.elements) - 1:
            out.append(Finding("detect-not-last", "detect must be the last element", detects[-1]))

    live = set(c.modes)
    diverted: set[str] = set()
    for k, e in enumerate(c.elements):
        if isinstance(e, Fresh):
            if e.mode in live or e.mode in diverted:
                out.append(Finding("fresh-existing", f"fresh mode {e.mode!r} already exists", k))
            live.add(e.mode)
            continue
        names = e.modes()
        for m in names:
            if m in diverted:
                out.append(Finding("diverted-use", f"mode {m!r} referenced after divert", k))
            elif m not in live:
                out.append(Finding("undeclared-mode", f"undeclared mode {m!r}", k))
        if len(set(names)) != len(names):
            out.append(Finding("repeated-mode", f"{type(e).__name__.lower()} repeats a mode: {', '.join(names)}", k))
        if isinstance(e, Phase) and e.phi not in (0, PI):
            out.append(Finding("unsupported-phase", f"unsupported phase {e.phi!r} on {e.mode!r}; toy domain is {{0, pi}}", k))
        if isinstance(e, Divert) and e.mode in live:
            live.discard(e.mode)
            diverted.add(e.mode)
    return out


def is_toy_domain(c: Circuit) -> bool:
    return not validate(c)


@dataclass(frozen=True)
class CausalDag:
    """Element indices with edges between timeline-adjacent elements sharing a mode."""

    nodes: tuple[int, ...]
    edges: frozenset[tuple[int, int, str]]

    def successors(self, k: int) -> set[int]:
        return {b for a, b, _ in self.edges if a == k}

    def predecessors(self, k: int) -> set[int]:
        return {a for a, b, _ in self.edges if b == k}

    def ancestors(self, k: int) -> set[int]:
        seen: set[int] = set()
        stack = [k]
        while stack:
            for a in self.predecessors(stack.pop()):
                if a not in seen:
                    seen.add(a)
                    stack.append(a)
        return seen

    def descendants(self, k: int) -> set[int]:
        seen: set[int] = set()
        stack = [k]
        while stack:
            for b in self.successors(stack.pop()):
                if b not in seen:
                    seen.add(b)
                    stack.append(b)
        return seen

    def is_acyclic(self) -> bool:
        return all(k not in self.descendants(k) for k in self.nodes)


def timelines(c: Circuit) -> dict[str, list[int]]:
    out: dict[str, list[int]] = {m: [] for m in c.live_modes()}
    for k in range(len(c.elements)):
        for m in c.element_modes(k):
            out.setdefault(m, []).append(k)
    return out


def causal_dag(c: Circuit) -> CausalDag:
    edges = set()
    for m, line in timelines(c).items():
        for a, b in zip(line, line[1:]):
            edges.add((a, b, m))
    return CausalDag(tuple(range(len(c.elements))), frozenset(edges))


def detector_past(c: Circuit, mode: str) -> set[int]:
    """Elements in the causal past of the detector reading ``mode``.

    The terminal Detect reads several modes, so for a single detector only
    the history of that mode's own timeline feeds in.
    """
    line = [k for k in timelines(c).get(mode, []) if not isinstance(c.elements[k], Detect)]
    if not line:
        return set()
    dag = causal_dag(c)
    return {line[-1]} | dag.ancestors(line[-1])
