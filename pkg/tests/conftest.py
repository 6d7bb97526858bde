import pytest
from hypothesis import strategies as st

from erft import corpus
from erft.circuit import BS, PI, Circuit, Detect, Divert, Fresh, Measure, Phase, Source

MODE_NAMES = ("a", "b", "c", "d", "e", "f")


@pytest.fixture(scope="session")
def circuits():
    return corpus.load_all()


@st.composite
def valid_circuits(draw, max_modes=4, max_elements=8, allow_divert=True):
    """Random circuits that satisfy every validator invariant."""
    k = draw(st.integers(1, max_modes))
    declared = list(MODE_NAMES[:k])
    alive = list(declared)
    spare = [m for m in MODE_NAMES if m not in declared]
    elements = [Source(draw(st.sampled_from(declared)))]
    for _ in range(draw(st.integers(0, max_elements))):
        kinds = ["phase", "measure"]
        if len(alive) >= 2:
            kinds.append("bs")
        if allow_divert and len(alive) >= 2:
            kinds.append("divert")
        if allow_divert and spare:
            kinds.append("fresh")
        kind = draw(st.sampled_from(kinds))
        if kind == "bs":
            i, j = draw(st.permutations(alive))[:2]
            elements.append(BS(i, j))
        elif kind == "phase":
            elements.append(Phase(draw(st.sampled_from(alive)), draw(st.sampled_from([0.0, PI]))))
        elif kind == "measure":
            destructive = draw(st.booleans())
            block = destructive and draw(st.booleans())
            elements.append(Measure(draw(st.sampled_from(alive)), destructive, block))
        elif kind == "divert":
            m = draw(st.sampled_from(alive))
            alive.remove(m)
            elements.append(Divert(m))
        else:
            m = spare.pop(0)
            alive.append(m)
            elements.append(Fresh(m))
    targets = draw(st.lists(st.sampled_from(alive), min_size=1, unique=True))
    elements.append(Detect(tuple(targets)))
    return Circuit(draw(st.sampled_from(["c0", "mz", "probe_1"])), tuple(declared), tuple(elements))
