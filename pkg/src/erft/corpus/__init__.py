"""Scenario corpus shipped with the package."""

from importlib import resources

from erft.dsl import parse

NAMES = (
    "mz_phi0",
    "mz_phiPi",
    "mz_measure_nd",
    "mz_measure_empty_arm_conditioned",
    "mz_block",
    "mz_mirror_removed",
    "vacuum_only",
    "spectator_mode",
)


def path(name: str):
    return resources.files(__name__) / f"{name}.ifc"


def text(name: str) -> str:
    return path(name).read_text(encoding="utf-8")


def load(name: str):
    return parse(text(name))


def load_all() -> dict:
    return {name: load(name) for name in NAMES}
