"""Epistemically restricted toy field theory for Mach-Zehnder circuits.

Exact and sampled simulation of single-excitation interferometer circuits
in a local model whose modes carry an occupation bit and a phase bit, an
exact single-photon quantum reference, and locality audits.
"""

from erft.ontology import (
    DomainError,
    EpistemicState,
    JointOnticState,
    ModeOnticState,
    ValidityReport,
    make_source_state,
    make_vacuum_state,
    marginal,
    validate_epistemic,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "EpistemicState",
    "JointOnticState",
    "ModeOnticState",
    "ValidityReport",
    "make_source_state",
    "make_vacuum_state",
    "marginal",
    "validate_epistemic",
    "__version__",
]
