"""Exact analysis of deterministic finite-memory binary hypothesis testers."""

from .errors import FinmemError, InvalidArgument, NumericalFailure, ResourceLimit, UnsupportedStructure
from .model import H0, H1, CanonicalForm, HypothesisPair, Machine, canonicalize, run_prefix, step

__all__ = [
    "H0",
    "H1",
    "CanonicalForm",
    "FinmemError",
    "HypothesisPair",
    "InvalidArgument",
    "Machine",
    "NumericalFailure",
    "ResourceLimit",
    "UnsupportedStructure",
    "canonicalize",
    "run_prefix",
    "step",
]
