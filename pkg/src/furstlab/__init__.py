"""Exact-arithmetic laboratory for times-q dynamics on the circle,
combinatorial entropy of integer sequences, p-adic interpolation and
density diagnostics."""

from .errors import (
    ConfigError,
    GuardError,
    HypothesisViolation,
    LabError,
    PrecisionError,
)
from .torus import CirclePoint, IrrationalSurrogate, approx_irrational, orbit
from .seqgen import SequenceSpec, parse_spec

__version__ = "0.1.0"

__all__ = [
    "CirclePoint", "IrrationalSurrogate", "approx_irrational", "orbit",
    "SequenceSpec", "parse_spec",
    "LabError", "ConfigError", "PrecisionError", "GuardError", "HypothesisViolation",
]
