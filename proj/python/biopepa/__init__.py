"""Bio-PEPA with locations: parse, check and simulate models."""

from ._core import (
    BioPepaError,
    Diagnostic,
    Model,
    check,
    simulate,
)

__all__ = ["BioPepaError", "Diagnostic", "Model", "check", "simulate"]
