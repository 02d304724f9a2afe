"""Incompatibility monotones for pairs of binary quantum measurements."""

from .linalg import ValidationError
from .povm import DeformationMatrix, NoiseParams, qubit_projector
from .qubit import imax, inoise_qubit
from .sdp import IncompatProgram, IncompatResult, certify, feasible_at, solve_incompat, solve_steer

__all__ = [
    "DeformationMatrix",
    "IncompatProgram",
    "IncompatResult",
    "NoiseParams",
    "ValidationError",
    "certify",
    "feasible_at",
    "imax",
    "inoise_qubit",
    "qubit_projector",
    "solve_incompat",
    "solve_steer",
]
