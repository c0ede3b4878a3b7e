"""Simulation of the hybrid Bell-Leggett-Garg inequality experiment."""

from .core_sim import (
    DensityMatrix,
    GateOp,
    ProbabilityTable,
    ShotTable,
    apply_cz,
    apply_unitary_1q,
    expectation_z,
    init_register,
    outcome_distribution,
    sample_shots,
)
from .noise import ConfusionMatrix, NoiseModel
from .protocol import BlgiConfig, ChshConfig, LhvModel, evaluate_blgi, run_blgi, run_chsh, run_lgi

__version__ = "0.1.0"
