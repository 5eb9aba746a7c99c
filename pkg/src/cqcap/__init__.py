"""Capacity, coding and converse computations for compound and averaged
classical-quantum channels at desk scale."""

from .capacity import (
    CapacityResult,
    averaged_capacity,
    compound_capacity,
    holevo_capacity,
    holevo_information,
)
from .channels import AveragedChannelSpec, CompoundSet, CqChannel, build_t_n, conclusion_example, tau_net
from .coding import Codebook, CodeErrorReport, compound_direct_pipeline, error_report, one_shot_code
from .converse import fano_holevo_bound, markov_good_set, strong_converse_rate_bound
from .errors import BudgetExceededError, ContractViolation, CqcapError, DimensionMismatchError, InvalidStateError
from .quantum_core import DensityOperator, Pvm, quantum_relative_entropy, von_neumann_entropy

__version__ = "0.1.0"

__all__ = [
    "AveragedChannelSpec",
    "BudgetExceededError",
    "CapacityResult",
    "Codebook",
    "CodeErrorReport",
    "CompoundSet",
    "ContractViolation",
    "CqChannel",
    "CqcapError",
    "DensityOperator",
    "DimensionMismatchError",
    "InvalidStateError",
    "Pvm",
    "averaged_capacity",
    "build_t_n",
    "compound_capacity",
    "compound_direct_pipeline",
    "conclusion_example",
    "error_report",
    "fano_holevo_bound",
    "holevo_capacity",
    "holevo_information",
    "markov_good_set",
    "one_shot_code",
    "quantum_relative_entropy",
    "strong_converse_rate_bound",
    "tau_net",
    "von_neumann_entropy",
]
