"""Chained-Bell correlations for qudits and bounds on the predictive power of alternative theories."""

from .chained_bell import (
    ChainedBellValue,
    MinimumScan,
    evaluate_IN,
    gamma_constant,
    modular_expectation,
    quantum_IN,
    scan_minimum,
)
from .qudit_core import (
    JointTable,
    SchmidtState,
    SettingsFamily,
    born_joint_table,
    make_maximally_entangled,
    projector_vector,
)

__all__ = [
    "ChainedBellValue",
    "JointTable",
    "MinimumScan",
    "SchmidtState",
    "SettingsFamily",
    "born_joint_table",
    "evaluate_IN",
    "gamma_constant",
    "make_maximally_entangled",
    "modular_expectation",
    "projector_vector",
    "quantum_IN",
    "scan_minimum",
]
