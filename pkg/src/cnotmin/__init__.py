"""CNOT-count minimization for linear reversible circuits."""

__version__ = "0.1.0"

from .core import (
    Circuit,
    CnotGate,
    ParityMatrix,
    apply_cnot,
    circuit_to_parity,
    evaluate_outputs,
    hamming_to_identity,
    random_instance,
    rank_gf2,
    verify_synthesis,
)
from .topology import Topology, all_to_all, builtin

__all__ = [
    "__version__",
    "Circuit",
    "CnotGate",
    "ParityMatrix",
    "Topology",
    "apply_cnot",
    "circuit_to_parity",
    "evaluate_outputs",
    "hamming_to_identity",
    "random_instance",
    "rank_gf2",
    "verify_synthesis",
    "all_to_all",
    "builtin",
]
