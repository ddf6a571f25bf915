"""Hybrid quantum/classical training engine for Lie-algebra supported circuits.

The package splits a layered variational circuit into a hardware block whose
gradients come from two-point parameter shifts on a (simulated) quantum
backend and an algebra block simulated classically on the coefficient vector
of a polynomially sized dynamical Lie algebra, with exact accounting of the
quantum-circuit evaluations each training scheme would need.
"""

from .pauli import PauliString
from .dla import DlaBasis, StructureTensor, close_algebra, structure_constants
from .backend import GateOp, StateVector
from .models import HeliaAnsatz, Observable, build_helia
from .gsim import CoeffVector, ExpectationVector
from .accounting import QpuMeter

__version__ = "0.1.0"

__all__ = [
    "PauliString",
    "DlaBasis",
    "StructureTensor",
    "close_algebra",
    "structure_constants",
    "GateOp",
    "StateVector",
    "HeliaAnsatz",
    "Observable",
    "build_helia",
    "CoeffVector",
    "ExpectationVector",
    "QpuMeter",
    "__version__",
]
