"""Survey propagation guided decimation for random k-SAT, with exact oracles
and the bias and quasirandomness diagnostics used to analyse it."""

__version__ = "0.1.0"

from .errors import (
    BudgetExceeded,
    CapExceeded,
    Contradiction,
    DegenerateProduct,
    DomainError,
    EmptyInput,
    SpdecError,
)
from .factor_graph import FactorGraph
from .formula import CnfFormula, PartialAssignment, RandomModel, decimate, generate
from .message_passing import IterationPolicy, MessageState, iterate, psi
from .decimation import DecimationPolicy, run_decimation

__all__ = [
    "BudgetExceeded",
    "CapExceeded",
    "CnfFormula",
    "Contradiction",
    "DecimationPolicy",
    "DegenerateProduct",
    "DomainError",
    "EmptyInput",
    "FactorGraph",
    "IterationPolicy",
    "MessageState",
    "PartialAssignment",
    "RandomModel",
    "SpdecError",
    "decimate",
    "generate",
    "iterate",
    "psi",
    "run_decimation",
]
