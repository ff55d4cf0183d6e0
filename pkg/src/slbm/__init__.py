"""Block-structured lattice Boltzmann solver with interchangeable
dense and sparse storage layouts."""

from .core import CollisionParams, Parity, omega_from_viscosity
from .counters import Counters
from .dense import DenseEngine
from .domain import Block, Domain, classify_kind
from .errors import (
    ConfigurationError,
    EmptyBlockError,
    FormatError,
    NumericalInstabilityError,
    ProtocolError,
    SlbmError,
    UnreachablePorosityError,
)
from .flags import EXCHANGE, FLUID, NOSLIP, UBB, FaceKind, FaceSpec, FlagField, make_flags
from .sparse import SparseEngine
from .stencil import Stencil, make_stencil

__version__ = "0.1.0"

__all__ = [
    "Block",
    "CollisionParams",
    "ConfigurationError",
    "Counters",
    "DenseEngine",
    "Domain",
    "EmptyBlockError",
    "EXCHANGE",
    "FaceKind",
    "FaceSpec",
    "FlagField",
    "FormatError",
    "FLUID",
    "make_flags",
    "make_stencil",
    "NOSLIP",
    "NumericalInstabilityError",
    "omega_from_viscosity",
    "Parity",
    "ProtocolError",
    "SlbmError",
    "SparseEngine",
    "Stencil",
    "UBB",
    "UnreachablePorosityError",
    "classify_kind",
    "__version__",
]
