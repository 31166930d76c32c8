"""vessel-lab: differential vessels of overdetermined 2D systems.

Modules
-------
numgrid     time grids and sampled matrix functions of t2
odeflow     evolution semigroups, fundamental matrices, companion chains
vesselcore  signatures, vessels, axiom checks, transfer functions
vesselops   cascade, inversion, adjoint, gauge, invariant subspaces, factorization
structure   controllability, observability, Kalman decomposition, equivalence
realize     pole chains and realizations from pole data
simulate2d  separated trajectories and residuals of the 2D system
cli         command line and file formats
"""
from .errors import (
    ContourError,
    DomainError,
    FormatError,
    GridError,
    InvalidChainError,
    InvertibilityError,
    LinkageError,
    NoSimilarityError,
    OrderOverflowError,
    PreconditionError,
    ResolventError,
    SolverError,
    StructuralError,
    VesselError,
    VesselWarning,
)
from .numgrid import MatFn, TimeGrid
from .vesselcore import DiffVessel, Signature, transfer, verify_vessel

__version__ = "0.1.0"

__all__ = [
    "ContourError",
    "DiffVessel",
    "DomainError",
    "FormatError",
    "GridError",
    "InvalidChainError",
    "InvertibilityError",
    "LinkageError",
    "MatFn",
    "NoSimilarityError",
    "OrderOverflowError",
    "PreconditionError",
    "ResolventError",
    "Signature",
    "SolverError",
    "StructuralError",
    "TimeGrid",
    "VesselError",
    "VesselWarning",
    "transfer",
    "verify_vessel",
]
