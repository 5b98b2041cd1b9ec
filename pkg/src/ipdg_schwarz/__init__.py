"""Nonoverlapping Schwarz and multigrid preconditioners for multigroup IP-DG reaction-diffusion."""

from .assembly import BlockOperator, ProblemParams, assemble_operator, assemble_rhs
from .experiments import ExperimentConfig, RunRecord, run_table
from .krylov import IterationReport, SolveConfig, gmres
from .mesh import Mesh, build_hierarchy, build_mesh
from .precond import TwoLevel, VCycle, assemble_levels, make_preconditioner
from .reaction import ReactionModel, make_model
from .schwarz import CellBlockSolver, Smoother
from .space import DgSpace
from .transfer import TransferPair

__all__ = [
    "BlockOperator",
    "CellBlockSolver",
    "DgSpace",
    "ExperimentConfig",
    "IterationReport",
    "Mesh",
    "ProblemParams",
    "ReactionModel",
    "RunRecord",
    "Smoother",
    "SolveConfig",
    "TransferPair",
    "TwoLevel",
    "VCycle",
    "assemble_levels",
    "assemble_operator",
    "assemble_rhs",
    "build_hierarchy",
    "build_mesh",
    "gmres",
    "make_model",
    "make_preconditioner",
    "run_table",
]
