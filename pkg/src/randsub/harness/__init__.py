"""Simulation harness and command-line interface."""

from .coverage import CoverageRow, CoverageTable, replicate, run_coverage, write_rows
from .designs import DesignContext, build_context, design_covariance, make_graph
from .experiment import CoverageMode, Design, ExperimentSpec, SpecError

__all__ = [
    "CoverageMode",
    "CoverageRow",
    "CoverageTable",
    "Design",
    "DesignContext",
    "ExperimentSpec",
    "SpecError",
    "build_context",
    "design_covariance",
    "make_graph",
    "replicate",
    "run_coverage",
    "write_rows",
]
