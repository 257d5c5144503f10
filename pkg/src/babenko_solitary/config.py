"""Default settings shared by the library and the command line."""
from __future__ import annotations

from dataclasses import asdict

from .babenko import SolverOptions
from .continuation import BranchControls

DEFAULT_PERIOD_L = 400.0
DEFAULT_SIZE_N = 8192
DEFAULT_SPECTRUM_MODES = 1024
DEFAULT_FIT_REGION = (50.0, 100.0)
DEFAULT_SEED = 0
CRITICALITY_DIRECTIONS = 10
CRITICALITY_FD_STEP = 1e-5

# Identity-suite tolerances.
SOLITON_DEFECT_TOLERANCE = 1e-3
SOLITON_REFINEMENT_RATIO = 1.5
IDENTITY_CORE_RADIUS = 10.0
IDENTITY_REFINEMENT_RATIO = 3.0
IDENTITY_CORE_TOLERANCE = 5e-3
CLOSURE_RELATIVE_TOLERANCE = 1e-6
GOLDEN_TOLERANCE = 5e-3
GOLDEN_RATIO = (1 + 5**0.5) / 2


def default_solver_options(**overrides) -> SolverOptions:
    return SolverOptions(**overrides)


def default_branch_controls(**overrides) -> BranchControls:
    return BranchControls(**overrides)


def tolerances() -> dict:
    """Every tolerance used anywhere, for manifests."""
    return {
        "solver": asdict(SolverOptions()),
        "branch": asdict(BranchControls()),
        "identity_suite": {
            "soliton_defect": SOLITON_DEFECT_TOLERANCE,
            "soliton_refinement_ratio": SOLITON_REFINEMENT_RATIO,
            "identity_core_radius": IDENTITY_CORE_RADIUS,
            "identity_refinement_ratio": IDENTITY_REFINEMENT_RATIO,
            "identity_core": IDENTITY_CORE_TOLERANCE,
            "closure_relative": CLOSURE_RELATIVE_TOLERANCE,
            "golden": GOLDEN_TOLERANCE,
        },
        "criticality": {"directions": CRITICALITY_DIRECTIONS, "fd_step": CRITICALITY_FD_STEP},
    }
