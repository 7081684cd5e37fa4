"""Numerical laboratory for the Birkhoff-Rott vortex-sheet equation."""

from .diagnostics import (
    DiagnosticsReport,
    analyticity_width,
    bmo_local,
    certify_theorem1_hypotheses,
    chord_arc_constants,
    chord_arc_curve,
    strength_bounds,
    weak_form_residual,
)
from .evolve import IntegratorConfig, SingularityAbort, Trajectory, run, step
from .fast_sum import TreecodeParams, treecode_velocity, treecode_velocity_periodic
from .kernel import (
    KernelSpec,
    LineSheet,
    cauchy_operator,
    velocity,
    velocity_closed,
    velocity_difference,
    velocity_offsheet,
    velocity_periodic,
)
from .oracles import COParams, co_solution, co_strength_bounds, linearized_velocity
from .sheet_core import (
    ArclengthSheet,
    SheetState,
    Topology,
    derivative,
    from_circulation,
    log_derivative,
    make_circle,
    make_flat_perturbed,
    make_log_spiral,
    to_circulation,
)

__version__ = "0.1.0"

__all__ = [
    "analyticity_width", "ArclengthSheet", "bmo_local", "cauchy_operator",
    "certify_theorem1_hypotheses", "chord_arc_constants", "chord_arc_curve", "co_solution",
    "co_strength_bounds", "COParams", "derivative", "DiagnosticsReport", "from_circulation",
    "IntegratorConfig", "KernelSpec", "linearized_velocity", "LineSheet", "log_derivative",
    "make_circle", "make_flat_perturbed", "make_log_spiral", "run", "SheetState",
    "SingularityAbort", "step", "strength_bounds", "to_circulation", "Topology", "Trajectory",
    "treecode_velocity", "treecode_velocity_periodic", "TreecodeParams", "velocity",
    "velocity_closed", "velocity_difference", "velocity_offsheet", "velocity_periodic",
    "weak_form_residual",
]
