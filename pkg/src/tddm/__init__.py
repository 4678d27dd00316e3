"""Threshold dynamics for dislocation motion in a slip plane."""

from tddm.spectral import Grid, RealField2D, make_grid, forward_transform, inverse_transform
from tddm.kernel import BurgersSpec, SpectralKernel, build_kernel, build_kernel_general_burgers
from tddm.field import PhaseField, Contour, init_circle, init_half_plane, init_frank_read, extract_contours
from tddm.correction import InterfaceGeometry, SimParams, estimate_geometry, compute_u_dis, stretch_correct
from tddm.stepper import Simulation, StressField, StepDiagnostics, convolve, threshold, step_basic, step_corrected

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "RealField2D",
    "make_grid",
    "forward_transform",
    "inverse_transform",
    "BurgersSpec",
    "SpectralKernel",
    "build_kernel",
    "build_kernel_general_burgers",
    "PhaseField",
    "Contour",
    "init_circle",
    "init_half_plane",
    "init_frank_read",
    "extract_contours",
    "InterfaceGeometry",
    "SimParams",
    "estimate_geometry",
    "compute_u_dis",
    "stretch_correct",
    "Simulation",
    "StressField",
    "StepDiagnostics",
    "convolve",
    "threshold",
    "step_basic",
    "step_corrected",
]
