"""One time step of the convolve-and-threshold scheme for dislocations.

``step_basic`` is the plain convolve-then-threshold scheme. ``step_corrected``
adds the mobility correction and velocity rescaling between convolution and
thresholding. Both convolve integer-valued fields directly: the kernel is
linear, so this equals summing the per-level characteristic functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from tddm.correction import (
    InterfaceGeometry,
    SimParams,
    compute_u_dis,
    dislocation_geometry,
    estimate_geometry,
    stretch_correct,
)
from tddm.field import PhaseField, extract_contours
from tddm.kernel import SpectralKernel
from tddm.spectral import Grid, irfft, rfft


class NonFiniteFieldError(FloatingPointError):
    def __init__(self, step_index: int):
        super().__init__(f"field became non-finite at step {step_index}")
        self.step_index = step_index


@dataclass
class StressField:
    """Resolved shear stress acting on the field.

    ``sigma`` enters additively (``u -= sigma * dt``). ``obstacle`` holds
    barrier stresses such as impenetrable particles, in the same sign
    convention; a barrier may hold a dislocation where it is but never moves
    ``u`` past the half-integer bounds of the current level, so it cannot
    nucleate new dislocations inside the obstacle.
    """

    grid: Grid
    sigma: np.ndarray
    obstacle: np.ndarray | None = None

    def __post_init__(self):
        self.sigma = np.broadcast_to(np.asarray(self.sigma, dtype=np.float64), self.grid.shape).copy()
        if not np.all(np.isfinite(self.sigma)):
            raise ValueError("stress field must be finite")
        if self.obstacle is not None:
            self.obstacle = np.asarray(self.obstacle, dtype=np.float64)
            if self.obstacle.shape != self.grid.shape or not np.all(np.isfinite(self.obstacle)):
                raise ValueError("obstacle stress must be finite and match the grid")

    @classmethod
    def uniform(cls, grid: Grid, sigma: float) -> "StressField":
        return cls(grid, np.full(grid.shape, float(sigma)))

    def __add__(self, other: "StressField") -> "StressField":
        if self.obstacle is None:
            obstacle = other.obstacle
        elif other.obstacle is None:
            obstacle = self.obstacle
        else:
            obstacle = self.obstacle + other.obstacle
        return StressField(self.grid, self.sigma + other.sigma, obstacle)

    def max_driving(self) -> float:
        return float(np.abs(self.sigma).max())


@dataclass
class StepDiagnostics:
    step_index: int
    field_mean: float
    max_level: int
    contour_count_by_level: dict[float, int] = field(default_factory=dict)


def convolve(f: PhaseField, kernel: SpectralKernel) -> PhaseField:
    """``K * u`` via the half-spectrum transform; result is real-valued.

    A winding ramp is removed before the transform and added back after; the
    kernel is even with unit mass, so it reproduces linear functions exactly.
    """
    if not f.grid.same_as(kernel.grid):
        raise ValueError("field and kernel live on different grids")
    ramp = f.ramp() if f.winding != (0, 0) else None
    periodic = f.u if ramp is None else f.u - ramp
    out = irfft(kernel.half_multiplier * rfft(periodic), f.grid.n)
    if ramp is not None:
        out += ramp
    return PhaseField(f.grid, out, quantized=False, winding=f.winding)


def threshold(f) -> PhaseField:
    """Integer level ``j`` with ``j - 0.5 < u <= j + 0.5``."""
    values = f.u if isinstance(f, PhaseField) else f.values
    winding = f.winding if isinstance(f, PhaseField) else (0, 0)
    return PhaseField(f.grid, np.ceil(values - 0.5), quantized=True, winding=winding)


def apply_stress(u_bar: np.ndarray, previous: np.ndarray, stress: StressField, dt: float) -> np.ndarray:
    out = u_bar - stress.sigma * dt
    if stress.obstacle is not None:
        push = -stress.obstacle * dt
        up, down = push > 0, push < 0
        if up.any():
            cap = previous + 0.5
            out = np.where(up, np.maximum(out, np.minimum(out + push, cap)), out)
        if down.any():
            # Lowest value still mapped to the current level by the half-open rule.
            floor_ = np.nextafter(previous - 0.5, np.inf)
            out = np.where(down, np.minimum(out, np.maximum(out + push, floor_)), out)
    return out


def diagnostics(f: PhaseField, step_index: int, contour_levels=None) -> StepDiagnostics:
    diag = StepDiagnostics(step_index, float(f.u.mean()), f.max_level())
    if contour_levels is not None:
        for level in contour_levels:
            diag.contour_count_by_level[level] = len(extract_contours(f, level))
    return diag


def _check_finite(values: np.ndarray, step_index: int) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteFieldError(step_index)


def step_basic(f: PhaseField, kernel: SpectralKernel, stress: StressField, params: SimParams,
               step_index: int = 0, contour_levels=None) -> tuple[PhaseField, StepDiagnostics]:
    """Convolve, subtract ``sigma * dt``, threshold."""
    ut = convolve(f, kernel)
    u_bar = apply_stress(ut.u, f.u, stress, params.dt)
    _check_finite(u_bar, step_index)
    new = threshold(PhaseField(f.grid, u_bar, False, f.winding))
    return new, diagnostics(new, step_index, contour_levels)


def step_corrected(f: PhaseField, kernel: SpectralKernel, stress: StressField, params: SimParams,
                   geom_prev: InterfaceGeometry, step_index: int = 0, contour_levels=None
                   ) -> tuple[PhaseField, InterfaceGeometry, StepDiagnostics]:
    """Convolve, correct mobility and rescale by ``beta``, add stress, threshold.

    Returns the new field, the geometry of its dislocations
    (consumed by the next step) and diagnostics. Each step advances the
    simulated time by ``beta * dt``.
    """
    ut = convolve(f, kernel)
    geom = estimate_geometry(ut, params) if params.geometry_from == "current" else geom_prev
    u_dis = compute_u_dis(ut, geom, params)
    stretched = stretch_correct(ut, u_dis, geom, params)
    u_bar = apply_stress(stretched.values, f.u, stress, params.dt)
    _check_finite(u_bar, step_index)
    pre = PhaseField(f.grid, u_bar, False, f.winding)
    new = threshold(pre)
    geom_next = dislocation_geometry(new, params)
    return new, geom_next, diagnostics(new, step_index, contour_levels)


def bootstrap_geometry(f: PhaseField, kernel: SpectralKernel, params: SimParams) -> InterfaceGeometry:
    """Geometry of the initial dislocations (``kernel`` is unused, kept for symmetry)."""
    return dislocation_geometry(f, params)


class Simulation:
    """Owns the evolving field and, for the corrected scheme, the carried geometry."""

    def __init__(self, field0: PhaseField, kernel: SpectralKernel, stress: StressField,
                 params: SimParams, corrected: bool = True):
        self.field = field0
        self.kernel = kernel
        self.stress = stress
        self.params = params
        self.corrected = corrected
        self.step_index = 0
        self.geometry = bootstrap_geometry(field0, kernel, params) if corrected else None

    @property
    def time_per_step(self) -> float:
        return self.params.effective_dt if self.corrected else self.params.dt

    @property
    def time(self) -> float:
        return self.step_index * self.time_per_step

    def step(self, contour_levels=None) -> StepDiagnostics:
        idx = self.step_index + 1
        if self.corrected:
            self.field, self.geometry, diag = step_corrected(
                self.field, self.kernel, self.stress, self.params, self.geometry, idx, contour_levels)
        else:
            self.field, diag = step_basic(self.field, self.kernel, self.stress, self.params, idx,
                                          contour_levels)
        self.step_index = idx
        return diag

    def run(self, n_steps: int, callback=None):
        for _ in range(n_steps):
            diag = self.step()
            if callback is not None and callback(self, diag) is False:
                break
        return self.field
