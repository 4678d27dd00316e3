"""Fourier multiplier of the dislocation stress kernel and real-space references.

The kernel evolves a field for time ``t`` under the linear stress operator
whose symbol is ``-1/2 * q(k) / |k|`` with the quadratic form

    q(k) = a * k1**2 + 2 * c * k1 * k2 + e * k2**2

For a Burgers vector along x, ``a = 1/(1-nu)``, ``c = 0`` and ``e = 1``.
The multiplier is ``exp(-t/2 * q(k)/|k|)``; its value at ``k = 0`` is 1 by
continuity, which is what keeps the field mean fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from tddm.spectral import Grid, RealField2D, inverse_transform


@dataclass(frozen=True)
class BurgersSpec:
    """In-plane Burgers direction ``(b1, b2)`` as fractions of ``|b|``."""

    b1: float = 1.0
    b2: float = 0.0

    def __post_init__(self):
        norm = math.hypot(self.b1, self.b2)
        if not math.isclose(norm, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"Burgers direction must be a unit vector, |b| = {norm}")

    @property
    def angle(self) -> float:
        return math.atan2(self.b2, self.b1)


@dataclass(frozen=True, eq=False)
class SpectralKernel:
    grid: Grid
    nu: float
    t: float
    multiplier: np.ndarray = field(repr=False)
    burgers: BurgersSpec = BurgersSpec()
    half_multiplier: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.multiplier.setflags(write=False)
        half = np.ascontiguousarray(self.multiplier[:, : self.grid.n // 2 + 1])
        half.setflags(write=False)
        object.__setattr__(self, "half_multiplier", half)


def _validate(nu: float, t: float) -> None:
    if not 0.0 <= nu < 0.5:
        raise ValueError(f"Poisson ratio must lie in [0, 0.5), got {nu}")
    if not t > 0:
        raise ValueError(f"kernel time parameter must be positive, got {t}")


def _quadratic_symbol(grid: Grid, a: float, c: float, e: float) -> np.ndarray:
    """``q(k)/|k|`` on the grid, zero at the origin.

    The cross term is dropped on the Nyquist row/column, where ``+k`` and
    ``-k`` share a bin and an odd term would break Hermitian symmetry.
    """
    k1, k2 = grid.wavenumber_mesh()
    knorm = np.hypot(k1, k2)
    cross = 2.0 * c * k1 * k2
    if c != 0.0:
        nyq = np.abs(grid.k1).max()
        cross[(np.abs(k1) == nyq) | (np.abs(k2) == nyq)] = 0.0
    q = a * k1**2 + cross + e * k2**2
    out = np.zeros_like(knorm)
    np.divide(q, knorm, out=out, where=knorm > 0)
    return out


def build_kernel(grid: Grid, nu: float, t: float) -> SpectralKernel:
    """Multiplier for a Burgers vector along +x."""
    _validate(nu, t)
    symbol = _quadratic_symbol(grid, 1.0 / (1.0 - nu), 0.0, 1.0)
    return SpectralKernel(grid, nu, t, np.exp(-0.5 * t * symbol))


def general_burgers_coefficients(nu: float, b: BurgersSpec) -> tuple[float, float, float]:
    """Coefficients ``(a, c, e)`` of ``q(k)`` for an arbitrary in-plane Burgers direction.

    Uses the squared components so that the form is rotation-covariant:
    ``q(k) = (b.k)**2/(1-nu) + (b x k)**2``.
    """
    b1, b2 = b.b1, b.b2
    a = b1 * b1 / (1.0 - nu) + b2 * b2
    c = b1 * b2 * nu / (1.0 - nu)
    e = b1 * b1 + b2 * b2 / (1.0 - nu)
    return a, c, e


def build_kernel_general_burgers(grid: Grid, nu: float, t: float, b: BurgersSpec) -> SpectralKernel:
    _validate(nu, t)
    a, c, e = general_burgers_coefficients(nu, b)
    symbol = _quadratic_symbol(grid, a, c, e)
    return SpectralKernel(grid, nu, t, np.exp(-0.5 * t * symbol), burgers=b)


def stress_multiplier(grid: Grid, nu: float, b: BurgersSpec = BurgersSpec()) -> np.ndarray:
    """Symbol of the dimensionless resolved shear stress operator, ``-q(k)/(2|k|)``."""
    _validate(nu, 1.0)
    a, c, e = general_burgers_coefficients(nu, b)
    return -0.5 * _quadratic_symbol(grid, a, c, e)


def real_space_kernel_nu0(x, y, t: float):
    """Closed-form isotropic kernel, normalized to unit integral over the plane."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    h = 0.5 * t
    r2 = np.asarray(x, dtype=float) ** 2 + np.asarray(y, dtype=float) ** 2
    return (1.0 / (2.0 * np.pi)) * h / (h * h + r2) ** 1.5


def sample_real_space(kernel: SpectralKernel) -> RealField2D:
    """Kernel values on the grid, centred at the origin.

    The inverse transform of the multiplier is a discrete delta smoothed by
    the kernel; dividing by the cell area turns it into point samples of K.
    """
    grid = kernel.grid
    # Shift the origin from index 0 to the grid point x = 0 (index n/2).
    raw = inverse_transform(kernel.multiplier.astype(complex), grid).values
    values = np.roll(raw, (grid.n // 2, grid.n // 2), axis=(0, 1)) / grid.dx**2
    return RealField2D(grid, values)
