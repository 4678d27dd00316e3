"""Periodic grid bookkeeping and the discrete Fourier transform pair.

Normalization: the forward transform is unnormalized, so the zero-frequency
bin holds ``sum(f)``; the inverse carries the ``1/n**2`` factor. Parseval then
reads ``sum(f**2) == sum(|F|**2) / n**2``. Kernel multipliers are defined
relative to this convention, with ``multiplier[0, 0] == 1`` so convolution
preserves the field mean.

Frequencies are kept in transform-native order (no fftshift).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

MIN_POINTS = 16
IMAG_TOLERANCE = 1e-10


def fft_workers() -> int:
    """Thread cap for the transforms, read from ``TDDM_THREADS`` (default 1)."""
    raw = os.environ.get("TDDM_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class Grid:
    """Square periodic grid on ``[-L, L)**2`` with ``n`` points per side.

    Arrays indexed ``[ix, iy]``: axis 0 is x, axis 1 is y.
    """

    n: int
    domain_half_length: float
    dx: float = field(init=False)
    x_coords: np.ndarray = field(init=False, repr=False)
    y_coords: np.ndarray = field(init=False, repr=False)
    k1: np.ndarray = field(init=False, repr=False)
    k2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n, L = self.n, self.domain_half_length
        dx = 2.0 * L / n
        coords = -L + dx * np.arange(n)
        k = (np.pi / L) * np.fft.fftfreq(n, d=1.0 / n)
        for arr in (coords, k):
            arr.setflags(write=False)
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "x_coords", coords)
        object.__setattr__(self, "y_coords", coords)
        object.__setattr__(self, "k1", k)
        object.__setattr__(self, "k2", k)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def length(self) -> float:
        """Full period ``2L``."""
        return 2.0 * self.domain_half_length

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x_coords, self.y_coords, indexing="ij")

    def wavenumber_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.k1, self.k2, indexing="ij")

    def same_as(self, other: "Grid") -> bool:
        return self is other or (
            self.n == other.n and self.domain_half_length == other.domain_half_length
        )


@dataclass
class RealField2D:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )


def make_grid(n: int, domain_half_length: float) -> Grid:
    """Build a periodic grid; ``n`` must be even and at least 16."""
    if int(n) != n or n < MIN_POINTS or n % 2:
        raise ValueError(f"n must be an even integer >= {MIN_POINTS}, got {n}")
    if not domain_half_length > 0:
        raise ValueError(f"domain_half_length must be positive, got {domain_half_length}")
    return Grid(int(n), float(domain_half_length))


def _check_shape(arr: np.ndarray, grid: Grid) -> None:
    if arr.shape != grid.shape:
        raise ValueError(f"array shape {arr.shape} does not match grid {grid.shape}")


def forward_transform(f: RealField2D) -> np.ndarray:
    _check_shape(f.values, f.grid)
    return sfft.fft2(f.values, workers=fft_workers())


def inverse_transform(F: np.ndarray, grid: Grid) -> RealField2D:
    """Inverse transform of a (Hermitian) spectrum back to a real field.

    Raises if the discarded imaginary part exceeds ``1e-10`` of the field's
    largest magnitude.
    """
    _check_shape(F, grid)
    out = sfft.ifft2(F, workers=fft_workers())
    scale = max(np.abs(out.real).max(), np.finfo(float).tiny)
    if np.abs(out.imag).max() > IMAG_TOLERANCE * scale:
        raise ValueError("spectrum is not Hermitian: imaginary residue too large")
    return RealField2D(grid, out.real.copy())


def rfft(values: np.ndarray) -> np.ndarray:
    """Half-spectrum transform used in the hot loop."""
    return sfft.rfft2(values, workers=fft_workers())


def irfft(spectrum: np.ndarray, n: int) -> np.ndarray:
    return sfft.irfft2(spectrum, s=(n, n), workers=fft_workers())
