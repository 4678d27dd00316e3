"""Interface geometry and the variable-stretching correction.

Near a dislocation the pre-threshold field is close to a linear function of
the signed distance ``d`` to the level line. Stretching that profile by the
orientation factor ``1 + nu sin^2(alpha)/(1 - nu)`` removes the anisotropic
mobility of the raw kernel; stretching it further by ``beta`` multiplies the
front displacement per step by ``beta``.

``mobility_factor`` is the single place where the target mobility enters;
replacing it changes the mobility law the correction enforces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from tddm.field import PhaseField, neighbor
from tddm.kernel import BurgersSpec
from tddm.spectral import RealField2D, irfft, rfft

CLAMP = 1e-6
# Blur width, in cells, used to locate dislocations of a thresholded field.
GEOMETRY_SMOOTHING = 1.0


@dataclass(frozen=True)
class SimParams:
    """Dimensionless run parameters.

    ``dt`` doubles as the dislocation core radius; ``band_width`` defaults to
    ``4 * dt`` and ``anchor_smoothing`` (the averaging length of ``u_dis``
    along a dislocation) to ``dt``.
    """

    dt: float = 0.16
    beta: float = 1.0
    nu: float = 1.0 / 3.0
    sigma_app: float = 0.0
    n_steps: int = 0
    band_width: float | None = None
    burgers: BurgersSpec = field(default_factory=BurgersSpec)
    geometry_from: str = "previous"
    anchor_smoothing: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.beta >= 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")
        if not 0 <= self.nu < 0.5:
            raise ValueError(f"nu must lie in [0, 0.5), got {self.nu}")
        if self.n_steps < 0:
            raise ValueError("n_steps must be non-negative")
        if self.geometry_from not in ("previous", "current"):
            raise ValueError(f"geometry_from must be 'previous' or 'current', got {self.geometry_from!r}")
        if self.anchor_smoothing is None:
            object.__setattr__(self, "anchor_smoothing", self.dt)
        elif self.anchor_smoothing < 0:
            raise ValueError("anchor_smoothing must be non-negative")
        if self.band_width is None:
            object.__setattr__(self, "band_width", 4.0 * self.dt)
        elif not self.band_width > 0:
            raise ValueError("band_width must be positive")

    @property
    def effective_dt(self) -> float:
        return self.beta * self.dt


@dataclass
class InterfaceGeometry:
    """Signed distance ``d`` to the nearest half-integer level line and angle ``alpha``.

    ``layer_mask`` marks the cells straddling a level line, where ``d`` and
    ``alpha`` come from the grid stencil. Other cells inside the band inherit
    ``alpha`` from their nearest layer cell (``source``, a flat index), and
    their ``d`` is that cell's value plus the distance between the cells.
    ``alpha`` is folded into ``[0, pi/2]``: only ``sin(alpha)**2`` is used.
    Entries outside ``band_mask`` are meaningless.
    """

    d: np.ndarray
    alpha: np.ndarray
    band_mask: np.ndarray
    level: np.ndarray
    layer_mask: np.ndarray
    source: np.ndarray

    @property
    def sin2(self) -> np.ndarray:
        return np.sin(self.alpha) ** 2


def nearest_level(u: np.ndarray) -> np.ndarray:
    return np.floor(u) + 0.5


def mobility_factor(sin2_alpha, nu: float):
    """Orientation factor of the raw threshold mobility."""
    return 1.0 + nu * sin2_alpha / (1.0 - nu)


def _one_sided_gradient(u, level_sign, axis, winding, h):
    # Difference toward the level line: of the two neighbours, the one whose
    # value moves furthest toward the level. Zero where neither does.
    back = u - neighbor(u, axis, -1, winding)
    fwd = u - neighbor(u, axis, 1, winding)
    take_back = level_sign * back >= level_sign * fwd
    drop = np.where(take_back, level_sign * back, level_sign * fwd)
    grad = np.where(take_back, back, -fwd) / h
    return np.where(drop > 0, grad, 0.0)


def stencil_geometry(u: np.ndarray, h: float, winding=(0, 0), burgers: BurgersSpec = BurgersSpec()):
    """Pointwise distance, angle and level from one-sided differences.

    With slopes ``gx, gy`` toward the level line, the axis intercepts are
    ``d1 = (u - level)/gx`` and ``d2 = (u - level)/gy`` and the distance is
    ``d1 d2 / sqrt(d1^2 + d2^2) = (u - level)/|g|``. The line direction makes
    angle ``arctan(d2/d1)`` with x; relative to the Burgers direction ``b``,
    ``sin(alpha) = |g . b| / |g|``. A vanishing slope along one axis gives the
    axis-aligned limits. Returns ``(d, alpha, level)``; ``d`` is infinite
    where there is no slope toward the level at all.
    """
    level = nearest_level(u)
    excess = u - level
    sign = np.where(excess >= 0, 1.0, -1.0)
    gx = _one_sided_gradient(u, sign, 0, winding[0], h)
    gy = _one_sided_gradient(u, sign, 1, winding[1], h)
    gnorm = np.hypot(gx, gy)
    has_slope = gnorm > 0
    safe = np.where(has_slope, gnorm, 1.0)
    d = np.where(has_slope, excess / safe, np.inf)
    s = np.clip(np.abs(gx * burgers.b1 + gy * burgers.b2) / safe, 0.0, 1.0)
    alpha = np.where(has_slope, np.arcsin(s), 0.0)
    return d, alpha, level


def interface_layer(u: np.ndarray, winding=(0, 0)) -> np.ndarray:
    """Cells with a 4-neighbour on the other side of their nearest level."""
    level = nearest_level(u)
    excess = u - level
    layer = excess == 0
    for axis in (0, 1):
        for step in (-1, 1):
            nb = neighbor(u, axis, step, winding[axis])
            layer |= excess * (nb - level) < 0
    return layer


def _nearest_layer_cell(layer: np.ndarray, h: float, reach: float):
    # Periodic Euclidean distance transform: pad by the reach, then wrap the indices.
    n = layer.shape[0]
    pad = min(n, int(np.ceil(reach / h)) + 2)
    padded = np.pad(~layer, pad, mode="wrap")
    dist, (ix, iy) = ndimage.distance_transform_edt(padded, sampling=h, return_indices=True)
    core = (slice(pad, pad + n), slice(pad, pad + n))
    ix = (ix[core] - pad) % n
    iy = (iy[core] - pad) % n
    return dist[core], ix * n + iy


def smooth_along_layer(values: np.ndarray, layer: np.ndarray, level: np.ndarray, grid,
                       width: float) -> np.ndarray:
    """Gaussian average of ``values`` over nearby layer cells of the same level.

    A normalized convolution: blur ``values * mask`` and ``mask`` alike and
    divide. Only entries on ``layer`` are meaningful.
    """
    if width <= 0:
        return values
    k1, k2 = grid.wavenumber_mesh()
    half = grid.n // 2 + 1
    gauss = np.exp(-0.5 * width**2 * (k1[:, :half] ** 2 + k2[:, :half] ** 2))
    out = values.copy()
    for lv in np.unique(level[layer]):
        mask = (layer & (level == lv)).astype(np.float64)
        num = irfft(gauss * rfft(values * mask), grid.n)
        den = irfft(gauss * rfft(mask), grid.n)
        sel = mask > 0
        out[sel] = num[sel] / den[sel]
    return out


def smooth_for_geometry(f: PhaseField, width: float = GEOMETRY_SMOOTHING) -> PhaseField:
    """Gaussian blur of ``width`` cells, applied to the periodic part of ``f``.

    A thresholded field only knows its dislocations up to a staircase; a
    blur of about one cell turns the staircase into a smooth level line at
    the area-consistent position without shifting straight fronts.
    """
    ramp = f.ramp() if f.winding != (0, 0) else 0.0
    out = ndimage.gaussian_filter(f.u - ramp, width, mode="wrap") + ramp
    return PhaseField(f.grid, out, quantized=False, winding=f.winding)


def dislocation_geometry(f: PhaseField, params: SimParams) -> InterfaceGeometry:
    """Geometry of the dislocations carried by the thresholded field ``f``."""
    return estimate_geometry(smooth_for_geometry(f), params)


def estimate_geometry(f_pre_threshold: PhaseField, params: SimParams) -> InterfaceGeometry:
    """Distance and orientation near every level line of the pre-threshold field.

    Layer cells (straddling a half-integer level) use the stencil of
    ``stencil_geometry``, with ``sin^2(alpha)`` averaged along the line over
    ``anchor_smoothing``; cells up to ``band_width`` away take the angle of
    their nearest layer cell.
    """
    f = f_pre_threshold
    h = f.grid.dx
    d_st, alpha_st, level = stencil_geometry(f.u, h, f.winding, params.burgers)
    layer = interface_layer(f.u, f.winding) & np.isfinite(d_st)
    if not layer.any():
        empty = np.zeros(f.grid.shape, dtype=bool)
        return InterfaceGeometry(np.full(f.grid.shape, np.inf), np.zeros(f.grid.shape), empty,
                                 level, empty, np.zeros(f.grid.shape, dtype=np.intp))
    if params.anchor_smoothing > 0:
        # Staircase corners give noisy angles; average them along the line.
        s2 = smooth_along_layer(np.sin(alpha_st) ** 2, layer, level, f.grid, params.anchor_smoothing)
        alpha_st = np.where(layer, np.arcsin(np.sqrt(np.clip(s2, 0.0, 1.0))), alpha_st)
    dist, source = _nearest_layer_cell(layer, h, params.band_width)
    d_src = d_st.ravel()[source]
    lvl_src = level.ravel()[source]
    side = np.where(f.u >= lvl_src, 1.0, -1.0)
    d = np.where(layer, d_st, d_src + side * dist)
    alpha = alpha_st.ravel()[source]
    band = (dist <= params.band_width) & (np.abs(d) <= params.band_width)
    return InterfaceGeometry(d=d, alpha=alpha, band_mask=band, level=level,
                             layer_mask=layer, source=source)


def compute_u_dis(f_pre_threshold: PhaseField, geom: InterfaceGeometry, params: SimParams) -> RealField2D:
    """Value of the convolved field at the dislocation location.

    On the interface layer ``u_dis = u~ - 2/(pi dt) * d / (1 + nu sin^2(alpha)/(1 - nu))``,
    averaged along the line over ``params.anchor_smoothing``. Band cells
    off the layer take the value of their nearest layer cell, since ``u_dis``
    does not depend on the distance. Outside the band ``u_dis`` is the
    nearest half-integer level.

    The averaging matters for ``beta > 1``: stretching multiplies every
    wiggle of ``u_dis`` along the line by ``beta``, and short wiggles would
    otherwise overshoot and grow from one step to the next.
    """
    ut = f_pre_threshold.u
    level = nearest_level(ut)
    mask = geom.band_mask
    d = np.where(geom.layer_mask, geom.d, 0.0)
    on_layer = ut - (2.0 / (np.pi * params.dt)) * d / mobility_factor(geom.sin2, params.nu)
    if params.beta > 1 and geom.layer_mask.any():
        offset = smooth_along_layer(on_layer - geom.level, geom.layer_mask, geom.level,
                                    f_pre_threshold.grid, params.anchor_smoothing)
        on_layer = geom.level + offset
    extended = on_layer.ravel()[geom.source]
    return RealField2D(f_pre_threshold.grid, np.where(mask, extended, level))


def stretch_correct(f_pre_threshold: PhaseField, u_dis: RealField2D, geom: InterfaceGeometry,
                    params: SimParams) -> RealField2D:
    """``u_dis + arctan((factor/beta) tan(pi (u~ - u_dis)))/pi`` inside the band.

    The offset ``u~ - u_dis`` is clamped to ``(-1/2, 1/2)`` so the tangent stays
    finite. Outside the band the field passes through unchanged.
    """
    ut = f_pre_threshold.u
    mask = geom.band_mask
    offset = np.clip(ut - u_dis.values, -0.5 + CLAMP, 0.5 - CLAMP)
    gain = mobility_factor(geom.sin2, params.nu) / params.beta
    out = u_dis.values + np.arctan(gain * np.tan(np.pi * offset)) / np.pi
    return RealField2D(f_pre_threshold.grid, np.where(mask, out, ut))
