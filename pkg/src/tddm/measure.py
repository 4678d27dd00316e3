"""Observables extracted from simulated fields, and the closed-form references.

Velocities are reported in physical simulation time: for the corrected
scheme one step lasts ``beta * dt``. The *numerical* velocity (front
displacement per ``dt``) is ``beta`` times larger; ``numerical_velocity``
converts.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from tddm.correction import SimParams
from tddm.field import PhaseField, extract_contours


class MeasurementError(ValueError):
    pass


@dataclass
class VelocityRecord:
    step: int
    time: float
    front_position: float
    instantaneous_velocity: float
    running_mean_velocity: float


@dataclass
class RadiusRecord:
    step: int
    time: float
    radius_area: float
    radius_mean: float


# ---------------------------------------------------------------- fronts

def front_crossings(f: PhaseField, level: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Sub-cell x-positions of level crossings along every grid row.

    Returns ``(x, row)`` arrays; crossings are linearly interpolated between
    neighbouring cells, and levels congruent to ``level`` modulo the x
    winding count as the same front.
    """
    grid = f.grid
    u = f.u
    nxt = np.roll(u, -1, axis=0)
    nxt[-1] += f.winding[0]
    lo, hi = np.minimum(u, nxt), np.maximum(u, nxt)
    # Smallest member of the level family above lo.
    period = abs(f.winding[0]) or None
    if period:
        lam = level + period * np.ceil((lo - level) / period)
        lam = np.where(lam == lo, lam + period, lam)
    else:
        lam = np.full_like(u, level)
    hit = (lo < lam) & (lam <= hi) & (hi > lo)
    ix, iy = np.nonzero(hit)
    a, b, lv = u[ix, iy], nxt[ix, iy], lam[ix, iy]
    t = (lv - a) / (b - a)
    return grid.x_coords[ix] + t * grid.dx, iy


def front_position(f: PhaseField, reference: float, level: float = 0.5) -> float:
    """Row-averaged crossing nearest ``reference`` (periodic distance), unwrapped near it."""
    x, rows = front_crossings(f, level)
    if x.size == 0:
        raise MeasurementError("no level crossing found")
    period = f.grid.length
    shifted = x - period * np.round((x - reference) / period)
    dist = np.abs(shifted - reference)
    n = f.grid.n
    best = np.full(n, np.inf)
    pos = np.full(n, np.nan)
    for xv, r, dv in zip(shifted, rows, dist):
        if dv < best[r]:
            best[r], pos[r] = dv, xv
    if np.isnan(pos).any():
        raise MeasurementError("some rows have no crossing")
    return float(pos.mean())


class FrontTracker:
    """Incremental front trajectory of a straight dislocation along y.

    Each ``update`` locates the crossing nearest the previous position, so
    the trajectory unwraps across the periodic boundary. Time advances by
    ``beta * dt`` per corrected step and ``dt`` per basic step.
    """

    def __init__(self, params: SimParams, corrected: bool = True, level: float = 0.5):
        self.tau = params.effective_dt if corrected else params.dt
        self.level = level
        self.records: list[VelocityRecord] = []

    def update(self, step: int, f: PhaseField) -> VelocityRecord:
        time = step * self.tau
        if not self.records:
            x, _ = front_crossings(f, self.level)
            if x.size == 0:
                raise MeasurementError("no level crossing found")
            pos = front_position(f, float(np.median(x)), self.level)
            rec = VelocityRecord(step, time, pos, 0.0, 0.0)
        else:
            last, first = self.records[-1], self.records[0]
            if time <= last.time:
                raise MeasurementError("steps must increase")
            pos = front_position(f, last.front_position, self.level)
            inst = (pos - last.front_position) / (time - last.time)
            mean = (pos - first.front_position) / (time - first.time)
            rec = VelocityRecord(step, time, pos, inst, mean)
        self.records.append(rec)
        return rec


def measure_front_velocity(history: Sequence[PhaseField], params: SimParams, corrected: bool = True,
                           steps: Sequence[int] | None = None, level: float = 0.5) -> list[VelocityRecord]:
    """Front trajectory and velocities; ``history[k]`` is the field after step ``steps[k]``."""
    if len(history) == 0:
        raise MeasurementError("empty history")
    steps = list(range(len(history))) if steps is None else list(steps)
    tracker = FrontTracker(params, corrected, level)
    for k, f in zip(steps, history):
        tracker.update(k, f)
    return tracker.records


def numerical_velocity(records: Sequence[VelocityRecord], beta: float, skip: int = 0) -> float:
    """Mean front displacement per ``dt`` over the records after ``skip``.

    This is the quantity the velocity tables list: ``beta`` times the
    physical velocity.
    """
    a, b = records[skip], records[-1]
    if b.time == a.time:
        return 0.0
    return beta * (b.front_position - a.front_position) / (b.time - a.time)


# ---------------------------------------------------------------- loops

def closed_contours(f: PhaseField, level: float = 0.5):
    return [c for c in extract_contours(f, level) if c.closed]


def measure_loop_radius(f: PhaseField, step: int = 0, time: float = 0.0, level: float = 0.5) -> RadiusRecord:
    """Area-equivalent radius and mean centroid distance of the single loop."""
    loops = extract_contours(f, level)
    if len(loops) != 1 or not loops[0].closed:
        raise MeasurementError(f"expected exactly one closed loop, found {len(loops)} contours")
    loop = loops[0]
    centre = loop.centroid()
    r_mean = float(np.linalg.norm(loop.points - centre, axis=1).mean())
    return RadiusRecord(step, time, math.sqrt(loop.area() / math.pi), r_mean)


def loop_shape(f: PhaseField, level: float = 0.5) -> tuple[float, float]:
    """Aspect ratio and major-axis angle (radians from x) of the region above ``level``.

    Computed from second moments of the enclosed cells, which for an ellipse
    gives the semi-axis ratio exactly.
    """
    mask = f.u > level
    if mask.sum() < 3:
        raise MeasurementError("region too small for a shape estimate")
    x, y = f.grid.mesh()
    px, py = x[mask], y[mask]
    cov = np.cov(np.vstack([px, py]))
    evals, evecs = np.linalg.eigh(cov)
    major = evecs[:, 1]
    aspect = math.sqrt(evals[1] / max(evals[0], 1e-300))
    return aspect, math.atan2(major[1], major[0])


# ---------------------------------------------------------------- oracles

def oracle_edge_velocity(sigma: float, dt: float, nu: float, corrected: bool) -> float:
    """Straight edge velocity: ``pi dt sigma/2``, divided by ``1 - nu`` without correction."""
    v = 0.5 * math.pi * dt * sigma
    return v if corrected else v / (1.0 - nu)


def loop_shrink_speed(R: float, dt: float) -> float:
    return dt / (8.0 * R) * math.log(16.0 * R / dt)


def oracle_loop_radius_trajectory(R0: float, dt: float, t_end: float, step: float | None = None
                                  ) -> list[tuple[float, float]]:
    """Integrate ``dR/dt = -(dt/(8R)) log(16R/dt)`` with classical RK4.

    Stops at ``t_end`` or once ``R <= 2 dt``.
    """
    if not R0 > dt or 16.0 * R0 / dt <= 1.0:
        raise ValueError(f"initial radius {R0} too small for core size {dt}")
    h = dt / 10.0 if step is None else min(step, dt / 10.0)

    def rhs(r):
        return -loop_shrink_speed(r, dt)

    t, r = 0.0, R0
    out = [(t, r)]
    while t < t_end and r > 2.0 * dt:
        hh = min(h, t_end - t)
        k1 = rhs(r)
        k2 = rhs(r + 0.5 * hh * k1)
        k3 = rhs(r + 0.5 * hh * k2)
        k4 = rhs(r + hh * k3)
        r += hh * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        t += hh
        out.append((t, r))
    return out


def oracle_radius_at(times, R0: float, dt: float) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    traj = np.array(oracle_loop_radius_trajectory(R0, dt, float(times.max()) if times.size else 0.0))
    return np.interp(times, traj[:, 0], traj[:, 1], right=np.nan)


def oracle_general_velocity(kappa: float, alpha: float, dt: float, nu: float, sigma: float,
                            c0_plus_a: float = 0.0) -> float:
    """Leading-order threshold velocity of a curved segment under applied stress.

    ``c0_plus_a`` lumps the core and nonlocal O(1) constants supplied by the caller.
    """
    if not 0.0 < dt < 1.0:
        raise ValueError("dt must lie in (0, 1)")
    s2 = math.sin(alpha) ** 2
    aniso = 1.0 + nu * s2 / (1.0 - nu)
    line = -(1.0 + nu * (1.0 - 3.0 * s2)) / (4.0 * math.pi * (1.0 - nu)) * kappa * math.log(dt)
    return 0.5 * math.pi * dt * aniso * (line + c0_plus_a + sigma)


# ---------------------------------------------------------------- output

def write_velocity_csv(records: Iterable[VelocityRecord], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "time", "front_position", "instantaneous_velocity", "running_mean_velocity"])
        for r in records:
            w.writerow([r.step, repr(r.time), repr(r.front_position), repr(r.instantaneous_velocity),
                        repr(r.running_mean_velocity)])
    return path


def write_radius_csv(records: Iterable[RadiusRecord], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "time", "radius_area", "radius_mean"])
        for r in records:
            w.writerow([r.step, repr(r.time), repr(r.radius_area), repr(r.radius_mean)])
    return path


def write_contours_csv(contours, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "point_index", "x", "y", "closed"])
        for c in contours:
            for i, (x, y) in enumerate(c.points):
                w.writerow([repr(c.level), i, repr(float(x)), repr(float(y)), int(c.closed)])
    return path
