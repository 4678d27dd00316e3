"""Phase-field representation of dislocation configurations.

A ``PhaseField`` stores the integer-valued (after thresholding) field ``u``
whose jumps are the dislocations. Fields may carry a *winding*: the field
is then quasi-periodic, ``u(x + 2L, y) = u(x, y) + winding[0]`` and likewise
in y. A single straight dislocation spanning the periodic box needs winding 1;
without it a periodic step function always has a second, opposite jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from tddm.spectral import Grid


@dataclass
class PhaseField:
    grid: Grid
    u: np.ndarray
    quantized: bool = True
    winding: tuple[int, int] = (0, 0)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        if self.u.shape != self.grid.shape:
            raise ValueError(f"field shape {self.u.shape} does not match grid {self.grid.shape}")
        self.winding = (int(self.winding[0]), int(self.winding[1]))

    def ramp(self) -> np.ndarray:
        """Linear part carrying the winding; ``u - ramp()`` is periodic."""
        wx, wy = self.winding
        if wx == 0 and wy == 0:
            return np.zeros(self.grid.shape)
        L = self.grid.domain_half_length
        x, y = self.grid.mesh()
        return wx * (x + L) / (2 * L) + wy * (y + L) / (2 * L)

    def shifted(self, axis: int, step: int) -> np.ndarray:
        """Neighbour values ``u[i + step]`` along ``axis`` with winding applied."""
        return neighbor(self.u, axis, step, self.winding[axis])

    def max_level(self) -> int:
        return int(np.round(self.u.max()))

    def copy(self) -> "PhaseField":
        return PhaseField(self.grid, self.u.copy(), self.quantized, self.winding)

    def __add__(self, other: "PhaseField") -> "PhaseField":
        if not self.grid.same_as(other.grid):
            raise ValueError("cannot add fields on different grids")
        w = (self.winding[0] + other.winding[0], self.winding[1] + other.winding[1])
        return PhaseField(self.grid, self.u + other.u, self.quantized and other.quantized, w)


def neighbor(u: np.ndarray, axis: int, step: int, winding: int = 0) -> np.ndarray:
    """Periodic neighbour ``u[i + step]`` (step = +1 or -1), corrected by the winding."""
    out = np.roll(u, -step, axis=axis)
    if winding:
        idx = [slice(None), slice(None)]
        idx[axis] = -1 if step > 0 else 0
        out[tuple(idx)] += winding if step > 0 else -winding
    return out


def quantize(f: PhaseField) -> PhaseField:
    """Round to the nearest integer level (idempotent on quantized fields)."""
    return PhaseField(f.grid, np.rint(f.u), True, f.winding)


def init_circle(grid: Grid, center: tuple[float, float], radius: float,
                inside_value: int = 1, outside_value: int = 0) -> PhaseField:
    if not radius > grid.dx:
        raise ValueError(f"radius {radius} is below grid resolution dx={grid.dx}")
    cx, cy = center
    L = grid.domain_half_length
    if abs(cx) + radius > L or abs(cy) + radius > L:
        raise ValueError("circle does not fit inside the domain")
    x, y = grid.mesh()
    inside = (x - cx) ** 2 + (y - cy) ** 2 < radius**2
    return PhaseField(grid, np.where(inside, float(inside_value), float(outside_value)))


def init_half_plane(grid: Grid, x0: float, value_right: int = 1, value_left: int = 0,
                    wrap: bool = True) -> PhaseField:
    """Straight dislocation along y at ``x = x0``.

    With ``wrap`` (default) the field winds by ``value_right - value_left``
    across the period so the box holds a single dislocation. With
    ``wrap=False`` the plain periodic step also has a jump at ``x = -L``.
    """
    L = grid.domain_half_length
    if not abs(x0) < L:
        raise ValueError(f"x0={x0} outside domain (-{L}, {L})")
    x, _ = grid.mesh()
    u = np.where(x > x0, float(value_right), float(value_left))
    winding = (int(value_right - value_left), 0) if wrap else (0, 0)
    return PhaseField(grid, u, True, winding)


def init_frank_read(grid: Grid, x0: float, y0: float) -> PhaseField:
    """One-cell-wide strip ``[x0 - dx, x0] x [-y0, y0]`` set to 1."""
    if not y0 >= grid.dx:
        raise ValueError(f"segment half-length y0={y0} below grid resolution")
    L = grid.domain_half_length
    if x0 - grid.dx < -L or x0 >= L or y0 >= L:
        raise ValueError("Frank-Read strip lies outside the domain")
    x, y = grid.mesh()
    eps = 1e-9 * grid.dx
    inside = (x >= x0 - grid.dx - eps) & (x <= x0 + eps) & (np.abs(y) <= y0 + eps)
    return PhaseField(grid, inside.astype(float))


# ---------------------------------------------------------------- contours

@dataclass
class Contour:
    level: float
    points: np.ndarray = field(repr=False)
    closed: bool

    def area(self) -> float:
        """Signed-free shoelace area (meaningful for closed contours)."""
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def centroid(self) -> np.ndarray:
        x, y = self.points[:, 0], self.points[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = 0.5 * cross.sum()
        if abs(a) < 1e-300:
            return self.points.mean(axis=0)
        return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)

    def contains(self, point) -> bool:
        """Even-odd point-in-polygon test (closed contours, unwrapped coordinates)."""
        px, py = point
        x, y = self.points[:, 0], self.points[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        crosses = (y > py) != (yn > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x + (py - y) * (xn - x) / (yn - y)
        return bool(np.count_nonzero(crosses & (px < xi)) % 2)

    def __len__(self) -> int:
        return len(self.points)


# Marching-squares segments. Corner bits: 1 = (i,j), 2 = (i+1,j), 4 = (i+1,j+1),
# 8 = (i,j+1). Edges: 0 bottom, 1 right, 2 top, 3 left.
_SEGMENTS = {
    1: ((3, 0),), 2: ((0, 1),), 3: ((3, 1),), 4: ((1, 2),), 6: ((0, 2),), 7: ((3, 2),),
    8: ((2, 3),), 9: ((0, 2),), 11: ((1, 2),), 12: ((1, 3),), 13: ((0, 1),), 14: ((3, 0),),
}
# Saddles resolved by the average of the four corners.
_SADDLE = {
    (5, True): ((0, 1), (2, 3)), (5, False): ((3, 0), (1, 2)),
    (10, True): ((3, 0), (1, 2)), (10, False): ((0, 1), (2, 3)),
}


def _level_family(f: PhaseField, level: float) -> list[float]:
    g = math.gcd(abs(f.winding[0]), abs(f.winding[1]))
    if g == 0:
        return [level]
    lo = f.u.min() - abs(f.winding[0]) - abs(f.winding[1]) - g
    hi = f.u.max() + abs(f.winding[0]) + abs(f.winding[1]) + g
    k0 = math.floor((lo - level) / g)
    k1 = math.ceil((hi - level) / g)
    return [level + k * g for k in range(k0, k1 + 1)]


def extract_contours(f: PhaseField, level: float) -> list[Contour]:
    """Level curves of ``u`` traced on the periodic torus.

    Crossings are placed by linear interpolation along cell edges. Curves
    that close on the torus without wrapping are returned ``closed=True``;
    curves that span the period come back open, in unwrapped coordinates.
    For fields with a winding every level congruent to ``level`` modulo the
    winding is traced, since those are the periodic copies of one another.
    """
    grid = f.grid
    n, dx, L = grid.n, grid.dx, grid.domain_half_length
    wx, wy = f.winding
    u = f.u
    c00 = u
    c10 = neighbor(u, 0, 1, wx)
    c01 = neighbor(u, 1, 1, wy)
    c11 = neighbor(c10, 1, 1, wy)
    corners = (c00, c10, c11, c01)
    centre = 0.25 * (c00 + c10 + c11 + c01)

    points: dict[tuple, tuple[float, float]] = {}
    adjacency: dict[tuple, list[tuple]] = {}

    def edge_point(i, j, e, lam, vals):
        # Returns the canonical key and torus coordinates of a crossing.
        a_idx, b_idx = ((0, 1), (1, 2), (3, 2), (0, 3))[e]
        a, b = vals[a_idx], vals[b_idx]
        t = (lam - a) / (b - a)
        if e == 0:
            key_edge, off, px, py = ("x", i, j), 0.0, i + t, j
        elif e == 2:
            jj = j + 1
            key_edge, off, px, py = ("x", i, jj % n), (wy if jj == n else 0), i + t, jj
        elif e == 3:
            key_edge, off, px, py = ("y", i, j), 0.0, i, j + t
        else:
            ii = i + 1
            key_edge, off, px, py = ("y", ii % n, j), (wx if ii == n else 0), ii, j + t
        key = key_edge + (round(lam - off, 9),)
        x = -L + (px % n) * dx
        y = -L + (py % n) * dx
        return key, (x, y)

    for lam in _level_family(f, level):
        above = [c > lam for c in corners]
        case = (above[0].astype(np.int8) | (above[1].astype(np.int8) << 1)
                | (above[2].astype(np.int8) << 2) | (above[3].astype(np.int8) << 3))
        ii, jj = np.nonzero((case != 0) & (case != 15))
        for i, j in zip(ii.tolist(), jj.tolist()):
            cs = int(case[i, j])
            if cs in (5, 10):
                segs = _SADDLE[(cs, bool(centre[i, j] > lam))]
            else:
                segs = _SEGMENTS[cs]
            vals = (c00[i, j], c10[i, j], c11[i, j], c01[i, j])
            for ea, eb in segs:
                ka, pa = edge_point(i, j, ea, lam, vals)
                kb, pb = edge_point(i, j, eb, lam, vals)
                points[ka] = pa
                points[kb] = pb
                adjacency.setdefault(ka, []).append(kb)
                adjacency.setdefault(kb, []).append(ka)

    period = 2.0 * L
    contours: list[Contour] = []
    visited: set = set()
    for start in adjacency:
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        prev, cur = None, start
        while True:
            nxt = [k for k in adjacency[cur] if k != prev]
            if not nxt:
                break
            nk = nxt[0]
            if nk == start or nk in visited:
                break
            chain.append(nk)
            visited.add(nk)
            prev, cur = cur, nk
        pts = np.empty((len(chain), 2))
        pts[0] = points[chain[0]]
        for idx in range(1, len(chain)):
            p = np.array(points[chain[idx]])
            pts[idx] = p - period * np.round((p - pts[idx - 1]) / period)
        # A contractible loop returns to its start; a spanning one is off by a period.
        gap = pts[0] - pts[-1]
        closed = bool(np.all(np.round(gap / period) == 0)) and len(chain) >= 3
        lvl = chain[0][-1]
        contours.append(Contour(float(lvl), pts, closed))
    return contours


# ---------------------------------------------------------------- snapshots

def write_pgm(f: PhaseField, path: str | Path) -> Path:
    """8-bit binary PGM of ``u`` rescaled to 0..255, plus a ``.txt`` sidecar with the range."""
    path = Path(path)
    lo, hi = float(f.u.min()), float(f.u.max())
    span = hi - lo if hi > lo else 1.0
    # Image rows run from +y down to -y, columns along +x.
    img = np.rint((f.u.T[::-1] - lo) / span * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n# min={lo!r} max={hi!r}\n{f.grid.n} {f.grid.n}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    path.with_name(path.name + ".txt").write_text(f"min {lo!r}\nmax {hi!r}\n")
    return path


def write_csv(f: PhaseField, path: str | Path) -> Path:
    """Raw dump of ``u`` with rows indexed by x and columns by y."""
    path = Path(path)
    fmt = "%d" if f.quantized else "%.17g"
    np.savetxt(path, f.u, fmt=fmt, delimiter=",")
    return path
