"""Structured rectilinear 2D grids with zone and fault-band tagging.

Cells are axis-aligned rectangles (possibly non-uniform spacing). Dipping
faults are represented as stair-stepped bands: a cell belongs to the band if
its centroid lies within ``width/2`` of the fault centerline (perpendicular
distance). Layer interfaces on either side of a fault can be shifted
vertically by a throw.

Flow connectivity is cell-centered (two-point faces), mechanics connectivity
is vertex-centered (bilinear quads). The grid is immutable after
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    """Raised for inconsistent grid specifications."""


@dataclass(frozen=True)
class FaultDescriptor:
    """Geometry of one dipping fault band.

    The band centerline passes through (x_ref, y_ref) with a dip angle
    measured from the horizontal. ``throw`` shifts the layer interfaces on
    ``shift_side`` of the centerline (positive = upward). ``treated_interval``
    is a (y_lo, y_hi) range marking the mineralized part of the band.
    """

    name: str
    zone: int
    x_ref: float
    y_ref: float
    dip_deg: float
    width: float
    throw: float = 0.0
    shift_side: str = "east"
    treated: bool = False
    treated_interval: tuple[float, float] | None = None

    def __post_init__(self):
        if not (0.0 < self.dip_deg <= 90.0):
            raise MeshError(f"dip must lie in (0, 90] deg, got {self.dip_deg}")
        if self.width <= 0.0:
            raise MeshError("fault width must be positive")
        if self.shift_side not in ("east", "west"):
            raise MeshError("shift_side must be 'east' or 'west'")

    @property
    def dip_rad(self) -> float:
        return math.radians(self.dip_deg)

    @property
    def tangent(self) -> np.ndarray:
        """Unit vector along the fault trace (up-dip)."""
        return np.array([math.cos(self.dip_rad), math.sin(self.dip_rad)])

    def center_x(self, y):
        """Centerline x at elevation y."""
        if self.dip_deg == 90.0:
            return np.full_like(np.asarray(y, float), self.x_ref)
        return self.x_ref + (np.asarray(y, float) - self.y_ref) / math.tan(self.dip_rad)

    def perpendicular_distance(self, x, y):
        return np.abs(np.asarray(x, float) - self.center_x(y)) * math.sin(self.dip_rad)


@dataclass(frozen=True)
class GridSpec:
    """Everything needed to build a grid: coordinates, layers, faults."""

    x_coords: np.ndarray
    y_coords: np.ndarray
    layer_zones: tuple[int, ...] = (0,)
    layer_interfaces: tuple[float, ...] = ()
    faults: tuple[FaultDescriptor, ...] = ()

    def __post_init__(self):
        if len(self.layer_zones) != len(self.layer_interfaces) + 1:
            raise MeshError("need exactly one more layer zone than interfaces")


@dataclass(frozen=True)
class StructuredGrid:
    nx: int
    ny: int
    x: np.ndarray          # vertex x coordinates, shape (nx+1,)
    y: np.ndarray          # vertex y coordinates, shape (ny+1,)
    cell_zone: np.ndarray  # shape (n_cells,)
    spec: GridSpec

    # derived geometry, filled by build_grid
    cx: np.ndarray = field(default=None, repr=False)
    cy: np.ndarray = field(default=None, repr=False)
    dx: np.ndarray = field(default=None, repr=False)
    dy: np.ndarray = field(default=None, repr=False)
    vol: np.ndarray = field(default=None, repr=False)
    cell_verts: np.ndarray = field(default=None, repr=False)  # (n_cells, 4) CCW
    face_cells: np.ndarray = field(default=None, repr=False)  # (n_faces, 2) L,R
    face_area: np.ndarray = field(default=None, repr=False)
    face_dl: np.ndarray = field(default=None, repr=False)
    face_dr: np.ndarray = field(default=None, repr=False)
    face_dz: np.ndarray = field(default=None, repr=False)
    face_normal_axis: np.ndarray = field(default=None, repr=False)  # 0=x, 1=y

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def n_verts(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    def cell_id(self, ix, iy):
        return np.asarray(iy) * self.nx + np.asarray(ix)

    def cell_ij(self, cid):
        cid = np.asarray(cid)
        return cid % self.nx, cid // self.nx

    def vert_id(self, jx, jy):
        return np.asarray(jy) * (self.nx + 1) + np.asarray(jx)

    def vert_coords(self) -> np.ndarray:
        xx, yy = np.meshgrid(self.x, self.y)  # shape (ny+1, nx+1)
        return np.column_stack([xx.ravel(), yy.ravel()])

    def boundary_cells(self, side: str) -> np.ndarray:
        """Cell ids along one boundary ('left', 'right', 'bottom', 'top')."""
        if side == "left":
            return self.cell_id(0, np.arange(self.ny))
        if side == "right":
            return self.cell_id(self.nx - 1, np.arange(self.ny))
        if side == "bottom":
            return self.cell_id(np.arange(self.nx), 0)
        if side == "top":
            return self.cell_id(np.arange(self.nx), self.ny - 1)
        raise MeshError(f"unknown boundary side {side!r}")

    def boundary_vertices(self, side: str) -> np.ndarray:
        if side == "left":
            return self.vert_id(0, np.arange(self.ny + 1))
        if side == "right":
            return self.vert_id(self.nx, np.arange(self.ny + 1))
        if side == "bottom":
            return self.vert_id(np.arange(self.nx + 1), 0)
        if side == "top":
            return self.vert_id(np.arange(self.nx + 1), self.ny)
        raise MeshError(f"unknown boundary side {side!r}")


def graded_axis(segments: list[tuple[float, float, float]]) -> np.ndarray:
    """Vertex coordinates from contiguous (start, end, target_dx) segments.

    Each segment is divided into an integer number of uniform cells whose
    size is as close as possible to ``target_dx`` without exceeding it much
    (rounded count, at least one cell).
    """
    coords = [segments[0][0]]
    for x0, x1, dx in segments:
        if x1 <= x0 or dx <= 0.0:
            raise MeshError(f"bad axis segment ({x0}, {x1}, {dx})")
        if abs(coords[-1] - x0) > 1e-9 * max(1.0, abs(x1)):
            raise MeshError("axis segments must be contiguous")
        n = max(1, round((x1 - x0) / dx))
        coords.extend(np.linspace(x0, x1, n + 1)[1:])
    return np.asarray(coords)


def _tag_zones(spec: GridSpec, cx: np.ndarray, cy: np.ndarray) -> np.ndarray:
    interfaces = np.asarray(spec.layer_interfaces, float)
    layer_zones = np.asarray(spec.layer_zones, int)

    shift = np.zeros_like(cx)
    for f in spec.faults:
        side = np.sign(cx - f.center_x(cy))
        want = 1.0 if f.shift_side == "east" else -1.0
        shift = shift + np.where(side == want, f.throw, 0.0)

    y_eff = cy - shift
    zone = layer_zones[np.searchsorted(interfaces, y_eff)]

    for f in spec.faults:
        in_band = f.perpendicular_distance(cx, cy) <= f.width / 2.0
        zone = np.where(in_band, f.zone, zone)
    return zone


def build_grid(spec: GridSpec) -> StructuredGrid:
    """Build the grid, tag zones, and precompute face/vertex connectivity.

    Raises :class:`MeshError` ("unresolved fault") when a fault band is too
    thin for the local cell size, i.e. some grid row contains no centroid
    inside the band.
    """
    x = np.asarray(spec.x_coords, float)
    y = np.asarray(spec.y_coords, float)
    if x.ndim != 1 or y.ndim != 1 or len(x) < 2 or len(y) < 2:
        raise MeshError("need at least one cell per direction")
    if np.any(np.diff(x) <= 0.0) or np.any(np.diff(y) <= 0.0):
        raise MeshError("grid coordinates must be strictly increasing")

    nx, ny = len(x) - 1, len(y) - 1
    dxs, dys = np.diff(x), np.diff(y)
    cxs = 0.5 * (x[:-1] + x[1:])
    cys = 0.5 * (y[:-1] + y[1:])

    cx = np.tile(cxs, ny)
    cy = np.repeat(cys, nx)
    dx = np.tile(dxs, ny)
    dy = np.repeat(dys, nx)
    vol = dx * dy

    for f in spec.faults:
        if not (x[0] <= f.center_x(cys).min() and f.center_x(cys).max() <= x[-1]):
            raise MeshError(f"fault {f.name!r} leaves the domain")

    zone = _tag_zones(spec, cx, cy)

    for f in spec.faults:
        tagged = zone == f.zone
        rows_hit = tagged.reshape(ny, nx).any(axis=1)
        if not rows_hit.all():
            raise MeshError(
                f"unresolved fault {f.name!r}: band of width {f.width} m is "
                "thinner than the local cell size"
            )

    # interior faces: x-normal then y-normal
    ix, iy = np.meshgrid(np.arange(nx - 1), np.arange(ny), indexing="ij")
    lx = iy.ravel() * nx + ix.ravel()
    fx = np.column_stack([lx, lx + 1])
    ax_area = dy[lx]
    ax_dl = 0.5 * dx[lx]
    ax_dr = 0.5 * dx[lx + 1]

    jx, jy = np.meshgrid(np.arange(nx), np.arange(ny - 1), indexing="ij")
    ly = jy.ravel() * nx + jx.ravel()
    fy = np.column_stack([ly, ly + nx])
    ay_area = dx[ly]
    ay_dl = 0.5 * dy[ly]
    ay_dr = 0.5 * dy[ly + nx]

    face_cells = np.vstack([fx, fy])
    face_area = np.concatenate([ax_area, ay_area])
    face_dl = np.concatenate([ax_dl, ay_dl])
    face_dr = np.concatenate([ax_dr, ay_dr])
    face_axis = np.concatenate([np.zeros(len(fx), int), np.ones(len(fy), int)])
    face_dz = cy[face_cells[:, 1]] - cy[face_cells[:, 0]]

    # vertices per cell, CCW from lower-left
    cix, ciy = np.arange(nx), np.arange(ny)
    gx, gy = np.meshgrid(cix, ciy)  # (ny, nx)
    v00 = gy * (nx + 1) + gx
    cell_verts = np.stack(
        [v00, v00 + 1, v00 + nx + 2, v00 + nx + 1], axis=-1
    ).reshape(-1, 4)

    return StructuredGrid(
        nx=nx, ny=ny, x=x, y=y, cell_zone=zone, spec=spec,
        cx=cx, cy=cy, dx=dx, dy=dy, vol=vol, cell_verts=cell_verts,
        face_cells=face_cells, face_area=face_area,
        face_dl=face_dl, face_dr=face_dr, face_dz=face_dz,
        face_normal_axis=face_axis,
    )


@dataclass(frozen=True)
class FaultCell:
    """One fault-band cell with the vertex pairs used for slip projection."""

    cell: int
    left_verts: tuple[int, int]
    right_verts: tuple[int, int]
    length_along: float  # fault-parallel length represented by the cell


def fault_cells(grid: StructuredGrid, fault: FaultDescriptor) -> list[FaultCell]:
    """Band cells ordered top-down (increasing depth), with side vertex pairs.

    Left/right are the west/east cell faces; for a near-vertical band they
    bracket the fault trace. Fault-parallel length is the cell height divided
    by sin(dip).
    """
    ids = np.flatnonzero(grid.cell_zone == fault.zone)
    if len(ids) == 0:
        raise MeshError(f"fault {fault.name!r} has no tagged cells")
    order = np.argsort(-grid.cy[ids], kind="stable")
    out = []
    sin_dip = math.sin(fault.dip_rad)
    for cid in ids[order]:
        ix, iy = grid.cell_ij(cid)
        lv = (int(grid.vert_id(ix, iy)), int(grid.vert_id(ix, iy + 1)))
        rv = (int(grid.vert_id(ix + 1, iy)), int(grid.vert_id(ix + 1, iy + 1)))
        out.append(FaultCell(
            cell=int(cid), left_verts=lv, right_verts=rv,
            length_along=float(grid.dy[cid] / sin_dip),
        ))
    return out
