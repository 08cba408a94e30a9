"""Structured 2D background grids: criss-cross triangles and Cartesian quads.

Grids are built on an enclosing square (or rectangle) and may be rigidly
rotated about a pivot.  Meshes are immutable after construction: treat all
arrays as read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

NO_CELL = -1


@dataclass
class Mesh:
    """Background grid: nodes, CCW cells, edge connectivity.

    edges rows are (node_a, node_b, left_cell, right_cell).  The edge is
    directed so that ``left_cell`` lies on the left of a->b; boundary edges
    have ``right_cell == NO_CELL``.
    """

    nodes: np.ndarray
    cells: np.ndarray
    cell_kind: str  # "tri3" | "quad4"
    edges: np.ndarray = field(default=None)  # type: ignore[assignment]
    outer_boundary_edges: np.ndarray = field(default=None)  # type: ignore[assignment]
    h_global: float = 0.0

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        self.cells = np.ascontiguousarray(self.cells, dtype=np.int64)
        if self.edges is None:
            self.edges = _build_edges(self.cells)
        if self.outer_boundary_edges is None:
            self.outer_boundary_edges = np.nonzero(self.edges[:, 3] == NO_CELL)[0]
        if self.h_global == 0.0:
            self.h_global = float(np.max(self.cell_diameters()))

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cells.shape[0]

    @property
    def nodes_per_cell(self) -> int:
        return self.cells.shape[1]

    def cell_areas(self) -> np.ndarray:
        """Signed shoelace areas; positive for CCW cells."""
        x = self.nodes[self.cells, 0]
        y = self.nodes[self.cells, 1]
        xn = np.roll(x, -1, axis=1)
        yn = np.roll(y, -1, axis=1)
        return 0.5 * np.sum(x * yn - xn * y, axis=1)

    def cell_diameters(self) -> np.ndarray:
        pts = self.nodes[self.cells]  # (nc, k, 2)
        k = pts.shape[1]
        d2 = np.zeros(pts.shape[0])
        for i in range(k):
            for j in range(i + 1, k):
                diff = pts[:, i] - pts[:, j]
                d2 = np.maximum(d2, np.einsum("ij,ij->i", diff, diff))
        return np.sqrt(d2)

    def boundary_nodes(self) -> np.ndarray:
        """Unique node indices lying on the outer mesh boundary."""
        be = self.edges[self.outer_boundary_edges]
        return np.unique(be[:, :2].ravel())

    def dump_text(self, stream) -> None:
        """Plain-text node/cell listing for debugging."""
        for i, (x, y) in enumerate(self.nodes):
            stream.write(f"node {i} {x!r} {y!r}\n")
        for i, cell in enumerate(self.cells):
            stream.write("cell " + " ".join(str(v) for v in (i, *cell)) + "\n")


def _build_edges(cells: np.ndarray) -> np.ndarray:
    k = cells.shape[1]
    seen: dict[tuple[int, int], int] = {}
    rows: list[list[int]] = []
    for c in range(cells.shape[0]):
        for e in range(k):
            a = int(cells[c, e])
            b = int(cells[c, (e + 1) % k])
            key = (a, b) if a < b else (b, a)
            idx = seen.get(key)
            if idx is None:
                seen[key] = len(rows)
                rows.append([a, b, c, NO_CELL])
            else:
                if rows[idx][3] != NO_CELL:
                    raise ValueError(f"edge {key} referenced by more than two cells")
                rows[idx][3] = c
    return np.asarray(rows, dtype=np.int64)


def rotate_points(points: np.ndarray, pivot, angle: float) -> np.ndarray:
    """Rigid rotation of (n,2) points about pivot by angle (radians, CCW)."""
    p = np.asarray(pivot, dtype=np.float64)
    c, s = np.cos(angle), np.sin(angle)
    rel = np.asarray(points, dtype=np.float64) - p
    out = np.empty_like(rel)
    out[:, 0] = c * rel[:, 0] - s * rel[:, 1]
    out[:, 1] = s * rel[:, 0] + c * rel[:, 1]
    return out + p


def _square_grid_nodes(x0: float, y0: float, n: int, side: float):
    h = side / n
    xs = x0 + h * np.arange(n + 1)
    ys = y0 + h * np.arange(n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    return np.column_stack([X.ravel(), Y.ravel()])


def _node_id(i: int, j: int, n: int) -> int:
    return j * (n + 1) + i


def build_tri_grid(n: int, pivot=(0.5, 0.5), angle: float = 0.0) -> Mesh:
    """Criss-cross triangulation (2 n^2 triangles), rigidly rotated about pivot.

    At angle 0 the grid covers exactly the unit square.  For a nonzero angle
    the grid is generated on an enlarged square centered at the pivot (side
    2*r_max*(n+2)/n where r_max is the farthest unit-square corner from the
    pivot), so the rotated grid always covers [0,1]^2.
    """
    if n < 2:
        raise ValueError("build_tri_grid requires n >= 2")
    if angle == 0.0:
        x0 = y0 = 0.0
        side = 1.0
    else:
        p = np.asarray(pivot, dtype=np.float64)
        corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=np.float64)
        r_max = float(np.max(np.linalg.norm(corners - p, axis=1)))
        side = 2.0 * r_max * (n + 2) / n
        x0 = p[0] - side / 2.0
        y0 = p[1] - side / 2.0
    nodes = _square_grid_nodes(x0, y0, n, side)
    cells = np.empty((2 * n * n, 3), dtype=np.int64)
    k = 0
    for j in range(n):
        for i in range(n):
            v00 = _node_id(i, j, n)
            v10 = _node_id(i + 1, j, n)
            v11 = _node_id(i + 1, j + 1, n)
            v01 = _node_id(i, j + 1, n)
            if (i + j) % 2 == 0:
                cells[k] = (v00, v10, v11)
                cells[k + 1] = (v00, v11, v01)
            else:
                cells[k] = (v00, v10, v01)
                cells[k + 1] = (v10, v11, v01)
            k += 2
    if angle != 0.0:
        nodes = rotate_points(nodes, pivot, angle)
    return Mesh(nodes=nodes, cells=cells, cell_kind="tri3")


def build_quad_grid(n: int) -> Mesh:
    """n x n axis-aligned squares of side 1/n on the unit square (never rotated)."""
    if n < 2:
        raise ValueError("build_quad_grid requires n >= 2")
    return build_rect_quad_grid((0.0, 0.0), n, n, 1.0 / n)


def build_rect_quad_grid(origin, nx: int, ny: int, spacing: float) -> Mesh:
    """Axis-aligned quad grid of nx x ny square cells of the given spacing."""
    if nx < 1 or ny < 1:
        raise ValueError("grid needs at least one cell per direction")
    if spacing <= 0.0:
        raise ValueError("spacing must be positive")
    x0, y0 = float(origin[0]), float(origin[1])
    xs = x0 + spacing * np.arange(nx + 1)
    ys = y0 + spacing * np.arange(ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])
    cells = np.empty((nx * ny, 4), dtype=np.int64)
    k = 0
    for j in range(ny):
        for i in range(nx):
            v00 = j * (nx + 1) + i
            cells[k] = (v00, v00 + 1, v00 + nx + 2, v00 + nx + 1)
            k += 1
    return Mesh(nodes=nodes, cells=cells, cell_kind="quad4")


def edge_length(mesh: Mesh, edge_index: int) -> float:
    if mesh.edges.shape[0] == 0:
        raise ValueError("mesh has no edges")
    if not 0 <= edge_index < mesh.edges.shape[0]:
        raise IndexError(f"edge index {edge_index} out of range")
    a, b = mesh.edges[edge_index, :2]
    return float(np.linalg.norm(mesh.nodes[b] - mesh.nodes[a]))


def tri_grads_areas(mesh: Mesh):
    """Per-cell P1 shape-function gradients (nc,3,2) and signed areas (nc,)."""
    return _kernels.tri_p1_grads_areas(
        np.ascontiguousarray(mesh.nodes[:, 0]),
        np.ascontiguousarray(mesh.nodes[:, 1]),
        mesh.cells,
    )
