"""Reference-element machinery: P1/Q1 bases, quadrature, discrete error norms.

All cells produced by the mesh builders are affine images of the reference
cell (triangles, axis-aligned rectangles), so Jacobians are constant per
cell.  Reference measures: triangle 1/2, quad 4 on [-1,1]^2, segment 2 on
[-1,1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .mesh import Mesh
from .surrogate import SurrogateModel

_GAUSS_1D = np.array([-1.0, 1.0]) / np.sqrt(3.0)

_TRI_3PT = (
    np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]]),
    np.array([1 / 6, 1 / 6, 1 / 6]),
)
# degree-3 rule: centroid plus three interior points
_TRI_4PT = (
    np.array([[1 / 3, 1 / 3], [0.2, 0.2], [0.6, 0.2], [0.2, 0.6]]),
    np.array([-27 / 96, 25 / 96, 25 / 96, 25 / 96]),
)


@dataclass
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray


def cell_quadrature(kind: str, order: int) -> QuadratureRule:
    if kind == "tri3":
        if order == 1:
            return QuadratureRule(np.array([[1 / 3, 1 / 3]]), np.array([0.5]))
        if order == 2:
            return QuadratureRule(_TRI_3PT[0].copy(), _TRI_3PT[1].copy())
        if order == 3:
            return QuadratureRule(_TRI_4PT[0].copy(), _TRI_4PT[1].copy())
    elif kind == "quad4":
        if order == 1:
            return QuadratureRule(np.array([[0.0, 0.0]]), np.array([4.0]))
        if order in (2, 3):
            pts = np.array([[x, y] for y in _GAUSS_1D for x in _GAUSS_1D])
            return QuadratureRule(pts, np.ones(4))
    else:
        raise ValueError(f"unknown cell kind {kind!r}")
    raise ValueError(f"unsupported quadrature order {order} for {kind}")


def edge_quadrature(order: int = 2) -> QuadratureRule:
    if order > 3:
        raise ValueError("edge quadrature supports order <= 3")
    return QuadratureRule(_GAUSS_1D.copy(), np.ones(2))


class ElementBasis:
    """P1 or Q1 shape functions on the reference cell."""

    def __init__(self, kind: str):
        if kind not in ("tri3", "quad4"):
            raise ValueError(f"unknown cell kind {kind!r}")
        self.kind = kind
        self.n_nodes = 3 if kind == "tri3" else 4

    def eval(self, ref_points: np.ndarray) -> np.ndarray:
        """Shape values, (npts, k)."""
        p = np.atleast_2d(ref_points)
        if self.kind == "tri3":
            xi, eta = p[:, 0], p[:, 1]
            return np.column_stack([1.0 - xi - eta, xi, eta])
        xi, eta = p[:, 0], p[:, 1]
        return 0.25 * np.column_stack(
            [
                (1 - xi) * (1 - eta),
                (1 + xi) * (1 - eta),
                (1 + xi) * (1 + eta),
                (1 - xi) * (1 + eta),
            ]
        )

    def grad_ref(self, ref_points: np.ndarray) -> np.ndarray:
        """Reference gradients, (npts, k, 2)."""
        p = np.atleast_2d(ref_points)
        n = p.shape[0]
        if self.kind == "tri3":
            g = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
            return np.broadcast_to(g, (n, 3, 2)).copy()
        xi, eta = p[:, 0], p[:, 1]
        g = np.empty((n, 4, 2))
        g[:, 0, 0] = -(1 - eta)
        g[:, 0, 1] = -(1 - xi)
        g[:, 1, 0] = (1 - eta)
        g[:, 1, 1] = -(1 + xi)
        g[:, 2, 0] = (1 + eta)
        g[:, 2, 1] = (1 + xi)
        g[:, 3, 0] = -(1 + eta)
        g[:, 3, 1] = (1 - xi)
        return 0.25 * g


class CellGeometry:
    """Per-cell affine maps: ref -> physical, Jacobians, physical gradients."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.basis = ElementBasis(mesh.cell_kind)
        v = mesh.nodes[mesh.cells]  # (nc, k, 2)
        self.origin = v[:, 0]
        if mesh.cell_kind == "tri3":
            # x = o + A (xi, eta)
            self.A = np.stack([v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]], axis=2)
            self.jac = self.A
        else:
            # x = o + A ((xi+1)/2, (eta+1)/2)
            self.A = np.stack([v[:, 1] - v[:, 0], v[:, 3] - v[:, 0]], axis=2)
            self.jac = 0.5 * self.A
        self.detJ = (
            self.jac[:, 0, 0] * self.jac[:, 1, 1]
            - self.jac[:, 0, 1] * self.jac[:, 1, 0]
        )
        inv = np.empty_like(self.jac)
        inv[:, 0, 0] = self.jac[:, 1, 1]
        inv[:, 0, 1] = -self.jac[:, 0, 1]
        inv[:, 1, 0] = -self.jac[:, 1, 0]
        inv[:, 1, 1] = self.jac[:, 0, 0]
        self.jac_invT = np.transpose(inv / self.detJ[:, None, None], (0, 2, 1))

    def ref_to_phys(self, cells: np.ndarray, ref_points: np.ndarray) -> np.ndarray:
        """(ncells, npts, 2) physical coordinates."""
        t = ref_points if self.mesh.cell_kind == "tri3" else 0.5 * (ref_points + 1.0)
        return self.origin[cells, None, :] + np.einsum(
            "cij,qj->cqi", self.A[cells], t
        )

    def phys_to_ref(self, cell: int, point: np.ndarray) -> np.ndarray:
        rel = np.asarray(point, dtype=np.float64) - self.origin[cell]
        A = self.A[cell]
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        t = np.array(
            [A[1, 1] * rel[0] - A[0, 1] * rel[1], -A[1, 0] * rel[0] + A[0, 0] * rel[1]]
        ) / det
        return t if self.mesh.cell_kind == "tri3" else 2.0 * t - 1.0

    def phys_grads(self, cells: np.ndarray, ref_points: np.ndarray) -> np.ndarray:
        """Physical shape gradients, (ncells, npts, k, 2)."""
        gref = self.basis.grad_ref(ref_points)
        return np.einsum("cij,qkj->cqki", self.jac_invT[cells], gref)

    def phys_grads_at(self, cell: int, point: np.ndarray) -> np.ndarray:
        """Physical gradients of the cell's shape functions at one point, (k,2)."""
        ref = self.phys_to_ref(cell, point)
        return self.phys_grads(np.array([cell]), ref[None, :])[0, 0]

    def basis_at(self, cell: int, point: np.ndarray) -> np.ndarray:
        ref = self.phys_to_ref(cell, point)
        return self.basis.eval(ref[None, :])[0]


def _subdivided_rule(kind: str, levels: int) -> QuadratureRule:
    """Order-2 rule composited over 4**levels uniform subdivisions."""
    base = cell_quadrature(kind, 2)
    if levels == 0:
        return base
    if kind == "tri3":
        tris = [np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])]
        for _ in range(levels):
            nxt = []
            for t in tris:
                a, b, c = t
                ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
                nxt += [
                    np.array([a, ab, ca]),
                    np.array([ab, b, bc]),
                    np.array([ca, bc, c]),
                    np.array([ab, bc, ca]),
                ]
            tris = nxt
        pts, wts = [], []
        scale = 4.0 ** (-levels)
        for t in tris:
            a, b, c = t
            pts.append(a + np.outer(base.points[:, 0], b - a) + np.outer(base.points[:, 1], c - a))
            wts.append(base.weights * scale)
        return QuadratureRule(np.vstack(pts), np.concatenate(wts))
    m = 2**levels
    side = 2.0 / m
    pts, wts = [], []
    for j in range(m):
        for i in range(m):
            cx = -1.0 + (i + 0.5) * side
            cy = -1.0 + (j + 0.5) * side
            pts.append(np.column_stack([cx + base.points[:, 0] * side / 2,
                                        cy + base.points[:, 1] * side / 2]))
            wts.append(base.weights * 4.0 ** (-levels))
    return QuadratureRule(np.vstack(pts), np.concatenate(wts))


def error_norms(mesh: Mesh, surrogate: SurrogateModel, dof_values: np.ndarray,
                exact_fn, exact_grad_fn, subdivision_levels: int = 3):
    """(L2, H1-seminorm) of dof_values - exact over the active cells.

    ``exact_fn(points)`` maps (n,2) to (n,) for scalar fields or (n,2) for
    vector fields; ``exact_grad_fn`` to (n,2) resp. (n,2,2).  Each cell uses
    an order-2 rule composited over 4**subdivision_levels subdivisions so
    oscillatory exact solutions are resolved on coarse grids.
    """
    if exact_fn is None or exact_grad_fn is None:
        raise ValueError("error_norms requires exact function and gradient")
    dof_values = np.asarray(dof_values, dtype=np.float64)
    vector = dof_values.ndim == 2
    geo = CellGeometry(mesh)
    rule = _subdivided_rule(mesh.cell_kind, subdivision_levels)
    cells = surrogate.active_cells
    conn = mesh.cells[cells]

    phi = geo.basis.eval(rule.points)              # (nq, k)
    pgrad = geo.phys_grads(cells, rule.points)     # (nc, nq, k, 2)
    pts = geo.ref_to_phys(cells, rule.points)      # (nc, nq, 2)
    flat = pts.reshape(-1, 2)
    nq = rule.points.shape[0]
    nc = cells.shape[0]

    if vector:
        uh = np.einsum("qk,ckd->cqd", phi, dof_values[conn])
        guh = np.einsum("cqki,ckd->cqdi", pgrad, dof_values[conn])
        ue = np.asarray(exact_fn(flat)).reshape(nc, nq, 2)
        ge = np.asarray(exact_grad_fn(flat)).reshape(nc, nq, 2, 2)
        err2 = np.sum((uh - ue) ** 2, axis=2)
        gerr2 = np.sum((guh - ge) ** 2, axis=(2, 3))
    else:
        uh = np.einsum("qk,ck->cq", phi, dof_values[conn])
        guh = np.einsum("cqki,ck->cqi", pgrad, dof_values[conn])
        ue = np.asarray(exact_fn(flat)).reshape(nc, nq)
        ge = np.asarray(exact_grad_fn(flat)).reshape(nc, nq, 2)
        err2 = (uh - ue) ** 2
        gerr2 = np.sum((guh - ge) ** 2, axis=2)

    wdetj = rule.weights[None, :] * np.abs(geo.detJ[cells])[:, None]
    l2sq, h1sq = _kernels.accumulate_norms(
        np.ascontiguousarray(err2), np.ascontiguousarray(gerr2),
        np.ascontiguousarray(wdetj),
    )
    return float(np.sqrt(l2sq)), float(np.sqrt(h1sq))
