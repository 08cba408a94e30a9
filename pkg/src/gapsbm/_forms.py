"""Shared assembly plumbing: dof compaction and COO accumulation."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh
from .surrogate import SurrogateModel

_EDGE_GAUSS = np.array([-1.0, 1.0]) / np.sqrt(3.0)


class DofMap:
    """Compact dof numbering over active-cell nodes, n_comp dofs per node."""

    def __init__(self, mesh: Mesh, surrogate: SurrogateModel, n_comp: int = 1):
        self.n_comp = n_comp
        self.active_nodes = np.unique(mesh.cells[surrogate.active_cells].ravel())
        self.node_to_compact = np.full(mesh.n_nodes, -1, dtype=np.int64)
        self.node_to_compact[self.active_nodes] = np.arange(self.active_nodes.size)
        self.n_dofs = self.active_nodes.size * n_comp
        # mesh node owning each dof
        self.dof_nodes = np.repeat(self.active_nodes, n_comp)

    def node_dofs(self, nodes) -> np.ndarray:
        """Dofs of the given mesh nodes, components interleaved."""
        c = self.node_to_compact[np.asarray(nodes)]
        if self.n_comp == 1:
            return c
        return (c[:, None] * self.n_comp + np.arange(self.n_comp)).ravel()

    def expand(self, x: np.ndarray, n_nodes: int) -> np.ndarray:
        """Scatter a compact solution to per-mesh-node values (NaN if inactive)."""
        if self.n_comp == 1:
            out = np.full(n_nodes, np.nan)
            out[self.active_nodes] = x
            return out
        out = np.full((n_nodes, self.n_comp), np.nan)
        out[self.active_nodes] = x.reshape(-1, self.n_comp)
        return out


class CooAccumulator:
    def __init__(self):
        self.rows: list[np.ndarray] = []
        self.cols: list[np.ndarray] = []
        self.vals: list[np.ndarray] = []

    def add_dense(self, dofs_r: np.ndarray, local: np.ndarray, dofs_c=None):
        """Scatter a dense local block (len(dofs_r) x len(dofs_c))."""
        if dofs_c is None:
            dofs_c = dofs_r
        r = np.repeat(dofs_r, dofs_c.size)
        c = np.tile(dofs_c, dofs_r.size)
        self.rows.append(r)
        self.cols.append(c)
        self.vals.append(np.asarray(local, dtype=np.float64).ravel())

    def add_batch(self, conn_dofs: np.ndarray, locals_: np.ndarray):
        """Scatter (ncells, k, k) local matrices with (ncells, k) dof rows."""
        nc, k = conn_dofs.shape
        r = np.repeat(conn_dofs, k, axis=1).ravel()
        c = np.tile(conn_dofs, (1, k)).ravel()
        self.rows.append(r)
        self.cols.append(c)
        self.vals.append(locals_.reshape(-1))

    def tocsr(self, n: int):
        import scipy.sparse as sp

        if not self.rows:
            return sp.csr_matrix((n, n))
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        vals = np.concatenate(self.vals)
        return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def edge_gauss_points(v1: np.ndarray, v2: np.ndarray):
    """2-point Gauss positions/params/weight on the segment v1-v2.

    Returns (t values in [0,1], physical points (2,2), weight per point).
    """
    t = 0.5 * (_EDGE_GAUSS + 1.0)
    pts = v1[None, :] + t[:, None] * (v2 - v1)[None, :]
    L = float(np.linalg.norm(v2 - v1))
    return t, pts, 0.5 * L
