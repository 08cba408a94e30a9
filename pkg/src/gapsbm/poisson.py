"""Discrete Poisson operator on a surrogate domain with gap corrections.

The bilinear form contains, besides the bulk stiffness over active cells:

* gap stiffness on every surrogate edge, scaled by the extension-quad area
  ratio H_e, with gradients taken from the attached active cell;
* shifted Neumann loads on surrogate Neumann edges, scaled by the boundary
  map ratio j_e, with data evaluated at fresh closest-point projections and
  the shift using endpoint-interpolated distance vectors;
* Nitsche consistency/adjoint terms plus penalty on surrogate Dirichlet
  edges, using the true-boundary normal at the projected point;
* nodal jump/average terms on the lateral gap edges, with the midpoint rule;
* gap contributions of the source term;

with theta = 1, gamma > 0 the symmetric variant, theta = -1, gamma = 0 the
penalty-free antisymmetric one.  Outer-perimeter dofs are eliminated
strongly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._forms import CooAccumulator, DofMap, edge_gauss_points
from .fem import CellGeometry, cell_quadrature
from .geometry import DIRICHLET, NEUMANN
from .linalg import SparseSystem, apply_strong_dirichlet
from .mesh import Mesh
from .surrogate import SurrogateModel


@dataclass
class PoissonProblem:
    f: Callable[[np.ndarray], np.ndarray]            # source, (n,2) -> (n,)
    u_D: Optional[Callable[[float, float], float]] = None
    h_N: Optional[Callable[[float, float, float, float], float]] = None
    theta: float = -1.0
    gamma: float = 0.0
    outer_dirichlet: Optional[Callable[[float, float], float]] = None

    def __post_init__(self):
        if self.theta not in (-1.0, 1.0):
            raise ValueError("theta must be +1 or -1")
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        if self.theta == 1.0 and self.gamma == 0.0:
            raise ValueError("the symmetric variant (theta=1) requires gamma > 0")
        if self.gamma == 0.0 and self.theta != -1.0:
            raise ValueError("gamma=0 is only admissible with theta=-1")


def bulk_stiffness(mesh: Mesh, geo: CellGeometry, cells: np.ndarray) -> np.ndarray:
    """(ncells, k, k) local stiffness matrices over the given cells."""
    order = 1 if mesh.cell_kind == "tri3" else 2
    rule = cell_quadrature(mesh.cell_kind, order)
    g = geo.phys_grads(cells, rule.points)  # (nc, nq, k, 2)
    detj = np.abs(geo.detJ[cells])
    return np.einsum("q,c,cqki,cqli->ckl", rule.weights, detj, g, g, optimize=True)


def _volume_load(mesh, geo, cells, f, dof_of_cell, rhs, n_comp=1):
    rule = cell_quadrature(mesh.cell_kind, 3)
    phi = geo.basis.eval(rule.points)            # (nq, k)
    pts = geo.ref_to_phys(cells, rule.points)    # (nc, nq, 2)
    fv = np.asarray(f(pts.reshape(-1, 2)))
    detj = np.abs(geo.detJ[cells])
    if n_comp == 1:
        fv = fv.reshape(pts.shape[0], pts.shape[1])
        loc = np.einsum("q,c,cq,qk->ck", rule.weights, detj, fv, phi)
        np.add.at(rhs, dof_of_cell, loc)
    else:
        fv = fv.reshape(pts.shape[0], pts.shape[1], n_comp)
        loc = np.einsum("q,c,cqd,qk->ckd", rule.weights, detj, fv, phi)
        np.add.at(rhs, dof_of_cell, loc.reshape(loc.shape[0], -1))


def assemble(mesh: Mesh, surrogate: SurrogateModel,
             problem: PoissonProblem) -> SparseSystem:
    if surrogate.mesh is not mesh:
        raise ValueError("surrogate was built from a different mesh")
    geo = CellGeometry(mesh)
    dofmap = DofMap(mesh, surrogate, n_comp=1)
    diam = mesh.cell_diameters()
    acc = CooAccumulator()
    rhs = np.zeros(dofmap.n_dofs)

    cells = surrogate.active_cells
    cell_dofs = dofmap.node_to_compact[mesh.cells[cells]]
    acc.add_batch(cell_dofs, bulk_stiffness(mesh, geo, cells))
    _volume_load(mesh, geo, cells, problem.f, cell_dofs, rhs)

    theta, gamma = problem.theta, problem.gamma

    for se in surrogate.surrogate_edges:
        cell = se.attached_cell
        dofs = dofmap.node_to_compact[mesh.cells[cell]]
        v1 = mesh.nodes[se.nodes[0]]
        v2 = mesh.nodes[se.nodes[1]]
        t, pts, w = edge_gauss_points(v1, v2)
        h_c = diam[cell]
        k = dofs.size
        A_loc = np.zeros((k, k))
        F_loc = np.zeros(k)
        for q in range(t.size):
            xq = pts[q]
            ref = geo.phys_to_ref(cell, xq)
            phi = geo.basis.eval(ref[None, :])[0]
            g = geo.phys_grads(np.array([cell]), ref[None, :])[0, 0]  # (k,2)
            # gap stiffness and gap source on every surrogate edge
            A_loc += (w * se.H_e) * (g @ g.T)
            F_loc += (w * se.H_e) * float(problem.f(xq[None, :])[0]) * phi
            dq = (1.0 - t[q]) * se.d_endpoints[0] + t[q] * se.d_endpoints[1]
            sphi = phi + g @ dq
            # boundary data: evaluated where the shift lands, i.e. on the
            # chord of the polygonal boundary interpolant, against the chord
            # normal.  Affine solutions then satisfy the discrete system
            # exactly, curved boundaries included.
            bx, by = xq + dq
            if se.bc == NEUMANN:
                if problem.h_N is None:
                    raise ValueError("Neumann surrogate edge but no h_N datum")
                hv = problem.h_N(bx, by, se.n_gamma[0], se.n_gamma[1])
                F_loc += (w * se.j_e * hv) * sphi
            elif se.bc == DIRICHLET:
                if problem.u_D is None:
                    raise ValueError("Dirichlet surrogate edge but no u_D datum")
                n = se.n_gamma
                gn = g @ n
                ud = problem.u_D(bx, by)
                wj = w * se.j_e
                A_loc -= wj * (np.outer(sphi, gn) + theta * np.outer(gn, sphi))
                F_loc -= wj * theta * ud * gn
                if gamma > 0.0:
                    A_loc += (gamma / h_c) * wj * np.outer(sphi, sphi)
                    F_loc += (gamma / h_c) * wj * ud * sphi
            else:
                raise ValueError(f"unknown bc label {se.bc!r}")
        acc.add_dense(dofs, A_loc)
        np.add.at(rhs, dofs, F_loc)

    for sn in surrogate.surrogate_nodes:
        cp, cm = sn.cells
        x0 = mesh.nodes[sn.node]
        d = sn.d_node
        dn = float(np.linalg.norm(d))
        dofs_p = mesh.cells[cp]
        dofs_m = mesh.cells[cm]
        union = np.unique(np.concatenate([dofs_p, dofs_m]))
        gp = geo.phys_grads_at(cp, x0)
        gm = geo.phys_grads_at(cm, x0)
        nu = union.size
        jump = np.zeros(nu)
        avg = np.zeros((nu, 2))
        for loc, node in enumerate(union):
            wp = np.nonzero(dofs_p == node)[0]
            wm = np.nonzero(dofs_m == node)[0]
            g_p = gp[wp[0]] if wp.size else np.zeros(2)
            g_m = gm[wm[0]] if wm.size else np.zeros(2)
            jump[loc] = (g_p - g_m) @ d
            avg[loc] = 0.5 * (g_p + g_m)
        navg = avg @ sn.n_pair
        L = -(dn / 2.0) * (np.outer(jump, navg) + theta * np.outer(navg, jump))
        if gamma > 0.0:
            h_node = 0.5 * (diam[cp] + diam[cm])
            L += (gamma * dn / (4.0 * h_node)) * np.outer(jump, jump)
        acc.add_dense(dofmap.node_to_compact[union], L)

    system = SparseSystem(
        matrix=acc.tocsr(dofmap.n_dofs),
        rhs=rhs,
        n=dofmap.n_dofs,
        dof_nodes=dofmap.dof_nodes,
        n_comp=1,
    ).finalize()

    if surrogate.outer_dirichlet_nodes.size:
        if problem.outer_dirichlet is None:
            raise ValueError("outer perimeter present but no strong Dirichlet datum")
        vals = np.array(
            [problem.outer_dirichlet(x, y)
             for x, y in mesh.nodes[surrogate.outer_dirichlet_nodes]]
        )
        dofs = dofmap.node_dofs(surrogate.outer_dirichlet_nodes)
        apply_strong_dirichlet(system, dofs, vals)
    system._dofmap = dofmap  # kept for solution expansion
    return system


def expand_solution(mesh: Mesh, system: SparseSystem, x: np.ndarray) -> np.ndarray:
    """Per-mesh-node solution values; NaN on nodes outside the active domain."""
    return system._dofmap.expand(x, mesh.n_nodes)
