"""Gap-corrected assembly for compressible isotropic linear elasticity.

Vector analogue of the Poisson operator with stress
sigma(u) = 2 mu eps(u) + lambda div(u) I.  Term structure mirrors the scalar
case: bulk strain energy, H_e-scaled gap stiffness on surrogate edges,
nodal jump terms pairing gradient jumps with average stresses, Nitsche
traction terms with the chord normal, penalties gamma/(4h) and gamma/h, and
shifted traction loads on Neumann edges.  Dofs are interleaved per node
(ux0, uy0, ux1, ...).
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


def lame_from_E_nu(E: float, nu: float, mode: str = "plane_strain"):
    """Lame parameters (lambda, mu) from Young's modulus and Poisson ratio."""
    if E <= 0.0:
        raise ValueError("Young's modulus must be positive")
    if not -1.0 < nu < 0.5:
        raise ValueError("Poisson ratio must lie in (-1, 0.5)")
    mu = E / (2.0 * (1.0 + nu))
    if mode == "plane_strain":
        lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    elif mode == "plane_stress":
        lam = E * nu / ((1.0 + nu) * (1.0 - nu))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return lam, mu


@dataclass
class ElasticityProblem:
    lam: float
    mu: float
    b: Callable[[np.ndarray], np.ndarray]         # body force, (n,2) -> (n,2)
    u_D: Optional[Callable[[float, float], np.ndarray]] = None
    t_N: Optional[Callable[[float, float, float, float], np.ndarray]] = None
    theta: float = -1.0
    gamma: float = 0.0
    outer_dirichlet: Optional[Callable[[float, float], np.ndarray]] = None

    def __post_init__(self):
        if self.mu <= 0.0:
            raise ValueError("mu must be positive")
        if self.lam < 0.0:
            raise ValueError("lambda must be nonnegative (compressible regime)")
        if self.theta not in (-1.0, 1.0):
            raise ValueError("theta must be +1 or -1")
        if self.theta == 1.0 and self.gamma == 0.0:
            raise ValueError("the symmetric variant (theta=1) requires gamma > 0")
        if self.gamma == 0.0 and self.theta != -1.0:
            raise ValueError("gamma=0 is only admissible with theta=-1")


def _strain_pair(g: np.ndarray, lam: float, mu: float) -> np.ndarray:
    """(2k, 2k) pointwise eps:2mu:eps + lam div*div pairing for grads (k,2).

    Row/col dof (a, i): K[(a,i),(b,j)] =
        mu (delta_ij g_a.g_b + g_a[j] g_b[i]) + lam g_a[i] g_b[j]
    """
    k = g.shape[0]
    gg = g @ g.T  # (k,k)
    K = np.zeros((k, 2, k, 2))
    for i in range(2):
        K[:, i, :, i] += mu * gg
    K += mu * np.einsum("aj,bi->aibj", g, g)
    K += lam * np.einsum("ai,bj->aibj", g, g)
    return K.reshape(2 * k, 2 * k)


def _traction_rows(g: np.ndarray, n: np.ndarray, lam: float, mu: float) -> np.ndarray:
    """(2k, 2) sigma(phi_(a,i)) n for grads (k,2) and unit normal n."""
    k = g.shape[0]
    gn = g @ n  # (k,)
    tau = np.zeros((k, 2, 2))
    for i in range(2):
        tau[:, i, i] += mu * gn
        tau[:, i, :] += mu * n[i] * g
        tau[:, i, :] += lam * np.outer(g[:, i], n)
    return tau.reshape(2 * k, 2)


def bulk_elastic_stiffness(mesh: Mesh, geo: CellGeometry, cells: np.ndarray,
                           lam: float, mu: float) -> np.ndarray:
    order = 1 if mesh.cell_kind == "tri3" else 2
    rule = cell_quadrature(mesh.cell_kind, order)
    g = geo.phys_grads(cells, rule.points)  # (nc, nq, k, 2)
    detj = np.abs(geo.detJ[cells])
    w = rule.weights
    gg = np.einsum("q,c,cqai,cqbi->cab", w, detj, g, g, optimize=True)
    cross = np.einsum("q,c,cqaj,cqbi->caibj", w, detj, g, g, optimize=True)
    div = np.einsum("q,c,cqai,cqbj->caibj", w, detj, g, g, optimize=True)
    nc, k = gg.shape[0], gg.shape[1]
    K = np.zeros((nc, k, 2, k, 2))
    for i in range(2):
        K[:, :, i, :, i] += mu * gg
    K += mu * cross
    K += lam * div
    return K.reshape(nc, 2 * k, 2 * k)


def _interleave_dofs(compact_nodes: np.ndarray) -> np.ndarray:
    """(… , k) compact node ids -> (..., 2k) interleaved dof ids."""
    out = np.empty(compact_nodes.shape[:-1] + (2 * compact_nodes.shape[-1],),
                   dtype=np.int64)
    out[..., 0::2] = 2 * compact_nodes
    out[..., 1::2] = 2 * compact_nodes + 1
    return out


def assemble_elasticity(mesh: Mesh, surrogate: SurrogateModel,
                        problem: ElasticityProblem) -> SparseSystem:
    if surrogate.mesh is not mesh:
        raise ValueError("surrogate was built from a different mesh")
    geo = CellGeometry(mesh)
    dofmap = DofMap(mesh, surrogate, n_comp=2)
    diam = mesh.cell_diameters()
    acc = CooAccumulator()
    rhs = np.zeros(dofmap.n_dofs)
    lam, mu = problem.lam, problem.mu
    theta, gamma = problem.theta, problem.gamma

    cells = surrogate.active_cells
    cell_nodes = dofmap.node_to_compact[mesh.cells[cells]]
    cell_dofs = _interleave_dofs(cell_nodes)
    acc.add_batch(cell_dofs, bulk_elastic_stiffness(mesh, geo, cells, lam, mu))
    _elastic_volume_load(mesh, geo, cells, problem.b, cell_dofs, rhs)

    for se in surrogate.surrogate_edges:
        cell = se.attached_cell
        nodes_c = dofmap.node_to_compact[mesh.cells[cell]]
        dofs = _interleave_dofs(nodes_c)
        v1 = mesh.nodes[se.nodes[0]]
        v2 = mesh.nodes[se.nodes[1]]
        t, pts, w = edge_gauss_points(v1, v2)
        h_c = diam[cell]
        nd = dofs.size
        A_loc = np.zeros((nd, nd))
        F_loc = np.zeros(nd)
        for q in range(t.size):
            xq = pts[q]
            ref = geo.phys_to_ref(cell, xq)
            phi = geo.basis.eval(ref[None, :])[0]
            g = geo.phys_grads(np.array([cell]), ref[None, :])[0, 0]
            A_loc += (w * se.H_e) * _strain_pair(g, lam, mu)
            bval = np.asarray(problem.b(xq[None, :]))[0]
            F_loc += (w * se.H_e) * np.repeat(phi, 2) * np.tile(bval, phi.size)
            dq = (1.0 - t[q]) * se.d_endpoints[0] + t[q] * se.d_endpoints[1]
            sphi = phi + g @ dq
            Sv = np.zeros((nd, 2))
            Sv[0::2, 0] = sphi
            Sv[1::2, 1] = sphi
            bx, by = xq + dq
            if se.bc == NEUMANN:
                if problem.t_N is None:
                    raise ValueError("Neumann surrogate edge but no traction datum")
                tv = np.asarray(problem.t_N(bx, by, se.n_gamma[0], se.n_gamma[1]))
                F_loc += (w * se.j_e) * (Sv @ tv)
            elif se.bc == DIRICHLET:
                if problem.u_D is None:
                    raise ValueError("Dirichlet surrogate edge but no u_D datum")
                tau = _traction_rows(g, se.n_gamma, lam, mu)
                ud = np.asarray(problem.u_D(bx, by))
                wj = w * se.j_e
                A_loc -= wj * (Sv @ tau.T + theta * tau @ Sv.T)
                F_loc -= wj * theta * (tau @ ud)
                if gamma > 0.0:
                    A_loc += (gamma / h_c) * wj * (Sv @ Sv.T)
                    F_loc += (gamma / h_c) * wj * (Sv @ ud)
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
        nu_ = union.size
        jump = np.zeros(nu_)
        gavg = np.zeros((nu_, 2))
        for loc, node in enumerate(union):
            wp = np.nonzero(dofs_p == node)[0]
            wm = np.nonzero(dofs_m == node)[0]
            g_p = gp[wp[0]] if wp.size else np.zeros(2)
            g_m = gm[wm[0]] if wm.size else np.zeros(2)
            jump[loc] = (g_p - g_m) @ d
            gavg[loc] = 0.5 * (g_p + g_m)
        tau_avg = _traction_rows(gavg, sn.n_pair, lam, mu)  # (2nu, 2)
        jumpv = np.repeat(jump, 2)
        comp = np.tile([0, 1], nu_)
        term1 = jumpv[:, None] * tau_avg[:, comp].T   # jump_i * (avg sigma_j n)[c_i]
        term2 = tau_avg[:, comp] * jumpv[None, :]     # (avg sigma_i n)[c_j] * jump_j
        L = -(dn / 2.0) * (term1 + theta * term2)
        if gamma > 0.0:
            h_node = 0.5 * (diam[cp] + diam[cm])
            same = comp[:, None] == comp[None, :]
            L += (gamma * dn / (4.0 * h_node)) * np.outer(jumpv, jumpv) * same
        acc.add_dense(_interleave_dofs(dofmap.node_to_compact[union]), L)

    system = SparseSystem(
        matrix=acc.tocsr(dofmap.n_dofs),
        rhs=rhs,
        n=dofmap.n_dofs,
        dof_nodes=dofmap.dof_nodes,
        n_comp=2,
    ).finalize()

    if surrogate.outer_dirichlet_nodes.size:
        if problem.outer_dirichlet is None:
            raise ValueError("outer perimeter present but no strong Dirichlet datum")
        vals = np.concatenate(
            [np.asarray(problem.outer_dirichlet(x, y))
             for x, y in mesh.nodes[surrogate.outer_dirichlet_nodes]]
        )
        dofs = dofmap.node_dofs(surrogate.outer_dirichlet_nodes)
        apply_strong_dirichlet(system, dofs, vals)
    system._dofmap = dofmap
    return system


def _elastic_volume_load(mesh, geo, cells, b, cell_dofs, rhs):
    rule = cell_quadrature(mesh.cell_kind, 3)
    phi = geo.basis.eval(rule.points)
    pts = geo.ref_to_phys(cells, rule.points)
    bv = np.asarray(b(pts.reshape(-1, 2))).reshape(pts.shape[0], pts.shape[1], 2)
    detj = np.abs(geo.detJ[cells])
    loc = np.einsum("q,c,cqd,qk->ckd", rule.weights, detj, bv, phi)
    np.add.at(rhs, cell_dofs, loc.reshape(loc.shape[0], -1))


def expand_displacement(mesh: Mesh, system: SparseSystem, x: np.ndarray) -> np.ndarray:
    """(n_nodes, 2) displacement; NaN on nodes outside the active domain."""
    return system._dofmap.expand(x, mesh.n_nodes)
