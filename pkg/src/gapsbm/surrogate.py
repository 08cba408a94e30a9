"""Surrogate domain extraction and gap geometry.

Active cells are those whose nodes all lie in the closed computational
domain.  Surrogate edges separate an active cell from an inactive one; each
carries the projections of its endpoints onto the true boundary, the
extension-quad area ratio H_e = |T_ext|/|edge| and the boundary-map length
ratio j_e = |e_ext|/|edge|.  Surrogate nodes carry the lateral-edge data for
the nodal jump/average terms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import DIRICHLET, NEUMANN, ProjectionResult, Shape
from .mesh import NO_CELL, Mesh

log = logging.getLogger(__name__)


@dataclass
class SurrogateEdge:
    edge_index: int
    attached_cell: int
    nodes: tuple[int, int]       # (a1, a2), active cell on the right of a1->a2
    d_endpoints: np.ndarray      # (2,2): distance vectors at a1, a2
    ext_points: np.ndarray       # (2,2): projected endpoints M(a1), M(a2)
    H_e: float
    j_e: float
    bc: str
    n_tilde: np.ndarray          # unit outward normal of the surrogate domain
    n_gamma: np.ndarray          # outward normal of the chord between the
                                 # projected endpoints (the boundary normal the
                                 # discrete forms integrate against)

    @property
    def length(self) -> float:
        return self._length

    _length: float = 0.0


@dataclass
class SurrogateNode:
    node: int
    d_node: np.ndarray              # distance vector at the node
    edges: tuple[int, int]          # surrogate-edge list indices (plus, minus)
    cells: tuple[int, int]          # attached active cells  (plus, minus)
    n_pair: np.ndarray              # fixed unit normal perpendicular to d that
                                    # the plus-side jump pairs with; the minus
                                    # side carries -n_pair


@dataclass
class SurrogateModel:
    mesh: Mesh
    shape: Optional[Shape]
    node_inside: np.ndarray         # bool per mesh node
    active_mask: np.ndarray         # bool per cell
    active_cells: np.ndarray        # indices of active cells
    surrogate_edges: list[SurrogateEdge]
    surrogate_nodes: list[SurrogateNode]
    outer_dirichlet_nodes: np.ndarray
    node_projections: dict[int, ProjectionResult] = field(default_factory=dict)
    degenerate_quads: int = 0
    skipped_nodes: int = 0

    def dump_edges_csv(self, stream) -> None:
        stream.write("edge,node_a,node_b,H_e,j_e,bc\n")
        for e in self.surrogate_edges:
            stream.write(
                f"{e.edge_index},{e.nodes[0]},{e.nodes[1]},{e.H_e!r},{e.j_e!r},{e.bc}\n"
            )


def _shoelace(quad: np.ndarray) -> float:
    x, y = quad[:, 0], quad[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def shift_eval(values, gradients, d):
    """First-order Taylor shift: values + gradients . d.

    ``values`` may be scalars per basis function (k,) with gradients (k,2),
    or vector components; broadcasting follows numpy rules.
    """
    return np.asarray(values, dtype=np.float64) + np.asarray(gradients) @ np.asarray(d)


def node_jump_average(node: SurrogateNode, grad_plus, grad_minus):
    """Directional-gradient jump and gradient average at a surrogate node.

    jump = (g_plus - g_minus) . d, average = (g_plus + g_minus)/2; the jump
    pairs with ``node.n_pair`` in the variational terms, which makes the
    assembled products independent of which side is labeled plus.
    """
    gp = np.asarray(grad_plus, dtype=np.float64)
    gm = np.asarray(grad_minus, dtype=np.float64)
    jump = float((gp - gm) @ node.d_node)
    avg = 0.5 * (gp + gm)
    return jump, avg


def build_surrogate(mesh: Mesh, shape: Optional[Shape]) -> SurrogateModel:
    """Extract active cells, surrogate boundary and gap geometry."""
    if shape is None:
        node_inside = np.ones(mesh.n_nodes, dtype=bool)
    else:
        node_inside = np.asarray(shape.is_inside(mesh.nodes), dtype=bool)
    active_mask = np.all(node_inside[mesh.cells], axis=1)
    if not active_mask.any():
        raise ValueError("no active cells: shape leaves the domain empty")
    active_cells = np.nonzero(active_mask)[0]

    edges = mesh.edges
    left_act = active_mask[edges[:, 2]]
    right_exists = edges[:, 3] != NO_CELL
    right_act = np.zeros(edges.shape[0], dtype=bool)
    right_act[right_exists] = active_mask[edges[right_exists, 3]]
    surr_idx = np.nonzero(right_exists & (left_act ^ right_act))[0]

    proj_cache: dict[int, ProjectionResult] = {}

    def proj(node: int) -> ProjectionResult:
        pr = proj_cache.get(node)
        if pr is None:
            pr = shape.project(mesh.nodes[node])
            proj_cache[node] = pr
        return pr

    surrogate_edges: list[SurrogateEdge] = []
    node_edges: dict[int, list[int]] = {}
    degenerate = 0
    for ei in surr_idx:
        a, b, cl, cr = (int(v) for v in edges[ei])
        if active_mask[cl]:
            # left cell active: flip so the active cell is right of a1->a2
            a1, a2, cell = b, a, cl
        else:
            a1, a2, cell = a, b, cr
        p1, p2 = proj(a1), proj(a2)
        v1, v2 = mesh.nodes[a1], mesh.nodes[a2]
        elen = float(np.linalg.norm(v2 - v1))
        quad = np.array([v1, v2, p2.point, p1.point])
        area = _shoelace(quad)
        if area < 0.0:
            # crossed projections at an extreme concavity; the signed area is
            # what keeps the gap quadrature consistent, so keep it and count
            degenerate += 1
        H_e = area / elen
        chord = p2.point - p1.point
        clen = float(np.linalg.norm(chord))
        j_e = clen / elen
        if clen > 1e-14 * elen:
            n_gamma = np.array([-chord[1], chord[0]]) / clen
        else:
            # both endpoints project to one point (e.g. a convex corner of a
            # hole); the chord has no direction, fall back to the projection
            # normal there.  j_e ~ 0 makes the term vanish anyway.
            n_gamma = p1.normal
        mid = shape.project(0.5 * (v1 + v2))
        t = (v2 - v1) / elen
        se = SurrogateEdge(
            edge_index=int(ei),
            attached_cell=cell,
            nodes=(a1, a2),
            d_endpoints=np.array([p1.distance_vec, p2.distance_vec]),
            ext_points=np.array([p1.point, p2.point]),
            H_e=H_e,
            j_e=j_e,
            bc=mid.bc,
            n_tilde=np.array([-t[1], t[0]]),
            n_gamma=n_gamma,
        )
        se._length = elen
        le = len(surrogate_edges)
        surrogate_edges.append(se)
        node_edges.setdefault(a1, []).append(le)
        node_edges.setdefault(a2, []).append(le)

    node_cells = None  # lazy node -> incident cell list, for pinch nodes

    def fan_groups(node: int, incident: list[int]) -> list[list[int]]:
        """Split incident surrogate edges into chains through this node.

        Two edges belong to the same chain when their attached active cells
        are connected within the fan of active cells around the node.
        """
        nonlocal node_cells
        if node_cells is None:
            node_cells = {}
            for c in range(mesh.n_cells):
                for v in mesh.cells[c]:
                    node_cells.setdefault(int(v), []).append(c)
        fan = [c for c in node_cells.get(node, []) if active_mask[c]]
        parent = {c: c for c in fan}

        def find(c):
            while parent[c] != c:
                parent[c] = parent[parent[c]]
                c = parent[c]
            return c

        by_other: dict[int, list[int]] = {}
        for c in fan:
            cyc = mesh.cells[c]
            k = cyc.size
            pos = int(np.nonzero(cyc == node)[0][0])
            for b in (cyc[(pos - 1) % k], cyc[(pos + 1) % k]):
                by_other.setdefault(int(b), []).append(c)
        for cells in by_other.values():
            if len(cells) == 2:
                ra, rb = find(cells[0]), find(cells[1])
                if ra != rb:
                    parent[ra] = rb
        groups: dict[int, list[int]] = {}
        for le in incident:
            groups.setdefault(find(surrogate_edges[le].attached_cell), []).append(le)
        return list(groups.values())

    d_tol = 1e-12 * mesh.h_global
    surrogate_nodes: list[SurrogateNode] = []
    skipped = 0
    for node, incident in sorted(node_edges.items()):
        d = proj(node).distance_vec
        dn = float(np.linalg.norm(d))
        if dn <= d_tol:
            continue  # zero-length lateral edge
        if len(incident) == 2:
            groups = [incident]
        else:
            log.debug("surrogate node %d has %d incident edges; splitting chains",
                      node, len(incident))
            groups = fan_groups(node, incident)
        for grp in groups:
            # chain orientation (active cell on the right) makes the node the
            # first vertex of exactly one group edge and the last of the other
            out = [le for le in grp if surrogate_edges[le].nodes[0] == node]
            inc = [le for le in grp if surrogate_edges[le].nodes[1] == node]
            if len(out) != 1 or len(inc) != 1:
                log.debug("surrogate node %d: unmatched chain (%d out, %d in)",
                          node, len(out), len(inc))
                skipped += 1
                continue
            plus, minus = out[0], inc[0]
            surrogate_nodes.append(
                SurrogateNode(
                    node=node,
                    d_node=d,
                    edges=(plus, minus),
                    cells=(surrogate_edges[plus].attached_cell,
                           surrogate_edges[minus].attached_cell),
                    n_pair=np.array([-d[1], d[0]]) / dn,
                )
            )

    outer = mesh.edges[mesh.outer_boundary_edges]
    outer = outer[active_mask[outer[:, 2]]]
    outer_nodes = np.unique(outer[:, :2].ravel()) if outer.size else np.empty(0, np.int64)

    return SurrogateModel(
        mesh=mesh,
        shape=shape,
        node_inside=node_inside,
        active_mask=active_mask,
        active_cells=active_cells,
        surrogate_edges=surrogate_edges,
        surrogate_nodes=surrogate_nodes,
        outer_dirichlet_nodes=outer_nodes,
        node_projections=proj_cache,
        degenerate_quads=degenerate,
        skipped_nodes=skipped,
    )
