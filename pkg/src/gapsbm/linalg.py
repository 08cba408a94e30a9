"""Sparse system container, direct solve, 2-norm condition number estimate.

Solving uses SuperLU (scipy.sparse.linalg.splu) with its default
fill-reducing column ordering; this handles the nonsymmetric penalty-free
variant.  Condition numbers use dense SVD up to 2000 unknowns, otherwise
power iteration for sigma_max and LU-backed inverse iteration for
sigma_min.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class SingularMatrixError(RuntimeError):
    pass


@dataclass
class SparseSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    n: int
    constrained: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    # provenance of each dof (mesh node index and component), for expansion
    dof_nodes: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    n_comp: int = 1

    def finalize(self) -> "SparseSystem":
        m = self.matrix.tocsr()
        m.sum_duplicates()
        m.sort_indices()
        m.eliminate_zeros()
        self.matrix = m
        return self

    def dump_matrix_text(self, stream) -> None:
        """row col value triples, one per line."""
        coo = self.matrix.tocoo()
        for r, c, v in zip(coo.row, coo.col, coo.data):
            stream.write(f"{r} {c} {v!r}\n")


def solve(system: SparseSystem) -> np.ndarray:
    if system.n < 1:
        raise ValueError("empty system")
    try:
        lu = spla.splu(system.matrix.tocsc())
        x = lu.solve(system.rhs)
    except RuntimeError as exc:
        raise SingularMatrixError(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("non-finite solution: matrix numerically singular")
    return x


def apply_strong_dirichlet(system: SparseSystem, dofs, values) -> SparseSystem:
    """Symmetric elimination: columns moved to the RHS, rows set to identity."""
    dofs = np.asarray(dofs, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    A = system.matrix.tocsr()
    n = system.n
    z = np.zeros(n)
    z[dofs] = values
    rhs = system.rhs - A @ z
    keep = np.ones(n)
    keep[dofs] = 0.0
    D = sp.diags(keep)
    ones_c = np.zeros(n)
    ones_c[dofs] = 1.0
    A = D @ A @ D + sp.diags(ones_c)
    rhs = keep * rhs
    rhs[dofs] = values
    system.matrix = A.tocsr()
    system.rhs = rhs
    system.constrained = np.union1d(system.constrained, dofs)
    return system.finalize()


def _power_sigma_max(A: sp.csr_matrix, tol: float, max_iter: int = 5000) -> float:
    n = A.shape[0]
    v = np.ones(n) + 1e-3 * np.sin(np.arange(n))
    v /= np.linalg.norm(v)
    At = A.T.tocsr()
    prev = 0.0
    s = 0.0
    for _ in range(max_iter):
        w = At @ (A @ v)
        s = np.linalg.norm(w)
        if s == 0.0:
            return 0.0
        v = w / s
        if abs(s - prev) <= 0.5 * tol * s:
            break
        prev = s
    return float(np.sqrt(s))


def _inverse_sigma_min(A: sp.csr_matrix, tol: float, max_iter: int = 5000) -> float:
    n = A.shape[0]
    try:
        lu = spla.splu(A.tocsc())
    except RuntimeError:
        return 0.0
    v = np.ones(n) + 1e-3 * np.cos(np.arange(n))
    v /= np.linalg.norm(v)
    prev = 0.0
    s = 0.0
    for _ in range(max_iter):
        w = lu.solve(lu.solve(v), trans="T")  # (A^T A)^{-1} v
        s = np.linalg.norm(w)
        if not np.isfinite(s) or s == 0.0:
            return 0.0
        v = w / s
        if abs(s - prev) <= 0.5 * tol * s:
            break
        prev = s
    return float(1.0 / np.sqrt(s))


def condition_number(system: SparseSystem, tol: float = 1e-3) -> float:
    n = system.matrix.shape[0]
    if n <= 2000:
        sv = np.linalg.svd(system.matrix.toarray(), compute_uv=False)
        smin = sv[-1]
        return float("inf") if smin == 0.0 else float(sv[0] / smin)
    smax = _power_sigma_max(system.matrix, tol)
    smin = _inverse_sigma_min(system.matrix, tol)
    if smin == 0.0:
        return float("inf")
    return float(smax / smin)
