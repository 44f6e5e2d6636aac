"""P1 assembly: element gradients, weighted stiffness/mass/boundary matrices and the discrete functionals.

The gradient energy sum_T |T| |Du_T|^p is exact for P1 fields.  Volume integrals
of nonlinear nodal quantities use the 3-point interior Gauss rule (degree 2) and
boundary integrals on the Robin boundary use 2-point Gauss per edge (degree 3);
the same rules are used for the matrices and for the functionals, so the
discrete Rayleigh quotient of an iterate is the quantity being minimised.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .mesh import OUTER, Mesh

# barycentric coordinates of the 3-point interior rule, equal weights 1/3
TRI_QUAD = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])
_g = 0.5 / np.sqrt(3.0)
# edge parameter of the 2-point Gauss rule, equal weights 1/2
EDGE_QUAD = np.array([[0.5 + _g, 0.5 - _g], [0.5 - _g, 0.5 + _g]])


class Assembler:
    """Precomputed geometry of a mesh and the sparsity patterns used by every solve."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        nodes, tri = mesh.nodes, mesh.triangles
        p = nodes[tri]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        self.area = 0.5 * det
        # gradients of the three hat functions on each triangle
        inv = np.empty((len(tri), 2, 2))
        inv[:, 0, 0], inv[:, 0, 1] = d2[:, 1] / det, -d2[:, 0] / det
        inv[:, 1, 0], inv[:, 1, 1] = -d1[:, 1] / det, d1[:, 0] / det
        ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
        self.grads = np.einsum("kj,tjm->tkm", ref, inv)  # (M, 3, 2)
        self.robin_edges = mesh.edges(OUTER)
        e = nodes[self.robin_edges]
        self.edge_len = np.linalg.norm(e[:, 1] - e[:, 0], axis=1)
        self._rows = np.repeat(tri, 3, axis=1).ravel()
        self._cols = np.tile(tri, (1, 3)).ravel()
        be = self.robin_edges
        self._brows = np.repeat(be, 2, axis=1).ravel()
        self._bcols = np.tile(be, (1, 2)).ravel()
        self.n = mesh.n_nodes
        self._local_stiff = np.einsum("tim,tjm->tij", self.grads, self.grads) * self.area[:, None, None]
        self._mass_quad = np.einsum("qi,qj->qij", TRI_QUAD, TRI_QUAD) / 3.0  # weights included
        self._edge_quad = np.einsum("qi,qj->qij", EDGE_QUAD, EDGE_QUAD) / 2.0
        lo, hi = nodes.min(0), nodes.max(0)
        self.diameter = float(np.hypot(*(hi - lo)))
        self.robin_length = float(self.edge_len.sum())
        self.volume = float(self.area.sum())

    # -- field evaluations ------------------------------------------------

    def gradients(self, u: np.ndarray) -> np.ndarray:
        return np.einsum("tkm,tk->tm", self.grads, u[self.mesh.triangles])

    def values_at_quad(self, u: np.ndarray) -> np.ndarray:
        return u[self.mesh.triangles] @ TRI_QUAD.T  # (M, 3)

    def values_at_edge_quad(self, u: np.ndarray) -> np.ndarray:
        return u[self.robin_edges] @ EDGE_QUAD.T  # (K, 2)

    # -- matrices ---------------------------------------------------------

    def _csr(self, rows, cols, vals) -> sp.csr_matrix:
        return sp.coo_matrix((vals, (rows, cols)), shape=(self.n, self.n)).tocsr()

    def stiffness(self, coef: np.ndarray | float = 1.0) -> sp.csr_matrix:
        """sum_T coef_T |T| Dphi_i . Dphi_j with a per-triangle coefficient."""
        vals = self._local_stiff * np.broadcast_to(np.asarray(coef, float), self.area.shape)[:, None, None]
        return self._csr(self._rows, self._cols, vals.ravel())

    def mass(self, weight: np.ndarray | float = 1.0) -> sp.csr_matrix:
        """int w phi_i phi_j with w given at the interior quadrature points (M, 3)."""
        w = np.broadcast_to(np.asarray(weight, float), (len(self.area), 3))
        vals = np.einsum("tq,qij->tij", w, self._mass_quad) * self.area[:, None, None]
        return self._csr(self._rows, self._cols, vals.ravel())

    def boundary_mass(self, weight: np.ndarray | float = 1.0) -> sp.csr_matrix:
        """int_{Robin boundary} w phi_i phi_j with w at the edge Gauss points (K, 2)."""
        w = np.broadcast_to(np.asarray(weight, float), (len(self.edge_len), 2))
        vals = np.einsum("eq,qij->eij", w, self._edge_quad) * self.edge_len[:, None, None]
        return sp.coo_matrix((vals.ravel(), (self._brows, self._bcols)), shape=(self.n, self.n)).tocsr()

    def load(self) -> np.ndarray:
        """int phi_i (exact)."""
        return np.bincount(self.mesh.triangles.ravel(), np.repeat(self.area / 3.0, 3), minlength=self.n)

    # -- functionals ------------------------------------------------------

    def gradient_energy(self, u: np.ndarray, p: float) -> float:
        g = self.gradients(u)
        return float(np.dot(self.area, np.hypot(g[:, 0], g[:, 1]) ** p))

    def volume_power(self, u: np.ndarray, p: float) -> float:
        return float(np.dot(self.area, (np.abs(self.values_at_quad(u)) ** p).mean(axis=1)))

    def boundary_power(self, u: np.ndarray, p: float) -> float:
        return float(np.dot(self.edge_len, (np.abs(self.values_at_edge_quad(u)) ** p).mean(axis=1)))

    def integral(self, u: np.ndarray) -> float:
        return float(np.dot(self.area, u[self.mesh.triangles].mean(axis=1)))

    def rayleigh_J(self, u: np.ndarray, p: float, beta: float) -> float:
        return (self.gradient_energy(u, p) + beta * self.boundary_power(u, p)) / self.volume_power(u, p)

    def rayleigh_K(self, u: np.ndarray, p: float, beta: float) -> float:
        return (self.gradient_energy(u, p) + beta * self.boundary_power(u, p)) / abs(self.integral(u)) ** p
