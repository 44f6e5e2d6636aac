"""Robin-Neumann eigenvalue and torsion solvers on P1 meshes.

p = 2 eigenproblems use shifted inverse power iteration on the generalised
problem ``(K + beta B) u = lam M u``.  For p != 2 the operator is frozen at the
current iterate (coefficients ``(|Du|^2 + eps^2)^((p-2)/2)`` in the stiffness,
``(u^2 + eps^2)^((p-2)/2)`` in the mass and boundary terms), one shifted inverse
iteration step is taken, and the result is blended with the iterate.  The
blend factor starts at ``theta`` and is halved until the Rayleigh quotient does
not increase, which gives monotone energy for both signs of beta.

The reported eigenvalue is always the discrete Rayleigh quotient of the final
iterate, never the eigenvalue of a linearised problem.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import minres, splu

from ..radial import ProblemParams, SolverFailure
from .assembly import Assembler
from .mesh import OUTER, Mesh


@dataclass(frozen=True)
class FemField:
    """Nodal P1 field with the quantities it was computed for."""

    mesh: Mesh
    u: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def lam(self) -> float | None:
        return self.meta.get("lam")

    @property
    def T(self) -> float | None:
        return self.meta.get("T")

    def write(self, csv_path: str | Path, json_path: str | Path | None = None) -> None:
        rows = ["node,x,y,u"]
        rows += [f"{i},{x:.17g},{y:.17g},{v:.17g}" for i, ((x, y), v) in enumerate(zip(self.mesh.nodes, self.u))]
        Path(csv_path).write_text("\n".join(rows) + "\n")
        if json_path is not None:
            Path(json_path).write_text(json.dumps(self.meta, indent=2, sort_keys=True, default=float) + "\n")


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------


@dataclass
class SolveInfo:
    iterations: int
    residual: float
    method: str
    negative_curvature: bool = False


def solve_spd(A, b: np.ndarray, x0: np.ndarray | None = None, rtol: float = 1e-12,
              maxiter: int | None = None, return_info: bool = False):
    """Jacobi-preconditioned conjugate gradients to relative residual ``rtol``.

    If a search direction with non-positive curvature appears the matrix is not
    positive definite; the solve then falls back to MINRES and ``info.method``
    says so.
    """
    A = sp.csr_matrix(A) if sp.issparse(A) else np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = len(b)
    maxiter = maxiter or max(10 * n, 100)
    d = A.diagonal() if sp.issparse(A) else np.diag(A).copy()
    if np.any(d <= 0):
        x = _minres_fallback(A, b, rtol)
        info = SolveInfo(0, _relres(A, x, b), "minres", True)
        return (x, info) if return_info else x
    dinv = 1.0 / d
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        info = SolveInfo(0, 0.0, "pcg")
        return (np.zeros(n), info) if return_info else np.zeros(n)
    z = dinv * r
    pdir = z.copy()
    rz = r @ z
    it = 0
    for it in range(1, maxiter + 1):
        Ap = A @ pdir
        curv = pdir @ Ap
        if curv <= 0:
            x = _minres_fallback(A, b, rtol)
            info = SolveInfo(it, _relres(A, x, b), "minres", True)
            return (x, info) if return_info else x
        alpha = rz / curv
        x += alpha * pdir
        r -= alpha * Ap
        if np.linalg.norm(r) <= rtol * bnorm:
            # recompute the true residual to guard against drift
            r = b - A @ x
            if np.linalg.norm(r) <= rtol * bnorm:
                break
        z = dinv * r
        rz_new = r @ z
        pdir = z + (rz_new / rz) * pdir
        rz = rz_new
    info = SolveInfo(it, _relres(A, x, b), "pcg")
    return (x, info) if return_info else x


def _relres(A, x, b) -> float:
    bn = np.linalg.norm(b)
    return float(np.linalg.norm(b - A @ x) / (bn if bn > 0 else 1.0))


def _minres_fallback(A, b, rtol) -> np.ndarray:
    x, _ = minres(A, b, rtol=rtol, maxiter=20 * len(b))
    return x


def _factor(A: sp.spmatrix):
    return splu(sp.csc_matrix(A))


# ---------------------------------------------------------------------------
# eigenproblem
# ---------------------------------------------------------------------------


def _normalize(asm: Assembler, u: np.ndarray, p: float) -> np.ndarray:
    if u.sum() < 0:
        u = -u
    return u / asm.volume_power(u, p) ** (1.0 / p)


def _inverse_iteration(A, M, u, sigma, tol_lam, tol_u, max_iter):
    lu = _factor(A - sigma * M)
    lam_old = math.inf
    for it in range(1, max_iter + 1):
        v = lu.solve(M @ u)
        v /= math.sqrt(v @ (M @ v))
        if v.sum() < 0:
            v = -v
        lam = (v @ (A @ v)) / (v @ (M @ v))
        change = np.max(np.abs(v - u))
        u = v
        if abs(lam - lam_old) <= tol_lam * (1 + abs(lam)) and change <= tol_u:
            return u, lam, it
        lam_old = lam
    return u, lam, max_iter


def _p2_eigen(asm: Assembler, beta: float, tol_lam: float, tol_u: float, max_iter: int):
    A = asm.stiffness() + beta * asm.boundary_mass()
    M = asm.mass()
    u0 = np.ones(asm.n)
    if beta > 0:
        shifts = [0.0]
    else:
        bound = beta * asm.robin_length / asm.volume
        shifts = [2.0 * bound * 2**k for k in range(8)]
    for sigma in shifts:
        u, lam, it = _inverse_iteration(A, M, u0, sigma, tol_lam, tol_u, max_iter)
        if u.min() > 0:
            return u, {"shift": sigma, "iterations": it}
    raise SolverFailure("inverse iteration did not produce a one-signed eigenvector",
                        {"shifts": shifts, "min_u": float(u.min()), "max_u": float(u.max())})


def eigen_fem(params: ProblemParams, mesh: Mesh, theta: float = 0.5, eps: float | None = None,
              max_iter: int = 500, tol_lam: float = 1e-10, tol_u: float = 1e-8) -> FemField:
    """First Robin(outer)/Neumann(holes) p-Laplacian eigenpair on ``mesh``.

    Parameters
    ----------
    params : ProblemParams
        ``n`` is ignored (the mesh is planar).
    theta : float
        Initial blend factor for p != 2.
    eps : float, optional
        Regularisation of the frozen coefficients; default ``1e-8 * diameter``.

    Returns
    -------
    FemField
        ``u`` normalised to ``int u^p = 1`` and positive; ``meta['lam']`` is the
        discrete Rayleigh quotient of ``u``.
    """
    p, beta = params.p, params.beta
    asm = Assembler(mesh)
    eps = 1e-8 * asm.diameter if eps is None else eps
    u, info = _p2_eigen(asm, beta, tol_lam if p == 2 else 1e-8, tol_u if p == 2 else 1e-6, max_iter)
    u = _normalize(asm, u, p)
    trace = []
    it = info["iterations"]
    converged = True
    if p != 2:
        u, it, trace, converged = _nonlinear_eigen(asm, u, p, beta, theta, eps, max_iter, tol_lam, tol_u)
    lam = asm.rayleigh_J(u, p, beta)
    meta = {
        "mode": "eigen", "p": p, "beta": beta, "lam": lam, "iterations": it, "eps": eps,
        "theta": theta, "converged": converged, "min_u": float(u.min()),
        "boundary_integral": asm.boundary_power(u, p), "nodes": mesh.n_nodes, "h": mesh.h,
        "shift": info.get("shift"),
    }
    if not converged:
        raise SolverFailure(f"nonlinear eigen iteration did not converge in {max_iter} steps",
                            {**meta, "energy_trace": trace[-20:]})
    if not u.min() > 0:
        raise SolverFailure("eigenfunction is not one-signed", meta)
    return FemField(mesh, u, meta)


def _frozen(asm: Assembler, u: np.ndarray, p: float, beta: float, eps: float):
    g = asm.gradients(u)
    a = (g[:, 0] ** 2 + g[:, 1] ** 2 + eps * eps) ** ((p - 2) / 2)
    wq = (asm.values_at_quad(u) ** 2 + eps * eps) ** ((p - 2) / 2)
    wb = (asm.values_at_edge_quad(u) ** 2 + eps * eps) ** ((p - 2) / 2)
    return asm.stiffness(a) + beta * asm.boundary_mass(wb), asm.mass(wq)


def _nonlinear_eigen(asm, u, p, beta, theta, eps, max_iter, tol_lam, tol_u, shift_gap=0.05):
    lam = asm.rayleigh_J(u, p, beta)
    trace = [lam]
    for it in range(1, max_iter + 1):
        A, Mw = _frozen(asm, u, p, beta, eps)
        rhs = Mw @ u
        # shift just below the current quotient; widen the gap until the step is one-signed
        gap = shift_gap * abs(lam)
        for _ in range(30):
            v = _factor(A - (lam - gap) * Mw).solve(rhs)
            if v.sum() < 0:
                v = -v
            if v.min() > 0:
                break
            gap *= 2.0
        v = _normalize(asm, v, p)
        step = theta
        while True:
            cand = _normalize(asm, (1 - step) * u + step * v, p)
            lam_c = asm.rayleigh_J(cand, p, beta)
            if lam_c <= lam + 1e-14 * (1 + abs(lam)) or step < 1e-6:
                break
            step *= 0.5
        change = np.max(np.abs(cand - u))
        dlam = abs(lam_c - lam)
        u, lam = cand, lam_c
        trace.append(lam)
        if dlam <= tol_lam * (1 + abs(lam)) and change <= tol_u:
            return u, it, trace, True
    return u, max_iter, trace, False


# ---------------------------------------------------------------------------
# torsion
# ---------------------------------------------------------------------------


def _torsion_energy(asm, u, p, beta, F):
    return (asm.gradient_energy(u, p) + beta * asm.boundary_power(u, p)) / p - F @ u


def _torsion_gradient_hessian(asm, u, p, beta, eps, F):
    tri, be = asm.mesh.triangles, asm.robin_edges
    g = asm.gradients(u)
    s = g[:, 0] ** 2 + g[:, 1] ** 2 + eps * eps
    a = s ** ((p - 2) / 2)
    K = asm.stiffness(a)
    grad = K @ u
    # Hessian of |g|^p / p is |g|^(p-2) I + (p-2) |g|^(p-4) g g^T
    Gg = np.einsum("tkm,tm->tk", asm.grads, g)
    extra = (p - 2) * s ** ((p - 4) / 2) * asm.area
    H = K + asm._csr(asm._rows, asm._cols, (extra[:, None, None] * Gg[:, :, None] * Gg[:, None, :]).ravel())
    ub = asm.values_at_edge_quad(u)
    wb = (ub**2 + eps * eps) ** ((p - 2) / 2)
    grad += beta * (asm.boundary_mass(wb) @ u)
    H += beta * (p - 1) * asm.boundary_mass(wb)
    return grad - F, H


def torsion_fem(params: ProblemParams, mesh: Mesh, theta: float = 0.5, eps: float | None = None,
                max_iter: int = 500, tol: float = 1e-12) -> FemField:
    """Robin/Neumann p-torsion function: minimiser of (1/p)(|Du|^p + beta|u|^p on the outer edge) - int u.

    The p = 2 case is one linear solve.  Otherwise frozen-coefficient (Kacanov)
    steps with backtracking on the energy bring the iterate close, and Newton
    steps with the same backtracking finish.  ``meta['T']`` is ``(int u)^(p-1)``.
    """
    p, beta = params.p, params.beta
    if beta <= 0:
        raise ValueError("torsion requires beta > 0")
    asm = Assembler(mesh)
    eps = 1e-8 * asm.diameter if eps is None else eps
    F = asm.load()
    A2 = asm.stiffness() + beta * asm.boundary_mass()
    u = _factor(A2).solve(F)
    kacanov = newton = 0
    converged = True
    if p != 2:
        e2 = u @ (A2 @ u)
        u = u * (F @ u / e2) ** (1.0 / (p - 1)) if e2 > 0 else u
        energy = _torsion_energy(asm, u, p, beta, F)
        converged = False
        for kacanov in range(1, 51):
            A, _ = _frozen(asm, u, p, beta, eps)
            v = _factor(A).solve(F)
            step = theta
            while True:
                cand = (1 - step) * u + step * v
                e_c = _torsion_energy(asm, cand, p, beta, F)
                if e_c <= energy or step < 1e-6:
                    break
                step *= 0.5
            rel = abs(e_c - energy) / abs(e_c)
            u, energy = cand, e_c
            if rel < 1e-6:
                break
        for newton in range(1, max_iter + 1):
            grad, H = _torsion_gradient_hessian(asm, u, p, beta, eps, F)
            du = _factor(H).solve(-grad)
            dec = -(grad @ du)
            # the gradient (and the energy identity) scales like sqrt(dec)
            if dec <= tol**2 * abs(energy):
                converged = True
                break
            step = 1.0
            while True:
                cand = u + step * du
                e_c = _torsion_energy(asm, cand, p, beta, F)
                if e_c <= energy - 1e-4 * step * dec or step < 1e-10:
                    break
                step *= 0.5
            if not e_c < energy:
                # the remaining decrease is below the resolution of the energy
                converged = dec <= tol * abs(energy)
                break
            u, energy = cand, e_c
        if not converged:
            raise SolverFailure("torsion Newton iteration did not converge", {"iterations": newton})
    integral = asm.integral(u)
    lhs = asm.gradient_energy(u, p) + beta * asm.boundary_power(u, p)
    meta = {
        "mode": "torsion", "p": p, "beta": beta, "T": integral ** (p - 1), "integral": integral,
        "energy_identity_gap": abs(lhs - integral) / abs(integral), "eps": eps,
        "iterations": {"kacanov": kacanov, "newton": newton},
        "min_u": float(u.min()), "nodes": mesh.n_nodes, "h": mesh.h, "converged": converged,
    }
    if not u.min() > 0:
        raise SolverFailure("torsion function is not positive", meta)
    return FemField(mesh, u, meta)


# ---------------------------------------------------------------------------
# Dirichlet(outer)/Neumann(holes) reference
# ---------------------------------------------------------------------------


def dirichlet_neumann_p2(mesh: Mesh, tol_lam: float = 1e-12, tol_u: float = 1e-10, max_iter: int = 500) -> FemField:
    """First p = 2 eigenpair with u = 0 on the outer boundary and Neumann on holes."""
    asm = Assembler(mesh)
    fixed = mesh.boundary_nodes(OUTER)
    free = np.setdiff1d(np.arange(asm.n), fixed)
    K = asm.stiffness()[free][:, free]
    M = asm.mass()[free][:, free]
    uf, lam, it = _inverse_iteration(K, M, np.ones(len(free)), 0.0, tol_lam, tol_u, max_iter)
    u = np.zeros(asm.n)
    u[free] = uf
    u = _normalize(asm, u, 2.0)
    meta = {"mode": "dirichlet-neumann", "p": 2.0, "lam": asm.rayleigh_J(u, 2.0, 0.0), "iterations": it,
            "nodes": mesh.n_nodes, "h": mesh.h}
    return FemField(mesh, u, meta)
