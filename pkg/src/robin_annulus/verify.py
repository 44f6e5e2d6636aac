"""Web test functions and certificates for the annulus comparison inequalities.

A web function on a domain Omega transplants the radial solution psi of the
matched annulus A_{r1, r2} (same measure, outer circle with the perimeter of
the outer boundary) along the distance d_e to the outer boundary:

    u(x) = psi(max(r1, r2 - d_e(x))).

Its superlevel sets are inner parallel bodies of the outer polygon, so every
quantity entering the comparison argument can be computed exactly from
:mod:`robin_annulus.geometry` and recorded next to the final verdict.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import __version__
from .analytic import first_root_p2
from .fem.mesh import Mesh, generate_mesh
from .fem.solvers import eigen_fem, torsion_fem
from .geometry import (AnnulusSpec, DomainWithHoles, inner_parallel, level_slice, matched_annulus_for)
from .kernels import min_segment_distance
from .radial import (ProblemParams, RadialProfile, SolverFailure, boundary_derivative,
                     first_eigenvalue_radial, rayleigh_radial, torsion_radial)

POSITIVE_BETA = "POSITIVE_BETA"
NEGATIVE_BETA = "NEGATIVE_BETA"
TOL_REL = 1e-3
TOL_ABS = 1e-8

# 7-point degree-5 rule on the reference triangle (barycentric points, weights sum to 1)
_a1, _a2 = (6 - math.sqrt(15)) / 21, (6 + math.sqrt(15)) / 21
_w1, _w2 = (155 - math.sqrt(15)) / 1200, (155 + math.sqrt(15)) / 1200
QUAD7_POINTS = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_a1, _a1, 1 - 2 * _a1], [_a1, 1 - 2 * _a1, _a1], [1 - 2 * _a1, _a1, _a1],
    [_a2, _a2, 1 - 2 * _a2], [_a2, 1 - 2 * _a2, _a2], [1 - 2 * _a2, _a2, _a2],
])
QUAD7_WEIGHTS = np.array([9 / 40, _w1, _w1, _w1, _w2, _w2, _w2])


class VerificationError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# web function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WebFunction:
    domain: DomainWithHoles
    annulus: AnnulusSpec
    profile: RadialProfile
    params: ProblemParams
    mode: str
    branch: str
    _spline: CubicHermiteSpline = field(repr=False, compare=False)

    @property
    def clip_value(self) -> float:
        """Value taken where d_e >= r2 - r1 (the image of the hole boundary)."""
        return float(self.profile.psi[0])

    @property
    def boundary_value(self) -> float:
        """Value on the outer boundary, psi(r2)."""
        return float(self.profile.psi[-1])

    def psi(self, r) -> np.ndarray:
        return self._spline(np.clip(r, self.annulus.r1, self.annulus.r2))

    def dpsi(self, r) -> np.ndarray:
        return self._spline(np.clip(r, self.annulus.r1, self.annulus.r2), 1)

    def psi_inverse(self, t) -> np.ndarray:
        """Radius where psi takes the value t (psi is strictly monotone)."""
        psi, grid = self.profile.psi, self.profile.grid
        if psi[-1] < psi[0]:
            psi, grid = psi[::-1], grid[::-1]
        return np.interp(t, psi, grid)

    def distance(self, x: np.ndarray) -> np.ndarray:
        pts = np.ascontiguousarray(np.atleast_2d(x), dtype=float)
        out = np.empty(len(pts))
        min_segment_distance(pts, np.ascontiguousarray(self.domain.outer.vertices), out)
        return out

    def radius(self, x: np.ndarray) -> np.ndarray:
        return np.maximum(self.annulus.r1, self.annulus.r2 - self.distance(x))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.psi(self.radius(x))

    def gradient_norm(self, x: np.ndarray) -> np.ndarray:
        """|Du| = |psi'(r2 - d_e)| away from the clip region, 0 inside it."""
        r = self.radius(x)
        g = np.abs(self.dpsi(r))
        return np.where(r > self.annulus.r1, g, 0.0)


def build_web(domain: DomainWithHoles, params: ProblemParams, mode: str = "eigen",
              profile: RadialProfile | None = None, annulus: AnnulusSpec | None = None) -> WebFunction:
    """Web function of ``domain`` built from the radial solution on its matched annulus.

    ``profile`` may be supplied to reuse a radial solve (or to pass a constant
    profile); otherwise the eigenfunction (``mode="eigen"``) or torsion
    function (``mode="torsion"``) of the matched annulus is computed.
    """
    if mode not in ("eigen", "torsion"):
        raise ValueError("mode must be 'eigen' or 'torsion'")
    if mode == "torsion" and params.beta <= 0:
        raise ValueError("torsion web functions need beta > 0")
    if params.n != 2:
        raise ValueError("web functions are planar (n = 2)")
    annulus = annulus or matched_annulus_for(domain)
    if profile is None:
        if mode == "eigen":
            profile = first_eigenvalue_radial(params, annulus)
        else:
            profile = torsion_radial(params, annulus)[0]
    spline = CubicHermiteSpline(profile.grid, profile.psi, profile.dpsi)
    branch = POSITIVE_BETA if params.beta > 0 else NEGATIVE_BETA
    return WebFunction(domain, annulus, profile, params, mode, branch, spline)


def _quadrature_points(mesh: Mesh, subdivide: int):
    tri = mesh.nodes[mesh.triangles]
    # split every triangle into 4^subdivide congruent children
    for _ in range(subdivide):
        a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        tri = np.concatenate([np.stack(t, axis=1) for t in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))])
    d1, d2 = tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]
    area = 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    pts = np.einsum("qk,tkm->tqm", QUAD7_POINTS, tri).reshape(-1, 2)
    wts = (area[:, None] * QUAD7_WEIGHTS[None, :]).ravel()
    return pts, wts


def evaluate_functionals(web: WebFunction, mesh: Mesh, subdivide: int = 1) -> dict:
    """Element quadrature of the web function's Rayleigh-type quotients.

    Returns the pieces ``grad_p``, ``lp``, ``l1``, ``boundary`` and the quotients
    ``J0`` and (for beta > 0) ``K0``.
    """
    area = mesh.area()
    if abs(area - web.domain.area) > 1e-8 * web.domain.area:
        raise VerificationError(f"mesh area {area} does not match the domain area {web.domain.area}")
    p, beta = web.params.p, web.params.beta
    pts, wts = _quadrature_points(mesh, subdivide)
    r = web.radius(pts)
    u = web.psi(r)
    g = np.where(r > web.annulus.r1, np.abs(web.dpsi(r)), 0.0)
    grad_p = float(wts @ g**p)
    lp = float(wts @ np.abs(u) ** p)
    l1 = float(wts @ u)
    boundary = abs(web.boundary_value) ** p * web.domain.outer_perimeter
    num = grad_p + beta * boundary
    out = {"grad_p": grad_p, "lp": lp, "l1": l1, "boundary": boundary, "J0": num / lp,
           "quadrature_points": len(wts)}
    if beta > 0:
        out["K0"] = num / l1**p
    return out


def coarea_functionals(web: WebFunction, panels: int = 64, order: int = 8) -> dict:
    """Same quantities as :func:`evaluate_functionals` by integrating over distance slices.

    Uses |D d_e| = 1: int |Du|^p = int_0^{r2-r1} |psi'(r2 - s)|^p L(s) ds with
    L(s) the length of the slice {d_e = s} inside the domain, plus the clip
    region contribution for int u^p and int u.
    """
    a1, r2 = web.annulus.r1, web.annulus.r2
    smax = min(r2 - a1, web.domain.outer.inradius)
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, smax, panels + 1)
    s = (0.5 * (edges[:-1, None] + edges[1:, None]) + 0.5 * np.diff(edges)[:, None] * x).ravel()
    ws = (0.5 * np.diff(edges)[:, None] * w).ravel()
    L = np.array([level_slice(web.domain, si)[0] for si in s])
    p, beta = web.params.p, web.params.beta
    psi, dpsi = web.psi(r2 - s), web.dpsi(r2 - s)
    clip_area = level_slice(web.domain, r2 - a1)[1] if r2 - a1 < web.domain.outer.inradius else 0.0
    grad_p = float(ws @ (np.abs(dpsi) ** p * L))
    lp = float(ws @ (np.abs(psi) ** p * L)) + abs(web.clip_value) ** p * clip_area
    l1 = float(ws @ (psi * L)) + web.clip_value * clip_area
    boundary = abs(web.boundary_value) ** p * web.domain.outer_perimeter
    out = {"grad_p": grad_p, "lp": lp, "l1": l1, "boundary": boundary, "J0": (grad_p + beta * boundary) / lp}
    if beta > 0:
        out["K0"] = (grad_p + beta * boundary) / l1**p
    return out


def level_data(web: WebFunction, levels: int = 64) -> dict:
    """Per-level quantities of the comparison argument on a grid of radii rho in [r1, r2].

    For rho the level t = psi(rho) corresponds to the distance s = r2 - rho;
    ``P_E`` is the perimeter of the inner parallel body at distance s,
    ``live_length`` its boundary length inside the domain, ``P_A = 2 pi rho``,
    ``mu`` the measure of the superlevel set in the domain and ``eta`` the
    corresponding annulus measure pi (rho^2 - r1^2).
    """
    r1, r2 = web.annulus.r1, web.annulus.r2
    rho = np.linspace(r1, r2, levels)
    rows = {k: [] for k in ("rho", "s", "t", "live_length", "P_E", "P_A", "mu", "eta")}
    for r in rho:
        s = r2 - r
        body = inner_parallel(web.domain.outer, s)
        live, mu = level_slice(web.domain, s)
        rows["rho"].append(float(r))
        rows["s"].append(float(s))
        rows["t"].append(float(web.psi(r)))
        rows["live_length"].append(live)
        rows["P_E"].append(body.perimeter if body is not None else 0.0)
        rows["P_A"].append(2 * math.pi * r)
        rows["mu"].append(mu)
        rows["eta"].append(math.pi * (r * r - r1 * r1))
    scale = web.domain.outer_perimeter
    tol = 1e-9 * scale
    live, PE, PA = np.array(rows["live_length"]), np.array(rows["P_E"]), np.array(rows["P_A"])
    mu, eta = np.array(rows["mu"]), np.array(rows["eta"])
    checks = {
        "live_length<=P_E": _margin_entry(float(np.min(PE - live)), tol),
        "P_E<=P_A": _margin_entry(float(np.min(PA - PE)), tol),
        "mu>=eta": _margin_entry(float(np.min(mu - eta)), 1e-9 * web.domain.area),
    }
    return {"levels": rows, "checks": checks}


def _margin_entry(margin: float, tol: float) -> dict:
    return {"margin": margin, "tolerance": tol, "pass": bool(margin >= -tol)}


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class VerificationReport:
    """Inputs, computed values, margins (each with its tolerance) and per-level arrays."""

    kind: str
    inputs: dict
    values: dict
    margins: dict
    levels: dict = field(default_factory=dict)
    complete: bool = True
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.complete and all(m["pass"] for m in self.margins.values())

    def to_dict(self) -> dict:
        return {"tool": "robin-annulus", "version": __version__, "kind": self.kind, "inputs": self.inputs,
                "values": self.values, "margins": self.margins, "passed": self.passed,
                "complete": self.complete, "notes": self.notes, "levels": self.levels}

    def to_json(self) -> str:
        # json uses repr for floats, which round-trips exactly
        return json.dumps(_plain(self.to_dict()), indent=2, sort_keys=True) + "\n"

    def write(self, json_path: str | Path, csv_path: str | Path | None = None) -> None:
        Path(json_path).write_text(self.to_json())
        if csv_path is not None and self.levels:
            Path(csv_path).write_text(levels_csv(self.levels))


def levels_csv(levels: dict) -> str:
    cols = ["t", "P_E", "P_A", "mu", "eta", "rho", "s", "live_length"]
    lines = [",".join(cols)]
    for row in zip(*(levels[c] for c in cols)):
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _domain_inputs(domain: DomainWithHoles, params: ProblemParams, h: float, tol_rel: float, tol_abs: float) -> dict:
    return {"p": params.p, "beta": params.beta, "h": h, "tol_rel": tol_rel, "tol_abs": tol_abs,
            "domain": {"outer": domain.outer.vertices.tolist(), "holes": [hh.tolist() for hh in domain.holes]}}


def _fem_pair(solver, params, domain, h, mesh=None, coarse=True):
    mesh = mesh or generate_mesh(domain, h)
    fine = solver(params, mesh)
    est = None
    if coarse:
        cmesh = generate_mesh(domain, 2 * h, check_size=False)
        c = solver(params, cmesh)
        key = "lam" if "lam" in fine.meta else "T"
        # Richardson estimate of the O(h^2) error of the fine value
        est = abs(fine.meta[key] - c.meta[key]) / 3.0
    return mesh, fine, est


def check_theorem_1(domain: DomainWithHoles, params: ProblemParams, h: float, tol_rel: float = TOL_REL,
                    tol_abs: float = TOL_ABS, mesh: Mesh | None = None, levels: int = 64,
                    subdivide: int = 1) -> VerificationReport:
    """Certificate for lambda(Omega) <= lambda(A) with its intermediate inequalities.

    Chain recorded: lambda_fem(Omega) <= J0[u_web] + tol_chain and
    J0[u_web] <= lambda(A) + tol_rel |lambda(A)| + tol_abs, where tol_chain is
    five times the Richardson error estimate of the FEM eigenvalue.
    """
    annulus = matched_annulus_for(domain)
    inputs = _domain_inputs(domain, params, h, tol_rel, tol_abs)
    prof = first_eigenvalue_radial(params, annulus)
    values = {"annulus": {"r1": annulus.r1, "r2": annulus.r2}, "lambda_A": prof.lam,
              "lambda_A_residual": prof.residual}
    if params.p == 2 and params.beta > 0:
        root = first_root_p2(2, params.beta, annulus, "derived")
        values["lambda_A_bessel"] = root
    web = build_web(domain, params, "eigen", profile=prof, annulus=annulus)
    mesh = mesh or generate_mesh(domain, h)
    fun = evaluate_functionals(web, mesh, subdivide)
    try:
        mesh, fem, est = _fem_pair(eigen_fem, params, domain, h, mesh)
    except SolverFailure as exc:
        values.update({"J0_web": fun["J0"], "web": fun})
        return VerificationReport("theorem_1", inputs, values, {}, complete=False,
                                  notes=[f"FEM failure: {exc}"])
    tol_chain = 5.0 * est
    lam_fem, J0 = fem.lam, fun["J0"]
    values.update({"lambda_fem": lam_fem, "lambda_fem_coarse_estimate": est, "tol_chain": tol_chain,
                   "J0_web": J0, "web": fun, "fem": fem.meta, "clip_value": web.clip_value,
                   "boundary_value": web.boundary_value, "branch": web.branch})
    lam_A = prof.lam
    margins = {
        "lambda_fem<=J0_web": _margin_entry(J0 + tol_chain - lam_fem, 0.0),
        "J0_web<=lambda_A": _margin_entry(lam_A + tol_rel * abs(lam_A) + tol_abs - J0, 0.0),
        "lambda_fem<=lambda_A": _margin_entry(lam_A - lam_fem, tol_chain + tol_rel * abs(lam_A) + tol_abs),
    }
    ld = level_data(web, levels)
    margins.update(ld["checks"])
    values["relative_margin"] = (lam_A - lam_fem) / abs(lam_A)
    return VerificationReport("theorem_1", inputs, values, margins, levels=ld["levels"])


def check_theorem_2(domain: DomainWithHoles, params: ProblemParams, h: float, tol_rel: float = TOL_REL,
                    tol_abs: float = TOL_ABS, mesh: Mesh | None = None, levels: int = 64,
                    subdivide: int = 1) -> VerificationReport:
    """Certificate for T(Omega) >= T(A) (beta > 0).

    Records int_Omega u_web >= int_A v, K0[u_web] <= 1/T(A) and
    K0[u_web] >= 1/T_fem - tol_chain next to the main inequality.
    """
    if params.beta <= 0:
        raise ValueError("the torsion comparison needs beta > 0")
    annulus = matched_annulus_for(domain)
    inputs = _domain_inputs(domain, params, h, tol_rel, tol_abs)
    prof, T_A = torsion_radial(params, annulus)
    web = build_web(domain, params, "torsion", profile=prof, annulus=annulus)
    mesh = mesh or generate_mesh(domain, h)
    fun = evaluate_functionals(web, mesh, subdivide)
    values = {"annulus": {"r1": annulus.r1, "r2": annulus.r2}, "T_A": T_A,
              "int_A_v": prof.meta["integral_psi"], "K0_web": fun["K0"], "int_web": fun["l1"], "web": fun}
    try:
        mesh, fem, est = _fem_pair(torsion_fem, params, domain, h, mesh)
    except SolverFailure as exc:
        return VerificationReport("theorem_2", inputs, values, {}, complete=False, notes=[f"FEM failure: {exc}"])
    T_fem = fem.T
    # error estimate of 1/T from that of T
    tol_chain = 5.0 * est / T_fem**2
    values.update({"T_fem": T_fem, "T_fem_coarse_estimate": est, "tol_chain": tol_chain, "fem": fem.meta})
    quad_tol = 1e-6 * abs(prof.meta["integral_psi"])
    margins = {
        "T_fem>=T_A": _margin_entry(T_fem - (T_A * (1 - tol_rel) - tol_abs), 0.0),
        "int_web>=int_A_v": _margin_entry(fun["l1"] - prof.meta["integral_psi"], quad_tol),
        "K0_web<=1/T_A": _margin_entry(1.0 / T_A - fun["K0"], tol_rel / T_A),
        "K0_web>=1/T_fem": _margin_entry(fun["K0"] - 1.0 / T_fem, tol_chain),
    }
    ld = level_data(web, levels)
    margins.update(ld["checks"])
    values["relative_margin"] = (T_fem - T_A) / T_A
    return VerificationReport("theorem_2", inputs, values, margins, levels=ld["levels"])


# ---------------------------------------------------------------------------
# beta sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepTable:
    mode: str
    betas: np.ndarray
    values: np.ndarray
    derivative: np.ndarray | None
    flags: dict
    inputs: dict

    def to_csv(self) -> str:
        head = "beta,value" + (",boundary_integral" if self.derivative is not None else "")
        lines = [head]
        for i, (b, v) in enumerate(zip(self.betas, self.values)):
            row = f"{b:.17g},{v:.17g}"
            if self.derivative is not None:
                row += f",{self.derivative[i]:.17g}"
            lines.append(row)
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        d = {"tool": "robin-annulus", "version": __version__, "mode": self.mode, "inputs": self.inputs,
             "betas": self.betas, "values": self.values, "flags": self.flags,
             "boundary_integral": self.derivative}
        return json.dumps(_plain(d), indent=2, sort_keys=True) + "\n"


def sweep_flags(betas: np.ndarray, values: np.ndarray, tol_second: float = 1e-8, tol_mono: float = 0.0) -> dict:
    """Monotonicity (non-decreasing) and concavity flags of a sampled function of beta."""
    betas, values = np.asarray(betas, float), np.asarray(values, float)
    flags = {"non_decreasing": True, "concave": True, "max_decrease": 0.0, "max_second_difference": None}
    if len(betas) >= 2:
        dec = -np.diff(values)
        flags["max_decrease"] = float(dec.max())
        flags["non_decreasing"] = bool(dec.max() <= tol_mono)
    if len(betas) >= 3:
        s1 = np.diff(values) / np.diff(betas)
        second = 2 * np.diff(s1) / (betas[2:] - betas[:-2])
        flags["max_second_difference"] = float(second.max())
        flags["concave"] = bool(second.max() <= tol_second)
    flags["tol_second"] = tol_second
    return flags


def beta_sweep(target: DomainWithHoles | AnnulusSpec, p: float, betas, mode: str = "eigen",
               h: float | None = None, mesh: Mesh | None = None, n: int = 2,
               tol_second: float | None = None) -> SweepTable:
    """lambda(beta) (``mode="eigen"``) or 1/T(beta) (``mode="torsion"``) on a sorted beta grid.

    Annuli use the radial backend; domains use FEM on one fixed mesh.  Both
    functions are non-decreasing and concave in beta; violations are flagged.
    """
    betas = np.asarray(betas, dtype=float)
    if np.any(betas == 0):
        raise ValueError("beta = 0 is excluded from sweeps")
    if np.any(np.diff(betas) <= 0):
        raise ValueError("beta grid must be strictly increasing")
    if mode == "torsion" and np.any(betas <= 0):
        raise ValueError("torsion sweeps need beta > 0")
    if betas.min() < 0 < betas.max():
        raise ValueError("beta grid must not cross zero")
    vals, ders = [], []
    radial = isinstance(target, AnnulusSpec)
    if not radial:
        mesh = mesh or generate_mesh(target, h)
    for b in betas:
        prm = ProblemParams(p, n if radial else 2, float(b))
        if mode == "eigen":
            if radial:
                prof = first_eigenvalue_radial(prm, target)
                vals.append(prof.lam)
                ders.append(boundary_derivative(prof))
            else:
                f = eigen_fem(prm, mesh)
                vals.append(f.lam)
                ders.append(f.meta["boundary_integral"])
        elif mode == "torsion":
            if radial:
                vals.append(1.0 / torsion_radial(prm, target)[1])
            else:
                vals.append(1.0 / torsion_fem(prm, mesh).T)
        else:
            raise ValueError("mode must be 'eigen' or 'torsion'")
    tol_second = tol_second if tol_second is not None else (1e-8 if radial else 1e-6)
    flags = sweep_flags(betas, np.array(vals), tol_second)
    inputs = {"p": p, "n": n, "mode": mode, "backend": "radial" if radial else "fem",
              "h": None if radial else mesh.h}
    return SweepTable(mode, betas, np.array(vals), np.array(ders) if ders else None, flags, inputs)


def annulus_rayleigh_check(params: ProblemParams, annulus: AnnulusSpec, profile: RadialProfile) -> float:
    """J0 of a radial profile; equals lambda for the eigen profile."""
    return rayleigh_radial(params, annulus, profile, "J")
