"""Radial Robin-Neumann eigenvalue and torsion problems on annuli.

The eigenproblem is integrated in flux form: with ``w = |psi'|^(p-2) psi' r^(n-1)``,

    psi' = sgn(w) (|w| / r^(n-1))^(1/(p-1)),    w' = -lam psi^(p-1) r^(n-1),

started from the Neumann data ``psi(r1) = 1, w(r1) = 0``.  The Robin residual
at the outer radius is ``w(r2)/r2^(n-1) + beta psi(r2)^(p-1)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import simpson

from . import kernels
from .geometry import AnnulusSpec, unit_ball_volume

DEFAULT_STEPS = 4096


class RadialError(RuntimeError):
    pass


class SignChangeError(RadialError):
    """The shooting profile reached zero: trial eigenvalue is past the first one."""


class IntegrationError(RadialError):
    pass


class SolverFailure(RadialError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class ProblemParams:
    p: float
    n: int = 2
    beta: float = 1.0

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"p must exceed 1 (got {self.p})")
        if self.n < 2:
            raise ValueError(f"dimension must be >= 2 (got {self.n})")
        if self.beta == 0 or not math.isfinite(self.beta):
            raise ValueError("beta must be nonzero and finite")


@dataclass
class RadialProfile:
    """Sampled radial solution; ``flux`` is |psi'|^(p-2) psi' r^(n-1)."""

    params: ProblemParams
    annulus: AnnulusSpec
    grid: np.ndarray
    psi: np.ndarray
    flux: np.ndarray
    lam: float | None = None
    T: float | None = None
    residual: float = 0.0
    steps: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def dpsi(self) -> np.ndarray:
        p, n = self.params.p, self.annulus.n
        rn1 = self.grid ** (n - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            base = np.where(rn1 > 0, np.abs(self.flux) / np.where(rn1 > 0, rn1, 1.0), 0.0)
        return np.sign(self.flux) * base ** (1.0 / (p - 1))

    def scaled(self, c: float) -> "RadialProfile":
        """Profile of c*psi (flux scales by c^(p-1))."""
        p = self.params.p
        return RadialProfile(self.params, self.annulus, self.grid, c * self.psi, c ** (p - 1) * self.flux,
                             self.lam, self.T, self.residual, self.steps, dict(self.meta))

    def lp_normalized(self) -> "RadialProfile":
        """Rescaled so that the integral of psi^p over the annulus is 1."""
        total = radial_integral(self.annulus, self.grid, self.psi ** self.params.p)
        return self.scaled(total ** (-1.0 / self.params.p))

    def metadata(self) -> dict:
        a = self.annulus
        out = {"p": self.params.p, "n": a.n, "beta": self.params.beta, "r1": a.r1, "r2": a.r2,
               "residual": self.residual, "steps": self.steps}
        if self.lam is not None:
            out["lambda"] = self.lam
        if self.T is not None:
            out["T"] = self.T
        out.update(self.meta)
        return out

    def write(self, csv_path: str | Path, json_path: str | Path | None = None) -> None:
        csv_path = Path(csv_path)
        rows = ["r,psi,flux"] + [f"{r:.17g},{s:.17g},{w:.17g}" for r, s, w in zip(self.grid, self.psi, self.flux)]
        csv_path.write_text("\n".join(rows) + "\n")
        json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
        json_path.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")


def read_profile(csv_path: str | Path, json_path: str | Path | None = None) -> RadialProfile:
    csv_path = Path(csv_path)
    json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
    meta = json.loads(json_path.read_text())
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    params = ProblemParams(meta["p"], meta["n"], meta["beta"])
    ann = AnnulusSpec(meta["n"], meta["r1"], meta["r2"])
    extra = {k: v for k, v in meta.items() if k not in {"p", "n", "beta", "r1", "r2", "lambda", "T", "residual", "steps"}}
    return RadialProfile(params, ann, data[:, 0], data[:, 1], data[:, 2], meta.get("lambda"), meta.get("T"),
                         meta.get("residual", 0.0), meta.get("steps", len(data) - 1), extra)


def radial_integral(annulus: AnnulusSpec, grid: np.ndarray, values: np.ndarray) -> float:
    """Integral over the annulus of a radial function sampled on ``grid`` (Simpson)."""
    n = annulus.n
    return n * unit_ball_volume(n) * float(simpson(values * grid ** (n - 1), x=grid))


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------


def _shoot_end(params: ProblemParams, annulus: AnnulusSpec, lam: float, steps: int):
    psi, w, status, _ = kernels.shoot(float(params.p), int(annulus.n), float(lam), float(annulus.r1),
                                      float(annulus.r2), int(steps))
    return psi, w, status


def _residual(params: ProblemParams, annulus: AnnulusSpec, psi: float, w: float) -> float:
    r2 = annulus.r2
    return w / r2 ** (annulus.n - 1) + params.beta * psi ** (params.p - 1)


def shoot(params: ProblemParams, annulus: AnnulusSpec, lam: float, steps: int = DEFAULT_STEPS):
    """Integrate the Neumann initial-value problem for a trial eigenvalue.

    Returns ``(residual, profile)``.  Raises SignChangeError when psi reaches
    zero (the trial value lies beyond the first eigenvalue).
    """
    if lam * params.beta < 0:
        raise ValueError("trial eigenvalue must share the sign of beta")
    grid = np.linspace(annulus.r1, annulus.r2, steps + 1)
    psi = np.empty(steps + 1)
    w = np.empty(steps + 1)
    pe, we, status, last = kernels.shoot(float(params.p), int(annulus.n), float(lam), float(annulus.r1),
                                         float(annulus.r2), int(steps), psi, w)
    if status == kernels.NONPOSITIVE:
        raise SignChangeError(f"psi vanished at r={grid[last]:.6g} for lambda={lam:.6g}")
    if status == kernels.NONFINITE:
        raise IntegrationError(f"non-finite state at r={grid[last]:.6g} for lambda={lam:.6g}")
    res = _residual(params, annulus, pe, we)
    prof = RadialProfile(params, annulus, grid, psi, w, lam=lam, residual=res, steps=steps)
    return res, prof


def _signed_residual(params, annulus, lam, steps) -> float:
    """Residual with the sign-change case mapped to the sign beyond the first root."""
    if lam == 0:
        return params.beta
    psi, w, status = _shoot_end(params, annulus, lam, steps)
    if status == kernels.NONPOSITIVE:
        return -math.copysign(1.0, params.beta)
    if status == kernels.NONFINITE:
        # only reachable for very negative trial values, where psi blows up
        return 1.0
    return _residual(params, annulus, psi, w)


def constant_test_bound(params: ProblemParams, annulus: AnnulusSpec) -> float:
    """Rayleigh quotient of a constant: beta P(B_r2) / |A|."""
    return params.beta * annulus.outer_perimeter / annulus.measure


def first_eigenvalue_radial(params: ProblemParams, annulus: AnnulusSpec, steps: int = DEFAULT_STEPS,
                            rtol: float = 1e-12, scan: int = 64) -> RadialProfile:
    """First Robin-Neumann eigenvalue on the annulus by shooting and bisection."""
    bound = constant_test_bound(params, annulus)

    def f(lam):
        return _signed_residual(params, annulus, lam, steps)

    if params.beta > 0:
        trials = bound * np.logspace(-9, 0, scan)
        lo_mag = 0.0
    else:
        far = 2.0 * bound
        doublings = 0
        while f(far) <= 0:
            far *= 2.0
            doublings += 1
            if doublings > 60:
                raise SolverFailure("no sign change while expanding the lower bracket",
                                    {"bound": bound, "last_trial": far})
        trials = -np.logspace(math.log10(-bound), math.log10(-far), scan)
        lo_mag = bound  # residual is beta-signed on [bound, 0)
    prev_lam, prev_val = lo_mag, f(lo_mag) if lo_mag != 0.0 else params.beta
    root_bracket = None
    for lam in trials:
        val = f(lam)
        if (val > 0) != (prev_val > 0) or val == 0:
            root_bracket = (prev_lam, lam, prev_val)
            break
        prev_lam, prev_val = lam, val
    if root_bracket is None:
        raise SolverFailure("no sign change of the Robin residual in the scanned bracket",
                            {"bound": bound, "trials": [float(trials[0]), float(trials[-1])], "last": prev_val})
    a, b, fa = root_bracket
    for _ in range(200):
        mid = 0.5 * (a + b)
        if abs(b - a) <= rtol * abs(mid):
            break
        fm = f(mid)
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b = mid
    lam = 0.5 * (a + b)
    res, prof = shoot(params, annulus, lam, steps)
    # flat steps are allowed: near r = 0 with p close to 1 the increments underflow
    d = np.diff(prof.psi)
    if np.any(prof.psi <= 0) or (params.beta > 0 and np.any(d > 0)) or (params.beta < 0 and np.any(d < 0)):
        raise SolverFailure("root does not carry a positive monotone profile", {"lambda": lam})
    prof.meta["bracket"] = [min(a, b), max(a, b)]
    return prof


# ---------------------------------------------------------------------------
# torsion
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


def _abs_dpsi_torsion(s: np.ndarray, p: float, n: int, r1: float) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(s > 0, (s**n - r1**n) / (n * np.where(s > 0, s, 1.0) ** (n - 1)), 0.0)
    return np.maximum(F, 0.0) ** (1.0 / (p - 1))


def _interval_integrals(f, edges: np.ndarray, r1: float) -> np.ndarray:
    """Integral of f over each [edges[i], edges[i+1]]; the first cell is graded toward r1."""
    a, b = edges[:-1], edges[1:]
    half = 0.5 * (b - a)
    x = (a + b)[:, None] / 2 + half[:, None] * _GL_X[None, :]
    out = (f(x) * _GL_W[None, :]).sum(axis=1) * half
    # substitution s = a + (b - a) tau^8 smooths the (s - r1)^(1/(p-1)) endpoint behaviour
    tau = 0.5 * (_GL_X + 1.0)
    k = 8
    L = b[0] - a[0]
    s = a[0] + L * tau**k
    out[0] = 0.5 * float(np.sum(_GL_W * f(s) * k * L * tau ** (k - 1)))
    return out


def torsion_radial(params: ProblemParams, annulus: AnnulusSpec, steps: int = DEFAULT_STEPS):
    """Torsion function of the annulus from the exact flux ``w = -(r^n - r1^n)/n``.

    Returns ``(profile, T)`` with ``T = (integral of psi)^(p-1)``.
    """
    if params.beta <= 0:
        raise ValueError("torsional rigidity requires beta > 0")
    p, n, beta = params.p, annulus.n, params.beta
    r1, r2 = annulus.r1, annulus.r2
    grid = np.linspace(r1, r2, steps + 1)
    psi_end = ((r2**n - r1**n) / (beta * n * r2 ** (n - 1))) ** (1.0 / (p - 1))

    def g(s):
        return _abs_dpsi_torsion(s, p, n, r1)

    cell = _interval_integrals(g, grid, r1)
    tail = np.concatenate([np.cumsum(cell[::-1])[::-1], [0.0]])  # integral from grid[i] to r2
    psi = psi_end + tail
    flux = -(grid**n - r1**n) / n

    # integral of psi over A = n w_n [psi(r2)(r2^n - r1^n)/n + int |psi'|^p s^(n-1) ds]
    def h(s):
        return g(s) ** p * s ** (n - 1)

    inner = float(_interval_integrals(h, grid, r1).sum())
    wn = unit_ball_volume(n)
    int_psi = n * wn * (psi_end * (r2**n - r1**n) / n + inner)
    T = int_psi ** (p - 1)
    energy = n * wn * inner + beta * psi_end**p * annulus.outer_perimeter
    direct = radial_integral(annulus, grid, psi)
    prof = RadialProfile(params, annulus, grid, psi, flux, T=T, residual=0.0, steps=steps,
                         meta={"integral_psi": int_psi, "energy": energy,
                               "energy_identity_gap": abs(energy - direct) / direct})
    return prof, T


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------


def radial_terms(params: ProblemParams, annulus: AnnulusSpec, profile: RadialProfile) -> dict:
    """Integrals of |Dpsi|^p, psi^p, psi over the annulus and the Robin boundary term."""
    p = params.p
    grid = profile.grid
    grad_p = np.abs(profile.dpsi) ** p
    psi = profile.psi
    boundary = params.beta * abs(psi[-1]) ** p * annulus.outer_perimeter
    return {
        "grad_p": radial_integral(annulus, grid, grad_p),
        "lp": radial_integral(annulus, grid, np.abs(psi) ** p),
        "l1": radial_integral(annulus, grid, psi),
        "boundary": boundary,
    }


def rayleigh_radial(params: ProblemParams, annulus: AnnulusSpec, profile: RadialProfile, functional: str = "J") -> float:
    """Eigenvalue quotient J_0 (``functional="J"``) or torsion quotient K_0 (``"K"``)."""
    t = radial_terms(params, annulus, profile)
    num = t["grad_p"] + t["boundary"]
    if functional == "J":
        return num / t["lp"]
    if functional == "K":
        return num / abs(t["l1"]) ** params.p
    raise ValueError("functional must be 'J' or 'K'")


def constant_profile(params: ProblemParams, annulus: AnnulusSpec, steps: int = 64) -> RadialProfile:
    grid = np.linspace(annulus.r1, annulus.r2, steps + 1)
    return RadialProfile(params, annulus, grid, np.ones_like(grid), np.zeros_like(grid), steps=steps)


def boundary_derivative(profile: RadialProfile) -> float:
    """Integral of psi^p over the outer sphere for the L^p-normalised profile."""
    q = profile.lp_normalized()
    return abs(q.psi[-1]) ** q.params.p * q.annulus.outer_perimeter
