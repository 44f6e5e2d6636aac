"""Closed-form p = 2 backend on annuli: Bessel eigenvalue condition and torsion profile.

Two variants of each formula are available.

``"transcribed"``
    The determinant condition written with orders n/2-2 and n/2-1, and the
    torsion profile ``r^2/(2Tn) + c1 (1-n)/r^n + c2``.  These are evaluated
    exactly as written.  The eigenvalue condition coincides with the true
    condition only for n = 2 (where J_{-1} = -J_1); the torsion profile does not
    satisfy the boundary conditions.  Both are kept for cross-checking.
``"derived"``
    Conditions re-derived from the radial equation: with nu = n/2 - 1 the
    Neumann solution is ``r^-nu (Y_{nu+1}(k r1) J_nu(k r) - J_{nu+1}(k r1) Y_nu(k r))``.

The shooting solver stays the source of truth; disagreements raise
:class:`CrossCheckAlarm`.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .bessel import besselj, bessely
from .geometry import AnnulusSpec, unit_ball_volume
from .radial import ProblemParams, RadialProfile, first_eigenvalue_radial, torsion_radial

VARIANTS = ("derived", "transcribed")


class CrossCheckAlarm(RuntimeError):
    """Bessel root and shooting eigenvalue disagree beyond tolerance."""

    def __init__(self, message: str, bessel_root: float | None, shooting: float):
        super().__init__(message)
        self.bessel_root = bessel_root
        self.shooting = shooting


def _scale(k: float, n: int, r1: float) -> float:
    # J_{nu+1} Y_nu - J_nu Y_{nu+1} = 2/(pi x), so the derived Neumann solution
    # equals -r1^-nu * 2/(pi k r1) at r1; this is its reciprocal
    nu = n / 2 - 1
    return -0.5 * math.pi * k * r1 ** (nu + 1)


def eigen_condition_p2(lam: float, n: int, beta: float, annulus: AnnulusSpec,
                       variant: str = "transcribed", normalized: bool = True) -> float:
    """Residual of the p = 2 Bessel eigenvalue condition at ``lam``.

    With ``normalized=True`` the residual is divided by the value at r1 of the
    derived Neumann solution, so the derived variant reproduces the shooting
    residual (profile normalised to psi(r1) = 1) and tends to ``beta`` as
    ``lam -> 0+``.  The transcribed variant gets the opposite sign so that the
    two coincide for n = 2.
    """
    if not lam > 0:
        raise ValueError("Bessel branch needs lambda > 0")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    k = math.sqrt(lam)
    r1, r2 = annulus.r1, annulus.r2
    nu = n / 2 - 1
    q = r2 ** (-nu)
    if r1 == 0:
        # regular solution r^-nu J_nu(k r); normalised by its value at the centre
        val = q * (-k * besselj(nu + 1, k * r2) + beta * besselj(nu, k * r2))
        return val * math.gamma(nu + 1) / (0.5 * k) ** nu if normalized else val
    if variant == "transcribed":
        a = nu - 1
        val = (bessely(a, k * r1) * (q * besselj(a, k * r2) * k + beta * q * besselj(nu, k * r2))
               - besselj(a, k * r1) * (q * bessely(a, k * r2) * k + beta * q * bessely(nu, k * r2)))
    else:
        b = nu + 1
        val = (bessely(b, k * r1) * (-k * q * besselj(b, k * r2) + beta * q * besselj(nu, k * r2))
               - besselj(b, k * r1) * (-k * q * bessely(b, k * r2) + beta * q * bessely(nu, k * r2)))
    if not normalized:
        return val
    return val * _scale(k, n, r1) * (-1.0 if variant == "transcribed" else 1.0)


def eigenfunction_p2(lam: float, n: int, annulus: AnnulusSpec, r: np.ndarray) -> np.ndarray:
    """Derived Neumann solution at the given radii, normalised to 1 at r1."""
    k = math.sqrt(lam)
    nu = n / 2 - 1
    r = np.asarray(r, dtype=float)
    if annulus.r1 == 0:
        centre = (0.5 * k) ** nu / math.gamma(nu + 1)
        return np.array([x ** (-nu) * besselj(nu, k * x) / centre if x > 0 else 1.0 for x in r])
    a, b = bessely(nu + 1, k * annulus.r1), besselj(nu + 1, k * annulus.r1)

    def phi(x):
        return x ** (-nu) * (a * besselj(nu, k * x) - b * bessely(nu, k * x))

    return np.array([phi(x) for x in r]) / phi(annulus.r1)


def first_root_p2(n: int, beta: float, annulus: AnnulusSpec, variant: str = "derived",
                  upper: float | None = None, samples: int = 400) -> float | None:
    """Smallest positive root of the condition below ``upper`` (None if there is none)."""
    if beta <= 0:
        raise ValueError("the Bessel branch covers beta > 0 only; use the shooting solver")
    bound = beta * annulus.outer_perimeter / annulus.measure
    upper = upper or 4.0 * bound
    grid = upper * np.linspace(1e-6, 1.0, samples)
    vals = [eigen_condition_p2(x, n, beta, annulus, variant) for x in grid]
    for i in range(samples - 1):
        if vals[i] == 0:
            return float(grid[i])
        if (vals[i] > 0) != (vals[i + 1] > 0):
            return float(brentq(eigen_condition_p2, grid[i], grid[i + 1], args=(n, beta, annulus, variant),
                                xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
    return None


def cross_check_p2(n: int, beta: float, annulus: AnnulusSpec, variant: str = "derived",
                   rtol: float = 1e-6, steps: int = 4096) -> dict:
    """Compare the first Bessel root with the shooting eigenvalue; alarm on mismatch."""
    prof = first_eigenvalue_radial(ProblemParams(2.0, n, beta), annulus, steps=steps)
    root = first_root_p2(n, beta, annulus, variant)
    rel = math.inf if root is None else abs(root - prof.lam) / abs(prof.lam)
    if rel > rtol:
        raise CrossCheckAlarm(
            f"{variant} Bessel condition root {root} disagrees with shooting {prof.lam} (rel {rel:.3g})",
            root, prof.lam)
    return {"shooting": prof.lam, "bessel": root, "rel_diff": rel, "variant": variant}


# ---------------------------------------------------------------------------
# torsion
# ---------------------------------------------------------------------------


def _torsion_closed(n: int, beta: float, r1: float, r2: float, r: np.ndarray) -> np.ndarray:
    """Solution of -Lap v = 1, v'(r1) = 0, v'(r2) + beta v(r2) = 0."""
    psi_end = (r2**n - r1**n) / (beta * n * r2 ** (n - 1))
    if n == 2:
        log_part = np.log(r2 / r)
    else:
        log_part = (r ** (2 - n) - r2 ** (2 - n)) / (n - 2)
    return psi_end + (r2**2 - r**2) / (2 * n) - r1**n / n * log_part


def _torsion_closed_integral(n: int, beta: float, r1: float, r2: float) -> float:
    wn = unit_ball_volume(n)
    psi_end = (r2**n - r1**n) / (beta * n * r2 ** (n - 1))
    # int_A psi = psi(r2)|A| + (n w_n / n) int_{r1}^{r2} |psi'| (s^n - r1^n) ds, |psi'| = (s^n - r1^n)/(n s^(n-1))
    a = r1**n

    def antideriv(s):
        # integral of (s^n - a)^2 / (n^2 s^(n-1))
        t = s ** (n + 2) / (n + 2) - 2 * a * s**2 / 2
        t += a * a * (math.log(s) if n == 2 else s ** (2 - n) / (2 - n))
        return t / n**2

    inner = antideriv(r2) - (antideriv(r1) if r1 > 0 else (0.0 if n > 2 else -math.inf))
    if r1 == 0:
        inner = r2 ** (n + 2) / ((n + 2) * n**2)
    return psi_end * wn * (r2**n - r1**n) + n * wn * inner


def transcribed_torsion_coefficients(n: int, beta: float, annulus: AnnulusSpec, T: float) -> tuple[float, float]:
    r1, r2 = annulus.r1, annulus.r2
    c1 = (1.0 / (beta * T)) * (r2 / n - r1**n / (n * r2 ** (n - 1)) + beta * r2**2 / (2 * n)
                               + (n - 1) * beta / n * (r1 / r2) ** n)
    c2 = -r1**n / (n * T)
    return c1, c2


def torsion_profile_p2(n: int, beta: float, annulus: AnnulusSpec, r: np.ndarray | None = None,
                       variant: str = "derived", steps: int = 4096) -> dict:
    """Closed-form p = 2 torsion profile and both torsional rigidities.

    Returns a dict with the radii, the closed-form values ``v``, the flux
    quadrature values ``psi`` from :func:`torsion_radial`, ``T_closed`` and
    ``T_quadrature``, and the pointwise deviation.
    """
    if beta <= 0:
        raise ValueError("torsion needs beta > 0")
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    prof, T_quad = torsion_radial(ProblemParams(2.0, n, beta), annulus, steps=steps)
    r = prof.grid if r is None else np.asarray(r, dtype=float)
    T_closed = _torsion_closed_integral(n, beta, annulus.r1, annulus.r2)
    if variant == "derived":
        v = _torsion_closed(n, beta, annulus.r1, annulus.r2, r)
    else:
        c1, c2 = transcribed_torsion_coefficients(n, beta, annulus, T_closed)
        v = r**2 / (2 * T_closed * n) + c1 * (1 - n) / r**n + c2
    psi = np.interp(r, prof.grid, prof.psi) if r is not prof.grid else prof.psi
    # the minimiser is only fixed up to a factor; also compare after matching at r1
    scaled = v * (psi[0] / v[0])
    return {"r": r, "v": v, "psi": psi, "T_closed": T_closed, "T_quadrature": T_quad,
            "max_abs_diff": float(np.max(np.abs(v - psi))),
            "max_abs_diff_scaled": float(np.max(np.abs(scaled - psi))),
            "variant": variant, "profile": prof}


def torsion_closed_derivative(n: int, beta: float, annulus: AnnulusSpec, r, variant: str = "derived",
                              T: float | None = None):
    """Radial derivative of the closed-form torsion profile (either variant)."""
    r = np.asarray(r, dtype=float)
    r1 = annulus.r1
    if variant == "derived":
        return -r / n + r1**n / (n * r ** (n - 1))
    T = T if T is not None else _torsion_closed_integral(n, beta, r1, annulus.r2)
    c1, _ = transcribed_torsion_coefficients(n, beta, annulus, T)
    return r / (T * n) + c1 * (1 - n) * (-n) / r ** (n + 1)


def torsion_closed_value(n: int, beta: float, annulus: AnnulusSpec, r, variant: str = "derived",
                         T: float | None = None):
    r = np.asarray(r, dtype=float)
    if variant == "derived":
        return _torsion_closed(n, beta, annulus.r1, annulus.r2, r)
    T = T if T is not None else _torsion_closed_integral(n, beta, annulus.r1, annulus.r2)
    c1, c2 = transcribed_torsion_coefficients(n, beta, annulus, T)
    return r**2 / (2 * T * n) + c1 * (1 - n) / r**n + c2


def radial_profile_from_closed_form(n: int, beta: float, annulus: AnnulusSpec, steps: int = 4096) -> RadialProfile:
    grid = np.linspace(annulus.r1, annulus.r2, steps + 1)
    psi = _torsion_closed(n, beta, annulus.r1, annulus.r2, np.where(grid > 0, grid, 1e-300))
    flux = -(grid**n - annulus.r1**n) / n
    T = _torsion_closed_integral(n, beta, annulus.r1, annulus.r2)
    return RadialProfile(ProblemParams(2.0, n, beta), annulus, grid, psi, flux, T=T, steps=steps)
