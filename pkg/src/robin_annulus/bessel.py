"""Bessel functions J_nu and Y_nu of real order for positive real argument.

Power series below x = 12, Hankel asymptotic expansion above; half-integer
orders use the closed trigonometric forms.  Double precision throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SWITCH = 12.0
SERIES_TERMS = 60
EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class BesselEval:
    nu: float
    x: float
    J: float
    Y: float
    dJ: float
    dY: float

    def wronskian_defect(self) -> float:
        """Relative defect of J Y' - J' Y = 2/(pi x)."""
        w = self.J * self.dY - self.dJ * self.Y
        ref = 2.0 / (math.pi * self.x)
        return abs(w - ref) / ref


def _is_int(nu: float) -> bool:
    return float(nu).is_integer()


def _is_half(nu: float) -> bool:
    return (2.0 * nu).is_integer() and not _is_int(nu)


def _rgamma(z: float) -> float:
    if z <= 0 and _is_int(z):
        return 0.0
    return 1.0 / math.gamma(z)


def _j_series(nu: float, x: float, terms: int = SERIES_TERMS) -> float:
    # sum_k (-1)^k (x/2)^(2k+nu) / (k! Gamma(k+nu+1)); negative integer orders are routed elsewhere
    half = 0.5 * x
    q = -half * half
    term = half**nu * _rgamma(nu + 1)
    total = term
    for k in range(1, terms):
        term *= q / (k * (k + nu))
        total += term
        if term == 0.0:
            break
    return total


def _y_int_series(m: int, x: float, terms: int = SERIES_TERMS) -> float:
    """Y_m for integer m >= 0 by the limiting-form series with digamma terms."""
    half = 0.5 * x
    jm = _j_series(m, x, terms)
    first = 0.0
    for k in range(m):
        first += math.factorial(m - k - 1) / math.factorial(k) * half ** (2 * k - m)
    # digamma(k+1) = -gamma + H_k
    hk, hmk = 0.0, sum(1.0 / j for j in range(1, m + 1))
    q = -half * half
    term = half**m / math.factorial(m)
    second = term * (hk + hmk - 2 * EULER_GAMMA)
    for k in range(1, terms):
        term *= q / (k * (k + m))
        hk += 1.0 / k
        hmk += 1.0 / (k + m)
        second += term * (hk + hmk - 2 * EULER_GAMMA)
        if term == 0.0:
            break
    return (2.0 / math.pi) * math.log(half) * jm - first / math.pi - second / math.pi


def _hankel(nu: float, x: float) -> tuple[float, float]:
    """Large-argument expansion, truncated at the smallest term (at least 10 terms)."""
    mu = 4.0 * nu * nu
    P = Q = 0.0
    a = 1.0
    prev = math.inf
    for k in range(0, 60):
        if k > 0:
            a *= (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = abs(a)
        if k >= 10 and (mag > prev or mag < 1e-17):
            break
        prev = mag if mag > 0 else prev
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            P += sign * a
        else:
            Q += sign * a
        if mag == 0.0:
            break
    chi = x - (0.5 * nu + 0.25) * math.pi
    s = math.sqrt(2.0 / (math.pi * x))
    return s * (P * math.cos(chi) - Q * math.sin(chi)), s * (P * math.sin(chi) + Q * math.cos(chi))


def _half_integer(nu: float, x: float) -> tuple[float, float]:
    """J and Y for nu = m + 1/2 from the sine/cosine closed forms."""
    s = math.sqrt(2.0 / (math.pi * x))
    jp, jm = s * math.sin(x), s * math.cos(x)  # J_{1/2}, J_{-1/2}
    target = nu
    # J_{-(m+1/2)} by downward recurrence (stable, grows like Y)
    def j_negative(order: float) -> float:
        a, b = jp, jm  # J_{1/2}, J_{-1/2}
        cur = -0.5
        while cur > order:
            a, b = b, (2 * cur / x) * b - a
            cur -= 1.0
        return b

    def j_positive(order: float) -> float:
        if order > x and order > 0.5:
            return _j_series(order, x, 120)
        a, b = jm, jp  # J_{-1/2}, J_{1/2}
        cur = 0.5
        while cur < order:
            a, b = b, (2 * cur / x) * b - a
            cur += 1.0
        return b

    J = j_positive(target) if target > 0 else j_negative(target)
    # Y_nu = (-1)^(m+1) J_{-nu} for nu = m + 1/2
    m = int(math.floor(target))
    other = -target
    Jo = j_positive(other) if other > 0 else j_negative(other)
    Y = (-1.0) ** (m + 1) * Jo
    return J, Y


def _jy_nonneg_int(m: int, x: float) -> tuple[float, float]:
    if x <= SWITCH:
        return _j_series(m, x), _y_int_series(m, x)
    if m <= 8:
        return _hankel(m, x)
    return _large_order(float(m), x)


def _large_order(nu: float, x: float) -> tuple[float, float]:
    """Asymptotic values at the fractional base order, then recurrence.

    Y is carried upward (stable); J comes from Miller's downward recurrence
    normalised against the two base-order values.
    """
    frac = nu - math.floor(nu)
    j0, y0 = _hankel(frac, x)
    j1, y1 = _hankel(frac + 1.0, x)
    steps = int(round(nu - frac))
    ya, yb = y0, y1
    cur = frac + 1.0
    for _ in range(steps - 1):
        ya, yb = yb, (2 * cur / x) * yb - ya
        cur += 1.0
    Y = y0 if steps == 0 else yb
    top = steps + int(x) + 40
    hi, lo = 0.0, 1.0
    vals = [0.0] * (top + 2)
    vals[top + 1], vals[top] = hi, lo
    for k in range(top, 0, -1):
        order = frac + k
        vals[k - 1] = (2 * order / x) * vals[k] - vals[k + 1]
        if abs(vals[k - 1]) > 1e250:
            vals = [v * 1e-250 for v in vals]
    scale = (vals[0] * j0 + vals[1] * j1) / (vals[0] ** 2 + vals[1] ** 2)
    return vals[steps] * scale, Y


def _jy(nu: float, x: float) -> tuple[float, float]:
    if x <= 0:
        raise ValueError("Bessel argument must be positive")
    if _is_int(nu):
        m = int(nu)
        if m < 0:
            j, y = _jy_nonneg_int(-m, x)
            sgn = -1.0 if (-m) % 2 else 1.0
            return sgn * j, sgn * y
        return _jy_nonneg_int(m, x)
    if _is_half(nu):
        return _half_integer(nu, x)
    if x > SWITCH:
        if abs(nu) <= 8:
            return _hankel(nu, x)
        if nu > 0:
            return _large_order(nu, x)
    j = _j_series(nu, x)
    jneg = _j_series(-nu, x)
    s = math.sin(nu * math.pi)
    return j, (j * math.cos(nu * math.pi) - jneg) / s


def besselj(nu: float, x: float) -> float:
    return _jy(nu, x)[0]


def bessely(nu: float, x: float) -> float:
    return _jy(nu, x)[1]


def bessel(order: float, x: float) -> BesselEval:
    """J, Y and their derivatives; derivatives from J' = J_{nu-1} - (nu/x) J_nu."""
    if not x > 0:
        raise ValueError("Bessel argument must be positive")
    if abs(order) > 50:
        raise ValueError("order magnitude above 50 is not supported")
    J, Y = _jy(order, x)
    Jm, Ym = _jy(order - 1.0, x)
    return BesselEval(order, x, J, Y, Jm - order / x * J, Ym - order / x * Y)
