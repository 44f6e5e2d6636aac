# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: flux-form RK4 shooting and polygon boundary distance."""

from libc.math cimport pow, sqrt, isfinite

DEF OK = 0
DEF NONPOSITIVE = 1
DEF NONFINITE = 2


cdef inline double spow(double x, double a) noexcept nogil:
    if x > 0.0:
        return pow(x, a)
    elif x < 0.0:
        return -pow(-x, a)
    return 0.0


cdef inline void rhs(double r, double psi, double w, double q, double pm1, double nm1,
                     double lam, double* dpsi, double* dw) noexcept nogil:
    cdef double rn1 = pow(r, nm1)
    if rn1 > 0.0:
        dpsi[0] = spow(w / rn1, q)
    else:
        dpsi[0] = 0.0
    dw[0] = -lam * spow(psi, pm1) * rn1


def shoot(double p, int n, double lam, double r1, double r2, int steps,
          double[::1] psi_out=None, double[::1] w_out=None):
    """Integrate (psi, w) from (1, 0) at r1 to r2 with fixed-step RK4.

    Returns (psi_end, w_end, status, last_step); status 0 ok, 1 psi <= 0, 2 non-finite.
    """
    cdef double h = (r2 - r1) / steps
    cdef double q = 1.0 / (p - 1.0)
    cdef double pm1 = p - 1.0
    cdef double nm1 = n - 1.0
    cdef double psi = 1.0, w = 0.0, r
    cdef double k1p, k1w, k2p, k2w, k3p, k3w, k4p, k4w
    cdef int i, status = OK
    cdef bint store = psi_out is not None
    if store:
        psi_out[0] = psi
        w_out[0] = w
    with nogil:
        for i in range(steps):
            r = r1 + i * h
            rhs(r, psi, w, q, pm1, nm1, lam, &k1p, &k1w)
            rhs(r + 0.5 * h, psi + 0.5 * h * k1p, w + 0.5 * h * k1w, q, pm1, nm1, lam, &k2p, &k2w)
            rhs(r + 0.5 * h, psi + 0.5 * h * k2p, w + 0.5 * h * k2w, q, pm1, nm1, lam, &k3p, &k3w)
            rhs(r + h, psi + h * k3p, w + h * k3w, q, pm1, nm1, lam, &k4p, &k4w)
            psi = psi + h * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
            w = w + h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
            if store:
                psi_out[i + 1] = psi
                w_out[i + 1] = w
            if not (isfinite(psi) and isfinite(w)):
                status = NONFINITE
                break
            if psi <= 0.0:
                status = NONPOSITIVE
                break
    return psi, w, status, i + 1


def min_segment_distance(const double[:, ::1] pts, const double[:, ::1] verts, double[::1] out):
    """out[k] = distance from pts[k] to the closed polygonal chain through verts."""
    cdef Py_ssize_t m = pts.shape[0], k = verts.shape[0]
    cdef Py_ssize_t a, j, jn
    cdef double px, py, ax, ay, dx, dy, L2, t, ex, ey, d2, best
    with nogil:
        for a in range(m):
            px = pts[a, 0]
            py = pts[a, 1]
            best = 1e300
            for j in range(k):
                jn = j + 1 if j + 1 < k else 0
                ax = verts[j, 0]
                ay = verts[j, 1]
                dx = verts[jn, 0] - ax
                dy = verts[jn, 1] - ay
                L2 = dx * dx + dy * dy
                t = ((px - ax) * dx + (py - ay) * dy) / L2 if L2 > 0.0 else 0.0
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                ex = px - ax - t * dx
                ey = py - ay - t * dy
                d2 = ex * ex + ey * ey
                if d2 < best:
                    best = d2
            out[a] = sqrt(best)
