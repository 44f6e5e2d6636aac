"""Pure-Python versions of the compiled kernels (same signatures and results)."""

import math

import numpy as np

OK, NONPOSITIVE, NONFINITE = 0, 1, 2


def _spow(x, a):
    if x > 0.0:
        return x**a
    if x < 0.0:
        return -((-x) ** a)
    return 0.0


def shoot(p, n, lam, r1, r2, steps, psi_out=None, w_out=None):
    h = (r2 - r1) / steps
    q = 1.0 / (p - 1.0)
    pm1 = p - 1.0
    nm1 = n - 1.0

    def rhs(r, psi, w):
        rn1 = r**nm1
        dpsi = _spow(w / rn1, q) if rn1 > 0.0 else 0.0
        return dpsi, -lam * _spow(psi, pm1) * rn1

    psi, w = 1.0, 0.0
    store = psi_out is not None
    if store:
        psi_out[0], w_out[0] = psi, w
    status, i = OK, 0
    for i in range(steps):
        r = r1 + i * h
        k1p, k1w = rhs(r, psi, w)
        k2p, k2w = rhs(r + 0.5 * h, psi + 0.5 * h * k1p, w + 0.5 * h * k1w)
        k3p, k3w = rhs(r + 0.5 * h, psi + 0.5 * h * k2p, w + 0.5 * h * k2w)
        k4p, k4w = rhs(r + h, psi + h * k3p, w + h * k3w)
        psi = psi + h * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
        w = w + h * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
        if store:
            psi_out[i + 1], w_out[i + 1] = psi, w
        if not (math.isfinite(psi) and math.isfinite(w)):
            status = NONFINITE
            break
        if psi <= 0.0:
            status = NONPOSITIVE
            break
    return psi, w, status, i + 1


def min_segment_distance(pts, verts, out):
    a = verts
    d = np.roll(verts, -1, axis=0) - a
    L2 = np.einsum("ij,ij->i", d, d)
    best = np.full(len(pts), np.inf)
    for chunk in range(0, len(pts), 4096):
        P = pts[chunk:chunk + 4096]
        rel = P[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("mkj,kj->mk", rel, d) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
        e = rel - t[..., None] * d[None, :, :]
        best[chunk:chunk + 4096] = np.einsum("mkj,mkj->mk", e, e).min(axis=1)
    out[:] = np.sqrt(best)
