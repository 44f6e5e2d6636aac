"""Convex geometry for planar polygons and analytic bodies in any dimension.

Polygons are exact: areas, perimeters, inner parallel bodies (half-plane
intersection of inward-offset edges) and hole clipping are all computed in
closed form.  Balls, annuli and boxes are handled analytically in any
dimension ``n >= 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

TAU_GEOM = 1e-9


class GeometryError(ValueError):
    """Degenerate or otherwise invalid geometric input."""


class InfeasibleError(GeometryError):
    """No annulus exists for the requested (volume, perimeter) pair."""


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


# ---------------------------------------------------------------------------
# polygon primitives
# ---------------------------------------------------------------------------


def signed_area(vertices: np.ndarray) -> float:
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_perimeter(vertices: np.ndarray) -> float:
    return float(np.linalg.norm(np.roll(vertices, -1, axis=0) - vertices, axis=1).sum())


def point_in_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Even-odd rule, vectorised over ``points``; boundary points are unspecified."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    xa, ya = vertices[:, 0], vertices[:, 1]
    xb, yb = np.roll(xa, -1), np.roll(ya, -1)
    for x0, y0, x1, y1 in zip(xa, ya, xb, yb):
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < xint)
    return inside


def segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to the closed segment [a, b]."""
    d = b - a
    L2 = float(d @ d)
    rel = points - a
    t = np.clip(rel @ d / L2, 0.0, 1.0) if L2 > 0 else np.zeros(len(points))
    proj = a + t[:, None] * d
    return np.linalg.norm(points - proj, axis=1)


def boundary_distance(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Minimum point-segment distance to the closed polygonal chain."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.full(len(pts), np.inf)
    nxt = np.roll(vertices, -1, axis=0)
    for a, b in zip(vertices, nxt):
        np.minimum(out, segment_distance(pts, a, b), out=out)
    return out


def _orient(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def _crossings(p1: np.ndarray, p2: np.ndarray, q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Proper crossings between segment p1p2 and each segment of the arrays q1q2."""
    d1, d2 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    d3, d4 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


def is_simple(vertices: np.ndarray) -> bool:
    k = len(vertices)
    nxt = np.roll(vertices, -1, axis=0)
    for i in range(k):
        hits = _crossings(vertices[i], nxt[i], vertices, nxt)
        hits[[i, (i - 1) % k, (i + 1) % k]] = False
        if hits.any():
            return False
    return True


def clip_halfplane(vertices: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Sutherland-Hodgman step: keep the part of the polygon with normal.x <= offset."""
    if len(vertices) == 0:
        return vertices
    vals = vertices @ normal - offset
    if np.all(vals <= 0):
        return vertices
    nxt = np.roll(vertices, -1, axis=0)
    fn = np.roll(vals, -1)
    cross = ((vals < 0) & (fn > 0)) | ((fn < 0) & (vals > 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(cross, vals / (vals - fn), 0.0)
    slots = np.stack([vertices, vertices + s[:, None] * (nxt - vertices)], axis=1)
    mask = np.column_stack([vals <= 0, cross])
    return slots[mask].reshape(-1, 2)


def _dedupe(vertices: np.ndarray, tol: float) -> np.ndarray:
    if len(vertices) == 0:
        return vertices
    keep = [vertices[0]]
    for v in vertices[1:]:
        if np.linalg.norm(v - keep[-1]) > tol:
            keep.append(v)
    if len(keep) > 1 and np.linalg.norm(keep[0] - keep[-1]) <= tol:
        keep.pop()
    return np.array(keep).reshape(-1, 2)


def regular_polygon(k: int, circumradius: float = 1.0, center=(0.0, 0.0), phase: float = 0.0) -> np.ndarray:
    ang = phase + 2 * np.pi * np.arange(k) / k
    return np.column_stack([center[0] + circumradius * np.cos(ang), center[1] + circumradius * np.sin(ang)])


def rectangle(width: float, height: float, center=(0.0, 0.0)) -> np.ndarray:
    cx, cy = center
    w, h = width / 2, height / 2
    return np.array([[cx - w, cy - h], [cx + w, cy - h], [cx + w, cy + h], [cx - w, cy + h]], dtype=float)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex body given by its counterclockwise vertices."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
            raise GeometryError("a convex polygon needs at least 3 planar vertices")
        if not np.all(np.isfinite(v)):
            raise GeometryError("polygon vertices must be finite")
        edges = np.roll(v, -1, axis=0) - v
        lengths = np.linalg.norm(edges, axis=1)
        if np.any(lengths <= TAU_GEOM):
            raise GeometryError("repeated vertex or zero-length edge")
        nxt = np.roll(edges, -1, axis=0)
        cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
        if np.any(cross <= TAU_GEOM * lengths * np.roll(lengths, -1)):
            raise GeometryError("vertices are not a strictly convex counterclockwise traversal")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edges, axis=1)

    @property
    def normals(self) -> np.ndarray:
        """Outward unit normals of the edges."""
        e = self.edges / self.edge_lengths[:, None]
        return np.column_stack([e[:, 1], -e[:, 0]])

    @property
    def offsets(self) -> np.ndarray:
        """Support values c_i with the body equal to {x : n_i.x <= c_i}."""
        return np.einsum("ij,ij->i", self.normals, self.vertices)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def perimeter(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def diameter(self) -> float:
        d = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    @property
    def inradius(self) -> float:
        return self.chebyshev_center()[1]

    def chebyshev_center(self) -> tuple[np.ndarray, float]:
        from scipy.optimize import linprog

        nrm = self.normals
        A = np.column_stack([nrm, np.ones(len(nrm))])
        res = linprog(c=[0, 0, -1], A_ub=A, b_ub=self.offsets, bounds=[(None, None), (None, None), (0, None)], method="highs")
        if not res.success:
            raise GeometryError("inradius computation failed: " + res.message)
        return res.x[:2], float(res.x[2])

    def contains(self, points: np.ndarray, tol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(points)
        return np.all(pts @ self.normals.T - self.offsets <= tol, axis=1)


@dataclass(frozen=True)
class Ball:
    n: int
    radius: float

    def __post_init__(self):
        if self.n < 2 or self.radius <= 0:
            raise GeometryError("ball needs n >= 2 and positive radius")

    @property
    def volume(self) -> float:
        return unit_ball_volume(self.n) * self.radius**self.n

    @property
    def perimeter(self) -> float:
        return self.n * unit_ball_volume(self.n) * self.radius ** (self.n - 1)


@dataclass(frozen=True)
class Box:
    """Axis-parallel box with the given side lengths (dimension = number of sides)."""

    sides: tuple[float, ...]

    def __post_init__(self):
        if len(self.sides) < 2 or min(self.sides) <= 0:
            raise GeometryError("box needs at least two positive sides")

    @property
    def n(self) -> int:
        return len(self.sides)


@dataclass(frozen=True)
class AnnulusSpec:
    n: int
    r1: float
    r2: float

    def __post_init__(self):
        if self.n < 2:
            raise GeometryError("annulus dimension must be >= 2")
        if not (self.r1 >= 0 and self.r2 > self.r1):
            raise GeometryError(f"annulus radii must satisfy r2 > r1 >= 0 (got r1={self.r1}, r2={self.r2})")

    @property
    def measure(self) -> float:
        return unit_ball_volume(self.n) * (self.r2**self.n - self.r1**self.n)

    @property
    def outer_perimeter(self) -> float:
        return self.n * unit_ball_volume(self.n) * self.r2 ** (self.n - 1)

    @property
    def outer_ball(self) -> Ball:
        return Ball(self.n, self.r2)


@dataclass(frozen=True)
class DomainWithHoles:
    """Convex outer polygon with disjoint simple polygonal holes removed."""

    outer: ConvexPolygon
    holes: tuple[np.ndarray, ...] = field(default_factory=tuple)

    def __post_init__(self):
        holes = []
        for h in self.holes:
            h = np.asarray(h, dtype=float)
            if h.ndim != 2 or h.shape[1] != 2 or len(h) < 3:
                raise GeometryError("each hole needs at least 3 planar vertices")
            if abs(signed_area(h)) <= TAU_GEOM:
                raise GeometryError("hole with zero area")
            if not is_simple(h):
                raise GeometryError("hole polygon is not simple")
            if not np.all(self.outer.contains(h, tol=-TAU_GEOM)):
                raise GeometryError("hole is not strictly inside the outer polygon")
            h.setflags(write=False)
            holes.append(h)
        for i in range(len(holes)):
            for j in range(i + 1, len(holes)):
                if _polygon_separation(holes[i], holes[j]) <= TAU_GEOM:
                    raise GeometryError(f"holes {i} and {j} touch or overlap")
        object.__setattr__(self, "holes", tuple(holes))
        if self.area <= 0:
            raise GeometryError("domain has non-positive measure")

    @property
    def area(self) -> float:
        return self.outer.area - sum(abs(signed_area(h)) for h in self.holes)

    @property
    def outer_perimeter(self) -> float:
        return self.outer.perimeter

    def min_separation(self) -> float:
        """Smallest gap between holes, and between holes and the outer boundary."""
        gaps = [np.inf]
        for i, h in enumerate(self.holes):
            gaps.append(float(boundary_distance(h, self.outer.vertices).min()))
            for g in self.holes[i + 1:]:
                gaps.append(_polygon_separation(h, g))
        return float(min(gaps))

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        inside = self.outer.contains(pts)
        for h in self.holes:
            inside &= ~point_in_polygon(pts, h)
        return inside


def _polygon_separation(a: np.ndarray, b: np.ndarray) -> float:
    if point_in_polygon(a[:1], b)[0] or point_in_polygon(b[:1], a)[0]:
        return 0.0
    bn = np.roll(b, -1, axis=0)
    for p, q in zip(a, np.roll(a, -1, axis=0)):
        if _crossings(p, q, b, bn).any():
            return 0.0
    return float(min(boundary_distance(a, b).min(), boundary_distance(b, a).min()))


# ---------------------------------------------------------------------------
# quermassintegrals
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quermass:
    n: int
    W: tuple[float, ...]

    @property
    def volume(self) -> float:
        return self.W[0]

    @property
    def perimeter(self) -> float:
        return self.n * self.W[1]

    def steiner_volume(self, rho: float) -> float:
        return sum(math.comb(self.n, i) * self.W[i] * rho**i for i in range(self.n + 1))

    def steiner_perimeter(self, rho: float) -> float:
        return self.n * sum(math.comb(self.n - 1, i) * self.W[i + 1] * rho**i for i in range(self.n))

    def af_margins(self) -> dict[tuple[int, int], float]:
        """(W_j/w_n)^(1/(n-j)) - (W_i/w_n)^(1/(n-i)) for every 0 <= i < j < n."""
        wn = unit_ball_volume(self.n)
        r = [(self.W[k] / wn) ** (1.0 / (self.n - k)) for k in range(self.n)]
        return {(i, j): r[j] - r[i] for i in range(self.n) for j in range(i + 1, self.n)}

    def af_chain_holds(self, rtol: float = 1e-12) -> bool:
        wn = unit_ball_volume(self.n)
        scale = max((self.W[k] / wn) ** (1.0 / (self.n - k)) for k in range(self.n))
        return all(m >= -rtol * scale for m in self.af_margins().values())

    def is_ball(self, rtol: float = 1e-9) -> bool:
        """All Aleksandrov-Fenchel inequalities tight (characterises balls)."""
        wn = unit_ball_volume(self.n)
        r = [(self.W[k] / wn) ** (1.0 / (self.n - k)) for k in range(self.n)]
        return max(r) - min(r) <= rtol * max(r)


def quermass(body) -> Quermass:
    """Quermassintegrals W_0..W_n of a polygon, ball, box or the outer ball of an annulus."""
    if isinstance(body, ConvexPolygon):
        return Quermass(2, (body.area, body.perimeter / 2.0, math.pi))
    if isinstance(body, AnnulusSpec):
        body = body.outer_ball
    if isinstance(body, Ball):
        wn = unit_ball_volume(body.n)
        return Quermass(body.n, tuple(wn * body.radius ** (body.n - i) for i in range(body.n + 1)))
    if isinstance(body, Box):
        # |box + rho B| = sum_k e_{n-k}(sides) w_k rho^k
        n = body.n
        e = np.poly(-np.asarray(body.sides, dtype=float))  # e[k] = e_k(sides)
        W = tuple(float(e[n - k]) * unit_ball_volume(k) / math.comb(n, k) for k in range(n + 1))
        return Quermass(n, W)
    raise GeometryError(f"unsupported body type {type(body).__name__}")


def outer_parallel(body: ConvexPolygon, rho: float) -> tuple[float, float]:
    """Area and perimeter of body + rho*B_1."""
    if rho < 0:
        raise GeometryError("outer parallel distance must be non-negative")
    A, P = body.area, body.perimeter
    return A + P * rho + math.pi * rho**2, P + 2 * math.pi * rho


def _line_cross(n1, c1, n2, c2) -> np.ndarray:
    det = n1[0] * n2[1] - n1[1] * n2[0]
    # parallel lines give non-finite points; callers treat those as an empty region
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.array([(c1 * n2[1] - c2 * n1[1]) / det, (n1[0] * c2 - n2[0] * c1) / det])


def halfplane_intersection(normals: np.ndarray, offsets: np.ndarray) -> np.ndarray | None:
    """Vertices of {x : n_i.x <= c_i} for lines given in increasing normal angle.

    Deque sweep over angle-sorted lines; returns None when the region is empty
    or degenerate.  Lines are assumed pairwise non-parallel in direction.
    """
    ang = np.arctan2(normals[:, 1], normals[:, 0])
    order = np.argsort(ang, kind="stable")
    N, C = normals[order], offsets[order]
    scale = 1.0 + float(np.abs(C).max())
    eps = 1e-12 * scale

    def outside(k, p):
        return N[k] @ p - C[k] > eps

    dq: list[int] = []
    for k in range(len(N)):
        while len(dq) >= 2 and outside(k, _line_cross(N[dq[-1]], C[dq[-1]], N[dq[-2]], C[dq[-2]])):
            dq.pop()
        while len(dq) >= 2 and outside(k, _line_cross(N[dq[0]], C[dq[0]], N[dq[1]], C[dq[1]])):
            dq.pop(0)
        dq.append(k)
    while len(dq) >= 3 and outside(dq[0], _line_cross(N[dq[-1]], C[dq[-1]], N[dq[-2]], C[dq[-2]])):
        dq.pop()
    while len(dq) >= 3 and outside(dq[-1], _line_cross(N[dq[0]], C[dq[0]], N[dq[1]], C[dq[1]])):
        dq.pop(0)
    if len(dq) < 3:
        return None
    verts = np.array([_line_cross(N[dq[i]], C[dq[i]], N[dq[(i + 1) % len(dq)]], C[dq[(i + 1) % len(dq)]]) for i in range(len(dq))])
    if not np.all(np.isfinite(verts)):
        return None
    # an empty intersection can leave an inconsistent deque; verify feasibility
    if np.any(verts @ N.T - C > 1e-9 * scale):
        return None
    return verts


def inner_parallel(body: ConvexPolygon, t: float) -> ConvexPolygon | None:
    """{x in body : dist(x, boundary) > t}, or None once it is empty."""
    if t < 0:
        raise GeometryError("inner parallel distance must be non-negative")
    if t == 0:
        return body
    v = halfplane_intersection(body.normals, body.offsets - t)
    if v is None:
        return None
    v = _dedupe(v, TAU_GEOM)
    if len(v) < 3 or signed_area(v) <= TAU_GEOM**2:
        return None
    # collapsed edges can leave nearly collinear triples
    while len(v) >= 3:
        e = np.roll(v, -1, axis=0) - v
        L = np.linalg.norm(e, axis=1)
        nxt = np.roll(e, -1, axis=0)
        cross = e[:, 0] * nxt[:, 1] - e[:, 1] * nxt[:, 0]
        bad = np.where(cross <= TAU_GEOM * L * np.roll(L, -1))[0]
        if len(bad) == 0:
            break
        v = np.delete(v, (bad[0] + 1) % len(v), axis=0)
    if len(v) < 3:
        return None
    try:
        return ConvexPolygon(v)
    except GeometryError:
        return None


def distance_to_outer_boundary(domain: DomainWithHoles | ConvexPolygon, x) -> np.ndarray | float:
    """d_e(x): distance from x (inside the outer body) to its boundary."""
    outer = domain.outer if isinstance(domain, DomainWithHoles) else domain
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if not np.all(outer.contains(pts, tol=TAU_GEOM)):
        raise GeometryError("point outside the outer convex body")
    d = boundary_distance(pts, outer.vertices)
    return float(d[0]) if np.ndim(x) == 1 else d


def matched_annulus(volume: float, outer_perimeter: float, n: int = 2) -> AnnulusSpec:
    """Annulus with the given measure whose outer sphere has the given perimeter."""
    if volume <= 0 or outer_perimeter <= 0:
        raise GeometryError("volume and perimeter must be positive")
    wn = unit_ball_volume(n)
    r2 = (outer_perimeter / (n * wn)) ** (1.0 / (n - 1))
    gap = r2**n - volume / wn
    if gap < -1e-12 * r2**n:
        raise InfeasibleError("isoperimetric inequality violated: no annulus has this measure and perimeter")
    r1 = max(gap, 0.0) ** (1.0 / n)
    return AnnulusSpec(n, r1, r2)


def matched_annulus_for(domain: DomainWithHoles) -> AnnulusSpec:
    return matched_annulus(domain.area, domain.outer_perimeter, 2)


# ---------------------------------------------------------------------------
# level slices of the boundary distance
# ---------------------------------------------------------------------------


def _segment_length_inside(a: np.ndarray, b: np.ndarray, poly: np.ndarray) -> float:
    d = b - a
    L = float(np.linalg.norm(d))
    if L == 0:
        return 0.0
    p = poly
    e = np.roll(poly, -1, axis=0) - p
    den = d[0] * e[:, 1] - d[1] * e[:, 0]
    w = p - a
    ok = np.abs(den) > 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / den
        u = (w[:, 0] * d[1] - w[:, 1] * d[0]) / den
    hit = ok & (t > 0) & (t < 1) & (u >= 0) & (u <= 1)
    ts = np.unique(np.concatenate([[0.0, 1.0], t[hit]]))
    mids = a + 0.5 * (ts[:-1] + ts[1:])[:, None] * d
    inside = point_in_polygon(mids, poly)
    return float(np.sum(np.diff(ts)[inside]) * L)


def clip_to_convex(subject: np.ndarray, clip: ConvexPolygon) -> np.ndarray:
    v = np.asarray(subject, dtype=float)
    if signed_area(v) < 0:
        v = v[::-1]
    for nrm, c in zip(clip.normals, clip.offsets):
        v = clip_halfplane(v, nrm, c)
        if len(v) == 0:
            break
    return v


def level_slice(domain: DomainWithHoles, s: float) -> tuple[float, float]:
    """(length of the boundary of the inner parallel body inside the domain, its area outside holes)."""
    if s < 0:
        raise GeometryError("slice distance must be non-negative")
    inner = inner_parallel(domain.outer, s)
    if inner is None:
        return 0.0, 0.0
    area = inner.area
    length = inner.perimeter
    v = inner.vertices
    nxt = np.roll(v, -1, axis=0)
    for h in domain.holes:
        if np.all(inner.contains(h, tol=-TAU_GEOM)):
            area -= abs(signed_area(h))
            continue
        lo, hi = inner.vertices.min(0), inner.vertices.max(0)
        if np.any(h.max(0) < lo) or np.any(h.min(0) > hi):
            continue
        clipped = clip_to_convex(h, inner)
        if len(clipped) >= 3:
            area -= abs(signed_area(clipped))
        for a, b in zip(v, nxt):
            length -= _segment_length_inside(a, b, h)
    return max(length, 0.0), max(area, 0.0)


def w2_lower_bound_check(body, n: int | None = None) -> float:
    """W_2 minus its Aleksandrov-Fenchel lower bound in terms of the perimeter."""
    q = quermass(body)
    n = q.n if n is None else n
    if n != q.n:
        raise GeometryError("dimension mismatch")
    if n == 2:
        return 0.0  # both sides equal pi for every planar convex body
    wn = unit_ball_volume(n)
    bound = n ** (-(n - 2) / (n - 1)) * wn ** (1.0 / (n - 1)) * q.perimeter ** ((n - 2) / (n - 1))
    return q.W[2] - bound


# ---------------------------------------------------------------------------
# domain file format
# ---------------------------------------------------------------------------


class DomainParseError(GeometryError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_domain(text: str) -> DomainWithHoles:
    lines = text.splitlines()
    outer = None
    holes = []
    i = 0

    def read_block(start: int, count: int) -> np.ndarray:
        pts = []
        for j in range(start, start + count):
            if j >= len(lines):
                raise DomainParseError("unexpected end of file inside vertex block", j + 1)
            parts = lines[j].split()
            if len(parts) != 2:
                raise DomainParseError(f"expected 'x y', got {lines[j]!r}", j + 1)
            try:
                pts.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise DomainParseError(f"non-numeric coordinate in {lines[j]!r}", j + 1) from None
        return np.array(pts)

    while i < len(lines):
        raw = lines[i].split("#", 1)[0].strip()
        if not raw:
            i += 1
            continue
        parts = raw.split()
        if len(parts) != 2 or parts[0] not in ("polygon", "hole"):
            raise DomainParseError(f"expected 'polygon <k>' or 'hole <k>', got {raw!r}", i + 1)
        try:
            k = int(parts[1])
        except ValueError:
            raise DomainParseError(f"bad vertex count {parts[1]!r}", i + 1) from None
        if k < 3:
            raise DomainParseError("a polygon needs at least 3 vertices", i + 1)
        pts = read_block(i + 1, k)
        if parts[0] == "polygon":
            if outer is not None:
                raise DomainParseError("second 'polygon' block", i + 1)
            outer = pts
        else:
            if outer is None:
                raise DomainParseError("'hole' before 'polygon'", i + 1)
            holes.append(pts)
        i += k + 1
    if outer is None:
        raise DomainParseError("no 'polygon' block found")
    if signed_area(outer) < 0:
        outer = outer[::-1]
    return DomainWithHoles(ConvexPolygon(outer), tuple(holes))


def format_domain(domain: DomainWithHoles) -> str:
    out = [f"polygon {len(domain.outer.vertices)}"]
    out += [f"{x:.17g} {y:.17g}" for x, y in domain.outer.vertices]
    for h in domain.holes:
        out.append(f"hole {len(h)}")
        out += [f"{x:.17g} {y:.17g}" for x, y in h]
    return "\n".join(out) + "\n"


def read_domain(path: str | Path) -> DomainWithHoles:
    return parse_domain(Path(path).read_text())


def write_domain(domain: DomainWithHoles, path: str | Path) -> None:
    Path(path).write_text(format_domain(domain))


def annulus_domain(r1: float, r2: float, segments: int, hole_segments: int | None = None) -> DomainWithHoles:
    """Polygonal annulus: regular k-gons inscribed in the two circles."""
    outer = ConvexPolygon(regular_polygon(segments, r2))
    holes: Sequence[np.ndarray] = ()
    if r1 > 0:
        holes = (regular_polygon(hole_segments or segments, r1)[::-1],)
    return DomainWithHoles(outer, tuple(holes))


def segments_for(radius: float, h: float, minimum: int = 12) -> int:
    return max(minimum, int(math.ceil(2 * math.pi * radius / h)))

