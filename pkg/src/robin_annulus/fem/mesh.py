"""Triangular meshes of polygonal domains with holes.

The generator seeds boundary points at spacing <= h and a hexagonal lattice in
the interior, triangulates with Qhull's Delaunay, discards triangles outside the
domain, restores any missing boundary segment by midpoint splitting and then
refines in batches (Ruppert style): circumcentres of triangles that are too
large or have an angle below the threshold are inserted, unless they encroach a
boundary segment, in which case that segment is split instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from ..geometry import DomainWithHoles, signed_area, TAU_GEOM

OUTER = 0
INNER = 1
MIN_ANGLE_DEG = 20.0
NODE_BUDGET = 500_000


class MeshError(RuntimeError):
    """Mesh generation failed; ``diagnostics`` records how far it got."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class Mesh:
    """P1 triangulation with tagged boundary edges.

    Attributes
    ----------
    nodes : (N, 2) float array
    triangles : (M, 3) int array, counter-clockwise
    boundary_edges : (K, 2) int array
    edge_tags : (K,) int array, ``OUTER`` (0) on the Robin boundary and ``INNER`` (1) on hole boundaries
    h : target edge length
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_tags: np.ndarray
    h: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("nodes", "triangles", "boundary_edges", "edge_tags"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def area(self) -> float:
        return float(self.areas().sum())

    def min_angles(self) -> np.ndarray:
        """Smallest interior angle of each triangle, in degrees."""
        return _min_angles(self.nodes[self.triangles])

    def edges(self, tag: int | None = None) -> np.ndarray:
        if tag is None:
            return self.boundary_edges
        return self.boundary_edges[self.edge_tags == tag]

    def boundary_length(self, tag: int) -> float:
        e = self.edges(tag)
        return float(np.linalg.norm(self.nodes[e[:, 1]] - self.nodes[e[:, 0]], axis=1).sum())

    def boundary_loops(self, tag: int | None = None) -> list[np.ndarray]:
        """Closed node loops formed by the (tagged) boundary edges."""
        edges = self.edges(tag)
        nxt = {int(a): int(b) for a, b in edges}
        if len(nxt) != len(edges):
            raise MeshError("boundary edges do not form simple loops")
        loops, seen = [], set()
        for start in nxt:
            if start in seen:
                continue
            loop, cur = [start], nxt[start]
            seen.add(start)
            while cur != start:
                if cur in seen or cur not in nxt:
                    raise MeshError("open boundary chain")
                seen.add(cur)
                loop.append(cur)
                cur = nxt[cur]
            loops.append(np.array(loop))
        return loops

    def euler_characteristic(self) -> int:
        t = self.triangles
        e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        n_edges = len(np.unique(e, axis=0))
        return self.n_nodes - n_edges + self.n_triangles

    def boundary_nodes(self, tag: int) -> np.ndarray:
        return np.unique(self.edges(tag))

    def write(self, path: str | Path) -> None:
        Path(path).write_text(format_mesh(self))


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------


def format_mesh(mesh: Mesh) -> str:
    out = [f"$nodes {mesh.n_nodes}"]
    out += [f"{x:.17g} {y:.17g}" for x, y in mesh.nodes]
    out.append(f"$triangles {mesh.n_triangles}")
    out += [f"{i} {j} {k}" for i, j, k in mesh.triangles]
    out.append(f"$edges {len(mesh.boundary_edges)}")
    out += [f"{i} {j} {t}" for (i, j), t in zip(mesh.boundary_edges, mesh.edge_tags)]
    return "\n".join(out) + "\n"


def parse_mesh(text: str, h: float = math.nan) -> Mesh:
    lines = [ln.strip() for ln in text.splitlines()]
    sections: dict[str, list[list[str]]] = {}
    i = 0
    while i < len(lines):
        ln = lines[i]
        i += 1
        if not ln or ln.startswith("#"):
            continue
        head = ln.split()
        if not head[0].startswith("$") or len(head) != 2:
            raise ValueError(f"line {i}: expected a '$section count' header, got {ln!r}")
        name, count = head[0][1:], int(head[1])
        rows = []
        while len(rows) < count:
            if i >= len(lines):
                raise ValueError(f"section ${name} is truncated")
            if lines[i]:
                rows.append(lines[i].split())
            i += 1
        sections[name] = rows
    missing = {"nodes", "triangles", "edges"} - sections.keys()
    if missing:
        raise ValueError(f"missing sections: {sorted(missing)}")
    nodes = np.array(sections["nodes"], dtype=float).reshape(-1, 2)
    tris = np.array(sections["triangles"], dtype=np.int64).reshape(-1, 3)
    ed = np.array(sections["edges"], dtype=np.int64).reshape(-1, 3)
    return Mesh(nodes, tris, ed[:, :2], ed[:, 2], h)


def read_mesh(path: str | Path) -> Mesh:
    return parse_mesh(Path(path).read_text())


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def _min_angles(p: np.ndarray) -> np.ndarray:
    a = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
    b = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    c = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
    # the smallest angle is opposite the shortest side
    s = np.sort(np.stack([a, b, c], axis=1), axis=1)
    cos = (s[:, 1] ** 2 + s[:, 2] ** 2 - s[:, 0] ** 2) / (2 * s[:, 1] * s[:, 2])
    return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))


def _circumcenters(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    ba, ca = b - a, c - a
    d = 2.0 * (ba[:, 0] * ca[:, 1] - ba[:, 1] * ca[:, 0])
    bb, cc = (ba**2).sum(1), (ca**2).sum(1)
    ux = (ca[:, 1] * bb - ba[:, 1] * cc) / d
    uy = (ba[:, 0] * cc - ca[:, 0] * bb) / d
    off = np.stack([ux, uy], axis=1)
    return a + off, np.hypot(ux, uy)


def _split_loop(verts: np.ndarray, h: float) -> list[np.ndarray]:
    """Boundary points of one closed loop with every segment of length <= h."""
    out = []
    nxt = np.roll(verts, -1, axis=0)
    for a, b in zip(verts, nxt):
        k = max(1, math.ceil(np.linalg.norm(b - a) / h - 1e-12))
        t = np.arange(k)[:, None] / k
        out.extend(a + t * (b - a))
    return out


def _hex_lattice(domain: DomainWithHoles, h: float, clearance: float) -> np.ndarray:
    lo, hi = domain.outer.vertices.min(0), domain.outer.vertices.max(0)
    dy = h * math.sqrt(3) / 2
    ys = np.arange(lo[1] + dy / 2, hi[1], dy)
    pts = []
    for j, y in enumerate(ys):
        xs = np.arange(lo[0] + (h / 2 if j % 2 else 0.0) + h / 4, hi[0], h)
        pts.append(np.column_stack([xs, np.full_like(xs, y)]))
    pts = np.concatenate(pts) if pts else np.zeros((0, 2))
    pts = pts[domain.contains(pts)]
    if len(pts) == 0:
        return pts
    dist = _distance_to_loops(pts, [domain.outer.vertices, *domain.holes])
    return pts[dist > clearance]


def _distance_to_loops(points: np.ndarray, loops) -> np.ndarray:
    from ..kernels import min_segment_distance

    pts = np.ascontiguousarray(points, dtype=float)
    best = np.full(len(pts), np.inf)
    out = np.empty(len(pts))
    for v in loops:
        min_segment_distance(pts, np.ascontiguousarray(v, dtype=float), out)
        np.minimum(best, out, out=best)
    return best


class _Boundary:
    """Boundary loops as ordered point lists, with loop ids for edge tagging."""

    def __init__(self, loops: list[list[np.ndarray]]):
        self.loops = [list(l) for l in loops]

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        pts = np.array([p for l in self.loops for p in l])
        ids = np.concatenate([np.full(len(l), i) for i, l in enumerate(self.loops)])
        return pts, ids

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Index pairs into ``points()`` and the owning loop of each segment."""
        pairs, owner, base = [], [], 0
        for i, l in enumerate(self.loops):
            k = len(l)
            idx = base + np.arange(k)
            pairs.append(np.column_stack([idx, np.roll(idx, -1)]))
            owner.append(np.full(k, i))
            base += k
        return np.concatenate(pairs), np.concatenate(owner)

    def split(self, global_ids: set[int]) -> None:
        """Split the segments whose start index (in ``points()`` order) is listed."""
        base = 0
        new_loops = []
        for l in self.loops:
            k = len(l)
            out = []
            for j, p in enumerate(l):
                out.append(p)
                if base + j in global_ids:
                    out.append(0.5 * (p + l[(j + 1) % k]))
            new_loops.append(out)
            base += k
        self.loops = new_loops


def _edge_keys(e: np.ndarray, n: int) -> np.ndarray:
    e = np.sort(e, axis=1)
    return e[:, 0].astype(np.int64) * n + e[:, 1]


def generate_mesh(domain: DomainWithHoles, h: float, min_angle: float = MIN_ANGLE_DEG,
                  node_budget: int = NODE_BUDGET, max_rounds: int = 200, check_size: bool = True) -> Mesh:
    """Quality triangulation of ``domain`` with target edge length ``h``.

    Raises
    ------
    ValueError
        If ``h`` is not below a quarter of the smallest feature size
        (hole separation or outer inradius) and ``check_size`` is set.
    MeshError
        If refinement does not reach the quality target within the node budget.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    feature = min(domain.min_separation(), domain.outer.inradius)
    if check_size and not h < feature / 4:
        raise ValueError(f"h={h} is not below a quarter of the feature size {feature:.6g}")
    loops = [_split_loop(domain.outer.vertices, h)]
    for hole in domain.holes:
        v = hole if signed_area(hole) < 0 else hole[::-1]  # holes run clockwise
        loops.append(_split_loop(np.asarray(v), h))
    bnd = _Boundary(loops)
    interior = _hex_lattice(domain, h, clearance=0.6 * h)
    extra = np.zeros((0, 2))
    sin_min = math.sin(math.radians(min_angle))
    diag = {"rounds": 0, "segment_splits": 0, "inserted": 0}

    for rnd in range(max_rounds):
        bpts, _ = bnd.points()
        segs, owner = bnd.segments()
        nb = len(bpts)
        pts = np.concatenate([bpts, interior, extra])
        if len(pts) > node_budget:
            raise MeshError(f"node budget {node_budget} exceeded", {**diag, "nodes": len(pts)})
        tri = Delaunay(pts).simplices
        p = pts[tri]
        sa = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
        # Qhull may emit flat slivers along collinear hull points; they carry no area
        flat = np.abs(sa) <= 1e-12 * h * h
        cent = p.mean(axis=1)
        keep = ~flat & domain.contains(cent)
        tri, sa = tri[keep], sa[keep]
        # orient counter-clockwise
        tri[sa < 0] = tri[sa < 0][:, [0, 2, 1]]
        all_edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        present = np.isin(_edge_keys(segs, len(pts)), _edge_keys(all_edges, len(pts)))
        if not present.all():
            bnd.split(set(np.nonzero(~present)[0].tolist()))
            diag["segment_splits"] += int((~present).sum())
            continue

        p = pts[tri]
        cc, rad = _circumcenters(p)
        short = np.min(np.stack([np.linalg.norm(p[:, i] - p[:, (i + 1) % 3], axis=1) for i in range(3)]), axis=0)
        # smallest angle theta satisfies short = 2 R sin(theta)
        bad = (rad > h * (1 + 1e-9)) | (short < 2 * rad * sin_min * (1 - 1e-12))
        diag["rounds"] = rnd + 1
        if not bad.any():
            break
        order = np.argsort(-rad[bad])
        cand, crad = cc[bad][order], rad[bad][order]

        # encroachment: candidate inside the diametral circle of a boundary segment
        sa_, sb_ = bpts[segs[:, 0]], bpts[segs[:, 1]]
        mid, half = 0.5 * (sa_ + sb_), 0.5 * np.linalg.norm(sb_ - sa_, axis=1)
        seg_tree = cKDTree(mid)
        hits = seg_tree.query_ball_point(cand, r=half.max() * (1 + 1e-12))
        to_split: set[int] = set()
        keep = np.ones(len(cand), dtype=bool)
        inside = domain.contains(cand)
        for i, lst in enumerate(hits):
            enc = [j for j in lst if np.linalg.norm(cand[i] - mid[j]) < half[j] * (1 - 1e-9)]
            if enc:
                to_split.update(enc)
                keep[i] = False
            elif not inside[i]:
                keep[i] = False
        # thin out candidates that are closer to each other than their own size allows
        cand, crad = cand[keep], crad[keep]
        accepted = []
        if len(cand):
            tree = cKDTree(pts)
            dmin, _ = tree.query(cand)
            ok = dmin > 0.25 * crad
            cand, crad = cand[ok], crad[ok]
            taken = np.zeros(len(cand), dtype=bool)
            ctree = cKDTree(cand) if len(cand) else None
            blocked = np.zeros(len(cand), dtype=bool)
            for i in range(len(cand)):
                if blocked[i]:
                    continue
                taken[i] = True
                for j in ctree.query_ball_point(cand[i], 0.5 * crad[i]):
                    if j != i:
                        blocked[j] = True
            accepted = cand[taken]
        if to_split:
            # drop interior points that would crowd the new boundary midpoints
            bnd.split(to_split)
            diag["segment_splits"] += len(to_split)
            newb, _ = bnd.points()
            for arr_name in ("interior", "extra"):
                arr = interior if arr_name == "interior" else extra
                if len(arr):
                    d, _ = cKDTree(newb).query(arr)
                    local = np.min(half) if len(half) else h
                    arr = arr[d > 0.5 * local]
                if arr_name == "interior":
                    interior = arr
                else:
                    extra = arr
        if len(accepted):
            extra = np.concatenate([extra, accepted])
            diag["inserted"] += len(accepted)
        if not to_split and not len(accepted):
            raise MeshError("refinement stalled", {**diag, "bad": int(bad.sum())})
    else:
        raise MeshError("refinement did not converge", {**diag, "bad": int(bad.sum())})

    used = np.unique(tri)
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    nodes = pts[used]
    tri = remap[tri]
    _, loop_id = bnd.points()
    segs, owner = bnd.segments()
    bedges = remap[segs]
    tags = np.where(owner == 0, OUTER, INNER)
    mesh = Mesh(nodes, tri, bedges, tags, h, meta=diag)
    if np.any(mesh.areas() <= TAU_GEOM * h * h):
        raise MeshError("degenerate triangle produced", diag)
    return mesh


def annulus_mesh(r1: float, r2: float, h: float, **kwargs) -> Mesh:
    """Mesh of the inscribed polygonal approximation of the annulus A_{r1, r2}."""
    from ..geometry import annulus_domain, segments_for

    dom = annulus_domain(r1, r2, segments_for(r2, h), segments_for(r1, h))
    return generate_mesh(dom, h, **kwargs)
