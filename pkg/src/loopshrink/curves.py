"""Closed curves on a triangle mesh and level-set extraction."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import DegenerateLevel, InvalidParameter

LEVEL_PERTURBATION = 1e-12


class LoopKind(str, Enum):
    HANDLE = "handle"
    TUNNEL = "tunnel"
    UNCLASSIFIED = "unclassified"


@dataclass
class SurfaceLoop:
    """Closed polyline on the surface.

    ``points`` has N+1 rows with the last equal to the first. Point ``k``
    lies in face ``anchor_faces[k]`` at barycentric coordinates
    ``barycentric[k]``, and segment ``k -> k+1`` lies inside
    ``anchor_faces[k]``.
    """

    points: np.ndarray
    anchor_faces: np.ndarray
    barycentric: np.ndarray
    kind: LoopKind = LoopKind.UNCLASSIFIED
    pair_id: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.anchor_faces = np.asarray(self.anchor_faces, dtype=np.int64)
        self.barycentric = np.asarray(self.barycentric, dtype=float)
        if len(self.points) < 3:
            raise InvalidParameter("a loop needs at least two distinct points")

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum())

    @property
    def n_points(self) -> int:
        return len(self.points) - 1

    @property
    def centroid(self) -> np.ndarray:
        return self.points[:-1].mean(axis=0)

    def with_kind(self, kind: LoopKind, pair_id: int | None = None) -> "SurfaceLoop":
        return replace(self, kind=kind, pair_id=self.pair_id if pair_id is None else pair_id)

    def anchor_error(self, mesh) -> float:
        """Largest distance between a point and its barycentric anchor."""
        tri = mesh.vertices[mesh.faces[self.anchor_faces]]
        rebuilt = np.einsum("nk,nkd->nd", self.barycentric, tri)
        return float(np.abs(rebuilt - self.points).max())

    def hausdorff(self, other: "SurfaceLoop") -> float:
        from scipy.spatial import cKDTree

        a, b = self.points, other.points
        return float(max(cKDTree(b).query(a)[0].max(), cKDTree(a).query(b)[0].max()))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "pair_id": self.pair_id,
            "length": self.length,
            "points": self.points.tolist(),
            "anchor_faces": self.anchor_faces.tolist(),
            "barycentric": self.barycentric.tolist(),
        }


def loop_from_polyline(mesh, points, faces) -> SurfaceLoop:
    """Build a loop from points and the face hosting each segment.

    ``points`` must be closed (last equals first); barycentric anchors are
    recomputed by projecting each point into its face.
    """
    points = np.asarray(points, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    bary = barycentric_coords(mesh, faces, points)
    return SurfaceLoop(points, faces, bary)


def barycentric_coords(mesh, faces, points) -> np.ndarray:
    tri = mesh.vertices[mesh.faces[faces]]
    v0 = tri[:, 1] - tri[:, 0]
    v1 = tri[:, 2] - tri[:, 0]
    v2 = points - tri[:, 0]
    d00 = np.einsum("ij,ij->i", v0, v0)
    d01 = np.einsum("ij,ij->i", v0, v1)
    d11 = np.einsum("ij,ij->i", v1, v1)
    d20 = np.einsum("ij,ij->i", v2, v0)
    d21 = np.einsum("ij,ij->i", v2, v1)
    den = d00 * d11 - d01 * d01
    b1 = (d11 * d20 - d01 * d21) / den
    b2 = (d00 * d21 - d01 * d20) / den
    return np.stack([1.0 - b1 - b2, b1, b2], axis=1)


def _crossing_table(mesh, values, level):
    s = np.asarray(values, dtype=float) - level
    s = np.where(s == 0.0, LEVEL_PERTURBATION, s)
    above = s > 0
    e = mesh.edges
    crossed = above[e[:, 0]] != above[e[:, 1]]
    t = np.zeros(len(e))
    sa, sb = s[e[crossed, 0]], s[e[crossed, 1]]
    t[crossed] = sa / (sa - sb)
    return above, crossed, t


def iso_segments(mesh, values, level, face_mask=None):
    """Per-face isoline segments as (faces, edge_in, edge_out).

    Segments are oriented so that values above ``level`` lie on the left
    when looking along the outward normal.
    """
    above, crossed, _ = _crossing_table(mesh, values, level)
    fa = above[mesh.faces]
    n_up = fa.sum(axis=1)
    hit = (n_up == 1) | (n_up == 2)
    if face_mask is not None:
        hit &= face_mask
    faces = np.flatnonzero(hit)
    # the odd corner is the lone vertex on its side of the level
    lone = np.where(n_up[faces] == 1, np.argmax(fa[faces], axis=1), np.argmin(fa[faces], axis=1))
    fe = mesh.face_edges[faces]
    rows = np.arange(len(faces))
    e_next = fe[rows, lone]  # edge (c, c+1)
    e_prev = fe[rows, (lone + 2) % 3]  # edge (c+2, c)
    lone_up = n_up[faces] == 1
    edge_in = np.where(lone_up, e_next, e_prev)
    edge_out = np.where(lone_up, e_prev, e_next)
    return faces, edge_in, edge_out


def iso_points(mesh, values, level) -> np.ndarray:
    """Crossing point on every edge (NaN where the edge is not crossed)."""
    _, crossed, t = _crossing_table(mesh, values, level)
    e = mesh.edges
    p = mesh.vertices
    pts = np.full((len(e), 3), np.nan)
    pts[crossed] = (1 - t[crossed, None]) * p[e[crossed, 0]] + t[crossed, None] * p[e[crossed, 1]]
    return pts


def extract_isoline(values, level: float, mesh, face_mask=None) -> list[SurfaceLoop]:
    """Closed level-set curves of a per-vertex field by marching triangles.

    Vertex values equal to ``level`` are nudged upward by 1e-12 so that
    every crossed face has exactly two crossed edges.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (mesh.n_vertices,):
        raise InvalidParameter("one value per vertex expected")
    if not np.isfinite(level) or not np.all(np.isfinite(values)):
        raise DegenerateLevel("level and values must be finite")
    faces, e_in, e_out = iso_segments(mesh, values, level, face_mask)
    if len(faces) == 0:
        return []
    pts = iso_points(mesh, values, level)
    next_seg = np.full(mesh.n_edges, -1)
    next_seg[e_in] = np.arange(len(faces))
    seg_of_out = next_seg[e_out]

    loops = []
    used = np.zeros(len(faces), dtype=bool)
    for start in range(len(faces)):
        if used[start]:
            continue
        chain = []
        s = start
        while s >= 0 and not used[s]:
            used[s] = True
            chain.append(s)
            s = seg_of_out[s]
        if s != start:
            # open chain: only possible with a face mask
            continue
        chain = np.array(chain)
        p = pts[e_in[chain]]
        host = faces[chain]
        p = np.vstack([p, p[:1]])
        host = np.append(host, host[0])
        loops.append(SurfaceLoop(p, host, barycentric_coords(mesh, host, p)))
    return loops


def loop_segment_lengths(mesh, values, level, face_mask=None):
    """Isoline segment length inside every face (zero where not crossed)."""
    faces, e_in, e_out = iso_segments(mesh, values, level, face_mask)
    pts = iso_points(mesh, values, level)
    out = np.zeros(mesh.n_faces)
    out[faces] = np.linalg.norm(pts[e_out] - pts[e_in], axis=1)
    return out


def face_segment_lengths(mesh, faces, level, corner_values) -> np.ndarray:
    """Isoline segment length inside each listed face from its corner values."""
    faces = np.asarray(faces, dtype=np.int64)
    s = np.asarray(corner_values, dtype=float) - level
    s = np.where(s == 0.0, LEVEL_PERTURBATION, s)
    p = mesh.vertices[mesh.faces[faces]]
    pts = []
    for k in range(3):
        a, b = k, (k + 1) % 3
        sa, sb = s[:, a], s[:, b]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where((sa > 0) != (sb > 0), sa / (sa - sb), np.nan)
        pts.append(p[:, a] + t[:, None] * (p[:, b] - p[:, a]))
    pts = np.stack(pts, axis=1)  # (n, 3 edges, 3)
    crossed = ~np.isnan(pts[:, :, 0])
    out = np.zeros(len(faces))
    two = crossed.sum(axis=1) == 2
    if two.any():
        q = pts[two][crossed[two]].reshape(-1, 2, 3)
        out[two] = np.linalg.norm(q[:, 0] - q[:, 1], axis=1)
    return out
