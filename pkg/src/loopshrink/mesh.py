"""Closed triangle meshes: validation, adjacency, geometry and synthetic generators."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import DegeneracyError, InvalidParameter, TopologyError

# relative to the squared bounding-box diagonal
DEGENERATE_AREA_TOL = 1e-12


class TriangleMesh:
    """A validated, closed, connected and consistently oriented triangle mesh.

    Faces are reoriented at construction so that all normals point outwards
    (positive enclosed volume). The object is treated as immutable; the
    vertex and face arrays are flagged read-only.

    Parameters
    ----------
    vertices : array_like, shape (V, 3)
    faces : array_like, shape (F, 3)
        Integer vertex indices.
    closed : bool
        With False, boundary edges are allowed (their second entry in
        ``edge_faces`` is -1) and the face order is taken as given. Only
        meant for planar test patches; the pipeline needs closed meshes.
    """

    def __init__(self, vertices, faces, closed: bool = True):
        self.closed = closed
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        f = np.ascontiguousarray(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise InvalidParameter("vertices must have shape (V, 3)")
        if f.ndim != 2 or f.shape[1] != 3:
            raise InvalidParameter("faces must have shape (F, 3)")
        if len(f) == 0:
            raise TopologyError("mesh has no faces")
        if f.min() < 0 or f.max() >= len(v):
            raise InvalidParameter("face index out of range")
        if not np.all(np.isfinite(v)):
            raise InvalidParameter("non-finite vertex coordinates")

        self.vertices = v
        self.faces = f
        self._build_edges()
        self._validate()
        self.vertices.flags.writeable = False
        self.faces.flags.writeable = False

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------
    def _build_edges(self):
        f = self.faces
        nf = len(f)
        # half-edge k of face t goes f[t, k] -> f[t, (k+1) % 3]
        he_src = f.reshape(-1)
        he_dst = f[:, [1, 2, 0]].reshape(-1)
        if np.any(he_src == he_dst):
            raise DegeneracyError("face with repeated vertex")
        key = np.minimum(he_src, he_dst) * len(self.vertices) + np.maximum(he_src, he_dst)
        uniq, inv, counts = np.unique(key, return_inverse=True, return_counts=True)
        if self.closed and np.any(counts == 1):
            raise TopologyError(f"{int(np.sum(counts == 1))} boundary edges; mesh must be closed")
        if np.any(counts > 2):
            raise TopologyError(f"{int(np.sum(counts > 2))} non-manifold edges with more than two faces")

        sorted_faces = np.sort(f, axis=1)
        if len(np.unique(sorted_faces, axis=0)) != nf:
            raise TopologyError("duplicate faces")

        nv = len(self.vertices)
        self.edges = np.stack([uniq // nv, uniq % nv], axis=1)
        self.face_edges = inv.reshape(nf, 3)
        order = np.argsort(inv, kind="stable")
        he_face = np.repeat(np.arange(nf), 3)
        first = np.concatenate([[0], np.cumsum(counts)[:-1]])
        two = counts == 2
        self.edge_faces = np.full((len(uniq), 2), -1, dtype=np.int64)
        self.edge_faces[:, 0] = he_face[order[first]]
        self.edge_faces[two, 1] = he_face[order[first[two] + 1]]
        # slot of the half-edge inside its face, same layout as edge_faces
        self._edge_slots = np.full((len(uniq), 2), -1, dtype=np.int64)
        self._edge_slots[:, 0] = order[first] % 3
        self._edge_slots[two, 1] = order[first[two] + 1] % 3

    def _validate(self):
        nv = len(self.vertices)
        used = np.zeros(nv, dtype=bool)
        used[self.faces.reshape(-1)] = True
        if not used.all():
            raise TopologyError(f"{int((~used).sum())} isolated vertices")

        n_comp, _ = csgraph.connected_components(self.face_adjacency, directed=False)
        if n_comp != 1:
            raise TopologyError(f"mesh has {n_comp} connected components")

        areas = self.face_areas
        tol = DEGENERATE_AREA_TOL * self.bbox_diagonal ** 2
        if np.any(areas < tol):
            raise DegeneracyError(f"{int(np.sum(areas < tol))} faces with near-zero area")

        if self.closed:
            self._check_vertex_manifold()
            self._orient()

    def _check_vertex_manifold(self):
        # corners (t, k) around the same vertex, glued across shared edges
        f0, f1 = self.edge_faces[:, 0], self.edge_faces[:, 1]
        a, b = self.edges[:, 0], self.edges[:, 1]
        rows, cols = [], []
        for vert in (a, b):
            c0 = f0 * 3 + _slot_of(self.faces, f0, vert)
            c1 = f1 * 3 + _slot_of(self.faces, f1, vert)
            rows.append(c0)
            cols.append(c1)
        n = 3 * len(self.faces)
        g = sparse.coo_matrix(
            (np.ones(len(self.edges) * 2), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )
        n_fans, _ = csgraph.connected_components(g, directed=False)
        if n_fans != len(self.vertices):
            raise TopologyError("non-manifold (pinched) vertex")

    def _orient(self):
        f = self.faces
        s0, s1 = self._edge_slots[:, 0], self._edge_slots[:, 1]
        f0, f1 = self.edge_faces[:, 0], self.edge_faces[:, 1]
        src0 = f[f0, s0]
        src1 = f[f1, s1]
        # consistent iff the two half-edges run in opposite directions
        same_dir = src0 == src1
        if same_dir.any():
            flip = _propagate_orientation(len(f), f0, f1, same_dir)
            if flip is None:
                raise TopologyError("mesh is not orientable")
            f = f.copy()
            f[flip] = f[flip][:, ::-1]
            self.faces = f
            self._build_edges()
        if self.signed_volume < 0:
            self.faces = self.faces[:, ::-1].copy()
            self._build_edges()
        for name in ("face_normals", "face_areas", "vertex_normals", "signed_volume", "face_adjacency"):
            self.__dict__.pop(name, None)

    # ------------------------------------------------------------------
    # sizes
    # ------------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    # ------------------------------------------------------------------
    # geometry
    # ------------------------------------------------------------------
    @cached_property
    def face_areas(self) -> np.ndarray:
        p = self.vertices[self.faces]
        return 0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1)

    @cached_property
    def face_normals(self) -> np.ndarray:
        p = self.vertices[self.faces]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    @cached_property
    def vertex_normals(self) -> np.ndarray:
        """Area-weighted average of incident face normals, unit length."""
        p = self.vertices[self.faces]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        vn = np.zeros_like(self.vertices)
        for k in range(3):
            np.add.at(vn, self.faces[:, k], n)
        return vn / np.linalg.norm(vn, axis=1, keepdims=True)

    @cached_property
    def signed_volume(self) -> float:
        p = self.vertices[self.faces]
        return float(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]]
        return np.linalg.norm(d, axis=1)

    @property
    def mean_edge_length(self) -> float:
        return float(self.edge_lengths.mean())

    @cached_property
    def bbox_diagonal(self) -> float:
        return float(np.linalg.norm(self.vertices.max(0) - self.vertices.min(0)))

    # ------------------------------------------------------------------
    # adjacency
    # ------------------------------------------------------------------
    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric vertex-vertex adjacency (CSR, entries 1)."""
        nv = self.n_vertices
        a, b = self.edges[:, 0], self.edges[:, 1]
        m = sparse.coo_matrix(
            (np.ones(2 * len(a), dtype=np.int8), (np.concatenate([a, b]), np.concatenate([b, a]))),
            shape=(nv, nv),
        ).tocsr()
        m.sort_indices()
        return m

    @cached_property
    def vertex_face_matrix(self) -> sparse.csr_matrix:
        """Incidence matrix (V x F), one entry per face corner."""
        nv, nf = self.n_vertices, self.n_faces
        rows = self.faces.reshape(-1)
        cols = np.repeat(np.arange(nf), 3)
        m = sparse.coo_matrix((np.ones(3 * nf, dtype=np.int8), (rows, cols)), shape=(nv, nf)).tocsr()
        m.sort_indices()
        return m

    @cached_property
    def face_adjacency(self) -> sparse.csr_matrix:
        """Face-face adjacency across shared edges (F x F)."""
        nf = self.n_faces
        inner = self.edge_faces[:, 1] >= 0
        f0, f1 = self.edge_faces[inner, 0], self.edge_faces[inner, 1]
        return sparse.coo_matrix(
            (np.ones(2 * len(f0), dtype=np.int8), (np.concatenate([f0, f1]), np.concatenate([f1, f0]))),
            shape=(nf, nf),
        ).tocsr()

    def vertex_neighbors(self, v: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[v] : a.indptr[v + 1]]

    def vertex_faces(self, v: int) -> np.ndarray:
        m = self.vertex_face_matrix
        return m.indices[m.indptr[v] : m.indptr[v + 1]]

    def edge_index(self, a: int, b: int) -> int:
        """Index into :attr:`edges` of the undirected edge (a, b)."""
        lo, hi = (int(a), int(b)) if a < b else (int(b), int(a))
        key = self._edge_keys
        k = lo * self.n_vertices + hi
        i = int(np.searchsorted(key, k))
        if i >= len(key) or key[i] != k:
            raise KeyError((a, b))
        return i

    @cached_property
    def _edge_keys(self) -> np.ndarray:
        e = self.edges.astype(np.int64)
        return e[:, 0] * self.n_vertices + e[:, 1]

    def dilate(self, mask: np.ndarray, rings: int = 1) -> np.ndarray:
        """Grow a boolean vertex mask by ``rings`` one-ring steps."""
        out = np.asarray(mask, dtype=bool).copy()
        a = self.adjacency
        for _ in range(rings):
            out = out | (a @ out.astype(np.int8) > 0)
        return out

    def __repr__(self):
        return f"TriangleMesh(V={self.n_vertices}, F={self.n_faces})"


def _slot_of(faces, face_ids, vert):
    row = faces[face_ids]
    return np.argmax(row == vert[:, None], axis=1)


def _propagate_orientation(nf, f0, f1, same_dir):
    """Return a boolean flip mask making orientation consistent, or None."""
    w = np.where(same_dir, 2, 1).astype(np.int8)
    g = sparse.coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([f0, f1]), np.concatenate([f1, f0]))), shape=(nf, nf)
    ).tocsr()
    order, pred = csgraph.breadth_first_order(g, 0, directed=False, return_predecessors=True)
    flip = np.zeros(nf, dtype=bool)
    for t in order[1:]:
        p = pred[t]
        flip[t] = flip[p] ^ (g[t, p] == 2)
    # every edge must now be consistent
    ok = (same_dir ^ flip[f0] ^ flip[f1]) == False  # noqa: E712
    return flip if ok.all() else None


# ----------------------------------------------------------------------
# topology
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class MeshTopologySummary:
    V: int
    E: int
    F: int
    euler_characteristic: int
    genus: int


def topology_summary(mesh: TriangleMesh) -> MeshTopologySummary:
    chi = mesh.n_vertices - mesh.n_edges + mesh.n_faces
    if chi > 2 or (2 - chi) % 2:
        raise TopologyError(f"Euler characteristic {chi} is not that of a closed orientable surface")
    return MeshTopologySummary(mesh.n_vertices, mesh.n_edges, mesh.n_faces, chi, (2 - chi) // 2)


# ----------------------------------------------------------------------
# generators
# ----------------------------------------------------------------------
def _torus_grid(major_segments, minor_segments, R, r, center=(0.0, 0.0, 0.0)):
    u = 2 * np.pi * np.arange(major_segments) / major_segments
    v = 2 * np.pi * np.arange(minor_segments) / minor_segments
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = R + r * np.cos(vv)
    pts = np.stack([ring * np.cos(uu), ring * np.sin(uu), r * np.sin(vv)], axis=-1)
    return pts.reshape(-1, 3) + np.asarray(center, dtype=float)


def _grid_quads(nu, nv, skip=None):
    """Quads (i,j) of a doubly periodic nu x nv grid, as triangle pairs."""
    tris = []
    for i in range(nu):
        for j in range(nv):
            if skip is not None and skip(i, j):
                continue
            a = i * nv + j
            b = ((i + 1) % nu) * nv + j
            c = ((i + 1) % nu) * nv + (j + 1) % nv
            d = i * nv + (j + 1) % nv
            tris.append((a, b, c))
            tris.append((a, c, d))
    return tris


def generate_torus(major_segments: int = 16, minor_segments: int = 8, R: float = 2.0, r: float = 0.5) -> TriangleMesh:
    """Uniform parametric grid on the standard torus.

    The tube circles have length ``2*pi*r`` and the inner equator has
    length ``2*pi*(R - r)``.
    """
    if major_segments < 3 or minor_segments < 3:
        raise InvalidParameter("need at least 3 segments in each direction")
    if not (R > r > 0):
        raise InvalidParameter("torus radii must satisfy R > r > 0")
    pts = _torus_grid(major_segments, minor_segments, R, r)
    return TriangleMesh(pts, _grid_quads(major_segments, minor_segments))


def generate_sphere(subdivisions: int = 3, radius: float = 1.0) -> TriangleMesh:
    """Icosphere obtained by midpoint subdivision of the icosahedron."""
    if subdivisions < 0:
        raise InvalidParameter("subdivisions must be >= 0")
    v, f = icosahedron()
    for _ in range(subdivisions):
        v, f = _subdivide(v, f)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
    return TriangleMesh(v * radius, f)


def generate_disk(rings: int = 12, radius: float = 1.0) -> TriangleMesh:
    """Open planar disk in the xy-plane (a test patch, ``closed=False``).

    Ring ``i`` has ``6 i`` evenly spaced vertices at radius ``i / rings``
    times ``radius``; faces come from a Delaunay triangulation.
    """
    from scipy.spatial import Delaunay

    if rings < 1:
        raise InvalidParameter("need at least one ring")
    pts = [np.zeros(2)]
    for i in range(1, rings + 1):
        t = 2 * np.pi * np.arange(6 * i) / (6 * i)
        pts.append(np.stack([np.cos(t), np.sin(t)], axis=1) * radius * i / rings)
    xy = np.vstack(pts)
    tri = Delaunay(xy).simplices
    return TriangleMesh(np.column_stack([xy, np.zeros(len(xy))]), tri, closed=False)


def generate_strip(length: float = 4.0, width: float = 1.0, nx: int = 16, ny: int = 4) -> TriangleMesh:
    """Open flat rectangle ``[0, length] x [0, width]`` (a test patch)."""
    x, y = np.meshgrid(np.linspace(0, length, nx + 1), np.linspace(0, width, ny + 1), indexing="ij")
    v = np.column_stack([x.ravel(), y.ravel(), np.zeros(x.size)])
    tris = []
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = i * (ny + 1) + j, (i + 1) * (ny + 1) + j, (i + 1) * (ny + 1) + j + 1, i * (ny + 1) + j + 1
            tris += [(a, b, c), (a, c, d)]
    return TriangleMesh(v, tris, closed=False)


def icosahedron():
    """Vertices on the unit sphere and outward-oriented faces."""
    t = (1.0 + 5 ** 0.5) / 2.0
    v = np.array(
        [[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
         [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
         [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]],
        dtype=float,
    )
    f = np.array(
        [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
         [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
         [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
         [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    )
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def _subdivide(v, f):
    edges = np.sort(np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]]), axis=1)
    uniq, inv = np.unique(edges, axis=0, return_inverse=True)
    mid = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    inv = inv.reshape(3, -1).T + len(v)
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    ab, bc, ca = inv[:, 0], inv[:, 1], inv[:, 2]
    nf = np.concatenate(
        [np.stack(x, axis=1) for x in ((a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca))]
    )
    return np.vstack([v, mid]), nf


def generate_genus_g(
    g: int,
    major_segments: int = 36,
    minor_segments: int = 12,
    R: float = 1.0,
    r: float = 0.4,
    gap: float = 0.5,
    sphere_subdivisions: int = 3,
) -> TriangleMesh:
    """Closed orientable surface of genus ``g``.

    ``g == 0`` gives an icosphere of radius ``R``, ``g == 1`` a torus, and
    larger genera a row of ``g`` tori. Neighbouring tori are joined by a
    straight grid tube that replaces a rectangular patch of grid cells on
    each facing outer equator.
    """
    if g < 0:
        raise InvalidParameter("genus must be >= 0")
    if g == 0:
        return generate_sphere(sphere_subdivisions, R)
    if g == 1:
        return generate_torus(major_segments, minor_segments, R, r)
    if major_segments < 12 or minor_segments < 8 or major_segments % 2:
        raise InvalidParameter("chained tori need an even major_segments >= 12 and minor_segments >= 8")
    if not (R > r > 0) or gap <= 0:
        raise InvalidParameter("need R > r > 0 and gap > 0")
    return TriangleMesh(*_chained_tori(g, major_segments, minor_segments, R, r, gap))


def _chained_tori(g, nu, nv, R, r, gap):
    spacing = 2 * (R + r) + gap
    hu = max(1, nu // 24)  # half-width of the removed patch, in grid cells
    hv = max(1, nv // 8)
    verts, faces = [], []
    offset = 0
    holes = []  # per torus: dict side -> list of boundary vertex ids (global)
    for k in range(g):
        center = (k * spacing, 0.0, 0.0)
        pts = _torus_grid(nu, nv, R, r, center)
        # patches centred on u = 0 (facing +x) and u = pi (facing -x)
        sides = {}
        if k < g - 1:
            sides["+"] = 0
        if k > 0:
            sides["-"] = nu // 2

        def in_patch(i, j, sides=sides):
            for iu in sides.values():
                di = (i - iu + hu) % nu
                dj = (j + hv) % nv
                if di < 2 * hu and dj < 2 * hv:
                    return True
            return False

        tris = np.asarray(_grid_quads(nu, nv, skip=in_patch)) + offset
        faces.append(tris)
        verts.append(pts)
        loops = {}
        for side, iu in sides.items():
            loops[side] = [offset + ((iu + a) % nu) * nv + (b % nv) for a, b in _rect_loop(hu, hv, mirror=side == "-")]
        holes.append(loops)
        offset += len(pts)

    all_v = np.vstack(verts)
    h = 2 * np.pi * (R + r) / nu
    n_rings = max(1, int(round(gap / h)) - 1)
    tube_faces = []
    for k in range(g - 1):
        a = holes[k]["+"]
        b = holes[k + 1]["-"]
        rings = [a]
        pa, pb = all_v[a], all_v[b]
        new = []
        for s in range(1, n_rings + 1):
            t = s / (n_rings + 1)
            new.append((1 - t) * pa + t * pb)
            rings.append(list(range(offset, offset + len(a))))
            offset += len(a)
        rings.append(b)
        if new:
            all_v = np.vstack([all_v] + new)
        n = len(a)
        for s in range(len(rings) - 1):
            r0, r1 = rings[s], rings[s + 1]
            for q in range(n):
                q1 = (q + 1) % n
                tube_faces.append((r0[q], r0[q1], r1[q1]))
                tube_faces.append((r0[q], r1[q1], r1[q]))
    all_f = np.vstack(faces + [np.asarray(tube_faces, dtype=np.int64)])
    # drop the vertices inside the removed patches
    used = np.zeros(len(all_v), dtype=bool)
    used[all_f.reshape(-1)] = True
    remap = np.cumsum(used) - 1
    return all_v[used], remap[all_f]


def _rect_loop(hu, hv, mirror=False):
    """Boundary of the index rectangle [-hu, hu] x [-hv, hv], as a closed walk."""
    pts = []
    for a in range(-hu, hu):
        pts.append((a, -hv))
    for b in range(-hv, hv):
        pts.append((hu, b))
    for a in range(hu, -hu, -1):
        pts.append((a, hv))
    for b in range(hv, -hv, -1):
        pts.append((-hu, b))
    if mirror:
        # the facing torus sees u mirrored: same (y, z) at index offset -a
        pts = [(-a, b) for a, b in pts]
    return pts


def generate_holed_plate(holes: int = 2, cells: int = 8, thickness: float = 1.0) -> TriangleMesh:
    """Thick rectangular plate with a row of ``holes`` square through-holes.

    The plate spans ``(2 holes + 1) x 3`` units with unit holes at
    ``[2k + 1, 2k + 2] x [1, 2]``; ``cells`` grid cells per unit are used on
    the faces and the side walls. The bars between neighbouring holes are
    the tubes shared by two tunnels, so the surface has genus ``holes``.
    """
    if holes < 1 or cells < 2 or thickness <= 0:
        raise InvalidParameter("need holes >= 1, cells >= 2 and thickness > 0")
    nx, ny = (2 * holes + 1) * cells, 3 * cells
    kept = np.ones((nx, ny), dtype=bool)
    for k in range(holes):
        kept[(2 * k + 1) * cells : (2 * k + 2) * cells, cells : 2 * cells] = False
    nz = max(1, int(round(thickness * cells)))
    n_grid = (nx + 1) * (ny + 1)

    def vid(i, j, level):
        # levels 0 (top) and nz (bottom) are full grids; walls add the rest
        return i * (ny + 1) + j + (n_grid if level == nz else 0)

    x, y = np.meshgrid(np.arange(nx + 1) / cells, np.arange(ny + 1) / cells, indexing="ij")
    top = np.column_stack([x.ravel(), y.ravel(), np.full(x.size, thickness / 2)])
    bottom = top * [1, 1, -1]
    verts = [top, bottom]
    tris = []
    for i in range(nx):
        for j in range(ny):
            if not kept[i, j]:
                continue
            a, b, c, d = (i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)
            tris.append([vid(*a, 0), vid(*b, 0), vid(*c, 0)])
            tris.append([vid(*a, 0), vid(*c, 0), vid(*d, 0)])
            tris.append([vid(*a, nz), vid(*c, nz), vid(*b, nz)])
            tris.append([vid(*a, nz), vid(*d, nz), vid(*c, nz)])

    # boundary edges of the kept region, directed with the region on the left
    def is_kept(i, j):
        return 0 <= i < nx and 0 <= j < ny and kept[i, j]

    walls = []
    for i in range(nx):
        for j in range(ny):
            if not kept[i, j]:
                continue
            if not is_kept(i, j - 1):
                walls.append(((i, j), (i + 1, j)))
            if not is_kept(i + 1, j):
                walls.append(((i + 1, j), (i + 1, j + 1)))
            if not is_kept(i, j + 1):
                walls.append(((i + 1, j + 1), (i, j + 1)))
            if not is_kept(i - 1, j):
                walls.append(((i, j + 1), (i, j)))
    ring = {}  # grid point -> ids of its intermediate wall vertices
    offset = 2 * n_grid
    z = thickness / 2 - thickness * np.arange(1, nz) / nz
    for a, b in walls:
        for p in (a, b):
            if p not in ring:
                ring[p] = [vid(*p, 0)] + list(range(offset, offset + nz - 1)) + [vid(*p, nz)]
                offset += nz - 1
                verts.append(np.column_stack([np.full(nz - 1, p[0] / cells), np.full(nz - 1, p[1] / cells), z]))
        ra, rb = ring[a], ring[b]
        for k in range(nz):
            tris.append([rb[k], ra[k], ra[k + 1]])
            tris.append([rb[k], ra[k + 1], rb[k + 1]])
    v = np.vstack(verts)
    f = np.asarray(tris, dtype=np.int64)
    used = np.zeros(len(v), dtype=bool)
    used[f.reshape(-1)] = True
    remap = np.cumsum(used) - 1
    return TriangleMesh(v[used], remap[f])


def perturb(mesh: TriangleMesh, amount: float = 0.2, seed: int = 0, anisotropy: float = 0.0) -> TriangleMesh:
    """Randomly jittered copy of ``mesh``.

    Each vertex moves by up to ``amount`` times the mean edge length in a
    random direction, and ``anisotropy`` adds a random per-axis stretch
    of up to that fraction, making the sampling non-uniform.
    """
    rng = np.random.default_rng(seed)
    h = mesh.mean_edge_length
    d = rng.uniform(-1, 1, size=mesh.vertices.shape) * amount * h
    v = mesh.vertices + d
    if anisotropy:
        v = v * (1 + rng.uniform(0, anisotropy, size=3))
    return TriangleMesh(v, mesh.faces)


def generate_branching(
    limbs: int = 4, subdivisions: int = 4, length: float = 2.5, sharpness: float = 12.0, seed: int = 0
) -> TriangleMesh:
    """Genus-0 body with ``limbs`` protrusions (a star-shaped radial graph).

    Limb directions are spread over the sphere with a Fibonacci lattice
    and slightly randomised. Vertex ``limb_tips(mesh)[k]`` is the tip of
    limb ``k``.
    """
    if limbs < 1:
        raise InvalidParameter("need at least one limb")
    dirs = limb_directions(limbs, seed)
    v, f = icosahedron()
    for _ in range(subdivisions):
        v, f = _subdivide(v, f)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
    radius = 1.0 + length * np.max(np.clip(v @ dirs.T, 0, None) ** sharpness, axis=1)
    return TriangleMesh(v * radius[:, None], f)


def limb_directions(limbs: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    k = np.arange(limbs) + 0.5
    z = 1 - 2 * k / limbs
    phi = np.pi * (1 + 5 ** 0.5) * k
    d = np.stack([np.sqrt(1 - z * z) * np.cos(phi), np.sqrt(1 - z * z) * np.sin(phi), z], axis=1)
    d += rng.normal(scale=0.05, size=d.shape)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def limb_tips(mesh: TriangleMesh, limbs: int, seed: int = 0) -> np.ndarray:
    """Vertex index furthest along each limb direction of :func:`generate_branching`."""
    dirs = limb_directions(limbs, seed)
    return np.argmax(mesh.vertices @ dirs.T, axis=0)
