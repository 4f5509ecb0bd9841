"""Initial pass: multi-layer front propagation with split and merge tracking.

The field is advanced with explicit Euler steps of the pairwise evolution
equation. Each region layer grows into the base layer; whenever a layer's
narrow band falls apart into several pieces the layer is split, and when
two fronts touch they are merged and the touching fronts are recorded as
handle estimates.

Lengths are normalised before stepping: the Laplacian is rescaled as if
the mesh were uniformly scaled so that its mean edge length equals
``DiffusionConfig.h_ref``. The coefficients are dimensionless and only
produce a resolvable diffuse band at that scale.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .curves import SurfaceLoop, extract_isoline, face_segment_lengths
from .errors import InvalidParameter, MaxStepsExceeded, NumericalBlowup
from .layers import PRUNE_TOL, LayerField, covered_set, init_field, merge_layers, split_layer
from .operators import LaplacianOperator, assemble_laplacian

log = logging.getLogger(__name__)


@dataclass
class DiffusionConfig:
    dt: float | None = None  # None: derived from the stability bound
    band_threshold: float = 0.05
    saturation: float = 0.999
    collision_threshold: float = 0.1
    check_interval: int = 1
    max_steps: int = 200_000
    h_ref: float = 0.2  # model length of the mean edge
    seed_rings: int = 1
    covered_threshold: float | None = None  # None: the collision threshold
    closed_threshold: float = 0.5  # frozen mass at which a vertex becomes a wall
    dt_safety: float = 0.9
    snapshot_every: int = 0
    snapshot_prefix: str | None = None

    def __post_init__(self):
        if not 0 < self.band_threshold < self.saturation <= 1:
            raise InvalidParameter("need 0 < band_threshold < saturation <= 1")
        if not 0 < self.collision_threshold <= 0.5:
            raise InvalidParameter("collision_threshold must lie in (0, 0.5]")
        if self.dt is not None and not self.dt > 0:
            raise InvalidParameter("dt must be positive")
        if self.check_interval < 1 or self.max_steps < 1:
            raise InvalidParameter("check_interval and max_steps must be >= 1")
        if not self.h_ref > 0 or self.seed_rings < 0:
            raise InvalidParameter("h_ref must be positive and seed_rings non-negative")


class EventKind(str, Enum):
    SEED = "seed"
    SPLIT = "split"
    MERGE = "merge"
    VANISH = "vanish"


@dataclass
class FrontComponent:
    layer: int
    triangles: np.ndarray
    vertices: np.ndarray
    band_length: float
    genuine: bool = True  # touches essentially uncovered surface


@dataclass
class HandleEstimate:
    loop: SurfaceLoop
    layer: int
    event: int  # index into the event list
    covered: np.ndarray  # boolean vertex mask at merge time


@dataclass
class TopologyEvent:
    kind: EventKind
    step: int
    consumed: tuple[int, ...]
    created: tuple[int, ...]
    position: np.ndarray
    estimates: list[HandleEstimate] = field(default_factory=list)
    covered: np.ndarray | None = None

    @property
    def layers(self) -> tuple[int, ...]:
        return self.consumed + self.created

    @property
    def handle_count(self) -> int:
        return len(self.consumed) - 1 if self.kind is EventKind.MERGE else 0


class InitialPassResult(tuple):
    """``(estimates, events)`` with the run's field and bookkeeping attached."""

    def __new__(cls, estimates, events, **extra):
        obj = super().__new__(cls, (estimates, events))
        obj.__dict__.update(extra)
        return obj

    @property
    def estimates(self) -> list[HandleEstimate]:
        return self[0]

    @property
    def events(self) -> list[TopologyEvent]:
        return self[1]


# --------------------------------------------------------------------------
# connected components
# --------------------------------------------------------------------------
def label_components(n: int, pairs: np.ndarray) -> np.ndarray:
    """Connected component labels by parallel hooking and pointer jumping.

    Every node ends up labelled with the smallest node index of its
    component.
    """
    parent = np.arange(n)
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(pairs) == 0:
        return parent
    u, v = pairs[:, 0], pairs[:, 1]
    while True:
        pu, pv = parent[u], parent[v]
        diff = pu != pv
        if not diff.any():
            return parent
        hi = np.maximum(pu[diff], pv[diff])
        lo = np.minimum(pu[diff], pv[diff])
        np.minimum.at(parent, hi, lo)
        while True:
            nxt = parent[parent]
            if np.array_equal(nxt, parent):
                break
            parent = nxt


# --------------------------------------------------------------------------
# operators and stepping
# --------------------------------------------------------------------------
def take_rows(M: sparse.csr_matrix, rows: np.ndarray) -> sparse.csr_matrix:
    """``M[rows]`` for a CSR matrix, without scipy's indexing overhead."""
    start, stop = M.indptr[rows], M.indptr[rows + 1]
    counts = stop - start
    indptr = np.zeros(len(rows) + 1, dtype=M.indptr.dtype)
    np.cumsum(counts, out=indptr[1:])
    pick = np.arange(indptr[-1]) - np.repeat(indptr[:-1] - start, counts)
    return sparse.csr_matrix((M.data[pick], M.indices[pick], indptr), shape=(len(rows), M.shape[1]))


def row_indices(M: sparse.csr_matrix, rows: np.ndarray) -> np.ndarray:
    """Column indices stored in ``rows`` of ``M``, concatenated."""
    start, stop = M.indptr[rows], M.indptr[rows + 1]
    counts = stop - start
    offs = np.repeat(start - np.concatenate([[0], np.cumsum(counts)[:-1]]), counts)
    return M.indices[np.arange(counts.sum()) + offs]


def model_scale(mesh, cfg: DiffusionConfig) -> float:
    return (mesh.mean_edge_length / cfg.h_ref) ** 2


def model_operator(mesh, cfg: DiffusionConfig, face_mask=None) -> LaplacianOperator:
    return assemble_laplacian(mesh, face_mask).scaled(model_scale(mesh, cfg))


def default_dt(op: LaplacianOperator, f: LayerField, cfg: DiffusionConfig) -> float:
    """Explicit Euler bound from the Gershgorin radius of the diffusion term."""
    a = f.coefficients.a
    return cfg.dt_safety * 2.0 / (op.gershgorin_bound() * 0.5 * a * a)


def coefficient_matrices(f: LayerField, ids):
    """Dense pairwise coefficients over ``ids`` plus the list of interacting pairs."""
    c = f.coefficients
    base = f.base_layer_id
    m = len(ids)
    W = np.array([[c.w(i, j) for j in ids] for i in ids])
    A2 = np.array([[c.gradient_coeff(i, j) ** 2 for j in ids] for i in ids])
    E = np.array([[c.e(i, j, base) for j in ids] for i in ids])
    Mu = np.array([[c.mu(i, j, base) for j in ids] for i in ids])
    pairs = [(p, q) for p in range(m) for q in range(p + 1, m) if Mu[p, q] or Mu[q, p]]
    return W, A2, E, Mu, pairs


def field_rate(phi: np.ndarray, lap: np.ndarray, coeffs, present=None) -> np.ndarray:
    """Time derivative of stacked layer rows ``phi`` given their Laplacians.

    phi_dot_i = -sum_j mu_ij/n * (sum_k [(w_ik - w_jk) phi_k
                + (a_ik^2 - a_jk^2)/2 lap phi_k] - e_ij sqrt(phi_i phi_j))

    With ``present`` (boolean, same shape as ``phi``) the (i, j) term only
    acts where both layers are present, so a layer cannot appear where it
    has no support.
    """
    W, A2, E, Mu, pairs = coeffs
    n = len(phi)
    P = W @ phi + 0.5 * (A2 @ lap)
    rate = np.zeros_like(phi)
    for p, q in pairs:
        root = np.sqrt(phi[p] * phi[q])
        diff = P[p] - P[q]
        f_pq = Mu[p, q] * (diff - E[p, q] * root)
        f_qp = Mu[q, p] * (-diff - E[q, p] * root)
        if present is not None:
            both = present[p] & present[q]
            f_pq = f_pq * both
            f_qp = f_qp * both
        rate[p] -= f_pq
        rate[q] -= f_qp
    return rate / n


def _presence(phi_sub, phi, A_rows):
    """Where each layer is present: on its support or one ring around it."""
    pres = np.empty(phi_sub.shape, dtype=bool)
    pres[0] = True  # the base is everywhere
    if len(phi) > 1:
        nb = A_rows @ (phi[1:] > 0).T.astype(np.float64)
        pres[1:] = (nb.T > 0) | (phi_sub[1:] > 0)
    return pres


def _euler_update(phi, coeffs, live, L_rows, A_rows, dt, room):
    """Advance the dense rows ``phi`` in place on the vertex subset ``live``."""
    sub = phi[:, live]
    lap = (L_rows @ phi.T).T
    rate = field_rate(sub, lap, coeffs, _presence(sub, phi, A_rows))
    new = sub + dt * rate
    if not np.all(np.isfinite(new)):
        raise NumericalBlowup("non-finite field values; reduce dt")
    np.clip(new, 0.0, 1.0, out=new)
    # renormalise onto the room left by frozen layers
    s = new.sum(axis=0)
    pos = s > 0
    new[:, pos] *= room[pos] / s[pos]
    new[0, ~pos] = room[~pos]
    new[new < PRUNE_TOL] = 0.0
    phi[:, live] = new


def step(f: LayerField, op: LaplacianOperator, cfg: DiffusionConfig, dt: float | None = None, mesh=None) -> LayerField:
    """One explicit Euler update of the base and every active layer, in place.

    Frozen layers are not evolved. Vertices where frozen layers hold at
    least ``cfg.closed_threshold`` are left untouched, and the remaining
    columns are renormalised so that each sums to one. Layer presence is
    taken from the sparsity pattern of ``op`` unless ``mesh`` is given.
    """
    if op.n != f.n_vertices:
        raise InvalidParameter("operator does not match the field")
    dt = dt if dt is not None else cfg.dt if cfg.dt is not None else default_dt(op, f, cfg)
    ids = [f.base_layer_id] + f.active_ids()
    rows = [f.layers[i].row for i in ids]
    phi = f.phi[rows].toarray()
    frozen = f.frozen_mass()
    live = np.flatnonzero(frozen < cfg.closed_threshold)
    A = mesh.adjacency if mesh is not None else (abs(op.stiffness) > 0).astype(np.float64)
    _euler_update(phi, coefficient_matrices(f, ids), live, op.L[live], A[live], dt, 1.0 - frozen[live])
    f.set_rows(dict(zip(rows, phi)))
    f.step_index += 1
    return f


# --------------------------------------------------------------------------
# fronts and collisions
# --------------------------------------------------------------------------
def band_faces(mesh, coverage: np.ndarray, cfg: DiffusionConfig, faces=None) -> np.ndarray:
    """Narrow-band faces: some corner above the band threshold, some below saturation.

    Returns a boolean mask over ``faces`` (all faces when None).
    """
    fv = mesh.faces if faces is None else mesh.faces[faces]
    cf = coverage[fv]
    return (cf.max(axis=1) > cfg.band_threshold) & (cf.min(axis=1) < cfg.saturation)


def front_components(mesh, ids, phi, base, cfg: DiffusionConfig, faces=None, lengths=True):
    """Band components of every layer in ``ids`` (rows of ``phi``), keyed by id.

    Each band face goes to the layer with the largest corner value on it;
    components are edge-connected groups of faces with the same owner.
    ``faces`` restricts the search to a candidate face subset. With
    ``lengths=False`` the band lengths are left at NaN.
    """
    out = {i: [] for i in ids}
    if not ids:
        return out
    cand = np.arange(mesh.n_faces) if faces is None else np.asarray(faces)
    cf = 1.0 - base[mesh.faces[cand]]
    inband = (cf.max(axis=1) > cfg.band_threshold) & (cf.min(axis=1) < cfg.saturation)
    band = cand[inband]
    if len(band) == 0:
        return out
    fv = mesh.faces[band]
    face_max = phi[:, fv].max(axis=2)  # (layers, band faces)
    owner = np.argmax(face_max, axis=0)
    keep = face_max[owner, np.arange(len(band))] > 0
    band, owner, fv = band[keep], owner[keep], fv[keep]
    if len(band) == 0:
        return out

    fe = mesh.face_edges[band].reshape(-1)
    order = np.argsort(fe, kind="stable")
    fe_sorted = fe[order]
    dup = np.flatnonzero(fe_sorted[1:] == fe_sorted[:-1])
    la, lb = order[dup] // 3, order[dup + 1] // 3
    same = owner[la] == owner[lb]
    labels = label_components(len(band), np.stack([la[same], lb[same]], axis=1))

    order = np.argsort(labels, kind="stable")
    starts = np.flatnonzero(np.r_[True, np.diff(labels[order]) != 0])
    for s, e in zip(starts, np.r_[starts[1:], len(order)]):
        members = order[s:e]
        k = int(owner[members[0]])
        tris = band[members]
        verts = np.unique(fv[members])
        length = float(face_segment_lengths(mesh, tris, 0.5, phi[k][fv[members]]).sum()) if lengths else np.nan
        genuine = bool((base[verts] >= 1.0 - cfg.band_threshold).any())
        out[ids[k]].append(FrontComponent(ids[k], tris, verts, length, genuine))
    return out


def coalesce_touching(mesh, comps: list[FrontComponent]) -> list[FrontComponent]:
    """Fuse components whose vertices are closer than two rings.

    Such pieces leave no room for a wall between them, so splitting them
    into separate layers would let the children touch immediately.
    """
    if len(comps) < 2:
        return comps
    adj = mesh.adjacency
    pairs = []
    for a in range(len(comps)):
        va = comps[a].vertices
        ring = np.union1d(va, adj[va].indices)
        for b in range(a + 1, len(comps)):
            if np.intersect1d(ring, comps[b].vertices).size:
                pairs.append((a, b))
    if not pairs:
        return comps
    labels = label_components(len(comps), np.array(pairs))
    out = []
    for lab in np.unique(labels):
        group = [comps[k] for k in np.flatnonzero(labels == lab)]
        if len(group) == 1:
            out.append(group[0])
            continue
        out.append(
            FrontComponent(
                group[0].layer,
                np.concatenate([c.triangles for c in group]),
                np.unique(np.concatenate([c.vertices for c in group])),
                sum(c.band_length for c in group),
                any(c.genuine for c in group),
            )
        )
    return out


def _dense(f: LayerField, ids):
    return f.phi[[f.layers[i].row for i in ids]].toarray()


def extract_front(f: LayerField, layer: int, mesh, cfg: DiffusionConfig) -> list[FrontComponent]:
    """Edge-connected narrow-band components owned by one layer.

    Components that do not reach essentially uncovered surface (coverage at
    most the band threshold) are interior pockets and are dropped; pieces
    that nearly touch are reported as one.
    """
    ids = f.active_ids()
    comps = front_components(mesh, ids, _dense(f, ids), f.base, cfg).get(layer, [])
    return coalesce_touching(mesh, [c for c in comps if c.genuine])


def _collision_columns(phi, base, cfg, cols=None):
    sub = phi if cols is None else phi[:, cols]
    b = base if cols is None else base[cols]
    strong = sub >= cfg.collision_threshold
    hit = (strong.sum(axis=0) >= 2) & (b < 1.0 - cfg.collision_threshold)
    return strong, hit


def detect_collisions(f: LayerField | None, cfg: DiffusionConfig, phi=None, ids=None, base=None, cols=None) -> list[set[int]]:
    """Groups of active layers that share a vertex where the base has eroded.

    Groups are closed transitively, so three fronts meeting at a junction
    form one group.
    """
    if ids is None:
        ids = f.active_ids()
    if len(ids) < 2:
        return []
    if phi is None:
        phi = _dense(f, ids)
    if base is None:
        base = f.base
    strong, hit = _collision_columns(phi, base, cfg, cols)
    if not hit.any():
        return []
    patterns = np.unique(strong[:, hit].T, axis=0)
    pairs = []
    for pat in patterns:
        members = np.flatnonzero(pat)
        pairs.extend((members[0], m) for m in members[1:])
    labels = label_components(len(ids), np.array(pairs))
    groups = {}
    for p in {x for pr in pairs for x in pr}:
        groups.setdefault(labels[p], set()).add(ids[p])
    return sorted(groups.values(), key=min)


def collision_vertices(f: LayerField, group, cfg: DiffusionConfig) -> np.ndarray:
    ids = sorted(group)
    _, hit = _collision_columns(_dense(f, ids), f.base, cfg)
    return np.flatnonzero(hit)


# --------------------------------------------------------------------------
# the initial pass
# --------------------------------------------------------------------------
def front_loops(mesh, f: LayerField, layer: int, cfg: DiffusionConfig, level: float = 0.5) -> list[SurfaceLoop]:
    """Level-set loops of a layer that face uncovered surface."""
    vals = f.row(layer)
    if not (vals.min() < level < vals.max()):
        return []
    base = f.base
    out = []
    for loop in extract_isoline(vals, level, mesh):
        b = np.einsum("nk,nk->n", loop.barycentric, base[mesh.faces[loop.anchor_faces]])
        if b.mean() >= cfg.collision_threshold:
            out.append(loop)
    return out


def _handle_estimates(mesh, f, group, where, cfg):
    """Front loops of a merging group with the longest one dropped."""
    cands = []
    for lid in sorted(group):
        loops = front_loops(mesh, f, lid, cfg)
        if not loops:
            log.warning("layer %d has no front loop at merge time", lid)
            continue
        dist = [np.linalg.norm(lp.points - where, axis=1).min() for lp in loops]
        cands.append((lid, loops[int(np.argmin(dist))]))
    if not cands:
        return []
    longest = max(range(len(cands)), key=lambda i: (cands[i][1].length, -cands[i][0]))
    return [c for i, c in enumerate(cands) if i != longest]


class _Run:
    """State of one initial pass.

    The base and active layers are kept as dense rows in ``phi`` and only
    copied into the sparse :class:`LayerField` when a topology event needs
    it. Outside the narrow band a step leaves the field unchanged, so each
    step only visits the ``live`` vertices: the open vertices within one
    ring of a mixed column or of a boundary between two pure columns.
    """

    def __init__(self, mesh, op, seed, cfg):
        self.mesh, self.cfg = mesh, cfg
        if not 0 <= seed < mesh.n_vertices:
            raise InvalidParameter(f"seed vertex {seed} out of range")
        self.scale = model_scale(mesh, cfg)
        self.full_op = (op if op is not None else assemble_laplacian(mesh)).scaled(self.scale)
        self.adj = mesh.adjacency.astype(np.float64)
        self.vf = mesh.vertex_face_matrix
        mask = np.zeros(mesh.n_vertices, dtype=bool)
        mask[seed] = True
        seeds = np.flatnonzero(mesh.dilate(mask, cfg.seed_rings))
        self.field = init_field(mesh, seeds)
        self.dt = cfg.dt if cfg.dt is not None else default_dt(self.full_op, self.field, cfg)
        self.events: list[TopologyEvent] = []
        self.estimates: list[HandleEstimate] = []
        self.tracks: dict[int, list[np.ndarray]] = {}
        self.last_centroid: dict[int, np.ndarray] = {}
        self.step_hook = None
        self._emit(EventKind.SEED, (), (1,), mesh.vertices[seeds].mean(axis=0))
        self.tracks[1] = [mesh.vertices[seed].copy()]
        self._load()

    # bookkeeping --------------------------------------------------------
    def _emit(self, kind, consumed, created, position, **kw):
        ev = TopologyEvent(kind, self.field.step_index, tuple(consumed), tuple(created), np.asarray(position), **kw)
        self.events.append(ev)
        return len(self.events) - 1

    def _load(self):
        """(Re)build the dense state and wall operator from the sparse field."""
        f = self.field
        self.frozen = f.frozen_mass()
        self.open = self.frozen < self.cfg.closed_threshold
        if self.open.all():
            self.op = self.full_op
        else:
            faces_open = self.open[self.mesh.faces].all(axis=1)
            self.op = assemble_laplacian(self.mesh, faces_open).scaled(self.scale)
        self.ids = [f.base_layer_id] + f.active_ids()
        self.rows = [f.layers[i].row for i in self.ids]
        self.phi = f.phi[self.rows].toarray()
        self.coeffs = coefficient_matrices(f, self.ids)
        self._set_live(np.flatnonzero(self.open))
        self._update_live()

    def _sync(self):
        self.field.set_rows(dict(zip(self.rows, self.phi)))

    def _set_live(self, live):
        self.live = live
        self.L_rows = take_rows(self.op.L, live)
        self.A_rows = take_rows(self.adj, live)

    def _update_live(self):
        """Live set for the next step, searched within one ring of the current one."""
        mark = np.zeros(len(self.open), dtype=bool)
        mark[self.live] = True
        mark[self.A_rows.indices] = True
        cand = np.flatnonzero(mark & self.open)
        sub = self.phi[:, cand]
        mixed = (sub > 0).sum(axis=0) != 1
        owner = np.argmax(sub, axis=0)
        # pure vertices next to a pure vertex of another owner
        A = take_rows(self.adj, cand)
        nb_owner = np.argmax(self.phi[:, A.indices], axis=0)
        row_of = np.repeat(np.arange(len(cand)), np.diff(A.indptr))
        border = np.zeros(len(cand), dtype=bool)
        np.logical_or.at(border, row_of, nb_owner != owner[row_of])
        active = cand[mixed | border]
        grown = np.zeros(len(self.open), dtype=bool)
        grown[active] = True
        grown[row_indices(self.adj, active)] = True
        self._set_live(np.flatnonzero(grown & self.open))

    def _centroid(self, verts):
        return self.mesh.vertices[verts].mean(axis=0)

    def column_sums(self) -> np.ndarray:
        """Per-vertex sum of all layers, frozen ones included."""
        return self.phi.sum(axis=0) + self.frozen

    # main loop ------------------------------------------------------------
    def advance(self):
        if len(self.live):
            room = 1.0 - self.frozen[self.live]
            _euler_update(self.phi, self.coeffs, self.live, self.L_rows, self.A_rows, self.dt, room)
        self.field.step_index += 1
        self._update_live()

    def check(self):
        cfg, mesh = self.cfg, self.mesh
        act_ids, act_phi, base = self.ids[1:], self.phi[1:], self.phi[0]
        groups = detect_collisions(None, cfg, act_phi[:, self.live], act_ids, base[self.live])
        if groups:
            self._sync()
            for group in groups:
                self._merge(group)
            self._load()
            act_ids, act_phi, base = self.ids[1:], self.phi[1:], self.phi[0]
        fmask = np.zeros(mesh.n_faces, dtype=bool)
        fmask[row_indices(self.vf, self.live)] = True
        comps = front_components(mesh, act_ids, act_phi, base, cfg, np.flatnonzero(fmask), lengths=False)
        pending = []
        for lid in act_ids:
            genuine = coalesce_touching(mesh, [c for c in comps[lid] if c.genuine])
            if genuine:
                verts = np.unique(np.concatenate([c.vertices for c in genuine]))
                self.last_centroid[lid] = self._centroid(verts)
                self.tracks.setdefault(lid, []).append(self.last_centroid[lid])
            if len(genuine) != 1:
                pending.append((lid, genuine))
        if pending:
            self._sync()
            changed = False
            for lid, genuine in pending:
                if not genuine:
                    self._vanish(lid)
                    changed = True
                else:
                    changed |= self._split(lid, genuine)
            if changed:
                self._load()

    def _merge(self, group):
        f, mesh, cfg = self.field, self.mesh, self.cfg
        hits = collision_vertices(f, group, cfg)
        where = self._centroid(hits)
        cands = _handle_estimates(mesh, f, group, where, cfg)
        covered = covered_set(f, cfg.covered_threshold or cfg.collision_threshold)
        band = np.flatnonzero(band_faces(mesh, 1.0 - f.base, cfg))
        involved = np.zeros(mesh.n_vertices, dtype=bool)
        for lid in group:
            involved |= f.row(lid) > 0
        bv = np.unique(mesh.faces[band])
        bv = bv[involved[bv]]
        position = self._centroid(bv) if len(bv) else where
        new = merge_layers(f, sorted(group))
        idx = self._emit(EventKind.MERGE, sorted(group), (new,), position, covered=covered)
        for lid, loop in cands:
            est = HandleEstimate(loop, lid, idx, covered)
            self.events[idx].estimates.append(est)
            self.estimates.append(est)
        self.tracks[new] = [position]
        log.debug("step %d: merge %s -> %d", f.step_index, sorted(group), new)

    def _split(self, lid, comps) -> bool:
        f, mesh, cfg = self.field, self.mesh, self.cfg
        vals = f.row(lid)
        partial = (vals > 0) & (vals < cfg.saturation)
        seeds, taken = [], np.zeros(mesh.n_vertices, dtype=bool)
        for c in comps:
            s = c.vertices[partial[c.vertices] & ~taken[c.vertices]]
            taken[s] = True
            seeds.append(s)
        if any(len(s) == 0 for s in seeds):
            return False
        # hand every partial vertex of the layer to the nearest band component
        sub = np.flatnonzero(partial)
        local = np.full(mesh.n_vertices, -1)
        local[sub] = np.arange(len(sub))
        A = mesh.adjacency[sub][:, sub]
        src = np.concatenate([local[s] for s in seeds])
        owner = np.full(len(sub), -1)
        owner[src] = np.concatenate([np.full(len(s), i) for i, s in enumerate(seeds)])
        dist, _, sources = csgraph.dijkstra(
            A, directed=False, indices=src, unweighted=True, min_only=True, return_predecessors=True
        )
        reached = np.isfinite(dist)
        label = np.full(len(sub), -1)
        label[reached] = owner[sources[reached]]
        parts = [sub[label == i] for i in range(len(seeds))]
        position = self._centroid(np.unique(np.concatenate([c.vertices for c in comps])))
        children = split_layer(f, lid, parts)
        self._emit(EventKind.SPLIT, (lid,), children, position)
        for c, part in zip(children, parts):
            self.tracks[c] = [position, self._centroid(part)]
        log.debug("step %d: split %d -> %s", f.step_index, lid, children)
        return True

    def _vanish(self, lid):
        f = self.field
        f.freeze(lid)
        pos = self.last_centroid.get(lid)
        if pos is None:
            pos = self.tracks[lid][-1]
        self._emit(EventKind.VANISH, (lid,), (), pos)
        log.debug("step %d: vanish %d", f.step_index, lid)

    def run(self):
        cfg = self.cfg
        f = self.field
        while len(self.ids) > 1:
            if f.step_index >= cfg.max_steps:
                self._sync()
                raise MaxStepsExceeded(f"no termination after {cfg.max_steps} steps")
            self.advance()
            if self.step_hook is not None:
                self.step_hook(self)
            if f.step_index % cfg.check_interval == 0:
                self.check()
            if cfg.snapshot_every and cfg.snapshot_prefix and f.step_index % cfg.snapshot_every == 0:
                from .meshio import write_field_snapshot

                self._sync()
                write_field_snapshot(f"{cfg.snapshot_prefix}.step{f.step_index:04d}.ply", self.mesh, f)
        self._sync()
        return InitialPassResult(
            self.estimates,
            self.events,
            field=f,
            lineage=f.lineage(),
            steps=f.step_index,
            tracks=self.tracks,
            dt=self.dt,
        )


def run_initial_pass(mesh, op: LaplacianOperator | None, seed: int, cfg: DiffusionConfig | None = None, step_hook=None):
    """Propagate fronts from ``seed`` until the surface is covered.

    ``op`` is the plain cotangent Laplacian of ``mesh`` (or None to build
    it); the model length scaling is applied here. Returns a result that
    unpacks as ``(estimates, events)`` and also carries ``field``,
    ``lineage``, ``steps``, ``tracks`` and ``dt``. ``step_hook(run)`` is
    called after every step, for monitoring.
    """
    r = _Run(mesh, op, int(seed), cfg or DiffusionConfig())
    r.step_hook = step_hook
    return r.run()
