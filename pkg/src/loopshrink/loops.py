"""Tunnel and handle loops from single-layer diffusion and streamline tracing.

A loop on the surface is first snapped to a simple vertex cycle. The
cycle's vertices act as a wall; a scalar front is started on one side and
the first vertex it reaches on the other side is traced back to the source
along the gradient of the arrival time. The streamline closed by a short
edge path across the wall is the new loop.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .curves import LoopKind, SurfaceLoop, extract_isoline, loop_from_polyline
from .errors import (
    Ambiguous,
    DegeneracyError,
    InvalidParameter,
    LoopError,
    StallError,
    Unreachable,
)
from .layers import CoefficientScheme
from .operators import GradientOperator, LaplacianOperator, assemble_laplacian

__all__ = [
    "LoopKind",
    "SurfaceLoop",
    "extract_isoline",
    "HandleTunnelPair",
    "PassConfig",
    "ScalarDiffusionState",
    "LoopSides",
    "Streamline",
    "loop_sides",
    "scalar_diffuse",
    "trace_streamline",
    "tunnel_pass",
    "handle_refine_pass",
    "classify_loop",
    "classify_pair",
]

log = logging.getLogger(__name__)


@dataclass
class PassConfig:
    dt: float | None = None
    h_ref: float = 0.2
    hit_level: float = 0.5
    max_steps: int = 200_000
    allowed_dilation: int = 2  # rings added around the wall in the tunnel pass
    face_visit_cap: int = 4
    dt_safety: float = 0.9
    coefficients: CoefficientScheme = field(default_factory=CoefficientScheme)

    def __post_init__(self):
        if not 0 < self.hit_level < 1:
            raise InvalidParameter("hit_level must lie in (0, 1)")
        if self.dt is not None and not self.dt > 0:
            raise InvalidParameter("dt must be positive")
        if self.max_steps < 1 or not self.h_ref > 0:
            raise InvalidParameter("max_steps and h_ref must be positive")


@dataclass
class HandleTunnelPair:
    handle: SurfaceLoop
    tunnel: SurfaceLoop
    provenance: int  # merge event index
    handle_estimate: SurfaceLoop
    diagnostics: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# loop sides
# --------------------------------------------------------------------------
@dataclass
class LoopSides:
    cycle: np.ndarray  # simple vertex cycle, in loop order
    left: np.ndarray  # boolean masks
    right: np.ndarray
    conflict: np.ndarray  # one-ring of the cycle on both sides

    @property
    def wall(self) -> np.ndarray:
        w = self.conflict.copy()
        w[self.cycle] = True
        return w


def _snap_sequence(mesh, loop: SurfaceLoop) -> list[int]:
    snapped = mesh.faces[loop.anchor_faces[:-1], np.argmax(loop.barycentric[:-1], axis=1)]
    verts = mesh.vertices
    seq = [int(snapped[0])]
    for v in snapped[1:].tolist() + [int(snapped[0])]:
        u = seq[-1]
        if v == u:
            continue
        nu = mesh.vertex_neighbors(u)
        if v not in nu:
            common = np.intersect1d(nu, mesh.vertex_neighbors(v))
            if len(common):
                d = np.linalg.norm(verts[common] - verts[u], axis=1) + np.linalg.norm(verts[common] - verts[v], axis=1)
                seq.append(int(common[np.argmin(d)]))
            else:
                _, pred = csgraph.dijkstra(mesh.adjacency, indices=u, return_predecessors=True, unweighted=True)
                path = []
                w = v
                while w != u:
                    w = int(pred[w])
                    path.append(w)
                seq.extend(path[::-1][1:])
        seq.append(v)
    return seq[:-1]


def _cycle_length(mesh, seq) -> float:
    p = mesh.vertices[seq]
    return float(np.linalg.norm(p - np.roll(p, -1, axis=0), axis=1).sum())


def _simplify_cycle(mesh, seq) -> list[int]:
    """Drop backtracks and pinches, keeping the longer sub-cycle at each pinch."""
    seq = list(seq)
    while True:
        pos = {}
        hit = None
        for k, v in enumerate(seq):
            if v in pos:
                hit = (pos[v], k)
                break
            pos[v] = k
        if hit is None:
            break
        i, j = hit
        inner = seq[i:j]
        outer = seq[j:] + seq[:i]
        cand = [c for c in (inner, outer) if len(c) >= 3]
        if not cand:
            raise DegeneracyError("loop collapses to a single edge after snapping")
        seq = max(cand, key=lambda c: _cycle_length(mesh, c))
    if len(seq) < 3:
        raise DegeneracyError("loop collapses after snapping")
    return seq


def _ring_between(mesh, c, start, stop) -> list[int]:
    """Neighbours of ``c`` strictly between ``start`` and ``stop``, rotating counter-clockwise."""
    succ = {}
    for t in mesh.vertex_faces(c):
        f = mesh.faces[t]
        k = int(np.flatnonzero(f == c)[0])
        succ[int(f[(k + 1) % 3])] = int(f[(k + 2) % 3])
    out = []
    v = succ[start]
    guard = len(succ) + 1
    while v != stop and guard:
        out.append(v)
        v = succ[v]
        guard -= 1
    return out


def loop_sides(mesh, loop: SurfaceLoop) -> LoopSides:
    """Snap a loop to a simple vertex cycle and collect its one-ring on each side.

    ``left`` is on the left when walking along the loop with the outward
    normal pointing up; for an isoline that is the high-value side.
    Vertices seen on both sides are returned as ``conflict``.
    """
    cyc = _simplify_cycle(mesh, _snap_sequence(mesh, loop))
    on_cycle = np.zeros(mesh.n_vertices, dtype=bool)
    on_cycle[cyc] = True
    left = np.zeros(mesh.n_vertices, dtype=bool)
    right = np.zeros(mesh.n_vertices, dtype=bool)
    m = len(cyc)
    for k, c in enumerate(cyc):
        prev, nxt = cyc[k - 1], cyc[(k + 1) % m]
        left[_ring_between(mesh, c, nxt, prev)] = True
        right[_ring_between(mesh, c, prev, nxt)] = True
    left &= ~on_cycle
    right &= ~on_cycle
    conflict = left & right
    return LoopSides(np.array(cyc), left & ~conflict, right & ~conflict, conflict)


# --------------------------------------------------------------------------
# scalar diffusion
# --------------------------------------------------------------------------
@dataclass
class ScalarDiffusionState:
    u: np.ndarray
    source: np.ndarray  # boolean masks
    barrier: np.ndarray
    allowed: np.ndarray
    target: np.ndarray | None = None
    arrival: np.ndarray | None = None  # time at which u crossed the hit level
    steps: int = 0

    def __post_init__(self):
        n = len(self.u)
        self.source = np.asarray(self.source, dtype=bool)
        self.barrier = np.asarray(self.barrier, dtype=bool)
        self.allowed = np.asarray(self.allowed, dtype=bool)
        if any(len(x) != n for x in (self.source, self.barrier, self.allowed)):
            raise InvalidParameter("state masks must match the vertex count")
        if (self.source & self.barrier).any():
            raise InvalidParameter("source and barrier overlap")
        if not self.source.any() or not self.barrier.any():
            raise InvalidParameter("source and barrier must be non-empty")
        if self.arrival is None:
            self.arrival = np.where(self.source, 0.0, np.inf)
        self.pin()

    @classmethod
    def create(cls, n, source, barrier, allowed=None, target=None):
        allowed = np.ones(n, dtype=bool) if allowed is None else allowed
        return cls(np.zeros(n), source, barrier, allowed, target)

    def pin(self):
        self.u[self.source] = 1.0
        self.u[self.barrier] = 0.0


def scalar_rate(u, lap, c: CoefficientScheme) -> np.ndarray:
    """Two-phase form of the evolution equation with the base as ``1 - u``."""
    w = c.w_offdiag
    return 0.5 * c.mu_base * (w * (2 * u - 1) + c.a ** 2 * lap + c.e_base * np.sqrt(np.clip(u * (1 - u), 0, None)))


def pass_operator(mesh, state: ScalarDiffusionState, cfg: PassConfig) -> LaplacianOperator:
    """Laplacian of the allowed region with the barrier cut out (no-flux walls)."""
    ok = state.allowed & ~state.barrier
    faces = ok[mesh.faces].all(axis=1)
    scale = (mesh.mean_edge_length / cfg.h_ref) ** 2
    return assemble_laplacian(mesh, faces).scaled(scale)


def _check_reachable(mesh, state, op):
    live = op.L.copy()
    n_comp, labels = csgraph.connected_components(abs(live) + abs(live.T), directed=False)
    src = np.unique(labels[state.source])
    tgt = labels[state.target]
    if not np.isin(tgt, src).any():
        raise Unreachable("target cannot be reached from the source inside the allowed region")


def scalar_diffuse(mesh, op: LaplacianOperator | None, state: ScalarDiffusionState, cfg: PassConfig | None = None):
    """Run a pinned single front until it reaches the target set.

    ``op`` should come from :func:`pass_operator` for this state (it is
    built when None). Returns ``(state, first_hit)``. Arrival times are
    recorded in ``state.arrival``, linearly interpolated within a step.
    """
    cfg = cfg or PassConfig()
    if state.target is None:
        state.target = ~(state.source | state.barrier) & state.allowed
    target = np.asarray(state.target, dtype=bool)
    if not target.any():
        raise InvalidParameter("empty target set")
    op = op if op is not None else pass_operator(mesh, state, cfg)
    _check_reachable(mesh, state, op)
    c = cfg.coefficients
    dt = cfg.dt if cfg.dt is not None else cfg.dt_safety * 2.0 / (op.gershgorin_bound() * 0.5 * c.a ** 2)
    free = state.allowed & ~state.source & ~state.barrier
    L = op.L
    u = state.u
    level = cfg.hit_level
    for k in range(cfg.max_steps):
        rate = scalar_rate(u, L @ u, c)
        new = u.copy()
        new[free] = np.clip(u[free] + dt * rate[free], 0.0, 1.0)
        crossed = free & (u < level) & (new >= level)
        if crossed.any():
            frac = (level - u[crossed]) / (new[crossed] - u[crossed])
            state.arrival[crossed] = (state.steps + frac) * dt
        state.u = u = new
        state.steps += 1
        hits = np.flatnonzero(target & (u >= level))
        if len(hits):
            first = int(hits[np.argmin(state.arrival[hits])])
            return state, first
    raise Unreachable(f"target not reached within {cfg.max_steps} steps")


# --------------------------------------------------------------------------
# streamlines
# --------------------------------------------------------------------------
@dataclass
class Streamline:
    points: np.ndarray  # (N+1, 3)
    faces: np.ndarray  # (N,) face hosting each segment
    end: int | None  # stop vertex reached

    @property
    def length(self) -> float:
        return float(np.linalg.norm(np.diff(self.points, axis=0), axis=1).sum()) if len(self.points) > 1 else 0.0

    def __len__(self):
        return len(self.faces)


SNAP = 1e-9
FLAT = 1e-12


class _Tracer:
    """Exact tracing of the steepest ascent of a piecewise-linear field."""

    def __init__(self, mesh, gradop: GradientOperator, u, stop, cap):
        self.mesh = mesh
        self.g = -np.asarray(u, dtype=float)  # descend g
        self.coeffs = gradop.coeffs
        self.grads = gradop.gradients(self.g)
        self.stop = stop
        self.visits = np.zeros(mesh.n_faces, dtype=np.int32)
        self.cap = cap
        self.points = []
        self.faces = []

    def _stop_in_face(self, t):
        f = self.mesh.faces[t]
        s = f[self.stop[f]]
        if len(s) == 0:
            return None
        return int(s[np.argmin(self.g[s])])

    def _visit(self, t):
        self.visits[t] += 1
        if self.visits[t] > self.cap:
            raise LoopError(f"streamline revisited face {t} more than {self.cap} times")

    def _emit(self, t, p):
        self.faces.append(int(t))
        self.points.append(np.asarray(p, dtype=float))

    def _finish_in(self, t):
        s = self._stop_in_face(t)
        if s is None:
            return None
        self._emit(t, self.mesh.vertices[s])
        return s

    def _cross(self, t, bary, d):
        """Advance from barycentric ``bary`` in face ``t`` along ``d`` to the boundary."""
        rates = self.coeffs[t] @ d
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(rates < -FLAT, -bary / rates, np.inf)
        k = int(np.argmin(s))
        if not np.isfinite(s[k]):
            raise StallError("direction does not leave the face")
        nb = bary + s[k] * rates
        nb[k] = 0.0
        nb = np.clip(nb, 0.0, None)
        nb /= nb.sum()
        return nb

    def _from_vertex(self, v):
        mesh = self.mesh
        best, best_mag = None, 0.0
        for t in mesh.vertex_faces(v):
            d = -self.grads[t]
            mag = np.linalg.norm(d)
            if mag < FLAT:
                continue
            k = int(np.flatnonzero(mesh.faces[t] == v)[0])
            rates = self.coeffs[t] @ d
            # entering the face means the barycentric weight of v decreases
            # and neither of the other two goes negative
            others = [(k + 1) % 3, (k + 2) % 3]
            if rates[k] < 0 and rates[others[0]] >= -FLAT * mag and rates[others[1]] >= -FLAT * mag and mag > best_mag:
                best, best_mag = (t, k, d), mag
        if best is None:
            nbrs = mesh.vertex_neighbors(v)
            low = nbrs[np.argmin(self.g[nbrs])]
            if self.g[low] >= self.g[v]:
                raise StallError(f"no descent direction at vertex {v}")
            t = self._edge_face(v, low)
            return ("vertex", int(low), t)
        t, k, d = best
        bary = np.zeros(3)
        bary[k] = 1.0
        return ("face", t, bary, d)

    def _edge_face(self, a, b):
        e = self.mesh.edge_index(a, b)
        return int(self.mesh.edge_faces[e, 0])

    def trace(self, start: int, max_faces: int | None = None) -> Streamline:
        mesh = self.mesh
        P = mesh.vertices
        self.points = [P[start].copy()]
        if self.stop[start]:
            return Streamline(np.array(self.points), np.zeros(0, dtype=np.int64), int(start))
        limit = max_faces or 8 * mesh.n_faces
        state = ("at_vertex", int(start))
        for _ in range(limit):
            if state[0] == "at_vertex":
                v = state[1]
                if self.stop[v]:
                    return self._result(v)
                move = self._from_vertex(v)
                if move[0] == "vertex":
                    _, w, t = move
                    self._visit(t)
                    end = self._finish_in(t)
                    if end is not None:
                        return self._result(end)
                    self._emit(t, P[w])
                    state = ("at_vertex", w)
                    continue
                _, t, bary, d = move
            else:
                _, t, bary, came_from = state
                d = -self.grads[t]
                mag = np.linalg.norm(d)
                rates = self.coeffs[t] @ d
                zero = int(np.argmin(bary))
                if mag < FLAT:
                    raise StallError("gradient vanishes on the streamline")
                if rates[zero] <= 0:
                    # valley: the flow folds back onto the edge, slide along it
                    f = mesh.faces[t]
                    ends = [int(f[(zero + 1) % 3]), int(f[(zero + 2) % 3])]
                    w = ends[int(np.argmin(self.g[ends]))]
                    self._visit(t)
                    end = self._finish_in(t)
                    if end is not None:
                        return self._result(end)
                    self._emit(t, P[w])
                    state = ("at_vertex", w)
                    continue
            self._visit(t)
            end = self._finish_in(t)
            if end is not None:
                return self._result(end)
            nb = self._cross(t, bary, d)
            f = mesh.faces[t]
            p = nb @ P[f]
            self._emit(t, p)
            near = np.flatnonzero(nb > 1.0 - SNAP)
            if len(near):
                state = ("at_vertex", int(f[near[0]]))
                self.points[-1] = P[f[near[0]]].copy()
                continue
            # exit through the edge opposite the vanished corner
            k = int(np.argmin(nb))
            a, b = int(f[(k + 1) % 3]), int(f[(k + 2) % 3])
            e = mesh.edge_index(a, b)
            t2 = int(mesh.edge_faces[e, 0] if mesh.edge_faces[e, 1] == t else mesh.edge_faces[e, 1])
            if t2 < 0:
                raise StallError("streamline left the surface through a boundary edge")
            f2 = mesh.faces[t2]
            b2 = np.zeros(3)
            b2[int(np.flatnonzero(f2 == a)[0])] = nb[(k + 1) % 3]
            b2[int(np.flatnonzero(f2 == b)[0])] = nb[(k + 2) % 3]
            state = ("on_edge", t2, b2, t)
        raise LoopError("streamline exceeded the step limit")

    def _result(self, end):
        return Streamline(np.array(self.points), np.array(self.faces, dtype=np.int64), int(end))


def trace_streamline(mesh, gradop: GradientOperator, u, start: int, stop, face_visit_cap: int = 4) -> Streamline:
    """Steepest-ascent path of ``u`` from vertex ``start`` into the ``stop`` set.

    Segments are traced exactly across each face. Entering a face that
    holds a stop vertex finishes with a straight segment to it.
    """
    stop = np.asarray(stop)
    if stop.dtype != bool:
        mask = np.zeros(mesh.n_vertices, dtype=bool)
        mask[stop] = True
        stop = mask
    if not stop.any():
        raise InvalidParameter("stop set is empty")
    if not 0 <= start < mesh.n_vertices:
        raise InvalidParameter("start vertex out of range")
    return _Tracer(mesh, gradop, u, stop, face_visit_cap).trace(int(start))


# --------------------------------------------------------------------------
# passes
# --------------------------------------------------------------------------
STEINER_POINTS = 2  # extra nodes per edge for the closing path


def _steiner_edges(mesh, faces, k: int = STEINER_POINTS):
    """Straight segments between all nodes of each face: the vertices plus
    ``k`` evenly spaced points per edge (node ``nv + e * k + j``)."""
    nv = mesh.n_vertices
    fe = mesh.face_edges[faces]
    nodes = np.concatenate([mesh.faces[faces], (nv + fe[:, :, None] * k + np.arange(k)).reshape(len(faces), -1)], axis=1)
    ii, jj = np.triu_indices(nodes.shape[1], 1)
    return nodes[:, ii].reshape(-1), nodes[:, jj].reshape(-1), np.repeat(faces, len(ii)), nodes


def _steiner_positions(mesh, ids, k: int = STEINER_POINTS):
    nv = mesh.n_vertices
    ids = np.asarray(ids)
    out = np.empty((len(ids), 3))
    isv = ids < nv
    out[isv] = mesh.vertices[ids[isv]]
    e, j = np.divmod(ids[~isv] - nv, k)
    t = (j + 1) / (k + 1)
    p0, p1 = mesh.vertices[mesh.edges[e, 0]], mesh.vertices[mesh.edges[e, 1]]
    out[~isv] = p0 + t[:, None] * (p1 - p0)
    return out


def _close_loop(mesh, line: Streamline, target: int, region) -> SurfaceLoop:
    """Close the streamline across the wall with the shortest short-cut.

    Both ends of the streamline lie in ``region`` (the wall and its two
    sides). The loop keeps the streamline between some point ``i`` near
    its start and some point ``j`` near its end and joins ``j`` back to
    ``i`` by a shortest path through the region's faces; the plain closure
    from the end back to the first hit is one of the candidates.
    """
    faces = np.flatnonzero(region[mesh.faces].all(axis=1))
    # cut points may sit one face outside the region
    in_region = region[mesh.faces].any(axis=1)
    pts, hosts = line.points, np.asarray(line.faces)
    n = len(pts) - 1
    cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])

    def point_faces(i):
        fs = {int(hosts[i])} if i < n else set()
        if i > 0:
            fs.add(int(hosts[i - 1]))
        return sorted(fs)

    # candidate cut points: the two ends, and points on faces touching the region
    head = [i for i in range(n // 2 + 1) if i == 0 or any(in_region[f] for f in point_faces(i))]
    tail = [j for j in range(n // 2 + 1, n + 1) if j == n or any(in_region[f] for f in point_faces(j))]
    extra = {f for i in head + tail for f in point_faces(i)}
    faces = np.union1d(faces, np.fromiter(extra, dtype=np.int64))

    a, b, host, _ = _steiner_edges(mesh, faces)
    a, b, host = list(a), list(b), list(host)
    vbase = mesh.n_vertices + mesh.n_edges * STEINER_POINTS
    src = vbase + n + 1  # super source
    w_extra, is_tail = [], []
    for idx in head + tail:
        for f in point_faces(idx):
            nodes = np.concatenate([mesh.faces[f], mesh.n_vertices + mesh.face_edges[f][:, None] * STEINER_POINTS + np.arange(STEINER_POINTS)], axis=None)
            a += [vbase + idx] * len(nodes)
            b += list(nodes)
            host += [f] * len(nodes)
            w_extra += list(np.linalg.norm(_steiner_positions(mesh, nodes) - pts[idx], axis=1))
            is_tail += [idx in tail] * len(nodes)
    a, b = np.array(a), np.array(b)
    used, inv = np.unique(np.concatenate([a, b, [vbase + j for j in tail], [src]]), return_inverse=True)
    la, lb = inv[: len(a)], inv[len(a) : 2 * len(a)]
    pos = np.zeros((len(used), 3))
    real = used < vbase
    pos[real] = _steiner_positions(mesh, used[real])
    w = np.zeros(len(a))
    m_base = len(a) - len(w_extra)
    w[:m_base] = np.linalg.norm(pos[la[:m_base]] - pos[lb[:m_base]], axis=1)
    w[m_base:] = w_extra
    w = np.maximum(w, 1e-300)
    # directed graph: face segments both ways, links out of tail points
    # and into head points only (so no point is a stepping stone), and the
    # super source into every tail point j at the kept length cum[j]; the
    # loop through head point i then has length dist[i] - cum[i]
    lt = inv[2 * len(a) : 2 * len(a) + len(tail)]
    ls = inv[-1]
    out_of = np.zeros(len(a), dtype=bool)
    out_of[m_base:] = is_tail
    into = np.zeros(len(a), dtype=bool)
    into[m_base:] = ~np.array(is_tail, dtype=bool)
    fwd = ~into  # a -> b: face segments and tail links
    bwd = ~out_of  # b -> a: face segments and head links
    rows = np.concatenate([la[fwd], lb[bwd], np.full(len(tail), ls)])
    cols = np.concatenate([lb[fwd], la[bwd], lt])
    data = np.concatenate([w[fwd], w[bwd], np.maximum(cum[np.array(tail)], 1e-300)])
    G = sparse.coo_matrix((data, (rows, cols)), shape=(len(used), len(used))).tocsr()
    dist, pred = csgraph.dijkstra(G, directed=True, indices=ls, return_predecessors=True)
    where = {int(u): k for k, u in enumerate(used)}
    best, best_i = np.inf, None
    for i in head:
        d = dist[where[vbase + i]] - cum[i]
        if d < best:
            best, best_i = d, i
    if best_i is None or not np.isfinite(best):
        raise Unreachable("cannot close the streamline across the wall")
    chain = [where[vbase + best_i]]
    while chain[-1] != ls:
        chain.append(pred[chain[-1]])
    chain = [int(used[c]) for c in chain[::-1][1:]]  # tail point ... head point
    j = chain[0] - vbase
    inner = chain[1:-1]
    if any(c >= vbase for c in inner):
        raise LoopError("closure path passes through another streamline point")
    key = {}
    for x, y, f in zip(a, b, host):
        key.setdefault((min(x, y), max(x, y)), f)
    hop_faces = [key[(min(x, y), max(x, y))] for x, y in zip(chain[:-1], chain[1:])]
    points = np.vstack([pts[best_i : j + 1], _steiner_positions(mesh, inner), pts[best_i]])
    seg_faces = list(hosts[best_i:j]) + hop_faces
    seg_faces.append(seg_faces[0])
    loop = loop_from_polyline(mesh, points, np.array(seg_faces))
    loop.meta.update(trimmed=(best_i, n - j))
    return loop


def _run_pass(mesh, gradop, sides: LoopSides, allowed, cfg: PassConfig, kind: str):
    source = sides.left & allowed
    barrier = sides.wall
    adj = mesh.adjacency
    near_left = (adj @ sides.left.astype(np.int8)) > 0
    target = sides.right & ~near_left & allowed
    if not target.any():
        target = sides.right & allowed
    if not source.any() or not target.any():
        raise Unreachable(f"{kind} pass: one side of the loop is empty")
    state = ScalarDiffusionState.create(mesh.n_vertices, source, barrier, allowed, target)
    op = pass_operator(mesh, state, cfg)
    state, hit = scalar_diffuse(mesh, op, state, cfg)
    T = state.arrival.copy()
    finite = np.isfinite(T)
    T[~finite] = T[finite].max() * 2 + 1.0
    line = trace_streamline(mesh, gradop, -T, hit, source, cfg.face_visit_cap)
    # one extra ring gives the closing path room to run straight
    region = mesh.dilate(sides.left | sides.right | sides.wall, 1)
    loop = _close_loop(mesh, line, hit, region)
    loop.meta.update(steps=state.steps, first_hit=hit, streamline_length=line.length)
    return loop


def tunnel_pass(mesh, op, gradop: GradientOperator, estimate: SurfaceLoop, covered, cfg: PassConfig | None = None) -> SurfaceLoop:
    """Loop crossing a handle estimate once, found inside the covered region.

    The front starts on the high (covered) side of the estimate; the
    estimate's snapped cycle is a wall and the run is restricted to the
    covered snapshot plus a thin collar around the wall.
    """
    cfg = cfg or PassConfig()
    sides = loop_sides(mesh, estimate)
    collar = np.zeros(mesh.n_vertices, dtype=bool)
    collar[sides.cycle] = True
    allowed = np.asarray(covered, dtype=bool) | mesh.dilate(collar, cfg.allowed_dilation)
    return _run_pass(mesh, gradop, sides, allowed, cfg, "tunnel")


def handle_refine_pass(mesh, op, gradop: GradientOperator, tunnel: SurfaceLoop, cfg: PassConfig | None = None) -> SurfaceLoop:
    """Shorter handle loop found by diffusing across a tunnel loop over the whole surface."""
    cfg = cfg or PassConfig()
    sides = loop_sides(mesh, tunnel)
    return _run_pass(mesh, gradop, sides, np.ones(mesh.n_vertices, dtype=bool), cfg, "handle")


# --------------------------------------------------------------------------
# classification
# --------------------------------------------------------------------------
# Length change per unit offset, dL / epsilon, is the integral of normal
# curvature across the loop: 2 pi for any tube circle, 0 on a flat patch.
# Below this the offset test cannot tell the two kinds apart.
AMBIGUITY = 0.05


def _offset(mesh, loop: SurfaceLoop, epsilon: float | None):
    if epsilon is None:
        tri = mesh.faces[loop.anchor_faces]
        epsilon = 0.01 * _mean_incident_edge(mesh, tri)
    if not epsilon > 0:
        raise InvalidParameter("epsilon must be positive")
    n = np.einsum("nk,nkd->nd", loop.barycentric, mesh.vertex_normals[mesh.faces[loop.anchor_faces]])
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    moved = loop.points + epsilon * n
    L0 = loop.length
    L1 = float(np.linalg.norm(np.diff(moved, axis=0), axis=1).sum())
    return L1 - L0, L0, epsilon


def offset_change(mesh, loop: SurfaceLoop, epsilon: float | None = None) -> float:
    """Relative length change when the loop is pushed outwards along the normals."""
    dL, L0, _ = _offset(mesh, loop, epsilon)
    return dL / L0


def offset_rate(mesh, loop: SurfaceLoop, epsilon: float | None = None) -> float:
    """Length change per unit offset; resolution independent."""
    dL, _, eps = _offset(mesh, loop, epsilon)
    return dL / eps


def _mean_incident_edge(mesh, tri) -> float:
    v = np.unique(tri)
    e = mesh.edges
    inc = np.isin(e[:, 0], v) | np.isin(e[:, 1], v)
    return float(mesh.edge_lengths[inc].mean())


def classify_loop(mesh, loop: SurfaceLoop, epsilon: float | None = None, strict: bool = False) -> LoopKind:
    """Handle if the loop grows when offset outwards, tunnel if it shrinks."""
    rate = offset_rate(mesh, loop, epsilon)
    if abs(rate) < AMBIGUITY:
        if strict:
            raise Ambiguous(f"length change per unit offset {rate:.2e} below {AMBIGUITY:g}")
        warnings.warn(f"ambiguous loop classification (rate {rate:.2e}); defaulting to handle", stacklevel=2)
        return LoopKind.HANDLE
    return LoopKind.HANDLE if rate > 0 else LoopKind.TUNNEL


def classify_pair(mesh, first: SurfaceLoop, second: SurfaceLoop, epsilon: float | None = None):
    """Kinds for the two loops of a pair, forced to one handle and one tunnel.

    Each loop is classified on its own; if both land on the same kind the
    loop with the larger growth rate is the handle. Returns the two
    kinds and a list of warnings.
    """
    notes = []
    r1, r2 = offset_rate(mesh, first, epsilon), offset_rate(mesh, second, epsilon)
    k1 = LoopKind.HANDLE if r1 > 0 else LoopKind.TUNNEL
    k2 = LoopKind.HANDLE if r2 > 0 else LoopKind.TUNNEL
    for r in (r1, r2):
        if abs(r) < AMBIGUITY:
            notes.append(f"ambiguous classification (length change per unit offset {r:.2e})")
    if k1 == k2:
        notes.append("both loops classified alike; ordered by offset growth")
        k1, k2 = (LoopKind.HANDLE, LoopKind.TUNNEL) if r1 >= r2 else (LoopKind.TUNNEL, LoopKind.HANDLE)
    return k1, k2, notes
