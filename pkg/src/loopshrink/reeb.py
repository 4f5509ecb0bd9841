"""Reeb graph of the covering process, built from the initial pass's event log.

Nodes are topology events; every layer becomes an edge from the event that
created it to the event that consumed it.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .diffusion import EventKind, TopologyEvent
from .errors import InconsistentLog


@dataclass
class ReebNode:
    kind: EventKind
    position: np.ndarray
    step: int


@dataclass
class ReebEdge:
    source: int
    target: int
    layer: int
    polyline: np.ndarray | None = None


@dataclass
class ReebGraph:
    nodes: list[ReebNode]
    edges: list[ReebEdge] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n_nodes, dtype=int)
        for e in self.edges:
            deg[e.source] += 1
            deg[e.target] += 1
        return deg

    def n_components(self) -> int:
        parent = list(range(self.n_nodes))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for e in self.edges:
            parent[find(e.source)] = find(e.target)
        return len({find(i) for i in range(self.n_nodes)})

    @property
    def cycle_rank(self) -> int:
        return self.n_edges - self.n_nodes + self.n_components()

    def leaves(self) -> list[int]:
        return [i for i, d in enumerate(self.degree()) if d == 1]

    def is_tree(self) -> bool:
        return self.n_components() == 1 and self.cycle_rank == 0


def build_reeb(events: list[TopologyEvent], lineage: dict | None = None, tracks: dict | None = None) -> ReebGraph:
    """One node per event, one edge per layer from creation to consumption.

    ``lineage`` (layer id -> parent ids) is cross-checked against the log
    when given; ``tracks`` (layer id -> band centroids) become the edge
    polylines.
    """
    nodes = [ReebNode(ev.kind, np.asarray(ev.position, dtype=float), ev.step) for ev in events]
    born, died = {}, {}
    for k, ev in enumerate(events):
        for lid in ev.consumed:
            if lid not in born:
                raise InconsistentLog(f"layer {lid} consumed at event {k} before it was created")
            if lid in died:
                raise InconsistentLog(f"layer {lid} consumed twice")
            died[lid] = k
        for lid in ev.created:
            if lid in born:
                raise InconsistentLog(f"layer {lid} created twice")
            born[lid] = k
            if lineage is not None and tuple(lineage.get(lid, ())) != tuple(ev.consumed):
                raise InconsistentLog(f"lineage of layer {lid} disagrees with the event log")
    missing = set(born) - set(died)
    if missing:
        raise InconsistentLog(f"layers {sorted(missing)} never consumed")
    edges = []
    for lid in sorted(born):
        poly = None
        if tracks and lid in tracks:
            pts = [nodes[born[lid]].position, *tracks[lid], nodes[died[lid]].position]
            poly = np.array(pts)
        edges.append(ReebEdge(born[lid], died[lid], lid, poly))
    return ReebGraph(nodes, edges)


def refine_junctions(graph: ReebGraph, pairs) -> ReebGraph:
    """Move merge nodes to the centroid of their refined handle loops."""
    nodes = list(graph.nodes)
    by_event = {}
    for p in pairs:
        by_event.setdefault(p.provenance, []).append(p.handle.centroid)
    for k, pts in by_event.items():
        if 0 <= k < len(nodes) and nodes[k].kind is EventKind.MERGE:
            nodes[k] = replace(nodes[k], position=np.mean(pts, axis=0))
    edges = []
    for e in graph.edges:
        poly = e.polyline
        if poly is not None:
            poly = poly.copy()
            poly[0] = nodes[e.source].position
            poly[-1] = nodes[e.target].position
        edges.append(replace(e, polyline=poly))
    return ReebGraph(nodes, edges)


def to_dot(graph: ReebGraph) -> str:
    lines = ["graph reeb {"]
    for i, n in enumerate(graph.nodes):
        x, y, z = n.position
        lines.append(f'  n{i} [label="{n.kind.value} @{n.step}", pos="{x:.6g},{y:.6g},{z:.6g}"];')
    for e in graph.edges:
        lines.append(f'  n{e.source} -- n{e.target} [label="layer {e.layer}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_dot(path, graph: ReebGraph) -> None:
    with open(path, "w") as fh:
        fh.write(to_dot(graph))


def write_reeb_obj(path, graph: ReebGraph) -> None:
    """Nodes as OBJ points and edges as polylines (straight when untracked)."""
    from .meshio import write_polylines_obj

    polys, names = [], []
    for e in graph.edges:
        pts = e.polyline if e.polyline is not None else np.array([graph.nodes[e.source].position, graph.nodes[e.target].position])
        polys.append(pts)
        names.append(f"layer{e.layer}")
    write_polylines_obj(path, polys, names)
