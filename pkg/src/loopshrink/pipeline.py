"""End-to-end run: initial pass, per-pair tunnel and handle passes, Reeb graph."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .curves import LoopKind
from .diffusion import DiffusionConfig, InitialPassResult, run_initial_pass
from .errors import LoopShrinkError
from .loops import HandleTunnelPair, PassConfig, classify_pair, handle_refine_pass, tunnel_pass
from .mesh import topology_summary
from .operators import assemble_gradient, assemble_laplacian
from .reeb import ReebGraph, build_reeb, refine_junctions

log = logging.getLogger(__name__)

MAX_JOBS = 10


@dataclass
class PipelineConfig:
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    passes: PassConfig = field(default_factory=PassConfig)
    seed_vertex: int = 0
    mode: str = "both"  # loops, reeb or both
    skip_refine: bool = False
    jobs: int | None = None

    def __post_init__(self):
        if self.mode not in ("loops", "reeb", "both"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class PipelineResult:
    genus: int
    initial: InitialPassResult
    pairs: list[HandleTunnelPair]
    reeb: ReebGraph | None
    warnings: list[str]
    timings: dict
    pass_steps: dict

    @property
    def ok(self) -> bool:
        return not self.warnings


def _one_pair(mesh, gradop, est, k, cfg: PipelineConfig):
    t0 = time.perf_counter()
    tunnel = tunnel_pass(mesh, None, gradop, est.loop, est.covered, cfg.passes)
    t1 = time.perf_counter()
    if cfg.skip_refine:
        handle = est.loop
    else:
        handle = handle_refine_pass(mesh, None, gradop, tunnel, cfg.passes)
    t2 = time.perf_counter()
    kh, kt, notes = classify_pair(mesh, handle, tunnel)
    if kh is LoopKind.TUNNEL:
        notes.append(f"pair {k}: refined handle classified as tunnel; loops swapped")
        handle, tunnel = tunnel, handle
    pair = HandleTunnelPair(
        handle.with_kind(LoopKind.HANDLE, k),
        tunnel.with_kind(LoopKind.TUNNEL, k),
        est.event,
        est.loop.with_kind(LoopKind.UNCLASSIFIED, k),
        {
            "tunnel_steps": int(tunnel.meta.get("steps", 0)),
            "handle_steps": 0 if cfg.skip_refine else int(handle.meta.get("steps", 0)),
            "tunnel_time": t1 - t0,
            "handle_time": t2 - t1,
        },
    )
    return pair, [f"pair {k}: {n}" if not n.startswith("pair") else n for n in notes]


def run_pipeline(mesh, cfg: PipelineConfig | None = None) -> PipelineResult:
    cfg = cfg or PipelineConfig()
    summary = topology_summary(mesh)
    warnings = []
    timings = {}

    t = time.perf_counter()
    op = assemble_laplacian(mesh)
    gradop = assemble_gradient(mesh)
    timings["setup"] = time.perf_counter() - t

    t = time.perf_counter()
    initial = run_initial_pass(mesh, op, cfg.seed_vertex, cfg.diffusion)
    timings["initial_pass"] = time.perf_counter() - t
    estimates = initial.estimates
    if len(estimates) != summary.genus:
        warnings.append(f"found {len(estimates)} handle estimates but the genus is {summary.genus}")

    pairs: list[HandleTunnelPair] = []
    if cfg.mode in ("loops", "both") and estimates:
        jobs = cfg.jobs or min(len(estimates), os.cpu_count() or 1, MAX_JOBS)
        t = time.perf_counter()

        def work(item):
            k, est = item
            try:
                return _one_pair(mesh, gradop, est, k, cfg)
            except LoopShrinkError as exc:
                return None, [f"pair {k}: {type(exc).__name__}: {exc}"]

        if jobs > 1:
            with ThreadPoolExecutor(jobs) as pool:
                results = list(pool.map(work, enumerate(estimates)))
        else:
            results = [work(item) for item in enumerate(estimates)]
        for pair, notes in results:
            warnings.extend(notes)
            if pair is not None:
                pairs.append(pair)
        timings["pair_passes"] = time.perf_counter() - t
        timings["tunnel_pass"] = sum(p.diagnostics["tunnel_time"] for p in pairs)
        timings["handle_pass"] = sum(p.diagnostics["handle_time"] for p in pairs)

    reeb = None
    if cfg.mode in ("reeb", "both"):
        t = time.perf_counter()
        reeb = build_reeb(initial.events, initial.lineage, initial.tracks)
        if pairs and not cfg.skip_refine:
            reeb = refine_junctions(reeb, pairs)
        if reeb.cycle_rank != summary.genus:
            warnings.append(f"Reeb graph cycle rank {reeb.cycle_rank} differs from genus {summary.genus}")
        timings["reeb"] = time.perf_counter() - t

    pass_steps = {
        "initial": int(initial.steps),
        "tunnel": [p.diagnostics["tunnel_steps"] for p in pairs],
        "handle": [p.diagnostics["handle_steps"] for p in pairs],
    }
    return PipelineResult(summary.genus, initial, pairs, reeb, warnings, timings, pass_steps)


def build_report(mesh, cfg: PipelineConfig, result: PipelineResult, source: str | None = None) -> dict:
    """JSON-ready summary; everything except ``timings`` is deterministic."""
    s = topology_summary(mesh)
    diff = asdict(cfg.diffusion)
    passes = asdict(cfg.passes)
    report = {
        "input": source,
        "mesh": {"vertices": s.V, "edges": s.E, "faces": s.F, "euler_characteristic": s.euler_characteristic},
        "genus": s.genus,
        "pair_count": len(result.pairs),
        "handle_estimates": len(result.initial.estimates),
        "pairs": [
            {
                "pair_id": k,
                "merge_event": p.provenance,
                "handle_length": p.handle.length,
                "tunnel_length": p.tunnel.length,
                "estimate_length": p.handle_estimate.length,
                "handle_kind": p.handle.kind.value,
                "tunnel_kind": p.tunnel.kind.value,
            }
            for k, p in enumerate(result.pairs)
        ],
        "events": [
            {
                "kind": ev.kind.value,
                "step": ev.step,
                "consumed": list(ev.consumed),
                "created": list(ev.created),
                "position": np.round(ev.position, 12).tolist(),
            }
            for ev in result.initial.events
        ],
        "steps": result.pass_steps,
        "dt": result.initial.dt,
        "config": {
            "seed_vertex": cfg.seed_vertex,
            "mode": cfg.mode,
            "skip_refine": cfg.skip_refine,
            "jobs": cfg.jobs,
            "diffusion": diff,
            "passes": {k: v for k, v in passes.items() if k != "coefficients"},
            "coefficients": passes["coefficients"],
        },
        "warnings": list(result.warnings),
        "timings": {k: round(v, 6) for k, v in result.timings.items()},
    }
    if result.reeb is not None:
        report["reeb"] = {
            "nodes": result.reeb.n_nodes,
            "edges": result.reeb.n_edges,
            "cycle_rank": result.reeb.cycle_rank,
            "leaves": len(result.reeb.leaves()),
        }
    return report
