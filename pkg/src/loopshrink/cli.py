"""Command line entry point: ``python -m loopshrink --input mesh.off``.

A config file holds ``key = value`` lines (``#`` starts a comment). Keys
are the long option names without dashes, e.g.::

    band-threshold = 0.05
    check-interval = 2
    mode = loops

Command line flags override the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .diffusion import DiffusionConfig
from .errors import LoopShrinkError
from .loops import PassConfig
from .meshio import load_mesh, write_polylines_obj
from .pipeline import PipelineConfig, build_report, run_pipeline
from .reeb import write_dot, write_reeb_obj

EXIT_OK, EXIT_ERROR, EXIT_WARN = 0, 1, 2

log = logging.getLogger("loopshrink")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="loopshrink", description="Handle/tunnel loops and Reeb graphs of closed triangle meshes.")
    p.add_argument("--input", "-i", help="OFF, OBJ or PLY mesh")
    p.add_argument("--output-dir", "-o", help="directory for artifacts (default: next to the input)")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed-vertex", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--band-threshold", type=float)
    p.add_argument("--collision-threshold", type=float)
    p.add_argument("--check-interval", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--mode", choices=("loops", "reeb", "both"))
    p.add_argument("--skip-refine", action="store_true", default=None)
    p.add_argument("--snapshots", type=int, metavar="N", help="write a field snapshot every N steps")
    p.add_argument("--jobs", type=int)
    p.add_argument("--verbose", "-v", action="store_true")
    return p


DEFAULTS = {
    "seed_vertex": 0,
    "dt": None,
    "band_threshold": 0.05,
    "collision_threshold": 0.1,
    "check_interval": 1,
    "max_steps": 200_000,
    "mode": "both",
    "skip_refine": False,
    "snapshots": 0,
    "jobs": None,
    "output_dir": None,
    "input": None,
}


def read_config(path) -> dict:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise LoopShrinkError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise LoopShrinkError(f"{path}:{n}: unknown key {key!r}")
        out[key] = val
    return out


def _coerce(key, val):
    if not isinstance(val, str):
        return val
    if key in ("skip_refine",):
        return val.lower() in ("1", "true", "yes", "on")
    if key in ("seed_vertex", "check_interval", "max_steps", "snapshots", "jobs"):
        return int(val)
    if key in ("dt", "band_threshold", "collision_threshold"):
        return float(val)
    return val


def resolve_options(args: argparse.Namespace) -> dict:
    opts = dict(DEFAULTS)
    if args.config:
        opts.update(read_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            opts[key] = val
    return {k: _coerce(k, v) for k, v in opts.items()}


def write_artifacts(out: Path, stem: str, mesh, result, report) -> list[Path]:
    written = []
    if result.pairs:
        loops, names = [], []
        for k, p in enumerate(result.pairs):
            loops += [p.handle.points, p.tunnel.points]
            names += [f"pair{k}_handle", f"pair{k}_tunnel"]
        write_polylines_obj(out / f"{stem}.loops.obj", loops, names)
        written.append(out / f"{stem}.loops.obj")
    if report["config"]["mode"] != "reeb":
        doc = {
            "pairs": [
                {
                    "pair_id": k,
                    "merge_event": p.provenance,
                    "handle": p.handle.to_dict(),
                    "tunnel": p.tunnel.to_dict(),
                    "handle_estimate": p.handle_estimate.to_dict(),
                }
                for k, p in enumerate(result.pairs)
            ]
        }
        (out / f"{stem}.loops.json").write_text(json.dumps(doc))
        written.append(out / f"{stem}.loops.json")
    if result.reeb is not None:
        write_dot(out / f"{stem}.reeb.dot", result.reeb)
        write_reeb_obj(out / f"{stem}.reeb.obj", result.reeb)
        written += [out / f"{stem}.reeb.dot", out / f"{stem}.reeb.obj"]
    (out / f"{stem}.report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    written.append(out / f"{stem}.report.json")
    return written


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        opts = resolve_options(args)
        if not opts["input"]:
            raise LoopShrinkError("--input is required")
        src = Path(opts["input"])
        out = Path(opts["output_dir"]) if opts["output_dir"] else src.parent
        out.mkdir(parents=True, exist_ok=True)
        stem = src.stem
        mesh = load_mesh(src)
        diff = DiffusionConfig(
            dt=opts["dt"],
            band_threshold=opts["band_threshold"],
            collision_threshold=opts["collision_threshold"],
            check_interval=opts["check_interval"],
            max_steps=opts["max_steps"],
            snapshot_every=opts["snapshots"],
            snapshot_prefix=str(out / stem) if opts["snapshots"] else None,
        )
        cfg = PipelineConfig(diff, PassConfig(), opts["seed_vertex"], opts["mode"], opts["skip_refine"], opts["jobs"])
        log.info("%s: V=%d F=%d", src.name, mesh.n_vertices, mesh.n_faces)
        result = run_pipeline(mesh, cfg)
        report = build_report(mesh, cfg, result, str(src))
        for path in write_artifacts(out, stem, mesh, result, report):
            log.info("wrote %s", path)
    except (LoopShrinkError, ValueError, OSError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_ERROR
    for w in result.warnings:
        log.warning(w)
    log.info("genus %d, %d pairs", result.genus, len(result.pairs))
    return EXIT_WARN if result.warnings else EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
