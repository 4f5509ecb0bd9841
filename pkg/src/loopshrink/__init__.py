"""Handle/tunnel loop detection and Reeb graphs by diffuse-interface front tracking."""

from .errors import *  # noqa: F401,F403
from .mesh import (
    MeshTopologySummary,
    TriangleMesh,
    generate_branching,
    generate_genus_g,
    generate_sphere,
    generate_torus,
    perturb,
    topology_summary,
)
from .operators import apply_laplacian, assemble_gradient, assemble_laplacian
from .layers import LayerField, init_field
from .curves import LoopKind, SurfaceLoop, extract_isoline
from .diffusion import DiffusionConfig, EventKind, TopologyEvent, run_initial_pass, step
from .loops import HandleTunnelPair, PassConfig, classify_loop, handle_refine_pass, tunnel_pass
from .reeb import ReebGraph, build_reeb
from .meshio import load_mesh
from .pipeline import PipelineConfig, PipelineResult, run_pipeline

__version__ = "0.1.0"
