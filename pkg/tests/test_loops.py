import warnings

import numpy as np
import pytest

from conftest import mesh, pipeline
from loopshrink import LoopKind, assemble_gradient, classify_loop, extract_isoline, generate_sphere, generate_torus, handle_refine_pass, tunnel_pass
from loopshrink.curves import barycentric_coords
from loopshrink.errors import Ambiguous, DegenerateLevel, InvalidParameter, Unreachable
from loopshrink.loops import ScalarDiffusionState, classify_pair, loop_sides, scalar_diffuse, trace_streamline
from loopshrink.mesh import generate_disk, generate_strip
from oracles import circle_length, polyline_length, regular_tetrahedron


def major_angle(m):
    return np.arctan2(m.vertices[:, 1], m.vertices[:, 0])


def tube_circle(m, angle=np.pi / 2):
    """Tube cross-section at a major angle, as an isoline of cos(u - angle)."""
    loops = extract_isoline(np.sin(major_angle(m) - angle + np.pi / 2) * -1, 0.0, m)
    return min(loops, key=lambda lp: np.linalg.norm(lp.centroid - [np.cos(angle) * 2, np.sin(angle) * 2, 0]))


def segments_share_faces(m, loop, tol=1e-9):
    """Point k+1 lies in the face hosting segment k."""
    b = barycentric_coords(m, loop.anchor_faces[:-1], loop.points[1:])
    return bool(np.all(b > -tol))


# --- isolines -------------------------------------------------------------
def test_disk_isoline_circle():
    m = generate_disk(24)
    d = np.linalg.norm(m.vertices, axis=1)
    loops = extract_isoline(d, 0.5 * d.max(), m)
    assert len(loops) == 1
    assert abs(loops[0].length - circle_length(0.5)) / circle_length(0.5) < 0.05
    assert abs(loops[0].length - polyline_length(loops[0].points)) < 1e-12


def test_isoline_empty_and_degenerate():
    m = generate_torus(16, 8)
    assert extract_isoline(np.zeros(m.n_vertices), 0.5, m) == []
    with pytest.raises(DegenerateLevel):
        extract_isoline(np.zeros(m.n_vertices), np.nan, m)
    with pytest.raises(InvalidParameter):
        extract_isoline(np.zeros(3), 0.5, m)


def test_isoline_through_vertices_is_watertight():
    # level hits vertex values exactly; the perturbation keeps loops closed
    m = generate_torus(32, 16)
    loops = extract_isoline(np.round(np.cos(major_angle(m)), 12), 0.0, m)
    assert len(loops) == 2
    for lp in loops:
        assert np.array_equal(lp.points[0], lp.points[-1])
        assert segments_share_faces(m, lp)


def test_torus_cannoli_two_loops():
    m = generate_torus(32, 16)
    u = major_angle(m)
    vals = np.clip((0.6 - np.abs(u)) / 0.35 + 0.5, 0, 1)
    assert len(extract_isoline(vals, 0.5, m)) == 2


def test_isoline_high_side_on_left():
    m = generate_torus(32, 16)
    u = major_angle(m)
    vals = np.cos(u)
    for lp in extract_isoline(vals, 0.0, m):
        sides = loop_sides(m, lp)
        assert vals[sides.left].mean() > 0 > vals[sides.right].mean()


# --- scalar diffusion -----------------------------------------------------
def test_scalar_diffuse_tiny():
    from loopshrink import TriangleMesh

    m = TriangleMesh(*regular_tetrahedron())
    src = np.array([True, False, False, False])
    bar = np.array([False, False, False, True])
    state = ScalarDiffusionState.create(4, src, bar)
    state, hit = scalar_diffuse(m, None, state)
    assert hit in (1, 2)
    assert state.u[0] == 1.0 and state.u[3] == 0.0
    assert state.arrival[hit] > 0


def test_scalar_diffuse_barrier_encloses_source():
    m = generate_torus(16, 8)
    src = np.zeros(m.n_vertices, dtype=bool)
    src[10] = True
    bar = np.zeros(m.n_vertices, dtype=bool)
    bar[m.vertex_neighbors(10)] = True
    with pytest.raises(Unreachable):
        scalar_diffuse(m, None, ScalarDiffusionState.create(m.n_vertices, src, bar))


def test_scalar_state_validation():
    with pytest.raises(InvalidParameter):
        ScalarDiffusionState.create(3, [True, False, False], [True, False, False])
    with pytest.raises(InvalidParameter):
        ScalarDiffusionState.create(3, [False] * 3, [True, False, False])


def test_tunnel_first_hit_on_inner_equator():
    m = generate_torus(32, 16)
    p = pipeline("torus32").pairs[0]
    hit = p.tunnel.meta["first_hit"]
    radial = np.hypot(*m.vertices[hit, :2])
    assert abs(radial - 1.5) < 0.1


# --- streamlines ----------------------------------------------------------
def test_streamline_linear_ramp_straight():
    m = generate_strip(4.0, 1.0, 16, 4)
    g = assemble_gradient(m)
    x, y = m.vertices[:, 0], m.vertices[:, 1]
    start = int(np.flatnonzero((x == 0) & (np.abs(y - 0.5) < 1e-12))[0])
    stop = x > 4 - 1e-9
    line = trace_streamline(m, g, x, start, stop)
    assert np.abs(line.points[:, 1] - 0.5).max() < 1e-6
    assert np.abs(line.points[:, 2]).max() < 1e-12
    assert line.points[-1, 0] == pytest.approx(4.0)
    assert line.length == pytest.approx(4.0, abs=1e-6)


def test_streamline_oblique_ramp():
    m = generate_strip(4.0, 4.0, 16, 16)
    g = assemble_gradient(m)
    c = np.array([1.0, 0.37, 0])
    u = m.vertices @ c
    start = 0
    stop = m.vertices[:, 0] > 3.5
    line = trace_streamline(m, g, u, start, stop)
    d = line.points[:-1] - m.vertices[start]
    # every traced point is on the ray along c (last segment snaps to the stop vertex)
    cross = d[:, 0] * c[1] - d[:, 1] * c[0]
    assert np.abs(cross).max() < 1e-6


def test_streamline_start_in_stop():
    m = generate_strip()
    g = assemble_gradient(m)
    line = trace_streamline(m, g, m.vertices[:, 0], 3, [3, 4])
    assert len(line) == 0 and line.length == 0.0


# --- passes ---------------------------------------------------------------
def test_torus_pair_lengths():
    p = pipeline("torus").pairs[0]
    assert abs(p.tunnel.length - 3 * np.pi) / (3 * np.pi) < 0.15
    assert abs(p.handle.length - np.pi) / np.pi < 0.15
    assert p.handle.kind is LoopKind.HANDLE and p.tunnel.kind is LoopKind.TUNNEL


def test_loops_lie_on_surface():
    for name in ("torus", "g2"):
        m = mesh(name)
        for p in pipeline(name).pairs:
            for lp in (p.handle, p.tunnel, p.handle_estimate):
                assert lp.anchor_error(m) < 1e-9
                assert np.array_equal(lp.points[0], lp.points[-1])
                assert lp.length > 0
                assert segments_share_faces(m, lp)


def test_sphere_estimate_unreachable():
    m = generate_sphere(3)
    est = extract_isoline(m.vertices[:, 2], 0.0, m)[0]
    with pytest.raises(Unreachable):
        tunnel_pass(m, None, assemble_gradient(m), est, np.ones(m.n_vertices, dtype=bool))


def skewed_estimate(m, amp=0.6):
    u, v = major_angle(m), np.arctan2(m.vertices[:, 2], np.hypot(*m.vertices[:, :2].T) - 2.0)
    return extract_isoline(np.cos(u - amp * np.sin(v)), 0.0, m)[0]


def test_refine_shortens_skewed_estimate():
    m = generate_torus(32, 16, 2.0, 0.5)
    g = assemble_gradient(m)
    est = skewed_estimate(m)
    assert est.length > 1.2 * np.pi
    tunnel = tunnel_pass(m, None, g, est, np.ones(m.n_vertices, dtype=bool))
    handle = handle_refine_pass(m, None, g, tunnel)
    assert handle.length < est.length


def test_refine_keeps_optimal_estimate():
    m = generate_torus(32, 16, 2.0, 0.5)
    g = assemble_gradient(m)
    est = tube_circle(m)
    tunnel = tunnel_pass(m, None, g, est, np.ones(m.n_vertices, dtype=bool))
    handle = handle_refine_pass(m, None, g, tunnel)
    assert abs(handle.length - est.length) / est.length < 0.05


def test_two_hole_tunnels_distinct():
    from loopshrink import PipelineConfig, run_pipeline
    from loopshrink.mesh import generate_holed_plate

    m = generate_holed_plate(2)
    res = run_pipeline(m, PipelineConfig(mode="loops"))
    assert len(res.pairs) == 2
    a, b = (p.tunnel for p in res.pairs)
    assert a.hausdorff(b) >= 0.1 * m.bbox_diagonal


def test_median_refined_not_longer():
    runs = [pipeline("torus32", s) for s in (0, 77, 301)] + [pipeline("g2")]
    refined = [p.handle.length for r in runs for p in r.pairs]
    est = [p.handle_estimate.length for r in runs for p in r.pairs]
    assert np.median(refined) <= np.median(est)


# --- classification -------------------------------------------------------
def test_classify_tube_circle_handle():
    m = generate_torus(32, 16)
    assert classify_loop(m, tube_circle(m), strict=True) is LoopKind.HANDLE


def test_classify_inner_equator_tunnel():
    m = generate_torus(32, 16)
    rad = np.hypot(*m.vertices[:, :2].T)
    loops = extract_isoline(rad, 1.55, m)
    assert len(loops) == 2
    for lp in loops:
        assert classify_loop(m, lp, strict=True) is LoopKind.TUNNEL


def test_classify_flat_circle_ambiguous():
    m = generate_disk(16)
    d = np.linalg.norm(m.vertices, axis=1)
    lp = extract_isoline(d, 0.5, m)[0]
    with pytest.raises(Ambiguous):
        classify_loop(m, lp, strict=True)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert classify_loop(m, lp) is LoopKind.HANDLE
    assert w


def test_classify_pair_forces_one_of_each():
    m = generate_torus(32, 16)
    c = tube_circle(m)
    k1, k2, notes = classify_pair(m, c, c)
    assert {k1, k2} == {LoopKind.HANDLE, LoopKind.TUNNEL} and notes


def test_offset_rate_resolution_independent():
    # a tube circle grows at 2 pi per unit offset whatever the mesh size
    from loopshrink.loops import offset_rate

    for nu, nv in ((32, 16), (96, 48)):
        m = generate_torus(nu, nv, 2.0, 0.5)
        assert abs(offset_rate(m, tube_circle(m)) - 2 * np.pi) / (2 * np.pi) < 0.05
