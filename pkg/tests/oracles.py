"""Independent reference computations used by the tests.

Nothing here imports the package's operators or curve code; values are
rebuilt from first principles (angles via arccos, dense loops, analytic
formulas) so that agreement is a real cross-check.
"""

import numpy as np


def triangle_angles(p0, p1, p2):
    """Interior angles at the three corners, via arccos of normalized dots."""

    def ang(a, b, c):
        u, v = b - a, c - a
        cosv = np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
        return np.arccos(np.clip(cosv, -1.0, 1.0))

    return ang(p0, p1, p2), ang(p1, p2, p0), ang(p2, p0, p1)


def dense_cotan_stiffness(vertices, faces):
    """Dense K with K_ij = -1/2 (cot alpha + cot beta), zero row sums."""
    n = len(vertices)
    K = np.zeros((n, n))
    for f in faces:
        p = vertices[f]
        angles = triangle_angles(*p)
        for k in range(3):
            i, j = f[(k + 1) % 3], f[(k + 2) % 3]
            w = 0.5 / np.tan(angles[k])
            K[i, j] -= w
            K[j, i] -= w
    K[np.diag_indices(n)] = -K.sum(axis=1)
    return K


def dense_lumped_mass(vertices, faces):
    m = np.zeros(len(vertices))
    for f in faces:
        p = vertices[f]
        area = 0.5 * np.linalg.norm(np.cross(p[1] - p[0], p[2] - p[0]))
        m[f] += area / 3.0
    return m


def dense_laplacian(vertices, faces):
    """-M^-1 K as a dense array."""
    return -dense_cotan_stiffness(vertices, faces) / dense_lumped_mass(vertices, faces)[:, None]


def torus_grid_counts(major, minor):
    """(V, E, F) of a doubly periodic quad grid split into triangles."""
    quads = major * minor
    # each quad adds 3 edges (two sides and the diagonal)
    return quads, 3 * quads, 2 * quads


def circle_length(radius):
    return 2.0 * np.pi * radius


def polyline_length(points):
    return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())


def regular_tetrahedron():
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return v, f


def point_triangle_distance(p, a, b, c):
    """Distance from point p to triangle abc (closest-point region walk)."""
    ab, ac, ap = b - a, c - a, p - a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return np.linalg.norm(ap)
    bp = p - b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return np.linalg.norm(bp)
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        return np.linalg.norm(p - (a + d1 / (d1 - d3) * ab))
    cp = p - c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return np.linalg.norm(cp)
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        return np.linalg.norm(p - (a + d2 / (d2 - d6) * ac))
    va = d3 * d6 - d5 * d4
    if va <= 0 and d4 - d3 >= 0 and d5 - d6 >= 0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return np.linalg.norm(p - (b + w * (c - b)))
    denom = 1.0 / (va + vb + vc)
    return np.linalg.norm(p - (a + ab * vb * denom + ac * vc * denom))


def point_mesh_distance(p, vertices, faces):
    """Brute-force unsigned distance from p to a triangle mesh."""
    p = np.asarray(p, dtype=float)
    return min(point_triangle_distance(p, *vertices[t]) for t in faces)


def winding_number(p, vertices, faces):
    """Generalised winding number of a closed oriented mesh around p (1 inside, 0 outside)."""
    a, b, c = (vertices[faces[:, k]] - p for k in range(3))
    la, lb, lc = (np.linalg.norm(x, axis=1) for x in (a, b, c))
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = la * lb * lc + np.einsum("ij,ij->i", a, b) * lc + np.einsum("ij,ij->i", b, c) * la + np.einsum("ij,ij->i", c, a) * lb
    return float(np.sum(2 * np.arctan2(num, den)) / (4 * np.pi))
