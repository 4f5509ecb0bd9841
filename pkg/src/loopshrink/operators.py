"""Linear finite element operators on triangle meshes.

The Laplacian is the cotangent stiffness matrix ``K`` (positive
semi-definite, zero row sums) normalised by barycentric lumped masses:
``L = -M^{-1} K`` approximates the Laplace-Beltrami operator, so that
``L @ u`` has the sign convention of ``div grad u``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import DegeneracyError, DimensionMismatch, InvalidParameter
from .mesh import TriangleMesh


@dataclass(frozen=True)
class LaplacianOperator:
    stiffness: sparse.csr_matrix  # K, symmetric PSD
    mass: np.ndarray  # lumped vertex areas
    L: sparse.csr_matrix  # -M^-1 K
    edge_weights: np.ndarray  # 1/2 (cot a + cot b), aligned with mesh.edges

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def scaled(self, factor: float) -> "LaplacianOperator":
        """Operator for the mesh uniformly scaled by ``1/sqrt(factor)``.

        Scaling lengths by ``s`` multiplies the normalised Laplacian by
        ``1/s**2``; stiffness is scale invariant and masses scale by ``s**2``.
        """
        return LaplacianOperator(self.stiffness, self.mass / factor, (self.L * factor).tocsr(), self.edge_weights)

    def gershgorin_bound(self) -> float:
        """Upper bound on the spectral radius of ``L`` (max absolute row sum)."""
        absL = abs(self.L)
        return float(np.asarray(absL.sum(axis=1)).max())

    @property
    def LT(self) -> sparse.csr_matrix:
        lt = self.__dict__.get("_LT")
        if lt is None:
            lt = self.L.T.tocsr()
            lt.sort_indices()
            object.__setattr__(self, "_LT", lt)
        return lt


def cotangents(mesh: TriangleMesh) -> np.ndarray:
    """Cotangent of the interior angle at each face corner, shape (F, 3)."""
    p = mesh.vertices[mesh.faces]
    cot = np.empty((mesh.n_faces, 3))
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cross = np.linalg.norm(np.cross(a, b), axis=1)
        cot[:, k] = np.einsum("ij,ij->i", a, b) / cross
    return cot


def assemble_laplacian(mesh: TriangleMesh, face_mask=None) -> LaplacianOperator:
    """Cotangent Laplacian with barycentric lumped masses.

    With ``face_mask`` only the selected faces contribute, which gives the
    operator of that sub-surface with natural (no-flux) boundary
    conditions. Vertices without any selected face get infinite mass and
    a zero row.
    """
    cot = cotangents(mesh)
    if not np.all(np.isfinite(cot)):
        raise DegeneracyError("non-finite cotangent weight")
    f = mesh.faces
    areas = mesh.face_areas
    if face_mask is not None:
        face_mask = np.asarray(face_mask, dtype=bool)
        f, cot, areas = f[face_mask], cot[face_mask], areas[face_mask]
    nv = mesh.n_vertices
    # the angle at corner k is opposite the edge (k+1, k+2)
    i = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
    j = np.concatenate([f[:, 2], f[:, 0], f[:, 1]])
    w = 0.5 * np.concatenate([cot[:, 0], cot[:, 1], cot[:, 2]])
    W = sparse.coo_matrix((np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(nv, nv))
    W = W.tocsr()
    W.sum_duplicates()
    # exact symmetry regardless of summation order
    W = ((W + W.T) * 0.5).tocsr()
    diag = np.asarray(W.sum(axis=1)).ravel()
    K = (sparse.diags(diag) - W).tocsr()
    K.sort_indices()

    mass = np.zeros(nv)
    third = areas / 3.0
    for k in range(3):
        np.add.at(mass, f[:, k], third)
    with np.errstate(divide="ignore"):
        inv_mass = np.where(mass > 0, 1.0 / np.where(mass > 0, mass, 1.0), 0.0)
    mass[mass == 0] = np.inf

    L = (-sparse.diags(inv_mass) @ K).tocsr()
    L.eliminate_zeros()
    L.sort_indices()

    e = mesh.edges
    edge_w = np.asarray(W[e[:, 0], e[:, 1]]).ravel()
    return LaplacianOperator(K, mass, L, edge_w)


def apply_laplacian(op: LaplacianOperator, fields) -> sparse.csr_matrix:
    """Row-wise Laplacian of a (layers x V) sparse field matrix."""
    if fields.shape[1] != op.n:
        raise DimensionMismatch(f"fields have {fields.shape[1]} columns, operator has {op.n}")
    out = sparse.csr_matrix(fields) @ op.LT
    out.sort_indices()
    return out


@dataclass(frozen=True)
class GradientOperator:
    """Per-face linear maps from corner values to the in-plane gradient.

    ``coeffs[t, k]`` is the gradient of the hat function of corner ``k``
    on face ``t``, so ``grad = sum_k u[faces[t, k]] * coeffs[t, k]``.
    """

    coeffs: np.ndarray  # (F, 3, 3)
    faces: np.ndarray

    def gradients(self, field: np.ndarray) -> np.ndarray:
        """Gradient vectors of a per-vertex field on every face, shape (F, 3)."""
        return np.einsum("tk,tkd->td", field[self.faces], self.coeffs)


def assemble_gradient(mesh: TriangleMesh) -> GradientOperator:
    p = mesh.vertices[mesh.faces]
    n = mesh.face_normals
    twice_area = 2.0 * mesh.face_areas
    coeffs = np.empty((mesh.n_faces, 3, 3))
    for k in range(3):
        # edge opposite corner k, in counter-clockwise order
        e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        coeffs[:, k] = np.cross(n, e) / twice_area[:, None]
    return GradientOperator(coeffs, np.asarray(mesh.faces))


def face_gradient(op: GradientOperator, field, face: int) -> np.ndarray:
    field = np.asarray(field, dtype=float)
    if not 0 <= face < len(op.faces):
        raise InvalidParameter(f"face index {face} out of range")
    return field[op.faces[face]] @ op.coeffs[face]


def dump_matrix_market(path, matrix) -> None:
    """Write a sparse matrix for offline inspection."""
    from scipy.io import mmwrite

    mmwrite(str(path), sparse.coo_matrix(matrix))
