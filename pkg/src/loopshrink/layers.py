"""The multi-layer field: a (layers x vertices) CSR matrix with a base layer.

Row ``i`` holds the field of one region. Layer ids are unique for the
lifetime of a :class:`LayerField`; physical rows of cleared layers are
recycled through a free list so the matrix never has to be compacted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import sparse

from .errors import EmptySeed, InvalidMerge, InvalidParameter, InvalidSplit, ZeroColumn

PRUNE_TOL = 1e-9
BASE = 0  # id of the base layer


@dataclass(frozen=True)
class CoefficientScheme:
    """Pairwise interaction coefficients of the evolution equation.

    The values are global scalars, but access goes through the pairwise
    methods so experiments can override them per pair.
    """

    a: float = 1.0 / 25.0
    w_ratio: float = 1.0 / 5.0
    e_base: float = 1.0 / 30.0
    mu_base: float = 1.0 / 4.0

    @property
    def w_offdiag(self) -> float:
        return self.a * self.w_ratio

    def w(self, i: int, j: int) -> float:
        return 0.0 if i == j else self.w_offdiag

    def gradient_coeff(self, i: int, j: int) -> float:
        return 0.0 if i == j else self.a

    def e(self, i: int, j: int, base: int = BASE) -> float:
        # antisymmetric: a region gains from the base what the base loses
        if i != base and j == base:
            return self.e_base
        if i == base and j != base:
            return -self.e_base
        return 0.0

    def mu(self, i: int, j: int, base: int = BASE) -> float:
        return self.mu_base if (i == base) != (j == base) else 0.0


class LayerState(str, Enum):
    ACTIVE = "active"
    FROZEN = "frozen"  # keeps its values, no longer evolves
    CLEARED = "cleared"  # values moved elsewhere, row recycled


@dataclass
class Layer:
    id: int
    row: int
    parents: tuple[int, ...]
    created_step: int
    state: LayerState = LayerState.ACTIVE
    ended_step: int | None = None


@dataclass
class LayerField:
    """Sparse multi-layer field with lineage bookkeeping.

    Use :func:`init_field` to construct one.
    """

    phi: sparse.csr_matrix
    layers: dict[int, Layer]
    coefficients: CoefficientScheme = field(default_factory=CoefficientScheme)
    base_layer_id: int = BASE
    free_rows: list[int] = field(default_factory=list)
    step_index: int = 0
    _next_id: int = 1

    @property
    def n_vertices(self) -> int:
        return self.phi.shape[1]

    # ---------------------------------------------------------------- queries
    def row(self, layer_id: int) -> np.ndarray:
        """Dense copy of one layer's values."""
        r = self.layers[layer_id].row
        return self.phi.getrow(r).toarray().ravel()

    @property
    def base(self) -> np.ndarray:
        return self.row(self.base_layer_id)

    def active_ids(self) -> list[int]:
        """Active non-base layers, in id order."""
        return sorted(
            i for i, lay in self.layers.items() if lay.state is LayerState.ACTIVE and i != self.base_layer_id
        )

    def frozen_ids(self) -> list[int]:
        return sorted(i for i, lay in self.layers.items() if lay.state is LayerState.FROZEN)

    def is_active(self, layer_id: int) -> bool:
        return self.layers[layer_id].state is LayerState.ACTIVE

    def frozen_mass(self) -> np.ndarray:
        """Per-vertex sum of frozen layers."""
        rows = [self.layers[i].row for i in self.frozen_ids()]
        if not rows:
            return np.zeros(self.n_vertices)
        return np.asarray(self.phi[rows].sum(axis=0)).ravel()

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.phi.sum(axis=0)).ravel()

    def dominant_layer(self) -> np.ndarray:
        """Per-vertex id of the layer with the largest value."""
        rows = self.phi.toarray()
        row_to_id = np.full(rows.shape[0], -1)
        for i, lay in self.layers.items():
            if lay.state is not LayerState.CLEARED:
                row_to_id[lay.row] = i
        return row_to_id[np.argmax(rows, axis=0)]

    def lineage(self) -> dict[int, tuple[int, ...]]:
        return {i: lay.parents for i, lay in self.layers.items()}

    # -------------------------------------------------------------- mutation
    def _new_layer(self, values, parents, step) -> int:
        lid = self._next_id
        self._next_id += 1
        if self.free_rows:
            row = self.free_rows.pop(0)
        else:
            row = self.phi.shape[0]
            self.phi = sparse.vstack([self.phi, sparse.csr_matrix((1, self.n_vertices))], format="csr")
        self.layers[lid] = Layer(lid, row, tuple(parents), step)
        self.set_row(lid, values)
        return lid

    def set_row(self, layer_id: int, values) -> None:
        """Replace a layer's values (dense or sparse), pruning tiny entries."""
        r = self.layers[layer_id].row
        v = np.asarray(values.toarray() if sparse.issparse(values) else values, dtype=float).ravel()
        v = np.where(v > PRUNE_TOL, v, 0.0)
        self.set_rows({r: v})

    def set_rows(self, rows: dict[int, np.ndarray]) -> None:
        """Replace several physical rows at once."""
        lil = {r: sparse.csr_matrix(v.reshape(1, -1)) for r, v in rows.items()}
        blocks = []
        for r in range(self.phi.shape[0]):
            blocks.append(lil[r] if r in lil else self.phi[r])
        self.phi = sparse.vstack(blocks, format="csr")
        self.phi.sort_indices()

    def _clear(self, layer_id: int, step: int) -> None:
        lay = self.layers[layer_id]
        self.set_rows({lay.row: np.zeros(self.n_vertices)})
        lay.state = LayerState.CLEARED
        lay.ended_step = step
        self.free_rows.append(lay.row)
        self.free_rows.sort()

    def freeze(self, layer_id: int, step: int | None = None) -> None:
        if layer_id == self.base_layer_id:
            raise InvalidParameter("the base layer cannot be frozen")
        lay = self.layers[layer_id]
        lay.state = LayerState.FROZEN
        lay.ended_step = self.step_index if step is None else step


def init_field(mesh, seed_vertices, coefficients: CoefficientScheme | None = None) -> LayerField:
    """Two-layer field: base is 1 except on the seeds, seed layer is 1 on them."""
    n = mesh.n_vertices if hasattr(mesh, "n_vertices") else int(mesh)
    seeds = np.unique(np.asarray(list(seed_vertices), dtype=np.int64))
    if seeds.size == 0:
        raise EmptySeed("seed set is empty")
    if seeds.min() < 0 or seeds.max() >= n:
        raise InvalidParameter("seed vertex out of range")
    seed_row = np.zeros(n)
    seed_row[seeds] = 1.0
    base_row = 1.0 - seed_row
    phi = sparse.csr_matrix(np.vstack([base_row, seed_row]))
    phi.eliminate_zeros()
    layers = {BASE: Layer(BASE, 0, (), 0), 1: Layer(1, 1, (), 0)}
    return LayerField(phi, layers, coefficients or CoefficientScheme(), _next_id=2)


def normalize_columns(f: LayerField) -> LayerField:
    """Scale every column to sum to one, in place; returns ``f``."""
    sums = f.column_sums()
    if np.any(sums <= 0):
        raise ZeroColumn(f"{int(np.sum(sums <= 0))} vertices carry no field")
    f.phi = (f.phi @ sparse.diags(1.0 / sums)).tocsr()
    f.phi.sort_indices()
    return f


def split_layer(f: LayerField, layer_id: int, components, step: int | None = None) -> list[int]:
    """Move each vertex component of a layer to a fresh row and freeze the parent.

    Values are moved, not copied, so column sums are unchanged. Vertices of
    the layer outside every component stay with the (now frozen) parent.
    """
    step = f.step_index if step is None else step
    comps = [np.unique(np.asarray(list(c), dtype=np.int64)) for c in components]
    if len(comps) < 2:
        raise InvalidSplit("a split needs at least two components")
    if layer_id == f.base_layer_id or not f.is_active(layer_id):
        raise InvalidSplit("only active non-base layers can split")
    seen = np.concatenate(comps)
    if len(np.unique(seen)) != len(seen):
        raise InvalidSplit("components overlap")
    if any(c.size == 0 for c in comps):
        raise InvalidSplit("empty component")
    values = f.row(layer_id)
    children = []
    for c in comps:
        child = np.zeros_like(values)
        child[c] = values[c]
        values[c] = 0.0
        children.append(child)
    f.set_row(layer_id, values)
    f.freeze(layer_id, step)
    return [f._new_layer(child, (layer_id,), step) for child in children]


def merge_layers(f: LayerField, layer_ids, step: int | None = None) -> int:
    """Accumulate several active layers into a single new layer."""
    step = f.step_index if step is None else step
    ids = list(dict.fromkeys(layer_ids))
    if len(ids) < 2 or len(ids) != len(list(layer_ids)):
        raise InvalidMerge("merge needs at least two distinct layers")
    for i in ids:
        if i == f.base_layer_id or not f.is_active(i):
            raise InvalidMerge(f"layer {i} is not an active region layer")
    total = np.zeros(f.n_vertices)
    for i in ids:
        total += f.row(i)
    for i in ids:
        f._clear(i, step)
    return f._new_layer(total, tuple(ids), step)


def covered_set(f: LayerField, threshold: float = 0.5) -> np.ndarray:
    """Boolean mask of vertices where ``1 - base >= threshold``."""
    if not 0 < threshold < 1:
        raise InvalidParameter("threshold must lie in (0, 1)")
    return (1.0 - f.base) >= threshold
