"""Reading and writing OFF, OBJ and PLY meshes, plus polyline OBJ export."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .errors import ParseError
from .mesh import TriangleMesh


def _fan(polys):
    tris = []
    for p in polys:
        if len(p) < 3:
            raise ParseError(f"face with {len(p)} vertices")
        tris.extend((p[0], p[k], p[k + 1]) for k in range(1, len(p) - 1))
    return np.array(tris, dtype=np.int64).reshape(-1, 3)


def _data_lines(text):
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line


def read_off(path):
    lines = _data_lines(Path(path).read_text())
    try:
        head = next(lines)
        if not head.startswith("OFF"):
            raise ParseError("missing OFF header")
        rest = head[3:].split()
        counts = rest if rest else next(lines).split()
        nv, nf = int(counts[0]), int(counts[1])
        verts = [list(map(float, next(lines).split()[:3])) for _ in range(nv)]
        polys = []
        for _ in range(nf):
            tok = next(lines).split()
            k = int(tok[0])
            polys.append([int(t) for t in tok[1 : 1 + k]])
            if len(polys[-1]) != k:
                raise ParseError("truncated face record")
    except StopIteration:
        raise ParseError("unexpected end of OFF file") from None
    except (ValueError, IndexError) as exc:
        raise ParseError(f"malformed OFF data: {exc}") from None
    return np.array(verts, dtype=float).reshape(-1, 3), _fan(polys)


def read_obj(path):
    verts, polys = [], []
    try:
        for line in _data_lines(Path(path).read_text()):
            tok = line.split()
            if tok[0] == "v":
                verts.append([float(t) for t in tok[1:4]])
            elif tok[0] == "f":
                idx = []
                for t in tok[1:]:
                    i = int(t.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(verts) + i)
                polys.append(idx)
    except (ValueError, IndexError) as exc:
        raise ParseError(f"malformed OBJ data: {exc}") from None
    if not verts or not polys:
        raise ParseError("OBJ file has no vertices or no faces")
    return np.array(verts, dtype=float), _fan(polys)


_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}  # fmt: skip


def _ply_header(raw):
    end = raw.find(b"end_header")
    if not raw.startswith(b"ply") or end < 0:
        raise ParseError("missing PLY header")
    body_start = raw.index(b"\n", end) + 1
    fmt, elements = None, []
    for line in raw[:end].decode("ascii", "replace").splitlines()[1:]:
        tok = line.split()
        if not tok or tok[0] in ("comment", "obj_info"):
            continue
        if tok[0] == "format":
            fmt = tok[1]
        elif tok[0] == "element":
            elements.append((tok[1], int(tok[2]), []))
        elif tok[0] == "property":
            if not elements:
                raise ParseError("property before element")
            elements[-1][2].append(tok[1:])
    if fmt not in ("ascii", "binary_little_endian", "binary_big_endian"):
        raise ParseError(f"unsupported PLY format {fmt!r}")
    return fmt, elements, body_start


def read_ply(path):
    raw = Path(path).read_bytes()
    fmt, elements, pos = _ply_header(raw)
    verts = faces = None
    try:
        if fmt == "ascii":
            lines = iter(raw[pos:].decode("ascii").split("\n"))
            for name, count, props in elements:
                rows = [next(lines).split() for _ in range(count)]
                if name == "vertex":
                    names = [p[-1] for p in props]
                    cols = [names.index(c) for c in "xyz"]
                    verts = np.array([[float(r[c]) for c in cols] for r in rows]).reshape(-1, 3)
                elif name == "face":
                    faces = _fan([[int(t) for t in r[1 : 1 + int(r[0])]] for r in rows])
        else:
            order = "<" if fmt == "binary_little_endian" else ">"
            for name, count, props in elements:
                if props and props[0][0] == "list":
                    cnt_t, idx_t = order + _PLY_TYPES[props[0][1]], order + _PLY_TYPES[props[0][2]]
                    cs, isz = np.dtype(cnt_t).itemsize, np.dtype(idx_t).itemsize
                    polys = []
                    for _ in range(count):
                        k = int(np.frombuffer(raw, cnt_t, 1, pos)[0])
                        pos += cs
                        polys.append(np.frombuffer(raw, idx_t, k, pos).astype(np.int64).tolist())
                        pos += k * isz
                        if len(props) > 1:
                            raise ParseError("extra face properties are not supported in binary PLY")
                    if name == "face":
                        faces = _fan(polys)
                    continue
                dt = np.dtype([(p[1], order + _PLY_TYPES[p[0]]) for p in props])
                arr = np.frombuffer(raw, dt, count, pos)
                pos += dt.itemsize * count
                if name == "vertex":
                    verts = np.stack([arr[c].astype(float) for c in "xyz"], axis=1)
    except (StopIteration, ValueError, KeyError, IndexError) as exc:
        raise ParseError(f"malformed PLY data: {exc}") from None
    if verts is None or faces is None:
        raise ParseError("PLY file lacks vertex or face elements")
    return verts, faces


_READERS = {".off": read_off, ".obj": read_obj, ".ply": read_ply}


def load_mesh(path) -> TriangleMesh:
    """Read an OFF, OBJ or PLY file into a validated :class:`TriangleMesh`."""
    path = Path(path)
    reader = _READERS.get(path.suffix.lower())
    if reader is None:
        raise ParseError(f"unsupported mesh format {path.suffix!r}")
    if not path.exists():
        raise ParseError(f"no such file: {path}")
    v, f = reader(path)
    return TriangleMesh(v, f)


def write_off(path, mesh) -> None:
    with open(path, "w") as fh:
        fh.write(f"OFF\n{mesh.n_vertices} {mesh.n_faces} 0\n")
        np.savetxt(fh, mesh.vertices, fmt="%.17g")
        np.savetxt(fh, np.hstack([np.full((mesh.n_faces, 1), 3), mesh.faces]), fmt="%d")


def write_obj(path, mesh) -> None:
    with open(path, "w") as fh:
        np.savetxt(fh, mesh.vertices, fmt="v %.17g %.17g %.17g")
        np.savetxt(fh, mesh.faces + 1, fmt="f %d %d %d")


def write_ply(path, mesh, attributes: dict | None = None, colors=None, binary: bool = False) -> None:
    """PLY with optional per-vertex scalar attributes and RGB colors."""
    attributes = attributes or {}
    n = mesh.n_vertices
    cols = [("x", "f8", mesh.vertices[:, 0]), ("y", "f8", mesh.vertices[:, 1]), ("z", "f8", mesh.vertices[:, 2])]
    for name, vals in attributes.items():
        vals = np.asarray(vals)
        cols.append((name, "i4" if np.issubdtype(vals.dtype, np.integer) else "f8", vals))
    if colors is not None:
        colors = np.asarray(colors, dtype=np.uint8)
        cols += [(c, "u1", colors[:, k]) for k, c in enumerate(("red", "green", "blue"))]
    ply_name = {"f8": "double", "i4": "int", "u1": "uchar"}
    fmt = f"binary_{sys.byteorder}_endian" if binary else "ascii"
    head = [f"ply", f"format {fmt} 1.0", f"element vertex {n}"]
    head += [f"property {ply_name[t]} {c}" for c, t, _ in cols]
    head += [f"element face {mesh.n_faces}", "property list uchar int vertex_indices", "end_header"]
    with open(path, "wb") as fh:
        fh.write(("\n".join(head) + "\n").encode("ascii"))
        if binary:
            rec = np.empty(n, dtype=[(c, t) for c, t, _ in cols])
            for c, _, v in cols:
                rec[c] = v
            fh.write(rec.tobytes())
            frec = np.empty(mesh.n_faces, dtype=[("k", "u1"), ("i", "i4", 3)])
            frec["k"] = 3
            frec["i"] = mesh.faces
            fh.write(frec.tobytes())
        else:
            lines = []
            for r in range(n):
                lines.append(" ".join(repr(float(v[r])) if t == "f8" else str(int(v[r])) for _, t, v in cols))
            lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
            fh.write(("\n".join(lines) + "\n").encode("ascii"))


def layer_colors(ids: np.ndarray) -> np.ndarray:
    """Stable pseudo-random color per integer id; id 0 (base) is grey."""
    rng = np.random.default_rng(12345)
    table = rng.integers(40, 256, size=(int(ids.max()) + 1, 3))
    table[0] = 200
    return table[ids].astype(np.uint8)


def write_field_snapshot(path, mesh, field) -> None:
    """Dominant layer id and base value per vertex, colored by layer."""
    dom = field.dominant_layer()
    write_ply(path, mesh, {"layer": dom.astype(np.int32), "base": field.base}, colors=layer_colors(dom))


def write_polylines_obj(path, polylines, names=None) -> None:
    """OBJ with one ``l`` record (and ``o`` group) per polyline."""
    with open(path, "w") as fh:
        offset = 1
        for k, pts in enumerate(polylines):
            pts = np.asarray(pts, dtype=float)
            fh.write(f"o {names[k] if names else f'curve{k}'}\n")
            for p in pts:
                fh.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
            if len(pts) >= 2:
                fh.write("l " + " ".join(str(offset + i) for i in range(len(pts))) + "\n")
            offset += len(pts)


def read_polylines_obj(path) -> list[np.ndarray]:
    verts, lines = [], []
    for line in _data_lines(Path(path).read_text()):
        tok = line.split()
        if tok[0] == "v":
            verts.append([float(t) for t in tok[1:4]])
        elif tok[0] == "l":
            lines.append([int(t) - 1 for t in tok[1:]])
    verts = np.array(verts)
    return [verts[idx] for idx in lines]
