"""Oriented simplicial surfaces with circumcentric primal/dual volumes.

Meshes are closed, oriented and immutable.  Lower-dimensional simplices are
sorted vertex tuples in lexicographic order; top simplices carry an extra sign
relative to their sorted order, fixed by propagating the orientation of the
first face through the face adjacency graph.

Geometry lives in ``corners``: for every top simplex, the coordinates of its
vertices in one consistent chart.  For embedded meshes this is just
``vertices[faces]``; for periodic (flat torus) meshes the corners are the
minimal-image unwrapping across the lattice.
"""
from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, connected_components

__all__ = [
    "MeshError",
    "SimplicialMesh",
    "from_triangles",
    "build_icosphere",
    "build_flat_torus",
    "load_off",
    "save_off",
    "boundary_matrix",
    "compute_volumes",
]

MAX_ICOSPHERE_LEVEL = 7


class MeshError(ValueError):
    """Invalid, non-closed, non-manifold or degenerate mesh."""


@dataclass(frozen=True, eq=False)
class SimplicialMesh:
    vertices: np.ndarray
    simplices: tuple
    orientation: np.ndarray
    boundaries: tuple
    corners: np.ndarray
    lattice: np.ndarray | None = None
    expected_euler: int | None = None
    primal_volume: tuple = ()
    dual_volume: tuple = ()
    well_centered: bool = False
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.simplices) - 1

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.simplices)

    @property
    def euler_characteristic(self) -> int:
        return sum((-1) ** k * c for k, c in enumerate(self.counts))

    def boundary_matrix(self, k: int) -> sp.csr_matrix:
        return boundary_matrix(self, k)

    def total_volume(self) -> float:
        return float(math.fsum(self.primal_volume[self.dim]))

    def h_max(self) -> float:
        return float(self.primal_volume[1].max())

    def dual_ratio(self, k: int) -> np.ndarray:
        return self.dual_volume[k] / self.primal_volume[k]

    def fingerprint(self) -> str:
        """SHA-256 over coordinates, incidence and orientation."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.vertices, dtype="<f8").tobytes())
        if self.lattice is not None:
            h.update(np.ascontiguousarray(self.lattice, dtype="<f8").tobytes())
        for s in self.simplices:
            h.update(np.ascontiguousarray(s, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.orientation, dtype="<i8").tobytes())
        for b in self.boundaries:
            b = b.tocsr()
            b.sort_indices()
            for arr in (b.indptr, b.indices):
                h.update(np.ascontiguousarray(arr, dtype="<i8").tobytes())
            h.update(np.ascontiguousarray(b.data, dtype="<f8").tobytes())
        return h.hexdigest()

    def scaled(self, s: float) -> SimplicialMesh:
        """Copy with every coordinate multiplied by ``s``."""
        lattice = None if self.lattice is None else self.lattice * s
        m = replace(self, vertices=self.vertices * s, corners=self.corners * s,
                    lattice=lattice, _cache={})
        return compute_volumes(m)

    def stats(self) -> dict:
        nm = self.dim
        stats = {
            "name": self.name,
            "dim": nm,
            "counts": list(self.counts),
            "euler_characteristic": self.euler_characteristic,
            "well_centered": bool(self.well_centered),
            "total_volume": self.total_volume(),
            "h_max": self.h_max(),
        }
        for k in range(nm + 1):
            r = self.dual_ratio(k)
            stats[f"dual_ratio_{k}"] = {"min": float(r.min()), "max": float(r.max())}
        return stats


def _perm_sign(seq) -> int:
    inv = sum(1 for i, j in itertools.combinations(range(len(seq)), 2) if seq[i] > seq[j])
    return -1 if inv % 2 else 1


def _faces_of(simplices: np.ndarray):
    """Unique codimension-1 faces and the signed incidence matrix."""
    m = simplices.shape[1]
    parts = [np.delete(simplices, i, axis=1) for i in range(m)]
    stacked = np.concatenate(parts, axis=0)
    faces, inverse = np.unique(stacked, axis=0, return_inverse=True)
    inverse = inverse.reshape(m, len(simplices))
    rows = inverse.T.reshape(-1)
    cols = np.repeat(np.arange(len(simplices)), m)
    signs = np.tile([(-1.0) ** i for i in range(m)], len(simplices))
    bnd = sp.csr_matrix((signs, (rows, cols)), shape=(len(faces), len(simplices)))
    return faces, bnd, inverse.T


def _orient(top: np.ndarray, given_sign: np.ndarray, bnd_sorted: sp.csr_matrix) -> np.ndarray:
    """Consistent orientation signs for the top simplices, seeded per component."""
    counts = np.diff(bnd_sorted.indptr)
    if np.any(counts == 1):
        raise MeshError(f"non-closed: {int(np.sum(counts == 1))} boundary face(s)")
    if np.any(counts > 2):
        raise MeshError(f"non-manifold: {int(np.sum(counts > 2))} face(s) with more than two cofaces")
    coo = bnd_sorted.tocoo()
    order = np.argsort(coo.row, kind="stable")
    cols = coo.col[order].reshape(-1, 2)
    sgn = coo.data[order].reshape(-1, 2)
    nt = len(top)
    adj = sp.csr_matrix((np.ones(2 * len(cols)),
                         (np.r_[cols[:, 0], cols[:, 1]], np.r_[cols[:, 1], cols[:, 0]])),
                        shape=(nt, nt))
    # consistent iff o_a * s_a + o_b * s_b == 0 on every shared face
    rel = {}
    for (a, b), (sa, sb) in zip(cols.tolist(), sgn.tolist()):
        rel[(a, b)] = rel[(b, a)] = -sa * sb
    orient = np.zeros(nt, dtype=int)
    ncomp, labels = connected_components(adj, directed=False)
    for c in range(ncomp):
        seed = int(np.flatnonzero(labels == c)[0])
        nodes, pred = breadth_first_order(adj, seed, directed=False, return_predecessors=True)
        orient[seed] = given_sign[seed]
        for v in nodes[1:]:
            u = pred[v]
            orient[v] = orient[u] * rel[(u, v)]
    if np.any(orient[cols[:, 0]] * sgn[:, 0] + orient[cols[:, 1]] * sgn[:, 1] != 0):
        raise MeshError("non-orientable surface")
    return orient


def _unwrap(vertices: np.ndarray, top: np.ndarray, lattice: np.ndarray | None) -> np.ndarray:
    corners = vertices[top].astype(float)
    if lattice is None:
        return corners
    pinv = np.linalg.pinv(lattice)  # lattice rows are periods
    base = corners[:, :1, :]
    diff = corners - base
    coef = diff @ pinv
    diff = diff - np.rint(coef) @ lattice
    return base + diff


def from_triangles(vertices, faces, lattice=None, expected_euler=None, name="") -> SimplicialMesh:
    """Assemble a closed oriented triangle mesh from oriented vertex cycles."""
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2:
        raise MeshError("vertex array must be 2-dimensional")
    if vertices.shape[1] < 3:
        vertices = np.pad(vertices, ((0, 0), (0, 3 - vertices.shape[1])))
    faces = np.asarray(faces, dtype=np.int64)
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise MeshError("faces must be triangles")
    if faces.min() < 0 or faces.max() >= len(vertices):
        raise MeshError("face references a missing vertex")
    if np.any(faces[:, 0] == faces[:, 1]) or np.any(faces[:, 1] == faces[:, 2]) or np.any(faces[:, 0] == faces[:, 2]):
        raise MeshError("degenerate face with repeated vertex")
    used = np.zeros(len(vertices), dtype=bool)
    used[faces.reshape(-1)] = True
    if not used.all():
        raise MeshError(f"{int((~used).sum())} isolated vertex/vertices")

    sorted_faces = np.sort(faces, axis=1)
    order = np.lexsort(sorted_faces.T[::-1])
    if len(np.unique(sorted_faces, axis=0)) != len(faces):
        raise MeshError("duplicate faces")
    given_sign = np.array([_perm_sign(np.argsort(f, kind="stable")) for f in faces])
    top, given_sign = sorted_faces[order], given_sign[order]

    edges, bnd2_sorted, _ = _faces_of(top)
    orient = _orient(top, given_sign, bnd2_sorted)
    bnd2 = (bnd2_sorted @ sp.diags(orient.astype(float))).tocsr()
    verts, bnd1, _ = _faces_of(edges)
    if len(verts) != len(vertices):
        raise MeshError("vertex set mismatch")

    lattice = None if lattice is None else np.pad(np.asarray(lattice, float),
                                                  ((0, 0), (0, 3 - np.shape(lattice)[1])))
    mesh = SimplicialMesh(
        vertices=vertices,
        simplices=(np.arange(len(vertices))[:, None], edges, top),
        orientation=orient,
        boundaries=(bnd1, bnd2),
        corners=_unwrap(vertices, top, lattice),
        lattice=lattice,
        expected_euler=expected_euler,
        name=name,
    )
    if expected_euler is not None and mesh.euler_characteristic != expected_euler:
        raise MeshError(f"Euler characteristic {mesh.euler_characteristic} != declared {expected_euler}")
    return compute_volumes(mesh)


def boundary_matrix(mesh: SimplicialMesh, k: int) -> sp.csr_matrix:
    """Signed incidence from k-simplices (columns) to (k-1)-simplices (rows)."""
    if not 1 <= k <= mesh.dim:
        raise ValueError(f"boundary degree {k} outside 1..{mesh.dim}")
    return mesh.boundaries[k - 1]


def compute_volumes(mesh: SimplicialMesh) -> SimplicialMesh:
    """Populate chordal primal volumes and circumcentric dual volumes.

    Dual volumes are signed sums of per-triangle contributions, so a
    non-Delaunay edge yields a negative dual length; the mesh is then flagged
    as not well-centered rather than rejected.
    """
    if mesh.dim != 2:
        raise NotImplementedError("volumes are implemented for triangle meshes only")
    c = mesh.corners
    top = mesh.simplices[2]
    nv, ne, nf = mesh.counts
    # local edge j is opposite local vertex j
    e_opp = np.stack([c[:, 2] - c[:, 1], c[:, 0] - c[:, 2], c[:, 1] - c[:, 0]], axis=1)
    lengths = np.linalg.norm(e_opp, axis=2)
    cross = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    twice_area = np.linalg.norm(cross, axis=1)
    if np.any(twice_area <= 0):
        raise MeshError("degenerate (zero-area) triangle")
    area = 0.5 * twice_area
    cot = np.empty((nf, 3))
    for j in range(3):
        a = c[:, (j + 1) % 3] - c[:, j]
        b = c[:, (j + 2) % 3] - c[:, j]
        cot[:, j] = np.einsum("ij,ij->i", a, b) / twice_area

    # edge opposite local vertex j: remove column j of the sorted triple
    edges = mesh.simplices[1]
    local = np.stack([top[:, [1, 2]], top[:, [0, 2]], top[:, [0, 1]]], axis=1).reshape(-1, 2)
    edge_idx = _row_lookup(edges, local).reshape(nf, 3)

    edge_len = np.zeros(ne)
    edge_len[edge_idx.reshape(-1)] = lengths.reshape(-1)
    if np.any(edge_len <= 0):
        raise MeshError("zero-length edge")
    edge_dual = np.zeros(ne)
    np.add.at(edge_dual, edge_idx.reshape(-1), (0.5 * lengths * cot).reshape(-1))
    vert_dual = np.zeros(nv)
    contrib = lengths ** 2 * cot / 8.0
    for j in range(3):
        # vertex j touches the two edges not opposite to it
        np.add.at(vert_dual, top[:, j], contrib[:, (j + 1) % 3] + contrib[:, (j + 2) % 3])

    primal = (np.ones(nv), edge_len, area)
    dual = (vert_dual, edge_dual, np.ones(nf))
    wc = bool(np.all(vert_dual > 0) and np.all(edge_dual > 0))
    return replace(mesh, primal_volume=primal, dual_volume=dual, well_centered=wc, _cache={})


def _row_lookup(table: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Index of each row of ``rows`` in the lexicographically sorted ``table``."""
    key_t = table[:, 0].astype(np.int64) * (table.max() + 1) + table[:, 1]
    key_r = rows[:, 0].astype(np.int64) * (table.max() + 1) + rows[:, 1]
    idx = np.searchsorted(key_t, key_r)
    if np.any(idx >= len(key_t)) or np.any(key_t[np.minimum(idx, len(key_t) - 1)] != key_r):
        raise MeshError("face lookup failed")
    return idx


_PHI = (1.0 + math.sqrt(5.0)) / 2.0
_ICO_VERTS = np.array([
    [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
    [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
    [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
], dtype=float)
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
])


def _subdivide(verts: np.ndarray, faces: np.ndarray):
    edges = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]]), axis=1)
    uniq, inv = np.unique(edges, axis=0, return_inverse=True)
    inv = inv.reshape(3, -1)
    mids = verts[uniq].mean(axis=1)
    mids /= np.linalg.norm(mids, axis=1, keepdims=True)
    nv = len(verts)
    a, b, c = faces.T
    ab, bc, ca = inv + nv
    new_faces = np.concatenate([
        np.stack([a, ab, ca], 1), np.stack([b, bc, ab], 1),
        np.stack([c, ca, bc], 1), np.stack([ab, bc, ca], 1),
    ])
    return np.vstack([verts, mids]), new_faces


def build_icosphere(level: int) -> SimplicialMesh:
    """Unit-sphere icosahedron refined ``level`` times by midpoint subdivision."""
    if not isinstance(level, (int, np.integer)) or level < 0:
        raise ValueError(f"level must be a nonnegative integer, got {level!r}")
    if level > MAX_ICOSPHERE_LEVEL:
        raise ValueError(f"level {level} exceeds the resource guard {MAX_ICOSPHERE_LEVEL}")
    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1, keepdims=True)
    faces = _ICO_FACES
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    return from_triangles(verts, faces, expected_euler=2, name=f"icosphere-{level}")


def build_flat_torus(N: int, period: float | None = None) -> SimplicialMesh:
    """Equilateral triangulation of the torus R^2 / (period * hexagonal lattice).

    The lattice is spanned by ``period*(1, 0)`` and ``period*(1/2, sqrt(3)/2)``
    with ``N`` cells along each period; the default ``period=N`` gives unit edges.
    """
    if not isinstance(N, (int, np.integer)) or N < 3:
        raise ValueError(f"torus resolution must be an integer >= 3, got {N!r}")
    period = float(N) if period is None else float(period)
    if period <= 0:
        raise ValueError("period must be positive")
    h = period / N
    a1 = np.array([1.0, 0.0, 0.0])
    a2 = np.array([0.5, math.sqrt(3.0) / 2.0, 0.0])
    i, j = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    i, j = i.reshape(-1), j.reshape(-1)
    verts = h * (i[:, None] * a1 + j[:, None] * a2)

    def vid(ii, jj):
        return (ii % N) * N + (jj % N)

    up = np.stack([vid(i, j), vid(i + 1, j), vid(i, j + 1)], 1)
    down = np.stack([vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)], 1)
    lattice = period * np.stack([a1, a2])
    return from_triangles(verts, np.vstack([up, down]), lattice=lattice,
                          expected_euler=0, name=f"flat-torus-{N}")


def save_off(mesh: SimplicialMesh, path) -> None:
    """Write an ASCII OFF file; periodic meshes carry a ``# lattice`` comment."""
    top = mesh.simplices[2]
    lines = ["OFF"]
    if mesh.lattice is not None:
        lines.append("# lattice " + " ".join(f"{x:.17g}" for x in mesh.lattice.reshape(-1)))
    if mesh.expected_euler is not None:
        lines.append(f"# euler {mesh.expected_euler}")
    lines.append(f"{mesh.counts[0]} {mesh.counts[2]} {mesh.counts[1]}")
    lines.extend(" ".join(f"{x:.17g}" for x in v) for v in mesh.vertices)
    for f, o in zip(top, mesh.orientation):
        a, b, c = f if o > 0 else (f[1], f[0], f[2])
        lines.append(f"3 {a} {b} {c}")
    _atomic_write_text(Path(path), "\n".join(lines) + "\n")


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def load_off(path) -> SimplicialMesh:
    """Read an ASCII OFF triangle mesh of a closed orientable surface."""
    path = Path(path)
    lattice = None
    euler = None
    tokens = []
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if s.startswith("#"):
                parts = s[1:].split()
                if parts and parts[0] == "lattice":
                    lattice = np.array([float(x) for x in parts[1:]]).reshape(2, -1)
                elif parts and parts[0] == "euler":
                    euler = int(parts[1])
                continue
            tokens.extend(s.split("#", 1)[0].split())
    if not tokens or tokens[0] != "OFF":
        raise MeshError(f"{path}: missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4
        verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            m = int(tokens[pos])
            if m != 3:
                raise MeshError(f"{path}: only triangle faces are supported (got {m}-gon)")
            faces.append([int(t) for t in tokens[pos + 1:pos + 4]])
            pos += 4
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"{path}: parse failure: {exc}") from exc
    if len(faces) != nf:
        raise MeshError(f"{path}: truncated face list")
    return from_triangles(verts, np.array(faces, dtype=np.int64).reshape(-1, 3),
                          lattice=lattice, expected_euler=euler, name=path.stem)
