"""Simplicial surface meshes and their circumcentric-dual geometry.

A surface is an oriented manifold triangle mesh. The dual metrics attach a
(signed) dual edge length to every primal edge and a dual cell area to every
vertex; these are the only geometric quantities the diffusion operator needs.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree


class MeshError(Exception):
    """Base class for mesh construction failures."""


class ObjParseError(MeshError):
    """Malformed OBJ record."""


class TopologyError(MeshError):
    """Non-manifold connectivity or inconsistent orientation."""


class GeometryError(MeshError):
    """Degenerate geometry: duplicate vertices, zero-area triangles, collinear points."""


# triangle-local edge slots: slot s joins local vertices s and s+1,
# the opposite vertex is s+2
_EDGE_SLOTS = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


@dataclass(frozen=True)
class SimplicialSurface:
    """Validated oriented manifold triangle mesh.

    ``edges`` are canonical (low index, high index) pairs sorted
    lexicographically. ``tri_edges[f, s]`` is the edge id of slot ``s`` of
    triangle ``f``. Immutable after construction; safe to share across threads.
    """

    vertices: np.ndarray        # (V, 3) float64
    triangles: np.ndarray       # (F, 3) int
    edges: np.ndarray           # (E, 2) int, u < v
    tri_edges: np.ndarray       # (F, 3) int
    edge_triangles: tuple       # per edge: tuple of 1 or 2 incident triangle ids
    boundary_vertices: frozenset

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_triangles

    @property
    def is_closed(self) -> bool:
        return not self.boundary_vertices

    def triangle_areas(self) -> np.ndarray:
        p, q, r = (self.vertices[self.triangles[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(q - p, r - p), axis=1)

    def total_area(self) -> float:
        return float(self.triangle_areas().sum())

    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.linalg.norm(d, axis=1)


@dataclass(frozen=True)
class DualMetrics:
    """Primal/dual lengths per edge and dual cell areas per vertex.

    ``dual_length`` is signed: a triangle whose circumcenter falls on the far
    side of an edge contributes negatively. ``negative_dual_edges`` counts
    edges whose total dual length is negative (only possible with obtuse
    triangles).
    """

    primal_length: np.ndarray   # (E,) > 0
    dual_length: np.ndarray     # (E,) signed
    dual_area: np.ndarray       # (V,) signed sums, positive on reasonable meshes

    @property
    def negative_dual_edges(self) -> int:
        # tolerance absorbs rounding on analytically-zero dual lengths
        # (e.g. the diagonal of a square split into two right triangles)
        return int(np.count_nonzero(self.dual_length < -1e-12 * self.primal_length))


def build_surface(vertices, triangles) -> SimplicialSurface:
    """Validate raw vertex/triangle arrays and build the edge tables.

    Raises GeometryError for duplicate vertices or degenerate triangles and
    TopologyError for non-manifold edges or inconsistent orientation.
    """
    verts = np.asarray(vertices, dtype=float).reshape(-1, 3)
    tris = np.asarray(triangles, dtype=int).reshape(-1, 3)

    if len(verts) == 0 or len(tris) == 0:
        raise GeometryError("mesh needs at least one vertex and one triangle")
    if tris.min() < 0 or tris.max() >= len(verts):
        raise TopologyError("triangle references vertex index out of range")
    if any(len(set(t)) != 3 for t in tris):
        raise GeometryError("triangle repeats a vertex")

    scale = float(np.ptp(verts, axis=0).max()) or 1.0
    dup = cKDTree(verts).query_pairs(1e-12 * scale)
    if dup:
        i, j = sorted(next(iter(dup)))
        raise GeometryError(f"duplicate vertices {i} and {j}")

    p, q, r = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(q - p, r - p), axis=1)
    lmax2 = max(
        (np.linalg.norm(q - p, axis=1) ** 2).max(),
        (np.linalg.norm(r - p, axis=1) ** 2).max(),
    )
    bad = np.nonzero(areas <= 1e-12 * lmax2)[0]
    if len(bad):
        raise GeometryError(f"degenerate (zero-area) triangle {bad[0]}")

    # edge table; orientation +1 when the triangle traverses low -> high index
    edge_map: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for f, tri in enumerate(tris):
        for a, b, _ in _EDGE_SLOTS:
            u, v = int(tri[a]), int(tri[b])
            key, orient = ((u, v), 1) if u < v else ((v, u), -1)
            edge_map.setdefault(key, []).append((f, orient))

    keys = sorted(edge_map)
    edges = np.array(keys, dtype=int)
    edge_index = {k: e for e, k in enumerate(keys)}

    incident = []
    for k in keys:
        faces = edge_map[k]
        if len(faces) > 2:
            raise TopologyError(f"edge {k} has {len(faces)} incident triangles")
        if len(faces) == 2 and faces[0][1] == faces[1][1]:
            raise TopologyError(f"inconsistent triangle orientation across edge {k}")
        incident.append(tuple(f for f, _ in faces))

    tri_edges = np.empty((len(tris), 3), dtype=int)
    for f, tri in enumerate(tris):
        for s, (a, b, _) in enumerate(_EDGE_SLOTS):
            u, v = sorted((int(tri[a]), int(tri[b])))
            tri_edges[f, s] = edge_index[(u, v)]

    boundary = frozenset(
        int(w) for e, faces in enumerate(incident) if len(faces) == 1 for w in edges[e]
    )

    return SimplicialSurface(
        vertices=verts,
        triangles=tris,
        edges=edges,
        tri_edges=tri_edges,
        edge_triangles=tuple(incident),
        boundary_vertices=boundary,
    )


def load_obj(source) -> SimplicialSurface:
    """Read an ASCII OBJ (v/f records, 1-based indices) into a validated surface.

    ``source`` may be a byte stream, a text stream, bytes or a str of OBJ
    content. Polygonal faces are fan-triangulated; vn/vt/comments are ignored.
    """
    if isinstance(source, bytes):
        text = source.decode("ascii", errors="replace")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("ascii", errors="replace") if isinstance(raw, bytes) else raw

    verts: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ObjParseError(f"line {lineno}: vertex needs 3 coordinates")
            try:
                verts.append([float(x) for x in parts[1:4]])
            except ValueError as exc:
                raise ObjParseError(f"line {lineno}: bad vertex coordinate") from exc
        elif tag == "f":
            if len(parts) < 4:
                raise ObjParseError(f"line {lineno}: face needs at least 3 vertices")
            try:
                idx = [int(p.split("/")[0]) for p in parts[1:]]
            except ValueError as exc:
                raise ObjParseError(f"line {lineno}: bad face index") from exc
            n = len(verts)
            idx = [i - 1 if i > 0 else n + i for i in idx]
            if any(i < 0 or i >= n for i in idx):
                raise ObjParseError(f"line {lineno}: face index out of range")
            for k in range(1, len(idx) - 1):
                faces.append((idx[0], idx[k], idx[k + 1]))
        # vn / vt / o / g / s / usemtl etc. are ignored
    return build_surface(verts, faces)


def dump_obj(surface: SimplicialSurface) -> str:
    """Serialize a surface back to ASCII OBJ (deterministic, 17 digits)."""
    out = io.StringIO()
    for v in surface.vertices:
        out.write("v %.17g %.17g %.17g\n" % (v[0], v[1], v[2]))
    for t in surface.triangles:
        out.write("f %d %d %d\n" % (t[0] + 1, t[1] + 1, t[2] + 1))
    return out.getvalue()


def circumcenter(p, q, r) -> np.ndarray:
    """Circumcenter of a 3D triangle: equidistant from p, q, r, in their plane."""
    p = np.asarray(p, dtype=float)
    u = np.asarray(q, dtype=float) - p
    v = np.asarray(r, dtype=float) - p
    n = np.cross(u, v)
    nn = float(n @ n)
    scale = max(float(u @ u), float(v @ v))
    if nn <= (1e-12 * scale) ** 2:
        raise GeometryError("circumcenter of collinear points is undefined")
    w = (u @ u) * v - (v @ v) * u
    return p + np.cross(w, n) / (2.0 * nn)


def _triangle_circumcenters(surface: SimplicialSurface) -> np.ndarray:
    p = surface.vertices[surface.triangles[:, 0]]
    u = surface.vertices[surface.triangles[:, 1]] - p
    v = surface.vertices[surface.triangles[:, 2]] - p
    n = np.cross(u, v)
    nn = np.einsum("ij,ij->i", n, n)
    w = np.einsum("ij,ij->i", u, u)[:, None] * v - np.einsum("ij,ij->i", v, v)[:, None] * u
    return p + np.cross(w, n) / (2.0 * nn[:, None])


def build_metrics(surface: SimplicialSurface, strict: bool = False) -> DualMetrics:
    """Compute primal edge lengths, signed dual edge lengths and dual cell areas.

    Each triangle contributes to an edge the signed distance from its
    circumcenter to the edge midpoint (negative when the circumcenter lies on
    the far side of the edge from the opposite vertex). A vertex's dual area
    is the signed sum of its corner pieces (vertex, edge midpoints, incident
    circumcenters), which tile the surface exactly.

    With ``strict=True``, meshes producing any negative dual length are
    rejected: the contraction and maximum-principle guarantees need
    nonnegative weights.
    """
    centers = _triangle_circumcenters(surface)
    primal = surface.edge_lengths()
    dual = np.zeros(surface.n_edges)
    area = np.zeros(surface.n_vertices)

    tris = surface.triangles
    for s, (a, b, o) in enumerate(_EDGE_SLOTS):
        va, vb = surface.vertices[tris[:, a]], surface.vertices[tris[:, b]]
        mid = 0.5 * (va + vb)
        d = centers - mid
        side = np.sign(np.einsum("ij,ij->i", d, surface.vertices[tris[:, o]] - mid))
        slen = side * np.linalg.norm(d, axis=1)
        eids = surface.tri_edges[:, s]
        np.add.at(dual, eids, slen)
        corner = 0.25 * primal[eids] * slen
        np.add.at(area, tris[:, a], corner)
        np.add.at(area, tris[:, b], corner)

    metrics = DualMetrics(primal_length=primal, dual_length=dual, dual_area=area)
    if strict and metrics.negative_dual_edges:
        raise GeometryError(
            f"{metrics.negative_dual_edges} edge(s) with negative dual length "
            "(obtuse triangles); rejected in strict mode"
        )
    return metrics
