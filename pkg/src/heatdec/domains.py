"""Deterministic test domains: hexagonal patch, unit-square grids, torus, Delaunay."""

from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

from .mesh import SimplicialSurface, build_surface


def hex_patch() -> SimplicialSurface:
    """Center vertex at the origin with a ring of 6 equilateral triangles (side 1).

    Vertex 0 is the single interior vertex; 1..6 are the boundary ring.
    """
    ang = np.arange(6) * np.pi / 3.0
    verts = np.vstack([[0.0, 0.0, 0.0], np.c_[np.cos(ang), np.sin(ang), np.zeros(6)]])
    tris = [(0, 1 + k, 1 + (k + 1) % 6) for k in range(6)]
    return build_surface(verts, tris)


def unit_square(n: int) -> SimplicialSurface:
    """Structured right-triangle grid on [0,1]^2 with n subdivisions per side.

    (n+1)^2 vertices; every cell is split along the same diagonal, so the
    diagonal edges carry zero weight and the stencil reduces to the classic
    5-point one. Characteristic edge length h = 1/n.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    verts = np.c_[gx.ravel(), gy.ravel(), np.zeros((n + 1) ** 2)]

    def vid(i, j):
        return i * (n + 1) + j

    tris = []
    for i in range(n):
        for j in range(n):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    return build_surface(verts, tris)


def torus(n_major: int = 24, n_minor: int = 12, big_radius: float = 2.0,
          small_radius: float = 1.0) -> SimplicialSurface:
    """Closed torus grid (V - E + F = 0, no boundary)."""
    surface_verts = []
    for i in range(n_major):
        u = 2.0 * np.pi * i / n_major
        for j in range(n_minor):
            v = 2.0 * np.pi * j / n_minor
            w = big_radius + small_radius * np.cos(v)
            surface_verts.append(
                (w * np.cos(u), w * np.sin(u), small_radius * np.sin(v))
            )

    def vid(i, j):
        return (i % n_major) * n_minor + (j % n_minor)

    tris = []
    for i in range(n_major):
        for j in range(n_minor):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    return build_surface(surface_verts, tris)


def random_delaunay(n_side: int, seed: int) -> SimplicialSurface:
    """Irregular planar Delaunay mesh from a jittered grid of points.

    Jittering keeps triangle quality bounded (no slivers, positive dual
    areas) while still producing non-uniform weights; fully deterministic for
    a given seed.
    """
    rng = np.random.default_rng(seed)
    xs = np.linspace(0.0, 1.0, n_side)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    pts = np.c_[gx.ravel(), gy.ravel()]
    interior = (pts[:, 0] > 0) & (pts[:, 0] < 1) & (pts[:, 1] > 0) & (pts[:, 1] < 1)
    jitter = rng.uniform(-0.25, 0.25, pts.shape) / (n_side - 1)
    pts = pts + jitter * interior[:, None]

    tri = Delaunay(pts)
    simplices = tri.simplices.copy()
    # enforce counterclockwise orientation
    p, q, r = pts[simplices[:, 0]], pts[simplices[:, 1]], pts[simplices[:, 2]]
    det = (q[:, 0] - p[:, 0]) * (r[:, 1] - p[:, 1]) - (q[:, 1] - p[:, 1]) * (r[:, 0] - p[:, 0])
    flip = det < 0
    simplices[flip, 1], simplices[flip, 2] = simplices[flip, 2], simplices[flip, 1].copy()

    verts = np.c_[pts, np.zeros(len(pts))]
    return build_surface(verts, simplices)
