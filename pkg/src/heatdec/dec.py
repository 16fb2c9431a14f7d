"""Sparse discrete operators on a simplicial surface.

The diffusion operator is assembled two ways: directly from the per-edge
weight stencil (dual length over primal length) and as the composition
d0^T * star1 * d0, which must agree entrywise. A classical half-cotangent
assembly serves as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import DualMetrics, GeometryError, SimplicialSurface, build_metrics


@dataclass(frozen=True)
class HodgeStars:
    """Diagonal Hodge stars: star0 = dual area per vertex, star1 = dual/primal length per edge."""

    star0: np.ndarray   # (V,)
    star1: np.ndarray   # (E,)


@dataclass(frozen=True)
class LaplaceOperator:
    """Discrete Laplacian split into stiffness and mass.

    ``stiffness`` is sparse symmetric with off-diagonal w_ij >= 0 on
    non-obtuse meshes and diagonal -sum_j w_ij, so it is negative
    semidefinite and row sums vanish. The Laplacian of a field psi is
    ``(stiffness @ psi) / mass``.
    """

    stiffness: sp.csr_matrix    # (V, V)
    mass: np.ndarray            # (V,) dual areas, > 0

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return (self.stiffness @ psi) / self.mass

    def weight_row_sums(self) -> np.ndarray:
        """sum_j w_ij per vertex (= -diagonal of stiffness)."""
        return -self.stiffness.diagonal()


def assemble_d0(surface: SimplicialSurface) -> sp.csr_matrix:
    """Exterior derivative on vertex scalars: (E, V) incidence matrix.

    Edges are oriented low index -> high index; row e has -1 at the tail and
    +1 at the head, so a constant field is annihilated.
    """
    e = surface.n_edges
    rows = np.repeat(np.arange(e), 2)
    cols = surface.edges.ravel()
    vals = np.tile([-1.0, 1.0], e)
    return sp.csr_matrix((vals, (rows, cols)), shape=(e, surface.n_vertices))


def hodge_stars(surface: SimplicialSurface, metrics: DualMetrics) -> HodgeStars:
    return HodgeStars(
        star0=metrics.dual_area.copy(),
        star1=metrics.dual_length / metrics.primal_length,
    )


def _stiffness_from_weights(surface: SimplicialSurface, w: np.ndarray) -> sp.csr_matrix:
    u, v = surface.edges[:, 0], surface.edges[:, 1]
    rows = np.concatenate([u, v, u, v])
    cols = np.concatenate([v, u, u, v])
    vals = np.concatenate([w, w, -w, -w])
    n = surface.n_vertices
    m = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    m.sum_duplicates()
    return m


def assemble_laplacian(surface: SimplicialSurface, metrics: DualMetrics) -> LaplaceOperator:
    """Stencil-direct assembly: w_ij = dual_length(ij) / primal_length(ij).

    Raises GeometryError when any vertex has non-positive dual area (the
    scheme denominators need a positive mass).
    """
    if np.any(metrics.dual_area <= 0):
        bad = int(np.argmin(metrics.dual_area))
        raise GeometryError(
            f"non-positive dual area {metrics.dual_area[bad]:g} at vertex {bad}"
        )
    w = metrics.dual_length / metrics.primal_length
    return LaplaceOperator(
        stiffness=_stiffness_from_weights(surface, w),
        mass=metrics.dual_area.copy(),
    )


def laplacian_via_operators(surface: SimplicialSurface, metrics: DualMetrics) -> sp.csr_matrix:
    """Stiffness as the composition -d0^T * star1 * d0 (cross-check path).

    On 0-forms only this branch of the full operator acts; the 2-form branch
    vanishes identically.
    """
    d0 = assemble_d0(surface)
    star1 = sp.diags(metrics.dual_length / metrics.primal_length)
    return (-(d0.T @ star1 @ d0)).tocsr()


def cotan_oracle(surface: SimplicialSurface) -> LaplaceOperator:
    """Independent assembly from the half-cotangent formula.

    w_ij = (cot a + cot b) / 2 over the angles opposite edge ij. Mass is the
    circumcentric dual area (shared definition, computed from the metrics).
    """
    w = np.zeros(surface.n_edges)
    tris = surface.triangles
    verts = surface.vertices
    for s, (a, b, o) in enumerate(((0, 1, 2), (1, 2, 0), (2, 0, 1))):
        ea = verts[tris[:, a]] - verts[tris[:, o]]
        eb = verts[tris[:, b]] - verts[tris[:, o]]
        cross = np.linalg.norm(np.cross(ea, eb), axis=1)
        if np.any(cross <= 0):
            raise GeometryError("degenerate angle in cotangent assembly")
        cot = np.einsum("ij,ij->i", ea, eb) / cross
        np.add.at(w, surface.tri_edges[:, s], 0.5 * cot)
    metrics = build_metrics(surface)
    if np.any(metrics.dual_area <= 0):
        raise GeometryError("non-positive dual area")
    return LaplaceOperator(
        stiffness=_stiffness_from_weights(surface, w),
        mass=metrics.dual_area.copy(),
    )


def dump_coo(matrix, sink) -> None:
    """Debug dump as 'row col value' lines in deterministic (row, col) order."""
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
        sink.write("%d %d %.17g\n" % (r, c, v))
