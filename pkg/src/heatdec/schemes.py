"""Time stepping for surface heat diffusion.

Three updates over the same operator: forward difference (conditionally
stable), backward difference solved as a symmetric positive definite system,
and a semi-implicit pointwise update where only the vertex being updated sits
at the new time level. The two latter schemes contract perturbations in the
max norm for any time step as long as all edge weights are nonnegative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .dec import LaplaceOperator
from .mesh import SimplicialSurface


class SolverError(RuntimeError):
    """Linear solver failed: iteration cap, breakdown, or indefinite system."""


class NonFiniteFieldError(RuntimeError):
    """A step produced inf/nan (overflow from an unstable explicit step)."""


class UnstableDenominatorError(RuntimeError):
    """Semi-implicit denominator is non-positive (negative weights on an obtuse mesh)."""


@dataclass(frozen=True)
class PhysicalParams:
    """Material constants: density rho, specific heat c, conductivity k."""

    rho: float = 1.0
    c: float = 1.0
    k: float = 1.0

    def __post_init__(self):
        if min(self.rho, self.c, self.k) <= 0:
            raise ValueError("rho, c, k must all be positive")

    @property
    def diffusivity(self) -> float:
        return self.k / (self.c * self.rho)


@dataclass(frozen=True)
class SimState:
    """Temperature field over vertices at a given step."""

    psi: np.ndarray
    time: float = 0.0
    step: int = 0


@dataclass(frozen=True)
class SourceModel:
    """Heat source: a set of vertices driven by an amplitude Q(t)."""

    vertices: np.ndarray
    amplitude: Callable[[float], float]

    @classmethod
    def none(cls) -> "SourceModel":
        return cls(vertices=np.empty(0, dtype=int), amplitude=lambda t: 0.0)

    @classmethod
    def constant(cls, vertices: Sequence[int], value: float) -> "SourceModel":
        return cls(vertices=np.asarray(vertices, dtype=int),
                   amplitude=lambda t: value)

    @classmethod
    def sqrt_ramp(cls, vertices: Sequence[int], time_scale: float = 500.0) -> "SourceModel":
        """Q(t) = sqrt(t / time_scale): zero at t=0, growing without bound."""
        return cls(vertices=np.asarray(vertices, dtype=int),
                   amplitude=lambda t: math.sqrt(t / time_scale))


@dataclass(frozen=True)
class BoundaryCondition:
    """Either no boundary (closed mesh) or Dirichlet values pinned per vertex."""

    fixed: np.ndarray   # (V,) bool
    values: np.ndarray  # (V,) meaningful where fixed

    @property
    def kind(self) -> str:
        return "dirichlet" if self.fixed.any() else "none"

    @classmethod
    def closed(cls, surface: SimplicialSurface) -> "BoundaryCondition":
        if surface.boundary_vertices:
            raise ValueError("closed boundary condition on a mesh with boundary")
        n = surface.n_vertices
        return cls(fixed=np.zeros(n, dtype=bool), values=np.zeros(n))

    @classmethod
    def dirichlet(cls, surface: SimplicialSurface, value=0.0) -> "BoundaryCondition":
        """Pin all boundary vertices to ``value`` (scalar or per-vertex array)."""
        n = surface.n_vertices
        fixed = np.zeros(n, dtype=bool)
        idx = sorted(surface.boundary_vertices)
        fixed[idx] = True
        values = np.zeros(n)
        values[idx] = value     # scalar broadcasts; arrays pair with sorted indices
        return cls(fixed=fixed, values=values)

    def impose(self, psi: np.ndarray) -> np.ndarray:
        out = psi.copy()
        out[self.fixed] = self.values[self.fixed]
        return out


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme selection, time step and solver knobs."""

    params: PhysicalParams = field(default_factory=PhysicalParams)
    dt: float = 0.01
    scheme: str = "semi_implicit"
    solver_tol: float = 1e-10
    solver_max_iter: Optional[int] = None    # defaults to 10 * n_vertices

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0 < self.solver_tol < 1:
            raise ValueError("solver_tol must lie in (0, 1)")
        if self.scheme not in ("explicit", "implicit", "semi_implicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.solver_max_iter is not None and self.solver_max_iter < 1:
            raise ValueError("solver_max_iter must be >= 1")

    def max_iter_for(self, n: int) -> int:
        return self.solver_max_iter if self.solver_max_iter is not None else 10 * n


def apply_source(state: SimState, src: SourceModel, cfg: SchemeConfig) -> np.ndarray:
    """Per-vertex increment (dt/c) * rho * Q(t), evaluated at the current time level."""
    if state.time < 0:
        raise ValueError("negative simulation time")
    inc = np.zeros_like(state.psi)
    if len(src.vertices):
        q = src.amplitude(state.time)
        if not math.isfinite(q):
            raise ValueError(f"source amplitude not finite at t={state.time}")
        inc[src.vertices] = (cfg.dt / cfg.params.c) * cfg.params.rho * q
    return inc


def cg_solve(A, b: np.ndarray, tol: float, max_iter: int,
             precond_diag: Optional[np.ndarray] = None,
             x0: Optional[np.ndarray] = None) -> np.ndarray:
    """Preconditioned conjugate gradients for a symmetric positive definite A.

    Returns x with true relative residual ||Ax - b|| / ||b|| <= tol.
    Deterministic; raises SolverError on the iteration cap or on a
    non-positive curvature direction (system not SPD).
    """
    b = np.asarray(b, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b)
    # work on b / ||b|| so inner products cannot underflow when the field
    # has decayed to denormal magnitudes
    b = b / bnorm
    x = np.zeros_like(b) if x0 is None else x0.astype(float) / bnorm
    r = b - A @ x
    z = r / precond_diag if precond_diag is not None else r.copy()
    p = z.copy()
    rz = float(r @ z)
    for _ in range(max_iter):
        if np.linalg.norm(r) <= tol:
            true_r = b - A @ x
            if np.linalg.norm(true_r) <= tol:
                return x * bnorm
            r = true_r
            z = r / precond_diag if precond_diag is not None else r.copy()
            p = z.copy()
            rz = float(r @ z)
        Ap = A @ p
        curv = float(p @ Ap)
        if curv <= 0.0:
            raise SolverError("non-positive curvature: system is not positive definite")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Ap
        z = r / precond_diag if precond_diag is not None else r.copy()
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(b - A @ x) <= tol:
        return x * bnorm
    raise SolverError(f"conjugate gradients did not converge in {max_iter} iterations")


def _check_finite(psi: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(psi)):
        raise NonFiniteFieldError("step produced non-finite values (unstable run)")
    return psi


def step_explicit(state: SimState, L: LaplaceOperator, cfg: SchemeConfig,
                  src: SourceModel, bc: BoundaryCondition) -> SimState:
    """Forward difference: psi + (k dt / c rho) Laplacian(psi) + source."""
    alpha = cfg.params.diffusivity * cfg.dt
    psi = state.psi + alpha * L.apply(state.psi) + apply_source(state, src, cfg)
    psi = bc.impose(_check_finite(psi))
    return SimState(psi=psi, time=state.time + cfg.dt, step=state.step + 1)


def step_implicit(state: SimState, L: LaplaceOperator, cfg: SchemeConfig,
                  src: SourceModel, bc: BoundaryCondition) -> SimState:
    """Backward difference solved in symmetric form.

    Multiplying the update through by the dual areas gives
    (M + alpha * S) psi' = M (psi + source), with M = diag(dual areas) and
    S = -stiffness positive semidefinite, so the system is SPD. Dirichlet
    rows are eliminated by substitution before the solve.
    """
    alpha = cfg.params.diffusivity * cfg.dt
    A = sp.diags(L.mass) + alpha * (-L.stiffness)
    rhs = L.mass * (state.psi + apply_source(state, src, cfg))

    free = ~bc.fixed
    x = bc.values.copy()
    if free.any():
        Aff = A[free][:, free].tocsr()
        b = rhs[free]
        if bc.fixed.any():
            b = b - A[free][:, bc.fixed] @ bc.values[bc.fixed]
        sol = cg_solve(Aff, b, tol=cfg.solver_tol,
                       max_iter=cfg.max_iter_for(int(free.sum())),
                       precond_diag=Aff.diagonal(),
                       x0=state.psi[free])
        x[free] = sol
    psi = _check_finite(x)
    return SimState(psi=psi, time=state.time + cfg.dt, step=state.step + 1)


def step_semi_implicit(state: SimState, L: LaplaceOperator, cfg: SchemeConfig,
                       src: SourceModel, bc: BoundaryCondition) -> SimState:
    """Pointwise update: only the updated vertex sits at the new time level.

    psi'_i = [psi_i + (alpha / P_i) sum_j w_ij psi_j + source_i]
             / [1 + (alpha / P_i) sum_j w_ij]
    With nonnegative weights this is a convex combination, hence the update
    never leaves the range of the current values (plus source).
    """
    alpha = cfg.params.diffusivity * cfg.dt
    row_sums = L.weight_row_sums()
    offdiag = L.stiffness + sp.diags(row_sums)    # w_ij off the diagonal only
    scale = alpha / L.mass
    denom = 1.0 + scale * row_sums
    if np.any(denom <= 0):
        bad = int(np.argmin(denom))
        raise UnstableDenominatorError(
            f"non-positive update denominator {denom[bad]:g} at vertex {bad} "
            "(negative weights on an obtuse mesh)"
        )
    numer = state.psi + scale * (offdiag @ state.psi) + apply_source(state, src, cfg)
    psi = bc.impose(_check_finite(numer / denom))
    return SimState(psi=psi, time=state.time + cfg.dt, step=state.step + 1)


_STEPPERS = {
    "explicit": step_explicit,
    "implicit": step_implicit,
    "semi_implicit": step_semi_implicit,
}


def run(surface: SimplicialSurface, L: LaplaceOperator, cfg: SchemeConfig,
        src: SourceModel, bc: BoundaryCondition, initial: np.ndarray,
        n_steps: int, snapshot_stride: int = 1,
        on_snapshot: Optional[Callable[[SimState], None]] = None) -> list[SimState]:
    """Advance n_steps and collect snapshots.

    Snapshots are taken at step 0, every ``snapshot_stride`` steps, and at the
    final step, giving ceil(n_steps / stride) + 1 of them. ``on_snapshot`` is
    called on each as it is produced.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if snapshot_stride < 1:
        raise ValueError("snapshot_stride must be >= 1")
    stepper = _STEPPERS[cfg.scheme]
    state = SimState(psi=bc.impose(np.asarray(initial, dtype=float)), time=0.0, step=0)

    snapshots = [state]
    if on_snapshot:
        on_snapshot(state)
    for n in range(1, n_steps + 1):
        state = stepper(state, L, cfg, src, bc)
        if n % snapshot_stride == 0 or n == n_steps:
            snapshots.append(state)
            if on_snapshot:
                on_snapshot(state)
    return snapshots
