"""Executable verification: contraction experiments, maximum-principle checks,
and convergence studies against a separable analytic solution."""

from __future__ import annotations

import dataclasses
import io
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dec import assemble_laplacian
from .domains import unit_square
from .mesh import SimplicialSurface, build_metrics
from .schemes import (
    BoundaryCondition,
    PhysicalParams,
    SchemeConfig,
    SimState,
    SourceModel,
    _STEPPERS,
)

REPORT_COLUMNS = ("scheme", "dt", "h", "steps", "max_error", "ratio", "pass")


@dataclass(frozen=True)
class StabilityReport:
    """Contraction ratios max|eps^1| / max|eps^0| from random perturbation trials."""

    scheme: str
    dts: tuple
    max_fields: tuple       # per dt: largest |psi| seen after the step
    ratios: tuple           # per dt: tuple of per-trial ratios
    mesh_size: float
    slack: float            # allowed excess over 1 (solver tolerance headroom)

    def max_ratio(self) -> float:
        return max((max(r) for r in self.ratios if r), default=0.0)

    def passed(self) -> bool:
        return all(r <= 1.0 + self.slack for rs in self.ratios for r in rs)

    def rows(self) -> list[dict]:
        return [
            {
                "scheme": self.scheme,
                "dt": dt,
                "h": self.mesh_size,
                "steps": 1,
                "max_error": None,
                "ratio": max(rs, default=0.0),
                "pass": all(r <= 1.0 + self.slack for r in rs),
            }
            for dt, rs in zip(self.dts, self.ratios)
        ]


@dataclass(frozen=True)
class ConvergenceReport:
    """Max-norm errors against the analytic solution along a refinement sweep."""

    scheme: str
    mesh_sizes: tuple
    time_steps: tuple
    errors: tuple
    observed_orders: tuple      # pairwise log-log slopes along the varying axis

    def fitted_order(self) -> float:
        """Least-squares slope of log(error) against the varying axis."""
        axis = self._axis()
        if len(set(axis)) < 2:
            return float("nan")
        return float(np.polyfit(np.log(axis), np.log(self.errors), 1)[0])

    def monotone(self) -> bool:
        return all(b <= a for a, b in zip(self.errors, self.errors[1:]))

    def _axis(self) -> tuple:
        return self.time_steps if len(set(self.time_steps)) > 1 else self.mesh_sizes

    def rows(self) -> list[dict]:
        return [
            {
                "scheme": self.scheme,
                "dt": dt,
                "h": h,
                "steps": None,
                "max_error": err,
                "ratio": None,
                "pass": True,
            }
            for h, dt, err in zip(self.mesh_sizes, self.time_steps, self.errors)
        ]


def perturbation_experiment(surface: SimplicialSurface, cfg: SchemeConfig,
                            trials: int, seed: int,
                            dts: Optional[Sequence[float]] = None,
                            src: Optional[SourceModel] = None,
                            bc: Optional[BoundaryCondition] = None) -> StabilityReport:
    """Evolve random base/perturbed field pairs one step and record the ratios.

    The implicit and semi-implicit schemes must contract every ratio to at
    most 1 (plus solver headroom) on nonnegative-weight meshes; the explicit
    scheme has no such guarantee above its stability threshold.
    """
    metrics = build_metrics(surface)
    L = assemble_laplacian(surface, metrics)
    if src is None:
        src = SourceModel.none()
    if bc is None:
        bc = (BoundaryCondition.closed(surface) if surface.is_closed
              else BoundaryCondition.dirichlet(surface, 0.0))
    if dts is None:
        dts = [cfg.dt]

    rng = np.random.default_rng(seed)
    all_ratios = []
    max_fields = []
    for dt in dts:
        cfg_dt = dataclasses.replace(cfg, dt=dt)
        stepper = _STEPPERS[cfg_dt.scheme]
        ratios = []
        biggest = 0.0
        for _ in range(trials):
            base = bc.impose(rng.uniform(0.0, 1.0, surface.n_vertices))
            pert = bc.impose(base + rng.uniform(-1.0, 1.0, surface.n_vertices))
            eps0 = float(np.max(np.abs(pert - base)))
            s1 = stepper(SimState(psi=base), L, cfg_dt, src, bc)
            s2 = stepper(SimState(psi=pert), L, cfg_dt, src, bc)
            eps1 = float(np.max(np.abs(s2.psi - s1.psi)))
            ratios.append(eps1 / eps0 if eps0 > 0 else 0.0)
            biggest = max(biggest, float(np.max(np.abs(s1.psi))),
                          float(np.max(np.abs(s2.psi))))
        all_ratios.append(tuple(ratios))
        max_fields.append(biggest)

    h = float(np.mean(surface.edge_lengths()))
    return StabilityReport(
        scheme=cfg.scheme,
        dts=tuple(dts),
        max_fields=tuple(max_fields),
        ratios=tuple(all_ratios),
        mesh_size=h,
        slack=10.0 * cfg.solver_tol,
    )


def analytic_solution(x, y, t: float, params: PhysicalParams = PhysicalParams()) -> np.ndarray:
    """Separable decay mode on the unit square with zero boundary values."""
    lam = 2.0 * math.pi ** 2 * params.diffusivity
    return np.exp(-lam * t) * np.sin(np.pi * np.asarray(x)) * np.sin(np.pi * np.asarray(y))


def analytic_residual(params: PhysicalParams = PhysicalParams(),
                      t: float = 0.05, n_samples: int = 7, h: float = 1e-4,
                      ht: float = 1e-5) -> float:
    """Finite-difference residual of the heat equation on the analytic solution.

    Self-check that the convergence oracle actually solves the PDE; returns
    the max |rho c psi_t - k (psi_xx + psi_yy)| over interior sample points.
    The time step is smaller than the space step because the mode decays much
    faster in time than it bends in space.
    """
    xs = np.linspace(0.15, 0.85, n_samples)
    worst = 0.0
    for x in xs:
        for y in xs:
            u = lambda xx, yy, tt: float(analytic_solution(xx, yy, tt, params))
            ut = (u(x, y, t + ht) - u(x, y, t - ht)) / (2 * ht)
            uxx = (u(x + h, y, t) - 2 * u(x, y, t) + u(x - h, y, t)) / h**2
            uyy = (u(x, y + h, t) - 2 * u(x, y, t) + u(x, y - h, t)) / h**2
            res = params.rho * params.c * ut - params.k * (uxx + uyy)
            worst = max(worst, abs(res))
    return worst


def _error_on_square(scheme: str, n: int, dt: float, t_final: float,
                     params: PhysicalParams, solver_tol: float) -> tuple[float, float]:
    """One refinement case: evolve to t_final and return (dt used, max error)."""
    surface = unit_square(n)
    metrics = build_metrics(surface)
    L = assemble_laplacian(surface, metrics)
    bc = BoundaryCondition.dirichlet(surface, 0.0)
    src = SourceModel.none()

    steps = max(1, round(t_final / dt))
    dt_eff = t_final / steps
    cfg = SchemeConfig(params=params, dt=dt_eff, scheme=scheme, solver_tol=solver_tol)

    x, y = surface.vertices[:, 0], surface.vertices[:, 1]
    state = SimState(psi=bc.impose(analytic_solution(x, y, 0.0, params)))
    stepper = _STEPPERS[scheme]
    for _ in range(steps):
        state = stepper(state, L, cfg, src, bc)
    exact = analytic_solution(x, y, t_final, params)
    return dt_eff, float(np.max(np.abs(state.psi - exact)))


def convergence_study(resolutions: Sequence[int], time_steps: Sequence[float],
                      scheme: str, t_final: float = 0.1,
                      params: PhysicalParams = PhysicalParams(),
                      solver_tol: float = 1e-10) -> ConvergenceReport:
    """Paired (resolution, dt) sweep on the unit square against the analytic mode.

    ``resolutions`` and ``time_steps`` must have equal length; hold one
    constant to isolate spatial or temporal order, or refine both for the
    joint path.
    """
    if len(resolutions) != len(time_steps):
        raise ValueError("resolutions and time_steps must pair up")
    hs, dts, errs = [], [], []
    for n, dt in zip(resolutions, time_steps):
        dt_eff, err = _error_on_square(scheme, n, dt, t_final, params, solver_tol)
        hs.append(1.0 / n)
        dts.append(dt_eff)
        errs.append(err)

    axis = dts if len(set(dts)) > 1 else hs
    orders = tuple(
        math.log(errs[i] / errs[i + 1]) / math.log(axis[i] / axis[i + 1])
        if errs[i + 1] > 0 and axis[i] != axis[i + 1] else float("nan")
        for i in range(len(errs) - 1)
    )
    return ConvergenceReport(
        scheme=scheme,
        mesh_sizes=tuple(hs),
        time_steps=tuple(dts),
        errors=tuple(errs),
        observed_orders=orders,
    )


def temporal_sweep(scheme: str, n_grid: int = 48, dt0: float = 1e-2,
                   halvings: int = 4, t_final: float = 0.1,
                   solver_tol: float = 1e-10) -> ConvergenceReport:
    dts = [dt0 / 2**i for i in range(halvings + 1)]
    return convergence_study([n_grid] * len(dts), dts, scheme,
                             t_final=t_final, solver_tol=solver_tol)


def spatial_sweep(scheme: str, ns: Sequence[int] = (4, 8, 16), dt: float = 2.5e-4,
                  t_final: float = 0.1, solver_tol: float = 1e-10) -> ConvergenceReport:
    return convergence_study(list(ns), [dt] * len(ns), scheme,
                             t_final=t_final, solver_tol=solver_tol)


def joint_sweep(scheme: str, levels: Sequence[tuple[int, float]] = ((8, 0.02), (16, 0.01), (32, 0.005)),
                t_final: float = 0.1, solver_tol: float = 1e-10) -> ConvergenceReport:
    ns = [n for n, _ in levels]
    dts = [dt for _, dt in levels]
    return convergence_study(ns, dts, scheme, t_final=t_final, solver_tol=solver_tol)


def max_principle_check(snapshots, bounds: tuple[float, float],
                        tol: float = 0.0):
    """Verify every snapshot stays in [m - tol, M + tol].

    Returns (passed, violation); violation is (step, vertex, value) for the
    first excursion, or None.
    """
    lo, hi = bounds
    for snap in snapshots:
        psi = snap.psi
        below = psi < lo - tol
        above = psi > hi + tol
        if below.any() or above.any():
            idx = int(np.argmax(below | above))
            return False, (snap.step, idx, float(psi[idx]))
    return True, None


def write_report_csv(rows: Sequence[dict], sink) -> None:
    """Serialize report rows with the shared column schema; LF endings, UTF-8."""
    buf = io.StringIO()
    buf.write(",".join(REPORT_COLUMNS) + "\n")
    for row in rows:
        cells = []
        for col in REPORT_COLUMNS:
            val = row.get("pass") if col == "pass" else row.get(col)
            if val is None:
                cells.append("")
            elif isinstance(val, bool):
                cells.append("true" if val else "false")
            elif isinstance(val, float):
                cells.append("%.17g" % val)
            else:
                cells.append(str(val))
        buf.write(",".join(cells) + "\n")
    data = buf.getvalue()
    try:
        sink.write(data)
    except TypeError:
        sink.write(data.encode("utf-8"))
