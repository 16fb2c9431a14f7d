"""FastAPI service around the simulator: mesh inspection, simulation runs,
and property-verification sweeps. The CLI is a thin client of these routes."""

from __future__ import annotations

import io
from typing import Literal, Optional

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import analysis
from .dec import assemble_laplacian
from .domains import unit_square
from .export import Snapshot, export_csv, export_ply
from .mesh import MeshError, SimplicialSurface, build_metrics, load_obj
from .schemes import (
    BoundaryCondition,
    NonFiniteFieldError,
    PhysicalParams,
    SchemeConfig,
    SolverError,
    SourceModel,
    UnstableDenominatorError,
    run,
)

app = FastAPI(title="heatdec", description="Heat diffusion on triangulated surfaces")


# ---------------------------------------------------------------- wire models

SchemeName = Literal["explicit", "implicit", "semi_implicit"]


class SourceSpec(BaseModel):
    kind: Literal["none", "constant", "sqrt_ramp"] = "none"
    vertices: list[int] = []
    value: float = 1.0                      # constant source amplitude
    time_scale: float = Field(default=500.0, gt=0)  # sqrt_ramp: Q(t)=sqrt(t/time_scale)


class BoundarySpec(BaseModel):
    kind: Literal["closed", "dirichlet"] = "closed"
    value: float = 0.0


class MeshRequest(BaseModel):
    mesh_obj: str
    strict: bool = False


class MeshInfo(BaseModel):
    vertices: int
    edges: int
    faces: int
    euler_characteristic: int
    boundary_vertices: int
    closed: bool
    total_area: float
    negative_dual_edges: int


class SimulateRequest(BaseModel):
    mesh_obj: str
    scheme: SchemeName = "semi_implicit"
    dt: float = Field(gt=0)
    steps: int = Field(ge=0)
    stride: int = Field(default=1, ge=1)
    rho: float = Field(default=1.0, gt=0)
    c: float = Field(default=1.0, gt=0)
    k: float = Field(default=1.0, gt=0)
    source: SourceSpec = SourceSpec()
    boundary: BoundarySpec = BoundarySpec()
    solver_tol: float = Field(default=1e-10, gt=0, lt=1)
    solver_max_iter: Optional[int] = Field(default=None, ge=1)
    strict_mesh: bool = False
    initial: Literal["zeros", "random"] = "zeros"
    seed: int = 0


class SnapshotPayload(BaseModel):
    step: int
    time: float
    min_psi: float
    max_psi: float
    classes_present: list[str]
    ply: str
    csv: str


class SimulateResponse(BaseModel):
    manifest: dict[str, str]
    snapshots: list[SnapshotPayload]


class ContractionRequest(BaseModel):
    scheme: SchemeName = "semi_implicit"
    dts: list[float] = [0.01, 1.0, 100.0]
    trials: int = Field(default=100, ge=1)
    seed: int = 0
    solver_tol: float = Field(default=1e-10, gt=0, lt=1)
    mesh_obj: Optional[str] = None
    resolution: int = Field(default=20, ge=1)   # builtin unit square when no mesh given


class ContractionResponse(BaseModel):
    passed: bool
    max_ratio: float
    report_csv: str


class MaxPrincipleRequest(BaseModel):
    scheme: SchemeName = "semi_implicit"
    dt: float = Field(default=10.0, gt=0)
    steps: int = Field(default=100, ge=1)
    seed: int = 0
    solver_tol: float = Field(default=1e-10, gt=0, lt=1)
    mesh_obj: Optional[str] = None
    resolution: int = Field(default=20, ge=1)


class MaxPrincipleResponse(BaseModel):
    passed: bool
    first_violation: Optional[tuple[int, int, float]] = None
    report_csv: str


class ConvergenceRequest(BaseModel):
    scheme: SchemeName = "implicit"
    mode: Literal["temporal", "spatial", "joint"] = "joint"
    solver_tol: float = Field(default=1e-10, gt=0, lt=1)


class ConvergenceResponse(BaseModel):
    passed: bool
    fitted_order: float
    errors: list[float]
    report_csv: str


# ---------------------------------------------------------------- error mapping

@app.exception_handler(MeshError)
def _mesh_error(_, exc: MeshError):
    return JSONResponse(status_code=400,
                        content={"code": "mesh_error", "message": str(exc)})


@app.exception_handler(SolverError)
@app.exception_handler(NonFiniteFieldError)
@app.exception_handler(UnstableDenominatorError)
def _solver_error(_, exc: Exception):
    return JSONResponse(status_code=400,
                        content={"code": "solver_error", "message": str(exc)})


@app.exception_handler(ValueError)
def _config_error(_, exc: ValueError):
    return JSONResponse(status_code=400,
                        content={"code": "config_error", "message": str(exc)})


# ---------------------------------------------------------------- helpers

def _build_source(spec: SourceSpec, surface: SimplicialSurface) -> SourceModel:
    if spec.kind != "none" and spec.vertices:
        bad = [v for v in spec.vertices if v < 0 or v >= surface.n_vertices]
        if bad:
            raise ValueError(f"source vertex {bad[0]} out of range")
    if spec.kind == "none" or not spec.vertices:
        return SourceModel.none()
    if spec.kind == "constant":
        return SourceModel.constant(spec.vertices, spec.value)
    return SourceModel.sqrt_ramp(spec.vertices, spec.time_scale)


def _build_boundary(spec: BoundarySpec, surface: SimplicialSurface) -> BoundaryCondition:
    if spec.kind == "closed":
        return BoundaryCondition.closed(surface)
    return BoundaryCondition.dirichlet(surface, spec.value)


def _surface_for_verify(mesh_obj: Optional[str], resolution: int) -> SimplicialSurface:
    return load_obj(mesh_obj) if mesh_obj else unit_square(resolution)


def _snapshot_payload(surface: SimplicialSurface, snap: Snapshot) -> SnapshotPayload:
    ply_buf, csv_buf = io.BytesIO(), io.BytesIO()
    export_ply(surface, snap, ply_buf)
    export_csv(snap, csv_buf)
    return SnapshotPayload(
        step=snap.step,
        time=snap.time,
        min_psi=float(np.min(snap.psi)),
        max_psi=float(np.max(snap.psi)),
        classes_present=sorted(set(snap.classes)),
        ply=ply_buf.getvalue().decode("ascii"),
        csv=csv_buf.getvalue().decode("utf-8"),
    )


# ---------------------------------------------------------------- routes

@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/mesh/info", response_model=MeshInfo)
def mesh_info(req: MeshRequest) -> MeshInfo:
    surface = load_obj(req.mesh_obj)
    metrics = build_metrics(surface, strict=req.strict)
    return MeshInfo(
        vertices=surface.n_vertices,
        edges=surface.n_edges,
        faces=surface.n_triangles,
        euler_characteristic=surface.euler_characteristic,
        boundary_vertices=len(surface.boundary_vertices),
        closed=surface.is_closed,
        total_area=surface.total_area(),
        negative_dual_edges=metrics.negative_dual_edges,
    )


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest) -> SimulateResponse:
    surface = load_obj(req.mesh_obj)
    metrics = build_metrics(surface, strict=req.strict_mesh)
    L = assemble_laplacian(surface, metrics)
    src = _build_source(req.source, surface)
    bc = _build_boundary(req.boundary, surface)
    params = PhysicalParams(rho=req.rho, c=req.c, k=req.k)
    cfg = SchemeConfig(params=params, dt=req.dt, scheme=req.scheme,
                       solver_tol=req.solver_tol, solver_max_iter=req.solver_max_iter)

    if req.initial == "random":
        rng = np.random.default_rng(req.seed)
        initial = rng.uniform(0.0, 1.0, surface.n_vertices)
    else:
        initial = np.zeros(surface.n_vertices)

    states = run(surface, L, cfg, src, bc, initial,
                 n_steps=req.steps, snapshot_stride=req.stride)
    payloads = [_snapshot_payload(surface, Snapshot.from_state(s)) for s in states]

    manifest = {
        "scheme": req.scheme,
        "dt": "%.17g" % req.dt,
        "steps": str(req.steps),
        "stride": str(req.stride),
        "rho": "%.17g" % req.rho,
        "c": "%.17g" % req.c,
        "k": "%.17g" % req.k,
        "source_kind": req.source.kind,
        "source_vertices": ",".join(map(str, req.source.vertices)),
        "boundary": req.boundary.kind,
        "boundary_value": "%.17g" % req.boundary.value,
        "solver_tol": "%.17g" % req.solver_tol,
        "solver_max_iter": str(req.solver_max_iter),
        "strict_mesh": str(req.strict_mesh).lower(),
        "initial": req.initial,
        "seed": str(req.seed),
        "mesh_vertices": str(surface.n_vertices),
        "mesh_edges": str(surface.n_edges),
        "mesh_faces": str(surface.n_triangles),
        "euler_characteristic": str(surface.euler_characteristic),
        "boundary_vertex_count": str(len(surface.boundary_vertices)),
        "negative_dual_edges": str(metrics.negative_dual_edges),
        "total_area": "%.17g" % surface.total_area(),
    }
    return SimulateResponse(manifest=manifest, snapshots=payloads)


@app.post("/verify/contraction", response_model=ContractionResponse)
def verify_contraction(req: ContractionRequest) -> ContractionResponse:
    surface = _surface_for_verify(req.mesh_obj, req.resolution)
    cfg = SchemeConfig(dt=req.dts[0], scheme=req.scheme, solver_tol=req.solver_tol)
    report = analysis.perturbation_experiment(
        surface, cfg, trials=req.trials, seed=req.seed, dts=req.dts)
    buf = io.StringIO()
    analysis.write_report_csv(report.rows(), buf)
    return ContractionResponse(passed=report.passed(),
                               max_ratio=report.max_ratio(),
                               report_csv=buf.getvalue())


@app.post("/verify/max-principle", response_model=MaxPrincipleResponse)
def verify_max_principle(req: MaxPrincipleRequest) -> MaxPrincipleResponse:
    surface = _surface_for_verify(req.mesh_obj, req.resolution)
    metrics = build_metrics(surface)
    L = assemble_laplacian(surface, metrics)
    bc = (BoundaryCondition.closed(surface) if surface.is_closed
          else BoundaryCondition.dirichlet(surface, 0.0))
    cfg = SchemeConfig(dt=req.dt, scheme=req.scheme, solver_tol=req.solver_tol)
    rng = np.random.default_rng(req.seed)
    initial = rng.uniform(0.0, 1.0, surface.n_vertices)
    states = run(surface, L, cfg, SourceModel.none(), bc, initial, n_steps=req.steps)
    tol = 10.0 * req.solver_tol
    passed, violation = analysis.max_principle_check(states, (0.0, 1.0), tol=tol)
    rows = [{
        "scheme": req.scheme, "dt": req.dt, "h": float(np.mean(surface.edge_lengths())),
        "steps": req.steps, "max_error": None, "ratio": None, "pass": passed,
    }]
    buf = io.StringIO()
    analysis.write_report_csv(rows, buf)
    return MaxPrincipleResponse(passed=passed, first_violation=violation,
                                report_csv=buf.getvalue())


@app.post("/verify/convergence", response_model=ConvergenceResponse)
def verify_convergence(req: ConvergenceRequest) -> ConvergenceResponse:
    if req.mode == "temporal":
        report = analysis.temporal_sweep(req.scheme, solver_tol=req.solver_tol)
        passed = report.monotone() and abs(report.fitted_order() - 1.0) <= 0.3
    elif req.mode == "spatial":
        report = analysis.spatial_sweep(req.scheme, solver_tol=req.solver_tol)
        passed = report.monotone() and report.fitted_order() >= 1.0
    else:
        report = analysis.joint_sweep(req.scheme, solver_tol=req.solver_tol)
        passed = report.monotone()
    buf = io.StringIO()
    analysis.write_report_csv(report.rows(), buf)
    return ConvergenceResponse(passed=passed, fitted_order=report.fitted_order(),
                               errors=list(report.errors), report_csv=buf.getvalue())
