"""Heat diffusion on triangulated 2-manifolds via a circumcentric-dual
discrete Laplacian, with unconditionally stable implicit and semi-implicit
time stepping."""

from .dec import (
    HodgeStars,
    LaplaceOperator,
    assemble_d0,
    assemble_laplacian,
    cotan_oracle,
    hodge_stars,
)
from .mesh import (
    DualMetrics,
    GeometryError,
    MeshError,
    ObjParseError,
    SimplicialSurface,
    TopologyError,
    build_metrics,
    build_surface,
    circumcenter,
    dump_obj,
    load_obj,
)
from .schemes import (
    BoundaryCondition,
    NonFiniteFieldError,
    PhysicalParams,
    SchemeConfig,
    SimState,
    SolverError,
    SourceModel,
    UnstableDenominatorError,
    apply_source,
    cg_solve,
    run,
    step_explicit,
    step_implicit,
    step_semi_implicit,
)

__all__ = [
    "BoundaryCondition",
    "DualMetrics",
    "GeometryError",
    "HodgeStars",
    "LaplaceOperator",
    "MeshError",
    "NonFiniteFieldError",
    "ObjParseError",
    "PhysicalParams",
    "SchemeConfig",
    "SimState",
    "SimplicialSurface",
    "SolverError",
    "SourceModel",
    "TopologyError",
    "UnstableDenominatorError",
    "apply_source",
    "assemble_d0",
    "assemble_laplacian",
    "build_metrics",
    "build_surface",
    "cg_solve",
    "circumcenter",
    "cotan_oracle",
    "dump_obj",
    "hodge_stars",
    "load_obj",
    "run",
    "step_explicit",
    "step_implicit",
    "step_semi_implicit",
]

__version__ = "0.1.0"
