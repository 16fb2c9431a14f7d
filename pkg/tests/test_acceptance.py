"""Acceptance suite: one test per release criterion, each printing a
pass/fail line with its measured quantity. Tolerances are fixed here, not
configurable."""

import math
import time

import numpy as np
import pytest
from click.testing import CliRunner

from heatdec import (
    BoundaryCondition,
    SchemeConfig,
    SimState,
    SourceModel,
    assemble_laplacian,
    build_metrics,
    cotan_oracle,
    run,
)
from heatdec.analysis import joint_sweep, perturbation_experiment, temporal_sweep
from heatdec.cli import main
from heatdec.domains import hex_patch, random_delaunay, torus, unit_square
from heatdec.export import classify_temperature
from heatdec.mesh import dump_obj
from heatdec.schemes import step_explicit, step_implicit, step_semi_implicit

SOLVER_TOL = 1e-10
SLACK = 10 * SOLVER_TOL


class _Clock:
    def __init__(self, budget):
        self.budget = budget

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False


def _report(num, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}")
    assert ok, detail


def _hex_spike_setup():
    surface = hex_patch()
    L = assemble_laplacian(surface, build_metrics(surface))
    bc = BoundaryCondition.dirichlet(surface, 0.0)
    state = SimState(psi=bc.impose(np.array([1.0, 0, 0, 0, 0, 0, 0])))
    return surface, L, bc, state


def test_criterion_1_oracle_equivalence():
    meshes = [hex_patch(), unit_square(20)]
    meshes += [random_delaunay(7, seed=s) for s in range(10)]   # 49 <= 200 vertices
    with _Clock(5.0) as clk:
        worst = 0.0
        for surface in meshes:
            direct = assemble_laplacian(surface, build_metrics(surface)).stiffness
            oracle = cotan_oracle(surface).stiffness
            worst = max(worst, float(np.max(np.abs((direct - oracle).toarray()))))
    ok = worst <= 1e-12 and clk.elapsed < 5.0
    _report(1, ok, f"Laplacian vs cotangent oracle, max entry diff {worst:.3e} "
                   f"on {len(meshes)} meshes ({clk.elapsed:.2f}s)")


def test_criterion_2_exact_stencil_value():
    with _Clock(1.0) as clk:
        surface = hex_patch()
        L = assemble_laplacian(surface, build_metrics(surface))
        x, y = surface.vertices[:, 0], surface.vertices[:, 1]
        val = float(L.apply(x**2 + y**2)[0])
    ok = abs(val - 4.0) <= 1e-10 and clk.elapsed < 1.0
    _report(2, ok, f"quadratic-field stencil value at center = {val!r} "
                   f"(target 4 within 1e-10, {clk.elapsed:.2f}s)")


def test_criterion_3_unconditional_stability():
    with _Clock(60.0) as clk:
        surface = unit_square(20)   # h = 0.05
        worst = 0.0
        for scheme in ("implicit", "semi_implicit"):
            cfg = SchemeConfig(dt=1.0, scheme=scheme, solver_tol=SOLVER_TOL)
            report = perturbation_experiment(surface, cfg, trials=100, seed=11,
                                             dts=[0.01, 1.0, 100.0])
            worst = max(worst, report.max_ratio())
            assert report.passed(), f"{scheme} ratio {report.max_ratio()}"
        # contrast: forward difference amplifies the center spike threefold
        _, L, bc, state = _hex_spike_setup()
        cfg = SchemeConfig(dt=1.0, scheme="explicit")
        out = step_explicit(state, L, cfg, SourceModel.none(), bc)
        explicit_ratio = float(np.max(np.abs(out.psi)))
    ok = worst <= 1.0 + SLACK and abs(explicit_ratio - 3.0) < 1e-9 and clk.elapsed < 60.0
    _report(3, ok, f"stable-scheme max contraction ratio {worst:.12f} <= 1+{SLACK:g}; "
                   f"explicit hex ratio {explicit_ratio:.6f} ({clk.elapsed:.1f}s)")


def test_criterion_4_maximum_principle():
    with _Clock(30.0) as clk:
        surface = unit_square(20)
        L = assemble_laplacian(surface, build_metrics(surface))
        bc = BoundaryCondition.dirichlet(surface, 0.0)
        rng = np.random.default_rng(5)
        initial = bc.impose(rng.uniform(0.0, 1.0, surface.n_vertices))
        lo, hi = 0.0, 1.0
        worst_excess = 0.0
        for scheme in ("semi_implicit", "implicit"):
            cfg = SchemeConfig(dt=10.0, scheme=scheme, solver_tol=SOLVER_TOL)
            snaps = run(surface, L, cfg, SourceModel.none(), bc, initial, n_steps=100)
            for s in snaps:
                worst_excess = max(worst_excess,
                                   float(lo - s.psi.min()), float(s.psi.max() - hi))
    ok = worst_excess <= SLACK and clk.elapsed < 30.0
    _report(4, ok, f"100 steps at dt=10 stay in [0,1] within {worst_excess:.2e} "
                   f"(allowed {SLACK:g}, {clk.elapsed:.1f}s)")


def test_criterion_5_conservation_on_torus():
    with _Clock(30.0) as clk:
        surface = torus()
        L = assemble_laplacian(surface, build_metrics(surface))
        bc = BoundaryCondition.closed(surface)
        rng = np.random.default_rng(17)
        state = SimState(psi=rng.uniform(0.0, 1.0, surface.n_vertices))
        cfg = SchemeConfig(dt=1.0, scheme="implicit", solver_tol=SOLVER_TOL)
        heat0 = float(L.mass @ state.psi)
        drift = 0.0
        for _ in range(100):
            state = step_implicit(state, L, cfg, SourceModel.none(), bc)
            drift = max(drift, abs(float(L.mass @ state.psi) - heat0) / abs(heat0))
    ok = drift <= 1e-8 and clk.elapsed < 30.0
    _report(5, ok, f"weighted heat drift over 100 implicit steps {drift:.3e} "
                   f"(allowed 1e-8, {clk.elapsed:.1f}s)")


def test_criterion_6_convergence():
    with _Clock(120.0) as clk:
        joint = joint_sweep("implicit", solver_tol=SOLVER_TOL)
        temporal = temporal_sweep("implicit", n_grid=48, dt0=1e-2, halvings=4,
                                  solver_tol=SOLVER_TOL)
        order = temporal.fitted_order()
    ok = joint.monotone() and abs(order - 1.0) <= 0.3 and clk.elapsed < 120.0
    _report(6, ok, f"joint-refinement errors {['%.2e' % e for e in joint.errors]} "
                   f"monotone={joint.monotone()}, temporal order {order:.3f} "
                   f"(target 1.0 +/- 0.3, {clk.elapsed:.1f}s)")


def test_criterion_7_scheme_coincidence():
    with _Clock(1.0) as clk:
        _, L, bc, state = _hex_spike_setup()
        src = SourceModel.none()
        a = step_implicit(state, L,
                          SchemeConfig(dt=1.0, scheme="implicit",
                                       solver_tol=1e-14), src, bc)
        b = step_semi_implicit(state, L,
                               SchemeConfig(dt=1.0, scheme="semi_implicit"), src, bc)
    ok = (abs(a.psi[0] - 0.2) <= 1e-10 and abs(b.psi[0] - 0.2) <= 1e-10
          and clk.elapsed < 1.0)
    _report(7, ok, f"single-unknown step: implicit {a.psi[0]!r}, "
                   f"semi-implicit {b.psi[0]!r} (target 0.2 within 1e-10)")


def test_criterion_8_torus_source_run(tmp_path):
    # large torus so the far side stays untouched while the source vertex
    # passes 1: all three temperature classes appear in the final snapshot
    with _Clock(60.0) as clk:
        mesh_path = tmp_path / "torus.obj"
        mesh_path.write_text(dump_obj(torus(24, 12, 20.0, 10.0)))
        out = tmp_path / "out"
        result = CliRunner().invoke(main, [
            "run", "--mesh", str(mesh_path), "--scheme", "semi_implicit",
            "--dt", "0.04", "--steps", "500", "--stride", "100",
            "--source", "sqrt_ramp", "--source-vertex", "0",
            "--out", str(out),
        ])
        assert result.exit_code == 0, result.output
        maxima = []
        final_classes = set()
        for step in (0, 100, 200, 300, 400, 500):
            rows = (out / f"snapshot_{step:06d}.csv").read_text().splitlines()[1:]
            psi = np.array([float(r.split(",")[2]) for r in rows])
            assert np.all(np.isfinite(psi))
            maxima.append(float(psi.max()))
            if step == 500:
                final_classes = {classify_temperature(v) for v in psi}
    monotone = all(b >= a - 1e-12 for a, b in zip(maxima, maxima[1:]))
    ok = (monotone and maxima[-1] > 1.0
          and final_classes == {"red", "yellow", "blue"} and clk.elapsed < 60.0)
    _report(8, ok, f"torus source run: max history {['%.3f' % m for m in maxima]}, "
                   f"final classes {sorted(final_classes)} ({clk.elapsed:.1f}s)")


def test_criterion_9_determinism(tmp_path):
    mesh_path = tmp_path / "mesh.obj"
    mesh_path.write_text(dump_obj(unit_square(6)))
    args = ["run", "--mesh", str(mesh_path), "--scheme", "implicit",
            "--dt", "0.05", "--steps", "10", "--stride", "5",
            "--boundary", "dirichlet", "--initial", "random", "--seed", "123"]
    runner = CliRunner()
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert runner.invoke(main, args + ["--out", str(out1)]).exit_code == 0
    assert runner.invoke(main, args + ["--out", str(out2)]).exit_code == 0
    files = sorted(p.name for p in out1.iterdir())
    identical = all((out1 / n).read_bytes() == (out2 / n).read_bytes() for n in files)
    _report(9, identical, f"{len(files)} output files byte-identical across reruns")
