"""Thin command-line client for the simulation service.

By default requests are served in-process (no server needed); pass
``--server http://host:port`` to talk to a remote instance started with
``heatdec serve``.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

EXIT_OK = 0
EXIT_PROPERTY_FAILED = 1
EXIT_CONFIG = 2
EXIT_MESH = 3
EXIT_SOLVER = 4
EXIT_IO = 5

_ERROR_EXITS = {
    "config_error": EXIT_CONFIG,
    "mesh_error": EXIT_MESH,
    "solver_error": EXIT_SOLVER,
}


def _make_client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=600.0)
    # in-process ASGI client; the service runs inside the CLI process
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _post(ctx, path: str, payload: dict) -> dict:
    client = _make_client(ctx.obj.get("server"))
    try:
        resp = client.post(path, json=payload)
    except Exception as exc:
        click.echo(f"error: service unreachable: {exc}", err=True)
        sys.exit(EXIT_IO)
    if resp.status_code == 422:
        click.echo(f"error: invalid configuration: {resp.text}", err=True)
        sys.exit(EXIT_CONFIG)
    if resp.status_code != 200:
        body = {}
        try:
            body = resp.json()
        except Exception:
            pass
        code = body.get("code", "config_error")
        click.echo(f"error ({code}): {body.get('message', resp.text)}", err=True)
        sys.exit(_ERROR_EXITS.get(code, EXIT_CONFIG))
    return resp.json()


def _read_mesh(path: str) -> str:
    try:
        return Path(path).read_text(encoding="ascii", errors="replace")
    except OSError as exc:
        click.echo(f"error: cannot read mesh file: {exc}", err=True)
        sys.exit(EXIT_IO)


def _write_file(path: Path, content: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(content.encode("utf-8"))
    except OSError as exc:
        click.echo(f"error: cannot write {path}: {exc}", err=True)
        sys.exit(EXIT_IO)


def _apply_config_file(ctx, config_path: str | None) -> None:
    """Plain key=value config file; explicit command-line flags win."""
    if not config_path:
        return
    try:
        lines = Path(config_path).read_text().splitlines()
    except OSError as exc:
        raise click.UsageError(f"cannot read config file: {exc}")
    from click.core import ParameterSource

    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.UsageError(f"config line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        name = key.strip().replace("-", "_")
        if name not in ctx.params:
            raise click.UsageError(f"config line {lineno}: unknown key {key.strip()!r}")
        if ctx.get_parameter_source(name) != ParameterSource.COMMANDLINE:
            param = next(p for p in ctx.command.params if p.name == name)
            if param.multiple:
                converted = tuple(
                    param.type.convert(v.strip(), param, ctx)
                    for v in value.split(",") if v.strip()
                )
            else:
                converted = param.type.convert(value.strip(), param, ctx)
            ctx.params[name] = converted


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Remote service base URL (default: run in-process).")
@click.pass_context
def main(ctx, server):
    """Heat diffusion on triangulated surfaces."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command("run")
@click.option("--mesh", "mesh", required=True, type=click.Path(), help="OBJ mesh file.")
@click.option("--scheme", type=click.Choice(["explicit", "implicit", "semi_implicit"]),
              default="semi_implicit", show_default=True)
@click.option("--dt", type=float, default=0.01, show_default=True)
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--stride", type=int, default=1, show_default=True,
              help="Export a snapshot every this many steps.")
@click.option("--rho", type=float, default=1.0, show_default=True)
@click.option("--c", type=float, default=1.0, show_default=True)
@click.option("--k", type=float, default=1.0, show_default=True)
@click.option("--source", type=click.Choice(["none", "constant", "sqrt_ramp"]),
              default="none", show_default=True)
@click.option("--source-vertex", type=int, multiple=True,
              help="Vertex index receiving the source (repeatable).")
@click.option("--source-value", type=float, default=1.0, show_default=True,
              help="Amplitude for the constant source.")
@click.option("--source-time-scale", type=float, default=500.0, show_default=True,
              help="sqrt_ramp source: Q(t) = sqrt(t / this).")
@click.option("--boundary", type=click.Choice(["closed", "dirichlet"]),
              default="closed", show_default=True)
@click.option("--boundary-value", type=float, default=0.0, show_default=True)
@click.option("--solver-tol", type=float, default=1e-10, show_default=True)
@click.option("--solver-max-iter", type=int, default=None)
@click.option("--strict-mesh", is_flag=True,
              help="Reject meshes with negative dual edge lengths.")
@click.option("--initial", type=click.Choice(["zeros", "random"]),
              default="zeros", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default="out", show_default=True)
@click.option("--config", "config", type=click.Path(), default=None,
              help="key=value config file; command-line flags win.")
@click.pass_context
def run_cmd(ctx, **kw):
    """Load a mesh, advance the heat equation, export snapshots."""
    _apply_config_file(ctx, kw.pop("config") or ctx.params.get("config"))
    kw = {k: ctx.params.get(k, v) for k, v in kw.items()}
    if kw["dt"] <= 0:
        raise click.UsageError("--dt must be positive")
    if kw["steps"] < 0:
        raise click.UsageError("--steps must be >= 0")
    if kw["stride"] < 1:
        raise click.UsageError("--stride must be >= 1")

    payload = {
        "mesh_obj": _read_mesh(kw["mesh"]),
        "scheme": kw["scheme"],
        "dt": kw["dt"],
        "steps": kw["steps"],
        "stride": kw["stride"],
        "rho": kw["rho"],
        "c": kw["c"],
        "k": kw["k"],
        "source": {
            "kind": kw["source"],
            "vertices": list(kw["source_vertex"]),
            "value": kw["source_value"],
            "time_scale": kw["source_time_scale"],
        },
        "boundary": {"kind": kw["boundary"], "value": kw["boundary_value"]},
        "solver_tol": kw["solver_tol"],
        "solver_max_iter": kw["solver_max_iter"],
        "strict_mesh": kw["strict_mesh"],
        "initial": kw["initial"],
        "seed": kw["seed"],
    }
    body = _post(ctx, "/simulate", payload)

    out = Path(kw["out"])
    for snap in body["snapshots"]:
        stem = "snapshot_%06d" % snap["step"]
        _write_file(out / (stem + ".ply"), snap["ply"])
        _write_file(out / (stem + ".csv"), snap["csv"])
    manifest = "".join(f"{k} = {v}\n" for k, v in sorted(body["manifest"].items()))
    _write_file(out / "manifest.txt", manifest)
    click.echo(f"wrote {len(body['snapshots'])} snapshot(s) to {out}")
    sys.exit(EXIT_OK)


@main.command("inspect")
@click.option("--mesh", required=True, type=click.Path())
@click.option("--strict-mesh", is_flag=True)
@click.pass_context
def inspect_cmd(ctx, mesh, strict_mesh):
    """Print topology and dual-geometry statistics of an OBJ mesh."""
    body = _post(ctx, "/mesh/info", {"mesh_obj": _read_mesh(mesh), "strict": strict_mesh})
    for key, value in body.items():
        click.echo(f"{key} = {value}")
    sys.exit(EXIT_OK)


@main.group("verify")
def verify_group():
    """Run the property-verification sweeps and emit report.csv."""


def _finish_verify(body: dict, out: str) -> None:
    _write_file(Path(out) / "report.csv", body["report_csv"])
    status = "pass" if body["passed"] else "FAIL"
    click.echo(f"{status} (report written to {Path(out) / 'report.csv'})")
    sys.exit(EXIT_OK if body["passed"] else EXIT_PROPERTY_FAILED)


@verify_group.command("contraction")
@click.option("--scheme", type=click.Choice(["explicit", "implicit", "semi_implicit"]),
              default="semi_implicit", show_default=True)
@click.option("--dt", "dts", type=float, multiple=True,
              help="Time step(s) to probe (repeatable); default 0.01, 1, 100.")
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--solver-tol", type=float, default=1e-10, show_default=True)
@click.option("--mesh", type=click.Path(), default=None,
              help="OBJ mesh; default is a builtin unit-square grid.")
@click.option("--resolution", type=int, default=20, show_default=True)
@click.option("--out", type=click.Path(), default=".", show_default=True)
@click.pass_context
def verify_contraction(ctx, scheme, dts, trials, seed, solver_tol, mesh, resolution, out):
    """Check that one step never amplifies a perturbation in the max norm."""
    payload = {
        "scheme": scheme,
        "dts": list(dts) or [0.01, 1.0, 100.0],
        "trials": trials,
        "seed": seed,
        "solver_tol": solver_tol,
        "mesh_obj": _read_mesh(mesh) if mesh else None,
        "resolution": resolution,
    }
    body = _post(ctx, "/verify/contraction", payload)
    click.echo(f"max contraction ratio: {body['max_ratio']:.6g}")
    _finish_verify(body, out)


@verify_group.command("max-principle")
@click.option("--scheme", type=click.Choice(["explicit", "implicit", "semi_implicit"]),
              default="semi_implicit", show_default=True)
@click.option("--dt", type=float, default=10.0, show_default=True)
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--solver-tol", type=float, default=1e-10, show_default=True)
@click.option("--mesh", type=click.Path(), default=None)
@click.option("--resolution", type=int, default=20, show_default=True)
@click.option("--out", type=click.Path(), default=".", show_default=True)
@click.pass_context
def verify_max_principle(ctx, scheme, dt, steps, seed, solver_tol, mesh, resolution, out):
    """Check that a source-free run stays inside its initial bounds."""
    payload = {
        "scheme": scheme, "dt": dt, "steps": steps, "seed": seed,
        "solver_tol": solver_tol,
        "mesh_obj": _read_mesh(mesh) if mesh else None,
        "resolution": resolution,
    }
    body = _post(ctx, "/verify/max-principle", payload)
    if body.get("first_violation"):
        step, vertex, value = body["first_violation"]
        click.echo(f"first violation: step {step}, vertex {vertex}, value {value:.6g}")
    _finish_verify(body, out)


@verify_group.command("convergence")
@click.option("--scheme", type=click.Choice(["explicit", "implicit", "semi_implicit"]),
              default="implicit", show_default=True)
@click.option("--mode", type=click.Choice(["temporal", "spatial", "joint"]),
              default="joint", show_default=True)
@click.option("--solver-tol", type=float, default=1e-10, show_default=True)
@click.option("--out", type=click.Path(), default=".", show_default=True)
@click.pass_context
def verify_convergence(ctx, scheme, mode, solver_tol, out):
    """Measure error decay against the analytic unit-square solution."""
    payload = {"scheme": scheme, "mode": mode, "solver_tol": solver_tol}
    body = _post(ctx, "/verify/convergence", payload)
    click.echo(f"observed order: {body['fitted_order']:.3f}")
    _finish_verify(body, out)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve_cmd(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
