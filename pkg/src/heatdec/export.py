"""Snapshot serialization: classified vertex colors to ASCII PLY and CSV."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .mesh import SimplicialSurface
from .schemes import SimState

# hot regions saturate red, heated regions yellow, untouched regions blue
RED, YELLOW, BLUE = "red", "yellow", "blue"
BLUE_THRESHOLD = 1e-9   # "untouched" with float tolerance instead of exact zero

_COLORS = {RED: (255, 0, 0), YELLOW: (255, 255, 0), BLUE: (0, 0, 255)}


def classify_temperature(psi: float) -> str:
    """red above 1, yellow in (threshold, 1], blue at (effectively) zero or below."""
    if not math.isfinite(psi):
        raise ValueError(f"cannot classify non-finite temperature {psi!r}")
    if psi > 1.0:
        return RED
    if psi > BLUE_THRESHOLD:
        return YELLOW
    return BLUE


@dataclass(frozen=True)
class Snapshot:
    """One exported time level: field values plus their color classes."""

    step: int
    time: float
    psi: np.ndarray
    classes: tuple

    @classmethod
    def from_state(cls, state: SimState) -> "Snapshot":
        return cls(
            step=state.step,
            time=state.time,
            psi=state.psi.copy(),
            classes=tuple(classify_temperature(v) for v in state.psi),
        )


def export_ply(surface: SimplicialSurface, snapshot: Snapshot, sink) -> int:
    """Write an ASCII PLY with per-vertex colors; returns bytes written.

    Output is byte-deterministic for identical inputs.
    """
    if len(snapshot.psi) != surface.n_vertices:
        raise ValueError("snapshot and surface vertex counts differ")
    buf = io.StringIO()
    buf.write("ply\nformat ascii 1.0\n")
    buf.write(f"element vertex {surface.n_vertices}\n")
    buf.write("property float x\nproperty float y\nproperty float z\n")
    buf.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
    buf.write(f"element face {surface.n_triangles}\n")
    buf.write("property list uchar int vertex_indices\n")
    buf.write("end_header\n")
    for v, cls_ in zip(surface.vertices, snapshot.classes):
        r, g, b = _COLORS[cls_]
        buf.write("%.17g %.17g %.17g %d %d %d\n" % (v[0], v[1], v[2], r, g, b))
    for t in surface.triangles:
        buf.write("3 %d %d %d\n" % (t[0], t[1], t[2]))
    data = buf.getvalue().encode("ascii")
    _write_bytes(sink, data)
    return len(data)


def export_csv(snapshot: Snapshot, sink) -> int:
    """Write vertex_id,time,psi,class rows; psi at 17 significant digits."""
    buf = io.StringIO()
    buf.write("vertex_id,time,psi,class\n")
    for i, (v, cls_) in enumerate(zip(snapshot.psi, snapshot.classes)):
        buf.write("%d,%.17g,%.17g,%s\n" % (i, snapshot.time, v, cls_))
    data = buf.getvalue().encode("utf-8")
    _write_bytes(sink, data)
    return len(data)


def _write_bytes(sink, data: bytes) -> None:
    try:
        sink.write(data)
    except TypeError:
        sink.write(data.decode("utf-8"))
