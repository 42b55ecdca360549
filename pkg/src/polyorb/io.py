"""CSV/JSON readers and writers for orbits, trajectories and reports.

CSV floats are written with 17 significant digits and JSON floats with
Python's shortest round-trip repr, so every file reads back to the exact
stored values. CSV files carry their metadata as leading ``# key=value``
lines.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .analysis import ConvergenceReport
from .construction import PolygonOrbit, Termination
from .integrator import ForceLaw, ImpulseTrajectory

__all__ = [
    "fmt",
    "orbit_to_dict",
    "orbit_from_dict",
    "orbit_to_csv",
    "orbit_from_csv",
    "trajectory_to_dict",
    "trajectory_from_dict",
    "trajectory_to_csv",
    "trajectory_from_csv",
    "report_to_csv",
    "columns_text",
    "dumps",
    "write_text",
]

ORBIT_COLUMNS = ["j", "u", "x", "y", "z", "chord", "cumulative_chord", "area2",
                 "cumulative_area2", "deflection", "deflection_angle"]
TRAJECTORY_COLUMNS = ["j", "t", "x", "y", "z", "vx", "vy", "vz", "Lx", "Ly", "Lz", "area2_step"]


def fmt(x) -> str:
    return format(float(x), ".17g")


def _parse(s: str) -> float:
    return float("nan") if s == "" else float(s)


def dumps(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=False) + "\n"


def write_text(path, text: str) -> None:
    Path(path).write_text(text, newline="")


def _split_meta(text: str):
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    return meta, body


def _meta_lines(meta: dict) -> str:
    return "".join(f"# {k}={v}\n" for k, v in meta.items())


def _vec(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


# -- polygon orbits

def orbit_to_dict(orbit: PolygonOrbit, curve: str | None = None) -> dict:
    out = {}
    if curve is not None:
        out["curve"] = curve
    out.update({
        "center": orbit.center.tolist(),
        "termination": orbit.termination.value,
        "vertices": [{"u": float(u), "x": float(p[0]), "y": float(p[1]), "z": float(p[2])}
                     for u, p in zip(orbit.params, orbit.vertices)],
        "chords": orbit.chords.tolist(),
        "deflections": orbit.deflections.tolist(),
        "deflection_angles": orbit.deflection_angles.tolist(),
        "areas2": orbit.areas2.tolist(),
    })
    return out


def orbit_from_dict(d: dict) -> PolygonOrbit:
    verts = d["vertices"]
    return PolygonOrbit([v["u"] for v in verts], [[v["x"], v["y"], v["z"]] for v in verts],
                        d["center"], Termination(d["termination"]))


def orbit_to_csv(orbit: PolygonOrbit, curve: str | None = None) -> str:
    meta = {"termination": orbit.termination.value,
            "center": ",".join(fmt(c) for c in orbit.center)}
    if curve is not None:
        meta["curve"] = curve
    buf = io.StringIO()
    buf.write(_meta_lines(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ORBIT_COLUMNS)
    m = len(orbit)
    cum_chord = np.concatenate([[0.0], np.cumsum(orbit.chords)])
    cum_area = np.concatenate([[0.0], np.cumsum(orbit.areas2)])
    for j in range(m):
        chord = fmt(orbit.chords[j]) if j < m - 1 else ""
        area = fmt(orbit.areas2[j]) if j < m - 1 else ""
        interior = 1 <= j <= m - 2
        defl = fmt(orbit.deflections[j - 1]) if interior else ""
        ang = fmt(orbit.deflection_angles[j - 1]) if interior else ""
        w.writerow([j, fmt(orbit.params[j]), *(fmt(c) for c in orbit.vertices[j]), chord,
                    fmt(cum_chord[j]), area, fmt(cum_area[j]), defl, ang])
    return buf.getvalue()


def orbit_from_csv(text: str) -> PolygonOrbit:
    meta, body = _split_meta(text)
    rows = list(csv.DictReader(body))
    return PolygonOrbit([float(r["u"]) for r in rows],
                        [[float(r[k]) for k in "xyz"] for r in rows],
                        _vec(meta["center"]), Termination(meta["termination"]))


# -- impulse trajectories

def _law_from(name: str, params: dict) -> ForceLaw:
    if name == "power":
        return ForceLaw(params["coefficient"], params["exponent"], "power")
    if name == "linear":
        return ForceLaw.linear(params["coefficient"])
    if name == "inverse-square":
        return ForceLaw.inverse_square(params["coefficient"])
    raise ValueError(f"unknown force law {name!r}")


def _diagnostics(traj: ImpulseTrajectory) -> dict:
    return {"max_momentum_drift": traj.max_momentum_drift,
            "area2_min": traj.area2_min,
            "area2_max": traj.area2_max,
            "max_plane_offset": traj.max_plane_offset,
            "energy_drift": traj.energy_drift()}


def trajectory_to_dict(traj: ImpulseTrajectory) -> dict:
    lm = traj.angular_momenta
    areas = traj.swept_areas2.tolist() if traj.stride == 1 else []
    return {
        "metadata": {
            "law": traj.law.name,
            "parameters": traj.law.params(),
            "n": traj.n,
            "T": traj.meta.get("T", traj.n * traj.dt),
            "dt": traj.dt,
            "center": traj.center.tolist(),
            "stride": traj.stride,
            **_diagnostics(traj),
        },
        "j": traj.indices.tolist(),
        "t": traj.times.tolist(),
        "r": traj.positions.tolist(),
        "v": traj.velocities.tolist(),
        "L": lm.tolist(),
        "area2_step": areas,
    }


def trajectory_from_dict(d: dict) -> ImpulseTrajectory:
    m = d["metadata"]
    return ImpulseTrajectory(np.array(d["r"], dtype=float).reshape(-1, 3),
                             np.array(d["v"], dtype=float).reshape(-1, 3),
                             np.array(d["j"], dtype=int), m["dt"], m["n"],
                             _law_from(m["law"], m["parameters"]), np.array(m["center"]),
                             m["stride"], m["max_momentum_drift"], m["area2_min"],
                             m["area2_max"], m["max_plane_offset"], {"T": m["T"]})


def trajectory_to_csv(traj: ImpulseTrajectory) -> str:
    meta = {"law": traj.law.describe(), "n": traj.n, "T": fmt(traj.meta.get("T", traj.n * traj.dt)),
            "dt": fmt(traj.dt), "center": ",".join(fmt(c) for c in traj.center),
            "stride": traj.stride}
    meta.update({k: fmt(v) for k, v in _diagnostics(traj).items()})
    buf = io.StringIO()
    buf.write(_meta_lines(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_COLUMNS)
    lm = traj.angular_momenta
    areas = traj.swept_areas2 if traj.stride == 1 else None
    times = traj.times
    for i, j in enumerate(traj.indices):
        area = fmt(areas[i]) if areas is not None and i < len(areas) else ""
        w.writerow([int(j), fmt(times[i]), *(fmt(c) for c in traj.positions[i]),
                    *(fmt(c) for c in traj.velocities[i]), *(fmt(c) for c in lm[i]), area])
    return buf.getvalue()


def trajectory_from_csv(text: str) -> ImpulseTrajectory:
    meta, body = _split_meta(text)
    rows = list(csv.DictReader(body))
    name, _, args = meta["law"].partition(":")
    vals = [float(v) for v in args.split(",")]
    params = ({"coefficient": vals[0], "exponent": vals[1]} if name == "power"
              else {"coefficient": vals[0]})
    return ImpulseTrajectory(
        np.array([[float(r[k]) for k in ("x", "y", "z")] for r in rows]).reshape(-1, 3),
        np.array([[float(r[k]) for k in ("vx", "vy", "vz")] for r in rows]).reshape(-1, 3),
        np.array([int(r["j"]) for r in rows]), float(meta["dt"]), int(meta["n"]),
        _law_from(name, params), _vec(meta["center"]), int(meta["stride"]),
        float(meta["max_momentum_drift"]), float(meta["area2_min"]), float(meta["area2_max"]),
        float(meta["max_plane_offset"]), {"T": float(meta["T"])})


# -- convergence reports

def report_to_csv(report: ConvergenceReport) -> str:
    d = report.to_dict()
    meta = {k: (fmt(v) if isinstance(v, float) else v) for k, v in d.items()
            if k not in ("n", report.metric_name, "extras")}
    meta["metric"] = report.metric_name
    buf = io.StringIO()
    buf.write(_meta_lines(meta))
    per_n = {k: v for k, v in report.extras.items()
             if isinstance(v, list) and len(v) == len(report.n_values)}
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", report.metric_name, *per_n])
    for i, n in enumerate(report.n_values):
        w.writerow([int(n), fmt(report.metric[i]),
                    *(fmt(v[i]) if not isinstance(v[i], (bool, str)) else v[i]
                      for v in per_n.values())])
    return buf.getvalue()


def columns_text(names, columns) -> str:
    """Whitespace-separated columns with a ``#`` header, for external plotting."""
    lines = ["# " + " ".join(names)]
    for row in zip(*columns):
        lines.append(" ".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"
