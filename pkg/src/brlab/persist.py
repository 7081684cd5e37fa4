"""Snapshot CSV files and trajectory directories."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from .evolve import Trajectory
from .sheet_core import TWO_PI, SheetState, Topology

SNAPSHOT_SCHEMA = "brlab-snapshot/1"
MANIFEST_SCHEMA = "brlab-trajectory/1"
DIAGNOSTICS_SCHEMA = "brlab-diagnostics/1"
HEADER = ["alpha", "x", "y", "t", "topology"]


class SchemaError(ValueError):
    pass


def fmt(v: float) -> str:
    return f"{v:.17g}"


def write_snapshot(path: str | os.PathLike, state: SheetState) -> None:
    """One row per sample; metadata needed for exact reconstruction in ``#`` lines."""
    z = state.z
    alpha = state.alpha
    topo = state.topology.value
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={SNAPSHOT_SCHEMA}\n")
        fh.write(f"# period={fmt(state.period)} circulation_scale={fmt(state.circulation_scale)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        t = fmt(state.t)
        for a, zz in zip(alpha, z):
            w.writerow([fmt(a), fmt(zz.real), fmt(zz.imag), t, topo])


def read_snapshot(path: str | os.PathLike) -> SheetState:
    meta: dict[str, str] = {}
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                for tok in line[1:].split():
                    if "=" in tok:
                        key, val = tok.split("=", 1)
                        meta[key] = val
            else:
                lines.append(line)
        reader = csv.reader(lines)
        header = next(reader, None)
        if header != HEADER:
            raise SchemaError(f"{path}: expected header {','.join(HEADER)}")
        rows = [r for r in reader if r]
    if meta.get("schema") != SNAPSHOT_SCHEMA:
        raise SchemaError(f"{path}: missing or unknown schema tag")
    if not rows:
        raise SchemaError(f"{path}: no samples")
    try:
        data = np.array([[float(r[0]), float(r[1]), float(r[2]), float(r[3])] for r in rows])
        topo = Topology(rows[0][4])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: malformed row ({exc})") from exc
    period = float(meta.get("period", TWO_PI))
    scale = float(meta.get("circulation_scale", 1.0))
    z = data[:, 1] + 1j * data[:, 2]
    t = float(data[0, 3])
    n = z.shape[0]
    if topo is Topology.PERIODIC_FLAT:
        p = z - period / TWO_PI * (TWO_PI * np.arange(n) / n)
    else:
        p = z
    return SheetState(topo, p, t=t, period=period, circulation_scale=scale)


def snapshot_name(i: int) -> str:
    return f"snap_{i:05d}.csv"


def write_trajectory(directory: str | os.PathLike, traj: Trajectory, config: dict | None = None) -> Path:
    """Write ``manifest.json`` and one snapshot CSV per stored time."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for i, s in enumerate(traj.snapshots):
        name = snapshot_name(i)
        write_snapshot(d / name, s)
        names.append(name)
    first = traj.snapshots[0]
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "config": config or {},
        "provenance": traj.provenance,
        "n": first.N,
        "topology": first.topology.value,
        "times": [float(s.t) for s in traj.snapshots],
        "snapshots": names,
        "steps": traj.steps,
        "abort_reason": traj.abort_reason,
    }
    with open(d / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return d


def read_manifest(directory: str | os.PathLike) -> dict:
    path = Path(directory) / "manifest.json"
    if not path.is_file():
        raise SchemaError(f"{directory}: no manifest.json")
    try:
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise SchemaError(f"{path}: unknown schema {manifest.get('schema')!r}")
    for key in ("snapshots", "times"):
        if not isinstance(manifest.get(key), list):
            raise SchemaError(f"{path}: field {key!r} missing")
    if len(manifest["snapshots"]) != len(manifest["times"]) or not manifest["snapshots"]:
        raise SchemaError(f"{path}: snapshots and times disagree or are empty")
    return manifest


def read_trajectory(directory: str | os.PathLike) -> tuple[dict, list[SheetState | None], list[str]]:
    """Manifest, snapshots (``None`` where missing or corrupt) and per-snapshot errors."""
    manifest = read_manifest(directory)
    states: list[SheetState | None] = []
    errors: list[str] = []
    for name in manifest["snapshots"]:
        try:
            states.append(read_snapshot(Path(directory) / name))
            errors.append("")
        except (OSError, SchemaError, ValueError) as exc:
            states.append(None)
            errors.append(str(exc))
    return manifest, states, errors


__all__ = ["DIAGNOSTICS_SCHEMA", "MANIFEST_SCHEMA", "SNAPSHOT_SCHEMA", "SchemaError",
           "read_manifest", "read_snapshot", "read_trajectory", "write_snapshot", "write_trajectory"]
