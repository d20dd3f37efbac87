"""File formats: mesh CSVs, vertex/centroid data CSVs and the model JSON document.

Floats are written with 17 significant digits (``.17g``), which round-trips
every 64-bit value, and always with a decimal point independent of locale.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .bfif import BfifModel
from .errors import MissingDataError
from .geometry import Triangle2
from .ifs import COEFFICIENT_NAMES, MapTable, ScalingPolicy, hyperbolicity_theta
from .partition import ColoredPartition, _triangle_edges

FORMAT_VERSION = 1


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_vertices_csv(partition: ColoredPartition, path, z=None) -> None:
    """``index,x,y,color`` (plus ``z`` when values are given), one row per vertex."""
    header = ["index", "x", "y", "color"] + (["z"] if z is not None else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k, (x, y) in enumerate(partition.points):
            row = [k, fmt(x), fmt(y), int(partition.colors[k])]
            if z is not None:
                row.append(fmt(z[k]))
            w.writerow(row)


def write_triangles_csv(partition: ColoredPartition, path) -> None:
    """``n,v1,v2,v3`` with n counted from 1 and ``vj`` the vertex of color j."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "v1", "v2", "v3"])
        for n, tri in enumerate(partition.triangles, start=1):
            w.writerow([n, *map(int, tri)])


def _read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise MissingDataError(f"{path}: no data rows")
    return [{k.strip().lower(): v for k, v in r.items() if k is not None} for r in rows]


def read_vertex_values(path, partition: ColoredPartition) -> np.ndarray:
    """z value for every partition vertex from a CSV with ``index,z`` or ``x,y,z`` columns.

    Rows are matched by ``index`` when present; otherwise by coordinates,
    which must agree with a partition vertex within the locate tolerance.
    """
    rows = _read_rows(path)
    if "z" not in rows[0]:
        raise MissingDataError(f"{path}: missing z column")
    z = np.full(partition.V, np.nan)
    if "index" in rows[0]:
        for r in rows:
            k = int(r["index"])
            if not 0 <= k < partition.V:
                raise MissingDataError(f"{path}: vertex index {k} out of range")
            z[k] = float(r["z"])
    elif "x" in rows[0] and "y" in rows[0]:
        xy = np.array([[float(r["x"]), float(r["y"])] for r in rows])
        dist = np.linalg.norm(partition.points[:, None, :] - xy[None, :, :], axis=-1)
        nearest = dist.argmin(axis=1)
        ok = dist[np.arange(partition.V), nearest] <= partition.tolerance
        z[ok] = [float(rows[k]["z"]) for k in nearest[ok]]
    else:
        raise MissingDataError(f"{path}: need an index column or x,y columns")
    missing = np.flatnonzero(np.isnan(z))
    if len(missing):
        raise MissingDataError(f"{path}: no value for {len(missing)} vertices (first index {missing[0]})")
    return z


def read_centroid_values(path, partition: ColoredPartition) -> tuple[np.ndarray, float]:
    """``n,z`` rows: n = 1..N for subtriangle centroids and n = 0 for the base centroid."""
    rows = _read_rows(path)
    values = {int(r["n"]): float(r["z"]) for r in rows}
    missing = [n for n in range(partition.N + 1) if n not in values]
    if missing:
        raise MissingDataError(f"{path}: no centroid value for n={missing[0]}")
    return np.array([values[n] for n in range(1, partition.N + 1)]), values[0]


def write_centroids_csv(path, centroid_z, base_centroid_z: float) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "z"])
        w.writerow([0, fmt(base_centroid_z)])
        for n, z in enumerate(centroid_z, start=1):
            w.writerow([n, fmt(z)])


def model_to_dict(model: BfifModel) -> dict:
    part = model.partition
    maps = model.maps
    policy = model.policy.to_dict()
    if isinstance(policy["value"], tuple):
        policy["value"] = list(policy["value"])
    return {
        "format": FORMAT_VERSION,
        "source": model.source,
        "d": part.d,
        "base": [list(map(float, p)) for p in part.base.vertices],
        "base_data": model.base_data.tolist(),
        "corners": list(part.corners),
        "policy": policy,
        "vertices": [[k, float(x), float(y), int(c), float(z)]
                     for k, ((x, y), c, z) in enumerate(zip(part.points, part.colors, model.vertex_z))],
        "triangles": [[n, *map(int, t)] for n, t in enumerate(part.triangles, start=1)],
        "maps": {name: getattr(maps, name).tolist() for name in COEFFICIENT_NAMES},
        "diagnostics": {"theta": model.hyperbolicity.theta,
                        "contraction": model.hyperbolicity.contraction,
                        "certified": model.hyperbolicity.certified},
    }


def model_from_dict(doc: dict) -> BfifModel:
    if doc.get("format") != FORMAT_VERSION:
        raise MissingDataError(f"unsupported model format {doc.get('format')!r}")
    base = Triangle2.from_flat(np.ravel(doc["base"]))
    verts = np.array(doc["vertices"], dtype=float)
    if not np.array_equal(verts[:, 0], np.arange(len(verts))):
        raise MissingDataError("vertex rows must be numbered 0..V-1 in order")
    tris = np.array(doc["triangles"], dtype=np.int64)[:, 1:]
    part = ColoredPartition(base, int(doc["d"]), verts[:, 1:3].copy(), verts[:, 3].astype(np.int64),
                            tris, _triangle_edges(tris), tuple(int(c) for c in doc["corners"]))
    policy = dict(doc["policy"])
    if isinstance(policy.get("value"), list):
        policy["value"] = tuple(policy["value"])
    maps = MapTable(**doc["maps"])
    return BfifModel(part, verts[:, 4].copy(), maps, ScalingPolicy(**policy),
                     hyperbolicity_theta(maps), doc.get("source"))


def save_model(model: BfifModel, path) -> None:
    # json writes floats with repr, the shortest string that round-trips exactly
    Path(path).write_text(json.dumps(model_to_dict(model), indent=1) + "\n")


def load_model(path) -> BfifModel:
    return model_from_dict(json.loads(Path(path).read_text()))
