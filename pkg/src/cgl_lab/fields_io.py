"""CSV / JSON-descriptor / flat-binary field formats.

CSV tables carry a header row and full-precision ``repr`` floats so output is
byte-identical between runs.  Slab fields in CSV are x-index-major (rows
ordered by i1, then i2, then i3).  The flat binary layout is little-endian
float64 with x1 varying fastest, then x2, then x3, then the component; the
JSON descriptor next to it records ``dims``, ``components``, ``spacing``,
``side`` and ``data_file``.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import GridMismatch
from .geometry import SlabField, SlabGrid


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def read_table(path):
    """(header, float array of the rows)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty table")
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
    return rows[0], data.reshape(len(rows) - 1, len(rows[0]))


def write_slab_csv(path, f: SlabField, names=None) -> None:
    g = f.grid
    data = f.data.reshape(g.shape + (-1,))
    ncomp = data.shape[-1]
    names = names or [f"f{c}" for c in range(ncomp)]
    X1, X2, X3 = g.mesh()
    I1, I2, I3 = np.meshgrid(*(np.arange(s) for s in g.shape), indexing="ij")
    cols = [I1.ravel(), I2.ravel(), I3.ravel(), X1.ravel(), X2.ravel(), X3.ravel()]
    cols += [data[..., c].ravel() for c in range(ncomp)]
    write_table(path, ["i1", "i2", "i3", "x1", "x2", "x3", *names], zip(*cols))


def read_slab_csv(path, side: str) -> SlabField:
    header, data = read_table(path)
    idx = data[:, :3].astype(int)
    shape = tuple(int(m) + 1 for m in idx.max(axis=0))
    grid = SlabGrid(shape[0] - 1, shape[1], shape[2], side=side)
    vals = np.zeros(shape + (data.shape[1] - 6,))
    vals[idx[:, 0], idx[:, 1], idx[:, 2]] = data[:, 6:]
    if vals.shape[-1] == 1:
        vals = vals[..., 0]
    return SlabField(grid, vals)


def write_slab_binary(stem, f: SlabField) -> Path:
    """Write ``stem.bin`` and ``stem.json``; returns the descriptor path."""
    stem = Path(stem)
    g = f.grid
    data = f.data.reshape(g.shape + (-1,))
    ncomp = data.shape[-1]
    # axes (c, i3, i2, i1) in C order puts i1 fastest
    flat = np.ascontiguousarray(np.transpose(data, (3, 2, 1, 0)), dtype="<f8")
    bin_path = stem.with_suffix(".bin")
    flat.tofile(bin_path)
    desc = {
        "dims": list(g.shape),
        "components": ncomp,
        "spacing": list(g.spacing),
        "side": g.side,
        "dtype": "<f8",
        "layout": "x1-fastest",
        "data_file": bin_path.name,
    }
    json_path = stem.with_suffix(".json")
    json_path.write_text(json.dumps(desc, indent=2))
    return json_path


def read_slab_binary(descriptor) -> SlabField:
    descriptor = Path(descriptor)
    desc = json.loads(descriptor.read_text())
    dims = tuple(int(d) for d in desc["dims"])
    ncomp = int(desc.get("components", 1))
    grid = SlabGrid(dims[0] - 1, dims[1], dims[2], side=desc.get("side", "+"))
    raw = np.fromfile(descriptor.parent / desc["data_file"], dtype="<f8")
    if raw.size != ncomp * dims[0] * dims[1] * dims[2]:
        raise GridMismatch(f"binary holds {raw.size} values, descriptor expects "
                           f"{ncomp * dims[0] * dims[1] * dims[2]}")
    data = np.transpose(raw.reshape(ncomp, dims[2], dims[1], dims[0]), (3, 2, 1, 0))
    return SlabField(grid, data[..., 0] if ncomp == 1 else data)


def write_height_csv(path, phi: np.ndarray) -> None:
    n2, n3 = phi.shape
    rows = ((i, j, i / n2, j / n3, phi[i, j]) for i in range(n2) for j in range(n3))
    write_table(path, ["i2", "i3", "x2", "x3", "phi"], rows)


def read_height_csv(path) -> np.ndarray:
    _, data = read_table(path)
    idx = data[:, :2].astype(int)
    phi = np.zeros(tuple(int(m) + 1 for m in idx.max(axis=0)))
    phi[idx[:, 0], idx[:, 1]] = data[:, -1]
    return phi
