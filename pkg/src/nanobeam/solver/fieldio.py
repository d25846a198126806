"""Field snapshot export: flat binary dumps and CSV plane slices."""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

MAGIC = b"NBFIELD1"
# magic, nx, ny, nz (uint32), delta nm (float64), component name (8 bytes, NUL padded)
_HEADER = struct.Struct("<8s3Id8s")


def write_field_binary(path, data, delta, component):
    """Little-endian float32 dump of a 3D array (C order) with a fixed header."""
    data = np.asarray(data)
    if data.ndim != 3:
        raise ValueError("field dumps must be 3D")
    name = component.encode("ascii")[:8].ljust(8, b"\0")
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, *data.shape, float(delta), name))
        fh.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


def read_field_binary(path):
    """Returns (array, delta, component)."""
    raw = Path(path).read_bytes()
    magic, nx, ny, nz, delta, name = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a field dump")
    arr = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    if arr.size != nx * ny * nz:
        raise ValueError(f"{path}: truncated field dump")
    return arr.reshape(nx, ny, nz).copy(), delta, name.rstrip(b"\0").decode("ascii")


def write_slice_csv(path, xs, ys, values, plane_index=None):
    """Rows of (x_nm, y_nm, value) for a 2D plane; ``values[i, j]`` at (xs[i], ys[j])."""
    values = np.asarray(values)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if plane_index is not None:
            fh.write(f"# plane_index={plane_index}\n")
        w.writerow(["x_nm", "y_nm", "value"])
        for i, x in enumerate(xs):
            for j, y in enumerate(ys):
                w.writerow([f"{x:.6g}", f"{y:.6g}", f"{float(values[i, j]):.9g}"])


def read_slice_csv(path):
    rows = []
    with Path(path).open(newline="") as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("x_nm"):
                continue
            x, y, v = line.strip().split(",")
            rows.append((float(x), float(y), float(v)))
    return np.array(rows)


def unfold_plane(values, parity_x, parity_y, folded_x=True, folded_y=True, half_y=False):
    """Mirror a folded quadrant back to the full plane.

    ``parity_*`` is +1 or -1; ``half_y`` marks samples sitting at half-integer
    y positions (no sample on the mirror plane).
    """
    out = np.asarray(values)
    if folded_x:
        out = np.concatenate([parity_x * out[:0:-1], out], axis=0)
    if folded_y:
        if half_y:
            out = np.concatenate([parity_y * out[:, ::-1], out], axis=1)
        else:
            out = np.concatenate([parity_y * out[:, :0:-1], out], axis=1)
    return out
