"""Binary trajectory snapshots and checkpoint-norm CSV sidecars.

Layout of the snapshot container (little-endian throughout):

    bytes 0..3    magic "ADLB"
    bytes 4..7    format version (u32, currently 1)
    bytes 8..11   grid size n per axis (u32)
    bytes 12..15  snapshot count (u32)
    bytes 16..23  viscosity nu (f64)
    bytes 24..31  reserved (zero)

followed by `count` records, each a time stamp (f64) and the n*n field values
in row-major order (f64).  The sidecar CSV carries one row per checkpoint:
time, L2, Linf, grad_L2 and cumulative dissipation, with floats printed by
repr so reading them back is lossless.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"ADLB"
VERSION = 1
_HEADER = struct.Struct("<4sIII d 8x")


class TrajectoryFormatError(ValueError):
    """Raised when a snapshot file does not follow the layout above."""


def write_snapshots(path, nu: float, snapshots: Sequence[tuple]) -> None:
    """Write (t, field) pairs; every field must be the same square shape."""
    path = Path(path)
    if snapshots:
        n = snapshots[0][1].shape[0]
        for _, arr in snapshots:
            if arr.shape != (n, n):
                raise ValueError("all snapshots must share one square grid")
    else:
        n = 0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, len(snapshots), float(nu)))
        for t, arr in snapshots:
            fh.write(struct.pack("<d", float(t)))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_snapshots(path) -> tuple[float, list[tuple]]:
    """Read back (nu, [(t, field), ...]); validates magic, version and length."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TrajectoryFormatError(f"{path}: shorter than the 32-byte header")
    magic, version, n, count, nu = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise TrajectoryFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise TrajectoryFormatError(f"{path}: unsupported version {version}")
    rec = 8 + 8 * n * n
    if len(raw) != _HEADER.size + count * rec:
        raise TrajectoryFormatError(
            f"{path}: expected {count} records of {rec} bytes after the header"
        )
    out = []
    off = _HEADER.size
    for _ in range(count):
        (t,) = struct.unpack_from("<d", raw, off)
        arr = np.frombuffer(raw, dtype="<f8", count=n * n, offset=off + 8)
        out.append((t, arr.reshape(n, n).copy()))
        off += rec
    return nu, out


CSV_COLUMNS = ("t", "l2", "linf", "grad_l2", "cumulative_dissipation")


def write_checkpoint_csv(path, trajectory) -> None:
    """Norm table for a solve; floats via repr for lossless round-trips."""
    lines = [",".join(CSV_COLUMNS)]
    for i, t in enumerate(trajectory.times):
        row = (t, trajectory.l2[i], trajectory.linf[i], trajectory.grad_l2[i], trajectory.cum_diss[i])
        lines.append(",".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_checkpoint_csv(path) -> dict:
    """Columns of a checkpoint CSV as float arrays keyed by header name."""
    lines = Path(path).read_text().strip().split("\n")
    header = lines[0].split(",")
    if tuple(header) != CSV_COLUMNS:
        raise TrajectoryFormatError(f"{path}: unexpected columns {header}")
    cols = {name: [] for name in header}
    for line in lines[1:]:
        for name, tok in zip(header, line.split(",")):
            cols[name].append(float(tok))
    return {name: np.asarray(vals) for name, vals in cols.items()}
