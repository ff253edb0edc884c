"""Snapshot container and checkpoint CSV round-trip tests."""

import struct

import numpy as np
import pytest

from adlab.scalarsolver import Trajectory
from adlab.trajio import (
    CSV_COLUMNS,
    MAGIC,
    TrajectoryFormatError,
    VERSION,
    read_checkpoint_csv,
    read_snapshots,
    write_checkpoint_csv,
    write_snapshots,
)


def _sample_snapshots(n=16, count=3, seed=2):
    rng = np.random.default_rng(seed)
    return [(0.25 * i, rng.normal(size=(n, n))) for i in range(count)]


def test_snapshot_round_trip_exact(tmp_path):
    path = tmp_path / "traj.adlb"
    snaps = _sample_snapshots()
    write_snapshots(path, 0.125, snaps)
    nu, back = read_snapshots(path)
    assert nu == 0.125
    assert len(back) == len(snaps)
    for (t0, a0), (t1, a1) in zip(snaps, back):
        assert t1 == t0
        assert a1.dtype == np.float64
        assert np.array_equal(a0, a1)


def test_snapshot_write_is_deterministic(tmp_path):
    snaps = _sample_snapshots()
    p1, p2 = tmp_path / "a.adlb", tmp_path / "b.adlb"
    write_snapshots(p1, 0.5, snaps)
    write_snapshots(p2, 0.5, snaps)
    assert p1.read_bytes() == p2.read_bytes()


def test_snapshot_header_layout(tmp_path):
    path = tmp_path / "traj.adlb"
    snaps = _sample_snapshots(n=8, count=2)
    write_snapshots(path, 0.0625, snaps)
    raw = path.read_bytes()
    magic, version, n, count, nu = struct.unpack("<4sIII d 8x", raw[:32])
    assert magic == MAGIC == b"ADLB"
    assert version == VERSION == 1
    assert (n, count, nu) == (8, 2, 0.0625)
    assert len(raw) == 32 + count * (8 + 8 * n * n)


def test_snapshot_empty_list(tmp_path):
    path = tmp_path / "empty.adlb"
    write_snapshots(path, 0.0, [])
    nu, back = read_snapshots(path)
    assert nu == 0.0 and back == []


def test_snapshot_rejects_mixed_shapes(tmp_path):
    snaps = [(0.0, np.zeros((8, 8))), (0.5, np.zeros((16, 16)))]
    with pytest.raises(ValueError, match="square grid"):
        write_snapshots(tmp_path / "bad.adlb", 0.0, snaps)


def test_read_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.adlb"
    write_snapshots(path, 0.0, _sample_snapshots(count=1))
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(TrajectoryFormatError):
        read_snapshots(path)


def test_read_rejects_bad_version(tmp_path):
    path = tmp_path / "bad.adlb"
    write_snapshots(path, 0.0, _sample_snapshots(count=1))
    raw = bytearray(path.read_bytes())
    raw[4:8] = struct.pack("<I", 99)
    path.write_bytes(bytes(raw))
    with pytest.raises(TrajectoryFormatError):
        read_snapshots(path)


def test_read_rejects_truncation(tmp_path):
    path = tmp_path / "cut.adlb"
    write_snapshots(path, 0.0, _sample_snapshots(count=2))
    raw = path.read_bytes()
    path.write_bytes(raw[:-16])
    with pytest.raises(TrajectoryFormatError):
        read_snapshots(path)
    assert issubclass(TrajectoryFormatError, ValueError)


def _sample_trajectory():
    times = np.array([0.0, 0.5, 1.0])
    return Trajectory(
        nu=0.1,
        n=16,
        times=times,
        l2=np.array([0.7071, 0.701, 0.69]),
        linf=np.array([1.0, 0.99, 0.97]),
        grad_l2=np.array([4.44, 5.2, 6.303399999999999]),
        cum_diss=np.array([0.0, 0.008637287361002061, 0.017]),
        fields={},
    )


def test_checkpoint_csv_round_trip_lossless(tmp_path):
    path = tmp_path / "chk.csv"
    traj = _sample_trajectory()
    write_checkpoint_csv(path, traj)
    table = read_checkpoint_csv(path)
    assert tuple(table) == CSV_COLUMNS
    assert np.array_equal(table["t"], traj.times)
    assert np.array_equal(table["l2"], traj.l2)
    assert np.array_equal(table["grad_l2"], traj.grad_l2)
    assert np.array_equal(table["cumulative_dissipation"], traj.cum_diss)


def test_checkpoint_csv_rejects_wrong_columns(tmp_path):
    path = tmp_path / "chk.csv"
    path.write_text("t,l2\n0.0,0.5\n")
    with pytest.raises(TrajectoryFormatError):
        read_checkpoint_csv(path)


def test_csv_columns_frozen():
    assert CSV_COLUMNS == ("t", "l2", "linf", "grad_l2", "cumulative_dissipation")
