import numpy as np
import pytest

import oracles
from mor2 import deim, persist, pod
from mor2.errors import FormatError
from mor2.fullsolve import SnapshotStream


def sample_stream(rng, kind="state", count=4, rows=5, cols=3):
    times = np.linspace(0.0, 1.0, count)
    mats = [rng.standard_normal((rows, cols)) for _ in range(count)]
    return SnapshotStream(kind, times, mats)


def sample_basis(rng, n=7, m=6, k1=3, k2=2, symmetric=False):
    V = oracles.random_orthonormal(rng, n, k1)
    if symmetric:
        return pod.BasisPair(V, V.copy(), np.arange(k1, 0, -1.0),
                             np.arange(k1, 0, -1.0), 1e-3, 8, 20, symmetric=True)
    W = oracles.random_orthonormal(rng, m, k2)
    return pod.BasisPair(V, W, np.arange(k1, 0, -1.0), np.arange(k2, 0, -1.0),
                         1e-4, 12, 30)


# ----------------------------------------------------------------- snapshots

@pytest.mark.parametrize("kind", ["state", "nonlinearity", "reduced-state"])
def test_snapshot_round_trip(tmp_path, kind):
    rng = np.random.default_rng(150)
    stream = sample_stream(rng, kind=kind)
    path = tmp_path / "snap.bin"
    persist.write_snapshots(path, stream)
    back = persist.read_snapshots(path)
    assert back.kind == kind
    assert np.array_equal(back.times, stream.times)
    assert len(back.matrices) == len(stream.matrices)
    for M, N in zip(stream.matrices, back.matrices):
        assert M.dtype == np.float64 and np.array_equal(M, N)


def test_snapshot_rewrite_is_bit_identical(tmp_path):
    rng = np.random.default_rng(151)
    stream = sample_stream(rng)
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    persist.write_snapshots(p1, stream)
    persist.write_snapshots(p2, persist.read_snapshots(p1))
    assert p1.read_bytes() == p2.read_bytes()


def test_snapshot_write_rejects_unknown_kind(tmp_path):
    rng = np.random.default_rng(152)
    stream = sample_stream(rng, kind="residual")
    with pytest.raises(FormatError):
        persist.write_snapshots(tmp_path / "x.bin", stream)


def test_snapshot_write_rejects_empty_stream(tmp_path):
    with pytest.raises(FormatError):
        persist.write_snapshots(tmp_path / "x.bin",
                                SnapshotStream("state", np.array([]), []))


def test_snapshot_write_rejects_ragged_shapes(tmp_path):
    rng = np.random.default_rng(153)
    stream = SnapshotStream("state", np.array([0.0, 1.0]),
                            [rng.standard_normal((3, 3)),
                             rng.standard_normal((3, 4))])
    with pytest.raises(FormatError):
        persist.write_snapshots(tmp_path / "x.bin", stream)


def test_snapshot_read_rejects_bad_magic(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"NOTASNAP" + b"\x00" * 32)
    with pytest.raises(FormatError):
        persist.read_snapshots(path)


def test_snapshot_read_rejects_bad_version(tmp_path):
    rng = np.random.default_rng(154)
    path = tmp_path / "x.bin"
    persist.write_snapshots(path, sample_stream(rng))
    raw = bytearray(path.read_bytes())
    raw[8:10] = (99).to_bytes(2, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        persist.read_snapshots(path)


def test_snapshot_read_rejects_truncation(tmp_path):
    rng = np.random.default_rng(155)
    path = tmp_path / "x.bin"
    persist.write_snapshots(path, sample_stream(rng))
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(FormatError):
        persist.read_snapshots(path)


def test_snapshot_read_rejects_trailing_bytes(tmp_path):
    rng = np.random.default_rng(156)
    path = tmp_path / "x.bin"
    persist.write_snapshots(path, sample_stream(rng))
    path.write_bytes(path.read_bytes() + b"x")
    with pytest.raises(FormatError):
        persist.read_snapshots(path)


# --------------------------------------------------------------------- bases

def test_basis_round_trip_without_operator(tmp_path):
    rng = np.random.default_rng(157)
    basis = sample_basis(rng)
    path = tmp_path / "basis.bin"
    persist.write_basis(path, basis)
    back, op = persist.read_basis(path)
    assert op is None
    assert np.array_equal(back.Vl, basis.Vl)
    assert np.array_equal(back.Wr, basis.Wr)
    assert np.array_equal(back.singvals_l, basis.singvals_l)
    assert np.array_equal(back.singvals_r, basis.singvals_r)
    assert back.tau == basis.tau
    assert back.kappa == basis.kappa
    assert back.n_max == basis.n_max
    assert back.symmetric is False


def test_basis_round_trip_with_operator(tmp_path):
    rng = np.random.default_rng(158)
    basis = sample_basis(rng, n=9, m=8, k1=4, k2=3)
    op = deim.build_deim(basis)
    path = tmp_path / "basis.bin"
    persist.write_basis(path, basis, op)
    back, bop = persist.read_basis(path)
    assert np.array_equal(bop.row_idx, op.row_idx)
    assert np.array_equal(bop.col_idx, op.col_idx)
    assert np.array_equal(bop.left_factor, op.left_factor)
    assert np.array_equal(bop.right_factor, op.right_factor)
    assert np.isclose(bop.c_l, op.c_l) and np.isclose(bop.c_r, op.c_r)
    # the factorization is rebuilt on load and must act identically
    F = rng.standard_normal((9, 8))
    assert np.allclose(deim.deim_approximate(bop, back, F),
                       deim.deim_approximate(op, basis, F), atol=1e-13)
    assert back.symmetric is False  # distinct index sets


def test_basis_symmetric_mark_rederived_from_trailer(tmp_path):
    rng = np.random.default_rng(159)
    basis = sample_basis(rng, n=8, k1=3, symmetric=True)
    op = deim.build_deim(basis)
    assert np.array_equal(op.row_idx, op.col_idx)
    path = tmp_path / "basis.bin"
    persist.write_basis(path, basis, op)
    back, bop = persist.read_basis(path)
    assert back.symmetric is True
    # without the trailer there is nothing to rederive the mark from
    bare = tmp_path / "bare.bin"
    persist.write_basis(bare, basis)
    back2, _ = persist.read_basis(bare)
    assert back2.symmetric is False


def test_basis_rewrite_is_bit_identical(tmp_path):
    rng = np.random.default_rng(160)
    basis = sample_basis(rng)
    op = deim.build_deim(basis)
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    persist.write_basis(p1, basis, op)
    back, bop = persist.read_basis(p1)
    persist.write_basis(p2, back, bop)
    assert p1.read_bytes() == p2.read_bytes()


def test_basis_read_rejects_bad_magic(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"MOR2XYZ" + b"\x01\x00" + b"\x00" * 16)
    with pytest.raises(FormatError):
        persist.read_basis(path)


def test_basis_read_rejects_bad_version(tmp_path):
    rng = np.random.default_rng(161)
    path = tmp_path / "x.bin"
    persist.write_basis(path, sample_basis(rng))
    raw = bytearray(path.read_bytes())
    raw[7:9] = (7).to_bytes(2, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        persist.read_basis(path)


def test_basis_read_rejects_truncated_trailer(tmp_path):
    rng = np.random.default_rng(162)
    basis = sample_basis(rng)
    op = deim.build_deim(basis)
    path = tmp_path / "x.bin"
    persist.write_basis(path, basis, op)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(FormatError):
        persist.read_basis(path)


def test_basis_read_rejects_trailing_bytes_after_trailer(tmp_path):
    rng = np.random.default_rng(163)
    basis = sample_basis(rng)
    op = deim.build_deim(basis)
    path = tmp_path / "x.bin"
    persist.write_basis(path, basis, op)
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(FormatError):
        persist.read_basis(path)
