"""Binary persistence of snapshot streams and basis pairs.

Snapshot container ("MOR2SNAP"):
    magic 8s | version u16 | kind u8 | rows u32 | cols u32 | count u32 |
    count x ( time f64 | rows*cols f64 column-major )

Basis container ("MOR2BAS"):
    magic 7s | version u16 |
    Vl rows u32, cols u32, f64 column-major |
    Wr rows u32, cols u32, f64 column-major |
    singvals_l f64 x cols(Vl) | singvals_r f64 x cols(Wr) |
    tau f64 | kappa u32 | n_max u32 |
    optional interpolation trailer:
        p1 u32 | p2 u32 | row_idx u32 x p1 | col_idx u32 x p2 |
        (Pl^T Vl) f64 column-major | (Wr^T Pr) f64 column-major

Everything is little-endian.
"""

import struct

import numpy as np

from .deim import DeimOperator, _lu_or_raise
from .errors import FormatError
from .fullsolve import SnapshotStream
from .pod import BasisPair

SNAP_MAGIC = b"MOR2SNAP"
BASIS_MAGIC = b"MOR2BAS"
VERSION = 1

_KIND_CODES = {"state": 0, "nonlinearity": 1, "reduced-state": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def _matrix_bytes(M):
    return np.asarray(M, dtype="<f8").tobytes(order="F")


def _read(fh, n, what):
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(f"truncated file while reading {what}")
    return data


def _read_matrix(fh, rows, cols, what):
    data = _read(fh, 8 * rows * cols, what)
    return np.frombuffer(data, dtype="<f8").reshape(rows, cols, order="F").copy()


def write_snapshots(path, stream):
    """Serialize a SnapshotStream."""
    if stream.kind not in _KIND_CODES:
        raise FormatError(f"unknown stream kind {stream.kind!r}")
    count = len(stream.matrices)
    if count == 0:
        raise FormatError("refusing to write an empty snapshot stream")
    rows, cols = stream.matrices[0].shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<8sHBIII", SNAP_MAGIC, VERSION,
                             _KIND_CODES[stream.kind], rows, cols, count))
        for t, M in zip(stream.times, stream.matrices):
            if M.shape != (rows, cols):
                raise FormatError("snapshot shapes are not uniform")
            fh.write(struct.pack("<d", float(t)))
            fh.write(_matrix_bytes(M))


def read_snapshots(path):
    """Load a SnapshotStream."""
    with open(path, "rb") as fh:
        header = _read(fh, struct.calcsize("<8sHBIII"), "snapshot header")
        magic, version, kind, rows, cols, count = struct.unpack("<8sHBIII", header)
        if magic != SNAP_MAGIC:
            raise FormatError("not a snapshot container (bad magic)")
        if version != VERSION:
            raise FormatError(f"unsupported snapshot container version {version}")
        if kind not in _KIND_NAMES:
            raise FormatError(f"unknown snapshot kind code {kind}")
        times, mats = [], []
        for i in range(count):
            (t,) = struct.unpack("<d", _read(fh, 8, f"time of snapshot {i}"))
            times.append(t)
            mats.append(_read_matrix(fh, rows, cols, f"snapshot {i}"))
        if fh.read(1):
            raise FormatError("trailing bytes after the last snapshot")
    return SnapshotStream(_KIND_NAMES[kind], np.array(times), mats)


def write_basis(path, basis, op=None):
    """Serialize a BasisPair, optionally with its interpolation operator."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<7sH", BASIS_MAGIC, VERSION))
        for M in (basis.Vl, basis.Wr):
            fh.write(struct.pack("<II", M.shape[0], M.shape[1]))
            fh.write(_matrix_bytes(M))
        fh.write(np.asarray(basis.singvals_l, dtype="<f8").tobytes())
        fh.write(np.asarray(basis.singvals_r, dtype="<f8").tobytes())
        fh.write(struct.pack("<dII", float(basis.tau), basis.kappa, basis.n_max))
        if op is not None:
            fh.write(struct.pack("<II", op.p1, op.p2))
            fh.write(np.asarray(op.row_idx, dtype="<u4").tobytes())
            fh.write(np.asarray(op.col_idx, dtype="<u4").tobytes())
            fh.write(_matrix_bytes(op.left_factor))
            fh.write(_matrix_bytes(op.right_factor))


def read_basis(path):
    """Load a BasisPair and, when present, its interpolation operator.

    The symmetric mark is not serialized; it is re-derived from the trailer
    (identical row and column index sets) when one exists.
    """
    with open(path, "rb") as fh:
        header = _read(fh, struct.calcsize("<7sH"), "basis header")
        magic, version = struct.unpack("<7sH", header)
        if magic != BASIS_MAGIC:
            raise FormatError("not a basis container (bad magic)")
        if version != VERSION:
            raise FormatError(f"unsupported basis container version {version}")
        mats = []
        for what in ("Vl", "Wr"):
            rows, cols = struct.unpack("<II", _read(fh, 8, f"{what} shape"))
            mats.append(_read_matrix(fh, rows, cols, what))
        Vl, Wr = mats
        sl = np.frombuffer(_read(fh, 8 * Vl.shape[1], "left weights"), dtype="<f8").copy()
        sr = np.frombuffer(_read(fh, 8 * Wr.shape[1], "right weights"), dtype="<f8").copy()
        tau, kappa, n_max = struct.unpack("<dII", _read(fh, 16, "basis parameters"))

        op = None
        trailer = fh.read(8)
        if trailer:
            if len(trailer) != 8:
                raise FormatError("truncated interpolation trailer")
            p1, p2 = struct.unpack("<II", trailer)
            row_idx = np.frombuffer(_read(fh, 4 * p1, "row indices"), dtype="<u4").astype(np.intp)
            col_idx = np.frombuffer(_read(fh, 4 * p2, "column indices"), dtype="<u4").astype(np.intp)
            left = _read_matrix(fh, p1, p1, "row selection matrix")
            right = _read_matrix(fh, p2, p2, "column selection matrix")
            if fh.read(1):
                raise FormatError("trailing bytes after the interpolation trailer")
            op = DeimOperator(
                row_idx, col_idx, left, right,
                _lu_or_raise(left, "row"), _lu_or_raise(right, "column"),
                float(1.0 / np.linalg.svd(left, compute_uv=False)[-1]),
                float(1.0 / np.linalg.svd(right, compute_uv=False)[-1]),
            )
    symmetric = bool(
        op is not None
        and len(op.row_idx) == len(op.col_idx)
        and np.array_equal(op.row_idx, op.col_idx)
        and Vl.shape == Wr.shape
    )
    basis = BasisPair(Vl, Wr, sl, sr, tau, n_max, kappa, symmetric=symmetric)
    return basis, op
