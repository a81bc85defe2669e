"""Adaptive two-sided proper orthogonal decomposition of matrix snapshots.

Snapshots Xi(t_i) are never vectorized.  Instead the leading singular
triplets of each selected snapshot are merged into a running accumulator
that keeps only the kappa largest singular values seen so far, together
with their left and right vectors.  Two small SVDs at the end turn the
accumulated factors into separate orthonormal row-space and column-space
bases, truncated by a relative Frobenius tail criterion.

Snapshot selection walks the candidate times in three interleaved phases
(coarse grid, midpoints, remaining odd nodes) and includes a snapshot only
when the current bases reproduce it poorly; a phase whose mean inclusion
error is already below tolerance ends the scan early.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import DimensionError, InputError, MemoryGuardError

# Singular values below this relative threshold never enter the accumulator.
NEGLIGIBLE_REL = 1e-14

# Snapshots with larger relative asymmetry break the symmetric-stream mark.
STREAM_SYM_TOL = 1e-12


def _sign_normalize(U, V=None):
    """Flip column signs so each column of U has its largest entry positive."""
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    U = U * signs[None, :]
    if V is None:
        return U
    return U, V * signs[None, :]


@dataclass
class TripletAccumulator:
    """Running merge of snapshot singular triplets, capped at kappa values.

    Vt and Wh hold unit left/right singular vectors column by column
    (generally not orthonormal across snapshots); St is nonincreasing.
    sigma_discard_max tracks the largest singular value ever dropped by the
    cap, which controls the blockwise reconstruction error of the stream.
    """

    kappa: int
    Vt: np.ndarray = None
    St: np.ndarray = None
    Wh: np.ndarray = None
    sigma_discard_max: float = 0.0
    count_processed: int = 0
    source_ids: np.ndarray = None
    symmetric_stream: bool = True

    @classmethod
    def empty(cls, kappa):
        if kappa < 1:
            raise DimensionError("kappa must be at least 1")
        return cls(kappa=kappa)

    @property
    def rank(self):
        return 0 if self.St is None else len(self.St)

    @property
    def is_empty(self):
        return self.rank == 0

    @property
    def storage_floats(self):
        if self.is_empty:
            return 0
        return self.Vt.size + self.St.size + self.Wh.size


def accumulate(acc, Xi):
    """Fold one snapshot into the accumulator; returns a new accumulator.

    The leading min(kappa, rank) triplets of Xi are appended and the merged
    singular values are re-sorted decreasingly (stable, so previously held
    values win ties); everything beyond position kappa is discarded.  A zero
    snapshot contributes nothing and leaves the state untouched.

    sigma_discard_max absorbs both kinds of loss: the snapshot's own
    sigma_{kappa+1} (never appended) and any merged value pushed past the
    cap, so it bounds the blockwise reconstruction error of the stream.
    """
    Xi = np.asarray(Xi, dtype=float)
    if not np.all(np.isfinite(Xi)):
        raise InputError("snapshot contains non-finite entries")
    if not acc.is_empty and Xi.shape != (acc.Vt.shape[0], acc.Wh.shape[0]):
        raise DimensionError(
            f"snapshot shape {Xi.shape} does not match the stream "
            f"({acc.Vt.shape[0]}, {acc.Wh.shape[0]})"
        )
    if np.linalg.norm(Xi) == 0.0:
        return acc

    cap = min(acc.kappa, min(Xi.shape))
    probe = min(acc.kappa + 1, min(Xi.shape))
    trip = kernels.truncated_svd(Xi, probe)
    snapshot_discard = float(trip.S[cap]) if probe > cap else 0.0
    keep = trip.S[:cap] >= NEGLIGIBLE_REL * trip.S[0]
    U, s, V = trip.U[:, :cap][:, keep], trip.S[:cap][keep], trip.V[:, :cap][:, keep]
    U, V = _sign_normalize(U, V)

    symmetric = acc.symmetric_stream and kernels.is_symmetric(Xi, STREAM_SYM_TOL)
    sid = np.full(len(s), acc.count_processed, dtype=int)

    if acc.is_empty:
        vals = s
        lefts, rights, ids = U, V, sid
    else:
        vals = np.concatenate([acc.St, s])
        lefts = np.hstack([acc.Vt, U])
        rights = np.hstack([acc.Wh, V])
        ids = np.concatenate([acc.source_ids, sid])

    order = np.argsort(-vals, kind="stable")
    kept = order[: acc.kappa]
    dropped = order[acc.kappa :]
    discard_max = max(acc.sigma_discard_max, snapshot_discard)
    if len(dropped):
        discard_max = max(discard_max, float(vals[dropped].max()))

    return TripletAccumulator(
        kappa=acc.kappa,
        Vt=lefts[:, kept],
        St=vals[kept],
        Wh=rights[:, kept],
        sigma_discard_max=discard_max,
        count_processed=acc.count_processed + 1,
        source_ids=ids[kept],
        symmetric_stream=symmetric,
    )


def inclusion_error(Xi, acc, norm="fro"):
    """Relative error of projecting Xi onto the accumulator's current spaces.

    The left/right factors are orthonormalized on the fly by thin QR; the
    error is ||Xi - P_l Xi P_r|| / ||Xi|| in the Frobenius norm (or the
    spectral norm with norm='2').  A zero snapshot scores 0; an empty
    accumulator scores 1 for any nonzero snapshot.
    """
    Xi = np.asarray(Xi, dtype=float)
    ord_ = None if norm == "fro" else 2
    denom = np.linalg.norm(Xi, ord_)
    if denom == 0.0:
        return 0.0
    if acc.is_empty:
        return 1.0
    Ql = np.linalg.qr(acc.Vt)[0]
    Qr = np.linalg.qr(acc.Wh)[0]
    resid = Xi - Ql @ (Ql.T @ Xi @ Qr) @ Qr.T
    return float(np.linalg.norm(resid, ord_) / denom)


@dataclass(frozen=True)
class BasisPair:
    """Orthonormal row-space basis Vl and column-space basis Wr with weights."""

    Vl: np.ndarray
    Wr: np.ndarray
    singvals_l: np.ndarray
    singvals_r: np.ndarray
    tau: float
    n_max: int
    kappa: int
    symmetric: bool = False

    @property
    def nu_l(self):
        return self.Vl.shape[1]

    @property
    def nu_r(self):
        return self.Wr.shape[1]


def projection_error(Xi, basis, norm="fro"):
    """Relative two-sided projection error of Xi onto a pruned basis pair.

    Measures ||Xi - Vl Vl^T Xi Wr Wr^T|| / ||Xi||, i.e. how well the
    deliverable bases (not the raw accumulator span) reproduce Xi.  A zero
    snapshot scores 0.
    """
    Xi = np.asarray(Xi, dtype=float)
    ord_ = None if norm == "fro" else 2
    denom = np.linalg.norm(Xi, ord_)
    if denom == 0.0:
        return 0.0
    resid = Xi - basis.Vl @ (basis.Vl.T @ Xi @ basis.Wr) @ basis.Wr.T
    return float(np.linalg.norm(resid, ord_) / denom)


def retained_count(s, tau, n_max):
    """Smallest nu with ||s[nu:]||_2 <= tau/sqrt(n_max) * ||s||_2 (at least 1)."""
    s = np.asarray(s, dtype=float)
    total = np.linalg.norm(s)
    if total == 0.0:
        return 1
    tail = np.sqrt(np.concatenate([np.cumsum((s**2)[::-1])[::-1], [0.0]]))
    ok = np.nonzero(tail <= (tau / np.sqrt(n_max)) * total)[0]
    return max(1, int(ok[0]))


def prune(acc, tau, n_max, detect_symmetry=False):
    """Distill the accumulator into orthonormal bases via two weighted SVDs.

    The scaled factors Vt*sqrt(St) and sqrt(St)*Wh^T are decomposed
    separately and each side keeps the smallest leading block whose
    discarded tail is below tau/sqrt(n_max) in relative Frobenius norm.
    """
    if acc.is_empty:
        raise DimensionError("cannot prune an empty accumulator")
    if not 0.0 < tau < 1.0:
        raise DimensionError("tau must lie in (0, 1)")
    root = np.sqrt(acc.St)
    L = acc.Vt * root[None, :]
    R = root[:, None] * acc.Wh.T

    Ul, sl, _ = np.linalg.svd(L, full_matrices=False)
    _, sr, Vrh = np.linalg.svd(R, full_matrices=False)
    nu_l = retained_count(sl, tau, n_max)
    nu_r = retained_count(sr, tau, n_max)
    Vl = _sign_normalize(Ul[:, :nu_l].copy())
    Wr = _sign_normalize(Vrh[:nu_r].T.copy())
    symmetric = bool(
        detect_symmetry
        and acc.symmetric_stream
        and acc.Vt.shape[0] == acc.Wh.shape[0]
    )
    return BasisPair(
        Vl=Vl, Wr=Wr, singvals_l=sl[:nu_l].copy(), singvals_r=sr[:nu_r].copy(),
        tau=tau, n_max=n_max, kappa=acc.kappa, symmetric=symmetric,
    )


@dataclass
class SelectionReport:
    """Bookkeeping of one snapshot-selection run."""

    method: str
    phases_used: int
    included_times: np.ndarray
    evaluated_times: np.ndarray
    per_time_error: np.ndarray
    phase_mean_errors: list
    peak_storage_floats: int = 0
    seconds: float = 0.0

    @property
    def n_s(self):
        return len(self.included_times)


def effective_n_max(n_max):
    """Largest multiple of 4 not exceeding n_max (phases need quarters)."""
    if n_max < 4:
        raise DimensionError("n_max must be at least 4")
    return n_max - (n_max % 4)


def candidate_times(t_final, n_max, t0=0.0):
    """Equispaced candidate nodes on [t0, t_final], count forced to 4k."""
    m = effective_n_max(n_max)
    return np.linspace(t0, t_final, m)


def phase_index_sets(m):
    """Three interleaved passes over m = 4k nodes: coarse, midpoints, odds."""
    if m % 4 != 0:
        raise DimensionError("node count must be a multiple of 4")
    return [np.arange(0, m, 4), np.arange(2, m, 4), np.arange(1, m, 2)]


def dynamic_pod(source, tol, kappa, tau, n_max=None, norm="fro", detect_symmetry=False):
    """Phased adaptive selection plus pruning; the main offline routine.

    Walks the candidate nodes of `source` in three phases.  The first
    snapshot seeds the accumulator; every later node is scored by how well
    the current tau-pruned bases reproduce it, and included when that score
    exceeds tol.  Scoring against the pruned deliverable rather than the
    raw accumulator span keeps the test honest: the accumulator routinely
    spans a snapshot that the truncated bases cannot represent, and the
    truncated bases are what the reduced model uses.  It also decouples the
    selection count from the truncation level, since tightening tau
    enriches the bases at the same rate it tightens the test.  After an
    inclusion the node is rescored against the refreshed bases, so the stop
    test (phase mean of scores <= tol) sees residuals, not the triggering
    errors.  Returns (BasisPair, SelectionReport).
    """
    times = np.asarray(source.times, dtype=float)
    m = effective_n_max(len(times) if n_max is None else min(n_max, len(times)))
    phases = phase_index_sets(m)
    tic = time.perf_counter()

    acc = accumulate(TripletAccumulator.empty(kappa), source.matrix(0))
    deliv = None if acc.is_empty else prune(acc, tau, m)
    included, evaluated, errors, phase_means = [], [], [], []
    peak = acc.storage_floats
    if deliv is not None:
        included.append(times[0])

    phases_used = 0
    for p, idx in enumerate(phases):
        phases_used = p + 1
        errs = []
        for i in idx:
            if p == 0 and i == 0:
                continue  # seed node
            Xi = source.matrix(i)
            if deliv is None:
                e = 0.0 if np.linalg.norm(Xi) == 0.0 else 1.0
            else:
                e = projection_error(Xi, deliv, norm)
            evaluated.append(times[i])
            errors.append(e)
            if e > tol:
                acc = accumulate(acc, Xi)
                if not acc.is_empty:
                    deliv = prune(acc, tau, m)
                    included.append(times[i])
                    peak = max(peak, acc.storage_floats)
                    e = projection_error(Xi, deliv, norm)
            errs.append(e)
        phase_means.append(float(np.sum(errs) / len(idx)))
        if phase_means[-1] <= tol:
            break

    basis = prune(acc, tau, m, detect_symmetry=detect_symmetry)
    report = SelectionReport(
        method="dynamic",
        phases_used=phases_used,
        included_times=np.array(included),
        evaluated_times=np.array(evaluated),
        per_time_error=np.array(errors),
        phase_mean_errors=phase_means,
        peak_storage_floats=peak,
        seconds=time.perf_counter() - tic,
    )
    return basis, report


def vanilla_update(Vl, Wr, Xi, kappa):
    """One truncated-SVD basis update of the non-adaptive baseline.

    Appends the sqrt-scaled leading triplet factors of Xi to each current
    basis, reorthogonalizes (thin QR followed by an SVD of the small
    triangular factor) and keeps at most kappa directions per side.
    Returns (Vl, Wr, weights_l, weights_r); the weights are the singular
    values of the augmented reduction, used by the final tail truncation.
    """
    Xi = np.asarray(Xi, dtype=float)
    if np.linalg.norm(Xi) == 0.0:
        sl = np.ones(0 if Vl is None else Vl.shape[1])
        sr = np.ones(0 if Wr is None else Wr.shape[1])
        return Vl, Wr, sl, sr
    trip = kernels.truncated_svd(Xi, min(kappa, min(Xi.shape)))
    keep = trip.S >= NEGLIGIBLE_REL * trip.S[0]
    root = np.sqrt(trip.S[keep])

    def reduce(basis, new_scaled):
        aug = new_scaled if basis is None else np.hstack([basis, new_scaled])
        Q, Rq = np.linalg.qr(aug)
        Us, ss, _ = np.linalg.svd(Rq)
        nonzero = int(np.sum(ss >= NEGLIGIBLE_REL * ss[0])) if ss[0] > 0 else 1
        nu = min(kappa, nonzero)
        return _sign_normalize(Q @ Us[:, :nu]), ss[:nu]

    Vl2, sl = reduce(Vl, trip.U[:, keep] * root[None, :])
    Wr2, sr = reduce(Wr, trip.V[:, keep] * root[None, :])
    return Vl2, Wr2, sl, sr


def vanilla_pod(source, kappa, tau, n_max=None):
    """Process every candidate snapshot with vanilla_update, then truncate.

    The tail criterion of `prune` is applied to the singular values of the
    last reduction.  Returns (BasisPair, SelectionReport).
    """
    times = np.asarray(source.times, dtype=float)
    m = len(times) if n_max is None else min(n_max, len(times))
    tic = time.perf_counter()
    Vl = Wr = None
    sl = sr = np.ones(0)
    included = []
    peak = 0
    for i in range(m):
        Xi = source.matrix(i)
        if np.linalg.norm(Xi) == 0.0:
            continue
        Vl, Wr, sl, sr = vanilla_update(Vl, Wr, Xi, kappa)
        included.append(times[i])
        peak = max(peak, Vl.size + Wr.size)
    if Vl is None:
        raise DimensionError("vanilla update never saw a nonzero snapshot")
    nu_l = retained_count(sl, tau, m)
    nu_r = retained_count(sr, tau, m)
    basis = BasisPair(
        Vl=Vl[:, :nu_l].copy(), Wr=Wr[:, :nu_r].copy(),
        singvals_l=sl[:nu_l].copy(), singvals_r=sr[:nu_r].copy(),
        tau=tau, n_max=m, kappa=kappa, symmetric=False,
    )
    report = SelectionReport(
        method="vanilla", phases_used=0,
        included_times=np.array(included),
        evaluated_times=np.array([]), per_time_error=np.array([]),
        phase_mean_errors=[], peak_storage_floats=peak,
        seconds=time.perf_counter() - tic,
    )
    return basis, report


@dataclass(frozen=True)
class VectorBasis:
    """Orthonormal basis of vectorized snapshots (column-major stacking)."""

    V: np.ndarray
    singvals: np.ndarray
    shape: tuple
    tau: float
    n_max: int

    @property
    def k(self):
        return self.V.shape[1]


VECTOR_GUARD_DIM = 512


def vector_pod(source, tol, tau, n_max=None, adaptive=True, override_guard=False,
               guard_dim=VECTOR_GUARD_DIM):
    """Vectorized single-basis baseline over the same three phases.

    Each included snapshot is stacked column-major into a tall snapshot
    matrix whose tau-truncated left singular basis doubles as the inclusion
    test space, mirroring the matrix route: a node joins when the truncated
    basis misses it by more than tol.  Refuses matrices larger than
    guard_dim per side unless override_guard is set, since storage grows
    with n^2 per snapshot.
    """
    shape = source.matrix(0).shape
    if max(shape) > guard_dim and not override_guard:
        raise MemoryGuardError(
            f"vectorized snapshots at n = {max(shape)} exceed the desk-scale "
            f"guard ({guard_dim}); pass override_memory_guard to force"
        )
    times = np.asarray(source.times, dtype=float)
    if adaptive:
        m = effective_n_max(len(times) if n_max is None else min(n_max, len(times)))
    else:
        m = len(times) if n_max is None else n_max
    tic = time.perf_counter()

    cols, col_times = [], []
    Vk = None  # tau-truncated basis of the included snapshots
    included, evaluated, errors, phase_means = [], [], [], []
    peak = 0
    phases_used = 0

    def include(xi, t):
        nonlocal Vk, peak
        cols.append(xi)
        col_times.append(t)
        S = np.column_stack(cols)
        U, s, _ = np.linalg.svd(S, full_matrices=False)
        Vk = U[:, : retained_count(s, tau, m)]
        peak = max(peak, S.size + Vk.size)

    def score(xi, nrm):
        if nrm == 0.0:
            return 0.0
        if Vk is None:
            return 1.0
        return float(np.linalg.norm(xi - Vk @ (Vk.T @ xi)) / nrm)

    if adaptive:
        xi0 = source.matrix(0).ravel(order="F")
        if np.linalg.norm(xi0) > 0:
            include(xi0, times[0])
        for p, idx in enumerate(phase_index_sets(m)):
            phases_used = p + 1
            errs = []
            for i in idx:
                if p == 0 and i == 0:
                    continue
                xi = source.matrix(i).ravel(order="F")
                nrm = np.linalg.norm(xi)
                e = score(xi, nrm)
                evaluated.append(times[i])
                errors.append(e)
                if e > tol and nrm > 0:
                    include(xi, times[i])
                    e = score(xi, nrm)
                errs.append(e)
            phase_means.append(float(np.sum(errs) / len(idx)))
            if phase_means[-1] <= tol:
                break
    else:
        for i in range(len(times)):
            xi = source.matrix(i).ravel(order="F")
            if np.linalg.norm(xi) > 0:
                include(xi, times[i])

    if not cols:
        raise DimensionError("vector selection never saw a nonzero snapshot")
    S = np.column_stack(cols)
    U, s, _ = np.linalg.svd(S, full_matrices=False)
    k = retained_count(s, tau, m)
    basis = VectorBasis(
        V=_sign_normalize(U[:, :k].copy()), singvals=s[:k].copy(),
        shape=shape, tau=tau, n_max=m,
    )
    report = SelectionReport(
        method="vector", phases_used=phases_used,
        included_times=np.array(col_times),
        evaluated_times=np.array(evaluated),
        per_time_error=np.array(errors),
        phase_mean_errors=phase_means, peak_storage_floats=peak,
        seconds=time.perf_counter() - tic,
    )
    return basis, report
