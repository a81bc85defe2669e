"""Dense linear-algebra primitives used by every other module.

Thin, contract-checked wrappers around LAPACK-backed numpy/scipy routines,
plus the few pieces that need behavior the libraries do not pin down:
deterministic column-pivoted QR (explicit lowest-index tie break) and the
phi1-based exponential update shared by the full and reduced integrators.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import (
    ConditioningError,
    DimensionError,
    InputError,
    RankError,
    SingularityError,
    StructureError,
)

# Tolerances; callers may override per call.
SYM_REL_TOL = 1e-10        # relative asymmetry accepted by symmetric paths
RANK_TOL = 1e-12           # pivot threshold relative to ||Bt||_F
OVERLAP_TOL = 1e-12        # spectral-overlap threshold for Sylvester solves
EIG_COND_LIMIT = 1e12      # max acceptable condition number of an eigenbasis
DENSE_SVD_MAX = 512        # largest dimension solved by a full dense SVD
LANCZOS_TOL = 1e-10        # convergence tolerance of the iterative SVD path

# Fixed start vector seed keeps the Lanczos path deterministic run to run.
_LANCZOS_SEED = 20240901


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")


def is_symmetric(A, rel_tol=SYM_REL_TOL):
    """True when A is square and ||A - A^T||_F <= rel_tol * ||A||_F."""
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return False
    nrm = np.linalg.norm(A)
    if nrm == 0.0:
        return True
    return np.linalg.norm(A - A.T) <= rel_tol * nrm


@dataclass(frozen=True)
class SvdTriplet:
    """Leading singular triplets: U (m, r), S (r,) nonincreasing, V (n, r)."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class EigenPair:
    """Eigendecomposition A = Q diag(values) Q^{-1}.

    For symmetric input Q is orthogonal, values are real ascending and
    ``inverse`` is simply Q^T.  For general input everything is complex.
    """

    values: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    symmetric: bool


def truncated_svd(M, r, dense_max=DENSE_SVD_MAX, lanczos_tol=LANCZOS_TOL):
    """Leading r singular triplets of a dense matrix.

    Uses one full LAPACK SVD and truncates while min(m, n) stays at desk
    scale (<= dense_max); switches to the iterative Lanczos solver above
    that, with a fixed start vector so results are reproducible.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError("truncated_svd expects a matrix")
    _check_finite("M", M)
    if not 1 <= r <= min(M.shape):
        raise DimensionError(f"rank {r} out of range for shape {M.shape}")

    if min(M.shape) <= dense_max or r >= min(M.shape) - 1:
        U, s, Vh = np.linalg.svd(M, full_matrices=False)
        return SvdTriplet(U[:, :r].copy(), s[:r].copy(), Vh[:r].T.copy())

    rng = np.random.default_rng(_LANCZOS_SEED)
    v0 = rng.standard_normal(min(M.shape))
    U, s, Vh = scipy.sparse.linalg.svds(M, k=r, tol=lanczos_tol, v0=v0)
    order = np.argsort(s)[::-1]
    return SvdTriplet(U[:, order], s[order], Vh[order].T)


def pivoted_qr_indices(Bt, rank_tol=RANK_TOL):
    """Column-pivot sequence of a short fat matrix Bt (p, n), p <= n.

    Greedy residual-norm pivoting (Businger-Golub): at each step the column
    of largest remaining norm is chosen, ties broken by lowest index, and
    the chosen direction is deflated by a Householder reflection.  Returns
    the p chosen column indices in pivot order.
    """
    Bt = np.asarray(Bt, dtype=float)
    if Bt.ndim != 2 or Bt.shape[0] > Bt.shape[1]:
        raise DimensionError("expected a p x n matrix with p <= n")
    _check_finite("Bt", Bt)
    p, n = Bt.shape
    scale = np.linalg.norm(Bt)

    R = Bt.copy()
    cols = np.arange(n)
    for k in range(p):
        norms = np.linalg.norm(R[k:, k:], axis=0)
        j = k + int(np.argmax(norms))  # argmax returns the first maximum
        if norms[j - k] < rank_tol * max(scale, 1e-300):
            raise RankError(
                f"pivot {k} fell below {rank_tol:.1e} * ||Bt||_F: input is rank deficient"
            )
        if j != k:
            R[:, [k, j]] = R[:, [j, k]]
            cols[[k, j]] = cols[[j, k]]
        # Householder reflection zeroing R[k+1:, k].
        x = R[k:, k].copy()
        alpha = -np.sign(x[0]) * np.linalg.norm(x) if x[0] != 0 else -np.linalg.norm(x)
        v = x.copy()
        v[0] -= alpha
        vnorm = np.linalg.norm(v)
        if vnorm > 0:
            v /= vnorm
            R[k:, k:] -= 2.0 * np.outer(v, v @ R[k:, k:])
    return cols[:p].copy()


def sym_eig(S, rel_tol=SYM_REL_TOL):
    """Orthogonal eigendecomposition of a symmetric matrix, values ascending."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError("sym_eig expects a square matrix")
    _check_finite("S", S)
    if not is_symmetric(S, rel_tol):
        raise StructureError("matrix is not symmetric within tolerance")
    vals, Q = np.linalg.eigh(0.5 * (S + S.T))
    return EigenPair(vals, Q, Q.T.copy(), True)


def general_eig(S, cond_limit=EIG_COND_LIMIT):
    """Eigendecomposition of a general square matrix with an explicit inverse.

    Raises ConditioningError when the eigenvector basis has 2-norm condition
    number above cond_limit; callers then fall back to Schur-based solves.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError("general_eig expects a square matrix")
    _check_finite("S", S)
    vals, Q = np.linalg.eig(S)
    cond = np.linalg.cond(Q)
    if not np.isfinite(cond) or cond > cond_limit:
        raise ConditioningError(
            f"eigenvector basis condition {cond:.3e} exceeds {cond_limit:.1e}"
        )
    Qinv = np.linalg.inv(Q)
    return EigenPair(vals, Q, Qinv, False)


def eig_pair(A, cond_limit=EIG_COND_LIMIT):
    """sym_eig when A is symmetric within tolerance, general_eig otherwise."""
    A = np.asarray(A, dtype=float)
    if is_symmetric(A):
        return sym_eig(A)
    return general_eig(A, cond_limit=cond_limit)


def _spectra_min_sum(A, B):
    la = np.linalg.eigvals(A)
    lb = np.linalg.eigvals(B)
    return float(np.min(np.abs(la[:, None] + lb[None, :])))


def solve_sylvester(A, B, C, overlap_tol=OVERLAP_TOL):
    """Solve A X + X B = C for X.

    Symmetric A and B take the eigenbasis route (one Hadamard division);
    the general case defers to the Schur-based Bartels-Stewart solver.
    Raises SingularityError when the spectra of A and -B nearly meet.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    C = np.asarray(C, dtype=float)
    if A.shape[0] != A.shape[1] or B.shape[0] != B.shape[1]:
        raise DimensionError("A and B must be square")
    if C.shape != (A.shape[0], B.shape[0]):
        raise DimensionError("C shape must match (rows of A, rows of B)")
    for name, arr in (("A", A), ("B", B), ("C", C)):
        _check_finite(name, arr)

    sep = _spectra_min_sum(A, B)
    scale = np.linalg.norm(A) + np.linalg.norm(B)
    if sep < overlap_tol * max(scale, 1e-300):
        raise SingularityError(
            f"spectra of A and -B overlap: min |lambda_i + mu_j| = {sep:.3e}"
        )

    if is_symmetric(A) and is_symmetric(B):
        ea = sym_eig(A)
        eb = sym_eig(B)
        Chat = ea.inverse @ C @ eb.vectors
        denom = ea.values[:, None] + eb.values[None, :]
        return ea.vectors @ (Chat / denom) @ eb.inverse
    return scipy.linalg.solve_sylvester(A, B, C)


def expm_apply(Aeig, h, M, side="left"):
    """Apply the matrix exponential exp(h A) to M from the given side.

    Aeig is an EigenPair of A; the product is formed in the eigenbasis so a
    single decomposition serves every step size.
    """
    M = np.asarray(M)
    E = np.exp(h * Aeig.values)
    if side == "left":
        out = Aeig.vectors @ (E[:, None] * (Aeig.inverse @ M))
    elif side == "right":
        out = (M @ Aeig.vectors) * E[None, :] @ Aeig.inverse
    else:
        raise ValueError("side must be 'left' or 'right'")
    if not Aeig.symmetric and np.isrealobj(M):
        return out.real
    return out


def phi1(z):
    """First exponential-integrator kernel (e^z - 1) / z, with phi1(0) = 1."""
    z = np.atleast_1d(np.asarray(z))
    if np.iscomplexobj(z):
        # e^{z/2} * sinh(z/2) / (z/2); a short series covers the 0/0 region.
        w = 0.5 * z
        small = np.abs(w) < 1e-4
        wsafe = np.where(small, 1.0, w)
        core = np.where(
            small,
            1.0 + w * w / 6.0 + (w * w) * (w * w) / 120.0,
            np.sinh(wsafe) / wsafe,
        )
        return np.exp(w) * core
    out = np.ones_like(z, dtype=float)
    nz = z != 0.0
    out[nz] = np.expm1(z[nz]) / z[nz]
    return out


def etd_euler_update(Aeig, Beig, U, F, h):
    """One exponential Euler update for Udot = A U + U B + F at frozen F.

    Returns exp(hA) U exp(hB) + h * phi1 increment, evaluated entirely in
    the eigenbases of A and B:

        Uhat = Qa^-1 U Qb,  Fhat = Qa^-1 F Qb,
        out  = Qa [ (ea eb^T) .* Uhat + (h phi1(h (la_i + lb_j))) .* Fhat ] Qb^-1

    The Hadamard quotient (e^{h la} e^{h lb} - 1)/(la + lb) that solves the
    step's Sylvester equation is exactly h*phi1 of the eigenvalue sums, so
    near-cancelling sums stay finite.
    """
    Uhat = Aeig.inverse @ U @ Beig.vectors
    Fhat = Aeig.inverse @ F @ Beig.vectors
    ea = np.exp(h * Aeig.values)
    eb = np.exp(h * Beig.values)
    zsum = Aeig.values[:, None] + Beig.values[None, :]
    out = Aeig.vectors @ (
        (ea[:, None] * Uhat) * eb[None, :] + (h * phi1(h * zsum)) * Fhat
    ) @ Beig.inverse
    if np.isrealobj(U) and np.isrealobj(F):
        return out.real if np.iscomplexobj(out) else out
    return out
