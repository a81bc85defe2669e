"""Full-order time integration and snapshot generation.

Two first-order schemes are provided for  Udot = A U + U B + F(U, t):

* semi-implicit Euler ("imex"): the linear part is implicit, which turns
  every step into a Sylvester solve with coefficients (I - hA) and (-hB);
* exponential Euler ("etd"): exact on the linear part, with the frozen
  nonlinearity propagated through the phi1 kernel.

Both reuse one eigendecomposition of A and one of B for the whole run, so
a step costs four dense multiplications plus a Hadamard correction.  When
an eigenvector basis is too ill conditioned the schemes fall back to
Schur/Pade routines step by step.
"""

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels, problems
from .errors import ConditioningError, DimensionError, DivergenceError, SingularityError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid with n_t steps on [t0, t_final]."""

    t_final: float
    n_t: int
    t0: float = 0.0

    def __post_init__(self):
        if self.n_t < 0 or self.t_final <= self.t0:
            raise DimensionError("need t_final > t0 and n_t >= 0")

    @property
    def h(self):
        return (self.t_final - self.t0) / max(self.n_t, 1)

    @property
    def nodes(self):
        return self.t0 + self.h * np.arange(self.n_t + 1)


@dataclass
class SnapshotStream:
    """Matrices observed at increasing times; kind is 'state'/'nonlinearity'."""

    kind: str
    times: np.ndarray
    matrices: list


@dataclass
class FullTrajectory:
    """Stored states of a full-order run (possibly strided)."""

    times: np.ndarray
    states: list
    scheme: str = "imex"


@dataclass
class ArraySource:
    """Snapshot source backed by precomputed matrices."""

    times: np.ndarray
    matrices: list
    kind: str = "state"

    def matrix(self, i):
        return self.matrices[i]


@dataclass
class AnalyticSource:
    """Snapshot source that samples an analytic function on demand."""

    fn: problems.AnalyticFunction
    times: np.ndarray
    kind: str = "state"

    def matrix(self, i):
        return problems.sample_analytic(self.fn, self.times[i])


class _Stepper:
    """Shared stepping core holding the spectral data of A and B."""

    def __init__(self, spec, scheme):
        if scheme not in ("imex", "etd"):
            raise DimensionError(f"unknown scheme {scheme!r}")
        self.spec = spec
        self.scheme = scheme
        self.fallback = False
        try:
            self.eigA = kernels.eig_pair(spec.A)
            self.eigB = kernels.eig_pair(spec.B)
        except ConditioningError:
            self.fallback = True
            self._expm_cache = {}

    def _expm_pair(self, h):
        key = float(h)
        if key not in self._expm_cache:
            self._expm_cache[key] = (
                scipy.linalg.expm(h * self.spec.A),
                scipy.linalg.expm(h * self.spec.B),
            )
        return self._expm_cache[key]

    def step(self, U, t, h):
        F = problems.eval_nonlinear(self.spec, U, t)
        if self.scheme == "imex":
            rhs = U + h * F
            if self.fallback:
                n, m = U.shape
                return scipy.linalg.solve_sylvester(
                    np.eye(n) - h * self.spec.A, -h * self.spec.B, rhs
                )
            denom = 1.0 - h * (
                self.eigA.values[:, None] + self.eigB.values[None, :]
            )
            if np.min(np.abs(denom)) < 1e-14:
                raise SingularityError("implicit Euler operator is singular at this step size")
            out = self.eigA.vectors @ (
                (self.eigA.inverse @ rhs @ self.eigB.vectors) / denom
            ) @ self.eigB.inverse
            return out.real if np.iscomplexobj(out) else out
        if self.fallback:
            Ea, Eb = self._expm_pair(h)
            rhs = Ea @ F @ Eb - F
            try:
                Phi = scipy.linalg.solve_sylvester(self.spec.A, self.spec.B, rhs)
            except Exception as exc:
                raise SingularityError(
                    "exponential Euler fallback hit a singular Sylvester operator"
                ) from exc
            return Ea @ U @ Eb + Phi
        return kernels.etd_euler_update(self.eigA, self.eigB, U, F, h)


def imex_euler_step(spec, U, t, h):
    """One semi-implicit Euler step: solve (I - hA) X + X (-hB) = U + h F(U, t)."""
    F = problems.eval_nonlinear(spec, U, t)
    n = spec.A.shape[0]
    return kernels.solve_sylvester(np.eye(n) - h * spec.A, -h * spec.B, U + h * F)


def exp_euler_step(spec, eigA, eigB, U, t, h):
    """One exponential Euler step using precomputed eigendecompositions.

    Returns exp(hA) U exp(hB) + Phi, where Phi solves
    A Phi + Phi B = exp(hA) F exp(hB) - F; in the eigenbases this is the
    Hadamard quotient (e^{h la_i} e^{h lb_j} - 1)/(la_i + lb_j) applied to F,
    i.e. h * phi1 of the eigenvalue sums, finite also when sums vanish.
    """
    F = problems.eval_nonlinear(spec, U, t)
    return kernels.etd_euler_update(eigA, eigB, U, F, h)


def _integrate(spec, times, scheme, capture_mask, store_mask):
    """March through the given time nodes, recording what the masks ask for."""
    stepper = _Stepper(spec, scheme)
    U = spec.U0.copy()
    stored_t, stored = [], []
    cap_t, cap_state, cap_nonl = [], [], []

    for i, t in enumerate(times):
        if i > 0:
            h = times[i] - times[i - 1]
            U = stepper.step(U, times[i - 1], h)
            if not np.all(np.isfinite(U)):
                raise DivergenceError(
                    f"non-finite state after step {i} (t = {t:.6g})", step=i
                )
        if store_mask[i]:
            stored_t.append(t)
            stored.append(U.copy())
        if capture_mask[i]:
            cap_t.append(t)
            cap_state.append(U.copy())
            cap_nonl.append(problems.eval_nonlinear(spec, U, t))

    traj = FullTrajectory(np.array(stored_t), stored, scheme)
    state = SnapshotStream("state", np.array(cap_t), cap_state)
    nonl = SnapshotStream("nonlinearity", np.array(cap_t), cap_nonl)
    return traj, state, nonl


def run_full(spec, grid, scheme="imex", capture=None, store_stride=None):
    """Integrate the full-order model over the grid.

    capture: times at which state and nonlinearity snapshots are taken; must
    coincide with grid nodes (default: every node).  store_stride controls
    how densely the trajectory itself is kept; by default every node at
    n <= 256 and every fifth node above.

    Returns (trajectory, state stream, nonlinearity stream).
    """
    nodes = grid.nodes
    n = spec.A.shape[0]
    if store_stride is None:
        store_stride = 1 if n <= 256 else 5
    store_mask = np.zeros(len(nodes), dtype=bool)
    store_mask[::store_stride] = True
    store_mask[-1] = True

    capture_mask = np.ones(len(nodes), dtype=bool)
    if capture is not None:
        capture_mask[:] = False
        for t in np.atleast_1d(capture):
            j = int(np.argmin(np.abs(nodes - t)))
            if abs(nodes[j] - t) > 1e-9 * max(grid.h, 1e-300):
                raise DimensionError(f"capture time {t} is not a grid node")
            capture_mask[j] = True
    return _integrate(spec, nodes, scheme, capture_mask, store_mask)


def iter_full(spec, grid, scheme="imex"):
    """Yield (index, time, state) along the grid without storing the run.

    Memory stays at one state matrix regardless of grid length, which is
    what large reference solves need when only running error sums are kept.
    """
    stepper = _Stepper(spec, scheme)
    nodes = grid.nodes
    U = spec.U0.copy()
    yield 0, nodes[0], U
    for i in range(1, len(nodes)):
        U = stepper.step(U, nodes[i - 1], nodes[i] - nodes[i - 1])
        if not np.all(np.isfinite(U)):
            raise DivergenceError(
                f"non-finite state after step {i} (t = {nodes[i]:.6g})", step=i
            )
        yield i, nodes[i], U


def trajectory_source(spec, times, scheme="imex"):
    """Integrate over the given time nodes and expose snapshot sources.

    The candidate nodes double as the integration grid, so each node costs
    one step.  Returns (state source, nonlinearity source, seconds).
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 1 or np.any(np.diff(times) <= 0):
        raise DimensionError("times must be strictly increasing")
    tic = time.perf_counter()
    mask = np.ones(len(times), dtype=bool)
    _, state, nonl = _integrate(spec, times, scheme, mask, np.zeros_like(mask))
    elapsed = time.perf_counter() - tic
    return (
        ArraySource(state.times, state.matrices, "state"),
        ArraySource(nonl.times, nonl.matrices, "nonlinearity"),
        elapsed,
    )
