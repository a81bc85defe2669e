"""Shared fixtures: trained reduction pipelines reused across test modules."""

import numpy as np
import pytest

from mor2 import deim, fullsolve, pod, problems


def offline_pipeline(spec, n_max, kappa, tau, tol=None, detect_symmetry=False):
    """Snapshots -> dynamic bases for both streams -> interpolation factors."""
    times = pod.candidate_times(spec.t_final, n_max)
    state_src, nonl_src, _ = fullsolve.trajectory_source(spec, times, "imex")
    tol = tau if tol is None else tol
    ubasis, urep = pod.dynamic_pod(state_src, tol, kappa, tau,
                                   detect_symmetry=detect_symmetry)
    fbasis, frep = pod.dynamic_pod(nonl_src, tol, kappa, tau,
                                   detect_symmetry=detect_symmetry)
    op = deim.build_deim(fbasis)
    factors = deim.precompute_rom_factors(ubasis, fbasis, op)
    return {
        "spec": spec, "state_src": state_src, "nonl_src": nonl_src,
        "ubasis": ubasis, "urep": urep, "fbasis": fbasis, "frep": frep,
        "op": op, "factors": factors,
    }


@pytest.fixture(scope="session")
def ac1_64():
    spec = problems.build_problem("ac1", 64)
    return offline_pipeline(spec, n_max=40, kappa=50, tau=1e-3)


@pytest.fixture(scope="session")
def rdc_64():
    spec = problems.build_problem("rdc", 64, eps1=0.05)
    return offline_pipeline(spec, n_max=60, kappa=50, tau=1e-3)


def identity_basis(n, tau=1e-3, n_max=4, kappa=None):
    """BasisPair wrapping the full identity: reduction becomes a no-op."""
    eye = np.eye(n)
    return pod.BasisPair(eye.copy(), eye.copy(), np.ones(n), np.ones(n),
                         tau, n_max, n if kappa is None else kappa)


def identity_pair(n, m):
    """Rectangular identity BasisPair for states of shape (n, m)."""
    return pod.BasisPair(np.eye(n), np.eye(m), np.ones(n), np.ones(m),
                         1e-3, 4, max(n, m))


def identity_model(spec):
    """Assemble the reduced model that reproduces the full problem exactly."""
    from mor2 import deim, rom

    n, m = spec.U0.shape
    ubasis = identity_pair(n, m)
    fbasis = identity_pair(n, m)
    op = deim.build_deim(fbasis)
    factors = deim.precompute_rom_factors(ubasis, fbasis, op)
    return rom.assemble_rom(spec, ubasis, factors), ubasis


def make_spec(A, B, U0, nonlinear=None, t_final=1.0):
    """Ad-hoc problem around explicit operators, zero nonlinearity default."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    U0 = np.asarray(U0, dtype=float)
    if nonlinear is None:
        def nonlinear(U, X, Y, t):
            return np.zeros_like(U)
    return problems.ProblemSpec(
        name="synthetic", A=A, B=B, U0=U0, t_final=t_final,
        nonlinear=nonlinear, grid_x=np.arange(A.shape[0], dtype=float),
        grid_y=np.arange(B.shape[0], dtype=float), bc="dirichlet",
        params={}, elementwise=True,
    )


def stable_pair(rng, n, m, symmetric=True):
    """Random operator pair shifted left so every eigenvalue sum is negative."""
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((m, m))
    if symmetric:
        A, B = A + A.T, B + B.T
    A -= (np.linalg.norm(A, 2) + 0.5) * np.eye(n)
    B -= (np.linalg.norm(B, 2) + 0.5) * np.eye(m)
    return A, B
