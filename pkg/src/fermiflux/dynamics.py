"""Covariance-matrix dynamics: drift, time evolution, stationary Lyapunov solve.

The covariance of the reduced state obeys the closed linear equation

    dM/dt = G M + M G* + sum_i Theta_i M_{B_i} Theta_i^*,
    G = -i T_S - (1/2) Theta Theta^*,

and the model is ergodic iff the Kalman space span{ran(T_S^k Theta)} is the
whole phase space, in which case the Lyapunov equation G M + M G* + noise = 0
has a unique solution, the stationary covariance.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import NotErgodicError
from .phasespace import Basis, PhaseSpaceMatrix
from .thermal import ThermalQuasiFreeModel

LYAPUNOV_TOL = 1e-10


def drift(model: ThermalQuasiFreeModel) -> PhaseSpaceMatrix:
    """G = -i T_S - (1/2) Theta Theta^* in the Majorana basis."""
    theta = model.theta_total()
    g = -1j * model.t_s.maj - 0.5 * theta @ theta.conj().T
    return PhaseSpaceMatrix(g, Basis.MAJORANA)


def kalman_matrix(model: ThermalQuasiFreeModel) -> np.ndarray:
    """[Theta, T_S Theta, ..., T_S^{2L-1} Theta], columns spanning the Kalman space."""
    theta = model.theta_total()
    ts = model.t_s.maj
    blocks = [theta]
    for _ in range(2 * model.n_modes - 1):
        blocks.append(ts @ blocks[-1])
    return np.hstack(blocks)


def kalman_rank(model: ThermalQuasiFreeModel, rtol: float = 1e-9) -> tuple[int, bool]:
    """Rank of the Kalman matrix and whether it is full (ergodicity criterion)."""
    k = kalman_matrix(model)
    if k.shape[1] == 0:
        return 0, model.n_modes == 0
    s = np.linalg.svd(k, compute_uv=False)
    rank = int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0
    return rank, rank == 2 * model.n_modes


def noise_matrix(model: ThermalQuasiFreeModel) -> np.ndarray:
    """sum_i Theta_i M_{B_i} Theta_i^* (Majorana basis)."""
    return model.noise_total()


def evolve(m0: PhaseSpaceMatrix, model: ThermalQuasiFreeModel, t: float) -> PhaseSpaceMatrix:
    """Propagate a covariance for time t >= 0.

    Uses the block-triangular exponential of [[G, C], [0, -G*]] so both the
    homogeneous part and the integral term come from a single expm call:

        M(t) = F1 M0 F1^dagger + F2 F1^dagger,
        expm(t [[G, C], [0, -G*]]) = [[F1, F2], [0, F3]].
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    g = drift(model).maj
    c = noise_matrix(model)
    n = g.shape[0]
    big = np.zeros((2 * n, 2 * n), dtype=complex)
    big[:n, :n] = g
    big[:n, n:] = c
    big[n:, n:] = -g.conj().T
    e = sla.expm(t * big)
    f1 = e[:n, :n]
    f2 = e[:n, n:]
    m = f1 @ m0.maj @ f1.conj().T + f2 @ f1.conj().T
    m = 0.5 * (m + m.conj().T)
    return PhaseSpaceMatrix(m, Basis.MAJORANA).to_basis(m0.basis)


def stationary_covariance(model: ThermalQuasiFreeModel, residual_tol: float = LYAPUNOV_TOL) -> PhaseSpaceMatrix:
    """Unique solution of G M + M G* + noise = 0 for an ergodic model.

    Solved by vectorizing to the Kronecker linear system; refuses (rather than
    silently picking one of many solutions) when Kalman rank is deficient.
    """
    rank, full = kalman_rank(model)
    if not full:
        raise NotErgodicError(
            f"Kalman rank {rank} < {2 * model.n_modes}: stationary covariance is not unique"
        )
    g = drift(model).maj
    c = noise_matrix(model)
    n = g.shape[0]
    # row-major vec: vec(G M + M G*) = (G kron 1 + 1 kron conj(G)) vec(M)
    a = np.kron(g, np.eye(n)) + np.kron(np.eye(n), g.conj())
    m = np.linalg.solve(a, -c.reshape(-1)).reshape(n, n)
    m = 0.5 * (m + m.conj().T)
    resid = np.linalg.norm(g @ m + m @ g.conj().T + c, 2)
    if resid > residual_tol:
        raise NotErgodicError(f"Lyapunov residual {resid:.3e} exceeds {residual_tol:.1e}")
    return PhaseSpaceMatrix(m, Basis.MAJORANA)


def stationary_covariance_restricted(model: ThermalQuasiFreeModel):
    """Stationary covariance data for possibly non-ergodic models.

    Returns ``(m, ergodic)``.  When the Kalman space is a proper subspace V,
    the Lyapunov map is only invertible on operators over V; fluxes depend on
    the restriction only, so the returned covariance solves the equation on V
    and carries the Gibbs mean (1/2) on the orthogonal complement.  Results for
    deficient models should be treated as representative, not unique.
    """
    rank, full = kalman_rank(model)
    if full:
        return stationary_covariance(model), True
    k = kalman_matrix(model)
    n = 2 * model.n_modes
    if rank == 0:
        return PhaseSpaceMatrix(0.5 * np.eye(n), Basis.MAJORANA), False
    u, s, _ = np.linalg.svd(k)
    v = u[:, :rank]  # orthonormal basis of the Kalman space
    g = v.conj().T @ drift(model).maj @ v
    c = v.conj().T @ noise_matrix(model) @ v
    a = np.kron(g, np.eye(rank)) + np.kron(np.eye(rank), g.conj())
    m_small = np.linalg.solve(a, -c.reshape(-1)).reshape(rank, rank)
    m_small = 0.5 * (m_small + m_small.conj().T)
    m = v @ m_small @ v.conj().T + 0.5 * (np.eye(n) - v @ v.conj().T)
    return PhaseSpaceMatrix(m, Basis.MAJORANA), False
