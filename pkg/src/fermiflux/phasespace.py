"""Phase-space linear algebra for fermionic Gaussian calculus.

The doubled one-particle space of an L-mode system has dimension 2L and
carries two distinguished bases:

* the *Majorana* basis, in which the antilinear involution ``xi`` acts as
  entrywise complex conjugation of coordinates, and
* the *creation/annihilation* (CA) basis, in which gauge-invariant
  (particle-number conserving) operators are block diagonal.

The Majorana basis is the canonical internal representation: structure checks
(generator, coupling, covariance) reduce to reality/antisymmetry statements
there.  Conversion between the bases is the fixed block similarity

    X_ca = P X_maj P^{-1},      P = [[1, i1], [1, -i1]]  (L x L blocks).

Conventions fixed here and relied on everywhere else:

* generators T of quadratic Hamiltonians are self-adjoint with
  ``xi T xi = -T`` (Majorana matrix ``iR`` with R real antisymmetric);
* couplings Theta: bath -> system satisfy ``xi_S Theta xi_B = -Theta``
  (Majorana matrix ``iW`` with W real);
* covariance matrices M are self-adjoint with spectrum in [0, 1] and
  ``xi-transpose(M) = 1 - M``; the Gibbs covariance of a generator kappa at
  inverse temperature beta is ``(1 + exp(-beta kappa))^{-1}``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .errors import MalformedInputError, ValidationError

DEFAULT_TOL = 1e-10


class Basis(enum.Enum):
    MAJORANA = "majorana"
    CA = "ca"


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def ca_change_matrix(n_modes: int) -> np.ndarray:
    """P with CA coordinates = P @ Majorana coordinates."""
    one = np.eye(n_modes)
    return np.block([[one, 1j * one], [one, -1j * one]])


def ca_change_inverse(n_modes: int) -> np.ndarray:
    one = np.eye(n_modes)
    return 0.5 * np.block([[one, one], [-1j * one, 1j * one]])


def _check_even(dim: int) -> int:
    if dim % 2 != 0 or dim <= 0:
        raise MalformedInputError(f"phase-space dimension must be even and positive, got {dim}")
    return dim // 2


@dataclass(frozen=True, eq=False)
class PhaseSpaceMatrix:
    """Square operator on a 2L-dimensional phase space, tagged with its basis."""

    data: np.ndarray
    basis: Basis = Basis.MAJORANA

    def __post_init__(self):
        a = _freeze(self.data)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise MalformedInputError(f"expected a square matrix, got shape {a.shape}")
        _check_even(a.shape[0])
        object.__setattr__(self, "data", a)

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_modes(self) -> int:
        return self.dim // 2

    def to_basis(self, target: Basis) -> "PhaseSpaceMatrix":
        if target == self.basis:
            return self
        L = self.n_modes
        P, Pinv = ca_change_matrix(L), ca_change_inverse(L)
        if target == Basis.CA:
            return PhaseSpaceMatrix(P @ self.data @ Pinv, Basis.CA)
        return PhaseSpaceMatrix(Pinv @ self.data @ P, Basis.MAJORANA)

    @property
    def maj(self) -> np.ndarray:
        return self.to_basis(Basis.MAJORANA).data

    @property
    def ca(self) -> np.ndarray:
        return self.to_basis(Basis.CA).data


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Rectangular operator from a bath phase space (2L_B) to the system one (2L_S)."""

    data: np.ndarray
    basis: Basis = Basis.MAJORANA

    def __post_init__(self):
        a = _freeze(self.data)
        if a.ndim != 2:
            raise MalformedInputError(f"expected a matrix, got ndim {a.ndim}")
        _check_even(a.shape[0])
        _check_even(a.shape[1])
        object.__setattr__(self, "data", a)

    @property
    def n_system_modes(self) -> int:
        return self.data.shape[0] // 2

    @property
    def n_bath_modes(self) -> int:
        return self.data.shape[1] // 2

    def to_basis(self, target: Basis) -> "CouplingMatrix":
        if target == self.basis:
            return self
        Ls, Lb = self.n_system_modes, self.n_bath_modes
        if target == Basis.CA:
            return CouplingMatrix(ca_change_matrix(Ls) @ self.data @ ca_change_inverse(Lb), Basis.CA)
        return CouplingMatrix(ca_change_inverse(Ls) @ self.data @ ca_change_matrix(Lb), Basis.MAJORANA)

    @property
    def maj(self) -> np.ndarray:
        return self.to_basis(Basis.MAJORANA).data

    @property
    def ca(self) -> np.ndarray:
        return self.to_basis(Basis.CA).data


def basis_convert(m: PhaseSpaceMatrix, target: Basis) -> PhaseSpaceMatrix:
    """Express the operator in the target basis (identity when already there)."""
    return m.to_basis(target)


def xi_conjugate(m):
    """xi M xi for a square matrix, or xi_S Theta xi_B for a coupling.

    Antilinear conjugation; in the Majorana basis it is entrywise complex
    conjugation, in the CA basis a block swap composed with conjugation.
    """
    if isinstance(m, CouplingMatrix):
        return CouplingMatrix(np.conj(m.maj), Basis.MAJORANA).to_basis(m.basis)
    return PhaseSpaceMatrix(np.conj(m.maj), Basis.MAJORANA).to_basis(m.basis)


def xi_transpose(m: PhaseSpaceMatrix) -> PhaseSpaceMatrix:
    """The transpose xi M^dagger xi; plain transposition in the Majorana basis.

    In the CA basis it acts blockwise as [[A,B],[C,D]] -> [[D^t,B^t],[C^t,A^t]].
    """
    return PhaseSpaceMatrix(m.maj.T, Basis.MAJORANA).to_basis(m.basis)


def generator_residuals(t: PhaseSpaceMatrix) -> dict:
    """Residuals of the quadratic-generator structure: T self-adjoint, xi T xi = -T."""
    a = t.maj
    return {
        "self_adjoint": float(np.max(np.abs(a - a.conj().T), initial=0.0)),
        "xi_odd": float(np.max(np.abs(np.conj(a) + a), initial=0.0)),
    }


def coupling_residuals(theta: CouplingMatrix) -> dict:
    """Residual of the coupling structure xi_S Theta xi_B = -Theta."""
    a = theta.maj
    return {"xi_odd": float(np.max(np.abs(np.conj(a) + a), initial=0.0))}


def covariance_residuals(m: PhaseSpaceMatrix) -> dict:
    """Residuals of the covariance structure: M = M*, 0 <= M <= 1, M^T = 1 - M."""
    a = m.maj
    herm = float(np.max(np.abs(a - a.conj().T), initial=0.0))
    w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    return {
        "self_adjoint": herm,
        "spectrum_low": float(max(0.0, -w.min())),
        "spectrum_high": float(max(0.0, w.max() - 1.0)),
        "xi_transpose": float(np.max(np.abs(a.T - (np.eye(a.shape[0]) - a)))),
    }


def _require(residuals: dict, tol: float, label: str) -> None:
    bad = [(f"{label}.{k}", v, tol) for k, v in residuals.items() if v > tol]
    if bad:
        raise ValidationError(bad)


def validate_generator(t: PhaseSpaceMatrix, tol: float = DEFAULT_TOL, label: str = "generator") -> None:
    _require(generator_residuals(t), tol, label)


def validate_coupling(theta: CouplingMatrix, tol: float = DEFAULT_TOL, label: str = "coupling") -> None:
    _require(coupling_residuals(theta), tol, label)


def validate_covariance(m: PhaseSpaceMatrix, tol: float = DEFAULT_TOL, label: str = "covariance") -> None:
    _require(covariance_residuals(m), tol, label)


def gibbs_covariance(kappa: PhaseSpaceMatrix, beta: float) -> PhaseSpaceMatrix:
    """Covariance (1 + exp(-beta kappa))^{-1} of the Gibbs state of kappa.

    Computed through the eigendecomposition of the self-adjoint kappa, with the
    logistic function applied to eigenvalues, so beta of either sign and the
    beta -> +-inf limits are handled without overflow.
    """
    a = kappa.maj
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    m = (v * expit(beta * w)) @ v.conj().T
    return PhaseSpaceMatrix(m, Basis.MAJORANA).to_basis(kappa.basis)


def covariance_generator(m: PhaseSpaceMatrix, clamp: float = 1e-9) -> PhaseSpaceMatrix:
    """Inverse of :func:`gibbs_covariance` at beta = 1: kappa with M = (1+e^-kappa)^-1.

    The covariance spectrum is clamped to [clamp, 1-clamp] before the logit, so
    boundary (pure-mode) covariances degrade smoothly instead of diverging.
    """
    a = m.maj
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    w = np.clip(w, clamp, 1.0 - clamp)
    k = (v * logit(w)) @ v.conj().T
    return PhaseSpaceMatrix(k, Basis.MAJORANA).to_basis(m.basis)


def embed_gauge_invariant(small: np.ndarray, kind: str) -> PhaseSpaceMatrix:
    """Lift an L x L gauge-invariant object to the full phase space (CA basis).

    ``kind='generator'`` embeds a one-particle Hamiltonian h as diag(h, -conj(h));
    ``kind='covariance'`` embeds a small covariance m as diag(m, 1 - conj(m)).
    """
    small = np.asarray(small, dtype=complex)
    L = small.shape[0]
    z = np.zeros((L, L))
    if kind == "generator":
        blocks = [[small, z], [z, -np.conj(small)]]
    elif kind == "covariance":
        blocks = [[small, z], [z, np.eye(L) - np.conj(small)]]
    else:
        raise MalformedInputError(f"unknown embedding kind {kind!r}")
    return PhaseSpaceMatrix(np.block(blocks), Basis.CA)


def embed_gauge_invariant_coupling(small: np.ndarray) -> CouplingMatrix:
    """Lift an L_S x L_B hopping amplitude to a phase-space coupling (CA basis).

    The lower block carries a minus sign: diag(theta, -conj(theta)) is the
    unique gauge-invariant completion with xi_S Theta xi_B = -Theta.
    """
    small = np.asarray(small, dtype=complex)
    ls, lb = small.shape
    z = np.zeros((ls, lb))
    return CouplingMatrix(np.block([[small, z], [z, -np.conj(small)]]), Basis.CA)
