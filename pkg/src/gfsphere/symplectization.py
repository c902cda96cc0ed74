"""Lifts to R^{2n}, the tau identification and Cayley generating forms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .contact_core import Contactomorphism, HamSpec, J_matrix, apply_J
from .errors import NearIdentityMinusOne

TOL_SING = 1e-10


@dataclass(frozen=True, eq=False)
class LinearSymplectomorphism:
    """A real 2n x 2n matrix preserving omega."""

    matrix: np.ndarray
    tol: float = 1e-12

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
            raise ValueError("need a square matrix of even size")
        Jm = J_matrix(M.shape[0] // 2)
        err = np.max(np.abs(M.T @ Jm @ M - Jm))
        if err > self.tol * max(1.0, np.max(np.abs(M)) ** 2):
            raise ValueError(f"matrix is not symplectic (error {err:.2e})")
        object.__setattr__(self, "matrix", M)

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2

    def __call__(self, z):
        return np.asarray(z, dtype=float) @ self.matrix.T


@dataclass(frozen=True, eq=False)
class LiftedMap:
    """``z -> |z| e^{-g/2} phi(z/|z|)`` on R^{2n}."""

    source: Contactomorphism
    linear: Optional[LinearSymplectomorphism] = None

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        Z = np.atleast_2d(z)
        out = np.zeros_like(Z)
        nz = np.linalg.norm(Z, axis=1) > 0
        if np.any(nz):
            out[nz] = self.source.lift(Z[nz])[0]
        return out[0] if single else out

    def jacobian(self, z):
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        Z, D, _ = self.source.lift(np.atleast_2d(z), jacobian=True)
        return D[0] if single else D


def lift_map(phi: Contactomorphism) -> LiftedMap:
    lin = None
    if phi.kind == "unitary":
        lin = LinearSymplectomorphism(phi.linear_matrix, tol=1e-10)
    return LiftedMap(phi, lin)


def lift_hamiltonian(H: HamSpec):
    """Return ``(z, t) -> |z|^2 H_t(z/|z|)`` (0 at the origin), batched in z."""

    def Hh(z, t: float = 0.0):
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        Z = np.atleast_2d(z)
        out = np.zeros(len(Z))
        nz = np.linalg.norm(Z, axis=1) > 0
        if np.any(nz):
            out[nz] = H.lifted(Z[nz], t, order=1)[0]
        return float(out[0]) if single else out

    return Hh


def tau(z, Z):
    """``(z, Z) -> ((z + Z)/2, J(z - Z))``."""
    z = np.asarray(z, dtype=float)
    Z = np.asarray(Z, dtype=float)
    return 0.5 * (z + Z), apply_J(z - Z)


def tau_inv(q, p):
    """Inverse of :func:`tau`: ``(q - Jp/2, q + Jp/2)``."""
    q = np.asarray(q, dtype=float)
    Jp = apply_J(p)
    return q - 0.5 * Jp, q + 0.5 * Jp


def cayley_matrix(Phi, tol_sing: float = TOL_SING) -> np.ndarray:
    """``S = J (I - Phi)(I + Phi)^{-1}``, symmetrised."""
    Phi = np.asarray(Phi, dtype=float)
    m = Phi.shape[0]
    I = np.eye(m)
    A = I + Phi
    if abs(np.linalg.det(A)) <= tol_sing:
        raise NearIdentityMinusOne("Id + Phi is singular; Phi has eigenvalue -1")
    # S = J (I - Phi) A^{-1}  <=>  S A = J (I - Phi)  <=>  A^T S^T = (J(I - Phi))^T
    S = np.linalg.solve(A.T, (J_matrix(m // 2) @ (I - Phi)).T).T
    asym = np.max(np.abs(S - S.T))
    if asym > 1e-10 * max(1.0, np.max(np.abs(S))):
        raise ValueError(f"Cayley form is not symmetric ({asym:.2e}); is Phi symplectic?")
    return 0.5 * (S + S.T)


def cayley_genfun(Phi):
    """Simple quadratic generating form of a linear symplectomorphism."""
    from .genfun import QuadForm

    M = Phi.matrix if isinstance(Phi, LinearSymplectomorphism) else np.asarray(Phi, dtype=float)
    S = cayley_matrix(M)
    return QuadForm(S, base_dim=S.shape[0])
