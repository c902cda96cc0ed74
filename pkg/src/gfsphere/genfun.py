"""Generating functions of lifted contactomorphisms.

A generating function lives on R^{2n} x R^k (base ``zeta``, fiber ``nu``)
and is homogeneous of degree 2.  Its fiber-critical set is
``Sigma = {dF/dnu = 0}`` and ``i_F(zeta, nu) = (zeta, dF/dzeta)``; the
generated map is read off through ``tau_inv``.

Three bodies are provided: :class:`QuadForm` (exact), :class:`NumericGenFun`
(pointwise, from the action integral of a flow) and :class:`ComposedGenFun`
(the ``#`` product).  All evaluate batched points of shape (B, dim).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import null_space

from .contact_core import Contactomorphism, HamSpec, J_matrix, apply_J, random_sphere
from .errors import (
    DimensionMismatch,
    InconsistentSystem,
    NewtonDivergence,
    NotFiberCritical,
    NotIdentityGenerator,
    ProjectionNotBijective,
    ViolationFound,
)
from . import symplectization

TOL_FIBER = 1e-8


class GenFun:
    """Common interface: ``evaluate(x, order)`` -> (value, grad, hess|None)."""

    base_dim: int
    fiber_dim: int

    @property
    def dim(self) -> int:
        return self.base_dim + self.fiber_dim

    def evaluate(self, x: np.ndarray, order: int = 1):
        raise NotImplementedError

    def _batch(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected points of length {self.dim}, got {x.shape[-1]}")
        return np.atleast_2d(x), x.ndim == 1

    def value(self, x):
        X, single = self._batch(x)
        v = self.evaluate(X, 0)[0]
        return float(v[0]) if single else v

    def gradient(self, x):
        X, single = self._batch(x)
        g = self.evaluate(X, 1)[1]
        return g[0] if single else g

    def hessian(self, x):
        X, single = self._batch(x)
        h = self.evaluate(X, 2)[2]
        return h[0] if single else h


@dataclass(frozen=True, eq=False)
class QuadForm(GenFun):
    """``Q(x) = x^T S x`` with the first ``base_dim`` coordinates as base."""

    matrix: np.ndarray
    base_dim: int = -1

    def __post_init__(self):
        S = np.asarray(self.matrix, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError("quadratic form needs a square matrix")
        scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
        if S.size and np.max(np.abs(S - S.T)) > 1e-12 * scale:
            raise ValueError("quadratic form matrix must be symmetric")
        object.__setattr__(self, "matrix", 0.5 * (S + S.T))
        if self.base_dim < 0:
            object.__setattr__(self, "base_dim", S.shape[0])
        if self.base_dim > S.shape[0]:
            raise DimensionMismatch("base_dim exceeds matrix size")

    @property
    def fiber_dim(self) -> int:  # type: ignore[override]
        return self.matrix.shape[0] - self.base_dim

    def evaluate(self, x, order: int = 1):
        Sx = x @ self.matrix
        val = np.sum(x * Sx, axis=-1)
        hess = np.broadcast_to(2.0 * self.matrix, (len(x),) + self.matrix.shape) if order >= 2 else None
        return val, 2.0 * Sx, hess

    def fiber_rows(self) -> np.ndarray:
        return self.matrix[self.base_dim :, :]

    def sigma_basis(self) -> np.ndarray:
        """Orthonormal basis (columns) of the linear set Sigma."""
        if self.fiber_dim == 0:
            return np.eye(self.dim)
        return null_space(self.fiber_rows())

    def to_json(self) -> dict:
        return {"dim": self.dim, "base_dim": self.base_dim, "matrix": self.matrix.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "QuadForm":
        M = np.asarray(d["matrix"], dtype=float)
        if "dim" in d and int(d["dim"]) != M.shape[0]:
            raise DimensionMismatch("dim field does not match matrix")
        return cls(M, int(d.get("base_dim", M.shape[0])))


@dataclass(frozen=True, eq=False)
class NumericGenFun(GenFun):
    """Simple (k = 0) generating function given by a batched evaluator."""

    evaluator: Callable
    base_dim: int
    source: Optional[Contactomorphism] = None
    fiber_dim: int = 0

    def evaluate(self, x, order: int = 1):
        return self.evaluator(x, order)


def coupling_matrix(m: int, k1: int, k2: int) -> np.ndarray:
    """Symmetric matrix of ``-2 omega(zeta1 - q, zeta2 - q)`` in the layout
    ``(q, zeta1, zeta2, nu1, nu2)``."""
    N = 3 * m + k1 + k2
    I = np.eye(m)
    Pa = np.zeros((m, N))
    Pb = np.zeros((m, N))
    Pa[:, m : 2 * m] = I
    Pa[:, :m] -= I
    Pb[:, 2 * m : 3 * m] = I
    Pb[:, :m] -= I
    B = -2.0 * Pa.T @ J_matrix(m // 2).T @ Pb
    return 0.5 * (B + B.T)


def _layout(m: int, k1: int, k2: int):
    q = slice(0, m)
    z1 = slice(m, 2 * m)
    z2 = slice(2 * m, 3 * m)
    n1 = slice(3 * m, 3 * m + k1)
    n2 = slice(3 * m + k1, 3 * m + k1 + k2)
    return q, z1, z2, n1, n2


def _idx(m, k1, k2):
    q, z1, z2, n1, n2 = _layout(m, k1, k2)
    r = np.arange(3 * m + k1 + k2)
    return np.concatenate([r[z1], r[n1]]), np.concatenate([r[z2], r[n2]])


@dataclass(frozen=True, eq=False)
class ComposedGenFun(GenFun):
    """``F1 # F2`` on ``(q; zeta1, zeta2, nu1, nu2)``; generates ``phi2 o phi1``."""

    left: GenFun
    right: GenFun

    @property
    def base_dim(self) -> int:  # type: ignore[override]
        return self.left.base_dim

    @property
    def fiber_dim(self) -> int:  # type: ignore[override]
        return 2 * self.base_dim + self.left.fiber_dim + self.right.fiber_dim

    def evaluate(self, x, order: int = 1):
        m, k1, k2 = self.base_dim, self.left.fiber_dim, self.right.fiber_dim
        q, z1, z2, n1, n2 = _layout(m, k1, k2)
        i1, i2 = _idx(m, k1, k2)
        v1, g1, h1 = self.left.evaluate(x[:, i1], order)
        v2, g2, h2 = self.right.evaluate(x[:, i2], order)
        a = x[:, z1] - x[:, q]
        b = x[:, z2] - x[:, q]
        val = v1 + v2 - 2.0 * np.sum(apply_J(a) * b, axis=1)
        grad = np.zeros_like(x)
        # partial derivatives of the composition formula
        grad[:, z1] = g1[:, :m] + 2.0 * apply_J(b)
        grad[:, n1] = g1[:, m:]
        grad[:, z2] = g2[:, :m] - 2.0 * apply_J(a)
        grad[:, n2] = g2[:, m:]
        grad[:, q] = 2.0 * apply_J(x[:, z1] - x[:, z2])
        hess = None
        if order >= 2:
            hess = np.broadcast_to(2.0 * coupling_matrix(m, k1, k2), (len(x), self.dim, self.dim)).copy()
            hess[:, i1[:, None], i1[None, :]] += h1
            hess[:, i2[:, None], i2[None, :]] += h2
        return val, grad, hess


def compose(F1: GenFun, F2: GenFun) -> GenFun:
    """``F1 # F2`` (generates ``phi2 o phi1``); exact for two quadratic forms."""
    if F1.base_dim != F2.base_dim:
        raise DimensionMismatch(f"base dimensions differ: {F1.base_dim} vs {F2.base_dim}")
    if F1.base_dim % 2:
        raise DimensionMismatch("base dimension must be even")
    if isinstance(F1, QuadForm) and isinstance(F2, QuadForm):
        m, k1, k2 = F1.base_dim, F1.fiber_dim, F2.fiber_dim
        M = 2.0 * coupling_matrix(m, k1, k2)
        i1, i2 = _idx(m, k1, k2)
        M[np.ix_(i1, i1)] += 2.0 * F1.matrix
        M[np.ix_(i2, i2)] += 2.0 * F2.matrix
        return QuadForm(0.5 * M, m)
    return ComposedGenFun(F1, F2)


# ---------------------------------------------------------------- fiber-critical calculus


def fiber_critical_residual(F: GenFun, x) -> np.ndarray:
    g = F.gradient(x)
    return g[..., F.base_dim :]


def _check_critical(F: GenFun, x, tol):
    X, single = F._batch(x)
    g = F.gradient(X)
    res = np.linalg.norm(g[:, F.base_dim :], axis=1)
    scale = np.maximum(1.0, np.linalg.norm(X, axis=1))
    bad = res > tol * scale
    if np.any(bad):
        raise NotFiberCritical(f"fiber residual {res[bad].max():.2e} exceeds tolerance")
    return X, g, single


def i_F(F: GenFun, x, tol: float = TOL_FIBER):
    """``(zeta, dF/dzeta)`` at fiber-critical points."""
    X, g, single = _check_critical(F, x, tol)
    zeta, p = X[:, : F.base_dim], g[:, : F.base_dim]
    return (zeta[0], p[0]) if single else (zeta, p)


def generated_map_point(F: GenFun, x, tol: float = TOL_FIBER):
    """``(z, Z) = tau_inv(i_F(x))``."""
    return symplectization.tau_inv(*i_F(F, x, tol))


def sample_sigma(F: QuadForm, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random nonzero points of Sigma for a quadratic body."""
    K = F.sigma_basis()
    c = rng.standard_normal((count, K.shape[1]))
    X = c @ K.T
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def solve_fiber_critical(F: GenFun, zeta, guess=None, tol: float = 1e-12, max_iter: int = 30) -> np.ndarray:
    """Solve ``dF/dnu = 0`` for the fiber at fixed base points by Newton.

    The default guess sets every base copy in the fiber (the zeta-blocks of
    compositions) equal to ``zeta`` and the remaining coordinates to zero,
    which is the exact answer for the identity.
    """
    zeta = np.atleast_2d(np.asarray(zeta, dtype=float))
    b = F.base_dim
    if guess is None:
        guess = _default_fiber_guess(F, zeta)
    X = np.concatenate([zeta, np.atleast_2d(guess)], axis=1)
    if F.fiber_dim == 0:
        return X
    for _ in range(max_iter):
        _, g, h = F.evaluate(X, 2)
        r = g[:, b:]
        scale = np.maximum(1.0, np.linalg.norm(X, axis=1))
        if np.all(np.linalg.norm(r, axis=1) <= tol * scale):
            return X
        step = np.linalg.solve(h[:, b:, b:], r[..., None])[..., 0]
        X[:, b:] -= step
    raise NewtonDivergence("fiber-critical Newton did not converge")


def _default_fiber_guess(F: GenFun, zeta: np.ndarray) -> np.ndarray:
    if isinstance(F, ComposedGenFun):
        g1 = _default_fiber_guess(F.left, zeta)
        g2 = _default_fiber_guess(F.right, zeta)
        return np.concatenate([zeta, zeta, g1, g2], axis=1)
    return np.zeros((len(zeta), F.fiber_dim))


# ---------------------------------------------------------------- Reeb family


def q_form(n: int, t: float) -> QuadForm:
    """``Q_t(z) = -tan(pi t) |z|^2``, generating ``z -> e^{-2 pi i t} z``."""
    return QuadForm(-np.tan(np.pi * t) * np.eye(2 * n), 2 * n)


def reeb_family(n: int, t: float) -> QuadForm:
    """``A_t = Q_{t/3} # (Q_{t/3} # Q_{t/3})``: dim 10n, fiber 8n."""
    if not -1e-12 <= t <= 1 + 1e-12:
        raise ValueError("t must lie in [0, 1]")
    Q = q_form(n, t / 3.0)
    return compose(Q, compose(Q, Q))


def reeb_family_dt(n: int, t: float) -> np.ndarray:
    """Exact t-derivative of the matrix of :func:`reeb_family`."""
    c = -(np.pi / 3.0) / np.cos(np.pi * t / 3.0) ** 2
    D = QuadForm(c * np.eye(2 * n), 2 * n)
    Z = QuadForm(np.zeros((2 * n, 2 * n)), 2 * n)
    return compose(D, compose(D, D)).matrix - compose(Z, compose(Z, Z)).matrix


@dataclass
class DtReport:
    n: int
    t: float
    samples: int
    max_ratio: float  # max over samples of dA/dt(x) / |x|^2


def dt_negativity_check(n: int, t: float, samples: int = 500, seed: int = 0, margin: float = 1e-12) -> DtReport:
    """Sample Sigma of A_t and check ``dA/dt(x) < -margin |x|^2``."""
    A = reeb_family(n, t)
    X = sample_sigma(A, samples, np.random.default_rng(seed))
    dM = reeb_family_dt(n, t)
    vals = np.einsum("bi,ij,bj->b", X, dM, X) / np.sum(X * X, axis=1)
    worst = int(np.argmax(vals))
    if vals[worst] >= -margin:
        raise ViolationFound(X[worst], float(vals[worst]))
    return DtReport(n, t, samples, float(vals[worst]))


# ---------------------------------------------------------------- flows


def _numeric_evaluator(phi: Contactomorphism, newton_tol: float, max_iter: int):
    d = 2 * phi.n
    I = np.eye(d)

    def evaluator(w, order=1):
        w = np.atleast_2d(np.asarray(w, dtype=float))
        out_v = np.zeros(len(w))
        out_g = np.zeros_like(w)
        out_h = np.zeros((len(w), d, d)) if order >= 2 else None
        nz = np.linalg.norm(w, axis=1) > 0
        if not np.any(nz):
            return out_v, out_g, out_h
        W = w[nz]
        scale = np.linalg.norm(W, axis=1)
        z = W.copy()
        for _ in range(max_iter):
            Z, D, S = phi.lift(z, jacobian=True, action=True)
            r = 0.5 * (z + Z) - W
            if np.all(np.linalg.norm(r, axis=1) <= newton_tol * scale):
                break
            z = z - 2.0 * np.linalg.solve(I + D, r[..., None])[..., 0]
        else:
            raise NewtonDivergence("could not solve (z + phi(z))/2 = w")
        out_v[nz] = 0.5 * (np.sum(apply_J(z) * Z, axis=1) - S)
        out_g[nz] = apply_J(z - Z)
        if order >= 2:
            Jm = J_matrix(phi.n)
            Hm = 2.0 * Jm @ np.linalg.solve(np.swapaxes(I + D, 1, 2), np.swapaxes(I - D, 1, 2)).swapaxes(1, 2)
            out_h[nz] = 0.5 * (Hm + np.swapaxes(Hm, 1, 2))
        return out_v, out_g, out_h

    return evaluator


def check_projection(phi: Contactomorphism, samples: int = 64, seed: int = 0, fractions=(0.25, 0.5, 0.75, 1.0)):
    """Raise ProjectionNotBijective unless det(I + D phi_s) > 0 on a sample grid."""
    if phi.kind == "unitary":
        fractions = (1.0,)
    P = random_sphere(np.random.default_rng(seed), samples, 2 * phi.n)
    I = np.eye(2 * phi.n)
    for f in fractions:
        sub = phi if phi.kind == "unitary" else Contactomorphism.flow(
            phi.hamiltonian, phi.time * f, phi.start, rtol=phi.rtol, atol=phi.atol
        )
        _, D, _ = sub.lift(P, jacobian=True)
        dets = np.linalg.det(I + D)
        if np.min(dets) <= 0:
            raise ProjectionNotBijective(
                f"det(I + D) = {np.min(dets):.3e} at time fraction {f}; subdivide the isotopy"
            )


def action_genfun(
    H: HamSpec,
    t0: float = 0.0,
    t1: float = 1.0,
    samples: int = 64,
    seed: int = 0,
    newton_tol: float = 1e-13,
    max_iter: int = 30,
    rtol: float = 1e-10,
    atol: float = 1e-10,
) -> NumericGenFun:
    """Simple generating function of the lifted flow of H from t0 to t1.

    ``F(w) = (<Jz, Z> - S(z)) / 2`` where ``(z + Z)/2 = w``, ``Z`` is the
    lifted time-(t1 - t0) image of z and S is the action integral along the
    trajectory; the gradient is the graph covector ``J(z - Z)``.
    """
    phi = Contactomorphism.flow(H, t1 - t0, t0, rtol=rtol, atol=atol)
    check_projection(phi, samples, seed)
    return NumericGenFun(_numeric_evaluator(phi, newton_tol, max_iter), 2 * H.n, phi)


def genfun_for_isotopy(H: HamSpec, N: int, **kw) -> GenFun:
    """Generating function of the time-1 flow by subdivision into N pieces.

    Pieces ``F_j`` generate the flow from ``(j-1)/N`` to ``j/N``; they are folded
    as ``F_1 # (F_2 # (... # F_N))`` so that the result generates
    ``psi_N o ... o psi_1``.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    pieces = []
    for j in range(N):
        try:
            pieces.append(action_genfun(H, j / N, (j + 1) / N, **kw))
        except ProjectionNotBijective as exc:
            raise ProjectionNotBijective(f"{exc}; try N > {N}") from exc
    F = pieces[-1]
    for Fj in reversed(pieces[:-1]):
        F = compose(Fj, F)
    return F


# ---------------------------------------------------------------- fiber reduction


def fiber_reduce_identity_form(Q: QuadForm, samples: int = 50, seed: int = 0, tol: float = 1e-9):
    """Remove base dependence from a quadratic generating function of the identity.

    With ``2S = [[A, B], [B^T, C]]`` solve ``C D + B^T = 0`` and check
    ``A + B D = 0``; then ``Q' = Q o Psi`` with ``Psi = [[I, 0], [D, I]]``.
    """
    if not isinstance(Q, QuadForm):
        raise TypeError("fiber reduction needs a quadratic body")
    b = Q.base_dim
    if Q.fiber_dim:
        X = sample_sigma(Q, samples, np.random.default_rng(seed))
        z, Zp = generated_map_point(Q, X)
        if np.max(np.linalg.norm(z - Zp, axis=1)) > 1e-8 * max(1.0, np.max(np.abs(Q.matrix))):
            raise NotIdentityGenerator("generated map differs from the identity")
    elif np.max(np.abs(Q.matrix)) > tol:
        raise NotIdentityGenerator("a simple form generates the identity only if it vanishes")
    S2 = 2.0 * Q.matrix
    A, B, C = S2[:b, :b], S2[:b, b:], S2[b:, b:]
    scale = max(1.0, float(np.max(np.abs(S2))))
    if Q.fiber_dim:
        D = np.linalg.lstsq(C, -B.T, rcond=None)[0]
    else:
        D = np.zeros((0, b))
    r1 = np.max(np.abs(C @ D + B.T)) if D.size else 0.0
    r2 = np.max(np.abs(A + B @ D)) if A.size else 0.0
    if max(r1, r2) > tol * scale:
        raise InconsistentSystem(f"residuals {r1:.2e}, {r2:.2e}")
    m = Q.dim
    Psi = np.eye(m)
    Psi[b:, :b] = D
    Sp = Psi.T @ Q.matrix @ Psi
    Sp[:b, :] = 0.0
    Sp[:, :b] = 0.0
    return D, QuadForm(Sp, b)
