"""Standard contact geometry on S^{2n-1} in R^{2n}.

Coordinates are ordered ``(x_1..x_n, y_1..y_n)`` with ``z_j = x_j + i y_j``.
The complex structure is ``J(x, y) = (-y, x)`` and ``omega(u, v) = <Ju, v>``,
so ``omega(e_x1, e_y1) = +1``.  The contact form is the restriction of
``lambda = sum x dy - y dx``; its Reeb field is ``Jp`` and the Reeb flow is
``z -> e^{it} z``.

Contact Hamiltonian flows are realised on the symplectization: the lifted
Hamiltonian ``Hh(z) = |z|^2 H(z/|z|)`` is integrated as
``dz/dt = J grad Hh / 2`` (the Hamiltonian field for ``d lambda``), which
turns ``H = 1`` into the Reeb flow.  The conformal factor is read off the
endpoint radius, ``g = -2 log |endpoint|``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

import numpy as np
from scipy.integrate import solve_ivp

from . import hamlang
from .errors import (
    IntegrationFailure,
    JacobianUnavailable,
    NonFiniteHamiltonian,
    NotEquivariant,
)

TOL_UNIT = 1e-12
TOL_CONTACT = 1e-8
TOL_RANK = 1e-6
ANGLE_CLUSTER = 1e-6
RTOL = 1e-10
ATOL = 1e-10


# ---------------------------------------------------------------- linear algebra


def J_matrix(n: int) -> np.ndarray:
    """Matrix of the complex structure on R^{2n}."""
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, -I], [I, Z]])


def apply_J(v: np.ndarray) -> np.ndarray:
    """``J v`` along the last axis."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1] // 2
    return np.concatenate([-v[..., n:], v[..., :n]], axis=-1)


def omega(u, v) -> np.ndarray:
    return np.sum(apply_J(u) * np.asarray(v, dtype=float), axis=-1)


def to_complex(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = v.shape[-1] // 2
    return v[..., :n] + 1j * v[..., n:]


def from_complex(w) -> np.ndarray:
    w = np.asarray(w)
    return np.concatenate([w.real, w.imag], axis=-1)


def real_matrix(A) -> np.ndarray:
    """Real 2n x 2n form of a complex n x n matrix."""
    A = np.asarray(A, dtype=complex)
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def complex_matrix(M) -> np.ndarray:
    """Inverse of :func:`real_matrix` (assumes M commutes with J)."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0] // 2
    return M[:n, :n] + 1j * M[n:, :n]


def unitary_from_angles(angles) -> np.ndarray:
    """Real matrix of ``z_j -> e^{i theta_j} z_j``."""
    return real_matrix(np.diag(np.exp(1j * np.asarray(angles, dtype=float))))


def sphere_point(coords) -> np.ndarray:
    """Normalise ``coords`` onto the unit sphere; zero vectors are rejected."""
    v = np.asarray(coords, dtype=float)
    if v.ndim != 1 or v.size % 2:
        raise ValueError("a sphere point needs an even-length vector")
    r = np.linalg.norm(v)
    if not np.isfinite(r) or r < 1e-300:
        raise ValueError("cannot normalise the zero vector")
    return v / r


def random_sphere(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    x = rng.standard_normal((count, dim))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


# ---------------------------------------------------------------- contact data


def contact_form(p, v) -> float:
    """``lambda_p(v) = <Jp, v>``."""
    return float(np.dot(apply_J(p), v))


def reeb_vector(p) -> np.ndarray:
    return apply_J(p)


def reeb_flow(t: float, p) -> np.ndarray:
    """``e^{it} p``; accepts batched points."""
    p = np.asarray(p, dtype=float)
    return np.cos(t) * p + np.sin(t) * apply_J(p)


# ---------------------------------------------------------------- Hamiltonians


@dataclass(frozen=True, eq=False)
class HamSpec:
    """Contact Hamiltonian on S^{2n-1}: quadratic ``p^T S p`` or an expression."""

    n: int
    matrix: Optional[np.ndarray] = None
    ast: Optional[hamlang.HamAst] = None

    def __post_init__(self):
        if (self.matrix is None) == (self.ast is None):
            raise ValueError("HamSpec needs exactly one of matrix / ast")
        if self.matrix is not None:
            S = np.asarray(self.matrix, dtype=float)
            if S.shape != (2 * self.n, 2 * self.n):
                raise ValueError("matrix must be 2n x 2n")
            if not np.allclose(S, S.T, atol=1e-12):
                raise ValueError("quadratic Hamiltonian matrix must be symmetric")
            object.__setattr__(self, "matrix", 0.5 * (S + S.T))
        elif self.ast.n != self.n:
            raise ValueError("expression dimension does not match n")

    @classmethod
    def quadratic(cls, S) -> "HamSpec":
        S = np.asarray(S, dtype=float)
        return cls(S.shape[0] // 2, matrix=S)

    @classmethod
    def expr(cls, src: str, n: int) -> "HamSpec":
        return cls(n, ast=hamlang.parse(src, n))

    @classmethod
    def constant(cls, c: float, n: int) -> "HamSpec":
        return cls(n, matrix=c * np.eye(2 * n))

    @property
    def kind(self) -> str:
        return "quadratic" if self.matrix is not None else "expr"

    def is_zero(self) -> bool:
        return self.matrix is not None and not np.any(self.matrix)

    def on_sphere(self, p, t: float = 0.0):
        """H_t(p) for unit p (batched)."""
        p = np.asarray(p, dtype=float)
        if self.matrix is not None:
            return np.einsum("...i,ij,...j->...", p, self.matrix, p)
        return hamlang.evaluate(self.ast, p, t)

    def lifted(self, z: np.ndarray, t: float, order: int = 1):
        """Lifted Hamiltonian ``|z|^2 H_t(z/|z|)`` with derivatives.

        ``z`` has shape (B, 2n).  Returns ``(value, grad, hess)`` where hess is
        None for ``order=1``.
        """
        z = np.asarray(z, dtype=float)
        if self.matrix is not None:
            S = self.matrix
            Sz = z @ S
            val = np.sum(z * Sz, axis=-1)
            hess = np.broadcast_to(2.0 * S, z.shape[:-1] + S.shape) if order >= 2 else None
            return val, 2.0 * Sz, hess
        d = z.shape[-1]
        batch = z.shape[:-1]
        eye = np.eye(d)
        zero_h = np.zeros(batch + (d, d)) if order >= 2 else None
        coords = [Jet_(z[..., i], np.broadcast_to(eye[i], batch + (d,)), zero_h) for i in range(d)]
        r2 = coords[0] * coords[0]
        for c in coords[1:]:
            r2 = r2 + c * c
        if np.any(r2.val < 1e-300):
            raise NonFiniteHamiltonian("lifted Hamiltonian evaluated at the origin")
        rv = r2.val
        inv_r = r2.chain(rv**-0.5, -0.5 * rv**-1.5, 0.75 * rv**-2.5)
        units = [c * inv_r for c in coords]
        tj = Jet_(np.full(batch, float(t)))
        H = hamlang.eval_jet(self.ast.root, units, tj)
        if H.grad is None:  # constant expression
            H = Jet_(np.broadcast_to(H.val, batch).astype(float), np.zeros(batch + (d,)), zero_h)
        out = r2 * H
        if not (np.all(np.isfinite(out.val)) and np.all(np.isfinite(out.grad))):
            raise NonFiniteHamiltonian("Hamiltonian is not finite on the sampled points")
        return out.val, out.grad, out.hess

    def to_json(self) -> dict:
        d = {"n": self.n, "kind": self.kind}
        if self.matrix is not None:
            d["matrix"] = self.matrix.tolist()
        else:
            d["expr"] = self.ast.source or str(self.ast)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "HamSpec":
        n = int(d["n"])
        kind = d.get("kind", "expr" if "expr" in d else "quadratic")
        if kind == "quadratic":
            return cls(n, matrix=np.asarray(d["matrix"], dtype=float))
        if kind == "expr":
            return cls.expr(d["expr"], n)
        raise ValueError(f"unknown HamSpec kind {kind!r}")


Jet_ = hamlang.Jet


# ---------------------------------------------------------------- integration


def _integrate(rhs, y0: np.ndarray, t0: float, t1: float, rtol: float, atol: float) -> np.ndarray:
    if t1 == t0:
        return y0.copy()
    sol = solve_ivp(rhs, (t0, t1), y0, method="DOP853", rtol=rtol, atol=atol)
    if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
        raise IntegrationFailure(sol.message)
    return sol.y[:, -1]


def lifted_flow(
    H: HamSpec,
    z: np.ndarray,
    t0: float,
    t1: float,
    jacobian: bool = False,
    action: bool = False,
    rtol: float = RTOL,
    atol: float = ATOL,
):
    """Integrate the lifted flow from time t0 to t1 for a batch of points.

    Returns ``(Z, D, S)``: endpoints (B, 2n), Jacobians (B, 2n, 2n) or None,
    and the action integrals ``int <Jz, dz/ds> - Hh ds`` (B,) or None.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    B, d = z.shape
    Jm = J_matrix(d // 2)
    sizes = [d] + ([d * d] if jacobian else []) + ([1] if action else [])
    width = sum(sizes)

    def rhs(t, y):
        Y = y.reshape(B, width)
        zz = Y[:, :d]
        val, grad, hess = H.lifted(zz, t, order=2 if jacobian else 1)
        zdot = 0.5 * apply_J(grad)
        parts = [zdot]
        if jacobian:
            D = Y[:, d : d + d * d].reshape(B, d, d)
            parts.append((0.5 * (Jm @ hess) @ D).reshape(B, d * d))
        if action:
            parts.append((np.sum(apply_J(zz) * zdot, axis=1) - val)[:, None])
        return np.concatenate(parts, axis=1).ravel()

    y0 = [z]
    if jacobian:
        y0.append(np.broadcast_to(np.eye(d).ravel(), (B, d * d)))
    if action:
        y0.append(np.zeros((B, 1)))
    y0 = np.concatenate(y0, axis=1).ravel()
    yT = _integrate(rhs, y0, t0, t1, rtol, atol).reshape(B, width)
    Z = yT[:, :d]
    D = yT[:, d : d + d * d].reshape(B, d, d) if jacobian else None
    S = yT[:, -1] if action else None
    return Z, D, S


def contact_flow(H: HamSpec, t: float, p, rtol: float = RTOL, atol: float = ATOL):
    """``(phi_t(p), g_t(p))`` for a single or batched unit point."""
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    Z, _, _ = lifted_flow(H, np.atleast_2d(p), 0.0, t, rtol=rtol, atol=atol)
    r = np.linalg.norm(Z, axis=1)
    q, g = Z / r[:, None], -2.0 * np.log(r)
    return (q[0], float(g[0])) if single else (q, g)


# ---------------------------------------------------------------- contactomorphisms


@dataclass(frozen=True, eq=False)
class Contactomorphism:
    """A contactomorphism of S^{2n-1}: unitary, or the flow of a HamSpec.

    ``post_rotation`` composes with the Reeb flow afterwards:
    ``p -> reeb_flow(post_rotation, phi(p))``.
    """

    kind: str
    n: int
    matrix: Optional[np.ndarray] = None
    hamiltonian: Optional[HamSpec] = None
    time: float = 1.0
    start: float = 0.0
    post_rotation: float = 0.0
    rtol: float = RTOL
    atol: float = ATOL

    def __post_init__(self):
        if self.kind == "unitary":
            U = np.asarray(self.matrix, dtype=float)
            if U.shape != (2 * self.n, 2 * self.n):
                raise ValueError("unitary matrix must be 2n x 2n")
            if not np.allclose(U.T @ U, np.eye(2 * self.n), atol=1e-10):
                raise ValueError("matrix is not orthogonal")
            Jm = J_matrix(self.n)
            if not np.allclose(U @ Jm, Jm @ U, atol=1e-10):
                raise ValueError("matrix does not commute with J")
            object.__setattr__(self, "matrix", U)
        elif self.kind == "flow":
            if self.hamiltonian is None or self.hamiltonian.n != self.n:
                raise ValueError("flow needs a Hamiltonian of matching dimension")
        else:
            raise ValueError(f"unknown contactomorphism kind {self.kind!r}")

    @classmethod
    def unitary(cls, U) -> "Contactomorphism":
        U = np.asarray(U, dtype=float)
        return cls("unitary", U.shape[0] // 2, matrix=U)

    @classmethod
    def identity(cls, n: int) -> "Contactomorphism":
        return cls.unitary(np.eye(2 * n))

    @classmethod
    def flow(cls, H: HamSpec, time: float = 1.0, start: float = 0.0, **kw) -> "Contactomorphism":
        return cls("flow", H.n, hamiltonian=H, time=time, start=start, **kw)

    @property
    def linear_matrix(self) -> Optional[np.ndarray]:
        """Real matrix of the lift when it is linear (unitary kinds)."""
        if self.kind != "unitary":
            return None
        return reeb_flow(self.post_rotation, self.matrix.T).T

    def lift(self, z, jacobian: bool = False, action: bool = False):
        """Lifted map on R^{2n}: ``(Z, DZ or None, action or None)``, batched."""
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if jacobian and np.any(np.linalg.norm(z, axis=1) < 1e-8):
            raise ValueError("Jacobian of the lift is not defined within 1e-8 of the origin")
        if self.kind == "unitary":
            U = self.linear_matrix
            D = np.broadcast_to(U, (len(z),) + U.shape) if jacobian else None
            return z @ U.T, D, (np.zeros(len(z)) if action else None)
        Z, D, S = lifted_flow(
            self.hamiltonian, z, self.start, self.start + self.time,
            jacobian=jacobian, action=action, rtol=self.rtol, atol=self.atol,
        )
        if self.post_rotation:
            R = reeb_flow(self.post_rotation, np.eye(2 * self.n)).T
            Z = Z @ R.T
            if D is not None:
                D = R @ D
        return Z, D, S

    def __call__(self, p):
        """``(phi(p), g(p))`` for single or batched unit points."""
        p = np.asarray(p, dtype=float)
        single = p.ndim == 1
        Z, _, _ = self.lift(np.atleast_2d(p))
        r = np.linalg.norm(Z, axis=1)
        q, g = Z / r[:, None], -2.0 * np.log(r)
        return (q[0], float(g[0])) if single else (q, g)

    def then_reeb(self, s: float) -> "Contactomorphism":
        """``reeb_flow(s, .) o self``."""
        return replace(self, post_rotation=self.post_rotation + s)

    def to_json(self) -> dict:
        if self.post_rotation:
            raise ValueError("post-rotated contactomorphisms have no JSON form")
        if self.kind == "unitary":
            return {"kind": "unitary", "matrix": self.matrix.tolist()}
        return {"kind": "flow", "hamiltonian": self.hamiltonian.to_json(), "time": self.time}

    @classmethod
    def from_json(cls, d: dict) -> "Contactomorphism":
        if d["kind"] == "unitary":
            return cls.unitary(np.asarray(d["matrix"], dtype=float))
        if d["kind"] == "flow":
            return cls.flow(HamSpec.from_json(d["hamiltonian"]), float(d.get("time", 1.0)))
        raise ValueError(f"unknown contactomorphism kind {d['kind']!r}")


def load_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------- discriminant / translated points


def tangent_basis(p: np.ndarray) -> np.ndarray:
    """Orthonormal basis of T_p S^{2n-1} as rows."""
    Q, _ = np.linalg.qr(np.column_stack([p, np.eye(p.size)]))
    return Q[:, 1:].T


@dataclass(frozen=True)
class DiscriminantVerdict:
    verdict: str  # "no" | "degenerate" | "nondegenerate"
    sigma_min: float = float("nan")

    def __eq__(self, other):
        if isinstance(other, str):
            return self.verdict == other
        return isinstance(other, DiscriminantVerdict) and self.verdict == other.verdict

    def __hash__(self):
        return hash(self.verdict)

    def __str__(self):
        return self.verdict


def is_discriminant(phi: Contactomorphism, p, tol: float = 1e-8, tol_rank: float = TOL_RANK) -> DiscriminantVerdict:
    """Classify p as a discriminant point of phi.

    At a discriminant point the lift's differential D satisfies
    ``D X = dphi(X) - dg(X) p / 2`` for tangent X, which recovers both
    ``dphi`` and ``dg`` from D.
    """
    p = sphere_point(p)
    q, g = phi(p)
    if np.linalg.norm(q - p) > tol or abs(g) > tol:
        return DiscriminantVerdict("no")
    try:
        _, D, _ = phi.lift(p[None, :], jacobian=True)
    except IntegrationFailure as exc:
        raise JacobianUnavailable(str(exc)) from exc
    D = D[0]
    if not np.all(np.isfinite(D)):
        raise JacobianUnavailable("variational equations diverged")
    T = tangent_basis(p)
    DX = T @ D.T  # rows: D X for each basis X
    radial = DX @ p
    dphi = DX - radial[:, None] * p[None, :]
    dg = -2.0 * radial
    L = np.column_stack([dphi - T, dg])  # rows: image of each basis vector
    sigma = float(np.linalg.svd(L, compute_uv=False).min())
    return DiscriminantVerdict("nondegenerate" if sigma > tol_rank else "degenerate", sigma)


def translated_point_check(phi: Contactomorphism, p, tol: float = 1e-8) -> list[float]:
    """Reeb times t in [0, 2pi) with ``reeb_flow(t, phi(p)) = p`` and g(p) = 0."""
    p = sphere_point(p)
    q, g = phi(p)
    if abs(g) > tol:
        return []
    c = np.vdot(to_complex(q), to_complex(p))  # sum conj(q_j) p_j
    if abs(c) < 0.5:
        return []
    t = float(np.angle(c)) % (2 * np.pi)
    if np.linalg.norm(reeb_flow(t, q) - p) > tol:
        return []
    if 2 * np.pi - t < ANGLE_CLUSTER:
        t = 0.0
    return [t]


@dataclass
class RPReport:
    equivariant: bool
    max_violation: float
    samples: int
    pairs: list = field(default_factory=list)


def rp_lift_check(
    phi: Union[Contactomorphism, Callable],
    samples: int = 200,
    seed: int = 0,
    tol: float = 1e-8,
    translated: Optional[list] = None,
) -> RPReport:
    """Check ``phi(-p) = -phi(p)`` on random points and pair translated points.

    ``phi`` may be a :class:`Contactomorphism` or any callable on batched
    points returning either points or ``(points, g)``.
    """
    rng = np.random.default_rng(seed)
    n2 = phi.n * 2 if isinstance(phi, Contactomorphism) else None
    if n2 is None:
        if translated:
            n2 = len(translated[0][0])
        else:
            raise ValueError("dimension unknown; pass a Contactomorphism or translated points")
    P = random_sphere(rng, samples, n2)

    def ev(x):
        out = phi(x)
        if isinstance(out, tuple):
            return np.asarray(out[0]), np.asarray(out[1])
        return np.asarray(out), np.zeros(len(x))

    a, ga = ev(P)
    b, gb = ev(-P)
    viol = float(max(np.max(np.linalg.norm(a + b, axis=1)), np.max(np.abs(ga - gb))))
    if viol > tol:
        raise NotEquivariant(viol)
    pairs = []
    for p, t in translated or []:
        p = np.asarray(p, dtype=float)
        ok = True
        if isinstance(phi, Contactomorphism):
            ok = any(abs(s - t) < 1e-6 or abs(abs(s - t) - 2 * np.pi) < 1e-6 for s in translated_point_check(phi, -p, tol=max(tol, 1e-8)))
        pairs.append(((p, t), (-p, t), ok))
    return RPReport(True, viol, samples, pairs)
