"""Parametric Morse sweep over ``G_t = A_t # F`` and translated-point extraction.

``A_t`` generates ``a_t(z) = e^{-2 pi i t} z`` and F generates the lift of
phi, so ``G_t`` generates ``phi o a_t``.  A critical point of ``G_t`` on the
sphere with value 0 is a fixed ray of that map, i.e. a translated point of
phi with Reeb time ``2 pi t``.  Since ``d/dt A_t < 0`` on Sigma, critical
values only decrease, and each crossing of 0 is recorded once.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import schur
from scipy.optimize import brentq
from scipy.special import ndtri
from scipy.stats import qmc

from .contact_core import (
    Contactomorphism,
    complex_matrix,
    is_discriminant,
    random_sphere,
    real_matrix,
    reeb_flow,
    translated_point_check,
)
from .errors import (
    GridTooCoarse,
    NearIdentityMinusOne,
    NewtonBudgetExhausted,
    ResolutionTooCoarse,
    ZeroBaseCoordinate,
)
from .genfun import (
    GenFun,
    NumericGenFun,
    QuadForm,
    _idx,
    compose,
    generated_map_point,
    reeb_family,
    reeb_family_dt,
    solve_fiber_critical,
)
from .homology import (
    BettiVector,
    SublevelType,
    brute_force_betti,
    index_nullity,
    join_types,
    quad_sublevel_type,
    sphere_mesh,
    subcomplex_betti,
)
from .symplectization import cayley_matrix

SCHEMA_VERSION = 1
T_CLUSTER = 1e-7
WITNESS_CLUSTER = 1e-5


@dataclass
class Crossing:
    t: float
    attachment_index: int
    multiplicity: int
    witness: np.ndarray
    residual: float = 0.0
    betti_before: Optional[BettiVector] = None
    betti_after: Optional[BettiVector] = None

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "attachment_index": self.attachment_index,
            "multiplicity": self.multiplicity,
            "witness": self.witness.tolist(),
            "residual": self.residual,
            "betti_before": None if self.betti_before is None else self.betti_before.to_list(),
            "betti_after": None if self.betti_after is None else self.betti_after.to_list(),
        }


@dataclass
class SweepLedger:
    n: int
    grid: np.ndarray
    crossings: list
    grid_index: list  # index of G_t per grid point (None if not computed)
    grid_nullity: list
    grid_betti: list  # BettiVector or None per grid point
    complete: bool = True
    sub_type: Optional[SublevelType] = None  # type of {F # 0 <= 0}
    method: str = "quadratic"
    notes: list = field(default_factory=list)

    @property
    def total_multiplicity(self) -> int:
        return sum(c.multiplicity for c in self.crossings)

    @property
    def hypothesis_status(self) -> str:
        if self.sub_type is None:
            return "unknown"
        if self.sub_type.is_empty or any(self.sub_type.betti().values):
            return "met"
        return "not-met"

    def summary(self) -> str:
        return (
            f"translated points (with multiplicity): {self.total_multiplicity}; "
            f"hypothesis status: {self.hypothesis_status}"
        )

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "n": self.n,
            "method": self.method,
            "complete": self.complete,
            "hypothesis_status": self.hypothesis_status,
            "sub_type": None if self.sub_type is None else str(self.sub_type),
            "total_multiplicity": self.total_multiplicity,
            "crossings": [c.to_json() for c in self.crossings],
            "grid": self.grid.tolist(),
            "betti": [None if b is None else b.to_list() for b in self.grid_betti],
            "notes": list(self.notes),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["t", "index", "multiplicity", "betti_vector"])
        mult = {}
        for c in self.crossings:
            i = int(np.argmin(np.abs(self.grid - c.t)))
            mult[i] = mult.get(i, 0) + c.multiplicity
        for i, t in enumerate(self.grid):
            b = self.grid_betti[i]
            w.writerow([
                repr(float(t)),
                "" if self.grid_index[i] is None else self.grid_index[i],
                mult.get(i, 0),
                "" if b is None else json.dumps(b.to_list()),
            ])
        return buf.getvalue()


# ---------------------------------------------------------------- generating function of a unitary


def unitary_sqrt(U: np.ndarray) -> np.ndarray:
    """Principal square root of a unitary (real form), eigen-angles in (-pi/2, pi/2]."""
    T, Z = schur(complex_matrix(U), output="complex")
    d = np.diag(T)
    ang = np.angle(d)
    ang = np.where(ang <= -np.pi + 1e-15, np.pi, ang)
    R = Z @ np.diag(np.exp(0.5j * ang)) @ Z.conj().T
    return real_matrix(R)


def unitary_genfun(phi: Contactomorphism) -> QuadForm:
    """Exact quadratic generating function of a unitary contactomorphism.

    Uses the Cayley form when ``I + U`` is invertible and otherwise composes
    the Cayley forms of a unitary square root.
    """
    U = phi.linear_matrix
    if U is None:
        raise ValueError("unitary contactomorphism required")
    try:
        return QuadForm(cayley_matrix(U), U.shape[0])
    except NearIdentityMinusOne:
        R = unitary_sqrt(U)
        C = QuadForm(cayley_matrix(R), U.shape[0])
        return compose(C, C)


def sub_type_quadratic(F: QuadForm) -> SublevelType:
    """Type of ``{F # 0 <= 0}`` for a quadratic F."""
    Z = QuadForm(np.zeros((F.base_dim, F.base_dim)), F.base_dim)
    return quad_sublevel_type(compose(F, Z))


# ---------------------------------------------------------------- quadratic sweep


def quadratic_sweep(phi: Contactomorphism, grid_size: int = 2000, tol: float = 1e-10) -> SweepLedger:
    """Exact sweep for unitary phi by eigenvalue tracking of ``M(t)``."""
    if phi.kind != "unitary":
        raise ValueError("quadratic_sweep needs a unitary contactomorphism")
    n = phi.n
    F = unitary_genfun(phi)

    def M(t):
        return compose(reeb_family(n, t), F).matrix

    grid = np.linspace(0.0, 1.0, grid_size)
    lam = np.array([np.linalg.eigvalsh(M(t)) for t in grid])  # ascending
    rad = np.max(np.abs(lam), axis=1, keepdims=True)
    thr = 1e-9 * rad
    # sorted eigenvalues are nonincreasing in t since dM/dt <= 0
    events = []  # (t_star, j)
    for j in range(lam.shape[1]):
        col = lam[:, j]
        nonpos = np.nonzero(col <= thr[:, 0])[0]
        if len(nonpos) == 0:
            continue
        i = int(nonpos[0])
        if i == 0:
            if abs(col[0]) <= thr[0, 0]:
                events.append((0.0, j, 0))
            continue  # negative from the start: no crossing in [0, 1)
        if abs(col[i]) <= thr[i, 0]:
            t_star = float(grid[i])
        else:
            f = lambda s, j=j: np.linalg.eigvalsh(M(s))[j]
            t_star = brentq(f, grid[i - 1], grid[i], xtol=1e-15, rtol=1e-15, maxiter=200)
        if t_star >= 1.0 - 1e-12:
            continue
        events.append((t_star, j, i))
    events.sort()
    groups: list = []
    for ev in events:
        if groups and ev[0] - groups[-1][-1][0] <= T_CLUSTER:
            groups[-1].append(ev)
        else:
            groups.append([ev])
    cells = [g[0][2] for g in groups]
    if len(set(cells)) != len(cells):
        raise GridTooCoarse("two distinct crossings fall in one grid cell; increase the grid size")
    crossings = []
    for g in groups:
        t_star = float(np.mean([e[0] for e in g]))
        w, V = np.linalg.eigh(M(t_star))
        js = [e[1] for e in g]
        r = max(float(np.max(np.abs(w[js]))), 0.0)
        ind_before = int(np.sum(w < -1e-9 * np.max(np.abs(w))))
        mult = len(g)
        crossings.append(
            Crossing(
                t_star,
                ind_before,
                mult,
                V[:, js[0]],
                r,
                _sphere_betti(ind_before - 1),
                _sphere_betti(ind_before + mult - 1),
            )
        )
    idx = [int(np.sum(l < -t)) for l, t in zip(lam, thr[:, 0])]
    null = [int(np.sum(np.abs(l) <= t)) for l, t in zip(lam, thr[:, 0])]
    betti = [_sphere_betti(a + b - 1) for a, b in zip(idx, null)]
    return SweepLedger(n, grid, crossings, idx, null, betti, True, sub_type_quadratic(F), "quadratic")


def _sphere_betti(d: int) -> BettiVector:
    return SublevelType.Empty().betti() if d < 0 else SublevelType.Sphere(d).betti()


# ---------------------------------------------------------------- translated points


@dataclass
class TranslatedPointReport:
    p: np.ndarray
    t_reeb: float
    nondegenerate: bool
    multiplicity: int
    residuals: tuple  # (fixed-point residual, conformal residual)
    verified: bool = True

    def to_json(self) -> dict:
        return {
            "p": self.p.tolist(),
            "t_reeb": self.t_reeb,
            "nondegenerate": self.nondegenerate,
            "multiplicity": self.multiplicity,
            "residuals": list(self.residuals),
            "verified": self.verified,
        }


def translated_points_from_ledger(phi: Contactomorphism, ledger: SweepLedger, tol: float = 1e-8) -> list:
    """Translated points of phi from crossing witnesses.

    The witness base q is a fixed ray of ``phi o a_t``, so ``p = a_t(q/|q|)``
    satisfies ``phi(p) = reeb_flow(2 pi t, p)``; we report ``t_reeb = 2 pi t``.
    """
    out = []
    m = 2 * phi.n
    for c in ledger.crossings:
        q = c.witness[:m]
        nq = np.linalg.norm(q)
        if nq < tol:
            raise ZeroBaseCoordinate(f"crossing at t={c.t:.6g} has vanishing base coordinate")
        p = reeb_flow(-2 * np.pi * c.t, q / nq)
        t_reeb = (2 * np.pi * c.t) % (2 * np.pi)
        img, g = phi(p)
        fixed = float(np.linalg.norm(reeb_flow(-t_reeb, img) - p))
        conf = abs(float(g))
        check = translated_point_check(phi, p, tol=max(tol, 10 * fixed))
        expect = (2 * np.pi - t_reeb) % (2 * np.pi)
        verified = any(min(abs(s - expect), 2 * np.pi - abs(s - expect)) < 1e-6 for s in check)
        nondeg = False
        if c.multiplicity == 1:
            v = is_discriminant(phi.then_reeb(-t_reeb), p, tol=max(tol, 10 * fixed))
            nondeg = v == "nondegenerate"
        out.append(TranslatedPointReport(p, t_reeb, nondeg, c.multiplicity, (fixed, conf), verified))
    return out


# ---------------------------------------------------------------- regular shifts


@dataclass
class RegularShiftResult:
    success: bool
    t: Optional[float]
    genfun: Optional[GenFun]
    evidence: list  # (t_i, min gradient norm / eigenvalue) for failures


def _zero_set_gradient_min(G: GenFun, samples: int, seed: int) -> float:
    X = random_sphere(np.random.default_rng(seed), samples, G.dim)
    for _ in range(30):
        v, g, _ = G.evaluate(X, 1)
        gt = g - 2.0 * v[:, None] * X  # tangential gradient (Euler identity)
        X = X - (v / np.maximum(np.sum(gt * gt, axis=1), 1e-300))[:, None] * gt
        X /= np.linalg.norm(X, axis=1, keepdims=True)
    v, g, _ = G.evaluate(X, 1)
    on = np.abs(v) < 1e-9
    if not np.any(on):
        return math.inf
    gt = g[on] - 2.0 * v[on, None] * X[on]
    return float(np.min(np.linalg.norm(gt, axis=1)))


def find_regular_shift(
    phi: Contactomorphism,
    F: GenFun,
    max_tries: int = 9,
    tol: float = 1e-6,
    samples: int = 512,
    seed: int = 0,
) -> RegularShiftResult:
    """First ``t_i = i/(max_tries+1)`` for which 0 is a regular value of ``A_{t_i} # F`` on the sphere.

    The returned function generates ``phi o a_t``, which is conjugate to
    ``a_t o phi`` by ``a_t``.
    """
    evidence = []
    for i in range(1, max_tries + 1):
        t = i / (max_tries + 1)
        G = compose(reeb_family(phi.n, t), F)
        if isinstance(G, QuadForm):
            ev = np.linalg.eigvalsh(G.matrix)
            score = float(np.min(np.abs(ev)) / np.max(np.abs(ev)))
        else:
            score = _zero_set_gradient_min(G, samples, seed)
        if score > tol:
            return RegularShiftResult(True, t, G, evidence)
        evidence.append((t, score))
    return RegularShiftResult(False, None, None, evidence)


# ---------------------------------------------------------------- numeric sweep


def _solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        x = np.linalg.solve(A, b[..., None])[..., 0]
        if np.all(np.isfinite(x)):
            return x
    except np.linalg.LinAlgError:
        pass
    return np.einsum("bij,bj->bi", np.linalg.pinv(A, rcond=1e-13), b)


def _sobol_sphere(count: int, dim: int, seed: int) -> np.ndarray:
    eng = qmc.Sobol(dim, scramble=True, seed=seed)
    U = eng.random_base2(max(1, math.ceil(math.log2(max(count, 2)))))[:count]
    X = ndtri(np.clip(U, 1e-12, 1 - 1e-12))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


class _Family:
    """``G_t = A_t # F`` evaluated with a per-row parameter t."""

    def __init__(self, n: int, F: GenFun):
        self.n = n
        self.F = F
        m = 2 * n
        self.iA, self.iF = _idx(m, 8 * n, F.fiber_dim)
        zero = QuadForm(np.zeros((10 * n, 10 * n)), m)
        self.coupling = compose(zero, QuadForm(np.zeros((F.dim, F.dim)), m)).matrix

    def at(self, t: float) -> GenFun:
        return compose(reeb_family(self.n, t), self.F)

    def evaluate(self, X: np.ndarray, T: np.ndarray, order: int = 2):
        """Value, gradient, Hessian and d/dt of the gradient for rows ``X[i]`` at ``T[i]``."""
        A = np.array([reeb_family(self.n, float(t)).matrix for t in T])
        dA = np.array([reeb_family_dt(self.n, float(t)) for t in T])
        xa = X[:, self.iA]
        Ax = np.einsum("bij,bj->bi", A, xa)
        fv, fg, fh = self.F.evaluate(X[:, self.iF], order)
        Cx = X @ self.coupling
        val = np.sum(xa * Ax, axis=1) + fv + np.sum(X * Cx, axis=1)
        grad = 2.0 * Cx
        grad[:, self.iA] += 2.0 * Ax
        grad[:, self.iF] += fg
        hess = None
        if order >= 2:
            hess = np.broadcast_to(2.0 * self.coupling, (len(X),) + self.coupling.shape).copy()
            hess[:, self.iA[:, None], self.iA[None, :]] += 2.0 * A
            hess[:, self.iF[:, None], self.iF[None, :]] += fh
        dgrad = np.zeros_like(X)
        dgrad[:, self.iA] = 2.0 * np.einsum("bij,bj->bi", dA, xa)
        return val, grad, hess, dgrad


def _lagrange_newton(G: GenFun, X: np.ndarray, tol: float, max_iter: int):
    """Critical points of G on the sphere: ``grad G = 2 mu x``, ``|x| = 1``."""
    N = X.shape[1]
    X = X.copy()
    # shift-invert seeding towards small critical values
    for _ in range(2):
        _, _, H = G.evaluate(X, 2)
        X = _solve(H + 1e-12 * np.eye(N), X)
        X /= np.linalg.norm(X, axis=1, keepdims=True)
    v = G.evaluate(X, 0)[0]
    mu = v.copy()
    done = np.zeros(len(X), bool)
    res = np.full(len(X), np.inf)
    for _ in range(max_iter):
        v, g, H = G.evaluate(X, 2)
        r1 = g - 2.0 * mu[:, None] * X
        r2 = 0.5 * (np.sum(X * X, axis=1) - 1.0)
        res = np.sqrt(np.sum(r1 * r1, axis=1) + r2 * r2)
        done = res <= tol
        if np.all(done):
            break
        Jac = np.zeros((len(X), N + 1, N + 1))
        Jac[:, :N, :N] = H - 2.0 * mu[:, None, None] * np.eye(N)
        Jac[:, :N, N] = -2.0 * X
        Jac[:, N, :N] = X
        # minimum-norm steps: critical sets are often whole circles (singular Jacobian)
        step = np.einsum("bij,bj->bi", np.linalg.pinv(Jac, rcond=1e-10), np.concatenate([r1, r2[:, None]], axis=1))
        X = X - step[:, :N]
        mu = mu - step[:, N]
    return X, mu, res <= tol


def _refine_crossings(fam: _Family, X: np.ndarray, T: np.ndarray, tol: float, max_iter: int):
    """Joint Gauss-Newton in (x, t) for ``grad G_t(x) = 0``, ``|x| = 1``."""
    N = X.shape[1]
    X = X.copy()
    T = T.copy()
    ok = np.zeros(len(X), bool)
    for _ in range(max_iter):
        T = np.clip(T, 0.0, 1.0)
        _, g, H, dg = fam.evaluate(X, T, 2)
        R = np.concatenate([g, 0.5 * (np.sum(X * X, axis=1) - 1.0)[:, None]], axis=1)
        res = np.linalg.norm(R, axis=1)
        ok = res <= tol
        if np.all(ok):
            break
        Jac = np.zeros((len(X), N + 1, N + 1))
        Jac[:, :N, :N] = H
        Jac[:, :N, N] = dg
        Jac[:, N, :N] = X
        step = np.einsum("bij,bj->bi", np.linalg.pinv(Jac, rcond=1e-12), R)
        X = X - step[:, :N]
        T = T - step[:, N]
    return X, T, ok


def _fiber_type_numeric(F: GenFun, n: int, level_fn, subdivisions: int) -> Optional[SublevelType]:
    """Brute-force sublevel type on S^{2n-1} of ``level_fn(points, F values)``."""
    k = 2 * n
    if k > 5:
        return None
    for s in (subdivisions, subdivisions + 1, subdivisions + 2):
        try:
            res = []
            for ss in (s, s + 1):
                mesh = sphere_mesh(k, ss)
                vals = _mesh_values(F, mesh)
                res.append(subcomplex_betti(mesh, level_fn(mesh.vertices, vals) <= 0.0))
            if res[0] != res[1]:
                raise ResolutionTooCoarse("unstable")
            b = res[1]
            return SublevelType.Empty() if b.empty else SublevelType.Explicit(b)
        except ResolutionTooCoarse:
            continue
    return None


_MESH_CACHE: dict = {}


def _mesh_values(F: GenFun, mesh) -> np.ndarray:
    key = (id(F), mesh.k, mesh.subdivisions)
    if key not in _MESH_CACHE:
        _MESH_CACHE[key] = (F, F.value(mesh.vertices))
    return _MESH_CACHE[key][1]


def _normalize_type(X: SublevelType) -> SublevelType:
    if X.kind != "explicit":
        return X
    b = X.explicit
    if b.empty:
        return SublevelType.Empty()
    nz = [j for j, v in enumerate(b.values) if v]
    if len(nz) == 1 and b[nz[0]] == 1:
        return SublevelType.Sphere(nz[0])
    return X


def numeric_betti(n: int, F: GenFun, t: float, subdivisions: int = 3) -> Optional[BettiVector]:
    """Betti vector of ``{A_t # F <= 0}`` for a simple F by eliminating the quadratic block.

    With ``G = y^T P y + 2 y^T R zeta + zeta^T T zeta + F(zeta)`` the sublevel is
    ``{P <= 0} * {F + zeta^T K zeta <= 0}`` where ``K = T - R^T P^{-1} R``.
    """
    if F.fiber_dim != 0:
        return None
    m = 2 * n
    M0 = compose(reeb_family(n, t), QuadForm(np.zeros((m, m)), m)).matrix
    zi = np.arange(2 * m, 3 * m)
    yi = np.setdiff1d(np.arange(M0.shape[0]), zi)
    P = M0[np.ix_(yi, yi)]
    R = M0[np.ix_(yi, zi)]
    T = M0[np.ix_(zi, zi)]
    ev = np.linalg.eigvalsh(P)
    if np.min(np.abs(ev)) < 1e-6 * np.max(np.abs(ev)):
        return None
    K = T - R.T @ np.linalg.solve(P, R)
    if isinstance(F, QuadForm):
        g_type = quad_sublevel_type(F.matrix + K)
    else:
        g_type = _fiber_type_numeric(F, n, lambda V, fv: fv + np.einsum("bi,ij,bj->b", V, K, V), subdivisions)
        if g_type is None:
            return None
    return join_types(quad_sublevel_type(P), _normalize_type(g_type)).betti()


def sub_type_numeric(F: GenFun, n: int, subdivisions: int = 3) -> Optional[SublevelType]:
    """Type of ``{F # 0 <= 0}`` for a simple F: ``S^{2n-1} * {F <= 0}``."""
    if isinstance(F, QuadForm):
        return sub_type_quadratic(F)
    if F.fiber_dim != 0:
        return None
    f_type = _fiber_type_numeric(F, n, lambda V, fv: fv, subdivisions)
    if f_type is None:
        return None
    return _normalize_type(join_types(SublevelType.Sphere(2 * n - 1), _normalize_type(f_type)))


def validate_generator(phi: Contactomorphism, F: GenFun, samples: int = 8, seed: int = 0, tol: float = 1e-6) -> float:
    """Max deviation between the map generated by F and the lift of phi on samples."""
    zeta = random_sphere(np.random.default_rng(seed), samples, 2 * phi.n)
    X = solve_fiber_critical(F, zeta)
    z, Z = generated_map_point(F, X)
    err = float(np.max(np.linalg.norm(Z - phi.lift(z)[0], axis=1)))
    if err > tol:
        raise ValueError(f"F does not generate phi (deviation {err:.2e})")
    return err


def numeric_sweep(
    phi: Contactomorphism,
    F: GenFun,
    grid_size: int = 40,
    starts: Optional[int] = None,
    band_tol: Optional[float] = None,
    seed: int = 0,
    newton_tol: float = 1e-9,
    max_newton: int = 40,
    betti: bool = True,
    subdivisions: int = 3,
    tol_rank: float = 1e-6,
    raise_on_incomplete: bool = True,
    max_candidates: int = 64,
) -> SweepLedger:
    """Multi-start Newton sweep for critical points of ``G_t`` with value 0."""
    n = phi.n
    validate_generator(phi, F)
    fam = _Family(n, F)
    N = 14 * n + F.fiber_dim
    starts = 64 * N if starts is None else starts
    grid = np.linspace(0.0, 1.0, grid_size)
    h = grid[1] - grid[0]
    band = 5.0 * h if band_tol is None else band_tol
    X0 = _sobol_sphere(starts, N, seed)
    complete = True
    notes = []
    cand_x, cand_t = [], []
    for t in grid:
        G = fam.at(float(t))
        X, mu, ok = _lagrange_newton(G, X0, newton_tol, max_newton)
        if np.mean(ok) < 0.5:
            complete = False
            notes.append(f"only {int(np.sum(ok))}/{len(ok)} Newton starts converged at t={t:.4f}")
        sel = np.nonzero(ok & (np.abs(mu) <= band))[0]
        if len(sel):
            sel = sel[np.argsort(np.abs(mu[sel]), kind="stable")[:max_candidates]]
            cand_x.append(X[sel])
            cand_t.append(np.full(len(sel), t))
    crossings = []
    if cand_x:
        Xc = np.concatenate(cand_x)
        Tc = np.concatenate(cand_t)
        Xc, Tc = _dedupe(Xc, Tc)
        Xr, Tr, ok = _refine_crossings(fam, Xc, Tc, newton_tol, 30)
        keep = ok & (Tr >= 0.0) & (Tr < 1.0 - 1e-9)
        Xr, Tr = Xr[keep], Tr[keep]
        Tr = np.where(Tr < 1e-12, 0.0, Tr)
        crossings = _cluster(fam, Xr, Tr, tol_rank)
    idx, null, bettis = [], [], []
    for t in grid:
        near = any(abs(t - c.t) < 0.5 * h for c in crossings)
        b = None if (near or not betti) else numeric_betti(n, F, float(t), subdivisions)
        bettis.append(b)
        idx.append(None if b is None else _sphere_index(b))
        null.append(None)
    times = [c.t for c in crossings]
    for c in crossings:
        # only grid points with no other crossing in between are attributed
        prev_t = max([s for s in times if s < c.t - T_CLUSTER], default=-np.inf)
        next_t = min([s for s in times if s > c.t + T_CLUSTER], default=np.inf)
        before = [b for t, b in zip(grid, bettis) if prev_t < t < c.t and b is not None]
        after = [b for t, b in zip(grid, bettis) if c.t < t < next_t and b is not None]
        c.betti_before = before[-1] if before else None
        c.betti_after = after[0] if after else None
        if c.betti_before is None or c.betti_after is None:
            notes.append(f"crossing at t={c.t:.9g} shares a grid cell; refine the grid to resolve its Betti change")
    sub = sub_type_numeric(F, n, subdivisions) if betti else None
    ledger = SweepLedger(n, grid, crossings, idx, null, bettis, complete, sub, "numeric", notes)
    if not complete and raise_on_incomplete:
        raise NewtonBudgetExhausted("; ".join(notes), partial=ledger)
    return ledger


def _sphere_index(b: BettiVector) -> Optional[int]:
    """Index read off a sphere-type sublevel ``S^{ind-1}``; None otherwise."""
    if b.empty:
        return 0
    if sum(b.values) != 1:
        return None
    return len(b.values)


def _dedupe(X: np.ndarray, T: np.ndarray):
    """Drop candidates that repeat another (same t, same point up to 1e-6)."""
    keys = {}
    for i in range(len(X)):
        key = (round(float(T[i]), 9),) + tuple(np.round(X[i], 6))
        keys.setdefault(key, i)
    sel = np.array(sorted(keys.values()))
    return X[sel], T[sel]


def _cluster(fam: _Family, X: np.ndarray, T: np.ndarray, tol_rank: float) -> list:
    order = np.argsort(T, kind="stable")
    X, T = X[order], T[order]
    groups: list = []
    for i in range(len(T)):
        if groups and T[i] - T[groups[-1][-1]] <= T_CLUSTER:
            groups[-1].append(i)
        else:
            groups.append([i])
    out = []
    for g in groups:
        t_star = float(np.mean(T[g]))
        G = fam.at(t_star)
        families: list = []  # (kernel basis, representative index)
        for i in g:
            x = X[i] / np.linalg.norm(X[i])
            placed = False
            for K, _ in families:
                if np.linalg.norm(x - K @ (K.T @ x)) < WITNESS_CLUSTER:
                    placed = True
                    break
            if placed:
                continue
            _, grad, H = G.evaluate(x[None, :], 2)
            w, V = np.linalg.eigh(H[0])
            scale = max(1.0, float(np.max(np.abs(w))))
            ker = np.abs(w) <= tol_rank * scale
            K = V[:, ker] if np.any(ker) else x[:, None]
            families.append((K, i))
            P = np.eye(len(x)) - np.outer(x, x)
            wt = np.linalg.eigvalsh(P @ H[0] @ P)
            attach = int(np.sum(wt < -tol_rank * scale))
            out.append(
                Crossing(t_star, attach, int(max(1, np.sum(ker))), x, float(np.linalg.norm(grad[0])))
            )
    return out


# ---------------------------------------------------------------- ledger discipline


def check_betti_discipline(ledger: SweepLedger) -> list:
    """Violations of constant-between-crossings and one-entry-per-simple-crossing."""
    problems = []
    times = [c.t for c in ledger.crossings]
    bounds = [-np.inf] + times + [np.inf]
    for a, b in zip(bounds[:-1], bounds[1:]):
        seen = {
            tuple(v.values) + (v.empty,)
            for t, v in zip(ledger.grid, ledger.grid_betti)
            if v is not None and a < t < b
        }
        if len(seen) > 1:
            problems.append(f"Betti vector not constant on ({a:.6g}, {b:.6g}): {sorted(seen)}")
    for c in ledger.crossings:
        if c.multiplicity != 1 or c.betti_before is None or c.betti_after is None:
            continue
        top = max(len(c.betti_before.values), len(c.betti_after.values))
        diffs = [c.betti_after[j] - c.betti_before[j] for j in range(top)]
        nz = [d for d in diffs if d]
        if len(nz) != 1 or abs(nz[0]) != 1:
            problems.append(f"crossing at t={c.t:.9g} changes Betti by {diffs}")
    return problems
