"""Betti numbers of sublevel sets on spheres.

Exact paths use index/nullity of quadratic forms and join arithmetic.  The
brute-force oracle triangulates S^{k-1} as the boundary of the
cross-polytope with an edgewise (Freudenthal) subdivision of every facet,
takes the full subcomplex on vertices where ``f <= level`` and computes
reduced Betti numbers by sparse elimination over GF(p) for a large prime p.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np

from .errors import ResolutionTooCoarse
from .genfun import QuadForm, reeb_family

PRIME = 2_147_483_647  # 2^31 - 1
TOL_EIG = 1e-9


# ---------------------------------------------------------------- value types


@dataclass(frozen=True)
class BettiVector:
    """Reduced Betti numbers; ``empty`` marks the empty set."""

    values: tuple = ()
    empty: bool = False

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if any(v < 0 for v in vals):
            raise ValueError("Betti numbers are nonnegative")
        while vals and vals[-1] == 0:
            vals = vals[:-1]
        object.__setattr__(self, "values", vals)

    def __getitem__(self, j: int) -> int:
        return self.values[j] if 0 <= j < len(self.values) else 0

    def shift(self, s: int) -> "BettiVector":
        return BettiVector((0,) * s + self.values)

    def differing_entries(self, other: "BettiVector") -> int:
        top = max(len(self.values), len(other.values))
        return sum(self[j] != other[j] for j in range(top))

    def to_list(self) -> list:
        return list(self.values)


@dataclass(frozen=True)
class SublevelType:
    kind: str  # "empty" | "sphere" | "explicit"
    dim: int = -1
    explicit: Optional[BettiVector] = None

    @classmethod
    def Empty(cls) -> "SublevelType":
        return cls("empty")

    @classmethod
    def Sphere(cls, d: int) -> "SublevelType":
        if d < 0:
            raise ValueError("sphere dimension must be nonnegative")
        return cls("sphere", d)

    @classmethod
    def Explicit(cls, b: BettiVector) -> "SublevelType":
        return cls("explicit", explicit=b)

    @property
    def is_empty(self) -> bool:
        return self.kind == "empty" or (self.kind == "explicit" and self.explicit.empty)

    def betti(self) -> BettiVector:
        if self.kind == "empty":
            return BettiVector((), empty=True)
        if self.kind == "sphere":
            return BettiVector((0,) * self.dim + (1,))
        return self.explicit

    def __str__(self) -> str:
        if self.kind == "empty":
            return "Empty"
        if self.kind == "sphere":
            return f"Sphere({self.dim})"
        return f"Explicit({list(self.explicit.values)})"


# ---------------------------------------------------------------- quadratic paths


def _matrix(Q) -> np.ndarray:
    return Q.matrix if isinstance(Q, QuadForm) else np.asarray(Q, dtype=float)


def index_nullity(Q, tol_eig: float = TOL_EIG) -> tuple[int, int]:
    """Counts of negative and (relatively) zero eigenvalues."""
    S = _matrix(Q)
    if S.size == 0:
        return 0, 0
    ev = np.linalg.eigvalsh(0.5 * (S + S.T))
    thr = tol_eig * max(float(np.max(np.abs(ev))), 1e-300)
    null = int(np.sum(np.abs(ev) <= thr))
    return int(np.sum(ev < -thr)), null


def quad_sublevel_type(Q, level: float = 0.0) -> SublevelType:
    """Homotopy type of ``{x in S^{m-1} : x^T S x <= level}``.

    On the unit sphere this is the zero sublevel of ``S - level I``, which
    retracts onto the unit sphere of its nonpositive eigenspace.
    """
    S = _matrix(Q)
    ind, null = index_nullity(S - level * np.eye(S.shape[0]))
    if ind + null == 0:
        return SublevelType.Empty()
    return SublevelType.Sphere(ind + null - 1)


def join_types(X: SublevelType, Y: SublevelType) -> SublevelType:
    """Join at Betti level (Kunneth over a field): ``H~_{k+1}(X*Y) = sum H~_i X (x) H~_j Y``."""
    if X.is_empty:
        return Y
    if Y.is_empty:
        return X
    if X.kind == "sphere" and Y.kind == "sphere":
        return SublevelType.Sphere(X.dim + Y.dim + 1)
    a, b = X.betti().values, Y.betti().values
    out = [0] * (len(a) + len(b) + 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j + 1] += x * y
    return SublevelType.Explicit(BettiVector(tuple(out)))


def join_betti(d: int, X: SublevelType) -> BettiVector:
    """Betti vector of ``S^d * X``; ``S^d * Empty = S^d``."""
    if X.is_empty:
        return SublevelType.Sphere(d).betti()
    return X.betti().shift(d + 1)


def composed_sublevel_betti(n: int, t: int, F_sub: SublevelType) -> BettiVector:
    """Betti vector of ``{A_t # F <= 0}`` for t in {0, 1}.

    The sublevel is the join of ``S^{ind(A_t)-1}`` (the fiber-only part of
    ``A_t``) with ``F_sub``, the type of ``{F # 0 <= 0}``.
    """
    if t not in (0, 1):
        raise ValueError("t must be 0 or 1")
    ind, _ = index_nullity(reeb_family(n, float(t)))
    return join_betti(ind - 1, F_sub)


# ---------------------------------------------------------------- sphere meshes


@dataclass(frozen=True, eq=False)
class SphereMesh:
    k: int
    subdivisions: int
    vertices: np.ndarray  # (V, k) unit vectors
    simplices: tuple  # simplices[j]: (N_j, j+1) sorted vertex ids


def _kuhn_simplices(d: int, s: int) -> np.ndarray:
    """Freudenthal subdivision of ``{s >= y_1 >= ... >= y_d >= 0}`` (lattice coords)."""
    out = []
    for base in itertools.product(range(s), repeat=d):
        b = np.array(base)
        for perm in itertools.permutations(range(d)):
            verts = [b.copy()]
            cur = b.copy()
            for p in perm:
                cur = cur.copy()
                cur[p] += 1
                verts.append(cur)
            V = np.array(verts)
            if np.all(V[:, 0] <= s) and np.all(V >= 0) and np.all(np.diff(V, axis=1) <= 0):
                out.append(V)
    return np.array(out)  # (count, d+1, d)


@lru_cache(maxsize=16)
def sphere_mesh(k: int, subdivisions: int) -> SphereMesh:
    """Triangulation of S^{k-1} (k >= 1)."""
    s = int(subdivisions)
    if k < 1 or s < 1:
        raise ValueError("need k >= 1 and subdivisions >= 1")
    d = k - 1
    if d == 0:
        verts = np.array([[1.0], [-1.0]])
        return SphereMesh(k, s, verts, (np.array([[0], [1]]),))
    local = _kuhn_simplices(d, s)  # (L, d+1, d)
    ypad = np.concatenate([np.full(local.shape[:2] + (1,), s), local, np.zeros(local.shape[:2] + (1,), int)], axis=2)
    bary = ypad[:, :, :-1] - ypad[:, :, 1:]  # (L, d+1, k): a_0..a_d
    keys: dict = {}
    coords = []
    tops = []
    for signs in itertools.product((1, -1), repeat=k):
        pts = bary * np.array(signs)  # integer points with sum |v| = s
        flat = pts.reshape(-1, k)
        ids = np.empty(len(flat), dtype=np.int64)
        for i, v in enumerate(map(tuple, flat)):
            j = keys.get(v)
            if j is None:
                j = keys[v] = len(coords)
                coords.append(v)
            ids[i] = j
        tops.append(ids.reshape(len(local), d + 1))
    V = np.array(coords, dtype=float)
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    top = np.sort(np.concatenate(tops), axis=1)
    simplices = []
    for j in range(d + 1):
        faces = np.concatenate([top[:, list(c)] for c in itertools.combinations(range(d + 1), j + 1)])
        simplices.append(np.unique(faces, axis=0))
    return SphereMesh(k, s, V, tuple(simplices))


def _encode(rows: np.ndarray, base: int) -> np.ndarray:
    key = np.zeros(len(rows), dtype=np.int64)
    for c in range(rows.shape[1]):
        key = key * base + rows[:, c]
    return key


def _rank_mod_p(columns: list, skip: set) -> tuple[int, set]:
    """Rank of a sparse matrix over GF(p) by column reduction.

    ``columns`` holds ``{row: coeff}`` dicts; columns listed in ``skip`` are
    known to reduce to zero.  Returns the rank and the set of pivot rows.
    """
    pivots: dict = {}
    for ci, col in enumerate(columns):
        if ci in skip:
            continue
        c = dict(col)
        while c:
            low = max(c)
            piv = pivots.get(low)
            if piv is None:
                inv = pow(c[low], PRIME - 2, PRIME)
                pivots[low] = {r: (v * inv) % PRIME for r, v in c.items()}
                break
            f = c[low]
            for r, v in piv.items():
                nv = (c.get(r, 0) - f * v) % PRIME
                if nv:
                    c[r] = nv
                else:
                    c.pop(r, None)
    return len(pivots), set(pivots)


def subcomplex_betti(mesh: SphereMesh, keep: np.ndarray) -> BettiVector:
    """Reduced Betti numbers of the full subcomplex on vertices in ``keep``."""
    keep = np.asarray(keep, dtype=bool)
    if not np.any(keep):
        return BettiVector((), empty=True)
    V = len(mesh.vertices)
    sub = [S[np.all(keep[S], axis=1)] for S in mesh.simplices]
    top = len(sub) - 1
    while top > 0 and len(sub[top]) == 0:
        top -= 1
    counts = [len(S) for S in sub[: top + 1]]
    ranks = [0] * (top + 2)  # ranks[j] = rank of boundary C_j -> C_{j-1}; ranks[0] = augmentation
    ranks[0] = 1
    cleared: set = set()
    for j in range(top, 0, -1):
        faces_sorted_keys = _encode(sub[j - 1], V)
        order = np.argsort(faces_sorted_keys)
        keys_sorted = faces_sorted_keys[order]
        cols = []
        face_idx = []
        for i in range(j + 1):
            drop = np.delete(sub[j], i, axis=1)
            pos = order[np.searchsorted(keys_sorted, _encode(drop, V))]
            face_idx.append(pos)
        face_idx = np.stack(face_idx, axis=1)
        for r, rowfaces in enumerate(face_idx):
            cols.append({int(fi): (1 if i % 2 == 0 else PRIME - 1) for i, fi in enumerate(rowfaces)})
        rank, piv_rows = _rank_mod_p(cols, cleared)
        ranks[j] = rank
        cleared = piv_rows  # those (j-1)-simplices have zero-reducing boundary columns
    betti = [counts[j] - ranks[j] - ranks[j + 1] for j in range(top + 1)]
    return BettiVector(tuple(betti))


def brute_force_betti(
    f: Union[Callable, QuadForm, np.ndarray],
    k: Optional[int] = None,
    level: float = 0.0,
    subdivisions: int = 3,
    check_stability: bool = True,
) -> BettiVector:
    """Oracle Betti vector of ``{x in S^{k-1} : f(x) <= level}``.

    ``f`` is vectorised over rows of a (V, k) array; a QuadForm or matrix
    is evaluated as ``x^T S x``.  With ``check_stability`` the result must
    agree with the next finer subdivision, else ResolutionTooCoarse.
    """
    if not callable(f) or isinstance(f, QuadForm):
        S = _matrix(f)
        k = S.shape[0]

        def f(X, S=S):
            return np.einsum("bi,ij,bj->b", X, S, X)

    if k is None:
        raise ValueError("k is required for function inputs")
    if k > 5:
        raise ValueError("the brute-force oracle is limited to k <= 5")
    levels = [subdivisions, subdivisions + 1] if check_stability else [subdivisions]
    results = []
    for s in levels:
        mesh = sphere_mesh(k, s)
        results.append(subcomplex_betti(mesh, np.asarray(f(mesh.vertices)) <= level))
    if check_stability and results[0] != results[1]:
        raise ResolutionTooCoarse(
            f"Betti vectors differ between subdivisions {levels}: {results[0]} vs {results[1]}"
        )
    return results[-1]


def direct_sum_join_check(Q1, Q2, level: float = -1e-6, subdivisions: int = 3) -> bool:
    """Oracle check of ``{Q1 (+) Q2 <= c} ~ {Q1 <= c} * {Q2 <= c}`` on unit spheres."""
    S1, S2 = _matrix(Q1), _matrix(Q2)
    a, b = S1.shape[0], S2.shape[0]
    S = np.zeros((a + b, a + b))
    S[:a, :a] = S1
    S[a:, a:] = S2
    lhs = brute_force_betti(S, level=level, subdivisions=subdivisions)
    rhs = join_types(quad_sublevel_type(S1, level), quad_sublevel_type(S2, level)).betti()
    return lhs == rhs


def write_off(path, mesh: SphereMesh, keep: Optional[np.ndarray] = None) -> None:
    """Dump the (sub)complex of a 2-sphere mesh as an OFF surface."""
    if mesh.k != 3:
        raise ValueError("OFF output is available for S^2 meshes only")
    tris = mesh.simplices[2]
    if keep is not None:
        tris = tris[np.all(np.asarray(keep, dtype=bool)[tris], axis=1)]
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(mesh.vertices)} {len(tris)} 0\n")
        for v in mesh.vertices:
            fh.write(" ".join(f"{c:.17g}" for c in v) + "\n")
        for t in tris:
            fh.write("3 " + " ".join(str(int(i)) for i in t) + "\n")
