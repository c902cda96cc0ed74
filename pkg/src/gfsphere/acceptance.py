"""Acceptance suite: fifteen numbered checks with pass/fail and timing.

Each check returns a :class:`CheckResult`.  Checks are grouped by module so
that ``verify --only homology`` runs a subset.  Sweeps computed for checks
11 and 13 are cached and reused by check 14.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm
from scipy.stats import ortho_group, unitary_group

from . import hamlang
from .contact_core import (
    Contactomorphism,
    HamSpec,
    J_matrix,
    from_complex,
    random_sphere,
    real_matrix,
    to_complex,
    unitary_from_angles,
)
from .errors import DomainError, GfSphereError, ViolationFound
from .genfun import (
    action_genfun,
    compose,
    dt_negativity_check,
    generated_map_point,
    reeb_family,
    sample_sigma,
)
from .homology import (
    SublevelType,
    brute_force_betti,
    composed_sublevel_betti,
    direct_sum_join_check,
    index_nullity,
    quad_sublevel_type,
)
from .symplectization import cayley_genfun
from .sweep import (
    check_betti_discipline,
    numeric_sweep,
    quadratic_sweep,
    translated_points_from_ledger,
)

ANGLES = (0.5, 1.2)


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.id:2d} {self.name:<28s} {self.seconds:7.2f}s  {self.detail}"


_CACHE: dict = {}


def _phi_diag():
    return Contactomorphism.unitary(unitary_from_angles(ANGLES))


def _quadratic_ledger():
    if "quad" not in _CACHE:
        _CACHE["quad"] = quadratic_sweep(_phi_diag(), grid_size=2000)
    return _CACHE["quad"]


def _numeric_ledger():
    if "num" not in _CACHE:
        a = np.array(ANGLES)
        H = HamSpec.quadratic(np.diag(np.concatenate([a, a])))
        phi = Contactomorphism.flow(H, 1.0)
        F = action_genfun(H)
        _CACHE["num"] = numeric_sweep(phi, F, grid_size=40, starts=128, seed=0)
    return _CACHE["num"]


def clear_cache() -> None:
    _CACHE.clear()


def _rotate(z: np.ndarray, theta: float) -> np.ndarray:
    return from_complex(np.exp(1j * theta) * to_complex(z))


# ---------------------------------------------------------------- generating functions


def check_reeb_indices():
    got = {n: (index_nullity(reeb_family(n, 0.0))[0], index_nullity(reeb_family(n, 1.0))[0]) for n in range(1, 5)}
    bad = {n: v for n, v in got.items() if v != (5 * n, 7 * n)}
    detail = "all match 5n/7n" if not bad else "computed (ind A_0, ind A_1): " + ", ".join(
        f"n={n}: {v} vs {(5 * n, 7 * n)}" for n, v in bad.items()
    )
    return not bad, detail


def check_index_jump():
    jumps = {n: index_nullity(reeb_family(n, 1.0))[0] - index_nullity(reeb_family(n, 0.0))[0] for n in range(1, 5)}
    bad = {n: j for n, j in jumps.items() if j != 2 * n}
    return not bad, "jumps " + ", ".join(f"n={n}:{j}" for n, j in jumps.items())


def check_cayley():
    rng = np.random.default_rng(3)
    worst_s = worst_map = 0.0
    for n in (1, 2):
        for t in np.arange(1, 10) * 0.05:
            U = np.exp(-2j * np.pi * t) * np.eye(n)
            Q = cayley_genfun(real_matrix(U))
            worst_s = max(worst_s, float(np.max(np.abs(Q.matrix + np.tan(np.pi * t) * np.eye(2 * n)))))
            # the form must also generate e^{-2 pi i t} through tau
            X = random_sphere(rng, 20, 2 * n)
            z, Z = generated_map_point(Q, X)
            worst_map = max(worst_map, float(np.max(np.abs(Z - _rotate(z, -2 * np.pi * t)))))
    ok = worst_s <= 1e-12 and worst_map <= 1e-9
    return ok, f"max entry error {worst_s:.1e}, generated-map error {worst_map:.1e}"


def check_generated_map():
    rng = np.random.default_rng(4)
    worst = 0.0
    for n in (1, 2):
        for t in (0.1, 0.3, 0.7, 0.9):
            A = reeb_family(n, t)
            X = sample_sigma(A, 50, rng)
            z, Z = generated_map_point(A, X)
            scale = np.maximum(1.0, np.linalg.norm(z, axis=1))
            err = np.linalg.norm(Z - _rotate(z, -2 * np.pi * t), axis=1) / scale
            worst = max(worst, float(np.max(err)))
    return worst <= 1e-9, f"max error {worst:.1e}"


def _random_unitary(n: int, seed: int) -> np.ndarray:
    if n == 1:
        return np.exp(1j * np.random.default_rng(seed).uniform(-np.pi, np.pi)) * np.eye(1)
    return unitary_group.rvs(n, random_state=seed)


def check_composition_order():
    worst = 0.0
    wrong = np.inf
    for k in range(20):
        n = 1 + k % 2
        U1, U2 = (real_matrix(_random_unitary(n, 100 + 2 * k + j)) for j in (0, 1))
        G = compose(cayley_genfun(U1), cayley_genfun(U2))
        X = sample_sigma(G, 50, np.random.default_rng(k))
        z, Z = generated_map_point(G, X)
        scale = np.maximum(1.0, np.linalg.norm(z, axis=1))
        worst = max(worst, float(np.max(np.linalg.norm(Z - z @ (U2 @ U1).T, axis=1) / scale)))
        if n > 1:  # unitaries of C^1 commute
            wrong = min(wrong, float(np.max(np.linalg.norm(Z - z @ (U1 @ U2).T, axis=1) / scale)))
    return worst <= 1e-9, f"error vs Phi2 Phi1 {worst:.1e} (vs Phi1 Phi2 at least {wrong:.1e})"


def check_dt_negativity():
    worst = -np.inf
    for n in (1, 2):
        for t in (0.25, 0.5, 0.75):
            try:
                rep = dt_negativity_check(n, t, samples=500, seed=7, margin=1e-12)
            except ViolationFound as exc:
                return False, f"violation at n={n}, t={t}: {exc.value:.3e}"
            worst = max(worst, rep.max_ratio)
    return True, f"max dA/dt / |x|^2 = {worst:.3e}"


def check_action_vs_cayley():
    rng = np.random.default_rng(12)
    worst = 0.0
    for n in (1, 2):
        for _ in range(2):
            B = rng.standard_normal((2 * n, 2 * n))
            S = 0.5 * (B + B.T)
            S *= 0.1 / np.max(np.abs(np.linalg.eigvalsh(S)))
            H = HamSpec.quadratic(S)
            F = action_genfun(H)
            C = cayley_genfun(expm(J_matrix(n) @ S))
            X = random_sphere(rng, 40, 2 * n)
            worst = max(worst, float(np.max(np.abs(F.value(X) - C.value(X)))))
    return worst <= 1e-6, f"max |F_action - F_cayley| on S = {worst:.1e}"


# ---------------------------------------------------------------- homology


def _random_form(rng, k):
    ev = rng.uniform(0.3, 2.0, k) * rng.choice([-1.0, 1.0], k)
    Q = ortho_group.rvs(k, random_state=rng) if k > 1 else np.eye(1)
    return Q @ np.diag(ev) @ Q.T


def check_sublevel_oracle():
    rng = np.random.default_rng(7)
    cases = [(f"random S^{k - 1} #{i}", _random_form(rng, k)) for k in (3, 4) for i in range(30)]
    cases += [("diag(-1,0,1)", np.diag([-1.0, 0.0, 1.0])), ("diag(-1,-1,1)", np.diag([-1.0, -1.0, 1.0]))]
    bad = []
    for name, S in cases:
        try:
            got = brute_force_betti(S, level=-1e-6)
        except GfSphereError as exc:
            bad.append(f"{name}: {type(exc).__name__}")
            continue
        want = quad_sublevel_type(S).betti()
        if got != want:
            bad.append(f"{name}: oracle {got.to_list()}{' empty' if got.empty else ''} vs {want.to_list()}")
    return not bad, f"{len(cases) - len(bad)}/{len(cases)} agree" + ("; " + "; ".join(bad) if bad else "")


def check_join_law():
    rng = np.random.default_rng(8)
    dims = [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1), (2, 3), (3, 2), (1, 4), (4, 1)]
    bad = 0
    for i in range(20):
        a, b = dims[i % len(dims)]
        S1 = _random_form(rng, a)
        S2 = np.diag(rng.uniform(0.3, 2.0, b)) if i == 0 else _random_form(rng, b)
        if not direct_sum_join_check(S1, S2):
            bad += 1
    return bad == 0, f"{20 - bad}/20 pairs agree (pair 0 has a positive-definite factor)"


def check_kunneth_shift():
    bad = []
    for n in (1, 2):
        for t in (0, 1):
            ind = index_nullity(reeb_family(n, float(t)))[0]
            got = composed_sublevel_betti(n, t, SublevelType.Empty())
            want = SublevelType.Sphere(ind).betti()
            if got != want:
                bad.append(f"Empty n={n} t={t}: degree {len(got.values) - 1} vs {ind}")
            for d in (0, 1, 2):
                got = composed_sublevel_betti(n, t, SublevelType.Sphere(d))
                if got != SublevelType.Sphere(d).betti().shift(ind):
                    bad.append(f"Sphere({d}) n={n} t={t}")
    return not bad, "exact" if not bad else "; ".join(bad)


def check_two_betti():
    out = []
    ok = True
    for X in (SublevelType.Empty(), SublevelType.Sphere(0), SublevelType.Sphere(2)):
        for n in (1, 2):
            d = composed_sublevel_betti(n, 1, X).differing_entries(composed_sublevel_betti(n, 0, X))
            ok &= d >= 2
            out.append(f"{X} n={n}: {d}")
    return ok, ", ".join(out)


# ---------------------------------------------------------------- sweeps


def check_quadratic_sweep():
    t0 = time.perf_counter()
    L = _quadratic_ledger()
    elapsed = time.perf_counter() - t0
    want = np.array(ANGLES) / (2 * np.pi)
    times = np.array([c.t for c in L.crossings])
    mults = [c.multiplicity for c in L.crossings]
    ok = len(times) == 2 and np.max(np.abs(np.sort(times) - want)) <= 1e-8 and mults == [2, 2]
    ok &= L.total_multiplicity == 4
    reports = translated_points_from_ledger(_phi_diag(), L)
    res = max(max(r.residuals) for r in reports) if reports else np.inf
    ok &= res < 1e-8 and elapsed < 30
    return bool(ok), f"times {times.tolist()}, multiplicities {mults}, residual {res:.1e}, sweep {elapsed:.2f}s"


def check_numeric_sweep():
    Lq = _quadratic_ledger()
    Ln = _numeric_ledger()
    tq = np.array([c.t for c in Lq.crossings])
    tn = np.array([c.t for c in Ln.crossings])
    if len(tq) != len(tn):
        return False, f"crossing counts differ: numeric {tn.tolist()} vs quadratic {tq.tolist()}"
    err = float(np.max(np.abs(np.sort(tn) - np.sort(tq))))
    return err <= 1e-6, f"numeric times {tn.tolist()}, max deviation {err:.1e}"


def check_ledger_discipline():
    problems = []
    for name, L in (("quadratic", _quadratic_ledger()), ("numeric", _numeric_ledger())):
        problems += [f"{name}: {p}" for p in check_betti_discipline(L)]
    simple = sum(c.multiplicity == 1 for L in (_quadratic_ledger(), _numeric_ledger()) for c in L.crossings)
    return not problems, ("; ".join(problems) if problems else f"no violations ({simple} multiplicity-1 crossings)")


# ---------------------------------------------------------------- hamlang


def _richardson(f, y: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(y)
    for i in range(len(y)):
        e = np.zeros_like(y)
        e[i] = 1.0

        def D(s):
            return (f(y + s * e) - f(y - s * e)) / (2 * s)

        out[i] = (4 * D(h / 2) - D(h)) / 3
    return out


def check_hamlang_gradients(count: int = 1000, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst, fails, rejected, accepted = 0.0, 0, 0, 0
    with warnings.catch_warnings(), np.errstate(all="ignore"):
        warnings.simplefilter("ignore")
        while accepted < count:
            n = int(rng.integers(1, 4))
            ast = hamlang.random_ast(rng, n, 6)
            x = rng.uniform(-1, 1, 2 * n)
            t = float(rng.uniform(0, 1))
            try:
                v, g, dt = hamlang.eval_with_gradient(ast, x, t)
                full = np.append(g, dt)
                if not (np.isfinite(v) and np.all(np.isfinite(full))) or abs(v) > 1e3 or np.max(np.abs(full)) > 1e3:
                    raise DomainError("outside the admissible range")
                y = np.append(x, t)

                def f(p, ast=ast):
                    return hamlang.evaluate(ast, p[:-1], p[-1])

                coarse, fine = _richardson(f, y, 2e-3), _richardson(f, y, 1e-3)
            except DomainError:
                rejected += 1
                continue
            scale = max(1.0, float(np.max(np.abs(full))))
            if not np.all(np.isfinite(fine)) or np.max(np.abs(coarse - fine)) / scale > 1e-8:
                rejected += 1
                continue
            accepted += 1
            rel = float(np.max(np.abs(full - fine))) / scale
            worst = max(worst, rel)
            fails += rel >= 1e-6
    return fails == 0, f"{accepted} trees ({rejected} redrawn), worst relative error {worst:.1e}, {fails} failures"


# ---------------------------------------------------------------- registry


CHECKS: list = [
    (1, "reeb-family indices", "genfun", check_reeb_indices),
    (2, "index jump", "genfun", check_index_jump),
    (3, "cayley cross-check", "genfun", check_cayley),
    (4, "generated-map fidelity", "genfun", check_generated_map),
    (5, "composition order", "genfun", check_composition_order),
    (6, "dt negativity", "genfun", check_dt_negativity),
    (7, "sublevel oracle", "homology", check_sublevel_oracle),
    (8, "join law", "homology", check_join_law),
    (9, "kunneth shift", "homology", check_kunneth_shift),
    (10, "two-betti difference", "homology", check_two_betti),
    (11, "quadratic sweep", "sweep", check_quadratic_sweep),
    (12, "action vs cayley", "genfun", check_action_vs_cayley),
    (13, "numeric sweep", "sweep", check_numeric_sweep),
    (14, "betti discipline", "sweep", check_ledger_discipline),
    (15, "hamlang gradients", "hamlang", check_hamlang_gradients),
]

GROUPS = sorted({g for _, _, g, _ in CHECKS})


def run_check(cid: int) -> CheckResult:
    for i, name, _, fn in CHECKS:
        if i == cid:
            t0 = time.perf_counter()
            try:
                passed, detail = fn()
            except Exception as exc:  # a crash is a failure with its reason
                passed, detail = False, f"{type(exc).__name__}: {exc}"
            return CheckResult(i, name, bool(passed), detail, time.perf_counter() - t0)
    raise KeyError(f"no criterion {cid}")


def run_suite(only: Optional[str] = None, ids=None, echo: Optional[Callable] = None) -> list:
    """Run the selected checks in order; ``only`` is a group name."""
    if only is not None and only not in GROUPS:
        raise ValueError(f"unknown group {only!r}; choose from {', '.join(GROUPS)}")
    out = []
    for i, _, group, _ in CHECKS:
        if only is not None and group != only:
            continue
        if ids is not None and i not in ids:
            continue
        r = run_check(i)
        if echo is not None:
            echo(r.line())
        out.append(r)
    return out
