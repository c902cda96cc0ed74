"""Command-line front end: ``gfsphere <command> [options]``.

Exit codes: 0 success, 1 failing acceptance criteria, 2 invalid input or a
failed validation, 3 sweep grid too coarse.
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import nullcontext
from typing import Optional

import numpy as np

from . import acceptance
from .contact_core import (
    Contactomorphism,
    HamSpec,
    contact_flow,
    load_json,
    random_sphere,
    rp_lift_check,
    unitary_from_angles,
)
from .errors import GfSphereError, GridTooCoarse, NewtonBudgetExhausted
from .genfun import QuadForm, action_genfun, compose, genfun_for_isotopy, reeb_family, solve_fiber_critical
from .homology import brute_force_betti, index_nullity, quad_sublevel_type, sphere_mesh, write_off
from .sweep import SCHEMA_VERSION, numeric_sweep, quadratic_sweep, translated_points_from_ledger
from .symplectization import cayley_genfun


class UsageError(Exception):
    """Bad combination of flags."""


# ---------------------------------------------------------------- input helpers


def _floats(text: str) -> list:
    return [float(v) for v in text.replace(",", " ").split()]


def _hamiltonian(args) -> Optional[HamSpec]:
    if args.ham_expr:
        if args.n is None:
            raise UsageError("--ham-expr needs --n")
        return HamSpec.expr(args.ham_expr, args.n)
    return None


def _contactomorphism(args) -> Contactomorphism:
    """From --input (Contactomorphism or HamSpec JSON), --angles, --ham-expr, or --identity."""
    if getattr(args, "angles", None):
        return Contactomorphism.unitary(unitary_from_angles(_floats(args.angles)))
    H = _hamiltonian(args)
    if H is not None:
        return Contactomorphism.flow(H, args.time)
    if getattr(args, "identity", False):
        if args.n is None:
            raise UsageError("--identity needs --n")
        return Contactomorphism.identity(args.n)
    if not args.input:
        raise UsageError("give --input, --angles, --ham-expr or --identity")
    d = load_json(args.input[0])
    if "kind" in d and d["kind"] in ("unitary", "flow"):
        return Contactomorphism.from_json(d)
    return Contactomorphism.flow(HamSpec.from_json(d), args.time)


def _quadform(path) -> QuadForm:
    d = load_json(path)
    if "base_dim" in d:
        return QuadForm.from_json(d)
    return cayley_genfun(Contactomorphism.from_json(d).linear_matrix)


def _points(args, dim: int) -> np.ndarray:
    if args.point:
        P = np.atleast_2d(np.array([_floats(p) for p in args.point]))
        if P.shape[1] != dim:
            raise UsageError(f"points must have {dim} coordinates")
        return P / np.linalg.norm(P, axis=1, keepdims=True)
    return random_sphere(np.random.default_rng(args.seed), args.samples, dim)


def _matrix_text(M: np.ndarray) -> str:
    return "\n".join(" ".join(f"{v: .6f}" for v in row) for row in M)


class Output:
    """Collects a JSON payload and text lines; writes to --out or stdout."""

    def __init__(self, args):
        self.args = args
        self.payload = {"schema_version": SCHEMA_VERSION, "command": args.command}
        self.lines: list = []

    def text(self, line: str = "") -> None:
        self.lines.append(line)

    def emit(self) -> None:
        body = json.dumps(self.payload, indent=2, sort_keys=True) if self.args.json else "\n".join(self.lines)
        if self.args.out and self.args.command != "sweep":
            with open(self.args.out, "w") as fh:
                fh.write(body + "\n")
        else:
            print(body)


# ---------------------------------------------------------------- commands


def cmd_reeb_family(args, out: Output) -> int:
    n, t = _require_n(args), args.t
    A = reeb_family(n, t)
    ind, null = index_nullity(A)
    out.payload.update(n=n, t=t, dim=A.dim, index=ind, nullity=null, matrix=A.matrix.tolist())
    out.text(_matrix_text(A.matrix))
    out.text(f"dim {A.dim}  index {ind}  nullity {null}")
    return 0


def cmd_cayley(args, out: Output) -> int:
    phi = _contactomorphism(args)
    if phi.kind != "unitary":
        raise UsageError("cayley needs a unitary contactomorphism")
    Q = cayley_genfun(phi.linear_matrix)
    out.payload.update(Q.to_json())
    out.text(_matrix_text(Q.matrix))
    return 0


def cmd_compose(args, out: Output) -> int:
    if not args.input or len(args.input) < 2:
        raise UsageError("compose needs two --input QuadForm (or unitary) files")
    forms = [_quadform(p) for p in args.input]
    G = forms[-1]
    for F in reversed(forms[:-1]):
        G = compose(F, G)
    ind, null = index_nullity(G)
    out.payload.update(G.to_json())
    out.payload.update(index=ind, nullity=null)
    out.text(_matrix_text(G.matrix))
    out.text(f"dim {G.dim}  base {G.base_dim}  index {ind}  nullity {null}")
    return 0


def cmd_lift(args, out: Output) -> int:
    phi = _contactomorphism(args)
    P = _points(args, 2 * phi.n)
    img, g = phi(P)
    Z = phi.lift(P)[0]
    out.payload.update(points=P.tolist(), lift=Z.tolist(), image=img.tolist(), g=np.asarray(g).tolist())
    out.text("p | lift(p) | g")
    for p, z, gi in zip(P, Z, np.atleast_1d(g)):
        out.text(f"{np.array2string(p, precision=6)} | {np.array2string(z, precision=6)} | {gi:.3e}")
    return 0


def cmd_flow(args, out: Output) -> int:
    H = _hamiltonian(args)
    if H is None:
        if not args.input:
            raise UsageError("flow needs --ham-expr or an --input HamSpec file")
        H = HamSpec.from_json(load_json(args.input[0]))
    P = _points(args, 2 * H.n)
    img, g = contact_flow(H, args.time, P, rtol=args.tol, atol=args.tol)
    out.payload.update(time=args.time, points=P.tolist(), image=np.asarray(img).tolist(), g=np.asarray(g).tolist())
    out.text("p | phi_t(p) | g")
    for p, q, gi in zip(P, np.atleast_2d(img), np.atleast_1d(g)):
        out.text(f"{np.array2string(p, precision=6)} | {np.array2string(q, precision=6)} | {gi:.3e}")
    return 0


def cmd_genfun(args, out: Output) -> int:
    phi = _contactomorphism(args)
    if phi.kind == "unitary":
        return cmd_cayley(args, out)
    H = phi.hamiltonian
    F = action_genfun(H) if args.pieces == 1 else genfun_for_isotopy(H, args.pieces)
    m = 2 * H.n
    P = _points(args, m)
    X = solve_fiber_critical(F, P) if F.fiber_dim else P
    vals = F.value(X)
    out.payload.update(base_dim=m, fiber_dim=F.fiber_dim, points=X.tolist(), values=np.asarray(vals).tolist())
    out.text(f"numeric generating function: base {m}, fiber {F.fiber_dim} (values on sample points)")
    for x, v in zip(X[:, :m], np.atleast_1d(vals)):
        out.text(f"{np.array2string(x, precision=6)}  F = {v:.12g}")
    return 0


def cmd_sweep(args, out: Output) -> int:
    phi = _contactomorphism(args)
    if phi.kind == "unitary":
        ledger = quadratic_sweep(phi, grid_size=args.grid or 2000)
    else:
        F = action_genfun(phi.hamiltonian) if args.pieces == 1 else genfun_for_isotopy(phi.hamiltonian, args.pieces)
        try:
            ledger = numeric_sweep(
                phi, F, grid_size=args.grid or 40, starts=args.starts, seed=args.seed,
                newton_tol=args.tol if args.tol_given else 1e-9,
                betti=phi.n <= 2,
            )
        except NewtonBudgetExhausted as exc:
            ledger = exc.partial
            print(f"warning: {exc}", file=sys.stderr)
    tol = 1e-8 if phi.kind == "unitary" else 1e-6
    reports = translated_points_from_ledger(phi, ledger, tol=tol) if ledger.crossings else []
    data = ledger.to_json()
    data["translated_points"] = [r.to_json() for r in reports]
    data["summary"] = ledger.summary()
    out.payload.update(data)
    for c in ledger.crossings:
        flag = "  degenerate" if c.multiplicity > 1 else ""
        out.text(f"crossing t={c.t:.12g}  index {c.attachment_index}  multiplicity {c.multiplicity}{flag}")
    out.text(ledger.summary())
    if args.out:
        base = args.out[:-5] if args.out.endswith(".json") else args.out
        with open(base + ".json", "w") as fh:
            json.dump(out.payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(base + ".csv", "w") as fh:
            fh.write(ledger.to_csv())
        out.text(f"wrote {base}.json and {base}.csv")
    return 0


def cmd_betti(args, out: Output) -> int:
    if args.diag:
        S = np.diag(_floats(args.diag))
    elif args.input:
        d = load_json(args.input[0])
        S = np.asarray(d["matrix"], dtype=float)
    else:
        raise UsageError("betti needs --diag or an --input file with a matrix")
    exact = quad_sublevel_type(S, args.level)
    oracle = brute_force_betti(S, level=args.level, subdivisions=args.subdivisions)
    ind, null = index_nullity(S)
    out.payload.update(
        level=args.level, index=ind, nullity=null, exact=str(exact),
        exact_betti=exact.betti().to_list(), oracle_betti=oracle.to_list(), oracle_empty=oracle.empty,
    )
    out.text(f"index {ind}  nullity {null}")
    out.text(f"exact type at level {args.level:g}: {exact}  betti {exact.betti().to_list()}")
    out.text(f"oracle betti: {'empty' if oracle.empty else oracle.to_list()}")
    if args.off:
        mesh = sphere_mesh(S.shape[0], args.subdivisions)
        keep = np.einsum("bi,ij,bj->b", mesh.vertices, S, mesh.vertices) <= args.level
        write_off(args.off, mesh, keep)
        out.text(f"wrote {args.off}")
    return 0


def cmd_rp_check(args, out: Output) -> int:
    phi = _contactomorphism(args)
    rep = rp_lift_check(phi, samples=args.samples, seed=args.seed, tol=args.tol)
    out.payload.update(equivariant=rep.equivariant, max_violation=rep.max_violation, samples=rep.samples)
    out.text(f"equivariant under p -> -p: max violation {rep.max_violation:.2e} on {rep.samples} samples")
    return 0


def cmd_verify(args, out: Output) -> int:
    ids = set(int(v) for v in _floats(args.ids)) if args.ids else None
    echo = None if args.json else print
    results = acceptance.run_suite(only=args.only, ids=ids, echo=echo)
    failed = [r.id for r in results if not r.passed]
    out.payload.update(
        results=[{"id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail, "seconds": r.seconds} for r in results],
        failed=failed,
    )
    out.text(f"{len(results) - len(failed)}/{len(results)} criteria pass" + (f"; failing: {failed}" if failed else ""))
    return 1 if failed else 0


def _require_n(args) -> int:
    if args.n is None or args.n < 1:
        raise UsageError("--n must be a positive integer")
    return args.n


COMMANDS = {
    "reeb-family": (cmd_reeb_family, "matrix, index and nullity of the Reeb family A_t"),
    "cayley": (cmd_cayley, "Cayley generating form of a unitary map"),
    "compose": (cmd_compose, "composition product of quadratic generating forms"),
    "lift": (cmd_lift, "lift of a contactomorphism at points"),
    "flow": (cmd_flow, "contact flow of a Hamiltonian at points"),
    "genfun": (cmd_genfun, "generating function of a unitary map or a flow"),
    "sweep": (cmd_sweep, "parametric sweep for translated points"),
    "betti": (cmd_betti, "sublevel Betti numbers of a quadratic form on the sphere"),
    "rp-check": (cmd_rp_check, "equivariance under the antipodal map"),
    "verify": (cmd_verify, "run the acceptance suite"),
}


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--n", type=int, help="complex dimension (sphere S^{2n-1})")
    shared.add_argument("--t", type=float, default=0.0, help="family parameter")
    shared.add_argument("--tol", type=float, default=None, help="numerical tolerance")
    shared.add_argument("--grid", type=int, default=None, help="sweep grid size")
    shared.add_argument("--seed", type=int, default=0, help="sampling seed")
    shared.add_argument("--json", action="store_true", help="machine-readable output")
    shared.add_argument("--out", help="output path (sweep: prefix for .json and .csv)")
    shared.add_argument("--ham-expr", help="contact Hamiltonian expression in x1..xn, y1..yn, t")
    shared.add_argument("--input", action="append", help="input JSON file (repeatable)")
    shared.add_argument("--threads", type=int, default=None, help="cap on BLAS threads")

    p = argparse.ArgumentParser(prog="gfsphere", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    parsers = {name: sub.add_parser(name, parents=[shared], help=h) for name, (_, h) in COMMANDS.items()}
    for name in ("cayley", "lift", "genfun", "sweep", "rp-check"):
        parsers[name].add_argument("--angles", help="unitary diag(e^{i a_j}) from angles a_j")
        parsers[name].add_argument("--time", type=float, default=1.0, help="flow time")
    parsers["sweep"].add_argument("--identity", action="store_true", help="sweep the identity map")
    parsers["sweep"].add_argument("--starts", type=int, default=None, help="Newton starts per grid point")
    for name in ("genfun", "sweep"):
        parsers[name].add_argument("--pieces", type=int, default=1, help="isotopy subdivision N")
    for name in ("lift", "flow", "genfun", "rp-check"):
        parsers[name].add_argument("--point", action="append", help="a point (comma separated), repeatable")
        parsers[name].add_argument("--samples", type=int, default=4 if name != "rp-check" else 200)
    parsers["flow"].add_argument("--time", type=float, default=1.0, help="flow time")
    parsers["betti"].add_argument("--diag", help="diagonal entries of the form")
    parsers["betti"].add_argument("--level", type=float, default=-1e-6, help="sublevel value")
    parsers["betti"].add_argument("--subdivisions", type=int, default=3)
    parsers["betti"].add_argument("--off", help="write the oracle subcomplex (S^2 only) as OFF")
    parsers["verify"].add_argument("--only", choices=acceptance.GROUPS, help="run one group of criteria")
    parsers["verify"].add_argument("--ids", help="comma separated criterion numbers")
    return p


def _thread_limit(threads: Optional[int]):
    if threads is None:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=threads)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.tol_given = args.tol is not None
    if args.tol is None:
        args.tol = 1e-8 if args.command == "rp-check" else 1e-10
    fn = COMMANDS[args.command][0]
    out = Output(args)
    try:
        with _thread_limit(args.threads):
            code = fn(args, out)
    except GridTooCoarse as exc:
        print(f"error: {exc}. Rerun with a larger --grid (e.g. twice the current size).", file=sys.stderr)
        return 3
    except (GfSphereError, UsageError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    out.emit()
    return code


if __name__ == "__main__":
    sys.exit(main())
