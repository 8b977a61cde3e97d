"""Command-line frontend: parse operator documents, run verification suites,
emit deterministic reports.

Subcommands::

    nij check DOC        Nijenhuis tensor + trace/flow identity suite
    nij canonical KIND   emit a canonical form as a document
    nij reconstruct DOC  rebuild an operator from sigma coefficients
    nij split DOC        spectral-splitting certification around a point
    nij classify DOC     algebraic type (Segre characteristic) at points
    nij lsa DOC          left-symmetry of a structure-constant cube
    nij linearize DOC    formal linearization transcript
    nij geodesic DOC     geodesic compatibility of (metric_inv, matrix)
    nij pn DOC           symplectic/Nijenhuis pair check (omega, matrix)

DOC is a file path or ``-`` for stdin.  Reports go to stdout and are
byte-identical across re-runs with the same inputs and flags; wall time and
other diagnostics go to stderr.  ``--json`` renders the report as a single
JSON object with stable key order (``schema`` 1).  Exit status: 0 all checks
passed, 1 a verification failed, 2 the input could not be processed.

Seed resolution order: ``--seed`` flag, the document's ``seed`` block, the
``NIJ_SEED`` environment variable, then the library default (42).
"""

import argparse
import json
import os
import sys
import time
from fractions import Fraction

from .canon import CANONICAL_KINDS, CanonicalSpec
from .doc import OperatorDoc, document_for_field, read_document
from .errors import CompatibilityError, DocumentError, NijError
from .geopn import geodesic_compat_check, pn_check
from .lsa import DEFAULT_CAP, formal_linearize, lsa_check, lsa_to_linear
from .sampling import DEFAULT_SAMPLES, DEFAULT_SEED
from .scalarfield import Poly
from .spectral import char_poly, reconstruct, reconstruct_blocks, verify_char_flow, verify_trace_identities
from .splitfun import splitting_check
from .tensorcore import CLUSTER_TOL, FD_STEP, TOL_ALGEBRAIC, TOL_FINITE_DIFF, classify_point, is_nijenhuis

__all__ = ["main", "build_parser"]

SCHEMA = 1


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _fmt_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".6e")
    return str(v)


class Report:
    """Ordered report: metadata lines, then named checks, then the result.

    The text and JSON renderings share one insertion order, so both are
    deterministic for fixed inputs.
    """

    def __init__(self, command: str):
        self.command = command
        self.metas: list[tuple[str, object]] = []
        self.checks: list[dict] = []

    def meta(self, key: str, value) -> None:
        self.metas.append((key, value))

    def check(self, name: str, ok, witnesses=(), **extra) -> None:
        entry = {"name": name, "ok": ok}
        entry.update(extra)
        entry["witnesses"] = list(witnesses)
        self.checks.append(entry)

    @property
    def ok(self) -> bool:
        return all(c["ok"] is not False for c in self.checks)

    def to_text(self) -> str:
        lines = [f"schema: {SCHEMA}", f"command: {self.command}"]
        for key, value in self.metas:
            if isinstance(value, (list, tuple)) and value and all(
                isinstance(r, (list, tuple)) for r in value
            ):
                lines.append(f"{key}:")
                for row in value:
                    lines.append("  [" + ", ".join(str(e) for e in row) + "]")
            elif isinstance(value, (list, tuple)):
                lines.append(f"{key}: " + " ".join(str(e) for e in value))
            else:
                lines.append(f"{key}: {_fmt_scalar(value)}")
        for c in self.checks:
            status = "skipped" if c["ok"] is None else ("pass" if c["ok"] else "fail")
            detail = " ".join(
                f"{k}={_fmt_scalar(v)}"
                for k, v in c.items()
                if k not in ("name", "ok", "witnesses") and v is not None
            )
            lines.append(f"check {c['name']}: {status}" + (f" ({detail})" if detail else ""))
            for w in c["witnesses"]:
                lines.append(f"  witness: {w}")
        lines.append(f"result: {'pass' if self.ok else 'fail'}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        obj = {"schema": SCHEMA, "command": self.command}
        for key, value in self.metas:
            obj[key] = value
        obj["checks"] = self.checks
        obj["ok"] = self.ok
        return json.dumps(obj, indent=2) + "\n"


def _echo_doc(rep: Report, doc: OperatorDoc) -> None:
    if doc.name is not None:
        rep.meta("name", doc.name)
    if doc.dim is not None:
        rep.meta("dim", doc.dim)
    if doc.vars is not None:
        rep.meta("vars", list(doc.vars))


def _resolve(flag, doc_value, default):
    if flag is not None:
        return flag
    if doc_value is not None:
        return doc_value
    return default


def _resolve_seed(flag, doc_value) -> int:
    if flag is not None:
        return flag
    if doc_value is not None:
        return doc_value
    env = os.environ.get("NIJ_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise DocumentError(f"NIJ_SEED must be an integer, got {env!r}")
    return DEFAULT_SEED


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def cmd_check(args, out) -> Report:
    doc = read_document(args.doc)
    L = doc.operator_field()
    seed = _resolve_seed(args.seed, doc.seed)
    samples = _resolve(args.samples, doc.samples, DEFAULT_SAMPLES)
    tol = _resolve(args.tol, doc.tol, TOL_ALGEBRAIC)
    rep = Report("check")
    _echo_doc(rep, doc)
    v = is_nijenhuis(L, mode=args.mode, samples=samples, tol=tol, seed=seed)
    extra = {"mode": v.mode}
    if v.mode == "numeric":
        extra.update(residual=v.residual, samples=v.samples, seed=v.seed)
    rep.check("nijenhuis", v.ok, witnesses=v.witnesses, **extra)
    if v.mode == "symbolic":
        tv = verify_trace_identities(L)
        rep.check("trace_identities", tv.ok, witnesses=tv.witnesses)
        if len(L.vars) == L.dim:
            fv = verify_char_flow(L)
            rep.check("char_flow", fv.ok, witnesses=fv.witnesses)
        else:
            rep.check("char_flow", None, witnesses=["needs one coordinate per dimension"])
    return rep


def _csv_ints(text: str, what: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise DocumentError(f"{what}: expected comma-separated integers, got {text!r}")


def cmd_canonical(args, out) -> None:
    kind = {
        "nilpotent": "nilpotent_jordan",
        "jordan": "jordan_nonconst",
        "diag": "diag_real",
    }.get(args.kind, args.kind)
    params = {}
    if kind in ("companion", "nilpotent_jordan", "jordan_nonconst"):
        if args.dim is None:
            raise DocumentError(f"canonical {args.kind} needs --dim")
        params["n"] = args.dim
        if kind == "jordan_nonconst" and args.lam is not None:
            params["lam"] = args.lam
    elif kind == "companion_sum":
        if not args.sizes:
            raise DocumentError("canonical companion_sum needs --sizes, e.g. --sizes 2,2")
        params["sizes"] = _csv_ints(args.sizes, "--sizes")
    elif kind == "diag_real":
        if args.dim is None:
            raise DocumentError("canonical diag needs --dim")
        names = [f"x{i + 1}" for i in range(args.dim)]
        lambdas = names if args.lambdas is None else [s.strip() for s in args.lambdas.split(",")]
        if len(lambdas) != args.dim:
            raise DocumentError(f"--lambdas: expected {args.dim} expressions")
        params["groups"] = [[nm] for nm in names]
        params["lambdas"] = lambdas
    elif kind == "complex_block":
        if args.a is None or args.b is None:
            raise DocumentError("canonical complex_block needs --a and --b")
        params["a"], params["b"] = args.a, args.b
        if args.vars is not None:
            names = [s.strip() for s in args.vars.split(",")]
            if len(names) != 2:
                raise DocumentError("--vars: expected two names, e.g. --vars x,y")
            params["vars"] = tuple(names)
    L = CanonicalSpec(kind, params).build()
    out.write(document_for_field(L, name=kind))
    return None


def cmd_reconstruct(args, out) -> Report:
    doc = read_document(args.doc)
    sigs = doc.sigma_lists()
    rep = Report("reconstruct")
    _echo_doc(rep, doc)
    rep.meta("blocks", len(sigs))
    L = reconstruct(sigs[0]) if len(sigs) == 1 else reconstruct_blocks(sigs)
    rep.meta("matrix", L.to_strings())
    polynomial = all(isinstance(e, Poly) for row in L.rows for e in row)
    rep.meta("entries", "polynomial" if polynomial else "rational")
    # round trip: the characteristic coefficients of the rebuilt operator
    # must reproduce the product of the block inputs exactly
    expected = [Poly.const(L.vars, 1)]
    for sb in sigs:
        asc = [Poly.const(L.vars, 1)] * (sb.n + 1)
        for idx, s in enumerate(sb.sigmas, start=1):
            asc[sb.n - idx] = s.rename(L.vars)
        prod = [Poly.zero(L.vars) for _ in range(len(expected) + sb.n)]
        for i, a in enumerate(expected):
            for j, b in enumerate(asc):
                prod[i + j] = prod[i + j] + a * b
        expected = prod
    back = char_poly(L) if polynomial else None
    if back is None:
        rep.check(
            "char_poly_round_trip",
            None,
            witnesses=["rational entries; round trip checked only for polynomial fields"],
        )
    else:
        n = len(L.vars)
        wit = []
        for k in range(1, n + 1):
            want = expected[n - k]
            got = back.sigmas[k - 1]
            if got != want:
                wit.append(f"sigma_{k}: {got} != {want}")
        rep.check("char_poly_round_trip", not wit, witnesses=wit)
    return rep


def cmd_split(args, out) -> Report:
    doc = read_document(args.doc)
    L = doc.operator_field()
    fact = doc.factorization()
    point = doc.sample_point()
    seed = _resolve_seed(args.seed, doc.seed)
    samples = _resolve(args.samples, doc.samples, 20)
    tol = _resolve(args.tol, doc.tol, TOL_ALGEBRAIC)
    v = splitting_check(
        L,
        point,
        fact,
        samples=samples,
        tol=tol,
        fd_tol=args.fd_tol,
        seed=seed,
        box=args.box,
        h=args.step,
    )
    rep = Report("split")
    _echo_doc(rep, doc)
    rep.meta("point", point)
    rep.meta("samples", v.samples)
    rep.meta("seed", v.seed)
    rep.check("projector_idempotent", v.idempotent_residual < tol, residual=v.idempotent_residual)
    rep.check("projector_commutes", v.commute_residual < tol, residual=v.commute_residual)
    rep.check("projector_torsion", v.torsion_residual < args.fd_tol, residual=v.torsion_residual)
    rep.check("block_diagonal", v.block_residual < tol, residual=v.block_residual)
    for w in v.witnesses:
        rep.checks[-1]["witnesses"].append(w)
    return rep


def _fmt_complex(z) -> str:
    re = 0.0 if abs(z.real) < 5e-10 else z.real
    im = 0.0 if abs(z.imag) < 5e-10 else z.imag
    if im == 0.0:
        return format(re, ".6g")
    return format(re, ".6g") + format(im, "+.6g") + "i"


def cmd_classify(args, out) -> Report:
    doc = read_document(args.doc)
    L = doc.operator_field()
    pts = doc.points if doc.points is not None else [doc.sample_point()]
    rep = Report("classify")
    _echo_doc(rep, doc)
    for pt in pts:
        pc = classify_point(L, pt, tol=args.cluster_tol)
        cells = [
            f"{_fmt_complex(cell.value)} mult {cell.multiplicity} blocks {list(cell.blocks)}"
            for cell in pc.segre
        ]
        rep.check(
            f"point {pt}",
            True,
            segre="; ".join(cells),
            gl_regular=pc.gl_regular,
            diff_nondegenerate=pc.diff_nondegenerate,
            scalar_type=pc.scalar_type,
        )
    return rep


def cmd_lsa(args, out) -> Report:
    doc = read_document(args.doc)
    A = doc.lsa_cube()
    rep = Report("lsa")
    if doc.name is not None:
        rep.meta("name", doc.name)
    rep.meta("dim", A.n)
    v = lsa_check(A)
    rep.check("left_symmetry", v.ok, witnesses=v.witnesses)
    nv = is_nijenhuis(lsa_to_linear(A), mode="symbolic")
    rep.check("linear_field_nijenhuis", nv.ok, witnesses=nv.witnesses)
    rep.check(
        "verdicts_agree",
        v.ok == nv.ok,
        witnesses=[] if v.ok == nv.ok else ["left-symmetry and torsion tests disagree"],
    )
    return rep


def cmd_linearize(args, out) -> Report:
    doc = read_document(args.doc)
    L = doc.operator_field()
    rep = Report("linearize")
    _echo_doc(rep, doc)
    rep.meta("max_degree", args.max_degree)
    try:
        lin = formal_linearize(L, cap=args.max_degree)
    except CompatibilityError as exc:
        rep.check("linearized", False, witnesses=[str(exc)])
        return rep
    rep.meta("steps", len(lin.steps))
    rep.meta("linear_change", [[str(Fraction(e)) for e in row] for row in lin.linear_change])
    rep.meta("substitution", [str(p) for p in lin.substitution])
    rep.check("linearized", lin.ok)
    # the transcript's final field must be diag(x_1..x_n) through the cap
    wit = []
    for i in range(L.dim):
        for j in range(L.dim):
            e = lin.field.entry(i, j)
            want = Poly.var(L.vars, i) if i == j else Poly.zero(L.vars)
            r = (e - want).truncate(args.max_degree)
            if not r.is_zero:
                wit.append(f"[{i + 1},{j + 1}] = {r}")
    rep.check("residual_zero_through_cap", not wit, witnesses=wit)
    return rep


def cmd_geodesic(args, out) -> Report:
    doc = read_document(args.doc)
    g = doc.metric()
    L = doc.operator_field()
    seed = _resolve_seed(args.seed, doc.seed)
    samples = _resolve(args.samples, doc.samples, DEFAULT_SAMPLES)
    tol = _resolve(args.tol, doc.tol, TOL_ALGEBRAIC)
    v = geodesic_compat_check(g, L, mode=args.mode, samples=samples, seed=seed, tol=tol)
    rep = Report("geodesic")
    _echo_doc(rep, doc)
    rep.meta("mode", v.mode)
    rep.check("self_adjoint", v.selfadjoint_ok)
    if v.mode == "symbolic":
        rep.check("bracket_identity", v.compat_ok, residual=str(v.residual))
    else:
        rep.check(
            "bracket_identity",
            v.compat_ok,
            residual=v.max_residual,
            samples=v.samples,
            seed=v.seed,
        )
    rep.check("nijenhuis", v.nijenhuis_ok)
    for w in v.witnesses:
        if "(L g^-1)" in w:
            slot = 0
        elif "{H,F}" in w:
            slot = 1
        else:
            slot = 2
        rep.checks[slot]["witnesses"].append(w)
    return rep


def cmd_pn(args, out) -> Report:
    doc = read_document(args.doc)
    omega = doc.two_form()
    L = doc.operator_field()
    v = pn_check(omega, L)
    rep = Report("pn")
    _echo_doc(rep, doc)
    rep.check("symplectic", v.omega_ok)
    rep.check("product_skew", v.skew_ok)
    rep.check("product_closed", v.closed_ok)
    rep.check("nijenhuis", v.nijenhuis_ok)
    by_prefix = (
        ("(d omega L)", 2),
        ("(d omega)", 0),
        ("det omega", 0),
        ("(omega L)", 1),
    )
    for w in v.witnesses:
        slot = 3
        for prefix, idx in by_prefix:
            if w.startswith(prefix):
                slot = idx
                break
        rep.checks[slot]["witnesses"].append(w)
    return rep


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------


def _add_doc(p) -> None:
    p.add_argument("doc", help="document path, or - for stdin")
    p.add_argument("--json", action="store_true", help="emit the report as JSON")


def _add_sampling(p) -> None:
    p.add_argument("--samples", type=int, default=None, help="sample count override")
    p.add_argument("--seed", type=int, default=None, help="RNG seed override")
    p.add_argument("--tol", type=float, default=None, help="tolerance override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nij",
        description="Verification suites for Nijenhuis operator fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="Nijenhuis + identity suite on a matrix document")
    _add_doc(p)
    _add_sampling(p)
    p.add_argument("--mode", choices=("auto", "symbolic", "numeric"), default="auto")

    p = sub.add_parser("canonical", help="emit a canonical form as a document")
    p.add_argument(
        "kind",
        choices=sorted(set(CANONICAL_KINDS) | {"nilpotent", "jordan", "diag"}),
    )
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--sizes", default=None, help="block sizes for companion_sum, e.g. 2,2")
    p.add_argument("--lambda", dest="lam", default=None, help="eigenvalue expression for jordan")
    p.add_argument("--lambdas", default=None, help="comma-separated eigenvalues for diag")
    p.add_argument("--a", default=None, help="real part expression for complex_block")
    p.add_argument("--b", default=None, help="imaginary part expression for complex_block")
    p.add_argument("--vars", default=None, help="two variable names for complex_block")

    p = sub.add_parser("reconstruct", help="rebuild an operator from sigma coefficients")
    _add_doc(p)

    p = sub.add_parser("split", help="spectral splitting certification")
    _add_doc(p)
    _add_sampling(p)
    p.add_argument("--fd-tol", type=float, default=TOL_FINITE_DIFF)
    p.add_argument("--box", type=float, default=0.25, help="sampling half-width around the point")
    p.add_argument("--step", type=float, default=FD_STEP, help="finite-difference step")

    p = sub.add_parser("classify", help="algebraic type at the document's points")
    _add_doc(p)
    p.add_argument("--cluster-tol", type=float, default=CLUSTER_TOL)

    p = sub.add_parser("lsa", help="left-symmetric algebra checks")
    _add_doc(p)

    p = sub.add_parser("linearize", help="formal linearization transcript")
    _add_doc(p)
    p.add_argument("--max-degree", type=int, default=DEFAULT_CAP)

    p = sub.add_parser("geodesic", help="geodesic compatibility of (metric_inv, matrix)")
    _add_doc(p)
    _add_sampling(p)
    p.add_argument("--mode", choices=("auto", "symbolic", "numeric"), default="auto")

    p = sub.add_parser("pn", help="symplectic/Nijenhuis pair check")
    _add_doc(p)

    return parser


_HANDLERS = {
    "check": cmd_check,
    "canonical": cmd_canonical,
    "reconstruct": cmd_reconstruct,
    "split": cmd_split,
    "classify": cmd_classify,
    "lsa": cmd_lsa,
    "linearize": cmd_linearize,
    "geodesic": cmd_geodesic,
    "pn": cmd_pn,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    out = stdout if stdout is not None else sys.stdout
    err = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        report = _HANDLERS[args.command](args, out)
    except NijError as exc:
        err.write(f"error: {exc}\n")
        return 2
    except OSError as exc:
        err.write(f"error: {exc}\n")
        return 2
    finally:
        err.write(f"[nij] {args.command}: {time.perf_counter() - started:.3f}s wall\n")
    if report is None:
        return 0
    out.write(report.to_json() if getattr(args, "json", False) else report.to_text())
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
