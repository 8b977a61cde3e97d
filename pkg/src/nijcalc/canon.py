"""Canonical-form generators for Nijenhuis operator fields.

Each generator returns a symbolic :class:`~nijcalc.tensorcore.OpField` realizing
one of the local normal forms:

* ``gen_diag_real`` — block-scalar diagonal ``diag(l_1 Id, ..., l_s Id)`` where
  the eigenvalue ``l_a`` depends only on its own variable group (semisimple,
  algebraically generic case);
* ``gen_complex_block`` — the 2x2 rotation-like block ``[[a, -b], [b, a]]``
  encoding multiplication by the complex eigenvalue ``a + i b``;
* ``gen_companion`` — first column ``(x_1..x_n)``, superdiagonal ones: the
  normal form at differentially non-degenerate points;
* ``gen_companion_sum`` — a direct sum of companion blocks on disjoint
  variable groups;
* ``gen_nilpotent_jordan`` — the constant single Jordan block with eigenvalue
  zero (subdiagonal ones);
* ``gen_jordan_nonconst`` — the single Jordan block with non-constant
  eigenvalue ``lambda(x_1)``: diagonal ``lambda``, subdiagonal ones, and
  first-column corrections ``xi_k = -lambda'(x_1) * (k - 2) * x_k`` for
  ``k = 3..n``;
* ``gen_jordan_nonconst_complex`` — the 2n x 2n realification of the previous
  form for a holomorphic eigenvalue ``rho(z_1) = a + i b``, with every complex
  entry ``p + i q`` replaced by the 2x2 block ``[[p, -q], [q, p]]``.

Every generator's output is certified Nijenhuis by the symbolic torsion test
(see the test suite); ``gen_complex_block`` additionally carries the
Cauchy-Riemann obligation checked by :func:`cauchy_riemann_check`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import DimensionError, DocumentError
from .scalarfield import Poly, parse_poly
from .tensorcore import OpField

CANONICAL_KINDS = (
    "diag_real",
    "complex_block",
    "companion",
    "companion_sum",
    "nilpotent_jordan",
    "jordan_nonconst",
)


def _flat_vars(n: int, prefix: str = "x") -> tuple[str, ...]:
    return tuple(f"{prefix}{i}" for i in range(1, n + 1))


def _coerce_scalar(expr, vars: Sequence[str]) -> Poly:
    """Parse ``expr`` against exactly ``vars`` (strings) or adopt a Poly."""
    if isinstance(expr, Poly):
        if len(expr.vars) != len(vars):
            raise DimensionError(
                f"eigenvalue polynomial has {len(expr.vars)} variables, expected {len(vars)}"
            )
        return expr
    return parse_poly(str(expr), vars)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def gen_diag_real(groups: Sequence[Sequence[str]], lambdas: Sequence) -> OpField:
    """diag(l_1 Id_{m_1}, ..., l_s Id_{m_s}) on the concatenated variable tuple.

    ``groups[a]`` lists the variables of the a-th eigenvalue; its multiplicity
    is the group size.  ``lambdas[a]`` is an expression (or Poly) in exactly
    that group -- referencing a foreign variable raises UnknownVariableError.
    """
    if len(groups) != len(lambdas):
        raise DimensionError("one eigenvalue expression per variable group required")
    if not groups or any(not g for g in groups):
        raise DimensionError("variable groups must be nonempty")
    vars = tuple(v for g in groups for v in g)
    if len(set(vars)) != len(vars):
        raise DimensionError("variable groups must be disjoint")
    entries: list[Poly] = []
    for g, lam in zip(groups, lambdas):
        p = _coerce_scalar(lam, tuple(g))
        lifted = p.rename(vars, [vars.index(v) for v in g])
        entries.extend([lifted] * len(g))
    return OpField.diagonal(entries, vars)


def gen_complex_block(a, b, vars: Sequence[str] = ("x", "y")) -> OpField:
    """[[a, -b], [b, a]] for the eigenvalue a(x,y) + i b(x,y).

    The block is Nijenhuis exactly when (a, b) satisfies the Cauchy-Riemann
    identities; generation itself never validates them (see
    :func:`cauchy_riemann_check`).
    """
    if len(vars) != 2:
        raise DimensionError("complex block lives in two variables")
    pa = _coerce_scalar(a, vars)
    pb = _coerce_scalar(b, vars)
    return OpField([[pa, -pb], [pb, pa]], tuple(vars))


def gen_companion(n: int, prefix: str = "x") -> OpField:
    """First column (x_1..x_n), superdiagonal ones."""
    if n < 1:
        raise DimensionError("companion form needs n >= 1")
    vars = _flat_vars(n, prefix)
    rows = [
        [
            Poly.var(vars, i)
            if j == 0
            else (Poly.const(vars, 1) if j == i + 1 else Poly.zero(vars))
            for j in range(n)
        ]
        for i in range(n)
    ]
    return OpField(rows, vars)


def gen_companion_sum(sizes: Sequence[int], prefix: str = "x") -> OpField:
    """Direct sum of companion blocks of the given sizes.

    The blocks live on consecutive groups of a single flat variable tuple
    x_1..x_n, n = sum(sizes).
    """
    if not sizes:
        raise DimensionError("at least one block size required")
    if any(int(k) != k or k < 1 for k in sizes):
        raise DimensionError("block sizes must be integers >= 1")
    n = sum(sizes)
    vars = _flat_vars(n, prefix)
    rows = [[Poly.zero(vars) for _ in range(n)] for _ in range(n)]
    off = 0
    for k in sizes:
        for i in range(k):
            rows[off + i][off] = Poly.var(vars, off + i)
            if i + 1 < k:
                rows[off + i][off + i + 1] = Poly.const(vars, 1)
        off += k
    return OpField(rows, vars)


def gen_nilpotent_jordan(n: int, prefix: str = "x") -> OpField:
    """The constant nilpotent Jordan block: ones on the subdiagonal."""
    if n < 2:
        raise DimensionError("nilpotent Jordan block needs n >= 2")
    vars = _flat_vars(n, prefix)
    rows = [
        [Poly.const(vars, 1) if j == i - 1 else Poly.zero(vars) for j in range(n)]
        for i in range(n)
    ]
    return OpField(rows, vars)


def gen_jordan_nonconst(n: int, lam="x1", prefix: str = "x") -> OpField:
    """Single Jordan block with non-constant eigenvalue lambda(x_1).

    Diagonal lambda(x_1), subdiagonal ones, and first-column entries
    xi_k = -lambda'(x_1) * (k - 2) * x_k for rows k = 3..n.  For n = 2 the
    corrections are absent: [[lambda, 0], [1, lambda]].
    """
    if n < 2:
        raise DimensionError("Jordan block with eigenvalue needs n >= 2")
    vars = _flat_vars(n, prefix)
    lp = _coerce_scalar(lam, (vars[0],)).rename(vars, [0])
    dlam = lp.diff(0)
    rows = [[Poly.zero(vars) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        rows[i][i] = lp
    for i in range(1, n):
        rows[i][i - 1] = Poly.const(vars, 1)
    for k in range(3, n + 1):
        rows[k - 1][0] = dlam * Poly.var(vars, k - 1) * Fraction(-(k - 2))
    return OpField(rows, vars)


def gen_jordan_nonconst_complex(n: int, a="x1", b="y1") -> OpField:
    """Realified complex Jordan block with holomorphic eigenvalue a + i b.

    The n x n complex form (diagonal rho(z_1), subdiagonal ones, first-column
    xi_k = -rho'(z_1) * (k - 2) * z_k) is turned into a 2n x 2n real field on
    variables (x1, y1, ..., xn, yn) by replacing each complex entry p + i q
    with [[p, -q], [q, p]].  rho' is computed as a_x + i b_x, which equals the
    complex derivative exactly when (a, b) satisfies the Cauchy-Riemann
    identities in (x1, y1).
    """
    if n < 2:
        raise DimensionError("complex Jordan block with eigenvalue needs n >= 2")
    vars = tuple(f"{p}{i}" for i in range(1, n + 1) for p in ("x", "y"))
    pa = _coerce_scalar(a, ("x1", "y1")).rename(vars, [0, 1])
    pb = _coerce_scalar(b, ("x1", "y1")).rename(vars, [0, 1])
    ax, bx = pa.diff(0), pb.diff(0)
    zero = Poly.zero(vars)
    one = Poly.const(vars, 1)

    complex_rows = [[(zero, zero) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        complex_rows[i][i] = (pa, pb)
    for i in range(1, n):
        complex_rows[i][i - 1] = (one, zero)
    for k in range(3, n + 1):
        xk = Poly.var(vars, 2 * (k - 1))
        yk = Poly.var(vars, 2 * (k - 1) + 1)
        c = Fraction(-(k - 2))
        complex_rows[k - 1][0] = ((ax * xk - bx * yk) * c, (ax * yk + bx * xk) * c)

    rows = [[zero for _ in range(2 * n)] for _ in range(2 * n)]
    for i in range(n):
        for j in range(n):
            p, q = complex_rows[i][j]
            rows[2 * i][2 * j] = p
            rows[2 * i][2 * j + 1] = -q
            rows[2 * i + 1][2 * j] = q
            rows[2 * i + 1][2 * j + 1] = p
    return OpField(rows, vars)


# ---------------------------------------------------------------------------
# obligations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CauchyRiemannVerdict:
    """Outcome of the holomorphy test for a 2x2 complex block."""

    ok: bool
    residuals: tuple  # (a_x - b_y, a_y + b_x) as Poly
    witnesses: tuple = ()

    def __bool__(self) -> bool:
        return self.ok


def cauchy_riemann_check(a, b, vars: Sequence[str] = ("x", "y")) -> CauchyRiemannVerdict:
    """Check a_x = b_y and a_y = -b_x exactly."""
    if len(vars) != 2:
        raise DimensionError("Cauchy-Riemann check needs exactly two variables")
    pa = _coerce_scalar(a, vars)
    pb = _coerce_scalar(b, vars)
    r1 = pa.diff(0) - pb.diff(1)
    r2 = pa.diff(1) + pb.diff(0)
    witnesses = []
    if not r1.is_zero:
        witnesses.append(f"d(a)/d{vars[0]} - d(b)/d{vars[1]} = {r1}")
    if not r2.is_zero:
        witnesses.append(f"d(a)/d{vars[1]} + d(b)/d{vars[0]} = {r2}")
    return CauchyRiemannVerdict(
        ok=not witnesses, residuals=(r1, r2), witnesses=tuple(witnesses)
    )


# ---------------------------------------------------------------------------
# declarative interface
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CanonicalSpec:
    """A canonical form named by kind plus parameters.

    Kinds and their parameters:

    ==================  =====================================================
    diag_real           groups: list of variable-name lists; lambdas: exprs
    complex_block       a, b: exprs; vars: optional pair of names
    companion           n: int
    companion_sum       sizes: list of ints
    nilpotent_jordan    n: int
    jordan_nonconst     n: int; lam: expr in x1
    ==================  =====================================================
    """

    kind: str
    params: Mapping = field(default_factory=dict)

    _REQUIRED = {
        "diag_real": ("groups", "lambdas"),
        "complex_block": ("a", "b"),
        "companion": ("n",),
        "companion_sum": ("sizes",),
        "nilpotent_jordan": ("n",),
        "jordan_nonconst": ("n",),
    }
    _OPTIONAL = {
        "complex_block": ("vars",),
        "jordan_nonconst": ("lam",),
    }

    def build(self) -> OpField:
        if self.kind not in CANONICAL_KINDS:
            raise DocumentError(
                f"unknown canonical kind {self.kind!r}; expected one of {', '.join(CANONICAL_KINDS)}"
            )
        required = self._REQUIRED[self.kind]
        allowed = set(required) | set(self._OPTIONAL.get(self.kind, ()))
        missing = [k for k in required if k not in self.params]
        extra = [k for k in self.params if k not in allowed]
        if missing:
            raise DocumentError(
                f"canonical kind {self.kind!r} is missing parameter(s): {', '.join(missing)}"
            )
        if extra:
            raise DocumentError(
                f"canonical kind {self.kind!r} got unexpected parameter(s): {', '.join(sorted(extra))}"
            )
        p = self.params
        if self.kind == "diag_real":
            return gen_diag_real(p["groups"], p["lambdas"])
        if self.kind == "complex_block":
            return gen_complex_block(p["a"], p["b"], tuple(p.get("vars", ("x", "y"))))
        if self.kind == "companion":
            return gen_companion(int(p["n"]))
        if self.kind == "companion_sum":
            return gen_companion_sum([int(k) for k in p["sizes"]])
        if self.kind == "nilpotent_jordan":
            return gen_nilpotent_jordan(int(p["n"]))
        return gen_jordan_nonconst(int(p["n"]), p.get("lam", "x1"))
