"""Left-symmetric algebras and formal linearization of diagonal perturbations.

A linear operator field ``L^i_j(x) = sum_k l^i_{j,k} x_k`` is Nijenhuis exactly
when the constants ``l^i_{j,k}`` are the structure constants of a
left-symmetric algebra (``xi * eta = sum l^i_{j,k} xi^j eta^k e_i``): an
algebra whose associator is symmetric in its first two arguments.  This module
houses that bijection (:func:`lsa_to_linear` / :func:`linear_to_lsa`, checked
by :func:`lsa_check`), the commutator Lie algebra (:func:`assoc_lie`), and the
degree-by-degree linearization engine for perturbations

    L(x) = diag(x_1..x_n) + L_2(x) + L_3(x) + ...

of the diagonal linear operator: a homogeneous degree-k term R compatible with
the diagonal (vanishing polarization bracket, equivalently
``R^i_j = (x_i - x_j) * dR^i_i/dx_j`` off the diagonal) is killed by the unique
substitution ``y_i = x_i + R^i_i(x)``.  All series work is exact rational
arithmetic truncated at an explicit degree cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import _matrix
from .errors import (
    CompatibilityError,
    DegreeCapError,
    DimensionError,
    PrerequisiteError,
)
from .scalarfield import Poly, parse_poly
from .tensorcore import OpField, fn_bracket, nijenhuis_tensor

DEFAULT_CAP = 6


# ---------------------------------------------------------------------------
# left-symmetric algebra cubes
# ---------------------------------------------------------------------------


class LSACube:
    """Structure constants l^i_{j,k} of a bilinear product on R^n.

    The product is ``e_j * e_k = sum_i l^i_{j,k} e_i``; all constants are
    exact rationals.  Indexing is 0-based: ``cube[i][j][k]``.
    """

    __slots__ = ("n", "cube")

    def __init__(self, cube: Sequence[Sequence[Sequence]]):
        n = len(cube)
        rows = []
        for plane in cube:
            if len(plane) != n or any(len(r) != n for r in plane):
                raise DimensionError("structure constants must form an n*n*n cube")
            rows.append(tuple(tuple(Fraction(v) for v in r) for r in plane))
        self.n = n
        self.cube = tuple(rows)

    @classmethod
    def zero(cls, n: int) -> "LSACube":
        return cls([[[0] * n for _ in range(n)] for _ in range(n)])

    @classmethod
    def from_entries(cls, n: int, entries) -> "LSACube":
        """Sparse 1-based entries (i, j, k, value) with exact rational values."""
        cube = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
        for i, j, k, v in entries:
            for idx in (i, j, k):
                if not 1 <= idx <= n:
                    raise DimensionError(f"index {idx} outside 1..{n}")
            cube[i - 1][j - 1][k - 1] = Fraction(v)
        return cls(cube)

    def product(self, xi: Sequence[Fraction], eta: Sequence[Fraction]) -> list[Fraction]:
        """(xi * eta)^i = sum_{j,k} l^i_{j,k} xi^j eta^k."""
        return [
            sum(
                (self.cube[i][j][k] * Fraction(xi[j]) * Fraction(eta[k])
                 for j in range(self.n) for k in range(self.n)),
                Fraction(0),
            )
            for i in range(self.n)
        ]

    def __eq__(self, other) -> bool:
        return isinstance(other, LSACube) and self.cube == other.cube

    def __repr__(self) -> str:
        return f"LSACube(n={self.n})"


@dataclass(frozen=True)
class LSAVerdict:
    """Left-symmetry of the associator, brute-forced over basis triples."""

    ok: bool
    witnesses: tuple = ()

    def __bool__(self) -> bool:
        return self.ok


def _associator(A: LSACube, a: int, b: int, c: int) -> list[Fraction]:
    """(e_a * (e_b * e_c) - (e_a * e_b) * e_c)^i."""
    n = A.n
    out = []
    for i in range(n):
        s = Fraction(0)
        for m in range(n):
            s += A.cube[m][b][c] * A.cube[i][a][m]
            s -= A.cube[m][a][b] * A.cube[i][m][c]
        out.append(s)
    return out


def lsa_check(A: LSACube) -> LSAVerdict:
    """True iff the associator is symmetric in its first two arguments."""
    witnesses = []
    for a in range(A.n):
        for b in range(a + 1, A.n):
            for c in range(A.n):
                left = _associator(A, a, b, c)
                right = _associator(A, b, a, c)
                if left != right:
                    diff = [l - r for l, r in zip(left, right)]
                    witnesses.append(
                        f"assoc(e{a + 1},e{b + 1},e{c + 1}) - assoc(e{b + 1},e{a + 1},e{c + 1}) = {diff}"
                    )
                    if len(witnesses) >= 8:
                        return LSAVerdict(False, tuple(witnesses))
    return LSAVerdict(not witnesses, tuple(witnesses))


def lsa_to_linear(A: LSACube, vars: Sequence[str] | None = None) -> OpField:
    """The linear operator field L^i_j(x) = sum_k l^i_{j,k} x_k."""
    n = A.n
    if vars is None:
        vars = tuple(f"x{i}" for i in range(1, n + 1))
    vars = tuple(vars)
    if len(vars) != n:
        raise DimensionError("one variable per algebra dimension required")
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            terms = {}
            for k in range(n):
                c = A.cube[i][j][k]
                if c:
                    e = [0] * n
                    e[k] = 1
                    terms[tuple(e)] = c
            row.append(Poly(vars, terms))
        rows.append(row)
    return OpField(rows, vars)


def linear_to_lsa(L: OpField) -> LSACube:
    """Read the structure constants off a homogeneous-linear operator field."""
    n = L.dim
    if len(L.vars) != n:
        raise DimensionError("operator must live on n variables")
    cube = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            e = L.entry(i, j)
            if not isinstance(e, Poly):
                raise PrerequisiteError("structure constants require polynomial entries")
            if not (e - e.homogeneous_component(1)).is_zero:
                raise PrerequisiteError(
                    f"entry ({i + 1},{j + 1}) = {e} is not homogeneous linear"
                )
            for k in range(n):
                exp = [0] * n
                exp[k] = 1
                cube[i][j][k] = e.terms.get(tuple(exp), Fraction(0))
    return LSACube(cube)


@dataclass(frozen=True)
class LieBracket:
    """Commutator structure constants c^i_{jk} = l^i_{j,k} - l^i_{k,j}."""

    n: int
    constants: tuple
    jacobi_ok: bool
    witnesses: tuple = ()

    def __bool__(self) -> bool:
        return self.jacobi_ok


def assoc_lie(A: LSACube) -> LieBracket:
    """Antisymmetrize the product and brute-force the Jacobi identity."""
    n = A.n
    c = [
        [[A.cube[i][j][k] - A.cube[i][k][j] for k in range(n)] for j in range(n)]
        for i in range(n)
    ]
    witnesses = []
    for a in range(n):
        for b in range(n):
            for d in range(n):
                for i in range(n):
                    s = Fraction(0)
                    for m in range(n):
                        s += c[m][a][b] * c[i][m][d]
                        s += c[m][b][d] * c[i][m][a]
                        s += c[m][d][a] * c[i][m][b]
                    if s:
                        witnesses.append(
                            f"jacobi(e{a + 1},e{b + 1},e{d + 1}) component {i + 1} = {s}"
                        )
                        if len(witnesses) >= 8:
                            return LieBracket(n, _freeze3(c), False, tuple(witnesses))
    return LieBracket(n, _freeze3(c), not witnesses, tuple(witnesses))


def _freeze3(c):
    return tuple(tuple(tuple(r) for r in plane) for plane in c)


# ---------------------------------------------------------------------------
# truncated power series
# ---------------------------------------------------------------------------


class TruncSeries:
    """A polynomial truncation of a formal power series, exact through ``cap``.

    Stored as homogeneous components of degree <= cap.  Arithmetic truncates
    products beyond the cap; *adopting* a polynomial of higher degree is an
    error (truncation of user input must be explicit, via ``truncate``).
    """

    __slots__ = ("vars", "cap", "parts")

    def __init__(self, vars: Sequence[str], cap: int, parts: dict | None = None):
        if cap < 0:
            raise DegreeCapError("degree cap must be nonnegative")
        self.vars = tuple(vars)
        self.cap = cap
        clean = {}
        for k, p in (parts or {}).items():
            if k > cap:
                raise DegreeCapError(f"component of degree {k} exceeds cap {cap}")
            if not (p - p.homogeneous_component(k)).is_zero:
                raise DimensionError(f"component keyed {k} is not homogeneous of degree {k}")
            if not p.is_zero:
                clean[k] = p
        self.parts = clean

    @classmethod
    def from_poly(cls, p: Poly, cap: int) -> "TruncSeries":
        if p.total_degree() > cap:
            raise DegreeCapError(
                f"polynomial of degree {p.total_degree()} exceeds cap {cap}; truncate explicitly"
            )
        return cls(p.vars, cap, p.homogeneous_components())

    @classmethod
    def truncate(cls, p: Poly, cap: int) -> "TruncSeries":
        return cls(p.vars, cap, p.truncate(cap).homogeneous_components())

    def to_poly(self) -> Poly:
        out = Poly.zero(self.vars)
        for p in self.parts.values():
            out = out + p
        return out

    def homogeneous(self, k: int) -> Poly:
        return self.parts.get(k, Poly.zero(self.vars))

    def _check(self, other: "TruncSeries"):
        if self.vars != other.vars or self.cap != other.cap:
            raise DimensionError("series variables and caps must agree")

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        self._check(other)
        parts = dict(self.parts)
        for k, p in other.parts.items():
            parts[k] = parts[k] + p if k in parts else p
        return TruncSeries(self.vars, self.cap, parts)

    def __neg__(self) -> "TruncSeries":
        return TruncSeries(self.vars, self.cap, {k: -p for k, p in self.parts.items()})

    def __sub__(self, other: "TruncSeries") -> "TruncSeries":
        return self + (-other)

    def __mul__(self, other: "TruncSeries") -> "TruncSeries":
        self._check(other)
        parts: dict[int, Poly] = {}
        for ka, pa in self.parts.items():
            for kb, pb in other.parts.items():
                k = ka + kb
                if k > self.cap:
                    continue
                prod = pa * pb
                parts[k] = parts[k] + prod if k in parts else prod
        return TruncSeries(self.vars, self.cap, parts)

    def compose(self, inner: Sequence["TruncSeries"]) -> "TruncSeries":
        """Substitute inner[i] for the i-th variable, truncating at the cap."""
        if len(inner) != len(self.vars):
            raise DimensionError("one inner series per variable required")
        for s in inner:
            if s.cap != self.cap:
                raise DimensionError("series variables and caps must agree")
        replacements = [s.to_poly() for s in inner]
        out = self.to_poly().subs(replacements, cap=self.cap)
        return TruncSeries.truncate(out, self.cap)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TruncSeries)
            and self.vars == other.vars
            and self.cap == other.cap
            and self.to_poly() == other.to_poly()
        )

    def __str__(self) -> str:
        return str(self.to_poly())

    def __repr__(self) -> str:
        return f"TruncSeries(cap={self.cap}, {self.to_poly()})"


# ---------------------------------------------------------------------------
# compatibility of a homogeneous term with the diagonal linear part
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompatVerdict:
    """Both characterizations of compatibility with diag(x_1..x_n).

    ``eq_route`` tests R^i_j = (x_i - x_j) dR^i_i/dx_j off the diagonal;
    ``bracket_route`` tests the polarization bracket [diag(x), R] = 0.  The
    two are equivalent, and both are always computed.
    """

    ok: bool
    eq_route: bool
    bracket_route: bool
    degree: int
    residual: tuple
    witnesses: tuple = ()

    def __bool__(self) -> bool:
        return self.ok


def _homogeneous_degree(R: OpField) -> int:
    """The common degree of all nonzero entries; errors if mixed."""
    degree = None
    for i in range(R.dim):
        for j in range(R.dim):
            e = R.entry(i, j)
            if not isinstance(e, Poly):
                raise PrerequisiteError("homogeneous polynomial entries required")
            if e.is_zero:
                continue
            comps = e.homogeneous_components()
            if len(comps) != 1:
                raise PrerequisiteError(f"entry ({i + 1},{j + 1}) = {e} is inhomogeneous")
            (k,) = comps
            if degree is None:
                degree = k
            elif degree != k:
                raise PrerequisiteError(
                    f"entries of mixed degrees {degree} and {k}; a single homogeneous term required"
                )
    if degree is None:
        raise PrerequisiteError("zero perturbation has no degree")
    return degree


def compat_check(R: OpField) -> CompatVerdict:
    """Is the homogeneous term R compatible with L_lin = diag(x_1..x_n)?"""
    n = R.dim
    degree = _homogeneous_degree(R)
    if degree < 2:
        raise PrerequisiteError("perturbation terms start at degree 2")
    vars = R.vars
    residual = []
    witnesses = []
    for i in range(n):
        row = []
        for j in range(n):
            if i == j:
                row.append(Poly.zero(vars))
                continue
            want = (Poly.var(vars, i) - Poly.var(vars, j)) * R.entry(i, i).diff(j)
            diff = R.entry(i, j) - want
            row.append(diff)
            if not diff.is_zero and len(witnesses) < 8:
                witnesses.append(
                    f"R^{i + 1}_{j + 1} - (x{i + 1} - x{j + 1})*dR^{i + 1}_{i + 1}/dx{j + 1} = {diff}"
                )
        residual.append(tuple(row))
    eq_ok = not witnesses

    lin = OpField.diagonal([Poly.var(vars, i) for i in range(n)], vars)
    bracket_ok = fn_bracket(lin, R).is_zero()
    if eq_ok != bracket_ok:
        raise CompatibilityError(
            "coordinate and bracket characterizations disagree: "
            f"componentwise {eq_ok}, bracket {bracket_ok}"
        )
    return CompatVerdict(
        ok=eq_ok,
        eq_route=eq_ok,
        bracket_route=bracket_ok,
        degree=degree,
        residual=tuple(residual),
        witnesses=tuple(witnesses),
    )


# ---------------------------------------------------------------------------
# truncated pushforward
# ---------------------------------------------------------------------------


def _coerce_map(phi, vars: Sequence[str], cap: int) -> list[Poly]:
    """Normalize a change of variables to per-component polynomials."""
    vars = tuple(vars)
    if len(phi) != len(vars):
        raise DimensionError("one map component per variable required")
    comps = []
    for c in phi:
        if isinstance(c, TruncSeries):
            if c.vars != vars:
                raise DimensionError("map variables disagree with the field's")
            p = c.to_poly()
        elif isinstance(c, Poly):
            if tuple(c.vars) != vars:
                raise DimensionError("map variables disagree with the field's")
            p = c
        else:
            p = parse_poly(str(c), vars)
        if p.total_degree() > cap:
            raise DegreeCapError(
                f"map component of degree {p.total_degree()} exceeds cap {cap}"
            )
        comps.append(p)
    return comps


def _require_near_identity(comps: list[Poly], vars: tuple[str, ...]):
    for i, p in enumerate(comps):
        low = p.homogeneous_component(0) + p.homogeneous_component(1) - Poly.var(vars, i)
        if not low.is_zero:
            raise PrerequisiteError(
                "change of variables must be the identity plus degree >= 2 terms; "
                f"component {i + 1} = {p}"
            )


def _mat_mul_trunc(A, B, cap: int):
    n = len(A)
    return [
        [
            _sum_polys([A[i][k].mul_trunc(B[k][j], cap) for k in range(n)])
            for j in range(n)
        ]
        for i in range(n)
    ]


def _sum_polys(ps):
    out = ps[0]
    for p in ps[1:]:
        out = out + p
    return out


def formal_inverse(phi, vars: Sequence[str], cap: int) -> list[Poly]:
    """Order-cap inverse of y = x + f(x): iterate x -> y - f(x)."""
    comps = _coerce_map(phi, vars, cap)
    vars = tuple(vars)
    _require_near_identity(comps, vars)
    f = [comps[i] - Poly.var(vars, i) for i in range(len(vars))]
    psi = [Poly.var(vars, i) for i in range(len(vars))]
    for _ in range(cap):
        fed = [fi.subs(psi, cap=cap) for fi in f]
        psi = [Poly.var(vars, i) - fed[i] for i in range(len(vars))]
    # sanity: phi(psi(y)) = y through the cap
    for i, c in enumerate(comps):
        if not (c.subs(psi, cap=cap) - Poly.var(vars, i)).is_zero:
            raise PrerequisiteError("change of variables is not invertible through the cap")
    return psi


def pushforward_truncated(L: OpField, phi, cap: int = DEFAULT_CAP) -> OpField:
    """Express L in the coordinates y = phi(x), exactly through degree cap.

    phi must be a near-identity polynomial map (components x_i + f_i with
    f_i of degree >= 2).  The result is the conjugation by the Jacobian of
    phi composed with the order-cap formal inverse:

        (dy/dx) L (dy/dx)^(-1) evaluated at x = phi^(-1)(y).
    """
    if not L.is_symbolic:
        raise PrerequisiteError("series pushforward requires a symbolic field")
    vars = L.vars
    comps = _coerce_map(phi, vars, cap)
    _require_near_identity(comps, vars)
    n = L.dim
    for i in range(n):
        for j in range(n):
            if not isinstance(L.entry(i, j), Poly):
                raise PrerequisiteError("series pushforward requires polynomial entries")

    jac = [[comps[i].diff(j) for j in range(n)] for i in range(n)]
    # (Id + K)^(-1) = sum_m (-K)^m, where K = jac - Id has entries of degree >= 1
    ident = [
        [Poly.const(vars, 1 if i == j else 0) for j in range(n)] for i in range(n)
    ]
    K = [[jac[i][j] - ident[i][j] for j in range(n)] for i in range(n)]
    inv = [row[:] for row in ident]
    term = [row[:] for row in ident]
    for _ in range(cap):
        term = _mat_mul_trunc([[-e for e in row] for row in K], term, cap)
        if all(e.is_zero for row in term for e in row):
            break
        inv = [[inv[i][j] + term[i][j] for j in range(n)] for i in range(n)]

    rows = [[L.entry(i, j).truncate(cap) for j in range(n)] for i in range(n)]
    conj = _mat_mul_trunc(_mat_mul_trunc(jac, rows, cap), inv, cap)
    psi = formal_inverse(comps, vars, cap)
    out = [[conj[i][j].subs(psi, cap=cap) for j in range(n)] for i in range(n)]
    return OpField(out, vars)


def linear_pushforward(L: OpField, B: Sequence[Sequence]) -> OpField:
    """Express L in the coordinates y = B x for an invertible rational B."""
    n = L.dim
    vars = L.vars
    Bq = [[Fraction(v) for v in row] for row in B]
    if len(Bq) != n or any(len(r) != n for r in Bq):
        raise DimensionError("linear change must be a square matrix of size dim")
    if any(not isinstance(e, Poly) for row in L.rows for e in row):
        raise PrerequisiteError("linear pushforward requires polynomial entries")
    Binv = _fraction_inverse(Bq)
    Brows = [[Poly.const(vars, v) for v in row] for row in Bq]
    Binvrows = [[Poly.const(vars, v) for v in row] for row in Binv]
    conj = _matrix.mat_mul(_matrix.mat_mul(Brows, [list(r) for r in L.rows]), Binvrows)
    # x = B^(-1) y, substituted into every entry
    xw = [
        _sum_polys([Poly.var(vars, j) * Binv[i][j] for j in range(n)])
        for i in range(n)
    ]
    out = [[e.subs(xw) for e in row] for row in conj]
    return OpField(out, vars)


def _fraction_inverse(B: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(B)
    aug = [list(row) + [Fraction(1 if i == j else 0) for j in range(n)] for i, row in enumerate(B)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise PrerequisiteError("linear change of variables is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


# ---------------------------------------------------------------------------
# killing one homogeneous term, and the full iteration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KillStep:
    """One degree-k stage: the substitution y_i = x_i + shift_i and its result."""

    degree: int
    shift: tuple
    field: OpField


def kill_term(L: OpField, k: int, cap: int = DEFAULT_CAP) -> KillStep:
    """Remove the degree-k homogeneous term of L = diag(x) + ... + R_k + ...

    Requires compat_check on R_k; the substitution is the unique
    y_i = x_i + R^i_i(x).  Degrees below k are untouched and the degree-k
    part of the result is exactly zero.
    """
    if k < 2 or k > cap:
        raise DegreeCapError(f"killable degrees are 2..{cap}")
    n = L.dim
    vars = L.vars
    for i in range(n):
        for j in range(n):
            e = L.entry(i, j)
            low = _sum_polys([e.homogeneous_component(d) for d in range(k)])
            want = Poly.var(vars, i) if i == j else Poly.zero(vars)
            if not (low - want).is_zero:
                raise PrerequisiteError(
                    f"below degree {k} the field must equal diag(x); entry "
                    f"({i + 1},{j + 1}) starts as {low}"
                )
    R = OpField(
        [[L.entry(i, j).homogeneous_component(k) for j in range(n)] for i in range(n)],
        vars,
    )
    if all(e.is_zero for row in R.rows for e in row):
        return KillStep(k, tuple(Poly.zero(vars) for _ in range(n)), L)
    verdict = compat_check(R)
    if not verdict:
        raise CompatibilityError(
            f"degree-{k} term is not compatible with the diagonal part: "
            + "; ".join(verdict.witnesses)
        )
    shift = tuple(R.entry(i, i) for i in range(n))
    phi = [Poly.var(vars, i) + shift[i] for i in range(n)]
    return KillStep(k, shift, pushforward_truncated(L, phi, cap))


@dataclass(frozen=True)
class Linearization:
    """Transcript of the degree-by-degree linearization.

    ``linear_change`` is the rational matrix B normalizing the linear part to
    diag(x); ``steps`` records each kill stage; ``substitution`` is the
    composition of the stage maps (identity linear part), so that pushing the
    B-normalized field forward along it yields diag(x) through the cap.
    """

    ok: bool
    cap: int
    linear_change: tuple
    steps: tuple
    substitution: tuple
    field: OpField

    def __bool__(self) -> bool:
        return self.ok


def torsion_vanishes_through(L: OpField, cap: int) -> bool:
    """Does every torsion component vanish through the given degree?"""
    N = nijenhuis_tensor(L)
    n = L.dim
    for i in range(n):
        for j in range(n):
            for k in range(j + 1, n):
                c = N.comps[i][j][k]
                if isinstance(c, Poly) and not c.truncate(cap).is_zero:
                    return False
                if not isinstance(c, Poly) and not c.is_zero:
                    return False
    return True


def formal_linearize(L: OpField, cap: int = DEFAULT_CAP) -> Linearization:
    """Linearize a Nijenhuis perturbation of a diagonal linear operator.

    Preconditions: polynomial entries, L(0) = 0, and a diagonal linear part
    diag(c_1 x_1, ..., c_n x_n) with all c_i nonzero (the recorded linear
    change y = B x rescales it to diag(x_1..x_n)).  Degree k = 2..cap terms
    are then killed in order; the result is diag(x) through the cap, with the
    full transcript returned.  An input whose torsion does not vanish through
    the cap cannot pass every stage: it raises CompatibilityError at the first
    bad degree, with the componentwise residual as a diagnostic.
    """
    n = L.dim
    vars = L.vars
    if not L.is_symbolic:
        raise PrerequisiteError("linearization requires a symbolic field")
    for i in range(n):
        for j in range(n):
            e = L.entry(i, j)
            if not isinstance(e, Poly):
                raise PrerequisiteError("linearization requires polynomial entries")
            if not e.homogeneous_component(0).is_zero:
                raise PrerequisiteError("the operator must vanish at the origin")
            if e.total_degree() > cap:
                raise DegreeCapError(
                    f"entry ({i + 1},{j + 1}) has degree {e.total_degree()} > cap {cap}; "
                    "truncate explicitly"
                )

    # normalize the linear part to diag(x_1..x_n)
    B = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            lin = L.entry(i, j).homogeneous_component(1)
            if i == j:
                continue
            if not lin.is_zero:
                raise PrerequisiteError(
                    "linear part must be diagonal; general linear parts are not supported"
                )
    for i in range(n):
        lin = L.entry(i, i).homogeneous_component(1)
        for k in range(n):
            e = [0] * n
            e[k] = 1
            B[i][k] = lin.terms.get(tuple(e), Fraction(0))
        if any(B[i][k] for k in range(n) if k != i) or not B[i][i]:
            raise PrerequisiteError(
                f"diagonal linear part must be c_i * x_i with c_i != 0; "
                f"got {lin} in row {i + 1}"
            )

    current = linear_pushforward(L, B)
    steps = []
    subst = [Poly.var(vars, i) for i in range(n)]
    for k in range(2, cap + 1):
        step = kill_term(current, k, cap)
        current = step.field
        if any(not s.is_zero for s in step.shift):
            steps.append(step)
            phi = [Poly.var(vars, i) + step.shift[i] for i in range(n)]
            subst = [p.subs(subst, cap=cap) for p in phi]

    diag = OpField.diagonal([Poly.var(vars, i) for i in range(n)], vars)
    ok = all(
        (current.entry(i, j) - diag.entry(i, j)).truncate(cap).is_zero
        for i in range(n)
        for j in range(n)
    )
    return Linearization(
        ok=ok,
        cap=cap,
        linear_change=tuple(tuple(row) for row in B),
        steps=tuple(steps),
        substitution=tuple(subst),
        field=current,
    )
