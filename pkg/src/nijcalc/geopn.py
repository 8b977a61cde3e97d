"""Phase-space symbolic calculus: canonical Poisson brackets, geodesic
compatibility of a metric with an operator field, the g_f family of
compatible metrics, and Poisson-Nijenhuis pair verification.

Conventions, fixed once here and pinned by tests:

  * Phase space over base coordinates x_1..x_n carries the variable tuple
    (x_1..x_n, p_1..p_n); ``PhasePoly`` wraps an exact polynomial over it
    and tracks momentum degree per term.
  * The canonical bracket is {F, G} = sum_i (dF/dp_i dG/dx_i
    - dF/dx_i dG/dp_i), so {p_i, x_j} = delta_ij.
  * Geodesic compatibility of a metric g (stored contravariantly) with an
    operator field L means three things at once: L g^{-1} is symmetric,
    {H, F} = 2 H ell, and L is Nijenhuis, where H = 1/2 g^{ij} p_i p_j,
    F = L^i_k g^{kj} p_i p_j, and ell = g^{ij} d_j(tr L) p_i is the
    momentum form of the metric-raised trace differential.  (Raising the
    differential is what makes the identity hold under this bracket sign;
    the unraised reading fails already for the companion pair, see tests.)
  * A two-form acts on an operator field by (omega L)_{ij} = omega_ik L^k_j;
    a symplectic form is compatible with L when omega L is again a
    two-form (skew) and is closed.

Polynomial metrics are checked symbolically.  Rational metrics (the
Levi-Civita family, the g_f construction) are checked at seeded sample
points off their singular loci; evaluation is exact rational there, so the
reported residual of a true pair is zero, not merely small.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations
from typing import Sequence, Union

from . import _matrix
from .canon import gen_companion
from .errors import (
    DimensionError,
    PrerequisiteError,
    ZeroDivisionPolyError,
)
from .sampling import DEFAULT_SAMPLES, DEFAULT_SEED, sample_points
from .scalarfield import Poly, RatFn, parse_poly, parse_univariate
from .tensorcore import TOL_ALGEBRAIC, NijVerdict, OpField, is_nijenhuis

__all__ = [
    "PhasePoly",
    "Metric",
    "TwoForm",
    "phase_vars",
    "poisson_bracket",
    "geodesic_phase_functions",
    "GeodesicVerdict",
    "geodesic_compat_check",
    "gf_construct",
    "PNVerdict",
    "pn_check",
    "recursion_operator",
    "exterior_derivative",
    "canonical_omega",
    "companion_metric_pair",
    "levi_civita_pair",
    "as_pair",
    "gz_pair",
]


def phase_vars(n: int) -> tuple[str, ...]:
    """The phase variable tuple (x1..xn, p1..pn)."""
    if n < 1:
        raise DimensionError("phase space needs a positive base dimension")
    return tuple(f"x{i}" for i in range(1, n + 1)) + tuple(
        f"p{i}" for i in range(1, n + 1)
    )


class PhasePoly:
    """Exact polynomial on phase space over base dimension n.

    The underlying ``Poly`` lives on ``phase_vars(n)``; the last n slots are
    the momenta.  Instances are immutable.
    """

    __slots__ = ("n", "poly")
    __hash__ = None

    def __init__(self, n: int, poly: Poly):
        if tuple(poly.vars) != phase_vars(n):
            raise DimensionError(
                f"phase polynomial over base dim {n} must use vars {phase_vars(n)}"
            )
        self.n = n
        self.poly = poly

    # ---- constructors ----------------------------------------------------

    @classmethod
    def parse(cls, n: int, text: str) -> "PhasePoly":
        return cls(n, parse_poly(text, phase_vars(n)))

    @classmethod
    def zero(cls, n: int) -> "PhasePoly":
        return cls(n, Poly.zero(phase_vars(n)))

    @classmethod
    def const(cls, n: int, c) -> "PhasePoly":
        return cls(n, Poly.const(phase_vars(n), c))

    @classmethod
    def coordinate(cls, n: int, name: str) -> "PhasePoly":
        return cls(n, Poly.var(phase_vars(n), name))

    @classmethod
    def from_base(cls, p: Poly) -> "PhasePoly":
        """Lift a base polynomial (n variables, by position) to phase space."""
        n = len(p.vars)
        return cls(n, p.rename(phase_vars(n), list(range(n))))

    # ---- views -------------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.poly.is_zero

    def momentum_degree(self) -> int:
        """Highest total degree in the momenta; -1 for the zero polynomial."""
        if self.poly.is_zero:
            return -1
        return max(sum(e[self.n :]) for e in self.poly.terms)

    def momentum_components(self) -> dict[int, "PhasePoly"]:
        """Split by total momentum degree; the parts sum back to self."""
        buckets: dict[int, dict] = {}
        for e, c in self.poly.terms.items():
            buckets.setdefault(sum(e[self.n :]), {})[e] = c
        return {
            k: PhasePoly(self.n, Poly(self.poly.vars, t))
            for k, t in sorted(buckets.items())
        }

    # ---- arithmetic ----------------------------------------------------------

    def _coerce(self, other) -> "PhasePoly":
        if isinstance(other, PhasePoly):
            if other.n != self.n:
                raise DimensionError("phase polynomials over different base dims")
            return other
        if isinstance(other, (int, Fraction)):
            return PhasePoly.const(self.n, other)
        raise TypeError(f"cannot combine PhasePoly with {type(other).__name__}")

    def __add__(self, other):
        return PhasePoly(self.n, self.poly + self._coerce(other).poly)

    __radd__ = __add__

    def __neg__(self):
        return PhasePoly(self.n, -self.poly)

    def __sub__(self, other):
        return PhasePoly(self.n, self.poly - self._coerce(other).poly)

    def __rsub__(self, other):
        return PhasePoly(self.n, self._coerce(other).poly - self.poly)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return PhasePoly(self.n, self.poly * other)
        return PhasePoly(self.n, self.poly * self._coerce(other).poly)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (PhasePoly, int, Fraction)):
            return self.poly == self._coerce(other).poly
        return NotImplemented

    # ---- calculus ---------------------------------------------------------------

    def diff_x(self, i: int) -> "PhasePoly":
        """d/dx_{i+1} (0-based index into the base coordinates)."""
        if not 0 <= i < self.n:
            raise DimensionError(f"base index {i} out of range for dim {self.n}")
        return PhasePoly(self.n, self.poly.diff(i))

    def diff_p(self, i: int) -> "PhasePoly":
        """d/dp_{i+1} (0-based index into the momenta)."""
        if not 0 <= i < self.n:
            raise DimensionError(f"momentum index {i} out of range for dim {self.n}")
        return PhasePoly(self.n, self.poly.diff(self.n + i))

    def __str__(self):
        return str(self.poly)

    def __repr__(self):
        return f"PhasePoly(n={self.n}, {str(self.poly)!r})"


def poisson_bracket(F: PhasePoly, G: PhasePoly) -> PhasePoly:
    """{F, G} = sum_i (dF/dp_i dG/dx_i - dF/dx_i dG/dp_i), exact."""
    if not isinstance(F, PhasePoly) or not isinstance(G, PhasePoly):
        raise TypeError("poisson_bracket takes two PhasePoly operands")
    if F.n != G.n:
        raise DimensionError(f"base dims disagree: {F.n} vs {G.n}")
    n = F.n
    acc = Poly.zero(F.poly.vars)
    for i in range(n):
        acc = (
            acc
            + F.poly.diff(n + i) * G.poly.diff(i)
            - F.poly.diff(i) * G.poly.diff(n + i)
        )
    return PhasePoly(n, acc)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def _coerce_entry(e, vars) -> Union[Poly, RatFn]:
    if isinstance(e, str):
        return parse_poly(e, vars)
    if isinstance(e, (int, Fraction)):
        return Poly.const(vars, e)
    if isinstance(e, RatFn):
        if e.vars != tuple(vars):
            raise DimensionError("entry variables disagree with the declared tuple")
        return e.as_poly() if e.is_poly() else e
    if isinstance(e, Poly):
        if tuple(e.vars) != tuple(vars):
            raise DimensionError("entry variables disagree with the declared tuple")
        return e
    raise TypeError(f"cannot use {type(e).__name__} as a matrix entry")


class Metric:
    """A (pseudo-)metric stored through its contravariant matrix g^{ij}.

    The inverse matrix is the primary object: it is what the Hamiltonian,
    the momentum quadratic F, and the raised trace differential need, and
    it is what the anti-diagonal companion metric supplies directly.  The
    covariant matrix is available on demand as rational functions.

    Entries may be Poly or RatFn; symmetry and nondegeneracy (determinant
    not identically zero) are enforced at construction.
    """

    __slots__ = ("dim", "vars", "inv")

    def __init__(self, inv_rows, vars: Sequence[str]):
        vars = tuple(vars)
        rows = tuple(tuple(_coerce_entry(e, vars) for e in row) for row in inv_rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DimensionError("metric matrix must be square")
        if len(vars) != n:
            raise DimensionError(
                f"{n}x{n} metric needs exactly {n} coordinates, got {len(vars)}"
            )
        for i in range(n):
            for j in range(i, n):
                if not (rows[i][j] == rows[j][i]):
                    raise PrerequisiteError(
                        f"contravariant metric is not symmetric: "
                        f"g[{i + 1},{j + 1}] = {rows[i][j]}, "
                        f"g[{j + 1},{i + 1}] = {rows[j][i]}"
                    )
        det = _matrix.mat_det(rows)
        if det.is_zero:
            raise PrerequisiteError("contravariant metric is degenerate (det == 0)")
        self.dim = n
        self.vars = vars
        self.inv = rows

    def entry(self, i: int, j: int):
        return self.inv[i][j]

    @property
    def is_polynomial(self) -> bool:
        return all(isinstance(e, Poly) for row in self.inv for e in row)

    def covariant(self) -> list[list[RatFn]]:
        """The covariant matrix g_ij = adj(g^{-1}) / det(g^{-1})."""
        one = Poly.const(self.vars, 1)
        if self.dim == 1:
            return [[RatFn.coerce(one, self.vars) / self.inv[0][0]]]
        det = _matrix.mat_det(self.inv)
        adj = _matrix.mat_adjugate(self.inv)
        return [[RatFn.coerce(e, self.vars) / det for e in row] for row in adj]

    def denominators(self) -> list[Poly]:
        """Non-constant denominators of rational entries (singular loci)."""
        out = []
        for row in self.inv:
            for e in row:
                if isinstance(e, RatFn) and not e.den.is_constant():
                    out.append(e.den)
        return out

    def to_strings(self) -> list[list[str]]:
        return [[str(e) for e in row] for row in self.inv]

    def __repr__(self):
        return f"Metric(dim={self.dim}, vars={self.vars})"


# ---------------------------------------------------------------------------
# geodesic compatibility
# ---------------------------------------------------------------------------


def _check_same_chart(g: Metric, L: OpField):
    if g.vars != L.vars or g.dim != L.dim:
        raise DimensionError(
            f"metric and operator disagree: {g.dim} vars {g.vars} "
            f"vs {L.dim} vars {L.vars}"
        )


def geodesic_phase_functions(
    g: Metric, L: OpField
) -> tuple[PhasePoly, PhasePoly, PhasePoly]:
    """The triple (H, F, ell) of the compatibility identity {H, F} = 2 H ell.

    H = 1/2 g^{ij} p_i p_j,  F = L^i_k g^{kj} p_i p_j,
    ell = g^{ij} d_j(tr L) p_i.  Requires polynomial data.
    """
    _check_same_chart(g, L)
    n = g.dim
    if not g.is_polynomial:
        raise PrerequisiteError(
            "phase functions need a polynomial metric; rational metrics are "
            "handled by sampling inside geodesic_compat_check"
        )
    if not all(isinstance(e, Poly) for row in L.rows for e in row):
        raise PrerequisiteError("phase functions need a polynomial operator field")
    pv = phase_vars(n)
    lift = list(range(n))
    G = [[g.inv[i][j].rename(pv, lift) for j in range(n)] for i in range(n)]
    Lp = [[L.rows[i][j].rename(pv, lift) for j in range(n)] for i in range(n)]
    M = _matrix.mat_mul(Lp, G)
    p = [Poly.var(pv, n + i) for i in range(n)]
    H = Poly.zero(pv)
    F = Poly.zero(pv)
    for i in range(n):
        for j in range(n):
            H = H + G[i][j] * p[i] * p[j] * Fraction(1, 2)
            F = F + M[i][j] * p[i] * p[j]
    dtr = _matrix.mat_trace(Lp).gradient()[:n]
    ell = Poly.zero(pv)
    for i in range(n):
        for j in range(n):
            ell = ell + G[i][j] * dtr[j] * p[i]
    return PhasePoly(n, H), PhasePoly(n, F), PhasePoly(n, ell)


@dataclass
class GeodesicVerdict:
    """Outcome of the three-part geodesic compatibility check."""

    selfadjoint_ok: bool
    compat_ok: bool
    nijenhuis_ok: bool
    mode: str
    residual: PhasePoly | None = None
    max_residual: float | None = None
    witnesses: list[str] = field(default_factory=list)
    samples: int = 0
    seed: int | None = None

    @property
    def ok(self) -> bool:
        return bool(self.selfadjoint_ok and self.compat_ok and self.nijenhuis_ok)

    def __bool__(self):
        return self.ok


def _selfadjoint_witnesses(M, n) -> list[str]:
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            dev = M[i][j] - M[j][i]
            if not dev.is_zero:
                out.append(f"(L g^-1)[{i + 1},{j + 1}] - [{j + 1},{i + 1}] = {dev}")
    return out


def _eval_matrix_jets(rows, pt):
    n = len(rows)
    vals = [[None] * n for _ in range(n)]
    parts = [[[None] * n for _ in range(n)] for _ in range(len(pt))]
    for i in range(n):
        for j in range(n):
            jet = rows[i][j].eval_jet(pt)
            vals[i][j] = jet.value
            for s in range(len(pt)):
                parts[s][i][j] = jet.partials[s]
    return vals, parts


def _numeric_residuals_at(g: Metric, L: OpField, pt) -> tuple[Fraction, Fraction]:
    """Exact (bracket residual, selfadjointness deviation) at one point.

    The cubic-in-momenta residual {H,F} - 2 H ell has coefficients built
    from pointwise values and first partials of g^{-1} and L; its
    symmetrized coefficient tensor is returned by sup-norm.
    """
    n = g.dim
    pt = [Fraction(v) for v in pt]
    G, dG = _eval_matrix_jets(g.inv, pt)
    Lv, dL = _eval_matrix_jets(L.rows, pt)
    M = _matrix.mat_mul(Lv, G)
    dM = [
        _matrix.mat_add(_matrix.mat_mul(dL[s], G), _matrix.mat_mul(Lv, dG[s]))
        for s in range(n)
    ]
    dtr = [sum(dL[s][i][i] for i in range(n)) for s in range(n)]
    r = [sum(G[i][j] * dtr[j] for j in range(n)) for i in range(n)]
    T = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for j in range(n):
        for i in range(n):
            for k in range(n):
                # {H,F} term, momentum slots (j, i, k)
                T[j][i][k] += sum(G[s][j] * dM[s][i][k] for s in range(n))
                # -dH/dx dF/dp term and -2 H ell, momentum slots (i, j, k)
                T[i][j][k] -= Fraction(1, 2) * sum(
                    dG[s][i][j] * (M[s][k] + M[k][s]) for s in range(n)
                ) + G[i][j] * r[k]
    worst = Fraction(0)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                coeff = sum(T[a][b][c] for a, b, c in permutations((i, j, k)))
                worst = max(worst, abs(coeff) / 6)
    dev = max(
        (abs(M[i][j] - M[j][i]) for i in range(n) for j in range(n)),
        default=Fraction(0),
    )
    return worst, dev


def geodesic_compat_check(
    g: Metric,
    L: OpField,
    mode: str = "auto",
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    tol: float = TOL_ALGEBRAIC,
) -> GeodesicVerdict:
    """Decide geodesic compatibility of (g, L).

    Three sub-verdicts: (i) L g^{-1} symmetric, (ii) {H, F} - 2 H ell
    vanishes, (iii) L is Nijenhuis.  Polynomial data is checked as an exact
    identity; rational metrics fall back to exact evaluation at seeded
    sample points clear of every entry denominator.
    """
    _check_same_chart(g, L)
    n = g.dim
    symbolic_ready = g.is_polynomial and all(
        isinstance(e, Poly) for row in L.rows for e in row
    )
    if mode == "auto":
        mode = "symbolic" if symbolic_ready else "numeric"
    if mode == "symbolic":
        if not symbolic_ready:
            raise PrerequisiteError(
                "symbolic mode needs polynomial g^{-1} and L; use numeric mode"
            )
        H, F, ell = geodesic_phase_functions(g, L)
        pv = phase_vars(n)
        lift = list(range(n))
        G = [[g.inv[i][j].rename(pv, lift) for j in range(n)] for i in range(n)]
        Lp = [[L.rows[i][j].rename(pv, lift) for j in range(n)] for i in range(n)]
        M = _matrix.mat_mul(Lp, G)
        sa_wit = _selfadjoint_witnesses(M, n)
        wit = list(sa_wit)
        residual = poisson_bracket(H, F) - H * ell * 2
        nij = is_nijenhuis(L, mode="symbolic")
        if not residual.is_zero:
            wit.append(f"{{H,F}} - 2 H ell = {residual}")
        wit.extend(nij.witnesses)
        return GeodesicVerdict(
            selfadjoint_ok=not sa_wit,
            compat_ok=residual.is_zero,
            nijenhuis_ok=nij.ok,
            mode="symbolic",
            residual=residual,
            witnesses=wit,
        )
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    loci = g.denominators() + L.denominators()
    pts = sample_points(n, samples=samples, seed=seed, avoid=loci)
    worst = Fraction(0)
    worst_dev = Fraction(0)
    for pt in pts:
        w, dev = _numeric_residuals_at(g, L, pt)
        worst = max(worst, w)
        worst_dev = max(worst_dev, dev)
    nij = is_nijenhuis(L, mode="symbolic" if L.is_symbolic else "numeric", seed=seed)
    wit = list(nij.witnesses)
    if worst_dev >= tol:
        wit.append(f"max |(L g^-1) - (L g^-1)^T| = {float(worst_dev):.3e}")
    if worst >= tol:
        wit.append(f"max |{{H,F}} - 2 H ell| coefficient = {float(worst):.3e}")
    return GeodesicVerdict(
        selfadjoint_ok=float(worst_dev) < tol,
        compat_ok=float(worst) < tol,
        nijenhuis_ok=nij.ok,
        mode="numeric",
        max_residual=float(worst),
        witnesses=wit,
        samples=len(pts),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# the g_f family
# ---------------------------------------------------------------------------


def _univariate_coeffs(f) -> list[Fraction]:
    """Coefficients of a univariate polynomial, ascending, as Fractions."""
    if isinstance(f, str):
        coeffs = parse_univariate(f, "t", ())
        return [c.constant_value() for c in coeffs]
    if isinstance(f, Poly):
        used = f.support_vars()
        if len(used) > 1:
            raise DimensionError("f must be univariate")
        i = used.pop() if used else 0
        out = [Fraction(0)] * (max(f.degree_in(i), 0) + 1)
        for e, c in f.terms.items():
            out[e[i]] += c
        return out
    if isinstance(f, Sequence):
        return [Fraction(c) for c in f]
    raise TypeError(f"cannot read {type(f).__name__} as a univariate polynomial")


def gf_construct(g: Metric, L: OpField, f) -> Metric:
    """The metric g_f with covariant form g f(L), stored contravariantly.

    (g_f)^{-1} = f(L)^{-1} g^{-1}; requires det f(L) to be a nonzero field.
    ``f`` may be a univariate Poly, an expression string in ``t``, or a
    coefficient sequence (ascending).
    """
    _check_same_chart(g, L)
    n = g.dim
    coeffs = _univariate_coeffs(f)
    M = OpField.zero(L.vars)
    for c in reversed(coeffs):
        M = (M @ L).shift(c)
    det = _matrix.mat_det(M.rows)
    if det.is_zero:
        raise ZeroDivisionPolyError(
            "f(L) is singular as a field (det identically zero); "
            "f shares a factor with the characteristic polynomial"
        )
    if n == 1:
        inv_f = [[RatFn.coerce(g.inv[0][0], g.vars) / M.rows[0][0]]]
    else:
        adj = _matrix.mat_adjugate(M.rows)
        finv = [[RatFn.coerce(e, g.vars) / det for e in row] for row in adj]
        inv_f = _matrix.mat_mul(finv, g.inv)
    out = []
    for row in inv_f:
        cleaned = []
        for e in row:
            if isinstance(e, RatFn) and e.is_poly():
                e = e.as_poly()
            cleaned.append(e)
        out.append(cleaned)
    return Metric(out, g.vars)


# ---------------------------------------------------------------------------
# two-forms and Poisson-Nijenhuis pairs
# ---------------------------------------------------------------------------


class TwoForm:
    """An antisymmetric matrix of scalar fields tau_ij over one chart."""

    __slots__ = ("dim", "vars", "rows")

    def __init__(self, rows, vars: Sequence[str]):
        vars = tuple(vars)
        rows = tuple(tuple(_coerce_entry(e, vars) for e in row) for row in rows)
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise DimensionError("two-form matrix must be square")
        if len(vars) != n:
            raise DimensionError(
                f"{n}x{n} two-form needs exactly {n} coordinates, got {len(vars)}"
            )
        for i in range(n):
            for j in range(i, n):
                if not (rows[i][j] == -rows[j][i] if i != j else rows[i][j].is_zero):
                    raise PrerequisiteError(
                        f"two-form is not antisymmetric at [{i + 1},{j + 1}]"
                    )
        self.dim = n
        self.vars = vars
        self.rows = rows

    def entry(self, i: int, j: int):
        return self.rows[i][j]

    def times(self, L: OpField) -> "TwoForm":
        """(tau L)_{ij} = tau_{ik} L^k_j, when the result is again skew."""
        prod = self._raw_times(L)
        return TwoForm(prod, self.vars)

    def _raw_times(self, L: OpField):
        if self.vars != L.vars or self.dim != L.dim:
            raise DimensionError("two-form and operator disagree on the chart")
        return _matrix.mat_mul(self.rows, L.rows)

    def to_strings(self) -> list[list[str]]:
        return [[str(e) for e in row] for row in self.rows]

    def __repr__(self):
        return f"TwoForm(dim={self.dim}, vars={self.vars})"


def exterior_derivative(tau: TwoForm) -> dict[tuple[int, int, int], object]:
    """Components (d tau)_{ijk} = d_i tau_jk + d_j tau_ki + d_k tau_ij on
    strictly increasing index triples (0-based); full antisymmetry extends
    them to all index orders."""
    rows = tau.rows
    out = {}
    for i in range(tau.dim):
        for j in range(i + 1, tau.dim):
            for k in range(j + 1, tau.dim):
                out[(i, j, k)] = (
                    rows[j][k].diff(i) + rows[k][i].diff(j) + rows[i][j].diff(k)
                )
    return out


def canonical_omega(n: int) -> TwoForm:
    """The canonical symplectic form sum_i dx_i ^ dp_i on phase_vars(n)."""
    pv = phase_vars(n)
    rows = [[Poly.zero(pv) for _ in range(2 * n)] for _ in range(2 * n)]
    for i in range(n):
        rows[i][n + i] = Poly.const(pv, 1)
        rows[n + i][i] = Poly.const(pv, -1)
    return TwoForm(rows, pv)


@dataclass
class PNVerdict:
    """Outcome of the four-part Poisson-Nijenhuis pair check.

    ``closed_ok`` is None when the product form failed skewness, since
    closedness of a non-form is not a meaningful question.
    """

    omega_ok: bool
    skew_ok: bool
    closed_ok: bool | None
    nijenhuis_ok: bool
    witnesses: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(self.omega_ok and self.skew_ok and self.closed_ok and self.nijenhuis_ok)

    def __bool__(self):
        return self.ok


def pn_check(omega: TwoForm, L: OpField) -> PNVerdict:
    """Check that (omega, L) is a compatible symplectic/Nijenhuis pair.

    Four sub-verdicts: omega is a symplectic form (skew by construction,
    closed, nondegenerate); omega L is skew; omega L is closed; L is
    Nijenhuis.
    """
    if omega.dim % 2:
        raise DimensionError("symplectic forms need even dimension")
    wit = []
    omega_ok = True
    for (i, j, k), c in exterior_derivative(omega).items():
        if not c.is_zero:
            omega_ok = False
            wit.append(f"(d omega)[{i + 1},{j + 1},{k + 1}] = {c}")
    if _matrix.mat_det(omega.rows).is_zero:
        omega_ok = False
        wit.append("det omega == 0")
    prod = omega._raw_times(L)
    n = omega.dim
    skew_wit = []
    for i in range(n):
        for j in range(i, n):
            dev = prod[i][j] + prod[j][i]
            if not dev.is_zero:
                skew_wit.append(
                    f"(omega L)[{i + 1},{j + 1}] + (omega L)[{j + 1},{i + 1}] = {dev}"
                )
    skew_ok = not skew_wit
    wit.extend(skew_wit[:8])
    closed_ok = None
    if skew_ok:
        closed_ok = True
        for (i, j, k), c in exterior_derivative(TwoForm(prod, omega.vars)).items():
            if not c.is_zero:
                closed_ok = False
                wit.append(f"(d omega L)[{i + 1},{j + 1},{k + 1}] = {c}")
    nij = is_nijenhuis(L, mode="symbolic")
    wit.extend(nij.witnesses)
    return PNVerdict(
        omega_ok=omega_ok,
        skew_ok=skew_ok,
        closed_ok=closed_ok,
        nijenhuis_ok=nij.ok,
        witnesses=wit,
    )


def recursion_operator(omega: TwoForm, omega_tilde: TwoForm) -> OpField:
    """The unique L with omega_tilde = omega L, i.e. L = omega^{-1} omega_tilde.

    Entries that come out polynomial are demoted to Poly; a genuinely
    rational recursion operator keeps RatFn entries.
    """
    if omega.vars != omega_tilde.vars or omega.dim != omega_tilde.dim:
        raise DimensionError("the two forms disagree on the chart")
    det = _matrix.mat_det(omega.rows)
    if det.is_zero:
        raise ZeroDivisionPolyError("degenerate form has no recursion operator")
    adj = _matrix.mat_adjugate(omega.rows)
    inv = [[RatFn.coerce(e, omega.vars) / det for e in row] for row in adj]
    rows = _matrix.mat_mul(inv, omega_tilde.rows)
    out = []
    for row in rows:
        cleaned = []
        for e in row:
            if isinstance(e, RatFn) and e.is_poly():
                e = e.as_poly()
            cleaned.append(e)
        out.append(cleaned)
    return OpField(out, omega.vars)


# ---------------------------------------------------------------------------
# named pairs
# ---------------------------------------------------------------------------


def companion_metric_pair(n: int, prefix: str = "x") -> tuple[Metric, OpField]:
    """The companion operator with its anti-diagonal compatible metric.

    g^{ij} is 0 above the anti-diagonal (i + j <= n), -1 on it, and
    x_{i+j-n-1} below; L has first column (x_1..x_n) and superdiagonal ones.
    """
    L = gen_companion(n, prefix)
    vars = L.vars
    rows = []
    for i in range(1, n + 1):
        row = []
        for j in range(1, n + 1):
            s = i + j
            if s <= n:
                row.append(Poly.zero(vars))
            elif s == n + 1:
                row.append(Poly.const(vars, -1))
            else:
                row.append(Poly.var(vars, s - n - 2))
        rows.append(row)
    return Metric(rows, vars), L


def levi_civita_pair(n: int, prefix: str = "x") -> tuple[Metric, OpField]:
    """diag(x_1..x_n) with the separable metric g_ii = prod_{j != i}(x_i - x_j)
    (all signs +1), stored contravariantly as 1 / prod."""
    if n < 2:
        raise DimensionError("the separable family needs n >= 2")
    vars = tuple(f"{prefix}{i}" for i in range(1, n + 1))
    one = Poly.const(vars, 1)
    zero = Poly.zero(vars)
    rows = []
    for i in range(n):
        prod = one
        for j in range(n):
            if j != i:
                prod = prod * (Poly.var(vars, i) - Poly.var(vars, j))
        rows.append([RatFn(one, prod) if k == i else zero for k in range(n)])
    L = OpField.diagonal([Poly.var(vars, i) for i in range(n)], vars)
    return Metric(rows, vars), L


def as_pair(n: int) -> tuple[TwoForm, OpField]:
    """The canonical form with the block operator [[A, 0], [S, A^t]]:
    A has first column (-x_1..-x_n) and superdiagonal ones, S is the skew
    matrix with first row (0, -p_2..-p_n)."""
    if n < 1:
        raise DimensionError("block pair needs n >= 1")
    pv = phase_vars(n)
    zero = Poly.zero(pv)
    rows = [[zero for _ in range(2 * n)] for _ in range(2 * n)]
    A = [[zero for _ in range(n)] for _ in range(n)]
    for i in range(n):
        A[i][0] = -Poly.var(pv, i)
        if i + 1 < n:
            A[i][i + 1] = Poly.const(pv, 1)
    for i in range(n):
        for j in range(n):
            rows[i][j] = A[i][j]
            rows[n + j][n + i] = A[i][j]
    for j in range(1, n):
        rows[n][j] = -Poly.var(pv, n + j)
        rows[n + j][0] = Poly.var(pv, n + j)
    return canonical_omega(n), OpField(rows, pv)


def gz_pair(n: int) -> tuple[TwoForm, OpField]:
    """The semisimple model: canonical omega with
    L = diag(x_1..x_n, x_1..x_n), every eigenvalue of multiplicity two."""
    if n < 1:
        raise DimensionError("diagonal pair needs n >= 1")
    pv = phase_vars(n)
    diag = [Poly.var(pv, i % n) for i in list(range(n)) + list(range(n))]
    return canonical_omega(n), OpField.diagonal(diag, pv)
