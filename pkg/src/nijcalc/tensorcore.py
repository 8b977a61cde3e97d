"""Operator fields and the Nijenhuis torsion calculus.

An ``OpField`` is a field of (1,1)-tensors on a coordinate patch: a square
matrix of scalar fields.  The module computes the Nijenhuis tensor

    N^i_jk = L^l_j d_l L^i_k - L^l_k d_l L^i_j - L^i_l d_j L^l_k + L^i_l d_k L^l_j

symbolically (exact zero test) or numerically at sample points (jets), the
polarization bracket of two operator fields, the induced map on 1-forms, the
quotient well-posedness test for adapted block triangular fields, the kernel
bracket property, and the pointwise algebraic classification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _matrix
from .errors import (
    AmbiguousClusterError,
    BackendError,
    DimensionError,
    RankError,
)
from .sampling import DEFAULT_BOX, DEFAULT_SAMPLES, DEFAULT_SEED, sample_points
from .scalarfield import JetRule, Poly, RatFn, is_symbolic, parse_poly

TOL_ALGEBRAIC = 1e-9
TOL_FINITE_DIFF = 1e-5
FD_STEP = 1e-4
RANK_GAP = 1e6
CLUSTER_TOL = 1e-6


class OpField:
    """Square matrix of scalar fields over one shared variable tuple.

    Backend homogeneity is enforced: either every entry is symbolic
    (Poly/RatFn) or every entry is an opaque JetRule.
    """

    __slots__ = ("dim", "vars", "rows")

    def __init__(self, rows, vars: Sequence[str]):
        self.vars = tuple(vars)
        self.rows = tuple(tuple(row) for row in rows)
        self.dim = len(self.rows)
        if any(len(r) != self.dim for r in self.rows):
            raise DimensionError("operator field must be square")
        kinds = {is_symbolic(e) for row in self.rows for e in row}
        if len(kinds) > 1:
            raise BackendError("mixed symbolic and opaque entries in one field")
        for row in self.rows:
            for e in row:
                if isinstance(e, JetRule):
                    if e.nvars != len(self.vars):
                        raise DimensionError("entry arity disagrees with the field's")
                elif tuple(e.vars) != self.vars:
                    raise DimensionError("entry variables disagree with the field's")

    # ---- constructors ----------------------------------------------------

    @classmethod
    def from_exprs(cls, rows: Sequence[Sequence[str]], vars: Sequence[str]) -> "OpField":
        return cls([[parse_poly(t, vars) for t in row] for row in rows], vars)

    @classmethod
    def identity(cls, vars: Sequence[str]) -> "OpField":
        n = len(vars)
        return cls(
            [[Poly.const(vars, 1 if i == j else 0) for j in range(n)] for i in range(n)],
            vars,
        )

    @classmethod
    def zero(cls, vars: Sequence[str]) -> "OpField":
        n = len(vars)
        return cls([[Poly.zero(vars) for _ in range(n)] for _ in range(n)], vars)

    @classmethod
    def diagonal(cls, entries, vars: Sequence[str]) -> "OpField":
        n = len(entries)
        return cls(
            [[entries[i] if i == j else Poly.zero(vars) for j in range(n)] for i in range(n)],
            vars,
        )

    # ---- views -----------------------------------------------------------

    def entry(self, i: int, j: int):
        return self.rows[i][j]

    @property
    def is_symbolic(self) -> bool:
        return is_symbolic(self.rows[0][0])

    def to_strings(self) -> list[list[str]]:
        return [[str(e) for e in row] for row in self.rows]

    def __repr__(self):
        return f"OpField(dim={self.dim}, vars={self.vars})"

    # ---- algebra (symbolic) ----------------------------------------------

    def _need_symbolic(self, what="this operation"):
        if not self.is_symbolic:
            raise BackendError(f"{what} requires a symbolic field")

    def __matmul__(self, other: "OpField") -> "OpField":
        self._need_symbolic("matrix product")
        if self.vars != other.vars:
            raise DimensionError("variable mismatch")
        return OpField(_matrix.mat_mul(self.rows, other.rows), self.vars)

    def __add__(self, other: "OpField") -> "OpField":
        self._need_symbolic("matrix sum")
        if self.vars != other.vars:
            raise DimensionError("variable mismatch")
        return OpField(_matrix.mat_add(self.rows, other.rows), self.vars)

    def __sub__(self, other: "OpField") -> "OpField":
        self._need_symbolic("matrix difference")
        return OpField(_matrix.mat_sub(self.rows, other.rows), self.vars)

    def scale(self, c) -> "OpField":
        self._need_symbolic("scaling")
        return OpField(_matrix.mat_scale(self.rows, c), self.vars)

    def shift(self, c) -> "OpField":
        """L + c*Id for an exact rational c."""
        self._need_symbolic("shifting")
        return OpField(
            _matrix.mat_add_scalar_diag(self.rows, Poly.const(self.vars, c)), self.vars
        )

    def transpose(self) -> "OpField":
        return OpField(_matrix.mat_transpose(self.rows), self.vars)

    def power(self, k: int) -> "OpField":
        self._need_symbolic("powers")
        out = OpField.identity(self.vars)
        for _ in range(k):
            out = out @ self
        return out

    def trace(self):
        return _matrix.mat_trace(self.rows)

    def substitute(self, replacements, new_vars=None) -> "OpField":
        """Entrywise substitution x_i -> replacements[i] (Poly entries only)."""
        self._need_symbolic("substitution")
        out = []
        for row in self.rows:
            new_row = []
            for e in row:
                if isinstance(e, RatFn):
                    new_row.append(RatFn(e.num.subs(replacements), e.den.subs(replacements)))
                else:
                    new_row.append(e.subs(replacements))
            out.append(new_row)
        return OpField(out, new_vars if new_vars is not None else replacements[0].vars)

    def is_zero_matrix(self) -> bool:
        self._need_symbolic("the identity test")
        return all(e.is_zero for row in self.rows for e in row)

    # ---- evaluation --------------------------------------------------------

    def eval_value(self, point) -> np.ndarray:
        return np.array(
            [[float(e.eval(list(point))) for e in row] for row in self.rows], dtype=float
        )

    def eval_jet(self, point):
        """Value matrix and the partial tensor DL[i, j, l] = d_l L^i_j."""
        n = self.dim
        L = np.empty((n, n))
        DL = np.empty((n, n, len(self.vars)))
        pt = list(point)
        for i in range(n):
            for j in range(n):
                jet = self.rows[i][j].eval_jet(pt)
                L[i, j] = float(jet.value)
                DL[i, j, :] = [float(p) for p in jet.partials]
        return L, DL

    def denominators(self) -> list:
        """Denominator fields of any rational entries (auto singular loci)."""
        out = []
        for row in self.rows:
            for e in row:
                if isinstance(e, RatFn) and not e.den.is_constant():
                    out.append(e.den)
        return out


class Tensor3:
    """A (1,2)-tensor field with components comps[i][j][k], antisymmetric in
    the two lower slots."""

    __slots__ = ("dim", "vars", "comps")

    def __init__(self, comps, vars):
        self.comps = comps
        self.vars = tuple(vars)
        self.dim = len(comps)

    def is_zero(self) -> bool:
        return all(c.is_zero for plane in self.comps for row in plane for c in row)

    def nonzero_components(self, limit: int = 8) -> list[str]:
        out = []
        for i in range(self.dim):
            for j in range(self.dim):
                for k in range(j + 1, self.dim):
                    c = self.comps[i][j][k]
                    if not c.is_zero:
                        out.append(f"[{i + 1};{j + 1},{k + 1}] = {c}")
                        if len(out) >= limit:
                            return out
        return out

    def eval(self, point) -> np.ndarray:
        n = self.dim
        out = np.empty((n, n, n))
        pt = list(point)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    out[i, j, k] = float(self.comps[i][j][k].eval(pt))
        return out

    def contract_lower(self, alpha):
        """Matrix C[j][k] = sum_i alpha_i * comps[i][j][k]."""
        n = self.dim
        out = []
        for j in range(n):
            row = []
            for k in range(n):
                acc = alpha[0] * self.comps[0][j][k]
                for i in range(1, n):
                    acc = acc + alpha[i] * self.comps[i][j][k]
                row.append(acc)
            out.append(row)
        return out


@dataclass
class NijVerdict:
    ok: bool
    mode: str
    residual: float | None = None
    witnesses: list[str] = field(default_factory=list)
    samples: int = 0
    seed: int | None = None

    def __bool__(self):
        return self.ok


def nijenhuis_tensor(L: OpField) -> Tensor3:
    """Exact Nijenhuis tensor of a symbolic operator field."""
    L._need_symbolic("the symbolic Nijenhuis tensor")
    n = L.dim
    rows = L.rows
    dL = [[[rows[i][j].diff(l) for l in range(n)] for j in range(n)] for i in range(n)]
    zero = Poly.zero(L.vars)
    comps = [[[zero for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j + 1, n):
                acc = None
                for l in range(n):
                    for term in (
                        rows[l][j] * dL[i][k][l],
                        -(rows[l][k] * dL[i][j][l]),
                        -(rows[i][l] * dL[l][k][j]),
                        rows[i][l] * dL[l][j][k],
                    ):
                        acc = term if acc is None else acc + term
                comps[i][j][k] = acc
                comps[i][k][j] = -acc
    return Tensor3(comps, L.vars)


def nijenhuis_from_arrays(Lv: np.ndarray, DL: np.ndarray) -> np.ndarray:
    """Pointwise Nijenhuis tensor from a value matrix and the partial tensor
    DL[i, j, l] = d_l L^i_j."""
    t1 = np.einsum("lj,ikl->ijk", Lv, DL)
    t2 = np.einsum("lk,ijl->ijk", Lv, DL)
    t3 = np.einsum("il,lkj->ijk", Lv, DL)
    t4 = np.einsum("il,ljk->ijk", Lv, DL)
    return t1 - t2 - t3 + t4


def nijenhuis_residual_at(L: OpField, point) -> float:
    Lv, DL = L.eval_jet(point)
    return float(np.max(np.abs(nijenhuis_from_arrays(Lv, DL))))


def is_nijenhuis(
    L: OpField,
    mode: str = "auto",
    samples: int = DEFAULT_SAMPLES,
    tol: float = TOL_ALGEBRAIC,
    seed: int = DEFAULT_SEED,
    box: float = DEFAULT_BOX,
    center=None,
    avoid=None,
) -> NijVerdict:
    """Decide whether N_L vanishes.

    Symbolic mode is an exact identity test; numeric mode bounds the max
    residual over seeded samples (rejecting declared singular loci, plus any
    denominators of rational entries)."""
    if mode == "auto":
        mode = "symbolic" if L.is_symbolic else "numeric"
    if mode == "symbolic":
        N = nijenhuis_tensor(L)
        wit = N.nonzero_components()
        return NijVerdict(ok=not wit, mode="symbolic", residual=None, witnesses=wit)
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    loci = list(avoid) if avoid else []
    if L.is_symbolic:
        loci.extend(L.denominators())
    pts = sample_points(len(L.vars), samples=samples, seed=seed, box=box, center=center, avoid=loci)
    worst = 0.0
    for pt in pts:
        worst = max(worst, nijenhuis_residual_at(L, pt))
    return NijVerdict(ok=worst < tol, mode="numeric", residual=worst, samples=len(pts), seed=seed)


def fn_bracket(L1: OpField, L2: OpField) -> Tensor3:
    """Polarization bracket [L1, L2] = N_{L1+L2} - N_{L1} - N_{L2};
    symmetric and bilinear in its arguments."""
    Ns = nijenhuis_tensor(L1 + L2)
    N1 = nijenhuis_tensor(L1)
    N2 = nijenhuis_tensor(L2)
    n = L1.dim
    comps = [
        [
            [Ns.comps[i][j][k] - N1.comps[i][j][k] - N2.comps[i][j][k] for k in range(n)]
            for j in range(n)
        ]
        for i in range(n)
    ]
    return Tensor3(comps, L1.vars)


def one_form_d(alpha):
    """Exterior derivative of a 1-form: D[j][k] = d_j alpha_k - d_k alpha_j."""
    n = len(alpha)
    return [[alpha[k].diff(j) - alpha[j].diff(k) for k in range(n)] for j in range(n)]


def nijenhuis_on_form(L: OpField, alpha):
    """Image of the 1-form alpha under the torsion's action on forms:

        beta = d(L*^2 a) + d a(L., L.) - d(L* a)(L., .) - d(L* a)(., L.)

    Returns the antisymmetric component matrix beta[j][k].  Under the exterior
    derivative convention used here this pairs with the tensor as
    beta[j][k] = alpha_i N^i_[kj] (lower indices reversed)."""
    L._need_symbolic("the action on forms")
    n = L.dim
    rows = L.rows
    L2 = (L @ L).rows
    lsa = [_dot_form(alpha, rows, j) for j in range(n)]
    l2sa = [_dot_form(alpha, L2, j) for j in range(n)]
    d_alpha = one_form_d(alpha)
    d_lsa = one_form_d(lsa)
    d_l2sa = one_form_d(l2sa)
    beta = []
    for j in range(n):
        row = []
        for k in range(n):
            acc = d_l2sa[j][k]
            for a in range(n):
                for b in range(n):
                    acc = acc + rows[a][j] * rows[b][k] * d_alpha[a][b]
            for a in range(n):
                acc = acc - rows[a][j] * d_lsa[a][k]
            for b in range(n):
                acc = acc - rows[b][k] * d_lsa[j][b]
            row.append(acc)
        beta.append(row)
    return beta


def _dot_form(alpha, rows, j):
    acc = alpha[0] * rows[0][j]
    for i in range(1, len(alpha)):
        acc = acc + alpha[i] * rows[i][j]
    return acc


# ---------------------------------------------------------------------------
# quotient well-posedness
# ---------------------------------------------------------------------------


@dataclass
class QuotientVerdict:
    lower_left_zero: bool
    base_independent: bool | None
    quotient_nijenhuis: bool | None
    witnesses: list[str] = field(default_factory=list)

    @property
    def ok(self):
        return bool(self.lower_left_zero and self.base_independent and self.quotient_nijenhuis)

    def __bool__(self):
        return self.ok


def quotient_wellposed_check(L: OpField, k: int) -> QuotientVerdict:
    """For the splitting vars = (x_1..x_k | y_1..y_m): the quotient operator is
    well defined iff the lower-left block of L vanishes identically and the
    lower-right block is independent of the x's; when well defined, the
    quotient must itself be torsion-free in the y's."""
    L._need_symbolic("the quotient test")
    n = L.dim
    if not (0 < k < n):
        raise DimensionError(f"split index {k} out of range for dim {n}")
    wit = []
    for i in range(k, n):
        for j in range(k):
            if not L.rows[i][j].is_zero:
                wit.append(f"L[{i + 1},{j + 1}] = {L.rows[i][j]}")
    if wit:
        return QuotientVerdict(False, None, None, wit)
    for i in range(k, n):
        for j in range(k, n):
            for a in range(k):
                d = L.rows[i][j].diff(a)
                if not d.is_zero:
                    wit.append(f"d L[{i + 1},{j + 1}] / d {L.vars[a]} = {d}")
    if wit:
        return QuotientVerdict(True, False, None, wit)
    yvars = L.vars[k:]
    sub = []
    for i in range(k, n):
        row = []
        for j in range(k, n):
            e = L.rows[i][j]
            if isinstance(e, RatFn):
                den = _strip_vars(e.den, k, yvars)
                if den.is_zero:
                    raise BackendError(
                        "quotient entry denominator vanishes on the fiber origin"
                    )
                row.append(RatFn(_strip_vars(e.num, k, yvars), den))
            else:
                row.append(_strip_vars(e, k, yvars))
        sub.append(row)
    verdict = is_nijenhuis(OpField(sub, yvars), mode="symbolic")
    return QuotientVerdict(True, True, verdict.ok, verdict.witnesses)


def _strip_vars(p: Poly, k: int, yvars) -> Poly:
    """Restrict a base-independent polynomial to the quotient coordinates by
    setting the first k variables to zero."""
    zero = Poly.zero(yvars)
    reps = [zero] * k + [Poly.var(yvars, t) for t in yvars]
    return p.subs(reps)


# ---------------------------------------------------------------------------
# kernel bracket property
# ---------------------------------------------------------------------------


@dataclass
class KernelBracketVerdict:
    ok: bool
    kernel_dim: int
    residual: float

    def __bool__(self):
        return self.ok


def _rank_by_gap(svals, gap=RANK_GAP, rtol=1e-8):
    s = np.asarray(svals)
    scale = max(float(s[0]) if s.size else 0.0, 1.0)
    r = int(np.sum(s > rtol * scale))
    if 0 < r < s.size:
        lo = float(s[r]) if s[r] > 0 else 0.0
        if lo > 0 and float(s[r - 1]) / lo < gap:
            raise RankError(
                f"no clean singular-value gap: s[{r - 1}] = {s[r - 1]:.3e}, s[{r}] = {s[r]:.3e}"
            )
    return r


def _kernel_projector(A: np.ndarray, expect_rank: int | None = None, gap=RANK_GAP):
    n = A.shape[0]
    _, s, Vt = np.linalg.svd(A)
    r = _rank_by_gap(s, gap)
    if expect_rank is not None and r != expect_rank:
        raise RankError(f"rank is not locally constant: {expect_rank} vs {r}")
    Vnull = Vt[r:].T  # (n, n-r), orthonormal
    return Vnull @ Vnull.T, r, Vnull


def kernel_bracket_check(
    L: OpField, point, tol: float = TOL_ALGEBRAIC, h: float = FD_STEP
) -> KernelBracketVerdict:
    """Check L^2 [u, v] = 0 at the point for a local frame u, v of Ker L.

    The frame is built from the (basis-independent) orthogonal projector onto
    the kernel, differentiated by central differences; constancy of the rank
    at the displaced points is enforced."""
    A0 = L.eval_value(point)
    n = A0.shape[0]
    P0, r, Vnull = _kernel_projector(A0)
    d = n - r
    if d == 0:
        return KernelBracketVerdict(True, 0, 0.0)
    pt = np.asarray(point, dtype=float)
    dP = np.empty((len(L.vars), n, n))
    for j in range(len(L.vars)):
        e = np.zeros_like(pt)
        e[j] = h
        Pp, _, _ = _kernel_projector(L.eval_value(pt + e), expect_rank=r)
        Pm, _, _ = _kernel_projector(L.eval_value(pt - e), expect_rank=r)
        dP[j] = (Pp - Pm) / (2 * h)
    basis = [Vnull[:, a] for a in range(d)]
    du = [np.stack([dP[j] @ u for j in range(len(L.vars))]) for u in basis]  # du[a][j] vec
    L2 = A0 @ A0
    worst = 0.0
    for a in range(d):
        for b in range(a + 1, d):
            bracket = np.zeros(n)
            for j in range(len(L.vars)):
                bracket += basis[a][j] * du[b][j] - basis[b][j] * du[a][j]
            worst = max(worst, float(np.linalg.norm(L2 @ bracket)))
    return KernelBracketVerdict(worst < tol, d, worst)


# ---------------------------------------------------------------------------
# pointwise classification
# ---------------------------------------------------------------------------


@dataclass
class SegreCell:
    value: complex
    multiplicity: int
    blocks: tuple[int, ...]


@dataclass
class PointClass:
    eigenvalues: list[complex]
    segre: list[SegreCell]
    gl_regular: bool
    diff_nondegenerate: bool
    scalar_type: bool


def cluster_values(vals, tol: float, sep_factor: float = 10.0):
    """Group complex values with hysteresis: values are merged only when
    clearly together (distance < tol*scale/sep_factor) and clusters must be
    clearly apart (>= sep_factor*tol*scale); distances in the band between
    admit two readings and raise AmbiguousClusterError instead of guessing."""
    vals = list(vals)
    m = len(vals)
    scale = max(1.0, max((abs(v) for v in vals), default=0.0))
    thr = tol * scale
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(m):
        for j in range(i + 1, m):
            if abs(vals[i] - vals[j]) < thr / sep_factor:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    clusters = sorted(groups.values(), key=lambda g: (np.mean([vals[i].real for i in g]), np.mean([vals[i].imag for i in g])))
    for a in range(len(clusters)):
        for b in range(a + 1, len(clusters)):
            d = min(abs(vals[i] - vals[j]) for i in clusters[a] for j in clusters[b])
            if d < sep_factor * thr:
                raise AmbiguousClusterError(
                    f"inter-cluster distance {d:.3e} falls in the ambiguous band "
                    f"[{thr / sep_factor:.3e}, {sep_factor * thr:.3e}); adjust tol"
                )
    return clusters


def _complex_rank(M: np.ndarray, rtol: float = 1e-8) -> int:
    s = np.linalg.svd(M, compute_uv=False)
    scale = max(float(s[0]) if s.size else 0.0, 1.0)
    return int(np.sum(s > rtol * scale))


def classify_point(L: OpField, point, tol: float = CLUSTER_TOL) -> PointClass:
    """Algebraic type of L at one point: Segre characteristic per clustered
    eigenvalue, gl-regularity, independence of the coefficient differentials,
    and the scalar-type flag."""
    A = L.eval_value(point)
    n = A.shape[0]
    vals = np.linalg.eigvals(A)
    order = np.lexsort((vals.imag, vals.real))
    vals = vals[order]
    clusters = cluster_values(list(vals), tol)
    segre = []
    gl_regular = True
    for g in clusters:
        rep = complex(np.mean([vals[i] for i in g]))
        mult = len(g)
        M = A.astype(complex) - rep * np.eye(n)
        ranks = [n]
        power = np.eye(n, dtype=complex)
        while ranks[-1] > n - mult:
            power = power @ M
            ranks.append(_complex_rank(power))
            if len(ranks) > n + 1:
                raise RankError("rank staircase failed to stabilize; eigenvalue data inconsistent")
        ge = [ranks[k - 1] - ranks[k] for k in range(1, len(ranks))]
        blocks = []
        for k in range(1, len(ge) + 1):
            cnt = ge[k - 1] - (ge[k] if k < len(ge) else 0)
            blocks.extend([k] * cnt)
        blocks.sort(reverse=True)
        if sum(blocks) != mult:
            raise RankError(
                f"Jordan blocks {blocks} inconsistent with multiplicity {mult} "
                f"at eigenvalue {rep!r}"
            )
        if len(blocks) != 1:
            gl_regular = False
        segre.append(SegreCell(rep, mult, tuple(blocks)))
    # differentials of the characteristic coefficients, via jets
    Lj = [[L.rows[i][j].eval_jet(list(point)) for j in range(n)] for i in range(n)]
    sig = _matrix.char_sigma(Lj)
    J = np.array([[float(p) for p in s.partials] for s in sig])
    diff_nondeg = _complex_rank(J) == n
    tr = float(np.trace(A))
    scalar = float(np.max(np.abs(A - (tr / n) * np.eye(n)))) < tol * max(1.0, float(np.max(np.abs(A))))
    return PointClass(
        eigenvalues=[complex(v) for v in vals],
        segre=segre,
        gl_regular=gl_regular,
        diff_nondegenerate=diff_nondeg,
        scalar_type=scalar,
    )
