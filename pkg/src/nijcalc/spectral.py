"""Characteristic-polynomial machinery for operator fields.

Everything revolves around the coefficients of chi(t) = det(t*Id - L) =
t^n + s1 t^(n-1) + ... + sn, computed exactly by the Faddeev-LeVerrier
recurrence: the trace identities d(tr L^k) = k (L^T)^(k-1) d(tr L), the
flow identity J L = S_chi J relating the Jacobian of the coefficients to
the companion-shaped matrix S_chi, reconstruction of L from independent
coefficients, and eigenvalue-gradient verification.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _matrix
from .errors import (
    DegenerateSigmaError,
    DimensionError,
    NotEigenvalueError,
    SizeOverflowError,
)
from .sampling import DEFAULT_SAMPLES, DEFAULT_SEED, sample_points
from .scalarfield import Poly, RatFn
from .tensorcore import TOL_ALGEBRAIC, OpField

MAX_TERMS = 200


@dataclass
class SigmaList:
    """Coefficients s1..sn of chi(t) = t^n + s1 t^(n-1) + ... + sn."""

    vars: tuple
    sigmas: list

    def __post_init__(self):
        self.vars = tuple(self.vars)

    @property
    def n(self) -> int:
        return len(self.sigmas)

    def __iter__(self):
        return iter(self.sigmas)

    def __getitem__(self, i):
        return self.sigmas[i]


def char_poly(L: OpField) -> SigmaList:
    """Exact characteristic coefficients via Faddeev-LeVerrier (the only
    divisions are by the integers 1..n)."""
    L._need_symbolic("the characteristic polynomial")
    return SigmaList(L.vars, _matrix.char_sigma(L.rows))


def char_poly_at(sig: SigmaList, value):
    """chi evaluated at a scalar-field argument: value^n + s1 value^(n-1) + ..."""
    n = sig.n
    acc = value ** n if n else value * 0
    power = None
    for k, s in enumerate(sig.sigmas, start=1):
        power = value ** (n - k)
        acc = acc + s * power
    return acc


def companion_data(sig: SigmaList):
    """The pair (S_chi, J): S_chi has first column (-s1..-sn) and superdiagonal
    ones; J is the Jacobian J[i][j] = d s_(i+1) / d x_(j+1)."""
    n = sig.n
    if len(sig.vars) != n:
        raise DimensionError("need exactly one variable per coefficient")
    zero = Poly.zero(sig.vars)
    one = Poly.const(sig.vars, 1)
    S = [[zero for _ in range(n)] for _ in range(n)]
    for i in range(n):
        S[i][0] = -sig.sigmas[i]
        if i + 1 < n:
            S[i][i + 1] = one
    J = [[sig.sigmas[i].diff(j) for j in range(n)] for i in range(n)]
    return S, J


@dataclass
class TraceVerdict:
    ok: bool
    per_k: dict
    witnesses: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def verify_trace_identities(L: OpField, kmax: int | None = None) -> TraceVerdict:
    """d(tr L^k) - k (L^T)^(k-1) d(tr L) == 0 for k = 2..kmax (default n+1)."""
    L._need_symbolic("trace identities")
    n = L.dim
    if kmax is None:
        kmax = n + 1
    g1 = [L.trace().diff(j) for j in range(len(L.vars))]
    per_k = {}
    witnesses = []
    Lt = L.transpose()
    powers = OpField.identity(L.vars)
    Lk = L
    for k in range(2, kmax + 1):
        Lk = Lk @ L if k > 2 else L @ L
        powers = powers @ Lt  # (L^T)^(k-1) accumulated
        gk = [Lk.trace().diff(j) for j in range(len(L.vars))]
        rhs = [
            sum((powers.rows[i][j] * g1[j] for j in range(len(g1))), Poly.zero(L.vars)) * k
            for i in range(len(g1))
        ]
        bad = [i for i in range(len(g1)) if not (gk[i] - rhs[i]).is_zero]
        per_k[k] = not bad
        for i in bad:
            witnesses.append(f"k={k}, component {i + 1}: {gk[i] - rhs[i]}")
    return TraceVerdict(all(per_k.values()), per_k, witnesses)


@dataclass
class FlowVerdict:
    ok: bool
    witnesses: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def char_flow_residual(sig: SigmaList, L: OpField):
    """The matrix J L - S_chi J; identically zero iff the flow identity holds."""
    S, J = companion_data(sig)
    return _matrix.mat_sub(_matrix.mat_mul(J, L.rows), _matrix.mat_mul(S, J))


def verify_char_flow(L: OpField) -> FlowVerdict:
    L._need_symbolic("the flow identity")
    if len(L.vars) != L.dim:
        raise DimensionError("the flow identity needs one coordinate per dimension")
    R = char_flow_residual(char_poly(L), L)
    wit = [
        f"[{i + 1},{j + 1}] = {R[i][j]}"
        for i in range(L.dim)
        for j in range(L.dim)
        if not R[i][j].is_zero
    ]
    return FlowVerdict(not wit, wit)


def _term_count(f) -> int:
    if isinstance(f, RatFn):
        return len(f.num.terms) + len(f.den.terms)
    return len(f.terms)


def reconstruct(sig: SigmaList, max_terms: int = MAX_TERMS) -> OpField:
    """L = J^(-1) S_chi J from coefficients with det J not identically zero.

    Entries come out as rational functions (adjugate over determinant); when
    every entry reduces to a polynomial the field is returned over Poly so
    round trips are entrywise exact.  Intermediate blow-up beyond
    ``max_terms`` terms per entry aborts with SizeOverflowError.
    """
    n = sig.n
    S, J = companion_data(sig)
    if n == 1:
        if J[0][0].is_zero:
            raise DegenerateSigmaError("coefficient Jacobian is identically singular")
        # scalars commute: J^(-1) S J = S
        return OpField([[S[0][0]]], sig.vars)
    det = _matrix.mat_det(J)
    if det.is_zero:
        raise DegenerateSigmaError("coefficient Jacobian is identically singular")
    adj = _matrix.mat_adjugate(J)
    SJ = _matrix.mat_mul(S, J)
    num = _matrix.mat_mul(adj, SJ)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            e = RatFn.coerce(num[i][j], sig.vars) / RatFn.coerce(det, sig.vars)
            if _term_count(e) > max_terms:
                raise SizeOverflowError(
                    f"entry [{i + 1},{j + 1}] exceeded {max_terms} terms during reconstruction"
                )
            row.append(e)
        rows.append(row)
    return _polish(OpField(rows, sig.vars))


def _polish(L: OpField) -> OpField:
    """Demote an all-polynomial RatFn field to plain Poly entries."""
    if all(isinstance(e, RatFn) and e.is_poly() for row in L.rows for e in row):
        return OpField([[e.as_poly() for e in row] for row in L.rows], L.vars)
    return L


def reconstruct_blocks(sig_blocks: list[SigmaList], max_terms: int = MAX_TERMS) -> OpField:
    """Direct sum of reconstructions on disjoint variable groups.

    Each block's coefficients must only involve that block's variables; the
    result lives on the concatenated variable tuple.
    """
    all_vars = []
    for sb in sig_blocks:
        all_vars.extend(sb.vars)
    all_vars = tuple(all_vars)
    if len(set(all_vars)) != len(all_vars):
        raise DimensionError("blocks must use disjoint variable groups")
    n = len(all_vars)
    zero = Poly.zero(all_vars)
    rows = [[zero for _ in range(n)] for _ in range(n)]
    offset = 0
    for sb in sig_blocks:
        B = reconstruct(sb, max_terms)
        for i in range(B.dim):
            for j in range(B.dim):
                e = B.rows[i][j]
                if isinstance(e, RatFn):
                    e = RatFn(e.num.rename(all_vars), e.den.rename(all_vars))
                else:
                    e = e.rename(all_vars)
                rows[offset + i][offset + j] = e
        offset += B.dim
    return OpField(rows, all_vars)


@dataclass
class EigenVerdict:
    ok: bool
    mode: str
    residual: float | None = None
    witnesses: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def eigen_gradient_check(
    L: OpField,
    lam,
    mode: str = "symbolic",
    samples: int = DEFAULT_SAMPLES,
    tol: float = TOL_ALGEBRAIC,
    seed: int = DEFAULT_SEED,
) -> EigenVerdict:
    """Check (L^T - lam*Id) d lam == 0 for an eigenvalue field lam.

    The eigenvalue property det(lam*Id - L) == 0 is a precondition and is
    verified first (exactly in symbolic mode, at the samples in numeric
    mode); failing it raises NotEigenvalueError."""
    nv = len(L.vars)
    if mode == "symbolic":
        L._need_symbolic("the symbolic eigenvalue check")
        chi = char_poly_at(char_poly(L), lam)
        if not chi.is_zero:
            raise NotEigenvalueError(f"det(lam*Id - L) = {chi} is not identically zero")
        grad = [lam.diff(j) for j in range(nv)]
        wit = []
        for i in range(L.dim):
            acc = sum(
                (L.rows[j][i] * grad[j] for j in range(L.dim)), Poly.zero(L.vars)
            ) - lam * grad[i]
            if not acc.is_zero:
                wit.append(f"component {i + 1}: {acc}")
        return EigenVerdict(not wit, "symbolic", witnesses=wit)
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    pts = sample_points(nv, samples=samples, seed=seed)
    worst_chi = 0.0
    worst = 0.0
    for pt in pts:
        A = L.eval_value(pt)
        jet = lam.eval_jet(list(pt))
        lv = float(jet.value)
        worst_chi = max(worst_chi, abs(float(np.linalg.det(lv * np.eye(L.dim) - A))))
        grad = np.array([float(p) for p in jet.partials])
        worst = max(worst, float(np.max(np.abs((A.T - lv * np.eye(L.dim)) @ grad))))
    if worst_chi > tol:
        raise NotEigenvalueError(
            f"det(lam*Id - L) reaches {worst_chi:.3e} over the samples"
        )
    return EigenVerdict(worst < tol, "numeric", residual=worst)
