"""Pointwise matrix functions on the clustered spectrum and what they buy:
spectral projectors from Bezout identities, the canonical complex structure
of operators with non-real spectrum, involutivity tests for distributions,
and the numeric block-splitting certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (
    AmbiguousClusterError,
    FactorizationError,
    PrerequisiteError,
    RankError,
)
from .sampling import DEFAULT_SEED, sample_points
from .scalarfield import Poly, RatFn
from .tensorcore import (
    CLUSTER_TOL,
    FD_STEP,
    TOL_ALGEBRAIC,
    TOL_FINITE_DIFF,
    OpField,
    _rank_by_gap,
    cluster_values,
    nijenhuis_from_arrays,
)

BEZOUT_TOL = 1e-10


# ---------------------------------------------------------------------------
# spectrum clustering
# ---------------------------------------------------------------------------


@dataclass
class SpectrumClusters:
    clusters: list  # (representative complex value, algebraic multiplicity)
    gap: float

    @property
    def total(self) -> int:
        return sum(m for _, m in self.clusters)


def cluster_spectrum(Lp: np.ndarray, tol: float = CLUSTER_TOL) -> SpectrumClusters:
    """Group the eigenvalues of a real matrix into well-separated clusters.

    Conjugate closure is enforced: non-real representatives are symmetrized
    so each appears with its exact conjugate at equal multiplicity."""
    A = np.asarray(Lp, dtype=float)
    vals = np.linalg.eigvals(A)
    order = np.lexsort((vals.imag, vals.real))
    vals = list(vals[order])
    groups = cluster_values(vals, tol)
    reps = [complex(np.mean([vals[i] for i in g])) for g in groups]
    mults = [len(g) for g in groups]
    scale = max(1.0, max(abs(v) for v in vals))
    # symmetrize conjugate pairs; a non-real cluster must have a partner
    for a in range(len(reps)):
        if abs(reps[a].imag) <= tol * scale:
            reps[a] = complex(reps[a].real, 0.0)
            continue
        partner = None
        for b in range(len(reps)):
            if b != a and abs(reps[b] - reps[a].conjugate()) <= 10 * tol * scale:
                partner = b
                break
        if partner is None or mults[partner] != mults[a]:
            raise AmbiguousClusterError(
                f"non-real cluster at {reps[a]:.6g} lacks a conjugate partner"
            )
        if reps[a].imag > 0:
            reps[partner] = reps[a].conjugate()
    gap = math.inf
    for a in range(len(reps)):
        for b in range(a + 1, len(reps)):
            gap = min(gap, abs(reps[a] - reps[b]))
    return SpectrumClusters(list(zip(reps, mults)), gap)


# ---------------------------------------------------------------------------
# univariate polynomial helpers (ascending coefficient lists)
# ---------------------------------------------------------------------------


def _unormalize(c, eps=0.0):
    c = list(c)
    while len(c) > 1 and (abs(c[-1]) <= eps if eps else c[-1] == 0):
        c.pop()
    return c


def _uadd(a, b):
    out = list(a) + [0] * (len(b) - len(a)) if len(a) < len(b) else list(a)
    for i, x in enumerate(b):
        out[i] = out[i] + x
    return out


def _uscale(a, s):
    return [x * s for x in a]


def _umul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _udivmod(a, b, eps=0.0):
    a = _unormalize(a, eps)
    b = _unormalize(b, eps)
    if len(b) == 1 and (abs(b[0]) <= eps if eps else b[0] == 0):
        raise ZeroDivisionError("univariate division by zero polynomial")
    q = [0] * max(1, len(a) - len(b) + 1)
    r = list(a)
    while len(r) >= len(b):
        c = r[-1] / b[-1]
        k = len(r) - len(b)
        q[k] = q[k] + c
        for i, y in enumerate(b):
            r[k + i] -= c * y
        r.pop()
        r = _unormalize(r, eps) if r else [0]
        if len(r) == 1 and (abs(r[0]) <= eps if eps else r[0] == 0):
            break
    return _unormalize(q, 0), _unormalize(r, eps)


def ext_euclid(a, b, eps=0.0):
    """(g, s, t) with s*a + t*b = g; exact over Fractions when eps = 0."""
    r0, r1 = _unormalize(a, eps), _unormalize(b, eps)
    s0, s1 = [1], [0]
    t0, t1 = [0], [1]
    while not (len(r1) == 1 and (abs(r1[0]) <= eps if eps else r1[0] == 0)):
        q, r = _udivmod(r0, r1, eps)
        r0, r1 = r1, _unormalize(r if r else [0], eps)
        s0, s1 = s1, _uadd(s0, _uscale(_umul(q, s1), -1))
        t0, t1 = t1, _uadd(t0, _uscale(_umul(q, t1), -1))
    return r0, _unormalize(s0), _unormalize(t0)


def _ueval_matrix(coeffs, A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    out = np.zeros_like(A, dtype=complex)
    for c in reversed(list(coeffs)):
        out = out @ A + complex(c) * np.eye(n)
    return out


def _ueval_scalar(coeffs, z):
    out = 0
    for c in reversed(list(coeffs)):
        out = out * z + c
    return out


# ---------------------------------------------------------------------------
# admissible factorizations and projectors
# ---------------------------------------------------------------------------


@dataclass
class Factorization:
    """chi = chi1 * chi2 with coprime monic factors.

    Coefficient lists are ascending; entries are numbers (pointwise use) or
    scalar fields (coefficients varying over the base)."""

    chi1: list
    chi2: list

    def degree(self) -> tuple[int, int]:
        return (len(self.chi1) - 1, len(self.chi2) - 1)

    def is_symbolic(self) -> bool:
        return any(isinstance(c, (Poly, RatFn)) for c in self.chi1 + self.chi2)

    def at(self, point) -> "Factorization":
        if not self.is_symbolic():
            return self
        ev = lambda c: float(c.eval(list(point))) if isinstance(c, (Poly, RatFn)) else float(c)
        return Factorization([ev(c) for c in self.chi1], [ev(c) for c in self.chi2])


def bezout_witness(fact: Factorization):
    """(a, b) with a*chi1 + b*chi2 = 1; FactorizationError when not coprime."""
    c1, c2 = list(fact.chi1), list(fact.chi2)
    exact = all(isinstance(c, (int, Fraction)) for c in c1 + c2)
    if exact:
        c1 = [Fraction(c) for c in c1]
        c2 = [Fraction(c) for c in c2]
        g, s, t = ext_euclid(c1, c2)
        if len(g) != 1 or g[0] == 0:
            raise FactorizationError("factors are not coprime")
        inv = Fraction(1) / g[0]
        return _uscale(s, inv), _uscale(t, inv)
    c1 = [float(c) for c in c1]
    c2 = [float(c) for c in c2]
    scale = max(max(abs(c) for c in c1), max(abs(c) for c in c2), 1.0)
    g, s, t = ext_euclid(c1, c2, eps=BEZOUT_TOL * scale)
    if len(g) != 1 or abs(g[0]) <= BEZOUT_TOL * scale:
        raise FactorizationError("factors are not coprime (Euclid collapsed)")
    a = _uscale(s, 1.0 / g[0])
    b = _uscale(t, 1.0 / g[0])
    resid = _uadd(_umul(a, c1), _umul(b, c2))
    resid[0] -= 1.0
    if max(abs(r) for r in resid) > BEZOUT_TOL:
        raise FactorizationError("Bezout residual above tolerance; factors nearly dependent")
    return a, b


def spectral_projector(Lp: np.ndarray, fact: Factorization, tol: float = 1e-8) -> np.ndarray:
    """P1 = b(Lp) chi2(Lp) for the admissible factorization chi1*chi2.

    Checks that the product matches Lp's characteristic polynomial before
    trusting the factorization."""
    A = np.asarray(Lp, dtype=float)
    n = A.shape[0]
    d1, d2 = fact.degree()
    if d1 + d2 != n:
        raise FactorizationError(f"factor degrees {d1}+{d2} do not sum to dim {n}")
    prod = _umul([float(c) for c in fact.chi1], [float(c) for c in fact.chi2])
    want = np.poly(A)[::-1]  # ascending, monic: chi(t) = det(t Id - A)
    scale = max(1.0, float(np.max(np.abs(want))))
    if max(abs(p - w) for p, w in zip(prod, want)) > tol * scale:
        raise FactorizationError("chi1*chi2 does not match the characteristic polynomial")
    a, b = bezout_witness(fact)
    P = _ueval_matrix(b, A) @ _ueval_matrix(fact.chi2, A)
    if np.max(np.abs(P.imag)) > 1e-12:
        raise FactorizationError("projector came out non-real")
    return P.real


# ---------------------------------------------------------------------------
# matrix functions by Hermite interpolation
# ---------------------------------------------------------------------------


def _hermite_newton(clusters, f):
    """Newton form (nodes, coefficients) matching f and its derivatives."""
    nodes = []
    for rep, mult in clusters:
        nodes.extend([rep] * mult)
    N = len(nodes)
    data = {}
    for rep, mult in clusters:
        for k in range(mult):
            try:
                v = f(rep, k)
            except TypeError:
                raise PrerequisiteError(
                    "function oracle must accept (value, derivative_order)"
                )
            if v is None:
                raise PrerequisiteError(f"missing derivative {k} at {rep}")
            data[(rep, k)] = complex(v)
    # conjugate symmetry of supplied data (real output contract)
    for rep, mult in clusters:
        if rep.imag == 0:
            continue
        for k in range(mult):
            mirror = data.get((rep.conjugate(), k))
            if mirror is None or abs(mirror - data[(rep, k)].conjugate()) > 1e-9 * max(
                1.0, abs(data[(rep, k)])
            ):
                raise PrerequisiteError(
                    f"data not conjugate-symmetric at {rep} derivative {k}"
                )
    # divided differences with repeated nodes
    dd = [[0j] * N for _ in range(N)]
    for i in range(N):
        dd[i][i] = data[(nodes[i], 0)]
    fact = 1.0
    for span in range(1, N):
        fact *= span
        for i in range(N - span):
            j = i + span
            if nodes[i] == nodes[j]:
                dd[i][j] = data[(nodes[i], span)] / fact
            else:
                dd[i][j] = (dd[i + 1][j] - dd[i][j - 1]) / (nodes[j] - nodes[i])
    return nodes, [dd[0][j] for j in range(N)]


def matrix_function(Lp: np.ndarray, clusters: SpectrumClusters, f) -> np.ndarray:
    """f(Lp) through the unique Hermite polynomial matching f's jet on the
    clustered spectrum; exact for polynomial f of degree < n."""
    A = np.asarray(Lp, dtype=float)
    nodes, coeffs = _hermite_newton(clusters.clusters, f)
    n = A.shape[0]
    out = np.zeros((n, n), dtype=complex)
    basis = np.eye(n, dtype=complex)
    for j, c in enumerate(coeffs):
        if j > 0:
            basis = basis @ (A - nodes[j - 1] * np.eye(n))
        out += c * basis
    scale = max(1.0, float(np.max(np.abs(out.real))))
    if np.max(np.abs(out.imag)) > 1e-9 * scale:
        raise PrerequisiteError("matrix function came out non-real; check the data")
    return out.real


def complex_structure(Lp: np.ndarray, tol: float = CLUSTER_TOL) -> np.ndarray:
    """J = f(Lp) with f = +-i by half-plane; needs a real-eigenvalue-free
    spectrum and returns a real J with J^2 = -Id commuting with Lp."""
    A = np.asarray(Lp, dtype=float)
    clusters = cluster_spectrum(A, tol)
    scale = max(1.0, max(abs(rep) for rep, _ in clusters.clusters))
    for rep, _ in clusters.clusters:
        if abs(rep.imag) <= tol * scale:
            raise PrerequisiteError(f"real eigenvalue {rep.real:.6g} admits no square root of -Id")
    J = matrix_function(A, clusters, lambda z, k: (1j if z.imag > 0 else -1j) if k == 0 else 0.0)
    n = A.shape[0]
    if np.max(np.abs(J @ J + np.eye(n))) > 1e-7:
        raise PrerequisiteError("computed structure failed J^2 = -Id sanity bound")
    return J


# ---------------------------------------------------------------------------
# involutivity of distributions
# ---------------------------------------------------------------------------


@dataclass
class InvolutivityVerdict:
    ok: bool
    rank: int
    residual: float

    def __bool__(self):
        return self.ok


def _frame_values(frame, point):
    cols = []
    for X in frame:
        cols.append([float(c.eval(list(point))) for c in X])
    return np.array(cols, dtype=float).T  # n x d


def involutivity_check(frame, point, tol: float = TOL_ALGEBRAIC, h: float = FD_STEP) -> InvolutivityVerdict:
    """Do brackets of the frame fields stay in the frame's span at the point?

    Residual is the worst least-squares defect over frame pairs; the span's
    rank must not change at h-displaced points."""
    pt = np.asarray(point, dtype=float)
    n = len(frame[0])
    d = len(frame)
    V = _frame_values(frame, pt)
    s = np.linalg.svd(V, compute_uv=False)
    r = _rank_by_gap(s)
    for j in range(len(pt)):
        e = np.zeros_like(pt)
        e[j] = h
        for q in (pt + e, pt - e):
            rq = _rank_by_gap(np.linalg.svd(_frame_values(frame, q), compute_uv=False))
            if rq != r:
                raise RankError(f"frame rank changes near the point ({r} vs {rq})")
    jets = [[c.eval_jet(list(pt)) for c in X] for X in frame]
    worst = 0.0
    for a in range(d):
        for b in range(a + 1, d):
            bracket = np.zeros(n)
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += float(jets[a][j].value) * float(jets[b][i].partials[j])
                    acc -= float(jets[b][j].value) * float(jets[a][i].partials[j])
                bracket[i] = acc
            c, *_ = np.linalg.lstsq(V, bracket, rcond=None)
            worst = max(worst, float(np.linalg.norm(V @ c - bracket)))
    return InvolutivityVerdict(worst < tol, r, worst)


# ---------------------------------------------------------------------------
# splitting certificate
# ---------------------------------------------------------------------------


@dataclass
class SplitVerdict:
    ok: bool
    idempotent_residual: float
    commute_residual: float
    torsion_residual: float
    block_residual: float
    samples: int
    seed: int
    witnesses: list = field(default_factory=list)

    def __bool__(self):
        return self.ok


def _projector_at(L: OpField, fact: Factorization, x) -> np.ndarray:
    return spectral_projector(L.eval_value(x), fact.at(x))


def splitting_check(
    L: OpField,
    point,
    fact: Factorization,
    samples: int = 20,
    tol: float = TOL_ALGEBRAIC,
    fd_tol: float = TOL_FINITE_DIFF,
    seed: int = DEFAULT_SEED,
    box: float = 0.25,
    h: float = FD_STEP,
) -> SplitVerdict:
    """Sample a box around the point and certify the spectral splitting:

    the projector field P1 is idempotent, commutes with L, its
    finite-difference Nijenhuis residual stays below the differentiated
    tolerance, and L is block-diagonal in every P1-adapted frame."""
    pts = sample_points(len(L.vars), samples=samples, seed=seed, box=box, center=point)
    worst_idem = worst_comm = worst_tors = worst_block = 0.0
    witnesses = []
    n = L.dim
    for x in pts:
        A = L.eval_value(x)
        try:
            P = _projector_at(L, fact, x)
        except (FactorizationError, AmbiguousClusterError) as exc:
            raise type(exc)(f"{exc} (at sample {np.round(x, 6).tolist()})")
        worst_idem = max(worst_idem, float(np.max(np.abs(P @ P - P))))
        worst_comm = max(worst_comm, float(np.max(np.abs(P @ A - A @ P))))
        DP = np.empty((n, n, len(L.vars)))
        for j in range(len(L.vars)):
            e = np.zeros(len(L.vars))
            e[j] = h
            DP[:, :, j] = (_projector_at(L, fact, x + e) - _projector_at(L, fact, x - e)) / (2 * h)
        worst_tors = max(worst_tors, float(np.max(np.abs(nijenhuis_from_arrays(P, DP)))))
        # adapted frame: orthonormal bases of Image P1 and Image (Id - P1)
        d1 = fact.degree()[0]
        Q1, _ = np.linalg.qr(_column_basis(P, d1))
        Q2, _ = np.linalg.qr(_column_basis(np.eye(n) - P, n - d1))
        B = np.hstack([Q1, Q2])
        C = np.linalg.solve(B, A @ B)
        off = max(
            float(np.max(np.abs(C[d1:, :d1]))) if d1 < n else 0.0,
            float(np.max(np.abs(C[:d1, d1:]))) if d1 > 0 else 0.0,
        )
        worst_block = max(worst_block, off / max(1.0, float(np.max(np.abs(A)))))
    ok = (
        worst_idem < tol
        and worst_comm < tol
        and worst_tors < fd_tol
        and worst_block < tol
    )
    if not ok:
        witnesses.append(
            f"residuals: idem {worst_idem:.2e}, comm {worst_comm:.2e}, "
            f"torsion {worst_tors:.2e}, block {worst_block:.2e}"
        )
    return SplitVerdict(
        ok, worst_idem, worst_comm, worst_tors, worst_block, len(pts), seed, witnesses
    )


def _column_basis(P: np.ndarray, rank: int) -> np.ndarray:
    U, s, _ = np.linalg.svd(P)
    return U[:, :rank]
