import math
from fractions import Fraction

import numpy as np
import pytest

from nijcalc.errors import (
    AmbiguousClusterError,
    FactorizationError,
    PrerequisiteError,
    RankError,
)
from nijcalc.scalarfield import parse_poly
from nijcalc.splitfun import (
    Factorization,
    SpectrumClusters,
    _uadd,
    _umul,
    _unormalize,
    bezout_witness,
    cluster_spectrum,
    complex_structure,
    ext_euclid,
    involutivity_check,
    matrix_function,
    spectral_projector,
    splitting_check,
)
from nijcalc.tensorcore import OpField


def random_split_matrix(rng, n1, n2, gap=2.0, scale=1.0):
    """Conjugated block-diagonal matrix with two well-separated eigenvalue
    groups; returns (matrix, chi1 ascending, chi2 ascending)."""
    e1 = sorted(rng.uniform(-1, 1) * scale for _ in range(n1))
    e2 = sorted(rng.uniform(-1, 1) * scale + gap + 2 * scale for _ in range(n2))
    D = np.diag(e1 + e2)
    while True:
        B = rng.uniform(-1, 1, size=(n1 + n2, n1 + n2))
        if abs(np.linalg.det(B)) > 0.1:
            break
    A = B @ D @ np.linalg.inv(B)
    chi1 = np.poly(np.array(e1))[::-1]
    chi2 = np.poly(np.array(e2))[::-1]
    return A, list(chi1), list(chi2)


# ---------------------------------------------------------------------------
# clustering
# ---------------------------------------------------------------------------


def test_cluster_spectrum_groups_near_equal():
    A = np.diag([1.0, 1.0 + 1e-12, 5.0])
    sc = cluster_spectrum(A, tol=1e-6)
    got = sorted((round(rep.real, 6), mult) for rep, mult in sc.clusters)
    assert got == [(1.0, 2), (5.0, 1)]
    assert sc.gap == pytest.approx(4.0, rel=1e-9)


def test_cluster_spectrum_conjugate_pair():
    A = np.array([[1.0, -2.0], [2.0, 1.0]])
    sc = cluster_spectrum(A)
    reps = sorted((rep for rep, _ in sc.clusters), key=lambda z: z.imag)
    assert reps[0] == reps[1].conjugate()
    assert reps[1] == pytest.approx(1 + 2j, abs=1e-9)


def test_cluster_spectrum_ambiguous():
    with pytest.raises(AmbiguousClusterError):
        cluster_spectrum(np.diag([0.0, 1e-7]), tol=1e-6)


# ---------------------------------------------------------------------------
# Bezout witnesses
# ---------------------------------------------------------------------------


def test_ext_euclid_exact():
    # t^2 and t - 3: (1/9) t^2 - (1/9)(t + 3)(t - 3) = 1
    chi1 = [Fraction(0), Fraction(0), Fraction(1)]
    chi2 = [Fraction(-3), Fraction(1)]
    a, b = bezout_witness(Factorization(chi1, chi2))
    assert a == [Fraction(1, 9)]
    assert b == [Fraction(-1, 3), Fraction(-1, 9)]


def test_ext_euclid_equal_arguments():
    p = [Fraction(-1), Fraction(1)]
    g, s, t = ext_euclid(p, p)
    assert g == p
    # witness identity s*p + t*p = g
    combo = _uadd(_umul(s, p), _umul(t, p))
    assert _unormalize(combo) == g


def test_bezout_rejects_common_factor():
    with pytest.raises(FactorizationError):
        bezout_witness(Factorization([0, 1], [0, 1]))


def test_bezout_float_lane():
    a, b = bezout_witness(Factorization([0.0, 0.0, 1.0], [-3.0, 1.0]))
    assert a[0] == pytest.approx(1 / 9, abs=1e-12)


# ---------------------------------------------------------------------------
# projectors
# ---------------------------------------------------------------------------


def test_projector_diagonal():
    P = spectral_projector(np.diag([1.0, 2.0]), Factorization([-1, 1], [-2, 1]))
    assert np.allclose(P, np.diag([1.0, 0.0]), atol=1e-12)


def test_projector_nilpotent_plus_scalar():
    Lp = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 3.0]])
    P = spectral_projector(Lp, Factorization([0, 0, 1], [-3, 1]))
    assert np.allclose(P, np.diag([1.0, 1.0, 0.0]), atol=1e-12)


def test_projector_rejects_wrong_spectrum():
    with pytest.raises(FactorizationError):
        spectral_projector(np.diag([1.0, 2.0]), Factorization([-5, 1], [-1, 1]))


def test_projector_algebra_randomized():
    rng = np.random.default_rng(77)
    for _ in range(25):
        A, chi1, chi2 = random_split_matrix(rng, 2, 2)
        P1 = spectral_projector(A, Factorization(chi1, chi2))
        P2 = spectral_projector(A, Factorization(chi2, chi1))
        n = A.shape[0]
        assert np.max(np.abs(P1 @ P1 - P1)) < 1e-9
        assert np.max(np.abs(P1 + P2 - np.eye(n))) < 1e-9
        assert np.max(np.abs(P1 @ P2)) < 1e-9
        assert np.max(np.abs(P1 @ A - A @ P1)) < 1e-9
        assert np.linalg.matrix_rank(P1, tol=1e-6) == 2


# ---------------------------------------------------------------------------
# matrix functions
# ---------------------------------------------------------------------------


def test_matrix_function_polynomial_exact():
    rng = np.random.default_rng(5)
    for _ in range(20):
        A, _, _ = random_split_matrix(rng, 2, 1)
        sc = cluster_spectrum(A)

        def square(z, k):
            return (z * z, 2 * z, 2.0)[k] if k <= 2 else 0.0

        got = matrix_function(A, sc, square)
        assert np.max(np.abs(got - A @ A)) < 1e-9 * max(1.0, np.max(np.abs(A @ A)))


def test_matrix_function_exp_diagonal():
    A = np.diag([0.0, 1.0])
    got = matrix_function(A, cluster_spectrum(A), lambda z, k: np.exp(z))
    assert np.allclose(got, np.diag([1.0, math.e]), atol=1e-12)


def test_matrix_function_exp_jordan_block():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    got = matrix_function(A, SpectrumClusters([(0j, 2)], math.inf), lambda z, k: np.exp(z))
    assert np.allclose(got, np.eye(2) + A, atol=1e-12)


def test_matrix_function_missing_derivative():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(PrerequisiteError):
        matrix_function(
            A,
            SpectrumClusters([(0j, 2)], math.inf),
            lambda z, k: 1.0 if k == 0 else None,
        )


def test_matrix_function_requires_conjugate_symmetry():
    A = np.array([[1.0, -2.0], [2.0, 1.0]])
    with pytest.raises(PrerequisiteError):
        matrix_function(A, cluster_spectrum(A), lambda z, k: 1j)


# ---------------------------------------------------------------------------
# complex structure
# ---------------------------------------------------------------------------


def test_complex_structure_worked_2x2():
    J = complex_structure(np.array([[1.0, -2.0], [2.0, 1.0]]))
    assert np.max(np.abs(J - np.array([[0.0, -1.0], [1.0, 0.0]]))) < 1e-12


def test_complex_structure_fixed_point():
    A = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.max(np.abs(complex_structure(A) - A)) < 1e-12


def test_complex_structure_rejects_real_spectrum():
    with pytest.raises(PrerequisiteError):
        complex_structure(np.diag([1.0, 2.0]))


def test_complex_structure_randomized():
    rng = np.random.default_rng(11)
    for _ in range(20):
        blocks = []
        for a, b in ((0.3, 1.0), (-0.5, 2.5)):
            a += rng.uniform(-0.1, 0.1)
            b += rng.uniform(-0.1, 0.1)
            blocks.append(np.array([[a, -b], [b, a]]))
        D = np.block(
            [
                [blocks[0], np.zeros((2, 2))],
                [np.zeros((2, 2)), blocks[1]],
            ]
        )
        while True:
            B = rng.uniform(-1, 1, size=(4, 4))
            if abs(np.linalg.det(B)) > 0.1:
                break
        A = B @ D @ np.linalg.inv(B)
        J = complex_structure(A)
        assert np.max(np.abs(J @ J + np.eye(4))) < 1e-9
        assert np.max(np.abs(J @ A - A @ J)) < 1e-9


# ---------------------------------------------------------------------------
# involutivity
# ---------------------------------------------------------------------------

V4 = ("x1", "x2", "x3", "x4")


def _vec(exprs, vars):
    return [parse_poly(t, vars) for t in exprs]


def test_involutivity_constant_frame():
    V3 = ("x1", "x2", "x3")
    frame = [_vec(["1", "0", "0"], V3), _vec(["0", "1", "0"], V3)]
    v = involutivity_check(frame, [0.2, -0.1, 0.4])
    assert v.ok and v.residual == 0.0 and v.rank == 2


def test_involutivity_kobayashi_kernel_fails():
    frame = [
        _vec(["0", "1", "0", "0"], V4),
        _vec(["0", "0", "1", "0"], V4),
        _vec(["1 + x3", "0", "0", "1"], V4),
    ]
    v = involutivity_check(frame, [0.0, 0.0, 0.0, 0.0])
    assert not v.ok
    assert v.residual == pytest.approx(math.sqrt(2) / 2, abs=1e-9)
    assert v.residual >= 0.5


def test_involutivity_image_of_rank_one_field():
    V2 = ("x", "y")
    frame = [_vec(["x^2", "x*y"], V2), _vec(["x*y", "y^2"], V2)]
    v = involutivity_check(frame, [1.0, 1.0])
    assert v.ok and v.rank == 1


def test_involutivity_rank_collapse():
    V2 = ("x", "y")
    frame = [_vec(["x", "0"], V2)]
    with pytest.raises(RankError):
        involutivity_check(frame, [0.0, 0.0])


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------

V3 = ("x1", "x2", "x3")


def split_field():
    return OpField.from_exprs(
        [["x1", "1", "0"], ["x2", "0", "0"], ["0", "0", "x3 + 10"]], V3
    )


def split_factorization():
    return Factorization(
        [parse_poly("0 - x2", V3), parse_poly("0 - x1", V3), parse_poly("1", V3)],
        [parse_poly("0 - x3 - 10", V3), parse_poly("1", V3)],
    )


def test_splitting_companion_plus_shifted_scalar():
    v = splitting_check(split_field(), [0.0, 0.0, 0.0], split_factorization(), samples=15)
    assert v.ok
    assert v.idempotent_residual < 1e-9
    assert v.commute_residual < 1e-9
    assert v.torsion_residual < 1e-5
    assert v.block_residual < 1e-9


def test_splitting_varying_projector_field():
    """Conjugating by the unipotent map y = (x1 + x3^2, x2, x3) makes the
    projector field genuinely x-dependent; all residuals must survive."""
    L = split_field()
    phi = [
        parse_poly("x1 + x3^2", V3),
        parse_poly("x2", V3),
        parse_poly("x3", V3),
    ]
    Jp = OpField.from_exprs(
        [["1", "0", "2*x3"], ["0", "1", "0"], ["0", "0", "1"]], V3
    )
    Jm = OpField.from_exprs(
        [["1", "0", "0 - 2*x3"], ["0", "1", "0"], ["0", "0", "1"]], V3
    )
    M = (Jp @ L.substitute(phi, V3)) @ Jm
    fact = Factorization(
        [parse_poly("0 - x2", V3), parse_poly("0 - x1 - x3^2", V3), parse_poly("1", V3)],
        [parse_poly("0 - x3 - 10", V3), parse_poly("1", V3)],
    )
    v = splitting_check(M, [0.0, 0.0, 0.0], fact, samples=10)
    assert v.ok
    assert v.torsion_residual < 1e-5


def test_splitting_rejects_repeated_factor():
    V2 = ("x1", "x2")
    L = OpField.from_exprs([["x1", "0"], ["0", "x1"]], V2)
    fact = Factorization(
        [parse_poly("0 - x1", V2), parse_poly("1", V2)],
        [parse_poly("0 - x1", V2), parse_poly("1", V2)],
    )
    with pytest.raises(FactorizationError):
        splitting_check(L, [0.0, 5.0], fact, samples=4)


def test_splitting_already_diagonal():
    V2 = ("x1", "x2")
    L = OpField.from_exprs([["x1", "0"], ["0", "x2"]], V2)
    fact = Factorization(
        [parse_poly("0 - x1", V2), parse_poly("1", V2)],
        [parse_poly("0 - x2", V2), parse_poly("1", V2)],
    )
    v = splitting_check(L, [0.0, 5.0], fact, samples=10)
    assert v.ok
