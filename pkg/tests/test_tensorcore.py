import random
from fractions import Fraction

import numpy as np
import pytest

from nijcalc.errors import AmbiguousClusterError, BackendError, DimensionError
from nijcalc.scalarfield import Jet, JetRule, Poly, RatFn, parse_poly
from nijcalc.tensorcore import (
    OpField,
    classify_point,
    fn_bracket,
    is_nijenhuis,
    kernel_bracket_check,
    nijenhuis_from_arrays,
    nijenhuis_on_form,
    nijenhuis_residual_at,
    nijenhuis_tensor,
    quotient_wellposed_check,
)

V2 = ("x", "y")
V3 = ("x1", "x2", "x3")


def rand_poly(rng, vars, deg=2, terms=3, span=3):
    p = Poly.zero(vars)
    for _ in range(terms):
        e = [0] * len(vars)
        for _ in range(rng.randint(0, deg)):
            e[rng.randrange(len(vars))] += 1
        p = p + Poly(vars, {tuple(e): Fraction(rng.randint(-span, span))})
    return p


def rand_field(rng, vars, **kw):
    n = len(vars)
    return OpField([[rand_poly(rng, vars, **kw) for _ in range(n)] for _ in range(n)], vars)


def kobayashi_field():
    KV = ("x1", "x2", "x3", "x4")
    return OpField.from_exprs(
        [
            ["0", "0", "0", "0"],
            ["1", "0", "0", "0 - 1 - x3"],
            ["0", "0", "0", "0"],
            ["0", "0", "0", "0"],
        ],
        KV,
    )


# ---------------------------------------------------------------------------
# OpField basics
# ---------------------------------------------------------------------------


def test_opfield_rejects_nonsquare():
    with pytest.raises(DimensionError):
        OpField.from_exprs([["x", "y"]], V2)


def test_opfield_rejects_mixed_backend():
    rule = JetRule(lambda pt: Jet(1.0, (0.0, 0.0)), 2)
    with pytest.raises(BackendError):
        OpField([[parse_poly("x", V2), rule], [rule, rule]], V2)


def test_opfield_rejects_wrong_arity_rule():
    rule = JetRule(lambda pt: Jet(1.0, (0.0,)), 1)
    with pytest.raises(DimensionError):
        OpField([[rule]], V2)


def test_opfield_algebra_round_trip():
    L = OpField.from_exprs([["x", "1"], ["y", "0"]], V2)
    I = OpField.identity(V2)
    assert (L @ I).to_strings() == L.to_strings()
    assert (L + OpField.zero(V2)).to_strings() == L.to_strings()
    assert L.shift(Fraction(1, 2)).entry(0, 0) - L.entry(0, 0) == Poly.const(V2, Fraction(1, 2))
    assert str(L.power(2).entry(0, 0)) == "x^2 + y"
    assert str(L.trace()) == "x"
    assert L.transpose().entry(0, 1) == L.entry(1, 0)


def test_opfield_eval_jet_matches_symbolic_gradient():
    L = OpField.from_exprs([["x^2", "x*y"], ["x*y", "y^2"]], V2)
    pt = [0.3, -0.7]
    A, DA = L.eval_jet(pt)
    for i in range(2):
        for j in range(2):
            assert A[i, j] == pytest.approx(float(L.entry(i, j).eval(pt)), abs=1e-14)
            for l in range(2):
                want = float(L.entry(i, j).diff(l).eval(pt))
                assert DA[i, j, l] == pytest.approx(want, abs=1e-14)


# ---------------------------------------------------------------------------
# the torsion itself
# ---------------------------------------------------------------------------


def test_constant_field_is_nijenhuis():
    L = OpField.from_exprs([["1", "2"], ["3", "4"]], V2)
    assert nijenhuis_tensor(L).is_zero()


def test_outer_product_field_is_nijenhuis():
    L = OpField.from_exprs([["x^2", "x*y"], ["x*y", "y^2"]], V2)
    assert nijenhuis_tensor(L).is_zero()


def test_companion_field_is_nijenhuis():
    L = OpField.from_exprs([["x1", "1", "0"], ["x2", "0", "1"], ["x3", "0", "0"]], V3)
    v = is_nijenhuis(L)
    assert v.ok and v.mode == "symbolic" and v.witnesses == []


def test_scalar_multiple_of_identity_is_nijenhuis():
    lam = parse_poly("x^2 + y", V2)
    L = OpField.diagonal([lam, lam], V2)
    assert nijenhuis_tensor(L).is_zero()


def test_kobayashi_field_is_nijenhuis_with_vanishing_square():
    L = kobayashi_field()
    assert nijenhuis_tensor(L).is_zero()
    assert (L @ L).is_zero_matrix()


def test_swap_field_torsion_components():
    L = OpField.from_exprs([["0", "x"], ["y", "0"]], V2)
    N = nijenhuis_tensor(L)
    assert str(N.comps[0][0][1]) == "x"
    assert str(N.comps[1][0][1]) == "-y"
    v = is_nijenhuis(L)
    assert not v.ok
    assert any("[1;1,2]" in w for w in v.witnesses)


def test_torsion_antisymmetric_in_lower_indices():
    rng = random.Random(11)
    for _ in range(4):
        N = nijenhuis_tensor(rand_field(rng, V3))
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    assert (N.comps[i][j][k] + N.comps[i][k][j]).is_zero


def test_torsion_matches_vector_field_definition():
    """N(u, v) = [Lu, Lv] - L[Lu, v] - L[u, Lv] + L^2 [u, v], exactly."""
    rng = random.Random(23)

    def lie(u, v, n):
        z = Poly.zero(u[0].vars)
        return [
            sum((u[j] * v[i].diff(j) - v[j] * u[i].diff(j) for j in range(n)), z)
            for i in range(n)
        ]

    def apply(M, u):
        z = Poly.zero(u[0].vars)
        return [sum((M.rows[i][j] * u[j] for j in range(len(u))), z) for i in range(len(u))]

    for n, vars in ((2, V2), (3, V3)):
        for _ in range(3):
            L = rand_field(rng, vars)
            u = [rand_poly(rng, vars) for _ in range(n)]
            v = [rand_poly(rng, vars) for _ in range(n)]
            N = nijenhuis_tensor(L)
            Lu, Lv = apply(L, u), apply(L, v)
            want = [
                a - b - c + d
                for a, b, c, d in zip(
                    lie(Lu, Lv, n),
                    apply(L, lie(Lu, v, n)),
                    apply(L, lie(u, Lv, n)),
                    apply(L @ L, lie(u, v, n)),
                )
            ]
            z = Poly.zero(vars)
            for i in range(n):
                got = sum(
                    (N.comps[i][j][k] * u[j] * v[k] for j in range(n) for k in range(n)), z
                )
                assert (got - want[i]).is_zero


def test_torsion_invariant_under_identity_shift():
    rng = random.Random(5)
    L = rand_field(rng, V2)
    N = nijenhuis_tensor(L)
    M = nijenhuis_tensor(L.shift(Fraction(3, 2)))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                assert (N.comps[i][j][k] - M.comps[i][j][k]).is_zero


def test_numeric_matches_symbolic_pointwise():
    rng = random.Random(31)
    L = rand_field(rng, V3)
    N = nijenhuis_tensor(L)
    pts = np.random.default_rng(1).uniform(-1, 1, size=(10, 3))
    for pt in pts:
        A, DA = L.eval_jet(pt)
        got = nijenhuis_from_arrays(A, DA)
        want = N.eval(pt)
        assert np.max(np.abs(got - want)) < 1e-9


def test_numeric_mode_on_opaque_rules():
    def entry(i, j):
        if (i, j) == (1, 0):
            return JetRule(lambda pt: Jet(1.0, (0.0,) * 4), 4)
        if (i, j) == (1, 3):
            return JetRule(lambda pt: Jet(-1.0 - pt[2], (0.0, 0.0, -1.0, 0.0)), 4)
        return JetRule(lambda pt: Jet(0.0, (0.0,) * 4), 4)

    L = OpField([[entry(i, j) for j in range(4)] for i in range(4)], ("x1", "x2", "x3", "x4"))
    v = is_nijenhuis(L, samples=25)
    assert v.mode == "numeric" and v.ok and v.samples == 25
    with pytest.raises(BackendError):
        is_nijenhuis(L, mode="symbolic")


def test_numeric_mode_rational_entries_avoid_poles():
    one = parse_poly("1", V2)
    f = RatFn(one, parse_poly("1 - x", V2))
    g = RatFn(one, parse_poly("1 + y^2", V2))
    zero = RatFn(Poly.zero(V2), one)
    L = OpField([[f, zero], [zero, g]], V2)
    v = is_nijenhuis(L, mode="numeric")
    assert v.ok and v.residual < 1e-9


def test_residual_at_point_positive_for_swap_field():
    L = OpField.from_exprs([["0", "x"], ["y", "0"]], V2)
    assert nijenhuis_residual_at(L, [0.5, 0.25]) == pytest.approx(0.5, abs=1e-12)


# ---------------------------------------------------------------------------
# polarization bracket
# ---------------------------------------------------------------------------


def test_bracket_diagonal_is_twice_torsion():
    rng = random.Random(41)
    L = rand_field(rng, V2)
    N = nijenhuis_tensor(L)
    B = fn_bracket(L, L)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                assert (B.comps[i][j][k] - 2 * N.comps[i][j][k]).is_zero


def test_bracket_with_identity_vanishes():
    rng = random.Random(43)
    L = rand_field(rng, V3)
    assert fn_bracket(L, OpField.identity(V3)).is_zero()


def test_bracket_of_diagonal_with_compatible_perturbation():
    D = OpField.from_exprs([["x1", "0"], ["0", "x2"]], ("x1", "x2"))
    R = OpField.from_exprs([["x2^2", "2*x2*(x1 - x2)"], ["0", "0"]], ("x1", "x2"))
    assert fn_bracket(D, R).is_zero()


def test_bracket_symmetric_and_additive():
    rng = random.Random(47)
    L1, L2, L3 = (rand_field(rng, V2) for _ in range(3))
    B12 = fn_bracket(L1, L2)
    B21 = fn_bracket(L2, L1)
    Bsum = fn_bracket(L1 + L2, L3)
    B13 = fn_bracket(L1, L3)
    B23 = fn_bracket(L2, L3)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                assert (B12.comps[i][j][k] - B21.comps[i][j][k]).is_zero
                assert (
                    Bsum.comps[i][j][k] - B13.comps[i][j][k] - B23.comps[i][j][k]
                ).is_zero


# ---------------------------------------------------------------------------
# action on 1-forms
# ---------------------------------------------------------------------------


def test_on_form_pairs_with_torsion():
    rng = random.Random(53)
    for trial in range(30):
        vars = V2 if trial % 2 == 0 else V3
        n = len(vars)
        L = rand_field(rng, vars)
        alpha = [rand_poly(rng, vars) for _ in range(n)]
        beta = nijenhuis_on_form(L, alpha)
        C = nijenhuis_tensor(L).contract_lower(alpha)
        for j in range(n):
            for k in range(n):
                assert (beta[j][k] - C[k][j]).is_zero


def test_on_form_zero_form_maps_to_zero():
    rng = random.Random(59)
    L = rand_field(rng, V2)
    beta = nijenhuis_on_form(L, [Poly.zero(V2), Poly.zero(V2)])
    assert all(b.is_zero for row in beta for b in row)


def test_torsion_transforms_tensorially_under_linear_maps():
    """Pull back by a constant linear map A: the tensor of A^-1 L(Ax) A must
    be the A-transform of the tensor of L, pointwise to 1e-9."""
    rng = random.Random(61)
    L = rand_field(rng, V2)
    A = np.array([[2.0, 1.0], [1.0, 1.0]])
    Ainv = np.linalg.inv(A)
    N = nijenhuis_tensor(L)
    pts = np.random.default_rng(3).uniform(-1, 1, size=(10, 2))
    for y in pts:
        x = A @ y
        # transformed tensor at y: (A^-1)^i_a N^a_bc(x) A^b_j A^c_k
        want = np.einsum("ia,abc,bj,ck->ijk", Ainv, N.eval(x), A, A)
        entries = [
            [
                JetRule(
                    lambda pt, i=i, j=j: _pullback_jet(L, A, Ainv, pt, i, j),
                    2,
                )
                for j in range(2)
            ]
            for i in range(2)
        ]
        M = OpField(entries, V2)
        Lv, DL = M.eval_jet(y)
        got = nijenhuis_from_arrays(Lv, DL)
        assert np.max(np.abs(got - want)) < 1e-9 * max(1.0, np.max(np.abs(want)))


def _pullback_jet(L, A, Ainv, pt, i, j):
    """Jet of (A^-1 L(A x) A)^i_j at pt."""
    x = A @ np.asarray(pt, dtype=float)
    Lv, DL = L.eval_jet(x)
    val = (Ainv @ Lv @ A)[i, j]
    # d/d pt_m = A[l, m] d/d x_l
    grads = np.einsum("ab,abl,lm->m", np.outer(Ainv[i], A[:, j]), DL, A)
    return Jet(float(val), tuple(float(g) for g in grads))


def test_on_form_vanishes_for_nijenhuis_field():
    L = OpField.from_exprs([["x1", "1", "0"], ["x2", "0", "1"], ["x3", "0", "0"]], V3)
    alpha = [parse_poly(t, V3) for t in ("x2", "x1*x3", "1")]
    beta = nijenhuis_on_form(L, alpha)
    assert all(b.is_zero for row in beta for b in row)


# ---------------------------------------------------------------------------
# quotient well-posedness
# ---------------------------------------------------------------------------


def test_quotient_lower_left_obstruction():
    L = OpField.from_exprs(
        [["x1", "0", "0"], ["0", "x2", "0"], ["x1", "0", "x3"]], V3
    )
    v = quotient_wellposed_check(L, 2)
    assert (v.lower_left_zero, v.base_independent, v.quotient_nijenhuis) == (False, None, None)
    assert not v.ok and v.witnesses


def test_quotient_base_dependence_obstruction():
    L = OpField.from_exprs(
        [["x1", "0", "0"], ["0", "x2", "0"], ["0", "0", "x1 + x3"]], V3
    )
    v = quotient_wellposed_check(L, 2)
    assert (v.lower_left_zero, v.base_independent, v.quotient_nijenhuis) == (True, False, None)


def test_quotient_fails_when_quotient_has_torsion():
    V4 = ("x1", "x2", "y1", "y2")
    L = OpField.from_exprs(
        [
            ["x1", "1", "0", "0"],
            ["x2", "0", "0", "0"],
            ["0", "0", "0", "y1"],
            ["0", "0", "y2", "0"],
        ],
        V4,
    )
    v = quotient_wellposed_check(L, 2)
    assert (v.lower_left_zero, v.base_independent, v.quotient_nijenhuis) == (True, True, False)


def test_quotient_well_posed():
    V4 = ("x1", "x2", "y1", "y2")
    L = OpField.from_exprs(
        [
            ["x1", "1", "0", "0"],
            ["x2", "0", "0", "0"],
            ["0", "0", "y1", "0"],
            ["0", "0", "0", "y2"],
        ],
        V4,
    )
    v = quotient_wellposed_check(L, 2)
    assert v.ok


def test_quotient_split_index_bounds():
    L = OpField.identity(V2)
    with pytest.raises(DimensionError):
        quotient_wellposed_check(L, 0)
    with pytest.raises(DimensionError):
        quotient_wellposed_check(L, 2)


# ---------------------------------------------------------------------------
# kernel bracket property
# ---------------------------------------------------------------------------


def test_kernel_bracket_kobayashi():
    L = kobayashi_field()
    rng = np.random.default_rng(9)
    for pt in rng.uniform(-1, 1, size=(20, 4)):
        v = kernel_bracket_check(L, pt)
        assert v.ok and v.kernel_dim == 3 and v.residual < 1e-9


def test_kernel_bracket_vacuous_for_invertible():
    L = OpField.from_exprs([["2", "0"], ["0", "3"]], V2)
    v = kernel_bracket_check(L, [0.1, 0.2])
    assert v.ok and v.kernel_dim == 0 and v.residual == 0.0


def test_kernel_bracket_constant_nilpotent():
    L = OpField.from_exprs([["0", "1"], ["0", "0"]], V2)
    v = kernel_bracket_check(L, [0.4, -0.6])
    assert v.ok and v.kernel_dim == 1


def test_kernel_bracket_detects_failure():
    L = OpField.from_exprs(
        [["0", "0", "0"], ["0", "0", "0"], ["x2", "0", "1"]], V3
    )
    assert not nijenhuis_tensor(L).is_zero()
    v = kernel_bracket_check(L, [0.2, 0.4, -0.3])
    assert not v.ok and v.kernel_dim == 2 and v.residual > 0.1


# ---------------------------------------------------------------------------
# pointwise classification
# ---------------------------------------------------------------------------


def test_classify_companion_origin_single_block():
    L = OpField.from_exprs([["x1", "1", "0"], ["x2", "0", "1"], ["x3", "0", "0"]], V3)
    pc = classify_point(L, [0.0, 0.0, 0.0])
    assert len(pc.segre) == 1
    cell = pc.segre[0]
    assert cell.blocks == (3,) and cell.multiplicity == 3
    assert abs(cell.value) < 1e-9
    assert pc.gl_regular
    assert pc.diff_nondegenerate
    assert not pc.scalar_type


def test_classify_diagonal_collision_origin():
    L = OpField.from_exprs([["x1", "0"], ["0", "x2"]], ("x1", "x2"))
    pc = classify_point(L, [0.0, 0.0])
    assert [c.blocks for c in pc.segre] == [(1, 1)]
    assert not pc.gl_regular
    assert pc.scalar_type
    # coefficient differentials collapse on the diagonal locus
    assert not pc.diff_nondegenerate
    off = classify_point(L, [0.25, -0.75])
    assert off.gl_regular and off.diff_nondegenerate and not off.scalar_type
    assert [c.blocks for c in off.segre] == [(1,), (1,)]


def test_classify_constant_semisimple():
    L = OpField.from_exprs([["1", "0"], ["0", "2"]], V2)
    pc = classify_point(L, [0.3, 0.7])
    assert [(c.value.real, c.blocks) for c in pc.segre] == [(1.0, (1,)), (2.0, (1,))]
    assert pc.gl_regular
    assert not pc.diff_nondegenerate
    assert not pc.scalar_type


def test_classify_complex_pair_sorted():
    L = OpField.from_exprs([["1", "0 - 2"], ["2", "1"]], V2)
    pc = classify_point(L, [0.0, 0.0])
    vals = pc.eigenvalues
    assert vals[0].imag < vals[1].imag
    assert all(abs(v.real - 1) < 1e-9 for v in vals)


def test_classify_ambiguous_spectrum_raises():
    L = OpField.diagonal(
        [parse_poly("1", V2), parse_poly("1", V2) + Poly.const(V2, Fraction(1, 200000))], V2
    )
    with pytest.raises(AmbiguousClusterError):
        classify_point(L, [0.0, 0.0])
