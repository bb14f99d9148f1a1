import json
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st
from sympy.combinatorics import Permutation

from transgression.errors import BranchError, FlatnessViolation, NotNilpotent, ShapeError
from transgression.exactscalar import QSeries
from transgression.formcalc import (ConnectionPair, Form, FormSeries, MatrixForm, apply_series,
                                    bianchi_residual, curvature, curvature_family, det_cofactor, det_half,
                                    power_traces, random_connection, random_pair, random_point, tr_f,
                                    transgress_det_half, transgress_tr, wedge_sign)

M = 5


@st.composite
def forms(draw, m=M, maxdeg=3):
    f = Form(m)
    for _ in range(draw(st.integers(0, 4))):
        exps = draw(st.lists(st.integers(0, 2), min_size=m, max_size=m))
        k = draw(st.integers(0, maxdeg))
        idx = draw(st.lists(st.integers(0, m - 1), min_size=k, max_size=k, unique=True))
        c = draw(st.integers(-3, 3))
        f.iadd(Form.monomial(m, exps, idx, c))
    return f


def _homog(f):
    return [f.degree_part(k) for k in f.degrees()]


@given(st.sets(st.integers(0, 7)), st.sets(st.integers(0, 7)))
def test_wedge_sign_vs_permutation(a, b):
    a, b = sorted(a - b), sorted(b - a)
    I = sum(1 << i for i in a)
    J = sum(1 << i for i in b)
    seq = a + b
    perm = Permutation([sorted(seq).index(x) for x in seq]) if seq else Permutation([])
    assert wedge_sign(I, J) == (1 if perm.is_even else -1)


@given(forms(), forms(), forms())
def test_wedge_associative(a, b, c):
    assert (a ^ b) ^ c == a ^ (b ^ c)


@given(forms(), forms())
def test_graded_commutative(a, b):
    for x in _homog(a):
        for y in _homog(b):
            p, q = x.degrees()[0], y.degrees()[0]
            assert x ^ y == (y ^ x).scale((-1) ** (p * q))


@given(forms())
def test_d_squared_zero(a):
    assert a.d().d().is_zero()


@given(forms(), forms())
def test_leibniz(a, b):
    for x in _homog(a):
        p = x.degrees()[0]
        assert (x ^ b).d() == (x.d() ^ b) + (x ^ b.d()).scale((-1) ** p)


def test_d_matches_sympy():
    x1, x2 = sympy.symbols("x1 x2")
    f = Form.monomial(3, [2, 1, 0], (), 3)  # 3 x1^2 x2
    df = f.d()
    # coefficients of dx1, dx2 from sympy partial derivatives
    p = 3 * x1 ** 2 * x2
    expect = Form.monomial(3, [1, 1, 0], (0,), int(sympy.diff(p, x1).subs({x1: 1, x2: 1}))) \
        + Form.monomial(3, [2, 0, 0], (1,), int(sympy.diff(p, x2).subs({x1: 1, x2: 1})))
    assert df == expect


def test_integrate_t_and_eval():
    t = Form.t(3)
    f = (t ^ t ^ t).scale(4) + (Form.dx(3, 0) ^ t)
    assert f.integrate_t() == Form.constant(3, 1) + Form.dx(3, 0).scale(Fraction(1, 2))
    assert f.eval_t(2) == Form.constant(3, 32) + Form.dx(3, 0).scale(2)


def test_form_json_roundtrip():
    f = Form.monomial(4, [1, 0, 2, 0], (1, 3), Fraction(-3, 7)) + Form.dx(4, 0)
    g = Form.from_json(4, json.loads(json.dumps(f.to_json())))
    assert g == f


def test_bianchi_and_curvature():
    A = random_connection(4, 3, 2, degree_cap=2, nterms=2)
    R = curvature(A)
    assert bianchi_residual(A, R).is_zero()
    assert R.degrees() == [2]


def test_chern_weil_closed():
    A = random_connection(5, 3, 4, degree_cap=2, nterms=2)
    R = curvature(A)
    for k, p in power_traces(R, 2).items():
        assert p.d().is_zero()
    # tr R^k for gl(n) is generally nonzero: non-vacuity
    assert not power_traces(R, 1)[1].is_zero()


def test_transgress_tr_exactness():
    pair = random_pair(5, 3, 11, degree_cap=1, nterms=2)
    f = [Fraction(0), Fraction(0), Fraction(1), Fraction(0), Fraction(1)]  # x^2 + x^4
    cs = transgress_tr(f, pair)
    lhs = cs.d()
    rhs = tr_f(f, curvature(pair.A1)) - tr_f(f, curvature(pair.A0))
    assert (lhs - rhs).is_zero()
    assert not rhs.is_zero()


@pytest.mark.parametrize("n", [3, 4])
def test_det_half_squared_is_det(n):
    # det^{1/2}(f(X))^2 = det f(X) computed by cofactor expansion
    A = random_connection(4, n, n, degree_cap=2, nterms=3, antisymmetric=True)
    X = curvature(A).at_point(random_point(4, n))
    f = [Fraction(1), Fraction(0), Fraction(1, 3), Fraction(0), Fraction(-1, 5)]
    h = det_half(f, X)
    d = det_cofactor(apply_series(f, X))
    assert (h.wedge(h) - d).is_zero()
    assert not (h - FormSeries.from_form(Form.constant(4, 1))).is_zero()


def test_det_half_errors():
    X = MatrixForm.identity(2, 2)
    with pytest.raises(NotNilpotent):
        det_half([Fraction(1), Fraction(1)], X)
    R = curvature(random_connection(2, 2, 0, antisymmetric=True))
    with pytest.raises(BranchError):
        det_half([Fraction(2), Fraction(1)], R)


def test_transgress_det_half_exactness():
    pair = random_pair(5, 3, 3, degree_cap=2, nterms=3, antisymmetric=True)
    f = [Fraction(1), Fraction(0), Fraction(1, 6), Fraction(0), Fraction(7, 360)]
    cs = transgress_det_half(f, pair)
    diff = det_half(f, curvature(pair.A1)) - det_half(f, curvature(pair.A0))
    assert (cs.d() - diff).is_zero()
    assert not diff.is_zero()


def test_connection_pair_checks():
    A = random_connection(3, 2, 1)
    with pytest.raises(ShapeError):
        ConnectionPair(3, 2, A, curvature(A))
    with pytest.raises(ShapeError):
        ConnectionPair(3, 2, A, random_connection(4, 2, 1))
    with pytest.raises(FlatnessViolation):
        ConnectionPair(3, 2, MatrixForm.zero(3, 2), A, claims_flat=True)


def test_matrix_json_roundtrip():
    A = random_connection(3, 3, 5)
    B = MatrixForm.from_json(3, json.loads(json.dumps(A.to_json())))
    assert (A - B).is_zero()


def test_formseries_scale_and_tshift():
    f = Form.dx(3, 0) ^ Form.dx(3, 1)
    fs = FormSeries.from_form(f, QSeries({0: 1, 12: 2}, 30), 30)
    sh = fs.tshift()
    assert sh.coefficient_table()[next(iter(sh.coefficient_table()))] == QSeries({0: 1, 12: -2}, 30)
    assert fs.d().is_zero()


def test_curvature_family_endpoints():
    pair = random_pair(3, 2, 9, degree_cap=1, nterms=2)
    Rt = curvature_family(pair)
    assert (Rt.eval_t(0) - curvature(pair.A0)).is_zero()
    assert (Rt.eval_t(1) - curvature(pair.A1)).is_zero()
