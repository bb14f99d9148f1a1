import cmath
import json
import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, strategies as st

from transgression.errors import BranchError, NotInvertible
from transgression.exactscalar import (I, PI, CycloRational, QSeries, Scalar, qs_exp_log, qs_invert,
                                       qs_tshift, scalar_from_json, scalar_to_json, zeta)

fracs = st.fractions(min_value=-5, max_value=5, max_denominator=7)
cyclos = st.lists(fracs, min_size=8, max_size=8).map(CycloRational)
scalars = st.dictionaries(st.integers(-3, 3), cyclos, max_size=3).map(Scalar)


def qseries(trunc=40):
    return st.dictionaries(st.integers(0, trunc - 1), fracs, max_size=6).map(lambda d: QSeries(d, trunc))


def test_zeta_order_and_i():
    z = zeta()
    acc = CycloRational.rational(1)
    for k in range(1, 25):
        acc = acc * z
        assert (acc == CycloRational.rational(1)) == (k == 24)
    assert I * I == CycloRational.rational(-1)
    assert zeta(12) == CycloRational.rational(-1)


def test_zeta_matches_complex_value():
    for k in range(24):
        assert abs(zeta(k).to_complex() - cmath.exp(2j * math.pi * k / 24)) < 1e-12


def test_cyclotomic_polynomial_oracle():
    # the coordinates reduce modulo Phi_24 = x^8 - x^4 + 1
    x = sympy.symbols("x")
    assert sympy.Poly(sympy.cyclotomic_poly(24, x), x).all_coeffs() == [1, 0, 0, 0, -1, 0, 0, 0, 1]
    z = zeta()
    p8 = CycloRational.rational(1)
    for _ in range(8):
        p8 = p8 * z
    p4 = z * z * z * z
    assert p8 - p4 + CycloRational.rational(1) == CycloRational.rational(0)


@given(cyclos, cyclos)
def test_cyclo_mul_matches_complex(a, b):
    assert abs((a * b).to_complex() - a.to_complex() * b.to_complex()) < 1e-9 * (1 + abs(a.to_complex() * b.to_complex()))


@given(cyclos)
def test_cyclo_inverse(a):
    if a.is_zero():
        with pytest.raises(ZeroDivisionError):
            a.inverse()
    else:
        assert a * a.inverse() == CycloRational.rational(1)


@given(scalars, scalars, scalars)
def test_scalar_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a + b == b + a


@given(scalars)
def test_scalar_json_roundtrip(a):
    assert scalar_from_json(json.loads(json.dumps(scalar_to_json(a)))) == a


def test_pi_grading_is_formal():
    p = Scalar.pi_power(2, Fraction(1, 3))
    assert list(p.pi_degrees()) == [2]
    assert abs(p.to_complex() - math.pi ** 2 / 3) < 1e-12
    assert (PI * PI - Scalar.pi_power(2)).is_zero()
    # pi is transcendental: no rational combination of its powers vanishes
    assert not (PI * PI - Scalar.pi_power(0, Fraction(987, 100))).is_zero()


def test_scalar_monomial_inverse():
    p = Scalar.pi_power(-4, Fraction(-1, 3225600))
    assert p * p.inverse() == Scalar.pi_power(0)
    with pytest.raises(ZeroDivisionError):
        (PI + Scalar.pi_power(0)).inverse()


@given(qseries(), qseries(), qseries())
def test_qseries_ring(f, g, h):
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h


@given(qseries(30))
def test_qseries_inverse(f):
    f = f + QSeries.one(30)
    if f.terms.get(0) is None:
        return
    g = qs_invert(f)
    assert g.trunc == 30
    assert (f * g) == QSeries.one(30)


def test_truncation_rule_with_negative_valuation():
    f = QSeries({-3: 1, 0: 2}, 20)
    g = QSeries({0: 1, 5: 1}, 30)
    assert (f * g).trunc == min(20 + 0, 30 - 3)
    inv = qs_invert(QSeries({3: 2, 10: 1}, 40))
    assert inv.trunc == 40 - 6
    assert inv.valuation() == -3


def test_untruncated_inverse_rules():
    m = QSeries({6: 2})
    assert qs_invert(m) == QSeries({-6: Fraction(1, 2)})
    with pytest.raises(NotInvertible):
        qs_invert(QSeries({0: 1, 24: 1}))
    with pytest.raises(NotInvertible):
        qs_invert(QSeries.zero(10))
    with pytest.raises(NotInvertible):
        qs_invert(QSeries({0: PI + Scalar.pi_power(0)}, 10))


@given(qseries(36))
def test_exp_log_inverse(f):
    f = QSeries({k: c for k, c in f.terms.items() if k > 0}, 36)
    e = qs_exp_log("exp", f)
    assert qs_exp_log("log", e) == f


def test_log_branch_errors():
    with pytest.raises(BranchError):
        qs_exp_log("log", QSeries({0: 2, 1: 1}, 10))
    with pytest.raises(BranchError):
        qs_exp_log("exp", QSeries({0: 1}, 10))


def test_exp_against_sympy():
    # exp(q) truncated, independent oracle: sympy series in a plain variable
    x = sympy.symbols("x")
    ser = sympy.series(sympy.exp(x + x ** 2), x, 0, 6).removeO()
    f = QSeries({24: 1, 48: 1}, 24 * 6)
    e = qs_exp_log("exp", f)
    for k in range(6):
        assert e.coefficient(24 * k) == Scalar({0: CycloRational.rational(Fraction(str(ser.coeff(x, k))))})


def test_tshift_is_a_ring_map_of_order_24():
    f = QSeries({1: 1, 3: Fraction(2, 3), 12: 5}, 50)
    g = QSeries({2: 1, 7: -1}, 50)
    assert qs_tshift(f * g) == qs_tshift(f) * qs_tshift(g)
    h = f
    for _ in range(24):
        h = qs_tshift(h)
    assert h == f
    assert qs_tshift(QSeries({12: 1}, 30)) == QSeries({12: -1}, 30)


@given(qseries())
def test_qseries_json_roundtrip(f):
    g = QSeries.from_json(json.loads(json.dumps(f.to_json())))
    assert g == f and g.trunc == f.trunc


def test_qseries_str():
    assert str(QSeries({0: Fraction(1, 4), 24: 6, 48: 6}, 49)) == "1/4 + 6q + 6q^2"
    assert str(QSeries({12: 1, 24: 8}, 30)) == "q^{1/2} + 8q"


def test_coefficient_beyond_truncation():
    with pytest.raises(ValueError):
        QSeries({0: 1}, 10).coefficient(10)


def test_evaluate():
    f = QSeries({0: 1, 24: 240}, 48)
    tau = 2j
    assert abs(f.evaluate(tau) - (1 + 240 * cmath.exp(2j * math.pi * tau))) < 1e-12
