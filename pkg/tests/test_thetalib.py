from fractions import Fraction

import pytest
import sympy

from transgression.errors import NotInRing
from transgression.exactscalar import PI, QSeries, Scalar, qs_invert, qs_tshift
from transgression.numericheck import theta_eval
from transgression.thetalib import (THETA_KINDS, WSeries, decompose_gamma0_2, eisenstein_e4, eta,
                                    jacobi_identity_check, modular_table, reconstruct_gamma0_2,
                                    theta_expand, theta_logderiv, theta_nulls)


def q(d, trunc):
    return QSeries(d, trunc)


@pytest.fixture(scope="module")
def tab():
    return modular_table(73)


# listed leading coefficients
@pytest.mark.parametrize("name,idx,listed", [
    ("delta", 0, {0: Fraction(1, 4), 24: 6, 48: 6}),
    ("eps", 0, {0: Fraction(1, 16), 24: -1, 48: 7}),
    ("delta", 1, {0: Fraction(-1, 8), 12: -3, 24: -3}),
    ("eps", 1, {12: 1, 24: 8}),
    ("delta", 2, {0: Fraction(-1, 8), 12: 3, 24: -3}),
    ("eps", 2, {12: -1, 24: 8}),
])
def test_listed_expansions(tab, name, idx, listed):
    f = getattr(tab, name)[idx]
    cut = max(listed) + 1
    assert f.truncate(cut) == q(listed, cut)


def test_e4_divisor_sums():
    N = 24 * 8
    e4 = eisenstein_e4(N)
    for n in range(1, 8):
        assert e4.coefficient(24 * n) == Scalar.pi_power(0, 240 * int(sympy.divisor_sigma(n, 3)))


def test_e4_from_delta_eps_and_thetas(tab):
    e4 = eisenstein_e4(73)
    assert e4 == (tab.delta[1] ** 2) * 64 - tab.eps[1] * 48
    t1, t2, t3 = theta_nulls(73)
    assert e4 * 2 == t1 ** 8 + t2 ** 8 + t3 ** 8


def test_eta_pentagonal():
    # Euler: prod (1 - q^n) = sum (-1)^k q^{k(3k-1)/2}
    N = 24 * 30
    e = eta(N)
    expect = {}
    for k in range(-10, 11):
        p = k * (3 * k - 1) // 2
        if 24 * p + 1 < N:
            expect[24 * p + 1] = -1 if k % 2 else 1
    assert e == QSeries(expect, N)


def test_theta_prime_is_two_eta_cubed():
    # Jacobi: eta^3 = sum (-1)^n (2n+1) q^{(2n+1)^2/8}
    N = 24 * 12
    w1 = theta_expand("theta", 1, N)[1]
    expect = {3 * (2 * n + 1) ** 2: 2 * (-1) ** n * (2 * n + 1) for n in range(10) if 3 * (2 * n + 1) ** 2 < N}
    assert w1 == QSeries(expect, N)
    assert w1 == (eta(N) ** 3) * 2


def test_jacobi_identity_exact():
    assert jacobi_identity_check(241).is_zero()


@pytest.mark.parametrize("kind", THETA_KINDS)
def test_parity(kind):
    ws = theta_expand(kind, 5, 49)
    assert ws.parity_defects(1 if kind == "theta" else 0) == []


@pytest.mark.parametrize("kind", THETA_KINDS)
@pytest.mark.parametrize("tau", [2j, 1.5j + 0.3])
def test_expansion_matches_product(kind, tau):
    # independent route: evaluate the infinite product numerically
    v = 0.11 + 0.02j
    N = 24 * 12
    ws = theta_expand(kind, 12, N)
    w = complex(PI.to_complex()) * v
    val = sum(c.evaluate(tau) * w ** d for d, c in enumerate(ws.coeffs))
    assert abs(val - theta_eval(kind, v, tau)) < 1e-9


def test_tshift_swaps_theta2_theta3():
    a, b = theta_expand("theta2", 4, 73), theta_expand("theta3", 4, 73)
    assert a.tshift() == b
    assert b.tshift() == a


def test_tshift_of_modular_forms(tab):
    assert qs_tshift(tab.delta[1]) == tab.delta[2]
    assert qs_tshift(tab.eps[1]) == tab.eps[2]
    assert qs_tshift(tab.delta[0]) == tab.delta[0]


def test_logderiv_reg_coefficients():
    # 1/z - theta'/theta: z^1 coefficient pi^2 E2/3, z^3 coefficient pi^4 E4/45
    N = 73
    reg = theta_logderiv("theta_reg", 3, N)
    e2 = QSeries({0: 1, 24: -24, 48: -72, 72: -96}, N)
    assert reg[1] == e2 * Scalar.pi_power(2, Fraction(1, 3))
    assert reg[3] == eisenstein_e4(N) * Scalar.pi_power(4, Fraction(1, 45))
    assert reg[0].is_zero() and reg[2].is_zero()


def test_logderiv_numeric():
    tau, z = 1.2j, 0.07
    for kind in ("theta1", "theta2", "theta3"):
        ws = theta_logderiv(kind, 9, 24 * 10)
        val = sum(c.evaluate(tau) * z ** d for d, c in enumerate(ws.coeffs))
        num = theta_eval(kind, z, tau, derivative=True) / theta_eval(kind, z, tau)
        assert abs(val - num) < 1e-8


def test_decompose_roundtrip(tab):
    f = (tab.delta[1] ** 3) * 5 + tab.delta[1] * tab.eps[1] * Fraction(-2, 3)
    c = decompose_gamma0_2(f, 6, tab)
    assert c[(3, 0)] == Scalar.pi_power(0, 5)
    assert c[(1, 1)] == Scalar.pi_power(0, Fraction(-2, 3))
    assert reconstruct_gamma0_2(c, 73, tab) == f


def test_decompose_rejects(tab):
    with pytest.raises(NotInRing):
        decompose_gamma0_2(tab.delta[0], 2, tab)
    with pytest.raises(ValueError):
        decompose_gamma0_2(tab.delta[1], 3, tab)


def test_wseries_algebra():
    a = theta_expand("theta3", 6, 49)
    one = a * a.inverse()
    assert one[0] == QSeries.one(49)
    assert all(one[d].is_zero() for d in range(1, 7))
    b = a.scale(qs_invert(a[0]))
    assert b.log().exp() == b
    assert b.rescale(Scalar.pi_power(0, 2))[2] == b[2] * 4
