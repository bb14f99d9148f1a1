import cmath
import math

import pytest

from transgression.csforms import gen_flat_pair
from transgression.formcalc import curvature, random_pair, random_point
from transgression.numericheck import (NumericConfig, check_cs_modularity_S, check_flat_weight_law,
                                       check_phi_modularity_S, check_transformations, e2_defect,
                                       evaluate_form_series, required_qorder, theta_eval)
from transgression.thetalib import theta_expand


def test_config_validation():
    with pytest.raises(ValueError):
        NumericConfig(tol=0)
    with pytest.raises(ValueError):
        NumericConfig(tau_samples=[1 - 1j])
    with pytest.raises(ValueError):
        theta_eval("theta", 0.1, -1j)


def test_theta_zero_and_jacobi():
    assert abs(theta_eval("theta", 0, 2j)) < 1e-15
    lhs = theta_eval("theta", 0, 2j, derivative=True)
    rhs = math.pi * theta_eval("theta1", 0, 2j) * theta_eval("theta2", 0, 2j) * theta_eval("theta3", 0, 2j)
    assert abs(lhs - rhs) < 1e-12


def test_theta3_t_law():
    for v, tau in ((0.3 + 0.1j, 2j), (-0.2, 1 + 1.5j)):
        assert abs(theta_eval("theta3", v, tau + 1) - theta_eval("theta2", v, tau)) < 1e-12


@pytest.mark.parametrize("kind", ["theta", "theta1", "theta2", "theta3"])
def test_numeric_matches_exact_expansion(kind):
    tau, v = 1.3j, 0.21 + 0.03j
    ws = theta_expand(kind, 14, 24 * 10)
    w = math.pi * v
    exact = sum(c.evaluate(tau) * w ** d for d, c in enumerate(ws.coeffs))
    assert abs(exact - theta_eval(kind, v, tau)) < 1e-9


def test_derivative_against_finite_difference():
    h = 1e-6
    for kind in ("theta", "theta1", "theta2", "theta3"):
        v, tau = 0.13 + 0.05j, 1.2j
        fd = (theta_eval(kind, v + h, tau) - theta_eval(kind, v - h, tau)) / (2 * h)
        assert abs(fd - theta_eval(kind, v, tau, derivative=True)) < 1e-6


def test_all_transformation_laws():
    rep = check_transformations(NumericConfig(tol=1e-10))
    assert rep.passed, rep.failures
    laws = {l for l, _, _ in rep.entries}
    for k in ("theta", "theta1", "theta2", "theta3"):
        assert {f"S:{k}", f"T:{k}", f"S:{k}'"} <= laws
    assert {"S:delta2", "S:eps2", "S:delta2[series]", "S:eps2[series]", "theta'(0,-1/tau)"} <= laws


def test_convergence_with_product_terms():
    # residuals of an S-law shrink as more product terms are kept
    res = []
    for terms in (1, 2, 4):
        cfg = NumericConfig(product_terms=terms, tau_samples=[1j], v_samples=[0.2 + 0.1j], tol=1)
        rep = check_transformations(cfg)
        res.append(max(r for l, _, r in rep.entries if l == "S:theta"))
    assert res[0] > res[1] > res[2]


def test_wrong_branch_fails():
    # dropping the 1/i in the S-law of theta is detected
    tau, v = 2j, 0.3 + 0.1j
    sf = cmath.sqrt(tau / 1j)
    good = sf / 1j * cmath.exp(1j * math.pi * tau * v * v) * theta_eval("theta", tau * v, tau)
    assert abs(theta_eval("theta", v, -1 / tau) - good) < 1e-10
    assert abs(theta_eval("theta", v, -1 / tau) - good * 1j) > 1e-3


def test_required_qorder():
    N = required_qorder([2j, 0.5j], 1e-10)
    assert N % 24 == 1
    assert abs(cmath.exp(2j * math.pi * 0.5j * (N - 1) / 24)) < 1e-10


def test_phi_level_s_law():
    R = curvature(random_pair(8, 4, 507, degree_cap=2, nterms=3, antisymmetric=True).A1)
    R = R.at_point(random_point(8, 0))
    rep = check_phi_modularity_S(R, 2, NumericConfig(tol=1e-8), tau0=2j)
    assert rep.passed and not rep.notes
    rep1 = check_phi_modularity_S(R, 1, NumericConfig(tol=1e-8), tau0=1j)
    assert rep1.passed


def test_cs_s_law_and_generators():
    pair = random_pair(7, 4, 2, degree_cap=1, nterms=2, antisymmetric=True)
    for tau in (2j, 1j):
        rep = check_cs_modularity_S(pair, 2, NumericConfig(tol=1e-8), tau0=tau)
        assert rep.passed and not rep.notes, rep.entries
    rep = check_cs_modularity_S(pair, 1, NumericConfig(tol=1e-8), tau0=2j)
    assert rep.passed


def test_cs_s_law_wrong_weight_fails():
    from transgression.charforms import GenusKind
    from transgression.csforms import cs_form
    pair = random_pair(7, 4, 2, degree_cap=1, nterms=2, antisymmetric=True)
    pt = random_point(7, 0)
    N = required_qorder([2j, 0.5j], 1e-10)
    cs = {k: cs_form(k, pair, N, point=pt, degrees=[7]).form for k in (GenusKind.PhiL, GenusKind.PhiW)}
    tau = 2j
    a = evaluate_form_series(cs[GenusKind.PhiL], -1 / tau)
    b = evaluate_form_series(cs[GenusKind.PhiW], tau)
    key = max(a, key=lambda k: abs(a[k]))
    assert abs(a[key] - (2 * tau) ** 4 * b[key]) < 1e-8 * abs(a[key])
    assert abs(a[key] - (2 * tau) ** 2 * b[key]) > 1e-3 * abs(a[key])


def test_flat_weight_law():
    flat = gen_flat_pair(7, 4, 0, shears=10)
    rep = check_flat_weight_law(flat, 2, NumericConfig(tol=1e-8), taus=(1j, 2j))
    assert rep.passed and not rep.notes
    # weight 2 is only quasimodular: the same law fails for the 3-form
    rep2 = check_flat_weight_law(flat, 1, NumericConfig(tol=1e-8), taus=(2j,))
    assert not rep2.passed
    assert any("quasimodular" in n for n in rep2.notes)


def test_e2_defect():
    for tau in (2j, 0.5 + 1.5j):
        assert abs(e2_defect(tau) - 6 * tau / (math.pi * 1j)) < 1e-10
