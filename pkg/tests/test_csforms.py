from fractions import Fraction

import pytest
import sympy

from transgression.charforms import GenusKind
from transgression.csforms import (E4_CONSTANT, beta_integral, bracket_slope_identities, cs_form,
                                   cs_form_dual, dim3_closed_forms, eleven_dim_independent_z,
                                   eleven_dim_ledger, exactness_residual, flat_suite, gen_flat_pair,
                                   loop_cs, loop_det_half, quasimodular_e2, tr_power, tshift_relations,
                                   tshift_witness)
from transgression.errors import DegenerateScenario, FlatnessViolation
from transgression.exactscalar import Scalar
from transgression.formcalc import (ConnectionPair, FamilyData, Form, FormSeries, MatrixForm, curvature,
                                    random_pair, random_point)

KINDS = list(GenusKind)


@pytest.fixture(scope="module")
def pair5():
    return random_pair(5, 3, 1, degree_cap=1, nterms=2)


@pytest.mark.parametrize("m,seed", [(3, 0), (5, 1)])
@pytest.mark.parametrize("kind", KINDS)
def test_exactness(m, seed, kind):
    pair = random_pair(m, 3, seed, degree_cap=1, nterms=2)
    assert exactness_residual(kind, pair, 25).is_zero()


def test_exactness_nonvacuous(pair5):
    cs = cs_form(GenusKind.PhiW, pair5, 25).form
    assert 3 in cs.degrees()
    assert not cs.is_zero()


def test_cs_has_only_degrees_4i_minus_1(pair5):
    for kind in KINDS:
        assert set(cs_form(kind, pair5, 25).form.degrees()) <= {3, 7, 11}


def test_swap_antisymmetry(pair5):
    a = cs_form(GenusKind.PhiL, pair5, 25).form
    b = cs_form(GenusKind.PhiL, pair5.swapped(), 25).form
    # CS(A1, A0) = -CS(A0, A1) up to an exact form; degree 3 part is checked through d
    assert ((a + b).d()).is_zero()


@pytest.mark.parametrize("kind", KINDS)
def test_dual_route(pair5, kind):
    fam = FamilyData.of(pair5)
    assert (cs_form(kind, fam, 25).form - cs_form_dual(kind, fam, 25)).is_zero()


def test_dim3_closed_forms():
    pair = random_pair(3, 3, 4, degree_cap=2, nterms=3, trivial_a0=True)
    res = dim3_closed_forms(pair, 49)
    assert set(res) == {"phiL", "phiW", "phiWp"}
    assert all(r.is_zero() for r in res.values())
    assert not cs_form(GenusKind.PhiL, pair, 49).form.is_zero()


def test_dim3_requires_trivial_a0():
    with pytest.raises(ValueError):
        dim3_closed_forms(random_pair(3, 2, 1), 25)
    with pytest.raises(ValueError):
        dim3_closed_forms(random_pair(4, 2, 1, trivial_a0=True), 25)


def test_bracket_slopes():
    assert all(r.is_zero() for r in bracket_slope_identities(73).values())


def test_tshift(pair5):
    flat = gen_flat_pair(5, 4, 0, shears=10)
    res = tshift_relations(pair5, 49, flat)
    assert all(r.is_zero() for r in res.values())
    assert not tshift_witness(pair5, 49).is_zero()


def test_beta_integral_sympy():
    t = sympy.symbols("t")
    for k in range(6):
        assert beta_integral(k) == Fraction(str(sympy.integrate((t ** 2 - t) ** k, (t, 0, 1))))
    assert beta_integral(3) == Fraction(-1, 140)


def test_e2_coefficients():
    e2 = quasimodular_e2(24 * 6)
    assert [e2.coefficient(24 * n).rational_value() for n in range(6)] == [1, -24, -72, -96, -168, -144]


@pytest.fixture(scope="module")
def flat7():
    return gen_flat_pair(7, 4, 0, shears=10)


def test_flat_pair_is_flat(flat7):
    assert curvature(flat7.A1).is_zero()
    assert flat7.claims_flat


def test_flat_suite_e4(flat7):
    res = flat_suite(flat7, 97, point=random_point(7, 0))
    assert res["R_t=(t^2-t)A^2"] and res["tr R_t^k=0"] and res["det_half(Psi,R_t)=1"]
    assert res["E4_status"] == "checked"
    assert res["E4_residual"].is_zero()
    assert res["weight2_residual"].is_zero()
    assert not res["tr[A^7]"].is_zero()


def test_e4_constant():
    # -1/(3225600 pi^4) = pref * s^3 * bracket z^3 coefficient * beta(3), assembled independently
    pref, s3 = Fraction(1, 8), Fraction(1, 4) ** 3
    bracket = Fraction(1, 45)  # z^3 coefficient of 1/z - theta'/theta over pi^4 E4
    total = pref * s3 * bracket * beta_integral(3)
    assert E4_CONSTANT == Scalar.pi_power(-4, total)


def test_flat_generator_degenerate():
    with pytest.raises(DegenerateScenario):
        gen_flat_pair(7, 4, 0, shears=0)
    pair = gen_flat_pair(7, 4, 0, shears=0, require_top=False)
    res = flat_suite(pair, 25)
    assert res["E4_status"] == "skipped-degenerate"


def test_flat_suite_rejects_curved():
    with pytest.raises(FlatnessViolation):
        flat_suite(random_pair(3, 2, 0), 25)


def test_loop_space():
    pair = gen_flat_pair(5, 4, 0, shears=10)
    V, Vp = loop_cs("V", pair, 49), loop_cs("Vprime", pair, 49)
    assert not V.is_zero()
    assert V.d().is_zero() and Vp.d().is_zero()
    assert (V.tshift() - Vp).is_zero()
    one = FormSeries.from_form(Form.constant(5, 1), 1, 49)
    assert (loop_det_half("V", pair, 49) - one).is_zero()
    with pytest.raises(ValueError):
        loop_cs("W", pair, 49)


@pytest.fixture(scope="module")
def ledger4():
    pair = random_pair(11, 4, 3, degree_cap=1, nterms=2, antisymmetric=True)
    return eleven_dim_ledger(pair, 73, point=random_point(11, 0))


def test_eleven_ledger_rank4(ledger4):
    assert ledger4["constants"] == {"z1": 68, "cancel": 4, "factor": 8, "rank": 4}
    assert all(r.is_zero() for r in ledger4["residuals"].values())
    assert not ledger4["z0"].is_zero() and not ledger4["z1"].is_zero()


def test_eleven_independent_z(ledger4):
    z0, z1 = eleven_dim_independent_z(ledger4["CSPhiW"])
    assert (z0 - ledger4["z0"]).is_zero()
    assert (z1 - ledger4["z1"]).is_zero()


@pytest.mark.parametrize("z1,cancel,factor", [(61, -3, 1), (68, 3, 8), (67, 4, 8)])
def test_eleven_ledger_sharp(z1, cancel, factor):
    pair = random_pair(11, 4, 3, degree_cap=1, nterms=2, antisymmetric=True)
    led = eleven_dim_ledger(pair, 73, point=random_point(11, 0), z1_constant=z1,
                            cancel_constant=cancel, cancel_factor=factor)
    assert not all(r.is_zero() for r in led["residuals"].values())


def test_eleven_needs_m11():
    with pytest.raises(ValueError):
        eleven_dim_ledger(random_pair(5, 2, 0), 25)
