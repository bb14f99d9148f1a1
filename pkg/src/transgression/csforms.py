"""Transgressed (Chern-Simons type) forms of the theta-function genera.

``cs_form`` evaluates the defining integral with the logarithmic-derivative
bracket of the theta functions; ``transgress_det_half`` in formcalc is the
independent route through ``f'/f`` of the generating function.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .charforms import (GenusKind, PARTNER, _w_over_sin, _w_over_tan, a_hat_series,
                        exp_series, genus_xseries, l_series, phi_form)
from .errors import DegenerateScenario, FlatnessViolation, NotInRing
from .exactscalar import I, PI, QSeries, Scalar
from .formcalc import (ConnectionPair, FamilyData, Form, FormSeries, MatrixForm, cs_classic,
                       curvature, curvature_family, det_half, exp_power_sums, random_point,
                       transgress_det_half, transgression_integral)
from .thetalib import WSeries, decompose_gamma0_2, eisenstein_e4, modular_table, theta_logderiv

__all__ = [
    "CsResult", "bracket_series", "cs_form", "cs_form_dual", "phi_difference", "exactness_residual",
    "dim3_closed_forms", "bracket_slope_identities", "tshift_relations", "eleven_dim_ledger",
    "flat_suite", "gen_flat_pair", "loop_cs", "loop_det_half", "beta_integral", "E4_CONSTANT",
    "quasimodular_e2", "tshift_witness", "eleven_dim_integrals", "eleven_dim_independent_z",
    "decompose_cs_component", "ahat_kernel", "l_kernel", "sine_kernel", "tr_power",
]


def _pi(e: int, c=1) -> Scalar:
    return Scalar.pi_power(e, c)


# (argument scale s with z = s*x, prefactor)
_ARG = {
    GenusKind.PhiL: (_pi(-2, Fraction(1, 2)), _pi(-2, Fraction(1, 4))),
    GenusKind.PhiW: (_pi(-2, Fraction(1, 4)), _pi(-2, Fraction(1, 8))),
    GenusKind.PhiWPrime: (_pi(-2, Fraction(1, 4)), _pi(-2, Fraction(1, 8))),
    GenusKind.PsiW: (_pi(-2, Fraction(1, 4)), _pi(-2, Fraction(1, 8))),
}

# -1/(3225600 pi^4): coefficient of E4 tr[A^7] in the flat 7-form
E4_CONSTANT = _pi(-4, Fraction(-1, 3225600))


@dataclass
class CsResult:
    kind: GenusKind
    form: FormSeries
    pair: Optional[ConnectionPair]
    trunc: Optional[int]

    def component(self, degree: int) -> FormSeries:
        return self.form.degree_part(degree)


@lru_cache(maxsize=64)
def bracket_series(kind: GenusKind, D: int, N: int) -> WSeries:
    """``1/z - theta'/theta (+ theta_k'/theta_k)`` as a z-series (z^d carries pi^(d+1))."""
    kind = GenusKind.parse(kind)
    br = theta_logderiv("theta_reg", D, N)
    partner = PARTNER[kind]
    if partner is not None:
        br = br + theta_logderiv(partner, D, N)
    return br


def _family(pair, point) -> FamilyData:
    if isinstance(pair, FamilyData):
        return pair
    return FamilyData.of(pair, point)


def cs_form(kind, pair, N: int, point=None, degrees=None) -> CsResult:
    """``pref * int_0^1 Phi(R_t) tr[A * bracket(s R_t)] dt``.

    ``pair`` is a :class:`ConnectionPair` or a prepared :class:`FamilyData`
    (reuse one across kinds).  ``point`` evaluates the chart coefficients at a
    point before the algebra, which is valid for identities that do not take
    ``d`` of the result.
    """
    kind = GenusKind.parse(kind)
    fam = _family(pair, point)
    m = fam.m
    D = m // 2
    s, pref = _ARG[kind]
    f = genus_xseries(kind, D, N)
    ell = f.log()
    weights = {k: ell[k] * Fraction(1, 2) for k in range(1, D + 1)}
    br = bracket_series(kind, D, N)
    lin = {}
    sj = Scalar.pi_power(0)
    for j in range(D + 1):
        if 2 * j + 1 <= m and br[j].terms:
            lin[j] = br[j] * (pref * sj)
        sj = sj * s
    form = transgression_integral(weights, lin, fam, N, degrees)
    return CsResult(kind, form, pair if isinstance(pair, ConnectionPair) else None, N)


def cs_form_dual(kind, pair, N: int, point=None, degrees=None) -> FormSeries:
    """Same form through ``1/2 det^{1/2}(f(R_t)) tr[A f'/f(R_t)]`` of the generating function."""
    kind = GenusKind.parse(kind)
    fam = _family(pair, point)
    # f must reach degree m//2 + 1 so that f'/f covers the top form degree
    return transgress_det_half(genus_xseries(kind, fam.m // 2 + 1, N), fam, trunc=N, degrees=degrees)


def phi_difference(kind, pair: ConnectionPair, N: int) -> FormSeries:
    return phi_form(kind, curvature(pair.A1), N) - phi_form(kind, curvature(pair.A0), N)


def exactness_residual(kind, pair: ConnectionPair, N: int, fam: Optional[FamilyData] = None) -> FormSeries:
    """``d(CS) - (Phi(A1) - Phi(A0))``."""
    cs = cs_form(kind, fam or pair, N).form
    return cs.d() - phi_difference(kind, pair, N)


def beta_integral(k: int) -> Fraction:
    """``int_0^1 (t^2 - t)^k dt``."""
    from math import comb
    return sum(Fraction((-1) ** (k - i) * comb(k, i), k + i + 1) for i in range(k + 1))


# ---------------------------------------------------------------------------
# three dimensions

def bracket_slope_identities(N: int) -> Dict[str, QSeries]:
    """Residuals of the z^1 coefficients of the brackets against ``-(8/3) pi^2 delta_i``."""
    tab = modular_table(N)
    c = _pi(2, Fraction(-8, 3))
    out = {}
    for kind, name, delta in ((GenusKind.PhiL, "delta1", tab.delta[0]),
                              (GenusKind.PhiW, "delta2", tab.delta[1]),
                              (GenusKind.PhiWPrime, "delta3", tab.delta[2])):
        out[name] = bracket_series(kind, 1, N)[1] - delta * c
    return out


def dim3_closed_forms(pair: ConnectionPair, N: int) -> Dict[str, FormSeries]:
    """Residuals of the three 3-dimensional closed forms (``A0 = 0``, ``m = 3``)."""
    if pair.m != 3:
        raise ValueError("the closed forms are stated on a 3-dimensional chart")
    if not pair.A0.is_zero():
        raise ValueError("the closed forms need the trivial connection as A0")
    tab = modular_table(N)
    cs3 = cs_classic(pair.A1)
    fam = FamilyData.of(pair)
    out = {}
    for kind, delta, c in ((GenusKind.PhiL, tab.delta[0], _pi(-2, Fraction(-1, 6))),
                           (GenusKind.PhiW, tab.delta[1], _pi(-2, Fraction(-1, 24))),
                           (GenusKind.PhiWPrime, tab.delta[2], _pi(-2, Fraction(-1, 24)))):
        lhs = cs_form(kind, fam, N).form
        rhs = FormSeries.from_form(cs3, 1, N).scale(delta * c)
        out[kind.value] = lhs - rhs
    return out


# ---------------------------------------------------------------------------
# T-shift

def tshift_relations(pair: ConnectionPair, N: int, flat_pair: Optional[ConnectionPair] = None,
                     fam: Optional[FamilyData] = None) -> Dict[str, FormSeries]:
    """Residuals of the exact ``tau -> tau+1`` relations (all zero), plus a sanity witness."""
    fam = fam or FamilyData.of(pair)
    cs = {k: cs_form(k, fam, N).form for k in (GenusKind.PhiL, GenusKind.PhiW, GenusKind.PhiWPrime)}
    out = {
        "tshift(CSPhiW)-CSPhiW'": cs[GenusKind.PhiW].tshift() - cs[GenusKind.PhiWPrime],
        "tshift(CSPhiW')-CSPhiW": cs[GenusKind.PhiWPrime].tshift() - cs[GenusKind.PhiW],
        "tshift(CSPhiL)-CSPhiL": cs[GenusKind.PhiL].tshift() - cs[GenusKind.PhiL],
    }
    R1 = curvature(pair.A1)
    out["tshift(PhiW)-PhiW'"] = phi_form(GenusKind.PhiW, R1, N).tshift() - phi_form(GenusKind.PhiWPrime, R1, N)
    if flat_pair is not None:
        psi = cs_form(GenusKind.PsiW, flat_pair, N).form
        out["tshift(CSPsiW)-CSPsiW[flat]"] = psi.tshift() - psi
    return out


def tshift_witness(pair: ConnectionPair, N: int, fam: Optional[FamilyData] = None) -> FormSeries:
    """``tshift(CSPhiW) - CSPhiW``; generically nonzero."""
    cs = cs_form(GenusKind.PhiW, fam or pair, N).form
    return cs.tshift() - cs


# ---------------------------------------------------------------------------
# eleven dimensions

def _odd_kernel(base: WSeries, D: int) -> WSeries:
    """``(1 - base(w))/w`` for an even series ``base`` starting with 1."""
    one = WSeries([QSeries.one()] + [QSeries.zero()] * base.wdeg)
    return (one - base).shift_down(1).truncate(D)


@lru_cache(maxsize=16)
def ahat_kernel(D: int) -> WSeries:
    """``1/(2x) - 1/(8 pi tan(x/4pi))`` as a series in ``x``."""
    k = _odd_kernel(_w_over_tan(D + 1), D)  # 1/w - cot w
    return k.rescale(_pi(-1, Fraction(1, 4))).scale(_pi(-1, Fraction(1, 8)))


@lru_cache(maxsize=16)
def l_kernel(D: int) -> WSeries:
    """``1/(2x) - 1/(2 pi sin(x/pi))`` as a series in ``x``."""
    k = _odd_kernel(_w_over_sin(D + 1), D)  # 1/w - 1/sin w
    return k.rescale(_pi(-1)).scale(_pi(-1, Fraction(1, 2)))


@lru_cache(maxsize=16)
def sine_kernel(D: int) -> WSeries:
    """``-(1/2pi) sin(x/2pi)``."""
    from math import factorial
    s = WSeries([QSeries.constant(Fraction((-1) ** (k // 2), factorial(k)) if k % 2 else 0)
                 for k in range(D + 1)])
    return s.rescale(_pi(-1, Fraction(1, 2))).scale(_pi(-1, Fraction(-1, 2)))


def _lin(series: WSeries, m: int) -> Dict[int, QSeries]:
    return {j: series[j] for j in range(series.wdeg + 1) if 2 * j + 1 <= m and series[j].terms}


def _weights(series: WSeries, m: int) -> Dict[int, QSeries]:
    ell = series.log()
    return {k: ell[k] * Fraction(1, 2) for k in range(1, min(ell.wdeg, m // 2) + 1)}


def _ch_pre(m: int) -> Dict[int, QSeries]:
    e = exp_series(m // 2, I * _pi(-1, Fraction(1, 2)))
    return {k: e[k] for k in range(e.wdeg + 1)}


def _combine(*parts) -> Dict[int, QSeries]:
    out: Dict[int, QSeries] = {}
    for coef, series in parts:
        for j, c in series.items():
            out[j] = out[j] + c * coef if j in out else c * coef
    return out


def eleven_dim_integrals(fam: FamilyData, degree: int = 11) -> Dict[str, FormSeries]:
    """The kernel integrals entering the eleven-dimensional relations."""
    m = fam.m
    D = m // 2
    wA, wL = _weights(a_hat_series(D), m), _weights(l_series(D), m)
    K, KL, S = _lin(ahat_kernel(D), m), _lin(l_kernel(D), m), _lin(sine_kernel(D), m)
    deg = [degree]
    return {
        "AK": transgression_integral(wA, K, fam, None, deg),
        "AchK": transgression_integral(wA, K, fam, None, deg, pre=_ch_pre(m)),
        "AS": transgression_integral(wA, S, fam, None, deg),
        "LK": transgression_integral(wL, KL, fam, None, deg),
    }


def eleven_dim_ledger(pair: ConnectionPair, N: int = 72, point: Optional[Sequence] = None,
                      z1_constant: Optional[int] = None, cancel_constant: Optional[int] = None,
                      cancel_factor: int = 8) -> Dict[str, object]:
    """z0, z1 and the residuals of the weight-6 decompositions in eleven dimensions.

    ``z1_constant`` defaults to ``72 - n`` and ``cancel_constant`` to ``8 - n``
    (``61`` and ``-3`` when the rank is 11); they can be overridden to test
    sharpness.  ``cancel_factor`` multiplies the right side of the q^0
    cancellation identity.  With ``point`` the chart coefficients are
    evaluated there first (the relations are algebraic in A and R_t).
    """
    if pair.m != 11:
        raise ValueError("the eleven-dimensional ledger needs m = 11")
    n = pair.n
    c1 = 72 - n if z1_constant is None else z1_constant
    c2 = 8 - n if cancel_constant is None else cancel_constant
    fam = FamilyData.of(pair, point)
    ints = eleven_dim_integrals(fam)
    z0 = -ints["AK"]
    z1 = ints["AchK"] + ints["AS"] + ints["AK"].scale(c1)
    tab = modular_table(N)
    cs_W = cs_form(GenusKind.PhiW, fam, N, degrees=[11]).form
    cs_L = cs_form(GenusKind.PhiL, fam, N, degrees=[11]).form

    def side(z0_, z1_, delta, eps):
        d8 = delta * 8
        return z0_.scale((d8 ** 3).truncate(N)) + z1_.scale((d8 * eps).truncate(N))

    res_a = cs_W - side(z0, z1, tab.delta[1], tab.eps[1])
    res_b = cs_L - side(z0, z1, tab.delta[0], tab.eps[0]).scale(64)
    rhs_c = ints["AchK"] + ints["AS"] + ints["AK"].scale(c2)
    res_c = ints["LK"] - rhs_c.scale(cancel_factor)
    res_c_via_z = ints["LK"] - (z0.scale(64) + z1).scale(8)
    return {
        "z0": z0, "z1": z1, "CSPhiW": cs_W, "CSPhiL": cs_L,
        "constants": {"z1": c1, "cancel": c2, "factor": cancel_factor, "rank": n},
        "residuals": {"decomposition_W": res_a, "decomposition_L": res_b,
                      "cancellation": res_c, "cancellation_via_z": res_c_via_z},
        "integrals": ints,
    }


def decompose_cs_component(cs: FormSeries, weight2i: int) -> Dict[Tuple[int, int], Dict]:
    """Decompose each form coefficient of a q-series of forms in the delta_2/eps_2 basis."""
    out: Dict[Tuple[int, int], Dict] = {}
    tab = modular_table(cs.trunc)
    for key, qs in cs.coefficient_table().items():
        if qs.terms:
            out[key] = decompose_gamma0_2(qs, weight2i, tab)
    return out


def eleven_dim_independent_z(cs_W: FormSeries) -> Tuple[FormSeries, FormSeries]:
    """z0, z1 recovered from the q-expansion of ``{CSPhiW}^(11)`` alone."""
    m = cs_W.m
    z0, z1 = FormSeries(m), FormSeries(m)
    for (mask, ekey), coeffs in decompose_cs_component(cs_W, 6).items():
        mono = Form(m, {mask: {ekey: 1}})
        z0.add_product(coeffs[(3, 0)] * Fraction(1, 512), mono)
        z1.add_product(coeffs[(1, 1)] * Fraction(1, 8), mono)
    return z0, z1


# ---------------------------------------------------------------------------
# flat pairs

def _shear(m: int, n: int, i: int, j: int, p: Form, sign: int = 1) -> MatrixForm:
    M = MatrixForm.identity(m, n)
    M.rows[i][j] = p.scale(sign)
    return M


def _random_poly(m: int, rng: random.Random, degree_cap: int, nterms: int) -> Form:
    f = Form(m)
    for _ in range(nterms):
        deg = rng.randint(1, max(1, degree_cap))
        exps = [0] * m
        for _ in range(deg):
            exps[rng.randrange(m)] += 1
        f.iadd(Form.monomial(m, exps, (), rng.choice([-2, -1, 1, 2])))
    return f


def _shear_pair(m: int, n: int, seed: int, shears: int, degree_cap: int, nterms: int):
    rng = random.Random(seed)
    g, ginv = MatrixForm.identity(m, n), MatrixForm.identity(m, n)
    for _ in range(shears):
        i, j = rng.sample(range(n), 2)
        p = _random_poly(m, rng, degree_cap, nterms)
        g = g.matmul(_shear(m, n, i, j, p))
        ginv = _shear(m, n, i, j, p, -1).matmul(ginv)
    return g, ginv


def tr_power(A: MatrixForm, k: int, point: Optional[Sequence] = None) -> Form:
    if point is not None:
        A = A.at_point(tuple(point))
    P = A
    for _ in range(k - 1):
        P = P.matmul(A)
    return P.trace()


def gen_flat_pair(m: int, n: int, seed: int, shears: int = 8, degree_cap: int = 1, nterms: int = 2,
                  require_top: bool = True, retries: int = 8) -> ConnectionPair:
    """Flat pair ``(d, g^{-1} dg)`` with ``g`` a product of unimodular shears ``I + p E_ij``.

    With ``require_top`` the draw is redrawn (new seed) until ``tr[A^k]`` is
    nonzero at a test point, ``k = 4i - 1`` the top CS degree that fits in
    ``m`` (7 once ``m >= 7``); :class:`DegenerateScenario` after ``retries``
    attempts.
    """
    if n < 2:
        raise ValueError("flat shear pairs need rank at least 2")
    for attempt in range(retries):
        s = seed + 7919 * attempt
        g, ginv = _shear_pair(m, n, s, shears, degree_cap, nterms)
        A1 = ginv.matmul(g.d())
        pair = ConnectionPair(m, n, MatrixForm.zero(m, n), A1, True, degree_cap,
                              {"seed": s, "shears": shears, "flat": True})
        top = 4 * ((m + 1) // 4) - 1
        if not require_top or top < 3:
            return pair
        if any(tr_power(A1, top, random_point(m, s + k)) for k in range(2)):
            return pair
        if shears == 0:
            break
    raise DegenerateScenario(f"tr[A^{top}] vanished for {retries if shears else 1} draws "
                             f"(m={m}, n={n}, shears={shears})")


def _require_flat(pair: ConnectionPair):
    if not pair.claims_flat:
        for name, M in (("A0", pair.A0), ("A1", pair.A1)):
            for i, j, f in curvature(M).nonzero_entries():
                raise FlatnessViolation(f"curvature of {name} has nonzero entry ({i + 1},{j + 1})")


def quasimodular_e2(N: int) -> QSeries:
    """``E_2 = 1 - 24 sum sigma_1(n) q^n``."""
    terms = {0: 1}
    n = 1
    while 24 * n < N:
        terms[24 * n] = -24 * sum(d for d in range(1, n + 1) if n % d == 0)
        n += 1
    return QSeries(terms, N)


def flat_suite(pair: ConnectionPair, N: int = 96, point: Optional[Sequence] = None) -> Dict[str, object]:
    """Checks for a pair of flat connections; returns residuals (zero forms/series on success)."""
    _require_flat(pair)
    m = pair.m
    A = pair.A
    Rt = curvature_family(pair)
    t = Form.t(m)
    t2t = t.wedge(t) - t
    AA = A.matmul(A)
    out: Dict[str, object] = {}
    out["R_t=(t^2-t)A^2"] = (Rt - AA.wedge_form(t2t)).is_zero()
    # the trace and det^{1/2} statements are algebraic in R_t; with a point
    # they are checked on the evaluated family (the symbolic identity above
    # already pins R_t down)
    pt = tuple(point) if point is not None else None
    fam = FamilyData(m, A, Rt) if pt is None else FamilyData(m, A.at_point(pt), Rt.at_point(pt), pt)
    out["tr R_t^k=0"] = all(not fam.trace(k) for k in range(1, m // 2 + 1))
    ell = genus_xseries(GenusKind.PsiW, m // 2, N).log()
    weights = {k: ell[k] * Fraction(1, 2) for k in range(1, m // 2 + 1)}
    psi_t = exp_power_sums(weights, {k: fam.trace(k) for k in range(1, m // 2 + 1)}, m, N)
    out["det_half(Psi,R_t)=1"] = (psi_t - FormSeries.from_form(Form.constant(m, 1), 1, N)).is_zero()
    cs = cs_form(GenusKind.PsiW, fam, N).form
    out["CSPsiW"] = cs
    e2 = quasimodular_e2(N)
    tr3 = tr_power(fam.A, 3)
    w2 = FormSeries.from_form(tr3, 1, N).scale(e2 * _pi(-2, Fraction(-1, 576)))
    out["weight2_residual"] = cs.degree_part(3) - w2
    out["weight2_flag"] = "quasimodular (E2-type); no nonzero weight-2 modular form over SL(2,Z)"
    if m >= 7:
        tr7 = tr_power(fam.A, 7)
        out["tr[A^7]"] = tr7
        if not tr7:
            out["E4_status"] = "skipped-degenerate"
        else:
            rhs = FormSeries.from_form(tr7, 1, N).scale(eisenstein_e4(N) * E4_CONSTANT)
            out["E4_residual"] = cs.degree_part(7) - rhs
            out["E4_status"] = "checked"
    return out


def loop_cs(which: str, pair: ConnectionPair, N: int = 48) -> FormSeries:
    """``(1/8pi^2) int_0^1 tr[A theta_k'/theta_k(R_t/4pi^2)] dt`` for a flat bundle pair.

    ``which`` is ``"V"`` (theta_2) or ``"Vprime"`` (theta_3).
    """
    _require_flat(pair)
    kname = {"V": "theta2", "Vprime": "theta3"}.get(which)
    if kname is None:
        raise ValueError("which must be 'V' or 'Vprime'")
    m = pair.m
    D = m // 2
    br = theta_logderiv(kname, D, N)
    s, pref = _pi(-2, Fraction(1, 4)), _pi(-2, Fraction(1, 8))
    lin, sj = {}, Scalar.pi_power(0)
    for j in range(D + 1):
        if 2 * j + 1 <= m and br[j].terms:
            lin[j] = br[j] * (pref * sj)
        sj = sj * s
    return transgression_integral({}, lin, FamilyData.of(pair), N)


def loop_det_half(which: str, pair: ConnectionPair, N: int = 48) -> FormSeries:
    """``det^{1/2}(theta_k(R_t/4pi^2)/theta_k(0))`` on the family; identically 1 for flat pairs."""
    from .charforms import _normalized
    from .thetalib import _bi_to_wseries, _theta_product
    kname = {"V": "theta2", "Vprime": "theta3"}[which]
    D = pair.m // 2
    f = _normalized(_bi_to_wseries(_theta_product(kname, D, N), D, N)).rescale(PI).rescale(_pi(-2, Fraction(1, 4)))
    return det_half(f, curvature_family(pair), N)
