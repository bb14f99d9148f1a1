"""Characteristic forms built from curvature: A-hat, L, Chern characters, the
theta-function genera and the Theta-bundle characters computed by plethysm.

Generating functions are returned as series in the curvature eigenvalue
``x``; det^{1/2} and traces are then taken with :mod:`formcalc`.
"""
from __future__ import annotations

import enum
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, Optional

from .exactscalar import I, PI, QSeries, Scalar, qs_invert
from .formcalc import (Form, FormSeries, MatrixForm, _traces_by_halves, det_half,
                       exp_power_sums, tr_f)
from .thetalib import WSeries, _bi_to_wseries, _theta_product

__all__ = [
    "GenusKind", "genus_zseries", "genus_xseries", "a_hat_series", "l_series", "exp_series",
    "a_hat", "l_form", "ch", "ch_tilde", "phi_form", "theta_bundle_ch", "theta_bundle_weights",
    "anomaly_check_12", "two_route",
]


class GenusKind(enum.Enum):
    PhiL = "phiL"
    PhiW = "phiW"
    PhiWPrime = "phiWp"
    PsiW = "psiW"

    @classmethod
    def parse(cls, s) -> "GenusKind":
        if isinstance(s, cls):
            return s
        for k in cls:
            if s in (k.value, k.name):
                return k
        raise ValueError(f"unknown genus kind {s!r}; expected one of {[k.value for k in cls]}")


# theta-function partner of each kind (None for PsiW)
PARTNER = {GenusKind.PhiL: "theta1", GenusKind.PhiW: "theta2",
           GenusKind.PhiWPrime: "theta3", GenusKind.PsiW: None}


def _pi(e: int, c=1) -> Scalar:
    return Scalar.pi_power(e, c)


def _normalized(ws: WSeries) -> WSeries:
    """Divide by the w^0 coefficient."""
    return ws.scale(qs_invert(ws[0]))


@lru_cache(maxsize=64)
def genus_zseries(kind: GenusKind, D: int, N: int) -> WSeries:
    """Generating function of ``kind`` as a series in ``z`` (coefficient of z^d carries pi^d).

    PsiW: ``z theta'(0)/theta(z)``; PhiW, PhiW': times ``theta_k(z)/theta_k(0)``;
    PhiL: ``2z theta'(0)/theta(2z) * theta_1(2z)/theta_1(0)``.  Each starts with 1.
    """
    kind = GenusKind.parse(kind)
    # theta and theta1 share the 2 q^{1/8} prefactor, which cancels in the ratios
    P = _bi_to_wseries(_theta_product("theta", D + 1, N), D + 1, N).shift_down(1)
    base = _normalized(P).inverse()  # w theta'(0) / (pi theta(w)) in w = pi z
    partner = PARTNER[kind]
    if partner is not None:
        Q = _bi_to_wseries(_theta_product(partner, D, N), D, N)
        base = base * _normalized(Q)
    if kind is GenusKind.PhiL:
        return base.rescale(_pi(1, 2))
    return base.rescale(PI)


def genus_xseries(kind: GenusKind, D: int, N: int) -> WSeries:
    """``f_kind(x / 4 pi^2)``: the function whose det^{1/2} at ``R`` gives the form."""
    return genus_zseries(GenusKind.parse(kind), D, N).rescale(_pi(-2, Fraction(1, 4)))


def _rational_series(coeffs, scale: Scalar) -> WSeries:
    return WSeries([QSeries.constant(c) for c in coeffs]).rescale(scale)


def _w_over_sin(D: int):
    # coefficients of w/sin w from 1/(sin w / w)
    s = WSeries([QSeries.constant(Fraction((-1) ** (k // 2), factorial(k + 1)) if k % 2 == 0 else 0)
                 for k in range(D + 1)])
    return s.inverse()


def _w_over_tan(D: int):
    c = WSeries([QSeries.constant(Fraction((-1) ** (k // 2), factorial(k)) if k % 2 == 0 else 0)
                 for k in range(D + 1)])
    s = WSeries([QSeries.constant(Fraction((-1) ** (k // 2), factorial(k + 1)) if k % 2 == 0 else 0)
                 for k in range(D + 1)])
    return c / s


def a_hat_series(D: int) -> WSeries:
    """``(x/4pi) / sin(x/4pi)``, i.e. ``(iR/4pi)/sinh(iR/4pi)`` per eigenvalue."""
    return _w_over_sin(D).rescale(_pi(-1, Fraction(1, 4)))


def l_series(D: int) -> WSeries:
    """``(x/2pi) / tan(x/2pi)``, i.e. ``(iR/2pi)/tanh(iR/2pi)`` per eigenvalue."""
    return _w_over_tan(D).rescale(_pi(-1, Fraction(1, 2)))


def exp_series(D: int, scale: Scalar) -> WSeries:
    return WSeries([QSeries.constant(Fraction(1, factorial(k))) for k in range(D + 1)]).rescale(scale)


def a_hat(R: MatrixForm) -> FormSeries:
    return det_half(a_hat_series(R.m // 2), R)


def l_form(R: MatrixForm) -> FormSeries:
    return det_half(l_series(R.m // 2), R)


def ch(R: MatrixForm) -> FormSeries:
    """``tr exp(i R / 2pi)``."""
    return tr_f(exp_series(R.m // 2, I * _pi(-1, Fraction(1, 2))), R)


def ch_tilde(R: MatrixForm) -> FormSeries:
    """``tr exp(i R / pi)``."""
    return tr_f(exp_series(R.m // 2, I * _pi(-1)), R)


def phi_form(kind: GenusKind, R: MatrixForm, N: int) -> FormSeries:
    """det^{1/2} of the kind's theta-function generating function at ``R``."""
    return det_half(genus_xseries(GenusKind.parse(kind), R.m // 2, N), R)


# ---------------------------------------------------------------------------
# Theta bundles by plethysm

_BUNDLE = {
    # which: (chern character scale exponent of pi, lambda part)
    "Theta1": "int",     # Lambda_{q^m}
    "Theta2": "neg_half",  # Lambda_{-q^{m-1/2}}
    "Theta3": "half",    # Lambda_{q^{m-1/2}}
    "Theta": None,
}


def _lambda_sums(which: str, k: int, N: int) -> Dict[int, int]:
    """q-exponents (1/24 units) with multiplicity for the k-th Adams term.

    Symmetric powers ``S_{q^n}`` contribute ``sum_n q^{nk}``; the exterior power
    ``Lambda_s`` contributes ``(-1)^{k+1} s^k`` summed over its parameters.
    """
    out: Dict[int, int] = {}
    n = 1
    while 24 * n * k < N:
        out[24 * n * k] = out.get(24 * n * k, 0) + 1
        n += 1
    kind = _BUNDLE[which]
    if kind is None:
        return out
    sgn = 1 if k % 2 else -1  # (-1)^{k+1}
    j = 1
    while True:
        if kind == "int":
            e, c = 24 * j * k, sgn
        else:
            e = (24 * j - 12) * k
            c = sgn * ((-1) ** k if kind == "neg_half" else 1)
        if e >= N:
            break
        out[e] = out.get(e, 0) + c
        j += 1
    return out


def theta_bundle_weights(which: str, jmax: int, N: int, tilde: bool = False) -> Dict[int, QSeries]:
    """Coefficients ``w_j`` with ``log ch(Theta) = sum_j w_j tr R^j``.

    ``ch`` is ``tr exp(iR/2pi)`` (``tr exp(iR/pi)`` when ``tilde``); the rank
    terms cancel against the virtual ``E - dim E`` normalization, so only
    ``j >= 1`` appear.
    """
    if which not in _BUNDLE:
        raise ValueError(f"unknown Theta bundle {which!r}")
    base = I * (_pi(-1) if tilde else _pi(-1, Fraction(1, 2)))
    out = {}
    kmax = max(1, N // 12 + 1)
    sums = {k: _lambda_sums(which, k, N) for k in range(1, kmax + 1)}
    for j in range(1, jmax + 1):
        terms: Dict[int, int] = {}
        for k, s in sums.items():
            for e, c in s.items():
                terms[e] = terms.get(e, 0) + c * k ** (j - 1)
        coef = (base ** j) * Fraction(1, factorial(j))
        out[j] = QSeries({e: coef * c for e, c in terms.items() if c}, N)
    return out


def theta_bundle_ch(which: str, R: MatrixForm, N: int, tilde: Optional[bool] = None) -> FormSeries:
    """``ch(Theta_i(T_C M))`` from symmetric/exterior power plethysm.

    ``Theta1`` uses the modified character ``tr exp(iR/pi)`` by default.
    """
    if tilde is None:
        tilde = which == "Theta1"
    jmax = R.m // 2
    weights = theta_bundle_weights(which, jmax, N, tilde)
    traces = _traces_by_halves(R, jmax, R.m)
    return exp_power_sums(weights, traces, R.m, N)


_ROUTE = {GenusKind.PhiL: ("L", "Theta1"), GenusKind.PhiW: ("Ahat", "Theta2"),
          GenusKind.PhiWPrime: ("Ahat", "Theta3"), GenusKind.PsiW: ("Ahat", "Theta")}


def two_route(kind: GenusKind, R: MatrixForm, N: int) -> FormSeries:
    """``(A-hat or L) * ch(Theta)``; equals :func:`phi_form` for so(n)-valued curvature."""
    kind = GenusKind.parse(kind)
    genus, bundle = _ROUTE[kind]
    g = l_form(R) if genus == "L" else a_hat(R)
    return g.wedge(theta_bundle_ch(bundle, R, N))


def anomaly_check_12(R: MatrixForm, c_ch: int = 8, c_ahat: int = 32) -> FormSeries:
    """``{L}^{(12)} - {c_ch A-hat ch - c_ahat A-hat}^{(12)}``; zero for the true constants."""
    D = R.m // 2
    traces = _traces_by_halves(R, D, R.m)  # shared by all three forms
    Ahat = det_half(a_hat_series(D), R, traces=traces)
    chR = tr_f(exp_series(D, I * _pi(-1, Fraction(1, 2))), R, traces=traces)
    rhs = Ahat.wedge(chR).scale(c_ch) - Ahat.scale(c_ahat)
    return (det_half(l_series(D), R, traces=traces) - rhs).degree_part(12)
