"""Jacobi theta functions as two-variable truncated expansions, plus the
modular forms built from them.

Theta functions are expanded in ``w = pi*v`` so every coefficient is a
pi-free :class:`QSeries`; derivatives with respect to ``v`` are recorded by
rescaling with the formal ``PI`` (``d/dv = pi d/dw``).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import BranchError, NotInRing, NotInvertible
from .exactscalar import (PI, QSeries, Scalar, ZETA_ORDER, as_scalar, qs_invert,
                          qs_tshift)

__all__ = [
    "WSeries", "ModularFormTable", "theta_expand", "theta_logderiv", "modular_table",
    "jacobi_identity_check", "decompose_gamma0_2", "reconstruct_gamma0_2",
    "eta", "eisenstein_e4", "theta_nulls", "THETA_KINDS",
]

THETA_KINDS = ("theta", "theta1", "theta2", "theta3")


class WSeries:
    """Truncated Taylor series in one variable with :class:`QSeries` coefficients.

    ``coeffs[d]`` is the coefficient of ``w^d`` for ``d = 0..wdeg``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence):
        cs = [c if isinstance(c, QSeries) else QSeries.constant(c) for c in coeffs]
        if not cs:
            raise ValueError("WSeries needs at least one coefficient")
        n = _common_trunc(cs)
        self.coeffs = [c.truncate(n) for c in cs]

    @classmethod
    def _raw(cls, coeffs):
        obj = cls.__new__(cls)
        obj.coeffs = coeffs
        return obj

    @property
    def wdeg(self) -> int:
        return len(self.coeffs) - 1

    @property
    def trunc(self) -> Optional[int]:
        return _common_trunc(self.coeffs)

    def __getitem__(self, d: int) -> QSeries:
        return self.coeffs[d]

    def truncate(self, wdeg: Optional[int] = None, trunc: Optional[int] = None) -> "WSeries":
        cs = self.coeffs if wdeg is None else self.coeffs[:wdeg + 1]
        return WSeries([c.truncate(trunc) for c in cs])

    def __add__(self, other):
        if not isinstance(other, WSeries):
            other = WSeries([other])
            other = WSeries(other.coeffs + [QSeries.zero()] * self.wdeg)
        D = min(self.wdeg, other.wdeg)
        return WSeries([a + b for a, b in zip(self.coeffs[:D + 1], other.coeffs[:D + 1])])

    __radd__ = __add__

    def __neg__(self):
        return WSeries._raw([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "WSeries":
        return WSeries([a * c for a in self.coeffs])

    def __mul__(self, other):
        if not isinstance(other, WSeries):
            return self.scale(other)
        D = min(self.wdeg, other.wdeg)
        out = []
        for k in range(D + 1):
            acc = None
            for i in range(k + 1):
                a, b = self.coeffs[i], other.coeffs[k - i]
                if a.terms and b.terms:
                    t = a * b
                    acc = t if acc is None else acc + t
            out.append(acc if acc is not None else QSeries.zero(_common_trunc([self.coeffs[0], other.coeffs[0]])))
        return WSeries(out)

    def __rmul__(self, other):
        return self.scale(other)

    def inverse(self) -> "WSeries":
        a0inv = qs_invert(self.coeffs[0])
        out = [a0inv]
        for k in range(1, self.wdeg + 1):
            acc = None
            for i in range(1, k + 1):
                a = self.coeffs[i]
                if a.terms and out[k - i].terms:
                    t = a * out[k - i]
                    acc = t if acc is None else acc + t
            out.append(-(acc * a0inv) if acc is not None else QSeries.zero(a0inv.trunc))
        return WSeries(out)

    def __truediv__(self, other):
        if isinstance(other, WSeries):
            return self * other.inverse()
        return self.scale(1 / as_scalar(other)) if not isinstance(other, QSeries) \
            else self.scale(qs_invert(other))

    def derivative(self) -> "WSeries":
        if self.wdeg == 0:
            return WSeries([QSeries.zero(self.trunc)])
        return WSeries([self.coeffs[k] * k for k in range(1, self.wdeg + 1)])

    def shift_down(self, j: int) -> "WSeries":
        """Divide by ``w^j``; the first ``j`` coefficients must vanish."""
        if any(c.terms for c in self.coeffs[:j]):
            raise ValueError(f"series is not divisible by w^{j}")
        return WSeries(self.coeffs[j:])

    def shift_up(self, j: int) -> "WSeries":
        """Multiply by ``w^j`` keeping the same degree bound."""
        z = QSeries.zero(self.trunc)
        return WSeries(([z] * j + self.coeffs)[:self.wdeg + 1])

    def rescale(self, s) -> "WSeries":
        """Substitute ``w -> s*w``; ``s`` is a :class:`Scalar` (may carry pi)."""
        s = as_scalar(s)
        out, p = [], Scalar.pi_power(0)
        for c in self.coeffs:
            out.append(c * p)
            p = p * s
        return WSeries._raw(out)

    def log(self) -> "WSeries":
        if self.coeffs[0] != QSeries.one():
            raise BranchError("log of a w-series needs constant coefficient exactly 1")
        a = self.coeffs
        out = [QSeries.zero(self.trunc)]
        for k in range(1, self.wdeg + 1):
            acc = a[k] * k
            for i in range(1, k):
                if out[i].terms and a[k - i].terms:
                    acc = acc - out[i] * a[k - i] * i
            out.append(acc * Fraction(1, k))
        return WSeries(out)

    def exp(self) -> "WSeries":
        if self.coeffs[0].terms:
            raise BranchError("exp of a w-series needs zero constant coefficient")
        c = self.coeffs
        out = [QSeries.one(self.trunc)]
        for k in range(1, self.wdeg + 1):
            acc = None
            for i in range(1, k + 1):
                if c[i].terms and out[k - i].terms:
                    t = c[i] * out[k - i] * i
                    acc = t if acc is None else acc + t
            out.append(acc * Fraction(1, k) if acc is not None else QSeries.zero(self.trunc))
        return WSeries(out)

    def tshift(self) -> "WSeries":
        return WSeries._raw([qs_tshift(c) for c in self.coeffs])

    def parity_defects(self, parity: int) -> List[int]:
        """Indices ``d`` with ``d % 2 != parity`` whose coefficient is nonzero."""
        return [d for d, c in enumerate(self.coeffs) if d % 2 != parity and c.terms]

    def __eq__(self, other):
        if not isinstance(other, WSeries):
            return NotImplemented
        D = min(self.wdeg, other.wdeg)
        return all(a == b for a, b in zip(self.coeffs[:D + 1], other.coeffs[:D + 1]))

    __hash__ = None

    def pretty(self, var: str = "w") -> str:
        lines = []
        for d, c in enumerate(self.coeffs):
            label = "1" if d == 0 else (var if d == 1 else f"{var}^{d}")
            lines.append(f"[{label}] {c}")
        return "\n".join(lines)

    def __repr__(self):
        return f"WSeries(wdeg={self.wdeg}, trunc={self.trunc})"


def _common_trunc(cs) -> Optional[int]:
    ns = [c.trunc for c in cs if c.trunc is not None]
    return min(ns) if ns else None


# bivariate (w, q) polynomials with rational coefficients ---------------------
# keys are (d, k): w^d q^(k/24)

def _bi_mul(a: Dict, b: Dict, D: int, N: int) -> Dict:
    out: Dict[Tuple[int, int], Fraction] = {}
    for (d1, k1), c1 in a.items():
        for (d2, k2), c2 in b.items():
            d, k = d1 + d2, k1 + k2
            if d > D or k >= N:
                continue
            out[(d, k)] = out.get((d, k), 0) + c1 * c2
    return {key: c for key, c in out.items() if c}


def _cos_series(scale: int, D: int) -> Dict:
    """cos(scale*w) up to w^D as {(d, 0): coeff}."""
    return {(d, 0): Fraction((-1) ** (d // 2) * scale ** d, factorial(d))
            for d in range(0, D + 1, 2)}


def _sin_series(scale: int, D: int) -> Dict:
    return {(d, 0): Fraction((-1) ** (d // 2) * scale ** d, factorial(d))
            for d in range(1, D + 1, 2)}


def _pair_factor(sign: int, k: int, D: int, N: int) -> Dict:
    """(1 - s e^{2iw} q^a)(1 - s e^{-2iw} q^a) = 1 - 2 s cos(2w) q^a + q^{2a}, a = k/24."""
    out = {(0, 0): Fraction(1)}
    if k < N:
        for (d, _), c in _cos_series(2, D).items():
            out[(d, k)] = out.get((d, k), 0) - 2 * sign * c
    if 2 * k < N:
        out[(0, 2 * k)] = out.get((0, 2 * k), 0) + 1
    return out


def _theta_product(kind: str, D: int, N: int) -> Dict:
    """Product part of the theta function without the ``2 q^{1/8}`` prefactor."""
    if kind not in THETA_KINDS:
        raise ValueError(f"unknown theta kind {kind!r}")
    if kind == "theta":
        acc, sign, half = _sin_series(1, D), 1, False
    elif kind == "theta1":
        acc, sign, half = _cos_series(1, D), -1, False
    elif kind == "theta2":
        acc, sign, half = {(0, 0): Fraction(1)}, 1, True
    else:
        acc, sign, half = {(0, 0): Fraction(1)}, -1, True
    j = 1
    while 24 * j - (12 if half else 0) < N:
        if 24 * j < N:
            acc = _bi_mul(acc, {(0, 0): Fraction(1), (0, 24 * j): Fraction(-1)}, D, N)
        k = 24 * j - 12 if half else 24 * j
        acc = _bi_mul(acc, _pair_factor(sign, k, D, N), D, N)
        j += 1
    return acc


def _bi_to_wseries(bi: Dict, D: int, N: int, prefactor: Optional[Tuple[int, int]] = None) -> WSeries:
    rows: List[Dict[int, Fraction]] = [dict() for _ in range(D + 1)]
    shift, mult = prefactor if prefactor else (0, 1)
    for (d, k), c in bi.items():
        if k + shift < N:
            rows[d][k + shift] = c * mult
    return WSeries([QSeries(r, N) for r in rows])


def theta_expand(kind: str, D: int, N: int) -> WSeries:
    """Expansion of ``theta``, ``theta1``, ``theta2`` or ``theta3`` in ``w = pi v``.

    ``D`` is the w-degree, ``N`` the q-truncation in units of 1/24.  The
    ``2 q^{1/8}`` prefactors of ``theta`` and ``theta1`` are included.
    """
    if D < 1:
        raise ValueError("w-degree must be at least 1")
    bi = _theta_product(kind, D, N)
    pref = (3, 2) if kind in ("theta", "theta1") else None
    return _bi_to_wseries(bi, D, N, pref)


def theta_nulls(N: int) -> Tuple[QSeries, QSeries, QSeries]:
    """``theta_1(0), theta_2(0), theta_3(0)`` as q-series."""
    return tuple(theta_expand(k, 1, N)[0] for k in ("theta1", "theta2", "theta3"))


def theta_logderiv(kind: str, D: int, N: int) -> WSeries:
    """Logarithmic derivative in ``z`` (``d/dz`` with ``z = v``), as a z-series.

    For ``theta1..theta3`` this is ``theta_k'(z)/theta_k(z)``.  For
    ``theta_reg`` it is ``1/z - theta'(z)/theta(z)``, obtained as the quotient
    of ``[theta(z) - z theta'(z)]/z^2`` by ``theta(z)/z``.  The coefficient of
    ``z^d`` carries ``pi^(d+1)``.
    """
    # the 2 q^{1/8} prefactor of theta and theta1 cancels in both quotients,
    # so the bare products are used to keep the leading coefficient at 1
    if kind == "theta_reg":
        th = _bi_to_wseries(_theta_product("theta", D + 2, N), D + 2, N)
        num = WSeries([th[d] * (1 - d) for d in range(D + 3)]).shift_down(2)
        den = th.shift_down(1).truncate(D)
        core = num.truncate(D) / den
    elif kind in ("theta1", "theta2", "theta3"):
        th = _bi_to_wseries(_theta_product(kind, D + 1, N), D + 1, N)
        core = th.derivative() / th.truncate(D)
    else:
        raise ValueError(f"unknown log-derivative kind {kind!r}")
    return core.rescale(PI).scale(PI).truncate(trunc=N)


@dataclass(frozen=True)
class ModularFormTable:
    delta: Tuple[QSeries, QSeries, QSeries]
    eps: Tuple[QSeries, QSeries, QSeries]
    e4: QSeries
    eta: QSeries
    trunc: int


def eta(N: int) -> QSeries:
    """Dedekind eta ``q^{1/24} prod (1 - q^l)``."""
    acc = {0: Fraction(1)}
    l = 1
    while 24 * l < N:
        new = dict(acc)
        for k, c in acc.items():
            if k + 24 * l < N:
                new[k + 24 * l] = new.get(k + 24 * l, 0) - c
        acc = {k: c for k, c in new.items() if c}
        l += 1
    return QSeries({k + 1: c for k, c in acc.items() if k + 1 < N}, N)


def _sigma(k: int, n: int) -> int:
    return sum(d ** k for d in range(1, n + 1) if n % d == 0)


def eisenstein_e4(N: int) -> QSeries:
    terms = {0: 1}
    n = 1
    while 24 * n < N:
        terms[24 * n] = 240 * _sigma(3, n)
        n += 1
    return QSeries(terms, N)


def modular_table(N: int) -> ModularFormTable:
    t1, t2, t3 = theta_nulls(N)
    t1, t2, t3 = t1 ** 4, t2 ** 4, t3 ** 4
    e = Fraction(1, 8)
    s = Fraction(1, 16)
    delta = ((t2 + t3) * e, -(t1 + t3) * e, (t1 - t2) * e)
    eps = (t2 * t3 * s, t1 * t3 * s, -(t1 * t2) * s)
    return ModularFormTable(delta, eps, eisenstein_e4(N), eta(N), N)


def jacobi_identity_check(N: int) -> QSeries:
    """``theta'(0) - pi theta_1(0) theta_2(0) theta_3(0)``; identically zero."""
    theta_prime0 = theta_expand("theta", 1, N)[1] * PI
    t1, t2, t3 = theta_nulls(N)
    return theta_prime0 - (t1 * t2 * t3) * PI


def _gamma0_2_exponents(weight2i: int):
    if weight2i % 2:
        raise ValueError("weight must be even")
    return [((weight2i - 4 * b) // 2, b) for b in range(weight2i // 4 + 1)]


def reconstruct_gamma0_2(coeffs: Dict[Tuple[int, int], object], N: int,
                         table: Optional[ModularFormTable] = None) -> QSeries:
    """``sum c_{a,b} delta_2^a eps_2^b``."""
    table = table or modular_table(N)
    acc = QSeries.zero(N)
    for (a, b), c in coeffs.items():
        acc = acc + (table.delta[1] ** a) * (table.eps[1] ** b) * c
    return acc.truncate(N)


def decompose_gamma0_2(f: QSeries, weight2i: int,
                       table: Optional[ModularFormTable] = None) -> Dict[Tuple[int, int], Scalar]:
    """Write ``f`` in the basis ``delta_2^a eps_2^b`` (``2a + 4b = weight2i``).

    ``eps_2^b`` starts at ``q^{b/2}`` so the system is triangular.  Raises
    :class:`NotInRing` if the reconstruction disagrees with ``f`` below
    ``f.trunc``.
    """
    N = f.trunc
    if N is None:
        raise ValueError("decomposition needs a truncated series")
    exps = _gamma0_2_exponents(weight2i)
    if 12 * (len(exps) - 1) >= N:
        raise ValueError("truncation too small to determine the basis coefficients")
    table = table if table is not None and table.trunc >= N else modular_table(N)
    resid = f
    out: Dict[Tuple[int, int], Scalar] = {}
    for a, b in exps:
        basis = ((table.delta[1] ** a) * (table.eps[1] ** b)).truncate(N)
        lead = basis.coefficient(12 * b)
        c = resid.coefficient(12 * b) / lead
        out[(a, b)] = c
        if c:
            resid = resid - basis * c
    if not resid.is_zero():
        k = resid.valuation()
        raise NotInRing(f"weight {weight2i} reconstruction fails at q^({k}/24): residual {resid.coefficient(k)}")
    return out
