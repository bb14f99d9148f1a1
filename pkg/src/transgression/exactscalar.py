"""Exact coefficients: Q(zeta_24), pi-graded scalars and truncated q-series.

Exponents of q are stored as integers in units of 1/24, so ``k`` means
``q^(k/24)``.  A truncation ``trunc = N`` means every coefficient with
``k < N`` is known; ``trunc = None`` marks an exact (untruncated) series.
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from typing import Dict, Iterable, Optional, Union

from .errors import BranchError, InvalidInverse, NotInvertible

__all__ = [
    "CycloRational", "Scalar", "QSeries", "ZETA_ORDER", "DEGREE",
    "zeta", "I", "PI", "scalar_arith", "qs_arith", "qs_invert", "qs_exp_log",
    "qs_tshift", "as_scalar", "zeta_power_coords",
]

ZETA_ORDER = 24
DEGREE = 8  # [Q(zeta_24):Q]

_ZERO = Fraction(0)
_ONE = Fraction(1)


def _reduce15(prod):
    # x^8 = x^4 - 1 modulo the 24th cyclotomic polynomial
    for j in range(len(prod) - 1, DEGREE - 1, -1):
        c = prod[j]
        if c:
            prod[j - 4] += c
            prod[j - 8] -= c
            prod[j] = 0
    return prod


def _zeta_table():
    table = []
    for k in range(ZETA_ORDER):
        v = [0] * (k + 1 if k >= DEGREE else DEGREE)
        v[k] = 1
        v = _reduce15(v)[:DEGREE]
        table.append(tuple(Fraction(x) for x in v))
    return table


_ZETA_POW = _zeta_table()


def zeta_power_coords(k: int):
    """Power-basis coordinates of zeta_24^k."""
    return _ZETA_POW[k % ZETA_ORDER]


class CycloRational:
    """Element of Q(zeta_24) in the power basis zeta^0..zeta^7."""

    __slots__ = ("coords",)

    def __init__(self, coords: Iterable = (0,) * DEGREE):
        c = tuple(Fraction(x) for x in coords)
        if len(c) != DEGREE:
            raise ValueError("CycloRational needs exactly 8 coordinates")
        self.coords = c

    @classmethod
    def _raw(cls, coords):
        obj = cls.__new__(cls)
        obj.coords = coords
        return obj

    @classmethod
    def rational(cls, x) -> "CycloRational":
        return cls._raw((Fraction(x),) + (_ZERO,) * (DEGREE - 1))

    @classmethod
    def zeta(cls, k: int = 1) -> "CycloRational":
        return cls._raw(_ZETA_POW[k % ZETA_ORDER])

    def is_zero(self) -> bool:
        return not any(self.coords)

    __bool__ = lambda self: any(self.coords)

    def is_rational(self) -> bool:
        return not any(self.coords[1:])

    def __add__(self, other):
        other = _as_cyclo(other)
        if other is None:
            return NotImplemented
        return CycloRational._raw(tuple(a + b for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return CycloRational._raw(tuple(-a for a in self.coords))

    def __sub__(self, other):
        other = _as_cyclo(other)
        if other is None:
            return NotImplemented
        return CycloRational._raw(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CycloRational._raw(tuple(a * other for a in self.coords))
        other = _as_cyclo(other)
        if other is None:
            return NotImplemented
        prod = [_ZERO] * (2 * DEGREE - 1)
        bc = other.coords
        for i, x in enumerate(self.coords):
            if x:
                for j, y in enumerate(bc):
                    if y:
                        prod[i + j] += x * y
        return CycloRational._raw(tuple(_reduce15(prod)[:DEGREE]))

    __rmul__ = __mul__

    def inverse(self) -> "CycloRational":
        if self.is_zero():
            raise InvalidInverse("zero has no inverse in Q(zeta_24)")
        if self.is_rational():
            return CycloRational.rational(1 / self.coords[0])
        # columns of the multiplication-by-self matrix
        cols = [(self * CycloRational.zeta(j)).coords for j in range(DEGREE)]
        rows = [[cols[j][i] for j in range(DEGREE)] + [_ONE if i == 0 else _ZERO]
                for i in range(DEGREE)]
        for col in range(DEGREE):
            piv = next(r for r in range(col, DEGREE) if rows[r][col])
            rows[col], rows[piv] = rows[piv], rows[col]
            p = rows[col][col]
            rows[col] = [x / p for x in rows[col]]
            for r in range(DEGREE):
                if r != col and rows[r][col]:
                    f = rows[r][col]
                    rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
        return CycloRational._raw(tuple(rows[i][DEGREE] for i in range(DEGREE)))

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise InvalidInverse("division by zero")
            return CycloRational._raw(tuple(a / other for a in self.coords))
        other = _as_cyclo(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __eq__(self, other):
        other = _as_cyclo(other)
        if other is None:
            return NotImplemented
        return self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def to_complex(self) -> complex:
        return sum(complex(float(c)) * cmath.exp(2j * math.pi * k / ZETA_ORDER)
                   for k, c in enumerate(self.coords) if c)

    def __repr__(self):
        return f"CycloRational({self})"

    def __str__(self):
        if self.is_rational():
            return str(self.coords[0])
        parts = []
        for k, c in enumerate(self.coords):
            if not c:
                continue
            mono = "" if k == 0 else ("zeta" if k == 1 else f"zeta^{k}")
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return "(" + " + ".join(parts).replace("+ -", "- ") + ")"


def _as_cyclo(x) -> Optional[CycloRational]:
    if isinstance(x, CycloRational):
        return x
    if isinstance(x, (int, Fraction)):
        return CycloRational.rational(x)
    return None


def zeta(k: int = 1) -> CycloRational:
    return CycloRational.zeta(k)


I = CycloRational.zeta(6)  # sqrt(-1)


Number = Union[int, Fraction, CycloRational, "Scalar"]


class Scalar:
    """Finite Laurent polynomial in a formal pi with Q(zeta_24) coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Dict[int, object]] = None):
        t = {}
        for e, c in (terms or {}).items():
            c = _as_cyclo(c)
            if c is None:
                raise TypeError(f"bad Scalar coefficient {c!r}")
            if c:
                t[int(e)] = c
        self.terms = t

    @classmethod
    def _raw(cls, terms):
        obj = cls.__new__(cls)
        obj.terms = terms
        return obj

    @classmethod
    def pi_power(cls, e: int, coef=1) -> "Scalar":
        return cls({e: coef})

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def is_rational(self) -> bool:
        return not self.terms or (list(self.terms) == [0] and self.terms[0].is_rational())

    def rational_value(self) -> Fraction:
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return self.terms[0].coords[0] if self.terms else _ZERO

    def pi_degrees(self):
        return set(self.terms)

    def __add__(self, other):
        other = as_scalar(other)
        if other is None:
            return NotImplemented
        t = dict(self.terms)
        for e, c in other.terms.items():
            v = t.get(e)
            v = c if v is None else v + c
            if v:
                t[e] = v
            else:
                t.pop(e, None)
        return Scalar._raw(t)

    __radd__ = __add__

    def __neg__(self):
        return Scalar._raw({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = as_scalar(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return Scalar._raw({})
            return Scalar._raw({e: c * other for e, c in self.terms.items()})
        other = as_scalar(other)
        if other is None:
            return NotImplemented
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = e1 + e2
                v = c1 * c2
                if e in t:
                    v = t[e] + v
                if v:
                    t[e] = v
                else:
                    t.pop(e, None)
        return Scalar._raw(t)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if len(self.terms) != 1:
            raise InvalidInverse(f"only nonzero pi-monomials are invertible, got {self}")
        (e, c), = self.terms.items()
        return Scalar._raw({-e: c.inverse()})

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                raise InvalidInverse("division by zero")
            return Scalar._raw({e: c / other for e, c in self.terms.items()})
        other = as_scalar(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return as_scalar(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = Scalar.pi_power(0)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        other = as_scalar(other)
        if other is None:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def to_complex(self, pi: float = math.pi) -> complex:
        return sum(c.to_complex() * pi ** e for e, c in self.terms.items())

    def __repr__(self):
        return f"Scalar({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, reverse=True):
            c = self.terms[e]
            if e == 0:
                parts.append(str(c))
            else:
                p = "pi" if e == 1 else f"pi^{e}"
                parts.append(p if c == 1 else f"{c}*{p}")
        return " + ".join(parts)


def as_scalar(x) -> Optional[Scalar]:
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction, CycloRational)):
        c = _as_cyclo(x)
        return Scalar._raw({0: c} if c else {})
    return None


PI = Scalar.pi_power(1)


def _min_trunc(*ns):
    ns = [n for n in ns if n is not None]
    return min(ns) if ns else None


def _fmt_exp(k: int) -> str:
    f = Fraction(k, ZETA_ORDER)
    if f == 1:
        return "q"
    if f.denominator == 1:
        return f"q^{f.numerator}"
    return f"q^{{{f.numerator}/{f.denominator}}}"


class QSeries:
    """Truncated series in q^(1/24) with :class:`Scalar` coefficients."""

    __slots__ = ("trunc", "terms")

    def __init__(self, terms: Optional[Dict[int, object]] = None, trunc: Optional[int] = None):
        self.trunc = trunc
        t = {}
        for k, c in (terms or {}).items():
            k = int(k)
            if trunc is not None and k >= trunc:
                continue
            s = as_scalar(c)
            if s is None:
                raise TypeError(f"bad QSeries coefficient {c!r}")
            if s:
                t[k] = s
        self.terms = t

    @classmethod
    def _raw(cls, terms, trunc):
        obj = cls.__new__(cls)
        obj.terms = terms
        obj.trunc = trunc
        return obj

    @classmethod
    def one(cls, trunc: Optional[int] = None) -> "QSeries":
        return cls({0: 1}, trunc)

    @classmethod
    def zero(cls, trunc: Optional[int] = None) -> "QSeries":
        return cls._raw({}, trunc)

    @classmethod
    def monomial(cls, k: int, coef=1, trunc: Optional[int] = None) -> "QSeries":
        return cls({k: coef}, trunc)

    @classmethod
    def constant(cls, c, trunc: Optional[int] = None) -> "QSeries":
        return cls({0: c}, trunc)

    def valuation(self) -> Optional[int]:
        return min(self.terms) if self.terms else None

    def coefficient(self, k: int) -> Scalar:
        if self.trunc is not None and k >= self.trunc:
            raise ValueError(f"coefficient of q^({k}/24) is beyond truncation {self.trunc}")
        return self.terms.get(k, Scalar._raw({}))

    def truncate(self, n: Optional[int]) -> "QSeries":
        n = _min_trunc(n, self.trunc)
        if n is None:
            return self
        return QSeries._raw({k: c for k, c in self.terms.items() if k < n}, n)

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or list(self.terms) == [0]

    # arithmetic -----------------------------------------------------------

    def __add__(self, other):
        other = _as_qseries(other)
        if other is None:
            return NotImplemented
        n = _min_trunc(self.trunc, other.trunc)
        t = {k: c for k, c in self.terms.items() if n is None or k < n}
        for k, c in other.terms.items():
            if n is not None and k >= n:
                continue
            v = t.get(k)
            v = c if v is None else v + c
            if v:
                t[k] = v
            else:
                t.pop(k, None)
        return QSeries._raw(t, n)

    __radd__ = __add__

    def __neg__(self):
        return QSeries._raw({k: -c for k, c in self.terms.items()}, self.trunc)

    def __sub__(self, other):
        other = _as_qseries(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "QSeries":
        if isinstance(c, (int, Fraction)):
            if not c:
                return QSeries._raw({}, self.trunc)
            return QSeries._raw({k: s * c for k, s in self.terms.items()}, self.trunc)
        c = as_scalar(c)
        t = {}
        for k, s in self.terms.items():
            v = s * c
            if v:
                t[k] = v
        return QSeries._raw(t, self.trunc)

    def _mul_trunc(self, other):
        vs = self.valuation() or 0
        vo = other.valuation() or 0
        cands = []
        if self.trunc is not None:
            cands.append(self.trunc + min(vo, 0))
        if other.trunc is not None:
            cands.append(other.trunc + min(vs, 0))
        return min(cands) if cands else None

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, CycloRational, Scalar)):
            return self.scale(other)
        if not isinstance(other, QSeries):
            return NotImplemented
        n = self._mul_trunc(other)
        t: Dict[int, Scalar] = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = k1 + k2
                if n is not None and k >= n:
                    continue
                v = c1 * c2
                if k in t:
                    v = t[k] + v
                t[k] = v
        return QSeries._raw({k: v for k, v in t.items() if v}, n)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, CycloRational, Scalar)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, n: int):
        if n < 0:
            return qs_invert(self) ** (-n)
        out = QSeries.one(self.trunc)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, CycloRational, Scalar)):
            return self.scale(1 / as_scalar(other))
        if not isinstance(other, QSeries):
            return NotImplemented
        return self * qs_invert(other)

    def __eq__(self, other):
        other = _as_qseries(other)
        if other is None:
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    # evaluation / display -------------------------------------------------

    def evaluate(self, tau: complex, pi: float = math.pi) -> complex:
        """Numeric value of the (truncated) series at ``q = exp(2 pi i tau)``."""
        return sum(c.to_complex(pi) * cmath.exp(2j * math.pi * tau * k / ZETA_ORDER)
                   for k, c in self.terms.items())

    def __repr__(self):
        return f"QSeries({self}, trunc={self.trunc})"

    def __str__(self):
        if not self.terms:
            return "0"
        out = []
        for k in sorted(self.terms):
            c = self.terms[k]
            if c.is_rational():
                r = c.rational_value()
                sign = "-" if r < 0 else "+"
                a = abs(r)
                if k == 0:
                    body = str(a)
                else:
                    body = (_fmt_exp(k) if a == 1 else f"{a}{_fmt_exp(k)}")
            else:
                sign = "+"
                body = f"({c})" if k == 0 else f"({c}){_fmt_exp(k)}"
            out.append((sign, body))
        s = ("-" if out[0][0] == "-" else "") + out[0][1]
        for sign, body in out[1:]:
            s += f" {sign} {body}"
        return s

    def to_json(self):
        return {"trunc": self.trunc,
                "terms": [[k, scalar_to_json(self.terms[k])] for k in sorted(self.terms)]}

    @classmethod
    def from_json(cls, obj) -> "QSeries":
        return cls({int(k): scalar_from_json(s) for k, s in obj["terms"]}, obj["trunc"])


def _as_qseries(x) -> Optional[QSeries]:
    if isinstance(x, QSeries):
        return x
    s = as_scalar(x)
    if s is None:
        return None
    return QSeries._raw({0: s} if s else {}, None)


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def scalar_to_json(s) -> list:
    s = as_scalar(s)
    return [[e, [_frac_str(c) for c in s.terms[e].coords]] for e in sorted(s.terms)]


def scalar_from_json(obj) -> Scalar:
    return Scalar({int(e): CycloRational(Fraction(x) for x in coords) for e, coords in obj})


# spec-level operation wrappers ---------------------------------------------

def scalar_arith(op: str, a, b=None) -> Scalar:
    a = as_scalar(a)
    if op == "add":
        return a + b
    if op == "mul":
        return a * as_scalar(b)
    if op == "neg":
        return -a
    if op == "inv":
        return a.inverse()
    raise ValueError(f"unknown scalar op {op!r}")


def qs_arith(op: str, f: QSeries, g: QSeries) -> QSeries:
    if op == "add":
        return f + g
    if op == "mul":
        return f * g
    raise ValueError(f"unknown q-series op {op!r}")


def qs_invert(f: QSeries) -> QSeries:
    """Multiplicative inverse.  Leading coefficient must be a pi-monomial."""
    if not f.terms:
        raise NotInvertible("zero series")
    k0 = f.valuation()
    lead = f.terms[k0]
    if not lead.is_monomial():
        raise NotInvertible(f"leading coefficient {lead} is not a pi-monomial")
    inv_lead = lead.inverse()
    if len(f.terms) == 1:
        return QSeries._raw({-k0: inv_lead}, None if f.trunc is None else f.trunc - 2 * k0)
    if f.trunc is None:
        raise NotInvertible("inverse of an untruncated non-monomial series is infinite")
    # f = lead q^k0 (1 + u), u has positive exponents
    m = f.trunc - k0
    u = {k - k0: c * inv_lead for k, c in f.terms.items() if k != k0}
    ukeys = sorted(u)
    v: Dict[int, Scalar] = {0: Scalar.pi_power(0)}
    for k in range(1, m):
        acc = None
        for j in ukeys:
            if j > k:
                break
            w = v.get(k - j)
            if w is not None:
                acc = u[j] * w if acc is None else acc + u[j] * w
        if acc:
            v[k] = -acc
    n = f.trunc - 2 * k0
    return QSeries._raw({k - k0: c * inv_lead for k, c in v.items() if k - k0 < n}, n)


def qs_exp_log(op: str, f: QSeries) -> QSeries:
    if op == "exp":
        return _qs_exp(f)
    if op == "log":
        return _qs_log(f)
    raise ValueError(f"unknown op {op!r}")


def _qs_log(f: QSeries) -> QSeries:
    c0 = f.terms.get(0)
    if c0 != Scalar.pi_power(0) or any(k < 0 for k in f.terms):
        raise BranchError("log needs a series with constant term 1 and no negative exponents")
    if len(f.terms) == 1:
        return QSeries.zero(f.trunc)
    if f.trunc is None:
        raise BranchError("log of an untruncated non-constant series is infinite")
    fk = {k: c for k, c in f.terms.items() if k > 0}
    keys = sorted(fk)
    out: Dict[int, Scalar] = {}
    for k in range(1, f.trunc):
        acc = fk.get(k)
        acc = acc * k if acc is not None else None
        for j in keys:
            if j >= k:
                break
            lj = out.get(k - j)
            if lj is not None:
                t = lj * fk[j] * (k - j)
                acc = -t if acc is None else acc - t
        if acc:
            out[k] = acc / k
    return QSeries._raw(out, f.trunc)


def _qs_exp(f: QSeries) -> QSeries:
    if any(k <= 0 for k in f.terms):
        raise BranchError("exp needs a series without constant or negative-exponent terms")
    if not f.terms:
        return QSeries.one(f.trunc)
    if f.trunc is None:
        raise BranchError("exp of an untruncated nonzero series is infinite")
    keys = sorted(f.terms)
    out: Dict[int, Scalar] = {0: Scalar.pi_power(0)}
    for k in range(1, f.trunc):
        acc = None
        for j in keys:
            if j > k:
                break
            e = out.get(k - j)
            if e is not None:
                t = f.terms[j] * e * j
                acc = t if acc is None else acc + t
        if acc:
            out[k] = acc / k
    return QSeries._raw(out, f.trunc)


def qs_tshift(f: QSeries) -> QSeries:
    """Action of tau -> tau + 1: q^(k/24) picks up zeta_24^k."""
    t = {}
    for k, c in f.terms.items():
        r = k % ZETA_ORDER
        t[k] = c if r == 0 else c * CycloRational.zeta(r)
    return QSeries._raw(t, f.trunc)
