"""Differential forms on a formal coordinate chart.

A :class:`Form` is a polynomial-coefficient form on a chart with coordinates
``x_0..x_{m-1}`` and an extra formal parameter ``t`` (the interpolation
variable for connection families).  Terms are stored as
``{mask: {ekey: coeff}}`` where ``mask`` is the bitset of the ``dx_i`` in
increasing order and ``ekey`` packs the exponents of ``x_0..x_{m-1}, t`` in
fixed-width bit fields, so multiplying monomials is integer addition.

:class:`FormSeries` adds q-series coefficients: its terms are labelled by
``(q exponent in 1/24 units, power of pi, zeta_24 basis index)`` and each
label holds a rational :class:`Form`.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import BranchError, FlatnessViolation, NotNilpotent, ShapeError
from .exactscalar import (CycloRational, QSeries, Scalar, ZETA_ORDER, as_scalar,
                          zeta_power_coords)

W = 10                 # bits per exponent field
FM = (1 << W) - 1


def _frac(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


@lru_cache(maxsize=None)
def wedge_sign(I: int, J: int) -> int:
    """Sign of ``dx_I ^ dx_J`` relative to the sorted ``dx_{I|J}`` (masks disjoint)."""
    s = 0
    while J:
        low = J & -J
        s += (I & ~((low << 1) - 1)).bit_count()
        J ^= low
    return -1 if s & 1 else 1


def _mask_indices(mask: int) -> Tuple[int, ...]:
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


class Form:
    """Polynomial-coefficient differential form (exact rational coefficients)."""

    __slots__ = ("m", "terms")

    def __init__(self, m: int, terms: Optional[Dict[int, Dict[int, object]]] = None):
        self.m = m
        self.terms = terms if terms is not None else {}

    # constructors ----------------------------------------------------------
    @classmethod
    def zero(cls, m: int) -> "Form":
        return cls(m, {})

    @classmethod
    def constant(cls, m: int, c=1) -> "Form":
        return cls(m, {0: {0: c}}) if c else cls(m, {})

    @classmethod
    def monomial(cls, m: int, exps: Sequence[int] = (), dx: Sequence[int] = (), coef=1,
                 t: int = 0) -> "Form":
        """``coef * t^t * prod x_i^exps[i] * dx_{dx[0]} ^ dx_{dx[1]} ^ ...`` (0-based indices)."""
        if not coef:
            return cls(m, {})
        if len(exps) > m:
            raise ShapeError(f"{len(exps)} exponents for a chart of dimension {m}")
        ekey = 0
        for i, e in enumerate(exps):
            if e < 0 or e > FM:
                raise ValueError(f"exponent {e} out of range")
            ekey |= e << (W * i)
        ekey |= t << (W * m)
        mask, sign = 0, 1
        for i in dx:
            if not 0 <= i < m:
                raise ShapeError(f"form index {i} outside chart of dimension {m}")
            bit = 1 << i
            if mask & bit:
                return cls(m, {})
            sign *= wedge_sign(mask, bit)
            mask |= bit
        return cls(m, {mask: {ekey: sign * coef}})

    @classmethod
    def x(cls, m: int, i: int) -> "Form":
        e = [0] * m
        e[i] = 1
        return cls.monomial(m, e)

    @classmethod
    def dx(cls, m: int, i: int) -> "Form":
        return cls.monomial(m, (), (i,))

    @classmethod
    def t(cls, m: int) -> "Form":
        return cls.monomial(m, (), (), 1, t=1)

    # basic algebra -----------------------------------------------------------
    def _check(self, other: "Form"):
        if self.m != other.m:
            raise ShapeError(f"chart dimensions differ: {self.m} vs {other.m}")

    def copy(self) -> "Form":
        return Form(self.m, {k: dict(v) for k, v in self.terms.items()})

    def iadd(self, other: "Form", scale=1) -> "Form":
        """In-place ``self += scale*other``."""
        self._check(other)
        if not scale:
            return self
        for mask, poly in other.terms.items():
            tgt = self.terms.get(mask)
            if tgt is None:
                tgt = self.terms[mask] = {}
            for e, c in poly.items():
                v = tgt.get(e, 0) + c * scale
                if v:
                    tgt[e] = v
                else:
                    tgt.pop(e, None)
            if not tgt:
                del self.terms[mask]
        return self

    def __add__(self, other):
        if not isinstance(other, Form):
            other = Form.constant(self.m, other)
        return self.copy().iadd(other)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Form):
            other = Form.constant(self.m, other)
        return self.copy().iadd(other, -1)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Form(self.m, {k: {e: -c for e, c in v.items()} for k, v in self.terms.items()})

    def scale(self, s) -> "Form":
        if not s:
            return Form(self.m)
        if s == 1:
            return self.copy()
        return Form(self.m, {k: {e: _frac(c * s) for e, c in v.items()} for k, v in self.terms.items()})

    def wedge(self, other: "Form", maxdeg: Optional[int] = None) -> "Form":
        self._check(other)
        out: Dict[int, Dict[int, object]] = {}
        for I, pa in self.terms.items():
            dI = I.bit_count()
            for J, pb in other.terms.items():
                if I & J:
                    continue
                if maxdeg is not None and dI + J.bit_count() > maxdeg:
                    continue
                s = wedge_sign(I, J)
                K = I | J
                tgt = out.get(K)
                if tgt is None:
                    tgt = out[K] = {}
                for ea, ca in pa.items():
                    if s < 0:
                        ca = -ca
                    for eb, cb in pb.items():
                        e = ea + eb
                        v = tgt.get(e, 0) + ca * cb
                        if v:
                            tgt[e] = v
                        else:
                            del tgt[e]
        return Form(self.m, {k: v for k, v in out.items() if v})

    def __mul__(self, other):
        if isinstance(other, Form):
            return self.wedge(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    __xor__ = wedge

    def d(self) -> "Form":
        """Exterior derivative in the chart variables (``t`` is a parameter)."""
        m = self.m
        out: Dict[int, Dict[int, object]] = {}
        for I, poly in self.terms.items():
            for i in range(m):
                bit = 1 << i
                if I & bit:
                    continue
                sh = W * i
                sign = -1 if (I & (bit - 1)).bit_count() & 1 else 1
                K = I | bit
                for e, c in poly.items():
                    ei = (e >> sh) & FM
                    if not ei:
                        continue
                    tgt = out.setdefault(K, {})
                    ne = e - (1 << sh)
                    v = tgt.get(ne, 0) + sign * ei * c
                    if v:
                        tgt[ne] = v
                    else:
                        del tgt[ne]
        return Form(m, {k: v for k, v in out.items() if v})

    # inspection --------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Form.constant(self.m, other)
        if not isinstance(other, Form):
            return NotImplemented
        return self.m == other.m and (self - other).is_zero()

    __hash__ = None

    def degrees(self) -> List[int]:
        return sorted({I.bit_count() for I in self.terms})

    def degree_part(self, k: int) -> "Form":
        return Form(self.m, {I: dict(p) for I, p in self.terms.items() if I.bit_count() == k})

    def nterms(self) -> int:
        return sum(len(p) for p in self.terms.values())

    def t_degree(self) -> int:
        sh = W * self.m
        return max((e >> sh for p in self.terms.values() for e in p), default=0)

    def poly_degree(self) -> int:
        best = 0
        for p in self.terms.values():
            for e in p:
                best = max(best, sum((e >> (W * i)) & FM for i in range(self.m)))
        return best

    def items(self):
        """Yield ``(x exponents, t exponent, dx indices, coeff)`` in canonical order."""
        m = self.m
        for I in sorted(self.terms):
            idx = _mask_indices(I)
            for e in sorted(self.terms[I]):
                exps = tuple((e >> (W * i)) & FM for i in range(m))
                yield exps, e >> (W * m), idx, self.terms[I][e]

    # t handling and evaluation ---------------------------------------------
    def integrate_t(self) -> "Form":
        """``int_0^1 ... dt`` term by term."""
        sh = W * self.m
        low = (1 << sh) - 1
        out: Dict[int, Dict[int, object]] = {}
        for I, poly in self.terms.items():
            tgt: Dict[int, object] = {}
            for e, c in poly.items():
                k = e >> sh
                ne = e & low
                v = tgt.get(ne, 0) + (Fraction(c, k + 1) if k else c)
                if v:
                    tgt[ne] = _frac(v)
                else:
                    tgt.pop(ne, None)
            if tgt:
                out[I] = tgt
        return Form(self.m, out)

    def eval_t(self, value) -> "Form":
        sh = W * self.m
        low = (1 << sh) - 1
        out = Form(self.m)
        for I, poly in self.terms.items():
            tgt: Dict[int, object] = {}
            for e, c in poly.items():
                k = e >> sh
                ne = e & low
                tgt[ne] = tgt.get(ne, 0) + c * value ** k
            tgt = {e: _frac(c) for e, c in tgt.items() if c}
            if tgt:
                out.terms[I] = tgt
        return out

    def at_point(self, point: Sequence) -> "Form":
        """Substitute ``x_i = point[i]``; keeps ``t`` and the dx-structure."""
        m = self.m
        if len(point) != m:
            raise ShapeError("point has wrong dimension")
        tmask = FM << (W * m)
        out = Form(m)
        cache: Dict[int, object] = {}
        for I, poly in self.terms.items():
            tgt: Dict[int, object] = {}
            for e, c in poly.items():
                xe = e & ~tmask
                val = cache.get(xe)
                if val is None:
                    val = 1
                    for i in range(m):
                        k = (xe >> (W * i)) & FM
                        if k:
                            val *= point[i] ** k
                    cache[xe] = val
                te = e & tmask
                tgt[te] = tgt.get(te, 0) + c * val
            tgt = {e: _frac(c) for e, c in tgt.items() if c}
            if tgt:
                out.terms[I] = tgt
        return out

    # rendering -------------------------------------------------------------
    def _term_str(self, exps, tk, idx, c) -> str:
        parts = []
        for i, k in enumerate(exps):
            if k:
                parts.append(f"x{i + 1}" + (f"^{k}" if k > 1 else ""))
        if tk:
            parts.append("t" + (f"^{tk}" if tk > 1 else ""))
        if idx:
            parts.append("^".join(f"dx{i + 1}" for i in idx))
        body = "*".join(parts)
        if not body:
            return str(c)
        if c == 1:
            return body
        if c == -1:
            return "-" + body
        return f"{c}*{body}"

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(self._term_str(*it) for it in self.items()).replace("+ -", "- ")

    def __repr__(self):
        return f"Form(m={self.m}, terms={self.nterms()})"

    def to_json(self) -> list:
        out = []
        for exps, tk, idx, c in self.items():
            entry = {"coords": list(exps), "form": [i + 1 for i in idx], "coeff": str(c)}
            if tk:
                entry["t"] = tk
            out.append(entry)
        return out

    @classmethod
    def from_json(cls, m: int, items) -> "Form":
        f = cls(m)
        for it in items:
            coeff = it["coeff"]
            c = Fraction(coeff) if isinstance(coeff, str) else coeff
            f.iadd(cls.monomial(m, it.get("coords", ()), [i - 1 for i in it.get("form", ())],
                                _frac(Fraction(c)), it.get("t", 0)))
        return f


ChartPoly = Form  # 0-forms double as chart polynomials


# ---------------------------------------------------------------------------
# q-series of forms

_Label = Tuple[int, int, int]  # (q exponent, pi exponent, zeta basis index)


@lru_cache(maxsize=None)
def _zeta_mul(c1: int, c2: int) -> Tuple[Tuple[int, Fraction], ...]:
    coords = zeta_power_coords(c1 + c2)
    return tuple((i, v) for i, v in enumerate(coords) if v)


def _scalar_labels(s: Scalar):
    for e, cy in s.terms.items():
        for c, v in enumerate(cy.coords):
            if v:
                yield e, c, _frac(v)


def _min_trunc(*ns):
    ns = [n for n in ns if n is not None]
    return min(ns) if ns else None


class FormSeries:
    """Truncated q-series whose coefficients are forms with exact scalar weights."""

    __slots__ = ("m", "terms", "trunc")

    def __init__(self, m: int, terms: Optional[Dict[_Label, Form]] = None, trunc: Optional[int] = None):
        self.m = m
        self.trunc = trunc
        self.terms = {}
        for lab, f in (terms or {}).items():
            if f and (trunc is None or lab[0] < trunc):
                self.terms[lab] = f

    @classmethod
    def zero(cls, m: int, trunc: Optional[int] = None) -> "FormSeries":
        return cls(m, {}, trunc)

    @classmethod
    def from_form(cls, form: Form, coeff=1, trunc: Optional[int] = None) -> "FormSeries":
        out = cls(form.m, {}, trunc)
        out.add_product(coeff, form)
        return out

    def add_product(self, coeff, form: Form) -> "FormSeries":
        """In place ``self += coeff * form`` for a QSeries/Scalar/rational ``coeff``."""
        if form.m != self.m:
            raise ShapeError("chart dimensions differ")
        if not form:
            return self
        if isinstance(coeff, QSeries):
            items = coeff.terms.items()
            self.trunc = _min_trunc(self.trunc, coeff.trunc)
        else:
            items = [(0, as_scalar(coeff))]
        for k, s in items:
            if self.trunc is not None and k >= self.trunc:
                continue
            for e, c, v in _scalar_labels(s):
                lab = (k, e, c)
                tgt = self.terms.get(lab)
                if tgt is None:
                    self.terms[lab] = form.scale(v)
                else:
                    tgt.iadd(form, v)
                    if not tgt:
                        del self.terms[lab]
        if self.trunc is not None:
            for lab in [l for l in self.terms if l[0] >= self.trunc]:
                del self.terms[lab]
        return self

    def copy(self) -> "FormSeries":
        return FormSeries(self.m, {l: f.copy() for l, f in self.terms.items()}, self.trunc)

    def truncate(self, n: Optional[int]) -> "FormSeries":
        n = _min_trunc(self.trunc, n)
        return FormSeries(self.m, {l: f.copy() for l, f in self.terms.items() if n is None or l[0] < n}, n)

    def __add__(self, other):
        if isinstance(other, Form):
            other = FormSeries.from_form(other)
        if not isinstance(other, FormSeries):
            return NotImplemented
        if other.m != self.m:
            raise ShapeError("chart dimensions differ")
        out = self.copy()
        out.trunc = _min_trunc(self.trunc, other.trunc)
        for lab, f in other.terms.items():
            tgt = out.terms.get(lab)
            if tgt is None:
                out.terms[lab] = f.copy()
            else:
                tgt.iadd(f)
                if not tgt:
                    del out.terms[lab]
        return out.truncate(out.trunc)

    __radd__ = __add__

    def __neg__(self):
        return FormSeries(self.m, {l: -f for l, f in self.terms.items()}, self.trunc)

    def __sub__(self, other):
        if isinstance(other, Form):
            other = FormSeries.from_form(other)
        return self + (-other)

    def valuation(self) -> Optional[int]:
        return min((l[0] for l in self.terms), default=None)

    def scale(self, s) -> "FormSeries":
        """Multiply by a rational, :class:`Scalar` or :class:`QSeries`."""
        if isinstance(s, QSeries):
            qs = s
        else:
            qs = QSeries.constant(s)
        out = FormSeries(self.m, {}, None)
        vq, vs = qs.valuation() or 0, self.valuation() or 0
        out.trunc = _min_trunc(None if self.trunc is None else self.trunc + min(vq, 0),
                               None if qs.trunc is None else qs.trunc + min(vs, 0))
        for k2, s2 in qs.terms.items():
            for e2, c2, v2 in _scalar_labels(s2):
                for (k1, e1, c1), f in self.terms.items():
                    k = k1 + k2
                    if out.trunc is not None and k >= out.trunc:
                        continue
                    for c, w in _zeta_mul(c1, c2):
                        lab = (k, e1 + e2, c)
                        tgt = out.terms.get(lab)
                        if tgt is None:
                            out.terms[lab] = f.scale(v2 * w)
                        else:
                            tgt.iadd(f, v2 * w)
        out.terms = {l: f for l, f in out.terms.items() if f}
        return out

    def wedge(self, other) -> "FormSeries":
        if isinstance(other, Form):
            other = FormSeries.from_form(other)
        if other.m != self.m:
            raise ShapeError("chart dimensions differ")
        vo, vs = other.valuation() or 0, self.valuation() or 0
        trunc = _min_trunc(None if self.trunc is None else self.trunc + min(vo, 0),
                           None if other.trunc is None else other.trunc + min(vs, 0))
        out = FormSeries(self.m, {}, trunc)
        for (k1, e1, c1), f1 in self.terms.items():
            for (k2, e2, c2), f2 in other.terms.items():
                k = k1 + k2
                if trunc is not None and k >= trunc:
                    continue
                prod = f1.wedge(f2)
                if not prod:
                    continue
                for c, w in _zeta_mul(c1, c2):
                    lab = (k, e1 + e2, c)
                    tgt = out.terms.get(lab)
                    if tgt is None:
                        out.terms[lab] = prod.scale(w)
                    else:
                        tgt.iadd(prod, w)
        out.terms = {l: f for l, f in out.terms.items() if f}
        return out

    def __mul__(self, other):
        if isinstance(other, (Form, FormSeries)):
            return self.wedge(other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def d(self) -> "FormSeries":
        return FormSeries(self.m, {l: f.d() for l, f in self.terms.items()}, self.trunc)

    def integrate_t(self) -> "FormSeries":
        return FormSeries(self.m, {l: f.integrate_t() for l, f in self.terms.items()}, self.trunc)

    def degree_part(self, k: int) -> "FormSeries":
        return FormSeries(self.m, {l: f.degree_part(k) for l, f in self.terms.items()}, self.trunc)

    def degrees(self) -> List[int]:
        return sorted({d for f in self.terms.values() for d in f.degrees()})

    def at_point(self, point) -> "FormSeries":
        return FormSeries(self.m, {l: f.at_point(point) for l, f in self.terms.items()}, self.trunc)

    def tshift(self) -> "FormSeries":
        """``tau -> tau + 1``: multiply the q^(k/24) coefficient by zeta_24^k."""
        out = FormSeries(self.m, {}, self.trunc)
        for (k, e, c), f in self.terms.items():
            for c2, w in _zeta_mul(c, k % ZETA_ORDER):
                lab = (k, e, c2)
                tgt = out.terms.get(lab)
                if tgt is None:
                    out.terms[lab] = f.scale(w)
                else:
                    tgt.iadd(f, w)
        out.terms = {l: f for l, f in out.terms.items() if f}
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if isinstance(other, Form):
            other = FormSeries.from_form(other)
        if not isinstance(other, FormSeries):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def pi_exponents(self, degree: Optional[int] = None) -> List[int]:
        src = self if degree is None else self.degree_part(degree)
        return sorted({l[1] for l in src.terms})

    def q_exponents(self) -> List[int]:
        return sorted({l[0] for l in self.terms})

    def coefficient_table(self) -> Dict[Tuple[int, int], QSeries]:
        """Map ``(mask, ekey)`` basis keys to their q-series coefficient."""
        acc: Dict[Tuple[int, int], Dict[int, Dict[int, List]]] = {}
        for (k, e, c), f in self.terms.items():
            for I, poly in f.terms.items():
                for ek, v in poly.items():
                    slot = acc.setdefault((I, ek), {}).setdefault(k, {}).setdefault(e, [0] * 8)
                    slot[c] += v
        out = {}
        for key, byk in acc.items():
            terms = {k: Scalar({e: CycloRational(v) for e, v in bye.items()}) for k, bye in byk.items()}
            out[key] = QSeries(terms, self.trunc)
        return out

    def qseries_at(self, form_key: Tuple[int, int]) -> QSeries:
        return self.coefficient_table().get(form_key, QSeries.zero(self.trunc))

    def pretty(self, max_terms: int = 12) -> str:
        lines = []
        for key, qs in sorted(self.coefficient_table().items()):
            if not qs.terms:
                continue
            mono = Form(self.m, {key[0]: {key[1]: 1}})
            lines.append(f"[{mono}] {qs}")
            if len(lines) >= max_terms:
                lines.append("...")
                break
        return "\n".join(lines) if lines else "0"

    def to_json(self) -> dict:
        out = []
        for key, qs in sorted(self.coefficient_table().items()):
            if qs.terms:
                mono = Form(self.m, {key[0]: {key[1]: 1}})
                exps, tk, idx, _ = next(mono.items())
                out.append({"coords": list(exps), "form": [i + 1 for i in idx], "q": qs.to_json()})
        return {"m": self.m, "trunc": self.trunc, "terms": out}

    def __repr__(self):
        return f"FormSeries(m={self.m}, labels={len(self.terms)}, trunc={self.trunc})"


# ---------------------------------------------------------------------------
# matrices of forms

class MatrixForm:
    """Square matrix of :class:`Form` entries."""

    __slots__ = ("m", "n", "rows")

    def __init__(self, m: int, rows: Sequence[Sequence[Form]]):
        self.m = m
        self.n = len(rows)
        for r in rows:
            if len(r) != self.n:
                raise ShapeError("matrix of forms must be square")
            for f in r:
                if f.m != m:
                    raise ShapeError("entry chart dimension mismatch")
        self.rows = [list(r) for r in rows]

    @classmethod
    def zero(cls, m: int, n: int) -> "MatrixForm":
        return cls(m, [[Form(m) for _ in range(n)] for _ in range(n)])

    @classmethod
    def identity(cls, m: int, n: int) -> "MatrixForm":
        return cls(m, [[Form.constant(m, 1 if i == j else 0) for j in range(n)] for i in range(n)])

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def _check(self, other: "MatrixForm"):
        if self.m != other.m or self.n != other.n:
            raise ShapeError(f"matrix shapes differ: ({self.m},{self.n}) vs ({other.m},{other.n})")

    def map(self, fn) -> "MatrixForm":
        return MatrixForm(self.m, [[fn(f) for f in r] for r in self.rows])

    def __add__(self, other):
        self._check(other)
        return MatrixForm(self.m, [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __sub__(self, other):
        self._check(other)
        return MatrixForm(self.m, [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)])

    def __neg__(self):
        return self.map(lambda f: -f)

    def scale(self, s) -> "MatrixForm":
        return self.map(lambda f: f.scale(s))

    def wedge_form(self, f: Form) -> "MatrixForm":
        """Entrywise ``f ^ entry``."""
        return self.map(lambda g: f.wedge(g))

    def matmul(self, other: "MatrixForm", maxdeg: Optional[int] = None) -> "MatrixForm":
        self._check(other)
        n, m = self.n, self.m
        cols = [[other.rows[k][j] for k in range(n)] for j in range(n)]
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = Form(m)
                for a, b in zip(self.rows[i], cols[j]):
                    if a.terms and b.terms:
                        acc.iadd(a.wedge(b, maxdeg))
                row.append(acc)
            out.append(row)
        return MatrixForm(m, out)

    def __mul__(self, other):
        if isinstance(other, MatrixForm):
            return self.matmul(other)
        return self.scale(other)

    def trace(self) -> Form:
        acc = Form(self.m)
        for i in range(self.n):
            acc.iadd(self.rows[i][i])
        return acc

    def trace_product(self, other: "MatrixForm", maxdeg: Optional[int] = None) -> Form:
        """``tr[self ^ other]`` without forming the full product."""
        self._check(other)
        acc = Form(self.m)
        for i in range(self.n):
            for k in range(self.n):
                a, b = self.rows[i][k], other.rows[k][i]
                if a.terms and b.terms:
                    acc.iadd(a.wedge(b, maxdeg))
        return acc

    def d(self) -> "MatrixForm":
        return self.map(Form.d)

    def at_point(self, point) -> "MatrixForm":
        return self.map(lambda f: f.at_point(point))

    def eval_t(self, value) -> "MatrixForm":
        return self.map(lambda f: f.eval_t(value))

    def is_zero(self) -> bool:
        return all(not f for r in self.rows for f in r)

    def degrees(self) -> List[int]:
        return sorted({d for r in self.rows for f in r for d in f.degrees()})

    @property
    def parity(self) -> str:
        ps = {d % 2 for d in self.degrees()}
        if not ps:
            return "zero"
        if len(ps) == 2:
            return "mixed"
        return "even" if 0 in ps else "odd"

    def nonzero_entries(self):
        for i, r in enumerate(self.rows):
            for j, f in enumerate(r):
                if f:
                    yield i, j, f

    def __eq__(self, other):
        if not isinstance(other, MatrixForm):
            return NotImplemented
        return self.m == other.m and self.n == other.n and (self - other).is_zero()

    __hash__ = None

    def to_json(self) -> list:
        return [[f.to_json() for f in r] for r in self.rows]

    @classmethod
    def from_json(cls, m: int, rows) -> "MatrixForm":
        return cls(m, [[Form.from_json(m, e) for e in r] for r in rows])

    def __repr__(self):
        return f"MatrixForm(m={self.m}, n={self.n}, parity={self.parity})"


def wedge(a, b):
    return a.wedge(b)


def d(a):
    return a.d()


def super_bracket(a: MatrixForm, b: MatrixForm) -> MatrixForm:
    """Graded commutator ``[a, b] = ab - (-1)^{|a||b|} ba`` for homogeneous parities."""
    pa = 1 if a.parity == "odd" else 0
    pb = 1 if b.parity == "odd" else 0
    if "mixed" in (a.parity, b.parity):
        raise ValueError("super bracket needs homogeneous parities")
    ab, ba = a.matmul(b), b.matmul(a)
    return ab + ba if pa and pb else ab - ba


def mat_ops(op: str, a: MatrixForm, b: Optional[MatrixForm] = None):
    if op == "mul":
        return a.matmul(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "trace":
        return a.trace()
    raise ValueError(f"unknown matrix operation {op!r}")


# ---------------------------------------------------------------------------
# connections and curvature

def curvature(A: MatrixForm) -> MatrixForm:
    """``dA + A ^ A``."""
    return A.d() + A.matmul(A)


@dataclass
class ConnectionPair:
    """Two connection matrices ``A0, A1`` of 1-forms on the same chart."""

    m: int
    n: int
    A0: MatrixForm
    A1: MatrixForm
    claims_flat: bool = False
    degree_cap: int = 2
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, M in (("A0", self.A0), ("A1", self.A1)):
            if M.m != self.m or M.n != self.n:
                raise ShapeError(f"{name} has shape ({M.m},{M.n}), expected ({self.m},{self.n})")
            bad = [d for d in M.degrees() if d != 1]
            if bad:
                raise ShapeError(f"{name} must consist of 1-forms, found degrees {bad}")
        if self.claims_flat:
            for name, M in (("A0", self.A0), ("A1", self.A1)):
                R = curvature(M)
                for i, j, f in R.nonzero_entries():
                    raise FlatnessViolation(f"curvature of {name} has nonzero entry ({i + 1},{j + 1}): {f}")

    @property
    def A(self) -> MatrixForm:
        return self.A1 - self.A0

    def swapped(self) -> "ConnectionPair":
        return ConnectionPair(self.m, self.n, self.A1, self.A0, self.claims_flat, self.degree_cap, dict(self.meta))

    def to_json(self) -> dict:
        return {"m": self.m, "n": self.n, "degree_cap": self.degree_cap,
                "claims_flat": self.claims_flat,
                "A0": self.A0.to_json(), "A1": self.A1.to_json()}


def curvature_family(pair: ConnectionPair) -> MatrixForm:
    """``R_t`` for ``A_t = A0 + t A`` with ``t`` kept as a formal variable."""
    t = Form.t(pair.m)
    At = pair.A0 + pair.A.wedge_form(t)
    return curvature(At)


def connection_family(pair: ConnectionPair) -> MatrixForm:
    t = Form.t(pair.m)
    return pair.A0 + pair.A.wedge_form(t)


def bianchi_residual(A: MatrixForm, R: MatrixForm) -> MatrixForm:
    """``dR + [A, R]``; zero when ``R`` is the curvature of ``A``."""
    return R.d() + A.matmul(R) - R.matmul(A)


def cs_classic(A: MatrixForm) -> Form:
    """``tr[A ^ dA + (2/3) A ^ A ^ A]``."""
    AA = A.matmul(A)
    return A.trace_product(A.d()) + A.trace_product(AA).scale(Fraction(2, 3))


# ---------------------------------------------------------------------------
# random data

def random_form_1(m: int, rng: random.Random, degree_cap: int, nterms: int, coef: int) -> Form:
    f = Form(m)
    for _ in range(nterms):
        deg = rng.randint(0, degree_cap)
        exps = [0] * m
        for _ in range(deg):
            exps[rng.randrange(m)] += 1
        c = rng.choice([k for k in range(-coef, coef + 1) if k])
        f.iadd(Form.monomial(m, exps, (rng.randrange(m),), c))
    return f


def random_connection(m: int, n: int, seed: int, degree_cap: int = 2, nterms: int = 3,
                      coef: int = 3, antisymmetric: bool = False, density: float = 1.0,
                      rng: Optional[random.Random] = None) -> MatrixForm:
    """Sparse random matrix of 1-forms with small integer coefficients.

    ``antisymmetric=True`` draws an so(n)-valued connection.
    """
    rng = rng or random.Random(seed)
    rows = [[Form(m) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if antisymmetric and j <= i:
                continue
            if rng.random() > density:
                continue
            f = random_form_1(m, rng, degree_cap, nterms, coef)
            rows[i][j] = f
            if antisymmetric:
                rows[j][i] = -f
    return MatrixForm(m, rows)


def random_pair(m: int, n: int, seed: int, degree_cap: int = 2, nterms: int = 3, coef: int = 3,
                antisymmetric: bool = False, trivial_a0: bool = False, density: float = 1.0) -> ConnectionPair:
    rng = random.Random(seed)
    A0 = MatrixForm.zero(m, n) if trivial_a0 else random_connection(
        m, n, seed, degree_cap, nterms, coef, antisymmetric, density, rng)
    A1 = random_connection(m, n, seed, degree_cap, nterms, coef, antisymmetric, density, rng)
    return ConnectionPair(m, n, A0, A1, False, degree_cap,
                          {"seed": seed, "antisymmetric": antisymmetric})


def random_point(m: int, seed: int, lo: int = -3, hi: int = 3) -> Tuple[int, ...]:
    rng = random.Random(10007 * seed + 17)
    return tuple(rng.randint(lo, hi) for _ in range(m))


# ---------------------------------------------------------------------------
# functions of curvature via power sums

def _as_coeff_list(f) -> List:
    from .thetalib import WSeries
    if isinstance(f, WSeries):
        return list(f.coeffs)
    return [c if isinstance(c, QSeries) else QSeries.constant(c) for c in f]


def power_traces(X: MatrixForm, kmax: int, maxdeg: Optional[int] = None) -> Dict[int, Form]:
    """``{k: tr X^k}`` for ``1 <= k <= kmax``."""
    return _traces_by_halves(X, kmax, X.m if maxdeg is None else maxdeg)


def _traces_by_halves(X: MatrixForm, kmax: int, maxdeg: int) -> Dict[int, Form]:
    pows = {1: X}
    half = (kmax + 1) // 2
    for j in range(2, half + 1):
        pows[j] = pows[j - 1].matmul(X, maxdeg)
    out = {}
    for k in range(1, kmax + 1):
        a = (k + 1) // 2
        b = k - a
        out[k] = pows[a].trace() if b == 0 else pows[a].trace_product(pows[b], maxdeg)
    return out


def _min_degree(f: Form) -> int:
    return min((I.bit_count() for I in f.terms), default=10 ** 6)


def _multisets(traces: Dict[int, Form], weights: Dict[int, QSeries], budget: int):
    """Yield ``(form, coefficient)`` for ``exp(sum_j weights[j] * traces[j])``.

    Enumerates multisets of trace indices whose minimal total form degree fits
    in ``budget``; the coefficient of ``prod p_j^{m_j}`` is
    ``prod weights[j]^{m_j} / m_j!``.
    """
    keys = sorted(j for j in weights if j in traces and traces[j] and weights[j].terms)
    m = next(iter(traces.values())).m if traces else 0
    one = Form.constant(m, 1)

    def rec(idx, form, coeff, used):
        yield form, coeff
        for pos in range(idx, len(keys)):
            j = keys[pos]
            dj = _min_degree(traces[j])
            if used + dj > budget:
                continue
            f2, c2, u2, mult = form, coeff, used, 0
            while u2 + dj <= budget:
                mult += 1
                f2 = f2.wedge(traces[j], budget)
                if not f2:
                    break
                c2 = c2 * weights[j] * Fraction(1, mult)
                u2 += dj
                yield from rec(pos + 1, f2, c2, u2)

    yield from rec(0, one, QSeries.one(), 0)


def exp_power_sums(weights: Dict[int, QSeries], traces: Dict[int, Form], m: int,
                   trunc: Optional[int] = None) -> FormSeries:
    out = FormSeries(m, {}, trunc)
    for form, coeff in _multisets(traces, weights, m):
        out.add_product(coeff.truncate(trunc), form)
    return out


def tr_f(f, X: MatrixForm, traces: Optional[Dict[int, Form]] = None) -> FormSeries:
    """``tr f(X) = sum_k f_k tr X^k`` (``tr X^0 = n``).  ``traces`` may be precomputed."""
    cs = _as_coeff_list(f)
    kmax = min(len(cs) - 1, X.m // max(1, _min_matrix_degree(X)))
    if traces is not None:
        tr = traces
    else:
        tr = _traces_by_halves(X, kmax, X.m) if kmax >= 1 else {}
    trunc = _min_trunc(*[c.trunc for c in cs])
    out = FormSeries(X.m, {}, trunc)
    out.add_product(cs[0], Form.constant(X.m, X.n))
    for k in range(1, kmax + 1):
        out.add_product(cs[k], tr[k])
    return out


def _min_matrix_degree(X: MatrixForm) -> int:
    return min((_min_degree(f) for _, _, f in X.nonzero_entries()), default=X.m + 1)


def det_half(f, X: MatrixForm, trunc: Optional[int] = None,
             traces: Optional[Dict[int, Form]] = None) -> FormSeries:
    """``exp(1/2 tr log f(X))`` for an even matrix ``X`` without 0-form part."""
    from .thetalib import WSeries
    ws = f if isinstance(f, WSeries) else WSeries(_as_coeff_list(f))
    if ws[0] != QSeries.one():
        raise BranchError("det^{1/2} needs a generating function with constant term exactly 1")
    if X.is_zero():
        return FormSeries.from_form(Form.constant(X.m, 1), 1, _min_trunc(ws.trunc, trunc))
    if _min_matrix_degree(X) == 0:
        raise NotNilpotent("matrix has a 0-form part")
    kmax = min(ws.wdeg, X.m // _min_matrix_degree(X))
    ell = ws.truncate(kmax).log()
    weights = {k: ell[k] * Fraction(1, 2) for k in range(1, kmax + 1)}
    if traces is None:
        traces = _traces_by_halves(X, kmax, X.m)
    return exp_power_sums(weights, traces, X.m, _min_trunc(ws.trunc, trunc))


class SeriesMatrix:
    """Square matrix of :class:`FormSeries` (output of :func:`apply_series`)."""

    def __init__(self, m: int, rows):
        self.m, self.n, self.rows = m, len(rows), rows

    def matmul(self, other: "SeriesMatrix") -> "SeriesMatrix":
        n = self.n
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = FormSeries.zero(self.m)
                for k in range(n):
                    acc = acc + self.rows[i][k].wedge(other.rows[k][j])
                row.append(acc)
            rows.append(row)
        return SeriesMatrix(self.m, rows)

    def trace(self) -> FormSeries:
        acc = FormSeries.zero(self.m)
        for i in range(self.n):
            acc = acc + self.rows[i][i]
        return acc

    def is_identity(self) -> bool:
        one = FormSeries.from_form(Form.constant(self.m, 1))
        return all((self.rows[i][j] - (one if i == j else FormSeries.zero(self.m))).is_zero()
                   for i in range(self.n) for j in range(self.n))


def apply_series(f, X: MatrixForm) -> SeriesMatrix:
    """``sum_k f_k X^k``.

    ``f`` is a :class:`WSeries` (a truncated infinite series) or a plain list of
    coefficients (an exact polynomial).  With a WSeries, ``X`` must have no
    0-form part, so ``X^k`` vanishes once its degree passes the chart dimension.
    """
    from .thetalib import WSeries
    infinite = isinstance(f, WSeries)
    cs = _as_coeff_list(f)
    mind = _min_matrix_degree(X)
    if mind == 0 and infinite:
        raise NotNilpotent("series of a matrix with a 0-form part does not terminate")
    kmax = len(cs) - 1 if mind == 0 else min(len(cs) - 1, X.m // mind)
    m, n = X.m, X.n
    acc = [[FormSeries.zero(m) for _ in range(n)] for _ in range(n)]
    P = MatrixForm.identity(m, n)
    for k in range(kmax + 1):
        if k:
            P = P.matmul(X)
        for i, j, g in P.nonzero_entries():
            acc[i][j].add_product(cs[k], g)
    return SeriesMatrix(m, acc)


def det_cofactor(M: SeriesMatrix) -> FormSeries:
    """Determinant by cofactor expansion (entries commute: even forms only)."""
    n = M.n
    if n == 1:
        return M.rows[0][0]
    acc = FormSeries.zero(M.m)
    for j in range(n):
        minor = SeriesMatrix(M.m, [[M.rows[i][k] for k in range(n) if k != j] for i in range(1, n)])
        term = M.rows[0][j].wedge(det_cofactor(minor))
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


# ---------------------------------------------------------------------------
# transgression

class FamilyData:
    """``A = A1 - A0`` and ``R_t`` for a pair, optionally evaluated at a point.

    Traces, ``tr[A R_t^j]`` and the integrated products used by
    :func:`transgression_integral` are cached, so several generating
    functions can be transgressed over one pair for the price of one.
    """

    def __init__(self, m: int, A: MatrixForm, Rt: MatrixForm, point: Optional[Tuple] = None):
        self.m, self.A, self.Rt, self.point = m, A, Rt, point
        self.n = Rt.n
        self._pows = {0: MatrixForm.identity(m, self.n), 1: Rt}
        self._AR = {0: A}
        self._traces: Dict[int, Form] = {}
        self._lin: Dict[int, Form] = {}
        self._prod: Dict[Tuple, Form] = {}
        self._int: Dict[Tuple, Form] = {}

    @classmethod
    def of(cls, pair: ConnectionPair, point: Optional[Sequence] = None) -> "FamilyData":
        A, Rt = pair.A, curvature_family(pair)
        if point is not None:
            point = tuple(point)
            A, Rt = A.at_point(point), Rt.at_point(point)
        return cls(pair.m, A, Rt, point)

    def power(self, j: int) -> MatrixForm:
        if j not in self._pows:
            self._pows[j] = self.power(j - 1).matmul(self.Rt, self.m)
        return self._pows[j]

    def trace(self, k: int) -> Form:
        """``tr R_t^k``."""
        if k not in self._traces:
            if k == 0:
                self._traces[k] = Form.constant(self.m, self.n)
            elif k == 1:
                self._traces[k] = self.Rt.trace()
            else:
                self._traces[k] = self.power((k + 1) // 2).trace_product(self.power(k // 2), self.m)
        return self._traces[k]

    def lin(self, j: int) -> Form:
        """``tr[A R_t^j]``."""
        if j not in self._lin:
            a = min(j, (self.m // 2 + 1) // 2)
            if a not in self._AR:
                self._AR[a] = self.A.matmul(self.power(a), self.m)
            b = j - a
            self._lin[j] = self._AR[a].trace() if b == 0 else self._AR[a].trace_product(self.power(b), self.m)
        return self._lin[j]

    def product(self, lam: Tuple[int, ...]) -> Form:
        """``prod_k tr R_t^{lam_k}`` for a sorted tuple ``lam``."""
        if lam not in self._prod:
            if not lam:
                self._prod[lam] = Form.constant(self.m, 1)
            else:
                self._prod[lam] = self.product(lam[:-1]).wedge(self.trace(lam[-1]), self.m)
        return self._prod[lam]

    def integrated(self, lam: Tuple[int, ...], j: int) -> Form:
        """``int_0^1 prod tr R_t^{lam} ^ tr[A R_t^j] dt``."""
        key = (lam, j)
        if key not in self._int:
            self._int[key] = self.product(lam).wedge(self.lin(j), self.m).integrate_t()
        return self._int[key]


def _min_deg_trace(fam: FamilyData, k: int) -> int:
    return 0 if k == 0 else _min_degree(fam.trace(k))


def transgression_integral(exp_weights: Dict[int, QSeries], lin: Dict[int, QSeries],
                           fam: FamilyData, trunc: Optional[int] = None,
                           degrees: Optional[Iterable[int]] = None,
                           pre: Optional[Dict[int, QSeries]] = None) -> FormSeries:
    """``int_0^1 P(R_t) exp(sum_k w_k tr R_t^k) ^ sum_j lin_j tr[A R_t^j] dt``.

    ``P = sum_k pre_k tr R_t^k`` (``tr R_t^0`` is the rank) and defaults to 1.
    The integrand is polynomial in ``t`` so the integral is exact.
    ``degrees`` restricts the output to the listed form degrees.
    """
    m = fam.m
    wanted = set(degrees) if degrees is not None else None
    kmax = m // 2
    ks = sorted(k for k, c in exp_weights.items() if 1 <= k <= kmax and c.terms and fam.trace(k))
    js = sorted(j for j, c in lin.items() if 2 * j + 1 <= m and c.terms and fam.lin(j))
    if pre is None:
        pres = [((), QSeries.one())]
    else:
        # the rank term tr R_t^0 = n is folded into the coefficient
        pres = [(((k,) if k else ()), (c if k else c * fam.n)) for k, c in sorted(pre.items())
                if c.terms and k <= kmax and fam.trace(k)]
    deg = {k: _min_deg_trace(fam, k) for k in ks}
    out = FormSeries(m, {}, trunc)
    acc: Dict[Tuple, QSeries] = {}

    def rec(pos, lam, coeff, used):
        # lam: multiset from exp_weights; coeff includes the 1/mult! factors
        for pk, pc in pres:
            pdeg = sum(_min_deg_trace(fam, k) for k in pk)
            full = tuple(sorted(lam + pk))
            c0 = coeff if pre is None else coeff * pc
            for j in js:
                total = used + pdeg + 2 * j + 1
                if total > m:
                    continue
                if wanted is not None and total > max(wanted):
                    continue
                key = (full, j)
                c = c0 * lin[j]
                acc[key] = acc[key] + c if key in acc else c
        for p in range(pos, len(ks)):
            k = ks[p]
            lam2, c2, u2, mult = lam, coeff, used, 0
            while u2 + deg[k] + 1 <= m:
                mult += 1
                lam2 = lam2 + (k,)
                c2 = c2 * exp_weights[k] * Fraction(1, mult)
                u2 += deg[k]
                rec(p + 1, lam2, c2, u2)

    rec(0, (), QSeries.one(), 0)
    for (lam, j), c in acc.items():
        c = c.truncate(trunc)
        if not c.terms:
            continue
        form = fam.integrated(lam, j)
        if wanted is not None:
            form = Form(m, {I: p for I, p in form.terms.items() if I.bit_count() in wanted})
        out.add_product(c, form)
    return out


def transgress_tr(f, pair, point=None) -> FormSeries:
    """``int_0^1 tr[A f'(R_t)] dt``; ``pair`` may be a precomputed :class:`FamilyData`."""
    cs = _as_coeff_list(f)
    lin = {j: cs[j + 1] * (j + 1) for j in range(len(cs) - 1)}
    fam = pair if isinstance(pair, FamilyData) else FamilyData.of(pair, point)
    return transgression_integral({}, lin, fam)


def transgress_det_half(f, pair: ConnectionPair, point=None, trunc=None, degrees=None) -> FormSeries:
    """``int_0^1 1/2 det^{1/2}(f(R_t)) tr[A f'(R_t)/f(R_t)] dt``."""
    from .thetalib import WSeries
    ws = f if isinstance(f, WSeries) else WSeries(_as_coeff_list(f))
    if ws[0] != QSeries.one():
        raise BranchError("det^{1/2} needs a generating function with constant term exactly 1")
    kmax = pair.m // 2
    ell = ws.truncate(min(ws.wdeg, kmax + 1)).log()
    weights = {k: ell[k] * Fraction(1, 2) for k in range(1, min(ell.wdeg, kmax) + 1)}
    lin = {j: ell[j + 1] * Fraction(j + 1, 2) for j in range(ell.wdeg)}
    fam = pair if isinstance(pair, FamilyData) else FamilyData.of(pair, point)
    return transgression_integral(weights, lin, fam, _min_trunc(ws.trunc, trunc), degrees)


def det_half_at(f, A: MatrixForm, point=None, trunc=None) -> FormSeries:
    """``det_half(f, curvature(A))``, optionally evaluated at a point."""
    R = curvature(A)
    if point is not None:
        R = R.at_point(tuple(point))
    return det_half(f, R, trunc)
