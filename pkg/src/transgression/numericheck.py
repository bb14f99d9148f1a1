"""Floating-point checks of the S-transformation laws.

Exact q-series arithmetic only sees ``tau -> tau + 1``; the ``tau -> -1/tau``
laws are checked here by evaluating truncated products and exact
q-expansions at sample points of the upper half plane.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .exactscalar import QSeries

__all__ = [
    "NumericConfig", "NumericReport", "theta_eval", "theta_nulls_eval", "check_transformations",
    "evaluate_form_series", "required_qorder", "check_phi_modularity_S", "check_cs_modularity_S",
    "check_flat_weight_law", "e2_defect",
]

PI = math.pi
J = 1j


@dataclass
class NumericConfig:
    product_terms: int = 60
    tau_samples: List[complex] = field(default_factory=lambda: [2j, 1 + 2j, (-1 + 3j) / 2])
    v_samples: List[complex] = field(default_factory=lambda: [0.3 + 0.1j, -0.17 + 0.05j])
    tol: float = 1e-10

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.product_terms < 1:
            raise ValueError("need at least one product term")
        for t in self.tau_samples:
            if complex(t).imag <= 0:
                raise ValueError(f"tau sample {t} is not in the upper half plane")


@dataclass
class NumericReport:
    tol: float
    entries: List[Tuple[str, str, float]] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def add(self, law: str, sample, residual: float):
        self.entries.append((law, str(sample), float(residual)))

    @property
    def max_residual(self) -> float:
        return max((r for _, _, r in self.entries), default=0.0)

    @property
    def failures(self) -> List[Tuple[str, str, float]]:
        return [e for e in self.entries if not e[2] < self.tol]

    @property
    def passed(self) -> bool:
        return not self.failures

    def merge(self, other: "NumericReport") -> "NumericReport":
        self.entries.extend(other.entries)
        self.notes.extend(other.notes)
        return self

    def to_json(self) -> dict:
        return {"tol": self.tol, "max_residual": self.max_residual, "passed": self.passed,
                "entries": [{"law": l, "sample": s, "residual": r} for l, s, r in self.entries],
                "notes": list(self.notes)}


def _rel(a: complex, b: complex) -> float:
    return abs(a - b) / max(1.0, abs(a), abs(b))


def _qpow(tau: complex, frac: float) -> complex:
    """``q^frac`` with ``q = e^{2 pi i tau}``."""
    return cmath.exp(2j * PI * tau * frac)


# (sign c in 1 - c e^{+-2 pi i v} q^a, half-integer exponents?, prefactor)
_KIND = {"theta": (1, False, "sin"), "theta1": (-1, False, "cos"),
         "theta2": (1, True, None), "theta3": (-1, True, None)}


def theta_eval(kind: str, v: complex, tau: complex, cfg: Optional[NumericConfig] = None,
               derivative: bool = False) -> complex:
    """Truncated product value of a theta function (or its v-derivative)."""
    if complex(tau).imag <= 0:
        raise ValueError("tau must lie in the upper half plane")
    cfg = cfg or NumericConfig()
    c, half, pre = _KIND[kind]
    ep, em = cmath.exp(2j * PI * v), cmath.exp(-2j * PI * v)
    prod, dlog = 1.0 + 0j, 0j
    for j in range(1, cfg.product_terms + 1):
        qj = _qpow(tau, j)
        qa = _qpow(tau, j - 0.5) if half else qj
        a = 1 - c * ep * qa
        b = 1 - c * em * qa
        prod *= (1 - qj) * a * b
        if derivative:
            dlog += (-c * 2j * PI * ep * qa) / a + (c * 2j * PI * em * qa) / b
    if pre is None:
        val = prod
        return val * dlog if derivative else val
    q8 = 2 * _qpow(tau, 1 / 8)
    if pre == "sin":
        s, ds = cmath.sin(PI * v), PI * cmath.cos(PI * v)
    else:
        s, ds = cmath.cos(PI * v), -PI * cmath.sin(PI * v)
    if derivative:
        return q8 * (ds * prod + s * prod * dlog)
    return q8 * s * prod


def theta_nulls_eval(tau: complex, cfg: Optional[NumericConfig] = None):
    return tuple(theta_eval(k, 0, tau, cfg) for k in ("theta1", "theta2", "theta3"))


def _delta_eps(tau, cfg):
    t1, t2, t3 = (x ** 4 for x in theta_nulls_eval(tau, cfg))
    return ((t2 + t3) / 8, -(t1 + t3) / 8, (t1 - t2) / 8), (t2 * t3 / 16, t1 * t3 / 16, -t1 * t2 / 16)


def _s_factor(tau):
    # (tau/i)^{1/2}, principal branch
    return cmath.sqrt(tau / J)


def check_transformations(cfg: Optional[NumericConfig] = None, series_trunc: int = 360) -> NumericReport:
    """All T- and S-laws of the four theta functions, their v-derivatives,
    ``theta'(0, -1/tau)``, and the delta/epsilon laws."""
    cfg = cfg or NumericConfig()
    rep = NumericReport(cfg.tol)
    th = lambda k, v, t, d=False: theta_eval(k, v, t, cfg, d)
    e8 = cmath.exp(J * PI / 4)
    s_partner = {"theta": "theta", "theta1": "theta2", "theta2": "theta1", "theta3": "theta3"}
    t_partner = {"theta": "theta", "theta1": "theta1", "theta2": "theta3", "theta3": "theta2"}
    for tau in cfg.tau_samples:
        sf = _s_factor(tau)
        for v in cfg.v_samples:
            g = cmath.exp(J * PI * tau * v * v)
            for k in ("theta", "theta1", "theta2", "theta3"):
                tfac = e8 if k in ("theta", "theta1") else 1
                pref = sf / J if k == "theta" else sf
                p = s_partner[k]
                rep.add(f"T:{k}", (v, tau), _rel(th(k, v, tau + 1), tfac * th(t_partner[k], v, tau)))
                rep.add(f"S:{k}", (v, tau), _rel(th(k, v, -1 / tau), pref * g * th(p, tau * v, tau)))
                rep.add(f"T:{k}'", (v, tau), _rel(th(k, v, tau + 1, True), tfac * th(t_partner[k], v, tau, True)))
                rhs = pref * g * (2j * PI * tau * v * th(p, tau * v, tau) + tau * th(p, tau * v, tau, True))
                rep.add(f"S:{k}'", (v, tau), _rel(th(k, v, -1 / tau, True), rhs))
        rep.add("theta'(0,-1/tau)", tau, _rel(th("theta", 0, -1 / tau, True), sf / J * tau * th("theta", 0, tau, True)))
        rep.add("jacobi", tau, _rel(th("theta", 0, tau, True),
                                    PI * th("theta1", 0, tau) * th("theta2", 0, tau) * th("theta3", 0, tau)))
        rep.add("theta(0)=0", tau, abs(th("theta", 0, tau)))
        d, e = _delta_eps(tau, cfg)
        dS, eS = _delta_eps(-1 / tau, cfg)
        dT, eT = _delta_eps(tau + 1, cfg)
        rep.add("S:delta2", tau, _rel(dS[1], tau ** 2 * d[0]))
        rep.add("S:eps2", tau, _rel(eS[1], tau ** 4 * e[0]))
        rep.add("T:delta2", tau, _rel(dT[1], d[2]))
        rep.add("T:eps2", tau, _rel(eT[1], e[2]))
    # the same delta/eps laws from the exact q-expansions
    from .thetalib import modular_table
    tab = modular_table(series_trunc)
    for tau in cfg.tau_samples:
        bound = abs(_qpow(-1 / tau, series_trunc / 24)) * 1e4
        if bound > cfg.tol:
            rep.notes.append(f"series check at {tau} skipped: q-tail {bound:.1e} above tolerance")
            continue
        ev = lambda f, t: f.evaluate(t, PI)
        rep.add("S:delta2[series]", tau, _rel(ev(tab.delta[1], -1 / tau), tau ** 2 * ev(tab.delta[0], tau)))
        rep.add("S:eps2[series]", tau, _rel(ev(tab.eps[1], -1 / tau), tau ** 4 * ev(tab.eps[0], tau)))
        rep.add("T:delta2[series]", tau, _rel(ev(tab.delta[1], tau + 1), ev(tab.delta[2], tau)))
    return rep


def e2_defect(tau: complex, N: int = 480) -> complex:
    """``E_2(-1/tau) - tau^2 E_2(tau)``; equals ``6 tau/(pi i)``, so E_2 is not modular."""
    from .csforms import quasimodular_e2
    e2 = quasimodular_e2(N)
    return e2.evaluate(-1 / tau, PI) - tau ** 2 * e2.evaluate(tau, PI)


# ---------------------------------------------------------------------------
# form-valued checks

def required_qorder(taus: Sequence[complex], tol: float, margin: float = 1e-4) -> int:
    """Smallest multiple of 24 whose q-tail at every ``tau`` is below ``tol * margin``."""
    worst = max(abs(_qpow(t, 1)) for t in taus)
    if worst >= 1:
        raise ValueError("tau too close to the real axis")
    k = math.ceil(math.log(tol * margin) / math.log(worst))
    return 24 * (k + 1) + 1


def evaluate_form_series(fs, tau: complex) -> Dict[Tuple[int, int], complex]:
    """Numeric value of every form-basis coefficient of a FormSeries at ``tau``."""
    return {key: qs.evaluate(tau, PI) for key, qs in fs.coefficient_table().items() if qs.terms}


def _compare(rep: NumericReport, law: str, sample, lhs: Dict, rhs: Dict, factor: complex = 1):
    keys = set(lhs) | set(rhs)
    scale = max([1.0] + [abs(v) for v in lhs.values()] + [abs(factor * v) for v in rhs.values()])
    worst = 0.0
    for k in keys:
        worst = max(worst, abs(lhs.get(k, 0) - factor * rhs.get(k, 0)) / scale)
    rep.add(law, sample, worst)


def check_phi_modularity_S(R, i: int, cfg: Optional[NumericConfig] = None, tau0: complex = 2j,
                           N: Optional[int] = None) -> NumericReport:
    """``{Phi_L(-1/tau)}^(4i) = (2tau)^{2i} {Phi_W(tau)}^(4i)`` and the PhiW' self-relation."""
    from .charforms import GenusKind, phi_form
    cfg = cfg or NumericConfig()
    N = N or required_qorder([tau0, -1 / tau0], cfg.tol)
    rep = NumericReport(cfg.tol)
    deg = 4 * i
    L = phi_form(GenusKind.PhiL, R, N).degree_part(deg)
    Wf = phi_form(GenusKind.PhiW, R, N).degree_part(deg)
    Wp = phi_form(GenusKind.PhiWPrime, R, N).degree_part(deg)
    if L.is_zero():
        rep.notes.append(f"degree {deg} component vanishes; check is vacuous")
    t = tau0
    _compare(rep, f"S:PhiL->PhiW deg {deg}", t, evaluate_form_series(L, -1 / t),
             evaluate_form_series(Wf, t), (2 * t) ** (2 * i))
    _compare(rep, f"S:PhiW->PhiL deg {deg}", t, evaluate_form_series(Wf, -1 / t),
             evaluate_form_series(L, t), (t / 2) ** (2 * i))
    _compare(rep, f"S:PhiW' deg {deg}", t, evaluate_form_series(Wp, -1 / t),
             evaluate_form_series(Wp, t), t ** (2 * i))
    return rep


def check_cs_modularity_S(pair, i: int, cfg: Optional[NumericConfig] = None, tau0: complex = 2j,
                          N: Optional[int] = None, point=None) -> NumericReport:
    """Weight-2i relations of the transgressed forms under S and generator words.

    The q-series are recomputed at an order ``N`` large enough for the sample
    points (including ``-1/tau0``), then evaluated numerically.  Chart
    coefficients are taken at ``point`` (no derivative is involved here).
    """
    from .charforms import GenusKind
    from .csforms import cs_form
    from .formcalc import FamilyData, random_point
    cfg = cfg or NumericConfig()
    deg = 4 * i - 1
    if point is None:
        point = random_point(pair.m, 0)
    # generator-word sample points keep Im >= 1/2
    w_L = (-0.5 + 0.5j)   # ST^2ST: tau -> (-tau-1)/(2tau+1)
    w_W = (0.5 + 0.5j)    # STS: tau -> -tau/(tau-1)
    samples = [tau0, -1 / tau0, w_L, (-w_L - 1) / (2 * w_L + 1), w_W, -w_W / (w_W - 1)]
    N = N or required_qorder(samples, cfg.tol)
    fam = FamilyData.of(pair, point)
    cs = {k: cs_form(k, fam, N, degrees=[deg]).form for k in
          (GenusKind.PhiL, GenusKind.PhiW, GenusKind.PhiWPrime)}
    rep = NumericReport(cfg.tol)
    if cs[GenusKind.PhiL].is_zero():
        rep.notes.append(f"degree {deg} component vanishes; check is vacuous")
    ev = lambda k, t: evaluate_form_series(cs[k], t)
    t = tau0
    L, W, Wp = GenusKind.PhiL, GenusKind.PhiW, GenusKind.PhiWPrime
    _compare(rep, f"S:CSPhiL->CSPhiW deg {deg}", t, ev(L, -1 / t), ev(W, t), (2 * t) ** (2 * i))
    _compare(rep, f"S:CSPhiW->CSPhiL deg {deg}", t, ev(W, -1 / t), ev(L, t), (t / 2) ** (2 * i))
    _compare(rep, f"S:CSPhiW' deg {deg}", t, ev(Wp, -1 / t), ev(Wp, t), t ** (2 * i))
    _compare(rep, f"T:CSPhiW->CSPhiW' deg {deg}", t, ev(W, t + 1), ev(Wp, t))
    g = (-w_L - 1) / (2 * w_L + 1)
    _compare(rep, f"Gamma0(2) ST^2ST:CSPhiL deg {deg}", w_L, ev(L, g), ev(L, w_L), (2 * w_L + 1) ** (2 * i))
    g = -w_W / (w_W - 1)
    _compare(rep, f"Gamma^0(2) STS:CSPhiW deg {deg}", w_W, ev(W, g), ev(W, w_W), (w_W - 1) ** (2 * i))
    return rep


def check_flat_weight_law(pair, i: int, cfg: Optional[NumericConfig] = None,
                          taus: Sequence[complex] = (1j, 2j), N: Optional[int] = None,
                          point=None) -> NumericReport:
    """``{CSPsiW(-1/tau)}^(4i-1) = tau^{2i} {CSPsiW(tau)}^(4i-1)`` for a flat pair (i >= 2)."""
    from .charforms import GenusKind
    from .csforms import cs_form
    from .formcalc import FamilyData, random_point
    cfg = cfg or NumericConfig()
    deg = 4 * i - 1
    if point is None:
        point = random_point(pair.m, 0)
    N = N or required_qorder(list(taus) + [-1 / t for t in taus], cfg.tol)
    cs = cs_form(GenusKind.PsiW, FamilyData.of(pair, point), N, degrees=[deg]).form
    rep = NumericReport(cfg.tol)
    if cs.is_zero():
        rep.notes.append(f"degree {deg} component vanishes; check is vacuous")
    for t in taus:
        _compare(rep, f"S:CSPsiW[flat] deg {deg}", t, evaluate_form_series(cs, -1 / t),
                 evaluate_form_series(cs, t), t ** (2 * i))
    if i == 1:
        rep.notes.append("weight 2: CSPsiW^(3) is quasimodular (E2-type) and is not expected to satisfy the law")
    return rep
