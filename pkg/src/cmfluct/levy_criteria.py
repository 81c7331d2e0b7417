"""Integral tests for the upper and lower functions of the minorant's slope process.

Two regimes are covered:

* ``FS``: the slope just after the vertex with slope ``s``; the tests decide
  whether ``liminf (C'_{t + tau_s} - s) / f(t)`` is ``0`` or ``infinity``.
* ``IS``: the slope near time zero for infinite-variation processes; the tests
  decide whether ``limsup |C'_t| f(t)`` is ``0`` or ``infinity``.

Every test is an improper integral near ``t = 0`` of a probability or truncated
moment of ``X_t``.  Integrals are split into dyadic shells in ``t`` and the
sequence of shell contributions is classified by :func:`classify_series`.
Inner expectations are written by parts in terms of the distribution function
of ``X_t``, so only ``f`` (never its inverse) is evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate, stats

from . import _stable
from ._numerics import (CONVERGING, DIVERGING, INDETERMINATE, VANISHING,
                        classify_series, classify_to_zero, gk_integrate)
from .additive_fluct import ConditionReport, bisect_inverse
from .levy_model import (Cauchy, LevyModel, Stable, canonical, has_infinite_variation,
                         marginal_cdf, sample_marginal, truncated_functionals)
from .vertex_law import phi_asymptotics_check  # noqa: F401  re-exported

DEFAULT_DEPTH = 48
LIL_DOMAIN = math.exp(-math.e ** math.e)
# mass below exp(-700) is dropped; smaller arguments underflow to subnormals
_LOG_FLOOR = -700.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)

KINDS = ("power", "power_log", "ginverse_log", "glog", "cauchy_lil", "custom")


class CapabilityError(ValueError):
    """Raised when a test function kind cannot provide a requested accessor."""


class DomainError(ValueError):
    """Raised when a test function is evaluated outside its domain."""


# -- test functions --------------------------------------------------------------


def _auto_log_base(r: float, q: float) -> float:
    """Smallest ``A = e^k`` making ``t^r log^q(A/t)`` increasing, and concave when ``r < 1``."""
    t = np.logspace(-300, 0, 3000)
    for k in range(1, 200):
        L = k - np.log(t)
        slope = r * L - q  # sign of the derivative
        if np.any(slope <= 0):
            continue
        if r < 1:
            # sign of f'' (up to the positive factor t^{r-2} L^{q-2})
            second = (r * (r - 1)) * L ** 2 + q * (1 - 2 * r) * L + q * (q - 1)
            if np.any(second > 0):
                continue
        return math.exp(k)
    raise ValueError(f"no log base makes t^{r} log^{q} increasing")


@dataclass
class TestFunction:
    """Increasing boundary function ``f`` on ``(0, 1]``.

    Kinds
    -----
    ``power``        ``t^p``
    ``power_log``    ``t^r log^q(A/t)``
    ``ginverse_log`` ``1/G(t log^p(A/t))`` with ``G(t) = t^{1-1/alpha}/scale``
    ``glog``         ``G(t log^p(A/t))``
    ``cauchy_lil``   ``logloglog(1/t) / log(1/t)`` on ``(0, exp(-e^e))``
    ``custom``       monotone interpolation of a table ``(t_i, f_i)``

    ``A`` defaults to the smallest ``e^k`` keeping ``f`` increasing (and concave
    for sub-linear kinds) on ``(0, 1]``; it only changes ``f`` by a factor tending
    to one.  With ``normalize`` the function is divided by its value at one.
    """

    __test__ = False  # not a pytest class

    kind: str
    p: float = 1.0
    alpha: float = 1.0
    scale: float = 1.0
    r: float = 0.0
    q: float = 0.0
    log_base: float | None = None
    table: tuple | None = None
    normalize: bool = True
    norm_constant: float = field(init=False, default=1.0)
    flags: list = field(init=False, default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind == "power" and not self.p > 0:
            raise ValueError("power needs p > 0")
        if self.kind in ("ginverse_log", "glog"):
            if not (0 < self.alpha <= 2 and self.scale > 0):
                raise ValueError("need alpha in (0, 2] and scale > 0")
            e = 1 / self.alpha - 1 if self.kind == "ginverse_log" else 1 - 1 / self.alpha
            self.r, self.q = e, self.p * e
        if self.kind in ("power_log", "ginverse_log", "glog"):
            if self.r == 0 and self.q == 0:
                # alpha = 1: G is constant and so is f
                self.flags.append("f is constant (alpha = 1 makes G constant): degenerate boundary")
                self.log_base = math.e if self.log_base is None else self.log_base
            elif self.r < 0 or (self.r == 0 and self.q > 0):
                raise ValueError("t^r log^q(A/t) is not increasing to zero for these exponents")
            if self.log_base is None:
                self.log_base = _auto_log_base(self.r, self.q)
            elif self.log_base <= 1:
                raise ValueError("log_base must exceed 1")
        if self.kind == "custom":
            if self.table is None:
                raise ValueError("custom kind needs a table")
            t, v = (np.asarray(c, dtype=float) for c in self.table)
            if t.ndim != 1 or t.shape != v.shape or len(t) < 3:
                raise ValueError("table needs matching 1-d arrays of length >= 3")
            if np.any(np.diff(t) <= 0) or np.any(np.diff(v) <= 0) or np.any(t <= 0) or np.any(v <= 0):
                raise ValueError("table must be strictly increasing and positive")
            self._pchip = interpolate.PchipInterpolator(np.log(t), np.log(v), extrapolate=False)
            self._table_lo = (float(np.log(t[0])), float(np.log(v[0])),
                              float((np.log(v[1]) - np.log(v[0])) / (np.log(t[1]) - np.log(t[0]))))
            self._table_hi = float(t[-1])
        if self.kind == "cauchy_lil":
            if self.normalize:
                self.flags.append("cauchy_lil cannot be normalised at 1; used as is")
            self.normalize = False
        if self.normalize:
            self.norm_constant = float(self._raw(np.array([1.0]))[0])
            if abs(self.norm_constant - 1) > 1e-12:
                self.flags.append(f"rescaled by 1/{self.norm_constant:.17g} so that f(1) = 1")
        self.flags.extend(self._shape_flags())

    # raw (unnormalised) values
    def _raw(self, t):
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k == "power":
            return t ** self.p
        if k in ("power_log", "ginverse_log", "glog"):
            c = self.scale if k == "ginverse_log" else (1 / self.scale if k == "glog" else 1.0)
            return c * t ** self.r * np.log(self.log_base / t) ** self.q
        if k == "cauchy_lil":
            self._check_domain(t)
            L = np.log(1 / t)
            return np.log(np.log(L)) / L
        lt = np.log(t)
        lo_t, lo_v, slope = self._table_lo
        out = np.where(lt < lo_t, lo_v + slope * (lt - lo_t), 0.0)
        inside = lt >= lo_t
        if np.any(t > self._table_hi * (1 + 1e-12)):
            raise DomainError("custom table does not cover the requested t")
        out = np.where(inside, self._pchip(np.clip(lt, lo_t, None)), out)
        return np.exp(out)

    def _check_domain(self, t):
        if np.any(np.asarray(t) >= LIL_DOMAIN):
            raise DomainError(f"cauchy_lil is defined on (0, {LIL_DOMAIN:.6g}) only")

    @property
    def upper(self) -> float:
        """Right end of the interval on which ``f`` is used."""
        return LIL_DOMAIN * (1 - 1e-12) if self.kind == "cauchy_lil" else 1.0

    def __call__(self, t):
        out = self._raw(t) / self.norm_constant
        return out if np.ndim(out) else float(out)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        k = self.kind
        if k == "power":
            out = self.p * t ** (self.p - 1)
        elif k in ("power_log", "ginverse_log", "glog"):
            L = np.log(self.log_base / t)
            out = self._raw(t) * (self.r - self.q / L) / t
        elif k == "cauchy_lil":
            self._check_domain(t)
            L = np.log(1 / t)
            M = np.log(L)
            out = (np.log(M) - 1 / M) / (t * L ** 2)
        else:
            raise CapabilityError("custom test functions have no derivative accessor")
        out = out / self.norm_constant
        return out if out.ndim else float(out)

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "power":
            out = y ** (1 / self.p)
        else:
            out = np.asarray(bisect_inverse(lambda t: self(np.minimum(t, self.upper)), y, 0.0, self.upper))
        out = np.minimum(out, self.upper)
        return out if out.ndim else float(out)

    def big_f(self, t):
        """``F(t) = t / f(t)``."""
        t = np.asarray(t, dtype=float)
        return t / self(t)

    def integral(self, t: float) -> float:
        """``int_0^t f(u) du``."""
        return gk_integrate(lambda y: self(np.exp(y)) * np.exp(y), _LOG_FLOOR, math.log(t),
                            abs_tol=0.0, rel_tol=1e-11)[0]

    def reciprocal_integral(self, t: float) -> float:
        """``int_0^t du / f(u)``."""
        return gk_integrate(lambda y: np.exp(y) / self(np.exp(y)), _LOG_FLOOR, math.log(t),
                            abs_tol=0.0, rel_tol=1e-11)[0]

    def is_concave(self) -> bool:
        t = np.linspace(0, self.upper, 2001)[1:]
        v = np.asarray(self(t))
        lin = np.diff(v, 2) <= 1e-12 * np.max(v)
        lt = np.logspace(-30, math.log10(self.upper) - 1e-9, 2000)
        d = np.asarray(self.derivative(lt)) if self.kind != "custom" else np.gradient(self(lt), lt)
        return bool(np.all(lin) and np.all(np.diff(d) <= 1e-9 * np.abs(d[1:])))

    def _shape_flags(self) -> list:
        flags = []
        t = np.logspace(-30, math.log10(self.upper), 3001)
        v = np.asarray(self(t))
        if np.any(np.diff(v) <= 0):
            flags.append("f is not strictly increasing on (0, 1]")
        if self.kind != "cauchy_lil" and (np.max(v) > 1 + 1e-12 or abs(v[-1] - 1) > 1e-12):
            flags.append("normalisation f(t) <= 1 = f(1) violated")
        return flags

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "normalize": self.normalize}
        if self.kind == "power":
            d["p"] = self.p
        elif self.kind == "power_log":
            d.update(r=self.r, q=self.q, log_base=self.log_base)
        elif self.kind in ("ginverse_log", "glog"):
            d.update(alpha=self.alpha, scale=self.scale, p=self.p, log_base=self.log_base)
        elif self.kind == "custom":
            d["table"] = [list(map(float, c)) for c in self.table]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TestFunction":
        d = dict(d)
        if "table" in d:
            d["table"] = tuple(tuple(c) for c in d["table"])
        return cls(**d)


def power(p: float) -> TestFunction:
    return TestFunction("power", p=p)


def power_log(r: float, q: float, log_base: float | None = None) -> TestFunction:
    return TestFunction("power_log", r=r, q=q, log_base=log_base)


def regular_variation_check(f: TestFunction, cs=(1e-1, 1e-2, 1e-3), ts=None) -> tuple[bool, dict]:
    """Numerical shadow of ``lim_{c->0} limsup_{t->0} f(ct)/f(t) = 0``.

    Returns ``(passed, {c: max ratio over small t})``; passes when the ratios
    decrease in ``c`` and the smallest is below one half.
    """
    ts = np.logspace(-40, -10, 61) * f.upper if ts is None else np.asarray(ts)
    ratios = {c: float(np.max(np.asarray(f(c * ts)) / np.asarray(f(ts)))) for c in cs}
    vals = [ratios[c] for c in sorted(cs, reverse=True)]
    return bool(np.all(np.diff(vals) < 0) and vals[-1] < 0.5), ratios


# -- distribution functions ------------------------------------------------------------


def _cauchy_interval(lo, hi):
    """``P(lo < Z <= hi)`` for standard Cauchy ``Z`` without cancellation."""
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float))
    with np.errstate(over="ignore", invalid="ignore"):
        den = 1 + lo * hi
        direct = np.arctan((hi - lo) / den) / np.pi
        wrap = (np.arctan(hi) - np.arctan(lo)) / np.pi
    out = np.where((den > 0) & np.isfinite(den), direct, wrap)
    return np.clip(np.where(hi > lo, out, 0.0), 0.0, 1.0)


class _IntervalProbability:
    """``P(lo < X_t <= hi)`` by exact scaling (stable kinds) or :func:`marginal_cdf`."""

    def __init__(self, model: LevyModel, route: str):
        if route not in ("scaling", "generic"):
            raise ValueError("route must be 'scaling' or 'generic'")
        self.model = canonical(model)
        self.route = route if isinstance(self.model, (Stable, Cauchy)) else "generic"
        if isinstance(self.model, Stable) and self.route == "scaling":
            self.std = _stable.standard_stable(self.model.alpha, self.model.beta)

    def __call__(self, t, lo, hi):
        t, lo, hi = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t, lo, hi)))
        m = self.model
        if self.route == "generic":
            with np.errstate(invalid="ignore"):
                a = marginal_cdf(m, t, np.clip(lo, -1e300, 1e300))
                b = marginal_cdf(m, t, np.clip(hi, -1e300, 1e300))
            return np.clip(np.where(hi > lo, b - a, 0.0), 0.0, 1.0)
        if isinstance(m, Cauchy):
            return _cauchy_interval((lo / t - m.loc) / m.scale, (hi / t - m.loc) / m.scale)
        s = m.scale * t ** (1 / m.alpha)
        za = (lo - m.drift * t) / s
        zb = (hi - m.drift * t) / s
        return np.clip(np.where(hi > lo, self.std.cdf(zb) - self.std.cdf(za), 0.0), 0.0, 1.0)


def _graded(lo, hi, panels: int = 10):
    lo = np.asarray(lo, dtype=float)[:, None]
    hi = np.asarray(hi, dtype=float)[:, None]
    r = 1.6 ** np.arange(panels + 1)
    edges = lo + (hi - lo) * (r - 1) / (r[-1] - 1)
    a, b = edges[:, :-1, None], edges[:, 1:, None]
    nodes = 0.5 * (a + b) + 0.5 * (b - a) * _GL_NODES
    weights = 0.5 * (b - a) * _GL_WEIGHTS
    n = lo.shape[0]
    return nodes.reshape(n, -1), weights.reshape(n, -1)


def _shell_terms(integrand, depth: int, upper: float = 1.0) -> np.ndarray:
    """``int`` over ``t in [upper 2^-k, upper 2^-k+1]`` of ``integrand(t) dt/t``."""
    out = np.empty(depth)
    for k in range(1, depth + 1):
        hi = math.log(upper) - (k - 1) * math.log(2)
        out[k - 1] = gk_integrate(lambda y: integrand(np.exp(y)), hi - math.log(2), hi,
                                  abs_tol=0.0, rel_tol=1e-8)[0]
    return out


def _series(name, terms) -> ConditionReport:
    sv = classify_series(terms)
    return ConditionReport(name, sv.verdict, np.asarray(terms), sv)


def _trend(name, seq) -> ConditionReport:
    tv = classify_to_zero(seq)
    return ConditionReport(name, tv.verdict, np.asarray(seq), tv)


def _restricted_mean(prob_of_t, top: float) -> float:
    """``int_0^top prob_of_t(t) dt`` in ``log t``."""
    return gk_integrate(lambda y: prob_of_t(np.exp(y)) * np.exp(y), math.log(top) - 60, math.log(top),
                        abs_tol=0.0, rel_tol=1e-8)[0]


# -- regime FS -----------------------------------------------------------------------


@dataclass
class CriteriaResult:
    """Condition reports, the combined verdict and any flags raised on the way."""

    regime: str
    conditions: dict
    verdict: str
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"regime": self.regime, "verdict": self.verdict, "flags": list(self.flags),
                "conditions": {k: v.to_dict() for k, v in self.conditions.items()}}


def fs_conditions(model: LevyModel, s: float, f: TestFunction, c: float = 1.0,
                  depth: int = DEFAULT_DEPTH, *, route: str = "scaling") -> CriteriaResult:
    """Integral tests for ``liminf (C'_{t+tau_s} - s)/f(t)`` at slope ``s``.

    The combined verdict is ``"infinity"`` when the large-jump, variance and
    mean conditions hold (or large-jump plus the single sufficient condition),
    ``"zero"`` when the large-jump integral diverges at the given ``c``, and
    ``"indeterminate"`` otherwise.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    prob = _IntervalProbability(model, route)
    up = f.upper
    flags = list(f.flags)

    def index_cdf(t, v):
        # P(0 < (X_t - s t)/t <= v)
        return prob(t, s * t, (s + v) * t)

    def large(t):
        return index_cdf(t, f(np.minimum(t / c, up)))

    def by_parts(t, kernel_head, kernel):
        # E[g(Y) 1{t/2 < Y <= up}] for Y = f^{-1}(U), written through the CDF in y
        a = t / 2
        fa = index_cdf(t, f(a))
        f1 = index_cdf(t, f(up))
        nodes, weights = _graded(np.log(a), np.full_like(a, math.log(up)))
        y = np.exp(nodes)
        vals = (index_cdf(t[:, None], f(y)) - fa[:, None]) * kernel(y) * y
        return kernel_head * (f1 - fa) + np.sum(vals * weights, axis=1)

    def var(t):
        return t * t * by_parts(t, 1 / up ** 2, lambda y: 2 / y ** 3)

    def suff(t):
        return t * by_parts(t, 1 / up, lambda y: 1 / y ** 2)

    conds = {
        "post_min_large": _series("post_min_large", _shell_terms(large, depth, up)),
        "post_min_var": _series("post_min_var", _shell_terms(var, depth, up)),
        "suff_low": _series("suff_low", _shell_terms(suff, depth, up)),
    }
    seq = []
    for n in range(1, depth + 1):
        top = up * 2.0 ** -n
        seq.append(_restricted_mean(lambda t: np.clip(index_cdf(t, f(top)) - index_cdf(t, f(t / 2)), 0, 1), top)
                   / top)
    conds["post_min_mean"] = _trend("post_min_mean", np.asarray(seq))
    v = {k: r.verdict for k, r in conds.items()}
    if v["post_min_large"] == DIVERGING:
        verdict = "zero"
    elif v["post_min_large"] == CONVERGING and (
            (v["post_min_var"] == CONVERGING and v["post_min_mean"] == VANISHING) or v["suff_low"] == CONVERGING):
        verdict = "infinity"
    else:
        verdict = INDETERMINATE
    ok, _ = regular_variation_check(f)
    if not ok:
        flags.append("f fails the regular-variation shadow check")
    return CriteriaResult("FS", conds, verdict, flags)


# -- regime IS -----------------------------------------------------------------------


def is_conditions(model: LevyModel, f: TestFunction, c: float = 1.0, depth: int = DEFAULT_DEPTH, *,
                  route: str = "scaling") -> CriteriaResult:
    """Integral tests for ``limsup |C'_t| f(t)`` as ``t -> 0``.

    Requires infinite variation.  Combined verdict ``"zero"`` needs concave
    ``f`` and either the three direct conditions or the two sufficient ones
    built from truncated characteristics; ``"infinity"`` follows from a
    divergent large-jump integral.
    """
    if not has_infinite_variation(model):
        raise ValueError("the IS regime needs a process of infinite variation")
    if not c > 0:
        raise ValueError("c must be positive")
    prob = _IntervalProbability(model, route)
    up = f.upper
    flags = list(f.flags)
    concave = f.is_concave()
    if not concave:
        flags.append("f is not concave: the vanishing direction is not covered")

    def large(t):
        return prob(t, -np.inf, -c * f.big_f(t))

    def var(t):
        # E[(X/F)^2 1{-2F < X <= -t}] = [b^2 P(a<X<=b) + int_{|b|}^{|a|} P(a<X<=-r) 2r dr] / F^2
        F = f.big_f(t)
        a, b = -2 * F, -t
        nodes, weights = _graded(np.log(t), np.log(2 * F))
        r = np.exp(nodes)
        vals = prob(t[:, None], a[:, None], -r) * 2 * r * r
        return (b * b * prob(t, a, b) + np.sum(vals * weights, axis=1)) / F ** 2

    def suff(t):
        F = np.asarray(f.big_f(t), dtype=float)
        out = np.empty_like(F)
        for i, (tv, Fv) in enumerate(zip(np.atleast_1d(t), np.atleast_1d(F))):
            g, s2, nb = truncated_functionals(model, float(Fv))
            out[i] = (g * g * tv + s2) / Fv ** 2 + nb
        return out

    conds = {
        "large": _series("large", _shell_terms(large, depth, up)),
        "var": _series("var", _shell_terms(var, depth, up)),
        "suff_var": _series("suff_var", _shell_terms(lambda t: suff(t) * t, depth, up)),
    }
    seq = []
    for n in range(1, depth + 1):
        top = up * 2.0 ** -n
        ftop = f(top)
        seq.append(_restricted_mean(lambda t: prob(t, -2 * f.big_f(t / 2), -t / ftop), top) / top)
    conds["mean"] = _trend("mean", np.asarray(seq))
    ts = up * 2.0 ** -np.arange(1, depth + 1)
    conds["suff_mean"] = _trend("suff_mean", suff(ts) * ts)
    v = {k: r.verdict for k, r in conds.items()}
    direct = v["large"] == CONVERGING and v["var"] == CONVERGING and v["mean"] == VANISHING
    sufficient = v["suff_var"] == CONVERGING and v["suff_mean"] == VANISHING
    if v["large"] == DIVERGING:
        verdict = "infinity"
    elif (direct or sufficient) and concave:
        verdict = "zero"
    else:
        verdict = INDETERMINATE
    ok, _ = regular_variation_check(f)
    if not ok:
        flags.append("f fails the regular-variation shadow check")
    return CriteriaResult("IS", conds, verdict, flags)


# -- power-type density criteria --------------------------------------------------------


def corollary24_integrals(beta: float, f: TestFunction, depth: int = DEFAULT_DEPTH) -> dict[str, ConditionReport]:
    """Three integrals deciding the power-type density test.

    ``double``: ``int_0^1 int_{t/2}^1 f'(y)/y t^{1-1/beta} dy dt``;
    ``single``: ``int_0^1 t^{-1/beta} f(t) dt``;
    ``capped``: ``int_0^1 min(t^{-1/beta} f(t), 1/t) dt``.
    """
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    f.derivative(np.array([0.5 * f.upper]))  # raises CapabilityError for tables
    up = f.upper

    def double(t):
        nodes, weights = _graded(np.log(t / 2), np.full_like(t, math.log(up)))
        y = np.exp(nodes)
        inner = np.sum(np.asarray(f.derivative(y)) * weights, axis=1)  # f'(y)/y dy = f'(y) dlog y
        return inner * t ** (2 - 1 / beta)

    def single(t):
        return t ** (1 - 1 / beta) * f(t)

    def capped(t):
        return np.minimum(t ** (1 - 1 / beta) * f(t), 1.0)

    return {name: _series(name, _shell_terms(fn, depth, up))
            for name, fn in (("double", double), ("single", single), ("capped", capped))}


# -- truncated moment bound audit -----------------------------------------------------------


@dataclass
class AuditRecord:
    t: float
    K: float
    eps: float
    p: float
    moment: float
    moment_se: float
    moment_bound: float
    tail: float
    tail_se: float
    tail_bound: float

    @property
    def violated(self) -> bool:
        return (self.moment - 3 * self.moment_se > self.moment_bound
                or self.tail - 3 * self.tail_se > self.tail_bound)


@dataclass
class AuditReport:
    model: dict
    records: list

    @property
    def violations(self) -> int:
        return sum(r.violated for r in self.records)


def appendix_bound_audit(model: LevyModel, grid, n_mc: int, rng: np.random.Generator) -> AuditReport:
    """Monte Carlo check of the truncated moment and tail bounds.

    For each ``(t, K, eps, p)`` in ``grid`` compares ``E[(|X_t| ^ K)^p]`` and
    ``P(|X_t| >= K)`` with ``(g^2 t^2 + s^2 t)^{p/2} + K^p n t`` and
    ``(g^2 t^2 + s^2 t)/K^2 + n t``, where ``(g, s^2, n)`` are the truncated
    drift, variance and tail mass at ``eps``.
    """
    from .levy_model import model_to_dict

    records = []
    for t, K, eps, p in grid:
        if not (0 < p <= 2 and 0 < eps <= 1 and t > 0 and K > 0):
            raise ValueError("need p in (0, 2], eps in (0, 1], t > 0, K > 0")
        x = np.abs(sample_marginal(model, t, n_mc, rng))
        mom = np.minimum(x, K) ** p
        tail = (x >= K).astype(float)
        g, s2, nb = truncated_functionals(model, eps)
        core = g * g * t * t + s2 * t
        records.append(AuditRecord(t, K, eps, p, float(mom.mean()), float(mom.std(ddof=1) / math.sqrt(n_mc)),
                                   core ** (p / 2) + K ** p * nb * t, float(tail.mean()),
                                   float(tail.std(ddof=1) / math.sqrt(n_mc)), core / K ** 2 + nb * t))
    return AuditReport(model_to_dict(model), records)


def gaussian_truncated_moment(sigma2: float, K: float, p: float) -> float:
    """``E[(|N| ^ K)^p]`` for ``N ~ N(0, sigma2)`` by quadrature."""
    sd = math.sqrt(sigma2)
    body = gk_integrate(lambda x: 2 * x ** p * stats.norm.pdf(x, scale=sd), 0.0, K, abs_tol=0.0)[0]
    return body + K ** p * 2 * stats.norm.sf(K / sd)
