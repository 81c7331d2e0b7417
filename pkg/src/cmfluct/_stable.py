"""Standard strictly stable laws: sampling, distribution function, density.

Parametrisation is the usual ``S1`` one with unit scale and zero location,

    E exp(i u X) = exp(-|u|^a (1 - i b sign(u) tan(pi a / 2))),   a != 1.

The distribution function is computed from Nolan's single-integral
representation.  Each half of the angular range is integrated in the distance
to its own endpoint so that the thin transition layers produced by very small
or very large arguments stay resolvable.  For fast vectorised use a piecewise
Chebyshev table in ``asinh(x)`` is built lazily per ``(a, b)``; beyond the
table the tail series takes over.
"""
from __future__ import annotations

import math
import threading
import warnings
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev
from scipy import integrate, optimize, special

_LEVELS = np.log([40.0, 10.0, 3.0, 1.0, 0.3, 0.1, 1e-2, 1e-3, 1e-5, 1e-8])
_CHEB_DEG = 16
_TAYLOR_EDGE = 1e-6


def skew_from_positivity(alpha: float, rho: float) -> float:
    """Skewness ``b`` of the ``S1`` law with ``P(X > 0) = rho``."""
    return math.tan(math.pi * alpha * (rho - 0.5)) / math.tan(math.pi * alpha / 2)


def positivity_from_skew(alpha: float, beta: float) -> float:
    return 0.5 + math.atan(beta * math.tan(math.pi * alpha / 2)) / (math.pi * alpha)


def cms_sample(alpha: float, beta: float, size, rng: np.random.Generator) -> np.ndarray:
    """Chambers-Mallows-Stuck draws from the unit ``S1`` law (``alpha != 1``)."""
    u = rng.uniform(-np.pi / 2, np.pi / 2, size)
    w = rng.standard_exponential(size)
    zeta = beta * math.tan(math.pi * alpha / 2)
    shift = math.atan(zeta) / alpha
    factor = (1.0 + zeta * zeta) ** (1.0 / (2.0 * alpha))
    part1 = np.sin(alpha * (u + shift)) / np.cos(u) ** (1.0 / alpha)
    part2 = (np.cos(u - alpha * (u + shift)) / w) ** ((1.0 - alpha) / alpha)
    return factor * part1 * part2


class StandardStable:
    """Distribution function and density of the unit ``S1`` law."""

    def __init__(self, alpha: float, beta: float):
        if not (0.0 < alpha < 2.0) or alpha == 1.0:
            raise ValueError("alpha must lie in (0, 1) or (1, 2)")
        if not -1.0 <= beta <= 1.0:
            raise ValueError("beta must lie in [-1, 1]")
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.theta0 = math.atan(beta * math.tan(math.pi * alpha / 2)) / alpha
        self.rho = 0.5 + self.theta0 / math.pi
        self.tail_scale = 1.0 / math.cos(alpha * self.theta0)
        self.cdf0 = 0.5 - self.theta0 / math.pi
        self.pdf0 = (special.gamma(1 + 1 / alpha) * math.cos(self.theta0)
                     * math.cos(alpha * self.theta0) ** (1 / alpha) / math.pi)
        self._lock = threading.Lock()
        self._table = None
        self.series_edge = self._choose_series_edge()

    # -- exact scalar evaluation -------------------------------------------------

    def _half_integrals(self, x: float, theta0: float, want_pdf: bool) -> tuple[float, float]:
        a = self.alpha
        width = math.pi / 2 + theta0
        if width <= 1e-300:
            return 0.0, 0.0
        r = a / (a - 1)
        base = r * math.log(x) + math.log(math.cos(a * theta0)) / (a - 1)

        def log_exponent(p, q):
            # p: distance from the lower end, q: distance from the upper end
            return (base + (r - 1) * np.log(np.sin(q)) - r * np.log(np.sin(a * p))
                    + np.log(np.cos(theta0 + (a - 1) * p)))

        total_cdf = 0.0
        total_pdf = 0.0
        for from_lower in (True, False):
            def expo(ls, from_lower=from_lower):
                s = np.exp(ls)
                return log_exponent(s, width - s) if from_lower else log_exponent(width - s, s)

            lo, hi = math.log(1e-300), math.log(width / 2)
            e_lo, e_hi = float(expo(lo)), float(expo(hi))
            cut = _LEVELS[0]
            if e_lo > cut and e_hi > cut:
                continue
            crossings = {}
            for level in _LEVELS:
                if (e_lo - level) * (e_hi - level) < 0:
                    crossings[level] = optimize.brentq(
                        lambda ls, level=level: float(expo(ls)) - level, lo, hi, xtol=1e-13)
            a_, b_ = lo, hi
            if cut in crossings:
                if e_lo > cut:
                    a_ = crossings[cut]
                else:
                    b_ = crossings[cut]
            bounds = sorted({a_, b_} | {c for c in crossings.values() if a_ < c < b_})

            def g_cdf(ls):
                e = expo(ls)
                return math.exp(-math.exp(e)) * math.exp(ls) if e < 700 else 0.0

            def g_pdf(ls):
                e = expo(ls)
                return math.exp(e - math.exp(e)) * math.exp(ls) if e < 700 else 0.0

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                for lo_i, hi_i in zip(bounds[:-1], bounds[1:]):
                    total_cdf += integrate.quad(g_cdf, lo_i, hi_i, epsabs=1e-17, epsrel=1e-13, limit=200)[0]
                    if want_pdf:
                        total_pdf += integrate.quad(g_pdf, lo_i, hi_i, epsabs=1e-17, epsrel=1e-13,
                                                    limit=200)[0]
        return total_cdf, total_pdf

    def exact(self, x: float, want_pdf: bool = True) -> tuple[float, float]:
        """Return ``(cdf, pdf)`` at a scalar ``x`` by direct quadrature."""
        x = float(x)
        if x == 0.0:
            return self.cdf0, self.pdf0
        neg = x < 0
        theta0 = -self.theta0 if neg else self.theta0
        ax = abs(x)
        icdf, ipdf = self._half_integrals(ax, theta0, want_pdf)
        c1 = (math.pi / 2 - theta0) / math.pi if self.alpha < 1 else 1.0
        cdf = c1 + math.copysign(1.0, 1 - self.alpha) / math.pi * icdf
        pdf = self.alpha / (math.pi * abs(self.alpha - 1) * ax) * ipdf
        cdf = min(1.0, max(0.0, cdf))
        return (1.0 - cdf if neg else cdf), pdf

    # -- tail series --------------------------------------------------------------

    def _series_terms(self, x, positive: bool, kmax: int = 80):
        a = self.alpha
        rho = self.rho if positive else 1.0 - self.rho
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        log_x = np.log(x)
        last = np.full_like(x, np.inf)
        for k in range(1, kmax + 1):
            log_mag = (special.gammaln(k * a) - special.gammaln(k + 1)
                       + k * math.log(self.tail_scale) - k * a * log_x)
            mag = np.exp(log_mag)
            out += (-1) ** (k + 1) * mag * math.sin(k * math.pi * a * rho)
            last = mag
            if np.all(mag < 1e-18 * np.maximum(np.abs(out), 1e-300)) or np.all(mag < 1e-30):
                break
        return out / math.pi, last / math.pi

    def tail(self, x, positive: bool = True):
        """``P(X > x)`` (or ``P(X < -x)``) for large positive ``x`` via the tail series."""
        return self._series_terms(x, positive)[0]

    def _choose_series_edge(self) -> float:
        for edge in (50.0, 200.0, 1e3, 1e4, 1e5):
            worst = 0.0
            for positive in (True, False):
                _, last = self._series_terms(np.array([edge]), positive)
                worst = max(worst, float(last[0]))
            if worst < 1e-16:
                return edge
        return 1e5

    # -- vectorised table ---------------------------------------------------------

    def _pieces(self):
        y_edge = math.asinh(self.series_edge)
        near = [0.5 * 4.0 ** (-j) for j in range(10, -1, -1)]
        far = list(np.arange(1.0, y_edge, 0.5)) + [y_edge]
        bounds = [math.asinh(_TAYLOR_EDGE)] + [b for b in near if b > math.asinh(_TAYLOR_EDGE)] + far
        bounds = sorted(set(bounds))
        pos = list(zip(bounds[:-1], bounds[1:]))
        neg = [(-b, -a) for a, b in pos]
        return neg[::-1] + pos

    def _build_table(self):
        nodes = np.cos(np.pi * (np.arange(_CHEB_DEG + 1) + 0.5) / (_CHEB_DEG + 1))
        pieces = self._pieces()
        coefs = []
        for lo, hi in pieces:
            mid, half = (lo + hi) / 2, (hi - lo) / 2
            vals = [self.exact(math.sinh(mid + half * s), want_pdf=False)[0] for s in nodes]
            coefs.append(chebyshev.chebfit(nodes, vals, _CHEB_DEG))
        lows = np.array([p[0] for p in pieces])
        highs = np.array([p[1] for p in pieces])
        return lows, highs, np.array(coefs)

    def table(self):
        with self._lock:
            if self._table is None:
                self._table = self._build_table()
        return self._table

    def cdf(self, x) -> np.ndarray:
        """Vectorised distribution function, absolute accuracy about 1e-10 or better."""
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        ax = np.abs(x)
        small = ax < _TAYLOR_EDGE
        out[small] = self.cdf0 + self.pdf0 * x[small]
        big_pos = x >= self.series_edge
        big_neg = x <= -self.series_edge
        if big_pos.any():
            out[big_pos] = 1.0 - self.tail(x[big_pos], True)
        if big_neg.any():
            out[big_neg] = self.tail(-x[big_neg], False)
        mid = ~(small | big_pos | big_neg)
        if mid.any():
            lows, highs, coefs = self.table()
            y = np.arcsinh(x[mid])
            idx = np.clip(np.searchsorted(highs, y), 0, len(highs) - 1)
            s = (2 * y - lows[idx] - highs[idx]) / (highs[idx] - lows[idx])
            # Clenshaw recurrence, one polynomial per point
            b1 = np.zeros_like(s)
            b2 = np.zeros_like(s)
            c = coefs[idx]
            for k in range(_CHEB_DEG, 0, -1):
                b1, b2 = 2 * s * b1 - b2 + c[:, k], b1
            out[mid] = s * b1 - b2 + c[:, 0]
        return np.clip(out, 0.0, 1.0)


@lru_cache(maxsize=64)
def standard_stable(alpha: float, beta: float) -> StandardStable:
    return StandardStable(alpha, beta)
