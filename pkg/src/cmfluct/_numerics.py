"""Quadrature and series-verdict helpers shared across modules."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
_XK = np.array([
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245, 0.405845151377397166906606412076961,
    0.586087235467691130294144845693013, 0.741531185599394439863864773280788,
    0.864864423359769072789712788640926, 0.949107912342758524526189684047851,
    0.991455371120812639206854697526329])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970])
_WG = np.zeros(15)
_WG[1::2] = [0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
             0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
             0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
             0.129484966168869693270611432679082]


def gk_integrate(f, a: float, b: float, *, abs_tol: float = 1e-12, rel_tol: float = 1e-10,
                 breakpoints=None, max_intervals: int = 4000) -> tuple[float, float]:
    """Globally adaptive Gauss-Kronrod 7/15 with a vectorised integrand.

    ``f`` receives a 1-d array of nodes and must return values of the same
    shape.  Returns ``(value, error_estimate)``.
    """
    edges = np.unique(np.concatenate(([a, b], [] if breakpoints is None else
                                      [p for p in breakpoints if a < p < b])))
    lo, hi = edges[:-1], edges[1:]
    done_val = 0.0
    done_err = 0.0
    total_len = b - a
    for _ in range(64):
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        nodes = mid[:, None] + half[:, None] * _XK[None, :]
        vals = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
        k = half * (vals @ _WK)
        g = half * (vals @ _WG)
        err = np.abs(k - g)
        estimate = done_val + k.sum()
        budget = max(abs_tol, rel_tol * abs(estimate))
        ok = err <= budget * (hi - lo) / total_len
        if len(lo) + 2 * np.count_nonzero(~ok) > max_intervals:
            ok[:] = True
        done_val += k[ok].sum()
        done_err += err[ok].sum()
        if ok.all():
            break
        lo_b, hi_b, mid_b = lo[~ok], hi[~ok], mid[~ok]
        lo = np.concatenate((lo_b, mid_b))
        hi = np.concatenate((mid_b, hi_b))
    else:
        done_val += k[~ok].sum()
        done_err += err[~ok].sum()
    return float(done_val), float(done_err)


def gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


CONVERGING = "converging"
DIVERGING = "diverging"
INDETERMINATE = "indeterminate"
VANISHING = "vanishing"
NOT_VANISHING = "not_vanishing"


@dataclass
class SeriesVerdict:
    """Outcome of the three-way test on a sequence of non-negative terms.

    ``terms`` are per-shell (or per-index) contributions in order of
    increasing depth.  The rules, applied to the trailing window:

    * all trailing terms vanish, or every successive ratio is at most
      ``ratio_converge`` -> converging;
    * every successive ratio is at least 1 -> diverging;
    * otherwise a power law ``a_k ~ k^(-p)`` is fitted on the trailing half:
      ``p >= power_converge`` -> converging, ``p <= power_diverge`` ->
      diverging, anything in between -> indeterminate.
    """

    verdict: str
    partial_sum: float
    terms: np.ndarray = field(repr=False)
    tail_ratio: float = float("nan")
    power: float = float("nan")
    rule: str = ""

    @property
    def finite(self):
        return {CONVERGING: True, DIVERGING: False}.get(self.verdict)


def classify_series(terms, *, window: int = 8, ratio_converge: float = 0.9,
                    power_converge: float = 1.3, power_diverge: float = 1.1,
                    zero_tol: float = 1e-300) -> SeriesVerdict:
    a = np.asarray(terms, dtype=float)
    if a.ndim != 1 or len(a) < window + 1:
        raise ValueError(f"need at least {window + 1} terms")
    if np.any(~np.isfinite(a)):
        return SeriesVerdict(DIVERGING, float("inf"), a, rule="non-finite term")
    a = np.abs(a)
    total = float(a.sum())
    tail = a[-(window + 1):]
    if np.all(tail <= zero_tol):
        return SeriesVerdict(CONVERGING, total, a, 0.0, rule="trailing terms vanish")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = tail[1:] / tail[:-1]
    ratios = np.where(tail[:-1] <= zero_tol, np.where(tail[1:] <= zero_tol, 0.0, np.inf), ratios)
    finite_r = ratios[np.isfinite(ratios)]
    geo = float(np.exp(np.mean(np.log(np.maximum(finite_r, 1e-300))))) if len(finite_r) else np.inf
    if np.all(ratios <= ratio_converge):
        return SeriesVerdict(CONVERGING, total, a, geo, rule="geometric decay")
    if np.all(ratios >= 1.0 - 1e-9):
        return SeriesVerdict(DIVERGING, total, a, geo, rule="non-decreasing terms")
    half = max(window, len(a) // 2)
    k = np.arange(len(a) - half + 1, len(a) + 1, dtype=float)
    seg = a[-half:]
    pos = seg > zero_tol
    if pos.sum() < 3:
        return SeriesVerdict(CONVERGING, total, a, geo, rule="terms underflow")
    p = -float(np.polyfit(np.log(k[pos]), np.log(seg[pos]), 1)[0])
    if p >= power_converge:
        return SeriesVerdict(CONVERGING, total, a, geo, p, rule="power-law decay, exponent above 1")
    if p <= power_diverge:
        return SeriesVerdict(DIVERGING, total, a, geo, p, rule="power-law decay, exponent at most 1")
    return SeriesVerdict(INDETERMINATE, total, a, geo, p, rule="exponent near the summability boundary")


@dataclass
class TrendVerdict:
    """Whether a positive sequence tends to zero, judged on its trailing part."""

    verdict: str
    values: np.ndarray = field(repr=False)
    log_slope: float = float("nan")
    power: float = float("nan")
    rule: str = ""


def classify_to_zero(values, *, window: int = 8, power_vanish: float = 0.2,
                     power_flat: float = 0.05, zero_tol: float = 1e-300) -> TrendVerdict:
    """Verdict on ``a_n -> 0`` for a sequence indexed by ``n = 1, 2, ...``.

    Geometric decay or a fitted power ``a_n ~ n^(-p)`` with ``p >= power_vanish``
    counts as vanishing; a trailing window that is not decreasing (fitted
    ``p <= power_flat``) counts as not vanishing.
    """
    a = np.abs(np.asarray(values, dtype=float))
    if len(a) < window + 1:
        raise ValueError(f"need at least {window + 1} values")
    tail = a[-window:]
    if np.all(tail <= zero_tol):
        return TrendVerdict(VANISHING, a, rule="trailing values vanish")
    if np.any(tail <= zero_tol):
        return TrendVerdict(INDETERMINATE, a, rule="mixed zero and non-zero values")
    n = np.arange(len(a) - window + 1, len(a) + 1, dtype=float)
    slope = float(np.polyfit(n, np.log(tail), 1)[0])
    p = -float(np.polyfit(np.log(n), np.log(tail), 1)[0])
    if slope <= np.log(0.95) or p >= power_vanish:
        return TrendVerdict(VANISHING, a, slope, p, rule="decaying")
    if p <= power_flat:
        return TrendVerdict(NOT_VANISHING, a, slope, p, rule="not decaying")
    return TrendVerdict(INDETERMINATE, a, slope, p, rule="slow decay")
