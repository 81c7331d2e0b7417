"""Monte Carlo shadows of the small-time fluctuations of the minorant's slope.

For each simulated path the ratio

* ``IS``: ``|C'_t| f(t)`` (time measured from zero), or
* ``FS``: ``(C'_{tau_s + t} - s) / f(t)`` (time measured from the vertex ``tau_s``)

is summarised on dyadic blocks ``(2^-(k+1), 2^-k]`` for ``k = k_min..k_max``.
``C'`` is piecewise constant, so on every face the ratio is monotone in ``t``
and block extrema are exact: only face ends and block ends need evaluating.

Three per-level summaries are kept:

``block``       extremum over the block itself;
``running``     extremum over ``(2^-(k_max+1), 2^-k]``, monotone in ``k``;
``cumulative``  extremum over ``(2^-(k+1), 2^-k_min]``, anchored at the coarse end.

:func:`regime_classify` reads a vanishing trend off the block medians and a
growing trend off the cumulative medians.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .levy_criteria import TestFunction
from .levy_model import (Cauchy, LevyModel, Stable, canonical, has_infinite_variation,
                         sample_path)
from .minorant import ConvexMinorant, convex_minorant, post_minimum, sample_faces_stickbreaking
from .vertex_law import cauchy_exact_minorant

SAMPLERS = ("grid-hull", "stick-breaking", "cauchy-exact")
TREND_ZERO = "trend_zero"
TREND_INFINITY = "trend_infinity"
INDETERMINATE = "indeterminate"


# -- slope registry --------------------------------------------------------------


def fs_slope_registered(model: LevyModel, s: float) -> bool:
    """Whether ``s`` is a known right-accumulation slope of the face slopes.

    Cauchy processes: every ``s``.  Stable with ``alpha < 1``: the drift only.
    """
    m = canonical(model)
    if isinstance(m, Cauchy):
        return True
    if isinstance(m, Stable) and m.alpha < 1:
        return math.isclose(s, m.drift, rel_tol=0, abs_tol=1e-12)
    return False


def _check_regime(model, regime, s, allow_unregistered):
    if regime == "IS":
        if not has_infinite_variation(model):
            raise ValueError("the IS regime needs a process of infinite variation")
    elif regime == "FS":
        if s is None:
            raise ValueError("the FS regime needs a slope s")
        if not (allow_unregistered or fs_slope_registered(model, s)):
            raise ValueError(f"slope {s} is not registered as a right-accumulation slope for this "
                             "model (stable alpha < 1: the drift only; Cauchy: any slope); "
                             "pass allow_unregistered=True to override")
    else:
        raise ValueError("regime must be 'IS' or 'FS'")


# -- statistics --------------------------------------------------------------------


def _accumulate(block, kind, reverse):
    op = np.fmax if kind == "sup" else np.fmin
    b = block[:, ::-1] if reverse else block
    with np.errstate(invalid="ignore"):
        out = op.accumulate(b, axis=1)
    return out[:, ::-1] if reverse else out


@dataclass
class FluctuationStatistic:
    """Per-path dyadic summaries; rows are paths, columns are levels ``k``."""

    regime: str
    kind: str
    levels: np.ndarray
    block: np.ndarray = field(repr=False)
    running: np.ndarray = field(default=None, repr=False)
    cumulative: np.ndarray = field(default=None, repr=False)
    slope: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("sup", "inf"):
            raise ValueError("kind must be 'sup' or 'inf'")
        self.levels = np.asarray(self.levels, dtype=int)
        self.block = np.atleast_2d(np.asarray(self.block, dtype=float))
        if self.block.shape[1] != len(self.levels):
            raise ValueError("block must have one column per level")
        if np.any(np.diff(self.levels) != 1):
            raise ValueError("levels must be consecutive and increasing")
        if self.running is None:
            # levels increase to the right, i.e. finer blocks: accumulate from the fine end
            self.running = _accumulate(self.block, self.kind, reverse=True)
        if self.cumulative is None:
            self.cumulative = _accumulate(self.block, self.kind, reverse=False)

    @property
    def n_paths(self) -> int:
        return self.block.shape[0]

    def quantiles(self, which: str = "block", qs=(0.25, 0.5, 0.75)) -> np.ndarray:
        data = getattr(self, which)
        out = np.full((len(qs), data.shape[1]), np.nan)
        for j in range(data.shape[1]):
            col = data[:, j]
            col = col[~np.isnan(col)]
            if len(col):
                out[:, j] = np.quantile(col, qs)
        return out

    def median(self, which: str = "block") -> np.ndarray:
        return self.quantiles(which, (0.5,))[0]

    def to_dict(self) -> dict:
        def rows(a):
            return [[None if np.isnan(v) else float(v) for v in r] for r in a]
        return {"regime": self.regime, "kind": self.kind, "slope": self.slope, "levels": self.levels.tolist(),
                "block": rows(self.block), "running": rows(self.running), "cumulative": rows(self.cumulative),
                "meta": dict(self.meta)}

    def to_csv(self) -> str:
        """Rows ``statistic, level, quantile, value`` with 17 significant digits."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["statistic", "level", "quantile", "value"])
        qs = (0.25, 0.5, 0.75)
        for which in ("block", "running", "cumulative"):
            q = self.quantiles(which, qs)
            for j, k in enumerate(self.levels):
                for i, qv in enumerate(qs):
                    w.writerow([which, int(k), qv, format(q[i, j], ".17g")])
        return buf.getvalue()


def _face_times(cm: ConvexMinorant, regime: str, s):
    """Face starts, ends and slopes on the clock of the statistic."""
    starts, ends, slopes = cm.starts, cm.starts + cm.lengths, cm.slopes
    if regime == "FS":
        after = slopes > s
        tau = float(np.sum(cm.lengths[~after]))
        starts, ends, slopes = starts[after] - tau, ends[after] - tau, slopes[after]
    return starts, ends, slopes


def _ratio(regime, slope, f_t, s):
    if regime == "IS":
        return np.abs(slope) * f_t
    return (slope - s) / f_t


def block_extrema(cm: ConvexMinorant, f: TestFunction, regime: str, levels, kind: str, s: float = 0.0):
    """Exact block extrema of the ratio for one minorant.

    Blocks reaching past the end of the faces give ``nan``.
    """
    levels = np.asarray(levels)
    edges = 2.0 ** -(np.arange(levels[-1] + 1, levels[0] - 1, -1).astype(float))  # ascending
    starts, ends, slopes = _face_times(cm, regime, s)
    if len(slopes) == 0:  # the vertex is the right end of the horizon: nothing is observed
        return np.full(len(levels), np.nan)
    end_all = float(ends[-1])
    inner = ends[(ends > edges[0]) & (ends < edges[-1])]
    pts = np.unique(np.concatenate((edges, inner)))
    x0, x1 = pts[:-1], pts[1:]
    mid = 0.5 * (x0 + x1)
    idx = np.searchsorted(ends, mid, side="right")
    valid = (idx < len(ends)) & (mid <= end_all)
    sl = np.where(valid, slopes[np.minimum(idx, len(slopes) - 1)], np.nan)
    r0 = _ratio(regime, sl, np.asarray(f(x0)), s)
    r1 = _ratio(regime, sl, np.asarray(f(x1)), s)
    seg = np.maximum(r0, r1) if kind == "sup" else np.minimum(r0, r1)
    seg = np.where(valid, seg, np.nan)
    block_id = np.searchsorted(edges, mid) - 1
    starts_idx = np.searchsorted(block_id, np.arange(len(edges) - 1))
    red = np.maximum.reduceat(seg, starts_idx) if kind == "sup" else np.minimum.reduceat(seg, starts_idx)
    return red[::-1]  # column j <-> levels[j], coarse to fine


def _draw_minorant(model, sampler, rng, *, grid_size, horizon, n_faces, lam):
    if sampler == "grid-hull":
        T = horizon if horizon is not None else rng.exponential(1.0 / lam)
        times, values = sample_path(model, T, grid_size, rng)
        return convex_minorant(times, values)
    if sampler == "stick-breaking":
        if horizon is not None:
            return sample_faces_stickbreaking(model, rng, horizon=horizon, n_faces=n_faces)
        return sample_faces_stickbreaking(model, rng, rate=lam, n_faces=n_faces)
    m = canonical(model)
    if not isinstance(m, Cauchy):
        raise ValueError("the cauchy-exact sampler needs a Cauchy model")
    return cauchy_exact_minorant(m, rng, lam=lam)


def estimate_fluctuation(model: LevyModel, regime: str, f: TestFunction, sampler: str, k_max: int,
                         n_paths: int, rng: np.random.Generator, *, s: float | None = None,
                         kind: str | None = None, k_min: int = 4, grid_size: int = 2 ** 16,
                         horizon: float | None = 1.0, n_faces: int = 80, lam: float = 1.0,
                         minorant_source=None, allow_unregistered: bool = False) -> FluctuationStatistic:
    """Simulate ``n_paths`` minorants and summarise the ratio on dyadic blocks.

    ``kind`` defaults to ``"sup"`` for ``IS`` (upper functions) and ``"inf"``
    for ``FS`` (lower functions).  ``horizon=None`` draws an ``Exp(lam)``
    horizon; the ``cauchy-exact`` sampler always does.  ``minorant_source``,
    if given, replaces the sampler: it is called with ``rng`` and must return a
    :class:`ConvexMinorant`.
    """
    _check_regime(model, regime, s, allow_unregistered)
    if sampler not in SAMPLERS:
        raise ValueError(f"sampler must be one of {SAMPLERS}")
    if not 1 <= k_min < k_max:
        raise ValueError("need 1 <= k_min < k_max")
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    kind = kind or ("sup" if regime == "IS" else "inf")
    s = 0.0 if s is None else float(s)
    levels = np.arange(k_min, k_max + 1)
    out = np.empty((n_paths, len(levels)))
    for i in range(n_paths):
        if minorant_source is not None:
            cm = minorant_source(rng)
        else:
            cm = _draw_minorant(model, sampler, rng, grid_size=grid_size, horizon=horizon,
                                n_faces=n_faces, lam=lam)
        out[i] = block_extrema(cm, f, regime, levels, kind, s)
    if sampler == "grid-hull" and minorant_source is None and horizon is not None:
        cell = horizon / grid_size
        out[:, 2.0 ** -(levels + 1) < cell] = np.nan  # below the grid
    meta = {"sampler": sampler, "k_min": k_min, "k_max": k_max, "n_paths": n_paths,
            "test_function": f.to_dict()}
    return FluctuationStatistic(regime, kind, levels, out, slope=s if regime == "FS" else None, meta=meta)


# -- classification ----------------------------------------------------------------


@dataclass
class Classification:
    verdict: str
    confidence: float
    block_slope: float
    cumulative_slope: float
    theta: float
    n_boot: int


def _log_slope(levels, med):
    ok = np.isfinite(med) & (med > 0)
    if ok.sum() < 4:
        return float("nan")
    return float(np.polyfit(levels[ok], np.log(med[ok]), 1)[0])


def _nanmedian_cols(a):
    out = np.full(a.shape[1], np.nan)
    for j in range(a.shape[1]):
        col = a[:, j]
        col = col[~np.isnan(col)]
        if len(col):
            out[j] = np.median(col)
    return out


def _verdict(levels, block, cumulative, kind, theta):
    b = _log_slope(levels, _nanmedian_cols(block))
    c = _log_slope(levels, _nanmedian_cols(cumulative))
    if kind == "sup":
        if b < -theta:
            return TREND_ZERO, b, c
        if c > theta:
            return TREND_INFINITY, b, c
    else:
        if b > theta:
            return TREND_INFINITY, b, c
        if c < -theta:
            return TREND_ZERO, b, c
    return INDETERMINATE, b, c


def regime_classify(stat: FluctuationStatistic, theta: float = 0.05, n_boot: int = 200,
                    rng: np.random.Generator | None = None) -> Classification:
    """Three-way trend verdict with a path-bootstrap confidence.

    For upper (``sup``) statistics, block medians falling faster than
    ``e^{-theta}`` per level give ``trend_zero``; otherwise cumulative medians
    rising faster than ``e^{theta}`` per level give ``trend_infinity``.  Lower
    (``inf``) statistics use the mirror rule.  The confidence is the fraction of
    bootstrap resamples of the paths that reproduce the verdict.
    """
    if len(stat.levels) < 4:
        raise ValueError("need at least four dyadic levels")
    rng = np.random.default_rng(0) if rng is None else rng
    verdict, b, c = _verdict(stat.levels, stat.block, stat.cumulative, stat.kind, theta)
    agree = 0
    for _ in range(n_boot):
        pick = rng.integers(0, stat.n_paths, stat.n_paths)
        v, _, _ = _verdict(stat.levels, stat.block[pick], stat.cumulative[pick], stat.kind, theta)
        agree += v == verdict
    conf = agree / n_boot if n_boot else float("nan")
    return Classification(verdict, conf, b, c, theta, n_boot)


# -- path-level corollaries ---------------------------------------------------------------


def _require_small_alpha(model):
    m = canonical(model)
    if not (isinstance(m, Stable) and m.alpha < 1):
        raise ValueError("meander growth is defined for stable processes with alpha < 1")
    return m


def meander_growth(model: LevyModel, k_max: int, n_paths: int, rng: np.random.Generator, *,
                   p: float | None = None, q: float | None = None, k_min: int = 4,
                   grid_size: int = 2 ** 16, path_source=None) -> FluctuationStatistic:
    """Lower statistic of ``(X_{tau_s + t} - m_s - s t) / F(t)`` at ``s`` = drift.

    ``F`` is ``int_0^t 1/G(u log^p(1/u)) du`` when ``p`` is given, or ``t^q``.
    ``path_source(rng)``, if given, returns ``(times, values)`` on ``[0, 1]``.
    """
    m = _require_small_alpha(model)
    if (p is None) == (q is None):
        raise ValueError("give exactly one of p and q")
    s = m.drift
    if p is not None:
        f = TestFunction("ginverse_log", alpha=m.alpha, scale=m.scale, p=p)
        grid_t = np.logspace(-20, 0, 401)
        table = np.array([f.integral(t) for t in grid_t])

        def tilde(t):
            return np.exp(np.interp(np.log(t), np.log(grid_t), np.log(table)))
        label = {"p": p}
    else:
        def tilde(t):
            return np.asarray(t, dtype=float) ** q
        label = {"q": q}
    levels = np.arange(k_min, k_max + 1)
    edges = 2.0 ** -(np.arange(k_max + 1, k_min - 1, -1).astype(float))
    out = np.full((n_paths, len(levels)), np.nan)
    for i in range(n_paths):
        times, values = path_source(rng) if path_source is not None else sample_path(m, 1.0, grid_size, rng)
        _, _, u, y = post_minimum(times, values, s)
        reach = u[-1]
        keep = (u > edges[0]) & (u <= edges[-1])
        u, y = u[keep], y[keep]
        ratio = y / tilde(u)
        b = np.searchsorted(edges, u, side="left") - 1
        for j in range(len(edges) - 1):
            sel = b == j
            # blocks the shifted path does not fully cover stay nan
            if sel.any() and edges[j + 1] <= reach + 1e-15:
                out[i, len(levels) - 1 - j] = ratio[sel].min()
    meta = {"statistic": "meander", "k_min": k_min, "k_max": k_max, "n_paths": n_paths, **label}
    return FluctuationStatistic("FS", "inf", levels, out, slope=s, meta=meta)


@dataclass
class LemmaCheck:
    checks: int
    violations: int
    worst_margin: float


def pathwise_lemma_check(model: LevyModel, f: TestFunction, n_paths: int, rng: np.random.Generator, *,
                         regime: str = "FS", s: float = 0.0, grid_size: int = 2 ** 14, k_min: int = 2,
                         k_max: int = 12, slack_cells: int = 0, rtol: float = 1e-9,
                         path_source=None) -> LemmaCheck:
    """Finite-window shadow of the slope-to-path transfer inequalities.

    ``FS``: with ``M = inf_{(0, w]} (C'_{tau_s+u} - s)/f(u)`` on the window
    ``(0, w]``, every grid point satisfies ``(X_{tau_s+u} - m_s - s u) >= M int_0^u f``.
    ``IS``: with ``M = sup_{(0, w]} |C'_u| f(u)``, every grid point satisfies
    ``-X_u <= M int_0^u 1/f``.  Grid points within ``slack_cells`` of the
    window origin are skipped.  Returns the number of (path, window) checks and
    of violations beyond relative tolerance ``rtol``.
    """
    if regime not in ("FS", "IS"):
        raise ValueError("regime must be 'FS' or 'IS'")
    grid_t = np.logspace(-24, 0, 481)
    prim = f.integral if regime == "FS" else f.reciprocal_integral
    table = np.array([prim(t) for t in grid_t])

    def tilde(t):
        return np.exp(np.interp(np.log(t), np.log(grid_t), np.log(table)))

    checks = violations = 0
    worst = math.inf
    for _ in range(n_paths):
        times, values = path_source(rng) if path_source is not None else sample_path(model, 1.0, grid_size, rng)
        times, values = np.asarray(times, dtype=float), np.asarray(values, dtype=float)
        cm = convex_minorant(times, values)
        starts, ends, slopes = _face_times(cm, regime, s)
        if regime == "FS":
            # the hull vertex at slope s is a grid point where the path touches its minorant
            tau_h = float(np.sum(cm.lengths[cm.slopes <= s]))
            k0 = int(np.argmin(np.abs(times - tau_h)))
            u = times[k0:] - times[k0]
            y = values[k0:] - values[k0] - s * u
        else:
            u, y = times - times[0], -(values - values[0])
        dt = times[1] - times[0]
        for k in range(k_min, k_max + 1):
            w = 2.0 ** -k
            if len(ends) == 0 or ends[-1] < w - 1e-15 or u[-1] < w:
                continue
            inside = (ends > 0) & (starts < w)
            right = np.minimum(ends[inside], w)
            fr = np.asarray(f(right))
            if regime == "FS":
                M = float(np.min((slopes[inside] - s) / fr))
            else:
                M = float(np.max(np.abs(slopes[inside]) * fr))
            sel = (u > slack_cells * dt) & (u <= w) & (u > 0)
            if not sel.any():
                continue
            ratio = y[sel] / tilde(u[sel])
            checks += 1
            if regime == "FS":
                if M <= 0:
                    continue
                margin = float(np.min(ratio) / M - 1)
                bad = margin < -rtol
            else:
                margin = float(1 - np.max(ratio) / M) if M > 0 else math.inf
                bad = margin < -rtol
            worst = min(worst, margin)
            violations += bool(bad)
    return LemmaCheck(checks, violations, worst)
