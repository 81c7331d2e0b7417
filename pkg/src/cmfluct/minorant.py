"""Greatest convex minorants of paths, stored as slope-sorted faces.

A minorant on ``[0, T]`` starting at the origin is determined by its faces,
each a pair ``(length, slope)``; laying the faces end to end in increasing
slope order reconstructs the function.  Faces come either from the lower hull
of a sampled grid path or straight from the stick-breaking representation.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .levy_model import LevyModel, sample_marginal

SLOPE_TIE_TOL = 1e-12


def lower_hull(times, values) -> np.ndarray:
    """Indices of the lower convex hull vertices (Andrew's monotone chain, O(n)).

    ``times`` must be strictly increasing.  Collinear interior points are
    dropped, so consecutive hull edges have strictly increasing slope.
    """
    t = np.asarray(times, dtype=float)
    x = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != x.shape or len(t) < 2:
        raise ValueError("need matching 1-d arrays with at least two points")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    tl = t.tolist()
    xl = x.tolist()
    hull = [0, 1]
    for i in range(2, len(tl)):
        ti, xi = tl[i], xl[i]
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            ta, xa, tb, xb = tl[a], xl[a], tl[b], xl[b]
            # drop b unless it lies strictly below the chord a -> i
            if (tb - ta) * (xi - xa) - (xb - xa) * (ti - ta) <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=np.int64)


def lower_hull_bruteforce(times, values) -> np.ndarray:
    """Gift-wrapping reference, O(n * vertices): from each vertex take the
    smallest outgoing slope, farthest point on ties."""
    t = np.asarray(times, dtype=float)
    x = np.asarray(values, dtype=float)
    n = len(t)
    out = [0]
    i = 0
    while i < n - 1:
        best_j = i + 1
        for j in range(i + 2, n):
            # compare slope(i, j) with slope(i, best_j) without division
            lhs = (x[j] - x[i]) * (t[best_j] - t[i])
            rhs = (x[best_j] - x[i]) * (t[j] - t[i])
            if lhs <= rhs:
                best_j = j
        out.append(best_j)
        i = best_j
    return np.asarray(out, dtype=np.int64)


@dataclass
class ConvexMinorant:
    """Piecewise linear convex function on ``[0, horizon]`` with ``C(0) = start_value``.

    ``lengths`` and ``slopes`` are sorted by increasing slope.  ``residual`` is
    the part of the horizon not covered by any face (zero for grid hulls).
    """

    horizon: float
    lengths: np.ndarray
    slopes: np.ndarray
    residual: float = 0.0
    start_value: float = 0.0

    def __post_init__(self):
        lengths = np.asarray(self.lengths, dtype=float)
        slopes = np.asarray(self.slopes, dtype=float)
        if lengths.shape != slopes.shape or lengths.ndim != 1:
            raise ValueError("lengths and slopes must be matching 1-d arrays")
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise ValueError("horizon must be finite and non-negative")
        if np.any(lengths < 0) or self.residual < 0:
            raise ValueError("face lengths and residual must be non-negative")
        if lengths.sum() + self.residual > self.horizon * (1 + 1e-9) + 1e-300:
            raise ValueError("faces and residual exceed the horizon")
        keep = lengths > 0
        lengths, slopes = lengths[keep], slopes[keep]
        order = np.argsort(slopes, kind="stable")
        lengths, slopes = lengths[order], slopes[order]
        self.lengths, self.slopes = _merge_ties(lengths, slopes)
        self._ends = np.cumsum(self.lengths)
        self._starts = self._ends - self.lengths
        self._vals = self.start_value + np.concatenate(([0.0], np.cumsum(self.lengths * self.slopes)))

    @property
    def n_faces(self) -> int:
        return len(self.lengths)

    @property
    def covered(self) -> float:
        return float(self._ends[-1]) if self.n_faces else 0.0

    @property
    def starts(self) -> np.ndarray:
        return self._starts

    @property
    def vertex_times(self) -> np.ndarray:
        return np.concatenate(([0.0], self._ends))

    @property
    def vertex_values(self) -> np.ndarray:
        return self._vals

    def value(self, t):
        """``C(t)`` by linear interpolation between vertices."""
        return np.interp(t, self.vertex_times, self._vals)

    def right_derivative(self, t):
        """Right derivative ``C'(t)``; ``+inf`` at or beyond the covered horizon."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self._ends, t, side="right")
        padded = np.append(self.slopes, np.inf)
        out = padded[np.minimum(idx, self.n_faces)]
        out = np.where(t < 0, np.nan, out)
        return out if out.ndim else float(out)

    def vertex_time(self, s):
        """``inf{t : C'(t) > s}``, capped at the covered horizon."""
        s = np.asarray(s, dtype=float)
        idx = np.searchsorted(self.slopes, s, side="right")
        ends = np.concatenate(([0.0], self._ends))
        out = ends[idx]
        return out if out.ndim else float(out)

    def faces(self) -> list[tuple[float, float, float]]:
        """``(start, length, slope)`` triples in slope order."""
        return [(float(a), float(b), float(c)) for a, b, c in zip(self._starts, self.lengths, self.slopes)]

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "residual": self.residual, "start_value": self.start_value,
                "faces": [{"start": a, "length": b, "slope": c} for a, b, c in self.faces()]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ConvexMinorant":
        faces = d["faces"]
        return cls(horizon=d["horizon"], lengths=np.array([f["length"] for f in faces], dtype=float),
                   slopes=np.array([f["slope"] for f in faces], dtype=float),
                   residual=d.get("residual", 0.0), start_value=d.get("start_value", 0.0))

    @classmethod
    def from_json(cls, text: str) -> "ConvexMinorant":
        return cls.from_dict(json.loads(text))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["start", "length", "slope"])
        for row in self.faces():
            w.writerow([format(v, ".17g") for v in row])
        return buf.getvalue()


def _merge_ties(lengths, slopes):
    """Fuse runs of equal slopes into one face; unmerged faces keep their slope bit for bit."""
    if len(slopes) < 2:
        return lengths, slopes
    out_l, out_s = [lengths[0]], [slopes[0]]
    height = lengths[0] * slopes[0]
    merged = False
    for ln, sl in zip(lengths[1:], slopes[1:]):
        last = out_s[-1]
        if abs(sl - last) <= SLOPE_TIE_TOL * max(1.0, abs(sl), abs(last)):
            out_l[-1] += ln
            height += ln * sl
            merged = True
        else:
            if merged:
                out_s[-1] = height / out_l[-1]
            out_l.append(ln)
            out_s.append(sl)
            height = ln * sl
            merged = False
    if merged:
        out_s[-1] = height / out_l[-1]
    return np.asarray(out_l), np.asarray(out_s)


def convex_minorant(times, values) -> ConvexMinorant:
    """Greatest convex minorant of the linearly interpolated path through the points."""
    t = np.asarray(times, dtype=float)
    x = np.asarray(values, dtype=float)
    h = lower_hull(t, x)
    lengths = np.diff(t[h])
    slopes = np.diff(x[h]) / lengths
    return ConvexMinorant(horizon=float(t[-1] - t[0]), lengths=lengths, slopes=slopes,
                          start_value=float(x[0]))


def sample_faces_stickbreaking(model: LevyModel, rng: np.random.Generator, *, horizon: float | None = None,
                               rate: float | None = None, n_faces: int = 60) -> ConvexMinorant:
    """Exact faces of the minorant of ``X`` on ``[0, T]`` by uniform stick-breaking.

    ``T`` is ``horizon`` when given, otherwise an ``Exp(rate)`` draw.  Breaking
    stops after ``n_faces`` sticks; the unbroken remainder is reported as
    ``residual``.
    """
    if (horizon is None) == (rate is None):
        raise ValueError("give exactly one of horizon and rate")
    total = float(horizon) if horizon is not None else rng.exponential(1.0 / rate)
    u = rng.uniform(size=n_faces)
    remain = total * np.concatenate(([1.0], np.cumprod(1.0 - u)))
    lengths = remain[:-1] * u
    heights = sample_marginal(model, lengths, n_faces, rng)
    with np.errstate(divide="ignore", invalid="ignore"):
        slopes = heights / lengths
    return ConvexMinorant(horizon=total, lengths=lengths, slopes=slopes, residual=float(remain[-1]))


def post_minimum(times, values, slope: float = 0.0):
    """Path after the last time the tilted path ``X_t - slope * t`` attains its minimum.

    Returns ``(tau, minimum, shifted_times, shifted_values)`` where the shifted
    path is ``X_{tau+u} - X_tau - slope * u``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float) - slope * t
    k = len(y) - 1 - int(np.argmin(y[::-1]))
    return float(t[k]), float(y[k]), t[k:] - t[k], y[k:] - y[k]


def minorant_of_tilted(cm: ConvexMinorant, slope: float) -> ConvexMinorant:
    """Minorant of ``X_t - slope * t`` (faces keep their lengths and order)."""
    return ConvexMinorant(cm.horizon, cm.lengths, cm.slopes - slope, cm.residual, cm.start_value)


def is_convex_minorant_of(cm: ConvexMinorant, times, values, tol: float = 1e-9) -> bool:
    """Check ``C <= X`` at the grid and that vertices touch the path."""
    t = np.asarray(times, dtype=float)
    x = np.asarray(values, dtype=float)
    c = cm.value(t - t[0])
    scale = max(1.0, float(np.max(np.abs(x))))
    if np.any(c > x + tol * scale):
        return False
    vt = cm.vertex_times + t[0]
    xv = np.interp(vt, t, x)
    return bool(np.all(np.abs(xv - cm.vertex_values) <= tol * scale)) and math.isclose(
        cm.covered, t[-1] - t[0], rel_tol=1e-12)
