"""Laplace exponents of vertex-time processes, their jump measures and samplers.

For a Lévy process ``X`` run up to an independent ``Exp(lam)`` horizon, the
vertex time ``tau_u`` (first time the minorant's slope exceeds ``u``) is a
pure-jump process in ``u`` whose Laplace exponent is

    Phi_u(w) = int_0^inf (1 - e^{-w t}) e^{-lam t} P(X_t <= u t) dt / t.

The integral is evaluated over dyadic shells in ``t``.  The same machinery
gives the exponent of the post-slope process ``u -> tau_{s+u} - tau_s``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._numerics import gk_integrate
from .levy_model import Cauchy, LevyModel, canonical, marginal_cdf, sample_marginal
from .minorant import ConvexMinorant

MAX_EXTRA_LEVELS = 60


class DivergenceSuspected(RuntimeError):
    """Shell contributions failed to decay within the level budget."""


@dataclass
class ShellIntegral:
    value: float
    error: float
    shells: np.ndarray = field(repr=False)
    lower_edge: float = 0.0
    upper_edge: float = math.inf


def killed_shell_integral(prob, w: float, lam: float, *, rel_tol: float = 1e-10,
                          abs_tol: float = 1e-13) -> ShellIntegral:
    """``int_0^inf (1 - e^{-w t}) e^{-lam t} prob(t) dt / t`` for ``0 <= prob <= 1``.

    ``prob`` must accept an array of times.  Shells ``[2^j, 2^(j+1)]`` are
    integrated in ``log t`` from the top down.  Above ``t_max`` the remainder is
    bounded by ``E1(lam * t_max)``; below the last shell by ``w * t_min``.
    """
    if not w >= 0 or not lam > 0:
        raise ValueError("need w >= 0 and lam > 0")
    if w == 0:
        return ShellIntegral(0.0, 0.0, np.zeros(0))
    # top edge: exponential tail below abs_tol / 10
    j_top = 0
    while special.exp1(lam * 2.0 ** j_top) > abs_tol / 10:
        j_top += 1
    top_err = float(special.exp1(lam * 2.0 ** j_top))

    def integrand(y):
        t = np.exp(y)
        return -np.expm1(-w * t) * np.exp(-lam * t) * prob(t)

    shells = []
    total = 0.0
    err = top_err
    j = j_top - 1
    j_floor = -int(math.ceil(math.log2(max(w, 1.0) / abs_tol))) - MAX_EXTRA_LEVELS
    ln2 = math.log(2.0)
    while True:
        v, e = gk_integrate(integrand, j * ln2, (j + 1) * ln2, abs_tol=abs_tol * 1e-2, rel_tol=rel_tol)
        shells.append(v)
        total += v
        err += e
        below = w * 2.0 ** j  # bound on everything under this shell
        if j < 0 and below <= max(abs_tol, rel_tol * total):
            err += below
            break
        if j <= j_floor or not math.isfinite(v):
            raise DivergenceSuspected("shell contributions did not decay geometrically")
        j -= 1
    return ShellIntegral(total, err, np.asarray(shells[::-1]), 2.0 ** j, 2.0 ** j_top)


def phi(model: LevyModel, u: float, w: float, lam: float = 1.0, **tol) -> ShellIntegral:
    """Laplace exponent ``Phi_u(w)`` of the vertex time ``tau_u`` by quadrature."""
    if u == math.inf:
        v = math.log1p(w / lam)
        return ShellIntegral(v, 0.0, np.zeros(0))
    if u == -math.inf:
        return ShellIntegral(0.0, 0.0, np.zeros(0))
    return killed_shell_integral(lambda t: marginal_cdf(model, t, u * t), w, lam, **tol)


def phi_infinity(w: float, lam: float = 1.0) -> float:
    """``Phi_inf(w) = log(1 + w / lam)`` (Frullani)."""
    return math.log1p(w / lam)


def phi_cauchy(model: Cauchy, u: float, w: float, lam: float = 1.0) -> float:
    """Closed form for Cauchy: the slope law does not depend on ``t``."""
    m = canonical(model)
    if not isinstance(m, Cauchy):
        raise ValueError("closed form only for the Cauchy process")
    return float(marginal_cdf(m, 1.0, u)) * phi_infinity(w, lam)


def psi_fs(model: LevyModel, s: float, u: float, w: float, lam: float = 1.0, **tol) -> ShellIntegral:
    """Exponent of ``tau_{s+u} - tau_s``: slopes in ``(s, s+u]`` only."""
    if u < 0:
        raise ValueError("u must be non-negative")

    def prob(t):
        hi = marginal_cdf(model, t, (s + u) * t)
        lo = marginal_cdf(model, t, s * t)
        return np.clip(hi - lo, 0.0, 1.0)

    return killed_shell_integral(prob, w, lam, **tol)


def phi_is(model: LevyModel, v: float, w: float, lam: float = 1.0, **tol) -> ShellIntegral:
    """Exponent of ``v -> tau_{-1/v}``."""
    if v <= 0:
        return ShellIntegral(0.0, 0.0, np.zeros(0))
    return phi(model, -1.0 / v, w, lam, **tol)


# -- sampling -------------------------------------------------------------------


def gamma_jump_sizes(n: int, lam: float, floor: float, rng: np.random.Generator) -> np.ndarray:
    """Draws from the density proportional to ``e^{-lam x} / x`` on ``[floor, inf)``."""
    y0 = lam * floor
    c = max(y0, 1.0)
    # envelopes: 1/y on [y0, 1] and e^{-y}/c on [c, inf), picked by envelope mass
    w_small = -math.log(y0) if y0 < 1 else 0.0
    w_big = math.exp(-c) / c
    out = np.empty(n)
    todo = np.arange(n)
    while len(todo):
        k = len(todo)
        small = rng.uniform(size=k) < w_small / (w_small + w_big)
        y = np.where(small, y0 ** (1 - rng.uniform(size=k)), c + rng.standard_exponential(k))
        accept_p = np.where(small, np.exp(-y), c / y)
        ok = rng.uniform(size=k) < accept_p
        out[todo[ok]] = y[ok] / lam
        todo = todo[~ok]
    return out


def sample_vertex_prm(model: LevyModel, u_values, n_samples: int, rng: np.random.Generator, *,
                      lam: float = 1.0, size_floor: float = 1e-10) -> np.ndarray:
    """Vertex times ``tau_u`` simulated from their Poisson random measure.

    Atoms ``(t, X_t / t)`` arrive with intensity ``e^{-lam t} t^{-1} dt`` times
    the slope law; ``tau_u`` sums the ``t`` of atoms with slope ``<= u``.  Atoms
    with ``t < size_floor`` are dropped, biasing ``tau_u`` down by at most
    ``size_floor`` in mean.  Returns an array ``(n_samples, len(u_values))``.
    """
    u = np.atleast_1d(np.asarray(u_values, dtype=float))
    counts = rng.poisson(special.exp1(lam * size_floor), n_samples)
    owner = np.repeat(np.arange(n_samples), counts)
    sizes = gamma_jump_sizes(len(owner), lam, size_floor, rng)
    slopes = sample_marginal(model, sizes, len(sizes), rng) / sizes
    out = np.empty((n_samples, len(u)))
    for j, uj in enumerate(u):
        out[:, j] = np.bincount(owner, weights=sizes * (slopes <= uj), minlength=n_samples)
    return out


def sample_vertex_cauchy(model: Cauchy, u_grid, n_samples: int, rng: np.random.Generator, *,
                         lam: float = 1.0) -> np.ndarray:
    """Exact ``tau_u`` on an increasing grid for the Cauchy process.

    ``tau_u`` is a gamma subordinator (exponent ``log(1 + w/lam)`` per unit
    time) evaluated at the clock ``P(X_1 <= u)``, so grid increments are
    independent gamma variables.
    """
    m = canonical(model)
    if not isinstance(m, Cauchy):
        raise ValueError("exact vertex sampler needs a Cauchy process")
    u = np.asarray(u_grid, dtype=float)
    if np.any(np.diff(u) < 0):
        raise ValueError("u_grid must be non-decreasing")
    clock = np.concatenate(([0.0], marginal_cdf(m, 1.0, u)))
    shapes = np.diff(clock)
    inc = np.zeros((n_samples, len(u)))
    pos = shapes > 0
    inc[:, pos] = rng.gamma(shapes[pos], 1.0 / lam, size=(n_samples, int(pos.sum())))
    return np.cumsum(inc, axis=1)


def cauchy_exact_minorant(model: Cauchy, rng: np.random.Generator, *, lam: float = 1.0,
                          size_floor: float = 1e-15) -> ConvexMinorant:
    """Faces of the minorant of a Cauchy process over an ``Exp(lam)`` horizon.

    Face lengths are the jumps of the gamma subordinator on clock ``[0, 1]``;
    a jump at clock time ``c`` is a face with slope ``F^{-1}(c)`` where ``F`` is
    the law of ``X_1``.  Faces shorter than ``size_floor`` are omitted and
    their expected total length is reported as ``residual``.
    """
    m = canonical(model)
    if not isinstance(m, Cauchy):
        raise ValueError("exact minorant sampler needs a Cauchy process")
    n = rng.poisson(special.exp1(lam * size_floor))
    lengths = gamma_jump_sizes(n, lam, size_floor, rng)
    clock = rng.uniform(size=n)
    slopes = m.loc + m.scale * np.tan(np.pi * (clock - 0.5))
    missing = -math.expm1(-lam * size_floor) / lam
    return ConvexMinorant(horizon=float(lengths.sum()) + missing, lengths=lengths, slopes=slopes, residual=missing)


# -- mean jump measures -------------------------------------------------------------


@dataclass(frozen=True)
class MeanJumpMeasure:
    """Jump measure of the post-slope (``"FS"``) or reciprocal-slope (``"IS"``) process.

    Atoms are ``(index, size)`` pairs.  In the ``FS`` regime the index of a
    face of length ``t`` is ``(X_t - slope * t) / t`` restricted to positive
    values; in the ``IS`` regime it is ``-t / X_t`` restricted to ``X_t < 0``.
    Sizes carry the intensity ``e^{-lam t} t^{-1} dt``.
    """

    model: LevyModel
    regime: str = "FS"
    slope: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        if self.regime not in ("FS", "IS"):
            raise ValueError("regime must be 'FS' or 'IS'")
        if not self.lam > 0:
            raise ValueError("lam must be positive")

    def size_weight(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-self.lam * t) / t

    def index_cdf(self, t, v):
        """``P(0 < index <= v)`` for a face of length ``t`` (vectorised)."""
        t, v = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(v, dtype=float))
        v = np.maximum(v, 0.0)
        if self.regime == "FS":
            lo = marginal_cdf(self.model, t, self.slope * t)
            with np.errstate(invalid="ignore"):
                hi = np.where(np.isinf(v), 1.0, marginal_cdf(self.model, t, (self.slope + np.minimum(v, 1e300)) * t))
            return np.clip(hi - lo, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            x = np.where(v > 0, -t / np.where(v > 0, v, 1.0), -np.inf)
        out = np.where(v > 0, marginal_cdf(self.model, t, np.maximum(x, -1e300)), 0.0)
        return np.clip(out, 0.0, 1.0)

    def rectangle_mass(self, index_lo: float, index_hi: float, t_lo: float, t_hi: float) -> float:
        """``Pi((index_lo, index_hi] x [t_lo, t_hi])`` by quadrature in ``log t``."""
        if not (0 < t_lo <= t_hi and index_lo <= index_hi):
            raise ValueError("need 0 < t_lo <= t_hi and index_lo <= index_hi")

        def integrand(y):
            t = np.exp(y)
            return np.exp(-self.lam * t) * (self.index_cdf(t, index_hi) - self.index_cdf(t, index_lo))

        return gk_integrate(integrand, math.log(t_lo), math.log(t_hi), abs_tol=1e-14)[0]

    def missed_size(self, index_range, size_floor: float) -> float:
        """Mean total size of atoms below ``size_floor`` with index in ``index_range``."""
        lo, hi = index_range

        def integrand(t):
            t = np.maximum(t, 1e-300)
            return np.exp(-self.lam * t) * (self.index_cdf(t, hi) - self.index_cdf(t, lo))

        return gk_integrate(integrand, 0.0, size_floor, abs_tol=1e-16)[0]

    def laplace_exponent(self, v: float, w: float, **tol) -> float:
        """``-log E exp(-w Y_v)`` where ``Y_v`` sums sizes with index ``<= v``."""
        return killed_shell_integral(lambda t: self.index_cdf(t, v), w, self.lam, **tol).value

    def sample_points(self, rng: np.random.Generator, *, size_floor: float = 1e-12, n_samples: int = 1):
        """Atoms of ``n_samples`` independent copies: ``(owner, index, size)``.

        Sizes are drawn exactly from ``e^{-lam t} t^{-1} dt`` on ``[size_floor, inf)``
        and the index from the marginal law of ``X_t``, so no spatial
        discretisation is involved.
        """
        counts = rng.poisson(special.exp1(self.lam * size_floor), n_samples)
        owner = np.repeat(np.arange(n_samples), counts)
        sizes = gamma_jump_sizes(len(owner), self.lam, size_floor, rng)
        x = sample_marginal(self.model, sizes, len(sizes), rng)
        if self.regime == "FS":
            index = (x - self.slope * sizes) / sizes
            keep = index > 0
        else:
            keep = x < 0
            index = np.where(keep, -sizes / np.where(keep, x, -1.0), np.inf)
        return owner[keep], index[keep], sizes[keep]


@dataclass
class AdditiveSample:
    """Jumps of ``n_paths`` independent non-decreasing additive processes ``Y``.

    ``owner[i]`` is the path of jump ``i``.  Jumps are sorted by path, then index.
    """

    n_paths: int
    owner: np.ndarray
    index: np.ndarray
    size: np.ndarray
    missed_size: float = 0.0

    def values(self, at) -> np.ndarray:
        """``Y_at`` for every path, shape ``(n_paths, len(at))``."""
        at = np.atleast_1d(np.asarray(at, dtype=float))
        out = np.empty((self.n_paths, len(at)))
        for j, a in enumerate(at):
            out[:, j] = np.bincount(self.owner, weights=self.size * (self.index <= a), minlength=self.n_paths)
        return out

    def path(self, k: int):
        """Jump indices and cumulative values of path ``k``."""
        sel = self.owner == k
        return self.index[sel], np.cumsum(self.size[sel])


def sample_additive(measure, index_range, rng: np.random.Generator, *, size_floor: float = 1e-10,
                    n_paths: int = 1) -> AdditiveSample:
    """Poisson random measure with mean ``measure`` restricted to ``index_range``.

    ``measure`` must provide ``sample_points(rng, size_floor=, n_samples=)`` and
    ``missed_size(index_range, size_floor)``.  An empty range yields ``Y = 0``.
    """
    lo, hi = index_range
    if not size_floor > 0:
        raise ValueError("size_floor must be positive: the jump measure has infinite mass near zero")
    if hi <= lo:
        e = np.zeros(0)
        return AdditiveSample(n_paths, e.astype(np.int64), e, e, 0.0)
    owner, index, size = measure.sample_points(rng, size_floor=size_floor, n_samples=n_paths)
    keep = (index > lo) & (index <= hi)
    owner, index, size = owner[keep], index[keep], size[keep]
    order = np.lexsort((index, owner))
    return AdditiveSample(n_paths, owner[order], index[order], size[order],
                          float(measure.missed_size((lo, hi), size_floor)))


# -- diagnostics ----------------------------------------------------------------------


@dataclass
class LaplaceMatch:
    z: float
    estimate: float
    target: float
    stderr: float


def laplace_match(samples, w: float, target: float) -> LaplaceMatch:
    """Delta-method z-score of ``-log mean(e^{-w Y})`` against a target exponent."""
    y = np.asarray(samples, dtype=float)
    if y.size == 0:
        raise ValueError("samples must be non-empty")
    e = np.exp(-w * y)
    m = e.mean()
    est = -math.log(m)
    if len(e) < 2 or np.all(e == e[0]):
        # degenerate sample: no spread, so only agreement up to rounding counts
        agree = abs(est - target) <= 1e-12 * max(1.0, abs(target))
        return LaplaceMatch(0.0 if agree else math.copysign(math.inf, est - target), est, target, 0.0)
    se = e.std(ddof=1) / math.sqrt(len(e)) / m
    return LaplaceMatch((est - target) / se, est, target, se)


def normaliser_inverse(model: LevyModel, y):
    """``G^{-1}(y)`` for ``G(t) = t / g(t)`` with ``g(t) = scale * t^(1/alpha)``."""
    m = canonical(model)
    a = getattr(m, "alpha", None)
    if a is None or a == 1:
        raise ValueError("needs a stable model with alpha != 1")
    return (m.scale * np.asarray(y, dtype=float)) ** (a / (a - 1))


@dataclass
class AsymptoticsCheck:
    n: np.ndarray
    exponent: np.ndarray
    prediction: np.ndarray
    ratio: np.ndarray


def phi_asymptotics_check(model: LevyModel, s_seq, u_seq, lam: float = 1.0) -> AsymptoticsCheck:
    """Compare exponents with their logarithmic equivalents along ``(s_n, u_n)``.

    For ``alpha > 1`` and ``s_n -> -inf``: ``Phi_{s_n}(u_n)`` against
    ``(1 - rho) log(u_n G^{-1}(1/|s_n|))``.  For ``alpha < 1`` and ``s_n -> 0+``
    (slopes measured from the drift): ``Psi_{s_n}(u_n)`` against
    ``rho log(u_n G^{-1}(1/s_n))``.
    """
    m = canonical(model)
    a, rho = m.alpha, m.rho
    s = np.asarray(s_seq, dtype=float)
    u = np.asarray(u_seq, dtype=float)
    vals = np.empty(len(s))
    pred = np.empty(len(s))
    for i, (si, ui) in enumerate(zip(s, u)):
        if a > 1:
            vals[i] = phi(m, si, ui, lam).value
            pred[i] = (1 - rho) * math.log(ui * float(normaliser_inverse(m, 1 / abs(si))))
        else:
            vals[i] = psi_fs(m, m.drift, si, ui, lam).value
            pred[i] = rho * math.log(ui * float(normaliser_inverse(m, 1 / si)))
    return AsymptoticsCheck(np.arange(1, len(s) + 1), vals, pred, vals / pred)
