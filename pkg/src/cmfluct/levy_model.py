"""Lévy process models: exact samplers, marginal laws and truncated moments.

Every model is an immutable dataclass.  The generating triplet is taken with
respect to the cutoff ``1{|x| < 1}``.  Supported kinds are Brownian motion
with drift, strictly stable laws plus drift, the Cauchy process, the gamma
subordinator, compound Poisson with drift, and a stable process perturbed by
an independent Lévy process.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np
from scipy import special, stats

from . import _stable

MC_DEFAULT_SAMPLES = 100_000


@dataclass(frozen=True)
class Brownian:
    sigma: float = 1.0
    drift: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class Stable:
    """Strictly stable process with index ``alpha``, positivity ``rho`` and a drift.

    ``rho`` is ``P(Y_1 > 0)`` for the strictly stable part ``Y``; the process is
    ``X_t = Y_t + drift * t``.  ``alpha = 1`` is read as a Cauchy process whose
    location is fixed by ``rho``; ``alpha = 2`` is Brownian motion.
    """

    alpha: float
    rho: float = 0.5
    scale: float = 1.0
    drift: float = 0.0

    def __post_init__(self):
        a, r = self.alpha, self.rho
        if not 0 < a <= 2:
            raise ValueError("alpha must lie in (0, 2]")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if a == 2:
            if r != 0.5:
                raise ValueError("alpha = 2 requires rho = 1/2")
        elif a < 1:
            if not 0 <= r <= 1:
                raise ValueError("rho must lie in [0, 1] for alpha < 1")
        elif a == 1:
            if not 0 < r < 1:
                raise ValueError("rho must lie in (0, 1) for alpha = 1")
        elif not 1 - 1 / a - 1e-12 <= r <= 1 / a + 1e-12:
            raise ValueError("rho must lie in [1 - 1/alpha, 1/alpha] for alpha > 1")

    @property
    def beta(self) -> float:
        if self.alpha in (1.0, 2.0):
            return 0.0
        return float(np.clip(_stable.skew_from_positivity(self.alpha, self.rho), -1.0, 1.0))


@dataclass(frozen=True)
class Cauchy:
    """Cauchy process: ``P(X_1 <= u) = 1/2 + arctan((u - loc) / scale) / pi``."""

    scale: float = 1.0
    loc: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @property
    def rho(self) -> float:
        return 0.5 + math.atan(self.loc / self.scale) / math.pi


@dataclass(frozen=True)
class GammaSubordinator:
    """Gamma subordinator, ``X_t ~ Gamma(shape * t, rate)``."""

    shape: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise ValueError("shape and rate must be positive")


@dataclass(frozen=True)
class AtomicJumps:
    values: tuple = (-1.0, 1.0)
    probs: tuple = (0.5, 0.5)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or len(v) == 0:
            raise ValueError("values and probs must be equal-length 1-d sequences")
        if np.any(p < 0) or not math.isclose(p.sum(), 1.0, rel_tol=1e-12):
            raise ValueError("probs must be a probability vector")
        if np.any(v == 0):
            raise ValueError("zero-size jumps are not jumps")
        object.__setattr__(self, "values", tuple(float(x) for x in v))
        object.__setattr__(self, "probs", tuple(float(x) for x in p))

    def sample(self, n, rng):
        return rng.choice(np.asarray(self.values), size=n, p=np.asarray(self.probs))

    def sum_of(self, counts, rng):
        k = np.asarray(counts)
        draws = rng.multinomial(k, np.asarray(self.probs))
        return draws @ np.asarray(self.values)

    def moment(self, power: int, upper: float) -> float:
        """``E[J^power 1{|J| < upper}]``."""
        v = np.asarray(self.values)
        p = np.asarray(self.probs)
        m = np.abs(v) < upper
        return float(np.sum(p[m] * v[m] ** power))

    def tail(self, eps: float) -> float:
        v = np.asarray(self.values)
        return float(np.sum(np.asarray(self.probs)[np.abs(v) >= eps]))


@dataclass(frozen=True)
class NormalJumps:
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError("sd must be positive")

    def sample(self, n, rng):
        return rng.normal(self.mean, self.sd, n)

    def sum_of(self, counts, rng):
        k = np.asarray(counts, dtype=float)
        return rng.normal(k * self.mean, np.sqrt(k) * self.sd)

    def moment(self, power: int, upper: float) -> float:
        if upper <= 0:
            return 0.0
        m, s = self.mean, self.sd
        za, zb = (-upper - m) / s, (upper - m) / s
        mass = stats.norm.cdf(zb) - stats.norm.cdf(za)
        if power == 0:
            return float(mass)
        ez = stats.norm.pdf(za) - stats.norm.pdf(zb)
        if power == 1:
            return float(m * mass + s * ez)
        ez2 = mass + za * stats.norm.pdf(za) - zb * stats.norm.pdf(zb)
        if power == 2:
            return float(m * m * mass + 2 * m * s * ez + s * s * ez2)
        raise ValueError("power must be 0, 1 or 2")

    def tail(self, eps: float) -> float:
        return 1.0 - self.moment(0, eps)


JumpLaw = Union[AtomicJumps, NormalJumps]


@dataclass(frozen=True)
class CompoundPoissonDrift:
    rate: float = 1.0
    jumps: JumpLaw = field(default_factory=AtomicJumps)
    drift: float = 0.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("rate must be positive")


@dataclass(frozen=True)
class StablePlusPerturbation:
    """Independent sum of a stable (or Cauchy) process and another Lévy process."""

    stable: Union[Stable, Cauchy]
    perturbation: "LevyModel"

    def __post_init__(self):
        if not isinstance(self.stable, (Stable, Cauchy)):
            raise ValueError("the leading part must be Stable or Cauchy")


LevyModel = Union[Brownian, Stable, Cauchy, GammaSubordinator, CompoundPoissonDrift,
                  StablePlusPerturbation]


class TruncatedFunctionals(NamedTuple):
    """Drift, Gaussian variance and tail mass seen at truncation level ``eps``."""

    gamma_bar: float
    sigma2_bar: float
    nu_bar: float


def canonical(model: LevyModel) -> LevyModel:
    """Map the boundary stable cases onto their dedicated kinds."""
    if isinstance(model, Stable):
        if model.alpha == 2:
            return Brownian(sigma=model.scale * math.sqrt(2.0), drift=model.drift)
        if model.alpha == 1:
            loc = model.scale * math.tan(math.pi * (model.rho - 0.5)) + model.drift
            return Cauchy(scale=model.scale, loc=loc)
    if isinstance(model, StablePlusPerturbation):
        return StablePlusPerturbation(canonical(model.stable), canonical(model.perturbation))
    return model


def stable_levy_constants(model: Stable) -> tuple[float, float]:
    """Return ``(c_plus, c_minus)`` with ``nu(dx) = c_pm |x|^(-1-alpha) dx`` on each half-line."""
    m = canonical(model)
    if isinstance(m, Cauchy):
        return m.scale / math.pi, m.scale / math.pi
    if isinstance(m, Brownian):
        return 0.0, 0.0
    a = m.alpha
    std = _stable.standard_stable(a, m.beta)
    common = special.gamma(a + 1) * m.scale ** a * std.tail_scale / math.pi
    return common * math.sin(math.pi * a * std.rho), common * math.sin(math.pi * a * (1 - std.rho))


def bg_index(model: LevyModel) -> float:
    """Blumenthal-Getoor index."""
    m = canonical(model)
    if isinstance(m, Brownian):
        return 2.0
    if isinstance(m, Stable):
        return float(m.alpha)
    if isinstance(m, Cauchy):
        return 1.0
    if isinstance(m, (GammaSubordinator, CompoundPoissonDrift)):
        return 0.0
    return max(bg_index(m.stable), bg_index(m.perturbation))


def has_infinite_variation(model: LevyModel) -> bool:
    m = canonical(model)
    if isinstance(m, (Brownian, Cauchy)):
        return True
    if isinstance(m, Stable):
        return m.alpha >= 1
    if isinstance(m, (GammaSubordinator, CompoundPoissonDrift)):
        return False
    return has_infinite_variation(m.stable) or has_infinite_variation(m.perturbation)


def natural_drift(model: LevyModel) -> float:
    """Drift of a finite-variation process, ``X_t = d t + sum of jumps``."""
    m = canonical(model)
    if has_infinite_variation(m):
        raise ValueError("natural drift is only defined for finite variation")
    if isinstance(m, Stable):
        return m.drift
    if isinstance(m, GammaSubordinator):
        return 0.0
    if isinstance(m, CompoundPoissonDrift):
        return m.drift
    return natural_drift(m.stable) + natural_drift(m.perturbation)


def truncated_functionals(model: LevyModel, eps: float) -> TruncatedFunctionals:
    """Truncated drift, variance and tail mass at level ``eps > 0``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    m = canonical(model)
    cut = min(eps, 1.0)
    if isinstance(m, Brownian):
        return TruncatedFunctionals(m.drift, m.sigma ** 2, 0.0)
    if isinstance(m, Cauchy):
        c = m.scale / math.pi
        return TruncatedFunctionals(m.loc, 2 * c * eps, 2 * c / eps)
    if isinstance(m, Stable):
        a = m.alpha
        cp, cm = stable_levy_constants(m)
        if a < 1:
            g = m.drift + (cp - cm) * cut ** (1 - a) / (1 - a)
        else:
            g = m.drift - (cp - cm) * cut ** (1 - a) / (a - 1)
        return TruncatedFunctionals(g, (cp + cm) * eps ** (2 - a) / (2 - a), (cp + cm) * eps ** (-a) / a)
    if isinstance(m, GammaSubordinator):
        a, b = m.shape, m.rate
        g = a * (-math.expm1(-b * cut)) / b
        s2 = a * (1 - math.exp(-b * eps) * (1 + b * eps)) / b ** 2
        return TruncatedFunctionals(g, s2, a * special.exp1(b * eps))
    if isinstance(m, CompoundPoissonDrift):
        lam, j = m.rate, m.jumps
        return TruncatedFunctionals(m.drift + lam * j.moment(1, cut), lam * j.moment(2, eps), lam * j.tail(eps))
    a = truncated_functionals(m.stable, eps)
    b = truncated_functionals(m.perturbation, eps)
    return TruncatedFunctionals(a.gamma_bar + b.gamma_bar, a.sigma2_bar + b.sigma2_bar, a.nu_bar + b.nu_bar)


def sample_marginal(model: LevyModel, t, size, rng: np.random.Generator) -> np.ndarray:
    """Exact draws of ``X_t``; ``t`` may be an array broadcast against ``size``."""
    m = canonical(model)
    t = np.broadcast_to(np.asarray(t, dtype=float), size)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    if isinstance(m, Brownian):
        return m.drift * t + m.sigma * np.sqrt(t) * rng.standard_normal(size)
    if isinstance(m, Cauchy):
        return t * (m.loc + m.scale * rng.standard_cauchy(size))
    if isinstance(m, Stable):
        z = _stable.cms_sample(m.alpha, m.beta, size, rng)
        return m.drift * t + m.scale * t ** (1 / m.alpha) * z
    if isinstance(m, GammaSubordinator):
        out = np.zeros(size)
        pos = t > 0
        out[pos] = rng.gamma(m.shape * t[pos], 1.0 / m.rate)
        return out
    if isinstance(m, CompoundPoissonDrift):
        counts = rng.poisson(m.rate * t)
        return m.drift * t + m.jumps.sum_of(counts, rng)
    return sample_marginal(m.stable, t, size, rng) + sample_marginal(m.perturbation, t, size, rng)


def sample_path(model: LevyModel, horizon: float, n_steps: int, rng: np.random.Generator):
    """Path on the uniform grid ``k * horizon / n_steps``; returns ``(times, values)``."""
    if not horizon > 0 or n_steps < 1:
        raise ValueError("need horizon > 0 and n_steps >= 1")
    dt = horizon / n_steps
    inc = sample_marginal(model, dt, n_steps, rng)
    times = np.arange(n_steps + 1) * dt
    times[-1] = horizon
    return times, np.concatenate(([0.0], np.cumsum(inc)))


def _exact_cdf(m, t, x):
    if isinstance(m, Brownian):
        with np.errstate(divide="ignore", invalid="ignore"):
            return stats.norm.cdf((x - m.drift * t) / (m.sigma * np.sqrt(t)))
    if isinstance(m, Cauchy):
        with np.errstate(divide="ignore", invalid="ignore"):
            return 0.5 + np.arctan((x / t - m.loc) / m.scale) / np.pi
    if isinstance(m, Stable):
        std = _stable.standard_stable(m.alpha, m.beta)
        z = (x - m.drift * t) / (m.scale * t ** (1 / m.alpha))
        return std.cdf(z)
    if isinstance(m, GammaSubordinator):
        with np.errstate(divide="ignore", invalid="ignore"):
            return stats.gamma.cdf(x, m.shape * t, scale=1.0 / m.rate)
    return None


def has_exact_cdf(model: LevyModel) -> bool:
    return isinstance(canonical(model), (Brownian, Cauchy, Stable, GammaSubordinator))


def marginal_cdf(model: LevyModel, t, x, *, rng: np.random.Generator | None = None,
                 n_mc: int = MC_DEFAULT_SAMPLES, with_error: bool = False):
    """``P(X_t <= x)``, vectorised over broadcast ``t`` and ``x``.

    Compound Poisson and perturbed models fall back to Monte Carlo with
    ``n_mc`` draws per distinct ``t``; ``with_error=True`` also returns the
    standard error (zero for the exact kinds up to quadrature accuracy).
    """
    m = canonical(model)
    t_arr, x_arr = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
    if np.any(t_arr <= 0):
        raise ValueError("t must be positive")
    exact = _exact_cdf(m, t_arr, x_arr)
    if exact is not None:
        value = np.asarray(exact, dtype=float)
        err = np.zeros_like(value)
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        value = np.empty(t_arr.shape)
        for tv in np.unique(t_arr):
            sel = t_arr == tv
            draws = np.sort(sample_marginal(m, tv, n_mc, rng))
            value[sel] = np.searchsorted(draws, x_arr[sel], side="right") / n_mc
        err = np.sqrt(value * (1 - value) / n_mc)
    if value.ndim == 0:
        value, err = float(value), float(err)
    return (value, err) if with_error else value


def marginal_pdf(model: LevyModel, t: float, x):
    """Density of ``X_t`` for the continuous exact kinds."""
    m = canonical(model)
    x = np.asarray(x, dtype=float)
    if isinstance(m, Brownian):
        return stats.norm.pdf(x, m.drift * t, m.sigma * math.sqrt(t))
    if isinstance(m, Cauchy):
        return stats.cauchy.pdf(x, m.loc * t, m.scale * t)
    if isinstance(m, Stable):
        std = _stable.standard_stable(m.alpha, m.beta)
        s = m.scale * t ** (1 / m.alpha)
        z = (x - m.drift * t) / s
        return np.vectorize(lambda v: std.exact(v)[1])(z) / s
    if isinstance(m, GammaSubordinator):
        return stats.gamma.pdf(x, m.shape * t, scale=1.0 / m.rate)
    raise ValueError("no closed-form density for this model")


def positivity(model: LevyModel, t: float = 1.0) -> float:
    """``P(X_t > 0)``."""
    return 1.0 - float(marginal_cdf(model, t, 0.0))


def model_to_dict(model) -> dict:
    """Plain-dict form with a ``kind`` tag; inverse of :func:`model_from_dict`."""
    kind = type(model).__name__
    out = {"kind": kind}
    for name in model.__dataclass_fields__:
        v = getattr(model, name)
        if hasattr(v, "__dataclass_fields__"):
            v = model_to_dict(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[name] = v
    return out


_KINDS = {c.__name__: c for c in (Brownian, Stable, Cauchy, GammaSubordinator, CompoundPoissonDrift,
                                   StablePlusPerturbation, AtomicJumps, NormalJumps)}


def model_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    cls = _KINDS[kind]
    allowed = set(cls.__dataclass_fields__)
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"unknown fields for {kind}: {sorted(unknown)}")
    for k, v in list(d.items()):
        if isinstance(v, dict):
            d[k] = model_from_dict(v)
        elif isinstance(v, list):
            d[k] = tuple(v)
    return cls(**d)
