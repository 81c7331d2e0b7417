import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cmfluct.levy_model import Brownian, Cauchy, Stable, sample_marginal, sample_path
from cmfluct.minorant import (ConvexMinorant, convex_minorant, is_convex_minorant_of, lower_hull,
                              lower_hull_bruteforce, minorant_of_tilted, post_minimum,
                              sample_faces_stickbreaking)
from cmfluct.vertex_law import sample_vertex_cauchy


def support_slope_vertices(t, x):
    """Strict lower-hull vertices by the support-slope test, O(n^2).

    Interior point ``i`` is a vertex iff the largest slope arriving from the
    left is strictly below the smallest slope leaving to the right.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    n = len(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (x[None, :] - x[:, None]) / (t[None, :] - t[:, None])
    keep = [0]
    for i in range(1, n - 1):
        if np.max(s[:i, i]) < np.min(s[i, i + 1:]):
            keep.append(i)
    keep.append(n - 1)
    return np.asarray(keep)


# -- hull kernel -----------------------------------------------------------------------------


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=2, max_size=40))
def test_monotone_chain_matches_bruteforce_with_ties(values):
    # small integers make collinear triples common and every orientation test exact
    t = np.arange(len(values), dtype=float)
    x = np.asarray(values, dtype=float)
    h = lower_hull(t, x)
    assert np.array_equal(h, lower_hull_bruteforce(t, x))
    assert np.array_equal(h, support_slope_vertices(t, x))


@pytest.mark.parametrize("model", [Brownian(), Stable(1.5, 0.6), Stable(0.6, 0.4), Cauchy()])
def test_monotone_chain_matches_support_slope_oracle(model):
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(2, 257))
        t, x = sample_path(model, 1.0, n, rng)
        assert np.array_equal(lower_hull(t, x), support_slope_vertices(t, x))


def test_parabola_keeps_every_segment():
    t = np.linspace(0, 1, 33)
    cm = convex_minorant(t, (t - 0.3) ** 2)
    assert cm.n_faces == 32
    assert np.allclose(cm.lengths, np.diff(t))


def test_v_shape_has_two_faces():
    t = np.linspace(0, 2, 21)
    cm = convex_minorant(t, np.abs(t - 1.2))
    assert cm.n_faces == 2
    assert np.allclose(cm.slopes, [-1.0, 1.0])


def test_hull_input_validation():
    with pytest.raises(ValueError):
        lower_hull([0.0], [1.0])
    with pytest.raises(ValueError):
        lower_hull([0.0, 0.0, 1.0], [1.0, 2.0, 3.0])


def test_minorant_validation():
    with pytest.raises(ValueError):
        ConvexMinorant(1.0, np.array([0.5, -0.1]), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        ConvexMinorant(1.0, np.array([0.7, 0.5]), np.array([0.0, 1.0]))


# -- queries ---------------------------------------------------------------------------------


def test_single_face_derivative():
    cm = ConvexMinorant(1.0, np.array([1.0]), np.array([0.7]))
    assert np.all(cm.right_derivative(np.array([0.0, 0.3, 0.99])) == 0.7)


def test_right_continuity_at_vertex():
    cm = ConvexMinorant(1.0, np.array([0.4, 0.6]), np.array([-1.0, 2.0]))
    assert cm.right_derivative(0.4) == 2.0
    assert cm.right_derivative(0.3999) == -1.0


def test_vertex_time_extremes():
    cm = ConvexMinorant(1.0, np.array([0.4, 0.6]), np.array([-1.0, 2.0]))
    assert cm.vertex_time(-5.0) == 0.0
    assert cm.vertex_time(5.0) == 1.0
    assert cm.vertex_time(0.0) == 0.4


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([Brownian(), Stable(1.5, 0.6), Cauchy()]))
def test_derivative_monotone_and_right_inverse(seed, model):
    rng = np.random.default_rng(seed)
    t, x = sample_path(model, 1.0, 256, rng)
    cm = convex_minorant(t, x)
    grid = np.linspace(0, 1, 1001)[:-1]
    d = cm.right_derivative(grid)
    assert np.all(np.diff(d) >= 0)
    for s in rng.normal(0, 2, 5):
        tau = cm.vertex_time(s)
        if tau < cm.covered:
            nxt = cm.lengths[np.searchsorted(cm.slopes, s, side="right")]
            assert cm.right_derivative(tau + 0.5 * nxt) > s
            assert cm.right_derivative(tau) > s


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([Brownian(), Stable(1.5, 0.6), Stable(0.7, 0.5), Cauchy()]))
def test_maximality_and_contact(seed, model):
    t, x = sample_path(model, 1.0, 512, np.random.default_rng(seed))
    cm = convex_minorant(t, x)
    scale = max(1.0, float(np.max(np.abs(x))))
    assert np.all(cm.value(t) <= x + 1e-12 * scale)
    assert is_convex_minorant_of(cm, t, x)
    # every face is supported by a grid point at its ends
    for a, ln, _ in cm.faces():
        mid = a + ln / 2
        near = np.abs(t - mid) <= ln / 2 + 1e-15
        assert np.min(x[near] - cm.value(t[near])) < 1e-9 * scale


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-2, 2))
def test_minorants_agree_before_common_vertex(seed, s):
    # hulls on [0, T] and on [0, T'] share every face up to a common vertex
    t, x = sample_path(Cauchy(), 2.0, 512, np.random.default_rng(seed))
    whole = convex_minorant(t, x)
    part = convex_minorant(t[:257], x[:257])
    tau_w, tau_p = whole.vertex_time(s), part.vertex_time(s)
    if tau_w == tau_p and 0 < tau_w < part.covered:
        k = int(np.searchsorted(whole.slopes, s, side="right"))
        assert np.array_equal(whole.lengths[:k], part.lengths[:k])
        assert np.array_equal(whole.slopes[:k], part.slopes[:k])


def test_tilting_shifts_slopes():
    cm = ConvexMinorant(1.0, np.array([0.4, 0.6]), np.array([-1.0, 2.0]))
    tilted = minorant_of_tilted(cm, 0.5)
    assert np.array_equal(tilted.slopes, [-1.5, 1.5])
    assert tilted.vertex_time(0.0) == cm.vertex_time(0.5)


def test_serialisation_round_trip():
    cm = sample_faces_stickbreaking(Stable(1.5, 0.6), np.random.default_rng(0), horizon=1.0, n_faces=20)
    back = ConvexMinorant.from_json(cm.to_json())
    assert np.array_equal(back.lengths, cm.lengths) and np.array_equal(back.slopes, cm.slopes)
    lines = cm.to_csv().splitlines()
    assert lines[0] == "start,length,slope" and len(lines) == cm.n_faces + 1
    assert all(float(v) == w for v, w in zip(lines[1].split(","), cm.faces()[0]))


# -- stick-breaking --------------------------------------------------------------------------


def test_stickbreaking_residual_small():
    rng = np.random.default_rng(12)
    res = [sample_faces_stickbreaking(Cauchy(), rng, horizon=1.0, n_faces=60).residual for _ in range(200)]
    assert max(res) < 1e-9


def test_stickbreaking_needs_one_horizon():
    with pytest.raises(ValueError):
        sample_faces_stickbreaking(Cauchy(), np.random.default_rng(0))
    with pytest.raises(ValueError):
        sample_faces_stickbreaking(Cauchy(), np.random.default_rng(0), horizon=1.0, rate=1.0)


def test_stickbreaking_minimum_matches_grid_minimum():
    rng = np.random.default_rng(13)
    n = 2000
    sb = []
    for _ in range(n):
        cm = sample_faces_stickbreaking(Brownian(), rng, horizon=1.0, n_faces=60)
        neg = cm.slopes < 0
        sb.append(np.sum(cm.lengths[neg] * cm.slopes[neg]))
    # grid minima in one vectorised sweep
    inc = sample_marginal(Brownian(), 2.0 ** -16, (n, 2 ** 16), rng)
    grid = np.minimum(np.min(np.cumsum(inc, axis=1), axis=1), 0.0)
    assert stats.ks_2samp(sb, grid).pvalue > 0.01


def test_stickbreaking_vertex_time_matches_cauchy_law():
    rng = np.random.default_rng(14)
    tau = []
    for _ in range(2000):
        cm = sample_faces_stickbreaking(Cauchy(), rng, rate=1.0, n_faces=60)
        tau.append(np.sum(cm.lengths[cm.slopes <= 0]))
    exact = sample_vertex_cauchy(Cauchy(), [0.0], 2000, rng)[:, 0]
    assert stats.ks_2samp(tau, exact).pvalue > 0.01


def test_face_counts_agree_across_samplers():
    # long faces only: the number of faces with slope <= s is infinite near 0
    rng = np.random.default_rng(15)
    for s in (-1.0, 0.0, 1.0):
        a, b = [], []
        for _ in range(600):
            cm = sample_faces_stickbreaking(Cauchy(), rng, horizon=1.0, n_faces=60)
            a.append(int(np.sum((cm.slopes <= s) & (cm.lengths >= 0.02))))
            t, x = sample_path(Cauchy(), 1.0, 2 ** 12, rng)
            g = convex_minorant(t, x)
            b.append(int(np.sum((g.slopes <= s) & (g.lengths >= 0.02))))
        top = 4
        ca = np.bincount(np.minimum(a, top), minlength=top + 1)
        cb = np.bincount(np.minimum(b, top), minlength=top + 1)
        used = (ca + cb) > 0
        assert stats.chi2_contingency(np.vstack([ca[used], cb[used]]))[1] > 0.001


# -- post-minimum path -----------------------------------------------------------------------


def test_post_minimum_of_increasing_path():
    t = np.linspace(0, 1, 11)
    tau, m, u, y = post_minimum(t, t ** 2)
    assert tau == 0.0 and m == 0.0
    assert np.array_equal(u, t) and np.array_equal(y, t ** 2)


def test_post_minimum_interior():
    t = np.linspace(0, 1, 101)
    tau, m, u, y = post_minimum(t, (t - 0.37) ** 2)
    assert math.isclose(tau, 0.37) and y[0] == 0 and np.all(y >= 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-1, 1))
def test_shifted_path_minorant_has_nonnegative_slopes(seed, slope):
    t, x = sample_path(Stable(1.5, 0.6), 1.0, 1024, np.random.default_rng(seed))
    _, _, u, y = post_minimum(t, x, slope)
    if len(u) > 1:
        cm = convex_minorant(u, y)
        assert np.all(cm.slopes >= -1e-12)
