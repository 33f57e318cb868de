"""Overlap quadratures, limit constants, and the translate-overlap lemma."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from nlsbound.interaction import (
    DecayFunction,
    bl_limit,
    decay_scale,
    limit_constants,
    overlap_integral,
    pair_estimate,
    tilted_integral,
)
from nlsbound.scaling import ModelParams, compute_exponents, scaled_profile


def test_decay_scale_trivia():
    # t = 0: pure polynomial; N = 1: pure exponential (no polynomial factor)
    assert decay_scale(9.0, 0.0, 1.0, 1.0, 3) == pytest.approx(9.0 ** (-1.0))
    assert decay_scale(4.0, 0.0, 1.0, 1.0, 2) == pytest.approx(0.5)
    v = decay_scale(5.0, 0.25, 4.0, 1.0, 1)
    assert v == pytest.approx(math.exp(-2.0 * 1.0 * 5.0))
    # strictly decreasing in r for t > 0
    vals = [decay_scale(r, 0.3, 1.0, 1.0, 2) for r in (5.0, 8.0, 11.0)]
    assert vals[0] > vals[1] > vals[2]
    with pytest.raises(ValueError):
        decay_scale(-1.0, 0.3, 1.0, 1.0, 2)
    with pytest.raises(ValueError):
        decay_scale(1.0, 0.7, 1.0, 1.0, 2)


def test_overlap_integral_against_quad_1d():
    d = 7.0
    got = overlap_integral(lambda r: np.exp(-r), lambda r: np.exp(-2 * r), d, 1, 1.0, 2.0)
    exact = quad(lambda x: math.exp(-abs(x + d / 2)) * math.exp(-2 * abs(x - d / 2)),
                 -80, 80, limit=400)[0]
    assert got == pytest.approx(exact, rel=1e-7)


@pytest.mark.parametrize("n_dim", [2, 3])
def test_overlap_integral_gaussian_closed_form(n_dim):
    d = 3.0
    got = overlap_integral(lambda r: np.exp(-(r**2)), lambda r: np.exp(-(r**2)),
                           d, n_dim, 2.0, 2.0)
    exact = math.exp(-(d**2) / 2.0) * (math.pi / 2.0) ** (n_dim / 2.0)
    assert got == pytest.approx(exact, rel=1e-12)


def test_overlap_against_direct_2d_grid(base_2_3):
    # independent oracle: brute-force Riemann sum over a 2-D grid, for two
    # different placement directions with the same center distance
    prof = scaled_profile(base_2_3, 0.5)
    r = 4.0
    h = 0.05
    x = np.arange(-16.0, 16.0 + h, h)
    X, Y = np.meshgrid(x, x, indexing="ij")
    for z in (np.array([-1.0, 0.0]), np.array([1.0, 2.0])):  # both on |z - e1| = 2
        c1 = r * z
        c2 = np.array([r, 0.0])
        r1 = np.hypot(X - c1[0], Y - c1[1])
        r2 = np.hypot(X - c2[0], Y - c2[1])
        direct = float(np.sum(prof(r1) * prof(r2))) * h * h
        got = overlap_integral(prof, prof, float(np.linalg.norm(c1 - c2)), 2,
                               prof.sqrt_lam, prof.sqrt_lam)
        assert got == pytest.approx(direct, rel=5e-4)


def test_tilted_integral_gaussian_closed_form():
    a = 0.7
    got = tilted_integral(lambda r: np.exp(-(r**2)), a, 2.0, 2)
    assert got == pytest.approx(math.pi * math.exp(a * a / 4.0), rel=1e-12)
    got1 = tilted_integral(lambda r: np.exp(-(r**2)), a, 2.0, 1)
    assert got1 == pytest.approx(math.sqrt(math.pi) * math.exp(a * a / 4.0), rel=1e-12)


def test_tilted_integral_rejects_growth():
    with pytest.raises(ValueError):
        tilted_integral(lambda r: np.exp(-r), 1.5, 1.0, 2)


def test_pair_estimate_t0(base_2_3):
    s = compute_exponents(ModelParams(2, 3.0)).s
    est = pair_estimate(8.0, 0.0, None, base_2_3, base_2_3.mass_sq, 1.0, s)
    assert est.tau == 0.0 and est.sigma == 0.0
    assert est.c1t == 0.0


@pytest.fixture(scope="module")
def pair_2_3(base_2_3):
    s = compute_exponents(ModelParams(2, 3.0)).s
    rho_sq = base_2_3.mass_sq
    t = 0.3
    ps = scaled_profile(base_2_3, t)
    pb = scaled_profile(base_2_3, 1 - t)
    return dict(s=s, rho_sq=rho_sq, t=t, ps=ps, pb=pb)


def test_ratio_limits(base_2_3, pair_2_3):
    c = pair_2_3
    c1t, c2t = limit_constants(c["t"], c["pb"], c["rho_sq"], 1.0, c["s"])
    ratios = []
    for r in (12.0, 18.0, 24.0):
        est = pair_estimate(r, c["t"], c["ps"], c["pb"], c["rho_sq"], 1.0, c["s"],
                            with_limits=False)
        ratios.append(est.ratio_tau)
        assert est.ratio_sigma == pytest.approx(c2t, rel=0.02)
    assert ratios[-1] == pytest.approx(c1t, rel=0.01)
    assert ratios[0] < ratios[1] < ratios[2]  # monotone approach from below


def test_positivity_and_delta(base_2_3, pair_2_3):
    c = pair_2_3
    est = pair_estimate(10.0, c["t"], c["ps"], c["pb"], c["rho_sq"], 1.0, c["s"],
                        with_limits=False)
    assert est.delta > 0 and est.tau > 0 and est.sigma > 0


def test_log_slope_flattens(base_2_3, pair_2_3):
    # log tau + 2 sqrt(t^s lam) r + (N-1)/2 log r has vanishing slope
    c = pair_2_3
    alpha = math.sqrt(c["t"] ** c["s"] * 1.0)
    rs = np.array([10.0, 16.0, 22.0, 28.0])
    vals = []
    for r in rs:
        est = pair_estimate(float(r), c["t"], c["ps"], c["pb"], c["rho_sq"], 1.0,
                            c["s"], with_limits=False)
        vals.append(math.log(est.tau) + 2 * alpha * r + 0.5 * math.log(r))
    slopes = np.abs(np.diff(vals) / np.diff(rs))
    assert slopes[-1] < slopes[0]
    assert slopes[-1] < 5e-3


def test_symmetric_split_tau_sq_below_delta(base_2_3):
    # (tau_(1/2)(r))^2 = o(delta_(1/2)(r)): the ratio decreases in r
    s = compute_exponents(ModelParams(2, 3.0)).s
    rho_sq = base_2_3.mass_sq
    half = scaled_profile(base_2_3, 0.5)
    ratios = []
    for r in (10.0, 16.0, 22.0, 30.0):
        est = pair_estimate(r, 0.5, half, half, rho_sq, 1.0, s, with_limits=False)
        ratios.append(est.tau**2 / est.delta)
    assert all(a > b for a, b in zip(ratios[:-1], ratios[1:]))


def test_limit_constants_edge_boundedness(base_2_3):
    s = compute_exponents(ModelParams(2, 3.0)).s
    rho_sq = base_2_3.mass_sq
    prods = []
    for t in (0.42, 0.46, 0.49, 0.499):
        pb = scaled_profile(base_2_3, 1 - t)
        c1t, c2t = limit_constants(t, pb, rho_sq, 1.0, s)
        prods.append(c1t * (0.5 - t))
        assert c2t > 0 and math.isfinite(c2t)
    assert max(prods) < 2.0 * float(np.median(prods))


def test_limit_constants_symmetric_split(base_2_3):
    s = compute_exponents(ModelParams(2, 3.0)).s
    half = scaled_profile(base_2_3, 0.5)
    c1t, c2t = limit_constants(0.5, half, base_2_3.mass_sq, 1.0, s)
    assert math.isinf(c1t)
    assert c2t > 0 and math.isfinite(c2t)


def test_bl_limit_exponential_oracle():
    g = DecayFunction(fn=lambda r: np.exp(-r), alpha=1.0, b=0.0, gamma=1.0,
                      decay_rate=1.0)
    h = DecayFunction(fn=lambda r: np.exp(-2.0 * r), alpha=1.0, b=0.0, gamma=1.0,
                      decay_rate=2.0)
    out = bl_limit(g, h, 1, r_sequence=[6.0, 8.0, 10.0, 12.0, 14.0], sep=1.0)
    assert out["predicted"] == pytest.approx(4.0 / 3.0, rel=1e-10)
    assert out["extrapolated"] == pytest.approx(4.0 / 3.0, rel=1e-6)
    assert out["scaled_sequence"][-1] == pytest.approx(4.0 / 3.0, rel=1e-4)


def test_bl_limit_hypothesis_failure():
    # equal decay rates: the weighted integrability of h fails
    g = DecayFunction(fn=lambda r: np.exp(-r), alpha=1.0, b=0.0, gamma=1.0,
                      decay_rate=1.0)
    with pytest.raises(ValueError):
        bl_limit(g, g, 1)


def test_bl_limit_compact_support_zero():
    def bump(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        inside = r < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
        return out

    g = DecayFunction(fn=bump, alpha=0.5, b=0.0, gamma=0.0, decay_rate=8.0)
    h = DecayFunction(fn=lambda r: np.exp(-2.0 * r), alpha=0.5, b=0.0, gamma=1.0,
                      decay_rate=2.0)
    out = bl_limit(g, h, 1, r_sequence=[10.0, 14.0, 18.0], sep=1.0)
    assert out["predicted"] == 0.0
    assert abs(out["scaled_sequence"][-1]) < 1e-6


def test_bl_limit_soliton_reproduces_sigma(base_2_3):
    # g = soliton, h = soliton^(p-1): the generic lemma must reproduce the
    # same weighted integral that the sigma limit constant is built from
    prof = base_2_3
    g = DecayFunction(fn=prof, alpha=prof.sqrt_lam, b=0.5, gamma=prof.c_decay,
                      decay_rate=prof.sqrt_lam)
    h = DecayFunction(fn=lambda r: prof(r) ** 2.0, alpha=prof.sqrt_lam, b=0.5,
                      gamma=0.0, decay_rate=2.0 * prof.sqrt_lam)
    out = bl_limit(g, h, 2, r_sequence=[8.0, 11.0, 14.0], sep=2.0)
    assert out["extrapolated"] == pytest.approx(out["predicted"], rel=0.02)


def test_refinement_stability(base_2_3, pair_2_3):
    # doubling the quadrature order changes tau by < 1e-5 relative (the
    # internal _refined guard would raise otherwise)
    c = pair_2_3
    est1 = pair_estimate(14.0, c["t"], c["ps"], c["pb"], c["rho_sq"], 1.0, c["s"],
                         with_limits=False)
    est2 = pair_estimate(14.0, c["t"], c["ps"], c["pb"], c["rho_sq"], 1.0, c["s"],
                         with_limits=False)
    assert est1.tau == est2.tau  # deterministic
