"""Exponents, scaling relations, identities and elementary inequalities."""

import math

import numpy as np
import pytest

from nlsbound.ground_state import shoot_radial
from nlsbound.scaling import (
    ModelParams,
    compute_exponents,
    decay_rate,
    elementary_power_inequality,
    mass_split_coefficient,
    multiplier_identity,
    pohozaev_nehari_residuals,
    scaled_profile,
    splitting_inequalities,
)


def test_exponent_values():
    assert compute_exponents(ModelParams(2, 3.0)).s == pytest.approx(1.0, abs=1e-14)
    c = compute_exponents(ModelParams(1, 4.0))
    assert c.s == pytest.approx(2.0, abs=1e-14)
    assert c.one_plus_s == pytest.approx(3.0, abs=1e-14)
    # (2p - N(p-2)) / (4 - N(p-2)) at (1,4): (8-2)/(4-2) = 3
    assert (2 * 4.0 - 1 * 2.0) / (4 - 1 * 2.0) == pytest.approx(3.0)
    assert compute_exponents(ModelParams(3, 3.0)).s == pytest.approx(2.0, rel=1e-13)


def test_one_plus_s_identity_across_window():
    rng = np.random.default_rng(7)
    for n in (1, 2, 3, 4):
        two_c = 2 + 4 / n
        for _ in range(200):
            p = rng.uniform(2.0 + 1e-3, two_c - 1e-3)
            c = compute_exponents(ModelParams(n, p))
            alt = (2 * p - n * (p - 2)) / (4 - n * (p - 2))
            assert abs(alt - c.one_plus_s) <= 1e-12 * max(1.0, abs(alt))
            assert c.s > 0


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(2, 2.0)
    with pytest.raises(ValueError):
        ModelParams(2, 4.0)  # 2_c = 4 for N=2
    with pytest.raises(ValueError):
        ModelParams(1, 4.0, rho=-1.0)


def test_scaled_profile_identity_at_k1(base_1_4):
    sc = scaled_profile(base_1_4, 1.0)
    assert sc.energy == pytest.approx(base_1_4.energy, rel=1e-14)
    assert sc.lam == pytest.approx(base_1_4.lam, rel=1e-14)
    np.testing.assert_allclose(sc.values, base_1_4.values)


def test_scaled_profile_half_mass(base_1_4):
    # energy -> 2^-(1+s) m, multiplier -> 2^-s lam
    s = compute_exponents(ModelParams(1, 4.0)).s
    sc = scaled_profile(base_1_4, 0.5)
    assert sc.energy == pytest.approx(2.0 ** -(1 + s) * base_1_4.energy, rel=1e-13)
    assert sc.lam == pytest.approx(2.0 ** (-s) * base_1_4.lam, rel=1e-13)
    assert sc.mass_sq == pytest.approx(0.5 * base_1_4.mass_sq, rel=1e-13)


def test_scaled_profile_quarter_mass_closed_form(base_1_4):
    # sech soliton at mass^2 = 4, m = -2/3; k = 1/4 gives (1/4)^3 * (-2/3)
    sc = scaled_profile(base_1_4, 0.25)
    assert sc.energy == pytest.approx((0.25**3) * (-2.0 / 3.0), abs=1e-10)


def test_scaled_profile_composition(base_2_3):
    a = scaled_profile(scaled_profile(base_2_3, 0.5), 0.6)
    b = scaled_profile(base_2_3, 0.3)
    rr = np.linspace(0.0, b.r_switch, 500)
    np.testing.assert_allclose(a(rr), b(rr), atol=1e-8 * b.peak)
    assert a.lam == pytest.approx(b.lam, rel=1e-12)
    assert a.energy == pytest.approx(b.energy, rel=1e-12)


def test_decay_rate_forms():
    params = ModelParams(1, 4.0, rho=3.0)
    d, d_alt = decay_rate(1.0, params)
    # exponent (p-2)/(4-N(p-2)) = 1, prefactor 2^0 = 1
    assert d == pytest.approx(3.0, rel=1e-14)
    assert d_alt == pytest.approx(d, rel=1e-14)
    d2, d2_alt = decay_rate(1.0, ModelParams(2, 3.0, rho=1.0))
    assert d2 == pytest.approx(math.sqrt(2.0), rel=1e-14)
    assert d2_alt == pytest.approx(d2, rel=1e-14)
    # strictly increasing in rho
    prev = 0.0
    for rho in (0.5, 1.0, 2.0, 4.0):
        val, _ = decay_rate(1.0, ModelParams(2, 3.0, rho=rho))
        assert val > prev
        prev = val
    with pytest.raises(ValueError):
        decay_rate(-1.0, params)


def test_residuals_sech_oracle(base_1_4):
    # |grad w|^2 = 4/3, |w|_2^2 = 4, |w|_4^4 = 16/3: both identities vanish
    e_res, neh, poh = pohozaev_nehari_residuals(base_1_4)
    assert abs(e_res) < 1e-12
    assert abs(neh) < 1e-10
    assert abs(poh) < 1e-10


def test_residuals_scaling_invariance(base_2_3):
    for k in (0.25, 0.7):
        sc = scaled_profile(base_2_3, k)
        _, neh, poh = pohozaev_nehari_residuals(sc)
        assert abs(neh) < 1e-9
        assert abs(poh) < 1e-9


def test_residuals_detect_perturbation(base_1_4):
    import dataclasses

    bad = dataclasses.replace(
        base_1_4,
        values=1.1 * base_1_4.values,
        mass_sq=1.1**2 * base_1_4.mass_sq,
        grad_sq=1.1**2 * base_1_4.grad_sq,
        p_norm=1.1**4 * base_1_4.p_norm,
    )
    _, neh, _ = pohozaev_nehari_residuals(bad)
    assert abs(neh) > 1e-2


def test_multiplier_identity_sech(base_1_4):
    # lam * mass^2 / 2 = 2 and -(1+s) m = 3 * 2/3 = 2
    out = multiplier_identity(base_1_4)
    assert out["lhs_half_lam_mass"] == pytest.approx(2.0, abs=1e-10)
    assert out["rhs_energy_form"] == pytest.approx(2.0, abs=1e-10)
    assert out["rel_discrepancy"] < 1e-10
    assert out["mass_from_energy"] == pytest.approx(4.0, abs=1e-9)


def test_multiplier_identity_scaled(base_1_4):
    out = multiplier_identity(scaled_profile(base_1_4, 0.5))
    assert out["rel_discrepancy"] < 1e-12
    assert out["rel_discrepancy_mass"] < 1e-12


def test_splitting_inequalities_examples():
    out = splitting_inequalities(1.0 / 3.0, 1.0)
    assert out["lhs_split"] == pytest.approx(2.0 / 9.0 + 4.0 / 9.0, rel=1e-14)
    assert out["split_ok"]
    out0 = splitting_inequalities(0.0, 2.5)
    assert out0["lhs_split"] == pytest.approx(1.0)
    out1 = splitting_inequalities(1.0, 1.7)
    assert abs(out1["lhs_concavity"]) < 1e-14


def test_splitting_inequalities_random_sweep():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        t = rng.uniform(0.0, 1.0 / 3.0)
        s = rng.uniform(1e-6, 4.0)
        out = splitting_inequalities(t, s)
        assert out["split_ok"], (t, s, out["lhs_split"])
    for _ in range(10_000):
        t = rng.uniform(0.0, 1.0)
        s = rng.uniform(1e-6, 4.0)
        assert splitting_inequalities(t, s)["concavity_ok"]


def test_mass_split_coefficient_extremes():
    for s in (0.5, 1.0, 2.0, 3.7):
        assert mass_split_coefficient(0.0, s) == pytest.approx(1.0)
        assert mass_split_coefficient(1.0, s) == pytest.approx(1.0)
        ts = np.linspace(0.0, 1.0, 20001)
        vals = np.array([mass_split_coefficient(t, s) for t in ts])
        i = int(np.argmin(vals))
        assert abs(ts[i] - 0.5) < 1e-4
        assert vals[i] == pytest.approx(2.0 ** (-s), abs=1e-10)


def test_elementary_power_inequality():
    assert elementary_power_inequality(1.0, 1.0, 2.0) == pytest.approx(0.0, abs=1e-14)
    assert elementary_power_inequality(1.0, 0.0, 3.3) == pytest.approx(0.0, abs=1e-14)
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10_000):
        a, b = rng.uniform(0.0, 10.0, size=2)
        p = rng.uniform(2.0, 6.0)
        worst = min(worst, elementary_power_inequality(a, b, p))
    assert worst >= -1e-12
