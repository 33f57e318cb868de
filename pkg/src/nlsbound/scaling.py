"""Closed-form exponents, scaling relations and elementary inequalities.

Everything here is plain floating-point arithmetic on the mass-subcritical
problem

    -Delta u + lam*u + V(x)*u = |u|^(p-2)*u,   |u|_2 = rho,

with 2 < p < 2 + 4/N.  The dimensionless exponent

    s = (2/N) * (p - 2) / (2_c - p),    2_c = 2 + 4/N,

controls how the soliton family rescales when the constrained mass changes:
splitting off a mass fraction k rescales the energy by k^(1+s) and the
Lagrange multiplier by k^s.  These relations are consumed by every other
module; they are checked here in relative terms with explicit tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ModelParams",
    "ScalingConstants",
    "compute_exponents",
    "scaled_profile",
    "decay_rate",
    "pohozaev_nehari_residuals",
    "multiplier_identity",
    "splitting_inequalities",
    "mass_split_coefficient",
    "elementary_power_inequality",
]

# Default relative tolerances: closed-form arithmetic vs quadrature-backed data.
TOL_ARITHMETIC = 1e-10
TOL_QUADRATURE = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Problem parameters: dimension, nonlinearity exponent, mass level."""

    n_dim: int
    p: float
    rho: float = 1.0

    def __post_init__(self):
        if self.n_dim < 1 or self.n_dim != int(self.n_dim):
            raise ValueError(f"dimension must be a positive integer, got {self.n_dim}")
        two_c = 2.0 + 4.0 / self.n_dim
        if not (2.0 < self.p < two_c):
            raise ValueError(
                f"p={self.p} outside mass-subcritical window (2, {two_c}) for N={self.n_dim}"
            )
        if self.rho <= 0:
            raise ValueError(f"mass level rho must be positive, got {self.rho}")

    @property
    def two_c(self) -> float:
        return 2.0 + 4.0 / self.n_dim


@dataclass(frozen=True)
class ScalingConstants:
    """Derived exponents for a given (N, p)."""

    s: float
    two_c: float
    one_plus_s: float
    threshold_factor: float  # 2^(-s), the relative width of the compactness window


def compute_exponents(params: ModelParams) -> ScalingConstants:
    """All closed-form exponents for (N, p).

    The two equivalent expressions for 1+s,

        1 + (2/N)(p-2)/(2_c - p)   and   (2p - N(p-2)) / (4 - N(p-2)),

    must agree to machine precision; a disagreement means invalid parameters.
    """
    n, p = params.n_dim, params.p
    two_c = params.two_c
    s = (2.0 / n) * (p - 2.0) / (two_c - p)
    one_plus_s = (2.0 * p - n * (p - 2.0)) / (4.0 - n * (p - 2.0))
    if abs(one_plus_s - (1.0 + s)) > 1e-12 * max(1.0, abs(one_plus_s)):
        raise ArithmeticError(
            f"inconsistent exponent identity: 1+s={1.0 + s} vs {one_plus_s}"
        )
    return ScalingConstants(
        s=s, two_c=two_c, one_plus_s=one_plus_s, threshold_factor=2.0 ** (-s)
    )


def mass_scaling_exponent(params: ModelParams) -> float:
    """Exponent e such that mass^2(lam) = lam^e * mass^2(1) along the
    one-parameter family u_lam(x) = lam^(1/(p-2)) u_1(sqrt(lam) x).

    Nonzero in the whole subcritical window (vanishes only at p = 2_c).
    """
    return 2.0 / (params.p - 2.0) - params.n_dim / 2.0


def scaled_profile(base, k: float):
    """Rescale a soliton profile to mass fraction k of its own mass.

    Input is the radial soliton at mass^2 = M^2; output is the soliton at
    mass^2 = k*M^2, produced through the exact rescaling

        w_k(x) = k^(s/(p-2)) * w(k^(s/2) x),

    so energy -> k^(1+s) * energy and multiplier -> k^s * multiplier.  The
    tail data transforms consistently: c_decay picks up the factor
    k^(s*(1/(p-2) - (N-1)/4)).
    """
    if k <= 0:
        raise ValueError(f"mass fraction must be positive, got {k}")
    n, p = base.n_dim, base.p
    consts = compute_exponents(ModelParams(n_dim=n, p=p, rho=1.0))
    s = consts.s
    amp = k ** (s / (p - 2.0))
    stretch = k ** (s / 2.0)  # new argument scale: w_k(r) = amp * w(stretch * r)
    cls = type(base)
    return cls(
        n_dim=n,
        p=p,
        lam=(k**s) * base.lam,
        r_grid=base.r_grid / stretch,
        values=amp * base.values,
        deriv=amp * stretch * base.deriv,
        mass_sq=k * base.mass_sq,
        grad_sq=k ** (2.0 * s / (p - 2.0) + s - s * n / 2.0) * base.grad_sq,
        p_norm=k ** (p * s / (p - 2.0) - s * n / 2.0) * base.p_norm,
        energy=k ** (1.0 + s) * base.energy,
        c_decay=k ** (s * (1.0 / (p - 2.0) - (n - 1.0) / 4.0)) * base.c_decay,
        tail_coef=amp * stretch ** (1.0 - n / 2.0) * base.tail_coef,
        r_switch=base.r_switch / stretch,
    )


def decay_rate(lambda_unit: float, params: ModelParams) -> tuple[float, float]:
    """Exponential rate d_rho entering the potential-decay condition.

    Returns the pair (d_rho, d_rho_alt): the first uses the exponent
    (p-2)/(4-N(p-2)) literally, the second the equivalent form s/2 (they
    coincide because 4 - N(p-2) = N(2_c - p)).  lambda_unit is the
    multiplier of the unit-mass soliton.
    """
    if lambda_unit <= 0:
        raise ValueError(f"unit-mass multiplier must be positive, got {lambda_unit}")
    n, p, rho = params.n_dim, params.p, params.rho
    expo = (p - 2.0) / (4.0 - n * (p - 2.0))
    d = 2.0 ** (1.0 - expo) * math.sqrt(lambda_unit) * rho**expo
    s_half = compute_exponents(params).s / 2.0
    d_alt = 2.0 ** (1.0 - s_half) * math.sqrt(lambda_unit) * rho**s_half
    return d, d_alt


def pohozaev_nehari_residuals(profile) -> tuple[float, float, float]:
    """Relative residuals of the three integral identities a solution obeys.

    With A = |grad w|_2^2, B = |w|_p^p, M2 = |w|_2^2, lam the multiplier:

        energy:    A/2 - B/p - E                    = 0
        Nehari:    A + lam*M2 - B                   = 0
        Pohozaev:  (N-2)/2*A + N/2*lam*M2 - N/p*B   = 0

    Residuals are normalised by the size of the constituent terms, so a
    true profile reports values at the solver/quadrature noise level.
    """
    n, p = profile.n_dim, profile.p
    a, b = profile.grad_sq, profile.p_norm
    m2, lam, en = profile.mass_sq, profile.lam, profile.energy

    e_res = 0.5 * a - b / p - en
    e_scale = max(abs(0.5 * a), abs(b / p), abs(en))
    neh = a + lam * m2 - b
    neh_scale = max(a, lam * m2, b)
    poh = 0.5 * (n - 2.0) * a + 0.5 * n * lam * m2 - (n / p) * b
    poh_scale = max(abs(0.5 * (n - 2.0) * a), 0.5 * n * lam * m2, (n / p) * b)
    return e_res / e_scale, neh / neh_scale, poh / poh_scale


def multiplier_identity(profile) -> dict:
    """Check the multiplier/energy relation of a soliton profile.

    For a solution with mass^2 = M2, multiplier lam and energy E, the
    Nehari and Pohozaev identities combine to

        lam * M2 / 2 = (1 + s) * (-E),

    equivalently M2 = 2 (1+s) (-E) / lam.  Both forms are evaluated and
    their relative discrepancies reported.
    """
    consts = compute_exponents(ModelParams(n_dim=profile.n_dim, p=profile.p, rho=1.0))
    one_plus_s = consts.one_plus_s
    lhs = 0.5 * profile.lam * profile.mass_sq
    rhs = one_plus_s * (-profile.energy)
    rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
    mass_pred = 2.0 * one_plus_s * (-profile.energy) / profile.lam
    rel_mass = abs(mass_pred - profile.mass_sq) / abs(profile.mass_sq)
    return {
        "lhs_half_lam_mass": lhs,
        "rhs_energy_form": rhs,
        "rel_discrepancy": rel,
        "mass_from_energy": mass_pred,
        "rel_discrepancy_mass": rel_mass,
    }


def splitting_inequalities(t: float, s: float) -> dict:
    """Left-hand sides of the two elementary inequalities behind the
    compactness window.

    lhs_split = 2^s t^(1+s) + (1-t)^(1+s)  (<= 1 for t in [0, 1/3])
    lhs_concavity = [t^(1+s) - 1] - (1+s) t^s (t - 1)  (<= 0 for t in [0, 1])
    """
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    lhs_split = (2.0**s) * t ** (1.0 + s) + (1.0 - t) ** (1.0 + s)
    lhs_conc = (t ** (1.0 + s) - 1.0) - (1.0 + s) * (t**s) * (t - 1.0)
    return {
        "lhs_split": lhs_split,
        "split_ok": lhs_split <= 1.0 + 1e-14,
        "lhs_concavity": lhs_conc,
        "concavity_ok": lhs_conc <= 1e-14,
    }


def mass_split_coefficient(t: float, s: float) -> float:
    """t^(1+s) + (1-t)^(1+s): equals 1 at the endpoints, 2^(-s) at t=1/2,
    and multiplying the (negative) soliton energy it gives the leading
    energy of a mass-(t, 1-t) two-bump configuration."""
    return t ** (1.0 + s) + (1.0 - t) ** (1.0 + s)


def elementary_power_inequality(a: float, b: float, p: float) -> float:
    """Slack of (a+b)^p >= a^p + b^p + (p-1)(a^(p-1) b + a b^(p-1)).

    Nonnegative for a, b >= 0 and p >= 2; zero when either argument
    vanishes or when p = 2.
    """
    if a < 0 or b < 0:
        raise ValueError("arguments must be nonnegative")
    if p < 2:
        raise ValueError(f"exponent must be >= 2, got {p}")
    return (a + b) ** p - a**p - b**p - (p - 1.0) * (a ** (p - 1.0) * b + a * b ** (p - 1.0))
