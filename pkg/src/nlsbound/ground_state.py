"""Radial soliton of the autonomous limit equation, by shooting.

Solves  w'' + (N-1)/r w' = lam*w - w^(p-1),  w'(0) = 0, w > 0, w -> 0,
by bisection on the initial height w(0).  Trajectories either cross zero
(initial height too large) or turn back upward while still positive
(too small); the homoclinic separating the two is the soliton.

The unstable far-field mode grows like e^(+sqrt(lam) r), so the ODE data
is only trusted out to where w has dropped to ~1e-6 of its peak; past a
fitted switch radius the profile continues with the linear far-field
solution  C * r^(1-N/2) * K_(N/2-1)(sqrt(lam) r)  (modified Bessel), whose
leading behaviour is the familiar c1 * e^(-sqrt(lam) r) * r^(-(N-1)/2).
All norms are quadratures of the dense ODE interpolant plus the analytic
tail, accurate to ~1e-10 relative.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import CubicSpline
from scipy.special import gamma as gamma_fn
from scipy.special import kve

from .scaling import ModelParams, compute_exponents, scaled_profile

__all__ = [
    "RadialProfile",
    "shoot_radial",
    "normalize_to_mass",
    "fit_decay_constant",
    "profile_to_text",
    "profile_from_text",
    "ShootingError",
]

# Fraction of the peak height at which the outward integration stops; past
# this point the e^(+sqrt(lam) r) contamination of the shooting trajectory
# would exceed ~1e-9 of the peak.
STOP_FRACTION = 1e-6
# Tail-fit window measured back from the stopping radius, in units of the
# decay length 1/sqrt(lam).  The right edge stays clear of the contaminated
# endpoint, the left edge clear of the nonlinear core.
FIT_BACK_LO = 4.0
FIT_BACK_HI = 1.2


class ShootingError(RuntimeError):
    pass


def sphere_area(n_dim: int) -> float:
    """Surface measure of the unit sphere in R^N (2, 2*pi, 4*pi, ...)."""
    return 2.0 * math.pi ** (n_dim / 2.0) / gamma_fn(n_dim / 2.0)


@dataclass
class RadialProfile:
    """Radial soliton w(r) with its integral data and far-field model.

    values/deriv hold w and w' on r_grid (trusted ODE region only);
    beyond r_switch the profile is C * r^(1-N/2) K_(N/2-1)(sqrt(lam) r)
    with C = tail_coef.  c_decay is the limit of
    w(r) e^(sqrt(lam) r) r^((N-1)/2), related to the tail coefficient by
    c_decay = tail_coef * sqrt(pi / (2 sqrt(lam))).
    """

    n_dim: int
    p: float
    lam: float
    r_grid: np.ndarray
    values: np.ndarray
    deriv: np.ndarray
    mass_sq: float
    grad_sq: float
    p_norm: float
    energy: float
    c_decay: float
    tail_coef: float
    r_switch: float
    _spline: CubicSpline | None = field(default=None, repr=False, compare=False)
    _dspline: CubicSpline | None = field(default=None, repr=False, compare=False)

    @property
    def sqrt_lam(self) -> float:
        return math.sqrt(self.lam)

    @property
    def peak(self) -> float:
        return float(self.values[0])

    def _ensure_splines(self):
        if self._spline is None:
            self._spline = CubicSpline(self.r_grid, self.values)
            self._dspline = CubicSpline(self.r_grid, self.deriv)

    def tail_value(self, r):
        nu = self.n_dim / 2.0 - 1.0
        x = self.sqrt_lam * np.asarray(r, dtype=float)
        return self.tail_coef * np.asarray(r, dtype=float) ** (1.0 - self.n_dim / 2.0) * kve(nu, x) * np.exp(-x)

    def __call__(self, r):
        """Vectorised w(r); spline on the ODE region, Bessel tail beyond."""
        self._ensure_splines()
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.empty_like(r)
        inner = r <= self.r_switch
        if inner.any():
            out[inner] = self._spline(r[inner])
        if (~inner).any():
            out[~inner] = self.tail_value(r[~inner])
        return float(out[0]) if scalar else out

    def eval_tilted(self, r, c: float):
        """w(r) * e^(c r) with the exponents combined analytically, so the
        product stays representable for c below the decay rate even where
        w alone underflows.  Used by the tilted interaction quadratures."""
        self._ensure_splines()
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.empty_like(r)
        inner = r <= self.r_switch
        if inner.any():
            out[inner] = self._spline(r[inner]) * np.exp(c * r[inner])
        if (~inner).any():
            rr = r[~inner]
            nu = self.n_dim / 2.0 - 1.0
            out[~inner] = (
                self.tail_coef
                * rr ** (1.0 - self.n_dim / 2.0)
                * kve(nu, self.sqrt_lam * rr)
                * np.exp((c - self.sqrt_lam) * rr)
            )
        return float(out[0]) if scalar else out

    def deriv_at(self, r):
        self._ensure_splines()
        r = np.asarray(r, dtype=float)
        scalar = r.ndim == 0
        r = np.atleast_1d(r)
        out = np.empty_like(r)
        inner = r <= self.r_switch
        if inner.any():
            out[inner] = self._dspline(r[inner])
        if (~inner).any():
            # d/dr [C r^a K_nu(b r)] with K_nu' = -(K_(nu-1)+K_(nu+1))/2
            rr = r[~inner]
            a = 1.0 - self.n_dim / 2.0
            b = self.sqrt_lam
            nu = self.n_dim / 2.0 - 1.0
            x = b * rr
            kv0 = kve(nu, x)
            kvm = kve(nu - 1.0, x)
            kvp = kve(nu + 1.0, x)
            out[~inner] = self.tail_coef * np.exp(-x) * (
                a * rr ** (a - 1.0) * kv0 - rr**a * b * 0.5 * (kvm + kvp)
            )
        return float(out[0]) if scalar else out


def _rhs(r, y, lam, p, n):
    w, dw = y
    nl = np.sign(w) * abs(w) ** (p - 1.0)
    if r < 1e-12:
        return (dw, (lam * w - nl) / n)
    return (dw, lam * w - nl - (n - 1.0) / r * dw)


def _series_start(a, lam, p, n, r0):
    # w(r) ~ a + r^2 (lam*a - a^(p-1)) / (2N) near the regular singular point
    c = (lam * a - a ** (p - 1.0)) / (2.0 * n)
    return [a + c * r0**2, 2.0 * c * r0]


def _classify(a, lam, p, n, r_max):
    """+1 if the trajectory crosses zero, -1 if it turns upward while
    positive, 0 if undecided within r_max."""
    r0 = 1e-8 / math.sqrt(lam)

    def ev_cross(r, y, *args):
        return y[0]

    ev_cross.terminal = True
    ev_cross.direction = -1

    def ev_turn(r, y, *args):
        return y[1]

    ev_turn.terminal = True
    ev_turn.direction = 1

    sol = solve_ivp(
        _rhs,
        (r0, r_max),
        _series_start(a, lam, p, n, r0),
        args=(lam, p, n),
        method="DOP853",
        rtol=1e-12,
        atol=1e-16,
        events=[ev_cross, ev_turn],
    )
    if sol.t_events[0].size:
        return 1
    if sol.t_events[1].size:
        return -1
    return 0


def shoot_radial(n_dim: int, p: float, lam: float, tol: float = 1e-13,
                 max_iter: int = 200) -> RadialProfile:
    """Compute the positive radial soliton for given (N, p, lam > 0)."""
    params = ModelParams(n_dim=n_dim, p=p, rho=1.0)  # validates the (N, p) window
    if lam <= 0:
        raise ValueError(f"multiplier must be positive, got {lam}")
    sl = math.sqrt(lam)
    r_max = 40.0 / sl

    # Bracket the initial height.  Below lam^(1/(p-2)) the trajectory starts
    # convex and can only turn upward; scan upward for a zero-crossing.
    lo = lam ** (1.0 / (p - 2.0))
    hi = 3.0 * lo
    tries = 0
    while _classify(hi, lam, p, n_dim, r_max) != 1:
        hi *= 2.0
        tries += 1
        if tries > 60:
            raise ShootingError(
                f"no zero-crossing trajectory found up to w(0)={hi} (N={n_dim}, p={p}, lam={lam})"
            )
    lo_probe = lo * (1.0 + 1e-7)
    tries = 0
    while _classify(lo_probe, lam, p, n_dim, r_max) != -1:
        lo_probe *= 1.01
        tries += 1
        if tries > 2000 or lo_probe >= hi:
            raise ShootingError(
                f"bisection bracket failure in [{lo}, {hi}] (N={n_dim}, p={p}, lam={lam})"
            )
    lo = lo_probe

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break  # bracket at machine resolution
        verdict = _classify(mid, lam, p, n_dim, r_max)
        if verdict == 1:
            hi = mid
        elif verdict == -1:
            lo = mid
        else:
            raise ShootingError(
                f"trajectory from w(0)={mid} undecided within r={r_max}; "
                f"increase the integration radius"
            )
    w0 = 0.5 * (lo + hi)
    return _finalize(w0, lam, p, n_dim)


def _finalize(w0, lam, p, n, grid_points: int = 2500) -> RadialProfile:
    """Integrate the converged trajectory, fit the far field, quadrature
    the norms."""
    sl = math.sqrt(lam)
    r0 = 1e-8 / sl

    def ev_small(r, y, *args):
        return abs(y[0]) - STOP_FRACTION * w0

    ev_small.terminal = True

    sol = solve_ivp(
        _rhs,
        (r0, 60.0 / sl),
        _series_start(w0, lam, p, n, r0),
        args=(lam, p, n),
        method="DOP853",
        rtol=1e-13,
        atol=1e-16,
        dense_output=True,
        events=[ev_small],
    )
    if not sol.t_events[0].size:
        raise ShootingError("soliton trajectory failed to decay within the maximum radius")
    r_stop = sol.t[-1]

    # Far-field coefficient: median of w / (r^(1-N/2) K_nu(sqrt(lam) r)) over
    # a window safely inside [core, contaminated endpoint].
    fit_lo = r_stop - FIT_BACK_LO / sl
    fit_hi = r_stop - FIT_BACK_HI / sl
    rr = np.linspace(fit_lo, fit_hi, 60)
    wv = sol.sol(rr)[0]
    nu = n / 2.0 - 1.0
    basis = rr ** (1.0 - n / 2.0) * kve(nu, sl * rr) * np.exp(-sl * rr)
    coef = wv / basis
    tail_coef = float(np.median(coef))
    r_switch = fit_hi
    c_decay = tail_coef * math.sqrt(math.pi / (2.0 * sl))

    area = sphere_area(n)

    def w_of(r):
        return sol.sol(r)[0]

    def dw_of(r):
        return sol.sol(r)[1]

    def tail(r):
        return tail_coef * r ** (1.0 - n / 2.0) * kve(nu, sl * r) * np.exp(-sl * r)

    def dtail(r):
        a = 1.0 - n / 2.0
        x = sl * r
        return tail_coef * np.exp(-x) * (
            a * r ** (a - 1.0) * kve(nu, x)
            - r**a * sl * 0.5 * (kve(nu - 1.0, x) + kve(nu + 1.0, x))
        )

    def radial_integral(f, ftail, power):
        main = quad(lambda r: f(r) ** power * r ** (n - 1.0), 0.0, r_switch,
                    limit=400, epsabs=1e-14, epsrel=1e-12)[0]
        tail_part = quad(lambda r: ftail(r) ** power * r ** (n - 1.0), r_switch,
                         r_switch + 200.0 / sl, limit=200, epsabs=1e-16)[0]
        return area * (main + tail_part)

    mass_sq = radial_integral(w_of, tail, 2)
    grad_sq = radial_integral(dw_of, dtail, 2)
    p_norm = area * (
        quad(lambda r: abs(w_of(r)) ** p * r ** (n - 1.0), 0.0, r_switch,
             limit=400, epsabs=1e-14, epsrel=1e-12)[0]
        + quad(lambda r: tail(r) ** p * r ** (n - 1.0), r_switch,
               r_switch + 200.0 / sl, limit=200, epsabs=1e-16)[0]
    )
    energy = 0.5 * grad_sq - p_norm / p

    r_grid = np.linspace(0.0, r_switch, grid_points)
    ys = sol.sol(r_grid[1:])
    values = np.concatenate(([w0], ys[0]))
    deriv = np.concatenate(([0.0], ys[1]))

    return RadialProfile(
        n_dim=n,
        p=p,
        lam=lam,
        r_grid=r_grid,
        values=values,
        deriv=deriv,
        mass_sq=mass_sq,
        grad_sq=grad_sq,
        p_norm=p_norm,
        energy=energy,
        c_decay=c_decay,
        tail_coef=tail_coef,
        r_switch=r_switch,
    )


def normalize_to_mass(n_dim: int, p: float, rho: float,
                      base: RadialProfile | None = None) -> tuple[float, RadialProfile]:
    """Multiplier lam and soliton with |w|_2 = rho.

    Uses the exact one-parameter rescaling from a single unit-multiplier
    shot: mass^2 scales like lam^(2/(p-2) - N/2), which is positive and
    bounded away from zero in the whole subcritical window, so the target
    multiplier is solved in closed form.
    """
    params = ModelParams(n_dim=n_dim, p=p, rho=rho)
    if base is None:
        base = shoot_radial(n_dim, p, 1.0)
    k = rho**2 / base.mass_sq
    prof = scaled_profile(base, k)
    s = compute_exponents(params).s
    lam = base.lam * k**s
    return lam, prof


def fit_decay_constant(profile: RadialProfile, rel_tol: float = 0.02) -> tuple[float, dict]:
    """Plateau value c1 of w(r) e^(sqrt(lam) r) r^((N-1)/2) over the tail
    window, with the matching derivative check (ratio -> -sqrt(lam)).

    Returns (c1, report); raises if no plateau forms at rel_tol.
    """
    sl = profile.sqrt_lam
    r_hi = profile.r_switch
    r_lo = r_hi - (FIT_BACK_LO - FIT_BACK_HI) / sl
    rr = np.linspace(r_lo, r_hi, 80)
    wv = profile(rr)
    scaled = wv * np.exp(sl * rr) * rr ** ((profile.n_dim - 1.0) / 2.0)
    c1 = float(np.median(scaled))
    spread = float((scaled.max() - scaled.min()) / abs(c1))
    dv = profile.deriv_at(rr)
    dscaled = dv * np.exp(sl * rr) * rr ** ((profile.n_dim - 1.0) / 2.0)
    deriv_ratio = float(np.median(dscaled) / c1)
    report = {
        "window": (float(r_lo), float(r_hi)),
        "plateau_spread": spread,
        "deriv_over_value": deriv_ratio,
        "deriv_target": -sl,
        "tail_constant": profile.c_decay,
    }
    if spread > rel_tol:
        raise ShootingError(
            f"no decay plateau: relative spread {spread:.3g} over window {report['window']}"
        )
    return c1, report


def profile_to_text(profile: RadialProfile) -> str:
    """Columnar (r, w) dump with a header carrying the scalar data."""
    buf = io.StringIO()
    buf.write(
        "# n_dim=%d p=%.17g lam=%.17g mass_sq=%.17g grad_sq=%.17g p_norm=%.17g "
        "energy=%.17g c_decay=%.17g tail_coef=%.17g r_switch=%.17g\n"
        % (
            profile.n_dim,
            profile.p,
            profile.lam,
            profile.mass_sq,
            profile.grad_sq,
            profile.p_norm,
            profile.energy,
            profile.c_decay,
            profile.tail_coef,
            profile.r_switch,
        )
    )
    buf.write("# r w dw\n")
    for r, w, dw in zip(profile.r_grid, profile.values, profile.deriv):
        buf.write("%.17g %.17g %.17g\n" % (r, w, dw))
    return buf.getvalue()


def profile_from_text(text: str) -> RadialProfile:
    lines = text.strip().splitlines()
    header = lines[0].lstrip("# ").split()
    meta = dict(kv.split("=") for kv in header)
    data = np.array([[float(x) for x in ln.split()] for ln in lines[2:]])
    return RadialProfile(
        n_dim=int(meta["n_dim"]),
        p=float(meta["p"]),
        lam=float(meta["lam"]),
        r_grid=data[:, 0],
        values=data[:, 1],
        deriv=data[:, 2],
        mass_sq=float(meta["mass_sq"]),
        grad_sq=float(meta["grad_sq"]),
        p_norm=float(meta["p_norm"]),
        energy=float(meta["energy"]),
        c_decay=float(meta["c_decay"]),
        tail_coef=float(meta["tail_coef"]),
        r_switch=float(meta["r_switch"]),
    )
