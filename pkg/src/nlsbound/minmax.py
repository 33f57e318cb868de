"""Min-max machinery: test surfaces, energy landmarks, barycenter roots,
and the constrained saddle search.

The test surface places a mass-t bump at r*z (z on the sphere of radius 2
around e1) and a mass-(1-t) bump at r*e1, cuts off over the obstacle and
normalises the mass.  Its energy landscape carries the landmark values

    L_r = max over the t=1 rim,      A_r = max over the whole surface,
    C0  = inf of E over { |u|_2 = rho, barycenter = 0 },

which the theory orders as  m < L_r < C0 <= A_r < 2^(-s) m  for large
separations.  The solver looks for a constrained critical point from the
zero-barycenter witness in three phases: constrained energy descent along
the mass sphere (the numerical surrogate of the deformation flow), a
short least-squares descent of the Euler-Lagrange residual, and a
Newton-Krylov polish of the augmented system.  Acceptance requires a
small residual, energy inside the compactness window with a 3*eta_h
buffer (eta_h = measured grid error of the soliton energy), a positive
multiplier and constant sign; everything else is classified by the
escape diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.optimize import NoConvergence, minimize, newton_krylov

from .domain import ExteriorDomainSpec, PotentialSpec, cutoff_theta_radial
from .fields import (
    Grid,
    GridField,
    barycenter,
    el_residual,
    energy,
    field_from_profile,
    gradient_energy,
    lagrange_multiplier,
    laplacian,
    local_average,
    make_grid,
    project_mass,
    sign_classify,
)
from .ground_state import RadialProfile
from .scaling import ModelParams, compute_exponents, scaled_profile

__all__ = [
    "TestSurface",
    "MinMaxReport",
    "SolveReport",
    "sigma_mesh",
    "build_surface",
    "grid_energy_error",
    "landmarks",
    "estimate_c0",
    "find_zero_barycenter",
    "saddle_search",
    "ps_escape_diagnostic",
    "noncompact_witnesses",
    "one_dim_whole_line",
    "half_line_run",
]


# ---------------------------------------------------------------------------
# Sigma mesh and surface construction


def sigma_mesh(n_dim: int, count: int = 64) -> np.ndarray:
    """Points on the sphere of radius 2 centered at e1 (shape (k, N)).

    N=1 gives the two points {-1, 3}; N=2 uniform angles; N=3 a Fibonacci
    lattice (deterministic, nearly uniform).  The mesh is used only to
    scan the topology, so near-uniformity is all that matters.
    """
    e1 = np.zeros(n_dim)
    e1[0] = 1.0
    if n_dim == 1:
        return np.array([[-1.0], [3.0]])
    if n_dim == 2:
        phi = 2.0 * math.pi * np.arange(count) / count
        return e1 + 2.0 * np.stack([np.cos(phi), np.sin(phi)], axis=1)
    if n_dim == 3:
        k = np.arange(count, dtype=float)
        golden = (1.0 + math.sqrt(5.0)) / 2.0
        zc = 1.0 - 2.0 * (k + 0.5) / count
        rr = np.sqrt(1.0 - zc**2)
        ang = 2.0 * math.pi * k / golden
        pts = np.stack([np.cos(ang) * rr, np.sin(ang) * rr, zc], axis=1)
        return e1 + 2.0 * pts
    raise ValueError("sigma mesh implemented for N <= 3")


def theta_cutoff_on(grid: Grid, domain: ExteriorDomainSpec) -> np.ndarray | None:
    if domain.whole_space:
        return None
    rr = np.sqrt(grid.radius_sq_mesh(np.zeros(grid.n_dim)))
    return cutoff_theta_radial(rr, domain)


def _potential_grid(potential, grid: Grid) -> np.ndarray | None:
    """Accepts None, a PotentialSpec, or a precomputed array on the grid."""
    if potential is None:
        return None
    if isinstance(potential, np.ndarray):
        return potential
    if potential.is_zero:
        return None
    return potential.on_grid(grid)


@dataclass
class TestSurface:
    """Two-bump test fields over (t_grid x sigma_mesh) with their energies."""

    r: float
    params: ModelParams
    grid: Grid
    domain: ExteriorDomainSpec
    t_grid: np.ndarray
    zs: np.ndarray
    energy_table: np.ndarray  # shape (len(t_grid), len(zs))
    profiles: dict  # t -> RadialProfile at mass^2 = t rho^2
    potential_grid: np.ndarray | None
    theta_grid: np.ndarray | None
    warnings: list

    def field_at(self, t: float, z: np.ndarray) -> GridField:
        return two_bump_field(
            self.grid, self.params, self.profiles, t, self.r, np.asarray(z, float),
            theta=self.theta_grid,
        )


def _profile_for(profiles: dict, base: RadialProfile, k: float) -> RadialProfile:
    key = round(k, 12)
    if key not in profiles:
        profiles[key] = scaled_profile(base, k)
    return profiles[key]


def two_bump_field(grid: Grid, params: ModelParams, profiles: dict, t: float,
                   r: float, z: np.ndarray, theta: np.ndarray | None) -> GridField:
    """theta * [w_(t rho^2)(x - r z) + w_((1-t) rho^2)(x - r e1)],
    mass-normalised on the grid.  t = 0 or 1 degenerates to one bump."""
    base = profiles["base"]
    e1 = np.zeros(grid.n_dim)
    e1[0] = 1.0
    vals = np.zeros(grid.shape)
    if t > 0.0:
        pt = _profile_for(profiles, base, t * params.rho**2 / base.mass_sq)
        vals = vals + pt(np.sqrt(grid.radius_sq_mesh(r * z)))
    if t < 1.0:
        pb = _profile_for(profiles, base, (1.0 - t) * params.rho**2 / base.mass_sq)
        vals = vals + pb(np.sqrt(grid.radius_sq_mesh(r * e1)))
    if theta is not None:
        vals = vals * theta
    u = GridField(grid=grid, values=vals, params=params)
    return project_mass(u, params.rho)


def build_surface(r: float, domain: ExteriorDomainSpec, potential: PotentialSpec | None,
                  params: ModelParams, base: RadialProfile, grid: Grid,
                  t_grid=None, z_count: int = 64) -> TestSurface:
    """Energy table of the two-bump surface at separation parameter r."""
    if t_grid is None:
        t_grid = np.linspace(0.0, 1.0, 21)
    t_grid = np.asarray(t_grid, dtype=float)
    zs = sigma_mesh(grid.n_dim, z_count)
    theta = theta_cutoff_on(grid, domain)
    vgrid = _potential_grid(potential, grid)
    profiles = {"base": base}
    warnings = []
    if not domain.whole_space:
        lam_rho = base.lam * (params.rho**2 / base.mass_sq) ** compute_exponents(params).s
        if r < domain.cutoff_R + 2.0 / math.sqrt(lam_rho):
            warnings.append(
                f"separation r={r} is within the cutoff+core range; obstacle "
                "overlap dominates the surface energies"
            )
    table = np.empty((len(t_grid), len(zs)))
    for i, t in enumerate(t_grid):
        for j, z in enumerate(zs):
            if t == 0.0 and j > 0:
                # the t=0 field is the single bump at r*e1: z-independent
                table[i, j] = table[i, 0]
                continue
            u = two_bump_field(grid, params, profiles, float(t), r, z, theta)
            table[i, j] = energy(u, vgrid).total
    return TestSurface(
        r=r, params=params, grid=grid, domain=domain, t_grid=t_grid, zs=zs,
        energy_table=table, profiles=profiles, potential_grid=vgrid,
        theta_grid=theta, warnings=warnings,
    )


def _free_box(grid: Grid) -> Grid:
    """The same box and spacing without the obstacle mask: reference
    energies of the limit problem are whole-space quantities and must not
    feel the obstacle."""
    if grid.obstacle_radius == 0.0:
        return grid
    return make_grid(grid.half_widths, grid.h)


def reference_soliton_energy(grid: Grid, profile: RadialProfile,
                             params: ModelParams, center=None) -> float:
    """m_h: the soliton energy evaluated on the (unmasked) grid; the
    grid-consistent reference for every landmark and window level."""
    free = _free_box(grid)
    if center is None:
        center = np.zeros(free.n_dim)
    u = field_from_profile(free, profile, center, params)
    return energy(u).total


def grid_energy_error(grid: Grid, profile: RadialProfile, params: ModelParams,
                      center=None) -> float:
    """eta_h: |E_h(interpolated soliton) - m| on this box, with the bump
    placed where the surface actually puts its bumps (defaults to the
    origin; pass center = r*e1 for surface-consistent placement)."""
    return abs(reference_soliton_energy(grid, profile, params, center)
               - profile.energy)


# ---------------------------------------------------------------------------
# Landmarks


@dataclass
class MinMaxReport:
    m: float          # grid-consistent soliton energy m_h
    m_ode: float      # the radial-quadrature value, for reference
    window_top: float  # 2^(-s) m_h
    l_r: float
    a_r: float
    c0: float | None
    eta_h: float
    margins: dict
    ordering_ok: bool
    failures: list


def landmarks(surface: TestSurface, c0: float | None = None,
              eta_h: float | None = None, refine: bool = True) -> MinMaxReport:
    """Landmark values and the ordering check with explicit margins.

    All landmarks are grid quantities, so the reference level is the
    grid-evaluated soliton energy m_h (placed like the t=0 bump); the
    deviation |m_h - m| is exactly eta_h and would otherwise bias every
    margin by the discretization error it is being compared against.
    A failed inequality is an experiment outcome (reported with its
    margin), not an error.
    """
    params = surface.params
    base = surface.profiles["base"]
    prof_rho = _profile_for(surface.profiles, base, params.rho**2 / base.mass_sq)
    m_ode = prof_rho.energy
    s = compute_exponents(params).s

    e1 = np.zeros(surface.grid.n_dim)
    e1[0] = 1.0
    m = reference_soliton_energy(surface.grid, prof_rho, params,
                                 center=surface.r * e1)
    if eta_h is None:
        eta_h = abs(m - m_ode)
    top = 2.0 ** (-s) * m

    tbl = surface.energy_table
    i_one = int(np.argmin(np.abs(surface.t_grid - 1.0)))
    l_r = float(tbl[i_one].max())
    a_r = float(tbl.max())

    if refine:
        # quadratic refinement of the global max along t at the argmax z
        i, j = np.unravel_index(int(np.argmax(tbl)), tbl.shape)
        if 0 < i < len(surface.t_grid) - 1:
            t0, t1, t2 = surface.t_grid[i - 1 : i + 2]
            f0, f1, f2 = tbl[i - 1 : i + 2, j]
            denom = (f0 - 2.0 * f1 + f2)
            if denom < 0.0:
                t_star = t1 - 0.5 * (t2 - t1) * (f2 - f0) / denom
                t_star = float(np.clip(t_star, t0, t2))
                u = surface.field_at(t_star, surface.zs[j])
                a_r = max(a_r, energy(u, surface.potential_grid).total)

    margins = {
        "m_below_l": l_r - m,
        "l_below_c0": None if c0 is None else c0 - l_r,
        "c0_below_a": None if c0 is None else a_r - c0,
        "a_below_top": top - a_r,
    }
    bar = 3.0 * eta_h
    failures = []
    if not margins["m_below_l"] > bar:
        failures.append("m < L_r")
    if c0 is not None:
        if not margins["l_below_c0"] > bar:
            failures.append("L_r < C0")
        if not margins["c0_below_a"] >= -bar:
            failures.append("C0 <= A_r")
    if not margins["a_below_top"] > bar:
        failures.append("A_r < 2^-s m")
    return MinMaxReport(
        m=m, m_ode=m_ode, window_top=top, l_r=l_r, a_r=a_r, c0=c0, eta_h=eta_h,
        margins=margins, ordering_ok=not failures, failures=failures,
    )


# ---------------------------------------------------------------------------
# Zero-barycenter witness


def beta_table(surface: TestSurface) -> np.ndarray:
    out = np.empty((len(surface.t_grid), len(surface.zs), surface.grid.n_dim))
    for i, t in enumerate(surface.t_grid):
        for j, z in enumerate(surface.zs):
            u = surface.field_at(float(t), z)
            out[i, j] = barycenter(u)
    return out


def find_zero_barycenter(surface: TestSurface, betas: np.ndarray | None = None):
    """Witness (t, z) with |barycenter(psi_r[t,z])| below the grid spacing.

    Scans the (t, z) table for the smallest |beta|, checks that the
    surrounding cell's beta vectors surround the origin (the discrete
    degree signature), then polishes with Nelder-Mead on |beta|^2.
    """
    if betas is None:
        betas = beta_table(surface)
    norms = np.linalg.norm(betas, axis=-1)
    i, j = np.unravel_index(int(np.argmin(norms)), norms.shape)
    t0 = float(surface.t_grid[i])
    covered = _cell_covers_zero(betas, i, j)
    if not covered and len(surface.t_grid) > 2:
        # mesh too coarse around the minimum: refine the local t-window once
        tlo = surface.t_grid[max(i - 1, 0)]
        thi = surface.t_grid[min(i + 1, len(surface.t_grid) - 1)]
        t_fine = np.linspace(tlo, thi, 7)
        local = np.empty((len(t_fine), len(surface.zs), surface.grid.n_dim))
        for ii, tt in enumerate(t_fine):
            for jj, zz in enumerate(surface.zs):
                local[ii, jj] = barycenter(surface.field_at(float(tt), zz))
        nloc = np.linalg.norm(local, axis=-1)
        ii, jj = np.unravel_index(int(np.argmin(nloc)), nloc.shape)
        t0 = float(t_fine[ii])
        i, j = int(np.argmin(np.abs(surface.t_grid - t0))), jj
        covered = _cell_covers_zero(local, ii, jj)

    n = surface.grid.n_dim
    zs = surface.zs

    if n == 1:
        z = zs[j]

        def bfun(t):
            return barycenter(surface.field_at(float(np.clip(t, 0, 1)), z))[0]

        lo, hi = max(t0 - 0.1, 0.0), min(t0 + 0.1, 1.0)
        blo, bhi = bfun(lo), bfun(hi)
        grow = 0
        while blo * bhi > 0 and grow < 6:
            lo, hi = max(lo - 0.1, 0.0), min(hi + 0.1, 1.0)
            blo, bhi = bfun(lo), bfun(hi)
            grow += 1
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            bm = bfun(mid)
            if blo * bm <= 0:
                hi, bhi = mid, bm
            else:
                lo, blo = mid, bm
            if hi - lo < 1e-10:
                break
        t_star = 0.5 * (lo + hi)
        u = surface.field_at(t_star, z)
        return {"t": t_star, "z": z, "beta": barycenter(u), "field": u,
                "cell_covered": covered}

    # N >= 2: parametrise z on the sphere around e1 and minimise |beta|^2
    e1 = np.zeros(n)
    e1[0] = 1.0

    if n == 2:
        phi0 = math.atan2(zs[j][1] - 0.0, zs[j][0] - 1.0)

        def z_of(q):
            return e1 + 2.0 * np.array([math.cos(q[1]), math.sin(q[1])])

        x0 = np.array([t0, phi0])
    else:
        d0 = (zs[j] - e1) / 2.0
        th0 = math.acos(np.clip(d0[2], -1, 1))
        ph0 = math.atan2(d0[1], d0[0])

        def z_of(q):
            th, ph = q[1], q[2]
            return e1 + 2.0 * np.array(
                [math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)]
            )

        x0 = np.array([t0, th0, ph0])

    def objective(q):
        t = float(np.clip(q[0], 0.0, 1.0))
        b = barycenter(surface.field_at(t, z_of(q)))
        return float(np.dot(b, b))

    res = minimize(objective, x0, method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-14, "maxiter": 400})
    t_star = float(np.clip(res.x[0], 0.0, 1.0))
    z_star = z_of(res.x)
    u = surface.field_at(t_star, z_star)
    b = barycenter(u)
    return {"t": t_star, "z": z_star, "beta": b, "field": u, "cell_covered": covered}


def _cell_covers_zero(betas: np.ndarray, i: int, j: int) -> bool:
    """Whether the convex hull of the beta vectors in the mesh cells
    around (i, j) contains the origin (sign-covering: a necessary degree
    signature for a nearby root)."""
    ni, nj, n = betas.shape
    pts = []
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            ii = min(max(i + di, 0), ni - 1)
            jj = (j + dj) % nj
            pts.append(betas[ii, jj])
    pts = np.array(pts)
    if n == 1:
        return bool(pts.min() <= 0.0 <= pts.max())
    # origin in convex hull iff no separating direction; test a fan of
    # directions (cheap and robust at this mesh scale)
    angs = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    if n == 2:
        dirs = np.stack([np.cos(angs), np.sin(angs)], axis=1)
    else:
        dirs = sigma_mesh(3, 128) - np.array([1.0, 0.0, 0.0])
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    proj = pts @ dirs.T
    return bool((proj.max(axis=0) >= 0).all())


# ---------------------------------------------------------------------------
# C0 estimation: penalised minimisation with multistart


def _beta_and_penalty_grad(u: GridField, radius: float = 1.0):
    """|beta(u)|^2 and its approximate gradient w.r.t. the field values
    (threshold set and maximum frozen, which is enough for a penalty)."""
    g = u.grid
    mu = local_average(u, radius)
    mmax = mu.max()
    hat = np.maximum(mu - 0.5 * mmax, 0.0)
    total = hat.sum()
    bet = np.empty(g.n_dim)
    for i, ax in enumerate(g.axes()):
        sh = [1] * g.n_dim
        sh[i] = -1
        bet[i] = float((hat * ax.reshape(sh)).sum() / total)
    active = (mu > 0.5 * mmax).astype(float)
    from scipy.signal import fftconvolve

    from .fields import _ball_stencil

    st = _ball_stencil(g, radius)
    ball_vol = math.pi ** (g.n_dim / 2.0) / math.gamma(g.n_dim / 2.0 + 1.0) * radius**g.n_dim
    grad = np.zeros(g.shape)
    for i, ax in enumerate(g.axes()):
        sh = [1] * g.n_dim
        sh[i] = -1
        weighted = active * (ax.reshape(sh) - bet[i])
        kern = fftconvolve(weighted, st, mode="same") * (g.cell_volume() / ball_vol)
        grad += 2.0 * bet[i] * kern
    grad = grad * np.sign(u.values) / (total * g.cell_volume())
    return float(np.dot(bet, bet)), grad


def estimate_c0(params: ModelParams, potential: PotentialSpec | None,
                domain: ExteriorDomainSpec, grid: Grid, base: RadialProfile,
                seeds=None, witness: GridField | None = None,
                penalty_schedule=(1e3, 1e5), maxiter: int = 300) -> dict:
    """Estimate C0 = inf { E(u) : |u|_2 = rho, beta(u) = 0 }.

    Penalised minimisation E + mu_pen |beta|^2 with continuation in
    mu_pen, multistarted from symmetric two-bump configurations, the
    centered soliton, and (when given) the zero-barycenter witness.
    Returns the best feasible value (|beta| < h) and its minimiser.
    """
    rho = params.rho
    theta = theta_cutoff_on(grid, domain)
    vgrid = _potential_grid(potential, grid)
    profiles = {"base": base}
    e1 = np.zeros(grid.n_dim)
    e1[0] = 1.0

    if seeds is None:
        seeds = []
        hw = min(grid.half_widths)
        for frac in (0.3,):
            seeds.append(two_bump_field(grid, params, profiles, 0.5, frac * hw,
                                        -e1, theta))
        prof_rho = _profile_for(profiles, base, rho**2 / base.mass_sq)
        seeds.append(field_from_profile(grid, prof_rho, np.zeros(grid.n_dim),
                                        params, cutoff=None if theta is None else (lambda g: theta)))
    if witness is not None:
        seeds = [witness] + list(seeds)

    mask = grid.mask
    vol = grid.cell_volume()
    p = params.p

    def pack(u):
        return u.values[mask]

    def unpack(x):
        vals = np.zeros(grid.shape)
        vals[mask] = x
        return GridField(grid=grid, values=vals, params=params)

    best = None
    for seed in seeds:
        x = pack(project_mass(seed, rho))
        for mu_pen in penalty_schedule:

            def fun(xv):
                nrm = math.sqrt(float(np.dot(xv, xv)) * vol)
                if nrm == 0.0:
                    return 1e30, np.zeros_like(xv)
                u = unpack(xv * (rho / nrm))
                rep = energy(u, vgrid)
                b2, bgrad = _beta_and_penalty_grad(u)
                val = rep.total + mu_pen * b2
                ge = -laplacian(u) - np.sign(u.values) * np.abs(u.values) ** (p - 1.0)
                if vgrid is not None:
                    ge = ge + vgrid * u.values
                ge = (ge + mu_pen * bgrad) * vol
                ge[~mask] = 0.0
                gflat = ge[mask]
                uflat = u.values[mask]
                tang = gflat - (float(np.dot(gflat, uflat)) * vol / rho**2) * uflat
                return val, tang * (rho / nrm)

            res = minimize(fun, x, jac=True, method="L-BFGS-B",
                           options={"maxiter": maxiter, "maxcor": 12})
            x = res.x
        nrm = math.sqrt(float(np.dot(x, x)) * vol)
        u = unpack(x * (rho / nrm))
        rep = energy(u, vgrid)
        bet = barycenter(u)
        cand = {
            "value": rep.total,
            "beta_norm": float(np.linalg.norm(bet)),
            "field": u,
            "feasible": float(np.linalg.norm(bet)) < grid.h,
        }
        if cand["feasible"] and (best is None or cand["value"] < best["value"]):
            best = cand
    if best is None:
        best = {"value": math.nan, "beta_norm": math.nan, "field": None,
                "feasible": False}
    return best


# ---------------------------------------------------------------------------
# Saddle search


@dataclass
class SolveReport:
    field: GridField | None
    lam: float
    energy: float
    residual_l2: float
    residual_dual: float
    sign_class: str
    in_window: bool
    window: tuple
    iterations: int
    history: list
    outcome: str
    drift: float = 0.0


def _energy_objective(params: ModelParams, grid: Grid, vgrid, rho: float):
    """Constrained energy on the mass sphere with its exact gradient in
    the unnormalised parametrisation u = rho v / |v|.  Descending this is
    the numerical surrogate of the deformation flow."""
    mask = grid.mask
    vol = grid.cell_volume()
    p = params.p

    def fg(xv):
        nrm = math.sqrt(float(np.dot(xv, xv)) * vol)
        vals = np.zeros(grid.shape)
        vals[mask] = xv * (rho / nrm)
        u = GridField(grid=grid, values=vals, params=params)
        v = u.values
        ge = -laplacian(u) - np.sign(v) * np.abs(v) ** (p - 1.0)
        if vgrid is not None:
            ge = ge + vgrid * v
        ge[~mask] = 0.0
        val = energy(u, vgrid).total
        g = ge[mask] * vol
        uflat = v[mask]
        tang = g - (float(np.dot(g, uflat)) * vol / rho**2) * uflat
        return val, tang * (rho / nrm), u

    return fg


def _residual_objective(params: ModelParams, grid: Grid, vgrid, rho: float):
    """Half squared L2 norm of the Euler-Lagrange residual on the mass
    sphere, with its exact gradient in the unnormalised parametrisation
    u = rho v / |v|."""
    mask = grid.mask
    vol = grid.cell_volume()
    p = params.p

    def fg(xv):
        nrm2 = float(np.dot(xv, xv)) * vol
        nrm = math.sqrt(nrm2)
        vals = np.zeros(grid.shape)
        vals[mask] = xv * (rho / nrm)
        u = GridField(grid=grid, values=vals, params=params)
        v = u.values
        lap = laplacian(u)
        absu = np.abs(v)
        nl = np.sign(v) * absu ** (p - 1.0)
        g2 = gradient_energy(u)
        pn = float(np.sum(absu**p)) * vol
        w2 = 0.0 if vgrid is None else float(np.sum(vgrid * v * v)) * vol
        lam = (pn - g2 - w2) / rho**2
        F = -lap + lam * v - nl
        if vgrid is not None:
            F = F + vgrid * v
        F[~mask] = 0.0
        phi = 0.5 * float(np.sum(F * F)) * vol

        # J^T F: symmetric second-order part + multiplier coupling
        uF = GridField(grid=grid, values=F, params=params)
        JtF = -laplacian(uF) + lam * F - (p - 1.0) * absu ** (p - 2.0) * F
        if vgrid is not None:
            JtF = JtF + vgrid * F
        inner_uF = float(np.sum(v * F)) * vol
        dlam = p * nl + 2.0 * lap
        if vgrid is not None:
            dlam = dlam - 2.0 * vgrid * v
        JtF = JtF + (inner_uF / rho**2) * dlam
        JtF[~mask] = 0.0
        g = JtF[mask] * vol
        # project to the sphere tangent and pull back to v
        uflat = v[mask]
        tang = g - (float(np.dot(g, uflat)) * vol / rho**2) * uflat
        return phi, tang * (rho / nrm), u, lam, F

    return fg


def saddle_search(seed: GridField, params: ModelParams,
                  potential: PotentialSpec | None, domain: ExteriorDomainSpec,
                  base: RadialProfile, tol: float = 1e-5,
                  max_descent: int = 600, newton_iters: int = 40,
                  eta_h: float | None = None,
                  track_history: bool = True) -> SolveReport:
    """Constrained critical-point search from a seed field.

    Phase 1 descends the constrained energy along the mass sphere (the
    numerical surrogate of the deformation flow, multiplier implicit in
    the tangent projection); phase 2 descends the squared Euler-Lagrange
    residual to center the near-solution; phase 3 polishes with
    Newton-Krylov on the augmented system (field equation + mass
    constraint, multiplier refreshed from the field).  The result is
    accepted only if the residual is below tol, the energy sits inside
    the compactness window with a 3*eta_h buffer (all levels measured
    grid-consistently), the multiplier is positive and the sign is
    constant; otherwise the report carries the escape diagnostics.
    """
    grid = seed.grid
    rho = params.rho
    vgrid = _potential_grid(potential, grid)
    prof_rho = scaled_profile(base, rho**2 / base.mass_sq)
    m_h = reference_soliton_energy(grid, prof_rho, params)
    s = compute_exponents(params).s
    if eta_h is None:
        eta_h = abs(m_h - prof_rho.energy)
    window = (m_h + 3.0 * eta_h, 2.0 ** (-s) * m_h - 3.0 * eta_h)

    fg_energy = _energy_objective(params, grid, vgrid, rho)
    fg_resid = _residual_objective(params, grid, vgrid, rho)
    mask = grid.mask
    vol = grid.cell_volume()

    x = project_mass(seed, rho).values[mask]
    history = []
    beta0 = barycenter(seed)

    state = {"it": 0}

    def log_point(u, lam, resid_l2):
        history.append(
            {
                "iter": state["it"],
                "energy": energy(u, vgrid).total,
                "residual_l2": resid_l2,
                "lambda": lam,
                "beta": barycenter(u).tolist(),
            }
        )

    def e_objective(xv):
        val, g, u = fg_energy(xv)
        if track_history and state["it"] % 20 == 0:
            log_point(u, lagrange_multiplier(u, vgrid), math.nan)
        state["it"] += 1
        return val, g

    res = minimize(e_objective, x, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_descent, "maxcor": 20,
                            "ftol": 1e-16, "gtol": 1e-12})
    x = res.x

    def r_objective(xv):
        phi, g, u, lam, F = fg_resid(xv)
        if track_history and state["it"] % 20 == 0:
            log_point(u, lam, math.sqrt(2.0 * phi))
        state["it"] += 1
        return phi, g

    res = minimize(r_objective, x, jac=True, method="L-BFGS-B",
                   options={"maxiter": max_descent // 2, "maxcor": 20,
                            "ftol": 1e-18, "gtol": 1e-14})
    x = res.x

    # Newton-Krylov polish on (residual field, mass constraint)
    def augmented(xl):
        vals = np.zeros(grid.shape)
        vals[mask] = xl[:-1]
        lam = xl[-1]
        u = GridField(grid=grid, values=vals, params=params)
        v = u.values
        F = -laplacian(u) + lam * v - np.sign(v) * np.abs(v) ** (params.p - 1.0)
        if vgrid is not None:
            F = F + vgrid * v
        F[~mask] = 0.0
        mass_res = 0.5 * (float(np.sum(v * v)) * vol - rho**2)
        return np.concatenate([F[mask], [mass_res]])

    nrm = math.sqrt(float(np.dot(x, x)) * vol)
    x = x * (rho / nrm)
    vals = np.zeros(grid.shape)
    vals[mask] = x
    u = GridField(grid=grid, values=vals, params=params)
    lam = lagrange_multiplier(u, vgrid)
    x_aug = np.concatenate([x, [lam]])
    try:
        with np.errstate(invalid="ignore"):
            x_aug = newton_krylov(augmented, x_aug, f_tol=tol * 1e-2,
                                  maxiter=newton_iters, method="lgmres", verbose=False)
        polished = True
    except (NoConvergence, ValueError, np.linalg.LinAlgError):
        polished = False

    vals = np.zeros(grid.shape)
    vals[mask] = x_aug[:-1]
    u = GridField(grid=grid, values=vals, params=params)
    lam = float(x_aug[-1])
    if abs(math.sqrt(u.mass_sq()) - rho) > 1e-6 * rho:
        u = project_mass(u, rho)
        lam = lagrange_multiplier(u, vgrid)
    rep = energy(u, vgrid)
    resid, l2, dual = el_residual(u, vgrid, lam)
    sign = sign_classify(u)["classification"]
    in_window = window[0] < rep.total < window[1]
    drift = float(np.linalg.norm(barycenter(u) - beta0))
    drift_bar = 2.0 / prof_rho.sqrt_lam  # a couple of core widths

    if l2 < tol and in_window and lam > 0 and sign == "constant-sign":
        outcome = "accepted"
    elif l2 < tol and not in_window:
        outcome = "rejected-window" if rep.total > window[1] else "rejected-floor"
        if rep.total <= window[0] and drift > drift_bar:
            outcome = "escape-translation"
    elif l2 < tol:
        outcome = "rejected-sign" if sign != "constant-sign" else "rejected-multiplier"
    elif drift > drift_bar:
        # residual stalled at the discretization floor while the bump
        # transported itself: the translation-escape signature
        outcome = "escape-translation"
    elif rep.total <= window[0]:
        outcome = "rejected-floor"
    else:
        outcome = "stagnation"
    history.append(
        {
            "iter": state["it"],
            "energy": rep.total,
            "residual_l2": l2,
            "lambda": lam,
            "beta": barycenter(u).tolist(),
            "polished": polished,
        }
    )
    return SolveReport(
        field=u, lam=lam, energy=rep.total, residual_l2=l2, residual_dual=dual,
        sign_class=sign, in_window=in_window, window=window,
        iterations=state["it"], history=history, outcome=outcome, drift=drift,
    )


# ---------------------------------------------------------------------------
# Escape diagnostics and the sharpness witnesses


def ps_escape_diagnostic(fields: list, residuals=None) -> dict:
    """Label a sequence of fields as compact / translation / dichotomy.

    Uses the half-max super-level sets of the local average mu(u): their
    connected-component count and positions.  Translation: one component
    whose position drifts; dichotomy: >= 2 components with growing
    separation; compact: positions and fields stabilise.
    """
    positions = []
    counts = []
    seps = []
    for u in fields:
        mu = local_average(u)
        labels, k = ndimage.label(mu > 0.5 * mu.max())
        counts.append(k)
        cents = ndimage.center_of_mass(mu, labels, index=range(1, k + 1))
        pts = []
        for c in cents:
            pts.append([ax[int(round(ci))] for ax, ci in zip(u.grid.axes(), np.atleast_1d(c))])
        pts = np.array(pts)
        positions.append(pts)
        if k >= 2:
            d = 0.0
            for a in range(k):
                for b in range(a + 1, k):
                    d = max(d, float(np.linalg.norm(pts[a] - pts[b])))
            seps.append(d)
        else:
            seps.append(0.0)

    label = "compact"
    detail = {}
    if max(counts) >= 2 and seps[-1] > seps[0] + 2.0:
        label = "dichotomy"
        detail["separations"] = seps
    else:
        # single cluster: track its drift
        drift = 0.0
        if len(positions) >= 2 and len(positions[0]) and len(positions[-1]):
            drift = float(np.linalg.norm(positions[-1][0] - positions[0][0]))
        if drift > 2.0:
            label = "translation"
        detail["drift"] = drift
    if residuals is not None:
        detail["residuals"] = list(residuals)
    detail["component_counts"] = counts
    return {"label": label, **detail}


def noncompact_witnesses(params: ModelParams, base: RadialProfile, grid: Grid,
                         y_values) -> dict:
    """The two sharpness sequences evaluated on the grid: the symmetric
    half-mass pair at separation +-y (level -> 2^(-s) m) and the single
    translated soliton (level -> m).

    Deviations are reported against the radial-quadrature levels together
    with a measured error bound (grid + box-truncation error of the same
    bumps at the same placements, plus the residual interaction scale).
    """
    s = compute_exponents(params).s
    profiles = {"base": base}
    prof_rho = _profile_for(profiles, base, params.rho**2 / base.mass_sq)
    prof_half = _profile_for(profiles, base, 0.5 * params.rho**2 / base.mass_sq)
    m = prof_rho.energy
    top = 2.0 ** (-s) * m
    e1 = np.zeros(grid.n_dim)
    e1[0] = 1.0

    pair_fields = []
    pair_levels = []
    for y in y_values:
        ua = field_from_profile(grid, prof_half, -y * e1, params)
        ub = field_from_profile(grid, prof_half, y * e1, params)
        u = GridField(grid=grid, values=ua.values + ub.values, params=params)
        pair_fields.append(u)
        pair_levels.append(energy(u).total)
    single_fields = []
    single_levels = []
    for y in y_values:
        u = field_from_profile(grid, prof_rho, y * e1, params)
        single_fields.append(u)
        single_levels.append(energy(u).total)

    y_max = y_values[-1]
    eta_h = grid_energy_error(grid, prof_rho, params, center=y_max * e1)
    # grid + truncation error of one half-bump at the extreme placement,
    # measured directly against its own quadrature energy
    u_half = field_from_profile(grid, prof_half, y_max * e1, params)
    eta_half = abs(energy(u_half).total - prof_half.energy)
    lam_half = prof_half.lam
    interaction_scale = 1.0 / (
        y_max ** ((grid.n_dim - 1.0) / 2.0)
        * math.exp(2.0 * math.sqrt(lam_half) * y_max)
    )
    pair_bound = 2.0 * eta_half + abs(m) * interaction_scale
    return {
        "m": m,
        "top": top,
        "eta_h": eta_h,
        "pair_levels": pair_levels,
        "pair_label": ps_escape_diagnostic(pair_fields)["label"],
        "pair_error": abs(pair_levels[-1] - top),
        "pair_error_bound": pair_bound,
        "single_levels": single_levels,
        "single_label": ps_escape_diagnostic(single_fields)["label"],
        "single_error": abs(single_levels[-1] - m),
        "single_error_bound": eta_h,
    }


# ---------------------------------------------------------------------------
# One-dimensional suite


def one_dim_whole_line(params: ModelParams, potential: PotentialSpec | None,
                       base: RadialProfile, half_width: float, h: float,
                       r_probe: float, tol: float = 1e-5) -> dict:
    """Whole-line run: rim/interior landmarks over soliton translates and
    the saddle search from a centered seed."""
    grid = make_grid((half_width,), h)
    vgrid = _potential_grid(potential, grid)
    profiles = {"base": base}
    prof_rho = _profile_for(profiles, base, params.rho**2 / base.mass_sq)
    m = prof_rho.energy
    s = compute_exponents(params).s

    ys = np.linspace(-r_probe, r_probe, 41)
    levels = []
    for y in ys:
        u = field_from_profile(grid, prof_rho, (y,), params)
        levels.append(energy(u, vgrid).total)
    levels = np.array(levels)
    a_tilde = float(levels.max())
    l_tilde = float(max(levels[0], levels[-1]))

    # seed at the zero-barycenter configuration of the two-point placement
    # set: the symmetric half-mass pair at -+r_probe
    seed = two_bump_field(grid, params, profiles, 0.5, r_probe,
                          np.array([-1.0]), theta=None)
    report = saddle_search(seed, params, potential,
                           ExteriorDomainSpec(), base, tol=tol)
    return {
        "m": m,
        "top": 2.0 ** (-s) * m,
        "a_tilde": a_tilde,
        "l_tilde": l_tilde,
        "ordering_ok": m < l_tilde < a_tilde < 2.0 ** (-s) * m,
        "report": report,
    }


def half_line_run(params: ModelParams, potential: PotentialSpec | None,
                  base: RadialProfile, length: float, h: float,
                  potential_shift: float = 0.0, seed_at: float | None = None,
                  tol: float = 1e-5) -> dict:
    """Half-line (0, length) with Dirichlet ends; the potential (if any)
    is recentered at potential_shift.  Nonexistence settings show up as a
    rejected report with a translation label."""
    half = length / 2.0
    grid = make_grid((half,), h)
    ax = grid.axes()[0]
    # grid coordinates are shifted so the physical interval (0, L) maps
    # onto (-L/2, L/2); both edges carry the Dirichlet mask already
    shift = -half

    vgrid = None
    if potential is not None and not potential.is_zero:
        x_phys = ax - shift
        vgrid = potential.radial(np.abs(x_phys - potential_shift))

    profiles = {"base": base}
    prof_rho = _profile_for(profiles, base, params.rho**2 / base.mass_sq)
    if seed_at is None:
        seed_at = length / 3.0
    seed = field_from_profile(grid, prof_rho, (seed_at + shift,), params)
    seed = project_mass(seed, params.rho)

    report = saddle_search(seed, params, vgrid, ExteriorDomainSpec(), base, tol=tol)
    return {"report": report, "wall_at": 0.0, "shift": shift}
